/*
 * Copyright (C) 2026 The uvsync Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uvsync/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "uvsync/error.hpp"

namespace uvsync {

void Aabb::extend(const Vec3& p) {
    if (empty) {
        min = max = p;
        empty = false;
        return;
    }
    min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
}

Aabb MeshFrame::bounds() const {
    Aabb box;
    for (const auto& p : positions) {
        box.extend(p);
    }
    return box;
}

std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> positions, std::span<const Face> faces) {
    std::vector<Vec3> normals(positions.size());
    for (const auto& f : faces) {
        const Vec3& a = positions[f.position[0]];
        const Vec3& b = positions[f.position[1]];
        const Vec3& c = positions[f.position[2]];
        // The unnormalised cross product carries twice the triangle area.
        const Vec3 n = cross(b - a, c - a);
        for (int i : f.position) {
            normals[i] += n;
        }
    }
    for (auto& n : normals) {
        n = normalize(n);
    }
    return normals;
}

MeshSequence MeshSequence::create(std::vector<std::vector<Vec3>> frames, std::vector<Face> faces,
                                  std::vector<Vec2> uvs) {
    require(!frames.empty(), ErrorCode::InvalidArgument, "mesh sequence needs at least one frame");
    const std::size_t vertex_count = frames.front().size();
    for (std::size_t k = 1; k < frames.size(); ++k) {
        require(frames[k].size() == vertex_count, ErrorCode::TopologyMismatch,
                "frame " + std::to_string(k) + " has " + std::to_string(frames[k].size()) +
                    " vertices, expected " + std::to_string(vertex_count));
    }
    for (const auto& uv : uvs) {
        require(uv.x >= 0.0 && uv.x <= 1.0 && uv.y >= 0.0 && uv.y <= 1.0, ErrorCode::InvalidArgument,
                "uv coordinate outside [0,1]^2");
    }
    for (const auto& f : faces) {
        for (int i = 0; i < 3; ++i) {
            require(f.position[i] >= 0 && static_cast<std::size_t>(f.position[i]) < vertex_count,
                    ErrorCode::InvalidArgument, "face position index out of range");
            require(f.uv[i] >= 0 && static_cast<std::size_t>(f.uv[i]) < uvs.size(), ErrorCode::InvalidArgument,
                    "face uv index out of range");
        }
    }
    for (const auto& frame : frames) {
        for (const auto& p : frame) {
            require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z), ErrorCode::InvalidArgument,
                    "non-finite vertex position");
        }
    }

    MeshSequence seq;
    seq.positions_ = std::move(frames);
    seq.faces_ = std::move(faces);
    seq.uvs_ = std::move(uvs);
    seq.normals_.reserve(seq.positions_.size());
    for (const auto& frame : seq.positions_) {
        seq.normals_.push_back(compute_vertex_normals(frame, seq.faces_));
    }
    return seq;
}

MeshFrame MeshSequence::frame(int k) const {
    require(k >= 0 && k < frame_count(), ErrorCode::InvalidArgument, "frame index out of range");
    return {positions_[k], normals_[k], faces_, uvs_};
}

Aabb MeshSequence::bounds() const {
    Aabb box;
    for (const auto& frame : positions_) {
        for (const auto& p : frame) {
            box.extend(p);
        }
    }
    return box;
}

MeshSequence MeshSequence::centered() const {
    const Aabb box = bounds();
    if (box.empty) {
        return *this;
    }
    const Vec3 c = box.center();
    auto frames = positions_;
    for (auto& frame : frames) {
        for (auto& p : frame) {
            p -= c;
        }
    }
    return with_frames(std::move(frames));
}

MeshSequence MeshSequence::with_frames(std::vector<std::vector<Vec3>> frames) const {
    return create(std::move(frames), faces_, uvs_);
}

MeshSequence MeshSequence::slice(int first, int count) const {
    require(first >= 0 && count >= 1 && first + count <= frame_count(), ErrorCode::InvalidArgument,
            "frame slice out of range");
    return with_frames({positions_.begin() + first, positions_.begin() + first + count});
}

void Camera::validate() const {
    require(resolution.width > 0 && resolution.height > 0, ErrorCode::InvalidArgument,
            "camera resolution must be positive");
    require(vertical_fov > 0.0 && vertical_fov < kPi, ErrorCode::InvalidArgument, "camera fov must be in (0, pi)");
    const Vec3 dir = look_at - position;
    require(length(dir) > 0.0, ErrorCode::InvalidArgument, "camera position coincides with look_at");
    const double s = length(cross(normalize(dir), normalize(up)));
    require(length(up) > 0.0 && s > 1e-9, ErrorCode::InvalidArgument, "camera up is parallel to view direction");
}

CameraView::CameraView(const Camera& camera, Resolution raster) : raster_(raster) {
    camera.validate();
    require(raster.width > 0 && raster.height > 0, ErrorCode::InvalidArgument, "raster resolution must be positive");
    eye_ = camera.position;
    forward_ = normalize(camera.look_at - camera.position);
    right_ = normalize(cross(forward_, camera.up));
    up_ = cross(right_, forward_);
    tan_half_ = std::tan(camera.vertical_fov * 0.5);
    aspect_ = static_cast<double>(raster.width) / raster.height;
}

CameraView::Projected CameraView::project(const Vec3& p) const {
    const Vec3 d = p - eye_;
    Projected out;
    out.depth = dot(d, forward_);
    const double ndc_x = dot(d, right_) / (out.depth * tan_half_ * aspect_);
    const double ndc_y = dot(d, up_) / (out.depth * tan_half_);
    out.x = (ndc_x + 1.0) * 0.5 * raster_.width;
    out.y = (1.0 - ndc_y) * 0.5 * raster_.height;
    return out;
}

Camera orbit_camera(double radius, double azimuth_deg, double elevation_deg, const RigOptions& options) {
    require(radius > 0.0, ErrorCode::InvalidArgument, "camera radius must be positive");
    const double az = radians(azimuth_deg);
    const double el = radians(elevation_deg);
    Camera cam;
    cam.position = {radius * std::sin(az) * std::cos(el), radius * std::sin(el), radius * std::cos(az) * std::cos(el)};
    cam.look_at = {};
    cam.up = {0.0, 1.0, 0.0};
    cam.vertical_fov = options.vertical_fov;
    cam.resolution = options.resolution;
    cam.validate();
    return cam;
}

CameraRig default_rig(double radius, int azimuth_count, bool top_view, const RigOptions& options) {
    require(radius > 0.0, ErrorCode::InvalidArgument, "rig radius must be positive");
    require(azimuth_count >= 1, ErrorCode::InvalidArgument, "rig needs at least one azimuthal view");
    CameraRig rig;
    for (int i = 0; i < azimuth_count; ++i) {
        rig.cameras.push_back(orbit_camera(radius, 360.0 * i / azimuth_count, 0.0, options));
    }
    if (top_view) {
        rig.cameras.push_back(orbit_camera(radius, options.top_azimuth_deg, options.top_elevation_deg, options));
    }
    return rig;
}

MeshSequence make_uv_sphere(double radius, int segments, int rings) {
    require(radius > 0.0 && segments >= 3 && rings >= 2, ErrorCode::InvalidArgument, "bad sphere parameters");
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<Face> faces;

    // Ring i = 0 is the south pole, i = rings the north pole. Pole vertices
    // are shared in position but get one UV per adjacent segment.
    auto pos_index = [&](int i, int j) -> int {
        if (i == 0) return 0;
        if (i == rings) return 1 + (rings - 1) * segments;
        return 1 + (i - 1) * segments + (j % segments);
    };
    positions.push_back({0.0, -radius, 0.0});
    for (int i = 1; i < rings; ++i) {
        const double lat = -kPi / 2 + kPi * i / rings;
        for (int j = 0; j < segments; ++j) {
            const double lon = 2.0 * kPi * j / segments;
            positions.push_back(
                {radius * std::cos(lat) * std::sin(lon), radius * std::sin(lat), radius * std::cos(lat) * std::cos(lon)});
        }
    }
    positions.push_back({0.0, radius, 0.0});

    const int uv_cols = segments + 1;
    for (int i = 0; i <= rings; ++i) {
        for (int j = 0; j <= segments; ++j) {
            uvs.push_back({static_cast<double>(j) / segments, static_cast<double>(i) / rings});
        }
    }
    auto uv_index = [&](int i, int j) { return i * uv_cols + j; };

    for (int i = 0; i < rings; ++i) {
        for (int j = 0; j < segments; ++j) {
            const int a = pos_index(i, j), b = pos_index(i, j + 1);
            const int c = pos_index(i + 1, j + 1), d = pos_index(i + 1, j);
            const int ta = uv_index(i, j), tb = uv_index(i, j + 1);
            const int tc = uv_index(i + 1, j + 1), td = uv_index(i + 1, j);
            // Counter-clockwise seen from outside; the pole bands lose their
            // degenerate half.
            if (i != 0) {
                faces.push_back({{a, b, c}, {ta, tb, tc}});
            }
            if (i != rings - 1) {
                faces.push_back({{a, c, d}, {ta, tc, td}});
            }
        }
    }
    return MeshSequence::create({std::move(positions)}, std::move(faces), std::move(uvs));
}

MeshSequence make_quad(double half_width, double half_height) {
    require(half_width > 0.0 && half_height > 0.0, ErrorCode::InvalidArgument, "quad extent must be positive");
    std::vector<Vec3> positions = {
        {-half_width, -half_height, 0.0}, {half_width, -half_height, 0.0},
        {half_width, half_height, 0.0},   {-half_width, half_height, 0.0}};
    std::vector<Vec2> uvs = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    std::vector<Face> faces = {{{0, 1, 2}, {0, 1, 2}}, {{0, 2, 3}, {0, 2, 3}}};
    return MeshSequence::create({std::move(positions)}, std::move(faces), std::move(uvs));
}

MeshSequence make_two_planes(double back_half, double front_half, double gap) {
    require(back_half > 0.0 && front_half > 0.0 && gap > 0.0, ErrorCode::InvalidArgument,
            "plane parameters must be positive");
    std::vector<Vec3> positions = {
        {-back_half, -back_half, 0.0},   {back_half, -back_half, 0.0},
        {back_half, back_half, 0.0},     {-back_half, back_half, 0.0},
        {-front_half, -front_half, gap}, {front_half, -front_half, gap},
        {front_half, front_half, gap},   {-front_half, front_half, gap}};
    // Back plane in u in [0, 0.5], front plane in u in [0.5, 1]; a small gap
    // between the charts keeps bilinear footprints apart.
    std::vector<Vec2> uvs = {{0.0, 0.0},  {0.48, 0.0},  {0.48, 1.0},  {0.0, 1.0},
                             {0.52, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.52, 1.0}};
    std::vector<Face> faces = {{{0, 1, 2}, {0, 1, 2}}, {{0, 2, 3}, {0, 2, 3}},
                               {{4, 5, 6}, {4, 5, 6}}, {{4, 6, 7}, {4, 6, 7}}};
    return MeshSequence::create({std::move(positions)}, std::move(faces), std::move(uvs));
}

} // namespace uvsync
