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

#ifndef UVSYNC_GEOMETRY_HPP
#define UVSYNC_GEOMETRY_HPP

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uvsync/math.hpp"

namespace uvsync {

/// Triangle with separate position and UV corner indices, so UV seams can
/// split a vertex without duplicating its position.
struct Face {
    std::array<int, 3> position{};
    std::array<int, 3> uv{};

    friend bool operator==(const Face&, const Face&) = default;
};

struct Aabb {
    Vec3 min{};
    Vec3 max{};
    bool empty = true;

    void extend(const Vec3& p);
    Vec3 center() const { return (min + max) * 0.5; }
    double diagonal() const { return empty ? 0.0 : length(max - min); }
};

/// Non-owning view of one keyframe. Valid while the owning MeshSequence lives.
struct MeshFrame {
    std::span<const Vec3> positions;
    std::span<const Vec3> normals;
    std::span<const Face> faces;
    std::span<const Vec2> uvs;

    Aabb bounds() const;
};

/// K keyframes of an animated mesh sharing one face list and UV atlas.
/// Immutable after construction; vertex normals are recomputed per frame.
class MeshSequence {
public:
    /// Validates shared topology, index ranges and UV range; throws
    /// InvalidArgument / TopologyMismatch.
    static MeshSequence create(std::vector<std::vector<Vec3>> frames, std::vector<Face> faces,
                               std::vector<Vec2> uvs);

    int frame_count() const noexcept { return static_cast<int>(positions_.size()); }
    std::size_t vertex_count() const noexcept { return positions_.front().size(); }
    std::size_t face_count() const noexcept { return faces_.size(); }

    MeshFrame frame(int k) const;
    std::span<const Vec3> positions(int k) const { return positions_.at(static_cast<std::size_t>(k)); }
    std::span<const Vec3> normals(int k) const { return normals_.at(static_cast<std::size_t>(k)); }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    const std::vector<Vec2>& uvs() const noexcept { return uvs_; }

    /// Union bounding box over every frame.
    Aabb bounds() const;

    /// Translates every frame so the union AABB is centred at the origin.
    MeshSequence centered() const;

    /// Same topology and UVs with new per-frame positions.
    MeshSequence with_frames(std::vector<std::vector<Vec3>> frames) const;

    /// Frames [first, first + count).
    MeshSequence slice(int first, int count) const;

private:
    MeshSequence() = default;

    std::vector<std::vector<Vec3>> positions_;
    std::vector<std::vector<Vec3>> normals_;
    std::vector<Face> faces_;
    std::vector<Vec2> uvs_;
};

/// Area-weighted vertex normals.
std::vector<Vec3> compute_vertex_normals(std::span<const Vec3> positions, std::span<const Face> faces);

struct Resolution {
    int width = 0;
    int height = 0;

    friend bool operator==(const Resolution&, const Resolution&) = default;
};

struct Camera {
    Vec3 position{0.0, 0.0, 3.0};
    Vec3 look_at{};
    Vec3 up{0.0, 1.0, 0.0};
    double vertical_fov = radians(40.0);
    Resolution resolution{96, 96};

    /// Throws InvalidArgument for a non-positive resolution, fov outside
    /// (0, pi), coincident position/target or up parallel to the view axis.
    void validate() const;
};

/// Orthonormal camera frame with a pinhole projection into a W x H raster.
/// Pixel (x, y) covers [x, x+1) x [y, y+1); row 0 is the top of the image.
class CameraView {
public:
    CameraView(const Camera& camera, Resolution raster);

    struct Projected {
        double x = 0.0;      // raster coordinates, continuous
        double y = 0.0;
        double depth = 0.0;  // distance along the view axis
    };

    Projected project(const Vec3& p) const;
    Vec3 eye() const noexcept { return eye_; }
    Vec3 forward() const noexcept { return forward_; }
    Resolution raster() const noexcept { return raster_; }
    /// World-space size of one pixel at the given depth.
    double pixel_footprint(double depth) const noexcept { return depth * 2.0 * tan_half_ / raster_.height; }

private:
    Vec3 eye_, forward_, right_, up_;
    double tan_half_ = 0.0;
    double aspect_ = 1.0;
    Resolution raster_;
};

struct CameraRig {
    std::vector<Camera> cameras;

    int size() const noexcept { return static_cast<int>(cameras.size()); }
};

struct RigOptions {
    double vertical_fov = radians(40.0);
    Resolution resolution{96, 96};
    double top_azimuth_deg = 30.0;
    double top_elevation_deg = 45.0;
};

/// Camera on a sphere of `radius` around the origin looking at the origin.
/// Azimuth 0 sits on +Z, positive azimuth turns toward +X; elevation lifts
/// toward +Y.
Camera orbit_camera(double radius, double azimuth_deg, double elevation_deg, const RigOptions& options = {});

/// `azimuth_count` cameras at elevation 0 evenly spaced in azimuth starting at
/// 0, followed by an optional elevated view.
CameraRig default_rig(double radius, int azimuth_count, bool top_view, const RigOptions& options = {});

// Procedural test meshes, all single-frame.

/// Latitude/longitude sphere; u follows longitude, v runs 0 at the south pole
/// to 1 at the north pole.
MeshSequence make_uv_sphere(double radius, int segments, int rings);

/// Quad spanning [-half_w, half_w] x [-half_h, half_h] in the XY plane facing
/// +Z, UVs covering the full unit square with (0,0) bottom-left.
MeshSequence make_quad(double half_width, double half_height);

/// Two parallel quads facing +Z: a back plane at z = 0 with UVs in the left
/// half of the atlas and a smaller front plane at z = gap in the right half.
MeshSequence make_two_planes(double back_half, double front_half, double gap);

// OBJ interchange.

struct LoadOptions {
    bool center = true;
};

/// Loads a single OBJ (v / vt / f records); faces are fan-triangulated.
/// Throws UvMissing when a face corner has no texture coordinate.
MeshSequence load_obj(const std::filesystem::path& path);

/// Loads every file in `directory` whose name matches `pattern` (a
/// printf-style pattern with one integer field, e.g. "frame_%04d.obj"),
/// ordered by that integer.
MeshSequence load_mesh_sequence(const std::filesystem::path& directory,
                                const std::string& pattern = "frame_%04d.obj",
                                const LoadOptions& options = {});

void save_obj(const std::filesystem::path& path, const MeshSequence& meshes, int frame);
void save_mesh_sequence(const std::filesystem::path& directory, const MeshSequence& meshes,
                        const std::string& pattern = "frame_%04d.obj");

std::string format_frame_name(const std::string& pattern, int index);

} // namespace uvsync

#endif // UVSYNC_GEOMETRY_HPP
