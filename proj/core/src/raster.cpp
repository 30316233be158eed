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

#include "uvsync/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uvsync/error.hpp"

namespace uvsync {

namespace {

constexpr double kNearDepth = 1e-6;
constexpr double kInsideEps = 1e-9;
constexpr float kInf = std::numeric_limits<float>::infinity();

struct ScreenTriangle {
    double x[3] = {};
    double y[3] = {};
    double inv_depth[3] = {};
    double area = 0.0;
    bool valid = false;
};

double edge(double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

std::vector<ScreenTriangle> project_triangles(const MeshFrame& frame, const CameraView& view) {
    std::vector<ScreenTriangle> out(frame.faces.size());
    for (std::size_t t = 0; t < frame.faces.size(); ++t) {
        ScreenTriangle& s = out[t];
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            const auto p = view.project(frame.positions[frame.faces[t].position[i]]);
            if (!(p.depth > kNearDepth)) {
                ok = false;
                break;
            }
            s.x[i] = p.x;
            s.y[i] = p.y;
            s.inv_depth[i] = 1.0 / p.depth;
        }
        if (!ok) {
            continue;
        }
        s.area = edge(s.x[0], s.y[0], s.x[1], s.y[1], s.x[2], s.y[2]);
        s.valid = s.area != 0.0;
    }
    return out;
}

/// Screen-space barycentrics of (px, py); extends the triangle's plane
/// outside its edges.
void screen_barycentrics(const ScreenTriangle& s, double px, double py, double l[3]) {
    l[0] = edge(s.x[1], s.y[1], s.x[2], s.y[2], px, py) / s.area;
    l[1] = edge(s.x[2], s.y[2], s.x[0], s.y[0], px, py) / s.area;
    l[2] = edge(s.x[0], s.y[0], s.x[1], s.y[1], px, py) / s.area;
}

bool inside(const double l[3]) { return l[0] >= -kInsideEps && l[1] >= -kInsideEps && l[2] >= -kInsideEps; }

/// Perspective-correct barycentrics from screen-space ones; returns depth.
double perspective_correct(const ScreenTriangle& s, const double l[3], double b[3]) {
    const double w0 = l[0] * s.inv_depth[0];
    const double w1 = l[1] * s.inv_depth[1];
    const double w2 = l[2] * s.inv_depth[2];
    const double sum = w0 + w1 + w2;
    b[0] = w0 / sum;
    b[1] = w1 / sum;
    b[2] = w2 / sum;
    return 1.0 / sum;
}

template <typename T>
T interpolate(const T& a, const T& b, const T& c, const double w[3]) {
    return a * w[0] + b * w[1] + c * w[2];
}

Vec2 interpolate_uv(const MeshFrame& frame, const Face& f, const double w[3]) {
    Vec2 out;
    for (int i = 0; i < 3; ++i) {
        out.x += frame.uvs[f.uv[i]].x * w[i];
        out.y += frame.uvs[f.uv[i]].y * w[i];
    }
    return out;
}

} // namespace

Grid RenderBuffers::depth_grid() const {
    Grid g(1, resolution.height, resolution.width);
    std::copy(depth.begin(), depth.end(), g.values().begin());
    return g;
}

RenderBuffers render_buffers(const MeshFrame& frame, const Camera& camera, Resolution resolution,
                             const RasterOptions& options) {
    require(resolution.width > 0 && resolution.height > 0, ErrorCode::InvalidArgument,
            "render resolution must be positive");
    require(options.supersample >= 1, ErrorCode::InvalidArgument, "supersample must be >= 1");
    const int s = options.supersample;
    const Resolution hi{resolution.width * s, resolution.height * s};
    const CameraView view(camera, hi);
    const auto tris = project_triangles(frame, view);

    // Visibility pass at supersampled resolution.
    std::vector<int32_t> ids(static_cast<std::size_t>(hi.width) * hi.height, -1);
    std::vector<double> zbuf(ids.size(), std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const ScreenTriangle& st = tris[t];
        if (!st.valid) {
            continue;
        }
        const double min_x = std::min({st.x[0], st.x[1], st.x[2]});
        const double max_x = std::max({st.x[0], st.x[1], st.x[2]});
        const double min_y = std::min({st.y[0], st.y[1], st.y[2]});
        const double max_y = std::max({st.y[0], st.y[1], st.y[2]});
        const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
        const int x1 = std::min(hi.width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
        const int y1 = std::min(hi.height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double l[3];
                screen_barycentrics(st, x + 0.5, y + 0.5, l);
                if (!inside(l)) {
                    continue;
                }
                const double z = 1.0 / (l[0] * st.inv_depth[0] + l[1] * st.inv_depth[1] + l[2] * st.inv_depth[2]);
                const std::size_t i = static_cast<std::size_t>(y) * hi.width + x;
                if (z < zbuf[i]) {
                    zbuf[i] = z;
                    ids[i] = static_cast<int32_t>(t);
                }
            }
        }
    }

    RenderBuffers buf;
    buf.resolution = resolution;
    buf.supersample = s;
    const std::size_t n = buf.pixel_count();
    buf.depth.assign(n, kInf);
    buf.cosine.assign(n, 0.0f);
    buf.fg_mask.assign(n, 0.0f);
    buf.texel_map.assign(n, Vec2{});
    buf.center_triangle.assign(n, -1);

    const Vec3 eye = view.eye();
    for (int y = 0; y < resolution.height; ++y) {
        for (int x = 0; x < resolution.width; ++x) {
            int covered = 0;
            int first_sample = -1;
            int32_t candidates[64];
            int candidate_count = 0;
            for (int sy = 0; sy < s; ++sy) {
                for (int sx = 0; sx < s; ++sx) {
                    const std::size_t si = static_cast<std::size_t>(y * s + sy) * hi.width + (x * s + sx);
                    const int32_t id = ids[si];
                    if (id < 0) {
                        continue;
                    }
                    ++covered;
                    if (first_sample < 0) {
                        first_sample = sy * s + sx;
                    }
                    if (candidate_count < 64 &&
                        std::find(candidates, candidates + candidate_count, id) == candidates + candidate_count) {
                        candidates[candidate_count++] = id;
                    }
                }
            }
            if (covered == 0) {
                continue;
            }
            const std::size_t pi = static_cast<std::size_t>(y) * resolution.width + x;

            // Attributes come from the pixel centre when a covering triangle
            // contains it, otherwise from the first covered sample.
            const double cx = (x + 0.5) * s;
            const double cy = (y + 0.5) * s;
            int32_t tri = -1;
            double best_depth = std::numeric_limits<double>::infinity();
            double ax = cx, ay = cy;
            for (int c = 0; c < candidate_count; ++c) {
                double l[3];
                screen_barycentrics(tris[candidates[c]], cx, cy, l);
                if (!inside(l)) {
                    continue;
                }
                double b[3];
                const double z = perspective_correct(tris[candidates[c]], l, b);
                if (z < best_depth) {
                    best_depth = z;
                    tri = candidates[c];
                }
            }
            if (tri >= 0) {
                buf.center_triangle[pi] = tri;
            } else {
                const int sx = first_sample % s;
                const int sy = first_sample / s;
                ax = x * s + sx + 0.5;
                ay = y * s + sy + 0.5;
                tri = ids[static_cast<std::size_t>(y * s + sy) * hi.width + (x * s + sx)];
            }

            const Face& f = frame.faces[tri];
            double l[3], b[3];
            screen_barycentrics(tris[tri], ax, ay, l);
            const double depth = perspective_correct(tris[tri], l, b);
            const Vec3 p = interpolate(frame.positions[f.position[0]], frame.positions[f.position[1]],
                                       frame.positions[f.position[2]], b);
            const Vec3 nrm = normalize(interpolate(frame.normals[f.position[0]], frame.normals[f.position[1]],
                                                   frame.normals[f.position[2]], b));
            const double cosine = std::max(0.0, dot(nrm, normalize(eye - p)));

            buf.fg_mask[pi] = static_cast<float>(covered) / static_cast<float>(s * s);
            buf.depth[pi] = static_cast<float>(depth);
            buf.cosine[pi] = static_cast<float>(std::min(cosine, 1.0));
            buf.texel_map[pi] = interpolate_uv(frame, f, b);
        }
    }
    buf.sample_triangle = std::move(ids);
    return buf;
}

void sample_bilinear(const Grid& texture, const Vec2& uv, std::span<float> out) {
    const int w = texture.width();
    const int h = texture.height();
    const double fx = std::clamp(uv.x * w - 0.5, 0.0, static_cast<double>(w - 1));
    const double fy = std::clamp((1.0 - uv.y) * h - 0.5, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    for (int c = 0; c < texture.channels(); ++c) {
        const double top = texture.at(c, y0, x0) * (1.0 - tx) + texture.at(c, y0, x1) * tx;
        const double bottom = texture.at(c, y1, x0) * (1.0 - tx) + texture.at(c, y1, x1) * tx;
        out[c] = static_cast<float>(top * (1.0 - ty) + bottom * ty);
    }
}

Grid render_texture(const Grid& texture, const RenderBuffers& buffers) {
    require(texture.channels() >= 1 && texture.width() >= 1 && texture.height() >= 1, ErrorCode::InvalidArgument,
            "texture must be non-empty");
    const int w = buffers.resolution.width;
    const int h = buffers.resolution.height;
    Grid out(texture.channels(), h, w);
    std::vector<float> texel(texture.channels());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t pi = static_cast<std::size_t>(y) * w + x;
            if (buffers.fg_mask[pi] <= 0.0f) {
                continue;
            }
            sample_bilinear(texture, buffers.texel_map[pi], texel);
            for (int c = 0; c < texture.channels(); ++c) {
                out.at(c, y, x) = texel[c];
            }
        }
    }
    return out;
}

std::size_t UvLayout::covered_count() const {
    return static_cast<std::size_t>(
        std::count_if(texels.begin(), texels.end(), [](const Texel& t) { return t.triangle >= 0; }));
}

UvLayout rasterize_uv_layout(const MeshFrame& frame, int resolution) {
    require(resolution >= 1, ErrorCode::InvalidArgument, "uv resolution must be >= 1");
    UvLayout layout;
    layout.resolution = resolution;
    layout.texels.assign(static_cast<std::size_t>(resolution) * resolution, {});
    const double r = resolution;
    for (std::size_t t = 0; t < frame.faces.size(); ++t) {
        const Face& f = frame.faces[t];
        double x[3], y[3];
        for (int i = 0; i < 3; ++i) {
            x[i] = frame.uvs[f.uv[i]].x * r;
            y[i] = (1.0 - frame.uvs[f.uv[i]].y) * r;
        }
        const double area = edge(x[0], y[0], x[1], y[1], x[2], y[2]);
        if (area == 0.0) {
            continue;
        }
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min({x[0], x[1], x[2]}) - 0.5)));
        const int c1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({x[0], x[1], x[2]}) - 0.5)));
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min({y[0], y[1], y[2]}) - 0.5)));
        const int r1 = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({y[0], y[1], y[2]}) - 0.5)));
        for (int row = r0; row <= r1; ++row) {
            for (int col = c0; col <= c1; ++col) {
                UvLayout::Texel& texel = layout.texels[static_cast<std::size_t>(row) * resolution + col];
                if (texel.triangle >= 0) {
                    continue;
                }
                const double px = col + 0.5, py = row + 0.5;
                const double l0 = edge(x[1], y[1], x[2], y[2], px, py) / area;
                const double l1 = edge(x[2], y[2], x[0], y[0], px, py) / area;
                const double l2 = edge(x[0], y[0], x[1], y[1], px, py) / area;
                if (l0 < -kInsideEps || l1 < -kInsideEps || l2 < -kInsideEps) {
                    continue;
                }
                texel = {static_cast<int32_t>(t), l1, l2};
            }
        }
    }
    return layout;
}

UnprojectPlan plan_unproject(const MeshFrame& frame, const Camera& camera, const RenderBuffers& buffers,
                             const UvLayout& layout, const UnprojectOptions& options) {
    require(layout.resolution >= 1, ErrorCode::InvalidArgument, "uv resolution must be >= 1");
    require(options.depth_tolerance >= 0.0, ErrorCode::InvalidArgument, "depth tolerance must be >= 0");
    const int s = buffers.supersample;
    const Resolution res = buffers.resolution;
    const Resolution hi{res.width * s, res.height * s};
    const CameraView view(camera, res);
    const CameraView hi_view(camera, hi);
    const auto hi_tris = project_triangles(frame, hi_view);
    const double extent = options.scene_extent > 0.0 ? options.scene_extent : frame.bounds().diagonal();
    const double tol = options.depth_tolerance * extent;
    const Vec3 eye = view.eye();

    UnprojectPlan plan;
    plan.raster = res;
    plan.uv_resolution = layout.resolution;

    for (std::size_t ti = 0; ti < layout.texels.size(); ++ti) {
        const UvLayout::Texel& texel = layout.texels[ti];
        if (texel.triangle < 0) {
            continue;
        }
        const Face& f = frame.faces[texel.triangle];
        const double b[3] = {1.0 - texel.b1 - texel.b2, texel.b1, texel.b2};
        const Vec3 p = interpolate(frame.positions[f.position[0]], frame.positions[f.position[1]],
                                   frame.positions[f.position[2]], b);
        const Vec3 nrm = normalize(interpolate(frame.normals[f.position[0]], frame.normals[f.position[1]],
                                               frame.normals[f.position[2]], b));
        const double cosine = dot(nrm, normalize(eye - p));
        if (!(cosine > 0.0)) {
            continue;
        }
        const auto proj = view.project(p);
        if (!(proj.depth > kNearDepth) || proj.x < 0.0 || proj.y < 0.0 || proj.x >= res.width ||
            proj.y >= res.height) {
            continue;
        }

        // Shadow-map test: any triangle seen in the neighbouring visibility
        // samples that contains the projected point and lies in front of it
        // by more than the bias occludes the texel.
        const double hx = proj.x * s;
        const double hy = proj.y * s;
        const int ix = static_cast<int>(hx);
        const int iy = static_cast<int>(hy);
        int32_t seen[9];
        int seen_count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int sx = ix + dx, sy = iy + dy;
                if (sx < 0 || sy < 0 || sx >= hi.width || sy >= hi.height) {
                    continue;
                }
                const int32_t id = buffers.sample_triangle[static_cast<std::size_t>(sy) * hi.width + sx];
                if (id >= 0 && std::find(seen, seen + seen_count, id) == seen + seen_count) {
                    seen[seen_count++] = id;
                }
            }
        }
        if (seen_count == 0) {
            continue;
        }
        bool occluded = false;
        for (int i = 0; i < seen_count && !occluded; ++i) {
            const ScreenTriangle& st = hi_tris[seen[i]];
            if (!st.valid) {
                continue;
            }
            double l[3], bb[3];
            screen_barycentrics(st, hx, hy, l);
            if (!inside(l)) {
                continue;
            }
            occluded = perspective_correct(st, l, bb) < proj.depth - tol;
        }
        if (occluded) {
            continue;
        }

        // Bilinear taps restricted to pixels whose centre lies on this
        // surface: background and occluder pixels are dropped and the rest
        // renormalised.
        const double tan_theta = std::sqrt(std::max(0.0, 1.0 - cosine * cosine)) / std::max(cosine, 0.05);
        const double tap_tol = tol + 2.0 * view.pixel_footprint(proj.depth) * tan_theta;
        const double fx = proj.x - 0.5;
        const double fy = proj.y - 0.5;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double tx = fx - x0;
        const double ty = fy - y0;
        const double bw[4] = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};
        const int px[4] = {x0, x0 + 1, x0, x0 + 1};
        const int py[4] = {y0, y0, y0 + 1, y0 + 1};

        UnprojectPlan::Entry entry;
        entry.texel = static_cast<uint32_t>(ti);
        entry.cosine = static_cast<float>(std::min(cosine, 1.0));
        double total = 0.0;
        for (int k = 0; k < 4; ++k) {
            if (bw[k] <= 0.0 || px[k] < 0 || py[k] < 0 || px[k] >= res.width || py[k] >= res.height) {
                continue;
            }
            const std::size_t pi = static_cast<std::size_t>(py[k]) * res.width + px[k];
            if (buffers.center_triangle[pi] < 0 || std::abs(buffers.depth[pi] - proj.depth) > tap_tol) {
                continue;
            }
            entry.taps[entry.tap_count] = static_cast<uint32_t>(pi);
            entry.weights[entry.tap_count] = bw[k];
            ++entry.tap_count;
            total += bw[k];
        }
        if (total <= 1e-6) {
            continue;
        }
        for (int k = 0; k < entry.tap_count; ++k) {
            entry.weights[k] /= total;
        }
        plan.entries.push_back(entry);
    }
    return plan;
}

PartialTexture unproject(const Grid& grid, const UnprojectPlan& plan) {
    if (grid.width() != plan.raster.width || grid.height() != plan.raster.height) {
        fail(ErrorCode::ShapeMismatch, "unproject: grid " + grid.shape_string() + " vs visibility pass " +
                                           std::to_string(plan.raster.height) + "x" +
                                           std::to_string(plan.raster.width));
    }
    const int r = plan.uv_resolution;
    PartialTexture out{Grid(grid.channels(), r, r), std::vector<float>(static_cast<std::size_t>(r) * r, 0.0f)};
    const std::size_t plane = grid.plane_size();
    const std::size_t uv_plane = out.values.plane_size();
    for (const auto& e : plan.entries) {
        for (int c = 0; c < grid.channels(); ++c) {
            double acc = 0.0;
            for (int k = 0; k < e.tap_count; ++k) {
                acc += e.weights[k] * grid[c * plane + e.taps[k]];
            }
            out.values[c * uv_plane + e.texel] = static_cast<float>(acc);
        }
        out.weight[e.texel] = e.cosine;
    }
    return out;
}

PartialTexture unproject(const Grid& grid, const MeshFrame& frame, const Camera& camera, int uv_resolution,
                         const UnprojectOptions& options, const RasterOptions& raster) {
    require(uv_resolution >= 1, ErrorCode::InvalidArgument, "uv resolution must be >= 1");
    const RenderBuffers buffers = render_buffers(frame, camera, {grid.width(), grid.height()}, raster);
    const UvLayout layout = rasterize_uv_layout(frame, uv_resolution);
    return unproject(grid, plan_unproject(frame, camera, buffers, layout, options));
}

} // namespace uvsync
