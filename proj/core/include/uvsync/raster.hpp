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

#ifndef UVSYNC_RASTER_HPP
#define UVSYNC_RASTER_HPP

#include <cstdint>
#include <vector>

#include "uvsync/geometry.hpp"
#include "uvsync/grid.hpp"

namespace uvsync {

// Texture convention shared by everything that touches UV space: texel
// (row, col) of an R x R texture has its centre at u = (col + 0.5) / R,
// v = 1 - (row + 0.5) / R, so row 0 is the top of the atlas image and the
// UV origin is bottom-left.

struct RasterOptions {
    /// Visibility samples per pixel along each axis.
    int supersample = 2;
};

/// Per-view screen buffers at latent resolution plus the supersampled
/// visibility pass used by unprojection.
struct RenderBuffers {
    Resolution resolution;
    int supersample = 1;

    std::vector<float> depth;       // view-axis distance, +inf on background
    std::vector<float> cosine;      // max(0, n . v), 0 on background
    std::vector<float> fg_mask;     // fraction of covered visibility samples
    std::vector<Vec2> texel_map;    // perspective-correct UV of covered pixels
    std::vector<int32_t> center_triangle;  // triangle under the pixel centre, -1 if none
    std::vector<int32_t> sample_triangle;  // supersampled visibility ids, -1 on background

    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(resolution.width) * resolution.height;
    }
    /// 1 x H x W copy of `depth`, the geometric condition sent to denoisers.
    Grid depth_grid() const;
};

/// Z-buffered rasterization of one mesh frame. Triangles are drawn in index
/// order with a strict depth test, so ties resolve to the lower index and the
/// output is bit-reproducible. Triangles with a vertex behind the camera are
/// skipped rather than clipped.
RenderBuffers render_buffers(const MeshFrame& frame, const Camera& camera, Resolution resolution,
                             const RasterOptions& options = {});

/// Bilinear clamp-to-edge lookup of a C x H x W texture at (u, v).
void sample_bilinear(const Grid& texture, const Vec2& uv, std::span<float> out);

/// Forward operator: samples `texture` (C x R x R) at every covered pixel.
/// Background pixels are zero.
Grid render_texture(const Grid& texture, const RenderBuffers& buffers);

/// Which triangle covers each texel centre and where. Depends only on the UV
/// atlas, so one layout serves every frame of a sequence.
struct UvLayout {
    struct Texel {
        int32_t triangle = -1;
        double b1 = 0.0;
        double b2 = 0.0;
    };

    int resolution = 0;
    std::vector<Texel> texels;

    std::size_t covered_count() const;
};

UvLayout rasterize_uv_layout(const MeshFrame& frame, int resolution);

/// Precomputed inverse-rendering taps for one (view, frame): for each visible
/// texel, the cosine toward the camera and up to four depth-consistent
/// bilinear taps into the view grid.
struct UnprojectPlan {
    struct Entry {
        uint32_t texel = 0;
        float cosine = 0.0f;
        uint8_t tap_count = 0;
        uint32_t taps[4] = {};
        double weights[4] = {};
    };

    Resolution raster;
    int uv_resolution = 0;
    std::vector<Entry> entries;
};

struct UnprojectOptions {
    /// Depth-test bias as a fraction of `scene_extent`.
    double depth_tolerance = 1e-3;
    /// Scene size used to scale the bias; <= 0 means the frame's AABB diagonal.
    double scene_extent = 0.0;
};

/// Texture-space rasterization followed by a shadow-map style depth test
/// against `buffers`. Occluded, back-facing and out-of-frustum texels are
/// omitted.
UnprojectPlan plan_unproject(const MeshFrame& frame, const Camera& camera, const RenderBuffers& buffers,
                             const UvLayout& layout, const UnprojectOptions& options = {});

/// Output of one view's inverse rendering into UV space.
struct PartialTexture {
    Grid values;                // C x R x R
    std::vector<float> weight;  // raw cosine per texel, 0 where not seen

    int resolution() const noexcept { return values.height(); }
};

PartialTexture unproject(const Grid& grid, const UnprojectPlan& plan);

/// Convenience path that builds buffers, layout and plan on the fly.
PartialTexture unproject(const Grid& grid, const MeshFrame& frame, const Camera& camera, int uv_resolution,
                         const UnprojectOptions& options = {}, const RasterOptions& raster = {});

} // namespace uvsync

#endif // UVSYNC_RASTER_HPP
