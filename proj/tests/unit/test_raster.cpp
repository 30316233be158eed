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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "test_util.hpp"
#include "uvsync/error.hpp"
#include "uvsync/pipeline.hpp"
#include "uvsync/raster.hpp"

using namespace uvsync;
using testing::framing_camera;
using testing::texel_position;

namespace {

MeshSequence rotated_quad_y(double degrees) {
    const MeshSequence quad = make_quad(1.0, 1.0);
    const double a = radians(degrees);
    std::vector<Vec3> p;
    for (const Vec3& v : quad.positions(0)) {
        p.push_back({v.x * std::cos(a) + v.z * std::sin(a), v.y, -v.x * std::sin(a) + v.z * std::cos(a)});
    }
    return quad.with_frames({p});
}

Grid checker(int res, int cells) {
    Grid g(1, res, res);
    for (int y = 0; y < res; ++y) {
        for (int x = 0; x < res; ++x) {
            g.at(0, y, x) = ((x * cells / res + y * cells / res) % 2) ? 1.0f : 0.0f;
        }
    }
    return g;
}

// Smooth field in 3D, evaluated through the UV layout.
Grid smooth_texture(const MeshSequence& mesh, int res) {
    return make_targets("smooth", mesh, res, 3).front();
}

} // namespace

TEST_CASE("head-on quad has unit cosine") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    Camera cam;
    cam.position = {0.0, 0.0, 1000.0};
    cam.vertical_fov = radians(0.2);
    const RenderBuffers b = render_buffers(quad.frame(0), cam, {64, 64});
    int covered = 0;
    for (std::size_t i = 0; i < b.pixel_count(); ++i) {
        if (b.fg_mask[i] > 0.0f) {
            ++covered;
            CHECK(b.cosine[i] == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(b.depth[i] == doctest::Approx(1000.0));
        }
    }
    CHECK(covered > 1000);
}

TEST_CASE("quad tilted by 60 degrees has cosine one half") {
    const MeshSequence quad = rotated_quad_y(60.0);
    Camera cam;
    cam.position = {0.0, 0.0, 1000.0};
    cam.vertical_fov = radians(0.2);
    const RenderBuffers b = render_buffers(quad.frame(0), cam, {64, 64});
    int covered = 0;
    for (std::size_t i = 0; i < b.pixel_count(); ++i) {
        if (b.center_triangle[i] >= 0) {
            ++covered;
            CHECK(std::abs(b.cosine[i] - 0.5) < 1e-3);
        }
    }
    CHECK(covered > 100);
}

TEST_CASE("mesh without faces renders as background") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    const MeshSequence empty =
        MeshSequence::create({{quad.positions(0).begin(), quad.positions(0).end()}}, {}, quad.uvs());
    const RenderBuffers b = render_buffers(empty.frame(0), Camera{}, {32, 32});
    for (std::size_t i = 0; i < b.pixel_count(); ++i) {
        CHECK(b.fg_mask[i] == 0.0f);
        CHECK(std::isinf(b.depth[i]));
    }
}

TEST_CASE("buffer invariants on a sphere") {
    const MeshSequence sphere = make_uv_sphere(1.0, 48, 24);
    const RenderBuffers b = render_buffers(sphere.frame(0), orbit_camera(2.5, 30.0, 20.0), {96, 96});
    for (std::size_t i = 0; i < b.pixel_count(); ++i) {
        CHECK(b.fg_mask[i] >= 0.0f);
        CHECK(b.fg_mask[i] <= 1.0f);
        CHECK(b.cosine[i] >= 0.0f);
        if (std::isinf(b.depth[i])) {
            CHECK(b.fg_mask[i] == 0.0f);
        }
        if (b.fg_mask[i] == 0.0f) {
            CHECK(b.cosine[i] == 0.0f);
        }
    }
    const Grid d = b.depth_grid();
    CHECK(d.channels() == 1);
    CHECK(d.height() == 96);
}

TEST_CASE("rasterization is bit-reproducible") {
    const MeshSequence two = make_two_planes(1.0, 0.4, 0.3);
    const Camera cam = orbit_camera(3.0, 10.0, 5.0);
    const RenderBuffers a = render_buffers(two.frame(0), cam, {80, 80});
    const RenderBuffers b = render_buffers(two.frame(0), cam, {80, 80});
    CHECK(a.depth == b.depth);
    CHECK(a.sample_triangle == b.sample_triangle);
}

TEST_CASE("constant texture renders as the constant") {
    const MeshSequence sphere = make_uv_sphere(1.0, 32, 16);
    const RenderBuffers b = render_buffers(sphere.frame(0), Camera{}, {64, 64});
    const Grid img = render_texture(Grid(3, 128, 128, 0.7f), b);
    for (std::size_t i = 0; i < b.pixel_count(); ++i) {
        const float expect = b.center_triangle[i] >= 0 || b.fg_mask[i] > 0.0f ? 0.7f : 0.0f;
        if (b.fg_mask[i] > 0.0f) {
            CHECK(img[i] == expect);
            CHECK(img[2 * b.pixel_count() + i] == expect);
        } else {
            CHECK(img[i] == 0.0f);
        }
    }
}

TEST_CASE("checkerboard on a framing quad follows the projective map") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    SUBCASE("pixel centres on texel centres: exact") {
        const Camera cam = framing_camera(1.0, 4.0, 64);
        const Grid tex = checker(64, 8);
        const Grid img = render_texture(tex, render_buffers(quad.frame(0), cam, {64, 64}));
        CHECK(testing::max_abs_diff(img, tex) < 1e-4);
    }
    SUBCASE("half resolution: analytic away from cell edges") {
        const Camera cam = framing_camera(1.0, 4.0, 32);
        const Grid tex = checker(64, 8);
        const Grid img = render_texture(tex, render_buffers(quad.frame(0), cam, {32, 32}));
        int checked = 0;
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                const double u = (x + 0.5) / 32.0, v = 1.0 - (y + 0.5) / 32.0;
                const double fu = u * 8.0 - std::floor(u * 8.0), fv = v * 8.0 - std::floor(v * 8.0);
                if (std::min({fu, 1.0 - fu, fv, 1.0 - fv}) < 0.2) {
                    continue;
                }
                const int cell = (static_cast<int>(u * 8) + (7 - static_cast<int>(v * 8))) % 2;
                CHECK(img.at(0, y, x) == doctest::Approx(cell ? 1.0 : 0.0).epsilon(1e-5));
                ++checked;
            }
        }
        CHECK(checked > 200);
    }
}

TEST_CASE("full-frame quad unprojects a constant grid with unit weight") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    Camera cam = framing_camera(1.0, 1000.0, 32);
    const PartialTexture p = unproject(Grid(2, 32, 32, 1.0f), quad.frame(0), cam, 32);
    for (std::size_t texel = 0; texel < p.weight.size(); ++texel) {
        REQUIRE(p.weight[texel] > 0.0f);
        CHECK(p.weight[texel] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(p.values[texel] == doctest::Approx(1.0f));
        CHECK(p.values[1024 + texel] == doctest::Approx(1.0f));
    }
}

TEST_CASE("far hemisphere gets no weight from a single view") {
    const MeshSequence sphere = make_uv_sphere(1.0, 48, 24);
    const Camera cam;  // on +Z
    const int res = 128;
    const UvLayout layout = rasterize_uv_layout(sphere.frame(0), res);
    const RenderBuffers b = render_buffers(sphere.frame(0), cam, {96, 96});
    const UnprojectPlan plan = plan_unproject(sphere.frame(0), cam, b, layout);
    const PartialTexture p = unproject(Grid(1, 96, 96, 1.0f), plan);
    int far = 0, near_seen = 0;
    for (std::size_t texel = 0; texel < p.weight.size(); ++texel) {
        if (layout.texels[texel].triangle < 0) {
            continue;
        }
        const Vec3 q = texel_position(sphere.frame(0), layout, texel);
        if (q.z < 0.0) {
            ++far;
            CHECK(p.weight[texel] == 0.0f);
        } else if (q.z > 0.8) {
            near_seen += p.weight[texel] > 0.0f;
        }
    }
    CHECK(far > 1000);
    CHECK(near_seen > 100);
}

TEST_CASE("render then unproject recovers a smooth texture") {
    const MeshSequence sphere = make_uv_sphere(1.0, 96, 48);
    const Grid tex = smooth_texture(sphere, 512);
    Camera cam;
    cam.resolution = {256, 256};
    const RenderBuffers b = render_buffers(sphere.frame(0), cam, cam.resolution);
    const UvLayout layout = rasterize_uv_layout(sphere.frame(0), 512);
    const UnprojectPlan plan = plan_unproject(sphere.frame(0), cam, b, layout);
    const PartialTexture p = unproject(render_texture(tex, b), plan);
    std::vector<double> err;
    for (std::size_t texel = 0; texel < p.weight.size(); ++texel) {
        if (p.weight[texel] > 0.0f) {
            for (int c = 0; c < 3; ++c) {
                err.push_back(p.values[c * p.weight.size() + texel] - tex[c * p.weight.size() + texel]);
            }
        }
    }
    MESSAGE("round-trip RMS " << testing::rms(err) << " over " << err.size() / 3 << " texels");
    CHECK(testing::rms(err) < 0.01);

    SUBCASE("render(unproject(render)) PSNR above 35 dB") {
        const Grid first = render_texture(tex, b);
        const Grid second = render_texture(p.values, b);
        double se = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < b.pixel_count(); ++i) {
            if (b.fg_mask[i] < 1.0f) {
                continue;
            }
            for (int c = 0; c < 3; ++c) {
                const double d = first[c * b.pixel_count() + i] - second[c * b.pixel_count() + i];
                se += d * d;
                ++n;
            }
        }
        const double psnr = 10.0 * std::log10(1.0 / (se / n));
        MESSAGE("PSNR " << psnr << " dB");
        CHECK(psnr > 35.0);
    }
}

TEST_CASE("occluded texels of the back plane get no weight") {
    const double back = 1.0, front = 0.4, gap = 0.5;
    const MeshSequence planes = make_two_planes(back, front, gap);
    const Camera cam = orbit_camera(3.0, 15.0, 10.0, {radians(40.0), {128, 128}});
    const int res = 256;
    const UvLayout layout = rasterize_uv_layout(planes.frame(0), res);
    const RenderBuffers b = render_buffers(planes.frame(0), cam, cam.resolution);
    const PartialTexture p = unproject(Grid(1, 128, 128, 1.0f), plan_unproject(planes.frame(0), cam, b, layout));
    const CameraView view(cam, cam.resolution);
    int occluded = 0, visible = 0;
    for (std::size_t texel = 0; texel < p.weight.size(); ++texel) {
        if (layout.texels[texel].triangle < 0) {
            continue;
        }
        const Vec3 q = texel_position(planes.frame(0), layout, texel);
        if (q.z != 0.0) {
            continue;
        }
        // Where the ray toward the camera crosses the front plane.
        const double s = gap / cam.position.z;
        const Vec3 hit = q + (cam.position - q) * s;
        const double inside = front - std::max(std::abs(hit.x), std::abs(hit.y));
        const auto px = view.project(q);
        const bool in_frame = px.x > 2.0 && px.y > 2.0 && px.x < 126.0 && px.y < 126.0;
        if (inside > 0.02) {
            ++occluded;
            CHECK(p.weight[texel] == 0.0f);
        } else if (inside < -0.02 && in_frame && std::max(std::abs(q.x), std::abs(q.y)) < back - 0.02) {
            ++visible;
            CHECK(p.weight[texel] > 0.0f);
        }
    }
    CHECK(occluded > 500);
    CHECK(visible > 5000);
}

TEST_CASE("unproject checks the grid against the plan") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    const Camera cam = framing_camera(1.0, 4.0, 32);
    const RenderBuffers b = render_buffers(quad.frame(0), cam, {32, 32});
    const UnprojectPlan plan = plan_unproject(quad.frame(0), cam, b, rasterize_uv_layout(quad.frame(0), 16));
    try {
        unproject(Grid(1, 16, 16), plan);
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("UV layout of a full quad covers every texel") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    const UvLayout layout = rasterize_uv_layout(quad.frame(0), 40);
    CHECK(layout.covered_count() == 1600);
    // Texel (row 0, col 0) sits at the top-left of the atlas: u small, v near 1.
    const Vec3 p = texel_position(quad.frame(0), layout, 0);
    CHECK(p.x == doctest::Approx(-1.0 + 1.0 / 40.0));
    CHECK(p.y == doctest::Approx(1.0 - 1.0 / 40.0));
}

TEST_CASE("bilinear sampling clamps at the edges") {
    Grid t(1, 2, 2);
    t.at(0, 0, 0) = 0.0f;
    t.at(0, 0, 1) = 1.0f;
    t.at(0, 1, 0) = 2.0f;
    t.at(0, 1, 1) = 3.0f;
    float out = 0.0f;
    sample_bilinear(t, {0.5, 0.5}, {&out, 1});
    CHECK(out == doctest::Approx(1.5f));
    sample_bilinear(t, {0.0, 1.0}, {&out, 1});
    CHECK(out == doctest::Approx(0.0f));
    sample_bilinear(t, {1.0, 0.0}, {&out, 1});
    CHECK(out == doctest::Approx(3.0f));
}
