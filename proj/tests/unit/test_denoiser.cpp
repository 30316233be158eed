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
#include "uvsync/denoiser.hpp"
#include "uvsync/error.hpp"
#include "uvsync/pipeline.hpp"

using namespace uvsync;

namespace {

struct Scene {
    MeshSequence mesh = make_uv_sphere(1.0, 32, 16);
    CameraRig rig = default_rig(2.5, 2, false, {radians(40.0), {32, 32}});
    Resolution res{32, 32};
};

DenoiseRequest request_for(const Scene& s, int view, bool background = false) {
    DenoiseRequest req;
    req.view_id = view;
    req.timestep = 3;
    req.background = background;
    for (int k = 0; k < s.mesh.frame_count(); ++k) {
        req.latents.emplace_back(3, s.res.height, s.res.width, 0.25f);
        req.depths.push_back(render_buffers(s.mesh.frame(k), s.rig.cameras[view], s.res).depth_grid());
    }
    return req;
}

// Returns whatever it was configured to, to probe checked_denoise.
class Scripted final : public Denoiser {
public:
    explicit Scripted(DenoiseResponse r, PredictionKind declared = PredictionKind::X0)
        : response_(std::move(r)), declared_(declared) {}
    DenoiserInfo info() const override { return {declared_, true, "scripted"}; }
    DenoiseResponse denoise(const DenoiseRequest&) override { return response_; }

private:
    DenoiseResponse response_;
    PredictionKind declared_;
};

} // namespace

TEST_CASE("oracle returns exact target renders") {
    const Scene s;
    const auto targets = make_targets("checker:4", s.mesh, 64, 3);
    OracleDenoiser oracle(targets, s.mesh, s.rig, s.res);
    CHECK(oracle.info().kind == PredictionKind::X0);
    CHECK(oracle.info().concurrent);
    for (int v = 0; v < 2; ++v) {
        const DenoiseResponse r = checked_denoise(oracle, request_for(s, v));
        REQUIRE(r.frames.size() == 1);
        const Grid expect = render_texture(targets[0], render_buffers(s.mesh.frame(0), s.rig.cameras[v], s.res));
        CHECK(r.frames[0] == expect);
    }
    const DenoiseResponse bg = oracle.denoise(request_for(s, 0, true));
    CHECK(bg.frames[0] == Grid(3, 32, 32));
}

TEST_CASE("constant oracle target gives the constant on covered pixels") {
    const Scene s;
    OracleDenoiser oracle(make_targets("constant:0.5", s.mesh, 32, 3), s.mesh, s.rig, s.res);
    const DenoiseRequest req = request_for(s, 1);
    const DenoiseResponse r = oracle.denoise(req);
    const RenderBuffers b = render_buffers(s.mesh.frame(0), s.rig.cameras[1], s.res);
    for (std::size_t p = 0; p < b.pixel_count(); ++p) {
        if (b.fg_mask[p] > 0.0f) {
            CHECK(r.frames[0][p] == 0.5f);
        }
    }
}

TEST_CASE("oracle rejects bad requests") {
    const Scene s;
    OracleDenoiser oracle(make_targets("constant:0.5", s.mesh, 32, 3), s.mesh, s.rig, s.res);
    DenoiseRequest req = request_for(s, 0);
    req.view_id = 7;
    CHECK_THROWS_AS(oracle.denoise(req), Error);
    req = request_for(s, 0);
    req.depths.clear();
    CHECK_THROWS_AS(oracle.denoise(req), Error);
    CHECK_THROWS_AS(OracleDenoiser({}, s.mesh, s.rig, s.res), Error);
}

TEST_CASE("noisy oracle") {
    const Scene s;
    auto oracle = std::make_shared<OracleDenoiser>(make_targets("constant:0.5", s.mesh, 32, 3), s.mesh, s.rig, s.res);
    const DenoiseRequest req = request_for(s, 0);
    SUBCASE("sigma 0 is the oracle bitwise") {
        NoisyDenoiser noisy(oracle, 0.0, 9);
        CHECK(noisy.denoise(req).frames[0] == oracle->denoise(req).frames[0]);
    }
    SUBCASE("sigma 0.1 has the requested spread") {
        Scene big;
        big.res = {100, 100};
        big.rig = default_rig(2.5, 1, false, {radians(40.0), big.res});
        auto o = std::make_shared<OracleDenoiser>(make_targets("constant:0.5", big.mesh, 32, 1), big.mesh, big.rig,
                                                  big.res);
        NoisyDenoiser noisy(o, 0.1, 9);
        DenoiseRequest r = request_for(big, 0);
        for (auto& l : r.latents) l = Grid(1, 100, 100);
        const Grid clean = o->denoise(r).frames[0];
        const Grid got = noisy.denoise(r).frames[0];
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            const double d = got[i] - clean[i];
            s1 += d;
            s2 += d * d;
        }
        const double n = static_cast<double>(got.size());
        const double sd = std::sqrt(s2 / n - (s1 / n) * (s1 / n));
        CHECK(std::abs(sd - 0.1) < 3.0 * 0.1 / std::sqrt(2.0 * n));
    }
    SUBCASE("fixed seed is reproducible, different seeds differ") {
        NoisyDenoiser a(oracle, 0.1, 9), b(oracle, 0.1, 9), c(oracle, 0.1, 10);
        CHECK(a.denoise(req).frames[0] == b.denoise(req).frames[0]);
        CHECK_FALSE(a.denoise(req).frames[0] == c.denoise(req).frames[0]);
    }
    CHECK_THROWS_AS(NoisyDenoiser(nullptr, 0.1, 1), Error);
    CHECK_THROWS_AS(NoisyDenoiser(oracle, -1.0, 1), Error);
}

TEST_CASE("toy denoiser formula") {
    Grid z(2, 1, 2);
    z[0] = 0.5f;
    z[1] = -1.0f;
    z[2] = 2.0f;
    z[3] = 0.0f;
    Grid d(1, 1, 2);
    d[0] = 1.0f;
    d[1] = std::numeric_limits<float>::infinity();
    const Grid p = ToyDenoiser::predict(z, d, 0.5);
    CHECK(p[0] == doctest::Approx(0.5 * std::tanh(0.5) + 0.05));
    CHECK(p[1] == doctest::Approx(0.5 * std::tanh(-1.0)));
    CHECK(p[2] == doctest::Approx(0.5 * std::tanh(2.0) + 0.1));
    CHECK(p[3] == 0.0f);
}

TEST_CASE("response contract is enforced") {
    const Scene s;
    const DenoiseRequest req = request_for(s, 0);
    SUBCASE("wrong frame count") {
        Scripted d({PredictionKind::X0, {}});
        CHECK_THROWS_AS(checked_denoise(d, req), Error);
    }
    SUBCASE("wrong shape") {
        Scripted d({PredictionKind::X0, {Grid(3, 16, 16)}});
        try {
            checked_denoise(d, req);
            FAIL("expected ShapeMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ShapeMismatch);
        }
    }
    SUBCASE("non-finite values") {
        Grid bad(3, 32, 32);
        bad[5] = std::numeric_limits<float>::infinity();
        Scripted d({PredictionKind::X0, {bad}});
        CHECK_THROWS_AS(checked_denoise(d, req), Error);
    }
    SUBCASE("kind differs from the declaration") {
        Scripted d({PredictionKind::V, {Grid(3, 32, 32)}}, PredictionKind::X0);
        CHECK_THROWS_AS(checked_denoise(d, req), Error);
    }
}
