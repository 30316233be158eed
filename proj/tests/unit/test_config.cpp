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

#include <fstream>

#include "doctest.h"
#include "test_util.hpp"
#include "uvsync/config.hpp"
#include "uvsync/error.hpp"

using namespace uvsync;

TEST_CASE("defaults follow the reference setup") {
    const PipelineConfig cfg;
    CHECK(cfg.steps == 50);
    CHECK(cfg.azimuth_views == 6);
    CHECK(cfg.top_view);
    CHECK(cfg.make_rig().size() == 7);
    CHECK(cfg.latent_resolution == 96);
    CHECK(cfg.uv_resolution == 512);
    CHECK(cfg.lambda == 0.2);
    CHECK(cfg.keyframe_interval == 3);
    CHECK(cfg.mode == AggregationMode::Proposed);
    CHECK(cfg.effective_final_resolution() == 512);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("text form round-trips every field") {
    PipelineConfig cfg;
    cfg.steps = 17;
    cfg.schedule = ScheduleKind::Cosine;
    cfg.schedule_params.beta_end = 0.02;
    cfg.mode = AggregationMode::AggZPrev;
    cfg.seed = 1234567890123ull;
    cfg.prompt = "a red # fox";
    cfg.background = false;
    cfg.lambda = 0.35;
    cfg.top_elevation_deg = 60.0;
    cfg.denoiser = "remote:127.0.0.1:5000";
    cfg.checkpoint_dir = "/tmp/ckpt";
    const PipelineConfig back = PipelineConfig::from_text(cfg.to_text());
    CHECK(back.to_text() == cfg.to_text());
    CHECK(back.prompt == "a red # fox");
    CHECK(back.seed == 1234567890123ull);
    CHECK(back.mode == AggregationMode::AggZPrev);
    CHECK(back.schedule == ScheduleKind::Cosine);
}

TEST_CASE("comments, blank lines and sections are ignored") {
    const PipelineConfig cfg = PipelineConfig::from_text(R"(
# sampler
[sampling]
steps = 20   # fewer steps
mode = "agg-x0-eps"

lambda=0.5
)");
    CHECK(cfg.steps == 20);
    CHECK(cfg.mode == AggregationMode::AggX0AndEps);
    CHECK(cfg.lambda == 0.5);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(PipelineConfig::from_text("stepz = 3"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("steps = three"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("steps 3"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("lambda = 1.5"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("steps = 0"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("background = maybe"), Error);
    CHECK_THROWS_AS(PipelineConfig::from_text("azimuth_views = 0\ntop_view = false"), Error);
    CHECK_THROWS_AS(PipelineConfig::load("/nonexistent/config.toml"), Error);
}

TEST_CASE("config files load from disk") {
    const auto dir = testing::scratch_dir("config");
    {
        std::ofstream out(dir / "run.toml");
        out << "steps = 8\nlatent_resolution = 48\nfov_deg = 30\n";
    }
    const PipelineConfig cfg = PipelineConfig::load(dir / "run.toml");
    CHECK(cfg.steps == 8);
    CHECK(cfg.rig_options().resolution.width == 48);
    CHECK(cfg.rig_options().vertical_fov == doctest::Approx(radians(30.0)));
}
