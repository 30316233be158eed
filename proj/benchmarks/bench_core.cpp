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

#include <benchmark/benchmark.h>

#include <random>

#include "uvsync/pipeline.hpp"

using namespace uvsync;

namespace {

const MeshSequence& sphere() {
    static const MeshSequence mesh = make_uv_sphere(1.0, 64, 32);
    return mesh;
}

Grid noise(int c, int h, int w) {
    std::mt19937_64 rng(11);
    std::normal_distribution<float> normal;
    Grid g(c, h, w);
    for (float& v : g.values()) v = normal(rng);
    return g;
}

void BM_RenderBuffers(benchmark::State& state) {
    const int res = static_cast<int>(state.range(0));
    const Camera cam = orbit_camera(2.5, 30.0, 10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_buffers(sphere().frame(0), cam, {res, res}));
    }
}
BENCHMARK(BM_RenderBuffers)->Arg(96)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_PlanUnproject(benchmark::State& state) {
    const int uv = static_cast<int>(state.range(0));
    const Camera cam = orbit_camera(2.5, 30.0, 10.0);
    const RenderBuffers b = render_buffers(sphere().frame(0), cam, {96, 96});
    const UvLayout layout = rasterize_uv_layout(sphere().frame(0), uv);
    for (auto _ : state) {
        benchmark::DoNotOptimize(plan_unproject(sphere().frame(0), cam, b, layout));
    }
}
BENCHMARK(BM_PlanUnproject)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_Unproject(benchmark::State& state) {
    const Camera cam = orbit_camera(2.5, 30.0, 10.0);
    const RenderBuffers b = render_buffers(sphere().frame(0), cam, {96, 96});
    const UnprojectPlan plan = plan_unproject(sphere().frame(0), cam, b, rasterize_uv_layout(sphere().frame(0), 512));
    const Grid latent = noise(4, 96, 96);
    for (auto _ : state) {
        benchmark::DoNotOptimize(unproject(latent, plan));
    }
}
BENCHMARK(BM_Unproject)->Unit(benchmark::kMicrosecond);

void BM_Aggregate(benchmark::State& state) {
    const int views = static_cast<int>(state.range(0));
    std::vector<PartialTexture> parts(views);
    for (auto& p : parts) {
        p.values = noise(4, 512, 512);
        p.weight.assign(512 * 512, 0.5f);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(aggregate_views(parts, {}));
    }
}
BENCHMARK(BM_Aggregate)->Arg(7)->Unit(benchmark::kMillisecond);

void BM_PipelineStep(benchmark::State& state) {
    PipelineConfig cfg;
    cfg.steps = 1;
    cfg.threads = static_cast<int>(state.range(0));
    const CameraRig rig = cfg.make_rig();
    const Pipeline pipeline(sphere(), rig, cfg);
    const auto den = make_denoiser(cfg, sphere(), rig);
    for (auto _ : state) {
        benchmark::DoNotOptimize(pipeline.run(*den));
    }
}
BENCHMARK(BM_PipelineStep)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
