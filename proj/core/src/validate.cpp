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

#include "uvsync/validate.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <functional>
#include <random>
#include <sstream>

#include "uvsync/pipeline.hpp"

namespace uvsync {

namespace {

std::string str(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckResult uv_step_identity(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    std::uniform_real_distribution<double> alpha(1e-4, 0.9999);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double a = alpha(rng), a_prev = alpha(rng);
        if (a_prev < a) {
            std::swap(a, a_prev);
        }
        const double z = value(rng), x0 = value(rng);
        const double direct = ddim::step(x0, ddim::implied_eps(z, x0, a), a_prev);
        worst = std::max(worst, std::abs(ddim::uv_step(z, x0, a, a_prev) - direct));
    }
    return {"uv step equals DDIM step with implied noise", worst < 1e-9, "max |diff| = " + str(worst)};
}

CheckResult variance_shift(std::mt19937_64& rng) {
    const int views = 6, side = 100;
    std::normal_distribution<double> normal;
    std::vector<PartialTexture> parts(views);
    for (auto& p : parts) {
        p.values = Grid(1, side, side);
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            p.values[i] = static_cast<float>(normal(rng));
        }
        p.weight.assign(p.values.size(), 1.0f);
    }
    const LatentTexture agg = aggregate_views(parts, {});
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < agg.values.size(); ++i) {
        s += agg.values[i];
        s2 += static_cast<double>(agg.values[i]) * agg.values[i];
    }
    const double n = static_cast<double>(agg.values.size());
    const double var = s2 / n - (s / n) * (s / n);
    return {"averaging 6 unit-variance views gives variance 1/6", std::abs(var - 1.0 / 6.0) < 0.01,
            "variance = " + str(var)};
}

CheckResult blend_composite_exact(std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const int side = 16;
    LatentTexture tex{Grid(2, side, side), std::vector<float>(side * side, 1.0f), 0};
    ReferenceTexture ref{Grid(2, side, side), std::vector<uint8_t>(side * side, 1)};
    std::vector<float> mask(side * side);
    for (std::size_t i = 0; i < tex.values.size(); ++i) {
        tex.values[i] = static_cast<float>(normal(rng));
        ref.values[i] = static_cast<float>(normal(rng));
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = static_cast<float>(i % 2);
    }
    bool ok = true;
    const LatentTexture l0 = blend_with_reference(tex, ref, mask, 0.0);
    const LatentTexture l1 = blend_with_reference(tex, ref, mask, 1.0);
    const Grid comp = composite(tex.values, ref.values, mask);
    const std::size_t plane = tex.values.plane_size();
    for (std::size_t i = 0; i < tex.values.size(); ++i) {
        const bool visible = mask[i % plane] == 1.0f;
        ok &= l0.values[i] == (visible ? tex.values[i] : ref.values[i]);
        ok &= l1.values[i] == ref.values[i];
        ok &= comp[i] == (visible ? tex.values[i] : ref.values[i]);
    }
    return {"blend and composite with binary masks are exact", ok, ok ? "bitwise" : "mismatch"};
}

CheckResult reference_fill(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 3);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
        const int frames = 1 + trial % 5, side = 8;
        std::vector<LatentTexture> x0(frames);
        for (int k = 0; k < frames; ++k) {
            x0[k] = {Grid(1, side, side, static_cast<float>(k + 1)), std::vector<float>(side * side), k};
            for (auto& c : x0[k].coverage) {
                c = coin(rng) == 0 ? 0.5f : 0.0f;
            }
        }
        const ReferenceTexture ref = build_reference(x0);
        for (int texel = 0; texel < side * side; ++texel) {
            float expect = 0.0f;
            for (int k = 0; k < frames; ++k) {
                if (x0[k].coverage[texel] > 0.0f) {
                    expect = static_cast<float>(k + 1);
                    break;
                }
            }
            ok &= ref.values[texel] == expect && ref.mask[texel] == (expect != 0.0f);
        }
    }
    return {"reference keeps the earliest visible frame", ok, ok ? "20 random cases" : "mismatch"};
}

CheckResult prediction_normalisation(std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    const NoiseSchedule sched = make_schedule(50);
    Grid z(1, 8, 8), x0(1, 8, 8), eps(1, 8, 8), v(1, 8, 8);
    const int t = 20;
    const double a = sched.at(t);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double x = normal(rng), e = normal(rng);
        x0[i] = static_cast<float>(x);
        eps[i] = static_cast<float>(e);
        z[i] = static_cast<float>(std::sqrt(a) * x + std::sqrt(1 - a) * e);
        v[i] = static_cast<float>(std::sqrt(a) * e - std::sqrt(1 - a) * x);
    }
    const Grid from_eps = to_x0({PredictionKind::Epsilon, eps}, z, t, sched);
    const Grid from_v = to_x0({PredictionKind::V, v}, z, t, sched);
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        worst = std::max({worst, std::abs(double(from_eps[i]) - x0[i]), std::abs(double(from_v[i]) - x0[i])});
    }
    return {"epsilon, v and x0 predictions agree on the clean estimate", worst < 1e-5,
            "max |diff| = " + str(worst)};
}

CheckResult small_oracle_run(uint64_t seed) {
    const MeshSequence sphere = make_uv_sphere(1.0, 32, 16);
    PipelineConfig cfg;
    cfg.steps = 8;
    cfg.azimuth_views = 3;
    cfg.top_view = false;
    cfg.latent_resolution = 32;
    cfg.uv_resolution = 64;
    cfg.seed = seed;
    const CameraRig rig = cfg.make_rig();
    const auto oracle = make_denoiser(cfg, sphere, rig);
    cfg.threads = 1;
    const DiffusionResult a = Pipeline(sphere, rig, cfg).run(*oracle);
    cfg.threads = 3;
    const DiffusionResult b = Pipeline(sphere, rig, cfg).run(*oracle);
    const bool same = a.textures.front().values == b.textures.front().values;
    const auto* target = dynamic_cast<const OracleDenoiser*>(oracle.get());
    double se = 0.0;
    std::size_t n = 0;
    const LatentTexture& tex = a.textures.front();
    const std::size_t plane = tex.values.plane_size();
    for (std::size_t texel = 0; texel < plane; ++texel) {
        if (!tex.covered(texel)) {
            continue;
        }
        for (int c = 0; c < tex.values.channels(); ++c) {
            const double d = tex.values[c * plane + texel] - target->targets().front()[c * plane + texel];
            se += d * d;
            ++n;
        }
    }
    const double rms = n ? std::sqrt(se / n) : 1.0;
    return {"oracle run converges and is thread-count independent", same && rms < 0.02,
            std::string(same ? "identical" : "differs") + " across threads, rms = " + str(rms)};
}

} // namespace

std::vector<CheckResult> run_self_checks(uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks{
        {"uv-step", [&] { return uv_step_identity(rng); }},
        {"variance", [&] { return variance_shift(rng); }},
        {"blend", [&] { return blend_composite_exact(rng); }},
        {"reference", [&] { return reference_fill(rng); }},
        {"prediction", [&] { return prediction_normalisation(rng); }},
        {"oracle", [&] { return small_oracle_run(seed); }},
    };
    std::vector<CheckResult> results;
    for (const auto& [name, check] : checks) {
        const auto started = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = check();
        } catch (const std::exception& e) {
            r = {name, false, std::string("threw: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace uvsync
