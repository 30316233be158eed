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

#include "uvsync/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "uvsync/error.hpp"
#include "uvsync/grid_io.hpp"
#include "uvsync/parallel.hpp"

namespace uvsync {

namespace {

// Streams are keyed by purpose and index so the draws do not depend on the
// order in which views or frames are processed.
Grid gaussian_grid(int channels, int height, int width, uint64_t seed, uint32_t stream, uint32_t a, uint32_t b) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), stream, a, b};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    Grid out(channels, height, width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(normal(rng));
    }
    return out;
}

constexpr uint32_t kTextureStream = 0x54455854u;
constexpr uint32_t kBackgroundStream = 0x42414b47u;

Error with_context(const Error& e, const std::string& context) {
    return Error(e.code(), context + ": " + e.message());
}

/// Applies the per-texel update `fn(i)` where `coverage` is set; elsewhere
/// the current texture is kept.
template <typename Fn>
LatentTexture masked_update(const LatentTexture& current, const LatentTexture& baked, Fn&& fn) {
    LatentTexture out = current;
    out.coverage = baked.coverage;
    const std::size_t plane = current.values.plane_size();
    for (std::size_t texel = 0; texel < plane; ++texel) {
        if (!baked.covered(texel)) {
            continue;
        }
        for (int c = 0; c < current.values.channels(); ++c) {
            const std::size_t i = c * plane + texel;
            out.values[i] = fn(i);
        }
    }
    return out;
}

} // namespace

Pipeline::Pipeline(const MeshSequence& meshes, CameraRig rig, PipelineConfig config)
    : meshes_(&meshes),
      rig_(std::move(rig)),
      config_(std::move(config)),
      schedule_(make_schedule(config_.steps, config_.schedule, config_.schedule_params)) {
    config_.validate();
    require(rig_.size() >= 1, ErrorCode::InvalidArgument, "camera rig is empty");
    for (const auto& cam : rig_.cameras) {
        cam.validate();
    }
    const Resolution latent{config_.latent_resolution, config_.latent_resolution};
    const RasterOptions raster{config_.supersample};
    const UnprojectOptions unproject{config_.depth_tolerance, meshes.bounds().diagonal()};
    layout_ = rasterize_uv_layout(meshes.frame(0), config_.uv_resolution);

    const int views = rig_.size();
    const int frames = meshes.frame_count();
    buffers_.assign(views, std::vector<RenderBuffers>(frames));
    plans_.assign(views, std::vector<UnprojectPlan>(frames));
    const int threads = resolve_thread_count(config_.threads);
    parallel_for(static_cast<std::size_t>(views * frames), threads, [&](std::size_t i) {
        const int v = static_cast<int>(i) / frames;
        const int k = static_cast<int>(i) % frames;
        buffers_[v][k] = render_buffers(meshes.frame(k), rig_.cameras[v], latent, raster);
        plans_[v][k] = plan_unproject(meshes.frame(k), rig_.cameras[v], buffers_[v][k], layout_, unproject);
    });
}

const RenderBuffers& Pipeline::buffers(int view, int frame) const {
    return buffers_.at(static_cast<std::size_t>(view)).at(static_cast<std::size_t>(frame));
}

const UnprojectPlan& Pipeline::plan(int view, int frame) const {
    return plans_.at(static_cast<std::size_t>(view)).at(static_cast<std::size_t>(frame));
}

DiffusionState Pipeline::initial_state() const {
    DiffusionState state;
    state.t = config_.steps;
    const int c = config_.channels;
    const int r = config_.uv_resolution;
    const int h = config_.latent_resolution;
    for (int k = 0; k < frame_count(); ++k) {
        state.textures.push_back(gaussian_grid(c, r, r, config_.seed, kTextureStream, static_cast<uint32_t>(k), 0));
    }
    state.backgrounds.resize(view_count());
    for (int v = 0; v < view_count(); ++v) {
        for (int k = 0; k < frame_count(); ++k) {
            state.backgrounds[v].push_back(config_.background
                                               ? gaussian_grid(c, h, h, config_.seed, kBackgroundStream,
                                                               static_cast<uint32_t>(v), static_cast<uint32_t>(k))
                                               : Grid(c, h, h));
        }
    }
    return state;
}

std::vector<std::vector<Grid>> Pipeline::render_views(std::span<const Grid> textures,
                                                      const std::vector<std::vector<Grid>>& backgrounds) const {
    const int views = view_count();
    const int frames = frame_count();
    std::vector<std::vector<Grid>> out(views, std::vector<Grid>(frames));
    parallel_for(static_cast<std::size_t>(views * frames), resolve_thread_count(config_.threads), [&](std::size_t i) {
        const int v = static_cast<int>(i) / frames;
        const int k = static_cast<int>(i) % frames;
        const RenderBuffers& b = buffers_[v][k];
        out[v][k] = composite(render_texture(textures[k], b), backgrounds[v][k], b.fg_mask);
    });
    return out;
}

DiffusionResult Pipeline::run(Denoiser& denoiser, const StepObserver& observer, const DiffusionState* resume) const {
    DiffusionState state = resume ? *resume : initial_state();
    const int views = view_count();
    const int frames = frame_count();
    const int c = config_.channels;
    const int r = config_.uv_resolution;
    const int h = config_.latent_resolution;
    require(state.t >= 0 && state.t <= config_.steps, ErrorCode::InvalidArgument,
            "resume step outside [0, T]");
    require(static_cast<int>(state.textures.size()) == frames, ErrorCode::ShapeMismatch,
            "state has the wrong number of frame textures");
    require(static_cast<int>(state.backgrounds.size()) == views, ErrorCode::ShapeMismatch,
            "state has the wrong number of background views");
    for (const auto& tex : state.textures) {
        require(tex.channels() == c && tex.height() == r && tex.width() == r, ErrorCode::ShapeMismatch,
                "state texture shape " + tex.shape_string() + " does not match the config");
    }
    for (const auto& row : state.backgrounds) {
        require(static_cast<int>(row.size()) == frames, ErrorCode::ShapeMismatch,
                "state has the wrong number of background frames");
        for (const auto& bg : row) {
            require(bg.channels() == c && bg.height() == h && bg.width() == h, ErrorCode::ShapeMismatch,
                    "state background shape " + bg.shape_string() + " does not match the config");
        }
    }

    const DenoiserInfo info = denoiser.info();
    const int threads = resolve_thread_count(config_.threads);
    const int denoise_threads = info.concurrent ? threads : 1;
    const AggregationConfig agg = config_.aggregation();

    std::vector<LatentTexture> textures(frames);
    for (int k = 0; k < frames; ++k) {
        textures[k] = LatentTexture{std::move(state.textures[k]),
                                    std::vector<float>(static_cast<std::size_t>(r) * r, 0.0f), k};
    }
    std::vector<std::vector<Grid>>& backgrounds = state.backgrounds;
    auto texture_values = [&] {
        std::vector<Grid> v;
        v.reserve(textures.size());
        for (const auto& t : textures) {
            v.push_back(t.values);
        }
        return v;
    };
    std::vector<std::vector<Grid>> latents = render_views(texture_values(), backgrounds);
    std::vector<LatentTexture> x0_hats(frames);
    std::vector<std::vector<Grid>> depth_grids(views);
    for (int v = 0; v < views; ++v) {
        for (int k = 0; k < frames; ++k) {
            depth_grids[v].push_back(buffers_[v][k].depth_grid());
        }
    }
    const std::vector<Grid> far_depths(frames, Grid(1, h, h, std::numeric_limits<float>::infinity()));

    auto make_request = [&](int v, int t, bool background) {
        DenoiseRequest req;
        req.view_id = v;
        req.timestep = t;
        req.model_timestep = schedule_.model_timestep(t);
        req.alpha_bar = schedule_.at(t);
        req.background = background;
        req.latents = background ? backgrounds[v] : latents[v];
        req.depths = background ? far_depths : depth_grids[v];
        req.prompt = config_.prompt;
        return req;
    };

    for (int t = state.t; t >= 1; --t) {
        const auto started = std::chrono::steady_clock::now();

        // Background latents follow an ordinary per-view DDIM trajectory.
        if (config_.background) {
            parallel_for(static_cast<std::size_t>(views), denoise_threads, [&](std::size_t vi) {
                const int v = static_cast<int>(vi);
                DenoiseResponse resp;
                try {
                    resp = checked_denoise(denoiser, make_request(v, t, true));
                } catch (const Error& e) {
                    throw with_context(e, "step " + std::to_string(t) + ", view " + std::to_string(v) +
                                              ", background");
                }
                for (int k = 0; k < frames; ++k) {
                    const Decomposition d = decompose({resp.kind, std::move(resp.frames[k])}, backgrounds[v][k], t,
                                                      schedule_);
                    backgrounds[v][k] = ddim_step(d.x0, d.eps, t, schedule_);
                }
            });
        }

        // Foreground: one joint request per view covering every keyframe.
        std::vector<std::vector<Decomposition>> decomp(views, std::vector<Decomposition>(frames));
        parallel_for(static_cast<std::size_t>(views), denoise_threads, [&](std::size_t vi) {
            const int v = static_cast<int>(vi);
            DenoiseResponse resp;
            try {
                resp = checked_denoise(denoiser, make_request(v, t, false));
            } catch (const Error& e) {
                throw with_context(e, "step " + std::to_string(t) + ", view " + std::to_string(v));
            }
            for (int k = 0; k < frames; ++k) {
                decomp[v][k] = decompose({resp.kind, std::move(resp.frames[k])}, latents[v][k], t, schedule_);
            }
        });

        // Bake barrier: unproject per (view, frame), then reduce per frame in
        // view order.
        const bool want_eps = config_.mode == AggregationMode::AggX0AndEps;
        const bool want_zprev = config_.mode == AggregationMode::AggZPrev;
        std::vector<std::vector<PartialTexture>> x0_parts(frames, std::vector<PartialTexture>(views));
        std::vector<std::vector<PartialTexture>> aux_parts(
            want_eps || want_zprev ? frames : 0, std::vector<PartialTexture>(views));
        parallel_for(static_cast<std::size_t>(views * frames), threads, [&](std::size_t i) {
            const int v = static_cast<int>(i) / frames;
            const int k = static_cast<int>(i) % frames;
            const Decomposition& d = decomp[v][k];
            x0_parts[k][v] = unproject(d.x0, plans_[v][k]);
            if (want_eps) {
                aux_parts[k][v] = unproject(d.eps, plans_[v][k]);
            } else if (want_zprev) {
                aux_parts[k][v] = unproject(ddim_step(d.x0, d.eps, t, schedule_), plans_[v][k]);
            }
        });
        std::vector<LatentTexture> aux(aux_parts.size());
        parallel_for(static_cast<std::size_t>(frames), threads, [&](std::size_t k) {
            x0_hats[k] = aggregate_views(x0_parts[k], agg);
            x0_hats[k].frame_index = static_cast<int>(k);
            if (!aux_parts.empty()) {
                aux[k] = aggregate_views(aux_parts[k], agg);
            }
        });
        x0_parts.clear();
        aux_parts.clear();

        const ReferenceTexture reference = build_reference(x0_hats);
        const double a_prev = schedule_.at(t - 1);
        parallel_for(static_cast<std::size_t>(frames), threads, [&](std::size_t k) {
            LatentTexture next;
            switch (config_.mode) {
            case AggregationMode::Proposed:
                next = uv_ddim_step(textures[k], x0_hats[k], t, schedule_);
                break;
            case AggregationMode::AggX0AndEps: {
                const LatentTexture& eps = aux[k];
                next = masked_update(textures[k], x0_hats[k], [&](std::size_t i) {
                    return static_cast<float>(ddim::step(x0_hats[k].values[i], eps.values[i], a_prev));
                });
                break;
            }
            case AggregationMode::AggZPrev: {
                const LatentTexture& zprev = aux[k];
                next = masked_update(textures[k], x0_hats[k], [&](std::size_t i) { return zprev.values[i]; });
                break;
            }
            }
            const std::vector<float> mask = x0_hats[k].visibility_mask();
            textures[k] = blend_with_reference(next, reference, mask, config_.lambda);
            textures[k].frame_index = static_cast<int>(k);
        });

        // Composite barrier.
        latents = render_views(texture_values(), backgrounds);

        if (!config_.checkpoint_dir.empty()) {
            save_checkpoint(config_.checkpoint_dir, DiffusionState{t - 1, texture_values(), backgrounds});
        }
        if (observer) {
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            observer(StepSnapshot{t, seconds, textures, x0_hats, latents});
        }
    }

    DiffusionResult result;
    result.textures = std::move(textures);
    result.x0_hats = std::move(x0_hats);
    result.view_latents = std::move(latents);
    result.backgrounds = std::move(backgrounds);
    // Texels no view covered still hold initial noise; keep it out of the
    // foreground renders by extending covered values and zeroing the rest.
    std::vector<Grid> cleaned(frames);
    const int reach = 2 + (2 * r + h - 1) / h;
    parallel_for(static_cast<std::size_t>(frames), threads, [&](std::size_t k) {
        const LatentTexture& tex = result.textures[k];
        cleaned[k] = tex.values;
        std::vector<TexelStatus> status(tex.coverage.size(), TexelStatus::Empty);
        for (std::size_t i = 0; i < status.size(); ++i) {
            if (tex.covered(i)) {
                status[i] = TexelStatus::Covered;
            }
        }
        dilate(cleaned[k], status, reach);
        const std::size_t plane = cleaned[k].plane_size();
        for (std::size_t i = 0; i < plane; ++i) {
            if (status[i] == TexelStatus::Empty) {
                for (int ch = 0; ch < c; ++ch) {
                    cleaned[k][ch * plane + i] = 0.0f;
                }
            }
        }
    });
    result.foreground.assign(views, std::vector<Grid>(frames));
    parallel_for(static_cast<std::size_t>(views * frames), threads, [&](std::size_t i) {
        const int v = static_cast<int>(i) / frames;
        const int k = static_cast<int>(i) % frames;
        result.foreground[v][k] = render_texture(cleaned[k], buffers_[v][k]);
    });
    return result;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int t) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%04d", t);
    return dir / name;
}

void save_checkpoint(const std::filesystem::path& dir, const DiffusionState& state) {
    const auto path = checkpoint_path(dir, state.t);
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec, ErrorCode::IoError, "cannot create " + path.string());
    char name[64];
    for (std::size_t k = 0; k < state.textures.size(); ++k) {
        std::snprintf(name, sizeof name, "texture_%04zu.grid", k);
        save_grid(path / name, state.textures[k]);
    }
    for (std::size_t v = 0; v < state.backgrounds.size(); ++v) {
        for (std::size_t k = 0; k < state.backgrounds[v].size(); ++k) {
            std::snprintf(name, sizeof name, "background_%02zu_%04zu.grid", v, k);
            save_grid(path / name, state.backgrounds[v][k]);
        }
    }
}

DiffusionState load_checkpoint(const std::filesystem::path& dir, int t) {
    const auto path = checkpoint_path(dir, t);
    require(std::filesystem::is_directory(path), ErrorCode::IoError, "no checkpoint at " + path.string());
    DiffusionState state;
    state.t = t;
    char name[64];
    for (std::size_t k = 0;; ++k) {
        std::snprintf(name, sizeof name, "texture_%04zu.grid", k);
        if (!std::filesystem::exists(path / name)) {
            break;
        }
        state.textures.push_back(load_grid(path / name));
    }
    require(!state.textures.empty(), ErrorCode::IoError, "checkpoint " + path.string() + " has no textures");
    for (std::size_t v = 0;; ++v) {
        std::vector<Grid> row;
        for (std::size_t k = 0; k < state.textures.size(); ++k) {
            std::snprintf(name, sizeof name, "background_%02zu_%04zu.grid", v, k);
            if (!std::filesystem::exists(path / name)) {
                break;
            }
            row.push_back(load_grid(path / name));
        }
        if (row.empty()) {
            break;
        }
        require(row.size() == state.textures.size(), ErrorCode::IoError,
                "checkpoint " + path.string() + " is missing background frames");
        state.backgrounds.push_back(std::move(row));
    }
    return state;
}

} // namespace uvsync
