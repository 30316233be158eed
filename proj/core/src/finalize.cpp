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

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uvsync/bridge.hpp"
#include "uvsync/error.hpp"
#include "uvsync/grid_io.hpp"
#include "uvsync/parallel.hpp"
#include "uvsync/pipeline.hpp"

#ifndef UVSYNC_VERSION
#define UVSYNC_VERSION "0.0.0"
#endif

namespace uvsync {

using json = nlohmann::json;

namespace {

std::string numbered(const char* pattern, std::size_t i) {
    char name[64];
    std::snprintf(name, sizeof name, pattern, i);
    return name;
}

std::vector<TexelStatus> coverage_status(const LatentTexture& tex) {
    std::vector<TexelStatus> status(tex.coverage.size(), TexelStatus::Empty);
    for (std::size_t i = 0; i < status.size(); ++i) {
        if (tex.covered(i)) {
            status[i] = TexelStatus::Covered;
        }
    }
    return status;
}

Grid lerp(const Grid& a, const Grid& b, double s) {
    require_same_shape(a, b, "interpolate_keyframes");
    Grid out(a.channels(), a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = static_cast<float>((1.0 - s) * a[i] + s * b[i]);
    }
    return out;
}

// Whole remainder of `source` after `offset` as a number.
template <typename T>
T parse_number(const std::string& source, std::size_t offset) {
    T value{};
    const char* first = source.data() + offset;
    const char* last = source.data() + source.size();
    const auto [end, ec] = std::from_chars(first, last, value);
    require(ec == std::errc{} && end == last && std::isfinite(static_cast<double>(value)), ErrorCode::InvalidArgument,
            "bad number in target '" + source + "'");
    return value;
}

Vec3 channel_direction(int c) {
    static const Vec3 dirs[3] = {normalize(Vec3{1.0, 0.3, 0.2}), normalize(Vec3{0.2, 1.0, -0.3}),
                                 normalize(Vec3{-0.3, 0.2, 1.0})};
    return dirs[c % 3];
}

} // namespace

void TextureSequence::validate() const {
    require(!keyframes.empty(), ErrorCode::InvalidArgument, "texture sequence has no keyframes");
    require(interval >= 1, ErrorCode::InvalidArgument, "interval must be >= 1");
    for (const auto& key : keyframes) {
        require_same_shape(key.values, keyframes.front().values, "texture sequence keyframes");
        require(key.status.size() == key.values.plane_size(), ErrorCode::ShapeMismatch, "keyframe status plane");
        require(key.values.all_finite(), ErrorCode::InvalidArgument, "keyframe texture is not finite");
    }
    for (const auto& f : frames) {
        require_same_shape(f, keyframes.front().values, "texture sequence frames");
        require(f.all_finite(), ErrorCode::InvalidArgument, "frame texture is not finite");
    }
}

TextureSequence finalize_textures(const MeshSequence& meshes, const CameraRig& rig, const DiffusionResult& result,
                                  const FinalizeOptions& options) {
    options.aggregation.validate();
    require(options.resolution >= 1, ErrorCode::InvalidArgument, "final resolution must be >= 1");
    const int views = rig.size();
    const int frames = meshes.frame_count();
    require(static_cast<int>(result.foreground.size()) == views, ErrorCode::ShapeMismatch,
            "diffusion result does not match the rig");
    for (const auto& row : result.foreground) {
        require(static_cast<int>(row.size()) == frames, ErrorCode::ShapeMismatch,
                "diffusion result does not match the keyframe count");
    }

    const UvLayout layout = rasterize_uv_layout(meshes.frame(0), options.resolution);
    const UnprojectOptions unproject_opts{options.depth_tolerance, meshes.bounds().diagonal()};
    std::vector<std::vector<PartialTexture>> parts(frames, std::vector<PartialTexture>(views));
    // Decoders may hold state, so they run one at a time.
    parallel_for(static_cast<std::size_t>(views * frames), 1, [&](std::size_t i) {
        const int v = static_cast<int>(i) / frames;
        const int k = static_cast<int>(i) % frames;
        const Grid& latent = result.foreground[v][k];
        Grid image;
        if (options.decoder) {
            try {
                image = options.decoder(latent, v, k);
            } catch (const std::exception& e) {
                fail(ErrorCode::BackendUnavailable, "decoder failed for view " + std::to_string(v) + ", frame " +
                                                        std::to_string(k) + ": " + e.what());
            }
            require(!image.empty() && image.all_finite(), ErrorCode::BackendUnavailable,
                    "decoder returned an empty or non-finite image");
        } else {
            image = latent;
        }
        const Resolution res{image.width(), image.height()};
        const RenderBuffers buffers = render_buffers(meshes.frame(k), rig.cameras[v], res, {options.supersample});
        const UnprojectPlan plan = plan_unproject(meshes.frame(k), rig.cameras[v], buffers, layout, unproject_opts);
        parts[k][v] = unproject(image, plan);
    });

    TextureSequence out;
    std::vector<LatentTexture> baked;
    for (int k = 0; k < frames; ++k) {
        for (const auto& p : parts[k]) {
            require(p.values.channels() == parts[k].front().values.channels(), ErrorCode::ShapeMismatch,
                    "decoded views disagree on channel count");
        }
        baked.push_back(aggregate_views(parts[k], options.aggregation));
        require(baked.back().values.same_shape(baked.front().values), ErrorCode::ShapeMismatch,
                "decoded frames disagree on channel count");
    }
    // Texels hidden in a frame take the earliest keyframe that sees them, the
    // same rule the sampler applies to the latents.
    const ReferenceTexture ref = build_reference(baked);
    const std::size_t plane = baked.front().values.plane_size();
    const int channels = baked.front().values.channels();
    for (int k = 0; k < frames; ++k) {
        FinalTexture tex{std::move(baked[k].values), coverage_status(baked[k]), k};
        for (std::size_t i = 0; i < plane; ++i) {
            if (tex.status[i] == TexelStatus::Empty && ref.mask[i]) {
                for (int c = 0; c < channels; ++c) {
                    tex.values[c * plane + i] = ref.values[c * plane + i];
                }
                tex.status[i] = TexelStatus::Referenced;
            }
        }
        dilate(tex.values, tex.status, options.dilation);
        out.frames.push_back(tex.values);
        out.keyframes.push_back(std::move(tex));
    }
    return out;
}

std::vector<Grid> interpolate_grids(std::span<const Grid> keys, int interval) {
    require(interval >= 1, ErrorCode::InvalidArgument, "interval must be >= 1");
    require(!keys.empty(), ErrorCode::InvalidArgument, "no keyframes to interpolate");
    if (interval == 1) {
        return {keys.begin(), keys.end()};
    }
    require(keys.size() >= 2, ErrorCode::InvalidArgument, "interpolation with interval > 1 needs two keyframes");
    std::vector<Grid> out;
    out.reserve((keys.size() - 1) * interval + 1);
    for (std::size_t j = 0; j + 1 < keys.size(); ++j) {
        out.push_back(keys[j]);
        for (int i = 1; i < interval; ++i) {
            out.push_back(lerp(keys[j], keys[j + 1], static_cast<double>(i) / interval));
        }
    }
    out.push_back(keys.back());
    return out;
}

TextureSequence interpolate_keyframes(TextureSequence sequence, int interval) {
    std::vector<Grid> keys;
    for (const auto& k : sequence.keyframes) {
        keys.push_back(k.values);
    }
    sequence.frames = interpolate_grids(keys, interval);
    sequence.interval = interval;
    return sequence;
}

MeshSequence interpolate_meshes(const MeshSequence& meshes, int interval) {
    require(interval >= 1, ErrorCode::InvalidArgument, "interval must be >= 1");
    if (interval == 1) {
        return meshes;
    }
    require(meshes.frame_count() >= 2, ErrorCode::InvalidArgument,
            "interpolation with interval > 1 needs two keyframes");
    std::vector<std::vector<Vec3>> frames;
    for (int j = 0; j + 1 < meshes.frame_count(); ++j) {
        const auto a = meshes.positions(j);
        const auto b = meshes.positions(j + 1);
        for (int i = 0; i < interval; ++i) {
            const double s = static_cast<double>(i) / interval;
            std::vector<Vec3> p(a.size());
            for (std::size_t n = 0; n < a.size(); ++n) {
                p[n] = i == 0 ? a[n] : a[n] * (1.0 - s) + b[n] * s;
            }
            frames.push_back(std::move(p));
        }
    }
    const auto last = meshes.positions(meshes.frame_count() - 1);
    frames.emplace_back(last.begin(), last.end());
    return meshes.with_frames(std::move(frames));
}

std::vector<Grid> make_targets(const std::string& source, const MeshSequence& meshes, int resolution, int channels) {
    require(resolution >= 1 && channels >= 1, ErrorCode::InvalidArgument, "target shape must be positive");
    Grid target(channels, resolution, resolution);
    const std::size_t plane = target.plane_size();
    if (source == "smooth") {
        const MeshFrame rest = meshes.frame(0);
        const UvLayout layout = rasterize_uv_layout(rest, resolution);
        const Aabb box = rest.bounds();
        const double scale = box.diagonal() > 0.0 ? 2.0 / box.diagonal() : 1.0;
        std::vector<TexelStatus> status(plane, TexelStatus::Empty);
        for (std::size_t texel = 0; texel < plane; ++texel) {
            const auto& t = layout.texels[texel];
            if (t.triangle < 0) {
                continue;
            }
            const Face& f = rest.faces[t.triangle];
            const Vec3 p = rest.positions[f.position[0]] * (1.0 - t.b1 - t.b2) + rest.positions[f.position[1]] * t.b1 +
                           rest.positions[f.position[2]] * t.b2;
            const Vec3 q = (p - box.center()) * scale;
            for (int c = 0; c < channels; ++c) {
                target[c * plane + texel] = static_cast<float>(0.5 + 0.35 * dot(q, channel_direction(c)));
            }
            status[texel] = TexelStatus::Covered;
        }
        // Gutters only matter through bilinear taps at chart borders.
        dilate(target, status, 4);
        for (std::size_t texel = 0; texel < plane; ++texel) {
            if (status[texel] == TexelStatus::Empty) {
                for (int c = 0; c < channels; ++c) {
                    target[c * plane + texel] = 0.5f;
                }
            }
        }
    } else if (source.rfind("constant:", 0) == 0) {
        target.fill(static_cast<float>(parse_number<double>(source, 9)));
    } else if (source.rfind("checker:", 0) == 0) {
        const int n = parse_number<int>(source, 8);
        require(n >= 1, ErrorCode::InvalidArgument, "checker needs a positive cell count");
        for (int y = 0; y < resolution; ++y) {
            for (int x = 0; x < resolution; ++x) {
                const int cell = (x * n / resolution + y * n / resolution) % 2;
                for (int c = 0; c < channels; ++c) {
                    target.at(c, y, x) = cell ? 0.8f - 0.1f * (c % 3) : 0.2f + 0.1f * (c % 3);
                }
            }
        }
    } else {
        target = load_grid(source);
        require(target.channels() == channels && target.height() == resolution && target.width() == resolution,
                ErrorCode::ShapeMismatch,
                "target " + source + " has shape " + target.shape_string() + ", expected " + std::to_string(channels) +
                    "x" + std::to_string(resolution) + "x" + std::to_string(resolution));
    }
    return std::vector<Grid>(static_cast<std::size_t>(meshes.frame_count()), target);
}

std::shared_ptr<Denoiser> make_denoiser(const PipelineConfig& config, const MeshSequence& meshes,
                                        const CameraRig& rig) {
    const std::string& name = config.denoiser;
    if (name == "toy") {
        return std::make_shared<ToyDenoiser>();
    }
    if (name.rfind("remote:", 0) == 0) {
        const bridge::RemoteAddress addr = bridge::parse_address(name);
        return std::make_shared<RemoteDenoiser>(addr.host, addr.port);
    }
    if (name == "oracle" || name == "noisy-oracle") {
        auto oracle = std::make_shared<OracleDenoiser>(
            make_targets(config.oracle_target, meshes, config.uv_resolution, config.channels), meshes, rig,
            Resolution{config.latent_resolution, config.latent_resolution}, RasterOptions{config.supersample});
        if (name == "oracle") {
            return oracle;
        }
        return std::make_shared<NoisyDenoiser>(oracle, config.noise_sigma, config.seed);
    }
    fail(ErrorCode::InvalidArgument, "unknown denoiser '" + name + "'");
}

TextureSequence generate(const MeshSequence& meshes, const CameraRig& rig, const PipelineConfig& config,
                         Denoiser& denoiser, const StepObserver& observer, const Decoder& decoder) {
    const Pipeline pipeline(meshes, rig, config);
    const DiffusionResult result = pipeline.run(denoiser, observer);
    FinalizeOptions options;
    options.resolution = config.effective_final_resolution();
    options.aggregation = config.aggregation();
    options.depth_tolerance = config.depth_tolerance;
    options.supersample = config.supersample;
    options.dilation = config.dilation;
    options.decoder = decoder;
    TextureSequence seq = finalize_textures(meshes, rig, result, options);
    // A single keyframe has nothing to interpolate toward.
    const int interval = meshes.frame_count() >= 2 ? config.keyframe_interval : 1;
    seq = interpolate_keyframes(std::move(seq), interval);
    seq.validate();
    return seq;
}

ConsistencyStats cross_view_consistency(const MeshFrame& frame, const Grid& texture, const CameraRig& rig,
                                        double cos_min, int supersample) {
    require(texture.height() == texture.width(), ErrorCode::ShapeMismatch, "texture must be square");
    const UvLayout layout = rasterize_uv_layout(frame, texture.height());
    std::vector<PartialTexture> parts(rig.cameras.size());
    for (std::size_t v = 0; v < rig.cameras.size(); ++v) {
        const Camera& cam = rig.cameras[v];
        const RenderBuffers buffers = render_buffers(frame, cam, cam.resolution, {supersample});
        const UnprojectPlan plan = plan_unproject(frame, cam, buffers, layout);
        parts[v] = unproject(render_texture(texture, buffers), plan);
    }
    ConsistencyStats stats;
    const std::size_t plane = texture.plane_size();
    const int channels = texture.channels();
    double total = 0.0;
    for (std::size_t texel = 0; texel < plane; ++texel) {
        int n = 0;
        for (const auto& p : parts) {
            n += p.weight[texel] >= cos_min && p.weight[texel] > 0.0f;
        }
        if (n < 2) {
            continue;
        }
        double std_sum = 0.0;
        for (int c = 0; c < channels; ++c) {
            double s = 0.0, s2 = 0.0;
            for (const auto& p : parts) {
                if (p.weight[texel] >= cos_min && p.weight[texel] > 0.0f) {
                    const double x = p.values[c * plane + texel];
                    s += x;
                    s2 += x * x;
                }
            }
            const double mean = s / n;
            std_sum += std::sqrt(std::max(0.0, s2 / n - mean * mean));
        }
        const double texel_std = std_sum / channels;
        total += texel_std;
        stats.max_std = std::max(stats.max_std, texel_std);
        ++stats.texels;
    }
    stats.mean_std = stats.texels ? total / static_cast<double>(stats.texels) : 0.0;
    return stats;
}

std::vector<ConsistencyStats> render_sequence(const MeshSequence& meshes, const TextureSequence& sequence,
                                              const Camera& camera, const std::filesystem::path& out_dir,
                                              const RenderSequenceOptions& options) {
    require(!sequence.frames.empty(), ErrorCode::InvalidArgument, "texture sequence has no frames");
    camera.validate();
    const int frame_count = static_cast<int>(sequence.frames.size());
    MeshSequence frames_mesh = meshes.frame_count() == frame_count ? meshes
                                                                     : interpolate_meshes(meshes, sequence.interval);
    require(frames_mesh.frame_count() == frame_count, ErrorCode::ShapeMismatch,
            "mesh sequence has " + std::to_string(meshes.frame_count()) + " frames for " +
                std::to_string(frame_count) + " textures");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec, ErrorCode::IoError, "cannot create " + out_dir.string());

    std::vector<ConsistencyStats> report;
    for (int f = 0; f < frame_count; ++f) {
        const MeshFrame frame = frames_mesh.frame(f);
        const RenderBuffers buffers = render_buffers(frame, camera, camera.resolution, {options.supersample});
        const Grid image = render_texture(sequence.frames[f], buffers);
        write_png(out_dir / numbered("frame_%04zu.png", f), image);
        save_grid(out_dir / numbered("frame_%04zu.grid", f), image);
        if (!options.consistency_rig.cameras.empty()) {
            ConsistencyStats stats = cross_view_consistency(frame, sequence.frames[f], options.consistency_rig,
                                                            options.cos_min, options.supersample);
            stats.frame = f;
            report.push_back(stats);
        }
    }
    if (!report.empty()) {
        json j = json::array();
        for (const auto& s : report) {
            j.push_back({{"frame", s.frame}, {"texels", s.texels}, {"mean_std", s.mean_std}, {"max_std", s.max_std}});
        }
        std::ofstream out(out_dir / "consistency.json");
        require(static_cast<bool>(out), ErrorCode::IoError, "cannot write consistency.json");
        out << j.dump(2) << '\n';
    }
    return report;
}

void save_texture_sequence(const std::filesystem::path& dir, const TextureSequence& sequence) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "keyframes", ec);
    std::filesystem::create_directories(dir / "frames", ec);
    require(!ec, ErrorCode::IoError, "cannot create " + dir.string());
    for (std::size_t k = 0; k < sequence.keyframes.size(); ++k) {
        const FinalTexture& key = sequence.keyframes[k];
        save_grid(dir / "keyframes" / numbered("key_%04zu.grid", k), key.values);
        write_png(dir / "keyframes" / numbered("key_%04zu.png", k), key.values);
        Grid status(1, key.values.height(), key.values.width());
        for (std::size_t i = 0; i < key.status.size(); ++i) {
            status[i] = static_cast<float>(key.status[i]);
        }
        save_grid(dir / "keyframes" / numbered("status_%04zu.grid", k), status);
        write_png(dir / "keyframes" / numbered("status_%04zu.png", k), status, 0.0f, 3.0f);
    }
    for (std::size_t f = 0; f < sequence.frames.size(); ++f) {
        save_grid(dir / "frames" / numbered("frame_%04zu.grid", f), sequence.frames[f]);
        write_png(dir / "frames" / numbered("frame_%04zu.png", f), sequence.frames[f]);
    }
    std::ofstream out(dir / "sequence.json");
    require(static_cast<bool>(out), ErrorCode::IoError, "cannot write sequence.json");
    out << json{{"keyframes", sequence.keyframes.size()}, {"frames", sequence.frames.size()},
                {"interval", sequence.interval}}
               .dump(2)
        << '\n';
}

TextureSequence load_texture_sequence(const std::filesystem::path& dir) {
    std::ifstream in(dir / "sequence.json");
    require(static_cast<bool>(in), ErrorCode::IoError, "no sequence.json in " + dir.string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        fail(ErrorCode::IoError, std::string("malformed sequence.json: ") + e.what());
    }
    TextureSequence seq;
    seq.interval = meta.value("interval", 1);
    const std::size_t keys = meta.value("keyframes", std::size_t{0});
    const std::size_t frames = meta.value("frames", std::size_t{0});
    for (std::size_t k = 0; k < keys; ++k) {
        FinalTexture key;
        key.values = load_grid(dir / "keyframes" / numbered("key_%04zu.grid", k));
        const Grid status = load_grid(dir / "keyframes" / numbered("status_%04zu.grid", k));
        require(status.size() == key.values.plane_size(), ErrorCode::IoError, "status grid size mismatch");
        for (std::size_t i = 0; i < status.size(); ++i) {
            const int code = static_cast<int>(status[i]);
            require(code >= 0 && code <= 3 && status[i] == static_cast<float>(code), ErrorCode::IoError,
                    "invalid texel status in " + dir.string());
            key.status.push_back(static_cast<TexelStatus>(code));
        }
        key.frame_index = static_cast<int>(k);
        seq.keyframes.push_back(std::move(key));
    }
    for (std::size_t f = 0; f < frames; ++f) {
        seq.frames.push_back(load_grid(dir / "frames" / numbered("frame_%04zu.grid", f)));
    }
    seq.validate();
    return seq;
}

void write_manifest(const std::filesystem::path& path, const PipelineConfig& config, const TextureSequence& sequence,
                    const std::string& extra_json) {
    json extra;
    try {
        extra = json::parse(extra_json);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("manifest extra is not JSON: ") + e.what());
    }
    const json manifest{{"version", version_string()},
                        {"seed", config.seed},
                        {"config", config.to_text()},
                        {"keyframes", sequence.keyframes.size()},
                        {"frames", sequence.frames.size()},
                        {"interval", sequence.interval},
                        {"extra", extra}};
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
    out << manifest.dump(2) << '\n';
}

const char* version_string() noexcept {
    return UVSYNC_VERSION;
}

} // namespace uvsync
