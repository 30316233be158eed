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

#include "uvsync/denoiser.hpp"

#include <cmath>
#include <random>

#include "uvsync/error.hpp"

namespace uvsync {

void DenoiseRequest::validate() const {
    require(!latents.empty(), ErrorCode::InvalidArgument, "denoise request needs at least one frame");
    require(latents.size() == depths.size(), ErrorCode::InvalidArgument,
            "latent and depth frame counts differ");
    const Grid& first = latents.front();
    for (std::size_t k = 0; k < latents.size(); ++k) {
        require_same_shape(latents[k], first, "denoise request latents");
        require(depths[k].channels() == 1 && depths[k].height() == first.height() &&
                    depths[k].width() == first.width(),
                ErrorCode::ShapeMismatch, "depth condition does not match latent resolution");
    }
}

DenoiseResponse checked_denoise(Denoiser& denoiser, const DenoiseRequest& request) {
    request.validate();
    DenoiseResponse response = denoiser.denoise(request);
    const DenoiserInfo info = denoiser.info();
    require(response.kind == info.kind, ErrorCode::ShapeMismatch,
            "backend answered with prediction kind '" + std::string(to_string(response.kind)) + "', declared '" +
                std::string(to_string(info.kind)) + "'");
    require(response.frames.size() == request.latents.size(), ErrorCode::ShapeMismatch,
            "backend returned " + std::to_string(response.frames.size()) + " frames for a " +
                std::to_string(request.latents.size()) + "-frame request");
    for (std::size_t k = 0; k < response.frames.size(); ++k) {
        require_same_shape(response.frames[k], request.latents[k], "denoise response");
        require(response.frames[k].all_finite(), ErrorCode::InvalidArgument,
                "backend returned non-finite values");
    }
    return response;
}

OracleDenoiser::OracleDenoiser(std::vector<Grid> targets, const MeshSequence& meshes, const CameraRig& rig,
                               Resolution resolution, const RasterOptions& raster)
    : targets_(std::move(targets)) {
    require(static_cast<int>(targets_.size()) == meshes.frame_count(), ErrorCode::ShapeMismatch,
            "oracle needs one target texture per keyframe");
    for (const auto& t : targets_) {
        require(!t.empty() && t.all_finite(), ErrorCode::InvalidArgument, "oracle targets must be finite");
        require_same_shape(t, targets_.front(), "oracle targets");
    }
    renders_.resize(rig.cameras.size());
    for (std::size_t v = 0; v < rig.cameras.size(); ++v) {
        for (int k = 0; k < meshes.frame_count(); ++k) {
            const RenderBuffers buffers = render_buffers(meshes.frame(k), rig.cameras[v], resolution, raster);
            renders_[v].push_back(render_texture(targets_[k], buffers));
        }
    }
}

const Grid& OracleDenoiser::target_render(int view, int frame) const {
    return renders_.at(static_cast<std::size_t>(view)).at(static_cast<std::size_t>(frame));
}

DenoiseResponse OracleDenoiser::denoise(const DenoiseRequest& request) {
    request.validate();
    require(request.view_id >= 0 && request.view_id < static_cast<int>(renders_.size()),
            ErrorCode::InvalidArgument, "oracle has no view " + std::to_string(request.view_id));
    const auto& views = renders_[request.view_id];
    require(request.frame_count() == static_cast<int>(views.size()), ErrorCode::ShapeMismatch,
            "oracle frame count mismatch");
    DenoiseResponse out{PredictionKind::X0, {}};
    for (int k = 0; k < request.frame_count(); ++k) {
        require_same_shape(request.latents[k], views[k], "oracle request");
        out.frames.push_back(request.background ? Grid(views[k].channels(), views[k].height(), views[k].width())
                                                : views[k]);
    }
    return out;
}

NoisyDenoiser::NoisyDenoiser(std::shared_ptr<Denoiser> inner, double sigma, uint64_t seed)
    : inner_(std::move(inner)), sigma_(sigma), seed_(seed) {
    require(inner_ != nullptr, ErrorCode::InvalidArgument, "noisy denoiser needs an inner denoiser");
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument, "sigma must be >= 0");
}

DenoiserInfo NoisyDenoiser::info() const {
    DenoiserInfo i = inner_->info();
    i.name = "noisy-" + i.name;
    return i;
}

DenoiseResponse NoisyDenoiser::denoise(const DenoiseRequest& request) {
    DenoiseResponse out = inner_->denoise(request);
    if (sigma_ == 0.0) {
        return out;
    }
    for (std::size_t k = 0; k < out.frames.size(); ++k) {
        std::seed_seq seq{static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32),
                          static_cast<uint32_t>(request.view_id + 1), static_cast<uint32_t>(k),
                          static_cast<uint32_t>(request.timestep), static_cast<uint32_t>(request.background)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, sigma_);
        for (auto& v : out.frames[k].values()) {
            v = static_cast<float>(v + noise(rng));
        }
    }
    return out;
}

Grid ToyDenoiser::predict(const Grid& latent, const Grid& depth, double gain) {
    Grid out(latent.channels(), latent.height(), latent.width());
    const std::size_t plane = latent.plane_size();
    for (int c = 0; c < latent.channels(); ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
            const double d = depth[p];
            const double shade = std::isfinite(d) ? 0.1 * (c + 1) / (1.0 + d) : 0.0;
            out[c * plane + p] = static_cast<float>(gain * std::tanh(static_cast<double>(latent[c * plane + p])) + shade);
        }
    }
    return out;
}

DenoiseResponse ToyDenoiser::denoise(const DenoiseRequest& request) {
    request.validate();
    DenoiseResponse out{kind_, {}};
    for (int k = 0; k < request.frame_count(); ++k) {
        out.frames.push_back(predict(request.latents[k], request.depths[k], gain_));
    }
    return out;
}

} // namespace uvsync
