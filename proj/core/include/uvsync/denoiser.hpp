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

#ifndef UVSYNC_DENOISER_HPP
#define UVSYNC_DENOISER_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uvsync/geometry.hpp"
#include "uvsync/grid.hpp"
#include "uvsync/raster.hpp"
#include "uvsync/schedule.hpp"

namespace uvsync {

/// One joint denoising call for all keyframes of a single view.
struct DenoiseRequest {
    int view_id = 0;
    int timestep = 0;        // sampling step t in [1, T]
    int model_timestep = 0;  // t mapped onto the backbone's training timeline
    double alpha_bar = 0.0;
    bool background = false;  // depth conditions are all far
    std::vector<Grid> latents;  // K frames, C x H x W
    std::vector<Grid> depths;   // K frames, 1 x H x W, +inf on background
    std::string prompt;
    std::map<std::string, std::string> guidance;  // passed through untouched

    int frame_count() const noexcept { return static_cast<int>(latents.size()); }
    /// Throws InvalidArgument / ShapeMismatch.
    void validate() const;
};

struct DenoiseResponse {
    PredictionKind kind = PredictionKind::X0;
    std::vector<Grid> frames;
};

/// Declared once, at construction or handshake.
struct DenoiserInfo {
    PredictionKind kind = PredictionKind::X0;
    /// Safe to call denoise() from several threads at once.
    bool concurrent = false;
    std::string name;
};

class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual DenoiserInfo info() const = 0;
    virtual DenoiseResponse denoise(const DenoiseRequest& request) = 0;
};

/// Calls the backend and enforces the response contract: declared kind,
/// frame count, per-frame shape and finite values. Backends are not trusted.
DenoiseResponse checked_denoise(Denoiser& denoiser, const DenoiseRequest& request);

/// Returns ground-truth target textures rendered into the requesting view as
/// clean estimates, ignoring the latents.
class OracleDenoiser final : public Denoiser {
public:
    OracleDenoiser(std::vector<Grid> targets, const MeshSequence& meshes, const CameraRig& rig,
                   Resolution resolution, const RasterOptions& raster = {});

    DenoiserInfo info() const override { return {PredictionKind::X0, true, "oracle"}; }
    DenoiseResponse denoise(const DenoiseRequest& request) override;

    const Grid& target_render(int view, int frame) const;
    const std::vector<Grid>& targets() const noexcept { return targets_; }

private:
    std::vector<Grid> targets_;
    std::vector<std::vector<Grid>> renders_;  // [view][frame]
};

/// Adds i.i.d. Gaussian noise of std `sigma` to another denoiser's output,
/// seeded per (view, frame, timestep, background) so results are
/// reproducible regardless of call order.
class NoisyDenoiser final : public Denoiser {
public:
    NoisyDenoiser(std::shared_ptr<Denoiser> inner, double sigma, uint64_t seed);

    DenoiserInfo info() const override;
    DenoiseResponse denoise(const DenoiseRequest& request) override;

private:
    std::shared_ptr<Denoiser> inner_;
    double sigma_;
    uint64_t seed_;
};

/// Small deterministic model that actually reads its inputs:
/// pred = gain * tanh(z) + 0.1 * (c + 1) / (1 + depth), the depth term
/// dropping out on background pixels. Stands in for a network in the
/// reduction and transport tests.
class ToyDenoiser final : public Denoiser {
public:
    explicit ToyDenoiser(PredictionKind kind = PredictionKind::V, double gain = 0.5) : kind_(kind), gain_(gain) {}

    DenoiserInfo info() const override { return {kind_, true, "toy"}; }
    DenoiseResponse denoise(const DenoiseRequest& request) override;

    static Grid predict(const Grid& latent, const Grid& depth, double gain);

private:
    PredictionKind kind_;
    double gain_;
};

} // namespace uvsync

#endif // UVSYNC_DENOISER_HPP
