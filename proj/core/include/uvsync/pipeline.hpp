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

#ifndef UVSYNC_PIPELINE_HPP
#define UVSYNC_PIPELINE_HPP

#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "uvsync/config.hpp"
#include "uvsync/denoiser.hpp"
#include "uvsync/geometry.hpp"
#include "uvsync/grid.hpp"
#include "uvsync/raster.hpp"
#include "uvsync/schedule.hpp"
#include "uvsync/uvdiff.hpp"

namespace uvsync {

/// Sampling state at step t: one UV latent per keyframe and one background
/// latent per (view, keyframe). Also the on-disk checkpoint contents.
struct DiffusionState {
    int t = 0;
    std::vector<Grid> textures;                 // [frame], C x R x R
    std::vector<std::vector<Grid>> backgrounds;  // [view][frame], C x H x W
};

/// Handed to the observer after each step t -> t - 1.
struct StepSnapshot {
    int t = 0;
    double seconds = 0.0;
    const std::vector<LatentTexture>& textures;             // T_{t-1}
    const std::vector<LatentTexture>& x0_hats;              // baked clean estimates at t
    const std::vector<std::vector<Grid>>& view_latents;     // composited z_{t-1}, [view][frame]
};
using StepObserver = std::function<void(const StepSnapshot&)>;

struct DiffusionResult {
    std::vector<LatentTexture> textures;               // T_0
    std::vector<LatentTexture> x0_hats;                // estimates from the last step
    std::vector<std::vector<Grid>> foreground;         // render of T_0 with uncovered texels cleared, [view][frame]
    std::vector<std::vector<Grid>> view_latents;       // composited z_0
    std::vector<std::vector<Grid>> backgrounds;        // z_b,0
};

/// Algorithm state that does not change across steps: schedule, per-view
/// render buffers, the UV layout and the unprojection plans.
class Pipeline {
public:
    Pipeline(const MeshSequence& meshes, CameraRig rig, PipelineConfig config);

    const PipelineConfig& config() const noexcept { return config_; }
    const NoiseSchedule& schedule() const noexcept { return schedule_; }
    const CameraRig& rig() const noexcept { return rig_; }
    int view_count() const noexcept { return rig_.size(); }
    int frame_count() const noexcept { return meshes_->frame_count(); }
    const RenderBuffers& buffers(int view, int frame) const;
    const UnprojectPlan& plan(int view, int frame) const;
    const UvLayout& layout() const noexcept { return layout_; }

    /// T_T and background noise drawn from the configured seed.
    DiffusionState initial_state() const;

    /// Runs steps state.t .. 1. Without a state, starts from initial_state().
    DiffusionResult run(Denoiser& denoiser, const StepObserver& observer = {},
                        const DiffusionState* resume = nullptr) const;

    /// Composited view latents for a UV state.
    std::vector<std::vector<Grid>> render_views(std::span<const Grid> textures,
                                                const std::vector<std::vector<Grid>>& backgrounds) const;

private:
    const MeshSequence* meshes_;
    CameraRig rig_;
    PipelineConfig config_;
    NoiseSchedule schedule_;
    UvLayout layout_;
    std::vector<std::vector<RenderBuffers>> buffers_;  // [view][frame]
    std::vector<std::vector<UnprojectPlan>> plans_;
};

void save_checkpoint(const std::filesystem::path& dir, const DiffusionState& state);
/// Reads the state written for step t under `dir`.
DiffusionState load_checkpoint(const std::filesystem::path& dir, int t);
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int t);

// Finalization and export.

/// Maps a view's final latent to image space (a VAE decoder in a full
/// system). Any output resolution is allowed.
using Decoder = std::function<Grid(const Grid& latent, int view, int frame)>;

struct FinalTexture {
    Grid values;                      // C x R x R
    std::vector<TexelStatus> status;  // R x R
    int frame_index = 0;
};

struct TextureSequence {
    std::vector<FinalTexture> keyframes;
    /// Keyframes plus in-betweens; equals keyframes when interval == 1.
    std::vector<Grid> frames;
    int interval = 1;

    /// Throws InvalidArgument on non-finite values or inconsistent shapes.
    void validate() const;
};

struct FinalizeOptions {
    int resolution = 512;
    AggregationConfig aggregation;
    double depth_tolerance = 1e-3;
    int supersample = 2;
    int dilation = 2;
    Decoder decoder;  // empty: identity
};

/// Decodes the foreground render of T_0 in every view, bakes it at
/// `options.resolution` with the cosine-power weights and dilates gutters.
/// Decoder exceptions surface as BackendUnavailable.
TextureSequence finalize_textures(const MeshSequence& meshes, const CameraRig& rig, const DiffusionResult& result,
                                  const FinalizeOptions& options);

/// Linear per-texel interpolation between consecutive keyframes with
/// interval - 1 in-betweens; keyframes are copied unchanged.
TextureSequence interpolate_keyframes(TextureSequence sequence, int interval);
std::vector<Grid> interpolate_grids(std::span<const Grid> keys, int interval);
/// Vertex positions interpolated the same way, so every texture frame has a
/// matching mesh.
MeshSequence interpolate_meshes(const MeshSequence& meshes, int interval);

/// Procedural or file-backed target textures for the oracle denoisers:
/// "smooth" (linear in rest-pose position), "constant:V", "checker:N" or a
/// path to a .grid file. One texture per frame, identical across frames.
std::vector<Grid> make_targets(const std::string& source, const MeshSequence& meshes, int resolution, int channels);

/// Builds the denoiser named by config.denoiser.
std::shared_ptr<Denoiser> make_denoiser(const PipelineConfig& config, const MeshSequence& meshes,
                                        const CameraRig& rig);

/// Full run: diffusion, finalization and keyframe interpolation.
TextureSequence generate(const MeshSequence& meshes, const CameraRig& rig, const PipelineConfig& config,
                         Denoiser& denoiser, const StepObserver& observer = {}, const Decoder& decoder = {});

struct ConsistencyStats {
    int frame = 0;
    std::size_t texels = 0;  // seen by at least two views
    double mean_std = 0.0;
    double max_std = 0.0;
};

/// Renders `texture` into each view, unprojects every render back to UV and
/// reports the per-texel std across views with cosine >= cos_min.
ConsistencyStats cross_view_consistency(const MeshFrame& frame, const Grid& texture, const CameraRig& rig,
                                        double cos_min = 0.1, int supersample = 2);

struct RenderSequenceOptions {
    CameraRig consistency_rig;  // empty: skip the report
    double cos_min = 0.1;
    int supersample = 2;
};

/// Writes frame_NNNN.png (and .grid) for every frame of `sequence` seen from
/// `camera`, plus consistency.json when a rig is given. `meshes` holds either
/// the keyframes or one mesh per output frame.
std::vector<ConsistencyStats> render_sequence(const MeshSequence& meshes, const TextureSequence& sequence,
                                              const Camera& camera, const std::filesystem::path& out_dir,
                                              const RenderSequenceOptions& options = {});

/// keyframes/ and frames/ with .grid and .png files for each texture.
void save_texture_sequence(const std::filesystem::path& dir, const TextureSequence& sequence);
TextureSequence load_texture_sequence(const std::filesystem::path& dir);

/// manifest.json: config text, seed, library version and output counts.
void write_manifest(const std::filesystem::path& path, const PipelineConfig& config, const TextureSequence& sequence,
                    const std::string& extra_json = "{}");

const char* version_string() noexcept;

} // namespace uvsync

#endif // UVSYNC_PIPELINE_HPP
