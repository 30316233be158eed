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

#ifndef UVSYNC_UVDIFF_HPP
#define UVSYNC_UVDIFF_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "uvsync/grid.hpp"
#include "uvsync/raster.hpp"
#include "uvsync/schedule.hpp"

namespace uvsync {

/// A texel counts as visible in a frame once its accumulated view weight
/// exceeds this.
inline constexpr double kFillThreshold = 1e-6;

/// Per-frame UV-space latent with the accumulated view weight per texel.
struct LatentTexture {
    Grid values;                  // C x R x R
    std::vector<float> coverage;  // R x R, sum of view weights
    int frame_index = 0;

    int resolution() const noexcept { return values.height(); }
    bool covered(std::size_t texel) const noexcept { return coverage[texel] > kFillThreshold; }
    /// 0/1 indicator of covered texels.
    std::vector<float> visibility_mask() const;
};

/// Reference atlas assembled from the earliest frame that sees each texel.
struct ReferenceTexture {
    Grid values;                // C x R x R, zero where mask == 0
    std::vector<uint8_t> mask;  // R x R in {0, 1}
};

struct AggregationConfig {
    double cosine_exponent = 3.0;
    double cos_min = 0.1;

    void validate() const;
};

/// cos^alpha, or 0 below the cutoff.
double aggregation_weight(double cosine, const AggregationConfig& cfg);

/// Cosine-power weighted average of per-view partial textures. Views are
/// reduced in the given order with double accumulators, so the result does
/// not depend on how the partials were produced.
LatentTexture aggregate_views(std::span<const PartialTexture> partials, const AggregationConfig& cfg);

namespace ddim {
/// UV-space step with the noise rewritten in terms of the current texture
/// and the clean estimate:
/// sqrt(a_prev) * x0 + sqrt(1 - a_prev) * (sqrt(a/(1-a)) * (sqrt(a) * z - x0) + sqrt(1 - a) * z).
double uv_step(double z, double x0, double a, double a_prev);
} // namespace ddim

/// Applies `ddim::uv_step` on texels covered in `x0_hat`; other texels keep
/// the current value. Throws DegenerateTimestep when alpha_bar[t] == 1.
LatentTexture uv_ddim_step(const LatentTexture& current, const LatentTexture& x0_hat, int t,
                           const NoiseSchedule& sched);

/// Frames are visited in order; each fills only texels not yet taken.
ReferenceTexture build_reference(std::span<const LatentTexture> x0_hats, double fill_threshold = kFillThreshold);

/// ((1 - lambda) * T + lambda * ref) * M + ref * (1 - M) on texels the
/// reference owns. Texels the reference has never seen are left unchanged.
LatentTexture blend_with_reference(const LatentTexture& texture, const ReferenceTexture& ref,
                                   std::span<const float> frame_mask, double lambda);

/// fg * mask + bg * (1 - mask); the H x W mask broadcasts over channels.
Grid composite(const Grid& fg, const Grid& bg, std::span<const float> mask);

/// Which quantities are moved into UV space before each step.
enum class AggregationMode {
    Proposed,     // bake the clean estimate only, step in UV space with the rewritten noise
    AggX0AndEps,  // bake clean estimate and predicted noise, plain DDIM step in UV space
    AggZPrev,     // DDIM step per view, then bake z_{t-1}
};

std::string_view to_string(AggregationMode mode) noexcept;
AggregationMode parse_aggregation_mode(std::string_view text);

/// Covered: seen by a view in its own frame. Referenced: hidden in its own
/// frame and copied from the earliest keyframe that sees it.
enum class TexelStatus : uint8_t { Empty = 0, Covered = 1, Dilated = 2, Referenced = 3 };

/// Fills empty texels from the mean of their non-empty 8-neighbours,
/// `iterations` rings deep. Newly filled texels are marked Dilated.
void dilate(Grid& values, std::vector<TexelStatus>& status, int iterations);

} // namespace uvsync

#endif // UVSYNC_UVDIFF_HPP
