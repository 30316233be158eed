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

#include "uvsync/uvdiff.hpp"

#include <cmath>

#include "uvsync/error.hpp"

namespace uvsync {

std::vector<float> LatentTexture::visibility_mask() const {
    std::vector<float> mask(coverage.size());
    for (std::size_t i = 0; i < coverage.size(); ++i) {
        mask[i] = covered(i) ? 1.0f : 0.0f;
    }
    return mask;
}

void AggregationConfig::validate() const {
    require(cosine_exponent > 0.0, ErrorCode::InvalidArgument, "cosine exponent must be > 0");
    require(cos_min >= 0.0 && cos_min < 1.0, ErrorCode::InvalidArgument, "cos_min must be in [0, 1)");
}

double aggregation_weight(double cosine, const AggregationConfig& cfg) {
    if (!(cosine > 0.0) || cosine < cfg.cos_min) {
        return 0.0;
    }
    return std::pow(cosine, cfg.cosine_exponent);
}

LatentTexture aggregate_views(std::span<const PartialTexture> partials, const AggregationConfig& cfg) {
    cfg.validate();
    require(!partials.empty(), ErrorCode::InvalidArgument, "aggregation needs at least one view");
    const Grid& first = partials.front().values;
    for (const auto& p : partials) {
        require_same_shape(p.values, first, "aggregate_views");
        require(p.weight.size() == first.plane_size(), ErrorCode::ShapeMismatch, "aggregate_views: weight plane");
    }
    const int channels = first.channels();
    const std::size_t plane = first.plane_size();

    LatentTexture out{Grid(channels, first.height(), first.width()), std::vector<float>(plane, 0.0f), 0};
    std::vector<double> acc(static_cast<std::size_t>(channels));
    for (std::size_t texel = 0; texel < plane; ++texel) {
        double wsum = 0.0;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (const auto& p : partials) {
            const double w = aggregation_weight(p.weight[texel], cfg);
            if (w == 0.0) {
                continue;
            }
            wsum += w;
            for (int c = 0; c < channels; ++c) {
                acc[c] += w * p.values[c * plane + texel];
            }
        }
        if (wsum <= 0.0) {
            continue;
        }
        for (int c = 0; c < channels; ++c) {
            out.values[c * plane + texel] = static_cast<float>(acc[c] / wsum);
        }
        out.coverage[texel] = static_cast<float>(wsum);
    }
    return out;
}

double ddim::uv_step(double z, double x0, double a, double a_prev) {
    const double eps = std::sqrt(a / (1.0 - a)) * (std::sqrt(a) * z - x0) + std::sqrt(1.0 - a) * z;
    return std::sqrt(a_prev) * x0 + std::sqrt(1.0 - a_prev) * eps;
}

LatentTexture uv_ddim_step(const LatentTexture& current, const LatentTexture& x0_hat, int t,
                           const NoiseSchedule& sched) {
    require_same_shape(current.values, x0_hat.values, "uv_ddim_step");
    require(x0_hat.coverage.size() == x0_hat.values.plane_size(), ErrorCode::ShapeMismatch,
            "uv_ddim_step: coverage plane");
    const double a = sched.at(t);
    if (a >= 1.0) {
        fail(ErrorCode::DegenerateTimestep, "UV step undefined where alpha_bar == 1");
    }
    const double a_prev = sched.at(t - 1);
    LatentTexture out = current;
    out.coverage = x0_hat.coverage;
    const std::size_t plane = current.values.plane_size();
    for (std::size_t texel = 0; texel < plane; ++texel) {
        if (!x0_hat.covered(texel)) {
            continue;
        }
        for (int c = 0; c < current.values.channels(); ++c) {
            const std::size_t i = c * plane + texel;
            out.values[i] = static_cast<float>(ddim::uv_step(current.values[i], x0_hat.values[i], a, a_prev));
        }
    }
    return out;
}

ReferenceTexture build_reference(std::span<const LatentTexture> x0_hats, double fill_threshold) {
    require(!x0_hats.empty(), ErrorCode::InvalidArgument, "reference needs at least one frame");
    const Grid& first = x0_hats.front().values;
    const std::size_t plane = first.plane_size();
    ReferenceTexture ref{Grid(first.channels(), first.height(), first.width()), std::vector<uint8_t>(plane, 0)};
    for (const auto& frame : x0_hats) {
        require_same_shape(frame.values, first, "build_reference");
        require(frame.coverage.size() == plane, ErrorCode::ShapeMismatch, "build_reference: coverage plane");
        for (std::size_t texel = 0; texel < plane; ++texel) {
            if (ref.mask[texel] || !(frame.coverage[texel] > fill_threshold)) {
                continue;
            }
            ref.mask[texel] = 1;
            for (int c = 0; c < first.channels(); ++c) {
                ref.values[c * plane + texel] = frame.values[c * plane + texel];
            }
        }
    }
    return ref;
}

LatentTexture blend_with_reference(const LatentTexture& texture, const ReferenceTexture& ref,
                                   std::span<const float> frame_mask, double lambda) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::InvalidArgument, "lambda must be in [0, 1]");
    require_same_shape(texture.values, ref.values, "blend_with_reference");
    const std::size_t plane = texture.values.plane_size();
    require(frame_mask.size() == plane && ref.mask.size() == plane, ErrorCode::ShapeMismatch,
            "blend_with_reference: mask plane");
    LatentTexture out = texture;
    for (std::size_t texel = 0; texel < plane; ++texel) {
        if (!ref.mask[texel]) {
            continue;
        }
        const double m = frame_mask[texel];
        for (int c = 0; c < texture.values.channels(); ++c) {
            const std::size_t i = c * plane + texel;
            const double cur = texture.values[i];
            const double r = ref.values[i];
            out.values[i] = static_cast<float>(((1.0 - lambda) * cur + lambda * r) * m + r * (1.0 - m));
        }
    }
    return out;
}

Grid composite(const Grid& fg, const Grid& bg, std::span<const float> mask) {
    require_same_shape(fg, bg, "composite");
    const std::size_t plane = fg.plane_size();
    require(mask.size() == plane, ErrorCode::ShapeMismatch, "composite: mask plane");
    Grid out(fg.channels(), fg.height(), fg.width());
    for (int c = 0; c < fg.channels(); ++c) {
        for (std::size_t p = 0; p < plane; ++p) {
            const std::size_t i = c * plane + p;
            const double m = mask[p];
            out[i] = static_cast<float>(static_cast<double>(fg[i]) * m + static_cast<double>(bg[i]) * (1.0 - m));
        }
    }
    return out;
}

std::string_view to_string(AggregationMode mode) noexcept {
    switch (mode) {
    case AggregationMode::Proposed: return "proposed";
    case AggregationMode::AggX0AndEps: return "agg-x0-eps";
    case AggregationMode::AggZPrev: return "agg-zprev";
    }
    return "proposed";
}

AggregationMode parse_aggregation_mode(std::string_view text) {
    if (text == "proposed") return AggregationMode::Proposed;
    if (text == "agg-x0-eps" || text == "agg_x0_and_eps") return AggregationMode::AggX0AndEps;
    if (text == "agg-zprev" || text == "agg_z_prev") return AggregationMode::AggZPrev;
    fail(ErrorCode::InvalidArgument, "unknown aggregation mode '" + std::string(text) + "'");
}

void dilate(Grid& values, std::vector<TexelStatus>& status, int iterations) {
    const int h = values.height();
    const int w = values.width();
    const std::size_t plane = values.plane_size();
    require(status.size() == plane, ErrorCode::ShapeMismatch, "dilate: status plane");
    std::vector<double> acc(static_cast<std::size_t>(values.channels()));
    for (int it = 0; it < iterations; ++it) {
        const std::vector<TexelStatus> before = status;
        const Grid snapshot = values;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t texel = static_cast<std::size_t>(y) * w + x;
                if (before[texel] != TexelStatus::Empty) {
                    continue;
                }
                int n = 0;
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) {
                            continue;
                        }
                        const std::size_t nt = static_cast<std::size_t>(ny) * w + nx;
                        if (before[nt] == TexelStatus::Empty) {
                            continue;
                        }
                        ++n;
                        for (int c = 0; c < values.channels(); ++c) {
                            acc[c] += snapshot[c * plane + nt];
                        }
                    }
                }
                if (n == 0) {
                    continue;
                }
                for (int c = 0; c < values.channels(); ++c) {
                    values[c * plane + texel] = static_cast<float>(acc[c] / n);
                }
                status[texel] = TexelStatus::Dilated;
            }
        }
    }
}

} // namespace uvsync
