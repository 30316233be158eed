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

#include "uvsync/grid.hpp"

#include <algorithm>
#include <cmath>

#include "uvsync/error.hpp"

namespace uvsync {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UvMissing: return "UvMissing";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DegenerateTimestep: return "DegenerateTimestep";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    }
    return "Unknown";
}

Grid::Grid(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
    require(channels >= 0 && height >= 0 && width >= 0, ErrorCode::InvalidArgument,
            "grid dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::string Grid::shape_string() const {
    return std::to_string(channels_) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
}

void Grid::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Grid::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::ShapeMismatch,
             std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
    }
}

} // namespace uvsync
