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

#ifndef UVSYNC_GRID_IO_HPP
#define UVSYNC_GRID_IO_HPP

#include <filesystem>
#include <span>
#include <string>

#include "uvsync/grid.hpp"
#include "uvsync/raster.hpp"

namespace uvsync {

// Raw grid files: one line of JSON, e.g.
//   {"dtype":"<f4","order":"C","shape":[3,512,512]}
// terminated by '\n', followed by little-endian float32 data in C order.

void save_grid(const std::filesystem::path& path, const Grid& grid);
Grid load_grid(const std::filesystem::path& path);

/// Writes channels 0..2 (or the single channel) as 8-bit PNG, mapping
/// [lo, hi] to [0, 255]; non-finite values become 0.
void write_png(const std::filesystem::path& path, const Grid& image, float lo = 0.0f, float hi = 1.0f);

/// Single-channel H x W plane.
void write_png(const std::filesystem::path& path, std::span<const float> plane, int width, int height,
               float lo = 0.0f, float hi = 1.0f);

/// Depth (normalised over the foreground), cosine and mask images plus raw
/// grids, named `<prefix>_depth.png` and so on.
void dump_buffers(const std::filesystem::path& directory, const std::string& prefix, const RenderBuffers& buffers);

} // namespace uvsync

#endif // UVSYNC_GRID_IO_HPP
