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

#ifndef UVSYNC_TEST_UTIL_HPP
#define UVSYNC_TEST_UTIL_HPP

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "uvsync/geometry.hpp"
#include "uvsync/grid.hpp"
#include "uvsync/raster.hpp"

namespace uvsync::testing {

inline Grid random_grid(int c, int h, int w, std::mt19937_64& rng, double sigma = 1.0) {
    std::normal_distribution<double> normal(0.0, sigma);
    Grid g(c, h, w);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = static_cast<float>(normal(rng));
    }
    return g;
}

inline double max_abs_diff(const Grid& a, const Grid& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(static_cast<double>(a[i]) - b[i]));
    }
    return worst;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("uvsync_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Surface point under a texel centre, from the UV layout.
inline Vec3 texel_position(const MeshFrame& frame, const UvLayout& layout, std::size_t texel) {
    const auto& t = layout.texels[texel];
    const Face& f = frame.faces[t.triangle];
    return frame.positions[f.position[0]] * (1.0 - t.b1 - t.b2) + frame.positions[f.position[1]] * t.b1 +
           frame.positions[f.position[2]] * t.b2;
}

/// Camera on +Z at `distance` whose field of view exactly frames a
/// [-half, half]^2 square at z = 0.
inline Camera framing_camera(double half, double distance, int size) {
    Camera cam;
    cam.position = {0.0, 0.0, distance};
    cam.vertical_fov = 2.0 * std::atan(half / distance);
    cam.resolution = {size, size};
    return cam;
}

inline double rms(const std::vector<double>& errors) {
    double s = 0.0;
    for (double e : errors) {
        s += e * e;
    }
    return errors.empty() ? 0.0 : std::sqrt(s / static_cast<double>(errors.size()));
}

} // namespace uvsync::testing

#endif // UVSYNC_TEST_UTIL_HPP
