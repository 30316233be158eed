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

#ifndef UVSYNC_CONFIG_HPP
#define UVSYNC_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "uvsync/geometry.hpp"
#include "uvsync/schedule.hpp"
#include "uvsync/uvdiff.hpp"

namespace uvsync {

struct PipelineConfig {
    // Sampling
    int steps = 50;
    ScheduleKind schedule = ScheduleKind::LinearBeta;
    ScheduleParams schedule_params;
    AggregationMode mode = AggregationMode::Proposed;
    uint64_t seed = 0;
    std::string prompt;
    bool background = true;

    // Cameras
    int azimuth_views = 6;
    bool top_view = true;
    double top_azimuth_deg = 30.0;
    double top_elevation_deg = 45.0;
    double camera_radius = 2.5;
    double fov_deg = 40.0;

    // Resolutions
    int channels = 3;
    int latent_resolution = 96;
    int uv_resolution = 512;
    int final_resolution = 0;  // 0: same as uv_resolution
    int supersample = 2;

    // UV synchronisation
    double lambda = 0.2;
    double cosine_exponent = 3.0;
    double cos_min = 0.1;
    double depth_tolerance = 1e-3;
    int dilation = 2;

    // Output
    int keyframe_interval = 3;
    int threads = 0;
    std::string checkpoint_dir;

    // Denoiser selection: oracle | noisy-oracle | toy | remote:HOST:PORT
    std::string denoiser = "oracle";
    std::string oracle_target = "smooth";
    double noise_sigma = 0.05;

    void validate() const;
    AggregationConfig aggregation() const { return {cosine_exponent, cos_min}; }
    RigOptions rig_options() const;
    CameraRig make_rig() const;
    int effective_final_resolution() const { return final_resolution > 0 ? final_resolution : uv_resolution; }

    /// `key = value` lines, '#' comments, optional quotes around strings.
    std::string to_text() const;
    static PipelineConfig from_text(std::string_view text);
    static PipelineConfig load(const std::filesystem::path& path);
};

} // namespace uvsync

#endif // UVSYNC_CONFIG_HPP
