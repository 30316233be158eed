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

#include "uvsync/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "uvsync/error.hpp"

namespace uvsync {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

int parse_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size(), ErrorCode::InvalidArgument,
            "config key '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size(), ErrorCode::InvalidArgument,
            "config key '" + key + "' expects an unsigned integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used == v.size()) {
            return out;
        }
    } catch (const std::exception&) {
    }
    fail(ErrorCode::InvalidArgument, "config key '" + key + "' expects a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    fail(ErrorCode::InvalidArgument, "config key '" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Field {
    const char* key;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define UVSYNC_INT(name) \
    Field{#name, [](PipelineConfig& c, const std::string& v) { c.name = parse_int(#name, v); }, \
          [](const PipelineConfig& c) { return std::to_string(c.name); }}
#define UVSYNC_DOUBLE(name) \
    Field{#name, [](PipelineConfig& c, const std::string& v) { c.name = parse_double(#name, v); }, \
          [](const PipelineConfig& c) { return fmt(c.name); }}
#define UVSYNC_BOOL(name) \
    Field{#name, [](PipelineConfig& c, const std::string& v) { c.name = parse_bool(#name, v); }, \
          [](const PipelineConfig& c) { return std::string(c.name ? "true" : "false"); }}
#define UVSYNC_STRING(name) \
    Field{#name, [](PipelineConfig& c, const std::string& v) { c.name = v; }, \
          [](const PipelineConfig& c) { return "\"" + c.name + "\""; }}

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        UVSYNC_INT(steps),
        Field{"schedule", [](PipelineConfig& c, const std::string& v) { c.schedule = parse_schedule_kind(v); },
              [](const PipelineConfig& c) { return "\"" + std::string(to_string(c.schedule)) + "\""; }},
        Field{"beta_start", [](PipelineConfig& c, const std::string& v) {
                  c.schedule_params.beta_start = parse_double("beta_start", v); },
              [](const PipelineConfig& c) { return fmt(c.schedule_params.beta_start); }},
        Field{"beta_end", [](PipelineConfig& c, const std::string& v) {
                  c.schedule_params.beta_end = parse_double("beta_end", v); },
              [](const PipelineConfig& c) { return fmt(c.schedule_params.beta_end); }},
        Field{"virtual_steps", [](PipelineConfig& c, const std::string& v) {
                  c.schedule_params.virtual_steps = parse_int("virtual_steps", v); },
              [](const PipelineConfig& c) { return std::to_string(c.schedule_params.virtual_steps); }},
        Field{"cosine_offset", [](PipelineConfig& c, const std::string& v) {
                  c.schedule_params.cosine_offset = parse_double("cosine_offset", v); },
              [](const PipelineConfig& c) { return fmt(c.schedule_params.cosine_offset); }},
        Field{"mode", [](PipelineConfig& c, const std::string& v) { c.mode = parse_aggregation_mode(v); },
              [](const PipelineConfig& c) { return "\"" + std::string(to_string(c.mode)) + "\""; }},
        Field{"seed", [](PipelineConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); },
              [](const PipelineConfig& c) { return std::to_string(c.seed); }},
        UVSYNC_STRING(prompt),
        UVSYNC_BOOL(background),
        UVSYNC_INT(azimuth_views),
        UVSYNC_BOOL(top_view),
        UVSYNC_DOUBLE(top_azimuth_deg),
        UVSYNC_DOUBLE(top_elevation_deg),
        UVSYNC_DOUBLE(camera_radius),
        UVSYNC_DOUBLE(fov_deg),
        UVSYNC_INT(channels),
        UVSYNC_INT(latent_resolution),
        UVSYNC_INT(uv_resolution),
        UVSYNC_INT(final_resolution),
        UVSYNC_INT(supersample),
        UVSYNC_DOUBLE(lambda),
        UVSYNC_DOUBLE(cosine_exponent),
        UVSYNC_DOUBLE(cos_min),
        UVSYNC_DOUBLE(depth_tolerance),
        UVSYNC_INT(dilation),
        UVSYNC_INT(keyframe_interval),
        UVSYNC_INT(threads),
        UVSYNC_STRING(checkpoint_dir),
        UVSYNC_STRING(denoiser),
        UVSYNC_STRING(oracle_target),
        UVSYNC_DOUBLE(noise_sigma),
    };
    return table;
}

#undef UVSYNC_INT
#undef UVSYNC_DOUBLE
#undef UVSYNC_BOOL
#undef UVSYNC_STRING

} // namespace

void PipelineConfig::validate() const {
    auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::InvalidArgument, what); };
    check(steps >= 1, "steps must be >= 1");
    check(azimuth_views >= 0 && azimuth_views + (top_view ? 1 : 0) >= 1, "at least one view is required");
    check(camera_radius > 0.0, "camera_radius must be positive");
    check(fov_deg > 0.0 && fov_deg < 180.0, "fov_deg must be in (0, 180)");
    check(channels >= 1, "channels must be >= 1");
    check(latent_resolution >= 1, "latent_resolution must be >= 1");
    check(uv_resolution >= 1, "uv_resolution must be >= 1");
    check(final_resolution >= 0, "final_resolution must be >= 0");
    check(supersample >= 1, "supersample must be >= 1");
    check(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
    check(depth_tolerance >= 0.0, "depth_tolerance must be >= 0");
    check(dilation >= 0, "dilation must be >= 0");
    check(keyframe_interval >= 1, "keyframe_interval must be >= 1");
    check(threads >= 0, "threads must be >= 0");
    check(noise_sigma >= 0.0, "noise_sigma must be >= 0");
    aggregation().validate();
}

RigOptions PipelineConfig::rig_options() const {
    RigOptions options;
    options.vertical_fov = radians(fov_deg);
    options.resolution = {latent_resolution, latent_resolution};
    options.top_azimuth_deg = top_azimuth_deg;
    options.top_elevation_deg = top_elevation_deg;
    return options;
}

CameraRig PipelineConfig::make_rig() const {
    return default_rig(camera_radius, azimuth_views, top_view, rig_options());
}

std::string PipelineConfig::to_text() const {
    std::string out;
    for (const auto& f : fields()) {
        out += f.key;
        out += " = ";
        out += f.get(*this);
        out += '\n';
    }
    return out;
}

PipelineConfig PipelineConfig::from_text(std::string_view text) {
    PipelineConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Comments end the line unless inside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') {
                quoted = !quoted;
            } else if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const std::string body = trim(line);
        if (body.empty() || body.front() == '[') {
            continue;
        }
        const auto eq = body.find('=');
        require(eq != std::string::npos, ErrorCode::InvalidArgument,
                "config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = unquote(trim(std::string_view(body).substr(eq + 1)));
        bool known = false;
        for (const auto& f : fields()) {
            if (key == f.key) {
                f.set(config, value);
                known = true;
                break;
            }
        }
        require(known, ErrorCode::InvalidArgument,
                "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    config.validate();
    return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, "cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

} // namespace uvsync
