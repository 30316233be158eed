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

#include "uvsync/schedule.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uvsync/error.hpp"
#include "uvsync/math.hpp"

namespace uvsync {

using json = nlohmann::json;

std::string_view to_string(ScheduleKind kind) noexcept {
    return kind == ScheduleKind::Cosine ? "cosine" : "linear-beta";
}

ScheduleKind parse_schedule_kind(std::string_view text) {
    if (text == "linear-beta" || text == "linear") return ScheduleKind::LinearBeta;
    if (text == "cosine") return ScheduleKind::Cosine;
    fail(ErrorCode::InvalidArgument, "unknown schedule kind '" + std::string(text) + "'");
}

std::string_view to_string(PredictionKind kind) noexcept {
    switch (kind) {
    case PredictionKind::Epsilon: return "epsilon";
    case PredictionKind::V: return "v";
    case PredictionKind::X0: return "x0";
    }
    return "x0";
}

PredictionKind parse_prediction_kind(std::string_view text) {
    if (text == "epsilon" || text == "eps") return PredictionKind::Epsilon;
    if (text == "v") return PredictionKind::V;
    if (text == "x0") return PredictionKind::X0;
    fail(ErrorCode::InvalidArgument, "unknown prediction kind '" + std::string(text) + "'");
}

NoiseSchedule::NoiseSchedule(ScheduleKind kind, ScheduleParams params, std::vector<double> alpha_bar)
    : kind_(kind), params_(params), alpha_bar_(std::move(alpha_bar)) {
    require(alpha_bar_.size() >= 2, ErrorCode::InvalidArgument, "schedule needs T >= 1");
    require(alpha_bar_[0] == 1.0, ErrorCode::InvalidArgument, "alpha_bar[0] must be exactly 1");
    for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
        require(alpha_bar_[t] > 0.0 && alpha_bar_[t] < alpha_bar_[t - 1], ErrorCode::InvalidArgument,
                "alpha_bar must be strictly decreasing and positive (t = " + std::to_string(t) + ")");
    }
}

double NoiseSchedule::at(int t) const {
    require(t >= 0 && t <= steps(), ErrorCode::InvalidArgument,
            "timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) + "]");
    return alpha_bar_[static_cast<std::size_t>(t)];
}

int NoiseSchedule::model_timestep(int t) const {
    at(t);
    const int span = kind_ == ScheduleKind::LinearBeta ? params_.virtual_steps : 1000;
    return static_cast<int>(std::lround(static_cast<double>(t) * span / steps()));
}

std::string NoiseSchedule::to_text() const {
    json j;
    j["steps"] = steps();
    j["kind"] = std::string(to_string(kind_));
    j["params"] = {{"beta_start", params_.beta_start},
                   {"beta_end", params_.beta_end},
                   {"virtual_steps", params_.virtual_steps},
                   {"cosine_offset", params_.cosine_offset}};
    j["alpha_bar"] = alpha_bar_;
    return j.dump(2) + "\n";
}

NoiseSchedule NoiseSchedule::from_text(std::string_view text) {
    try {
        const json j = json::parse(text);
        ScheduleParams p;
        const auto& jp = j.at("params");
        p.beta_start = jp.value("beta_start", p.beta_start);
        p.beta_end = jp.value("beta_end", p.beta_end);
        p.virtual_steps = jp.value("virtual_steps", p.virtual_steps);
        p.cosine_offset = jp.value("cosine_offset", p.cosine_offset);
        auto alpha_bar = j.at("alpha_bar").get<std::vector<double>>();
        require(static_cast<int>(alpha_bar.size()) == j.at("steps").get<int>() + 1, ErrorCode::InvalidArgument,
                "schedule length does not match steps");
        return NoiseSchedule(parse_schedule_kind(j.at("kind").get<std::string>()), p, std::move(alpha_bar));
    } catch (const json::exception& e) {
        fail(ErrorCode::IoError, std::string("malformed schedule: ") + e.what());
    }
}

void NoiseSchedule::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << to_text();
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
}

NoiseSchedule NoiseSchedule::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

NoiseSchedule make_schedule(int steps, ScheduleKind kind, const ScheduleParams& params) {
    require(steps >= 1, ErrorCode::InvalidArgument, "schedule needs T >= 1");
    std::vector<double> alpha_bar(static_cast<std::size_t>(steps) + 1, 1.0);
    if (kind == ScheduleKind::LinearBeta) {
        const int n = params.virtual_steps;
        require(n >= steps, ErrorCode::InvalidArgument, "T may not exceed the virtual step count");
        require(params.beta_start > 0.0 && params.beta_end < 1.0 && params.beta_start <= params.beta_end,
                ErrorCode::InvalidArgument, "beta range must satisfy 0 < start <= end < 1");
        std::vector<double> cumulative(static_cast<std::size_t>(n) + 1, 1.0);
        for (int i = 1; i <= n; ++i) {
            const double beta =
                n == 1 ? params.beta_start
                       : params.beta_start + (params.beta_end - params.beta_start) * (i - 1) / (n - 1);
            cumulative[i] = cumulative[i - 1] * (1.0 - beta);
        }
        for (int t = 1; t <= steps; ++t) {
            alpha_bar[t] = cumulative[static_cast<std::size_t>(std::lround(static_cast<double>(t) * n / steps))];
        }
    } else {
        const double s = params.cosine_offset;
        require(s >= 0.0, ErrorCode::InvalidArgument, "cosine offset must be >= 0");
        auto f = [s](double x) {
            const double c = std::cos((x + s) / (1.0 + s) * kPi / 2.0);
            return c * c;
        };
        const double f0 = f(0.0);
        for (int t = 1; t <= steps; ++t) {
            const double target = f(static_cast<double>(t) / steps) / f0;
            const double beta = std::min(1.0 - target / alpha_bar[t - 1], 0.999);
            alpha_bar[t] = alpha_bar[t - 1] * (1.0 - beta);
        }
    }
    return NoiseSchedule(kind, params, std::move(alpha_bar));
}

namespace ddim {

double x0_from_eps(double z, double eps, double a) { return (z - std::sqrt(1.0 - a) * eps) / std::sqrt(a); }

double x0_from_v(double z, double v, double a) { return std::sqrt(a) * z - std::sqrt(1.0 - a) * v; }

double eps_from_v(double z, double v, double a) { return std::sqrt(a) * v + std::sqrt(1.0 - a) * z; }

double step(double x0, double eps, double a_prev) { return std::sqrt(a_prev) * x0 + std::sqrt(1.0 - a_prev) * eps; }

double implied_eps(double z, double x0, double a) {
    return std::sqrt(a / (1.0 - a)) * (std::sqrt(a) * z - x0) + std::sqrt(1.0 - a) * z;
}

double implied_eps_direct(double z, double x0, double a) { return (z - std::sqrt(a) * x0) / std::sqrt(1.0 - a); }

} // namespace ddim

namespace {

void check_step(int t, const NoiseSchedule& sched) {
    require(t >= 1 && t <= sched.steps(), ErrorCode::InvalidArgument,
            "timestep " + std::to_string(t) + " outside [1, " + std::to_string(sched.steps()) + "]");
}

template <typename F>
Grid elementwise(const Grid& a, const Grid& b, const char* what, F&& f) {
    require_same_shape(a, b, what);
    Grid out(a.channels(), a.height(), a.width());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = static_cast<float>(f(static_cast<double>(a[i]), static_cast<double>(b[i])));
    }
    return out;
}

} // namespace

Grid x0_from_eps(const Grid& z_t, const Grid& eps, int t, const NoiseSchedule& sched) {
    check_step(t, sched);
    const double a = sched.at(t);
    return elementwise(z_t, eps, "x0_from_eps", [a](double z, double e) { return ddim::x0_from_eps(z, e, a); });
}

Grid x0_from_v(const Grid& z_t, const Grid& v, int t, const NoiseSchedule& sched) {
    check_step(t, sched);
    const double a = sched.at(t);
    return elementwise(z_t, v, "x0_from_v", [a](double z, double vv) { return ddim::x0_from_v(z, vv, a); });
}

Grid eps_from_v(const Grid& z_t, const Grid& v, int t, const NoiseSchedule& sched) {
    check_step(t, sched);
    const double a = sched.at(t);
    return elementwise(z_t, v, "eps_from_v", [a](double z, double vv) { return ddim::eps_from_v(z, vv, a); });
}

Grid ddim_step(const Grid& x0, const Grid& eps, int t, const NoiseSchedule& sched) {
    check_step(t, sched);
    const double a_prev = sched.at(t - 1);
    return elementwise(x0, eps, "ddim_step", [a_prev](double x, double e) { return ddim::step(x, e, a_prev); });
}

Grid implied_eps(const Grid& z_t, const Grid& x0, int t, const NoiseSchedule& sched) {
    const double a = sched.at(t);
    if (a >= 1.0) {
        fail(ErrorCode::DegenerateTimestep, "implied noise undefined where alpha_bar == 1");
    }
    return elementwise(z_t, x0, "implied_eps", [a](double z, double x) { return ddim::implied_eps(z, x, a); });
}

Grid to_x0(const Prediction& prediction, const Grid& z_t, int t, const NoiseSchedule& sched) {
    switch (prediction.kind) {
    case PredictionKind::X0:
        require_same_shape(prediction.tensor, z_t, "to_x0");
        return prediction.tensor;
    case PredictionKind::V: return x0_from_v(z_t, prediction.tensor, t, sched);
    case PredictionKind::Epsilon: return x0_from_eps(z_t, prediction.tensor, t, sched);
    }
    return prediction.tensor;
}

Decomposition decompose(const Prediction& prediction, const Grid& z_t, int t, const NoiseSchedule& sched) {
    switch (prediction.kind) {
    case PredictionKind::X0: {
        require_same_shape(prediction.tensor, z_t, "decompose");
        return {prediction.tensor, implied_eps(z_t, prediction.tensor, t, sched)};
    }
    case PredictionKind::V:
        return {x0_from_v(z_t, prediction.tensor, t, sched), eps_from_v(z_t, prediction.tensor, t, sched)};
    case PredictionKind::Epsilon:
        return {x0_from_eps(z_t, prediction.tensor, t, sched), prediction.tensor};
    }
    return {};
}

} // namespace uvsync
