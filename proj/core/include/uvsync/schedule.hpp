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

#ifndef UVSYNC_SCHEDULE_HPP
#define UVSYNC_SCHEDULE_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "uvsync/grid.hpp"

namespace uvsync {

enum class ScheduleKind { LinearBeta, Cosine };

std::string_view to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(std::string_view text);

struct ScheduleParams {
    double beta_start = 8.5e-4;
    double beta_end = 0.012;
    int virtual_steps = 1000;
    double cosine_offset = 0.008;
};

/// Cumulative signal coefficients over T sampling steps. alpha_bar[0] == 1
/// exactly, so the final DDIM step lands on the clean estimate.
class NoiseSchedule {
public:
    /// Validates the invariants (strictly decreasing, values in (0, 1],
    /// alpha_bar[0] == 1); throws InvalidArgument.
    NoiseSchedule(ScheduleKind kind, ScheduleParams params, std::vector<double> alpha_bar);

    int steps() const noexcept { return static_cast<int>(alpha_bar_.size()) - 1; }
    ScheduleKind kind() const noexcept { return kind_; }
    const ScheduleParams& params() const noexcept { return params_; }
    const std::vector<double>& alpha_bar() const noexcept { return alpha_bar_; }

    /// alpha_bar at t in [0, T]; throws InvalidArgument outside.
    double at(int t) const;
    /// Index of t on the backbone's training timeline (0 for t = 0).
    int model_timestep(int t) const;

    std::string to_text() const;
    static NoiseSchedule from_text(std::string_view text);
    void save(const std::filesystem::path& path) const;
    static NoiseSchedule load(const std::filesystem::path& path);

private:
    ScheduleKind kind_;
    ScheduleParams params_;
    std::vector<double> alpha_bar_;
};

/// Linear-beta: betas linearly spaced over `virtual_steps` training steps,
/// cumulative product subsampled at round(t * virtual_steps / T).
/// Cosine: alpha_bar(t) = f(t/T) / f(0), f(x) = cos^2((x + s) / (1 + s) * pi/2),
/// with per-step beta clipped to 0.999.
NoiseSchedule make_schedule(int steps, ScheduleKind kind = ScheduleKind::LinearBeta, const ScheduleParams& params = {});

enum class PredictionKind { Epsilon, V, X0 };

std::string_view to_string(PredictionKind kind) noexcept;
PredictionKind parse_prediction_kind(std::string_view text);

struct Prediction {
    PredictionKind kind = PredictionKind::X0;
    Grid tensor;
};

// Scalar forms. `a` is alpha_bar at the current step, `a_prev` at t - 1.
namespace ddim {

double x0_from_eps(double z, double eps, double a);
double x0_from_v(double z, double v, double a);
double eps_from_v(double z, double v, double a);
double step(double x0, double eps, double a_prev);
/// sqrt(a / (1 - a)) * (sqrt(a) * z - x0) + sqrt(1 - a) * z.
double implied_eps(double z, double x0, double a);
/// (z - sqrt(a) * x0) / sqrt(1 - a); algebraically equal to implied_eps.
double implied_eps_direct(double z, double x0, double a);

} // namespace ddim

// Elementwise grid forms; arithmetic runs in double, results stored as float.
// Each throws ShapeMismatch on mismatched inputs and InvalidArgument for t
// outside [1, T].

Grid x0_from_eps(const Grid& z_t, const Grid& eps, int t, const NoiseSchedule& sched);
Grid x0_from_v(const Grid& z_t, const Grid& v, int t, const NoiseSchedule& sched);
Grid eps_from_v(const Grid& z_t, const Grid& v, int t, const NoiseSchedule& sched);
/// Deterministic (eta = 0) DDIM update to step t - 1.
Grid ddim_step(const Grid& x0, const Grid& eps, int t, const NoiseSchedule& sched);
/// Throws DegenerateTimestep when alpha_bar[t] == 1.
Grid implied_eps(const Grid& z_t, const Grid& x0, int t, const NoiseSchedule& sched);

/// Clean estimate and noise for any prediction kind.
struct Decomposition {
    Grid x0;
    Grid eps;
};
Grid to_x0(const Prediction& prediction, const Grid& z_t, int t, const NoiseSchedule& sched);
Decomposition decompose(const Prediction& prediction, const Grid& z_t, int t, const NoiseSchedule& sched);

} // namespace uvsync

#endif // UVSYNC_SCHEDULE_HPP
