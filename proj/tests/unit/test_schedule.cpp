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

#include <cmath>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "uvsync/error.hpp"
#include "uvsync/schedule.hpp"

using namespace uvsync;

namespace {

Grid scalar(double v) { return Grid(1, 1, 1, static_cast<float>(v)); }

// NoiseSchedule holding the given alpha_bar values at t = 0, 1.
NoiseSchedule two_point(double a1) { return NoiseSchedule(ScheduleKind::LinearBeta, {}, {1.0, a1}); }

} // namespace

TEST_CASE("single-step schedule") {
    const NoiseSchedule s = make_schedule(1);
    REQUIRE(s.alpha_bar().size() == 2);
    CHECK(s.at(0) == 1.0);
    CHECK(s.at(1) > 0.0);
    CHECK(s.at(1) < 1.0);
}

TEST_CASE("fifty-step schedule is strictly decreasing") {
    for (ScheduleKind kind : {ScheduleKind::LinearBeta, ScheduleKind::Cosine}) {
        const NoiseSchedule s = make_schedule(50, kind);
        REQUIRE(s.alpha_bar().size() == 51);
        CHECK(s.at(0) == 1.0);
        for (int t = 1; t <= 50; ++t) {
            CHECK(s.at(t) < s.at(t - 1));
            CHECK(s.at(t) > 0.0);
        }
    }
}

TEST_CASE("linear-beta values match an independent cumulative product") {
    const NoiseSchedule s = make_schedule(50);
    // Independent evaluation: product of (1 - beta_i) for the first 20 * t
    // training steps with beta linear in [8.5e-4, 0.012] over 1000 steps.
    for (int t : {1, 7, 25, 50}) {
        double prod = 1.0;
        for (int i = 0; i < 20 * t; ++i) {
            prod *= 1.0 - (8.5e-4 + (0.012 - 8.5e-4) * i / 999.0);
        }
        CHECK(s.at(t) == doctest::Approx(prod).epsilon(1e-12));
        CHECK(s.model_timestep(t) == 20 * t);
    }
}

TEST_CASE("cosine schedule spot value") {
    const double sft = 0.008;
    const NoiseSchedule s = make_schedule(10, ScheduleKind::Cosine);
    const double num = std::pow(std::cos((0.5 + sft) / (1 + sft) * kPi / 2), 2);
    const double den = std::pow(std::cos(sft * kPi / (2 * (1 + sft))), 2);
    CHECK(s.at(5) == doctest::Approx(num / den).epsilon(1e-12));
    CHECK(s.at(10) > 0.0);  // final beta clipped below 1
}

TEST_CASE("schedule validation and serialisation") {
    CHECK_THROWS_AS(make_schedule(0), Error);
    CHECK_THROWS_AS(NoiseSchedule(ScheduleKind::LinearBeta, {}, {0.9, 0.5}), Error);
    CHECK_THROWS_AS(NoiseSchedule(ScheduleKind::LinearBeta, {}, {1.0, 0.5, 0.6}), Error);
    CHECK_THROWS_AS(make_schedule(50).at(51), Error);
    const NoiseSchedule s = make_schedule(12, ScheduleKind::Cosine);
    const NoiseSchedule back = NoiseSchedule::from_text(s.to_text());
    CHECK(back.alpha_bar() == s.alpha_bar());
    CHECK(back.kind() == ScheduleKind::Cosine);
    const auto dir = testing::scratch_dir("schedule");
    s.save(dir / "s.json");
    CHECK(NoiseSchedule::load(dir / "s.json").alpha_bar() == s.alpha_bar());
    CHECK(parse_schedule_kind(to_string(ScheduleKind::LinearBeta)) == ScheduleKind::LinearBeta);
    CHECK_THROWS_AS(parse_schedule_kind("quadratic"), Error);
}

TEST_CASE("x0 from epsilon") {
    CHECK(ddim::x0_from_eps(1.0, 0.0, 0.25) == doctest::Approx(2.0));
    CHECK(ddim::x0_from_eps(0.3, 0.7, 1.0) == 0.3);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    for (int i = 0; i < 100; ++i) {
        const double a = 0.5, x0 = n(rng), e = n(rng);
        const double z = std::sqrt(a) * x0 + std::sqrt(1 - a) * e;
        CHECK(ddim::x0_from_eps(z, e, a) == doctest::Approx(x0).epsilon(1e-12));
    }
    const NoiseSchedule s = two_point(0.25);
    CHECK(x0_from_eps(scalar(1.0), scalar(0.0), 1, s)[0] == doctest::Approx(2.0));
}

TEST_CASE("v-prediction conversion") {
    CHECK(ddim::x0_from_v(1.0, 0.0, 0.25) == doctest::Approx(0.5));
    CHECK(ddim::eps_from_v(1.0, 0.0, 0.25) == doctest::Approx(0.8660254).epsilon(1e-7));
    CHECK(ddim::x0_from_v(0.4, 0.9, 1.0) == 0.4);
    CHECK(ddim::eps_from_v(0.4, 0.9, 1.0) == 0.9);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3), a(1e-4, 1.0 - 1e-4);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double z = u(rng), v = u(rng), ab = a(rng);
        const double x0 = ddim::x0_from_v(z, v, ab), e = ddim::eps_from_v(z, v, ab);
        worst = std::max(worst, std::abs(std::sqrt(ab) * x0 + std::sqrt(1 - ab) * e - z));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("DDIM step") {
    CHECK(ddim::step(1.0, 0.5, 0.64) == doctest::Approx(1.1));
    CHECK(ddim::step(0.37, 0.5, 1.0) == 0.37);
    CHECK(ddim::step(2.0, 0.0, 0.36) == doctest::Approx(1.2));
    const NoiseSchedule s(ScheduleKind::LinearBeta, {}, {1.0, 0.64, 0.3});
    CHECK(ddim_step(scalar(1.0), scalar(0.5), 2, s)[0] == doctest::Approx(1.1));
}

TEST_CASE("implied noise") {
    CHECK(ddim::implied_eps(1.0, 0.0669873, 0.25) == doctest::Approx(1.1160254).epsilon(1e-7));
    CHECK(ddim::implied_eps_direct(1.0, 0.0669873, 0.25) == doctest::Approx(1.1160254).epsilon(1e-7));
    CHECK(std::abs(ddim::implied_eps(std::sqrt(0.3) * 0.8, 0.8, 0.3)) < 1e-15);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3, 3), a(1e-4, 1.0 - 1e-4);
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double z = u(rng), x0 = u(rng), ab = a(rng);
        worst = std::max(worst, std::abs(ddim::implied_eps(z, x0, ab) - ddim::implied_eps_direct(z, x0, ab)));
    }
    CHECK(worst < 1e-9);
    try {
        implied_eps(scalar(1.0), scalar(1.0), 0, make_schedule(3));
        FAIL("expected DegenerateTimestep");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateTimestep);
    }
    CHECK_THROWS_AS(implied_eps(scalar(1.0), scalar(1.0), 4, make_schedule(3)), Error);
}

TEST_CASE("prediction kinds normalise to the same clean estimate") {
    const NoiseSchedule s = make_schedule(50);
    std::mt19937_64 rng(4);
    const int t = 30;
    const double a = s.at(t);
    Grid x0 = testing::random_grid(3, 4, 4, rng), e = testing::random_grid(3, 4, 4, rng);
    Grid z(3, 4, 4), v(3, 4, 4);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = static_cast<float>(std::sqrt(a) * x0[i] + std::sqrt(1 - a) * e[i]);
        v[i] = static_cast<float>(std::sqrt(a) * e[i] - std::sqrt(1 - a) * x0[i]);
    }
    const Grid from_x0 = to_x0({PredictionKind::X0, x0}, z, t, s);
    const Grid from_eps = to_x0({PredictionKind::Epsilon, e}, z, t, s);
    const Grid from_v = to_x0({PredictionKind::V, v}, z, t, s);
    CHECK(testing::max_abs_diff(from_x0, x0) == 0.0);
    CHECK(testing::max_abs_diff(from_eps, x0) < 1e-5);
    CHECK(testing::max_abs_diff(from_v, x0) < 1e-6);
    const Decomposition d = decompose({PredictionKind::V, v}, z, t, s);
    CHECK(testing::max_abs_diff(d.eps, e) < 1e-6);
    CHECK_THROWS_AS(to_x0({PredictionKind::V, Grid(3, 4, 5)}, z, t, s), Error);
    CHECK(parse_prediction_kind("v") == PredictionKind::V);
    CHECK_THROWS_AS(parse_prediction_kind("sample"), Error);
}
