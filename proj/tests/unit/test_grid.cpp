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
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "test_util.hpp"
#include "uvsync/error.hpp"
#include "uvsync/grid.hpp"
#include "uvsync/grid_io.hpp"

using namespace uvsync;

TEST_CASE("grid indexing is channel-major") {
    Grid g(2, 3, 4);
    g.at(1, 2, 3) = 7.0f;
    CHECK(g[1 * 12 + 2 * 4 + 3] == 7.0f);
    CHECK(g.plane_size() == 12);
    CHECK(g.channel(1)[11] == 7.0f);
    CHECK(g.shape_string() == "2x3x4");
}

TEST_CASE("finite check and shape errors") {
    Grid g(1, 2, 2, 1.0f);
    CHECK(g.all_finite());
    g[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(g.all_finite());
    try {
        require_same_shape(Grid(1, 2, 2), Grid(1, 2, 3), "test");
        FAIL("expected ShapeMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    CHECK_THROWS_AS(Grid(-1, 2, 2), Error);
}

TEST_CASE("grid files round-trip bitwise") {
    std::mt19937_64 rng(3);
    Grid g = testing::random_grid(3, 5, 7, rng);
    g[0] = -0.0f;
    g[1] = std::numeric_limits<float>::denorm_min();
    const auto dir = testing::scratch_dir("grid_io");
    save_grid(dir / "g.grid", g);
    const Grid back = load_grid(dir / "g.grid");
    CHECK(back == g);
    CHECK(std::signbit(back[0]));

    std::ifstream in(dir / "g.grid", std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == R"({"dtype":"<f4","order":"C","shape":[3,5,7]})");
}

TEST_CASE("grid loading rejects bad files") {
    const auto dir = testing::scratch_dir("grid_bad");
    CHECK_THROWS_AS(load_grid(dir / "missing.grid"), Error);
    {
        std::ofstream out(dir / "trunc.grid", std::ios::binary);
        out << R"({"dtype":"<f4","order":"C","shape":[1,2,2]})" << '\n' << "abc";
    }
    try {
        load_grid(dir / "trunc.grid");
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
    {
        std::ofstream out(dir / "dtype.grid", std::ios::binary);
        out << R"({"dtype":"<f8","order":"C","shape":[1,1,1]})" << '\n' << "12345678";
    }
    CHECK_THROWS_AS(load_grid(dir / "dtype.grid"), Error);
}

TEST_CASE("png writer produces a file with the PNG signature") {
    const auto dir = testing::scratch_dir("png");
    Grid g(3, 4, 4, 0.5f);
    write_png(dir / "a.png", g);
    std::ifstream in(dir / "a.png", std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
    CHECK_THROWS_AS(write_png(dir / "no_such_dir" / "b.png", g), Error);
}
