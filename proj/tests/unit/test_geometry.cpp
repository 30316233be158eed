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

#include "doctest.h"
#include "test_util.hpp"
#include "uvsync/error.hpp"
#include "uvsync/geometry.hpp"

using namespace uvsync;

namespace {

// Unit cube, 8 vertices, 12 triangles, 14-vertex cross unwrap.
const char* kCubeObj = R"(# cube
v -1 -1 -1
v  1 -1 -1
v  1  1 -1
v -1  1 -1
v -1 -1  1
v  1 -1  1
v  1  1  1
v -1  1  1
vt 0.25 0.0
vt 0.5 0.0
vt 0.0 0.25
vt 0.25 0.25
vt 0.5 0.25
vt 0.75 0.25
vt 1.0 0.25
vt 0.0 0.5
vt 0.25 0.5
vt 0.5 0.5
vt 0.75 0.5
vt 1.0 0.5
vt 0.25 0.75
vt 0.5 0.75
f 5/4 6/5 7/10
f 5/4 7/10 8/9
f 2/6 1/7 4/12
f 2/6 4/12 3/11
f 1/3 5/4 8/9
f 1/3 8/9 4/8
f 6/5 2/6 3/11
f 6/5 3/11 7/10
f 8/9 7/10 3/14
f 8/9 3/14 4/13
f 1/1 2/2 6/5
f 1/1 6/5 5/4
)";

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

double angle_deg(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(normalize(a), normalize(b)), -1.0, 1.0)) * 180.0 / kPi;
}

} // namespace

TEST_CASE("cube directory loads as one keyframe with 12 faces") {
    const auto dir = testing::scratch_dir("cube");
    write_file(dir / "frame_0000.obj", kCubeObj);
    const MeshSequence seq = load_mesh_sequence(dir);
    CHECK(seq.frame_count() == 1);
    CHECK(seq.face_count() == 12);
    CHECK(seq.vertex_count() == 8);
    const Aabb box = seq.bounds();
    CHECK(box.center().x == doctest::Approx(0.0));
    CHECK(box.diagonal() == doctest::Approx(2.0 * std::sqrt(3.0)));
}

TEST_CASE("24 animated keyframes load in numeric order and are centred jointly") {
    const auto dir = testing::scratch_dir("anim");
    const MeshSequence base = make_uv_sphere(1.0, 12, 6);
    std::vector<std::vector<Vec3>> frames;
    for (int k = 0; k < 24; ++k) {
        std::vector<Vec3> p(base.positions(0).begin(), base.positions(0).end());
        for (auto& v : p) {
            v = v + Vec3{0.1 * k, 0.0, 0.0};
        }
        frames.push_back(std::move(p));
    }
    save_mesh_sequence(dir, base.with_frames(frames));
    const MeshSequence seq = load_mesh_sequence(dir);
    REQUIRE(seq.frame_count() == 24);
    // Frame 0 moved left by half the travel, frame 23 right.
    CHECK(seq.frame(0).bounds().center().x == doctest::Approx(-1.15));
    CHECK(seq.frame(23).bounds().center().x == doctest::Approx(1.15));
    CHECK(seq.bounds().center().x == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("frames with differing face counts are a topology mismatch") {
    const auto dir = testing::scratch_dir("topo");
    write_file(dir / "frame_0000.obj", kCubeObj);
    std::string fewer = kCubeObj;
    fewer.resize(fewer.rfind("f 1/1 6/5 5/4"));
    write_file(dir / "frame_0001.obj", fewer);
    try {
        load_mesh_sequence(dir);
        FAIL("expected TopologyMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TopologyMismatch);
    }
}

TEST_CASE("faces without texture coordinates are rejected") {
    const auto dir = testing::scratch_dir("nouv");
    write_file(dir / "frame_0000.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n");
    try {
        load_mesh_sequence(dir);
        FAIL("expected UvMissing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UvMissing);
    }
}

TEST_CASE("empty directory and missing directory are IO errors") {
    const auto dir = testing::scratch_dir("empty");
    try {
        load_mesh_sequence(dir);
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
    CHECK_THROWS_AS(load_mesh_sequence(dir / "nope"), Error);
}

TEST_CASE("quads and negative indices are fan-triangulated") {
    const auto dir = testing::scratch_dir("quad");
    write_file(dir / "frame_0000.obj",
               "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf -4/-4 -3/-3 -2/-2 -1/-1\n");
    const MeshSequence seq = load_mesh_sequence(dir);
    REQUIRE(seq.face_count() == 2);
    CHECK(seq.faces()[1].position == std::array<int, 3>{0, 2, 3});
}

TEST_CASE("OBJ save and load round-trip exactly") {
    const auto dir = testing::scratch_dir("roundtrip");
    const MeshSequence sphere = make_uv_sphere(0.7, 10, 5);
    save_mesh_sequence(dir, sphere);
    const MeshSequence back = load_mesh_sequence(dir, "frame_%04d.obj", {false});
    CHECK(back.faces() == sphere.faces());
    REQUIRE(back.vertex_count() == sphere.vertex_count());
    for (std::size_t i = 0; i < back.vertex_count(); ++i) {
        CHECK(back.positions(0)[i].x == sphere.positions(0)[i].x);
        CHECK(back.positions(0)[i].z == sphere.positions(0)[i].z);
    }
    CHECK(format_frame_name("frame_%04d.obj", 7) == "frame_0007.obj");
}

TEST_CASE("sequence invariants are validated") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    std::vector<Vec2> bad_uvs = quad.uvs();
    bad_uvs[0] = {1.5, 0.0};
    std::vector<std::vector<Vec3>> frames{{quad.positions(0).begin(), quad.positions(0).end()}};
    CHECK_THROWS_AS(MeshSequence::create(frames, quad.faces(), bad_uvs), Error);
    std::vector<Face> bad_faces = quad.faces();
    bad_faces[0].position[0] = 99;
    CHECK_THROWS_AS(MeshSequence::create(frames, bad_faces, quad.uvs()), Error);
    CHECK_THROWS_AS(MeshSequence::create({}, quad.faces(), quad.uvs()), Error);
}

TEST_CASE("vertex normals of the sphere point outward") {
    const MeshSequence sphere = make_uv_sphere(1.0, 24, 12);
    const auto p = sphere.positions(0);
    const auto n = sphere.normals(0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(dot(normalize(p[i]), n[i]) > 0.98);
        CHECK(length(n[i]) == doctest::Approx(1.0));
    }
}

TEST_CASE("rig layouts") {
    SUBCASE("six views and a top view") {
        const CameraRig rig = default_rig(2.0, 6, true);
        REQUIRE(rig.size() == 7);
        for (int i = 0; i < 6; ++i) {
            const Vec3 p = rig.cameras[i].position;
            const double az = std::atan2(p.x, p.z) * 180.0 / kPi;
            CHECK(std::fmod(az + 360.0, 360.0) == doctest::Approx(60.0 * i).epsilon(1e-9));
            CHECK(p.y == doctest::Approx(0.0));
            CHECK(length(p) == doctest::Approx(2.0));
        }
        CHECK(rig.cameras[6].position.y > 0.0);
    }
    SUBCASE("single camera at azimuth zero") {
        const CameraRig rig = default_rig(2.0, 1, false);
        REQUIRE(rig.size() == 1);
        CHECK(rig.cameras[0].position.z == doctest::Approx(2.0));
        CHECK(rig.cameras[0].position.x == doctest::Approx(0.0));
    }
    SUBCASE("four views at 90 degree spacing") {
        const CameraRig rig = default_rig(2.0, 4, false);
        REQUIRE(rig.size() == 4);
        for (int i = 0; i < 4; ++i) {
            CHECK(angle_deg(rig.cameras[i].position, rig.cameras[(i + 1) % 4].position) ==
                  doctest::Approx(90.0));
        }
    }
}

TEST_CASE("camera projection conventions") {
    Camera cam;  // at +Z looking at the origin, 96 x 96
    const CameraView view(cam, cam.resolution);
    const auto c = view.project({0.0, 0.0, 0.0});
    CHECK(c.x == doctest::Approx(48.0));
    CHECK(c.y == doctest::Approx(48.0));
    CHECK(c.depth == doctest::Approx(3.0));
    // +Y is up in the image (smaller row), +X is right.
    CHECK(view.project({0.0, 0.5, 0.0}).y < 48.0);
    CHECK(view.project({0.5, 0.0, 0.0}).x > 48.0);
    // A point on the edge of the vertical field of view lands on row 0.
    const double half = 3.0 * std::tan(cam.vertical_fov / 2.0);
    CHECK(view.project({0.0, half, 0.0}).y == doctest::Approx(0.0).epsilon(1e-9));

    Camera bad = cam;
    bad.look_at = bad.position;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.up = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = cam;
    bad.resolution = {0, 10};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("slice and with_frames keep topology") {
    const MeshSequence quad = make_quad(1.0, 1.0);
    std::vector<std::vector<Vec3>> frames(3, {quad.positions(0).begin(), quad.positions(0).end()});
    const MeshSequence three = quad.with_frames(frames);
    CHECK(three.frame_count() == 3);
    CHECK(three.slice(1, 2).frame_count() == 2);
    CHECK_THROWS_AS(three.slice(2, 2), Error);
}
