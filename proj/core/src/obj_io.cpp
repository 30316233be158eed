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

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "uvsync/error.hpp"
#include "uvsync/geometry.hpp"

namespace uvsync {

namespace {

struct ObjData {
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<Face> faces;
};

int resolve_index(long raw, std::size_t count, const std::filesystem::path& path, int line_no) {
    long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
    if (raw == 0 || idx < 0 || idx >= static_cast<long>(count)) {
        fail(ErrorCode::InvalidArgument,
             path.string() + ":" + std::to_string(line_no) + ": face index " + std::to_string(raw) + " out of range");
    }
    return static_cast<int>(idx);
}

ObjData parse_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    ObjData obj;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') {
            continue;
        }
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) {
                fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
            }
            obj.positions.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            if (!(ls >> t.x >> t.y)) {
                fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": malformed texcoord");
            }
            obj.uvs.push_back(t);
        } else if (tag == "f") {
            std::vector<std::pair<int, int>> corners;
            std::string token;
            while (ls >> token) {
                const auto slash = token.find('/');
                if (slash == std::string::npos || slash + 1 >= token.size() || token[slash + 1] == '/') {
                    fail(ErrorCode::UvMissing,
                         path.string() + ":" + std::to_string(line_no) + ": face corner '" + token + "' has no uv");
                }
                const long v = std::stol(token.substr(0, slash));
                const auto second = token.find('/', slash + 1);
                const long t = std::stol(token.substr(slash + 1, second == std::string::npos ? std::string::npos
                                                                                              : second - slash - 1));
                corners.emplace_back(resolve_index(v, obj.positions.size(), path, line_no),
                                     resolve_index(t, obj.uvs.size(), path, line_no));
            }
            if (corners.size() < 3) {
                fail(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": face with < 3 corners");
            }
            for (std::size_t i = 1; i + 1 < corners.size(); ++i) {
                obj.faces.push_back({{corners[0].first, corners[i].first, corners[i + 1].first},
                                     {corners[0].second, corners[i].second, corners[i + 1].second}});
            }
        }
    }
    if (!obj.faces.empty() && obj.uvs.empty()) {
        fail(ErrorCode::UvMissing, path.string() + ": no texture coordinates");
    }
    return obj;
}

std::regex pattern_regex(const std::string& pattern) {
    static const std::regex field(R"(%0?(\d*)d)");
    std::smatch m;
    if (!std::regex_search(pattern, m, field)) {
        fail(ErrorCode::InvalidArgument, "naming pattern '" + pattern + "' has no integer field");
    }
    auto escape = [](const std::string& s) {
        static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
        return std::regex_replace(s, special, R"(\$&)");
    };
    return std::regex(escape(m.prefix().str()) + R"((\d+))" + escape(m.suffix().str()));
}

} // namespace

std::string format_frame_name(const std::string& pattern, int index) {
    char buf[512];
    const int n = std::snprintf(buf, sizeof(buf), pattern.c_str(), index);
    require(n > 0 && n < static_cast<int>(sizeof(buf)), ErrorCode::InvalidArgument, "bad naming pattern");
    return buf;
}

MeshSequence load_obj(const std::filesystem::path& path) {
    ObjData obj = parse_obj(path);
    return MeshSequence::create({std::move(obj.positions)}, std::move(obj.faces), std::move(obj.uvs));
}

MeshSequence load_mesh_sequence(const std::filesystem::path& directory, const std::string& pattern,
                                const LoadOptions& options) {
    std::error_code ec;
    if (!std::filesystem::is_directory(directory, ec)) {
        fail(ErrorCode::IoError, "not a directory: " + directory.string());
    }
    const std::regex re = pattern_regex(pattern);
    std::vector<std::pair<long, std::filesystem::path>> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (entry.is_regular_file() && std::regex_match(name, m, re)) {
            files.emplace_back(std::stol(m[1].str()), entry.path());
        }
    }
    if (files.empty()) {
        fail(ErrorCode::IoError, "no files matching '" + pattern + "' in " + directory.string());
    }
    std::sort(files.begin(), files.end());

    std::vector<std::vector<Vec3>> frames;
    std::vector<Face> faces;
    std::vector<Vec2> uvs;
    for (std::size_t i = 0; i < files.size(); ++i) {
        ObjData obj = parse_obj(files[i].second);
        if (i == 0) {
            faces = std::move(obj.faces);
            uvs = std::move(obj.uvs);
        } else if (obj.faces != faces || obj.uvs != uvs || obj.positions.size() != frames.front().size()) {
            fail(ErrorCode::TopologyMismatch, files[i].second.string() + " does not share the topology of " +
                                                  files.front().second.string());
        }
        frames.push_back(std::move(obj.positions));
    }
    MeshSequence seq = MeshSequence::create(std::move(frames), std::move(faces), std::move(uvs));
    return options.center ? seq.centered() : seq;
}

void save_obj(const std::filesystem::path& path, const MeshSequence& meshes, int frame) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    char buf[128];
    for (const auto& p : meshes.positions(frame)) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
        out << buf;
    }
    for (const auto& t : meshes.uvs()) {
        std::snprintf(buf, sizeof(buf), "vt %.17g %.17g\n", t.x, t.y);
        out << buf;
    }
    for (const auto& f : meshes.faces()) {
        out << "f";
        for (int i = 0; i < 3; ++i) {
            out << ' ' << f.position[i] + 1 << '/' << f.uv[i] + 1;
        }
        out << '\n';
    }
    if (!out) {
        fail(ErrorCode::IoError, "write failed: " + path.string());
    }
}

void save_mesh_sequence(const std::filesystem::path& directory, const MeshSequence& meshes,
                        const std::string& pattern) {
    std::filesystem::create_directories(directory);
    for (int k = 0; k < meshes.frame_count(); ++k) {
        save_obj(directory / format_frame_name(pattern, k), meshes, k);
    }
}

} // namespace uvsync
