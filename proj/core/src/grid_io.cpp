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

#include "uvsync/grid_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <vector>

#include "json.hpp"
#include "uvsync/error.hpp"

namespace uvsync {

using json = nlohmann::json;

void save_grid(const std::filesystem::path& path, const Grid& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    const json header{{"dtype", "<f4"}, {"order", "C"}, {"shape", {grid.channels(), grid.height(), grid.width()}}};
    out << header.dump() << '\n';
    std::vector<unsigned char> bytes(grid.size() * 4);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto bits = std::bit_cast<uint32_t>(grid[i]);
        for (int b = 0; b < 4; ++b) {
            bytes[4 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xffu);
        }
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoError, "write failed: " + path.string());
    }
}

Grid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        fail(ErrorCode::IoError, "empty grid file " + path.string());
    }
    int c = 0, h = 0, w = 0;
    try {
        const json header = json::parse(line);
        require(header.at("dtype").get<std::string>() == "<f4", ErrorCode::IoError, "unsupported dtype");
        require(header.value("order", std::string("C")) == "C", ErrorCode::IoError, "unsupported order");
        const auto shape = header.at("shape").get<std::vector<int>>();
        require(shape.size() == 3, ErrorCode::IoError, "grid shape must have 3 dimensions");
        c = shape[0];
        h = shape[1];
        w = shape[2];
    } catch (const json::exception& e) {
        fail(ErrorCode::IoError, "malformed grid header in " + path.string() + ": " + e.what());
    }
    require(c >= 0 && h >= 0 && w >= 0, ErrorCode::IoError, "negative grid shape");
    Grid grid(c, h, w);
    std::vector<unsigned char> bytes(grid.size() * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        fail(ErrorCode::IoError, "truncated grid data in " + path.string());
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) {
            bits |= static_cast<uint32_t>(bytes[4 * i + b]) << (8 * b);
        }
        grid[i] = std::bit_cast<float>(bits);
    }
    return grid;
}

namespace {

unsigned char to_byte(float v, float lo, float hi) {
    if (!std::isfinite(v) || hi <= lo) {
        return 0;
    }
    const float t = std::clamp((v - lo) / (hi - lo), 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(t * 255.0f));
}

void write_png_rows(const std::filesystem::path& path, int width, int height, int channels,
                    const std::vector<unsigned char>& pixels) {
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "libpng write failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

void write_png(const std::filesystem::path& path, const Grid& image, float lo, float hi) {
    require(image.channels() >= 1 && image.width() >= 1 && image.height() >= 1, ErrorCode::InvalidArgument,
            "cannot write an empty image");
    const int out_channels = image.channels() >= 3 ? 3 : 1;
    std::vector<unsigned char> pixels(image.plane_size() * out_channels);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < out_channels; ++c) {
                pixels[(static_cast<std::size_t>(y) * image.width() + x) * out_channels + c] =
                    to_byte(image.at(c, y, x), lo, hi);
            }
        }
    }
    write_png_rows(path, image.width(), image.height(), out_channels, pixels);
}

void write_png(const std::filesystem::path& path, std::span<const float> plane, int width, int height, float lo,
               float hi) {
    require(plane.size() == static_cast<std::size_t>(width) * height, ErrorCode::ShapeMismatch,
            "plane size does not match image size");
    Grid g(1, height, width);
    std::copy(plane.begin(), plane.end(), g.values().begin());
    write_png(path, g, lo, hi);
}

void dump_buffers(const std::filesystem::path& directory, const std::string& prefix, const RenderBuffers& buffers) {
    std::filesystem::create_directories(directory);
    const int w = buffers.resolution.width;
    const int h = buffers.resolution.height;
    float lo = std::numeric_limits<float>::infinity();
    float hi = -lo;
    for (float d : buffers.depth) {
        if (std::isfinite(d)) {
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    // Near surfaces bright, background black.
    std::vector<float> depth_img(buffers.depth.size(), 0.0f);
    for (std::size_t i = 0; i < depth_img.size(); ++i) {
        if (std::isfinite(buffers.depth[i])) {
            depth_img[i] = hi > lo ? 1.0f - 0.8f * (buffers.depth[i] - lo) / (hi - lo) : 1.0f;
        }
    }
    write_png(directory / (prefix + "_depth.png"), depth_img, w, h);
    write_png(directory / (prefix + "_cosine.png"), buffers.cosine, w, h);
    write_png(directory / (prefix + "_mask.png"), buffers.fg_mask, w, h);

    save_grid(directory / (prefix + "_depth.grid"), buffers.depth_grid());
    Grid cosine(1, h, w), mask(1, h, w);
    std::copy(buffers.cosine.begin(), buffers.cosine.end(), cosine.values().begin());
    std::copy(buffers.fg_mask.begin(), buffers.fg_mask.end(), mask.values().begin());
    save_grid(directory / (prefix + "_cosine.grid"), cosine);
    save_grid(directory / (prefix + "_mask.grid"), mask);
}

} // namespace uvsync
