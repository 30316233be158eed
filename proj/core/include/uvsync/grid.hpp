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

#ifndef UVSYNC_GRID_HPP
#define UVSYNC_GRID_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace uvsync {

/// Dense C x H x W float32 tensor stored in C order. Used for view latents,
/// UV textures and depth maps alike.
class Grid {
public:
    Grid() = default;
    Grid(int channels, int height, int width, float fill = 0.0f);

    int channels() const noexcept { return channels_; }
    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool same_shape(const Grid& other) const noexcept {
        return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
    }
    std::string shape_string() const;

    float& at(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    float at(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }

    std::span<float> channel(int c) noexcept { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> channel(int c) const noexcept {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    void fill(float value);
    bool all_finite() const noexcept;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

using LatentGrid = Grid;

/// Throws ShapeMismatch naming `what` when the shapes differ.
void require_same_shape(const Grid& a, const Grid& b, const char* what);

} // namespace uvsync

#endif // UVSYNC_GRID_HPP
