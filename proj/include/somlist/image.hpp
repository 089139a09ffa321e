#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace som {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB raster.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {0, 0, 0});

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);

    const std::vector<std::uint8_t>& data() const { return data_; }
    std::vector<std::uint8_t>& data() { return data_; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Encodes as an 8-bit RGB PNG with fixed compression settings and no
/// timestamp chunk, so equal rasters always give equal bytes.
std::string encode_png(const RgbImage& image);
RgbImage decode_png(std::string_view bytes);

/// Reads a PNG or JPEG file (sniffed by signature), converting to RGB.
RgbImage read_image(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);

}  // namespace som
