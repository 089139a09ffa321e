#include "somlist/image.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <jpeglib.h>
#include <png.h>

#include "somlist/errors.hpp"

namespace som {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw DimensionError("image dimensions must be non-negative");
    }
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill[0];
        data_[i + 1] = fill[1];
        data_[i + 2] = fill[2];
    }
}

Rgb RgbImage::at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    data_[i] = c[0];
    data_[i + 1] = c[1];
    data_[i + 2] = c[2];
}

std::string encode_png(const RgbImage& image) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width());
    png.height = static_cast<png_uint_32>(image.height());
    png.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.data().data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw IoError("PNG encoding failed: " + msg);
    }
    std::string out(size, '\0');
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.data().data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw IoError("PNG encoding failed: " + msg);
    }
    out.resize(size);
    return out;
}

RgbImage decode_png(std::string_view bytes) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw DataError(std::string("PNG decoding failed: ") + png.message);
    }
    png.format = PNG_FORMAT_RGB;
    RgbImage out(static_cast<int>(png.width), static_cast<int>(png.height));
    if (!png_image_finish_read(&png, nullptr, out.data().data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw DataError("PNG decoding failed: " + msg);
    }
    return out;
}

namespace {

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Everything touched between setjmp and longjmp is trivially destructible or
// allocated before setjmp, so the jump skips no destructors.
bool decode_jpeg_into(std::string_view bytes, std::vector<std::uint8_t>& pixels, int& width, int& height,
                      char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::memcpy(message, err.message, JMSG_LENGTH_MAX);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    if (pixels.size() < static_cast<std::size_t>(width) * height * 3) {
        // Caller sized the buffer from a header peek; a mismatch means a corrupt stream.
        std::strcpy(message, "JPEG dimensions changed during decode");
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

bool peek_jpeg_size(std::string_view bytes, int& width, int& height, char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::memcpy(message, err.message, JMSG_LENGTH_MAX);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    width = static_cast<int>(cinfo.image_width);
    height = static_cast<int>(cinfo.image_height);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

RgbImage decode_jpeg(std::string_view bytes) {
    char message[JMSG_LENGTH_MAX] = {0};
    int width = 0, height = 0;
    if (!peek_jpeg_size(bytes, width, height, message)) {
        throw DataError(std::string("JPEG decoding failed: ") + message);
    }
    RgbImage out(width, height);
    if (!decode_jpeg_into(bytes, out.data(), width, height, message)) {
        throw DataError(std::string("JPEG decoding failed: ") + message);
    }
    return out;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
    std::string bytes = slurp(path);
    static constexpr unsigned char kPngSig[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngSig, 4) == 0) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
        static_cast<unsigned char>(bytes[1]) == 0xD8) {
        return decode_jpeg(bytes);
    }
    throw DataError("unsupported image format: " + path.string());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    std::string bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

}  // namespace som
