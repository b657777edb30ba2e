#include "fog/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

namespace fog {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image load_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path.string());
    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw ImageFormatError(path.string() + ": not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng initialisation failed");
    }
    std::vector<unsigned char> bytes;
    png_uint_32 w = 0, h = 0;
    int depth = 0, color = 0;
    std::string error;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageFormatError(path.string() + ": corrupt PNG data");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    png_get_IHDR(png, info, &w, &h, &depth, &color, nullptr, nullptr, nullptr);
    if (depth != 8) {
        error = "unsupported bit depth " + std::to_string(depth) + " (only 8-bit PNG is supported)";
    } else if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB) {
        error = "unsupported color type " + std::to_string(color) + " (only grayscale and RGB are supported)";
    }
    if (!error.empty()) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageFormatError(path.string() + ": " + error);
    }
    const std::size_t channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
    bytes.resize(static_cast<std::size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(h, w, channels);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
    return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng initialisation failed");
    }
    std::vector<unsigned char> bytes(img.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.pixels[i]);
    std::vector<png_bytep> rows(img.height);
    for (std::size_t y = 0; y < img.height; ++y) rows[y] = bytes.data() + y * img.width * img.channels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Binary PNM: P5 (gray) or P6 (RGB), maxval 255.
Image load_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw ImageFormatError(path.string() + ": only binary P5/P6 PNM is supported");
    auto next_int = [&]() {
        int v = 0;
        while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
        in >> v;
        return v;
    };
    const int w = next_int(), h = next_int(), maxval = next_int();
    in.get();
    if (w <= 0 || h <= 0) throw ImageFormatError(path.string() + ": bad PNM dimensions");
    if (maxval != 255) throw ImageFormatError(path.string() + ": unsupported PNM maxval " + std::to_string(maxval));
    const std::size_t channels = magic == "P6" ? 3 : 1;
    Image img(static_cast<std::size_t>(h), static_cast<std::size_t>(w), channels);
    std::vector<unsigned char> bytes(img.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw ImageFormatError(path.string() + ": truncated PNM");
    for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
    return img;
}

void save_pnm(const std::filesystem::path& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
    std::vector<unsigned char> bytes(img.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.pixels[i]);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return load_pnm(path);
    return load_png(path);
}

void save_image(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ImageFormatError("save_image: " + std::to_string(img.channels) + "-channel images are not supported");
    const std::string ext = lower_ext(path);
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return save_pnm(path, img);
    save_png(path, img);
}

Image normalize_for_display(const Image& map, double* lo, double* hi) {
    Image out = map;
    if (map.size() == 0) return out;
    const auto [mn, mx] = std::minmax_element(map.pixels.begin(), map.pixels.end());
    if (lo) *lo = *mn;
    if (hi) *hi = *mx;
    const double range = *mx - *mn;
    for (auto& v : out.pixels) v = range > 0.0 ? (v - *mn) / range : 0.0;
    return out;
}

}  // namespace fog
