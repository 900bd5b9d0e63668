#include <png.h>

#include <cctype>
#include <fstream>
#include <istream>

#include "rtr/io.hpp"

namespace rtr {

namespace fs = std::filesystem;

namespace {

Rgb8Image read_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError(path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    Rgb8Image out;
    out.height = image.height;
    out.width = image.width;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": " + msg);
    }
    return out;
}

// Next whitespace-separated header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

Rgb8Image read_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (ppm_token(in) != "P6") throw IoError(path.string() + ": only binary PPM (P6) is supported");
    Rgb8Image out;
    try {
        out.width = std::stoul(ppm_token(in));
        out.height = std::stoul(ppm_token(in));
        if (std::stoul(ppm_token(in)) != 255) throw IoError(path.string() + ": only 8-bit PPM is supported");
    } catch (const std::logic_error&) {
        throw IoError(path.string() + ": malformed PPM header");
    }
    if (out.width == 0 || out.height == 0) throw IoError(path.string() + ": empty image");
    out.pixels.resize(out.width * out.height * 3);
    in.read(reinterpret_cast<char*>(out.pixels.data()), static_cast<std::streamsize>(out.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(out.pixels.size())) {
        throw IoError(path.string() + ": truncated pixel data");
    }
    return out;
}

}  // namespace

Rgb8Image read_image(const fs::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
    char sig[8] = {};
    probe.read(sig, 8);
    if (probe.gcount() >= 2 && sig[0] == 'P' && sig[1] == '6') return read_ppm(path);
    if (probe.gcount() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(sig), 0, 8) == 0) {
        return read_png(path);
    }
    throw IoError(path.string() + ": unsupported image format (PNG or binary PPM only)");
}

}  // namespace rtr
