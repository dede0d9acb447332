#include "defkern/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

namespace defkern {

namespace {

bool has_suffix(const std::string& s, const char* suf) {
    const size_t n = std::strlen(suf);
    return s.size() >= n && s.compare(s.size() - n, n, suf) == 0;
}

int quantize(real v, int max_code) {
    const real c = std::clamp(v, 0.0, 1.0) * max_code;
    const long q = std::lround(c);
    return static_cast<int>(std::clamp<long>(q, 0, max_code));
}

// --- PGM ---

int pgm_token(std::istream& is) {
    // Skips whitespace and '#' comments, then reads one unsigned integer.
    int c = is.get();
    while (is) {
        if (c == '#') {
            while (is && c != '\n') c = is.get();
        } else if (std::isspace(c)) {
            c = is.get();
        } else {
            break;
        }
    }
    if (!is || !std::isdigit(c)) throw std::runtime_error("pgm: malformed header");
    int v = 0;
    while (is && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = is.get();
    }
    return v;
}

Tensor load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("pgm: cannot open: " + path);
    char m0 = 0, m1 = 0;
    is.get(m0).get(m1);
    if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a binary PGM: " + path);
    const int w = pgm_token(is);
    const int h = pgm_token(is);
    const int maxval = pgm_token(is);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw std::runtime_error("pgm: bad dimensions or max value: " + path);
    // The single whitespace after maxval was consumed by pgm_token.
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h * bytes);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!is) throw std::runtime_error("pgm: truncated pixel data: " + path);
    Tensor out({h, w});
    const real scale = 1.0 / maxval;
    for (long i = 0; i < out.size(); ++i) {
        int code;
        if (bytes == 1) {
            code = raw[static_cast<size_t>(i)];
        } else {  // 16-bit PGM samples are big-endian
            code = raw[static_cast<size_t>(2 * i)] * 256 + raw[static_cast<size_t>(2 * i + 1)];
        }
        out[i] = code * scale;
    }
    return out;
}

void save_pgm(const std::string& path, const Tensor& gray, int max_code) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("pgm: cannot open for writing: " + path);
    const int h = gray.dim(0), w = gray.dim(1);
    os << "P5\n" << w << ' ' << h << '\n' << max_code << '\n';
    if (max_code > 255) {
        std::vector<unsigned char> raw(static_cast<size_t>(gray.size()) * 2);
        for (long i = 0; i < gray.size(); ++i) {
            const int q = quantize(gray[i], max_code);
            raw[static_cast<size_t>(2 * i)] = static_cast<unsigned char>(q >> 8);
            raw[static_cast<size_t>(2 * i + 1)] = static_cast<unsigned char>(q & 0xff);
        }
        os.write(reinterpret_cast<const char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size()));
    } else {
        std::vector<unsigned char> raw(static_cast<size_t>(gray.size()));
        for (long i = 0; i < gray.size(); ++i)
            raw[static_cast<size_t>(i)] = static_cast<unsigned char>(quantize(gray[i], max_code));
        os.write(reinterpret_cast<const char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size()));
    }
    if (!os) throw std::runtime_error("pgm: write failed: " + path);
}

// --- PNG (libpng) ---

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Tensor load_png(const std::string& path, bool allow_color) {
    PngRead ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw std::runtime_error("png: cannot open: " + path);
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw std::runtime_error("png: not a PNG file: " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("png: allocation failure");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png: decode error: " + path);
    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    int depth = png_get_bit_depth(ctx.png, ctx.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    depth = png_get_bit_depth(ctx.png, ctx.info);
    const int channels = png_get_channels(ctx.png, ctx.info);
    if (channels != 1 && channels != 3)
        throw std::runtime_error("png: unsupported channel count: " + path);
    if (channels == 3 && !allow_color)
        throw std::runtime_error("png: color image where grayscale expected: " + path);
    if (depth != 8 && depth != 16) throw std::runtime_error("png: unsupported bit depth: " + path);
    if (channels == 3 && depth != 8)
        throw std::runtime_error("png: only 8-bit RGB supported: " + path);

    const size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<unsigned char> data(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = data.data() + y * rowbytes;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    const real scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    const int hh = static_cast<int>(h), ww = static_cast<int>(w);
    Tensor out({channels, hh, ww});
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < ww; ++x)
            for (int c = 0; c < channels; ++c) {
                const unsigned char* p =
                    rows[static_cast<size_t>(y)] + (static_cast<size_t>(x) * channels + c) *
                                                       (depth == 16 ? 2 : 1);
                const int code = depth == 16 ? p[0] * 256 + p[1]  // PNG is big-endian
                                             : p[0];
                out.at(c, y, x) = code * scale;
            }
    return out;
}

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void save_png(const std::string& path, const Tensor& chw, int depth) {
    const int channels = chw.dim(0), h = chw.dim(1), w = chw.dim(2);
    PngWrite ctx;
    ctx.fp = std::fopen(path.c_str(), "wb");
    if (!ctx.fp) throw std::runtime_error("png: cannot open for writing: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.png || !ctx.info) throw std::runtime_error("png: allocation failure");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png: encode error: " + path);
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
                 depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    const int max_code = depth == 16 ? 65535 : 255;
    const int sb = depth == 16 ? 2 : 1;
    std::vector<unsigned char> row(static_cast<size_t>(w) * channels * sb);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                const int q = quantize(chw.at(c, y, x), max_code);
                unsigned char* p = row.data() + (static_cast<size_t>(x) * channels + c) * sb;
                if (depth == 16) {
                    p[0] = static_cast<unsigned char>(q >> 8);
                    p[1] = static_cast<unsigned char>(q & 0xff);
                } else {
                    p[0] = static_cast<unsigned char>(q);
                }
            }
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

Tensor to_chw1(const Tensor& gray) {
    check_shape(gray.rank() == 2, "save_image: tensor must be [H,W]");
    Tensor t({1, gray.dim(0), gray.dim(1)});
    for (long i = 0; i < gray.size(); ++i) t[i] = gray[i];
    return t;
}

}  // namespace

Tensor load_image(const std::string& path) {
    if (has_suffix(path, ".pgm")) return load_pgm(path);
    if (has_suffix(path, ".png")) {
        Tensor chw = load_png(path, /*allow_color=*/false);
        Tensor out({chw.dim(1), chw.dim(2)});
        for (long i = 0; i < out.size(); ++i) out[i] = chw[i];
        return out;
    }
    throw std::runtime_error("load_image: unsupported format: " + path);
}

Tensor load_image_any(const std::string& path) {
    if (has_suffix(path, ".pgm")) return to_chw1(load_pgm(path));
    if (has_suffix(path, ".png")) return load_png(path, /*allow_color=*/true);
    throw std::runtime_error("load_image_any: unsupported format: " + path);
}

void save_image(const std::string& path, const Tensor& gray) {
    check_shape(gray.rank() == 2, "save_image: tensor must be [H,W]");
    if (has_suffix(path, ".pgm")) return save_pgm(path, gray, 255);
    if (has_suffix(path, ".png")) return save_png(path, to_chw1(gray), 8);
    throw std::runtime_error("save_image: unsupported format: " + path);
}

void save_image_16(const std::string& path, const Tensor& gray) {
    check_shape(gray.rank() == 2, "save_image_16: tensor must be [H,W]");
    if (has_suffix(path, ".pgm")) return save_pgm(path, gray, 65535);
    if (has_suffix(path, ".png")) return save_png(path, to_chw1(gray), 16);
    throw std::runtime_error("save_image_16: unsupported format: " + path);
}

void save_image_rgb(const std::string& path, const Tensor& rgb) {
    check_shape(rgb.rank() == 3 && rgb.dim(0) == 3, "save_image_rgb: tensor must be [3,H,W]");
    if (has_suffix(path, ".png")) return save_png(path, rgb, 8);
    throw std::runtime_error("save_image_rgb: RGB output requires .png: " + path);
}

}  // namespace defkern
