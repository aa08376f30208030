#include "octcnn/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

unsigned char quantize(float v) {
    if (v <= 0.0f) return 0;
    if (v >= 1.0f) return 255;
    return static_cast<unsigned char>(std::lround(v * 255.0f));
}

void require_gray(const Tensor& t, const char* op) {
    if (t.rank() != 3 || t.extent(2) != 1)
        throw DimensionError(std::string(op) + " needs an HxWx1 tensor, got " + t.shape_str());
}

void require_rgb(const Tensor& t, const char* op) {
    if (t.rank() != 3 || t.extent(2) != 3)
        throw DimensionError(std::string(op) + " needs an HxWx3 tensor, got " + t.shape_str());
}

int pgm_next_value(std::istream& is, const std::filesystem::path& path) {
    // Skips whitespace and '#' comments between header tokens.
    for (;;) {
        int c = is.peek();
        if (c == EOF) throw DataError("PGM '" + path.string() + "': truncated header");
        if (c == '#') {
            std::string comment;
            std::getline(is, comment);
            continue;
        }
        if (std::isspace(c)) {
            is.get();
            continue;
        }
        break;
    }
    int value;
    if (!(is >> value)) throw DataError("PGM '" + path.string() + "': malformed header");
    return value;
}

Tensor read_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image '" + path.string() + "'");
    char m0 = 0, m1 = 0;
    is.get(m0).get(m1);
    const bool binary = m1 == '5';
    if (m0 != 'P' || (m1 != '5' && m1 != '2'))
        throw DataError("PGM '" + path.string() + "': expected P5 or P2 magic");
    const int w = pgm_next_value(is, path);
    const int h = pgm_next_value(is, path);
    const int maxval = pgm_next_value(is, path);
    if (w < 1 || h < 1) throw DataError("PGM '" + path.string() + "': bad dimensions");
    if (maxval != 255)
        throw DataError("PGM '" + path.string() + "': only 8-bit (maxval 255) supported");

    Tensor t({h, w, 1});
    float* p = t.data();
    const std::size_t n = static_cast<std::size_t>(h) * w;
    if (binary) {
        is.get(); // single whitespace after maxval
        std::vector<unsigned char> buf(n);
        is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is.gcount()) != n)
            throw DataError("PGM '" + path.string() + "': truncated pixel data");
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<float>(buf[i]) / 255.0f;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            int v;
            if (!(is >> v)) throw DataError("PGM '" + path.string() + "': truncated pixel data");
            if (v < 0 || v > 255)
                throw DataError("PGM '" + path.string() + "': pixel out of range");
            p[i] = static_cast<float>(v) / 255.0f;
        }
    }
    return t;
}

struct PngReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Tensor read_png_gray(const std::filesystem::path& path) {
    PngReadCtx ctx;
    ctx.fp = std::fopen(path.string().c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open image '" + path.string() + "'");
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png)))
        throw DataError("PNG '" + path.string() + "': decode error");

    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);
    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    if (depth != 8 || color != PNG_COLOR_TYPE_GRAY)
        throw DataError("PNG '" + path.string() + "': only 8-bit grayscale supported");

    Tensor t({static_cast<int>(h), static_cast<int>(w), 1});
    std::vector<unsigned char> row(w);
    float* p = t.data();
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(ctx.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            p[static_cast<std::size_t>(y) * w + x] = static_cast<float>(row[x]) / 255.0f;
    }
    png_read_end(ctx.png, nullptr);
    return t;
}

struct PngWriteCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

void write_png(const std::filesystem::path& path, const Tensor& t, int channels) {
    PngWriteCtx ctx;
    ctx.fp = std::fopen(path.string().c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open '" + path.string() + "' for writing");
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw IoError("libpng init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG write failed for '" + path.string() + "'");

    const int h = t.extent(0), w = t.extent(1);
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
    const float* p = t.data();
    for (int y = 0; y < h; ++y) {
        for (std::size_t i = 0; i < row.size(); ++i)
            row[i] = quantize(p[static_cast<std::size_t>(y) * row.size() + i]);
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

} // namespace

Tensor read_image_gray(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open image '" + path.string() + "'");
    unsigned char sig[2] = {0, 0};
    probe.read(reinterpret_cast<char*>(sig), 2);
    probe.close();
    if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '2')) return read_pgm(path);
    if (sig[0] == 0x89 && sig[1] == 'P') return read_png_gray(path);
    throw DataError("image '" + path.string() + "': unsupported container (PGM or PNG expected)");
}

void write_pgm(const std::filesystem::path& path, const Tensor& gray) {
    require_gray(gray, "write_pgm");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << "P5\n" << gray.extent(1) << ' ' << gray.extent(0) << "\n255\n";
    const float* p = gray.data();
    std::vector<unsigned char> buf(gray.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(p[i]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

void write_png_gray(const std::filesystem::path& path, const Tensor& gray) {
    require_gray(gray, "write_png_gray");
    write_png(path, gray, 1);
}

void write_png_rgb(const std::filesystem::path& path, const Tensor& rgb) {
    require_rgb(rgb, "write_png_rgb");
    write_png(path, rgb, 3);
}

void write_ppm(const std::filesystem::path& path, const Tensor& rgb) {
    require_rgb(rgb, "write_ppm");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << "P6\n" << rgb.extent(1) << ' ' << rgb.extent(0) << "\n255\n";
    const float* p = rgb.data();
    std::vector<unsigned char> buf(rgb.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = quantize(p[i]);
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace octcnn
