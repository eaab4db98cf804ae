#include "evsr/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <png.h>

namespace evsr {

namespace {

int read_pnm_token(std::istream &in, const std::string &path) {
    // Skips whitespace and '#' comments between header fields.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value;
    if (!(in >> value)) throw std::runtime_error("malformed netpbm header: " + path);
    return value;
}

Tensor read_pnm(std::ifstream &in, const std::string &path, bool gray) {
    const int w = read_pnm_token(in, path);
    const int h = read_pnm_token(in, path);
    const int maxval = read_pnm_token(in, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
        throw std::runtime_error("unsupported netpbm dimensions in " + path);
    in.get(); // single whitespace before the raster

    const int samples = gray ? 1 : 3;
    const bool wide = maxval > 255;
    const size_t raster = static_cast<size_t>(w) * h * samples * (wide ? 2 : 1);
    std::vector<unsigned char> bytes(raster);
    if (!in.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(raster)))
        throw std::runtime_error("truncated raster in " + path);

    Tensor frame({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                const size_t s = (static_cast<size_t>(y) * w + x) * samples + (gray ? 0 : c);
                // 16-bit netpbm samples are big-endian.
                const int raw = wide ? (bytes[2 * s] << 8 | bytes[2 * s + 1]) : bytes[s];
                frame.at(c, y, x) = static_cast<float>(raw) / static_cast<float>(maxval);
            }
    return frame;
}

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE *file = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) std::fclose(file);
    }
};

Tensor read_png_file(const std::string &path) {
    PngReadCloser ctx;
    ctx.file = std::fopen(path.c_str(), "rb");
    if (!ctx.file) throw std::runtime_error("cannot open image: " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png decode failed: " + path);

    png_init_io(ctx.png, ctx.file);
    png_read_info(ctx.png, ctx.info);

    // Normalize every layout to 8-bit RGB.
    png_set_expand(ctx.png);
    png_set_strip_16(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_set_gray_to_rgb(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int w = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
    const int h = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
    std::vector<unsigned char> raster(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) rows[static_cast<size_t>(y)] = raster.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);

    Tensor frame({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                frame.at(c, y, x) = raster[(static_cast<size_t>(y) * w + x) * 3 + c] / 255.0f;
    return frame;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE *file = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (file) std::fclose(file);
    }
};

unsigned char quantize(float v) {
    return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_png_file(const Tensor &frame, const std::string &path) {
    const int h = frame.extent(1), w = frame.extent(2);
    PngWriteCloser ctx;
    ctx.file = std::fopen(path.c_str(), "wb");
    if (!ctx.file) throw std::runtime_error("cannot write image: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw std::runtime_error("png init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw std::runtime_error("png init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png encode failed: " + path);

    png_init_io(ctx.png, ctx.file);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);

    std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = quantize(frame.at(c, y, x));
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

void write_ppm_file(const Tensor &frame, const std::string &path) {
    const int h = frame.extent(1), w = frame.extent(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write image: " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(w) * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) row[static_cast<size_t>(x) * 3 + c] = quantize(frame.at(c, y, x));
        out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace

Tensor read_image(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open image: " + path);
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char *>(magic), 8);
    in.seekg(0);

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::memcmp(magic, png_sig, 8) == 0) {
        in.close();
        return read_png_file(path);
    }
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
        in.ignore(2);
        return read_pnm(in, path, magic[1] == '5');
    }
    throw std::runtime_error("unrecognized image format (need PNG, P6, or P5): " + path);
}

void write_image(const Tensor &frame, const std::string &path) {
    if (frame.rank() != 3 || frame.extent(0) != 3)
        throw std::invalid_argument("write_image: frame must be (3,H,W), got " + frame.shape_string());
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
        write_png_file(frame, path);
    else
        write_ppm_file(frame, path);
}

namespace {

template <typename T>
void put_le(std::ostream &out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream &in, const std::string &path) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char *>(bytes), sizeof(T)))
        throw std::runtime_error("truncated tensor file: " + path);
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void save_tensor(const Tensor &tensor, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write tensor file: " + path);
    out.write("TNS1", 4);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.rank()));
    for (int d = 0; d < tensor.rank(); ++d) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.extent(d)));
    for (std::int64_t i = 0; i < tensor.numel(); ++i) put_le<float>(out, tensor[i]);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Tensor load_tensor(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tensor file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "TNS1", 4) != 0)
        throw std::runtime_error("not a TNS1 tensor file: " + path);
    const std::uint32_t rank = get_le<std::uint32_t>(in, path);
    if (rank < 1 || rank > 5) throw std::runtime_error("tensor file rank out of range: " + path);
    std::vector<int> shape(rank);
    for (auto &ext : shape) ext = static_cast<int>(get_le<std::uint32_t>(in, path));
    Tensor tensor(shape);
    for (std::int64_t i = 0; i < tensor.numel(); ++i) tensor[i] = get_le<float>(in, path);
    return tensor;
}

} // namespace evsr
