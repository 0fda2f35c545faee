#include "raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rng.hpp"

namespace krigrid {

namespace {

struct MemoryReader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t count) {
    auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
    if (reader->pos + count > reader->size) {
        png_error(png, "unexpected end of PNG stream");
    }
    std::memcpy(out, reader->data + reader->pos, count);
    reader->pos += count;
}

void on_png_error(png_structp png, png_const_charp msg) {
    auto* message = static_cast<std::string*>(png_get_error_ptr(png));
    if (message && message->empty()) *message = msg;
    longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct DecodedImage {
    int width = 0;
    int height = 0;
    int channels = 0; // 3 or 4
    std::vector<std::uint8_t> pixels;
};

DecodedImage decode_png_rgb(const std::uint8_t* bytes, std::size_t size) {
    if (size < 8 || png_sig_cmp(bytes, 0, 8) != 0) {
        fail(ErrorCode::decode_failure, "input is not a PNG stream");
    }

    std::string error_message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                             on_png_error, on_png_warning);
    require(png != nullptr, ErrorCode::decode_failure, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorCode::decode_failure, "png_create_info_struct failed");
    }

    DecodedImage image;
    std::vector<png_bytep> row_pointers;
    MemoryReader reader{bytes, size, 0};

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::decode_failure,
             error_message.empty() ? "PNG decode failed" : "PNG decode failed: " + error_message);
    }

    png_set_read_fn(png, &reader, read_from_memory);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (width == 0 || height == 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::decode_failure, "zero-dimension image");
    }
    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::decode_failure, "16-bit PNG not supported; expected 8-bit RGB(A)");
    }

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 3 && channels != 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::decode_failure, "expected RGB or RGBA after expansion");
    }

    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.channels = channels;
    image.pixels.resize(static_cast<std::size_t>(width) * height * channels);
    row_pointers.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        row_pointers[y] = image.pixels.data() + static_cast<std::size_t>(y) * width * channels;
    }
    png_read_image(png, row_pointers.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

} // namespace

SemanticRaster load_orthomosaic(const std::uint8_t* png_bytes, std::size_t size, Rgb weed_colour) {
    DecodedImage image = decode_png_rgb(png_bytes, size);

    SemanticRaster raster;
    raster.width = image.width;
    raster.height = image.height;
    raster.weed_mask.resize(raster.pixel_count());
    const int ch = image.channels;
    for (std::size_t i = 0; i < raster.pixel_count(); ++i) {
        const std::uint8_t* px = image.pixels.data() + i * ch;
        raster.weed_mask[i] =
            (px[0] == weed_colour.r && px[1] == weed_colour.g && px[2] == weed_colour.b) ? 1 : 0;
    }
    return raster;
}

SemanticRaster load_orthomosaic_file(const std::string& path, Rgb weed_colour) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_failure, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_orthomosaic(bytes.data(), bytes.size(), weed_colour);
}

double weed_fraction_window(const SemanticRaster& raster, int cx, int cy, int window) {
    require(window >= 1, ErrorCode::invalid_argument, "window must be >= 1");
    require(cx >= 0 && cx < raster.width && cy >= 0 && cy < raster.height,
            ErrorCode::invalid_argument, "window centre out of bounds");

    const int half = window / 2;
    const int x0 = std::max(0, cx - half);
    const int y0 = std::max(0, cy - half);
    const int x1 = std::min(raster.width, cx - half + window);
    const int y1 = std::min(raster.height, cy - half + window);

    std::int64_t weed = 0;
    for (int y = y0; y < y1; ++y) {
        const std::uint8_t* row = raster.weed_mask.data() + static_cast<std::size_t>(y) * raster.width;
        for (int x = x0; x < x1; ++x) weed += row[x];
    }
    const std::int64_t total = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
    return static_cast<double>(weed) / static_cast<double>(total);
}

std::vector<SamplePoint> sample_uniform(const SemanticRaster& raster, int n, int window,
                                        std::uint64_t seed) {
    require(n >= 1, ErrorCode::invalid_argument, "sample count must be >= 1");
    require(raster.width > 0 && raster.height > 0, ErrorCode::invalid_argument, "empty raster");

    Xoshiro256pp rng(seed);
    std::vector<SamplePoint> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_double() * raster.width;
        const double y = rng.next_double() * raster.height;
        const int px = std::min(static_cast<int>(x), raster.width - 1);
        const int py = std::min(static_cast<int>(y), raster.height - 1);
        samples.push_back({x, y, weed_fraction_window(raster, px, py, window)});
    }
    return samples;
}

namespace {

void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& gray) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    require(fp != nullptr, ErrorCode::io_failure, "cannot open " + path + " for writing");

    std::string error_message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                              on_png_error, on_png_warning);
    if (!png) {
        std::fclose(fp);
        fail(ErrorCode::io_failure, "png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        std::fclose(fp);
        fail(ErrorCode::io_failure, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        fail(ErrorCode::io_failure,
             error_message.empty() ? "PNG encode failed" : "PNG encode failed: " + error_message);
    }

    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(gray.data() + static_cast<std::size_t>(y) * width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

} // namespace

void write_field_png(const ScalarField& field, const std::string& path) {
    std::vector<std::uint8_t> gray(field.cell_count());
    for (std::size_t i = 0; i < field.cell_count(); ++i) gray[i] = quantize_u8(field.values[i]);
    write_png_gray(path, field.width, field.height, gray);
}

ScalarField read_field_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_failure, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    DecodedImage image = decode_png_rgb(bytes.data(), bytes.size());

    ScalarField field(image.width, image.height);
    const int ch = image.channels;
    for (std::size_t i = 0; i < field.cell_count(); ++i) {
        // Grayscale inputs arrive expanded to RGB with equal channels; for RGB
        // content fall back to the rec601 luma.
        const std::uint8_t* px = image.pixels.data() + i * ch;
        double v;
        if (px[0] == px[1] && px[1] == px[2]) {
            v = px[0] / 255.0;
        } else {
            v = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
        }
        field.values[i] = v;
    }
    return field;
}

void write_field_gpf(const ScalarField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::io_failure, "cannot open " + path + " for writing");
    out.write("GPF1", 4);
    const std::uint32_t w = static_cast<std::uint32_t>(field.width);
    const std::uint32_t h = static_cast<std::uint32_t>(field.height);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.cell_count() * sizeof(double)));
    require(out.good(), ErrorCode::io_failure, "short write to " + path);
}

ScalarField read_field_gpf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_failure, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "GPF1", 4) == 0, ErrorCode::bad_format,
            path + " is not a GPF1 field file");
    std::uint32_t w = 0;
    std::uint32_t h = 0;
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    require(in.good() && w > 0 && h > 0, ErrorCode::bad_format, "bad GPF1 header in " + path);
    ScalarField field(static_cast<int>(w), static_cast<int>(h));
    in.read(reinterpret_cast<char*>(field.values.data()),
            static_cast<std::streamsize>(field.cell_count() * sizeof(double)));
    require(in.good(), ErrorCode::bad_format, "truncated GPF1 payload in " + path);
    return field;
}

void write_samples_csv(const std::vector<SamplePoint>& samples, std::ostream& out) {
    out << "x,y,value\n";
    char line[128];
    for (const SamplePoint& s : samples) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", s.x, s.y, s.value);
        out << line;
    }
}

void write_samples_csv_file(const std::vector<SamplePoint>& samples, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io_failure, "cannot open " + path + " for writing");
    write_samples_csv(samples, out);
    require(out.good(), ErrorCode::io_failure, "short write to " + path);
}

std::vector<SamplePoint> read_samples_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::bad_format, "empty samples CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "x,y,value", ErrorCode::bad_format, "samples CSV must start with 'x,y,value'");

    std::vector<SamplePoint> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        SamplePoint s;
        char trailing;
        const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &s.x, &s.y, &s.value, &trailing);
        require(got == 3, ErrorCode::bad_format,
                "bad samples CSV row at line " + std::to_string(line_no));
        samples.push_back(s);
    }
    return samples;
}

std::vector<SamplePoint> read_samples_csv_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io_failure, "cannot open " + path);
    return read_samples_csv(in);
}

} // namespace krigrid
