#include "faor/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "faor/errors.hpp"

namespace faor {
namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// -- PNG (libpng reports errors through longjmp; keep these frames free of
// objects with destructors) ------------------------------------------------

struct PngSource {
  const unsigned char* data;
  std::size_t size;
  std::size_t pos;
};

struct PngDecoded {
  png_uint_32 width;
  png_uint_32 height;
  int channels;
  int bit_depth;
  unsigned char* pixels;  // malloc'd, rows of width * channels * bytes
  png_bytep* rows;        // malloc'd row pointers; lives here to survive longjmp
  char message[256];
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* out = static_cast<PngDecoded*>(png_get_error_ptr(png));
  std::snprintf(out->message, sizeof out->message, "%s", msg);
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep dst, png_size_t n) {
  auto* src = static_cast<PngSource*>(png_get_io_ptr(png));
  if (src->size - src->pos < n) png_error(png, "truncated PNG data");
  std::memcpy(dst, src->data + src->pos, n);
  src->pos += n;
}

bool decode_png(const unsigned char* data, std::size_t size, PngDecoded* out) {
  out->pixels = nullptr;
  out->rows = nullptr;
  out->message[0] = '\0';
  PngSource src{data, size, 0};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, out, png_error_fn, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    std::free(out->rows);
    out->rows = nullptr;
    std::free(out->pixels);
    out->pixels = nullptr;
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_set_read_fn(png, &src, png_read_fn);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  png_set_expand(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->channels = png_get_channels(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  if ((out->channels != 1 && out->channels != 3) ||
      (out->bit_depth != 8 && out->bit_depth != 16)) {
    png_error(png, "unsupported PNG layout");
  }
  const png_size_t stride = png_get_rowbytes(png, info);
  out->pixels = static_cast<unsigned char*>(std::malloc(stride * out->height));
  out->rows = static_cast<png_bytep*>(std::malloc(sizeof(png_bytep) * out->height));
  if (!out->pixels || !out->rows) png_error(png, "out of memory");
  for (png_uint_32 r = 0; r < out->height; ++r) out->rows[r] = out->pixels + r * stride;
  png_read_image(png, out->rows);
  png_read_end(png, nullptr);
  std::free(out->rows);
  out->rows = nullptr;
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct PngEncodeJob {
  std::FILE* file;
  png_uint_32 width;
  png_uint_32 height;
  int channels;
  int bit_depth;
  const unsigned char* pixels;  // big-endian samples
  png_bytep* rows;
  char message[256];
};

bool encode_png(PngEncodeJob* job) {
  job->message[0] = '\0';
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, job, png_error_fn, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, job->file);
  png_set_IHDR(png, info, job->width, job->height, job->bit_depth,
               job->channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, job->rows);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

RawImage read_png(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  PngDecoded d{};
  if (!decode_png(bytes.data(), bytes.size(), &d)) {
    throw InputError("cannot decode PNG " + path.string() + ": " + d.message);
  }
  RawImage img;
  img.height = static_cast<int>(d.height);
  img.width = static_cast<int>(d.width);
  img.channels = d.channels;
  img.bit_depth = d.bit_depth;
  const std::size_t n = static_cast<std::size_t>(img.height) * img.width * img.channels;
  img.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.samples[i] = d.bit_depth == 8
                         ? d.pixels[i]
                         : static_cast<std::uint16_t>((d.pixels[2 * i] << 8) | d.pixels[2 * i + 1]);
  }
  std::free(d.pixels);
  return img;
}

std::vector<unsigned char> big_endian_samples(const RawImage& image) {
  const int bytes = image.bit_depth / 8;
  std::vector<unsigned char> out(image.samples.size() * bytes);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    if (bytes == 1) {
      out[i] = static_cast<unsigned char>(image.samples[i]);
    } else {
      out[2 * i] = static_cast<unsigned char>(image.samples[i] >> 8);
      out[2 * i + 1] = static_cast<unsigned char>(image.samples[i] & 0xff);
    }
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RawImage& image) {
  const std::vector<unsigned char> data = big_endian_samples(image);
  const std::size_t stride =
      static_cast<std::size_t>(image.width) * image.channels * (image.bit_depth / 8);
  std::vector<png_bytep> rows(image.height);
  for (int r = 0; r < image.height; ++r) {
    rows[r] = const_cast<png_bytep>(data.data() + r * stride);
  }
  std::FILE* file = std::fopen(path.string().c_str(), "wb");
  if (!file) throw InputError("cannot write " + path.string());
  PngEncodeJob job{file,
                   static_cast<png_uint_32>(image.width),
                   static_cast<png_uint_32>(image.height),
                   image.channels,
                   image.bit_depth,
                   data.data(),
                   rows.data(),
                   {}};
  const bool ok = encode_png(&job);
  const bool closed = std::fclose(file) == 0;
  if (!ok || !closed) throw InputError("cannot encode PNG " + path.string() + ": " + job.message);
}

// -- PPM / PGM --------------------------------------------------------------

RawImage read_pnm(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> InputError {
    return InputError("cannot decode " + path.string() + ": " + why);
  };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 24) throw fail("header value too large");
      ++digits;
    }
    if (digits == 0) throw fail("malformed header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw fail("not a binary PPM/PGM file");
  }
  pos = 2;
  RawImage img;
  img.channels = bytes[1] == '6' ? 3 : 1;
  img.width = static_cast<int>(read_int());
  img.height = static_cast<int>(read_int());
  const long maxval = read_int();
  if (img.width < 1 || img.height < 1) throw fail("empty image");
  if (maxval != 255 && maxval != 65535) throw fail("only maxval 255 or 65535 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("malformed header");
  ++pos;
  img.bit_depth = maxval == 255 ? 8 : 16;
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
  const std::size_t need = n * (img.bit_depth / 8);
  if (bytes.size() - pos < need) throw fail("truncated pixel data");
  img.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    img.samples[i] = img.bit_depth == 8 ? bytes[pos + i]
                                        : static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) |
                                                                     bytes[pos + 2 * i + 1]);
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, const RawImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << (image.channels == 3 ? "P6" : "P5") << "\n"
      << image.width << " " << image.height << "\n"
      << (image.bit_depth == 8 ? 255 : 65535) << "\n";
  const std::vector<unsigned char> data = big_endian_samples(image);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

void check_raw(const RawImage& image) {
  if (image.height < 1 || image.width < 1) throw InputError("image has no pixels");
  if (image.channels != 1 && image.channels != 3) throw InputError("image needs 1 or 3 channels");
  if (image.bit_depth != 8 && image.bit_depth != 16) throw InputError("bit depth must be 8 or 16");
  if (image.samples.size() != static_cast<std::size_t>(image.height) * image.width * image.channels) {
    throw InputError("image sample count does not match its dimensions");
  }
}

}  // namespace

RawImage read_raw_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return read_pnm(path);
  throw InputError("unsupported image format: " + path.string());
}

void write_raw_image(const std::filesystem::path& path, const RawImage& image) {
  check_raw(image);
  const std::string ext = lower_extension(path);
  if (ext == ".png") return write_png(path, image);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return write_pnm(path, image);
  throw InputError("unsupported image format: " + path.string());
}

std::uint16_t quantize(double v, int bit_depth) {
  const double max = bit_depth == 16 ? 65535.0 : 255.0;
  if (std::isnan(v)) throw NumericError("cannot quantize NaN");
  return static_cast<std::uint16_t>(std::floor(std::clamp(v, 0.0, 1.0) * max + 0.5));
}

ErpImage load_image(const std::filesystem::path& path) {
  const RawImage raw = read_raw_image(path);
  const double max = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ErpImage img(raw.height, raw.width, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const int src = raw.channels == 3 ? c : 0;
      img.values()[3 * i + c] = raw.samples[i * raw.channels + src] / max;
    }
  }
  return img;
}

void save_image(const ErpImage& image, const std::filesystem::path& path, int bit_depth) {
  if (image.channels() != 3 && image.channels() != 1) {
    throw InputError("only 1 or 3-channel images can be saved");
  }
  if (bit_depth != 8 && bit_depth != 16) throw InputError("bit depth must be 8 or 16");
  RawImage raw{image.height(), image.width(), image.channels(), bit_depth, {}};
  raw.samples.reserve(image.values().size());
  for (double v : image.values()) raw.samples.push_back(quantize(v, bit_depth));
  write_raw_image(path, raw);
}

InstanceMap load_instance_map(const std::filesystem::path& path) {
  const RawImage raw = read_raw_image(path);
  if (raw.channels != 1) throw InputError("instance map must be single-channel: " + path.string());
  return InstanceMap{raw.height, raw.width, raw.samples};
}

void save_instance_map(const InstanceMap& map, const std::filesystem::path& path) {
  write_raw_image(path, RawImage{map.height, map.width, 1, 16, map.ids});
}

void write_float32(const std::filesystem::path& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (double v : values) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                          static_cast<unsigned char>(bits >> 16),
                          static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<float> read_float32(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() % 4 != 0) throw InputError("float32 file size is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace faor
