#include "pohlab/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "bytes.hpp"

namespace pohlab {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed on '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed on '" + path.string() + "'");
}

}  // namespace detail

namespace {

// Netpbm header tokenizer: whitespace separated, '#' comments to end of line.
class PnmHeader {
 public:
  PnmHeader(std::span<const std::uint8_t> bytes, std::string path)
      : bytes_(bytes), path_(std::move(path)) {}

  std::string magic() {
    if (bytes_.size() < 2) fail();
    pos_ = 2;
    return std::string(bytes_.begin(), bytes_.begin() + 2);
  }

  int number() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail();
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000) fail();
    }
    return static_cast<int>(v);
  }

  /// Consumes the single whitespace byte that separates header and raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail();
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail() const { throw IoError("malformed netpbm header in '" + path_ + "'"); }

  std::span<const std::uint8_t> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteGuard() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  PnmHeader header(bytes, path.string());
  if (header.magic() != "P5") throw IoError("'" + path.string() + "' is not a binary PGM");
  const int width = header.number();
  const int height = header.number();
  const int max_value = header.number();
  if (width <= 0 || height <= 0 || max_value <= 0 || max_value > 65535) {
    throw IoError("unsupported PGM geometry in '" + path.string() + "'");
  }
  const std::size_t start = header.raster_start();
  const std::size_t bytes_per_sample = max_value > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (bytes.size() < start + n * bytes_per_sample) {
    throw IoError("truncated PGM raster in '" + path.string() + "'");
  }
  GrayImage img{Plane<std::uint16_t>(width, height), max_value};
  for (std::size_t i = 0; i < n; ++i) {
    // 16-bit PGM samples are big-endian.
    img.pixels[i] = bytes_per_sample == 1
                        ? bytes[start + i]
                        : static_cast<std::uint16_t>((bytes[start + 2 * i] << 8) |
                                                     bytes[start + 2 * i + 1]);
  }
  return img;
}

GrayImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for reading");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }

  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw IoError("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw IoError("libpng init failed");

  // libpng reports errors by longjmp; everything with a destructor is declared
  // before setjmp.
  std::vector<std::uint8_t> raster;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  if (setjmp(png_jmpbuf(g.png))) throw IoError("corrupt PNG '" + path.string() + "'");
  png_init_io(g.png, file.get());
  png_set_sig_bytes(g.png, 8);
  png_read_info(g.png, g.info);
  png_get_IHDR(g.png, g.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
               nullptr);
  if (color_type & PNG_COLOR_MASK_COLOR) {
    throw IoError("'" + path.string() + "' is not a grayscale PNG");
  }
  if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(g.png);
  if (bit_depth == 16) png_set_swap(g.png);
  png_read_update_info(g.png, g.info);
  const std::size_t row_bytes = png_get_rowbytes(g.png, g.info);
  raster.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * row_bytes;
  png_read_image(g.png, rows.data());
  png_read_end(g.png, nullptr);

  const bool wide = bit_depth == 16;
  GrayImage img{Plane<std::uint16_t>(static_cast<int>(width), static_cast<int>(height)),
                wide ? 65535 : 255};
  for (png_uint_32 y = 0; y < height; ++y) {
    for (png_uint_32 x = 0; x < width; ++x) {
      const std::uint8_t* p = rows[y] + (wide ? 2 * x : x);
      img.pixels.at(static_cast<int>(x), static_cast<int>(y)) =
          wide ? static_cast<std::uint16_t>(p[0] | (p[1] << 8)) : p[0];
    }
  }
  return img;
}

GrayImage read_gray_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  char head[2] = {0, 0};
  in.read(head, 2);
  if (head[0] == 'P' && head[1] == '5') return read_pgm(path);
  if (static_cast<unsigned char>(head[0]) == 0x89 && head[1] == 'P') return read_png(path);
  throw IoError("'" + path.string() + "' is neither a binary PGM nor a PNG");
}

void write_pgm(const std::filesystem::path& path, const Plane<std::uint8_t>& image) {
  const std::string header = "P5\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.values().begin(), image.values().end());
  detail::write_file(path, bytes);
}

void write_png(const std::filesystem::path& path, const Plane<std::uint8_t>& image) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
  PngWriteGuard g;
  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw IoError("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw IoError("libpng init failed");
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  for (int y = 0; y < image.height(); ++y) {
    rows[y] = const_cast<png_bytep>(image.values().data() +
                                    static_cast<std::size_t>(y) * image.width());
  }
  if (setjmp(png_jmpbuf(g.png))) throw IoError("PNG encode failed for '" + path.string() + "'");
  png_init_io(g.png, file.get());
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);
  png_write_image(g.png, rows.data());
  png_write_end(g.png, nullptr);
}

Mask read_pbm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  PnmHeader header(bytes, path.string());
  if (header.magic() != "P4") throw IoError("'" + path.string() + "' is not a binary PBM");
  const int width = header.number();
  const int height = header.number();
  if (width <= 0 || height <= 0) throw IoError("bad PBM geometry in '" + path.string() + "'");
  const std::size_t start = header.raster_start();
  const std::size_t row_bytes = (static_cast<std::size_t>(width) + 7) / 8;
  if (bytes.size() < start + row_bytes * height) {
    throw IoError("truncated PBM raster in '" + path.string() + "'");
  }
  Mask mask(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint8_t byte = bytes[start + y * row_bytes + x / 8];
      mask.at(x, y) = (byte >> (7 - x % 8)) & 1;
    }
  }
  return mask;
}

void write_pbm(const std::filesystem::path& path, const Mask& mask) {
  const std::string header =
      "P4\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const std::size_t row_bytes = (static_cast<std::size_t>(mask.width()) + 7) / 8;
  for (int y = 0; y < mask.height(); ++y) {
    std::vector<std::uint8_t> row(row_bytes, 0);
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) row[x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
    bytes.insert(bytes.end(), row.begin(), row.end());
  }
  detail::write_file(path, bytes);
}

}  // namespace pohlab
