#include "relight/image_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "relight/error.hpp"

namespace relight {

namespace {

static_assert(std::endian::native == std::endian::little, "raw writer assumes a little-endian host");

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

Bytes encode_png(int width, int height, int channels, const std::vector<std::uint8_t>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot create info struct");
  }
  Bytes out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

std::string header_line(int h, int w, int channels, const char* dtype) {
  nlohmann::json j = {{"h", h}, {"w", w}, {"channels", channels}};
  if (dtype) j["dtype"] = dtype;
  return j.dump() + "\n";
}

struct Header {
  int h, w, channels;
  std::size_t payload_offset;
};

Header parse_header(const Bytes& bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw IoError("raw image: missing header line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(std::string(bytes.begin(), nl));
    Header hd{j.at("h").get<int>(), j.at("w").get<int>(), j.at("channels").get<int>(),
              static_cast<std::size_t>(nl - bytes.begin()) + 1};
    if (hd.h < 0 || hd.w < 0 || hd.channels <= 0) throw IoError("raw image: bad dimensions");
    return hd;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("raw image: malformed header: ") + e.what());
  }
}

}  // namespace

double srgb_encode(double v) {
  v = std::clamp(v, 0.0, 1.0);
  if (v == 1.0) return 1.0;
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

std::uint8_t srgb_byte(double linear, double exposure) {
  const double s = srgb_encode(std::isnan(linear) ? 0.0 : linear * exposure);
  return static_cast<std::uint8_t>(std::lround(s * 255.0));
}

Bytes encode_srgb_png(const Image<double>& img, double exposure) {
  if (!(exposure > 0.0)) throw DomainError("exposure must be > 0");
  if (img.channels() != 1 && img.channels() != 3) throw ShapeError("png needs 1 or 3 channels");
  if (img.empty()) throw ShapeError("png: empty image");
  std::vector<std::uint8_t> rows(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) rows[i] = srgb_byte(img.data()[i], exposure);
  return encode_png(img.width(), img.height(), img.channels(), rows);
}

Bytes encode_map_png(const Map& map) {
  if (map.empty()) throw ShapeError("png: empty map");
  std::vector<std::uint8_t> rows(map.pixels());
  for (std::size_t i = 0; i < map.pixels(); ++i)
    rows[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.at(i), 0.0, 1.0) * 255.0));
  return encode_png(map.width(), map.height(), 1, rows);
}

Image<std::uint8_t> decode_png(const Bytes& bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw IoError(std::string("cannot read PNG: ") + image.message);
  const int channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> interleaved(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, interleaved.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError(std::string("cannot decode PNG: ") + image.message);
  }
  const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
  Image<std::uint8_t> out(h, w, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out(y, x, c) = interleaved[(static_cast<std::size_t>(y) * w + x) * channels + c];
  return out;
}

Bytes write_raw_f32(const Image<double>& img) {
  const std::string head = header_line(img.height(), img.width(), img.channels(), nullptr);
  Bytes out(head.begin(), head.end());
  out.reserve(out.size() + img.size() * 4);
  for (int c = 0; c < img.channels(); ++c)
    for (std::size_t p = 0; p < img.pixels(); ++p) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(img.at(p, c)));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  return out;
}

Image<double> read_raw_f32(const Bytes& bytes) {
  const Header hd = parse_header(bytes);
  Image<double> img(hd.h, hd.w, hd.channels);
  if (bytes.size() - hd.payload_offset != img.size() * 4)
    throw IoError("raw image: payload size does not match header");
  const std::uint8_t* src = bytes.data() + hd.payload_offset;
  for (int c = 0; c < hd.channels; ++c)
    for (std::size_t p = 0; p < img.pixels(); ++p) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(src[b]) << (8 * b);
      src += 4;
      img.at(p, c) = static_cast<double>(std::bit_cast<float>(bits));
    }
  return img;
}

Bytes write_raw_u8(const Coverage& mask) {
  const std::string head = header_line(mask.height(), mask.width(), 1, "u8");
  Bytes out(head.begin(), head.end());
  out.insert(out.end(), mask.data().begin(), mask.data().end());
  return out;
}

Coverage read_raw_u8(const Bytes& bytes) {
  const Header hd = parse_header(bytes);
  Coverage mask(hd.h, hd.w, 1);
  if (bytes.size() - hd.payload_offset != mask.size())
    throw IoError("raw mask: payload size does not match header");
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(hd.payload_offset), bytes.end(),
            mask.data().begin());
  return mask;
}

Image<double> quantize_f32(const Image<double>& img) {
  Image<double> out = img;
  for (double& v : out.data()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, Bytes(text.begin(), text.end()));
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

std::string read_text(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

std::string base64_encode_bytes(const Bytes& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode_bytes(const std::string& text) {
  if (text.size() % 4 != 0) throw IoError("base64 text length is not a multiple of 4");
  Bytes raw(text.size() / 4 * 3 + 1);
  const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw IoError("base64 text is malformed");
  std::size_t len = static_cast<std::size_t>(n);
  // EVP_DecodeBlock counts padding as zero bytes.
  if (!text.empty() && text.back() == '=') --len;
  if (text.size() > 1 && text[text.size() - 2] == '=') --len;
  raw.resize(len);
  return raw;
}

Image<double> load_raw_f32(const std::filesystem::path& path) {
  try {
    return read_raw_f32(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Coverage load_raw_u8(const std::filesystem::path& path) {
  try {
    return read_raw_u8(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

GBufferPaths gbuffer_paths(const std::string& stem) {
  return {stem + "_albedo.raw", stem + "_normal.raw", stem + "_roughness.raw",
          stem + "_metallic.raw", stem + "_depth.raw", stem + "_coverage.raw"};
}

void save_gbuffer(const std::filesystem::path& root, const GBufferPaths& paths, const GBuffer& g) {
  write_file(root / paths.albedo, write_raw_f32(g.albedo));
  write_file(root / paths.normal, write_raw_f32(g.normal));
  write_file(root / paths.roughness, write_raw_f32(g.roughness));
  write_file(root / paths.metallic, write_raw_f32(g.metallic));
  write_file(root / paths.depth, write_raw_f32(g.depth));
  write_file(root / paths.coverage, write_raw_u8(g.coverage));
}

GBuffer load_gbuffer(const std::filesystem::path& root, const GBufferPaths& paths) {
  GBuffer g;
  g.albedo = load_raw_f32(root / paths.albedo);
  g.normal = load_raw_f32(root / paths.normal);
  g.roughness = load_raw_f32(root / paths.roughness);
  g.metallic = load_raw_f32(root / paths.metallic);
  g.depth = load_raw_f32(root / paths.depth);
  g.coverage = load_raw_u8(root / paths.coverage);
  const int h = g.coverage.height(), w = g.coverage.width();
  for (const Image<double>* m : {&g.albedo, &g.normal, &g.roughness, &g.metallic, &g.depth})
    require_same_extent(m->height(), m->width(), h, w, "gbuffer planes");
  return g;
}

}  // namespace relight
