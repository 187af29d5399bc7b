#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relight/image.hpp"
#include "relight/renderer.hpp"

namespace relight {

using Bytes = std::vector<std::uint8_t>;

double srgb_encode(double linear);
std::uint8_t srgb_byte(double linear, double exposure = 1.0);

// 8-bit sRGB PNG (1 or 3 channel input) after exposure scaling and clamping.
Bytes encode_srgb_png(const Image<double>& img, double exposure = 1.0);
// Grayscale PNG of a [0,1] map, no transfer curve.
Bytes encode_map_png(const Map& map);

// 8-bit gray or RGB pixels of a PNG, without any transfer curve applied.
Image<std::uint8_t> decode_png(const Bytes& bytes);

// One-line JSON header {"h","w","channels"} followed by little-endian
// float32 samples, planar (channel-major).
Bytes write_raw_f32(const Image<double>& img);
Image<double> read_raw_f32(const Bytes& bytes);

// Same framing for 0/1 coverage masks stored as bytes.
Bytes write_raw_u8(const Coverage& mask);
Coverage read_raw_u8(const Bytes& bytes);

// Rounds every sample through float32, matching what write_raw_f32 stores.
Image<double> quantize_f32(const Image<double>& img);

void write_file(const std::filesystem::path& path, const Bytes& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
Bytes read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

std::string base64_encode_bytes(const Bytes& bytes);
Bytes base64_decode_bytes(const std::string& text);

Image<double> load_raw_f32(const std::filesystem::path& path);
Coverage load_raw_u8(const std::filesystem::path& path);

// G-buffer on disk: five float planes plus the coverage bytes, named
// <stem>_{albedo,normal,roughness,metallic,depth}.raw and <stem>_coverage.raw.
struct GBufferPaths {
  std::string albedo, normal, roughness, metallic, depth, coverage;
  std::vector<std::string> all() const { return {albedo, normal, roughness, metallic, depth, coverage}; }
};

GBufferPaths gbuffer_paths(const std::string& stem);
void save_gbuffer(const std::filesystem::path& root, const GBufferPaths& paths, const GBuffer& g);
GBuffer load_gbuffer(const std::filesystem::path& root, const GBufferPaths& paths);

}  // namespace relight
