#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "fixtures.hpp"
#include "relight/error.hpp"
#include "relight/image_io.hpp"

using namespace relight;

TEST_CASE("sRGB byte endpoints and mid-gray") {
  CHECK(srgb_byte(0.0) == 0);
  CHECK(srgb_byte(1.0) == 255);
  CHECK(srgb_byte(7.5) == 255);
  CHECK(srgb_byte(-1.0) == 0);
  CHECK(srgb_byte(0.5) == 188);
  CHECK(srgb_byte(0.25, 2.0) == 188);
}

TEST_CASE("PNG encoding") {
  const Bytes png = encode_srgb_png(fixtures::random_image(5, 7, 1));
  REQUIRE(png.size() > 8);
  CHECK(png[1] == 'P');
  CHECK(png[2] == 'N');
  CHECK(png == encode_srgb_png(fixtures::random_image(5, 7, 1)));
  Map m(3, 3, 1, 0.5);
  CHECK(encode_map_png(m).size() > 8);
  CHECK_THROWS(encode_srgb_png(fixtures::random_image(2, 2, 1), 0.0));
}

TEST_CASE("raw float32 round trip") {
  const Image<double> img = quantize_f32(fixtures::random_image(6, 5, 3));
  const Bytes raw = write_raw_f32(img);
  const Image<double> back = read_raw_f32(raw);
  CHECK(back == img);
  CHECK(write_raw_f32(back) == raw);
  // Planar layout: the first sample after the header is (0,0,R), the second (0,1,R).
  const auto header_end = std::find(raw.begin(), raw.end(), '\n') - raw.begin() + 1;
  float second;
  std::memcpy(&second, raw.data() + header_end + 4, 4);
  CHECK(second == static_cast<float>(img(0, 1, 0)));

  Coverage cov(4, 4, 1, 0);
  cov(1, 2) = 1;
  CHECK(read_raw_u8(write_raw_u8(cov)) == cov);
  CHECK_THROWS_AS(read_raw_f32(Bytes{'x', 'y'}), IoError);
}

TEST_CASE("file errors carry the path") {
  try {
    read_file("/nonexistent/dir/file.raw");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/file.raw") != std::string::npos);
  }
}

TEST_CASE("gbuffer save/load") {
  const auto r = render(fixtures::unit_sphere(), fixtures::small_camera(12),
                        LightParams::directional(0.2, 0.9, 1000, 5000));
  const auto root = std::filesystem::temp_directory_path() / "relight_gbuffer_test";
  const GBufferPaths paths = gbuffer_paths("g/sample");
  save_gbuffer(root, paths, r.gbuffer);
  const GBuffer g = load_gbuffer(root, paths);
  CHECK(g.coverage == r.gbuffer.coverage);
  CHECK(g.albedo == quantize_f32(r.gbuffer.albedo));
  CHECK(std::isinf(g.depth(0, 0)));
  std::filesystem::remove_all(root);
}
