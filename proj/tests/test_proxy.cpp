#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "relight/error.hpp"
#include "relight/proxy.hpp"

using namespace relight;

namespace {

ProxyMaps constant_maps(int h, int w) {
  ProxyMaps m(h, w);
  for (std::size_t p = 0; p < m.coverage.pixels(); ++p) {
    m.coverage.at(p) = 1;
    m.albedo.at(p, 0) = 0.2;
    m.albedo.at(p, 1) = 0.4;
    m.albedo.at(p, 2) = 0.6;
    m.normal.at(p, 2) = 1.0;
    m.roughness.at(p) = 0.3;
    m.metallic.at(p) = 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("bce examples") {
  CHECK(std::abs(bce(0.5, 0.5) - std::numbers::ln2) < 1e-9);
  CHECK(bce(1.0, 1.0) == 0.0);
  CHECK(bce(0.0, 0.0) == 0.0);
  CHECK(std::abs(bce(1.0, 0.0) + std::log(kBceClamp)) < 1e-12);
}

TEST_CASE("proxy_loss fixtures") {
  const ProxyMaps gt = fixtures::random_maps(5, 4, 3, true);
  const ProxyLossWeights w;

  const ProxyLossTerms same = proxy_loss(gt, gt, w);
  CHECK(same.albedo == 0.0);
  CHECK(same.normal == 0.0);
  CHECK(same.roughness == 0.0);
  CHECK(same.metallic == 0.0);
  CHECK(same.total == 0.0);

  ProxyMaps ortho = gt;
  for (std::size_t p = 0; p < ortho.coverage.pixels(); ++p) {
    const Vec3 n{gt.normal.at(p, 0), gt.normal.at(p, 1), gt.normal.at(p, 2)};
    const Vec3 t = normalize(cross(n, std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
    for (int c = 0; c < 3; ++c) ortho.normal.at(p, c) = t[c];
  }
  CHECK(std::abs(proxy_loss(ortho, gt, w).normal - 1.0) < 1e-12);

  ProxyMaps half_gt = gt, half_pred = gt;
  for (std::size_t p = 0; p < gt.coverage.pixels(); ++p) half_gt.metallic.at(p) = half_pred.metallic.at(p) = 0.5;
  CHECK(std::abs(proxy_loss(half_pred, half_gt, w).metallic - std::numbers::ln2) < 1e-9);

  const ProxyMaps pred = fixtures::random_maps(5, 4, 4);
  const ProxyLossTerms t = proxy_loss(pred, gt, w);
  CHECK(t.total >= 0.0);
  CHECK(t.normal >= 0.0);
  CHECK(t.normal <= 2.0);
  CHECK(std::abs(t.total - (t.albedo + t.normal + 0.5 * t.roughness + 0.5 * t.metallic)) < 1e-12);

  // Terms average over the selected pixels only.
  Coverage one(5, 4, 1, 0);
  one(2, 1) = 1;
  const std::size_t p = 2 * 4 + 1;
  double albedo = 0;
  for (int c = 0; c < 3; ++c) albedo += std::abs(pred.albedo.at(p, c) - gt.albedo.at(p, c));
  CHECK(std::abs(proxy_loss(pred, gt, w, one).albedo - albedo) < 1e-12);

  CHECK_THROWS_AS(proxy_loss(pred, gt, w, Coverage(5, 4, 1, 0)), DomainError);
  CHECK_THROWS_AS(proxy_loss(fixtures::random_maps(4, 4, 1), gt, w), ShapeError);
}

TEST_CASE("normalize_normals") {
  Image<double> raw(1, 3, 3);
  raw(0, 0, 2) = 2.0;
  raw(0, 1, 0) = 3.0;
  raw(0, 1, 2) = 4.0;
  int zeros = 0;
  const Image<double> n = normalize_normals(raw, Coverage(1, 3, 1, 1), &zeros);
  CHECK(n(0, 0, 0) == 0.0);
  CHECK(n(0, 0, 2) == 1.0);
  CHECK(std::abs(n(0, 1, 0) - 0.6) < 1e-15);
  CHECK(std::abs(n(0, 1, 2) - 0.8) < 1e-15);
  CHECK(n(0, 2, 2) == 1.0);
  CHECK(zeros == 1);
}

TEST_CASE("encode with zero weights") {
  EncoderParams params{TwoLayerNet::zeros(kEncoderFeatures, 8, kProxyChannels)};
  double* b2 = params.net.params.data() + params.net.b2_offset();
  b2[3] = 1.0;
  b2[4] = 2.0;
  b2[5] = 2.0;
  const LinearImage img = fixtures::random_image(6, 5, 9);
  Coverage cov(6, 5, 1, 1);
  cov(0, 0) = 0;
  const ProxyMaps m = encode(params, img, cov);
  CHECK(m.coverage == cov);
  CHECK(m.albedo(0, 0, 1) == 0.0);
  CHECK(m.normal(0, 0, 2) == 0.0);
  for (std::size_t p = 1; p < cov.pixels(); ++p) {
    for (int c = 0; c < 3; ++c) CHECK(m.albedo.at(p, c) == 0.5);
    CHECK(m.roughness.at(p) == 0.5);
    CHECK(m.metallic.at(p) == 0.5);
    CHECK(std::abs(m.normal.at(p, 0) - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(m.normal.at(p, 1) - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(m.normal.at(p, 2) - 2.0 / 3.0) < 1e-15);
  }
}

TEST_CASE("encode output satisfies map invariants for any parameters") {
  const LinearImage img = fixtures::random_image(8, 8, 5, 1e-4, 20.0);
  const Coverage cov(8, 8, 1, 1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EncoderParams params{TwoLayerNet::random(kEncoderFeatures, 16, kProxyChannels, seed, 6.0)};
    const ProxyMaps m = encode(params, img, cov);
    CHECK(m == encode(params, img, cov));
    for (std::size_t p = 0; p < cov.pixels(); ++p) {
      for (int c = 0; c < 3; ++c) {
        CHECK(m.albedo.at(p, c) >= 0.0);
        CHECK(m.albedo.at(p, c) <= 1.0);
      }
      CHECK(std::abs(std::hypot(m.normal.at(p, 0), m.normal.at(p, 1), m.normal.at(p, 2)) - 1.0) < 1e-6);
      CHECK(m.roughness.at(p) >= 0.0);
      CHECK(m.roughness.at(p) <= 1.0);
      CHECK(m.metallic.at(p) >= 0.0);
      CHECK(m.metallic.at(p) <= 1.0);
    }
  }
}

TEST_CASE("proxy objective gradient check") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProxyMaps gt = fixtures::random_maps(4, 4, seed * 7);
    const std::vector<ProxyExample> examples{make_proxy_example(fixtures::random_image(4, 4, seed), gt)};
    EncoderParams probe = EncoderParams::init(6, seed);
    const double err = fixtures::gradient_check(
        [&](const std::vector<double>& theta, std::vector<double>* grad) {
          probe.net.params = theta;
          return proxy_objective(probe, examples, ProxyLossWeights{}, grad);
        },
        probe.net.params);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("fit_encoder") {
  const fixtures::SphereSet set = fixtures::sphere_fixture_set(1, 16);
  ProxyExample ex = set.train[0];
  ex.pixels = Coverage();

  SUBCASE("zero weights leave parameters unchanged") {
    const EncoderFitResult fit = fit_encoder({ex}, ProxyLossWeights{0, 0, 0, 0}, {8, 3, {0.5, 20, 30, 1e3}});
    CHECK(fit.params == EncoderParams::init(8, 3));
  }
  SUBCASE("overfits one sample") {
    EncoderFitConfig cfg;
    cfg.descent.iterations = 3000;
    const EncoderFitResult fit = fit_encoder({ex}, ProxyLossWeights{}, cfg);
    CHECK(fit.trace.loss.back() < 0.1 * fit.trace.loss.front());
    for (std::size_t i = 1; i < fit.trace.loss.size(); ++i) CHECK(fit.trace.loss[i] <= fit.trace.loss[i - 1]);
  }
  SUBCASE("empty example list") {
    CHECK_THROWS_AS(fit_encoder({}, ProxyLossWeights{}), ConfigError);
  }
}

TEST_CASE("encoder generalizes to held-out sphere pixels") {
  const fixtures::SphereSet set = fixtures::sphere_fixture_set();
  const EncoderFitResult fit = fit_encoder(set.train, ProxyLossWeights{});
  CHECK(fixtures::albedo_l1(fit.params, set.held) <= 0.05);
}

TEST_CASE("pool_project") {
  const ProxyMaps small = constant_maps(3, 4);
  const auto pooled = pool_maps(small);
  const std::array<double, 8> expect{0.2, 0.4, 0.6, 0.0, 0.0, 1.0, 0.3, 1.0};
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(pooled[i] - expect[i]) < 1e-15);

  const auto token = pool_project(small, TokenProjection::identity(8));
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(token[i] - expect[i]) < 1e-15);
  const auto doubled = pool_project(constant_maps(6, 8), TokenProjection::identity(8));
  for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(doubled[i] - token[i]) < 1e-15);

  const TokenProjection proj = TokenProjection::random(8, 32, 4);
  const ProxyMaps m = fixtures::random_maps(4, 4, 12);
  ProxyMaps flipped(4, 4);
  for (std::size_t p = 0; p < 16; ++p) {
    const std::size_t q = 15 - p;
    flipped.coverage.at(q) = m.coverage.at(p);
    for (int c = 0; c < 3; ++c) {
      flipped.albedo.at(q, c) = m.albedo.at(p, c);
      flipped.normal.at(q, c) = m.normal.at(p, c);
    }
    flipped.roughness.at(q) = m.roughness.at(p);
    flipped.metallic.at(q) = m.metallic.at(p);
  }
  const auto a = pool_project(m, proj), b = pool_project(flipped, proj);
  REQUIRE(a.size() == 32);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-12);

  CHECK_THROWS_AS(pool_maps(ProxyMaps(2, 2)), DomainError);
}

TEST_CASE("encoder serialization round trip") {
  const EncoderParams params = EncoderParams::init(12, 77);
  const std::string text = params.to_json();
  CHECK(EncoderParams::from_json(text) == params);
  CHECK_THROWS_AS(EncoderParams::from_json("{}"), IoError);
  CHECK_THROWS_AS(EncoderParams::from_json(net_to_json(params.net, "other/1")), IoError);
}
