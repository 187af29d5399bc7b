#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "relight/dpo.hpp"
#include "relight/error.hpp"

using namespace relight;

namespace {

ProxyMaps two_by_two(double a0, double a1, double a2, double a3) {
  ProxyMaps m(2, 2);
  for (std::size_t p = 0; p < 4; ++p) {
    m.coverage.at(p) = 1;
    for (int c = 0; c < 3; ++c) m.albedo.at(p, c) = 0.5;
    m.normal.at(p, 2) = 1.0;
    m.roughness.at(p) = 0.5;
    m.metallic.at(p) = 1.0;
  }
  m.albedo.at(0, 0) = a0;
  m.albedo.at(1, 1) = a1;
  m.albedo.at(2, 2) = a2;
  m.albedo.at(3, 0) = a3;
  return m;
}

ProxyExample example_for(std::uint64_t seed, int size = 4) {
  return make_proxy_example(fixtures::random_image(size, size, seed), fixtures::random_maps(size, size, seed + 100, true));
}

}  // namespace

TEST_CASE("reward fixtures") {
  const ProxyMaps gt = fixtures::random_maps(3, 3, 8, true);
  const RewardBreakdown same = reward(gt, gt);
  CHECK(same.total == 0.0);
  CHECK(same.albedo_l1 == 0.0);
  CHECK(same.normal_angular == 0.0);

  ProxyMaps flipped = gt;
  for (double& v : flipped.normal.data()) v = -v;
  CHECK(std::abs(reward(flipped, gt).normal_angular - std::numbers::pi) < 1e-12);
  PreferencePair pair{0, gt, flipped, 0.0};
  CHECK(std::abs(reward_delta(pair, gt) - std::numbers::pi) < 1e-12);
  pair.y_neg = gt;
  CHECK(reward_delta(pair, gt) == 0.0);

  // Hand-summed: albedo |0.1| + |0.2| + 0 + |0.4| over 4 pixels, one pixel
  // with roughness off by 0.2, one normal at 90 degrees, one metallic at 0.5.
  const ProxyMaps target = two_by_two(0.5, 0.5, 0.5, 0.5);
  ProxyMaps pred = two_by_two(0.6, 0.3, 0.5, 0.9);
  pred.roughness.at(1) = 0.7;
  pred.normal.at(1, 0) = 1.0;
  pred.normal.at(1, 2) = 0.0;
  pred.metallic.at(2) = 0.5;
  const RewardBreakdown r = reward(pred, target);
  CHECK(std::abs(r.albedo_l1 - 0.175) < 1e-12);
  CHECK(std::abs(r.roughness_l1 - 0.05) < 1e-12);
  CHECK(std::abs(r.normal_angular - std::numbers::pi / 8.0) < 1e-12);
  CHECK(std::abs(r.metallic_bce - std::numbers::ln2 / 4.0) < 1e-12);
  CHECK(std::abs(r.total + 0.175 + 0.05 + std::numbers::pi / 8.0 + std::numbers::ln2 / 4.0) < 1e-12);

  CHECK_THROWS_AS(reward(pred, target, Coverage(2, 2, 1, 0)), DomainError);
}

TEST_CASE("reward gap is never negative") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProxyMaps gt = fixtures::random_maps(3, 3, seed, true);
    const PreferencePair pair{0, gt, fixtures::random_maps(3, 3, seed + 1000), 0.0};
    CHECK(reward_delta(pair, gt) >= 0.0);
  }
}

TEST_CASE("build_preference_pairs") {
  std::vector<ProxyExample> examples;
  for (std::uint64_t s = 1; s <= 3; ++s) examples.push_back(example_for(s));
  const EncoderParams params = EncoderParams::init(6, 5);

  const auto pairs = build_preference_pairs(params, examples);
  REQUIRE(pairs.size() == examples.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].example == i);
    CHECK(pairs[i].y_pos == examples[i].gt);
    CHECK(pairs[i].y_neg == encode_features(params, examples[i].features, examples[i].coverage));
    CHECK(pairs[i].delta_r >= kMinRewardGap);
  }

  std::vector<ProxyExample> fitted = examples;
  for (auto& ex : fitted) ex.gt = encode_features(params, ex.features, ex.coverage);
  CHECK(build_preference_pairs(params, fitted).empty());

  EncoderParams moved = params;
  std::vector<double> grad(moved.net.params.size(), 0.0);
  for (const auto& pair : pairs) dpo_loss(moved, params, examples[pair.example], pair, DpoConfig{}, &grad);
  for (std::size_t i = 0; i < grad.size(); ++i) moved.net.params[i] -= 0.05 * grad[i];
  const auto after = build_preference_pairs(moved, examples);
  REQUIRE(after.size() == pairs.size());
  CHECK_FALSE(after[0].y_neg == pairs[0].y_neg);
}

TEST_CASE("dpo_loss at identical policy and reference") {
  const ProxyExample ex = example_for(9);
  const EncoderParams params = EncoderParams::init(6, 2);
  const PreferencePair pair{0, ex.gt, fixtures::random_maps(4, 4, 31), 0.0};
  for (double beta : {0.1, 0.5, 3.0}) {
    const double loss = dpo_loss(params, params, ex, pair, {beta, 0.1, 0.05, 1});
    CHECK(std::abs(loss - std::numbers::ln2) < 1e-15);
  }
}

TEST_CASE("dpo_loss prefers a policy that reproduces y_pos") {
  const ProxyExample base = example_for(4);
  const EncoderParams policy = EncoderParams::init(6, 1);
  const EncoderParams reference = EncoderParams::init(6, 2);
  ProxyExample ex = base;
  ex.gt = encode_features(policy, ex.features, ex.coverage);
  const PreferencePair pair{0, ex.gt, encode_features(reference, ex.features, ex.coverage), 0.0};
  CHECK(dpo_loss(policy, reference, ex, pair, DpoConfig{}) < std::numbers::ln2);
}

TEST_CASE("dpo_loss equals softplus of the likelihood margin and falls as it grows") {
  const ProxyExample ex = example_for(6);
  const EncoderParams reference = EncoderParams::init(6, 3);
  const PreferencePair pair{0, ex.gt, encode_features(reference, ex.features, ex.coverage), 0.0};
  const DpoConfig cfg;
  std::vector<std::pair<double, double>> points;
  for (std::uint64_t seed : {21, 22, 23}) {
    const EncoderParams policy = EncoderParams::init(6, seed);
    const double margin = (log_likelihood(policy, ex, pair.y_pos, cfg.sigma_lik) -
                           log_likelihood(reference, ex, pair.y_pos, cfg.sigma_lik)) -
                          (log_likelihood(policy, ex, pair.y_neg, cfg.sigma_lik) -
                           log_likelihood(reference, ex, pair.y_neg, cfg.sigma_lik));
    const double loss = dpo_loss(policy, reference, ex, pair, cfg);
    CHECK(std::abs(loss + std::log(1.0 / (1.0 + std::exp(-cfg.beta * margin)))) < 1e-12);
    points.emplace_back(margin, loss);
  }
  std::sort(points.begin(), points.end());
  for (std::size_t i = 1; i < points.size(); ++i) {
    REQUIRE(points[i].first > points[i - 1].first);
    CHECK(points[i].second < points[i - 1].second);
  }
}

TEST_CASE("log_likelihood is a pixel-averaged Gaussian") {
  const ProxyExample ex = example_for(12, 2);
  const EncoderParams params = EncoderParams::init(4, 6);
  const ProxyMaps f = encode_features(params, ex.features, ex.coverage);
  double sum = 0;
  for (std::size_t p = 0; p < 4; ++p) {
    for (int c = 0; c < 3; ++c) {
      sum += std::pow(ex.gt.albedo.at(p, c) - f.albedo.at(p, c), 2);
      sum += std::pow(ex.gt.normal.at(p, c) - f.normal.at(p, c), 2);
    }
    sum += std::pow(ex.gt.roughness.at(p) - f.roughness.at(p), 2);
    sum += std::pow(ex.gt.metallic.at(p) - f.metallic.at(p), 2);
  }
  CHECK(std::abs(log_likelihood(params, ex, ex.gt, 0.2) + sum / (2 * 0.04 * 4)) < 1e-12);
}

TEST_CASE("dpo_loss gradient check") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ProxyExample ex = example_for(seed);
    const EncoderParams reference = EncoderParams::init(6, seed + 50);
    const PreferencePair pair{0, ex.gt, encode_features(EncoderParams::init(6, seed + 90), ex.features, ex.coverage), 0.0};
    EncoderParams probe = EncoderParams::init(6, seed);
    const DpoConfig cfg;
    const double err = fixtures::gradient_check(
        [&](const std::vector<double>& theta, std::vector<double>* grad) {
          probe.net.params = theta;
          return dpo_loss(probe, reference, ex, pair, cfg, grad);
        },
        probe.net.params);
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("dpo config validation") {
  CHECK_THROWS_AS(DpoConfig({0.0, 0.1, 0.05, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(DpoConfig({0.5, -1.0, 0.05, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(DpoConfig({0.5, 0.1, 0.0, 1}).validate(), ConfigError);
  CHECK_THROWS_AS(DpoConfig({0.5, 0.1, 0.05, -1}).validate(), ConfigError);
  CHECK_THROWS_AS(dpo_refine(EncoderParams::init(4, 1), {}), ConfigError);
}

TEST_CASE("dpo_refine with zero iterations returns the input") {
  const std::vector<ProxyExample> examples{example_for(3)};
  const EncoderParams params = EncoderParams::init(6, 4);
  CHECK(dpo_refine(params, examples, {0.5, 0.1, 0.05, 0}).params == params);
}

TEST_CASE("dpo_refine on the sphere fixture set") {
  const fixtures::SphereSet set = fixtures::sphere_fixture_set();
  const EncoderParams fitted = fit_encoder(set.train, ProxyLossWeights{}).params;
  const EncoderParams frozen = fitted;
  const double before = mean_reward(fitted, set.train);

  const DpoResult result = dpo_refine(fitted, set.train);
  CHECK(fitted == frozen);
  REQUIRE(result.log.size() > 1);
  CHECK(result.log.front().mean_reward == before);

  bool rose = false;
  for (const auto& entry : result.log)
    if (entry.iteration >= 1 && entry.iteration <= 50 && entry.mean_reward > before) rose = true;
  CHECK(rose);
  const double after = mean_reward(result.params, set.train);
  CHECK(after > before);
  for (const auto& pair : build_preference_pairs(result.params, set.train)) CHECK(pair.delta_r >= 0.0);

  // Reported rather than enforced; see the README's acceptance notes.
  WARN_LE(fixtures::albedo_l1(result.params, set.held), fixtures::albedo_l1(fitted, set.held));
}
