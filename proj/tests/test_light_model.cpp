#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "relight/error.hpp"
#include "relight/light_model.hpp"
#include "relight/random.hpp"

using namespace relight;
using std::numbers::pi;

namespace {

// Real SH at the six axis directions, computed offline from the closed-form basis.
constexpr double k00 = 0.28209479177387814;
constexpr double k1 = 0.48860251190291992;
constexpr double k20 = 0.31539156525252005;
constexpr double k22 = 0.54627421529603959;

void check_sh(const ShVector& got, const ShVector& want) {
  for (int i = 0; i < 9; ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6);
}

LightParams light_at(double yaw_deg, double pitch_deg, double e = 1000, double t = 5000) {
  return LightParams::directional(yaw_deg * pi / 180, pitch_deg * pi / 180, e, t);
}

}  // namespace

TEST_CASE("yaw/pitch to direction") {
  Vec3 d = yaw_pitch_to_direction(0, pi / 2);
  CHECK(d.x == doctest::Approx(1.0));
  CHECK(std::abs(d.y) < 1e-15);
  CHECK(std::abs(d.z) < 1e-15);
  d = yaw_pitch_to_direction(pi / 2, pi / 2);
  CHECK(std::abs(d.x) < 1e-15);
  CHECK(d.y == doctest::Approx(1.0));
  d = yaw_pitch_to_direction(0, pi / 4);
  CHECK(std::abs(d.x - std::sqrt(0.5)) < 1e-15);
  CHECK(std::abs(d.z - std::sqrt(0.5)) < 1e-15);
  CHECK_THROWS_AS(yaw_pitch_to_direction(0.3, 0.0), DomainError);
  CHECK_THROWS_AS(yaw_pitch_to_direction(0.3, pi), DomainError);
  CHECK_THROWS_AS(yaw_pitch_to_direction(0.3, -0.1), DomainError);
}

TEST_CASE("sh_project axis goldens") {
  check_sh(sh_project({0, 0, 1}), {k00, 0, k1, 0, 0, 0, 2 * k20, 0, 0});
  check_sh(sh_project({0, 0, -1}), {k00, 0, -k1, 0, 0, 0, 2 * k20, 0, 0});
  check_sh(sh_project({1, 0, 0}), {k00, 0, 0, k1, 0, 0, -k20, 0, k22});
  check_sh(sh_project({-1, 0, 0}), {k00, 0, 0, -k1, 0, 0, -k20, 0, k22});
  check_sh(sh_project({0, 1, 0}), {k00, k1, 0, 0, 0, 0, -k20, 0, -k22});
  check_sh(sh_project({0, -1, 0}), {k00, -k1, 0, 0, 0, 0, -k20, 0, -k22});
  CHECK_THROWS_AS(sh_project({0, 0, 2}), DomainError);
}

TEST_CASE("sh_project band invariants") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 d = yaw_pitch_to_direction(rng.uniform(-pi, pi), rng.uniform(0.01, pi - 0.01));
    const ShVector c = sh_project(d);
    CHECK(c[0] == k00);
    CHECK(std::abs(c[1] * c[1] + c[2] * c[2] + c[3] * c[3] - k1 * k1) < 1e-9);
  }
}

TEST_CASE("delta_illumination examples") {
  const LightParams s = light_at(30, 60, 800, 4500);
  const DeltaL zero = delta_illumination(s, s);
  for (double v : zero.components()) CHECK(v == 0.0);
  CHECK(zero.is_zero());

  const LightParams yawed = light_at(120, 60, 800, 4500);
  const DeltaL dy = delta_illumination(s, yawed);
  CHECK(dy.delta_log_e == 0.0);
  CHECK(dy.delta_tau == 0.0);
  double norm = 0;
  for (double v : dy.delta_sh) norm += v * v;
  CHECK(norm > 0.01);

  const LightParams doubled = light_at(30, 60, 1600, 4500);
  const DeltaL de = delta_illumination(s, doubled);
  CHECK(std::abs(de.delta_log_e - 0.6931471805599453) < 1e-12);
  for (double v : de.delta_sh) CHECK(v == 0.0);
}

TEST_CASE("delta_illumination antisymmetry") {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const LightParams a = light_at(rng.uniform(-180, 180), rng.uniform(5, 175), rng.uniform(100, 5000), rng.uniform(1000, 12000));
    const LightParams b = light_at(rng.uniform(-180, 180), rng.uniform(5, 175), rng.uniform(100, 5000), rng.uniform(1000, 12000));
    const auto ab = delta_illumination(a, b).components();
    const auto ba = delta_illumination(b, a).components();
    for (int k = 0; k < 11; ++k) CHECK(std::abs(ab[k] + ba[k]) <= 1e-12);
  }
}

TEST_CASE("small yaw offsets grow the SH difference") {
  const LightParams base = light_at(10, 60);
  auto sh_norm = [&](double deg) {
    const DeltaL d = delta_illumination(base, light_at(10 + deg, 60));
    double s = 0;
    for (double v : d.delta_sh) s += v * v;
    return std::sqrt(s);
  };
  for (double deg : {1.0, 2.0, 4.0, 8.0}) CHECK(sh_norm(deg) <= sh_norm(2 * deg));
}

TEST_CASE("apply_delta examples and round trip") {
  const LightParams s = light_at(20, 70, 900, 4500);
  CHECK(apply_delta(s, DeltaL{}).light == s);

  DeltaL energy;
  energy.delta_log_e = std::log(2.0);
  CHECK(std::abs(apply_delta(s, energy).light.energy_lux - 1800) < 1e-9);

  DeltaL warm;
  warm.delta_tau = 0.2;
  CHECK(std::abs(apply_delta(s, warm).light.temperature_k - 6500) < 1e-9);

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const LightParams a = light_at(rng.uniform(-180, 180), rng.uniform(5, 175), rng.uniform(100, 5000), rng.uniform(1000, 12000));
    LightParams b = light_at(a.yaw_rad * 180 / pi + rng.uniform(-90, 90), rng.uniform(5, 175), rng.uniform(100, 5000),
                             rng.uniform(1000, 12000));
    const DeltaL d = delta_illumination(a, b);
    const LightParams back = apply_delta(a, d).light;
    CHECK(std::abs(back.yaw_rad - b.yaw_rad) < 1e-9);
    CHECK(std::abs(back.pitch_rad - b.pitch_rad) < 1e-9);
    CHECK(std::abs(back.energy_lux - b.energy_lux) < 1e-9 * b.energy_lux);
    CHECK(std::abs(back.temperature_k - b.temperature_k) < 1e-9 * b.temperature_k);
    const auto again = delta_illumination(a, back).components();
    const auto want = d.components();
    for (int k = 0; k < 11; ++k) CHECK(std::abs(again[k] - want[k]) < 1e-9);
  }
}

TEST_CASE("apply_delta range policy") {
  const LightParams s = light_at(0, 10, 1000, 11000);
  DeltaL d;
  d.delta_tau = 0.2;
  CHECK_THROWS_AS(apply_delta(s, d), RangeError);
  const AppliedLight c = apply_delta(s, d, RangePolicy::clamp);
  CHECK(c.clamped);
  CHECK(c.light.temperature_k == 12000.0);

  DeltaL up;
  up.edit.dpitch_rad = -20 * pi / 180;
  CHECK_THROWS_AS(apply_delta(s, up), RangeError);
  const AppliedLight cu = apply_delta(s, up, RangePolicy::clamp);
  CHECK(cu.clamped);
  CHECK(cu.light.pitch_rad > 0.0);
}

TEST_CASE("point lights use the direction from the origin") {
  const LightParams p = LightParams::point(0.4, 1.0, 4.0, 1000, 5000);
  const Vec3 d = p.direction();
  const Vec3 want = yaw_pitch_to_direction(0.4, 1.0);
  CHECK(length(d - want) < 1e-12);
  CHECK(length(p.position - want * 4.0) < 1e-12);
  const LightParams moved = apply_delta(p, make_edit(p, 0.3, 0.0, 0.0, 0.0)).light;
  CHECK(std::abs(length(moved.position) - 4.0) < 1e-12);
}

TEST_CASE("temperature_to_rgb") {
  const Vec3 white = temperature_to_rgb(6600);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(white[c] - 1.0) <= 0.05);
  const Vec3 warm = temperature_to_rgb(1800);
  CHECK(warm.x == 1.0);
  CHECK(warm.z < 0.3);
  CHECK(temperature_to_rgb(2000).z < temperature_to_rgb(5000).z);
  CHECK(temperature_to_rgb(5000).z < temperature_to_rgb(9000).z);
  CHECK_THROWS_AS(temperature_to_rgb(999), DomainError);
  CHECK_THROWS_AS(temperature_to_rgb(12001), DomainError);
  // Continuity: 10 K steps never move a channel by more than 1%.
  Vec3 prev = temperature_to_rgb(1000);
  for (double t = 1010; t <= 12000; t += 10) {
    const Vec3 cur = temperature_to_rgb(t);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(cur[c] - prev[c]) < 0.01);
    CHECK(std::max({cur.x, cur.y, cur.z}) == doctest::Approx(1.0).epsilon(1e-12));
    prev = cur;
  }
}

TEST_CASE("project_token") {
  const LightParams s = light_at(20, 70, 900, 4500);
  const DeltaL d = delta_illumination(s, light_at(80, 50, 1300, 3000));
  const auto id = project_token(d, TokenProjection::identity(11));
  const auto comps = d.components();
  REQUIRE(id.size() == 11);
  for (int k = 0; k < 11; ++k) CHECK(id[k] == comps[k]);

  TokenProjection unbiased = TokenProjection::random(11, 16, 4);
  std::fill(unbiased.bias.begin(), unbiased.bias.end(), 0.0);
  for (double v : project_token(DeltaL{}, unbiased)) CHECK(v == 0.0);

  const TokenProjection proj = TokenProjection::random(11, 16, 21);
  CHECK(proj.weights.size() == 16 * 11);
  const auto token = project_token(d, proj);
  REQUIRE(token.size() == 16);
  for (int r = 0; r < 16; ++r) {
    double acc = proj.bias[r];
    for (int k = 0; k < 11; ++k) acc += proj.weights[r * 11 + k] * comps[k];
    CHECK(std::abs(token[r] - acc) < 1e-12);
  }
  CHECK_THROWS_AS(apply_projection(std::vector<double>(10, 0.0), proj), ShapeError);
}
