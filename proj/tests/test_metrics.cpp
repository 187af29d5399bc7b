#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "fixtures.hpp"
#include "relight/error.hpp"
#include "relight/metrics.hpp"

using namespace relight;

namespace {

Image<double> constant(int h, int w, double v) { return Image<double>(h, w, 3, v); }

}  // namespace

TEST_CASE("normalize_pm1") {
  Image<double> img(1, 3, 1);
  img(0, 0) = 0.0;
  img(0, 1) = 0.21586050011389926;  // linear value of sRGB byte 128
  img(0, 2) = 3.0;
  const Image<double> n = normalize_pm1(img);
  CHECK(n(0, 0) == -1.0);
  CHECK(std::abs(n(0, 1) - (2.0 * 128.0 / 255.0 - 1.0)) < 1e-9);
  CHECK(std::abs(n(0, 1)) <= 1.0 / 255.0);
  CHECK(n(0, 2) == 1.0);
  CHECK_THROWS_AS(normalize_pm1(img, 0.0), DomainError);
}

TEST_CASE("metric goldens") {
  const Image<double> a = fixtures::random_image(20, 20, 3, -1.0, 1.0);
  CHECK(rmse(a, a) == 0.0);
  CHECK(psnr(a, a) == 99.0);
  CHECK(std::abs(ssim(a, a) - 1.0) < 1e-12);

  const Image<double> x = constant(16, 16, 0.1), y = constant(16, 16, 0.6);
  CHECK(std::abs(rmse(x, y) - 0.5) < 1e-12);
  CHECK(std::abs(psnr(x, y) - 20.0 * std::log10(4.0)) < 1e-9);
  CHECK(std::abs(psnr(x, y) - 12.04) < 0.01);

  CHECK(std::abs(rmse(constant(8, 8, 0.3), constant(8, 8, -0.3)) - 0.6) < 1e-12);
  CHECK(psnr_from_rmse(1.9e-5) == 99.0);
  CHECK_THROWS_AS(rmse(x, constant(8, 8, 0.0)), ShapeError);
}

TEST_CASE("metric invariants") {
  const Image<double> a = fixtures::random_image(24, 24, 5, -0.8, 0.8);
  const Image<double> b = fixtures::random_image(24, 24, 6, -0.8, 0.8);
  CHECK(rmse(a, b) == rmse(b, a));
  double last = 1e9;
  for (double e : {1e-4, 1e-3, 1e-2, 0.1, 1.0}) {
    const double q = psnr_from_rmse(e);
    CHECK(q < last);
    last = q;
  }
  CHECK(ssim(a, b) < 1.0);

  // Only the contrast-structure term is shift-invariant; the luminance term
  // moves with the squared local-mean mismatch, so the check uses a near match.
  Image<double> near = a;
  const Image<double> noise = fixtures::random_image(24, 24, 7, -0.02, 0.02);
  for (std::size_t i = 0; i < near.size(); ++i) near.data()[i] += noise.data()[i];
  Image<double> as = a, ns = near;
  for (double& v : as.data()) v += 0.1;
  for (double& v : ns.data()) v += 0.1;
  CHECK(std::abs(ssim(as, ns) - ssim(a, near)) <= 1e-3);
}

TEST_CASE("evaluate_items aggregates per variation") {
  std::vector<EvalItem> items;
  auto add = [&](const std::string& id, const std::string& var, double target, double pred) {
    items.push_back({id, var, constant(12, 12, target), constant(12, 12, pred)});
  };
  add("t1", "temperature", 0.2, 0.2);
  add("t2", "temperature", 0.2, 0.25);
  add("t3", "temperature", 0.4, 0.3);
  add("p1", "position", 0.3, 0.1);
  add("p2", "position", 0.05, 0.06);
  const EvalReport report = evaluate_items(items);
  CHECK(report.complete());
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].variation == "temperature");
  CHECK(report.rows[0].n_pairs == 3);
  CHECK(report.rows[1].variation == "position");
  CHECK(report.rows[1].n_pairs == 2);
  CHECK(report.overall.n_pairs == 5);
  for (auto field : {&EvalRow::rmse, &EvalRow::ssim, &EvalRow::psnr}) {
    const double weighted = (3.0 * report.rows[0].*field + 2.0 * report.rows[1].*field) / 5.0;
    CHECK(std::abs(report.overall.*field - weighted) <= 1e-12);
  }
  CHECK(report.rows[0].psnr < 99.0);

  const std::string csv = report.to_csv();
  CHECK(csv.rfind("variation,rmse,ssim,psnr,n_pairs\ntemperature,", 0) == 0);
  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j.at("rows").size() == 2);
  CHECK(j.at("overall").at("n_pairs") == 5);
}

TEST_CASE("evaluate_items with oracle and missing predictions") {
  std::vector<EvalItem> items;
  for (const char* v : {"energy", "position", "temperature"}) {
    const Image<double> t = fixtures::random_image(10, 10, std::hash<std::string>{}(v), 0.0, 2.0);
    items.push_back({std::string(v) + "-1", v, t, t});
  }
  const EvalReport oracle = evaluate_items(items);
  REQUIRE(oracle.rows.size() == 3);
  CHECK(oracle.rows[0].variation == "temperature");
  CHECK(oracle.rows[1].variation == "position");
  CHECK(oracle.rows[2].variation == "energy");
  for (const auto& row : oracle.rows) {
    CHECK(row.rmse == 0.0);
    CHECK(row.psnr == 99.0);
    CHECK(std::abs(row.ssim - 1.0) < 1e-12);
  }

  items[1].prediction.reset();
  const EvalReport partial = evaluate_items(items);
  CHECK_FALSE(partial.complete());
  REQUIRE(partial.errors.size() == 1);
  CHECK(partial.errors[0].find("position-1") != std::string::npos);
  CHECK(partial.rows.size() == 2);
}

TEST_CASE("sha256_hex") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
