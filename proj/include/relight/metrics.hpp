#pragma once

#include <optional>
#include <string>
#include <vector>

#include "relight/image.hpp"

namespace relight {

inline constexpr double kPsnrCapDb = 99.0;
inline constexpr double kPsnrCapRmse = 2e-5;

// sRGB-encode after exposure, then map [0, 1] onto [−1, 1].
Image<double> normalize_pm1(const Image<double>& img, double exposure = 1.0);

double rmse(const Image<double>& a, const Image<double>& b);
// Peak-to-peak 2 on [−1, 1]; capped at 99 dB.
double psnr(const Image<double>& a, const Image<double>& b);
double psnr_from_rmse(double rmse);
// Mean local SSIM on Rec. 709 luminance, 11x11 Gaussian window (σ = 1.5), L = 2.
double ssim(const Image<double>& a, const Image<double>& b);

struct EvalItem {
  std::string pair_id;
  std::string variation;
  Image<double> target;                   // linear radiance
  std::optional<Image<double>> prediction;  // linear radiance; missing -> error
};

struct EvalRow {
  std::string variation;
  double rmse = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  std::size_t n_pairs = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // per variation, fixed order
  EvalRow overall;
  std::vector<std::string> errors;
  std::string manifest_hash;
  std::string config_hash;

  bool complete() const { return errors.empty(); }
  std::string to_csv() const;
  std::string to_json() const;
};

EvalReport evaluate_items(const std::vector<EvalItem>& items, double exposure = 1.0);

std::string sha256_hex(const std::string& data);

}  // namespace relight
