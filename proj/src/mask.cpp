#include "relight/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relight/error.hpp"

namespace relight {

namespace {

constexpr double kDiceEps = 1e-6;
constexpr double kProbEps = 1e-12;

bool covered(const Coverage& cov, std::size_t p) { return cov.empty() || cov.at(p) != 0; }

void check_coverage(const Coverage& cov, int h, int w, const char* what) {
  if (!cov.empty()) require_same_extent(cov.height(), cov.width(), h, w, what);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

// Median over the foreground, falling back to the mean when it is zero.
double robust_scale(const Map& y, const Coverage& cov) {
  std::vector<double> vals;
  vals.reserve(y.pixels());
  for (std::size_t p = 0; p < y.pixels(); ++p)
    if (covered(cov, p)) vals.push_back(y.at(p));
  const double med = median_of(vals);
  if (med != 0.0) return med;
  if (vals.empty()) return 0.0;
  return std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Map luminance(const LinearImage& img) {
  if (img.channels() != 3) throw ShapeError("luminance needs a 3-channel image");
  Map y(img.height(), img.width(), 1);
  for (std::size_t p = 0; p < img.pixels(); ++p) {
    const double v = 0.2126 * img.at(p, 0) + 0.7152 * img.at(p, 1) + 0.0722 * img.at(p, 2);
    y.at(p) = std::max(v, kLuminanceFloor);
  }
  return y;
}

Map gaussian_blur(const Map& map, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("blur sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (int i = -radius; i <= radius; ++i)
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double total = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& k : kernel) k /= total;

  const int h = map.height(), w = map.width();
  Map tmp(h, w, 1), out(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[static_cast<std::size_t>(i + radius)] * map(y, std::clamp(x + i, 0, w - 1));
      tmp(y, x) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -radius; i <= radius; ++i)
        s += kernel[static_cast<std::size_t>(i + radius)] * tmp(std::clamp(y + i, 0, h - 1), x);
      out(y, x) = s;
    }
  return out;
}

Map robust_distance(const Map& ys, const Map& yt, const Coverage& coverage,
                    const std::vector<double>& sigmas) {
  require_same_shape(ys, yt, "robust_distance");
  check_coverage(coverage, ys.height(), ys.width(), "robust_distance coverage");
  if (sigmas.empty()) throw ConfigError("robust_distance needs at least one sigma");

  Map dist(ys.height(), ys.width(), 1);
  const double ms = robust_scale(ys, coverage);
  const double mt = robust_scale(yt, coverage);
  if (ms == 0.0 || mt == 0.0) return dist;
  for (std::size_t p = 0; p < ys.pixels(); ++p)
    if (covered(coverage, p)) dist.at(p) = std::abs(yt.at(p) / mt - ys.at(p) / ms);

  Map out(ys.height(), ys.width(), 1);
  for (double sigma : sigmas) {
    const Map blurred = gaussian_blur(dist, sigma);
    for (std::size_t p = 0; p < out.pixels(); ++p) out.at(p) += blurred.at(p);
  }
  const double inv = 1.0 / static_cast<double>(sigmas.size());
  for (std::size_t p = 0; p < out.pixels(); ++p)
    out.at(p) = covered(coverage, p) ? out.at(p) * inv : 0.0;
  return out;
}

SoftMask normalize_mask(const Map& raw, const Coverage& coverage, double percentile) {
  check_coverage(coverage, raw.height(), raw.width(), "normalize_mask coverage");
  if (!(percentile > 0.0 && percentile <= 100.0)) throw ConfigError("percentile must lie in (0, 100]");
  SoftMask mask{Map(raw.height(), raw.width(), 1)};
  std::vector<double> vals;
  for (std::size_t p = 0; p < raw.pixels(); ++p) {
    if (raw.at(p) < 0.0) throw DomainError("normalize_mask needs a nonnegative raw map");
    if (covered(coverage, p)) vals.push_back(raw.at(p));
  }
  if (vals.empty()) return mask;
  std::sort(vals.begin(), vals.end());
  const double pos = percentile / 100.0 * static_cast<double>(vals.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, vals.size() - 1);
  const double scale = vals[lo] + (pos - static_cast<double>(lo)) * (vals[hi] - vals[lo]);
  if (scale < 1e-6) return mask;
  for (std::size_t p = 0; p < raw.pixels(); ++p)
    if (covered(coverage, p)) mask.values.at(p) = std::min(raw.at(p) / scale, 1.0);
  return mask;
}

Map raw_mask(const LinearImage& xs, const LinearImage& xt, double alpha, const Coverage& coverage,
             const std::vector<double>& sigmas) {
  require_same_shape(xs, xt, "gt_mask");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("mask alpha must lie in [0, 1]");
  const Map ys = luminance(xs);
  const Map yt = luminance(xt);
  const Map robust = robust_distance(ys, yt, coverage, sigmas);
  Map raw(xs.height(), xs.width(), 1);
  for (std::size_t p = 0; p < raw.pixels(); ++p) {
    if (!covered(coverage, p)) continue;
    raw.at(p) = alpha * std::abs(std::log(yt.at(p)) - std::log(ys.at(p))) + (1.0 - alpha) * robust.at(p);
  }
  return raw;
}

SoftMask gt_mask(const LinearImage& xs, const LinearImage& xt, const MaskConfig& cfg,
                 const Coverage& coverage) {
  return normalize_mask(raw_mask(xs, xt, cfg.alpha, coverage, cfg.sigmas), coverage, cfg.percentile);
}

WeightMap mask_to_weight(const SoftMask& mask, double gamma) {
  if (!(gamma >= 0.0)) throw ConfigError("weight gamma must be >= 0");
  WeightMap w{Map(mask.values.height(), mask.values.width(), 1)};
  for (std::size_t p = 0; p < w.values.pixels(); ++p) w.values.at(p) = 1.0 + gamma * mask.values.at(p);
  return w;
}

double weighted_mse(const WeightMap& w, const Image<double>& pred, const Image<double>& target) {
  require_same_shape(pred, target, "weighted_mse");
  require_same_extent(w.values.height(), w.values.width(), pred.height(), pred.width(), "weighted_mse weights");
  if (pred.pixels() == 0) throw ShapeError("weighted_mse of an empty image");
  double total = 0.0;
  for (std::size_t p = 0; p < pred.pixels(); ++p) {
    double sq = 0.0;
    for (int c = 0; c < pred.channels(); ++c) {
      const double r = pred.at(p, c) - target.at(p, c);
      sq += r * r;
    }
    const double wp = w.values.at(p);
    total += wp * wp * sq;
  }
  return total / static_cast<double>(pred.pixels());
}

Image<double> masked_blend(const SoftMask& mask, const Image<double>& base, const Image<double>& full) {
  require_same_shape(base, full, "masked_blend");
  require_same_extent(mask.values.height(), mask.values.width(), base.height(), base.width(), "masked_blend mask");
  Image<double> out(base.height(), base.width(), base.channels());
  for (std::size_t p = 0; p < out.pixels(); ++p) {
    const double m = mask.values.at(p);
    for (int c = 0; c < out.channels(); ++c)
      out.at(p, c) = m == 1.0 ? full.at(p, c) : base.at(p, c) + m * (full.at(p, c) - base.at(p, c));
  }
  return out;
}

Image<double> mask_features(const LinearImage& xs, const ProxyMaps& intr, const CameraPose& cam,
                            const LightParams& source, const DeltaL& delta) {
  intr.check_shape();
  require_same_extent(xs.height(), xs.width(), intr.height(), intr.width(), "mask_features");
  const int h = xs.height(), w = xs.width();
  const Map y = luminance(xs);
  const CameraFrame frame(cam);
  const Direction ws = source.direction();
  const Direction wt = apply_delta(source, delta, RangePolicy::clamp).light.direction();
  const double dloge = std::abs(delta.delta_log_e);
  const double dtau = std::abs(delta.delta_tau);

  Image<double> f(h, w, kMaskFeatures);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double gx = (y(r, std::min(c + 1, w - 1)) - y(r, std::max(c - 1, 0))) /
                        std::max(1, std::min(c + 1, w - 1) - std::max(c - 1, 0));
      const double gy = (y(std::min(r + 1, h - 1), c) - y(std::max(r - 1, 0), c)) /
                        std::max(1, std::min(r + 1, h - 1) - std::max(r - 1, 0));
      const bool fg = intr.coverage(r, c) != 0;
      double shading = 0.0;
      if (fg) {
        const Vec3 n = frame.to_world({intr.normal(r, c, 0), intr.normal(r, c, 1), intr.normal(r, c, 2)});
        shading = std::abs(std::max(0.0, dot(n, wt)) - std::max(0.0, dot(n, ws)));
      }
      f(r, c, 0) = std::log(y(r, c));
      f(r, c, 1) = std::sqrt(gx * gx + gy * gy);
      f(r, c, 2) = shading;
      f(r, c, 3) = dloge;
      f(r, c, 4) = dtau;
      f(r, c, 5) = fg ? 1.0 : 0.0;
    }
  return f;
}

MaskPredictorParams MaskPredictorParams::init(int hidden, std::uint64_t seed) {
  return {TwoLayerNet::random(kMaskFeatures, hidden, 1, seed, 0.5)};
}

SoftMask predict_mask(const MaskPredictorParams& params, const Image<double>& features) {
  const TwoLayerNet& net = params.net;
  if (features.channels() != net.in)
    throw ShapeError("mask predictor expects " + std::to_string(net.in) + " features, got " +
                     std::to_string(features.channels()));
  SoftMask mask{Map(features.height(), features.width(), 1)};
  std::vector<double> act(static_cast<std::size_t>(net.hidden));
  double z = 0.0;
  for (std::size_t p = 0; p < features.pixels(); ++p) {
    net.forward(&features.at(p, 0), act.data(), &z);
    mask.values.at(p) = logistic(z);
  }
  return mask;
}

BceDice bce_dice_loss(const SoftMask& pred, const SoftMask& gt) {
  require_same_shape(pred.values, gt.values, "bce_dice_loss");
  const std::size_t n = pred.values.pixels();
  if (n == 0) throw ShapeError("bce_dice_loss of an empty mask");
  double bce = 0.0, inter = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::clamp(pred.values.at(i), kProbEps, 1.0 - kProbEps);
    const double g = gt.values.at(i);
    bce -= g * std::log(p) + (1.0 - g) * std::log(1.0 - p);
    inter += pred.values.at(i) * g;
    sq += pred.values.at(i) * pred.values.at(i) + g * g;
  }
  return {bce / static_cast<double>(n), 1.0 - (2.0 * inter + kDiceEps) / (sq + kDiceEps)};
}

double mask_objective(const TwoLayerNet& net, const std::vector<MaskTrainingExample>& examples,
                      int pixel_stride, std::vector<double>* grad) {
  if (examples.empty()) throw ConfigError("mask training needs at least one example");
  if (pixel_stride < 1) throw ConfigError("pixel stride must be >= 1");
  const auto hidden = static_cast<std::size_t>(net.hidden);
  double total = 0.0;
  std::vector<double> act, prob, target, dz_buf;
  std::vector<std::size_t> pixels;
  for (const auto& ex : examples) {
    const Image<double>& f = ex.features;
    require_same_extent(f.height(), f.width(), ex.target.values.height(), ex.target.values.width(),
                        "mask training example");
    if (f.channels() != net.in) throw ShapeError("mask training features have the wrong depth");
    pixels.clear();
    for (int r = 0; r < f.height(); r += pixel_stride)
      for (int c = 0; c < f.width(); c += pixel_stride)
        pixels.push_back(static_cast<std::size_t>(r) * static_cast<std::size_t>(f.width()) +
                         static_cast<std::size_t>(c));
    const std::size_t n = pixels.size();
    act.resize(n * hidden);
    prob.resize(n);
    target.resize(n);
    double bce = 0.0, inter = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      net.forward(&f.at(pixels[i], 0), act.data() + i * hidden, &z);
      const double g = ex.target.values.at(pixels[i]);
      const double p = logistic(z);
      prob[i] = p;
      target[i] = g;
      bce += softplus(z) - g * z;
      inter += p * g;
      sq += p * p + g * g;
    }
    const double dn = static_cast<double>(n);
    const double num = 2.0 * inter + kDiceEps;
    const double den = sq + kDiceEps;
    total += bce / dn + (1.0 - num / den);
    if (!grad) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = prob[i], g = target[i];
      const double ddice_dp = -(2.0 * g * den - num * 2.0 * p) / (den * den);
      double dz = ((p - g) / dn + ddice_dp * p * (1.0 - p)) / static_cast<double>(examples.size());
      net.backward(&f.at(pixels[i], 0), act.data() + i * hidden, &dz, grad->data());
    }
  }
  return total / static_cast<double>(examples.size());
}

MaskTrainResult train_mask_predictor(const std::vector<MaskTrainingExample>& examples,
                                     const MaskTrainConfig& cfg) {
  if (examples.empty()) throw ConfigError("mask training needs at least one pair");
  MaskTrainResult result{MaskPredictorParams::init(cfg.hidden, cfg.seed), {}};
  TwoLayerNet probe = result.params.net;
  const Objective objective = [&](const std::vector<double>& theta, std::vector<double>* grad) {
    probe.params = theta;
    return mask_objective(probe, examples, cfg.pixel_stride, grad);
  };
  try {
    result.trace = descend(objective, result.params.net.params, cfg.descent);
  } catch (const NumericError& e) {
    throw NumericError(std::string("mask predictor training: ") + e.what());
  }
  return result;
}

}  // namespace relight
