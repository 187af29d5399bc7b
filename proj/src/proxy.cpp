#include "relight/proxy.hpp"

#include <algorithm>
#include <cmath>

#include "relight/error.hpp"
#include "relight/mask.hpp"

namespace relight {

namespace {

constexpr double kCoverageSmoothing = 4.0;
// Fixed gains bring every feature to roughly unit spread on rendered objects.
constexpr double kChromaGain = 8.0;

const Coverage& pick_pixels(const Coverage& pixels, const ProxyMaps& gt) {
  return pixels.empty() ? gt.coverage : pixels;
}

std::size_t count_on(const Coverage& c) {
  return static_cast<std::size_t>(std::count_if(c.data().begin(), c.data().end(), [](auto v) { return v != 0; }));
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// 3x3 Sobel responses with replicated borders, scaled by 1/8.
void sobel(const Map& m, int r, int c, double& gx, double& gy) {
  const int h = m.height(), w = m.width();
  auto at = [&](int y, int x) { return m(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };
  gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1) - at(r - 1, c - 1) -
        2.0 * at(r, c - 1) - at(r + 1, c - 1)) / 8.0;
  gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1) - at(r - 1, c - 1) -
        2.0 * at(r - 1, c) - at(r - 1, c + 1)) / 8.0;
}

}  // namespace

double bce(double target, double prob) {
  double loss = 0.0;
  if (target != 0.0) loss -= target * std::log(std::max(prob, kBceClamp));
  if (target != 1.0) loss -= (1.0 - target) * std::log(std::max(1.0 - prob, kBceClamp));
  return loss;
}

ProxyLossTerms proxy_loss(const ProxyMaps& pred, const ProxyMaps& gt, const ProxyLossWeights& w,
                          const Coverage& pixels) {
  pred.check_shape();
  gt.check_shape();
  require_same_extent(pred.height(), pred.width(), gt.height(), gt.width(), "proxy_loss");
  const Coverage& sel = pick_pixels(pixels, gt);
  require_same_extent(sel.height(), sel.width(), gt.height(), gt.width(), "proxy_loss pixels");
  const std::size_t n = count_on(sel);
  if (n == 0) throw DomainError("proxy_loss: empty foreground");

  ProxyLossTerms t;
  for (std::size_t p = 0; p < sel.pixels(); ++p) {
    if (!sel.at(p)) continue;
    double dotn = 0.0;
    for (int c = 0; c < 3; ++c) {
      t.albedo += std::abs(gt.albedo.at(p, c) - pred.albedo.at(p, c));
      dotn += gt.normal.at(p, c) * pred.normal.at(p, c);
    }
    t.normal += 1.0 - dotn;
    t.roughness += std::abs(gt.roughness.at(p) - pred.roughness.at(p));
    t.metallic += bce(gt.metallic.at(p), pred.metallic.at(p));
  }
  const double dn = static_cast<double>(n);
  t.albedo /= dn;
  t.normal /= dn;
  t.roughness /= dn;
  t.metallic /= dn;
  t.total = w.albedo * t.albedo + w.normal * t.normal + w.roughness * t.roughness + w.metallic * t.metallic;
  return t;
}

void proxy_loss_gradient(const ProxyMaps& pred, const ProxyMaps& gt, const ProxyLossWeights& w,
                         const Coverage& pixels, double scale, ProxyGradient& out) {
  const Coverage& sel = pick_pixels(pixels, gt);
  const std::size_t n = count_on(sel);
  if (n == 0) throw DomainError("proxy_loss: empty foreground");
  if (out.d.size() != sel.pixels()) throw ShapeError("proxy gradient buffer has the wrong size");
  const double k = scale / static_cast<double>(n);
  for (std::size_t p = 0; p < sel.pixels(); ++p) {
    if (!sel.at(p)) continue;
    auto& d = out.d[p];
    for (int c = 0; c < 3; ++c) {
      d[static_cast<std::size_t>(c)] += -k * w.albedo * sgn(gt.albedo.at(p, c) - pred.albedo.at(p, c));
      d[static_cast<std::size_t>(3 + c)] += -k * w.normal * gt.normal.at(p, c);
    }
    d[6] += -k * w.roughness * sgn(gt.roughness.at(p) - pred.roughness.at(p));
    const double m = gt.metallic.at(p), mh = pred.metallic.at(p);
    double dm = 0.0;
    if (m != 0.0 && mh > kBceClamp) dm -= m / mh;
    if (m != 1.0 && 1.0 - mh > kBceClamp) dm += (1.0 - m) / (1.0 - mh);
    d[7] += k * w.metallic * dm;
  }
}

Image<double> normalize_normals(const Image<double>& raw, const Coverage& coverage, int* zero_count) {
  if (raw.channels() != 3) throw ShapeError("normalize_normals needs 3 channels");
  if (!coverage.empty())
    require_same_extent(coverage.height(), coverage.width(), raw.height(), raw.width(), "normalize_normals");
  Image<double> out(raw.height(), raw.width(), 3);
  for (std::size_t p = 0; p < raw.pixels(); ++p) {
    if (!coverage.empty() && !coverage.at(p)) continue;
    const Vec3 v{raw.at(p, 0), raw.at(p, 1), raw.at(p, 2)};
    const double len = length(v);
    Vec3 n{0.0, 0.0, 1.0};
    if (len > 0.0 && std::isfinite(len))
      n = v / len;
    else if (zero_count)
      ++*zero_count;
    for (int c = 0; c < 3; ++c) out.at(p, c) = n[c];
  }
  return out;
}

Image<double> encoder_features(const LinearImage& img, const Coverage& coverage) {
  require_same_extent(img.height(), img.width(), coverage.height(), coverage.width(), "encoder_features");
  const int h = img.height(), w = img.width();
  const Map y = luminance(img);
  Map logy(h, w, 1), cov(h, w, 1);
  for (std::size_t p = 0; p < y.pixels(); ++p) {
    logy.at(p) = std::log(y.at(p));
    cov.at(p) = coverage.at(p) ? 1.0 : 0.0;
  }
  const Map smooth = gaussian_blur(cov, kCoverageSmoothing);
  Image<double> f(h, w, kEncoderFeatures);
  const double half_diag = std::sqrt(0.5);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double R = img(r, c, 0), G = img(r, c, 1), B = img(r, c, 2);
      const double sum = R + G + B;
      double lx, ly, cx, cy;
      sobel(logy, r, c, lx, ly);
      sobel(smooth, r, c, cx, cy);
      const double u = (c + 0.5) / w - 0.5, v = (r + 0.5) / h - 0.5;
      f(r, c, 0) = (logy(r, c) + 2.0) / 1.5;
      f(r, c, 1) = kChromaGain * ((sum > 0.0 ? R / sum : 1.0 / 3.0) - 1.0 / 3.0);
      f(r, c, 2) = kChromaGain * ((sum > 0.0 ? G / sum : 1.0 / 3.0) - 1.0 / 3.0);
      f(r, c, 3) = 3.0 * lx;
      f(r, c, 4) = 3.0 * ly;
      f(r, c, 5) = 15.0 * cx;
      f(r, c, 6) = 15.0 * cy;
      f(r, c, 7) = 4.0 * (std::sqrt(u * u + v * v) / half_diag - 0.35);
      f(r, c, 8) = cov(r, c);
    }
  return f;
}

EncoderParams EncoderParams::init(int hidden, std::uint64_t seed) {
  return {TwoLayerNet::random(kEncoderFeatures, hidden, kProxyChannels, seed, 0.5)};
}

ProxyMaps encode_features(const EncoderParams& params, const Image<double>& features,
                          const Coverage& coverage) {
  const TwoLayerNet& net = params.net;
  if (net.in != features.channels() || net.out != kProxyChannels)
    throw ShapeError("encoder shape does not match the feature stack");
  require_same_extent(features.height(), features.width(), coverage.height(), coverage.width(), "encode");
  ProxyMaps out(features.height(), features.width());
  out.coverage = coverage;
  std::vector<double> act(static_cast<std::size_t>(net.hidden));
  double y[kProxyChannels];
  for (std::size_t p = 0; p < features.pixels(); ++p) {
    if (!coverage.at(p)) continue;
    net.forward(&features.at(p, 0), act.data(), y);
    for (double v : y)
      if (!std::isfinite(v)) throw NumericError("encoder produced a non-finite activation at pixel " + std::to_string(p));
    for (int c = 0; c < 3; ++c) out.albedo.at(p, c) = logistic(y[c]);
    Vec3 n{y[3], y[4], y[5]};
    const double len = length(n);
    n = len > 0.0 ? n / len : Vec3{0.0, 0.0, 1.0};
    for (int c = 0; c < 3; ++c) out.normal.at(p, c) = n[c];
    out.roughness.at(p) = logistic(y[6]);
    out.metallic.at(p) = logistic(y[7]);
  }
  return out;
}

ProxyMaps encode(const EncoderParams& params, const LinearImage& img, const Coverage& coverage) {
  return encode_features(params, encoder_features(img, coverage), coverage);
}

void encoder_backward(const EncoderParams& params, const Image<double>& features,
                      const Coverage& coverage, const ProxyGradient& dmaps, std::vector<double>& grad) {
  const TwoLayerNet& net = params.net;
  if (grad.size() != net.params.size()) throw ShapeError("gradient buffer has the wrong size");
  std::vector<double> act(static_cast<std::size_t>(net.hidden));
  double y[kProxyChannels], dy[kProxyChannels];
  for (std::size_t p = 0; p < features.pixels(); ++p) {
    if (!coverage.at(p)) continue;
    const auto& d = dmaps.d[p];
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) continue;
    net.forward(&features.at(p, 0), act.data(), y);
    for (int c : {0, 1, 2, 6, 7}) {
      const double s = logistic(y[c]);
      dy[c] = d[static_cast<std::size_t>(c)] * s * (1.0 - s);
    }
    const Vec3 raw{y[3], y[4], y[5]};
    const double len = length(raw);
    if (len > 0.0) {
      const Vec3 n = raw / len;
      const Vec3 g{d[3], d[4], d[5]};
      const Vec3 dr = (g - n * dot(n, g)) / len;
      dy[3] = dr.x;
      dy[4] = dr.y;
      dy[5] = dr.z;
    } else {
      dy[3] = dy[4] = dy[5] = 0.0;
    }
    net.backward(&features.at(p, 0), act.data(), dy, grad.data());
  }
}

ProxyExample make_proxy_example(const LinearImage& img, const ProxyMaps& gt, const Coverage& pixels) {
  return {encoder_features(img, gt.coverage), gt.coverage, gt, pixels};
}

double proxy_objective(const EncoderParams& params, const std::vector<ProxyExample>& examples,
                       const ProxyLossWeights& w, std::vector<double>* grad) {
  if (examples.empty()) throw ConfigError("proxy fitting needs at least one supervised example");
  const double inv = 1.0 / static_cast<double>(examples.size());
  double total = 0.0;
  for (const auto& ex : examples) {
    const ProxyMaps pred = encode_features(params, ex.features, ex.coverage);
    total += proxy_loss(pred, ex.gt, w, ex.pixels).total * inv;
    if (grad) {
      ProxyGradient d(pred.coverage.pixels());
      proxy_loss_gradient(pred, ex.gt, w, ex.pixels, inv, d);
      encoder_backward(params, ex.features, ex.coverage, d, *grad);
    }
  }
  return total;
}

EncoderFitResult fit_encoder_from(EncoderParams start, const std::vector<ProxyExample>& examples,
                                  const ProxyLossWeights& w, const DescentConfig& descent) {
  if (examples.empty()) throw ConfigError("fit_encoder needs at least one supervised record");
  EncoderFitResult result{std::move(start), {}};
  EncoderParams probe = result.params;
  const Objective objective = [&](const std::vector<double>& theta, std::vector<double>* grad) {
    probe.net.params = theta;
    return proxy_objective(probe, examples, w, grad);
  };
  try {
    result.trace = descend(objective, result.params.net.params, descent);
  } catch (const NumericError& e) {
    throw NumericError(std::string("fit_encoder: ") + e.what());
  }
  return result;
}

EncoderFitResult fit_encoder(const std::vector<ProxyExample>& examples, const ProxyLossWeights& w,
                             const EncoderFitConfig& cfg) {
  return fit_encoder_from(EncoderParams::init(cfg.hidden, cfg.seed), examples, w, cfg.descent);
}

std::array<double, 8> pool_maps(const ProxyMaps& maps) {
  maps.check_shape();
  std::array<double, 8> acc{};
  std::size_t n = 0;
  for (std::size_t p = 0; p < maps.coverage.pixels(); ++p) {
    if (!maps.coverage.at(p)) continue;
    ++n;
    for (int c = 0; c < 3; ++c) {
      acc[static_cast<std::size_t>(c)] += maps.albedo.at(p, c);
      acc[static_cast<std::size_t>(3 + c)] += maps.normal.at(p, c);
    }
    acc[6] += maps.roughness.at(p);
    acc[7] += maps.metallic.at(p);
  }
  if (n == 0) throw DomainError("pool_project: empty foreground");
  for (double& v : acc) v /= static_cast<double>(n);
  return acc;
}

std::vector<double> pool_project(const ProxyMaps& maps, const TokenProjection& proj) {
  const auto pooled = pool_maps(maps);
  return apply_projection(std::vector<double>(pooled.begin(), pooled.end()), proj);
}

}  // namespace relight
