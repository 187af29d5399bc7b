#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relight/image.hpp"
#include "relight/light_model.hpp"
#include "relight/nn.hpp"
#include "relight/surface_maps.hpp"

namespace relight {

struct ProxyLossWeights {
  double albedo = 1.0;
  double normal = 1.0;
  double roughness = 0.5;
  double metallic = 0.5;

  bool all_zero() const { return albedo == 0 && normal == 0 && roughness == 0 && metallic == 0; }
};

struct ProxyLossTerms {
  double albedo = 0.0;     // Σ_c |a − â|, foreground mean
  double normal = 0.0;     // 1 − <n, n̂>, foreground mean
  double roughness = 0.0;  // |r − r̂|, foreground mean
  double metallic = 0.0;   // BCE(m, m̂), foreground mean
  double total = 0.0;
};

inline constexpr double kBceClamp = 1e-7;

// Binary cross-entropy with both log arguments floored at 1e-7.
double bce(double target, double prob);

// pixels selects the foreground the terms average over; when empty the
// ground-truth coverage is used.
ProxyLossTerms proxy_loss(const ProxyMaps& pred, const ProxyMaps& gt, const ProxyLossWeights& w,
                          const Coverage& pixels = {});

// Scales each foreground vector to unit length. Zero vectors become (0,0,1)
// and are counted in *zero_count.
Image<double> normalize_normals(const Image<double>& raw, const Coverage& coverage,
                                int* zero_count = nullptr);

inline constexpr int kEncoderFeatures = 9;
inline const std::string kEncoderSchema = "relight-proxy-encoder/1";

// log-luminance, 2 chromaticities, Sobel x/y of log-luminance, Sobel x/y of
// smoothed coverage, radial image coordinate, coverage.
Image<double> encoder_features(const LinearImage& img, const Coverage& coverage);

struct EncoderParams {
  TwoLayerNet net;

  static EncoderParams init(int hidden, std::uint64_t seed);
  std::string to_json() const { return net_to_json(net, kEncoderSchema); }
  static EncoderParams from_json(const std::string& text) { return {net_from_json(text, kEncoderSchema)}; }
  bool operator==(const EncoderParams& o) const {
    return net.in == o.net.in && net.hidden == o.net.hidden && net.out == o.net.out &&
           net.params == o.net.params;
  }
};

ProxyMaps encode(const EncoderParams& params, const LinearImage& img, const Coverage& coverage);
ProxyMaps encode_features(const EncoderParams& params, const Image<double>& features,
                          const Coverage& coverage);

// Output-space gradient for one encoder pass; consumed by encoder_backward.
struct ProxyGradient {
  std::vector<std::array<double, 8>> d;  // per pixel: d/d(albedo3, normal3, rough, metal)
  explicit ProxyGradient(std::size_t pixels) : d(pixels, std::array<double, 8>{}) {}
};

// Accumulates d(loss)/d(params) for maps produced by encode_features.
void encoder_backward(const EncoderParams& params, const Image<double>& features,
                      const Coverage& coverage, const ProxyGradient& dmaps, std::vector<double>& grad);

// Adds d(proxy_loss)/d(pred) · scale into out.
void proxy_loss_gradient(const ProxyMaps& pred, const ProxyMaps& gt, const ProxyLossWeights& w,
                         const Coverage& pixels, double scale, ProxyGradient& out);

struct ProxyExample {
  Image<double> features;
  Coverage coverage;  // encoder foreground (image alpha)
  ProxyMaps gt;
  Coverage pixels;  // supervised pixels; empty = gt coverage
};

ProxyExample make_proxy_example(const LinearImage& img, const ProxyMaps& gt, const Coverage& pixels = {});

double proxy_objective(const EncoderParams& params, const std::vector<ProxyExample>& examples,
                       const ProxyLossWeights& w, std::vector<double>* grad);

struct EncoderFitConfig {
  int hidden = 32;
  std::uint64_t seed = 11;
  DescentConfig descent{0.5, 400, 30, 1e3};
};

struct EncoderFitResult {
  EncoderParams params;
  DescentTrace trace;
};

EncoderFitResult fit_encoder(const std::vector<ProxyExample>& examples, const ProxyLossWeights& w,
                             const EncoderFitConfig& cfg = {});
// Continues from given parameters.
EncoderFitResult fit_encoder_from(EncoderParams start, const std::vector<ProxyExample>& examples,
                                  const ProxyLossWeights& w, const DescentConfig& descent);

// Coverage-weighted mean of the 8 channels: albedo(3), normal(3), roughness, metallic.
std::array<double, 8> pool_maps(const ProxyMaps& maps);
std::vector<double> pool_project(const ProxyMaps& maps, const TokenProjection& proj);

}  // namespace relight
