#include "relight/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relight/error.hpp"

namespace relight {

namespace {

const Coverage& pick(const Coverage& pixels, const ProxyMaps& gt) { return pixels.empty() ? gt.coverage : pixels; }

std::array<double, 8> channels_at(const ProxyMaps& m, std::size_t p) {
  return {m.albedo.at(p, 0), m.albedo.at(p, 1), m.albedo.at(p, 2), m.normal.at(p, 0),
          m.normal.at(p, 1), m.normal.at(p, 2), m.roughness.at(p), m.metallic.at(p)};
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

RewardBreakdown reward(const ProxyMaps& pred, const ProxyMaps& gt, const Coverage& pixels) {
  pred.check_shape();
  gt.check_shape();
  require_same_extent(pred.height(), pred.width(), gt.height(), gt.width(), "reward");
  const Coverage& sel = pick(pixels, gt);
  RewardBreakdown r;
  std::size_t n = 0;
  for (std::size_t p = 0; p < sel.pixels(); ++p) {
    if (!sel.at(p)) continue;
    ++n;
    const Vec3 a{gt.normal.at(p, 0), gt.normal.at(p, 1), gt.normal.at(p, 2)};
    const Vec3 b{pred.normal.at(p, 0), pred.normal.at(p, 1), pred.normal.at(p, 2)};
    for (int c = 0; c < 3; ++c) r.albedo_l1 += std::abs(gt.albedo.at(p, c) - pred.albedo.at(p, c));
    r.roughness_l1 += std::abs(gt.roughness.at(p) - pred.roughness.at(p));
    r.normal_angular += std::atan2(length(cross(a, b)), dot(a, b));
    r.metallic_bce += bce(gt.metallic.at(p), pred.metallic.at(p));
  }
  if (n == 0) throw DomainError("reward: empty foreground");
  const double dn = static_cast<double>(n);
  r.albedo_l1 /= dn;
  r.roughness_l1 /= dn;
  r.normal_angular /= dn;
  r.metallic_bce /= dn;
  r.total = -(r.albedo_l1 + r.roughness_l1 + r.normal_angular + r.metallic_bce);
  return r;
}

double reward_delta(const PreferencePair& pair, const ProxyMaps& gt, const Coverage& pixels) {
  return reward(pair.y_pos, gt, pixels).total - reward(pair.y_neg, gt, pixels).total;
}

std::vector<PreferencePair> build_preference_pairs(const EncoderParams& params,
                                                   const std::vector<ProxyExample>& examples) {
  std::vector<PreferencePair> pairs;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const ProxyExample& ex = examples[i];
    PreferencePair pair{i, ex.gt, encode_features(params, ex.features, ex.coverage), 0.0};
    pair.delta_r = reward_delta(pair, ex.gt, ex.pixels);
    if (pair.delta_r >= kMinRewardGap) pairs.push_back(std::move(pair));
  }
  return pairs;
}

void DpoConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("dpo beta must be > 0");
  if (!(sigma_lik > 0.0)) throw ConfigError("dpo sigma_lik must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("dpo learning rate must be > 0");
  if (iterations < 0) throw ConfigError("dpo iterations must be >= 0");
}

double log_likelihood(const EncoderParams& params, const ProxyExample& ex, const ProxyMaps& y,
                      double sigma_lik) {
  const ProxyMaps f = encode_features(params, ex.features, ex.coverage);
  const Coverage& sel = pick(ex.pixels, ex.gt);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < sel.pixels(); ++p) {
    if (!sel.at(p)) continue;
    ++n;
    const auto yv = channels_at(y, p), fv = channels_at(f, p);
    for (std::size_t c = 0; c < 8; ++c) sum += (yv[c] - fv[c]) * (yv[c] - fv[c]);
  }
  if (n == 0) throw DomainError("log_likelihood: empty foreground");
  return -sum / (2.0 * sigma_lik * sigma_lik * static_cast<double>(n));
}

double dpo_loss(const EncoderParams& policy, const EncoderParams& reference, const ProxyExample& ex,
                const PreferencePair& pair, const DpoConfig& cfg, std::vector<double>* grad, double scale) {
  cfg.validate();
  const double margin = (log_likelihood(policy, ex, pair.y_pos, cfg.sigma_lik) -
                         log_likelihood(reference, ex, pair.y_pos, cfg.sigma_lik)) -
                        (log_likelihood(policy, ex, pair.y_neg, cfg.sigma_lik) -
                         log_likelihood(reference, ex, pair.y_neg, cfg.sigma_lik));
  const double loss = softplus(-cfg.beta * margin);
  if (!std::isfinite(loss)) throw NumericError("dpo_loss is not finite");
  if (!grad) return loss;

  // dL/dM = −β σ(−βM); dM/df = (y+ − y−) / (N σ²).
  const double dl_dm = -cfg.beta * logistic(-cfg.beta * margin);
  const Coverage& sel = pick(ex.pixels, ex.gt);
  const auto n = static_cast<double>(std::count_if(sel.data().begin(), sel.data().end(), [](auto v) { return v != 0; }));
  const double k = scale * dl_dm / (n * cfg.sigma_lik * cfg.sigma_lik);
  ProxyGradient d(sel.pixels());
  for (std::size_t p = 0; p < sel.pixels(); ++p) {
    if (!sel.at(p)) continue;
    const auto yp = channels_at(pair.y_pos, p), yn = channels_at(pair.y_neg, p);
    for (std::size_t c = 0; c < 8; ++c) d.d[p][c] = k * (yp[c] - yn[c]);
  }
  encoder_backward(policy, ex.features, ex.coverage, d, *grad);
  return loss;
}

double mean_reward(const EncoderParams& params, const std::vector<ProxyExample>& examples) {
  if (examples.empty()) throw ConfigError("mean_reward needs examples");
  double total = 0.0;
  for (const auto& ex : examples)
    total += reward(encode_features(params, ex.features, ex.coverage), ex.gt, ex.pixels).total;
  return total / static_cast<double>(examples.size());
}

DpoResult dpo_refine(const EncoderParams& params, const std::vector<ProxyExample>& examples,
                     const DpoConfig& cfg) {
  cfg.validate();
  if (examples.empty()) throw ConfigError("dpo_refine needs supervised records");
  const EncoderParams reference = params;
  DpoResult result{params, {}};
  EncoderParams current = params;
  EncoderParams probe = params;
  double lr = cfg.learning_rate;
  double best_reward = mean_reward(params, examples);
  result.log.push_back({0, 0.0, best_reward, 0});

  for (int it = 1; it <= cfg.iterations; ++it) {
    const std::vector<PreferencePair> pairs = build_preference_pairs(current, examples);
    if (pairs.empty()) break;
    const double inv = 1.0 / static_cast<double>(pairs.size());
    const Objective objective = [&](const std::vector<double>& theta, std::vector<double>* grad) {
      probe.net.params = theta;
      double total = 0.0;
      for (const auto& pair : pairs)
        total += inv * dpo_loss(probe, reference, examples[pair.example], pair, cfg, grad, inv);
      return total;
    };
    DescentTrace step;
    try {
      step = descend(objective, current.net.params, {lr, 1, 30, 1e3});
    } catch (const NumericError& e) {
      throw NumericError("dpo_refine iteration " + std::to_string(it) + ": " + e.what());
    }
    lr = std::min(cfg.learning_rate, 2.0 * step.final_learning_rate);
    if (step.loss.size() < 2) break;
    const double r = mean_reward(current, examples);
    result.log.push_back({it, step.loss.back(), r, pairs.size()});
    // Only parameters that improve on the best mean reward so far are kept.
    if (r > best_reward) {
      best_reward = r;
      result.params = current;
    }
  }
  return result;
}

}  // namespace relight
