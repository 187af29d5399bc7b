#pragma once

#include <cstddef>
#include <vector>

#include "relight/proxy.hpp"

namespace relight {

struct RewardBreakdown {
  double albedo_l1 = 0.0;
  double roughness_l1 = 0.0;
  double normal_angular = 0.0;  // radians
  double metallic_bce = 0.0;
  double total = 0.0;  // −(sum of the four terms), never positive
};

// Physics-based reward of predicted maps against ground truth, each term
// averaged over the selected pixels (gt coverage when pixels is empty).
RewardBreakdown reward(const ProxyMaps& pred, const ProxyMaps& gt, const Coverage& pixels = {});

struct PreferencePair {
  std::size_t example = 0;  // index into the supervised example list
  ProxyMaps y_pos;          // ground truth
  ProxyMaps y_neg;          // encoder output when the pair was built
  double delta_r = 0.0;
};

double reward_delta(const PreferencePair& pair, const ProxyMaps& gt, const Coverage& pixels = {});

inline constexpr double kMinRewardGap = 1e-6;

// One pair per example whose current prediction trails ground truth by at
// least kMinRewardGap.
std::vector<PreferencePair> build_preference_pairs(const EncoderParams& params,
                                                   const std::vector<ProxyExample>& examples);

struct DpoConfig {
  double beta = 0.5;
  double sigma_lik = 0.1;
  double learning_rate = 0.05;
  int iterations = 60;

  void validate() const;
};

// Gaussian log-likelihood of maps y under an encoder, −Σ_c (y − f)² / 2σ²
// averaged over the pixels.
double log_likelihood(const EncoderParams& params, const ProxyExample& ex, const ProxyMaps& y,
                      double sigma_lik);

// −log σ(β·[(logp_pol(y+) − logp_ref(y+)) − (logp_pol(y−) − logp_ref(y−))]).
// grad (optional) accumulates d(loss)/d(policy params) · scale.
double dpo_loss(const EncoderParams& policy, const EncoderParams& reference, const ProxyExample& ex,
                const PreferencePair& pair, const DpoConfig& cfg, std::vector<double>* grad = nullptr,
                double scale = 1.0);

double mean_reward(const EncoderParams& params, const std::vector<ProxyExample>& examples);

struct DpoLogEntry {
  int iteration = 0;
  double loss = 0.0;
  double mean_reward = 0.0;
  std::size_t pairs = 0;
};

struct DpoResult {
  EncoderParams params;
  std::vector<DpoLogEntry> log;
};

// The reference encoder is a frozen copy of params. Returns the iterate with
// the highest mean reward over the supervised examples, params included.
DpoResult dpo_refine(const EncoderParams& params, const std::vector<ProxyExample>& examples,
                     const DpoConfig& cfg = {});

}  // namespace relight
