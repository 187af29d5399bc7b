#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace relight {

// Per-pixel feed-forward network: in -> tanh(hidden) -> out (linear).
// Parameters live in one flat vector: W1 (hidden x in), b1, W2 (out x hidden), b2.
struct TwoLayerNet {
  int in = 0;
  int hidden = 0;
  int out = 0;
  std::vector<double> params;

  static TwoLayerNet zeros(int in, int hidden, int out);
  static TwoLayerNet random(int in, int hidden, int out, std::uint64_t seed, double scale = 1.0);

  static std::size_t count(int in, int hidden, int out) {
    return static_cast<std::size_t>(hidden) * static_cast<std::size_t>(in + 1) +
           static_cast<std::size_t>(out) * static_cast<std::size_t>(hidden + 1);
  }
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(hidden * in); }
  std::size_t w2_offset() const { return b1_offset() + static_cast<std::size_t>(hidden); }
  std::size_t b2_offset() const { return w2_offset() + static_cast<std::size_t>(out * hidden); }

  void validate() const;

  // act receives the hidden activations (size hidden), y the outputs (size out).
  void forward(const double* x, double* act, double* y) const;
  // Accumulates d(loss)/d(params) into grad given d(loss)/d(y).
  void backward(const double* x, const double* act, const double* dy, double* grad) const;
};

// JSON document with the layer shape and a base64 float64 weight blob.
std::string net_to_json(const TwoLayerNet& net, const std::string& schema);
TwoLayerNet net_from_json(const std::string& text, const std::string& schema);

// Value (and optionally gradient) of an objective at a parameter vector.
using Objective = std::function<double(const std::vector<double>& params, std::vector<double>* grad)>;

struct DescentConfig {
  double learning_rate = 0.1;
  int iterations = 100;
  int max_halvings = 30;
  double divergence_limit = 1e3;
};

struct DescentTrace {
  std::vector<double> loss;  // loss after each accepted iteration, loss[0] is the start
  int halvings = 0;
  double final_learning_rate = 0.0;
};

// Plain gradient descent that halves the step whenever a trial step would
// raise the loss, so the recorded loss never increases. An optional accept
// hook can veto otherwise-acceptable steps.
DescentTrace descend(const Objective& objective, std::vector<double>& params,
                     const DescentConfig& cfg,
                     const std::function<bool(const std::vector<double>&)>& accept = {});

std::string base64_encode(const std::vector<double>& values);
std::vector<double> base64_decode_doubles(const std::string& text);

inline double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace relight
