#include "relight/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "relight/error.hpp"
#include "relight/image_io.hpp"
#include "relight/random.hpp"

namespace relight {

TwoLayerNet TwoLayerNet::zeros(int in, int hidden, int out) {
  if (in <= 0 || hidden <= 0 || out <= 0) throw ShapeError("network layer widths must be positive");
  TwoLayerNet net{in, hidden, out, std::vector<double>(count(in, hidden, out), 0.0)};
  return net;
}

TwoLayerNet TwoLayerNet::random(int in, int hidden, int out, std::uint64_t seed, double scale) {
  TwoLayerNet net = zeros(in, hidden, out);
  Rng rng(seed);
  const double s1 = scale / std::sqrt(static_cast<double>(in));
  const double s2 = scale / std::sqrt(static_cast<double>(hidden));
  for (std::size_t i = net.w1_offset(); i < net.b1_offset(); ++i) net.params[i] = s1 * rng.normal();
  for (std::size_t i = net.w2_offset(); i < net.b2_offset(); ++i) net.params[i] = s2 * rng.normal();
  return net;
}

void TwoLayerNet::validate() const {
  if (in <= 0 || hidden <= 0 || out <= 0) throw ShapeError("network layer widths must be positive");
  if (params.size() != count(in, hidden, out))
    throw ShapeError("network expects " + std::to_string(count(in, hidden, out)) +
                     " parameters, has " + std::to_string(params.size()));
  for (double p : params)
    if (!std::isfinite(p)) throw NumericError("network parameter is not finite");
}

void TwoLayerNet::forward(const double* x, double* act, double* y) const {
  const double* w1 = params.data() + w1_offset();
  const double* b1 = params.data() + b1_offset();
  const double* w2 = params.data() + w2_offset();
  const double* b2 = params.data() + b2_offset();
  for (int h = 0; h < hidden; ++h) {
    double s = b1[h];
    const double* row = w1 + static_cast<std::ptrdiff_t>(h) * in;
    for (int i = 0; i < in; ++i) s += row[i] * x[i];
    act[h] = std::tanh(s);
  }
  for (int o = 0; o < out; ++o) {
    double s = b2[o];
    const double* row = w2 + static_cast<std::ptrdiff_t>(o) * hidden;
    for (int h = 0; h < hidden; ++h) s += row[h] * act[h];
    y[o] = s;
  }
}

void TwoLayerNet::backward(const double* x, const double* act, const double* dy, double* grad) const {
  const double* w2 = params.data() + w2_offset();
  double* gw1 = grad + w1_offset();
  double* gb1 = grad + b1_offset();
  double* gw2 = grad + w2_offset();
  double* gb2 = grad + b2_offset();
  for (int h = 0; h < hidden; ++h) {
    double dact = 0.0;
    for (int o = 0; o < out; ++o) {
      dact += dy[o] * w2[static_cast<std::ptrdiff_t>(o) * hidden + h];
      gw2[static_cast<std::ptrdiff_t>(o) * hidden + h] += dy[o] * act[h];
    }
    const double dpre = dact * (1.0 - act[h] * act[h]);
    gb1[h] += dpre;
    double* row = gw1 + static_cast<std::ptrdiff_t>(h) * in;
    for (int i = 0; i < in; ++i) row[i] += dpre * x[i];
  }
  for (int o = 0; o < out; ++o) gb2[o] += dy[o];
}

std::string base64_encode(const std::vector<double>& values) {
  Bytes raw(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) raw[i * 8 + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return base64_encode_bytes(raw);
}

std::vector<double> base64_decode_doubles(const std::string& text) {
  const Bytes raw = base64_decode_bytes(text);
  if (raw.size() % 8 != 0) throw IoError("base64 blob does not hold whole float64 values");
  std::vector<double> values(raw.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + static_cast<std::size_t>(b)]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string net_to_json(const TwoLayerNet& net, const std::string& schema) {
  net.validate();
  nlohmann::json j = {{"schema", schema},
                      {"layers", {net.in, net.hidden, net.out}},
                      {"activation", "tanh"},
                      {"dtype", "f64le"},
                      {"weights", base64_encode(net.params)}};
  return j.dump(2) + "\n";
}

TwoLayerNet net_from_json(const std::string& text, const std::string& schema) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema").get<std::string>() != schema)
      throw IoError("expected schema " + schema + ", found " + j.at("schema").get<std::string>());
    const auto layers = j.at("layers").get<std::vector<int>>();
    if (layers.size() != 3) throw IoError("network document must list three layer widths");
    TwoLayerNet net{layers[0], layers[1], layers[2],
                    base64_decode_doubles(j.at("weights").get<std::string>())};
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("network document: ") + e.what());
  }
}

DescentTrace descend(const Objective& objective, std::vector<double>& params,
                     const DescentConfig& cfg,
                     const std::function<bool(const std::vector<double>&)>& accept) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (cfg.iterations < 0) throw ConfigError("iteration count must be >= 0");
  DescentTrace trace;
  double lr = cfg.learning_rate;
  std::vector<double> grad(params.size(), 0.0);
  std::vector<double> trial(params.size());
  std::vector<double> trial_grad(params.size());

  double loss = objective(params, &grad);
  if (!std::isfinite(loss) || loss > cfg.divergence_limit)
    throw NumericError("objective diverged at iteration 0 (loss " + std::to_string(loss) + ")");
  trace.loss.push_back(loss);

  for (int it = 1; it <= cfg.iterations; ++it) {
    bool stepped = false;
    double trial_loss = loss;
    for (int tries = 0; tries <= cfg.max_halvings; ++tries) {
      for (std::size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - lr * grad[i];
      std::fill(trial_grad.begin(), trial_grad.end(), 0.0);
      trial_loss = objective(trial, &trial_grad);
      if (std::isfinite(trial_loss) && trial_loss <= loss && (!accept || accept(trial))) {
        stepped = true;
        break;
      }
      lr *= 0.5;
      ++trace.halvings;
    }
    if (!stepped) break;
    params.swap(trial);
    grad.swap(trial_grad);
    loss = trial_loss;
    if (loss > cfg.divergence_limit)
      throw NumericError("objective diverged at iteration " + std::to_string(it) + " (loss " +
                         std::to_string(loss) + ")");
    trace.loss.push_back(loss);
  }
  trace.final_learning_rate = lr;
  return trace;
}

}  // namespace relight
