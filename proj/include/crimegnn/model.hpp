#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crimegnn/collapse.hpp"
#include "crimegnn/dense.hpp"
#include "crimegnn/error.hpp"
#include "crimegnn/gcn.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

struct TrainConfig {
  std::size_t k = 2;
  std::size_t hidden = 64;
  std::size_t feature_dim = 16;
  std::size_t epochs = 50;
  double lr = 0.001;
  double lambda = 1.0;  // collapse-penalty weight
  std::uint64_t seed = 0;
  std::size_t depth = 2;

  void validate() const {
    if (k < 1) throw Error("k must be at least 1");
    if (epochs < 1) throw Error("epochs must be at least 1");
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
    if (!(lambda >= 0.0)) throw Error("collapse weight must be non-negative");
    if (feature_dim < 2) throw Error("feature dimension must be at least 2");
    if (hidden < 1 || depth < 1) throw Error("hidden size and depth must be at least 1");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Values recorded at the start of each epoch, before its Adam step.
struct TrainHistory {
  std::vector<double> loss;
  std::vector<double> soft_modularity;
  std::vector<double> collapse_penalty;
};

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Column 0 is degree / max degree; the remaining columns are standard normal
// draws (node-major order) scaled by 1/sqrt(f - 1).
inline DenseMatrix default_features(const Graph& g, std::size_t feature_dim,
                                    std::uint64_t seed) {
  if (feature_dim < 2) throw std::invalid_argument("feature dimension must be at least 2");
  DenseMatrix x(g.size(), feature_dim);
  double max_degree = 0.0;
  for (const double d : g.degrees()) max_degree = std::max(max_degree, d);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim - 1));
  for (NodeId v = 0; v < g.size(); ++v) {
    x(v, 0) = max_degree > 0.0 ? g.degree(v) / max_degree : 0.0;
    for (std::size_t j = 1; j < feature_dim; ++j) x(v, j) = rng.normal() * scale;
  }
  return x;
}

inline ModelParams initial_params(const TrainConfig& cfg) {
  Rng rng(cfg.seed ^ stable_hash("crimegnn/init"));
  return ModelParams::glorot(cfg.feature_dim, cfg.hidden, cfg.k, cfg.depth, rng);
}

// Full-batch training: one Adam step on the whole graph per epoch.
inline TrainResult train(const Graph& g, const TrainConfig& cfg) {
  cfg.validate();
  if (!(g.total_weight() > 0.0)) throw Error("graph has no edges (m == 0)");
  if (cfg.k > g.size()) {
    throw Error("k = " + std::to_string(cfg.k) + " exceeds node count " +
                std::to_string(g.size()));
  }
  const SparseMatrix adj = normalize_adjacency(g);
  const DenseMatrix features = default_features(g, cfg.feature_dim, cfg.seed);

  TrainResult result{initial_params(cfg), {}};
  AdamState state = AdamState::for_params(result.params);
  const AdamOptions opt{.lr = cfg.lr};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto step = loss_and_grad(g, adj, features, result.params, cfg.lambda);
    result.history.loss.push_back(step.value.loss);
    result.history.soft_modularity.push_back(step.value.soft_modularity);
    result.history.collapse_penalty.push_back(step.value.collapse_penalty);
    adam_step(result.params, step.grad, state, opt);
  }
  return result;
}

// Per-row argmax; ties go to the lowest column.
inline Partition harden(const SoftAssignment& s) {
  std::vector<std::size_t> labels(s.rows(), 0);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto r = s.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    labels[i] = best;
  }
  return Partition(labels);
}

struct Prediction {
  Partition partition;
  SoftAssignment assignment;
};

inline Prediction predict_partition(const Graph& g, const ModelParams& params,
                                    const TrainConfig& cfg) {
  if (params.feature_dim() != cfg.feature_dim || params.community_count() != cfg.k ||
      params.hidden_dim() != cfg.hidden || params.depth() != cfg.depth) {
    throw std::invalid_argument("model parameters do not match the configuration");
  }
  const DenseMatrix features = default_features(g, cfg.feature_dim, cfg.seed);
  auto tape = gcn_forward(normalize_adjacency(g), features, params);
  Partition p = harden(tape.assignment);
  return {std::move(p), std::move(tape.assignment)};
}

// ---------------------------------------------------------------------------
// Model files
//
//   crimegnn-model 1
//   k <int>
//   hidden <int>
//   feature_dim <int>
//   epochs <int>
//   lr <hexfloat>
//   lambda <hexfloat>
//   seed <uint64>
//   depth <int>
//   tensor <name> <rows> <cols>
//   <rows lines of cols hexfloats>
//   ...
//
// Tensors appear in the order layer0.weight, layer0.bias, layer1.weight, ...,
// head. Hex-float text makes the round trip bit-exact.
// ---------------------------------------------------------------------------

struct Model {
  TrainConfig config;
  ModelParams params;
};

namespace detail {

inline std::string hex_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::hex);
  return std::string(buf, ptr);
}

inline double parse_hex_double(const std::string& token) {
  double x = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), x, std::chars_format::hex);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error("model file: bad hex float '" + token + "'");
  }
  return x;
}

inline std::vector<std::string> tensor_names(std::size_t depth) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < depth; ++l) {
    names.push_back("layer" + std::to_string(l) + ".weight");
    names.push_back("layer" + std::to_string(l) + ".bias");
  }
  names.emplace_back("head");
  return names;
}

}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

inline void save_model(std::ostream& out, const TrainConfig& cfg, const ModelParams& params) {
  out << "crimegnn-model " << kModelFormatVersion << '\n'
      << "k " << cfg.k << '\n'
      << "hidden " << cfg.hidden << '\n'
      << "feature_dim " << cfg.feature_dim << '\n'
      << "epochs " << cfg.epochs << '\n'
      << "lr " << detail::hex_double(cfg.lr) << '\n'
      << "lambda " << detail::hex_double(cfg.lambda) << '\n'
      << "seed " << cfg.seed << '\n'
      << "depth " << cfg.depth << '\n';
  const auto names = detail::tensor_names(params.depth());
  const auto tensors = params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const DenseMatrix& m = tensors[t].get();
    out << "tensor " << names[t] << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const auto r = m.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        out << (j ? " " : "") << detail::hex_double(r[j]);
      }
      out << '\n';
    }
  }
}

inline Model load_model(std::istream& in) {
  auto expect = [&in](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) {
      throw Error("model file: expected '" + key + "', got '" + word + "'");
    }
  };
  auto read_size = [&](const std::string& key) {
    expect(key);
    std::size_t v = 0;
    if (!(in >> v)) throw Error("model file: bad value for " + key);
    return v;
  };
  auto read_double = [&](const std::string& key) {
    expect(key);
    std::string token;
    in >> token;
    return detail::parse_hex_double(token);
  };

  expect("crimegnn-model");
  int version = 0;
  if (!(in >> version) || version != kModelFormatVersion) {
    throw Error("model file: unsupported format version");
  }
  Model model;
  TrainConfig& cfg = model.config;
  cfg.k = read_size("k");
  cfg.hidden = read_size("hidden");
  cfg.feature_dim = read_size("feature_dim");
  cfg.epochs = read_size("epochs");
  cfg.lr = read_double("lr");
  cfg.lambda = read_double("lambda");
  expect("seed");
  if (!(in >> cfg.seed)) throw Error("model file: bad seed");
  cfg.depth = read_size("depth");
  cfg.validate();

  model.params = ModelParams::zeros(cfg.feature_dim, cfg.hidden, cfg.k, cfg.depth);
  const auto names = detail::tensor_names(cfg.depth);
  auto tensors = model.params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    DenseMatrix& m = tensors[t].get();
    expect("tensor");
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(in >> name >> rows >> cols) || name != names[t] || rows != m.rows() ||
        cols != m.cols()) {
      throw Error("model file: tensor " + names[t] + " missing or misshapen");
    }
    for (double& x : m.values()) {
      std::string token;
      if (!(in >> token)) throw Error("model file: truncated tensor " + names[t]);
      x = detail::parse_hex_double(token);
    }
  }
  return model;
}

}  // namespace crimegnn
