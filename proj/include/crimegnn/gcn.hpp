#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crimegnn/collapse.hpp"
#include "crimegnn/dense.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

// One propagation layer: H_out = selu(Â H_in W + 1 bᵀ).
struct DenseLayer {
  DenseMatrix weight;  // in x out
  DenseMatrix bias;    // 1 x out
};

// Graph-convolutional encoder followed by a softmax assignment head.
struct ModelParams {
  std::vector<DenseLayer> layers;
  DenseMatrix head;  // hidden x k

  static ModelParams zeros(std::size_t feature_dim, std::size_t hidden, std::size_t k,
                           std::size_t depth = 2) {
    if (depth < 1) throw std::invalid_argument("encoder depth must be at least 1");
    ModelParams p;
    for (std::size_t l = 0; l < depth; ++l) {
      p.layers.push_back({DenseMatrix(l == 0 ? feature_dim : hidden, hidden),
                          DenseMatrix(1, hidden)});
    }
    p.head = DenseMatrix(hidden, k);
    return p;
  }

  // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  // Tensors are filled in order (layers, then head), row-major.
  static ModelParams glorot(std::size_t feature_dim, std::size_t hidden, std::size_t k,
                            std::size_t depth, Rng& rng) {
    ModelParams p = zeros(feature_dim, hidden, k, depth);
    auto init = [&rng](DenseMatrix& w) {
      const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (double& x : w.values()) x = rng.uniform(-bound, bound);
    };
    for (auto& layer : p.layers) init(layer.weight);
    init(p.head);
    return p;
  }

  std::size_t feature_dim() const { return layers.front().weight.rows(); }
  std::size_t hidden_dim() const { return head.rows(); }
  std::size_t community_count() const { return head.cols(); }
  std::size_t depth() const { return layers.size(); }

  std::vector<std::reference_wrapper<DenseMatrix>> tensors() {
    std::vector<std::reference_wrapper<DenseMatrix>> out;
    for (auto& layer : layers) {
      out.emplace_back(layer.weight);
      out.emplace_back(layer.bias);
    }
    out.emplace_back(head);
    return out;
  }

  std::vector<std::reference_wrapper<const DenseMatrix>> tensors() const {
    std::vector<std::reference_wrapper<const DenseMatrix>> out;
    for (const auto& layer : layers) {
      out.emplace_back(layer.weight);
      out.emplace_back(layer.bias);
    }
    out.emplace_back(head);
    return out;
  }

  bool same_shape(const ModelParams& other) const {
    const auto a = tensors();
    const auto b = other.tensors();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].get().same_shape(b[i].get())) return false;
    }
    return true;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (a.layers.size() != b.layers.size() || !(a.head == b.head)) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      if (!(a.layers[i].weight == b.layers[i].weight) ||
          !(a.layers[i].bias == b.layers[i].bias)) {
        return false;
      }
    }
    return true;
  }
};

// Â = D̃^{-1/2} (A + I) D̃^{-1/2}, D̃ the degree matrix of A + I. Self-loops
// enter A with their matrix weight 2w.
inline SparseMatrix normalize_adjacency(const Graph& g) {
  const std::size_t n = g.size();
  std::vector<double> inv_sqrt(n);
  for (NodeId v = 0; v < n; ++v) inv_sqrt[v] = 1.0 / std::sqrt(g.degree(v) + 1.0);

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<SparseMatrix::Entry> entries;
  for (NodeId u = 0; u < n; ++u) {
    bool diagonal_done = false;
    auto emit_diagonal = [&] {
      entries.push_back({u, (2.0 * g.self_loop(u) + 1.0) * inv_sqrt[u] * inv_sqrt[u]});
      diagonal_done = true;
    };
    for (const auto& nb : g.neighbors(u)) {
      if (!diagonal_done && nb.node >= u) emit_diagonal();
      if (nb.node == u) continue;
      entries.push_back({nb.node, nb.weight * (inv_sqrt[u] * inv_sqrt[nb.node])});
    }
    if (!diagonal_done) emit_diagonal();
    offsets[u + 1] = entries.size();
  }
  return SparseMatrix(n, std::move(offsets), std::move(entries));
}

namespace selu {

inline constexpr double kScale = 1.0507009873554804934193349852946;
inline constexpr double kAlpha = 1.6732632423543772848170429916717;

inline double value(double z) { return z > 0.0 ? kScale * z : kScale * kAlpha * std::expm1(z); }
inline double derivative(double z) { return z > 0.0 ? kScale : kScale * kAlpha * std::exp(z); }

}  // namespace selu

inline constexpr double kLogitClamp = 40.0;

// Intermediates of one forward pass, kept for the backward pass.
struct ForwardTape {
  std::vector<DenseMatrix> propagated;      // Â H_{l-1}, the input to W_l
  std::vector<DenseMatrix> pre_activation;  // Z_l
  std::vector<DenseMatrix> activations;     // H_l = selu(Z_l)
  DenseMatrix raw_logits;                   // H_L W_head, before clamping
  SoftAssignment assignment;                // row-softmax of clamped logits
};

namespace detail {

inline void require_params_match(const SparseMatrix& adj, const DenseMatrix& features,
                                 const ModelParams& params) {
  if (features.rows() != adj.rows()) {
    throw std::invalid_argument("feature matrix has " + std::to_string(features.rows()) +
                                " rows, graph has " + std::to_string(adj.rows()) + " nodes");
  }
  if (params.layers.empty() || features.cols() != params.feature_dim()) {
    throw std::invalid_argument("feature dimension " + std::to_string(features.cols()) +
                                " does not match the encoder input");
  }
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::size_t in = l == 0 ? params.feature_dim() : params.hidden_dim();
    if (layer.weight.rows() != in || layer.weight.cols() != params.hidden_dim() ||
        layer.bias.rows() != 1 || layer.bias.cols() != params.hidden_dim()) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has inconsistent shape");
    }
  }
}

inline void softmax_rows(const DenseMatrix& logits, SoftAssignment& out) {
  out = SoftAssignment(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    double top = -kLogitClamp;
    for (const double z : in) top = std::max(top, std::clamp(z, -kLogitClamp, kLogitClamp));
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(std::clamp(in[j], -kLogitClamp, kLogitClamp) - top);
      total += o[j];
    }
    for (double& x : o) x /= total;
  }
}

}  // namespace detail

inline ForwardTape gcn_forward(const SparseMatrix& adj, const DenseMatrix& features,
                               const ModelParams& params) {
  detail::require_params_match(adj, features, params);
  ForwardTape tape;
  const DenseMatrix* input = &features;
  for (const auto& layer : params.layers) {
    tape.propagated.push_back(adj.multiply(*input));
    DenseMatrix z = matmul(tape.propagated.back(), layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      for (std::size_t j = 0; j < z.cols(); ++j) r[j] += layer.bias(0, j);
    }
    DenseMatrix h(z.rows(), z.cols());
    const auto zs = z.values();
    auto hs = h.values();
    for (std::size_t i = 0; i < zs.size(); ++i) hs[i] = selu::value(zs[i]);
    tape.pre_activation.push_back(std::move(z));
    tape.activations.push_back(std::move(h));
    input = &tape.activations.back();
  }
  tape.raw_logits = matmul(*input, params.head);
  detail::softmax_rows(tape.raw_logits, tape.assignment);
  return tape;
}

struct LossParts {
  double loss = 0.0;
  double soft_modularity = 0.0;
  double collapse_penalty = 0.0;
};

struct LossAndGrad {
  LossParts value;
  ModelParams grad;
  SoftAssignment assignment;
};

namespace detail {

// loss = -soft_modularity(S) + lambda * collapse_penalty(S); also returns BS.
inline LossParts evaluate_loss(const Graph& g, const SoftAssignment& s, double lambda,
                               DenseMatrix* bs_out = nullptr) {
  const double two_m = 2.0 * require_edges(g);
  DenseMatrix bs = apply_modularity_operator(g, s);
  double trace = 0.0;
  const auto lhs = s.values();
  const auto rhs = bs.values();
  for (std::size_t i = 0; i < lhs.size(); ++i) trace += lhs[i] * rhs[i];
  LossParts parts;
  parts.soft_modularity = trace / two_m;
  parts.collapse_penalty = collapse_penalty(s);
  parts.loss = -parts.soft_modularity + lambda * parts.collapse_penalty;
  if (bs_out != nullptr) *bs_out = std::move(bs);
  return parts;
}

}  // namespace detail

inline LossParts loss_value(const Graph& g, const SparseMatrix& adj, const DenseMatrix& features,
                            const ModelParams& params, double lambda) {
  const auto tape = gcn_forward(adj, features, params);
  return detail::evaluate_loss(g, tape.assignment, lambda);
}

// Loss and its exact gradient for every parameter tensor, by reverse-mode
// accumulation through the fixed encoder/softmax/modularity computation.
inline LossAndGrad loss_and_grad(const Graph& g, const SparseMatrix& adj,
                                 const DenseMatrix& features, const ModelParams& params,
                                 double lambda) {
  const double m = detail::require_edges(g);
  auto tape = gcn_forward(adj, features, params);
  const SoftAssignment& s = tape.assignment;

  LossAndGrad out;
  DenseMatrix bs;
  out.value = detail::evaluate_loss(g, s, lambda, &bs);

  // dL/dS = -(1/m) B S + lambda * dP/dS   (B symmetric)
  DenseMatrix grad_s = collapse_penalty_gradient(s);
  {
    auto gs = grad_s.values();
    const auto b = bs.values();
    for (std::size_t i = 0; i < gs.size(); ++i) gs[i] = lambda * gs[i] - b[i] / m;
  }

  // Softmax backward; clamped logits pass no gradient.
  DenseMatrix grad_logits(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const auto si = s.row(i);
    const auto gi = grad_s.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < si.size(); ++j) dot += si[j] * gi[j];
    auto out_row = grad_logits.row(i);
    for (std::size_t j = 0; j < si.size(); ++j) {
      const double z = tape.raw_logits(i, j);
      out_row[j] = (z < -kLogitClamp || z > kLogitClamp) ? 0.0 : si[j] * (gi[j] - dot);
    }
  }

  out.grad = ModelParams::zeros(params.feature_dim(), params.hidden_dim(),
                                params.community_count(), params.depth());
  out.grad.head = matmul_tn(tape.activations.back(), grad_logits);
  DenseMatrix grad_h = matmul_nt(grad_logits, params.head);

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    DenseMatrix& grad_z = grad_h;  // reused in place
    const auto z = tape.pre_activation[l].values();
    auto gz = grad_z.values();
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] *= selu::derivative(z[i]);

    out.grad.layers[l].weight = matmul_tn(tape.propagated[l], grad_z);
    const auto bias_grad = column_sums(grad_z);
    for (std::size_t j = 0; j < bias_grad.size(); ++j) out.grad.layers[l].bias(0, j) = bias_grad[j];

    if (l > 0) {
      // dH_{l-1} = Âᵀ dZ Wᵀ = Â (dZ Wᵀ) since Â is symmetric.
      grad_h = adj.multiply(matmul_nt(grad_z, params.layers[l].weight));
    }
  }
  out.assignment = std::move(tape.assignment);
  return out;
}

inline LossAndGrad loss_and_grad(const Graph& g, const DenseMatrix& features,
                                 const ModelParams& params, double lambda) {
  return loss_and_grad(g, normalize_adjacency(g), features, params, lambda);
}

// Largest relative disagreement between the analytic gradient and central
// differences, max over all parameter entries of
// |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
inline double finite_diff_check(const Graph& g, const DenseMatrix& features,
                                const ModelParams& params, double lambda, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const SparseMatrix adj = normalize_adjacency(g);
  const auto analytic = loss_and_grad(g, adj, features, params, lambda);
  ModelParams probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.grad.tensors();

  double worst = 0.0;
  for (std::size_t t = 0; t < probe_tensors.size(); ++t) {
    auto values = probe_tensors[t].get().values();
    const auto grads = grad_tensors[t].get().values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss_value(g, adj, features, probe, lambda).loss;
      values[i] = saved - step;
      const double down = loss_value(g, adj, features, probe, lambda).loss;
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::abs(grads[i] - numeric) /
                         std::max(1e-12, std::abs(grads[i]) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& p) {
    auto zero = ModelParams::zeros(p.feature_dim(), p.hidden_dim(), p.community_count(),
                                   p.depth());
    return {zero, zero, 0};
  }
};

// Bias-corrected Adam, descending the gradient.
inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
                      const AdamOptions& opt = {}) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw std::invalid_argument("adam_step: parameter, gradient and state shapes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(opt.beta1, t);
  const double correction2 = 1.0 - std::pow(opt.beta2, t);

  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m1 = state.first_moment.tensors();
  auto m2 = state.second_moment.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto pv = p[k].get().values();
    const auto gv = g[k].get().values();
    auto mv = m1[k].get().values();
    auto vv = m2[k].get().values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = opt.beta1 * mv[i] + (1.0 - opt.beta1) * gv[i];
      vv[i] = opt.beta2 * vv[i] + (1.0 - opt.beta2) * gv[i] * gv[i];
      const double m_hat = mv[i] / correction1;
      const double v_hat = vv[i] / correction2;
      pv[i] -= opt.lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
    }
  }
}

}  // namespace crimegnn
