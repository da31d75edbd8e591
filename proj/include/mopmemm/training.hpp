// Training: the conditional (L_C) and marginal (L_M) objectives, their
// gradients, ridge regularization, and a limited-memory quasi-Newton loop.
// The L_M gradient uses the weight-based reordering: an adjoint recursion
// solves w = gamma^T (I - A)^{-1} B without ever materializing a dense
// inverse, then one forward pass adds the sparse conditional gradients with
// those weights.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mopmemm/core.hpp"
#include "mopmemm/features.hpp"
#include "mopmemm/graph.hpp"
#include "mopmemm/inference.hpp"
#include "mopmemm/model.hpp"
#include "mopmemm/parallel.hpp"

namespace mopmemm {

// ---------------------------------------------------------------------------
// Score-space chain rule. For one conditional p(. | parent) and a weight
// vector w over child labels,
//   sum_{y_k} w(y_k) dp(y_k)/dtheta
// reduces to q(c) = p(c) * (w(c) - sum_y w(y) p(y)) per child score c, after
// which mu picks up q(c) * g_t and the parent's lambda row picks up
// q(c) * f_s. Only active predicates are touched.
// ---------------------------------------------------------------------------

inline void weighted_score_derivative(std::span<const double> cond_row,
                                      std::span<const double> weight, std::span<double> q_out) {
  double dot = 0.0;
  const int y = static_cast<int>(cond_row.size());
  for (int c = 0; c < y; ++c) dot += weight[static_cast<std::size_t>(c)] * cond_row[static_cast<std::size_t>(c)];
  for (int c = 0; c < y; ++c)
    q_out[static_cast<std::size_t>(c)] =
        cond_row[static_cast<std::size_t>(c)] * (weight[static_cast<std::size_t>(c)] - dot);
}

inline void scatter_mu(SparseGradient& grad, const ParameterLayout& layout, EdgeClass cls,
                       const PredicateVector& node_preds, std::span<const double> q) {
  const int y = layout.num_labels();
  for (const PredEntry& e : node_preds) {
    if (e.id >= layout.node_vocab()) continue;
    for (int c = 0; c < y; ++c)
      grad.add(layout.mu_index(cls, e.id, c), e.value * q[static_cast<std::size_t>(c)]);
  }
}

inline void scatter_lambda(SparseGradient& grad, const ParameterLayout& layout, EdgeClass cls,
                           const PredicateVector& pair_preds, int parent_label,
                           std::span<const double> q) {
  const int y = layout.num_labels();
  for (const PredEntry& e : pair_preds) {
    if (e.id >= layout.pair_vocab()) continue;
    for (int c = 0; c < y; ++c)
      grad.add(layout.lambda_index(cls, e.id, parent_label, c),
               e.value * q[static_cast<std::size_t>(c)]);
  }
}

// ---------------------------------------------------------------------------
// Conditional log-likelihood L_C: sum_k log of the mixture probability of
// the gold label given the gold parent labels (START for parentless nodes).
// Gradient: sum_k [sum_j alpha_kj grad p(y_k | y_j, x)] / p(y_k | y_pi_k, x).
// ---------------------------------------------------------------------------

struct ObjectiveValue {
  double value = 0.0;
  SparseGradient gradient;
};

namespace detail {

inline int require_gold(const FeaturizedInstance& inst, int k) {
  const int g = inst.gold[static_cast<std::size_t>(k)];
  if (g < 0)
    throw data_error("objective: node " + std::to_string(k) + " has no gold label");
  return g;
}

}  // namespace detail

inline ObjectiveValue loglik_conditional(const ModelSet& models,
                                         const FeaturizedInstance& instance) {
  const ParentGraph& graph = instance.graph;
  instance.validate_alignment(graph);
  const int y = models.labels().size();
  const int start_label = models.labels().start_index();
  const ParameterLayout& layout = models.layout();

  ObjectiveValue out;
  std::vector<double> weight(static_cast<std::size_t>(y));
  std::vector<double> q(static_cast<std::size_t>(y));

  for (int k = 0; k < graph.n; ++k) {
    const int gold_k = detail::require_gold(instance, k);
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      const Distribution d = edge_conditional(models.for_class(EdgeClass::local),
                                              instance.node_preds[static_cast<std::size_t>(k)],
                                              instance.start_preds[static_cast<std::size_t>(k)],
                                              start_label);
      const double p = d[gold_k];
      if (p == 0.0) {
        out.value = -std::numeric_limits<double>::infinity();
        return out;
      }
      out.value += std::log(p);
      std::fill(weight.begin(), weight.end(), 0.0);
      weight[static_cast<std::size_t>(gold_k)] = 1.0 / p;
      weighted_score_derivative(d.probs, weight, q);
      scatter_mu(out.gradient, layout, EdgeClass::local,
                 instance.node_preds[static_cast<std::size_t>(k)], q);
      scatter_lambda(out.gradient, layout, EdgeClass::local,
                     instance.start_preds[static_cast<std::size_t>(k)], start_label, q);
      continue;
    }

    const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
    std::vector<Distribution> conds(plist.size());
    double mixture = 0.0;
    for (std::size_t i = 0; i < plist.size(); ++i) {
      const int gold_j = detail::require_gold(instance, plist[i].parent);
      conds[i] = edge_conditional(models.for_class(plist[i].cls),
                                  instance.node_preds[static_cast<std::size_t>(k)],
                                  instance.edge_preds[static_cast<std::size_t>(k)][i], gold_j);
      mixture += alpha[i] * conds[i][gold_k];
    }
    if (mixture == 0.0) {
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
    out.value += std::log(mixture);
    for (std::size_t i = 0; i < plist.size(); ++i) {
      const int gold_j = instance.gold[static_cast<std::size_t>(plist[i].parent)];
      std::fill(weight.begin(), weight.end(), 0.0);
      weight[static_cast<std::size_t>(gold_k)] = alpha[i] / mixture;
      weighted_score_derivative(conds[i].probs, weight, q);
      scatter_mu(out.gradient, layout, plist[i].cls,
                 instance.node_preds[static_cast<std::size_t>(k)], q);
      scatter_lambda(out.gradient, layout, plist[i].cls,
                     instance.edge_preds[static_cast<std::size_t>(k)][i], gold_j, q);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pooled edge likelihood ("separate training"): every edge is scored as an
// independent maxent example log p(gold child | gold parent). The sum is
// separable per edge class, so one run fits each class on its pooled edges.
// ---------------------------------------------------------------------------

inline ObjectiveValue loglik_pooled_edges(const ModelSet& models,
                                          const FeaturizedInstance& instance) {
  const ParentGraph& graph = instance.graph;
  instance.validate_alignment(graph);
  const int y = models.labels().size();
  const int start_label = models.labels().start_index();
  const ParameterLayout& layout = models.layout();

  ObjectiveValue out;
  std::vector<double> weight(static_cast<std::size_t>(y));
  std::vector<double> q(static_cast<std::size_t>(y));

  auto add_edge = [&](EdgeClass cls, const PredicateVector& node_preds,
                      const PredicateVector& pair_preds, int parent_label, int gold_k) -> bool {
    const Distribution d =
        edge_conditional(models.for_class(cls), node_preds, pair_preds, parent_label);
    const double p = d[gold_k];
    if (p == 0.0) return false;
    out.value += std::log(p);
    std::fill(weight.begin(), weight.end(), 0.0);
    weight[static_cast<std::size_t>(gold_k)] = 1.0 / p;
    weighted_score_derivative(d.probs, weight, q);
    scatter_mu(out.gradient, layout, cls, node_preds, q);
    scatter_lambda(out.gradient, layout, cls, pair_preds, parent_label, q);
    return true;
  };

  for (int k = 0; k < graph.n; ++k) {
    const int gold_k = detail::require_gold(instance, k);
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    bool ok = true;
    if (plist.empty()) {
      ok = add_edge(EdgeClass::local, instance.node_preds[static_cast<std::size_t>(k)],
                    instance.start_preds[static_cast<std::size_t>(k)], start_label, gold_k);
    } else {
      for (std::size_t i = 0; i < plist.size() && ok; ++i)
        ok = add_edge(plist[i].cls, instance.node_preds[static_cast<std::size_t>(k)],
                      instance.edge_preds[static_cast<std::size_t>(k)][i],
                      detail::require_gold(instance, plist[i].parent), gold_k);
    }
    if (!ok) {
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reordered gradient weights. With
//   gamma_k(y) = 1{y == gold_k} / p(gold_k | x)
// the adjoint rho solves rho = gamma + A^T rho by one reverse-topological
// sweep (children push into parents), which is the triangular solve behind
// w = gamma^T (I - A)^{-1} B. The weights are then
//   w_kj(y_j, y_k) = rho_k(y_k) * alpha_kj * p(y_j | x),
// and for a parentless node's START edge simply rho_k(y_k).
// ---------------------------------------------------------------------------

struct GradientWeights {
  // start_w[k]: length |Y|, only for parentless nodes.
  std::vector<std::vector<double>> start_w;
  // edge_w[k][i]: row-major (y_j, y_k), |Y| x |Y|.
  std::vector<std::vector<std::vector<double>>> edge_w;
  std::vector<std::vector<double>> rho;
};

inline GradientWeights compute_gradient_weights_kernels(const ParentGraph& graph,
                                                        const EdgeKernels& kernels,
                                                        const MarginalTable& marginals,
                                                        const std::vector<int>& gold) {
  const int y = kernels.num_labels;
  GradientWeights w;
  w.rho.assign(static_cast<std::size_t>(graph.n), std::vector<double>(static_cast<std::size_t>(y), 0.0));

  for (int k = 0; k < graph.n; ++k) {
    const int g = gold[static_cast<std::size_t>(k)];
    if (g < 0) continue;
    const double p = marginals.at(k, g);
    if (p == 0.0)
      throw numeric_error("compute_gradient_weights: zero marginal at gold label (degenerate gamma)");
    w.rho[static_cast<std::size_t>(k)][static_cast<std::size_t>(g)] = 1.0 / p;
  }

  // Children push their adjoint mass into each parent.
  for (int k = graph.n - 1; k >= 0; --k) {
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
    const auto& rho_k = w.rho[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < plist.size(); ++i) {
      auto& rho_j = w.rho[static_cast<std::size_t>(plist[i].parent)];
      for (int yj = 0; yj < y; ++yj) {
        std::span<const double> row = kernels.cond_row(k, static_cast<int>(i), yj);
        double acc = 0.0;
        for (int yk = 0; yk < y; ++yk)
          acc += rho_k[static_cast<std::size_t>(yk)] * row[static_cast<std::size_t>(yk)];
        rho_j[static_cast<std::size_t>(yj)] += alpha[i] * acc;
      }
    }
  }

  w.start_w.resize(static_cast<std::size_t>(graph.n));
  w.edge_w.resize(static_cast<std::size_t>(graph.n));
  for (int k = 0; k < graph.n; ++k) {
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    const auto& rho_k = w.rho[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      w.start_w[static_cast<std::size_t>(k)] = rho_k;
      continue;
    }
    const auto& alpha = graph.alphas[static_cast<std::size_t>(k)];
    auto& tables = w.edge_w[static_cast<std::size_t>(k)];
    tables.resize(plist.size());
    for (std::size_t i = 0; i < plist.size(); ++i) {
      std::span<const double> parent_marg = marginals.row(plist[i].parent);
      auto& table = tables[i];
      table.resize(static_cast<std::size_t>(y) * static_cast<std::size_t>(y));
      for (int yj = 0; yj < y; ++yj)
        for (int yk = 0; yk < y; ++yk)
          table[static_cast<std::size_t>(yj) * y + static_cast<std::size_t>(yk)] =
              rho_k[static_cast<std::size_t>(yk)] * alpha[i] *
              parent_marg[static_cast<std::size_t>(yj)];
    }
  }
  return w;
}

inline GradientWeights compute_gradient_weights(const ModelSet& models, const ParentGraph& graph,
                                                const FeaturizedInstance& instance,
                                                const MarginalTable& marginals) {
  return compute_gradient_weights_kernels(graph, compute_edge_kernels(models, graph, instance),
                                          marginals, instance.gold);
}

// ---------------------------------------------------------------------------
// Marginal log-likelihood L_M = sum_k log p(gold_k | x). Value from the
// forward sweep; gradient from the reordered weights plus one forward pass
// that adds w-weighted sparse conditional gradients.
// ---------------------------------------------------------------------------

inline ObjectiveValue loglik_marginal(const ModelSet& models, const FeaturizedInstance& instance) {
  const ParentGraph& graph = instance.graph;
  const EdgeKernels kernels = compute_edge_kernels(models, graph, instance);
  const MarginalTable marginals = forward_marginals_kernels(graph, kernels);
  const ParameterLayout& layout = models.layout();
  const int y = kernels.num_labels;
  const int start_label = models.labels().start_index();

  ObjectiveValue out;
  for (int k = 0; k < graph.n; ++k) {
    const int g = detail::require_gold(instance, k);
    const double p = marginals.at(k, g);
    if (p == 0.0) {
      out.value = -std::numeric_limits<double>::infinity();
      return out;
    }
    out.value += std::log(p);
  }

  const GradientWeights weights =
      compute_gradient_weights_kernels(graph, kernels, marginals, instance.gold);

  std::vector<double> q(static_cast<std::size_t>(y));
  std::vector<double> q_sum(static_cast<std::size_t>(y));
  for (int k = 0; k < graph.n; ++k) {
    const auto& plist = graph.parents[static_cast<std::size_t>(k)];
    if (plist.empty()) {
      weighted_score_derivative(kernels.start[static_cast<std::size_t>(k)],
                                weights.start_w[static_cast<std::size_t>(k)], q);
      scatter_mu(out.gradient, layout, EdgeClass::local,
                 instance.node_preds[static_cast<std::size_t>(k)], q);
      scatter_lambda(out.gradient, layout, EdgeClass::local,
                     instance.start_preds[static_cast<std::size_t>(k)], start_label, q);
      continue;
    }
    for (std::size_t i = 0; i < plist.size(); ++i) {
      const auto& table = weights.edge_w[static_cast<std::size_t>(k)][i];
      std::fill(q_sum.begin(), q_sum.end(), 0.0);
      for (int yj = 0; yj < y; ++yj) {
        std::span<const double> wrow{table.data() + static_cast<std::size_t>(yj) * y,
                                     static_cast<std::size_t>(y)};
        weighted_score_derivative(kernels.cond_row(k, static_cast<int>(i), yj), wrow, q);
        scatter_lambda(out.gradient, layout, plist[i].cls,
                       instance.edge_preds[static_cast<std::size_t>(k)][i], yj, q);
        for (int c = 0; c < y; ++c) q_sum[static_cast<std::size_t>(c)] += q[static_cast<std::size_t>(c)];
      }
      scatter_mu(out.gradient, layout, plist[i].cls,
                 instance.node_preds[static_cast<std::size_t>(k)], q_sum);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective configuration and the fitting loop.
// ---------------------------------------------------------------------------

enum class ObjectiveKind { conditional, marginal };

inline std::string_view to_string(ObjectiveKind k) {
  return k == ObjectiveKind::conditional ? "conditional" : "marginal";
}

inline ObjectiveKind objective_kind_from_string(std::string_view s) {
  if (s == "conditional") return ObjectiveKind::conditional;
  if (s == "marginal") return ObjectiveKind::marginal;
  throw usage_error("unknown objective '" + std::string(s) + "'");
}

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::conditional;
  // Separate-training mode: fit each edge class on its pooled edges with
  // the plain per-edge conditional likelihood. Only meaningful with the
  // conditional objective.
  bool separate_pooled = false;
  double sigma2 = 10.0;
  int max_iterations = 200;
  double grad_tolerance = 1e-4;
  int history = 10;

  void validate() const {
    if (sigma2 <= 0.0) throw usage_error("ObjectiveConfig: sigma2 must be > 0");
    if (max_iterations < 1) throw usage_error("ObjectiveConfig: max_iterations must be >= 1");
    if (grad_tolerance <= 0.0) throw usage_error("ObjectiveConfig: tolerance must be > 0");
    if (history < 1) throw usage_error("ObjectiveConfig: history must be >= 1");
    if (separate_pooled && kind == ObjectiveKind::marginal)
      throw usage_error("ObjectiveConfig: separate training uses the conditional objective");
  }
};

struct IterationRecord {
  int iteration;
  double objective;
  double grad_inf_norm;
  double step;
};

struct LbfgsResult {
  std::vector<double> x;
  double objective = 0.0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

// Limited-memory quasi-Newton ascent with a backtracking line search under
// the sufficient-increase (Armijo) condition. Non-finite trial values reject
// the step and halve it; running out of halvings raises optim_error.
template <typename Eval>
LbfgsResult lbfgs_maximize(Eval&& eval, std::vector<double> x0, int history, int max_iterations,
                           double grad_tolerance,
                           const std::function<void(const IterationRecord&)>& progress = {}) {
  constexpr double kArmijoC1 = 1e-4;
  constexpr int kMaxHalvings = 50;
  const std::size_t dim = x0.size();

  std::vector<double> x = std::move(x0);
  std::vector<double> grad(dim, 0.0);
  double value = eval(x, grad);
  if (!std::isfinite(value)) throw optim_error("lbfgs: objective not finite at the initial point");

  auto inf_norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };

  LbfgsResult result;
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho_hist;
  std::vector<double> direction(dim), x_prev(dim), grad_prev(dim), alpha_buf;

  for (int iter = 1; iter <= max_iterations; ++iter) {
    const double gnorm = inf_norm(grad);
    if (gnorm <= grad_tolerance) {
      result.converged = true;
      break;
    }

    // Two-loop recursion on the ascent direction d = H * grad.
    direction = grad;
    const int m = static_cast<int>(s_hist.size());
    alpha_buf.assign(static_cast<std::size_t>(m), 0.0);
    for (int i = m - 1; i >= 0; --i) {
      double sd = 0.0;
      for (std::size_t d = 0; d < dim; ++d) sd += s_hist[static_cast<std::size_t>(i)][d] * direction[d];
      const double a = rho_hist[static_cast<std::size_t>(i)] * sd;
      alpha_buf[static_cast<std::size_t>(i)] = a;
      for (std::size_t d = 0; d < dim; ++d) direction[d] -= a * y_hist[static_cast<std::size_t>(i)][d];
    }
    if (m > 0) {
      double ys = 0.0, yy = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        ys += y_hist.back()[d] * s_hist.back()[d];
        yy += y_hist.back()[d] * y_hist.back()[d];
      }
      const double scale = ys / yy;
      for (double& e : direction) e *= scale;
    }
    for (int i = 0; i < m; ++i) {
      double yd = 0.0;
      for (std::size_t d = 0; d < dim; ++d) yd += y_hist[static_cast<std::size_t>(i)][d] * direction[d];
      const double b = rho_hist[static_cast<std::size_t>(i)] * yd;
      for (std::size_t d = 0; d < dim; ++d)
        direction[d] += (alpha_buf[static_cast<std::size_t>(i)] - b) * s_hist[static_cast<std::size_t>(i)][d];
    }

    double dir_deriv = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dir_deriv += grad[d] * direction[d];
    if (dir_deriv <= 0.0) {
      // Curvature information went bad; restart from steepest ascent.
      direction = grad;
      dir_deriv = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dir_deriv += grad[d] * grad[d];
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0;
    if (iter == 1) {
      double dnorm = 0.0;
      for (double e : direction) dnorm += e * e;
      dnorm = std::sqrt(dnorm);
      if (dnorm > 1.0) step = 1.0 / dnorm;
    }

    x_prev = x;
    grad_prev = grad;
    const double value_prev = value;
    bool accepted = false;
    for (int half = 0; half < kMaxHalvings; ++half) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = x_prev[d] + step * direction[d];
      value = eval(x, grad);
      if (std::isfinite(value) && value >= value_prev + kArmijoC1 * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      x = x_prev;
      grad = grad_prev;
      value = value_prev;
      throw optim_error("lbfgs: line search failed after repeated halvings (objective " +
                        std::to_string(value_prev) + ")");
    }

    std::vector<double> s(dim), ydiff(dim);
    double ys = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      s[d] = x[d] - x_prev[d];
      // Curvature pair for maximization: flip the gradient difference so the
      // stored pairs satisfy the standard positive-curvature convention.
      ydiff[d] = grad_prev[d] - grad[d];
      ys += s[d] * ydiff[d];
    }
    if (ys > 1e-12) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(ydiff));
      rho_hist.push_back(1.0 / ys);
      if (static_cast<int>(s_hist.size()) > history) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }

    const IterationRecord rec{iter, value, inf_norm(grad), step};
    result.trace.push_back(rec);
    if (progress) progress(rec);
  }

  result.x = std::move(x);
  result.objective = value;
  if (!result.converged && !result.trace.empty())
    result.converged = inf_norm(grad) <= grad_tolerance;
  return result;
}

struct FitResult {
  ModelSet models;
  std::vector<IterationRecord> trace;
  bool converged = false;
  double objective = 0.0;
};

// Maximizes sum_instances objective - ||theta||^2 / (2 sigma^2). Instances
// are evaluated independently (optionally in parallel) and reduced in index
// order, so fits are bit-reproducible.
inline FitResult fit(const std::vector<FeaturizedInstance>& data, const LabelSet& labels,
                     const ParameterLayout& layout, const ObjectiveConfig& config,
                     std::span<const double> init = {},
                     const std::function<void(const IterationRecord&)>& progress = {}) {
  config.validate();
  if (data.empty()) throw data_error("fit: empty dataset");

  ModelSet work(labels, layout);
  std::vector<double> x0(static_cast<std::size_t>(layout.total()), 0.0);
  if (!init.empty()) {
    if (static_cast<std::int64_t>(init.size()) != layout.total())
      throw structural_error("fit: init vector size mismatch");
    std::copy(init.begin(), init.end(), x0.begin());
  }

  const auto per_instance = [&](const ModelSet& models, const FeaturizedInstance& inst) {
    if (config.separate_pooled) return loglik_pooled_edges(models, inst);
    return config.kind == ObjectiveKind::conditional ? loglik_conditional(models, inst)
                                                     : loglik_marginal(models, inst);
  };

  const double inv_sigma2 = 1.0 / config.sigma2;
  auto eval = [&](const std::vector<double>& theta, std::vector<double>& grad_out) {
    work.unpack(theta);
    std::vector<ObjectiveValue> parts(data.size());
    parallel_for(static_cast<int>(data.size()), [&](int i) {
      parts[static_cast<std::size_t>(i)] = per_instance(work, data[static_cast<std::size_t>(i)]);
    });
    double total = 0.0;
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    for (const ObjectiveValue& part : parts) {
      total += part.value;
      if (!std::isfinite(total)) return total;
      part.gradient.accumulate_into(grad_out);
    }
    for (std::size_t d = 0; d < theta.size(); ++d) {
      total -= 0.5 * inv_sigma2 * theta[d] * theta[d];
      grad_out[d] -= inv_sigma2 * theta[d];
    }
    return total;
  };

  LbfgsResult opt = lbfgs_maximize(eval, std::move(x0), config.history, config.max_iterations,
                                   config.grad_tolerance, progress);

  FitResult result;
  result.models = ModelSet(labels, layout);
  result.models.unpack(opt.x);
  result.trace = std::move(opt.trace);
  result.converged = opt.converged;
  result.objective = opt.objective;
  return result;
}

}  // namespace mopmemm
