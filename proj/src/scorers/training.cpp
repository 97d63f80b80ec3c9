#include <algorithm>
#include <cmath>
#include <set>

#include "reroute/error.hpp"
#include "reroute/rng.hpp"
#include "reroute/scorers.hpp"

namespace reroute {

namespace {

constexpr double kMinThresholdGap = 1e-3;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double u) { return u > 30.0 ? u : std::log1p(std::exp(u)); }

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

std::size_t class_of(double label) {
  if (label == 0.0) return 0;
  if (label == 0.5) return 1;
  return 2;
}

EmbeddingVector gaussian(Rng& rng, std::size_t n, double scale) {
  EmbeddingVector v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

struct Dataset {
  std::vector<EmbeddingVector> x;
  std::vector<double> y;
  std::size_t dim = 0;
};

struct MfGrad {
  double objective = 0.0;
  std::vector<double> w;
  EmbeddingVector v_strong;
  EmbeddingVector v_weak;
  double bias = 0.0;  // d/d(b_s); d/d(b_w) is its negative
};

MfGrad mf_gradient(const MfParams& p, const Dataset& data, double l2) {
  const std::size_t d = p.dim;
  const auto n = static_cast<double>(data.x.size());
  std::vector<double> u(d), wt_u(d, 0.0), agg(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) u[r] = p.v_strong[r] - p.v_weak[r];
  // z_i = (W^T u) . e_i + b_s - b_w
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = p.w.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) wt_u[c] += u[r] * row[c];
  }
  MfGrad g;
  double loss = 0.0;
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    const double z = dot(wt_u, data.x[i]) + p.b_strong - p.b_weak;
    const double s = sigmoid(z);
    const double y = data.y[i];
    loss -= y * safe_log(s) + (1.0 - y) * safe_log(1.0 - s);
    const double gi = (s - y) / n;
    g.bias += gi;
    for (std::size_t c = 0; c < d; ++c) agg[c] += gi * data.x[i][c];
  }
  double reg = 0.0;
  for (double x : p.w) reg += x * x;
  for (std::size_t r = 0; r < d; ++r) reg += p.v_strong[r] * p.v_strong[r] + p.v_weak[r] * p.v_weak[r];
  g.objective = loss / n + 0.5 * l2 * reg;

  // dL/dW = u agg^T ; dL/dv_s = W agg = -dL/dv_w
  g.w.resize(d * d);
  g.v_strong.resize(d);
  g.v_weak.resize(d);
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = p.w.data() + r * d;
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      acc += row[c] * agg[c];
      g.w[r * d + c] = u[r] * agg[c] + l2 * row[c];
    }
    g.v_strong[r] = acc + l2 * p.v_strong[r];
    g.v_weak[r] = -acc + l2 * p.v_weak[r];
  }
  return g;
}

MfParams mf_step(const MfParams& p, const MfGrad& g, double lr) {
  MfParams next = p;
  for (std::size_t i = 0; i < next.w.size(); ++i) next.w[i] -= lr * g.w[i];
  for (std::size_t r = 0; r < next.dim; ++r) {
    next.v_strong[r] -= lr * g.v_strong[r];
    next.v_weak[r] -= lr * g.v_weak[r];
  }
  next.b_strong -= lr * g.bias;
  next.b_weak += lr * g.bias;
  return next;
}

// A step that raises the objective is retried at half the learning rate.
MfParams fit_mf(const Dataset& data, const FitOptions& opt, std::vector<double>& history) {
  const std::size_t d = data.dim;
  Rng rng(opt.seed);
  MfParams p;
  p.dim = d;
  p.w.assign(d * d, 0.0);
  p.v_strong = gaussian(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));
  p.v_weak = gaussian(rng, d, 1.0 / std::sqrt(static_cast<double>(d)));

  double lr = opt.learning_rate;
  MfGrad g = mf_gradient(p, data, opt.l2);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    history.push_back(g.objective);
    for (int halvings = 0; halvings < 30; ++halvings, lr *= 0.5) {
      MfParams next = mf_step(p, g, lr);
      MfGrad next_g = mf_gradient(next, data, opt.l2);
      if (next_g.objective <= g.objective) {
        p = std::move(next);
        g = std::move(next_g);
        break;
      }
    }
  }
  return p;
}

ClsParams fit_cls(const Dataset& data, const FitOptions& opt, std::vector<double>& history) {
  const std::size_t d = data.dim;
  const auto n = static_cast<double>(data.x.size());
  Rng rng(opt.seed);
  ClsParams p;
  for (auto& w : p.weights) w = gaussian(rng, d, 0.01);

  std::array<EmbeddingVector, 3> grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (auto& g : grad) g.assign(d, 0.0);
    std::array<double, 3> g_bias{};
    double loss = 0.0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      std::array<double, 3> logits{};
      for (std::size_t c = 0; c < 3; ++c) logits[c] = dot(p.weights[c], data.x[i]) + p.bias[c];
      const double m = *std::max_element(logits.begin(), logits.end());
      double den = 0.0;
      for (double l : logits) den += std::exp(l - m);
      const std::size_t target = class_of(data.y[i]);
      loss -= logits[target] - m - std::log(den);
      for (std::size_t c = 0; c < 3; ++c) {
        const double g = (std::exp(logits[c] - m) / den - (c == target ? 1.0 : 0.0)) / n;
        g_bias[c] += g;
        for (std::size_t k = 0; k < d; ++k) grad[c][k] += g * data.x[i][k];
      }
    }
    double reg = 0.0;
    for (const auto& w : p.weights) reg += dot(w, w);
    history.push_back(loss / n + 0.5 * opt.l2 * reg);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t k = 0; k < d; ++k) {
        p.weights[c][k] -= opt.learning_rate * (grad[c][k] + opt.l2 * p.weights[c][k]);
      }
      p.bias[c] -= opt.learning_rate * g_bias[c];
    }
  }
  return p;
}

// Thresholds are parameterized as theta_1 = a, theta_{k+1} = theta_k +
// kMinThresholdGap + softplus(u_k), which keeps them strictly increasing.
struct OrdinalState {
  double a = -1.5;
  std::array<double, 3> u{};

  [[nodiscard]] std::array<double, 4> thresholds() const {
    std::array<double, 4> t{};
    t[0] = a;
    for (std::size_t k = 0; k < 3; ++k) t[k + 1] = t[k] + kMinThresholdGap + softplus(u[k]);
    return t;
  }
};

LlmProxyParams fit_llm_proxy(const Dataset& data, const FitOptions& opt,
                             std::vector<double>& history) {
  const std::size_t d = data.dim;
  const auto n = static_cast<double>(data.x.size());
  Rng rng(opt.seed);
  LlmProxyParams p;
  p.w = gaussian(rng, d, 0.01);
  OrdinalState st;
  st.u.fill(std::log(std::expm1(1.0 - kMinThresholdGap)));

  EmbeddingVector g_w(d);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const auto theta = st.thresholds();
    std::fill(g_w.begin(), g_w.end(), 0.0);
    std::array<double, 4> g_theta{};
    double loss = 0.0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      // grades 1, 3, 5 for labels 0, 0.5, 1
      const std::size_t grade = 1 + 2 * class_of(data.y[i]);
      const double s = dot(p.w, data.x[i]);
      auto cdf = [&](std::size_t k) -> double {
        if (k == 0) return 0.0;
        if (k == 5) return 1.0;
        return sigmoid(theta[k - 1] - s);
      };
      auto dens = [&](std::size_t k) -> double {
        if (k == 0 || k == 5) return 0.0;
        const double f = cdf(k);
        return f * (1.0 - f);
      };
      const double prob = std::max(cdf(grade) - cdf(grade - 1), 1e-300);
      loss -= std::log(prob);
      const double f_hi = dens(grade);
      const double f_lo = dens(grade - 1);
      // d(-log p)/ds = (f_hi - f_lo) / p
      const double g_s = (f_hi - f_lo) / prob / n;
      for (std::size_t k = 0; k < d; ++k) g_w[k] += g_s * data.x[i][k];
      if (grade <= 4) g_theta[grade - 1] -= f_hi / prob / n;
      if (grade >= 2) g_theta[grade - 2] += f_lo / prob / n;
    }
    history.push_back(loss / n + 0.5 * opt.l2 * dot(p.w, p.w));
    for (std::size_t k = 0; k < d; ++k) p.w[k] -= opt.learning_rate * (g_w[k] + opt.l2 * p.w[k]);
    // chain rule through the gap parameterization
    double g_a = 0.0;
    for (double g : g_theta) g_a += g;
    std::array<double, 3> g_u{};
    for (std::size_t k = 0; k < 3; ++k) {
      double tail = 0.0;
      for (std::size_t j = k + 1; j < 4; ++j) tail += g_theta[j];
      g_u[k] = tail * sigmoid(st.u[k]);
    }
    st.a -= opt.learning_rate * g_a;
    for (std::size_t k = 0; k < 3; ++k) st.u[k] -= opt.learning_rate * g_u[k];
  }
  p.thresholds = st.thresholds();
  return p;
}

}  // namespace

bool is_valid_label(double label) noexcept {
  return label == 0.0 || label == 0.5 || label == 1.0;
}

ScorerParams fit_scorer(ScorerKind kind, std::span<const PreferenceExample> examples,
                        const Vocab& vocab, const HashEmbedder& embedder,
                        const FitOptions& options) {
  if (kind == ScorerKind::external) throw ValidationError("external scorers cannot be trained");
  if (examples.size() < 2) throw ValidationError("need at least 2 training examples");
  if (options.epochs < 0 || !(options.learning_rate > 0.0)) {
    throw ValidationError("learning rate must be positive and epochs non-negative");
  }
  if (!(options.gamma > 0.0)) throw ValidationError("gamma must be positive");
  std::set<double> distinct;
  Dataset data;
  data.dim = embedder.dim();
  for (const auto& ex : examples) {
    if (!is_valid_label(ex.label)) {
      throw ValidationError("label must be one of 0, 0.5, 1");
    }
    distinct.insert(ex.label);
    data.x.push_back(embedder.embed(ex.query, vocab));
    data.y.push_back(ex.label);
  }
  if (distinct.size() < 2) throw ValidationError("labels not separable");

  ScorerParams params;
  params.kind = kind;
  switch (kind) {
    case ScorerKind::sw:
      params.payload = SwParams{std::move(data.x), std::move(data.y), options.gamma};
      break;
    case ScorerKind::mf:
      params.payload = fit_mf(data, options, params.loss_history);
      break;
    case ScorerKind::cls:
      params.payload = fit_cls(data, options, params.loss_history);
      break;
    case ScorerKind::llm_proxy:
      params.payload = fit_llm_proxy(data, options, params.loss_history);
      break;
    case ScorerKind::external:
      break;
  }
  return params;
}

}  // namespace reroute
