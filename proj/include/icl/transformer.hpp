#pragma once

// A small GPT-2 style decoder for in-context regression.
//
//   tokens (T×d_in) --read-in--> + position embeddings
//     --> n_layers × [ x + Attn(LN(x)),  x + MLP(LN(x)) ]
//     --> LN --> scalar read-out at every x-token position
//
// Everything runs in double precision with hand-written reverse-mode
// gradients. Weight matrices are stored input-major (K×N for a K→N map) in a
// single flat parameter vector; ParameterLayout records the offsets.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "icl/error.hpp"
#include "icl/numerics.hpp"
#include "icl/random.hpp"
#include "icl/tasks.hpp"

namespace icl {

enum class LossKind { l2, l1 };

[[nodiscard]] inline std::string to_string(LossKind k) { return k == LossKind::l2 ? "l2" : "l1"; }
[[nodiscard]] inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "l2") return LossKind::l2;
  if (s == "l1") return LossKind::l1;
  throw InvalidInput("unknown loss kind '" + s + "' (expected l2 or l1)");
}

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 3;
  std::size_t n_heads = 2;
  std::size_t d_input = 5;
  std::size_t max_seq = 23;
  LossKind loss = LossKind::l2;

  void validate() const {
    if (d_model == 0 || n_heads == 0 || d_input == 0 || max_seq == 0)
      throw InvalidInput("model: d_model, n_heads, d_input and max_seq must be >= 1");
    if (d_model % n_heads != 0) throw InvalidInput("model: d_model must be divisible by n_heads");
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Closed-form parameter count:
///   d_model·(d_input + 1)             read-in weight + bias
/// + max_seq·d_model                   position embeddings
/// + n_layers·(12·d_model² + 13·d_model)
/// + 3·d_model + 1                     final norm + read-out
[[nodiscard]] constexpr std::size_t parameter_count(const ModelConfig& c) noexcept {
  const std::size_t m = c.d_model;
  return m * (c.d_input + 1) + c.max_seq * m + c.n_layers * (12 * m * m + 13 * m) + 3 * m + 1;
}

struct LayerSlots {
  std::size_t ln1_g, ln1_b;
  std::size_t w_qkv, b_qkv;  // d_model × 3·d_model
  std::size_t w_o, b_o;      // d_model × d_model
  std::size_t ln2_g, ln2_b;
  std::size_t w_fc, b_fc;      // d_model × 4·d_model
  std::size_t w_proj, b_proj;  // 4·d_model × d_model
};

struct ParameterLayout {
  std::size_t w_in = 0, b_in = 0;  // d_input × d_model
  std::size_t pos = 0;             // max_seq × d_model
  std::vector<LayerSlots> layers;
  std::size_t lnf_g = 0, lnf_b = 0;
  std::size_t w_out = 0, b_out = 0;  // d_model, 1
  std::size_t total = 0;

  ParameterLayout() = default;
  explicit ParameterLayout(const ModelConfig& c) {
    const std::size_t m = c.d_model;
    std::size_t at = 0;
    auto take = [&at](std::size_t n) {
      const std::size_t off = at;
      at += n;
      return off;
    };
    w_in = take(c.d_input * m);
    b_in = take(m);
    pos = take(c.max_seq * m);
    layers.resize(c.n_layers);
    for (auto& l : layers) {
      l.ln1_g = take(m);
      l.ln1_b = take(m);
      l.w_qkv = take(m * 3 * m);
      l.b_qkv = take(3 * m);
      l.w_o = take(m * m);
      l.b_o = take(m);
      l.ln2_g = take(m);
      l.ln2_b = take(m);
      l.w_fc = take(m * 4 * m);
      l.b_fc = take(4 * m);
      l.w_proj = take(4 * m * m);
      l.b_proj = take(m);
    }
    lnf_g = take(m);
    lnf_b = take(m);
    w_out = take(m);
    b_out = take(1);
    total = at;
  }
};

namespace detail {
inline std::uint64_t next_revision() noexcept {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

struct Parameters {
  ModelConfig config;
  ParameterLayout layout;
  std::vector<double> values;
  /// Changes whenever `values` is updated through the library; forward
  /// traces remember it so stale traces can be rejected.
  std::uint64_t revision = 0;

  Parameters() = default;
  explicit Parameters(const ModelConfig& c)
      : config(c), layout(c), values(layout.total, 0.0), revision(detail::next_revision()) {}

  void touch() noexcept { revision = detail::next_revision(); }
  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] const double* at(std::size_t offset) const noexcept { return values.data() + offset; }
  [[nodiscard]] double* at(std::size_t offset) noexcept { return values.data() + offset; }
};

inline constexpr double kInitStd = 0.02;

/// N(0, 0.02²) for projections and position embeddings, zero biases and
/// norm offsets, unit norm gains.
[[nodiscard]] inline Parameters init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Parameters p(config);
  const auto& L = p.layout;
  const std::size_t m = config.d_model;
  Rng rng(seed);
  auto gaussian = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p.values[off + i] = kInitStd * rng.normal();
  };
  auto ones = [&](std::size_t off, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p.values[off + i] = 1.0;
  };
  gaussian(L.w_in, config.d_input * m);
  gaussian(L.pos, config.max_seq * m);
  for (const auto& l : L.layers) {
    ones(l.ln1_g, m);
    gaussian(l.w_qkv, m * 3 * m);
    gaussian(l.w_o, m * m);
    ones(l.ln2_g, m);
    gaussian(l.w_fc, m * 4 * m);
    gaussian(l.w_proj, 4 * m * m);
  }
  ones(L.lnf_g, m);
  gaussian(L.w_out, m);
  return p;
}

// ---------------------------------------------------------------------------
// Forward pass with cached activations

struct LayerTrace {
  Matrix h_in;
  Matrix ln1_hat;
  Vector ln1_rstd;
  Matrix ln1_out;
  Matrix qkv;
  std::vector<Matrix> probs;  // one T×T per head, lower triangle used
  Matrix attn;
  Matrix h_mid;
  Matrix ln2_hat;
  Vector ln2_rstd;
  Matrix ln2_out;
  Matrix fc;
  Matrix act;
};

struct ForwardTrace {
  std::uint64_t revision = 0;
  Matrix tokens;
  std::vector<std::size_t> query_positions;
  std::vector<LayerTrace> layers;
  Matrix h_final;
  Matrix lnf_hat;
  Vector lnf_rstd;
  Matrix lnf_out;
  Vector predictions;
};

inline constexpr double kLayerNormEps = 1e-5;

namespace detail {

// out = in·W + b, W stored K×N.
inline void linear(const Matrix& in, const double* w, const double* b, std::size_t n, Matrix& out) {
  const std::size_t rows = in.rows();
  const std::size_t k_dim = in.cols();
  out = Matrix(rows, n);
  for (std::size_t t = 0; t < rows; ++t) {
    double* o = out.row(t).data();
    const double* x = in.row(t).data();
    for (std::size_t j = 0; j < n; ++j) o[j] = b[j];
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double a = x[k];
      const double* wk = w + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += a * wk[j];
    }
  }
}

// Accumulates dW, db and (optionally) writes d_in for out = in·W + b.
inline void linear_backward(const Matrix& in, const double* w, const Matrix& dout, double* dw, double* db,
                            Matrix* din) {
  const std::size_t rows = in.rows();
  const std::size_t k_dim = in.cols();
  const std::size_t n = dout.cols();
  if (din) *din = Matrix(rows, k_dim);
  for (std::size_t t = 0; t < rows; ++t) {
    const double* g = dout.row(t).data();
    const double* x = in.row(t).data();
    for (std::size_t j = 0; j < n; ++j) db[j] += g[j];
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double a = x[k];
      double* dwk = dw + k * n;
      for (std::size_t j = 0; j < n; ++j) dwk[j] += a * g[j];
    }
    if (din) {
      double* di = din->row(t).data();
      for (std::size_t k = 0; k < k_dim; ++k) {
        const double* wk = w + k * n;
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
          s0 += g[j] * wk[j];
          s1 += g[j + 1] * wk[j + 1];
          s2 += g[j + 2] * wk[j + 2];
          s3 += g[j + 3] * wk[j + 3];
        }
        for (; j < n; ++j) s0 += g[j] * wk[j];
        di[k] = (s0 + s1) + (s2 + s3);
      }
    }
  }
}

inline void layer_norm(const Matrix& in, const double* gain, const double* bias, Matrix& hat, Vector& rstd,
                       Matrix& out) {
  const std::size_t rows = in.rows();
  const std::size_t n = in.cols();
  hat = Matrix(rows, n);
  out = Matrix(rows, n);
  rstd.assign(rows, 0.0);
  for (std::size_t t = 0; t < rows; ++t) {
    const double* x = in.row(t).data();
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += x[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mean) * (x[j] - mean);
    var /= static_cast<double>(n);
    const double r = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[t] = r;
    double* h = hat.row(t).data();
    double* o = out.row(t).data();
    for (std::size_t j = 0; j < n; ++j) {
      h[j] = (x[j] - mean) * r;
      o[j] = gain[j] * h[j] + bias[j];
    }
  }
}

// Accumulates gain/bias gradients and returns d_in.
inline Matrix layer_norm_backward(const Matrix& hat, const Vector& rstd, const double* gain, const Matrix& dout,
                                  double* dgain, double* dbias) {
  const std::size_t rows = hat.rows();
  const std::size_t n = hat.cols();
  Matrix din(rows, n);
  std::vector<double> dhat(n);
  for (std::size_t t = 0; t < rows; ++t) {
    const double* h = hat.row(t).data();
    const double* g = dout.row(t).data();
    double mean_dhat = 0.0;
    double mean_dhat_h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dgain[j] += g[j] * h[j];
      dbias[j] += g[j];
      dhat[j] = g[j] * gain[j];
      mean_dhat += dhat[j];
      mean_dhat_h += dhat[j] * h[j];
    }
    mean_dhat /= static_cast<double>(n);
    mean_dhat_h /= static_cast<double>(n);
    double* di = din.row(t).data();
    for (std::size_t j = 0; j < n; ++j) di[j] = rstd[t] * (dhat[j] - mean_dhat - h[j] * mean_dhat_h);
  }
  return din;
}

inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;

inline double gelu(double x) noexcept {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}
inline double gelu_grad(double x) noexcept {
  const double th = std::tanh(kGeluC * (x + kGeluA * x * x * x));
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
}

// Causal multi-head attention over packed qkv (T × 3·d_model).
inline void attention(const Matrix& qkv, std::size_t n_heads, std::vector<Matrix>& probs, Matrix& out) {
  const std::size_t rows = qkv.rows();
  const std::size_t m = qkv.cols() / 3;
  const std::size_t hd = m / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  probs.assign(n_heads, Matrix(rows, rows));
  out = Matrix(rows, m);
  for (std::size_t h = 0; h < n_heads; ++h) {
    Matrix& p = probs[h];
    const std::size_t qo = h * hd, ko = m + h * hd, vo = 2 * m + h * hd;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* q = qkv.row(i).data() + qo;
      double* pi = p.row(i).data();
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j <= i; ++j) {
        const double* k = qkv.row(j).data() + ko;
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) s += q[c] * k[c];
        pi[j] = s * scale;
        mx = std::max(mx, pi[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        pi[j] = std::exp(pi[j] - mx);
        z += pi[j];
      }
      double* o = out.row(i).data() + h * hd;
      for (std::size_t j = 0; j <= i; ++j) {
        pi[j] /= z;
        const double* v = qkv.row(j).data() + vo;
        for (std::size_t c = 0; c < hd; ++c) o[c] += pi[j] * v[c];
      }
    }
  }
}

inline Matrix attention_backward(const Matrix& qkv, const std::vector<Matrix>& probs, const Matrix& dout) {
  const std::size_t rows = qkv.rows();
  const std::size_t m = qkv.cols() / 3;
  const std::size_t n_heads = probs.size();
  const std::size_t hd = m / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  Matrix dqkv(rows, 3 * m);
  std::vector<double> dp(rows);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const Matrix& p = probs[h];
    const std::size_t qo = h * hd, ko = m + h * hd, vo = 2 * m + h * hd;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* go = dout.row(i).data() + h * hd;
      const double* pi = p.row(i).data();
      double weighted = 0.0;
      for (std::size_t j = 0; j <= i; ++j) {
        const double* v = qkv.row(j).data() + vo;
        double* dv = dqkv.row(j).data() + vo;
        double s = 0.0;
        for (std::size_t c = 0; c < hd; ++c) {
          s += go[c] * v[c];
          dv[c] += pi[j] * go[c];
        }
        dp[j] = s;
        weighted += pi[j] * s;
      }
      const double* q = qkv.row(i).data() + qo;
      double* dq = dqkv.row(i).data() + qo;
      for (std::size_t j = 0; j <= i; ++j) {
        const double ds = pi[j] * (dp[j] - weighted) * scale;
        if (ds == 0.0) continue;
        const double* k = qkv.row(j).data() + ko;
        double* dk = dqkv.row(j).data() + ko;
        for (std::size_t c = 0; c < hd; ++c) {
          dq[c] += ds * k[c];
          dk[c] += ds * q[c];
        }
      }
    }
  }
  return dqkv;
}

}  // namespace detail

/// Runs the model on `tokens` and records every activation needed by
/// backward(). Predictions are read out at `query_positions`.
[[nodiscard]] inline ForwardTrace forward_trace(const Parameters& params, const Matrix& tokens,
                                                std::span<const std::size_t> query_positions) {
  const ModelConfig& c = params.config;
  if (params.values.size() != params.layout.total) throw InvalidInput("forward: parameter vector has wrong size");
  if (tokens.cols() != c.d_input) {
    throw InvalidInput("forward: token dimension " + std::to_string(tokens.cols()) + " != d_input " +
                       std::to_string(c.d_input));
  }
  if (tokens.rows() == 0 || tokens.rows() > c.max_seq) {
    throw InvalidInput("forward: prompt length " + std::to_string(tokens.rows()) + " outside [1, " +
                       std::to_string(c.max_seq) + "]");
  }
  for (std::size_t q : query_positions)
    if (q >= tokens.rows()) throw InvalidInput("forward: query position out of range");

  const auto& L = params.layout;
  const std::size_t m = c.d_model;
  const std::size_t rows = tokens.rows();

  ForwardTrace tr;
  tr.revision = params.revision;
  tr.tokens = tokens;
  tr.query_positions.assign(query_positions.begin(), query_positions.end());
  tr.layers.resize(c.n_layers);

  Matrix h;
  detail::linear(tokens, params.at(L.w_in), params.at(L.b_in), m, h);
  for (std::size_t t = 0; t < rows; ++t) {
    double* ht = h.row(t).data();
    const double* pe = params.at(L.pos + t * m);
    for (std::size_t j = 0; j < m; ++j) ht[j] += pe[j];
  }

  for (std::size_t li = 0; li < c.n_layers; ++li) {
    const LayerSlots& s = L.layers[li];
    LayerTrace& lt = tr.layers[li];
    lt.h_in = h;
    detail::layer_norm(h, params.at(s.ln1_g), params.at(s.ln1_b), lt.ln1_hat, lt.ln1_rstd, lt.ln1_out);
    detail::linear(lt.ln1_out, params.at(s.w_qkv), params.at(s.b_qkv), 3 * m, lt.qkv);
    detail::attention(lt.qkv, c.n_heads, lt.probs, lt.attn);
    Matrix proj;
    detail::linear(lt.attn, params.at(s.w_o), params.at(s.b_o), m, proj);
    auto hd = h.data();
    auto pd = proj.data();
    for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += pd[i];
    lt.h_mid = h;
    detail::layer_norm(h, params.at(s.ln2_g), params.at(s.ln2_b), lt.ln2_hat, lt.ln2_rstd, lt.ln2_out);
    detail::linear(lt.ln2_out, params.at(s.w_fc), params.at(s.b_fc), 4 * m, lt.fc);
    lt.act = Matrix(rows, 4 * m);
    {
      auto fd = lt.fc.data();
      auto ad = lt.act.data();
      for (std::size_t i = 0; i < fd.size(); ++i) ad[i] = detail::gelu(fd[i]);
    }
    Matrix mlp;
    detail::linear(lt.act, params.at(s.w_proj), params.at(s.b_proj), m, mlp);
    auto md = mlp.data();
    for (std::size_t i = 0; i < hd.size(); ++i) hd[i] += md[i];
  }

  tr.h_final = h;
  detail::layer_norm(h, params.at(L.lnf_g), params.at(L.lnf_b), tr.lnf_hat, tr.lnf_rstd, tr.lnf_out);
  tr.predictions.resize(tr.query_positions.size());
  const double* w_out = params.at(L.w_out);
  const double b_out = params.values[L.b_out];
  for (std::size_t q = 0; q < tr.query_positions.size(); ++q) {
    const double* z = tr.lnf_out.row(tr.query_positions[q]).data();
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += z[j] * w_out[j];
    tr.predictions[q] = s + b_out;
  }
  return tr;
}

[[nodiscard]] inline ForwardTrace forward_trace(const Parameters& params, const PromptSequence& prompt) {
  return forward_trace(params, prompt.tokens, prompt.query_positions);
}

/// Predictions at every query position of the prompt.
[[nodiscard]] inline Vector forward(const Parameters& params, const PromptSequence& prompt) {
  return forward_trace(params, prompt).predictions;
}

// ---------------------------------------------------------------------------
// Loss

[[nodiscard]] inline double loss(std::span<const double> predictions, std::span<const double> targets,
                                 LossKind kind) {
  if (predictions.size() != targets.size()) throw InvalidInput("loss: length mismatch");
  if (predictions.empty()) throw InvalidInput("loss: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double r = predictions[i] - targets[i];
    s += kind == LossKind::l2 ? r * r : std::abs(r);
  }
  return s / static_cast<double>(predictions.size());
}

/// d loss / d predictions. The l1 subgradient at a zero residual is 0.
[[nodiscard]] inline Vector loss_grad(std::span<const double> predictions, std::span<const double> targets,
                                      LossKind kind) {
  if (predictions.size() != targets.size()) throw InvalidInput("loss_grad: length mismatch");
  if (predictions.empty()) throw InvalidInput("loss_grad: empty input");
  const double inv_n = 1.0 / static_cast<double>(predictions.size());
  Vector g(predictions.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = predictions[i] - targets[i];
    if (kind == LossKind::l2) {
      g[i] = 2.0 * r * inv_n;
    } else {
      g[i] = r > 0.0 ? inv_n : (r < 0.0 ? -inv_n : 0.0);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Backward pass

/// Adds d loss / d params into `grads`, given d loss / d predictions.
inline void backward_accumulate(const Parameters& params, const ForwardTrace& tr, std::span<const double> loss_grad,
                                std::span<double> grads) {
  if (tr.revision != params.revision) throw InvalidState("backward: trace was produced by other parameters");
  if (grads.size() != params.values.size()) throw InvalidInput("backward: gradient buffer has wrong size");
  if (loss_grad.size() != tr.predictions.size()) throw InvalidInput("backward: loss gradient length mismatch");

  const ModelConfig& c = params.config;
  const auto& L = params.layout;
  const std::size_t m = c.d_model;
  const std::size_t rows = tr.tokens.rows();
  double* g = grads.data();

  // Read-out.
  Matrix dz(rows, m);
  const double* w_out = params.at(L.w_out);
  for (std::size_t q = 0; q < tr.query_positions.size(); ++q) {
    const double gq = loss_grad[q];
    if (gq == 0.0) continue;
    const std::size_t pos = tr.query_positions[q];
    const double* z = tr.lnf_out.row(pos).data();
    double* dzr = dz.row(pos).data();
    for (std::size_t j = 0; j < m; ++j) {
      g[L.w_out + j] += gq * z[j];
      dzr[j] += gq * w_out[j];
    }
    g[L.b_out] += gq;
  }

  Matrix dh = detail::layer_norm_backward(tr.lnf_hat, tr.lnf_rstd, params.at(L.lnf_g), dz, g + L.lnf_g, g + L.lnf_b);

  for (std::size_t li = c.n_layers; li-- > 0;) {
    const LayerSlots& s = L.layers[li];
    const LayerTrace& lt = tr.layers[li];

    Matrix dact;
    detail::linear_backward(lt.act, params.at(s.w_proj), dh, g + s.w_proj, g + s.b_proj, &dact);
    {
      auto fd = lt.fc.data();
      auto dd = dact.data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= detail::gelu_grad(fd[i]);
    }
    Matrix dln2;
    detail::linear_backward(lt.ln2_out, params.at(s.w_fc), dact, g + s.w_fc, g + s.b_fc, &dln2);
    Matrix dres = detail::layer_norm_backward(lt.ln2_hat, lt.ln2_rstd, params.at(s.ln2_g), dln2, g + s.ln2_g,
                                              g + s.ln2_b);
    {
      auto a = dh.data();
      auto b = dres.data();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }

    Matrix dattn;
    detail::linear_backward(lt.attn, params.at(s.w_o), dh, g + s.w_o, g + s.b_o, &dattn);
    const Matrix dqkv = detail::attention_backward(lt.qkv, lt.probs, dattn);
    Matrix dln1;
    detail::linear_backward(lt.ln1_out, params.at(s.w_qkv), dqkv, g + s.w_qkv, g + s.b_qkv, &dln1);
    dres = detail::layer_norm_backward(lt.ln1_hat, lt.ln1_rstd, params.at(s.ln1_g), dln1, g + s.ln1_g, g + s.ln1_b);
    {
      auto a = dh.data();
      auto b = dres.data();
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    }
  }

  for (std::size_t t = 0; t < rows; ++t) {
    const double* d = dh.row(t).data();
    double* gp = g + L.pos + t * m;
    for (std::size_t j = 0; j < m; ++j) gp[j] += d[j];
  }
  detail::linear_backward(tr.tokens, params.at(L.w_in), dh, g + L.w_in, g + L.b_in, nullptr);
}

[[nodiscard]] inline std::vector<double> backward(const Parameters& params, const ForwardTrace& tr,
                                                  std::span<const double> loss_grad) {
  std::vector<double> grads(params.values.size(), 0.0);
  backward_accumulate(params, tr, loss_grad, grads);
  return grads;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  ///< decoupled, applied as lr·wd·θ
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

[[nodiscard]] inline AdamState make_adam(const Parameters& params, double lr = 3e-4) {
  AdamState s;
  s.lr = lr;
  s.m.assign(params.values.size(), 0.0);
  s.v.assign(params.values.size(), 0.0);
  return s;
}

inline void adam_step(Parameters& params, std::span<const double> grads, AdamState& state) {
  const std::size_t n = params.values.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n)
    throw InvalidInput("adam_step: shape mismatch between parameters, gradients and moments");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  double* p = params.values.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * gi;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * gi * gi;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    double update = mhat / (std::sqrt(vhat) + state.eps);
    if (state.weight_decay != 0.0) update += state.weight_decay * p[i];
    p[i] -= state.lr * update;
  }
  params.touch();
}

}  // namespace icl
