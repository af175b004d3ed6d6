#include "pll/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pll/error.hpp"
#include "pll/random.hpp"

namespace pll::obj {
namespace {

const double kLogFloor = std::log(kProbFloor);

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_batch(const MatrixD& logits, const CandidateMatrix& sets) {
  if (logits.rows() != sets.rows() || logits.cols() != sets.classes()) {
    throw ShapeError("logits are " + std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()) +
                     " but candidate rows are " + std::to_string(sets.rows()) + "x" +
                     std::to_string(sets.classes()));
  }
}

// log-sum-exp over all entries of a row, or over the members of S when `sets` is given.
double row_lse(std::span<const double> z, const CandidateMatrix* sets = nullptr, std::size_t i = 0) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!sets || sets->test(i, j)) mx = std::max(mx, z[j]);
  }
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!sets || sets->test(i, j)) s += std::exp(z[j] - mx);
  }
  return mx + std::log(s);
}

void log_softmax_row(std::span<const double> z, std::span<double> out) {
  const double lse = row_lse(z);
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j] - lse;
}

std::string params(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

void validate_base(const BaseObjective& b) {
  std::visit(overloaded{
                 [](const Lws& l) {
                   if (!(l.beta >= 0.0)) throw ConfigError("lws.beta must be >= 0");
                 },
                 [](const AbsGce& g) {
                   if (!(g.q > 0.0 && g.q <= 1.0)) throw ConfigError("abs_gce.q must lie in (0,1]");
                 },
                 [](const CrdFeat& c) {
                   if (!(c.lambda >= 0.0)) throw ConfigError("crd.lambda must be >= 0");
                   if (!(c.noise_sigma >= 0.0)) throw ConfigError("crd.noise_sigma must be >= 0");
                 },
                 [](const Solar& s) {
                   if (!(s.sinkhorn_eps > 0.0)) throw ConfigError("solar.sinkhorn_eps must be > 0");
                   if (s.sinkhorn_iters < 1) throw ConfigError("solar.sinkhorn_iters must be >= 1");
                   if (!(s.dist_momentum >= 0.0 && s.dist_momentum < 1.0)) {
                     throw ConfigError("solar.dist_momentum must lie in [0,1)");
                   }
                 },
                 [](const auto&) {},
             },
             b);
}

}  // namespace

// ---------------------------------------------------------------------------

void validate(const ObjectiveKind& kind) {
  std::visit(overloaded{
                 [](const Records& r) {
                   if (!(r.momentum >= 0.0 && r.momentum < 1.0)) {
                     throw ConfigError("records.momentum must lie in [0,1)");
                   }
                   if (!(r.tau >= 0.0)) throw ConfigError("records.tau must be >= 0");
                   validate_base(r.base);
                 },
                 [](const Pop& p) {
                   if (!(p.purge_rate > 0.0 && p.purge_rate < 1.0)) {
                     throw ConfigError("pop.purge_rate must lie in (0,1)");
                   }
                   validate_base(p.base);
                 },
                 [](const auto& base) { validate_base(BaseObjective(base)); },
             },
             kind);
}

std::string name(const BaseObjective& kind) {
  return std::visit(overloaded{
                        [](const Cc&) -> std::string { return "cc"; },
                        [](const Proden&) -> std::string { return "proden"; },
                        [](const Lws& l) -> std::string { return "lws(beta=" + params(l.beta) + ")"; },
                        [](const Cavl&) -> std::string { return "cavl"; },
                        [](const AbsMae&) -> std::string { return "abs_mae"; },
                        [](const AbsGce& g) -> std::string { return "abs_gce(q=" + params(g.q) + ")"; },
                        [](const CrdFeat& c) -> std::string {
                          return "crd(lambda=" + params(c.lambda) + ",noise=" + params(c.noise_sigma) + ")";
                        },
                        [](const Solar& s) -> std::string {
                          return "solar(eps=" + params(s.sinkhorn_eps) + ",iters=" +
                                 std::to_string(s.sinkhorn_iters) + ",momentum=" +
                                 params(s.dist_momentum) + ")";
                        },
                    },
                    kind);
}

std::string name(const ObjectiveKind& kind) {
  return std::visit(overloaded{
                        [](const Records& r) {
                          return "records(m=" + params(r.momentum) + ",tau=" + params(r.tau) + ")+" +
                                 name(r.base);
                        },
                        [](const Pop& p) { return "pop(rate=" + params(p.purge_rate) + ")+" + name(p.base); },
                        [](const auto& b) { return name(BaseObjective(b)); },
                    },
                    kind);
}

const BaseObjective* base_of(const ObjectiveKind& kind) {
  if (const auto* r = std::get_if<Records>(&kind)) return &r->base;
  if (const auto* p = std::get_if<Pop>(&kind)) return &p->base;
  return nullptr;
}

// ---------------------------------------------------------------------------

MatrixD softmax_rows(const MatrixD& logits) {
  MatrixD p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    const double lse = row_lse(z);
    auto out = p.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) out[j] = std::exp(z[j] - lse);
  }
  return p;
}

LossResult loss_ce(const MatrixD& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("loss_ce: one label per logit row required");
  const std::size_t b = logits.rows();
  const std::size_t k = logits.cols();
  LossResult res{0.0, MatrixD(b, k), 0};
  std::vector<double> logp(k);
  for (std::size_t i = 0; i < b; ++i) {
    log_softmax_row(logits.row(i), logp);
    const auto y = static_cast<std::size_t>(labels[i]);
    res.loss -= logp[y];
    auto g = res.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) g[j] = (std::exp(logp[j]) - (j == y ? 1.0 : 0.0)) / static_cast<double>(b);
  }
  res.loss /= static_cast<double>(b);
  return res;
}

LossResult loss_cc(const MatrixD& logits, const CandidateMatrix& sets) {
  check_batch(logits, sets);
  const std::size_t b = logits.rows();
  const std::size_t k = logits.cols();
  LossResult res{0.0, MatrixD(b, k), 0};
  for (std::size_t i = 0; i < b; ++i) {
    const auto z = logits.row(i);
    const double lse = row_lse(z);
    const double lse_s = row_lse(z, &sets, i);
    double log_mass = lse_s - lse;  // log sum_{j in S} p_j
    if (!(log_mass >= kLogFloor)) {
      log_mass = kLogFloor;
      ++res.clamped_rows;
    }
    res.loss -= log_mass;
    auto g = res.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const double p = std::exp(z[j] - lse);
      const double in_set = sets.test(i, j) ? std::exp(z[j] - lse_s) : 0.0;
      g[j] = (p - in_set) / static_cast<double>(b);
    }
  }
  res.loss /= static_cast<double>(b);
  return res;
}

LossResult loss_weighted_ce(const MatrixD& logits, const MatrixD& weights) {
  if (weights.rows() != logits.rows() || weights.cols() != logits.cols()) {
    throw ShapeError("loss_weighted_ce: weights must match logits");
  }
  const std::size_t b = logits.rows();
  const std::size_t k = logits.cols();
  LossResult res{0.0, MatrixD(b, k), 0};
  std::vector<double> logp(k);
  for (std::size_t i = 0; i < b; ++i) {
    log_softmax_row(logits.row(i), logp);
    const auto w = weights.row(i);
    double wsum = 0.0;
    bool clamped = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (w[j] == 0.0) continue;
      double lp = logp[j];
      if (lp < kLogFloor) {
        lp = kLogFloor;
        clamped = true;
      }
      res.loss -= w[j] * lp;
      wsum += w[j];
    }
    if (clamped) ++res.clamped_rows;
    auto g = res.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) g[j] = (std::exp(logp[j]) * wsum - w[j]) / static_cast<double>(b);
  }
  res.loss /= static_cast<double>(b);
  return res;
}

MatrixD proden_weights(const MatrixD& probs, const CandidateMatrix& sets, std::size_t* underflow_rows) {
  check_batch(probs, sets);
  MatrixD w(probs.rows(), probs.cols(), 0.0);
  std::size_t underflow = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    double mass = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (sets.test(i, j)) mass += p[j];
    }
    auto out = w.row(i);
    if (mass > 0.0 && std::isfinite(mass)) {
      for (std::size_t j = 0; j < p.size(); ++j) out[j] = sets.test(i, j) ? p[j] / mass : 0.0;
    } else {
      ++underflow;
      const double u = 1.0 / static_cast<double>(std::max<std::size_t>(1, sets.row_size(i)));
      for (std::size_t j = 0; j < p.size(); ++j) out[j] = sets.test(i, j) ? u : 0.0;
    }
  }
  if (underflow_rows) *underflow_rows += underflow;
  return w;
}

void proden_update(MatrixD& state, std::span<const std::size_t> rows, const MatrixD& probs,
                   const CandidateMatrix& sets, std::size_t* underflow_rows) {
  if (rows.size() != probs.rows()) throw ShapeError("proden_update: one index per probability row required");
  const auto w = proden_weights(probs, sets, underflow_rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = w.row(r);
    std::copy(src.begin(), src.end(), state.row(rows[r]).begin());
  }
}

double psi(double x) {
  // 1/(1+e^x) without overflow for large |x|.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

MatrixD lws_weights(const MatrixD& probs, const CandidateMatrix& sets) {
  check_batch(probs, sets);
  MatrixD w(probs.rows(), probs.cols(), 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto p = probs.row(i);
    double in = 0.0;
    double out = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) (sets.test(i, j) ? in : out) += p[j];
    const std::size_t n_in = sets.row_size(i);
    const std::size_t n_out = p.size() - n_in;
    auto row = w.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (sets.test(i, j)) {
        row[j] = in > 0.0 ? p[j] / in : 1.0 / static_cast<double>(n_in);
      } else {
        row[j] = out > 0.0 ? p[j] / out : 1.0 / static_cast<double>(n_out);
      }
    }
  }
  return w;
}

LossResult loss_lws(const MatrixD& logits, const CandidateMatrix& sets, double beta,
                    const MatrixD& weights) {
  check_batch(logits, sets);
  if (!(beta >= 0.0)) throw ConfigError("lws.beta must be >= 0");
  if (weights.rows() != logits.rows() || weights.cols() != logits.cols()) {
    throw ShapeError("loss_lws: weights must match logits");
  }
  const std::size_t b = logits.rows();
  const std::size_t k = logits.cols();
  LossResult res{0.0, MatrixD(b, k), 0};
  for (std::size_t i = 0; i < b; ++i) {
    const auto g = logits.row(i);
    const auto w = weights.row(i);
    auto grad = res.grad.row(i);
    for (std::size_t z = 0; z < k; ++z) {
      if (sets.test(i, z)) {
        const double s = psi(g[z]);
        res.loss += w[z] * s;
        grad[z] = -w[z] * s * (1.0 - s) / static_cast<double>(b);
      } else {
        const double s = psi(-g[z]);
        res.loss += beta * w[z] * s;
        grad[z] = beta * w[z] * s * (1.0 - s) / static_cast<double>(b);
      }
    }
  }
  res.loss /= static_cast<double>(b);
  return res;
}

std::vector<int> cavl_targets(const MatrixD& logits, const CandidateMatrix& sets) {
  check_batch(logits, sets);
  std::vector<int> targets(logits.rows(), -1);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (sets.test(i, j) && (targets[i] < 0 || z[j] > z[static_cast<std::size_t>(targets[i])])) {
        targets[i] = static_cast<int>(j);
      }
    }
    if (targets[i] < 0) throw ConfigError("loss_cavl: empty candidate row " + std::to_string(i));
  }
  return targets;
}

LossResult loss_cavl(const MatrixD& logits, const CandidateMatrix& sets) {
  const auto targets = cavl_targets(logits, sets);
  return loss_ce(logits, targets);
}

LossResult loss_abs(const MatrixD& logits, const CandidateMatrix& sets, AbsKind kind) {
  check_batch(logits, sets);
  const bool gce = kind.base == AbsKind::Base::Gce;
  if (gce && !(kind.q > 0.0 && kind.q <= 1.0)) throw ConfigError("abs_gce.q must lie in (0,1]");
  const std::size_t b = logits.rows();
  const std::size_t k = logits.cols();
  const auto p = softmax_rows(logits);
  LossResult res{0.0, MatrixD(b, k), 0};
  for (std::size_t i = 0; i < b; ++i) {
    const auto pi = p.row(i);
    const double size = static_cast<double>(sets.row_size(i));
    if (size == 0.0) throw ConfigError("loss_abs: empty candidate row " + std::to_string(i));
    // term(j) and the coefficient c_j with d term(j)/dz_k = c_j (delta_jk - p_k)
    double row_loss = 0.0;
    double coef_sum = 0.0;
    std::vector<double> coef(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      if (!sets.test(i, j)) continue;
      if (gce) {
        const double pq = std::pow(pi[j], kind.q);
        row_loss += (1.0 - pq) / kind.q;
        coef[j] = -pq;
      } else {
        row_loss += 2.0 * (1.0 - pi[j]);
        coef[j] = -2.0 * pi[j];
      }
      coef_sum += coef[j];
    }
    res.loss += row_loss / size;
    auto g = res.grad.row(i);
    for (std::size_t m = 0; m < k; ++m) {
      g[m] = (coef[m] - pi[m] * coef_sum) / size / static_cast<double>(b);
    }
  }
  res.loss /= static_cast<double>(b);
  return res;
}

namespace {

CandidateMatrix singleton_sets(std::span<const int> labels, std::size_t k) {
  CandidateMatrix s(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) s.set(i, static_cast<std::size_t>(labels[i]));
  return s;
}

}  // namespace

LossResult loss_mae(const MatrixD& logits, std::span<const int> labels) {
  return loss_abs(logits, singleton_sets(labels, logits.cols()), {AbsKind::Base::Mae, 0.0});
}

LossResult loss_gce(const MatrixD& logits, std::span<const int> labels, double q) {
  return loss_abs(logits, singleton_sets(labels, logits.cols()), {AbsKind::Base::Gce, q});
}

CrdResult loss_crd(const MatrixD& logits_a, const MatrixD& logits_b, const CandidateMatrix& sets,
                   double lambda) {
  check_batch(logits_a, sets);
  check_batch(logits_b, sets);
  if (!(lambda >= 0.0)) throw ConfigError("crd.lambda must be >= 0");
  const auto ex_a = loss_cc(logits_a, sets);
  const auto ex_b = loss_cc(logits_b, sets);
  const std::size_t b = logits_a.rows();
  const std::size_t k = logits_a.cols();

  CrdResult res;
  res.exclusion = 0.5 * (ex_a.loss + ex_b.loss);
  res.clamped_rows = ex_a.clamped_rows + ex_b.clamped_rows;
  res.grad_a = MatrixD(b, k);
  res.grad_b = MatrixD(b, k);
  for (std::size_t q = 0; q < res.grad_a.size(); ++q) {
    res.grad_a.flat()[q] = 0.5 * ex_a.grad.flat()[q];
    res.grad_b.flat()[q] = 0.5 * ex_b.grad.flat()[q];
  }

  std::vector<double> qa(k), qb(k);
  for (std::size_t i = 0; i < b; ++i) {
    const auto za = logits_a.row(i);
    const auto zb = logits_b.row(i);
    const double la = row_lse(za, &sets, i);
    const double lb = row_lse(zb, &sets, i);
    double kl = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (!sets.test(i, j)) continue;
      const double log_qa = za[j] - la;
      const double log_qb = zb[j] - lb;
      qa[j] = std::exp(log_qa);
      qb[j] = std::exp(log_qb);
      kl += qa[j] * (log_qa - log_qb);
    }
    res.consistency += kl;
    if (lambda == 0.0) continue;
    auto ga = res.grad_a.row(i);
    auto gb = res.grad_b.row(i);
    const double scale = lambda / static_cast<double>(b);
    for (std::size_t j = 0; j < k; ++j) {
      if (!sets.test(i, j)) continue;
      const double log_ratio = (za[j] - la) - (zb[j] - lb);
      ga[j] += scale * qa[j] * (log_ratio - kl);
      gb[j] += scale * (qb[j] - qa[j]);
    }
  }
  res.consistency /= static_cast<double>(b);
  res.loss = res.exclusion + lambda * res.consistency;
  return res;
}

std::pair<MatrixD, MatrixD> crd_views(const MatrixD& features, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw ConfigError("crd.noise_sigma must be >= 0");
  MatrixD a = features;
  MatrixD b = features;
  if (noise_sigma == 0.0) return {std::move(a), std::move(b)};
  Rng rng(seed);
  for (auto& v : a.flat()) v += noise_sigma * rng.normal();
  for (auto& v : b.flat()) v += noise_sigma * rng.normal();
  return {std::move(a), std::move(b)};
}

CrdResult loss_crd_feat(const MatrixD& features, const std::function<MatrixD(const MatrixD&)>& forward,
                        const CandidateMatrix& sets, double lambda, double noise_sigma,
                        std::uint64_t seed) {
  const auto [va, vb] = crd_views(features, noise_sigma, seed);
  return loss_crd(forward(va), forward(vb), sets, lambda);
}

// ---------------------------------------------------------------------------

void records_update(RecordsState& state, const MatrixD& batch_features, double momentum,
                    const std::function<std::vector<double>(std::span<const double>)>& logits_of) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("records.momentum must lie in [0,1)");
  const std::size_t b = batch_features.rows();
  const std::size_t d = batch_features.cols();
  if (b == 0) return;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto r = batch_features.row(i);
    for (std::size_t t = 0; t < d; ++t) mean[t] += r[t];
  }
  for (auto& v : mean) v /= static_cast<double>(b);

  if (!state.initialized) {
    state.prototype = mean;
    state.initialized = true;
  } else {
    if (state.prototype.size() != d) throw ShapeError("records prototype dimension changed");
    for (std::size_t t = 0; t < d; ++t) {
      state.prototype[t] = momentum * state.prototype[t] + (1.0 - momentum) * mean[t];
    }
  }

  auto z = logits_of(state.prototype);
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (auto& v : z) v /= s;
  state.prior = std::move(z);
}

MatrixD records_debias(const MatrixD& logits, std::span<const double> prior, double tau) {
  if (prior.size() != logits.cols()) throw ShapeError("records_debias: prior length must equal K");
  MatrixD out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= tau * std::log(std::max(prior[j], kPriorFloor));
  }
  return out;
}

// ---------------------------------------------------------------------------

double pop_threshold(std::size_t epoch, double purge_rate) {
  return std::min(purge_rate * static_cast<double>(epoch), 0.95);
}

std::size_t pop_purify(CandidateMatrix& working, std::span<const std::size_t> rows, const MatrixD& probs,
                       std::size_t epoch, double purge_rate) {
  if (!(purge_rate > 0.0 && purge_rate < 1.0)) throw ConfigError("pop.purge_rate must lie in (0,1)");
  if (rows.size() != probs.rows() || probs.cols() != working.classes()) {
    throw ShapeError("pop_purify: probabilities do not match the working sets");
  }
  const double theta = pop_threshold(epoch, purge_rate);
  if (theta <= 0.0) return 0;
  std::size_t removed = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    const auto p = probs.row(r);
    std::size_t size = working.row_size(i);
    if (size <= 1) continue;
    double best = -1.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (working.test(i, j)) best = std::max(best, p[j]);
    }
    for (std::size_t j = 0; j < p.size() && size > 1; ++j) {
      if (working.test(i, j) && p[j] < theta * best) {
        working.set(i, j, false);
        --size;
        ++removed;
      }
    }
  }
  return removed;
}

// ---------------------------------------------------------------------------

ObjectiveState init_state(const ObjectiveKind& kind, const CandidateMatrix& candidates) {
  validate(kind);
  ObjectiveState st;
  const BaseObjective* wrapped = base_of(kind);
  const auto is = [&](auto tag) {
    using T = decltype(tag);
    return std::holds_alternative<T>(kind) || (wrapped && std::holds_alternative<T>(*wrapped));
  };
  const std::size_t n = candidates.rows();
  const std::size_t k = candidates.classes();
  if (is(Proden{})) {
    MatrixD w(n, k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t size = candidates.row_size(i);
      for (std::size_t j = 0; j < k; ++j) {
        if (candidates.test(i, j)) w(i, j) = 1.0 / static_cast<double>(size);
      }
    }
    st.proden_weights = std::move(w);
  }
  if (is(Solar{})) st.solar_dist = std::vector<double>(k, 1.0 / static_cast<double>(k));
  if (std::holds_alternative<Records>(kind)) st.records = RecordsState{};
  if (std::holds_alternative<Pop>(kind)) st.pop_sets = candidates;
  return st;
}

namespace {

MatrixD proden_rows(const ObjectiveState& st, std::span<const std::size_t> rows) {
  if (!st.proden_weights) throw ConfigError("proden objective without weight state");
  const auto& w = *st.proden_weights;
  MatrixD out(rows.size(), w.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= w.rows()) throw ShapeError("proden row index out of range");
    const auto s = w.row(rows[r]);
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

const std::vector<double>& solar_dist(const ObjectiveState& st) {
  if (!st.solar_dist) throw ConfigError("solar objective without class-distribution state");
  return *st.solar_dist;
}

}  // namespace

LossResult base_objective_loss(const BaseObjective& base, const MatrixD& z, const MatrixD* zd,
                               const CandidateMatrix& sets, std::span<const std::size_t> rows,
                               const ObjectiveState& st, std::vector<double>* solar_mass, std::size_t* warnings) {
  const MatrixD& zt = zd ? *zd : z;
  return std::visit(
      overloaded{
          [&](const Cc&) {
            if (!zd) return loss_cc(z, sets);
            // CC's gradient is p - p|S renormalized; debiasing moves the S-restricted target.
            return loss_weighted_ce(z, proden_weights(softmax_rows(zt), sets));
          },
          [&](const Proden&) { return loss_weighted_ce(z, proden_rows(st, rows)); },
          [&](const Lws& l) {
            return loss_lws(z, sets, l.beta, lws_weights(softmax_rows(zt), sets));
          },
          [&](const Cavl&) { return loss_ce(z, cavl_targets(zt, sets)); },
          [&](const AbsMae&) { return loss_abs(z, sets, {AbsKind::Base::Mae, 0.0}); },
          [&](const AbsGce& g) { return loss_abs(z, sets, {AbsKind::Base::Gce, g.q}); },
          [&](const Solar& s) {
            const auto plan = sinkhorn_assign(softmax_rows(zt), sets, solar_dist(st), s.sinkhorn_eps,
                                                   s.sinkhorn_iters);
            if (warnings) *warnings += plan.dropped_columns;
            const auto targets = sinkhorn_targets(plan);
            if (solar_mass) {
              for (std::size_t i = 0; i < targets.rows(); ++i) {
                for (std::size_t j = 0; j < targets.cols(); ++j) (*solar_mass)[j] += targets(i, j);
              }
            }
            return loss_weighted_ce(z, targets);
          },
          [&](const CrdFeat&) -> LossResult {
            throw ConfigError("two-view objective dispatched without views");
          },
      },
      base);
}

}  // namespace pll::obj
