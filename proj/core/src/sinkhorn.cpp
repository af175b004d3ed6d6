#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <utility>

#include "pll/error.hpp"
#include "pll/objectives.hpp"

namespace pll::obj {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
bool solve_dense(std::vector<double> a, std::vector<double>& rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    }
    if (!(std::abs(a[piv * n + c]) > 0.0)) return false;
    if (piv != c) {
      for (std::size_t q = 0; q < n; ++q) std::swap(a[c * n + q], a[piv * n + q]);
      std::swap(rhs[c], rhs[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      if (f == 0.0) continue;
      for (std::size_t q = c; q < n; ++q) a[r * n + q] -= f * a[c * n + q];
      rhs[r] -= f * rhs[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    double v = rhs[c];
    for (std::size_t q = c + 1; q < n; ++q) v -= a[c * n + q] * rhs[q];
    rhs[c] = v / a[c * n + c];
  }
  return std::all_of(rhs.begin(), rhs.end(), [](double v) { return std::isfinite(v); });
}

// Plain scaling sweeps before switching to Newton steps on the dual.
constexpr std::size_t kPlainSweeps = 5;
constexpr int kLineSearchSteps = 30;
// Levenberg damping of the dual Hessian, relative to the row mass 1/B.
constexpr double kDamping = 1e-3;

}  // namespace

SinkhornResult sinkhorn_assign(const MatrixD& probs, const CandidateMatrix& sets,
                               std::span<const double> class_dist, double eps, std::size_t iters,
                               double tol) {
  if (!(eps > 0.0)) throw ConfigError("sinkhorn eps must be > 0");
  if (probs.rows() != sets.rows() || probs.cols() != sets.classes() || class_dist.size() != probs.cols()) {
    throw ShapeError("sinkhorn_assign: probabilities, candidates and class distribution disagree");
  }
  const std::size_t b = probs.rows();
  const std::size_t k = probs.cols();
  SinkhornResult res;
  res.plan = MatrixD(b, k, 0.0);
  if (b == 0) {
    res.converged = true;
    return res;
  }

  // Column marginal: drop classes with no support in this batch (or zero mass).
  std::vector<double> r(class_dist.begin(), class_dist.end());
  std::vector<char> supported(k, 0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (sets.test(i, j)) supported[j] = 1;
    }
  }
  double r_total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!supported[j] && r[j] > 0.0) ++res.dropped_columns;
    if (!supported[j] || !(r[j] > 0.0)) r[j] = 0.0;
    r_total += r[j];
  }
  if (!(r_total > 0.0)) throw NumericalError("sinkhorn_assign: no class mass with candidate support");
  for (auto& v : r) v /= r_total;

  // Log kernel: log(M)/eps where M is p masked to S and renormalised per row.
  MatrixD log_kernel(b, k, kNegInf);
  std::vector<char> live_row(b, 0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto p = probs.row(i);
    double mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (sets.test(i, j)) mass += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (!sets.test(i, j) || r[j] == 0.0) continue;
      const double m = mass > 0.0 ? p[j] / mass : 1.0;
      log_kernel(i, j) = std::log(std::max(m, kProbFloor)) / eps;
      live_row[i] = 1;
    }
  }

  const double log_row = -std::log(static_cast<double>(b));
  std::vector<double> f(b, 0.0), g(k, 0.0), buf(std::max(b, k));
  std::vector<double> log_r(k);
  for (std::size_t j = 0; j < k; ++j) log_r[j] = r[j] > 0.0 ? std::log(r[j]) : kNegInf;

  std::vector<std::size_t> rows_live, cols_live;
  for (std::size_t i = 0; i < b; ++i) {
    if (live_row[i]) rows_live.push_back(i);
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (r[j] > 0.0) cols_live.push_back(j);
  }
  const double row_mass = 1.0 / static_cast<double>(b);

  auto entry = [&](std::size_t i, std::size_t j) {
    return log_kernel(i, j) == kNegInf ? 0.0 : std::exp(log_kernel(i, j) + f[i] + g[j]);
  };
  auto residuals = [&]() {
    double rows = 0.0, cols = 0.0;
    for (std::size_t i : rows_live) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += entry(i, j);
      rows = std::max(rows, std::abs(s - row_mass));
    }
    for (std::size_t j : cols_live) {
      double s = 0.0;
      for (std::size_t i : rows_live) s += entry(i, j);
      cols = std::max(cols, std::abs(s - r[j]));
    }
    return std::pair{rows, cols};
  };
  auto sweep = [&]() {
    for (std::size_t i : rows_live) {
      for (std::size_t j = 0; j < k; ++j) buf[j] = log_kernel(i, j) + g[j];
      f[i] = log_row - lse(std::span<const double>(buf.data(), k));
    }
    for (std::size_t j : cols_live) {
      for (std::size_t i = 0; i < b; ++i) buf[i] = live_row[i] ? log_kernel(i, j) + f[i] : kNegInf;
      g[j] = log_r[j] - lse(std::span<const double>(buf.data(), b));
    }
  };
  // Concave dual objective; the scaling fixed point is its maximiser.
  auto dual = [&]() {
    double v = 0.0;
    for (std::size_t i : rows_live) v += row_mass * f[i];
    for (std::size_t j : cols_live) v += r[j] * g[j];
    for (std::size_t i : rows_live) {
      for (std::size_t j = 0; j < k; ++j) v -= entry(i, j);
    }
    return v;
  };
  // One damped Newton step on (f, g) with the last live column's potential
  // held fixed (the dual is invariant to f + c, g - c). Returns false when no
  // step along the Newton direction improves the dual.
  auto newton = [&]() {
    const std::size_t nr = rows_live.size();
    const std::size_t nc = cols_live.size() - 1;
    const std::size_t n = nr + nc;
    std::vector<double> h(n * n, 0.0), grad(n, 0.0);
    for (std::size_t a = 0; a < nr; ++a) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += entry(rows_live[a], j);
      grad[a] = row_mass - s;
      h[a * n + a] = s;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      const std::size_t j = cols_live[c];
      double s = 0.0;
      for (std::size_t a = 0; a < nr; ++a) {
        const double q = entry(rows_live[a], j);
        s += q;
        h[a * n + nr + c] = q;
        h[(nr + c) * n + a] = q;
      }
      grad[nr + c] = r[j] - s;
      h[(nr + c) * n + nr + c] = s;
    }
    for (std::size_t t = 0; t < n; ++t) h[t * n + t] += kDamping * row_mass;
    std::vector<double> dir = grad;
    if (!solve_dense(std::move(h), dir)) return false;

    double slope = 0.0;
    for (std::size_t t = 0; t < n; ++t) slope += grad[t] * dir[t];
    const auto f0 = f;
    const auto g0 = g;
    const double base = dual();
    double step = 1.0;
    for (int ls = 0; ls < kLineSearchSteps; ++ls, step *= 0.5) {
      for (std::size_t a = 0; a < nr; ++a) f[rows_live[a]] = f0[rows_live[a]] + step * dir[a];
      for (std::size_t c = 0; c < nc; ++c) g[cols_live[c]] = g0[cols_live[c]] + step * dir[nr + c];
      const double v = dual();
      if (std::isfinite(v) && v >= base + 1e-4 * step * slope) return true;
    }
    f = f0;
    g = g0;
    return false;
  };

  // Alternating scaling, then safeguarded Newton steps on the same dual: the
  // plan keeps the diag(u) K diag(v) form but converges in far fewer rounds
  // when eps is small and the kernel is badly conditioned.
  if (!rows_live.empty()) {
    for (std::size_t it = 0; it < iters; ++it) {
      if (it < kPlainSweeps || cols_live.size() < 2 || !newton()) sweep();
      res.iterations = it + 1;
      std::tie(res.row_residual, res.col_residual) = residuals();
      if (res.row_residual < tol && res.col_residual < tol) break;
    }
  }

  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (live_row[i]) {
        if (log_kernel(i, j) != kNegInf) res.plan(i, j) = std::exp(log_kernel(i, j) + f[i] + g[j]);
      } else if (sets.test(i, j)) {
        // Row with no live class: keep its masked probabilities at row mass 1/B.
        res.plan(i, j) = 1.0 / static_cast<double>(b * sets.row_size(i));
      }
    }
  }
  res.col_residual = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < b; ++i) s += res.plan(i, j);
    res.col_residual = std::max(res.col_residual, std::abs(s - r[j]));
  }
  res.converged = res.row_residual < tol && res.col_residual < tol;
  return res;
}

MatrixD sinkhorn_targets(const SinkhornResult& result) {
  MatrixD t = result.plan;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto row = t.row(i);
    double s = 0.0;
    for (double v : row) s += v;
    if (s > 0.0) {
      for (auto& v : row) v /= s;
    }
  }
  return t;
}

}  // namespace pll::obj
