#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/matrix.hpp"

namespace pll::obj {

// Probabilities are clamped here before any logarithm or division.
inline constexpr double kProbFloor = 1e-12;
// Floor applied to class-prior estimates before log-adjustment.
inline constexpr double kPriorFloor = 1e-8;

// ---------------------------------------------------------------------------
// Objective kinds

struct Cc {};
struct Proden {};
struct Lws {
  double beta = 1.0;
};
struct Cavl {};
struct AbsMae {};
struct AbsGce {
  double q = 0.7;
};
struct CrdFeat {
  double lambda = 1.0;
  double noise_sigma = 0.1;
};
struct Solar {
  double sinkhorn_eps = 0.05;
  std::size_t sinkhorn_iters = 100;
  double dist_momentum = 0.9;
};

using BaseObjective = std::variant<Cc, Proden, Lws, Cavl, AbsMae, AbsGce, CrdFeat, Solar>;

// Momentum prototype plus dynamic logit adjustment around a base objective.
// The adjusted logits drive label disambiguation and prediction; the base
// loss itself is differentiated through the raw logits.
struct Records {
  BaseObjective base = Cc{};
  double momentum = 0.9;
  double tau = 0.05;
};

// Progressive purification of the working candidate sets around a base objective.
struct Pop {
  BaseObjective base = Cc{};
  double purge_rate = 0.02;
};

using ObjectiveKind =
    std::variant<Cc, Proden, Lws, Cavl, AbsMae, AbsGce, CrdFeat, Solar, Records, Pop>;

// Throws ConfigError on out-of-range parameters.
void validate(const ObjectiveKind& kind);
std::string name(const ObjectiveKind& kind);
std::string name(const BaseObjective& kind);
const BaseObjective* base_of(const ObjectiveKind& kind);  // null for non-wrappers

// ---------------------------------------------------------------------------
// Loss ops. Every op takes B x K logits and the B batch-local candidate rows
// and returns the batch-mean loss with its gradient w.r.t. the logits.

struct LossResult {
  double loss = 0.0;
  MatrixD grad;
  std::size_t clamped_rows = 0;  // rows where a probability floor was applied

  bool numerical_warning() const noexcept { return clamped_rows > 0; }
};

MatrixD softmax_rows(const MatrixD& logits);

// Plain cross-entropy to integer labels; the reference that singleton sets reduce to.
LossResult loss_ce(const MatrixD& logits, std::span<const int> labels);

// -log sum_{j in S} p_j
LossResult loss_cc(const MatrixD& logits, const CandidateMatrix& sets);

// -sum_j w_j log p_j; gradient p - w for weight rows summing to one.
LossResult loss_weighted_ce(const MatrixD& logits, const MatrixD& weights);

// Rows of p renormalised within S (zero outside). Rows whose in-set mass
// underflows fall back to uniform over S and are counted in *underflow_rows.
MatrixD proden_weights(const MatrixD& probs, const CandidateMatrix& sets,
                       std::size_t* underflow_rows = nullptr);

// Writes proden_weights(probs, sets) into rows `rows` of the N x K state matrix.
void proden_update(MatrixD& state, std::span<const std::size_t> rows, const MatrixD& probs,
                   const CandidateMatrix& sets, std::size_t* underflow_rows = nullptr);

double psi(double x);  // 1 / (1 + e^x)

// LWS weights: p normalised within S for members and within the complement
// for non-members. Treated as constants by loss_lws.
MatrixD lws_weights(const MatrixD& probs, const CandidateMatrix& sets);

// sum_{z in S} w_z psi(g_z) + beta * sum_{z not in S} w_z psi(-g_z)
LossResult loss_lws(const MatrixD& logits, const CandidateMatrix& sets, double beta,
                    const MatrixD& weights);

// Cross-entropy to argmax_{j in S} logit_j (smaller index on ties); selection is detached.
LossResult loss_cavl(const MatrixD& logits, const CandidateMatrix& sets);
std::vector<int> cavl_targets(const MatrixD& logits, const CandidateMatrix& sets);

struct AbsKind {
  enum class Base { Mae, Gce } base = Base::Mae;
  double q = 0.7;
};
// (1/|S|) sum_{j in S} l(p, e_j) with l_MAE = 2(1 - p_j), l_GCE = (1 - p_j^q)/q.
LossResult loss_abs(const MatrixD& logits, const CandidateMatrix& sets, AbsKind kind);

// Supervised counterparts used as singleton-set references.
LossResult loss_mae(const MatrixD& logits, std::span<const int> labels);
LossResult loss_gce(const MatrixD& logits, std::span<const int> labels, double q);

struct CrdResult {
  double loss = 0.0;
  double exclusion = 0.0;    // mean over both views
  double consistency = 0.0;  // KL term before lambda
  MatrixD grad_a;
  MatrixD grad_b;
  std::size_t clamped_rows = 0;
};

/// Two-view feature-space consistency objective.
///
/// exclusion(v) = -log(1 - sum_{j not in S} p_j(v)), averaged over the two views,
/// plus lambda * KL(p_a|S || p_b|S) where p|S is p restricted to S and renormalised.
CrdResult loss_crd(const MatrixD& logits_a, const MatrixD& logits_b, const CandidateMatrix& sets,
                   double lambda);

// Two independently perturbed copies f + N(0, sigma^2 I) of a feature batch.
std::pair<MatrixD, MatrixD> crd_views(const MatrixD& features, double noise_sigma,
                                      std::uint64_t seed);

// Full op: perturb, run `forward` on both views, then loss_crd.
CrdResult loss_crd_feat(const MatrixD& features, const std::function<MatrixD(const MatrixD&)>& forward,
                        const CandidateMatrix& sets, double lambda, double noise_sigma,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// RECORDS

struct RecordsState {
  std::vector<double> prototype;  // momentum mean of the classifier inputs
  std::vector<double> prior;      // softmax of classifier logits at the prototype
  bool initialized = false;
};

// f <- m f + (1-m) mean(batch); the first call initialises f to the batch mean.
// prior <- softmax(logits_of(f)).
void records_update(RecordsState& state, const MatrixD& batch_features, double momentum,
                    const std::function<std::vector<double>(std::span<const double>)>& logits_of);

// logit'_j = logit_j - tau * log(max(prior_j, kPriorFloor))
MatrixD records_debias(const MatrixD& logits, std::span<const double> prior, double tau);

// ---------------------------------------------------------------------------
// SoLar

struct SinkhornResult {
  MatrixD plan;                  // B x K transport plan, zero off-support
  std::size_t iterations = 0;
  double row_residual = 0.0;     // max |row sum - 1/B|
  double col_residual = 0.0;     // max |col sum - r_j| (r after any renormalisation)
  std::size_t dropped_columns = 0;
  bool converged = false;
};

inline constexpr double kSinkhornTolerance = 1e-3;

/// Entropic transport between rows (mass 1/B each) and classes (mass r),
/// restricted to candidate support, with kernel exp(log M / eps) handled in
/// log space. M is p masked to S and renormalised per row. Columns without
/// support in the batch are dropped and r renormalised over the rest.
SinkhornResult sinkhorn_assign(const MatrixD& probs, const CandidateMatrix& sets,
                               std::span<const double> class_dist, double eps, std::size_t iters,
                               double tol = kSinkhornTolerance);

// Plan rows rescaled to sum to one; the SoLar soft targets.
MatrixD sinkhorn_targets(const SinkhornResult& result);

// ---------------------------------------------------------------------------
// POP

double pop_threshold(std::size_t epoch, double purge_rate);

// Removes j from working row i when p_ij < theta * max_{j' in S_i} p_ij', never
// emptying a row. `rows` maps probability rows to working-set rows. Returns the
// number of labels removed.
std::size_t pop_purify(CandidateMatrix& working, std::span<const std::size_t> rows,
                       const MatrixD& probs, std::size_t epoch, double purge_rate);

// ---------------------------------------------------------------------------
// Per-run mutable state

struct ObjectiveState {
  std::optional<MatrixD> proden_weights;         // N x K
  std::optional<RecordsState> records;
  std::optional<std::vector<double>> solar_dist;  // K-simplex
  std::optional<CandidateMatrix> pop_sets;
};

// PRODEN weights uniform over S, SoLar distribution uniform, POP sets = input sets.
ObjectiveState init_state(const ObjectiveKind& kind, const CandidateMatrix& candidates);

// ---------------------------------------------------------------------------
// Dispatch

/// Batch loss of a single-view base objective as used in training.
///
/// Gradients flow through `logits`. Targets the objective derives from the
/// model (label disambiguation) come from `disambiguation_logits` when given
/// (RECORDS passes its adjusted logits), otherwise from `logits`. `rows` index
/// the batch into per-instance state. SoLar target column sums are added to
/// `solar_mass` when non-null. CrdFeat is two-view and rejected here.
LossResult base_objective_loss(const BaseObjective& base, const MatrixD& logits,
                               const MatrixD* disambiguation_logits, const CandidateMatrix& sets,
                               std::span<const std::size_t> rows, const ObjectiveState& state,
                               std::vector<double>* solar_mass = nullptr, std::size_t* warnings = nullptr);

}  // namespace pll::obj
