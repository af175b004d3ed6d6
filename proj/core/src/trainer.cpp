#include "pll/trainer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>

#include "pll/error.hpp"
#include "pll/random.hpp"

namespace pll::trainer {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kNoiseStream = 0x4352;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

MatrixD gather_rows(const MatrixD& src, std::span<const std::size_t> idx) {
  MatrixD out(idx.size(), src.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto s = src.row(idx[r]);
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> argmax_rows(const MatrixD& z) {
  std::vector<int> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto r = z.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

double match_rate(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i] ? 1 : 0;
  return a.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(a.size());
}

void add_shift(MatrixD& z, const std::vector<double>& shift) {
  if (shift.empty()) return;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += shift[j];
  }
}

std::vector<double> debias_shift(const obj::ObjectiveKind& kind, const obj::ObjectiveState& st) {
  const auto* rec = std::get_if<obj::Records>(&kind);
  if (!rec || !st.records || !st.records->initialized) return {};
  std::vector<double> shift(st.records->prior.size());
  for (std::size_t j = 0; j < shift.size(); ++j) {
    shift[j] = -rec->tau * std::log(std::max(st.records->prior[j], obj::kPriorFloor));
  }
  return shift;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("train.sigma must be positive");
  obj::validate(objective);
}

std::string TrainReport::to_text() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "objective=" << objective << "\n";
  out << "epochs=" << epochs.size() << "\n";
  for (const auto& e : epochs) {
    const std::string p = "epoch." + std::to_string(e.epoch) + ".";
    out << p << "train_loss=" << e.train_loss << "\n";
    if (e.train_accuracy) out << p << "train_accuracy=" << *e.train_accuracy << "\n";
    if (e.test_accuracy) out << p << "test_accuracy=" << *e.test_accuracy << "\n";
    out << p << "warnings=" << e.warnings << "\n";
  }
  return out.str();
}

std::vector<int> predict(const model::Model& m, const MatrixF& features,
                         const std::vector<double>& logit_adjustment) {
  auto z = model::logits(m, features);
  add_shift(z, logit_adjustment);
  return argmax_rows(z);
}

FitResult fit(const PLLDataset& dataset, const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  const std::size_t n = dataset.size();
  const std::size_t k = dataset.num_classes();
  const std::size_t d = dataset.features.cols();
  if (n == 0) throw ConfigError("cannot train on an empty dataset");
  if (dataset.candidates.rows() != n || dataset.candidates.classes() != k) {
    throw ShapeError("dataset candidates do not match its features/label space");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (dataset.candidates.row_size(i) == 0) {
      throw ConfigError("empty candidate set at training row " + std::to_string(i));
    }
  }

  FitResult out;
  auto& net = out.model;
  if (opts.text_init) {
    if (opts.text_init->rows() != k || opts.text_init->cols() != d) {
      throw ShapeError("text embeddings must be " + std::to_string(k) + "x" + std::to_string(d));
    }
    net.head = model::init_text_classifier(*opts.text_init, cfg.sigma);
  } else {
    net.head = model::init_random_classifier(k, d, cfg.seed, cfg.sigma);
  }
  if (cfg.use_adapter) {
    const std::size_t r = cfg.adapter_bottleneck ? cfg.adapter_bottleneck : model::default_bottleneck(k, d);
    net.adapter = model::init_adapter(d, r, cfg.seed, cfg.adapter_scale);
  }

  const MatrixD features = matrix_cast<double>(dataset.features);
  auto& st = out.state;
  st = obj::init_state(cfg.objective, dataset.candidates);
  const auto* rec = std::get_if<obj::Records>(&cfg.objective);
  const auto* pop = std::get_if<obj::Pop>(&cfg.objective);
  const obj::BaseObjective base = [&]() -> obj::BaseObjective {
    if (const auto* b = obj::base_of(cfg.objective)) return *b;
    return std::visit(
        overloaded{
            [](const obj::Records&) -> obj::BaseObjective { return obj::Cc{}; },
            [](const obj::Pop&) -> obj::BaseObjective { return obj::Cc{}; },
            [](const auto& b) -> obj::BaseObjective { return b; },
        },
        cfg.objective);
  }();
  const auto* crd = std::get_if<obj::CrdFeat>(&base);
  const auto* solar = std::get_if<obj::Solar>(&base);
  const bool proden = std::holds_alternative<obj::Proden>(base);

  optim::SgdConfig sgd{cfg.lr, cfg.momentum, cfg.weight_decay};
  optim::SgdState sgd_state;
  out.report.objective = obj::name(cfg.objective);

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const CandidateMatrix& working = st.pop_sets ? *st.pop_sets : dataset.candidates;
    Rng shuffle(derive_seed(cfg.seed, epoch, kShuffleStream));
    const auto order = shuffle.permutation(n);
    EpochRecord rec_epoch;
    rec_epoch.epoch = epoch;
    double loss_sum = 0.0;
    std::vector<double> solar_mass(k, 0.0);

    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const MatrixD xb = gather_rows(features, idx);
      const CandidateMatrix sets = working.select_rows(idx);
      auto grads = model::zero_gradients(net);

      if (rec) {
        const MatrixD emb = model::embed(net, xb);
        obj::records_update(*st.records, emb, rec->momentum,
                            [&](std::span<const double> f) { return model::head_logits(net.head, f); });
      }
      const auto shift = debias_shift(cfg.objective, st);

      double batch_loss = 0.0;
      if (crd) {
        const std::uint64_t noise_seed = derive_seed(cfg.seed, epoch * 1000003ull + start, kNoiseStream);
        const auto [va, vb] = obj::crd_views(xb, crd->noise_sigma, noise_seed);
        const auto ca = model::forward(net, va);
        const auto cb = model::forward(net, vb);
        const auto res = obj::loss_crd(ca.logits, cb.logits, sets, crd->lambda);
        rec_epoch.warnings += res.clamped_rows;
        batch_loss = res.loss;
        model::backward(net, ca, res.grad_a, grads);
        model::backward(net, cb, res.grad_b, grads);
      } else {
        const auto cache = model::forward(net, xb);
        std::optional<MatrixD> zd;
        if (!shift.empty()) {
          zd = cache.logits;
          add_shift(*zd, shift);
        }
        const auto res = obj::base_objective_loss(base, cache.logits, zd ? &*zd : nullptr, sets, idx, st,
                                                 solar ? &solar_mass : nullptr, &rec_epoch.warnings);
        rec_epoch.warnings += res.clamped_rows;
        batch_loss = res.loss;
        model::backward(net, cache, res.grad, grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericalError("non-finite loss in epoch " + std::to_string(epoch));
      }
      loss_sum += batch_loss * static_cast<double>(end - start);

      std::vector<std::span<double>> params{net.head.weights.flat()};
      std::vector<std::span<const double>> g{grads.head.flat()};
      std::array<bool, 3> decay{!(cfg.protect_init && opts.text_init && epoch == 1), true, true};
      if (net.adapter) {
        params.push_back(net.adapter->down.flat());
        params.push_back(net.adapter->up.flat());
        g.push_back(grads.adapter_down.flat());
        g.push_back(grads.adapter_up.flat());
      }
      optim::sgd_step(params, g, sgd_state, sgd, std::span<const bool>(decay.data(), params.size()));
    }
    rec_epoch.train_loss = loss_sum / static_cast<double>(n);

    // End-of-epoch state refresh from full-data predictions.
    const auto shift = debias_shift(cfg.objective, st);
    MatrixD z_all = model::logits(net, features);
    MatrixD z_eff = z_all;
    add_shift(z_eff, shift);
    const MatrixD p_all = obj::softmax_rows(z_eff);
    if (pop) {
      obj::pop_purify(*st.pop_sets, all, p_all, epoch, pop->purge_rate);
    }
    if (proden) {
      const CandidateMatrix& sets_now = st.pop_sets ? *st.pop_sets : dataset.candidates;
      obj::proden_update(*st.proden_weights, all, p_all, sets_now, &rec_epoch.warnings);
    }
    if (solar) {
      auto& r = *st.solar_dist;
      double total = 0.0;
      for (double v : solar_mass) total += v;
      if (total > 0.0) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          r[j] = solar->dist_momentum * r[j] + (1.0 - solar->dist_momentum) * solar_mass[j] / total;
          s += r[j];
        }
        for (auto& v : r) v /= s;
      }
    }

    if (dataset.oracle_labels) {
      rec_epoch.train_accuracy = match_rate(argmax_rows(z_eff), *dataset.oracle_labels);
    }
    if (opts.test) {
      rec_epoch.test_accuracy = match_rate(predict(net, opts.test->features, shift), opts.test->labels);
    }
    out.report.epochs.push_back(rec_epoch);
  }
  out.logit_adjustment = debias_shift(cfg.objective, st);
  return out;
}

}  // namespace pll::trainer
