#include "pll/eval.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pll/error.hpp"

namespace pll::eval {

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw ShapeError("accuracy: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

std::vector<double> per_class_accuracy(std::span<const int> preds, std::span<const int> labels,
                                       std::size_t num_classes) {
  if (preds.size() != labels.size()) throw ShapeError("per_class_accuracy: length mismatch");
  std::vector<std::size_t> hit(num_classes, 0), total(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (labels[i] < 0 || y >= num_classes) throw ShapeError("per_class_accuracy: label out of range");
    ++total[y];
    if (preds[i] == labels[i]) ++hit[y];
  }
  std::vector<double> acc(num_classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c] > 0) acc[c] = static_cast<double>(hit[c]) / static_cast<double>(total[c]);
  }
  return acc;
}

Shot shot_of(std::size_t train_count, ShotThresholds t) {
  if (train_count > t.many) return Shot::Many;
  if (train_count < t.few) return Shot::Few;
  return Shot::Medium;
}

ShotAccuracy shot_accuracy(std::span<const int> preds, std::span<const int> labels,
                           std::span<const std::size_t> train_class_counts, ShotThresholds t) {
  const auto acc = per_class_accuracy(preds, labels, train_class_counts.size());
  double sum[3] = {0.0, 0.0, 0.0};
  std::size_t cnt[3] = {0, 0, 0};
  for (std::size_t c = 0; c < acc.size(); ++c) {
    if (std::isnan(acc[c])) continue;
    const auto b = static_cast<std::size_t>(shot_of(train_class_counts[c], t));
    sum[b] += acc[c];
    ++cnt[b];
  }
  ShotAccuracy out;
  if (cnt[0]) out.many = sum[0] / static_cast<double>(cnt[0]);
  if (cnt[1]) out.medium = sum[1] / static_cast<double>(cnt[1]);
  if (cnt[2]) out.few = sum[2] / static_cast<double>(cnt[2]);
  return out;
}

CoverOracle covering_oracle(std::span<const int> preds, const CandidateMatrix& candidates,
                            const std::vector<int>* oracle_labels) {
  if (preds.size() != candidates.rows()) throw ShapeError("covering_oracle: predictions do not align with candidate rows");
  CoverOracle out;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i];
    if (p >= 0 && static_cast<std::size_t>(p) < candidates.classes() &&
        candidates.test(i, static_cast<std::size_t>(p))) {
      ++covered;
    }
  }
  out.covering_rate = preds.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(preds.size());
  if (oracle_labels) out.oracle_accuracy = accuracy(preds, *oracle_labels);
  return out;
}

namespace {

void put(std::ostringstream& out, const char* key, const std::optional<double>& v) {
  out << key << "=";
  if (v) {
    out << *v;
  } else {
    out << "unavailable";
  }
  out << "\n";
}

}  // namespace

std::string MetricBlock::to_text() const {
  std::ostringstream out;
  out << std::setprecision(10);
  put(out, "overall_acc", overall_acc);
  put(out, "many_acc", many_acc);
  put(out, "medium_acc", medium_acc);
  put(out, "few_acc", few_acc);
  put(out, "covering_rate", covering_rate);
  put(out, "oracle_acc", oracle_acc);
  return out.str();
}

std::string MetricBlock::per_class_csv() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "class,accuracy\n";
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    out << c << ",";
    if (std::isnan(per_class[c])) {
      out << "unavailable";
    } else {
      out << per_class[c];
    }
    out << "\n";
  }
  return out.str();
}

MetricBlock evaluate(std::span<const int> preds, std::span<const int> labels, std::size_t num_classes,
                     std::span<const std::size_t> train_class_counts, const CandidateMatrix* candidates) {
  MetricBlock m;
  m.overall_acc = accuracy(preds, labels);
  m.per_class = per_class_accuracy(preds, labels, num_classes);
  if (!train_class_counts.empty()) {
    if (train_class_counts.size() != num_classes) throw ShapeError("class counts must have K entries");
    const auto shots = shot_accuracy(preds, labels, train_class_counts);
    m.many_acc = shots.many;
    m.medium_acc = shots.medium;
    m.few_acc = shots.few;
  }
  if (candidates) {
    const std::vector<int> y(labels.begin(), labels.end());
    const auto co = covering_oracle(preds, *candidates, &y);
    m.covering_rate = co.covering_rate;
    m.oracle_acc = co.oracle_accuracy;
  }
  return m;
}

}  // namespace pll::eval
