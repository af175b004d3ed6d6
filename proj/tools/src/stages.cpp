#include "stages.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "manifest.hpp"
#include "pll/error.hpp"
#include "pll/eval.hpp"
#include "pll/genlab.hpp"
#include "pll/io.hpp"
#include "pll/model.hpp"
#include "pll/trainer.hpp"
#include "pll/zsfilter.hpp"

namespace fs = std::filesystem;

namespace pll::cli {
namespace {

fs::path out_file(const ExperimentConfig& cfg, const char* name) { return cfg.paths.out_dir / name; }

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.paths.out_dir, ec);
  if (ec) throw ConfigError("cannot create paths.out_dir " + cfg.paths.out_dir.string() + ": " + ec.message());
}

void remove_if_present(const fs::path& p) {
  std::error_code ec;
  fs::remove(p, ec);
}

const fs::path& require_path(const fs::path& p, const char* key) {
  if (p.empty()) throw ConfigError("paths." + std::string(key) + " is not set");
  return p;
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

// Training-split inputs, preferring what gen/filter produced.
fs::path train_features_path(const ExperimentConfig& cfg) {
  const auto gen = out_file(cfg, kGenFeatures);
  if (fs::exists(gen)) return gen;
  return require_path(cfg.paths.features, "features");
}

fs::path train_labels_path(const ExperimentConfig& cfg) {
  const auto gen = out_file(cfg, kGenLabels);
  if (fs::exists(gen)) return gen;
  return cfg.paths.labels;  // may be empty
}

fs::path unfiltered_candidates_path(const ExperimentConfig& cfg) {
  const auto gen = out_file(cfg, kGenCandidates);
  if (fs::exists(gen)) return gen;
  if (cfg.paths.candidates.empty()) {
    throw ConfigError(cfg.gen ? "no candidate sets in " + cfg.paths.out_dir.string() + ": run the gen stage first"
                              : std::string("no candidate sets: set paths.candidates or configure [gen]"));
  }
  return cfg.paths.candidates;
}

fs::path train_candidates_path(const ExperimentConfig& cfg) {
  const auto filtered = out_file(cfg, kFiltered);
  if (fs::exists(filtered)) return filtered;
  return unfiltered_candidates_path(cfg);
}

void log_sets(std::ostream& log, const char* what, const CandidateMatrix& c, const std::vector<int>* labels) {
  const auto s = zsfilter::candidate_stats(c, labels);
  log << what << ": rows=" << c.rows() << " mean_size=" << s.mean << " min=" << s.min << " max=" << s.max;
  if (s.coverage) log << " coverage=" << *s.coverage;
  log << "\n";
}

void check_rows(std::size_t got, std::size_t want, const fs::path& file, const char* what) {
  if (got != want) {
    throw ShapeError(file.string() + ": " + what + " has " + std::to_string(got) + " rows, expected " +
                     std::to_string(want));
  }
}

}  // namespace

void stage_gen(const ExperimentConfig& cfg, std::ostream& log) {
  if (!cfg.gen) throw ConfigError("gen stage needs a [gen] section (or --eta/--gamma)");
  ensure_out_dir(cfg);
  const auto& fpath = require_path(cfg.paths.features, "features");
  const auto& ypath = require_path(cfg.paths.labels, "labels");
  auto features = io::read_matrix_file(fpath);
  auto labels = io::read_labels_file(ypath);
  check_rows(labels.labels.size(), features.rows(), ypath, "label file");
  const std::size_t k = labels.num_classes;

  const auto feat_out = out_file(cfg, kGenFeatures);
  const auto label_out = out_file(cfg, kGenLabels);
  const auto cand_out = out_file(cfg, kGenCandidates);
  std::vector<fs::path> outputs;
  if (cfg.gamma) {
    auto full = PLLDataset::make(std::move(features), CandidateMatrix(labels.labels.size(), k), labels.labels, k);
    auto lt = genlab::subsample_longtail(full, *cfg.gamma, cfg.gen->seed);
    features = std::move(lt.features);
    labels.labels = std::move(*lt.oracle_labels);
    io::write_matrix_file(features, feat_out);
    io::write_labels_file(labels.labels, labels.num_classes, label_out);
    outputs = {feat_out, label_out};
    log << "gen: long-tail gamma=" << *cfg.gamma << " kept " << features.rows() << " rows\n";
  } else {
    remove_if_present(feat_out);
    remove_if_present(label_out);
  }

  const auto cands = genlab::generate(*cfg.gen, features, labels.labels, k);
  io::write_candidates_file(cands, cand_out);
  outputs.push_back(cand_out);
  // Anything filtered from older candidates is stale now.
  remove_if_present(out_file(cfg, kFiltered));
  log_sets(log, "gen", cands, &labels.labels);

  append_manifest(cfg.paths.out_dir, {"gen", cfg.gen->seed, {fpath, ypath}, outputs, cfg.overrides});
}

void stage_filter(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg);
  const FilterSection spec = cfg.filter.value_or(FilterSection{});
  const auto cpath = unfiltered_candidates_path(cfg);
  const auto cands = io::read_candidates_file(cpath);
  const std::size_t k = cands.classes();
  std::vector<fs::path> inputs{cpath};

  std::optional<ConfidenceMatrix> conf;
  if (!cfg.paths.confidences.empty()) {
    conf = ConfidenceMatrix(io::read_matrix_file(cfg.paths.confidences));
    inputs.push_back(cfg.paths.confidences);
    check_rows(conf->rows(), cands.rows(), cfg.paths.confidences, "confidence matrix");
  } else if (!cfg.paths.text_embeddings.empty()) {
    const auto fpath = train_features_path(cfg);
    const auto features = io::read_matrix_file(fpath);
    const auto text = io::read_matrix_file(cfg.paths.text_embeddings);
    check_rows(features.rows(), cands.rows(), fpath, "feature matrix");
    conf = zsfilter::zeroshot_confidence(features, text, spec.temperature);
    inputs.push_back(fpath);
    inputs.push_back(cfg.paths.text_embeddings);
  } else {
    throw ConfigError("filter needs paths.confidences or paths.text_embeddings");
  }
  if (conf->classes() != k) {
    throw ShapeError("confidences have " + std::to_string(conf->classes()) + " classes, candidates have " +
                     std::to_string(k));
  }

  zsfilter::FilterSpec fs_spec = zsfilter::FilterSpec::defaults(k);
  if (spec.k) fs_spec.k = spec.k;
  if (fs_spec.k == 0 || fs_spec.k > k) throw ConfigError("filter.k must lie in [1, K]");
  const auto res = zsfilter::filter_topk(cands, *conf, fs_spec);

  std::optional<std::vector<int>> labels;
  const auto ypath = train_labels_path(cfg);
  if (!ypath.empty()) labels = io::read_labels_file(ypath).labels;
  const auto* lp = labels && labels->size() == cands.rows() ? &*labels : nullptr;
  log_sets(log, "filter in", cands, lp);
  log_sets(log, "filter out", res.candidates, lp);
  log << "filter: k=" << fs_spec.k << " fallback_rows=" << res.fallback_rows << "\n";

  const auto out = out_file(cfg, kFiltered);
  io::write_candidates_file(res.candidates, out);
  append_manifest(cfg.paths.out_dir, {"filter", cfg.seed, inputs, {out}, cfg.overrides});
}

void stage_train(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg);
  const auto fpath = train_features_path(cfg);
  auto features = io::read_matrix_file(fpath);
  const auto cpath = train_candidates_path(cfg);
  const auto ypath = train_labels_path(cfg);
  auto cands = io::read_candidates_file(cpath);
  const std::size_t k = cands.classes();
  check_rows(cands.rows(), features.rows(), cpath, "candidate matrix");
  std::vector<fs::path> inputs{fpath, cpath};

  std::optional<std::vector<int>> labels;
  if (!ypath.empty()) {
    auto lf = io::read_labels_file(ypath);
    check_rows(lf.labels.size(), features.rows(), ypath, "label file");
    if (lf.num_classes != k) throw ShapeError(ypath.string() + ": label space does not match candidates");
    labels = std::move(lf.labels);
    inputs.push_back(ypath);
  }
  const auto ds = PLLDataset::make(std::move(features), std::move(cands), std::move(labels), k);

  trainer::FitOptions opts;
  MatrixF text;
  if (!cfg.paths.text_embeddings.empty()) {
    text = io::read_matrix_file(cfg.paths.text_embeddings);
    opts.text_init = &text;
    inputs.push_back(cfg.paths.text_embeddings);
  }
  trainer::EvalSplit test;
  if (!cfg.paths.test_features.empty() && !cfg.paths.test_labels.empty()) {
    test.features = io::read_matrix_file(cfg.paths.test_features);
    test.labels = io::read_labels_file(cfg.paths.test_labels).labels;
    check_rows(test.labels.size(), test.features.rows(), cfg.paths.test_labels, "test label file");
    opts.test = &test;
    inputs.push_back(cfg.paths.test_features);
    inputs.push_back(cfg.paths.test_labels);
  }

  const auto result = trainer::fit(ds, cfg.train, opts);
  for (const auto& e : result.report.epochs) {
    log << "train: epoch " << e.epoch << " loss=" << e.train_loss;
    if (e.train_accuracy) log << " train_acc=" << *e.train_accuracy;
    if (e.test_accuracy) log << " test_acc=" << *e.test_accuracy;
    log << "\n";
  }

  const auto model_out = out_file(cfg, kModel);
  const auto report_out = out_file(cfg, kTrainReport);
  const auto adj_out = out_file(cfg, kAdjustment);
  model::save_checkpoint(result.model, model_out);
  write_text(result.report.to_text(), report_out);
  std::vector<fs::path> outputs{model_out, report_out};
  if (!result.logit_adjustment.empty()) {
    MatrixF adj(1, result.logit_adjustment.size());
    for (std::size_t j = 0; j < adj.cols(); ++j) adj(0, j) = static_cast<float>(result.logit_adjustment[j]);
    io::write_matrix_file(adj, adj_out);
    outputs.push_back(adj_out);
  } else {
    remove_if_present(adj_out);
  }
  append_manifest(cfg.paths.out_dir, {"train", cfg.train.seed, inputs, outputs, cfg.overrides});
}

void stage_eval(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg);
  const auto model_in = out_file(cfg, kModel);
  if (!fs::exists(model_in)) throw ConfigError("no trained model at " + model_in.string() + "; run train first");
  const auto net = model::load_checkpoint(model_in);
  const std::size_t k = net.head.weights.rows();
  std::vector<fs::path> inputs{model_in};

  std::vector<double> adjustment;
  const auto adj_in = out_file(cfg, kAdjustment);
  if (fs::exists(adj_in)) {
    const auto adj = io::read_matrix_file(adj_in);
    if (adj.rows() != 1 || adj.cols() != k) throw ShapeError(adj_in.string() + ": expected 1 x K");
    adjustment.assign(adj.flat().begin(), adj.flat().end());
    inputs.push_back(adj_in);
  }

  const auto& tf = require_path(cfg.paths.test_features, "test_features");
  const auto& ty = require_path(cfg.paths.test_labels, "test_labels");
  const auto features = io::read_matrix_file(tf);
  const auto labels = io::read_labels_file(ty);
  check_rows(labels.labels.size(), features.rows(), ty, "test label file");
  if (labels.num_classes != k) throw ShapeError(ty.string() + ": label space does not match the model");
  inputs.push_back(tf);
  inputs.push_back(ty);

  std::vector<std::size_t> counts;
  const auto train_y = train_labels_path(cfg);
  std::optional<std::vector<int>> train_labels;
  if (!train_y.empty()) {
    train_labels = io::read_labels_file(train_y).labels;
    counts = count_labels(*train_labels, k);
    inputs.push_back(train_y);
  }
  std::optional<CandidateMatrix> test_cands;
  if (!cfg.paths.test_candidates.empty()) {
    test_cands = io::read_candidates_file(cfg.paths.test_candidates);
    check_rows(test_cands->rows(), features.rows(), cfg.paths.test_candidates, "test candidate matrix");
    inputs.push_back(cfg.paths.test_candidates);
  }

  const auto preds = trainer::predict(net, features, adjustment);
  const auto block = eval::evaluate(preds, labels.labels, k, counts, test_cands ? &*test_cands : nullptr);

  std::string report;
  {
    std::istringstream lines(block.to_text());
    for (std::string line; std::getline(lines, line);) report += "test." + line + "\n";
  }
  // Covering rate / oracle accuracy of predictions on the training split.
  const fs::path train_f = fs::exists(out_file(cfg, kGenFeatures)) ? out_file(cfg, kGenFeatures) : cfg.paths.features;
  fs::path train_c;
  try {
    train_c = train_candidates_path(cfg);
  } catch (const ConfigError&) {
  }
  if (!train_f.empty() && !train_c.empty()) {
    const auto tfeat = io::read_matrix_file(train_f);
    const auto tc = io::read_candidates_file(train_c);
    check_rows(tc.rows(), tfeat.rows(), train_c, "candidate matrix");
    const auto tp = trainer::predict(net, tfeat, adjustment);
    const auto* tl = train_labels && train_labels->size() == tp.size() ? &*train_labels : nullptr;
    const auto co = eval::covering_oracle(tp, tc, tl);
    std::ostringstream s;
    s.precision(10);
    s << "train.covering_rate=" << co.covering_rate << "\n";
    s << "train.oracle_acc=";
    if (co.oracle_accuracy) {
      s << *co.oracle_accuracy;
    } else {
      s << "unavailable";
    }
    s << "\n";
    report += s.str();
    inputs.push_back(train_f);
    inputs.push_back(train_c);
  }

  const auto report_out = out_file(cfg, kReport);
  const auto csv_out = out_file(cfg, kPerClass);
  write_text(report, report_out);
  write_text(block.per_class_csv(), csv_out);
  log << report;
  append_manifest(cfg.paths.out_dir, {"eval", cfg.seed, inputs, {report_out, csv_out}, cfg.overrides});
}

void stage_pipeline(const ExperimentConfig& cfg, std::ostream& log) {
  ensure_out_dir(cfg);
  for (const char* name : {kGenFeatures, kGenLabels, kGenCandidates, kFiltered, kModel, kAdjustment, kTrainReport,
                           kReport, kPerClass, kManifestName}) {
    remove_if_present(out_file(cfg, name));
  }
  if (cfg.gen) stage_gen(cfg, log);
  if (cfg.filter) stage_filter(cfg, log);
  stage_train(cfg, log);
  if (!cfg.paths.test_features.empty() && !cfg.paths.test_labels.empty()) stage_eval(cfg, log);
}

}  // namespace pll::cli
