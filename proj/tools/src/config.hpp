#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pll/genlab.hpp"
#include "pll/objectives.hpp"
#include "pll/trainer.hpp"

namespace pll::cli {

// Sectioned key = value text, a subset of TOML: [section] headers, bare keys,
// double-quoted strings, numbers, true/false, and '#' comments. Keys before
// the first header live in section "".
class ConfigDocument {
public:
  static ConfigDocument parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  // Typed getters; all throw ConfigError naming "section.key" on a type mismatch.
  std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
  std::optional<double> get_double(const std::string& section, const std::string& key) const;
  std::optional<std::uint64_t> get_uint(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;

  // Keys never read through a getter, as "section.key".
  std::vector<std::string> unused_keys() const;

private:
  struct Entry {
    std::string text;
    bool quoted = false;
    int line = 0;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  std::string where(const std::string& section, const std::string& key) const;

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  mutable std::set<std::pair<std::string, std::string>> used_;
};

struct Paths {
  std::filesystem::path out_dir = "out";
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path candidates;
  std::filesystem::path text_embeddings;
  std::filesystem::path confidences;
  std::filesystem::path test_features;
  std::filesystem::path test_labels;
  std::filesystem::path test_candidates;
};

struct FilterSection {
  std::size_t k = 0;  // 0 selects K/2 once K is known
  double temperature = 0.01;
};

// Parameters for every objective kind; only those of the selected kind apply.
struct ObjectiveParams {
  double beta = 1.0;
  double q = 0.7;
  double lambda = 1.0;
  double noise_sigma = 0.1;
  double records_momentum = 0.9;
  double tau = 0.05;
  double sinkhorn_eps = 0.05;
  std::size_t sinkhorn_iters = 100;
  double dist_momentum = 0.9;
  double purge_rate = 0.02;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  Paths paths;
  std::optional<genlab::GenSpec> gen;
  std::optional<double> gamma;  // long-tail imbalance ratio
  std::optional<FilterSection> filter;
  std::string objective = "cc";
  ObjectiveParams objective_params;
  trainer::TrainConfig train;  // train.objective is built from the two fields above
  // Applied flag overrides in a fixed flag order, e.g. {"--eta", "0.7"}.
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Parses "cc", "abs_gce", "records+lws", ...; wrappers default to a cc base.
obj::ObjectiveKind parse_objective(const std::string& spec, const ObjectiveParams& params = {});

// Relative paths are resolved against the directory holding the config file.
ExperimentConfig load_experiment(const std::filesystem::path& config_path);
ExperimentConfig experiment_from(const ConfigDocument& doc, const std::filesystem::path& base_dir);

struct Overrides {
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<std::size_t> k;
  std::optional<std::string> objective;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

}  // namespace pll::cli
