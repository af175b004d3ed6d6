#include "config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pll/error.hpp"

namespace pll::cli {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_str = !in_str;
    } else if (c == '#' && !in_str) {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.origin_ = origin;
  doc.sections_[""];
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!bare_key(section)) fail("bad section name '" + section + "'");
      if (doc.sections_.count(section) && !doc.sections_[section].empty()) fail("duplicate section [" + section + "]");
      doc.sections_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!bare_key(key)) fail("bad key '" + key + "'");
    if (value.empty()) fail("missing value for '" + key + "'");
    Entry e;
    e.line = lineno;
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') fail("unterminated string for '" + key + "'");
      std::string out;
      for (std::size_t i = 1; i + 1 < value.size(); ++i) {
        char c = value[i];
        if (c == '\\') {
          if (i + 2 >= value.size()) fail("dangling escape in '" + key + "'");
          c = value[++i];
          switch (c) {
            case '"': case '\\': out.push_back(c); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            default: fail(std::string("unsupported escape \\") + c + " in '" + key + "'");
          }
        } else if (c == '"') {
          fail("unescaped quote in '" + key + "'");
        } else {
          out.push_back(c);
        }
      }
      e.text = std::move(out);
      e.quoted = true;
    } else {
      e.text = value;
    }
    auto& sec = doc.sections_[section];
    if (sec.count(key)) fail("duplicate key '" + (section.empty() ? key : section + "." + key) + "'");
    sec.emplace(key, std::move(e));
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool ConfigDocument::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigDocument::Entry* ConfigDocument::find(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  used_.emplace(section, key);
  return &k->second;
}

std::string ConfigDocument::where(const std::string& section, const std::string& key) const {
  const std::string name = section.empty() ? key : section + "." + key;
  const auto* e = find(section, key);
  return origin_ + ":" + std::to_string(e ? e->line : 0) + ": " + name;
}

std::optional<std::string> ConfigDocument::get_string(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  if (!e->quoted) throw ConfigError(where(section, key) + " must be a quoted string");
  return e->text;
}

std::optional<double> ConfigDocument::get_double(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  double v = 0.0;
  const char* b = e->text.data();
  const char* end = b + e->text.size();
  if (!e->quoted && !e->text.empty() && e->text.front() == '+') ++b;
  const auto [p, ec] = std::from_chars(b, end, v);
  if (e->quoted || ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ConfigError(where(section, key) + " must be a number (got '" + e->text + "')");
  }
  return v;
}

std::optional<std::uint64_t> ConfigDocument::get_uint(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  std::uint64_t v = 0;
  const char* end = e->text.data() + e->text.size();
  const auto [p, ec] = std::from_chars(e->text.data(), end, v);
  if (e->quoted || ec != std::errc() || p != end) {
    throw ConfigError(where(section, key) + " must be a non-negative integer (got '" + e->text + "')");
  }
  return v;
}

std::optional<bool> ConfigDocument::get_bool(const std::string& section, const std::string& key) const {
  const auto* e = find(section, key);
  if (!e) return std::nullopt;
  if (!e->quoted && e->text == "true") return true;
  if (!e->quoted && e->text == "false") return false;
  throw ConfigError(where(section, key) + " must be true or false (got '" + e->text + "')");
}

std::vector<std::string> ConfigDocument::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [sec, keys] : sections_) {
    for (const auto& [key, entry] : keys) {
      if (!used_.count({sec, key})) out.push_back(sec.empty() ? key : sec + "." + key);
    }
  }
  return out;
}

namespace {

obj::BaseObjective parse_base(const std::string& name, const ObjectiveParams& p) {
  if (name == "cc") return obj::Cc{};
  if (name == "proden") return obj::Proden{};
  if (name == "lws") return obj::Lws{p.beta};
  if (name == "cavl") return obj::Cavl{};
  if (name == "abs_mae") return obj::AbsMae{};
  if (name == "abs_gce") return obj::AbsGce{p.q};
  if (name == "crd") return obj::CrdFeat{p.lambda, p.noise_sigma};
  if (name == "solar") return obj::Solar{p.sinkhorn_eps, p.sinkhorn_iters, p.dist_momentum};
  throw ConfigError("unknown objective '" + name +
                    "' (expected cc, proden, lws, cavl, abs_mae, abs_gce, crd, solar, records or pop)");
}

}  // namespace

obj::ObjectiveKind parse_objective(const std::string& spec, const ObjectiveParams& p) {
  const auto plus = spec.find('+');
  const std::string head = spec.substr(0, plus);
  const std::string tail = plus == std::string::npos ? "cc" : spec.substr(plus + 1);
  if (head == "records" || head == "pop") {
    const auto base = parse_base(tail, p);
    if (head == "records") return obj::Records{base, p.records_momentum, p.tau};
    return obj::Pop{base, p.purge_rate};
  }
  if (plus != std::string::npos) throw ConfigError("objective '" + head + "' does not wrap a base objective");
  return std::visit([](const auto& b) -> obj::ObjectiveKind { return b; }, parse_base(head, p));
}

ExperimentConfig experiment_from(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.seed = doc.get_uint("", "seed").value_or(0);

  auto path_of = [&](const char* key, std::filesystem::path& dst) {
    if (const auto s = doc.get_string("paths", key)) {
      const std::filesystem::path p(*s);
      dst = p.is_absolute() ? p : base_dir / p;
    }
  };
  cfg.paths.out_dir = base_dir / "out";
  path_of("out_dir", cfg.paths.out_dir);
  path_of("features", cfg.paths.features);
  path_of("labels", cfg.paths.labels);
  path_of("candidates", cfg.paths.candidates);
  path_of("text_embeddings", cfg.paths.text_embeddings);
  path_of("confidences", cfg.paths.confidences);
  path_of("test_features", cfg.paths.test_features);
  path_of("test_labels", cfg.paths.test_labels);
  path_of("test_candidates", cfg.paths.test_candidates);

  if (doc.has_section("gen")) {
    genlab::GenSpec g;
    g.seed = doc.get_uint("gen", "seed").value_or(cfg.seed);
    const std::string strategy = doc.get_string("gen", "strategy").value_or("fps");
    if (strategy == "uss") {
      g.strategy = genlab::Uss{};
    } else if (strategy == "fps") {
      g.strategy = genlab::Fps{doc.get_double("gen", "eta").value_or(0.3)};
    } else if (strategy == "instance") {
      genlab::InstanceDependent id;
      id.top_fraction = doc.get_double("gen", "top_fraction").value_or(id.top_fraction);
      id.aux_epochs = doc.get_uint("gen", "aux_epochs").value_or(id.aux_epochs);
      g.strategy = id;
    } else {
      throw ConfigError("gen.strategy must be uss, fps or instance (got '" + strategy + "')");
    }
    if (strategy != "fps" && doc.has("gen", "eta")) throw ConfigError("gen.eta only applies to strategy = \"fps\"");
    cfg.gen = g;
    cfg.gamma = doc.get_double("gen", "gamma");
  }

  if (doc.has_section("filter")) {
    FilterSection f;
    f.k = doc.get_uint("filter", "k").value_or(0);
    f.temperature = doc.get_double("filter", "temperature").value_or(f.temperature);
    if (!(f.temperature > 0.0)) throw ConfigError("filter.temperature must be positive");
    cfg.filter = f;
  }

  auto& t = cfg.train;
  t.seed = doc.get_uint("train", "seed").value_or(cfg.seed);
  t.lr = doc.get_double("train", "lr").value_or(t.lr);
  t.momentum = doc.get_double("train", "momentum").value_or(t.momentum);
  t.weight_decay = doc.get_double("train", "weight_decay").value_or(t.weight_decay);
  t.batch_size = doc.get_uint("train", "batch_size").value_or(t.batch_size);
  t.epochs = doc.get_uint("train", "epochs").value_or(t.epochs);
  t.use_adapter = doc.get_bool("train", "use_adapter").value_or(t.use_adapter);
  t.adapter_scale = doc.get_double("train", "adapter_scale").value_or(t.adapter_scale);
  t.adapter_bottleneck = doc.get_uint("train", "adapter_bottleneck").value_or(t.adapter_bottleneck);
  t.sigma = doc.get_double("train", "sigma").value_or(t.sigma);
  t.protect_init = doc.get_bool("train", "protect_init").value_or(t.protect_init);
  cfg.objective = doc.get_string("train", "objective").value_or(cfg.objective);

  auto& p = cfg.objective_params;
  p.beta = doc.get_double("objective", "beta").value_or(p.beta);
  p.q = doc.get_double("objective", "q").value_or(p.q);
  p.lambda = doc.get_double("objective", "lambda").value_or(p.lambda);
  p.noise_sigma = doc.get_double("objective", "noise_sigma").value_or(p.noise_sigma);
  p.records_momentum = doc.get_double("objective", "records_momentum").value_or(p.records_momentum);
  p.tau = doc.get_double("objective", "tau").value_or(p.tau);
  p.sinkhorn_eps = doc.get_double("objective", "sinkhorn_eps").value_or(p.sinkhorn_eps);
  p.sinkhorn_iters = doc.get_uint("objective", "sinkhorn_iters").value_or(p.sinkhorn_iters);
  p.dist_momentum = doc.get_double("objective", "dist_momentum").value_or(p.dist_momentum);
  p.purge_rate = doc.get_double("objective", "purge_rate").value_or(p.purge_rate);

  const auto unused = doc.unused_keys();
  if (!unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");

  t.objective = parse_objective(cfg.objective, p);
  t.validate();
  if (cfg.gen) cfg.gen->validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& config_path) {
  const auto doc = ConfigDocument::load(config_path);
  return experiment_from(doc, config_path.parent_path());
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
    if (cfg.gen) cfg.gen->seed = *o.seed;
    cfg.overrides.emplace_back("--seed", std::to_string(*o.seed));
  }
  if (o.eta) {
    if (!cfg.gen) cfg.gen = genlab::GenSpec{genlab::Fps{}, cfg.seed};
    if (!std::holds_alternative<genlab::Fps>(cfg.gen->strategy)) {
      throw ConfigError("--eta requires gen.strategy = \"fps\"");
    }
    cfg.gen->strategy = genlab::Fps{*o.eta};
    cfg.gen->validate();
    cfg.overrides.emplace_back("--eta", fmt(*o.eta));
  }
  if (o.gamma) {
    if (!cfg.gen) cfg.gen = genlab::GenSpec{genlab::Fps{}, cfg.seed};
    if (!(*o.gamma >= 1.0)) throw ConfigError("--gamma must be >= 1");
    cfg.gamma = *o.gamma;
    cfg.overrides.emplace_back("--gamma", fmt(*o.gamma));
  }
  if (o.k) {
    if (!cfg.filter) cfg.filter = FilterSection{};
    if (*o.k == 0) throw ConfigError("--k must be >= 1");
    cfg.filter->k = *o.k;
    cfg.overrides.emplace_back("--k", std::to_string(*o.k));
  }
  if (o.objective) {
    cfg.objective = *o.objective;
    cfg.train.objective = parse_objective(cfg.objective, cfg.objective_params);
    cfg.overrides.emplace_back("--objective", *o.objective);
  }
  if (o.epochs) {
    cfg.train.epochs = *o.epochs;
    cfg.overrides.emplace_back("--epochs", std::to_string(*o.epochs));
  }
  cfg.train.validate();
}

}  // namespace pll::cli
