#include "cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>

#include "config.hpp"
#include "pll/error.hpp"
#include "pll/io.hpp"
#include "pll/parallel.hpp"
#include "pll/synthetic.hpp"
#include "stages.hpp"

namespace fs = std::filesystem;

namespace pll::cli {
namespace {

void apply_thread_env() {
  const char* env = std::getenv("PLL_THREADS");
  if (!env || !*env) return;
  std::size_t n = 0;
  const char* end = env + std::char_traits<char>::length(env);
  const auto [p, ec] = std::from_chars(env, end, n);
  if (ec != std::errc() || p != end) throw ConfigError("PLL_THREADS must be a non-negative integer");
  set_max_threads(n);
}

struct SynthArgs {
  fs::path out = "synthetic";
  std::size_t classes = 10;
  std::size_t dim = 64;
  std::size_t per_class = 500;
  std::size_t test_per_class = 200;
  double separation = 4.0;
  double text_angle = 1.0;
  std::uint64_t seed = 0;
};

void run_synth(const SynthArgs& a, std::ostream& log) {
  synthetic::BlobSpec spec;
  spec.num_classes = a.classes;
  spec.dim = a.dim;
  spec.per_class = a.per_class;
  spec.separation = a.separation;
  spec.seed = a.seed;
  const auto train = synthetic::make_blobs(spec, 1);
  auto test_spec = spec;
  test_spec.per_class = a.test_per_class;
  const auto test = synthetic::make_blobs(test_spec, 2);
  const auto text = synthetic::text_embeddings(train.class_means, a.text_angle, a.seed);

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw ConfigError("cannot create " + a.out.string() + ": " + ec.message());
  const auto k = static_cast<std::uint32_t>(a.classes);
  io::write_matrix_file(train.features, a.out / "train.pllf");
  io::write_labels_file(train.labels, k, a.out / "train.plly");
  io::write_matrix_file(test.features, a.out / "test.pllf");
  io::write_labels_file(test.labels, k, a.out / "test.plly");
  io::write_matrix_file(text, a.out / "text.pllf");
  log << "synth: wrote " << train.labels.size() << " train / " << test.labels.size() << " test rows to "
      << a.out.string() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Partial-label learning on frozen embeddings"};
  app.require_subcommand(1);

  fs::path config_path;
  Overrides ov;
  std::function<void(const ExperimentConfig&, std::ostream&)> stage;

  auto add_stage = [&](const char* name, const char* help, auto fn) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Experiment config file")->required();
    sub->add_option("--eta", ov.eta, "FPS flip probability (implies gen.strategy = fps)");
    sub->add_option("--gamma", ov.gamma, "Long-tail imbalance ratio");
    sub->add_option("--k", ov.k, "Zero-shot filter size");
    sub->add_option("--objective", ov.objective, "Objective, e.g. cc, lws, records+cc");
    sub->add_option("--seed", ov.seed, "Seed for every stage");
    sub->add_option("--epochs", ov.epochs, "Training epochs");
    sub->callback([&stage, fn] { stage = fn; });
  };
  add_stage("gen", "Generate candidate sets (and optionally a long-tailed subsample)", stage_gen);
  add_stage("filter", "Intersect candidate sets with zero-shot top-k", stage_filter);
  add_stage("train", "Train the cosine classifier", stage_train);
  add_stage("eval", "Evaluate the trained model", stage_eval);
  add_stage("pipeline", "Run every configured stage in order", stage_pipeline);

  SynthArgs synth;
  bool synth_selected = false;
  auto* sub = app.add_subcommand("synth", "Write a Gaussian-blob fixture (train/test/text files)");
  sub->add_option("--out", synth.out, "Output directory")->required();
  sub->add_option("--classes", synth.classes, "Number of classes");
  sub->add_option("--dim", synth.dim, "Feature dimension");
  sub->add_option("--per-class", synth.per_class, "Training rows per class");
  sub->add_option("--test-per-class", synth.test_per_class, "Test rows per class");
  sub->add_option("--separation", synth.separation, "Class-mean distance in noise units");
  sub->add_option("--text-angle", synth.text_angle, "Rotation of text embeddings away from class means (radians)");
  sub->add_option("--seed", synth.seed, "Seed");
  sub->callback([&] { synth_selected = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    apply_thread_env();
    if (synth_selected) {
      run_synth(synth, err);
      return kExitOk;
    }
    auto cfg = load_experiment(config_path);
    apply_overrides(cfg, ov);
    stage(cfg, err);
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    err << "shape error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace pll::cli
