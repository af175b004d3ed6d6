#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "config.hpp"
#include "helpers.hpp"
#include "manifest.hpp"
#include "pll/error.hpp"
#include "pll/io.hpp"
#include "stages.hpp"

using namespace pll;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = PLL_FIXTURE_DIR;

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Experiment config pointing at the bundled fixture, writing under `dir`.
fs::path write_config(const fs::path& dir, const std::string& extra = "", bool with_filter = true) {
  std::ostringstream s;
  s << "seed = 0\n[paths]\n"
    << "features = \"" << (kFixtures / "train.pllf").string() << "\"\n"
    << "labels = \"" << (kFixtures / "train.plly").string() << "\"\n"
    << "text_embeddings = \"" << (kFixtures / "text.pllf").string() << "\"\n"
    << "test_features = \"" << (kFixtures / "test.pllf").string() << "\"\n"
    << "test_labels = \"" << (kFixtures / "test.plly").string() << "\"\n"
    << "out_dir = \"out\"\n"
    << "[gen]\nstrategy = \"fps\"\neta = 0.5\n";
  if (with_filter) s << "[filter]\nk = 3\n";
  s << "[train]\nobjective = \"proden\"\nepochs = 3\nlr = 0.03\n" << extra;
  const auto path = dir / "exp.toml";
  std::ofstream(path) << s.str();
  return path;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pll");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string manifest_line(const fs::path& out_dir, const std::string& stage) {
  std::istringstream in(read_text(out_dir / cli::kManifestName));
  std::string line, last;
  while (std::getline(in, line)) {
    if (line.rfind("stage=" + stage + " ", 0) == 0) last = line;
  }
  return last;
}

}  // namespace

TEST_CASE("config parser") {
  const auto doc = cli::ConfigDocument::parse(
      "# comment\nseed = 4\n\n[train]\nlr = 0.5 # trailing\nname = \"a # b\\\"c\"\nuse_adapter = true\n",
      "t.toml");
  CHECK(doc.get_uint("", "seed") == 4u);
  CHECK(doc.get_double("train", "lr") == 0.5);
  CHECK(doc.get_string("train", "name") == "a # b\"c");
  CHECK(doc.get_bool("train", "use_adapter") == true);
  CHECK_FALSE(doc.get_double("train", "momentum"));
  CHECK(doc.has_section("train"));
  CHECK_FALSE(doc.has_section("gen"));

  auto message = [](auto&& fn) -> std::string {
    try {
      fn();
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message([] { cli::ConfigDocument::parse("[train]\nlr = fast\n").get_double("train", "lr"); })
            .find("train.lr") != std::string::npos);
  CHECK(message([] { cli::ConfigDocument::parse("a = 1\na = 2\n", "x.toml"); }).find("x.toml:2") != std::string::npos);
  CHECK_FALSE(message([] { cli::ConfigDocument::parse("[train\n"); }).empty());
  CHECK_FALSE(message([] { cli::ConfigDocument::parse("just words\n"); }).empty());
  CHECK_FALSE(message([] { cli::ConfigDocument::parse("s = \"open\n"); }).empty());
  CHECK_FALSE(message([] { cli::ConfigDocument::parse("n = -3\n").get_uint("", "n"); }).empty());

  const auto unknown = cli::ConfigDocument::parse("[train]\nlrr = 0.1\n");
  CHECK(message([&] { cli::experiment_from(unknown, "."); }).find("train.lrr") != std::string::npos);
}

TEST_CASE("objective specs") {
  cli::ObjectiveParams p;
  p.beta = 2.0;
  p.tau = 0.3;
  CHECK(std::get<obj::Lws>(cli::parse_objective("lws", p)).beta == 2.0);
  const auto rec = std::get<obj::Records>(cli::parse_objective("records+lws", p));
  CHECK(rec.tau == 0.3);
  CHECK(std::holds_alternative<obj::Lws>(rec.base));
  CHECK(std::holds_alternative<obj::Cc>(std::get<obj::Pop>(cli::parse_objective("pop", p)).base));
  CHECK(std::holds_alternative<obj::CrdFeat>(cli::parse_objective("crd", p)));
  CHECK_THROWS_AS(cli::parse_objective("records+records", p), ConfigError);
  CHECK_THROWS_AS(cli::parse_objective("svm", p), ConfigError);
}

TEST_CASE("experiment config and overrides") {
  const auto dir = testing::scratch_dir("cfg");
  const auto cfg_path = write_config(dir, "use_adapter = true\n[objective]\nbeta = 3\n");
  auto cfg = cli::load_experiment(cfg_path);
  CHECK(cfg.paths.out_dir == dir / "out");
  REQUIRE(cfg.gen);
  CHECK(std::get<genlab::Fps>(cfg.gen->strategy).eta == 0.5);
  REQUIRE(cfg.filter);
  CHECK(cfg.filter->k == 3);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.train.use_adapter);
  CHECK(std::holds_alternative<obj::Proden>(cfg.train.objective));

  cli::Overrides o;
  o.eta = 0.7;
  o.objective = "lws";
  o.seed = 9;
  o.epochs = 1;
  o.k = 2;
  cli::apply_overrides(cfg, o);
  CHECK(std::get<genlab::Fps>(cfg.gen->strategy).eta == 0.7);
  CHECK(std::get<obj::Lws>(cfg.train.objective).beta == 3.0);
  CHECK(cfg.seed == 9);
  CHECK(cfg.train.seed == 9);
  CHECK(cfg.train.epochs == 1);
  CHECK(cfg.filter->k == 2);
  CHECK(cfg.overrides.size() == 5);

  auto bare = cli::experiment_from(cli::ConfigDocument::parse("[paths]\nfeatures = \"f.pllf\"\n"), "/data");
  CHECK(bare.paths.features == fs::path("/data/f.pllf"));
  CHECK_FALSE(bare.gen);
  cli::Overrides g;
  g.gamma = 10.0;
  cli::apply_overrides(bare, g);
  CHECK(bare.gen);
  CHECK(bare.gamma == 10.0);
}

TEST_CASE("manifest lines") {
  const std::vector<std::uint8_t> empty;
  CHECK(cli::fnv1a64(empty) == 0xcbf29ce484222325ull);
  const std::vector<std::uint8_t> a{'a'};
  CHECK(cli::fnv1a64(a) == 0xaf63dc4c8601ec8cull);

  const auto dir = testing::scratch_dir("manifest");
  std::ofstream(dir / "x.bin") << "a";
  CHECK(cli::file_digest(dir / "x.bin") == "af63dc4c8601ec8c");

  cli::ManifestEntry e{"train", 3, {dir / "x.bin"}, {}, {{"--eta", "0.7"}}};
  CHECK(cli::format_entry(e) == "stage=train seed=3 inputs=x.bin:af63dc4c8601ec8c outputs=- overrides=--eta=0.7");
}

TEST_CASE("cli pipeline smoke run on the bundled fixture") {
  const auto dir = testing::scratch_dir("cli_pipeline");
  const auto cfg = write_config(dir);
  const auto r = run_cli({"pipeline", "--config", cfg.string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto out = dir / "out";
  CHECK(fs::exists(out / cli::kReport));
  CHECK(fs::exists(out / cli::kFiltered));
  CHECK(fs::exists(out / cli::kModel));
  const auto report = read_text(out / cli::kReport);
  CHECK(report.find("test.overall_acc=") != std::string::npos);
  for (const char* stage : {"gen", "filter", "train", "eval"}) CHECK_FALSE(manifest_line(out, stage).empty());
}

TEST_CASE("cli exit codes") {
  const auto dir = testing::scratch_dir("cli_errors");
  std::ofstream(dir / "bad.toml") << "[paths]\nfeatures = \"" << (dir / "nope.pllf").string()
                                  << "\"\nlabels = \"" << (kFixtures / "train.plly").string() << "\"\n";
  auto r = run_cli({"train", "--config", (dir / "bad.toml").string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find((dir / "nope.pllf").string()) != std::string::npos);

  r = run_cli({"train", "--config", (dir / "absent.toml").string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("absent.toml") != std::string::npos);

  std::ofstream(dir / "typo.toml") << "[train]\nepoch = 3\n";
  r = run_cli({"train", "--config", (dir / "typo.toml").string()});
  CHECK(r.code == cli::kExitConfig);
  CHECK(r.err.find("train.epoch") != std::string::npos);

  const auto good = write_config(dir);
  CHECK(run_cli({"train", "--config", good.string(), "--objective", "nonsense"}).code == cli::kExitConfig);
  CHECK(run_cli({"train", "--config", good.string(), "--eta", "1.5"}).code == cli::kExitConfig);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitConfig);
}

TEST_CASE("train with and without the filter stage") {
  const auto dir = testing::scratch_dir("cli_lws");
  const auto with = dir / "with";
  const auto without = dir / "without";
  fs::create_directories(with);
  fs::create_directories(without);
  const auto cfg_with = write_config(with, "", true);
  const auto cfg_without = write_config(without, "", false);

  for (const auto& [cfg, filtered] : {std::pair{cfg_with, true}, std::pair{cfg_without, false}}) {
    REQUIRE(run_cli({"gen", "--config", cfg.string(), "--eta", "0.7"}).code == 0);
    if (filtered) REQUIRE(run_cli({"filter", "--config", cfg.string()}).code == 0);
    const auto r = run_cli({"train", "--config", cfg.string(), "--objective", "lws", "--eta", "0.7"});
    INFO(r.err);
    REQUIRE(r.code == 0);
  }
  const auto a = manifest_line(with / "out", "train");
  const auto b = manifest_line(without / "out", "train");
  CHECK(a.find("filtered.pllc:") != std::string::npos);
  CHECK(b.find("candidates.pllc:") != std::string::npos);
  CHECK(a.find("overrides=--eta=0.7,--objective=lws") != std::string::npos);
  CHECK(a != b);
}

TEST_CASE("pipeline runs are byte-identical") {
  const auto dir = testing::scratch_dir("cli_determinism");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  const auto ca = write_config(dir / "a", "use_adapter = true\n");
  const auto cb = write_config(dir / "b", "use_adapter = true\n");
  REQUIRE(run_cli({"pipeline", "--config", ca.string()}).code == 0);
  REQUIRE(run_cli({"pipeline", "--config", cb.string()}).code == 0);
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a" / "out")) {
    const auto name = entry.path().filename();
    REQUIRE(fs::exists(dir / "b" / "out" / name));
    CHECK(read_text(entry.path()) == read_text(dir / "b" / "out" / name));
    ++compared;
  }
  CHECK(compared >= 6);
}

TEST_CASE("synth writes a loadable fixture") {
  const auto dir = testing::scratch_dir("cli_synth");
  const auto r = run_cli({"synth", "--out", dir.string(), "--classes", "3", "--dim", "8", "--per-class", "10"});
  REQUIRE(r.code == 0);
  CHECK(io::read_matrix_file(dir / "train.pllf").rows() == 30);
  CHECK(io::read_labels_file(dir / "test.plly").num_classes == 3);
  CHECK(io::read_matrix_file(dir / "text.pllf").rows() == 3);
}
