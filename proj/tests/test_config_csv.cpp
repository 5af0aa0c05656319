#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "toporel/config.hpp"
#include "toporel/csv.hpp"
#include "toporel/fsutil.hpp"

using namespace toporel;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / name; }

void write(const fs::path& path, const std::string& contents) {
  std::ofstream out(path);
  out << contents;
}

}  // namespace

TEST_CASE("config parsing, comments and overrides") {
  const fs::path path = temp_file("toporel_cfg.txt");
  write(path, "# comment line\n"
              "seed = 42\n"
              "train.epochs = 7   # trailing comment\n"
              "\n"
              "topo.placement = combined\n");
  Config cfg = Config::load(path.string());
  CHECK(cfg.get_int64("seed") == 42);
  CHECK(cfg.get_int("train.epochs") == 7);
  CHECK(cfg.get_string("topo.placement") == "combined");
  // untouched keys keep their documented defaults
  CHECK(cfg.get_double("topo.lambda1") == doctest::Approx(0.002));
  CHECK(cfg.get_double("topo.lambda2") == doctest::Approx(0.018));
  CHECK(cfg.get_double("topo.beta") == doctest::Approx(3.0));
  CHECK(cfg.get_double("train.layerwise_decay") == doctest::Approx(0.65));
  CHECK(cfg.get_int("train.anchor_refresh_steps") == 100);

  cfg.apply_override("train.epochs=9");
  CHECK(cfg.get_int("train.epochs") == 9);
  CHECK_THROWS_AS(cfg.apply_override("no_equals_sign"), ConfigError);
  fs::remove(path);
}

TEST_CASE("unknown keys are a hard error") {
  const fs::path path = temp_file("toporel_cfg_bad.txt");
  write(path, "train.epoches = 7\n");  // typo
  CHECK_THROWS_AS(Config::load(path.string()), ConfigError);
  Config cfg;
  CHECK_THROWS_AS(cfg.apply_override("data.dimension=3"), ConfigError);
  CHECK_THROWS_AS(cfg.get_string("not.a.key"), ConfigError);
  fs::remove(path);
}

TEST_CASE("typed getters validate their values") {
  Config cfg;
  cfg.apply_override("train.epochs=abc");
  CHECK_THROWS_AS(cfg.get_int("train.epochs"), ConfigError);
  cfg.apply_override("topo.beta=not_a_number");
  CHECK_THROWS_AS(cfg.get_double("topo.beta"), ConfigError);
  cfg.apply_override("train.hidden=64,32");
  CHECK(cfg.get_int_list("train.hidden") == std::vector<int>{64, 32});
}

TEST_CASE("resolved text covers every key exactly once") {
  Config cfg;
  cfg.apply_override("seed=77");
  const std::string text = cfg.resolved_text();
  CHECK(text.find("seed = 77\n") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == Config::known_keys().size());
}

TEST_CASE("seventeen significant digits round-trip doubles exactly") {
  Rng rng(0xCAFE);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 13) - 6);
    const double back = std::stod(format_double(v));
    CHECK(back == v);
  }
}

TEST_CASE("latent batch CSV round trip") {
  Rng rng(0xBEEF);
  std::normal_distribution<double> normal(0.0, 3.0);
  Matrix batch(7, 4);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 4; ++c) batch(r, c) = normal(rng);
  }
  const fs::path path = temp_file("toporel_batch.csv");
  write_latent_batch_csv(path.string(), batch);
  const Matrix loaded = read_latent_batch_csv(path.string());
  CHECK((loaded.array() == batch.array()).all());  // bitwise via 17 digits

  // header is the documented `dim=<m>` form
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "dim=4");
  fs::remove(path);
}

TEST_CASE("anchor set CSV carries ids in order") {
  Rng rng(0xF00);
  std::normal_distribution<double> normal(0.0, 1.0);
  AnchorSet anchors;
  anchors.anchors = Matrix(3, 2);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) anchors.anchors(r, c) = normal(rng);
  }
  anchors.ids = {9, 4, 11};
  const fs::path path = temp_file("toporel_anchors.csv");
  write_anchor_set_csv(path.string(), anchors);
  const AnchorSet loaded = read_anchor_set_csv(path.string());
  CHECK(loaded.ids == anchors.ids);
  CHECK((loaded.anchors.array() == anchors.anchors.array()).all());
  fs::remove(path);
}

TEST_CASE("dataset CSV round trip and validation") {
  Dataset data;
  data.inputs = Matrix(3, 2);
  data.inputs << 0.5, -1.25, 3.75, 2.0, -0.125, 8.5;
  data.labels = {1, 0, 2};
  data.num_classes = 3;
  const fs::path path = temp_file("toporel_dataset.csv");
  write_dataset_csv(path.string(), data);
  const Dataset loaded = read_dataset_csv(path.string());
  CHECK(loaded.labels == data.labels);
  CHECK(loaded.num_classes == 3);
  CHECK((loaded.inputs.array() == data.inputs.array()).all());

  write(path, "label,x0\n0,nan\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), IoError);
  write(path, "label,x0\n0,1.0,9\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), IoError);
  write(path, "feature,x0\n0,1.0\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), IoError);
  fs::remove(path);
}

TEST_CASE("labels file accepts a header and plain integers") {
  const fs::path path = temp_file("toporel_labels.csv");
  write(path, "label\n0\n1\n1\n");
  CHECK(read_labels_file(path.string()) == std::vector<int>{0, 1, 1});
  write(path, "2\n0\n");
  CHECK(read_labels_file(path.string()) == std::vector<int>{2, 0});
  fs::remove(path);
}

TEST_CASE("atomic writes leave no temp file behind") {
  const fs::path path = temp_file("toporel_atomic.txt");
  atomic_write_file(path.string(), "payload");
  CHECK(read_file(path.string()) == "payload");
  CHECK(!fs::exists(path.string() + ".tmp"));
  atomic_write_file(path.string(), "replaced");
  CHECK(read_file(path.string()) == "replaced");
  fs::remove(path);
}
