#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "toporel/batching.hpp"
#include "toporel/config.hpp"
#include "toporel/csv.hpp"
#include "toporel/fsutil.hpp"
#include "toporel/stitching.hpp"
#include "toporel/topology.hpp"
#include "toporel/train.hpp"
#include "toporel/verify.hpp"

namespace {

using namespace toporel;

std::string config_key_footer() {
  std::string out = "Recognized config keys (flat `key = value` file, `#` comments):\n";
  for (const auto& spec : Config::known_keys()) {
    out += "  " + std::string(spec.key) + " = " + spec.default_value + "\n      " + spec.doc +
           "\n";
  }
  return out;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config cfg;
  if (!path.empty()) cfg.apply_file(path);
  for (const auto& assignment : overrides) cfg.apply_override(assignment);
  return cfg;
}

// Library-side enum parsers throw BadConfig; at the CLI boundary a bad value
// in the config file is a configuration error (exit code 2).
template <typename Fn>
auto as_config_error(Fn&& fn) {
  try {
    return fn();
  } catch (const BadConfig& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig make_train_config(const Config& cfg) {
  TrainConfig tc;
  tc.lr_encoder = cfg.get_double("train.lr_encoder");
  tc.lr_head = cfg.get_double("train.lr_head");
  tc.layerwise_decay = cfg.get_double("train.layerwise_decay");
  tc.epochs = cfg.get_int("train.epochs");
  tc.seed = static_cast<std::uint64_t>(cfg.get_int64("seed"));
  tc.anchor_refresh_steps = cfg.get_int("train.anchor_refresh_steps");
  tc.mode = as_config_error([&] { return mode_from_string(cfg.get_string("train.mode")); });
  if (tc.lr_encoder <= 0 || tc.lr_head <= 0) throw ConfigError("learning rates must be > 0");
  if (tc.layerwise_decay <= 0 || tc.layerwise_decay > 1) {
    throw ConfigError("train.layerwise_decay must be in (0, 1]");
  }
  if (tc.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  return tc;
}

TopoConfig make_topo_config(const Config& cfg) {
  TopoConfig topo;
  topo.placement =
      as_config_error([&] { return placement_from_string(cfg.get_string("topo.placement")); });
  topo.lambda1 = cfg.get_double("topo.lambda1");
  topo.lambda2 = cfg.get_double("topo.lambda2");
  topo.beta = cfg.get_double("topo.beta");
  topo.scheduler_period_steps = cfg.get_int("topo.scheduler_period_steps");
  if (topo.lambda1 < 0 || topo.lambda2 < 0) throw ConfigError("topo weights must be >= 0");
  if (topo.beta <= 0) throw ConfigError("topo.beta must be > 0");
  return topo;
}

HarnessConfig make_harness_config(const Config& cfg) {
  HarnessConfig h;
  h.hidden = cfg.get_int_list("train.hidden");
  h.latent_dim = cfg.get_int("train.latent_dim");
  h.anchor_count = cfg.get_int("train.anchor_count");
  h.activation =
      as_config_error([&] { return activation_from_string(cfg.get_string("train.activation")); });
  h.sub_batch_n = cfg.get_int("train.sub_batch_n");
  if (h.latent_dim < 1) throw ConfigError("train.latent_dim must be >= 1");
  if (h.sub_batch_n < 2) throw ConfigError("train.sub_batch_n must be >= 2");
  return h;
}

ExperimentConfig make_experiment_config(const Config& cfg) {
  ExperimentConfig e;
  e.kind = as_config_error([&] { return domain_kind_from_string(cfg.get_string("data.kind")); });
  e.n_classes = cfg.get_int("data.classes");
  e.n_samples = cfg.get_int("data.samples");
  e.n_test = cfg.get_int("data.test_samples");
  e.input_dim = cfg.get_int("data.dim");
  e.separation = cfg.get_double("data.separation");
  e.alpha = cfg.get_double("data.alpha");
  e.noise_sigma = cfg.get_double("data.noise_sigma");
  e.seed = static_cast<std::uint64_t>(cfg.get_int64("seed"));
  e.runs = cfg.get_int("stitch.runs");
  e.modes.clear();
  for (const auto& name : cfg.get_string_list("stitch.modes")) {
    e.modes.push_back(as_config_error([&] { return mode_from_string(name); }));
  }
  if (e.modes.empty()) throw ConfigError("stitch.modes must name at least one mode");
  e.train = make_train_config(cfg);
  e.topo = make_topo_config(cfg);
  e.harness = make_harness_config(cfg);
  const std::string f1 = cfg.get_string("stitch.f1");
  if (f1 != "macro" && f1 != "micro") throw ConfigError("stitch.f1 must be macro or micro");
  e.macro_f1 = f1 == "macro";
  const std::string stats = cfg.get_string("stitch.eval_stats");
  if (stats != "running" && stats != "evalset") {
    throw ConfigError("stitch.eval_stats must be running or evalset");
  }
  e.eval_stats = stats == "running" ? EvalStats::running : EvalStats::evalset;
  return e;
}

Dataset load_train_split(const Config& cfg, char domain) {
  const std::string dir = cfg.get_string("data.dir");
  if (!dir.empty()) {
    return read_dataset_csv(dir + "/domain_" + domain + "_train.csv");
  }
  const ExperimentConfig e = make_experiment_config(cfg);
  const DomainGenerator gen = random_domain_generator(
      e.kind, e.input_dim, mix_seed(e.seed, 700), e.alpha, e.noise_sigma);
  const DomainPair pair = generate_domain_pair(gen, e.n_samples, e.n_test, e.n_classes,
                                               e.input_dim, mix_seed(e.seed, 300), e.separation);
  return domain == 'a' ? pair.train_a : pair.train_b;
}

int cmd_gen_data(const std::string& kind_name, int classes, int samples, int test_samples,
                 int dim, std::uint64_t seed, double separation, double alpha,
                 double noise_sigma, const std::string& out) {
  const DomainKind kind = as_config_error([&] { return domain_kind_from_string(kind_name); });
  const DomainGenerator gen =
      random_domain_generator(kind, dim, mix_seed(seed, 700), alpha, noise_sigma);
  const DomainPair pair =
      generate_domain_pair(gen, samples, test_samples, classes, dim, mix_seed(seed, 300),
                           separation);
  save_domain_pair(out, pair);
  std::cout << "wrote paired domains (" << samples << " train + " << test_samples
            << " test rows each) and manifest to " << out << "\n";
  return 0;
}

int cmd_train(const Config& cfg, const std::string& out) {
  const std::string domain_key = cfg.get_string("train.domain");
  if (domain_key != "a" && domain_key != "b") throw ConfigError("train.domain must be a or b");
  const Dataset train = load_train_split(cfg, domain_key[0]);
  const TrainConfig tc = make_train_config(cfg);
  const TopoConfig topo = make_topo_config(cfg);
  const HarnessConfig harness = make_harness_config(cfg);

  const TrainedModel model = train_domain_model(train, tc.mode, tc, topo, harness);
  save_trained_model(out, "model", model);
  std::string log = "step,task_loss,r_pre,r_post,sched_weight,anchor_refresh,skipped\n";
  for (const auto& row : model.log) {
    log += std::to_string(row.step) + ',' + format_double(row.task_loss) + ',' +
           format_double(row.r_pre) + ',' + format_double(row.r_post) + ',' +
           format_double(row.sched_weight) + ',' + std::to_string(row.anchor_refresh) + ',' +
           std::to_string(row.skipped) + '\n';
  }
  atomic_write_file(out + "/train_log.csv", log);
  atomic_write_file(out + "/resolved_config.txt", cfg.resolved_text());
  std::cout << "trained " << to_string(tc.mode) << " model on domain " << domain_key << " ("
            << model.log.size() << " steps) -> " << out << "\n";
  return 0;
}

int cmd_stitch(const Config& cfg, const std::string& out) {
  const std::string enc_dir = cfg.get_string("stitch.encoder_dir");
  const std::string head_dir = cfg.get_string("stitch.head_dir");
  const std::string eval_csv = cfg.get_string("stitch.eval_csv");
  if (enc_dir.empty() || head_dir.empty() || eval_csv.empty()) {
    throw ConfigError("stitch needs stitch.encoder_dir, stitch.head_dir and stitch.eval_csv");
  }
  const TrainedModel enc = load_trained_model(enc_dir, cfg.get_string("stitch.encoder_stem"));
  const TrainedModel head_model =
      load_trained_model(head_dir, cfg.get_string("stitch.head_stem"));
  const Dataset eval_set = read_dataset_csv(eval_csv);
  const std::string stats = cfg.get_string("stitch.eval_stats");
  const EvalStats eval_stats = stats == "evalset" ? EvalStats::evalset : EvalStats::running;
  const bool macro = cfg.get_string("stitch.f1") != "micro";

  const Metrics m = stitch_evaluate(enc, head_model, eval_set, eval_stats, macro);
  std::printf("acc %.2f  f1 %.2f  mae %.2f\n", m.acc, m.f1, m.mae);
  if (!out.empty()) {
    atomic_write_file(out + "/metrics.csv", "acc,f1,mae\n" + format_double(m.acc) + ',' +
                                                format_double(m.f1) + ',' +
                                                format_double(m.mae) + '\n');
    atomic_write_file(out + "/resolved_config.txt", cfg.resolved_text());
  }
  return 0;
}

int cmd_experiment(const Config& cfg, const std::string& out) {
  ExperimentConfig e = make_experiment_config(cfg);
  e.out_dir = out;
  const StitchReport report = run_experiment(e);
  if (!out.empty()) {
    atomic_write_file(out + "/resolved_config.txt", cfg.resolved_text());
  }
  std::printf("%-18s %-5s %-5s %8s %8s %8s\n", "mode", "gamma", "phi", "acc", "f1", "mae");
  for (const auto& row : report.rows) {
    std::printf("%-18s %-5c %-5c %8.2f %8.2f %8.2f\n", to_string(row.mode), row.gamma_domain,
                row.phi_domain, row.stats.acc_mean, row.stats.f1_mean, row.stats.mae_mean);
  }
  return 0;
}

int cmd_analyze_topology(const std::string& embeddings_path, const std::string& labels_path,
                         double beta, int bins, const std::string& out) {
  const Matrix embeddings = read_latent_batch_csv(embeddings_path);
  const std::vector<int> labels = read_labels_file(labels_path);
  if (static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
    throw LengthMismatch("analyze-topology: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(embeddings.rows()) + " embedding rows");
  }
  const ClassPartition partition = partition_by_class(labels);

  std::string hist_csv = "class,bin_left,bin_right,count\n";
  std::string summary_csv = "class,deaths,mean,std,min,max,loss\n";
  for (int c = 0; c < partition.num_classes(); ++c) {
    const auto& members = partition.by_class[c];
    Matrix pts(members.size(), embeddings.cols());
    for (std::size_t i = 0; i < members.size(); ++i) pts.row(i) = embeddings.row(members[i]);
    const std::vector<double> deaths = death_times(pts).deaths;
    const Histogram h = histogram(deaths, bins);
    for (std::size_t b = 0; b < h.count.size(); ++b) {
      hist_csv += std::to_string(c) + ',' + format_double(h.bin_left[b]) + ',' +
                  format_double(h.bin_right[b]) + ',' + std::to_string(h.count[b]) + '\n';
    }
    double mean = 0, loss = 0;
    for (double d : deaths) {
      mean += d;
      loss += std::abs(d - beta);
    }
    mean /= static_cast<double>(deaths.size());
    double var = 0;
    for (double d : deaths) var += (d - mean) * (d - mean);
    var /= static_cast<double>(deaths.size());
    summary_csv += std::to_string(c) + ',' + std::to_string(deaths.size()) + ',' +
                   format_double(mean) + ',' + format_double(std::sqrt(var)) + ',' +
                   format_double(deaths.front()) + ',' + format_double(deaths.back()) + ',' +
                   format_double(loss) + '\n';
    std::printf("class %d: %zu deaths, mean %.6g, std %.6g, min %.6g, max %.6g, loss %.6g\n", c,
                deaths.size(), mean, std::sqrt(var), deaths.front(), deaths.back(), loss);
  }
  atomic_write_file(out + "/histogram.csv", hist_csv);
  atomic_write_file(out + "/summary.csv", summary_csv);
  return 0;
}

int cmd_verify(const std::string& suite) {
  std::vector<verify::CheckResult> results;
  if (suite == "invariance") {
    results = verify::invariance_suite();
  } else if (suite == "gradients") {
    results = verify::gradient_suite();
  } else if (suite == "oracle") {
    results = verify::oracle_suite();
  } else if (suite == "intertwiner") {
    results = verify::intertwiner_suite();
  } else if (suite == "all") {
    results = verify::all_suites();
  } else {
    throw ConfigError("unknown suite '" + suite +
                      "' (expected invariance, gradients, oracle, intertwiner or all)");
  }
  int failures = 0;
  for (const auto& r : results) {
    if (!r.pass) ++failures;
    std::printf("%s  %-32s observed %.3e (threshold %.3e)  %s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.observed, r.threshold, r.note.c_str());
  }
  std::printf("%d/%zu checks passed\n", static_cast<int>(results.size()) - failures,
              results.size());
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust relative representations with topological densification"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen-data", "Generate a paired synthetic domain dataset");
  std::string gen_kind = "scaled_permutation", gen_out;
  int gen_classes = 2, gen_samples = 2000, gen_test = 500, gen_dim = 32;
  std::uint64_t gen_seed = 1;
  double gen_sep = 4.0, gen_alpha = 1.0, gen_noise = 0.1;
  gen->add_option("--kind", gen_kind, "scaled_permutation | orthogonal_mix | independent_noise")
      ->capture_default_str();
  gen->add_option("--classes", gen_classes, "number of classes")->capture_default_str();
  gen->add_option("--samples", gen_samples, "training samples per domain")
      ->capture_default_str();
  gen->add_option("--test-samples", gen_test, "test samples per domain")->capture_default_str();
  gen->add_option("--dim", gen_dim, "input dimensionality")->capture_default_str();
  gen->add_option("--seed", gen_seed, "generation seed")->capture_default_str();
  gen->add_option("--separation", gen_sep, "class mean separation")->capture_default_str();
  gen->add_option("--alpha", gen_alpha, "orthogonal_mix isotropic factor")
      ->capture_default_str();
  gen->add_option("--noise-sigma", gen_noise, "independent_noise level")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();

  std::string cfg_path, out_dir;
  std::vector<std::string> overrides;
  auto add_config_options = [&](CLI::App* cmd, bool out_required) {
    cmd->add_option("--config", cfg_path, "flat key=value config file");
    cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
    auto* o = cmd->add_option("--out", out_dir, "output directory");
    if (out_required) o->required();
    cmd->footer(config_key_footer());
  };
  auto* train_cmd = app.add_subcommand("train", "Train one domain model");
  add_config_options(train_cmd, true);
  auto* stitch_cmd =
      app.add_subcommand("stitch", "Zero-shot stitch two trained models and evaluate");
  add_config_options(stitch_cmd, false);
  auto* exp_cmd =
      app.add_subcommand("experiment", "Full stitching grid over modes and seeded runs");
  add_config_options(exp_cmd, true);

  auto* topo_cmd = app.add_subcommand("analyze-topology",
                                      "Death-time histograms and densification loss per class");
  std::string topo_embeddings, topo_labels, topo_out;
  double topo_beta = 3.0;
  int topo_bins = 16;
  topo_cmd->add_option("--embeddings", topo_embeddings, "latent batch CSV (dim=<m> header)")
      ->required();
  topo_cmd->add_option("--labels", topo_labels, "label file, one integer per row")->required();
  topo_cmd->add_option("--beta", topo_beta, "densification target")->capture_default_str();
  topo_cmd->add_option("--bins", topo_bins, "histogram bins")->capture_default_str();
  topo_cmd->add_option("--out", topo_out, "output directory")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Run the property suites");
  std::string suite = "all";
  verify_cmd->add_option("--suite", suite, "invariance | gradients | oracle | intertwiner | all")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return cmd_gen_data(gen_kind, gen_classes, gen_samples, gen_test, gen_dim, gen_seed,
                          gen_sep, gen_alpha, gen_noise, gen_out);
    }
    if (train_cmd->parsed()) return cmd_train(load_config(cfg_path, overrides), out_dir);
    if (stitch_cmd->parsed()) return cmd_stitch(load_config(cfg_path, overrides), out_dir);
    if (exp_cmd->parsed()) return cmd_experiment(load_config(cfg_path, overrides), out_dir);
    if (topo_cmd->parsed()) {
      return cmd_analyze_topology(topo_embeddings, topo_labels, topo_beta, topo_bins, topo_out);
    }
    if (verify_cmd->parsed()) return cmd_verify(suite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
