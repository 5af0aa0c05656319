#include "toporel/stitching.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "toporel/csv.hpp"
#include "toporel/fsutil.hpp"
#include "toporel/topology.hpp"

namespace toporel {

const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::scaled_permutation: return "scaled_permutation";
    case DomainKind::orthogonal_mix: return "orthogonal_mix";
    case DomainKind::independent_noise: return "independent_noise";
  }
  return "?";
}

DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "scaled_permutation") return DomainKind::scaled_permutation;
  if (name == "orthogonal_mix") return DomainKind::orthogonal_mix;
  if (name == "independent_noise") return DomainKind::independent_noise;
  throw BadConfig("unknown domain kind '" + name + "'");
}

DomainGenerator random_domain_generator(DomainKind kind, int dim, std::uint64_t seed,
                                        double alpha, double noise_sigma) {
  DomainGenerator gen;
  gen.kind = kind;
  gen.alpha = alpha;
  gen.noise_sigma = noise_sigma;
  Rng rng(mix_seed(seed, 40));
  switch (kind) {
    case DomainKind::scaled_permutation:
      gen.sp = random_scaled_permutation(dim, rng, 0.25, 4.0, 1.0);
      break;
    case DomainKind::orthogonal_mix: {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::MatrixXd raw(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) raw(r, c) = normal(rng);
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
      gen.u = Matrix(Eigen::MatrixXd(qr.householderQ()));
      break;
    }
    case DomainKind::independent_noise:
      gen.noise_seed = mix_seed(seed, 41);
      break;
  }
  return gen;
}

Matrix apply_domain_generator(const DomainGenerator& gen, const Matrix& inputs,
                              std::uint64_t stream_tag) {
  switch (gen.kind) {
    case DomainKind::scaled_permutation:
      return apply_scaled_permutation(inputs, gen.sp);
    case DomainKind::orthogonal_mix: {
      if (gen.u.rows() != inputs.cols()) {
        throw DimensionMismatch("apply_domain_generator: U dim vs input dim");
      }
      return Matrix(gen.alpha * (inputs * gen.u.transpose()));
    }
    case DomainKind::independent_noise: {
      Rng rng(mix_seed(gen.noise_seed, stream_tag));
      std::normal_distribution<double> normal(0.0, 1.0);
      Matrix out = inputs;
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
          out(r, c) += gen.noise_sigma * normal(rng);
        }
      }
      return out;
    }
  }
  throw BadConfig("apply_domain_generator: bad kind");
}

namespace {

Dataset sample_gaussian_mixture(int n, int n_classes, int input_dim, double separation,
                                Rng& rng) {
  Dataset data;
  data.inputs = Matrix(n, input_dim);
  data.labels.resize(n);
  data.num_classes = n_classes;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const int label = i % n_classes;
    data.labels[i] = label;
    for (int c = 0; c < input_dim; ++c) data.inputs(i, c) = normal(rng);
    data.inputs(i, label) += separation;  // class means on a scaled simplex corner
  }
  return data;
}

}  // namespace

DomainPair generate_domain_pair(const DomainGenerator& gen, int n_samples, int n_test,
                                int n_classes, int input_dim, std::uint64_t seed,
                                double separation) {
  if (n_classes < 2) throw BadConfig("generate_domain_pair: need at least 2 classes");
  if (input_dim < 2) throw BadConfig("generate_domain_pair: need input_dim >= 2");
  if (n_classes > input_dim) {
    throw BadConfig("generate_domain_pair: class means live on simplex corners, so "
                    "n_classes must be <= input_dim");
  }
  if (n_samples < n_classes || n_test < n_classes) {
    throw BadConfig("generate_domain_pair: need at least one sample per class per split");
  }
  DomainPair pair;
  pair.generator = gen;
  Rng rng(mix_seed(seed, 3));
  pair.train_a = sample_gaussian_mixture(n_samples, n_classes, input_dim, separation, rng);
  pair.test_a = sample_gaussian_mixture(n_test, n_classes, input_dim, separation, rng);
  pair.train_b = pair.train_a;
  pair.train_b.inputs = apply_domain_generator(gen, pair.train_a.inputs, 0);
  pair.test_b = pair.test_a;
  pair.test_b.inputs = apply_domain_generator(gen, pair.test_a.inputs, 1);
  return pair;
}

DomainPair generate_domain_pair(DomainKind kind, int n_samples, int n_test, int n_classes,
                                int input_dim, std::uint64_t seed, double separation) {
  const DomainGenerator gen = random_domain_generator(kind, input_dim, mix_seed(seed, 17));
  return generate_domain_pair(gen, n_samples, n_test, n_classes, input_dim, seed, separation);
}

std::vector<int> select_anchor_indices(int dataset_size, int k, std::uint64_t seed) {
  if (k < 1) throw BadConfig("select_anchor_indices: k must be >= 1");
  if (k > dataset_size) {
    throw NotEnoughSamples("select_anchor_indices: k = " + std::to_string(k) + " > dataset size " +
                           std::to_string(dataset_size));
  }
  std::vector<int> pool(dataset_size);
  std::iota(pool.begin(), pool.end(), 0);
  Rng rng(seed);
  std::vector<int> chosen(k);
  for (int i = 0; i < k; ++i) {  // partial Fisher-Yates, keeps draw order
    std::uniform_int_distribution<int> pick(i, dataset_size - 1);
    std::swap(pool[i], pool[pick(rng)]);
    chosen[i] = pool[i];
  }
  return chosen;
}

AnchorSet encode_anchors(const MLPWeights& encoder, const Dataset& data,
                         const std::vector<int>& indices) {
  Matrix inputs(indices.size(), data.dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    inputs.row(i) = data.inputs.row(indices[i]);
  }
  AnchorSet anchors;
  anchors.anchors = encode(encoder, inputs);
  anchors.ids = indices;
  return anchors;
}

AnchorSet select_anchors(const MLPWeights& encoder, const Dataset& data, int k,
                         std::uint64_t seed) {
  return encode_anchors(encoder, data, select_anchor_indices(data.size(), k, seed));
}

Metrics compute_metrics(const std::vector<int>& preds, const std::vector<int>& truth,
                        int n_classes, bool macro_f1) {
  if (preds.size() != truth.size() || preds.empty()) {
    throw LengthMismatch("compute_metrics: prediction/truth length mismatch or empty");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= n_classes || truth[i] < 0 || truth[i] >= n_classes) {
      throw LabelOutOfRange("compute_metrics: label outside [0, n_classes)");
    }
  }
  const double n = static_cast<double>(preds.size());
  std::int64_t correct = 0;
  double abs_err = 0.0;
  std::vector<std::int64_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == truth[i]) {
      ++correct;
      ++tp[preds[i]];
    } else {
      ++fp[preds[i]];
      ++fn[truth[i]];
    }
    abs_err += std::abs(preds[i] - truth[i]);
  }
  Metrics m;
  m.acc = 100.0 * static_cast<double>(correct) / n;
  m.mae = 100.0 * abs_err / n;
  if (macro_f1) {
    double sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
      const double p = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fp[c]) : 0.0;
      const double r = tp[c] + fn[c] > 0 ? static_cast<double>(tp[c]) / (tp[c] + fn[c]) : 0.0;
      sum += p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;  // zero-division -> 0
    }
    m.f1 = 100.0 * sum / n_classes;
  } else {
    std::int64_t tp_all = 0, fp_all = 0, fn_all = 0;
    for (int c = 0; c < n_classes; ++c) {
      tp_all += tp[c];
      fp_all += fp[c];
      fn_all += fn[c];
    }
    const double p = tp_all + fp_all > 0 ? static_cast<double>(tp_all) / (tp_all + fp_all) : 0.0;
    const double r = tp_all + fn_all > 0 ? static_cast<double>(tp_all) / (tp_all + fn_all) : 0.0;
    m.f1 = p + r > 0.0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
  }
  return m;
}

BatchStats TrainedModel::running_stats() const {
  if (!has_running) throw Error("model has no running statistics");
  return BatchStats{running_mean, running_std};
}

TrainedModel train_domain_model(const Dataset& train, Mode mode, const TrainConfig& tc,
                                const TopoConfig& topo, const HarnessConfig& harness,
                                const std::vector<int>* shared_anchor_indices) {
  const ClassPartition partition = partition_by_class(train.labels);
  const int n_classes = partition.num_classes();
  const int k = harness.anchors();

  std::vector<int> encoder_sizes;
  encoder_sizes.push_back(train.dim());
  for (int h : harness.hidden) encoder_sizes.push_back(h);
  encoder_sizes.push_back(harness.latent_dim);
  const int head_in = mode == Mode::absolute ? harness.latent_dim : k;
  const std::vector<int> head_sizes = {head_in, n_classes};

  TrainedModel model;
  model.mode = mode;
  model.weights =
      init_mlp_split(encoder_sizes, head_sizes, harness.activation, mix_seed(tc.seed, 7));

  if (mode != Mode::absolute) {
    model.anchor_indices = shared_anchor_indices
                               ? *shared_anchor_indices
                               : select_anchor_indices(train.size(), k, mix_seed(tc.seed, 11));
    if (static_cast<int>(model.anchor_indices.size()) != k) {
      throw AnchorCountMismatch("train_domain_model: anchor index count does not match k");
    }
  }

  TopoBatchLoader loader(partition, train.size(), harness.sub_batch_n, mix_seed(tc.seed, 23));
  const std::int64_t steps_per_epoch = loader.batches_per_epoch();
  const std::int64_t period = topo.scheduler_period_steps > 0
                                  ? topo.scheduler_period_steps
                                  : std::max<std::int64_t>(2, steps_per_epoch);
  const std::int64_t total_steps = static_cast<std::int64_t>(tc.epochs) * steps_per_epoch;

  TrainState state;
  state.weights = model.weights;
  state.mode = mode;

  int consecutive_skips = 0;
  for (std::int64_t step = 0; step < total_steps; ++step) {
    int refreshed = 0;
    if (mode != Mode::absolute &&
        (step == 0 || (tc.anchor_refresh_steps > 0 && step % tc.anchor_refresh_steps == 0))) {
      state.anchors = encode_anchors(state.weights, train, model.anchor_indices);
      refreshed = 1;
    }
    const TopoBatchData batch = materialize(train, loader.next());
    const double sched =
        topo.placement == Placement::none ? 0.0 : cyclic_weight(step, period);
    const StepDiagnostics diag = train_step(state, batch, tc, topo, sched);
    model.log.push_back({step, diag.task_loss, diag.r_pre, diag.r_post, diag.sched_weight,
                         refreshed, diag.skipped ? 1 : 0});
    if (diag.skipped) {
      if (++consecutive_skips >= 25) {
        throw NumericalFailure("train_domain_model: " + std::to_string(consecutive_skips) +
                               " consecutive skipped steps; last: " + diag.skip_reason);
      }
    } else {
      consecutive_skips = 0;
    }
  }

  model.weights = state.weights;
  model.anchors = state.anchors;
  model.running_mean = state.running_mean;
  model.running_std = state.running_std;
  model.has_running = state.has_running;
  return model;
}

Matrix stitched_logits(const TrainedModel& enc_model, const TrainedModel& head_model,
                       const Matrix& inputs, EvalStats eval_stats) {
  if (enc_model.mode != head_model.mode) {
    throw ModeMismatch("stitched_logits: encoder mode " + std::string(to_string(enc_model.mode)) +
                       " vs head mode " + to_string(head_model.mode));
  }
  const Matrix z = encode(enc_model.weights, inputs);
  Matrix r;
  switch (enc_model.mode) {
    case Mode::absolute:
      r = z;
      break;
    case Mode::relative_vanilla:
    case Mode::relative_robust: {
      if (enc_model.anchors.count() != head_model.anchors.count()) {
        throw AnchorCountMismatch("stitched_logits: encoder has " +
                                  std::to_string(enc_model.anchors.count()) + " anchors, head " +
                                  std::to_string(head_model.anchors.count()));
      }
      if (enc_model.mode == Mode::relative_vanilla) {
        r = relative_transform(z, enc_model.anchors);
      } else {
        const BatchStats stats =
            eval_stats == EvalStats::running ? enc_model.running_stats() : batch_stats(z);
        r = robust_relative_transform(z, enc_model.anchors, stats);
      }
      break;
    }
  }
  return head(head_model.weights, r);
}

std::vector<int> stitched_predict(const TrainedModel& enc_model, const TrainedModel& head_model,
                                  const Matrix& inputs, EvalStats eval_stats) {
  const Matrix logits = stitched_logits(enc_model, head_model, inputs, eval_stats);
  std::vector<int> preds(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best;
    logits.row(i).maxCoeff(&best);
    preds[i] = static_cast<int>(best);
  }
  return preds;
}

Metrics stitch_evaluate(const TrainedModel& enc_model, const TrainedModel& head_model,
                        const Dataset& eval_set, EvalStats eval_stats, bool macro_f1) {
  const std::vector<int> preds =
      stitched_predict(enc_model, head_model, eval_set.inputs, eval_stats);
  return compute_metrics(preds, eval_set.labels, eval_set.num_classes, macro_f1);
}

DeathSummary death_time_summary(const TrainedModel& model, const Dataset& eval_set,
                                EvalStats eval_stats) {
  const Matrix z = encode(model.weights, eval_set.inputs);
  Matrix r;
  switch (model.mode) {
    case Mode::absolute: r = z; break;
    case Mode::relative_vanilla: r = relative_transform(z, model.anchors); break;
    case Mode::relative_robust: {
      const BatchStats stats =
          eval_stats == EvalStats::running ? model.running_stats() : batch_stats(z);
      r = robust_relative_transform(z, model.anchors, stats);
      break;
    }
  }
  const ClassPartition partition = partition_by_class(eval_set.labels);
  DeathSummary summary;
  for (const auto& members : partition.by_class) {
    Matrix pre(members.size(), z.cols());
    Matrix post(members.size(), r.cols());
    for (std::size_t i = 0; i < members.size(); ++i) {
      pre.row(i) = z.row(members[i]);
      post.row(i) = r.row(members[i]);
    }
    summary.pre_by_class.push_back(death_times(pre).deaths);
    summary.post_by_class.push_back(death_times(post).deaths);
  }
  return summary;
}

namespace {

struct RunningCell {
  std::vector<double> acc, f1, mae;
};

CellStats summarize(const RunningCell& cell) {
  auto mean_std = [](const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= n;  // population std: exactly 0 for a single run
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  CellStats s;
  std::tie(s.acc_mean, s.acc_std) = mean_std(cell.acc);
  std::tie(s.f1_mean, s.f1_std) = mean_std(cell.f1);
  std::tie(s.mae_mean, s.mae_std) = mean_std(cell.mae);
  return s;
}

std::string train_log_to_csv(const std::vector<TrainLogRow>& log) {
  std::string out = "step,task_loss,r_pre,r_post,sched_weight,anchor_refresh,skipped\n";
  for (const auto& row : log) {
    out += std::to_string(row.step) + ',' + format_double(row.task_loss) + ',' +
           format_double(row.r_pre) + ',' + format_double(row.r_post) + ',' +
           format_double(row.sched_weight) + ',' + std::to_string(row.anchor_refresh) + ',' +
           std::to_string(row.skipped) + '\n';
  }
  return out;
}

void append_histogram_rows(std::string& out, const std::string& mode, char domain,
                           const std::vector<std::vector<double>>& deaths_by_class) {
  for (std::size_t cls = 0; cls < deaths_by_class.size(); ++cls) {
    const Histogram h = histogram(deaths_by_class[cls], 16);
    for (std::size_t b = 0; b < h.count.size(); ++b) {
      out += mode + ',' + domain + ',' + std::to_string(cls) + ',' +
             format_double(h.bin_left[b]) + ',' + format_double(h.bin_right[b]) + ',' +
             std::to_string(h.count[b]) + '\n';
    }
  }
}

}  // namespace

std::string report_to_csv(const StitchReport& report) {
  std::string out =
      "mode,gamma_domain,phi_domain,acc_mean,acc_std,f1_mean,f1_std,mae_mean,mae_std\n";
  for (const auto& row : report.rows) {
    out += std::string(to_string(row.mode)) + ',' + row.gamma_domain + ',' + row.phi_domain;
    for (double v : {row.stats.acc_mean, row.stats.acc_std, row.stats.f1_mean, row.stats.f1_std,
                     row.stats.mae_mean, row.stats.mae_std}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

StitchReport run_experiment(const ExperimentConfig& config) {
  if (config.runs < 1) throw BadConfig("run_experiment: runs must be >= 1");
  namespace fs = std::filesystem;
  const bool write_artifacts = !config.out_dir.empty();
  if (write_artifacts) fs::create_directories(config.out_dir);

  const int k = config.harness.anchors();
  std::map<std::pair<int, std::pair<char, char>>, RunningCell> cells;
  std::string deaths_pre = "mode,domain,class,bin_left,bin_right,count\n";
  std::string deaths_post = deaths_pre;

  for (int run = 0; run < config.runs; ++run) {
    const DomainGenerator gen =
        random_domain_generator(config.kind, config.input_dim, mix_seed(config.seed, 700 + run),
                                config.alpha, config.noise_sigma);
    const DomainPair pair =
        generate_domain_pair(gen, config.n_samples, config.n_test, config.n_classes,
                             config.input_dim, mix_seed(config.seed, 300 + run),
                             config.separation);
    const std::vector<int> anchor_indices =
        select_anchor_indices(config.n_samples, k, mix_seed(config.seed, 501 + run));

    for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
      const Mode mode = config.modes[mi];
      TrainConfig tc = config.train;
      tc.mode = mode;

      tc.seed = mix_seed(config.seed, 10000 * (mi + 1) + 2 * run);
      const TrainedModel model_a =
          train_domain_model(pair.train_a, mode, tc, config.topo, config.harness,
                             mode == Mode::absolute ? nullptr : &anchor_indices);
      tc.seed = mix_seed(config.seed, 10000 * (mi + 1) + 2 * run + 1);
      const TrainedModel model_b =
          train_domain_model(pair.train_b, mode, tc, config.topo, config.harness,
                             mode == Mode::absolute ? nullptr : &anchor_indices);

      for (char gamma : {'a', 'b'}) {
        for (char phi : {'a', 'b'}) {
          const TrainedModel& enc = phi == 'a' ? model_a : model_b;
          const TrainedModel& head_m = gamma == 'a' ? model_a : model_b;
          const Dataset& eval_set = phi == 'a' ? pair.test_a : pair.test_b;
          const Metrics m =
              stitch_evaluate(enc, head_m, eval_set, config.eval_stats, config.macro_f1);
          auto& cell = cells[{static_cast<int>(mi), {gamma, phi}}];
          cell.acc.push_back(m.acc);
          cell.f1.push_back(m.f1);
          cell.mae.push_back(m.mae);
        }
      }

      if (write_artifacts) {
        const std::string tag_a =
            std::string(to_string(mode)) + "_a_" + std::to_string(run);
        const std::string tag_b =
            std::string(to_string(mode)) + "_b_" + std::to_string(run);
        atomic_write_file(config.out_dir + "/train_log_" + tag_a + ".csv",
                          train_log_to_csv(model_a.log));
        atomic_write_file(config.out_dir + "/train_log_" + tag_b + ".csv",
                          train_log_to_csv(model_b.log));
        save_trained_model(config.out_dir, "model_" + tag_a, model_a);
        save_trained_model(config.out_dir, "model_" + tag_b, model_b);
        if (run == 0) {
          const DeathSummary sa = death_time_summary(model_a, pair.test_a, config.eval_stats);
          const DeathSummary sb = death_time_summary(model_b, pair.test_b, config.eval_stats);
          append_histogram_rows(deaths_pre, to_string(mode), 'a', sa.pre_by_class);
          append_histogram_rows(deaths_pre, to_string(mode), 'b', sb.pre_by_class);
          append_histogram_rows(deaths_post, to_string(mode), 'a', sa.post_by_class);
          append_histogram_rows(deaths_post, to_string(mode), 'b', sb.post_by_class);
        }
      }
    }
  }

  StitchReport report;
  for (std::size_t mi = 0; mi < config.modes.size(); ++mi) {
    for (char gamma : {'a', 'b'}) {
      for (char phi : {'a', 'b'}) {
        ReportRow row;
        row.mode = config.modes[mi];
        row.gamma_domain = gamma;
        row.phi_domain = phi;
        row.stats = summarize(cells.at({static_cast<int>(mi), {gamma, phi}}));
        report.rows.push_back(row);
      }
    }
  }

  if (write_artifacts) {
    atomic_write_file(config.out_dir + "/report.csv", report_to_csv(report));
    atomic_write_file(config.out_dir + "/deaths_pre.csv", deaths_pre);
    atomic_write_file(config.out_dir + "/deaths_post.csv", deaths_post);
  }
  return report;
}

namespace {

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(read_file(path));
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::string join_doubles(const Vector& xs) {
  std::string out;
  for (Eigen::Index i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

Vector split_doubles(const std::string& s) {
  std::vector<double> vals;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) vals.push_back(std::stod(tok));
  }
  Vector out(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i];
  return out;
}

}  // namespace

void save_trained_model(const std::string& dir, const std::string& stem,
                        const TrainedModel& model) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string base = dir + "/" + stem;
  if (model.has_running) {
    save_mlp_weights(base + ".mlpw", model.weights, &model.running_mean, &model.running_std);
  } else {
    save_mlp_weights(base + ".mlpw", model.weights);
  }
  std::string meta = "mode = " + std::string(to_string(model.mode)) + "\n";
  if (!model.anchor_indices.empty()) {
    meta += "anchor_indices = " + join_ints(model.anchor_indices) + "\n";
  }
  atomic_write_file(base + ".meta.txt", meta);
  if (model.mode != Mode::absolute) {
    write_anchor_set_csv(base + ".anchors.csv", model.anchors);
  }
}

TrainedModel load_trained_model(const std::string& dir, const std::string& stem) {
  const std::string base = dir + "/" + stem;
  TrainedModel model;
  model.weights = load_mlp_weights(base + ".mlpw", &model.running_mean, &model.running_std,
                                   &model.has_running);
  const auto meta = parse_kv_file(base + ".meta.txt");
  const auto mode_it = meta.find("mode");
  if (mode_it == meta.end()) throw IoError("'" + base + ".meta.txt': missing mode");
  model.mode = mode_from_string(mode_it->second);
  if (const auto it = meta.find("anchor_indices"); it != meta.end()) {
    model.anchor_indices = split_ints(it->second);
  }
  if (model.mode != Mode::absolute) {
    model.anchors = read_anchor_set_csv(base + ".anchors.csv");
  }
  return model;
}

void save_domain_pair(const std::string& dir, const DomainPair& pair) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_dataset_csv(dir + "/domain_a_train.csv", pair.train_a);
  write_dataset_csv(dir + "/domain_b_train.csv", pair.train_b);
  write_dataset_csv(dir + "/domain_a_test.csv", pair.test_a);
  write_dataset_csv(dir + "/domain_b_test.csv", pair.test_b);

  const DomainGenerator& gen = pair.generator;
  std::string manifest = "kind = " + std::string(to_string(gen.kind)) + "\n";
  manifest += "dim = " + std::to_string(pair.train_a.dim()) + "\n";
  switch (gen.kind) {
    case DomainKind::scaled_permutation:
      manifest += "perm = " + join_ints(gen.sp.perm) + "\n";
      manifest += "scale = " + join_doubles(gen.sp.scale) + "\n";
      manifest += "shift = " + join_doubles(gen.sp.shift) + "\n";
      break;
    case DomainKind::orthogonal_mix: {
      manifest += "alpha = " + format_double(gen.alpha) + "\n";
      std::string u = "u = ";
      for (Eigen::Index r = 0; r < gen.u.rows(); ++r) {
        for (Eigen::Index c = 0; c < gen.u.cols(); ++c) {
          if (r || c) u += ',';
          u += format_double(gen.u(r, c));
        }
      }
      manifest += u + "\n";
      break;
    }
    case DomainKind::independent_noise:
      manifest += "noise_sigma = " + format_double(gen.noise_sigma) + "\n";
      manifest += "noise_seed = " + std::to_string(gen.noise_seed) + "\n";
      break;
  }
  atomic_write_file(dir + "/manifest.txt", manifest);
}

Matrix replay_domain_b(const std::string& manifest_path, const Matrix& domain_a_inputs,
                       std::uint64_t stream_tag) {
  const auto kv = parse_kv_file(manifest_path);
  const auto kind_it = kv.find("kind");
  if (kind_it == kv.end()) throw IoError("'" + manifest_path + "': missing kind");
  DomainGenerator gen;
  gen.kind = domain_kind_from_string(kind_it->second);
  const int dim = std::stoi(kv.at("dim"));
  switch (gen.kind) {
    case DomainKind::scaled_permutation:
      gen.sp.perm = split_ints(kv.at("perm"));
      gen.sp.scale = split_doubles(kv.at("scale"));
      gen.sp.shift = split_doubles(kv.at("shift"));
      break;
    case DomainKind::orthogonal_mix: {
      gen.alpha = std::stod(kv.at("alpha"));
      const Vector flat = split_doubles(kv.at("u"));
      if (flat.size() != static_cast<Eigen::Index>(dim) * dim) {
        throw IoError("'" + manifest_path + "': u has wrong size");
      }
      gen.u = Matrix(dim, dim);
      for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) gen.u(r, c) = flat[r * dim + c];
      }
      break;
    }
    case DomainKind::independent_noise:
      gen.noise_sigma = std::stod(kv.at("noise_sigma"));
      gen.noise_seed = std::stoull(kv.at("noise_seed"));
      break;
  }
  return apply_domain_generator(gen, domain_a_inputs, stream_tag);
}

}  // namespace toporel
