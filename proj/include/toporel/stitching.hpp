#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toporel/batching.hpp"
#include "toporel/train.hpp"

namespace toporel {

enum class DomainKind { scaled_permutation, orthogonal_mix, independent_noise };

const char* to_string(DomainKind k);
DomainKind domain_kind_from_string(const std::string& name);

// The hidden input-space transformation relating the paired domains.
struct DomainGenerator {
  DomainKind kind = DomainKind::scaled_permutation;
  std::uint64_t noise_seed = 0;
  ScaledPermutation sp;     // scaled_permutation
  Matrix u;                 // orthogonal_mix
  double alpha = 1.0;       // orthogonal_mix
  double noise_sigma = 0.1; // independent_noise
};

DomainGenerator random_domain_generator(DomainKind kind, int dim, std::uint64_t seed,
                                        double alpha = 1.0, double noise_sigma = 0.1);
// stream_tag keeps independent-noise draws reproducible per split (0 = train,
// 1 = test) so a recorded generator replays exactly.
Matrix apply_domain_generator(const DomainGenerator& gen, const Matrix& inputs,
                              std::uint64_t stream_tag);

// Paired datasets with aligned indices: sample i of B is the generator image
// of sample i of A, labels shared.
struct DomainPair {
  Dataset train_a, train_b, test_a, test_b;
  DomainGenerator generator;
};

DomainPair generate_domain_pair(const DomainGenerator& gen, int n_samples, int n_test,
                                int n_classes, int input_dim, std::uint64_t seed,
                                double separation = 4.0);
DomainPair generate_domain_pair(DomainKind kind, int n_samples, int n_test, int n_classes,
                                int input_dim, std::uint64_t seed, double separation = 4.0);

std::vector<int> select_anchor_indices(int dataset_size, int k, std::uint64_t seed);
AnchorSet encode_anchors(const MLPWeights& encoder, const Dataset& data,
                         const std::vector<int>& indices);
AnchorSet select_anchors(const MLPWeights& encoder, const Dataset& data, int k,
                         std::uint64_t seed);

struct Metrics {
  double acc = 0.0;  // x100
  double f1 = 0.0;   // x100
  double mae = 0.0;  // x100
};

Metrics compute_metrics(const std::vector<int>& preds, const std::vector<int>& truth,
                        int n_classes, bool macro_f1 = true);

struct HarnessConfig {
  std::vector<int> hidden = {64};
  int latent_dim = 16;
  int anchor_count = 0;  // 0: use latent_dim
  Activation activation = Activation::gelu;
  int sub_batch_n = 16;

  int anchors(int ignored_dataset_size = 0) const {
    (void)ignored_dataset_size;
    return anchor_count > 0 ? anchor_count : latent_dim;
  }
};

struct TrainLogRow {
  std::int64_t step = 0;
  double task_loss = 0.0;
  double r_pre = 0.0;
  double r_post = 0.0;
  double sched_weight = 0.0;
  int anchor_refresh = 0;
  int skipped = 0;
};

struct TrainedModel {
  MLPWeights weights;
  Mode mode = Mode::absolute;
  AnchorSet anchors;
  Vector running_mean;
  Vector running_std;
  bool has_running = false;
  std::vector<int> anchor_indices;
  std::vector<TrainLogRow> log;

  BatchStats running_stats() const;
};

// Anchors refresh (re-encode of the same indices) every
// tc.anchor_refresh_steps steps. Cross-domain runs pass the shared index set
// so paired anchors correspond positionally; otherwise indices are drawn from
// the training seed.
TrainedModel train_domain_model(const Dataset& train, Mode mode, const TrainConfig& tc,
                                const TopoConfig& topo, const HarnessConfig& harness,
                                const std::vector<int>* shared_anchor_indices = nullptr);

enum class EvalStats { running, evalset };

// Logits of head_model applied to the transformed encodings of enc_model;
// the transform uses enc_model's anchors (and running statistics in robust
// mode unless EvalStats::evalset asks for full-eval-set statistics).
Matrix stitched_logits(const TrainedModel& enc_model, const TrainedModel& head_model,
                       const Matrix& inputs, EvalStats eval_stats = EvalStats::running);
std::vector<int> stitched_predict(const TrainedModel& enc_model, const TrainedModel& head_model,
                                  const Matrix& inputs, EvalStats eval_stats = EvalStats::running);
Metrics stitch_evaluate(const TrainedModel& enc_model, const TrainedModel& head_model,
                        const Dataset& eval_set, EvalStats eval_stats = EvalStats::running,
                        bool macro_f1 = true);

// Per-class death times of the eval-set encodings, before and after the
// relative transformation.
struct DeathSummary {
  std::vector<std::vector<double>> pre_by_class;
  std::vector<std::vector<double>> post_by_class;
};
DeathSummary death_time_summary(const TrainedModel& model, const Dataset& eval_set,
                                EvalStats eval_stats = EvalStats::running);

struct CellStats {
  double acc_mean = 0, acc_std = 0;
  double f1_mean = 0, f1_std = 0;
  double mae_mean = 0, mae_std = 0;
};

struct ReportRow {
  Mode mode;
  char gamma_domain;  // 'a' or 'b'
  char phi_domain;
  CellStats stats;
};

struct StitchReport {
  std::vector<ReportRow> rows;
};

struct ExperimentConfig {
  DomainKind kind = DomainKind::scaled_permutation;
  int n_classes = 2;
  int n_samples = 2000;
  int n_test = 500;
  int input_dim = 32;
  double separation = 4.0;
  double alpha = 1.0;
  double noise_sigma = 0.1;
  std::uint64_t seed = 1;
  int runs = 5;
  std::vector<Mode> modes = {Mode::absolute, Mode::relative_vanilla, Mode::relative_robust};
  TrainConfig train;
  TopoConfig topo;
  HarnessConfig harness;
  EvalStats eval_stats = EvalStats::running;
  bool macro_f1 = true;
  std::string out_dir;  // empty: compute the report only, write nothing
};

// Trains both domain models per mode over `runs` seeded repetitions, fills
// the 2x2 gamma/phi grid with mean and (population) std, and, when out_dir is
// set, writes report.csv, death-time histograms, per-run train logs and
// serialized models. Grids are all-or-nothing per mode.
StitchReport run_experiment(const ExperimentConfig& config);

std::string report_to_csv(const StitchReport& report);

void save_trained_model(const std::string& dir, const std::string& stem,
                        const TrainedModel& model);
TrainedModel load_trained_model(const std::string& dir, const std::string& stem);

void save_domain_pair(const std::string& dir, const DomainPair& pair);
// Re-applies the generator recorded in dir/manifest.txt to domain A inputs.
Matrix replay_domain_b(const std::string& manifest_path, const Matrix& domain_a_inputs,
                       std::uint64_t stream_tag);

}  // namespace toporel
