#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toporel/batching.hpp"
#include "toporel/geometry.hpp"
#include "toporel/mlp.hpp"
#include "toporel/topology.hpp"

namespace toporel {

enum class Mode { absolute, relative_vanilla, relative_robust };
enum class Placement { pre, post, combined, none };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& name);
const char* to_string(Placement p);
Placement placement_from_string(const std::string& name);

struct TrainConfig {
  double lr_encoder = 0.05;
  double lr_head = 0.1;
  double layerwise_decay = 0.65;  // in (0, 1]
  int epochs = 15;
  std::uint64_t seed = 1;
  int anchor_refresh_steps = 100;
  Mode mode = Mode::absolute;
};

struct TopoConfig {
  Placement placement = Placement::none;
  double lambda1 = 2e-3;   // pre-relative weight
  double lambda2 = 1.8e-2; // post-relative weight
  double beta = 3.0;
  int scheduler_period_steps = 0;  // 0: one epoch
};

// Triangular wave in [0, 1]: 0 at step 0, 1 at period/2, 0 again at period.
double cyclic_weight(std::int64_t step, std::int64_t period);

// A TopoBatch with inputs and labels materialized; the last sub-batch is the
// standard one.
struct TopoBatchData {
  std::vector<Matrix> inputs;
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<int>> sample_indices;

  int sub_batch_count() const { return static_cast<int>(inputs.size()); }
  int class_count() const { return sub_batch_count() - 1; }
};

TopoBatchData materialize(const Dataset& data, const TopoBatch& batch);

struct CompositeResult {
  double total = 0.0;
  double task = 0.0;
  double r_pre = 0.0;
  double r_post = 0.0;
  Gradients grads;
  BatchStats standard_stats;  // set in robust mode
  bool has_stats = false;
};

// Loss and exact gradients of
//   CE(head(T(phi(x))), y) + sched_weight * (lambda1 * R_pre + lambda2 * R_post)
// where T is identity / relative / robust per mode. R_pre acts on the class
// sub-batches of phi(x), R_post on the class sub-batches of T(phi(x)).
// Robust-mode statistics come from the standard sub-batch and gradients flow
// through them; anchors are constants. Class sub-batch rows that repeat a
// sample index are jittered by 1e-9 (deterministic from jitter_seed) in the
// copies fed to the topological losses.
CompositeResult composite_loss_and_grad(const MLPWeights& w, Mode mode, const AnchorSet& anchors,
                                        const TopoBatchData& batch, const TopoConfig& topo,
                                        double sched_weight, std::uint64_t jitter_seed);

struct TrainState {
  MLPWeights weights;
  Mode mode = Mode::absolute;
  AnchorSet anchors;
  Vector running_mean;
  Vector running_std;
  bool has_running = false;
  std::int64_t step = 0;

  BatchStats running_stats() const;
};

struct StepDiagnostics {
  double task_loss = 0.0;
  double r_pre = 0.0;
  double r_post = 0.0;
  double sched_weight = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

// One SGD step with layer-wise rates: encoder layer i uses
// lr_encoder * decay^(latent_layer - 1 - i), head layers use lr_head.
// Numerical failures in the topological terms skip the step with a
// diagnostic instead of aborting.
StepDiagnostics train_step(TrainState& state, const TopoBatchData& batch, const TrainConfig& tc,
                           const TopoConfig& topo, double sched_weight);

}  // namespace toporel
