#include "toporel/train.hpp"

#include <cmath>
#include <random>
#include <unordered_map>

namespace toporel {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::absolute: return "absolute";
    case Mode::relative_vanilla: return "relative_vanilla";
    case Mode::relative_robust: return "relative_robust";
  }
  return "?";
}

Mode mode_from_string(const std::string& name) {
  if (name == "absolute") return Mode::absolute;
  if (name == "relative_vanilla") return Mode::relative_vanilla;
  if (name == "relative_robust") return Mode::relative_robust;
  throw BadConfig("unknown mode '" + name + "'");
}

const char* to_string(Placement p) {
  switch (p) {
    case Placement::pre: return "pre";
    case Placement::post: return "post";
    case Placement::combined: return "combined";
    case Placement::none: return "none";
  }
  return "?";
}

Placement placement_from_string(const std::string& name) {
  if (name == "pre") return Placement::pre;
  if (name == "post") return Placement::post;
  if (name == "combined") return Placement::combined;
  if (name == "none") return Placement::none;
  throw BadConfig("unknown placement '" + name + "'");
}

double cyclic_weight(std::int64_t step, std::int64_t period) {
  if (period < 2) throw BadPeriod("cyclic_weight: period must be >= 2");
  const std::int64_t t = ((step % period) + period) % period;
  const double x = static_cast<double>(t) / static_cast<double>(period);
  return 1.0 - std::abs(2.0 * x - 1.0);
}

TopoBatchData materialize(const Dataset& data, const TopoBatch& batch) {
  TopoBatchData out;
  for (const auto& indices : batch.sub_batches) {
    Matrix inputs(indices.size(), data.dim());
    std::vector<int> labels(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      inputs.row(r) = data.inputs.row(indices[r]);
      labels[r] = data.labels[indices[r]];
    }
    out.inputs.push_back(std::move(inputs));
    out.labels.push_back(std::move(labels));
    out.sample_indices.push_back(indices);
  }
  return out;
}

namespace {

constexpr double kJitterScale = 1e-9;

// Rows whose sample index already occurred in the same sub-batch get a tiny
// deterministic offset in the copies handed to the topological losses, so
// with-replacement duplicates do not produce zero-length MST edges.
Matrix jittered_rows(const Matrix& all, int begin, int count, const std::vector<int>& indices,
                     std::uint64_t stream_seed) {
  Matrix block = all.middleRows(begin, count);
  std::unordered_map<int, int> seen;
  for (int r = 0; r < count; ++r) {
    const int occurrence = seen[indices[r]]++;
    if (occurrence == 0) continue;
    Rng rng(mix_seed(stream_seed, static_cast<std::uint64_t>(r)));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      block(r, c) += kJitterScale * unit(rng);
    }
  }
  return block;
}

// Backward of row-wise cosine similarities against fixed rows `ref`.
// values(i, j) = cos(rows_i, ref_j). Returns dL/drows given upstream = dL/dvalues.
Matrix cosine_rows_backward(const Matrix& rows, const Matrix& ref, const Matrix& values,
                            const Matrix& upstream) {
  const Eigen::Index n = rows.rows();
  Vector row_norms(n);
  for (Eigen::Index i = 0; i < n; ++i) row_norms[i] = rows.row(i).norm();
  Matrix row_units(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) row_units.row(i) = rows.row(i) / row_norms[i];
  Matrix ref_units(ref.rows(), ref.cols());
  for (Eigen::Index j = 0; j < ref.rows(); ++j) {
    ref_units.row(j) = ref.row(j) / ref.row(j).norm();
  }
  const Matrix ga = upstream * ref_units;            // n x m
  const Vector s = (upstream.cwiseProduct(values)).rowwise().sum();
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = (ga.row(i) - s[i] * row_units.row(i)) / row_norms[i];
  }
  return out;
}

// Backward of the reference side: dL/dref.
Matrix cosine_ref_backward(const Matrix& rows, const Matrix& ref, const Matrix& values,
                           const Matrix& upstream) {
  const Eigen::Index k = ref.rows();
  Vector ref_norms(k);
  for (Eigen::Index j = 0; j < k; ++j) ref_norms[j] = ref.row(j).norm();
  Matrix ref_units(ref.rows(), ref.cols());
  for (Eigen::Index j = 0; j < k; ++j) ref_units.row(j) = ref.row(j) / ref_norms[j];
  Matrix row_units(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    row_units.row(i) = rows.row(i) / rows.row(i).norm();
  }
  const Matrix gz = upstream.transpose() * row_units;  // k x m
  const Vector s = (upstream.cwiseProduct(values)).colwise().sum().transpose();
  Matrix out(ref.rows(), ref.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    out.row(j) = (gz.row(j) - s[j] * ref_units.row(j)) / ref_norms[j];
  }
  return out;
}

}  // namespace

BatchStats TrainState::running_stats() const {
  if (!has_running) throw Error("running statistics not initialized");
  return BatchStats{running_mean, running_std};
}

CompositeResult composite_loss_and_grad(const MLPWeights& w, Mode mode, const AnchorSet& anchors,
                                        const TopoBatchData& batch, const TopoConfig& topo,
                                        double sched_weight, std::uint64_t jitter_seed) {
  const int sub_count = batch.sub_batch_count();
  if (sub_count < 2) {
    throw BadConfig("composite loss: need at least one class sub-batch plus the standard one");
  }
  const int num_classes = batch.class_count();

  // Concatenate sub-batches; record row ranges. Standard sub-batch is last.
  std::vector<std::pair<int, int>> ranges(sub_count);  // (begin, count)
  int total_rows = 0;
  for (int s = 0; s < sub_count; ++s) {
    ranges[s] = {total_rows, static_cast<int>(batch.inputs[s].rows())};
    total_rows += ranges[s].second;
  }
  Matrix x(total_rows, batch.inputs[0].cols());
  std::vector<int> labels;
  labels.reserve(total_rows);
  for (int s = 0; s < sub_count; ++s) {
    x.middleRows(ranges[s].first, ranges[s].second) = batch.inputs[s];
    labels.insert(labels.end(), batch.labels[s].begin(), batch.labels[s].end());
  }

  ForwardCache encoder_cache;
  const Matrix z = encode(w, x, &encoder_cache);

  CompositeResult result;

  // Normalization statistics from the standard sub-batch (robust mode).
  const auto [std_begin, std_count] = ranges.back();
  Matrix z_hat, a_hat;
  if (mode == Mode::relative_robust) {
    result.standard_stats = batch_stats(z.middleRows(std_begin, std_count));
    result.has_stats = true;
    z_hat = gaussian_normalize(z, result.standard_stats);
    a_hat = gaussian_normalize(static_cast<const LatentBatch&>(anchors.anchors),
                               result.standard_stats);
  }

  Matrix r;
  switch (mode) {
    case Mode::absolute: r = z; break;
    case Mode::relative_vanilla: r = relative_transform(z, anchors); break;
    case Mode::relative_robust: r = robust_relative_transform(z, anchors, result.standard_stats); break;
  }

  ForwardCache head_cache;
  const Matrix logits = head(w, r, &head_cache);
  auto [task_loss, dlogits] = softmax_cross_entropy(logits, labels);
  result.task = task_loss;

  const bool pre_active = (topo.placement == Placement::pre ||
                           topo.placement == Placement::combined) &&
                          topo.lambda1 > 0.0;
  const bool post_active = (topo.placement == Placement::post ||
                            topo.placement == Placement::combined) &&
                           topo.lambda2 > 0.0;

  std::vector<LatentBatch> pre_points, post_points;
  std::vector<Matrix> pre_grads, post_grads;
  if (pre_active) {
    for (int c = 0; c < num_classes; ++c) {
      pre_points.push_back(jittered_rows(z, ranges[c].first, ranges[c].second,
                                         batch.sample_indices[c],
                                         mix_seed(jitter_seed, 2 * c)));
    }
    result.r_pre = densification_loss(pre_points, topo.beta);
    pre_grads = densification_loss_gradient(pre_points, topo.beta);
  }
  if (post_active) {
    for (int c = 0; c < num_classes; ++c) {
      post_points.push_back(jittered_rows(r, ranges[c].first, ranges[c].second,
                                          batch.sample_indices[c],
                                          mix_seed(jitter_seed, 2 * c + 1)));
    }
    result.r_post = densification_loss(post_points, topo.beta);
    post_grads = densification_loss_gradient(post_points, topo.beta);
  }

  result.grads = zero_gradients(w);
  Matrix dr = backward_range(w, head_cache, dlogits, result.grads);
  if (post_active) {
    for (int c = 0; c < num_classes; ++c) {
      dr.middleRows(ranges[c].first, ranges[c].second) +=
          sched_weight * topo.lambda2 * post_grads[c];
    }
  }

  Matrix dz;
  switch (mode) {
    case Mode::absolute:
      dz = dr;
      break;
    case Mode::relative_vanilla:
      dz = cosine_rows_backward(z, anchors.anchors, r, dr);
      break;
    case Mode::relative_robust: {
      const Matrix dz_hat = cosine_rows_backward(z_hat, a_hat, r, dr);
      const Matrix da_hat = cosine_ref_backward(z_hat, a_hat, r, dr);
      const Vector& sigma = result.standard_stats.std;
      // d mu and d sigma, accumulated over every normalized row (samples and
      // anchors both depend on the statistics).
      Vector dmu = -(dz_hat.colwise().sum() + da_hat.colwise().sum()).transpose();
      Vector dsigma = -((dz_hat.cwiseProduct(z_hat)).colwise().sum() +
                        (da_hat.cwiseProduct(a_hat)).colwise().sum())
                           .transpose();
      dmu = dmu.cwiseQuotient(sigma);
      dsigma = dsigma.cwiseQuotient(sigma);
      dz = Matrix(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        dz.row(i) = dz_hat.row(i).cwiseQuotient(sigma.transpose());
      }
      const double inv_ns = 1.0 / static_cast<double>(std_count);
      for (int i = std_begin; i < std_begin + std_count; ++i) {
        dz.row(i) += inv_ns * (dmu.transpose() +
                               dsigma.transpose().cwiseProduct(z_hat.row(i)));
      }
      break;
    }
  }
  if (pre_active) {
    for (int c = 0; c < num_classes; ++c) {
      dz.middleRows(ranges[c].first, ranges[c].second) +=
          sched_weight * topo.lambda1 * pre_grads[c];
    }
  }
  backward_range(w, encoder_cache, dz, result.grads);

  result.total = result.task;
  if (pre_active) result.total += sched_weight * topo.lambda1 * result.r_pre;
  if (post_active) result.total += sched_weight * topo.lambda2 * result.r_post;
  return result;
}

StepDiagnostics train_step(TrainState& state, const TopoBatchData& batch, const TrainConfig& tc,
                           const TopoConfig& topo, double sched_weight) {
  StepDiagnostics diag;
  diag.sched_weight = sched_weight;
  try {
    const CompositeResult res =
        composite_loss_and_grad(state.weights, state.mode, state.anchors, batch, topo,
                                sched_weight, mix_seed(tc.seed, state.step));
    const int latent = state.weights.latent_layer;
    for (int i = 0; i < state.weights.num_layers(); ++i) {
      const double rate = i < latent
                              ? tc.lr_encoder * std::pow(tc.layerwise_decay, latent - 1 - i)
                              : tc.lr_head;
      state.weights.layers[i].weight -= rate * res.grads.layers[i].weight;
      state.weights.layers[i].bias -= rate * res.grads.layers[i].bias;
    }
    if (res.has_stats) {
      if (!state.has_running) {
        state.running_mean = res.standard_stats.mean;
        state.running_std = res.standard_stats.std;
        state.has_running = true;
      } else {
        state.running_mean = 0.9 * state.running_mean + 0.1 * res.standard_stats.mean;
        state.running_std = 0.9 * state.running_std + 0.1 * res.standard_stats.std;
      }
    }
    diag.task_loss = res.task;
    diag.r_pre = res.r_pre;
    diag.r_post = res.r_post;
  } catch (const DegenerateEdge& e) {
    diag.skipped = true;
    diag.skip_reason = e.what();
  } catch (const DegenerateBatch& e) {
    diag.skipped = true;
    diag.skip_reason = e.what();
  } catch (const ZeroVector& e) {
    diag.skipped = true;
    diag.skip_reason = e.what();
  }
  ++state.step;
  return diag;
}

}  // namespace toporel
