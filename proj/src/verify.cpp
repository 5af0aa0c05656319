#include "toporel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "toporel/geometry.hpp"
#include "toporel/mlp.hpp"
#include "toporel/oracles.hpp"
#include "toporel/stitching.hpp"
#include "toporel/symmetry.hpp"
#include "toporel/topology.hpp"
#include "toporel/train.hpp"

namespace toporel::verify {

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  }
  return m;
}

Vector random_vector(Eigen::Index n, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Matrix random_orthogonal(int n, Rng& rng) {
  const Matrix raw = random_matrix(n, n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(raw)};
  return Matrix(Eigen::MatrixXd(qr.householderQ()));
}

AnchorSet make_anchor_set(const Matrix& rows) {
  AnchorSet a;
  a.anchors = rows;
  a.ids.resize(rows.rows());
  std::iota(a.ids.begin(), a.ids.end(), 0);
  return a;
}

// Relative error where the entries are meaningful. Below 1e-4 in magnitude
// the central-difference roundoff floor (eps * |loss| / step ~ 1e-9)
// dominates any relative comparison, so such entries only need absolute
// agreement within 1e-8.
double grad_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  if (denom < 1e-4) return std::abs(analytic - numeric) <= 1e-8 ? 0.0 : 1.0;
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

CheckResult check_prop33_invariance() {
  {
    // Prop 3.3 over 100 seeded cases.
    const int dims[] = {4, 64, 512};
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const int m = dims[i % 3];
      const int k = m / 2;
      Rng rng(mix_seed(0xA11CE, i));
      const Matrix batch = random_matrix(64, m, rng);
      const AnchorSet anchors = make_anchor_set(random_matrix(k, m, rng));
      const Vector z = random_vector(m, rng);
      const ScaledPermutation g = random_scaled_permutation(m, rng, 0.1, 10.0, 1.0);

      const Vector before = robust_relative_transform(z, anchors, batch_stats(batch));
      const Vector after = robust_relative_transform(
          apply_scaled_permutation(z, g), apply_scaled_permutation(anchors, g),
          batch_stats(apply_scaled_permutation(batch, g)));
      worst = std::max(worst, (before - after).cwiseAbs().maxCoeff());
    }
    return {"prop_3_3_robust_invariance", worst <= 1e-9, worst, 1e-9,
            "100 cases, m in {4,64,512}, k=m/2, |B|=64, scales in [0.1,10]"};
  }
}

CheckResult check_vanilla_invariance() {
  {
    // Vanilla transform under z -> alpha U z applied jointly to z and anchors.
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      Rng rng(mix_seed(0xBEA7, i));
      const int m = 2 + static_cast<int>(rng() % 31);
      const int k = std::max(2, m / 2);
      const AnchorSet anchors = make_anchor_set(random_matrix(k, m, rng));
      const Vector z = random_vector(m, rng);
      const Matrix u = random_orthogonal(m, rng);
      std::uniform_real_distribution<double> log_alpha(std::log(0.1), std::log(10.0));
      const double alpha = std::exp(log_alpha(rng));

      AnchorSet anchors_t = anchors;
      anchors_t.anchors = Matrix(alpha * (anchors.anchors * u.transpose()));
      const Vector z_t = alpha * (u * z);
      const Vector before = relative_transform(z, anchors);
      const Vector after = relative_transform(z_t, anchors_t);
      worst = std::max(worst, (before - after).cwiseAbs().maxCoeff());
    }
    return {"vanilla_isometry_invariance", worst <= 1e-9, worst, 1e-9,
            "100 cases of random orthogonal x isotropic actions"};
  }
}

CheckResult check_noninvariance_witness() {
  {
    // diag(1, 10) breaks the vanilla transform but not the robust one.
    ScaledPermutation g = identity_scaled_permutation(2);
    g.scale << 1.0, 10.0;
    Vector z(2);
    z << 1.0, 1.0;
    Matrix anchor_rows(2, 2);
    anchor_rows << 1.0, 0.0, 1.0, 2.0;
    const AnchorSet anchors = make_anchor_set(anchor_rows);
    Matrix batch(4, 2);
    batch << 0.0, 0.0, 1.0, 2.0, 2.0, 1.0, -1.0, 1.0;

    const Vector vanilla_before = relative_transform(z, anchors);
    const Vector vanilla_after = relative_transform(apply_scaled_permutation(z, g),
                                                    apply_scaled_permutation(anchors, g));
    const double vanilla_dev = (vanilla_before - vanilla_after).cwiseAbs().maxCoeff();

    const Vector robust_before = robust_relative_transform(z, anchors, batch_stats(batch));
    const Vector robust_after = robust_relative_transform(
        apply_scaled_permutation(z, g), apply_scaled_permutation(anchors, g),
        batch_stats(apply_scaled_permutation(batch, g)));
    const double robust_dev = (robust_before - robust_after).cwiseAbs().maxCoeff();

    std::ostringstream note;
    note << "vanilla deviates by " << vanilla_dev << ", robust by " << robust_dev;
    return {"non_isotropic_witness", vanilla_dev > 1e-3 && robust_dev <= 1e-9, vanilla_dev,
            1e-3, note.str()};
  }
}

CheckResult check_rotation_trend() {
  {
    // Recorded, not asserted exactly: the robust transform's deviation under
    // arbitrary rotations must shrink as the dimension grows.
    std::vector<double> mean_dev;
    for (const int m : {8, 64, 512}) {
      double total = 0.0;
      const int trials = 8;
      for (int t = 0; t < trials; ++t) {
        Rng rng(mix_seed(0x707A7E, m * 100 + t));
        const Matrix batch = random_matrix(64, m, rng);
        const AnchorSet anchors = make_anchor_set(random_matrix(std::max(2, m / 2), m, rng));
        const Vector z = random_vector(m, rng);
        const Matrix u = random_orthogonal(m, rng);

        AnchorSet anchors_t = anchors;
        anchors_t.anchors = Matrix(anchors.anchors * u.transpose());
        const Matrix batch_t = Matrix(batch * u.transpose());
        const Vector z_t = u * z;
        const Vector before = robust_relative_transform(z, anchors, batch_stats(batch));
        const Vector after =
            robust_relative_transform(z_t, anchors_t, batch_stats(batch_t));
        total += (before - after).cwiseAbs().maxCoeff();
      }
      mean_dev.push_back(total / trials);
    }
    std::ostringstream note;
    note << "mean deviation under random rotations: m=8: " << mean_dev[0]
         << ", m=64: " << mean_dev[1] << ", m=512: " << mean_dev[2];
    const bool decreasing = mean_dev[0] > mean_dev[1] && mean_dev[1] > mean_dev[2];
    return {"rotation_deviation_trend", decreasing, mean_dev[2], mean_dev[0], note.str()};
  }
}

std::vector<CheckResult> invariance_suite() {
  return {check_prop33_invariance(), check_vanilla_invariance(), check_noninvariance_witness(),
          check_rotation_trend()};
}

namespace {

template <typename LossFn>
double weights_fd_worst_error(MLPWeights w, const Gradients& analytic, LossFn loss_fn,
                              double step) {
  double worst = 0.0;
  for (std::size_t layer = 0; layer < w.layers.size(); ++layer) {
    auto probe = [&](double* value, double analytic_entry) {
      const double orig = *value;
      *value = orig + step;
      const double up = loss_fn(w);
      *value = orig - step;
      const double down = loss_fn(w);
      *value = orig;
      worst = std::max(worst, grad_error(analytic_entry, (up - down) / (2.0 * step)));
    };
    Matrix& wm = w.layers[layer].weight;
    for (Eigen::Index r = 0; r < wm.rows(); ++r) {
      for (Eigen::Index c = 0; c < wm.cols(); ++c) {
        probe(&wm(r, c), analytic.layers[layer].weight(r, c));
      }
    }
    Vector& b = w.layers[layer].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      probe(&b[i], analytic.layers[layer].bias[i]);
    }
  }
  return worst;
}

// Random class configurations rejected near the loss kinks: every death must
// be at least 1e-3 from beta and competing pairwise distances at least 1e-4
// apart, so the MST is stable under the finite-difference step.
std::vector<LatentBatch> nondegenerate_classes(Rng& rng, int classes, int points, int dim,
                                               double beta) {
  std::uniform_real_distribution<double> coord(0.0, 2.0);
  while (true) {
    std::vector<LatentBatch> out;
    for (int c = 0; c < classes; ++c) {
      Matrix pts(points, dim);
      for (int i = 0; i < points; ++i) {
        for (int d = 0; d < dim; ++d) pts(i, d) = coord(rng);
      }
      out.push_back(pts);
    }
    bool ok = true;
    for (const auto& pts : out) {
      std::vector<double> dist;
      for (int i = 0; i < pts.rows() && ok; ++i) {
        for (int j = i + 1; j < pts.rows(); ++j) {
          dist.push_back((pts.row(i) - pts.row(j)).norm());
        }
      }
      std::sort(dist.begin(), dist.end());
      for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
        if (dist[i + 1] - dist[i] < 1e-4) ok = false;
      }
      if (!ok) break;
      for (double death : death_times(pts).deaths) {
        if (std::abs(death - beta) < 1e-3) ok = false;
      }
      if (!ok) break;
    }
    if (ok) return out;
  }
}

TopoBatchData synthetic_topo_batch(Rng& rng, int classes, int n, int dim) {
  TopoBatchData batch;
  std::normal_distribution<double> normal(0.0, 1.0);
  int next_index = 0;
  for (int s = 0; s < classes + 1; ++s) {
    Matrix inputs(n, dim);
    std::vector<int> labels(n), indices(n);
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < dim; ++d) inputs(i, d) = normal(rng);
      labels[i] = s < classes ? s : static_cast<int>(rng() % classes);
      indices[i] = next_index++;
    }
    batch.inputs.push_back(std::move(inputs));
    batch.labels.push_back(std::move(labels));
    batch.sample_indices.push_back(std::move(indices));
  }
  return batch;
}

}  // namespace

CheckResult check_densification_gradient_fd() {
  const double step = 1e-6;
  {
    // Densification gradient on 50 non-degenerate configurations.
    Rng rng(0xD15C0);
    const double beta = 1.1;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<LatentBatch> classes = nondegenerate_classes(rng, 2, 8, 3, beta);
      const std::vector<Matrix> analytic = densification_loss_gradient(classes, beta);
      for (std::size_t c = 0; c < classes.size(); ++c) {
        for (Eigen::Index r = 0; r < classes[c].rows(); ++r) {
          for (Eigen::Index d = 0; d < classes[c].cols(); ++d) {
            const double orig = classes[c](r, d);
            classes[c](r, d) = orig + step;
            const double up = densification_loss(classes, beta);
            classes[c](r, d) = orig - step;
            const double down = densification_loss(classes, beta);
            classes[c](r, d) = orig;
            worst = std::max(worst, grad_error(analytic[c](r, d), (up - down) / (2.0 * step)));
          }
        }
      }
    }
    return {"densification_gradient_fd", worst <= 1e-5, worst, 1e-5,
            "50 random 2-class configs vs central differences, step 1e-6"};
  }
}

CheckResult check_mlp_backward_fd() {
  const double step = 1e-6;
  {
    // Plain MLP backward on a relu network.
    Rng rng(0xF00D);
    MLPWeights w = init_mlp({5, 8, 7, 3}, Activation::relu, 0x5EED);
    const Matrix x = random_matrix(4, 5, rng);
    const std::vector<int> labels = {0, 2, 1, 2};
    auto loss_fn = [&](const MLPWeights& weights) {
      return softmax_cross_entropy(forward(weights, x), labels).first;
    };
    ForwardCache cache;
    const Matrix logits = forward(w, x, &cache);
    const auto [loss, dlogits] = softmax_cross_entropy(logits, labels);
    (void)loss;
    const Gradients analytic = backward(w, cache, dlogits);
    const double worst = weights_fd_worst_error(w, analytic, loss_fn, step);
    return {"mlp_backward_fd", worst <= 1e-5, worst, 1e-5,
            "3-layer relu MLP, every parameter vs central differences"};
  }
}

CheckResult check_composite_gradient_fd() {
  const double step = 1e-6;
  {
    // Composite training gradient across every mode and placement.
    double worst = 0.0;
    std::string detail;
    for (const Mode mode :
         {Mode::absolute, Mode::relative_vanilla, Mode::relative_robust}) {
      for (const Placement placement :
           {Placement::pre, Placement::post, Placement::combined, Placement::none}) {
        Rng rng(mix_seed(0xC0FFEE, static_cast<int>(mode) * 10 + static_cast<int>(placement)));
        const int latent = 4, classes = 2, k = 3;
        MLPWeights w = init_mlp_split({3, 5, latent},
                                      {mode == Mode::absolute ? latent : k, classes},
                                      Activation::gelu, rng());
        const AnchorSet anchors = make_anchor_set(random_matrix(k, latent, rng));
        const TopoBatchData batch = synthetic_topo_batch(rng, classes, 4, 3);
        TopoConfig topo;
        topo.placement = placement;
        const double sched = 0.7;
        auto loss_fn = [&](const MLPWeights& weights) {
          return composite_loss_and_grad(weights, mode, anchors, batch, topo, sched, 42).total;
        };
        const CompositeResult res =
            composite_loss_and_grad(w, mode, anchors, batch, topo, sched, 42);
        const double err = weights_fd_worst_error(w, res.grads, loss_fn, step);
        worst = std::max(worst, err);
      }
    }
    return {"composite_gradient_fd", worst <= 1e-5, worst, 1e-5,
            "all modes x placements on a small gelu model"};
  }
}

std::vector<CheckResult> gradient_suite() {
  return {check_densification_gradient_fd(), check_mlp_backward_fd(),
          check_composite_gradient_fd()};
}

std::vector<CheckResult> check_death_time_oracles() {
  std::vector<CheckResult> results;
  double worst_sweep = 0.0;
  double worst_prim = 0.0;
  bool sizes_ok = true;
  for (int i = 0; i < 100; ++i) {
    Rng rng(mix_seed(0x0AC1E, i));
    const int n = 2 + static_cast<int>(rng() % 29);
    const int m = 1 + static_cast<int>(rng() % 8);
    Matrix pts = random_matrix(n, m, rng, 2.0);
    if (i % 10 == 0 && n >= 4) {
      pts.row(1) = pts.row(0);  // coincident points: zero deaths with multiplicity
      pts.row(3) = pts.row(2);
    }
    const std::vector<double> kruskal = death_times(pts).deaths;
    const std::vector<double> sweep = oracle::death_times_sweep(pts);
    const std::vector<double> prim = oracle::mst_lengths_prim(pts);
    if (kruskal.size() != sweep.size() || kruskal.size() != prim.size()) {
      sizes_ok = false;
      break;
    }
    for (std::size_t e = 0; e < kruskal.size(); ++e) {
      worst_sweep = std::max(worst_sweep, std::abs(kruskal[e] - sweep[e]));
      worst_prim = std::max(worst_prim, std::abs(kruskal[e] - prim[e]));
    }
  }
  results.push_back({"death_times_vs_sweep_oracle", sizes_ok && worst_sweep <= 1e-12, worst_sweep,
                     1e-12, "100 random point sets (n <= 30, m <= 8)"});
  results.push_back({"death_times_vs_prim", sizes_ok && worst_prim <= 1e-12, worst_prim, 1e-12,
                     "edge-length multisets match Prim's algorithm"});
  return results;
}

std::vector<CheckResult> oracle_suite() { return check_death_time_oracles(); }

namespace {

IntertwinerElement ratio_two_relu_element(int n, Rng& rng) {
  ScaledPermutation g = identity_scaled_permutation(n);
  for (int i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(g.perm[i], g.perm[pick(rng)]);
  }
  std::uniform_real_distribution<double> uniform(1.0, 2.0);
  for (int i = 0; i < n; ++i) g.scale[i] = uniform(rng);
  g.scale[0] = 1.0;
  g.scale[n - 1] = 2.5;  // max/min >= 2
  return make_intertwiner(Activation::relu, g);
}

IntertwinerElement derangement_element(Activation act, int n, Rng& rng) {
  ScaledPermutation g = identity_scaled_permutation(n);
  const int offset = 1 + static_cast<int>(rng() % (n - 1));
  for (int i = 0; i < n; ++i) g.perm[i] = (i + offset) % n;
  return make_intertwiner(act, g);
}

}  // namespace

std::vector<CheckResult> check_prop24_invariance() {
  std::vector<CheckResult> results;
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid}) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng(mix_seed(0x2417, static_cast<int>(act) * 100 + trial));
      const int n0 = 8 + static_cast<int>(rng() % 25);
      const int n1 = 8 + static_cast<int>(rng() % 25);
      const int n2 = 8 + static_cast<int>(rng() % 25);
      const int n3 = 8 + static_cast<int>(rng() % 25);
      const MLPWeights w = init_mlp({n0, n1, n2, n3}, act, rng());
      const std::vector<IntertwinerElement> elems = {random_intertwiner(act, n1, rng),
                                                     random_intertwiner(act, n2, rng)};
      const MLPWeights wt = intertwiner_transform_weights(w, elems);
      const Matrix samples = random_matrix(64, n0, rng);
      worst = std::max(worst, verify_network_invariance(w, wt, samples));
    }
    results.push_back({std::string("prop_2_4_invariance_") + to_string(act), worst <= 1e-8,
                       worst, 1e-8, "20 random 3-layer MLPs, 64 inputs each"});
  }
  return results;
}

std::vector<CheckResult> check_stitch_exactness() {
  std::vector<CheckResult> results;
  for (const Activation act : {Activation::relu, Activation::gelu, Activation::sigmoid}) {
    Rng rng(mix_seed(0x57175C4, static_cast<int>(act)));
    const int input = 6, hidden = 12, latent = 8, classes = 3, k = 5;
    const Matrix anchor_inputs = random_matrix(k, input, rng);
    const Matrix eval_inputs = random_matrix(48, input, rng);
    const Matrix stat_inputs = random_matrix(64, input, rng);

    const IntertwinerElement e1 = act == Activation::relu
                                      ? ratio_two_relu_element(hidden, rng)
                                      : derangement_element(act, hidden, rng);
    const IntertwinerElement e2 = act == Activation::relu
                                      ? ratio_two_relu_element(latent, rng)
                                      : derangement_element(act, latent, rng);
    const ScaledPermutation lambda_m = lambda_sigma_closed_form(e2);

    // Robust pair: transformed encoder, anchors and statistics.
    TrainedModel a;
    a.mode = Mode::relative_robust;
    a.weights = init_mlp_split({input, hidden, latent}, {k, classes}, act, rng());
    a.anchors = make_anchor_set(encode(a.weights, anchor_inputs));
    const BatchStats stats = batch_stats(encode(a.weights, stat_inputs));
    a.running_mean = stats.mean;
    a.running_std = stats.std;
    a.has_running = true;

    TrainedModel b = a;
    b.weights = intertwiner_transform_encoder(a.weights, {e1, e2});
    b.anchors.anchors = apply_scaled_permutation(
        static_cast<const LatentBatch&>(a.anchors.anchors), lambda_m);
    const BatchStats stats_b = apply_scaled_permutation(stats, lambda_m);
    b.running_mean = stats_b.mean;
    b.running_std = stats_b.std;

    const Matrix in_domain = stitched_logits(a, a, eval_inputs);
    const Matrix cross = stitched_logits(b, a, eval_inputs);
    const double robust_dev = (in_domain - cross).cwiseAbs().maxCoeff();
    results.push_back({std::string("stitch_robust_exact_") + to_string(act),
                       robust_dev <= 1e-6, robust_dev, 1e-6,
                       "intertwiner-constructed pair, robust stitching"});

    // Absolute pair: full Prop-2.4 transform, head consumed directly.
    TrainedModel a_abs;
    a_abs.mode = Mode::absolute;
    a_abs.weights = init_mlp({input, hidden, latent, classes}, act, rng());
    TrainedModel b_abs = a_abs;
    b_abs.weights = intertwiner_transform_weights(a_abs.weights, {e1, e2});
    const Matrix abs_in = stitched_logits(a_abs, a_abs, eval_inputs);
    const Matrix abs_cross = stitched_logits(b_abs, a_abs, eval_inputs);
    const double abs_dev = (abs_in - abs_cross).cwiseAbs().maxCoeff();
    results.push_back({std::string("stitch_absolute_fails_") + to_string(act), abs_dev > 1e-2,
                       abs_dev, 1e-2,
                       act == Activation::relu
                           ? "latent element scale ratio >= 2"
                           : "latent element is a derangement (scale ratio fixed at 1)"});
  }
  return results;
}

std::vector<CheckResult> intertwiner_suite() {
  std::vector<CheckResult> all = check_prop24_invariance();
  const std::vector<CheckResult> stitch = check_stitch_exactness();
  all.insert(all.end(), stitch.begin(), stitch.end());
  return all;
}

std::vector<CheckResult> all_suites() {
  std::vector<CheckResult> all;
  for (auto suite : {invariance_suite, gradient_suite, oracle_suite, intertwiner_suite}) {
    auto results = suite();
    all.insert(all.end(), results.begin(), results.end());
  }
  return all;
}

}  // namespace toporel::verify
