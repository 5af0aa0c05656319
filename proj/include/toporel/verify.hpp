#pragma once

#include <string>
#include <vector>

namespace toporel::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;   // worst-case deviation / error seen
  double threshold = 0.0;
  std::string note;
};

// Individual checks; the suites below bundle them for the CLI.
CheckResult check_prop33_invariance();
CheckResult check_vanilla_invariance();
CheckResult check_noninvariance_witness();
CheckResult check_rotation_trend();
CheckResult check_densification_gradient_fd();
CheckResult check_mlp_backward_fd();
CheckResult check_composite_gradient_fd();
std::vector<CheckResult> check_death_time_oracles();
std::vector<CheckResult> check_prop24_invariance();
std::vector<CheckResult> check_stitch_exactness();

// Prop 3.3 robust invariance, vanilla orthogonal invariance, the
// non-isotropic counterexample and the rotation-deviation trend.
std::vector<CheckResult> invariance_suite();

// Densification-loss gradient and full composite training gradients against
// central finite differences.
std::vector<CheckResult> gradient_suite();

// Kruskal death times against the sorted-distance sweep oracle and Prim.
std::vector<CheckResult> oracle_suite();

// Prop 2.4 network invariance and the intertwiner stitching exactness pair.
std::vector<CheckResult> intertwiner_suite();

std::vector<CheckResult> all_suites();

}  // namespace toporel::verify
