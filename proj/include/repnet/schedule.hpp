#pragma once

// Parameter schedules (r_i, s_i, t_i, lambda_i) for the hierarchical net
// construction, and an evaluator for the inequalities they must satisfy.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace repnet::sched {

/// One evaluated inequality lhs > rhs at index i. Growth conditions on the
/// radii report relative slack (lhs - rhs) / rhs; the distortion conditions
/// on lambda report log slack ln(lhs) / ln(rhs) - 1, which is +inf when
/// rhs <= 1 makes the inequality automatic.
///
///   radius_growth      r_i > l0^5/(l0-1) (r' + s' + t' + 2w' + 1)
///   separation_growth  s_i > 2 l0^5 (r_i + s' + w_i)
///   margin_growth      t_i > l0^3 (5t' + r_i + s' + 2w' + 1)
///   margin_distortion  t_i > 4(l^4 + l^2 - 1)/l^2 r_i + t' + L_i (s' + 2w' + w_i)
///   lambda_decay       lambda_{i-1} > lambda_i^2
///   lambda_ratio5/6    2^(2^-i) > r_i (l^e - 1) l'^2 / (r' (l'^e - 1) l^2)
///   tail               lambda_i^2 > Lambda_{i,J}
///   lambda_total       2 > lambda_0^2 >= Lambda_0
/// Primes denote index i-1 (zero for r, s, t, w at i = 0), l = lambda_i and
/// L_i is bounded by lambda_i^2.
struct ConditionCheck {
  std::string name;
  int index = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
  std::string note;
};

struct Schedule {
  double lambda0 = 0.0;
  double lambda_minus1 = 0.0;
  std::vector<double> r, s, t, lambda, omega;

  std::size_t depth() const { return r.size(); }
  /// Lambda_{i,j} = prod_{k=i..j} lambda_k over materialized indices.
  double lambda_product(std::size_t i, std::size_t j) const;
  /// Rigorous bound on the infinite tail product Lambda_i, namely lambda_i^2.
  double lambda_tail_bound(std::size_t i) const { return lambda[i] * lambda[i]; }
};

using OmegaProbe = std::function<double(std::size_t level, double r)>;

/// Smallest integer r, s, t clearing the growth conditions by the slack
/// factor, and the largest lambda_i meeting the distortion conditions with
/// log slack.
/// lambda_{-1} is fixed at lambda0^2.2. Throws ConfigError for lambda0
/// outside (1, sqrt 2) and ConstructionError when the probe reports an
/// unbounded omega (the pattern at that level is not repetitive).
Schedule make_schedule(double lambda0, const OmegaProbe& omega_probe, std::size_t depth,
                       double slack = 0.05);

/// Evaluates every condition at every materialized index.
std::vector<ConditionCheck> check_schedule(const Schedule& s);

/// True when every check holds with slack at least `min_slack`.
bool schedule_valid(const std::vector<ConditionCheck>& checks, double min_slack);

nlohmann::json to_json(const Schedule& s);
nlohmann::json to_json(const ConditionCheck& c);

}  // namespace repnet::sched
