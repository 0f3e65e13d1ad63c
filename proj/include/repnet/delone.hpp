#pragma once

// Delone sets in boxes of R^d: lattice-greedy generation, packing constants,
// the corona-gap perturbation and extraction of the bounded-degree graph.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "repnet/colored_graph.hpp"
#include "repnet/metric_core.hpp"
#include "repnet/point_cloud.hpp"

namespace repnet::delone {

struct EuclideanBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  /// Throws ConfigError unless lo < hi componentwise and dims agree.
  void validate() const;
  /// Distance from p to the box boundary (negative outside).
  double boundary_distance(std::span<const double> p) const;
};

struct DeloneSet {
  PointCloud cloud;
  double tau = 0.0;
  double eta = 0.0;
  EuclideanBox window;
  /// eta is certified for window points at least this far from the boundary.
  double margin = 0.0;
};

struct GenerateOptions {
  double pitch_fraction = 0.25;  // lattice pitch as a fraction of tau
  bool random_offset = true;     // seeded dyadic shift of the lattice
  double interior_margin = -1;   // negative: use tau
  double probe_fraction = 0.125;  // certification probe spacing / tau
};

/// Greedy maximal tau-separated subset of a candidate lattice in the box,
/// scanned in row-major order (first axis slowest). eta is certified by a
/// probe grid on the box eroded by the interior margin.
DeloneSet generate_delone(const EuclideanBox& box, double tau, std::uint64_t seed,
                          const GenerateOptions& opts = {});

/// Upper bound for the covering radius of `cloud` over the box eroded by
/// `margin`: max nearest-point distance over cell-center probes plus the
/// half-diagonal of a probe cell.
double certify_covering_radius(const PointCloud& cloud, const EuclideanBox& box, double margin,
                               double probe_spacing);

/// c(delta) = floor(((2 delta + tau) / tau)^d).
std::uint64_t packing_bound(std::size_t dim, double tau, double delta);

/// Volume of the unit ball of R^d.
double unit_ball_volume(std::size_t dim);

struct CoronaBudget {
  std::uint64_t C = 0;
  double K = 0.0;
  double L = 0.0;
  double P0 = 0.0;  // a priori cap on rho used inside C
  double P_epsilon = 0.0;
};

/// Volume budget behind the corona-gap perturbation: C from the packing
/// bound for (tau - 2 epsilon)-separated sets, K the epsilon-ball volume,
/// L = K / (2C), P_epsilon the largest rho <= P0 whose closed annulus of
/// half-width rho around sigma has volume <= L.
CoronaBudget corona_volume_budget(std::size_t dim, double tau, double sigma, double epsilon);

struct CoronaGapParams {
  double sigma = 0.0;
  double rho = 0.0;
  double epsilon = 0.0;
  double P_epsilon = 0.0;

  /// Throws ConfigError unless 0 < rho < P_epsilon < sigma and epsilon < tau/2.
  void validate(double tau) const;
};

/// Params with rho = P_epsilon / 2.
CoronaGapParams make_corona_params(std::size_t dim, double tau, double sigma, double epsilon);

inline bool in_gap(double d, double sigma, double rho) { return d > sigma - rho && d < sigma + rho; }

struct CoronaGapOptions {
  std::uint64_t max_candidates_per_point = 20'000'000;
};

struct CoronaGapResult {
  DeloneSet set;  // tau - 2 eps, and eta the smaller of eta + eps and a fresh probe certificate
  /// Pairing in the joined cloud join_clouds(input, output): domain k is the
  /// input point k, image n + k its new position.
  metric::Perturbation perturbation;
  std::size_t moved = 0;
  double max_displacement = 0.0;
  std::uint64_t candidates_tested = 0;
};

/// Moves points in ascending id order so that no pair distance falls in
/// (sigma - rho, sigma + rho). Frozen points stay bitwise unmoved. Each
/// offending point jumps to the first admissible spot of a square spiral of
/// resolution min(rho, epsilon)/4 strictly inside its epsilon-ball. Throws
/// ConstructionError naming the point when the spiral budget runs out, and
/// ConfigError when the frozen set itself has a pair in the gap.
CoronaGapResult corona_gap_perturb(const DeloneSet& x, const CoronaGapParams& params,
                                   std::span<const PointId> frozen,
                                   const CoronaGapOptions& opts = {});

/// Number of unordered pairs with distance in the open gap, via a grid.
std::size_t count_gap_violations(const PointCloud& cloud, double sigma, double rho);

/// Unit-disk style graph: edge iff 0 < |x - y| <= sigma. Requires
/// sigma >= 3 eta (ConfigError otherwise); throws ConstructionError if the
/// result is disconnected or exceeds the packing degree bound.
ColoredGraph delone_to_graph(const DeloneSet& x, double sigma, std::vector<Color> colors = {});

struct SandwichReport {
  std::size_t vertices_checked = 0;
  std::size_t pairs_checked = 0;
  std::size_t upper_violations = 0;  // hop ball not inside Euclidean ball r*sigma
  std::size_t lower_violations = 0;  // Euclidean r-ball not inside hop ball floor(r/eta)+1
  std::string first_counterexample;

  bool ok() const { return upper_violations == 0 && lower_violations == 0; }
};

/// Checks both ball inclusions for integer r <= r_max at every vertex whose
/// boundary distance is at least `interior`.
SandwichReport check_metric_sandwich(const DeloneSet& x, const ColoredGraph& g, double sigma,
                                     int r_max, double interior);

}  // namespace repnet::delone
