#pragma once

// Finite metric space primitives shared by the Euclidean and graph backends:
// closed penumbras, separation and density predicates, greedy maximal nets
// and the bookkeeping of epsilon-perturbations.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "repnet/common.hpp"

namespace repnet::metric {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A finite metric space over point ids 0..size()-1.
///
/// Only size() and distance() are required. The two query hooks have
/// brute-force defaults; backends override them with a grid bucket or a
/// bounded BFS so the algorithms below stay subquadratic in practice.
class MetricSpace {
 public:
  virtual ~MetricSpace() = default;

  virtual std::size_t size() const = 0;
  virtual double distance(PointId a, PointId b) const = 0;

  /// Ids y with distance(x, y) <= r, in ascending order (x included).
  virtual std::vector<PointId> within(PointId x, double r) const;

  /// For every point y of the space, d(q, y) = min over q of d(q_k, y).
  /// Returns +inf everywhere when q is empty.
  virtual std::vector<double> distances_to_set(std::span<const PointId> q) const;
};

/// Separation comparisons. Strict by default: a pair passes iff d >= K.
/// Tolerant mode accepts d >= K - slack.
struct SeparationPolicy {
  bool tolerant = false;
  double slack = 1e-9;

  bool admits(double d, double k) const { return tolerant ? d >= k - slack : d >= k; }
};

struct NetCertificate {
  std::vector<PointId> subset;
  double separation = 0.0;
  double covering_radius = kInfinity;
};

/// Bijection between point ids of a common ambient space, x -> image[k] for
/// x = domain[k], moving no point farther than epsilon.
struct Perturbation {
  std::vector<PointId> domain;
  std::vector<PointId> image;
  double epsilon = 0.0;
};

/// Certificate of the image of a perturbation. When the input separation
/// does not exceed 2 epsilon no separation is claimed and `separation` is 0.
struct PerturbedCertificate {
  NetCertificate certificate;
  bool separation_claimed = false;
};

/// { y : d(Q, y) <= r } in ascending id order. Empty for empty Q.
std::vector<PointId> closed_penumbra(const MetricSpace& space, std::span<const PointId> q,
                                     double r);

bool is_k_separated(const MetricSpace& space, std::span<const PointId> q, double k,
                    SeparationPolicy policy = {});

/// Smallest distance between two distinct members of q (+inf if |q| < 2).
double min_pair_distance(const MetricSpace& space, std::span<const PointId> q);

/// max over y in `over` of d(q, y). Throws std::invalid_argument for empty q.
double covering_radius(const MetricSpace& space, std::span<const PointId> q,
                       std::span<const PointId> over);
/// Covering radius over every point of the space.
double covering_radius(const MetricSpace& space, std::span<const PointId> q);

/// Greedy maximal K-separated subset of `candidates` containing `required`.
///
/// Candidates are scanned in the given order; one is kept when it is at
/// distance >= K from everything kept so far. The result is maximal within
/// the candidate list, so every candidate lies within K of it; the
/// certificate records K and the measured covering radius over candidates.
/// Throws std::invalid_argument when `required` is not K-separated or is not
/// contained in `candidates`.
NetCertificate greedy_maximal_net(const MetricSpace& space, double k,
                                  std::span<const PointId> required,
                                  std::span<const PointId> candidates,
                                  SeparationPolicy policy = {});

/// Certificates for the image of an epsilon-perturbation of a net, from the
/// triangle inequality: covering radius eta + epsilon and, when tau > 2
/// epsilon, separation tau - 2 epsilon. `space` must contain both the domain
/// and the image ids. Throws std::invalid_argument if the pairing is not a
/// bijection from q.subset, or moves a point farther than epsilon.
PerturbedCertificate apply_perturbation(const MetricSpace& space, const NetCertificate& q,
                                        const Perturbation& pert);

std::vector<PointId> all_ids(std::size_t n);

}  // namespace repnet::metric
