#include "repnet/metric_core.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "repnet/parallel.hpp"

namespace repnet::metric {

std::vector<PointId> MetricSpace::within(PointId x, double r) const {
  std::vector<PointId> out;
  const auto n = static_cast<PointId>(size());
  for (PointId y = 0; y < n; ++y) {
    if (distance(x, y) <= r) out.push_back(y);
  }
  return out;
}

std::vector<double> MetricSpace::distances_to_set(std::span<const PointId> q) const {
  const std::size_t n = size();
  std::vector<double> out(n, kInfinity);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t y = begin; y < end; ++y) {
      double best = kInfinity;
      for (PointId a : q) best = std::min(best, distance(a, static_cast<PointId>(y)));
      out[y] = best;
    }
  });
  return out;
}

std::vector<PointId> all_ids(std::size_t n) {
  std::vector<PointId> ids(n);
  std::iota(ids.begin(), ids.end(), PointId{0});
  return ids;
}

std::vector<PointId> closed_penumbra(const MetricSpace& space, std::span<const PointId> q,
                                     double r) {
  if (q.empty()) return {};
  const auto dist = space.distances_to_set(q);
  std::vector<PointId> out;
  for (std::size_t y = 0; y < dist.size(); ++y) {
    if (dist[y] <= r) out.push_back(static_cast<PointId>(y));
  }
  return out;
}

bool is_k_separated(const MetricSpace& space, std::span<const PointId> q, double k,
                    SeparationPolicy policy) {
  if (!(k > 0)) throw std::invalid_argument("is_k_separated: K must be positive");
  std::vector<char> member(space.size(), 0);
  for (PointId x : q) {
    if (member[x]) return false;  // repeated id: distance 0
    member[x] = 1;
  }
  for (PointId x : q) {
    for (PointId y : space.within(x, k)) {
      if (y == x || !member[y]) continue;
      if (!policy.admits(space.distance(x, y), k)) return false;
    }
  }
  return true;
}

double min_pair_distance(const MetricSpace& space, std::span<const PointId> q) {
  double best = kInfinity;
  for (std::size_t a = 0; a < q.size(); ++a) {
    for (std::size_t b = a + 1; b < q.size(); ++b) {
      best = std::min(best, space.distance(q[a], q[b]));
    }
  }
  return best;
}

double covering_radius(const MetricSpace& space, std::span<const PointId> q,
                       std::span<const PointId> over) {
  if (q.empty()) throw std::invalid_argument("covering_radius: empty subset has no finite covering radius");
  const auto dist = space.distances_to_set(q);
  double worst = 0.0;
  for (PointId y : over) worst = std::max(worst, dist[y]);
  return worst;
}

double covering_radius(const MetricSpace& space, std::span<const PointId> q) {
  const auto ids = all_ids(space.size());
  return covering_radius(space, q, ids);
}

NetCertificate greedy_maximal_net(const MetricSpace& space, double k,
                                  std::span<const PointId> required,
                                  std::span<const PointId> candidates,
                                  SeparationPolicy policy) {
  if (!(k > 0)) throw std::invalid_argument("greedy_maximal_net: K must be positive");
  if (!is_k_separated(space, required, k, policy)) {
    throw std::invalid_argument("greedy_maximal_net: required set is not K-separated");
  }
  std::vector<char> is_candidate(space.size(), 0);
  for (PointId c : candidates) is_candidate[c] = 1;
  for (PointId x : required) {
    if (!is_candidate[x]) {
      throw std::invalid_argument("greedy_maximal_net: required point missing from candidates");
    }
  }

  std::vector<char> kept(space.size(), 0);
  std::vector<char> blocked(space.size(), 0);
  NetCertificate cert;
  cert.separation = k;
  auto keep = [&](PointId x) {
    kept[x] = 1;
    cert.subset.push_back(x);
    for (PointId y : space.within(x, k)) {
      if (!policy.admits(space.distance(x, y), k)) blocked[y] = 1;
    }
  };
  for (PointId x : required) keep(x);
  for (PointId c : candidates) {
    if (kept[c] || blocked[c]) continue;
    keep(c);
  }
  cert.covering_radius = candidates.empty() ? 0.0 : covering_radius(space, cert.subset, candidates);
  return cert;
}

PerturbedCertificate apply_perturbation(const MetricSpace& space, const NetCertificate& q,
                                        const Perturbation& pert) {
  if (pert.domain.size() != pert.image.size()) {
    throw std::invalid_argument("apply_perturbation: domain and image sizes differ");
  }
  auto sorted_domain = pert.domain;
  std::sort(sorted_domain.begin(), sorted_domain.end());
  auto sorted_q = q.subset;
  std::sort(sorted_q.begin(), sorted_q.end());
  if (std::adjacent_find(sorted_domain.begin(), sorted_domain.end()) != sorted_domain.end() ||
      sorted_domain != sorted_q) {
    throw std::invalid_argument("apply_perturbation: pairing is not defined exactly on Q");
  }
  auto sorted_image = pert.image;
  std::sort(sorted_image.begin(), sorted_image.end());
  if (std::adjacent_find(sorted_image.begin(), sorted_image.end()) != sorted_image.end()) {
    throw std::invalid_argument("apply_perturbation: pairing is not injective");
  }
  for (std::size_t k = 0; k < pert.domain.size(); ++k) {
    if (space.distance(pert.domain[k], pert.image[k]) > pert.epsilon) {
      throw std::invalid_argument("apply_perturbation: point moved farther than epsilon");
    }
  }

  PerturbedCertificate out;
  out.certificate.subset = pert.image;
  out.certificate.covering_radius = q.covering_radius + pert.epsilon;
  if (q.separation > 2.0 * pert.epsilon) {
    out.certificate.separation = q.separation - 2.0 * pert.epsilon;
    out.separation_claimed = true;
  }
  return out;
}

}  // namespace repnet::metric
