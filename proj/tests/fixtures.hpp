#pragma once

// Shared inputs for the unit and acceptance tests: the cycle probe used to
// size schedules and the default Delone window.

#include <cmath>
#include <cstdint>
#include <vector>

#include "repnet/colored_graph.hpp"
#include "repnet/delone.hpp"
#include "repnet/graph_space.hpp"
#include "repnet/schedule.hpp"

namespace fixture {

// omega on a cycle long enough for R-balls to be paths. Every vertex of a
// constantly colored cycle is an occurrence, so this is 0.
inline double cycle_probe(std::size_t, double r) {
  const auto rr = static_cast<std::uint32_t>(std::floor(r));
  const std::uint32_t n = 4 * rr + 8;
  const auto g = repnet::cycle_graph(n);
  repnet::gspace::Window w;
  w.vertices = {0, 1, n / 2};
  return repnet::gspace::repetitivity_radius(g, 0, rr, w).radius;
}

inline const repnet::sched::Schedule& default_schedule() {
  static const auto s = repnet::sched::make_schedule(1.25, cycle_probe, 3);
  return s;
}

// Cycle of length >= 4 r_2 for the depth-3 schedule.
inline std::size_t cycle_length(const repnet::sched::Schedule& s) {
  return 4 * static_cast<std::size_t>(std::ceil(s.r.back())) + 4;
}

inline repnet::delone::EuclideanBox box50() { return {{0, 0}, {50, 50}}; }

// Points pairwise >= 2 sigma + 1 apart, taken greedily from evenly spaced ids.
inline std::vector<repnet::PointId> spread_points(const repnet::PointCloud& c, std::size_t count,
                                                  double sigma) {
  std::vector<repnet::PointId> out;
  const std::size_t n = c.size();
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t id = k * n / count; id < n; ++id) {
      bool ok = true;
      for (auto f : out) {
        if (repnet::euclidean_distance(c.point(f), c.point(repnet::PointId(id))) < 2 * sigma + 1) ok = false;
      }
      if (ok) {
        out.push_back(repnet::PointId(id));
        break;
      }
    }
  }
  return out;
}

}  // namespace fixture
