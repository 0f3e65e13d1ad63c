#pragma once

// Hierarchy of separated nets X^j_i inside a repetitive colored graph, with
// stored pointed ball isomorphisms h^j_{i,z}: D(p, r_i) -> D(z, r_i), the
// poset of propagated centers, limit sets X_i and their verification.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "repnet/colored_graph.hpp"
#include "repnet/graph_space.hpp"
#include "repnet/schedule.hpp"

namespace repnet::hier {

/// Lazy membership oracle for Omega_i = { x : D(p, r_i) ~ D(x, r_i) },
/// caching the witness for every vertex tested.
class OmegaOracle {
 public:
  OmegaOracle(const ColoredGraph& g, PointId p, std::uint32_t r, const gspace::Window* window);

  bool contains(PointId x);
  /// Lexicographically smallest witness; requires contains(x).
  const std::vector<PointId>& witness(PointId x);
  const gspace::PointedBall& base_ball() const { return base_; }
  std::size_t tests() const { return cache_.size(); }

 private:
  const ColoredGraph& g_;
  const gspace::Window* window_;
  gspace::PointedBall base_;
  gspace::BallSignature base_sig_;
  std::unordered_map<PointId, std::optional<std::vector<PointId>>> cache_;
};

/// Optional prescribed base maps f_{i,x}; return nullopt to fall back to the
/// smallest witness.
using Prescription = std::function<std::optional<std::vector<PointId>>(std::size_t i, PointId x)>;

struct Origin {
  bool fresh = true;  // chosen in the hat part
  std::size_t l = 0;  // otherwise propagated by h^j_{l,z} from x' in X^l_i
  PointId z = 0;
  PointId x_prime = 0;
};

struct PosetElement {
  std::size_t l = 0;
  PointId z = 0;
  friend bool operator==(const PosetElement&, const PosetElement&) = default;
  friend auto operator<=>(const PosetElement&, const PosetElement&) = default;
};

struct HierarchyLevel {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<PointId> hat;      // ascending
  std::vector<PointId> tilde;    // ascending
  std::vector<PointId> members;  // hat and tilde merged, ascending
  std::vector<std::vector<PointId>> maps;  // aligned with members; images of base_ball(i).members
  std::vector<Origin> origin;              // aligned with members
  std::vector<PosetElement> poset;         // P^j_i, sorted
  std::vector<std::pair<std::size_t, std::size_t>> less;  // strict relation, indices into poset
  std::vector<std::size_t> maximal;        // indices into poset

  std::size_t index_of(PointId x) const;  // kNpos if absent
  bool contains(PointId x) const { return index_of(x) != gspace::kNpos; }
  const std::vector<PointId>& map_of(PointId x) const;
};

struct HierarchyOptions {
  PointId p = 0;
  /// Optional trusted-vertex mask; every ball used must be exact in it.
  gspace::Window window;
  Prescription prescribed;
};

class Hierarchy {
 public:
  Hierarchy(const ColoredGraph& g, sched::Schedule schedule, HierarchyOptions opts);

  /// Builds every level (i, j) with 0 <= i < j <= top in induction order:
  /// j ascending, then i descending. Throws ConstructionError when a level
  /// would need balls beyond the trusted window or the schedule depth.
  void build(std::size_t top);

  std::size_t top() const { return top_; }
  const ColoredGraph& graph() const { return g_; }
  const sched::Schedule& schedule() const { return schedule_; }
  PointId p() const { return opts_.p; }
  const HierarchyOptions& options() const { return opts_; }

  /// Level (i, j); j == i gives the base level {p} with the identity map.
  const HierarchyLevel& level(std::size_t i, std::size_t j) const;
  HierarchyLevel& mutable_level(std::size_t i, std::size_t j);
  const gspace::PointedBall& base_ball(std::size_t i) const;
  OmegaOracle& omega(std::size_t i);

  std::uint32_t radius(std::size_t i) const;  // floor r_i
  std::uint32_t sep(std::size_t i) const;     // ceil s_i
  std::uint32_t margin(std::size_t i, std::size_t j) const;  // floor(r_j - t_i)

  /// h^j_{l,z}(X^l_i) as a sorted set.
  std::vector<PointId> image_of_level(std::size_t l, std::size_t j, PointId z, std::size_t i) const;
  /// Apply the map of z in level (l, j) to a vertex of D(p, r_l).
  PointId apply(std::size_t l, std::size_t j, PointId z, PointId v) const;

 private:
  void build_level(std::size_t i, std::size_t j);
  std::vector<PointId> compose(std::size_t l, std::size_t j, PointId z,
                               const std::vector<PointId>& inner, std::size_t i) const;

  const ColoredGraph& g_;
  sched::Schedule schedule_;
  HierarchyOptions opts_;
  std::size_t top_ = 0;
  std::vector<gspace::PointedBall> balls_;
  std::vector<std::unique_ptr<OmegaOracle>> omega_;
  std::map<std::pair<std::size_t, std::size_t>, HierarchyLevel> levels_;
};

/// Strict order on P^j_i: (l,z) < (l',z') iff l < l' and z in h^j_{l',z'}(X^{l'}_l).
void compute_poset(const Hierarchy& h, std::size_t i, std::size_t j,
                   std::vector<PosetElement>& poset,
                   std::vector<std::pair<std::size_t, std::size_t>>& less,
                   std::vector<std::size_t>& maximal);

struct ClauseResult {
  std::string name;
  bool ok = true;
  std::vector<PointId> witnesses;  // first few counterexample vertices
  std::string detail;
};

struct LevelReport {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<ClauseResult> clauses;
  std::size_t dichotomy_pairs = 0;           // (x, (l,z)) pairs inside the graph threshold
  std::size_t manifold_threshold_pairs = 0;  // same pairs under the lambda-scaled threshold

  bool all_ok() const;
  const ClauseResult& clause(const std::string& name) const;
};

/// Re-derives every property of a level from scratch:
///   maps_isomorphic     every stored map is a pointed colored isomorphism
///   disjoint            hat and tilde partition the members
///   hat_maximal         hat is a maximal s_i-separated subset of Omega_i in
///                       D(p, r_j - t_i) minus the disks D(z, r_l + s_i) of
///                       maximal poset elements
///   separated_in_omega  members are s_i-separated, in Omega_i and in D(p, r_j - t_i)
///   composition         h^j_{i,x} = h^j_{l,z} h^l_{i,x'} on every D(z, r_l)
///   trace               X^j_i restricted to D(z, r_l) equals h^j_{l,z}(X^l_i)
///   dichotomy           d(x, z) >= r_l + s_i or x in h^j_{l,z}(X^l_i)
///   nesting             lower levels sit inside with restricted maps
///   base_point          p is a member with the identity map
///   poset_laws          antisymmetry and transitivity of the poset
///   unique_maximal      every point of a poset disk lies in exactly one maximal disk
///   base_maps           stored maps equal the re-derived products of base maps
LevelReport verify_level(const Hierarchy& h, std::size_t i, std::size_t j);

struct LimitLevel {
  std::size_t i = 0;
  std::vector<PointId> members;             // X_i, ascending
  std::vector<std::vector<PointId>> maps;   // aligned, images of base_ball(i)
};

/// Union of X^j_i over materialized j. Throws ConstructionError when two
/// levels store different maps for the same center.
LimitLevel limit_level(const Hierarchy& h, std::size_t i);

struct NestingReport {
  bool nested = true;              // X_k subset of X_i
  bool restriction_coherent = true;  // h_{i,x} = h_{k,x} restricted to D(p, r_i)
  std::vector<PointId> witnesses;
};

NestingReport check_nesting(const Hierarchy& h, const LimitLevel& lower, const LimitLevel& upper);

struct DensityReport {
  std::size_t i = 0;
  std::vector<std::uint32_t> windows;  // radii of D(p, W) measured over
  std::vector<double> measured;        // covering radius of X_i over each window
  double bound = 0.0;
  std::string bound_expression;
  bool pass = false;
  bool stable = false;  // equal measurements across windows
};

/// Covering radius of X_i over D(p, W) for the default window
/// W = r_J - t_i - omega_i and for W/2, against the assembled bound.
/// With a single level above i the window is D(p, r_{i+1} - t_i) and the
/// bound is s_i + omega_i. Throws ConstructionError when X_i is empty.
DensityReport density_report(const Hierarchy& h, const LimitLevel& limit);

/// color(x) = 1 + max{ i : x in X_i }, 0 when x lies in no X_i.
std::vector<Color> level_coloring(const ColoredGraph& g, const std::vector<LimitLevel>& limits);

nlohmann::json to_json(const Hierarchy& h);
nlohmann::json to_json(const LevelReport& r);
nlohmann::json to_json(const DensityReport& r);

}  // namespace repnet::hier
