#pragma once

// Pointed colored balls and the comparisons behind the space of pointed
// colored graphs: ball isomorphism, the 2^-R distance, partial
// quasi-isometry checks and the repetitivity sets Omega(R).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repnet/colored_graph.hpp"

namespace repnet::gspace {

inline constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

struct PointedBall {
  const ColoredGraph* host = nullptr;
  PointId center = 0;
  std::uint32_t radius = 0;
  std::vector<PointId> members;        // ascending host ids
  std::vector<std::uint32_t> level;    // hop distance to the center
  std::vector<std::uint32_t> adj_start;  // CSR offsets into adj_list, size() + 1 entries
  std::vector<std::uint32_t> adj_list;   // induced neighbours, local indices ascending
  std::vector<Color> color;
  std::uint32_t center_index = 0;

  std::size_t size() const { return members.size(); }
  std::size_t edge_count() const { return adj_list.size() / 2; }
  std::span<const std::uint32_t> adj(std::size_t k) const {
    return {adj_list.data() + adj_start[k], adj_list.data() + adj_start[k + 1]};
  }
  /// Local index of a host vertex, kNpos if absent.
  std::size_t local_index(PointId v) const;
  bool contains(PointId v) const { return local_index(v) != kNpos; }
};

PointedBall hop_ball(const ColoredGraph& g, PointId x, std::uint32_t r);

/// Quick-reject invariant: radius, edge count and the sorted multiset of
/// (level, color, induced degree) triples.
struct BallSignature {
  std::uint32_t radius = 0;
  std::size_t edges = 0;
  std::vector<std::uint64_t> profile;

  friend bool operator==(const BallSignature&, const BallSignature&) = default;
};
BallSignature signature(const PointedBall& b);

/// image[k] is the host vertex of the target ball that source.members[k]
/// maps to.
struct BallIsomorphism {
  std::vector<PointId> image;
};

/// Lexicographically smallest pointed color-preserving isomorphism, with
/// source vertices taken in ascending id order and targets tried in
/// ascending id order. Throws std::invalid_argument on radius mismatch.
std::optional<BallIsomorphism> ball_isomorphism(const PointedBall& b1, const PointedBall& b2);

/// Exact check that `image` is a pointed color-preserving isomorphism b1 -> b2.
bool is_ball_isomorphism(const PointedBall& b1, const PointedBall& b2,
                         std::span<const PointId> image);

struct GStarDistance {
  double value = 2.0;  // 2^-R*, 2 when even the centers disagree
  int r_star = -1;
  bool saturated = false;  // balls agree up to r_max; value reported as 0
};

GStarDistance gstar_distance(const ColoredGraph& g1, PointId x1, const ColoredGraph& g2,
                             PointId x2, std::uint32_t r_max);

struct PpqiReport {
  bool accepted = false;                // lambda-bilipschitz and pointed on D(x1, R)
  bool color_preserving = false;
  bool isomorphism_onto_image = false;  // edges of D(x1,R) <-> edges among the image
  double qi_radius = 0.0;               // R / lambda
  std::string failure;
};

/// Checks a partial map D(x1, R) -> g2 given as (source, target) pairs.
/// Distances in g2 are measured in the whole graph. Throws
/// std::invalid_argument when the domain is not exactly D(x1, R) or when
/// lambda is outside [1, 2).
PpqiReport ppqi_check(const ColoredGraph& g1, PointId x1, const ColoredGraph& g2, PointId x2,
                      std::uint32_t r, double lambda,
                      std::span<const std::pair<PointId, PointId>> map);

/// Vertices over which pattern statistics are taken. `trusted` (indexed by
/// host vertex, empty meaning all) marks vertices whose host neighborhood is
/// genuine; a ball D(x, R) is exact when every vertex of D(x, R-1) is
/// trusted.
struct Window {
  std::vector<PointId> vertices;
  std::vector<char> trusted;

  static Window whole(const ColoredGraph& g);
  bool ball_exact(const ColoredGraph& g, PointId x, std::uint32_t r) const;
};

/// { x in window : D(p,R) ~ D(x,R) }, ascending. Throws std::invalid_argument
/// when p's ball or a window vertex's ball is not exact.
std::vector<PointId> omega_set(const ColoredGraph& g, PointId p, std::uint32_t r,
                               const Window& window);

struct RepetitivityReport {
  std::size_t omega_size = 0;
  bool repetitive = false;  // false: Omega(R) empty in the window
  double radius = 0.0;      // max over window of d(y, Omega); +inf if not repetitive
};

RepetitivityReport repetitivity_radius(const ColoredGraph& g, PointId p, std::uint32_t r,
                                       const Window& window);

/// Agreement table over window vertices. depth[a * n + b] counts the radii
/// 0..R* at which the pointed balls agree, so 0 means the centers already
/// differ and r_max + 1 means saturation.
struct PersistenceTable {
  std::vector<PointId> vertices;
  std::uint32_t r_max = 0;
  std::vector<std::uint32_t> depth;

  std::uint32_t at(std::size_t a, std::size_t b) const { return depth[a * vertices.size() + b]; }
  std::size_t saturated_pairs() const;   // off-diagonal
  std::uint32_t max_off_diagonal() const;
  double mean_off_diagonal() const;
};

PersistenceTable persistence_depth(const ColoredGraph& g, const Window& window, std::uint32_t r_max);

}  // namespace repnet::gspace
