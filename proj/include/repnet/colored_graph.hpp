#pragma once

// Simple vertex-colored graphs in compressed adjacency form, the text edge
// list format, reusable BFS scratch and the hop metric as a MetricSpace.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "repnet/metric_core.hpp"

namespace repnet {

using Color = std::uint32_t;

class ColoredGraph {
 public:
  ColoredGraph() = default;

  /// Builds a simple graph on n vertices. Loops and repeated edges are
  /// rejected; colors default to 1.
  static ColoredGraph from_edges(std::size_t n, std::span<const std::pair<PointId, PointId>> edges,
                                 std::vector<Color> colors = {});

  std::size_t size() const { return colors_.size(); }
  std::size_t edge_count() const { return adj_.size() / 2; }

  /// Neighbors in ascending order.
  std::span<const PointId> neighbors(PointId v) const {
    return {adj_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(PointId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool adjacent(PointId a, PointId b) const;
  std::size_t max_degree() const;

  Color color(PointId v) const { return colors_[v]; }
  const std::vector<Color>& colors() const { return colors_; }
  void set_colors(std::vector<Color> colors);

  /// External ids as read from a graph file; identity when built in memory.
  std::int64_t external_id(PointId v) const { return external_.empty() ? v : external_[v]; }
  void set_external_ids(std::vector<std::int64_t> ids);

  std::vector<std::pair<PointId, PointId>> edges() const;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<PointId> adj_;
  std::vector<Color> colors_;
  std::vector<std::int64_t> external_;
};

/// Path 0-1-...-(n-1).
ColoredGraph path_graph(std::size_t n, std::vector<Color> colors = {});
/// Cycle on n >= 3 vertices.
ColoredGraph cycle_graph(std::size_t n, std::vector<Color> colors = {});

/// `v <id> <color>` and `e <id> <id>` lines; `#` comments and blank lines are
/// skipped. Internal indices follow ascending external id.
ColoredGraph read_graph(std::istream& in);
void write_graph(std::ostream& out, const ColoredGraph& g);

/// Breadth-first search with per-thread scratch arrays, so repeated bounded
/// searches cost only the size of the region they visit.
class Bfs {
 public:
  explicit Bfs(const ColoredGraph& g) : g_(g) {}

  /// Vertices within hop distance r of the sources, in BFS order (sources
  /// first). Afterwards dist(v) is valid until the next call on this thread.
  const std::vector<PointId>& run(std::span<const PointId> sources, std::uint32_t r);
  const std::vector<PointId>& run(PointId source, std::uint32_t r) {
    return run(std::span<const PointId>(&source, 1), r);
  }

  /// Hop distance from the last run, or -1 when v was not reached.
  std::int64_t dist(PointId v) const;

  /// Hop distance between a and b, or -1 if larger than cap.
  std::int64_t distance(PointId a, PointId b, std::uint32_t cap);

 private:
  const ColoredGraph& g_;
};

inline constexpr std::uint32_t kUnbounded = 0xffffffffu;

bool is_connected(const ColoredGraph& g);

/// Hop metric of a graph. Unreachable pairs are at distance +inf.
class GraphMetric final : public metric::MetricSpace {
 public:
  explicit GraphMetric(const ColoredGraph& g) : g_(g) {}

  std::size_t size() const override { return g_.size(); }
  double distance(PointId a, PointId b) const override;
  std::vector<PointId> within(PointId x, double r) const override;
  std::vector<double> distances_to_set(std::span<const PointId> q) const override;

  const ColoredGraph& graph() const { return g_; }

 private:
  const ColoredGraph& g_;
};

}  // namespace repnet
