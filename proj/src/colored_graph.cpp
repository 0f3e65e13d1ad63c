#include "repnet/colored_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace repnet {

ColoredGraph ColoredGraph::from_edges(std::size_t n,
                                      std::span<const std::pair<PointId, PointId>> edges,
                                      std::vector<Color> colors) {
  ColoredGraph g;
  if (colors.empty()) colors.assign(n, 1);
  if (colors.size() != n) throw std::invalid_argument("ColoredGraph: color count differs from vertex count");
  g.colors_ = std::move(colors);
  std::vector<std::size_t> deg(n, 0);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw std::invalid_argument("ColoredGraph: edge endpoint out of range");
    if (a == b) throw std::invalid_argument("ColoredGraph: loop at vertex " + std::to_string(a));
    ++deg[a];
    ++deg[b];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
  g.adj_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [a, b] : edges) {
    g.adj_[fill[a]++] = b;
    g.adj_[fill[b]++] = a;
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto first = g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
    auto last = g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last) {
      throw std::invalid_argument("ColoredGraph: repeated edge at vertex " + std::to_string(v));
    }
  }
  return g;
}

bool ColoredGraph::adjacent(PointId a, PointId b) const {
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::size_t ColoredGraph::max_degree() const {
  std::size_t best = 0;
  for (PointId v = 0; v < size(); ++v) best = std::max(best, degree(v));
  return best;
}

void ColoredGraph::set_colors(std::vector<Color> colors) {
  if (colors.size() != size()) throw std::invalid_argument("set_colors: size mismatch");
  colors_ = std::move(colors);
}

void ColoredGraph::set_external_ids(std::vector<std::int64_t> ids) {
  if (ids.size() != size()) throw std::invalid_argument("set_external_ids: size mismatch");
  external_ = std::move(ids);
}

std::vector<std::pair<PointId, PointId>> ColoredGraph::edges() const {
  std::vector<std::pair<PointId, PointId>> out;
  out.reserve(edge_count());
  for (PointId v = 0; v < size(); ++v) {
    for (PointId w : neighbors(v)) {
      if (v < w) out.emplace_back(v, w);
    }
  }
  return out;
}

ColoredGraph path_graph(std::size_t n, std::vector<Color> colors) {
  std::vector<std::pair<PointId, PointId>> e;
  for (std::size_t v = 0; v + 1 < n; ++v) e.emplace_back(PointId(v), PointId(v + 1));
  return ColoredGraph::from_edges(n, e, std::move(colors));
}

ColoredGraph cycle_graph(std::size_t n, std::vector<Color> colors) {
  if (n < 3) throw std::invalid_argument("cycle_graph: need at least 3 vertices");
  std::vector<std::pair<PointId, PointId>> e;
  for (std::size_t v = 0; v < n; ++v) e.emplace_back(PointId(v), PointId((v + 1) % n));
  return ColoredGraph::from_edges(n, e, std::move(colors));
}

ColoredGraph read_graph(std::istream& in) {
  std::map<std::int64_t, Color> vertices;
  std::vector<std::pair<std::int64_t, std::int64_t>> raw_edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    auto fail = [&] {
      throw std::invalid_argument("graph file: malformed line " + std::to_string(line_no));
    };
    if (tag == "v") {
      std::int64_t id = 0;
      std::int64_t c = 0;
      if (!(ss >> id >> c) || c < 0) fail();
      if (!vertices.emplace(id, static_cast<Color>(c)).second) {
        throw std::invalid_argument("graph file: duplicate vertex " + std::to_string(id));
      }
    } else if (tag == "e") {
      std::int64_t a = 0;
      std::int64_t b = 0;
      if (!(ss >> a >> b)) fail();
      raw_edges.emplace_back(a, b);
    } else {
      fail();
    }
  }
  std::vector<std::int64_t> ids;
  std::vector<Color> colors;
  std::map<std::int64_t, PointId> index;
  for (auto [id, c] : vertices) {
    index.emplace(id, PointId(ids.size()));
    ids.push_back(id);
    colors.push_back(c);
  }
  std::vector<std::pair<PointId, PointId>> edges;
  edges.reserve(raw_edges.size());
  for (auto [a, b] : raw_edges) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      throw std::invalid_argument("graph file: edge references undeclared vertex");
    }
    edges.emplace_back(ia->second, ib->second);
  }
  auto g = ColoredGraph::from_edges(ids.size(), edges, std::move(colors));
  g.set_external_ids(std::move(ids));
  return g;
}

void write_graph(std::ostream& out, const ColoredGraph& g) {
  for (PointId v = 0; v < g.size(); ++v) out << "v " << g.external_id(v) << ' ' << g.color(v) << '\n';
  for (auto [a, b] : g.edges()) out << "e " << g.external_id(a) << ' ' << g.external_id(b) << '\n';
}

// ---------------------------------------------------------------------------
// BFS scratch

namespace {

struct Scratch {
  std::vector<std::uint64_t> stamp;
  std::vector<std::uint32_t> dist;
  std::vector<PointId> order;
  std::uint64_t generation = 0;

  void prepare(std::size_t n) {
    if (stamp.size() < n) {
      stamp.resize(n, 0);
      dist.resize(n, 0);
    }
    ++generation;
    order.clear();
  }
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

const std::vector<PointId>& Bfs::run(std::span<const PointId> sources, std::uint32_t r) {
  auto& s = scratch();
  s.prepare(g_.size());
  for (PointId v : sources) {
    if (s.stamp[v] == s.generation) continue;
    s.stamp[v] = s.generation;
    s.dist[v] = 0;
    s.order.push_back(v);
  }
  for (std::size_t head = 0; head < s.order.size(); ++head) {
    const PointId v = s.order[head];
    const auto dv = s.dist[v];
    if (dv >= r) continue;
    for (PointId w : g_.neighbors(v)) {
      if (s.stamp[w] == s.generation) continue;
      s.stamp[w] = s.generation;
      s.dist[w] = dv + 1;
      s.order.push_back(w);
    }
  }
  return s.order;
}

std::int64_t Bfs::dist(PointId v) const {
  const auto& s = scratch();
  if (v >= s.stamp.size() || s.stamp[v] != s.generation) return -1;
  return s.dist[v];
}

std::int64_t Bfs::distance(PointId a, PointId b, std::uint32_t cap) {
  if (a == b) return 0;
  auto& s = scratch();
  s.prepare(g_.size());
  s.stamp[a] = s.generation;
  s.dist[a] = 0;
  s.order.push_back(a);
  for (std::size_t head = 0; head < s.order.size(); ++head) {
    const PointId v = s.order[head];
    const auto dv = s.dist[v];
    if (dv >= cap) break;
    for (PointId w : g_.neighbors(v)) {
      if (s.stamp[w] == s.generation) continue;
      if (w == b) return dv + 1;
      s.stamp[w] = s.generation;
      s.dist[w] = dv + 1;
      s.order.push_back(w);
    }
  }
  return -1;
}

bool is_connected(const ColoredGraph& g) {
  if (g.size() == 0) return true;
  Bfs bfs(g);
  return bfs.run(PointId{0}, kUnbounded).size() == g.size();
}

// ---------------------------------------------------------------------------
// GraphMetric

namespace {
std::uint32_t hop_cap(double r) {
  if (!(r >= 0)) return 0;
  if (r >= 4.0e9) return kUnbounded - 1;
  return static_cast<std::uint32_t>(std::floor(r));
}
}  // namespace

double GraphMetric::distance(PointId a, PointId b) const {
  Bfs bfs(g_);
  const auto d = bfs.distance(a, b, kUnbounded);
  return d < 0 ? metric::kInfinity : static_cast<double>(d);
}

std::vector<PointId> GraphMetric::within(PointId x, double r) const {
  if (r < 0) return {};
  Bfs bfs(g_);
  std::vector<PointId> out = bfs.run(x, hop_cap(r));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> GraphMetric::distances_to_set(std::span<const PointId> q) const {
  std::vector<double> out(g_.size(), metric::kInfinity);
  if (q.empty()) return out;
  Bfs bfs(g_);
  for (PointId v : bfs.run(q, kUnbounded)) out[v] = static_cast<double>(bfs.dist(v));
  return out;
}

}  // namespace repnet
