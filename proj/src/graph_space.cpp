#include "repnet/graph_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "repnet/parallel.hpp"

namespace repnet::gspace {

namespace {
constexpr std::uint32_t kUnmapped = 0xffffffffu;
}

std::size_t PointedBall::local_index(PointId v) const {
  auto it = std::lower_bound(members.begin(), members.end(), v);
  if (it == members.end() || *it != v) return kNpos;
  return static_cast<std::size_t>(it - members.begin());
}

PointedBall hop_ball(const ColoredGraph& g, PointId x, std::uint32_t r) {
  if (x >= g.size()) throw std::invalid_argument("hop_ball: vertex out of range");
  PointedBall b;
  b.host = &g;
  b.center = x;
  b.radius = r;
  Bfs bfs(g);
  b.members = bfs.run(x, r);
  std::sort(b.members.begin(), b.members.end());
  const std::size_t n = b.members.size();
  b.level.resize(n);
  b.color.resize(n);
  b.adj_start.assign(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const PointId v = b.members[k];
    b.level[k] = static_cast<std::uint32_t>(bfs.dist(v));
    b.color[k] = g.color(v);
    if (v == x) b.center_index = static_cast<std::uint32_t>(k);
  }
  // Host-indexed slot table, reset after use so it stays all-unmapped.
  thread_local std::vector<std::uint32_t> slot;
  if (slot.size() < g.size()) slot.resize(g.size(), kUnmapped);
  for (std::size_t k = 0; k < n; ++k) slot[b.members[k]] = static_cast<std::uint32_t>(k);
  for (std::size_t k = 0; k < n; ++k) {
    const auto first = b.adj_list.size();
    for (PointId w : g.neighbors(b.members[k])) {
      if (slot[w] != kUnmapped) b.adj_list.push_back(slot[w]);
    }
    std::sort(b.adj_list.begin() + static_cast<std::ptrdiff_t>(first), b.adj_list.end());
    b.adj_start[k + 1] = static_cast<std::uint32_t>(b.adj_list.size());
  }
  for (PointId v : b.members) slot[v] = kUnmapped;
  return b;
}

BallSignature signature(const PointedBall& b) {
  BallSignature s;
  s.radius = b.radius;
  s.edges = b.edge_count();
  // Level-major order: bucket by level, then sort each sphere.
  std::vector<std::uint32_t> start(b.radius + 2, 0);
  for (auto l : b.level) ++start[l + 1];
  for (std::uint32_t l = 0; l <= b.radius; ++l) start[l + 1] += start[l];
  s.profile.resize(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    // level and degree are tiny next to 2^20; colors get the top bits.
    s.profile[start[b.level[k]]++] = (std::uint64_t(b.color[k]) << 40) |
                                     (std::uint64_t(b.level[k]) << 20) | std::uint64_t(b.adj(k).size());
  }
  std::uint32_t first = 0;
  for (std::uint32_t l = 0; l <= b.radius; ++l) {
    std::sort(s.profile.begin() + first, s.profile.begin() + start[l]);
    first = start[l];
  }
  return s;
}

namespace {

// Joint colour refinement of two balls until stable. Returns false when the class
// histograms already differ, which rules out an isomorphism. Each round
// relabels by (label, sorted neighbour labels) through a hash table shared by
// both balls, so equal keys get equal labels on either side.
bool refine(const PointedBall& b1, const PointedBall& b2, std::vector<std::uint32_t>& cell1,
            std::vector<std::uint32_t>& cell2, std::uint32_t& classes) {
  const std::size_t n = b1.size();
  const PointedBall* side[2] = {&b1, &b2};
  std::vector<std::uint64_t> flat;
  std::vector<std::size_t> off(2 * n + 1, 0);
  flat.reserve(8 * n);
  for (int s = 0; s < 2; ++s) {
    const auto& b = *side[s];
    for (std::size_t k = 0; k < n; ++k) {
      off[s * n + k] = flat.size();
      flat.push_back(k == b.center_index);
      flat.push_back(b.level[k]);
      flat.push_back(b.color[k]);
      flat.push_back(b.adj(k).size());
    }
  }
  off[2 * n] = flat.size();
  auto key_equal = [&](std::uint32_t a, std::uint32_t b) {
    return std::equal(flat.begin() + off[a], flat.begin() + off[a + 1], flat.begin() + off[b],
                      flat.begin() + off[b + 1]);
  };
  auto key_hash = [&](std::uint32_t a) {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::size_t q = off[a]; q < off[a + 1]; ++q) {
      h ^= flat[q] + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h *= 0xff51afd7ed558ccdull;
    }
    return h;
  };
  // Open-addressing table from key to label; one representative per label.
  std::vector<std::uint32_t> label(2 * n);
  std::vector<std::uint32_t> rep;
  std::size_t cap = 1;
  while (cap < 4 * n) cap <<= 1;
  std::vector<std::uint32_t> table(cap);
  std::uint32_t prev_classes = 0;
  while (true) {
    std::fill(table.begin(), table.end(), kUnmapped);
    rep.clear();
    for (std::uint32_t a = 0; a < 2 * n; ++a) {
      std::size_t h = key_hash(a) & (cap - 1);
      while (true) {
        const auto lab = table[h];
        if (lab == kUnmapped) {
          table[h] = static_cast<std::uint32_t>(rep.size());
          label[a] = static_cast<std::uint32_t>(rep.size());
          rep.push_back(a);
          break;
        }
        if (key_equal(rep[lab], a)) {
          label[a] = lab;
          break;
        }
        h = (h + 1) & (cap - 1);
      }
    }
    classes = static_cast<std::uint32_t>(rep.size());
    std::vector<std::int64_t> balance(classes, 0);
    for (std::size_t k = 0; k < n; ++k) {
      ++balance[label[k]];
      --balance[label[n + k]];
    }
    for (auto v : balance) {
      if (v != 0) return false;
    }
    if (classes == prev_classes) break;
    prev_classes = classes;
    flat.clear();
    for (int s = 0; s < 2; ++s) {
      const auto& b = *side[s];
      for (std::size_t k = 0; k < n; ++k) {
        off[s * n + k] = flat.size();
        flat.push_back(label[s * n + k]);
        const auto first = flat.size();
        for (auto w : b.adj(k)) flat.push_back(label[s * n + w]);
        std::sort(flat.begin() + static_cast<std::ptrdiff_t>(first), flat.end());
      }
    }
    off[2 * n] = flat.size();
  }
  cell1.assign(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(n));
  cell2.assign(label.begin() + static_cast<std::ptrdiff_t>(n), label.end());
  return true;
}

// Partition by (level, color, induced degree, is_center), shared by both
// balls. Buckets by level first so each sort only sees one sphere. Returns
// false when some class has different sizes on the two sides.
bool initial_partition(const PointedBall& b1, const PointedBall& b2, std::vector<std::uint32_t>& cell1,
                       std::vector<std::uint32_t>& cell2, std::uint32_t& classes) {
  const std::size_t n = b1.size();
  const PointedBall* side[2] = {&b1, &b2};
  const std::uint32_t levels = b1.radius + 1;
  std::vector<std::uint32_t> start(levels + 1, 0);
  for (int s = 0; s < 2; ++s) {
    for (auto l : side[s]->level) {
      if (l >= levels) return false;
      ++start[l + 1];
    }
  }
  for (std::uint32_t l = 0; l < levels; ++l) start[l + 1] += start[l];
  // (key, side * n + local index) grouped by level.
  std::vector<std::pair<std::uint64_t, std::uint32_t>> items(2 * n);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (int s = 0; s < 2; ++s) {
      const auto& b = *side[s];
      for (std::uint32_t k = 0; k < n; ++k) {
        const std::uint64_t key = (std::uint64_t(b.color[k]) << 32) |
                                  (std::uint64_t(b.adj(k).size()) << 1) | (k == b.center_index ? 1u : 0u);
        items[fill[b.level[k]]++] = {key, static_cast<std::uint32_t>(s * n + k)};
      }
    }
  }
  cell1.assign(n, 0);
  cell2.assign(n, 0);
  classes = 0;
  for (std::uint32_t l = 0; l < levels; ++l) {
    const auto first = items.begin() + start[l];
    const auto last = items.begin() + start[l + 1];
    std::sort(first, last);
    for (auto it = first; it != last;) {
      auto hi = it;
      std::int64_t balance = 0;
      while (hi != last && hi->first == it->first) {
        const std::uint32_t a = hi->second;
        if (a < n) {
          cell1[a] = classes;
          ++balance;
        } else {
          cell2[a - n] = classes;
          --balance;
        }
        ++hi;
      }
      if (balance != 0) return false;
      ++classes;
      it = hi;
    }
  }
  return true;
}

bool local_adjacent(const PointedBall& b, std::uint32_t u, std::uint32_t v) {
  const auto nb = b.adj(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

}  // namespace

namespace {

enum class SearchResult { found, none, budget };

// Backtracking over sources in ascending local index with targets of the same
// cell in ascending order, so the first complete map is the lexicographically
// smallest one. `budget` caps candidate tests (0 means unlimited).
SearchResult search(const PointedBall& b1, const PointedBall& b2,
                    const std::vector<std::uint32_t>& cell1, const std::vector<std::uint32_t>& cell2,
                    std::uint32_t classes, std::size_t budget, std::vector<std::uint32_t>& map) {
  const std::size_t n = b1.size();
  // Targets of each class in ascending local index, stored as CSR.
  std::vector<std::uint32_t> cls_start(classes + 1, 0);
  for (std::uint32_t t = 0; t < n; ++t) ++cls_start[cell2[t] + 1];
  for (std::uint32_t c = 0; c < classes; ++c) cls_start[c + 1] += cls_start[c];
  std::vector<std::uint32_t> targets(n);
  {
    std::vector<std::uint32_t> fill(cls_start.begin(), cls_start.end() - 1);
    for (std::uint32_t t = 0; t < n; ++t) targets[fill[cell2[t]]++] = t;
  }

  map.assign(n, kUnmapped);
  std::vector<char> used(n, 0);
  std::vector<std::uint32_t> pos(n + 1, 0);
  std::size_t tests = 0;

  auto feasible = [&](std::uint32_t s, std::uint32_t t) {
    if (used[t]) return false;
    std::size_t mapped_nbrs = 0;
    for (auto u : b1.adj(s)) {
      if (map[u] == kUnmapped) continue;
      ++mapped_nbrs;
      if (!local_adjacent(b2, t, map[u])) return false;
    }
    std::size_t used_nbrs = 0;
    for (auto w : b2.adj(t)) used_nbrs += used[w] ? 1 : 0;
    return used_nbrs == mapped_nbrs;
  };

  std::ptrdiff_t k = 0;
  while (k >= 0) {
    if (static_cast<std::size_t>(k) == n) return SearchResult::found;
    const auto s = static_cast<std::uint32_t>(k);
    const std::uint32_t* list = targets.data() + cls_start[cell1[s]];
    const std::size_t list_size = cls_start[cell1[s] + 1] - cls_start[cell1[s]];
    auto& p = pos[static_cast<std::size_t>(k)];
    bool advanced = false;
    while (p < list_size) {
      if (budget != 0 && ++tests > budget) return SearchResult::budget;
      const auto t = list[p];
      if (feasible(s, t)) {
        map[s] = t;
        used[t] = 1;
        advanced = true;
        break;
      }
      ++p;
    }
    if (advanced) {
      ++k;
      pos[static_cast<std::size_t>(k)] = 0;
      continue;
    }
    p = 0;
    --k;
    if (k >= 0) {
      const auto prev = static_cast<std::uint32_t>(k);
      used[map[prev]] = 0;
      map[prev] = kUnmapped;
      ++pos[static_cast<std::size_t>(k)];
    }
  }
  return SearchResult::none;
}

}  // namespace

std::optional<BallIsomorphism> ball_isomorphism(const PointedBall& b1, const PointedBall& b2) {
  if (b1.radius != b2.radius) throw std::invalid_argument("ball_isomorphism: radius mismatch");
  const std::size_t n = b1.size();
  if (n != b2.size() || b1.edge_count() != b2.edge_count()) return std::nullopt;
  if (b1.color[b1.center_index] != b2.color[b2.center_index]) return std::nullopt;

  std::vector<std::uint32_t> cell1;
  std::vector<std::uint32_t> cell2;
  std::vector<std::uint32_t> map;
  std::uint32_t classes = 0;
  // A cheap pass on the initial partition settles most balls; full
  // refinement only prunes, so the witness found afterwards is the same.
  if (!initial_partition(b1, b2, cell1, cell2, classes)) return std::nullopt;
  auto result = search(b1, b2, cell1, cell2, classes, 4 * n + 1024, map);
  if (result == SearchResult::budget) {
    if (!refine(b1, b2, cell1, cell2, classes)) return std::nullopt;
    result = search(b1, b2, cell1, cell2, classes, 0, map);
  }
  if (result == SearchResult::none) return std::nullopt;
  BallIsomorphism iso;
  iso.image.resize(n);
  for (std::size_t s = 0; s < n; ++s) iso.image[s] = b2.members[map[s]];
  return iso;
}

bool is_ball_isomorphism(const PointedBall& b1, const PointedBall& b2,
                         std::span<const PointId> image) {
  const std::size_t n = b1.size();
  if (b1.radius != b2.radius || n != b2.size() || image.size() != n) return false;
  std::vector<std::size_t> local(n);
  std::vector<char> hit(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto li = b2.local_index(image[k]);
    if (li == kNpos || hit[li]) return false;
    hit[li] = 1;
    local[k] = li;
    if (b1.color[k] != b2.color[li] || b1.level[k] != b2.level[li]) return false;
  }
  if (image[b1.center_index] != b2.center) return false;
  if (b1.edge_count() != b2.edge_count()) return false;
  for (std::size_t a = 0; a < n; ++a) {
    for (auto b : b1.adj(a)) {
      if (!local_adjacent(b2, static_cast<std::uint32_t>(local[a]), static_cast<std::uint32_t>(local[b]))) {
        return false;
      }
    }
  }
  return true;
}

GStarDistance gstar_distance(const ColoredGraph& g1, PointId x1, const ColoredGraph& g2,
                             PointId x2, std::uint32_t r_max) {
  GStarDistance out;
  for (std::uint32_t r = 0; r <= r_max; ++r) {
    const auto b1 = hop_ball(g1, x1, r);
    const auto b2 = hop_ball(g2, x2, r);
    if (!ball_isomorphism(b1, b2)) break;
    out.r_star = static_cast<int>(r);
  }
  if (out.r_star < 0) {
    out.value = 2.0;
  } else if (static_cast<std::uint32_t>(out.r_star) == r_max) {
    out.saturated = true;
    out.value = 0.0;
  } else {
    out.value = std::ldexp(1.0, -out.r_star);
  }
  return out;
}

PpqiReport ppqi_check(const ColoredGraph& g1, PointId x1, const ColoredGraph& g2, PointId x2,
                      std::uint32_t r, double lambda,
                      std::span<const std::pair<PointId, PointId>> map) {
  if (!(lambda >= 1 && lambda < 2)) throw std::invalid_argument("ppqi_check: lambda must lie in [1, 2)");
  const auto ball = hop_ball(g1, x1, r);
  const std::size_t n = ball.size();
  std::vector<PointId> image(n, 0);
  std::vector<char> seen(n, 0);
  for (auto [s, t] : map) {
    const auto li = ball.local_index(s);
    if (li == kNpos || seen[li]) throw std::invalid_argument("ppqi_check: domain is not D(x1, R)");
    if (t >= g2.size()) throw std::invalid_argument("ppqi_check: target vertex out of range");
    seen[li] = 1;
    image[li] = t;
  }
  if (map.size() != n) throw std::invalid_argument("ppqi_check: domain is not D(x1, R)");

  PpqiReport rep;
  rep.qi_radius = static_cast<double>(r) / lambda;
  rep.color_preserving = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (g1.color(ball.members[k]) != g2.color(image[k])) rep.color_preserving = false;
  }

  bool pointed = image[ball.center_index] == x2;
  bool bilip = true;
  const auto cap2 = static_cast<std::uint32_t>(std::floor(2.0 * r * lambda)) + 1;
  Bfs bfs1(g1);
  Bfs bfs2(g2);
  std::vector<std::int64_t> d1(n);
  for (std::size_t a = 0; a < n && bilip; ++a) {
    bfs1.run(ball.members[a], 2 * r);
    for (std::size_t b = 0; b < n; ++b) d1[b] = bfs1.dist(ball.members[b]);
    bfs2.run(image[a], cap2);
    for (std::size_t b = 0; b < n; ++b) {
      const double dx = static_cast<double>(d1[b]);
      const auto raw = bfs2.dist(image[b]);
      const double dy = raw < 0 ? metric::kInfinity : static_cast<double>(raw);
      if (dy > lambda * dx || dx > lambda * dy) {
        bilip = false;
        rep.failure = "bilipschitz bound fails for " + std::to_string(ball.members[a]) + ", " +
                      std::to_string(ball.members[b]);
        break;
      }
    }
  }
  if (!pointed && rep.failure.empty()) rep.failure = "center not mapped to x2";
  rep.accepted = pointed && bilip;

  rep.isomorphism_onto_image = true;
  for (std::size_t a = 0; a < n && rep.isomorphism_onto_image; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool e1 = g1.adjacent(ball.members[a], ball.members[b]);
      const bool e2 = image[a] != image[b] && g2.adjacent(image[a], image[b]);
      if (e1 != e2 || image[a] == image[b]) {
        rep.isomorphism_onto_image = false;
        break;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Windows and repetitivity

Window Window::whole(const ColoredGraph& g) {
  Window w;
  w.vertices = metric::all_ids(g.size());
  return w;
}

bool Window::ball_exact(const ColoredGraph& g, PointId x, std::uint32_t r) const {
  if (trusted.empty()) return true;
  if (r == 0) return true;
  Bfs bfs(g);
  for (PointId v : bfs.run(x, r - 1)) {
    if (!trusted[v]) return false;
  }
  return true;
}

std::vector<PointId> omega_set(const ColoredGraph& g, PointId p, std::uint32_t r,
                               const Window& window) {
  if (!window.ball_exact(g, p, r)) throw std::invalid_argument("omega_set: ball around p is truncated");
  const auto ref = hop_ball(g, p, r);
  const auto ref_sig = signature(ref);
  const std::size_t n = window.vertices.size();
  std::vector<char> member(n, 0);
  std::vector<char> truncated(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const PointId x = window.vertices[k];
      if (!window.ball_exact(g, x, r)) {
        truncated[k] = 1;
        continue;
      }
      if (x == p) {
        member[k] = 1;
        continue;
      }
      const auto b = hop_ball(g, x, r);
      if (signature(b) != ref_sig) continue;
      member[k] = ball_isomorphism(ref, b).has_value();
    }
  });
  std::vector<PointId> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (truncated[k]) {
      throw std::invalid_argument("omega_set: window vertex " + std::to_string(window.vertices[k]) +
                                  " has a truncated ball");
    }
    if (member[k]) out.push_back(window.vertices[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

RepetitivityReport repetitivity_radius(const ColoredGraph& g, PointId p, std::uint32_t r,
                                       const Window& window) {
  RepetitivityReport rep;
  const auto omega = omega_set(g, p, r, window);
  rep.omega_size = omega.size();
  if (omega.empty()) {
    rep.radius = metric::kInfinity;
    return rep;
  }
  rep.repetitive = true;
  const auto dist = GraphMetric(g).distances_to_set(omega);
  for (PointId y : window.vertices) rep.radius = std::max(rep.radius, dist[y]);
  return rep;
}

std::size_t PersistenceTable::saturated_pairs() const {
  std::size_t count = 0;
  const std::size_t n = vertices.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && at(a, b) == r_max + 1) ++count;
    }
  }
  return count;
}

std::uint32_t PersistenceTable::max_off_diagonal() const {
  std::uint32_t best = 0;
  const std::size_t n = vertices.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) best = std::max(best, at(a, b));
    }
  }
  return best;
}

double PersistenceTable::mean_off_diagonal() const {
  const std::size_t n = vertices.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b) sum += at(a, b);
    }
  }
  return sum / static_cast<double>(n * (n - 1));
}

PersistenceTable persistence_depth(const ColoredGraph& g, const Window& window, std::uint32_t r_max) {
  PersistenceTable t;
  t.vertices = window.vertices;
  t.r_max = r_max;
  const std::size_t n = t.vertices.size();
  for (PointId v : t.vertices) {
    if (!window.ball_exact(g, v, r_max)) {
      throw std::invalid_argument("persistence_depth: window vertex " + std::to_string(v) +
                                  " has a truncated ball");
    }
  }
  // balls[r][k] for every window vertex k.
  std::vector<std::vector<PointedBall>> balls(r_max + 1, std::vector<PointedBall>(n));
  std::vector<std::vector<BallSignature>> sigs(r_max + 1, std::vector<BallSignature>(n));
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      for (std::uint32_t r = 0; r <= r_max; ++r) {
        balls[r][k] = hop_ball(g, t.vertices[k], r);
        sigs[r][k] = signature(balls[r][k]);
      }
    }
  });
  t.depth.assign(n * n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      t.depth[a * n + a] = r_max + 1;
      for (std::size_t b = a + 1; b < n; ++b) {
        std::uint32_t agree = 0;
        for (std::uint32_t r = 0; r <= r_max; ++r) {
          if (sigs[r][a] != sigs[r][b] || !ball_isomorphism(balls[r][a], balls[r][b])) break;
          ++agree;
        }
        t.depth[a * n + b] = agree;
      }
    }
  });
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) t.depth[a * n + b] = t.depth[b * n + a];
  }
  return t;
}

}  // namespace repnet::gspace
