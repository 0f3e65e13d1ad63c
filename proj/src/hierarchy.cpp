#include "repnet/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "repnet/common.hpp"
#include "repnet/parallel.hpp"

namespace repnet::hier {

using gspace::kNpos;
using gspace::PointedBall;

// ---------------------------------------------------------------------------
// OmegaOracle

OmegaOracle::OmegaOracle(const ColoredGraph& g, PointId p, std::uint32_t r,
                         const gspace::Window* window)
    : g_(g), window_(window), base_(gspace::hop_ball(g, p, r)), base_sig_(gspace::signature(base_)) {}

bool OmegaOracle::contains(PointId x) {
  auto it = cache_.find(x);
  if (it != cache_.end()) return it->second.has_value();
  if (window_ && !window_->ball_exact(g_, x, base_.radius)) {
    throw ConstructionError("omega oracle: ball around " + std::to_string(x) +
                            " leaves the trusted window");
  }
  std::optional<std::vector<PointId>> entry;
  const auto b = gspace::hop_ball(g_, x, base_.radius);
  if (gspace::signature(b) == base_sig_) {
    if (auto iso = gspace::ball_isomorphism(base_, b)) entry = std::move(iso->image);
  }
  return cache_.emplace(x, std::move(entry)).first->second.has_value();
}

const std::vector<PointId>& OmegaOracle::witness(PointId x) {
  if (!contains(x)) throw std::logic_error("omega oracle: no witness for a non-member");
  return *cache_.at(x);
}

// ---------------------------------------------------------------------------
// HierarchyLevel

std::size_t HierarchyLevel::index_of(PointId x) const {
  auto it = std::lower_bound(members.begin(), members.end(), x);
  if (it == members.end() || *it != x) return kNpos;
  return static_cast<std::size_t>(it - members.begin());
}

const std::vector<PointId>& HierarchyLevel::map_of(PointId x) const {
  const auto k = index_of(x);
  if (k == kNpos) {
    throw std::out_of_range("level (" + std::to_string(i) + "," + std::to_string(j) +
                            ") has no member " + std::to_string(x));
  }
  return maps[k];
}

// ---------------------------------------------------------------------------
// Hierarchy

Hierarchy::Hierarchy(const ColoredGraph& g, sched::Schedule schedule, HierarchyOptions opts)
    : g_(g), schedule_(std::move(schedule)), opts_(std::move(opts)) {
  if (opts_.p >= g.size()) throw ConfigError("hierarchy: base point out of range");
  if (schedule_.depth() == 0) throw ConfigError("hierarchy: empty schedule");
}

std::uint32_t Hierarchy::radius(std::size_t i) const {
  return static_cast<std::uint32_t>(std::floor(schedule_.r.at(i)));
}

std::uint32_t Hierarchy::sep(std::size_t i) const {
  return static_cast<std::uint32_t>(std::ceil(schedule_.s.at(i)));
}

std::uint32_t Hierarchy::margin(std::size_t i, std::size_t j) const {
  const double m = schedule_.r.at(j) - schedule_.t.at(i);
  if (m < 0) throw ConstructionError("hierarchy: r_j - t_i is negative");
  return static_cast<std::uint32_t>(std::floor(m));
}

const HierarchyLevel& Hierarchy::level(std::size_t i, std::size_t j) const {
  auto it = levels_.find({i, j});
  if (it == levels_.end()) {
    throw std::out_of_range("hierarchy: level (" + std::to_string(i) + "," + std::to_string(j) +
                            ") not built");
  }
  return it->second;
}

HierarchyLevel& Hierarchy::mutable_level(std::size_t i, std::size_t j) {
  return const_cast<HierarchyLevel&>(static_cast<const Hierarchy&>(*this).level(i, j));
}

const PointedBall& Hierarchy::base_ball(std::size_t i) const { return balls_.at(i); }

OmegaOracle& Hierarchy::omega(std::size_t i) { return *omega_.at(i); }

PointId Hierarchy::apply(std::size_t l, std::size_t j, PointId z, PointId v) const {
  const auto k = base_ball(l).local_index(v);
  if (k == kNpos) {
    throw std::out_of_range("hierarchy: vertex " + std::to_string(v) + " outside D(p, r_" +
                            std::to_string(l) + ")");
  }
  return level(l, j).map_of(z)[k];
}

std::vector<PointId> Hierarchy::image_of_level(std::size_t l, std::size_t j, PointId z,
                                               std::size_t i) const {
  std::vector<PointId> out;
  for (PointId x : level(i, l).members) out.push_back(apply(l, j, z, x));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PointId> Hierarchy::compose(std::size_t l, std::size_t j, PointId z,
                                        const std::vector<PointId>& inner, std::size_t) const {
  std::vector<PointId> out(inner.size());
  for (std::size_t k = 0; k < inner.size(); ++k) out[k] = apply(l, j, z, inner[k]);
  return out;
}

void Hierarchy::build(std::size_t top) {
  if (top >= schedule_.depth()) {
    throw ConstructionError("hierarchy: level " + std::to_string(top) +
                            " exceeds the schedule depth " + std::to_string(schedule_.depth()));
  }
  if (!opts_.window.ball_exact(g_, opts_.p, radius(top))) {
    throw ConstructionError("hierarchy: D(p, r_" + std::to_string(top) +
                            ") leaves the trusted window; deeper levels are not materialized");
  }
  top_ = top;
  levels_.clear();
  balls_.clear();
  omega_.clear();
  const gspace::Window* window = opts_.window.trusted.empty() ? nullptr : &opts_.window;
  for (std::size_t i = 0; i <= top; ++i) {
    balls_.push_back(gspace::hop_ball(g_, opts_.p, radius(i)));
    omega_.push_back(std::make_unique<OmegaOracle>(g_, opts_.p, radius(i), window));
    HierarchyLevel base;
    base.i = base.j = i;
    base.members = {opts_.p};
    base.hat = {opts_.p};
    base.maps = {balls_.back().members};
    base.origin = {Origin{}};
    levels_.emplace(std::make_pair(i, i), std::move(base));
  }
  for (std::size_t j = 1; j <= top; ++j) {
    for (std::size_t i = j; i-- > 0;) build_level(i, j);
  }
}

void compute_poset(const Hierarchy& h, std::size_t i, std::size_t j,
                   std::vector<PosetElement>& poset,
                   std::vector<std::pair<std::size_t, std::size_t>>& less,
                   std::vector<std::size_t>& maximal) {
  poset.clear();
  less.clear();
  maximal.clear();
  for (std::size_t l = i + 1; l < j; ++l) {
    for (PointId z : h.level(l, j).members) poset.push_back({l, z});
  }
  std::sort(poset.begin(), poset.end());
  std::vector<char> has_upper(poset.size(), 0);
  for (std::size_t b = 0; b < poset.size(); ++b) {
    const auto [lb, zb] = poset[b];
    for (std::size_t l = i + 1; l < lb; ++l) {
      const auto img = h.image_of_level(lb, j, zb, l);
      for (std::size_t a = 0; a < poset.size(); ++a) {
        if (poset[a].l != l) continue;
        if (std::binary_search(img.begin(), img.end(), poset[a].z)) {
          less.emplace_back(a, b);
          has_upper[a] = 1;
        }
      }
    }
  }
  std::sort(less.begin(), less.end());
  for (std::size_t a = 0; a < poset.size(); ++a) {
    if (!has_upper[a]) maximal.push_back(a);
  }
}

namespace {

bool antisymmetric(const std::vector<std::pair<std::size_t, std::size_t>>& less) {
  for (auto [a, b] : less) {
    if (a == b) return false;
    if (std::binary_search(less.begin(), less.end(), std::make_pair(b, a))) return false;
  }
  return true;
}

// Marks every vertex within the closed radius of any source.
void mark_ball(const ColoredGraph& g, PointId center, std::uint32_t r, std::vector<char>& mark) {
  Bfs bfs(g);
  for (PointId v : bfs.run(center, r)) mark[v] = 1;
}

// (distance, id) order of D(p, r).
std::vector<PointId> ball_order(const ColoredGraph& g, PointId p, std::uint32_t r) {
  Bfs bfs(g);
  std::vector<PointId> v = bfs.run(p, r);
  std::vector<std::pair<std::int64_t, PointId>> keyed;
  keyed.reserve(v.size());
  for (PointId x : v) keyed.emplace_back(bfs.dist(x), x);
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = keyed[k].second;
  return v;
}

}  // namespace

void Hierarchy::build_level(std::size_t i, std::size_t j) {
  HierarchyLevel lv;
  lv.i = i;
  lv.j = j;
  compute_poset(*this, i, j, lv.poset, lv.less, lv.maximal);
  if (!antisymmetric(lv.less)) {
    throw ConstructionError("hierarchy: poset relation on level (" + std::to_string(i) + "," +
                            std::to_string(j) + ") is not antisymmetric; schedule too tight");
  }

  const std::size_t n = g_.size();
  std::vector<char> excluded(n, 0);
  std::map<PointId, std::pair<std::vector<PointId>, Origin>> tilde;
  for (std::size_t a : lv.maximal) {
    const auto [l, z] = lv.poset[a];
    mark_ball(g_, z, static_cast<std::uint32_t>(std::floor(schedule_.r[l] + schedule_.s[i])), excluded);
    for (PointId xp : level(i, l).members) {
      const PointId x = apply(l, j, z, xp);
      auto map = compose(l, j, z, level(i, l).map_of(xp), i);
      Origin o;
      o.fresh = false;
      o.l = l;
      o.z = z;
      o.x_prime = xp;
      auto [it, inserted] = tilde.emplace(x, std::make_pair(std::move(map), o));
      if (!inserted && it->second.first != compose(l, j, z, level(i, l).map_of(xp), i)) {
        throw ConstructionError("hierarchy: two maximal elements propagate different maps to " +
                                std::to_string(x));
      }
    }
  }

  // Fresh centers: greedy over D(p, r_j - t_i) in (distance, id) order.
  std::vector<char> blocked(n, 0);
  auto& oracle = omega(i);
  const std::uint32_t block_r = sep(i) - 1;
  std::map<PointId, std::vector<PointId>> hat;
  for (PointId c : ball_order(g_, opts_.p, margin(i, j))) {
    if (excluded[c] || blocked[c]) continue;
    if (!oracle.contains(c)) continue;
    std::vector<PointId> map;
    std::optional<std::vector<PointId>> given;
    if (opts_.prescribed) given = opts_.prescribed(i, c);
    if (given) {
      if (!gspace::is_ball_isomorphism(base_ball(i), gspace::hop_ball(g_, c, radius(i)), *given)) {
        throw ConstructionError("hierarchy: prescribed map at " + std::to_string(c) +
                                " is not a pointed ball isomorphism");
      }
      map = *given;
    } else {
      map = oracle.witness(c);
    }
    hat.emplace(c, std::move(map));
    mark_ball(g_, c, block_r, blocked);
  }

  for (const auto& [x, entry] : hat) {
    if (tilde.count(x)) {
      throw ConstructionError("hierarchy: fresh center " + std::to_string(x) +
                              " collides with a propagated one");
    }
    lv.hat.push_back(x);
  }
  for (const auto& [x, entry] : tilde) lv.tilde.push_back(x);
  std::map<PointId, std::pair<std::vector<PointId>, Origin>> all;
  for (auto& [x, m] : hat) all.emplace(x, std::make_pair(std::move(m), Origin{}));
  for (auto& [x, entry] : tilde) all.emplace(x, std::move(entry));
  for (auto& [x, entry] : all) {
    lv.members.push_back(x);
    lv.maps.push_back(std::move(entry.first));
    lv.origin.push_back(entry.second);
  }
  levels_[{i, j}] = std::move(lv);
}

// ---------------------------------------------------------------------------
// Verification

bool LevelReport::all_ok() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.ok; });
}

const ClauseResult& LevelReport::clause(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("no clause " + name);
}

namespace {

constexpr std::size_t kMaxWitnesses = 8;

void fail(ClauseResult& c, PointId w, const std::string& detail = {}) {
  c.ok = false;
  if (c.witnesses.size() < kMaxWitnesses) c.witnesses.push_back(w);
  if (c.detail.empty() && !detail.empty()) c.detail = detail;
}

}  // namespace

LevelReport verify_level(const Hierarchy& h, std::size_t i, std::size_t j) {
  const auto& g = h.graph();
  const auto& sc = h.schedule();
  const auto& lv = h.level(i, j);
  const auto& ball_i = h.base_ball(i);
  const PointId p = h.p();
  const std::size_t n = g.size();

  LevelReport rep;
  rep.i = i;
  rep.j = j;
  auto clause = [&](const char* name) -> ClauseResult& {
    rep.clauses.push_back(ClauseResult{name, true, {}, {}});
    return rep.clauses.back();
  };

  // Stored maps are pointed colored isomorphisms.
  std::vector<char> map_ok(lv.members.size(), 0);
  parallel_for(lv.members.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto target = gspace::hop_ball(g, lv.members[k], h.radius(i));
      map_ok[k] = gspace::is_ball_isomorphism(ball_i, target, lv.maps[k]);
    }
  });
  {
    auto& c = clause("maps_isomorphic");
    for (std::size_t k = 0; k < lv.members.size(); ++k) {
      if (!map_ok[k]) fail(c, lv.members[k]);
    }
  }

  {
    auto& c = clause("disjoint");
    std::vector<PointId> both;
    std::set_intersection(lv.hat.begin(), lv.hat.end(), lv.tilde.begin(), lv.tilde.end(),
                          std::back_inserter(both));
    for (PointId x : both) fail(c, x, "point in both parts");
    std::vector<PointId> uni;
    std::set_union(lv.hat.begin(), lv.hat.end(), lv.tilde.begin(), lv.tilde.end(),
                   std::back_inserter(uni));
    if (uni != lv.members) {
      c.ok = false;
      if (c.detail.empty()) c.detail = "members differ from the union of both parts";
    }
    if (lv.maps.size() != lv.members.size() || lv.origin.size() != lv.members.size()) {
      c.ok = false;
      c.detail = "map or origin table misaligned";
    }
  }

  // Poset recomputed from the stored levels.
  std::vector<PosetElement> poset;
  std::vector<std::pair<std::size_t, std::size_t>> less;
  std::vector<std::size_t> maximal;
  compute_poset(h, i, j, poset, less, maximal);
  {
    auto& c = clause("poset_laws");
    if (poset != lv.poset || less != lv.less || maximal != lv.maximal) {
      c.ok = false;
      c.detail = "stored poset differs from the recomputed one";
    }
    if (!antisymmetric(less)) {
      c.ok = false;
      c.detail = "relation not antisymmetric";
    }
    for (auto [a, b] : less) {
      for (auto [b2, cc] : less) {
        if (b2 != b) continue;
        if (!std::binary_search(less.begin(), less.end(), std::make_pair(a, cc))) {
          fail(c, poset[a].z, "relation not transitive");
        }
      }
    }
  }

  std::vector<char> in_d(n, 0);
  mark_ball(g, p, h.margin(i, j), in_d);
  std::vector<char> excluded(n, 0);
  for (std::size_t a : maximal) {
    const auto [l, z] = poset[a];
    mark_ball(g, z, static_cast<std::uint32_t>(std::floor(sc.r[l] + sc.s[i])), excluded);
  }

  const std::uint32_t block_r = h.sep(i) - 1;
  auto separated = [&](const std::vector<PointId>& set, ClauseResult& c) {
    std::vector<char> is_member(n, 0);
    for (PointId x : set) is_member[x] = 1;
    std::vector<PointId> bad(set.size(), 0);
    std::vector<char> has_bad(set.size(), 0);
    parallel_for(set.size(), [&](std::size_t begin, std::size_t end) {
      Bfs bfs(g);
      for (std::size_t k = begin; k < end; ++k) {
        for (PointId v : bfs.run(set[k], block_r)) {
          if (v != set[k] && is_member[v]) {
            has_bad[k] = 1;
            bad[k] = set[k];
            break;
          }
        }
      }
    });
    for (std::size_t k = 0; k < set.size(); ++k) {
      if (has_bad[k]) fail(c, bad[k], "pair closer than s_i");
    }
  };

  OmegaOracle fresh_oracle(g, p, h.radius(i), h.options().window.trusted.empty() ? nullptr : &h.options().window);
  {
    auto& c = clause("hat_maximal");
    for (PointId x : lv.hat) {
      if (!in_d[x]) fail(c, x, "outside D(p, r_j - t_i)");
      if (excluded[x]) fail(c, x, "inside an excluded disk");
      const auto k = lv.index_of(x);
      if (k == kNpos || !map_ok[k]) {
        if (!fresh_oracle.contains(x)) fail(c, x, "not in Omega_i");
      }
    }
    separated(lv.hat, c);
    // Maximality: uncovered admissible vertices must fall outside Omega_i.
    std::vector<char> covered(n, 0);
    {
      Bfs bfs(g);
      for (PointId v : bfs.run(lv.hat, block_r)) covered[v] = 1;
    }
    Bfs bfs(g);
    const auto region = bfs.run(p, h.margin(i, j));
    std::vector<PointId> open;
    for (PointId v : region) {
      if (!excluded[v] && !covered[v]) open.push_back(v);
    }
    std::sort(open.begin(), open.end());
    for (PointId v : open) {
      if (fresh_oracle.contains(v)) fail(c, v, "admissible Omega_i point far from every fresh center");
    }
  }

  {
    auto& c = clause("separated_in_omega");
    for (std::size_t k = 0; k < lv.members.size(); ++k) {
      const PointId x = lv.members[k];
      if (!in_d[x]) fail(c, x, "outside D(p, r_j - t_i)");
      if (!map_ok[k] && !fresh_oracle.contains(x)) fail(c, x, "not in Omega_i");
    }
    separated(lv.members, c);
    GraphMetric gm(g);
    const bool cross = metric::is_k_separated(gm, lv.members, sc.s[i]);
    if (cross != c.ok && c.detail.empty()) {
      c.ok = false;
      c.detail = "disagrees with the generic separation predicate";
    }
    if (!cross) c.ok = false;
  }

  // Conditions attached to poset elements.
  auto& comp = clause("composition");
  auto& trace = clause("trace");
  auto& dich = clause("dichotomy");
  std::vector<char> is_member(n, 0);
  for (PointId x : lv.members) is_member[x] = 1;
  for (const auto& [l, z] : poset) {
    const auto img = h.image_of_level(l, j, z, i);
    const double lam_j = j < sc.depth() ? sc.lambda_tail_bound(j) : 1.0;
    const double manifold_thr = sc.lambda[l] * lam_j * (sc.r[l] + sc.s[i]);
    const auto graph_r = static_cast<std::uint32_t>(std::ceil(sc.r[l] + sc.s[i])) - 1;
    const auto manifold_r = static_cast<std::uint32_t>(std::ceil(manifold_thr)) - 1;
    Bfs bfs(g);
    const auto& near = bfs.run(z, std::max(graph_r, manifold_r));
    std::vector<PointId> inside;
    const auto& zmap = h.level(l, j).map_of(z);
    std::unordered_map<PointId, std::size_t> inverse;
    inverse.reserve(zmap.size());
    for (std::size_t k = 0; k < zmap.size(); ++k) inverse.emplace(zmap[k], k);
    std::vector<std::pair<PointId, std::int64_t>> hits;
    for (PointId x : near) {
      if (is_member[x]) hits.emplace_back(x, bfs.dist(x));
    }
    for (auto [x, d] : hits) {
      const bool in_img = std::binary_search(img.begin(), img.end(), x);
      if (d <= static_cast<std::int64_t>(graph_r)) {
        if (!in_img) fail(dich, x, "member near z outside h(X^l_i)");
      }
      if (d <= static_cast<std::int64_t>(manifold_r) && !in_img) ++rep.manifold_threshold_pairs;
      if (d <= static_cast<std::int64_t>(h.radius(l))) {
        inside.push_back(x);
        auto it = inverse.find(x);
        if (it == inverse.end()) {
          fail(comp, x, "not in the image of h^j_{l,z}");
          continue;
        }
        const PointId xp = h.base_ball(l).members[it->second];
        if (!h.level(i, l).contains(xp)) {
          fail(comp, x, "preimage not in X^l_i");
          continue;
        }
        const auto& inner = h.level(i, l).map_of(xp);
        bool same = true;
        const auto& stored = lv.map_of(x);
        for (std::size_t k = 0; k < inner.size() && same; ++k) same = stored[k] == h.apply(l, j, z, inner[k]);
        if (!same) fail(comp, x, "stored map differs from the composition");
      }
    }
    rep.dichotomy_pairs += lv.members.size();
    std::sort(inside.begin(), inside.end());
    if (inside != img) {
      std::vector<PointId> diff;
      std::set_symmetric_difference(inside.begin(), inside.end(), img.begin(), img.end(),
                                    std::back_inserter(diff));
      for (PointId x : diff) fail(trace, x, "trace on D(z, r_l) differs from h(X^l_i)");
    }
  }

  {
    auto& c = clause("nesting");
    for (std::size_t l = 0; l <= j; ++l) {
      for (std::size_t k = 0; k <= l; ++k) {
        const bool applies = (l < j && k >= i) || (l == j && k > i);
        if (!applies) continue;
        const auto& inner = h.level(k, l);
        const auto& ball_k = h.base_ball(k);
        for (std::size_t m = 0; m < inner.members.size(); ++m) {
          const PointId z = inner.members[m];
          const auto idx = lv.index_of(z);
          if (idx == kNpos) {
            fail(c, z, "X^l_k not contained in X^j_i");
            continue;
          }
          for (std::size_t u = 0; u < ball_i.size(); ++u) {
            const auto ku = ball_k.local_index(ball_i.members[u]);
            if (ku == kNpos || inner.maps[m][ku] != lv.maps[idx][u]) {
              fail(c, z, "map is not the restriction of h^l_{k,z}");
              break;
            }
          }
        }
      }
    }
  }

  {
    auto& c = clause("base_point");
    const auto k = lv.index_of(p);
    if (k == kNpos) {
      fail(c, p, "p missing");
    } else if (lv.maps[k] != ball_i.members) {
      fail(c, p, "map at p is not the identity");
    }
  }

  {
    auto& c = clause("unique_maximal");
    std::vector<std::uint16_t> count(n, 0);
    Bfs bfs(g);
    for (std::size_t a : maximal) {
      for (PointId v : bfs.run(poset[a].z, h.radius(poset[a].l))) ++count[v];
    }
    for (const auto& [l, z] : poset) {
      for (PointId v : bfs.run(z, h.radius(l))) {
        if (count[v] != 1) {
          fail(c, v, "covered by " + std::to_string(count[v]) + " maximal disks");
          break;
        }
      }
    }
  }

  {
    auto& c = clause("base_maps");
    const auto& prescribed = h.options().prescribed;
    std::vector<std::unique_ptr<OmegaOracle>> oracles;
    for (std::size_t k = 0; k <= h.top(); ++k) {
      oracles.push_back(std::make_unique<OmegaOracle>(
          g, p, h.radius(k), h.options().window.trusted.empty() ? nullptr : &h.options().window));
    }
    // Products of base maps along the propagation chain.
    std::function<std::vector<PointId>(std::size_t, std::size_t, PointId)> derive =
        [&](std::size_t ii, std::size_t jj, PointId x) -> std::vector<PointId> {
      if (ii == jj) return h.base_ball(ii).members;
      const auto& L = h.level(ii, jj);
      const auto& o = L.origin.at(L.index_of(x));
      if (o.fresh) {
        if (prescribed) {
          if (auto f = prescribed(ii, x)) return *f;
        }
        if (!oracles[ii]->contains(x)) return {};
        return oracles[ii]->witness(x);
      }
      const auto inner = derive(ii, o.l, o.x_prime);
      std::vector<PointId> out(inner.size());
      for (std::size_t k = 0; k < inner.size(); ++k) out[k] = h.apply(o.l, jj, o.z, inner[k]);
      return out;
    };
    for (std::size_t k = 0; k < lv.members.size(); ++k) {
      if (derive(i, j, lv.members[k]) != lv.maps[k]) fail(c, lv.members[k]);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Limits and density

LimitLevel limit_level(const Hierarchy& h, std::size_t i) {
  LimitLevel out;
  out.i = i;
  std::map<PointId, std::vector<PointId>> all;
  for (std::size_t j = i; j <= h.top(); ++j) {
    const auto& lv = h.level(i, j);
    for (std::size_t k = 0; k < lv.members.size(); ++k) {
      auto [it, inserted] = all.emplace(lv.members[k], lv.maps[k]);
      if (!inserted && it->second != lv.maps[k]) {
        throw ConstructionError("limit level " + std::to_string(i) + ": inconsistent maps at " +
                                std::to_string(lv.members[k]));
      }
    }
  }
  for (auto& [x, m] : all) {
    out.members.push_back(x);
    out.maps.push_back(std::move(m));
  }
  return out;
}

NestingReport check_nesting(const Hierarchy& h, const LimitLevel& lower, const LimitLevel& upper) {
  NestingReport rep;
  const auto& ball_lo = h.base_ball(lower.i);
  const auto& ball_up = h.base_ball(upper.i);
  for (std::size_t k = 0; k < upper.members.size(); ++k) {
    const PointId x = upper.members[k];
    auto it = std::lower_bound(lower.members.begin(), lower.members.end(), x);
    if (it == lower.members.end() || *it != x) {
      rep.nested = false;
      if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back(x);
      continue;
    }
    const auto& lo_map = lower.maps[static_cast<std::size_t>(it - lower.members.begin())];
    for (std::size_t u = 0; u < ball_lo.size(); ++u) {
      const auto ku = ball_up.local_index(ball_lo.members[u]);
      if (ku == kNpos || upper.maps[k][ku] != lo_map[u]) {
        rep.restriction_coherent = false;
        if (rep.witnesses.size() < kMaxWitnesses) rep.witnesses.push_back(x);
        break;
      }
    }
  }
  return rep;
}

DensityReport density_report(const Hierarchy& h, const LimitLevel& limit) {
  const auto& sc = h.schedule();
  const std::size_t i = limit.i;
  const std::size_t top = h.top();
  if (top <= i) throw ConstructionError("density_report: no level above " + std::to_string(i));
  DensityReport rep;
  rep.i = i;
  const double r = sc.r[i], s = sc.s[i], t = sc.t[i], w = sc.omega[i], l = sc.lambda[i];
  const double l0 = sc.lambda0;
  double window = 0.0;
  std::ostringstream expr;
  if (top == i + 1) {
    window = sc.r[top] - t;
    rep.bound = s + w;
    expr << "s_i + omega_i = " << rep.bound;
  } else {
    window = sc.r[top] - t - w;
    const double l2 = l * l;
    const double b1 = 4 * r * (std::pow(l, 5) - 1) / l2 + std::pow(l0, 3) * s + t + 2 * w;
    const double b2 = 4 * r * (std::pow(l, 6) - 1) / l2 + l0 * l0 * s + t + (1 + l0) * w;
    rep.bound = std::max(b1, b2) + l2 * (w + s);
    expr << "max(4r(l^5-1)/l^2 + l0^3 s + t + 2w, 4r(l^6-1)/l^2 + l0^2 s + t + (1+l0)w)"
         << " + l^2 (w + s) = max(" << b1 << ", " << b2 << ") + " << l2 * (w + s) << " = "
         << rep.bound;
  }
  rep.bound_expression = expr.str();
  if (!(window > 0)) throw ConstructionError("density_report: empty measurement window");
  const auto w1 = static_cast<std::uint32_t>(std::floor(window));
  rep.windows = {w1, w1 / 2};
  if (limit.members.empty()) throw ConstructionError("density_report: X_i is empty");

  const auto& g = h.graph();
  Bfs bfs(g);
  std::vector<std::int64_t> to_set(g.size(), -1);
  for (PointId v : bfs.run(limit.members, kUnbounded)) to_set[v] = bfs.dist(v);
  for (auto radius : rep.windows) {
    double worst = 0.0;
    for (PointId y : bfs.run(h.p(), radius)) {
      const auto d = to_set[y];
      worst = std::max(worst, d < 0 ? metric::kInfinity : static_cast<double>(d));
    }
    rep.measured.push_back(worst);
  }
  rep.pass = std::all_of(rep.measured.begin(), rep.measured.end(),
                         [&](double m) { return std::isfinite(m) && m <= rep.bound; });
  rep.stable = rep.measured.front() == rep.measured.back();
  return rep;
}

std::vector<Color> level_coloring(const ColoredGraph& g, const std::vector<LimitLevel>& limits) {
  std::vector<Color> colors(g.size(), 0);
  for (const auto& lim : limits) {
    for (PointId x : lim.members) colors[x] = std::max<Color>(colors[x], static_cast<Color>(lim.i + 1));
  }
  return colors;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const Hierarchy& h) {
  nlohmann::json j;
  j["schedule"] = sched::to_json(h.schedule());
  j["base_point"] = h.p();
  j["top"] = h.top();
  j["levels"] = nlohmann::json::array();
  for (std::size_t jj = 1; jj <= h.top(); ++jj) {
    for (std::size_t ii = 0; ii < jj; ++ii) {
      const auto& lv = h.level(ii, jj);
      nlohmann::json L;
      L["i"] = ii;
      L["j"] = jj;
      L["hatX"] = lv.hat;
      L["tildeX"] = lv.tilde;
      L["domain"] = h.base_ball(ii).members;
      nlohmann::json maps = nlohmann::json::array();
      for (std::size_t k = 0; k < lv.members.size(); ++k) {
        maps.push_back({{"center", lv.members[k]}, {"image", lv.maps[k]}});
      }
      L["maps"] = std::move(maps);
      nlohmann::json poset = nlohmann::json::array();
      for (const auto& e : lv.poset) poset.push_back({e.l, e.z});
      L["poset"] = std::move(poset);
      nlohmann::json edges = nlohmann::json::array();
      for (auto [a, b] : lv.less) edges.push_back({a, b});
      L["poset_less"] = std::move(edges);
      L["poset_maximal"] = lv.maximal;
      j["levels"].push_back(std::move(L));
    }
  }
  return j;
}

nlohmann::json to_json(const LevelReport& r) {
  nlohmann::json j;
  j["i"] = r.i;
  j["j"] = r.j;
  j["all_ok"] = r.all_ok();
  j["dichotomy_pairs"] = r.dichotomy_pairs;
  j["manifold_threshold_failures"] = r.manifold_threshold_pairs;
  nlohmann::json clauses = nlohmann::json::object();
  for (const auto& c : r.clauses) {
    nlohmann::json cj;
    cj["ok"] = c.ok;
    cj["witnesses"] = c.witnesses;
    if (!c.detail.empty()) cj["detail"] = c.detail;
    clauses[c.name] = std::move(cj);
  }
  j["clauses"] = std::move(clauses);
  return j;
}

nlohmann::json to_json(const DensityReport& r) {
  nlohmann::json j;
  j["i"] = r.i;
  j["windows"] = r.windows;
  nlohmann::json measured = nlohmann::json::array();
  for (double m : r.measured) measured.push_back(std::isfinite(m) ? nlohmann::json(m) : nlohmann::json(nullptr));
  j["measured"] = std::move(measured);
  j["bound"] = r.bound;
  j["bound_expression"] = r.bound_expression;
  j["pass"] = r.pass;
  j["stable"] = r.stable;
  return j;
}

}  // namespace repnet::hier
