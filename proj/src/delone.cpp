#include "repnet/delone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "repnet/parallel.hpp"

namespace repnet::delone {

void EuclideanBox::validate() const {
  if (lo.empty() || lo.size() != hi.size()) throw ConfigError("box: lo/hi dimension mismatch");
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (!(lo[k] < hi[k])) throw ConfigError("box: lo must be below hi on every axis");
  }
}

double EuclideanBox::boundary_distance(std::span<const double> p) const {
  double best = metric::kInfinity;
  for (std::size_t k = 0; k < lo.size(); ++k) best = std::min({best, p[k] - lo[k], hi[k] - p[k]});
  return best;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

// 53 random bits mapped to [0, 1); independent of the standard library's
// distribution implementations so outputs match across toolchains.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

DeloneSet generate_delone(const EuclideanBox& box, double tau, std::uint64_t seed,
                          const GenerateOptions& opts) {
  box.validate();
  if (!(tau > 0)) throw ConfigError("generate_delone: tau must be positive");
  if (!(opts.pitch_fraction > 0 && opts.pitch_fraction <= 0.25)) {
    throw ConfigError("generate_delone: pitch fraction must lie in (0, 1/4]");
  }
  const std::size_t d = box.dim();
  for (std::size_t k = 0; k < d; ++k) {
    if (box.hi[k] - box.lo[k] < 2 * tau) throw ConfigError("generate_delone: box side below 2 tau");
  }
  const double pitch = tau * opts.pitch_fraction;

  std::mt19937_64 rng(seed);
  std::vector<double> offset(d, 0.0);
  if (opts.random_offset) {
    // Dyadic shift, so lattice coordinates stay exact for dyadic boxes.
    for (auto& o : offset) o = std::floor(unit_draw(rng) * 16.0) / 16.0 * pitch;
  }
  std::vector<std::size_t> counts(d);
  for (std::size_t k = 0; k < d; ++k) {
    counts[k] = static_cast<std::size_t>(std::floor((box.hi[k] - box.lo[k] - offset[k]) / pitch)) + 1;
  }

  PointCloud cloud(d);
  GridIndex kept(d, tau);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> p(d);
  while (true) {
    for (std::size_t k = 0; k < d; ++k) p[k] = box.lo[k] + offset[k] + static_cast<double>(idx[k]) * pitch;
    bool free = true;
    kept.for_each_candidate(p, tau, [&](PointId y) {
      if (free && euclidean_distance(p, cloud.point(y)) < tau) free = false;
    });
    if (free) {
      kept.insert(PointId(cloud.size()), p);
      cloud.push_back(p);
    }
    // Row-major odometer: last axis fastest.
    bool done = true;
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < counts[k]) {
        done = false;
        break;
      }
      idx[k] = 0;
    }
    if (done) break;
  }

  DeloneSet out;
  out.tau = tau;
  out.window = box;
  out.margin = opts.interior_margin < 0 ? tau : opts.interior_margin;
  out.eta = certify_covering_radius(cloud, box, out.margin, tau * opts.probe_fraction);
  out.cloud = std::move(cloud);
  return out;
}

double certify_covering_radius(const PointCloud& cloud, const EuclideanBox& box, double margin,
                               double probe_spacing) {
  if (cloud.empty()) throw std::invalid_argument("certify_covering_radius: empty cloud");
  if (!(probe_spacing > 0)) throw std::invalid_argument("certify_covering_radius: bad probe spacing");
  const std::size_t d = box.dim();
  std::vector<std::size_t> cells(d);
  std::vector<double> step(d);
  std::vector<double> base(d);
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    const double len = box.hi[k] - box.lo[k] - 2 * margin;
    if (!(len > 0)) throw std::invalid_argument("certify_covering_radius: margin erodes the whole box");
    cells[k] = static_cast<std::size_t>(std::ceil(len / probe_spacing));
    step[k] = len / static_cast<double>(cells[k]);
    base[k] = box.lo[k] + margin;
    total *= cells[k];
  }
  GridIndex index(d, probe_spacing * 8);
  for (PointId id = 0; id < cloud.size(); ++id) index.insert(id, cloud.point(id));

  std::vector<double> worst_per_probe(total, 0.0);
  parallel_for(total, [&](std::size_t begin, std::size_t end) {
    std::vector<double> q(d);
    for (std::size_t flat = begin; flat < end; ++flat) {
      std::size_t rest = flat;
      for (std::size_t k = d; k-- > 0;) {
        const std::size_t i = rest % cells[k];
        rest /= cells[k];
        q[k] = base[k] + (static_cast<double>(i) + 0.5) * step[k];
      }
      worst_per_probe[flat] = index.nearest_distance(q, cloud);
    }
  });
  double half_diag = 0.0;
  for (double s : step) half_diag += s * s;
  half_diag = std::sqrt(half_diag) / 2;
  return *std::max_element(worst_per_probe.begin(), worst_per_probe.end()) + half_diag;
}

// ---------------------------------------------------------------------------
// Constants

std::uint64_t packing_bound(std::size_t dim, double tau, double delta) {
  if (!(tau > 0 && delta > 0)) throw std::invalid_argument("packing_bound: tau and delta must be positive");
  const double ratio = (2 * delta + tau) / tau;
  return static_cast<std::uint64_t>(std::floor(std::pow(ratio, static_cast<double>(dim))));
}

double unit_ball_volume(std::size_t dim) {
  const double n = static_cast<double>(dim);
  return std::pow(std::numbers::pi, n / 2) / std::tgamma(n / 2 + 1);
}

namespace {

// V_d ((sigma + rho)^d - (sigma - rho)^d), expanded so small rho does not
// cancel: only odd powers of rho survive.
double annulus_volume(std::size_t dim, double sigma, double rho) {
  double sum = 0.0;
  double binom = 1.0;
  for (std::size_t k = 1; k <= dim; ++k) {
    binom = binom * static_cast<double>(dim - k + 1) / static_cast<double>(k);
    if (k % 2 == 1) sum += 2 * binom * std::pow(sigma, double(dim - k)) * std::pow(rho, double(k));
  }
  return unit_ball_volume(dim) * sum;
}

}  // namespace

CoronaBudget corona_volume_budget(std::size_t dim, double tau, double sigma, double epsilon) {
  if (!(epsilon > 0 && epsilon < tau / 2)) throw ConfigError("corona budget: need 0 < epsilon < tau/2");
  if (!(sigma > 0)) throw ConfigError("corona budget: sigma must be positive");
  CoronaBudget b;
  b.P0 = std::min(epsilon, sigma / 2);
  b.C = packing_bound(dim, tau - 2 * epsilon, sigma + b.P0 + tau / 2);
  b.K = unit_ball_volume(dim) * std::pow(epsilon, static_cast<double>(dim));
  b.L = b.K / (2.0 * static_cast<double>(b.C));
  if (annulus_volume(dim, sigma, b.P0) <= b.L) {
    b.P_epsilon = b.P0;
  } else {
    double lo = 0.0;
    double hi = b.P0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (annulus_volume(dim, sigma, mid) <= b.L ? lo : hi) = mid;
    }
    b.P_epsilon = lo;
  }
  if (!(b.P_epsilon > 0)) {
    std::ostringstream msg;
    msg << "corona budget: no positive rho fits (C=" << b.C << ", K=" << b.K << ", L=" << b.L << ")";
    throw ConstructionError(msg.str());
  }
  return b;
}

void CoronaGapParams::validate(double tau) const {
  if (!(rho > 0 && rho < P_epsilon && P_epsilon < sigma)) {
    throw ConfigError("corona params: need 0 < rho < P_epsilon < sigma");
  }
  if (!(epsilon > 0 && epsilon < tau / 2)) throw ConfigError("corona params: need 0 < epsilon < tau/2");
}

CoronaGapParams make_corona_params(std::size_t dim, double tau, double sigma, double epsilon) {
  const auto b = corona_volume_budget(dim, tau, sigma, epsilon);
  CoronaGapParams p;
  p.sigma = sigma;
  p.epsilon = epsilon;
  p.P_epsilon = b.P_epsilon;
  p.rho = b.P_epsilon / 2;
  return p;
}

// ---------------------------------------------------------------------------
// Corona gap

namespace {

// Integer offsets on the surface of the Chebyshev sphere of radius m, sorted
// by squared norm then lexicographically.
std::vector<std::vector<std::int64_t>> spiral_ring(std::size_t d, std::int64_t m) {
  std::vector<std::vector<std::int64_t>> out;
  if (m == 0) {
    out.emplace_back(d, 0);
    return out;
  }
  // Face k: |v_k| = m, axes before k strictly inside, axes after k free.
  for (std::size_t k = 0; k < d; ++k) {
    for (std::int64_t sign : {-1, 1}) {
      std::vector<std::int64_t> v(d);
      std::vector<std::int64_t> lo(d);
      std::vector<std::int64_t> hi(d);
      for (std::size_t a = 0; a < d; ++a) {
        if (a < k) {
          lo[a] = -m + 1;
          hi[a] = m - 1;
        } else if (a == k) {
          lo[a] = hi[a] = sign * m;
        } else {
          lo[a] = -m;
          hi[a] = m;
        }
        v[a] = lo[a];
      }
      bool empty = false;
      for (std::size_t a = 0; a < d; ++a) empty = empty || lo[a] > hi[a];
      if (empty) continue;
      while (true) {
        out.push_back(v);
        std::size_t a = 0;
        while (a < d && v[a] == hi[a]) {
          v[a] = lo[a];
          ++a;
        }
        if (a == d) break;
        ++v[a];
      }
    }
  }
  auto norm2 = [](const std::vector<std::int64_t>& v) {
    std::int64_t s = 0;
    for (auto c : v) s += c * c;
    return s;
  };
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    const auto na = norm2(a);
    const auto nb = norm2(b);
    return na != nb ? na < nb : a < b;
  });
  return out;
}

}  // namespace

CoronaGapResult corona_gap_perturb(const DeloneSet& x, const CoronaGapParams& params,
                                   std::span<const PointId> frozen, const CoronaGapOptions& opts) {
  params.validate(x.tau);
  const std::size_t n = x.cloud.size();
  const std::size_t d = x.cloud.dim();
  const double sigma = params.sigma;
  const double rho = params.rho;
  const double eps = params.epsilon;

  std::vector<char> is_frozen(n, 0);
  for (PointId a : frozen) {
    if (a >= n) throw ConfigError("corona_gap_perturb: frozen id out of range");
    is_frozen[a] = 1;
  }
  for (std::size_t i = 0; i < frozen.size(); ++i) {
    for (std::size_t j = i + 1; j < frozen.size(); ++j) {
      if (in_gap(euclidean_distance(x.cloud.point(frozen[i]), x.cloud.point(frozen[j])), sigma, rho)) {
        throw ConfigError("corona_gap_perturb: frozen points " + std::to_string(frozen[i]) + " and " +
                          std::to_string(frozen[j]) + " violate the gap");
      }
    }
  }

  CoronaGapResult res;
  PointCloud work = x.cloud;
  GridIndex grid(d, sigma + rho + x.tau / 2);
  for (PointId id = 0; id < n; ++id) grid.insert(id, work.point(id));

  const double h = std::min(rho, eps) / 4;
  const auto max_ring = static_cast<std::int64_t>(std::ceil(eps / h));
  const double reach = sigma + rho + eps;
  std::vector<PointId> near;
  std::vector<double> cand(d);

  for (PointId id = 0; id < n; ++id) {
    if (is_frozen[id]) continue;
    const auto origin = x.cloud.point(id);
    near.clear();
    grid.for_each_candidate(origin, reach, [&](PointId y) {
      if (y != id && euclidean_distance(origin, work.point(y)) <= reach) near.push_back(y);
    });
    auto admissible = [&](std::span<const double> p) {
      for (PointId y : near) {
        if (in_gap(euclidean_distance(p, work.point(y)), sigma, rho)) return false;
      }
      return true;
    };
    if (admissible(origin)) continue;

    bool placed = false;
    std::uint64_t tested = 0;
    for (std::int64_t m = 1; m <= max_ring && !placed; ++m) {
      for (const auto& v : spiral_ring(d, m)) {
        for (std::size_t k = 0; k < d; ++k) cand[k] = origin[k] + static_cast<double>(v[k]) * h;
        if (!(euclidean_distance(origin, cand) < eps)) continue;
        ++tested;
        if (admissible(cand)) {
          placed = true;
          break;
        }
        if (tested >= opts.max_candidates_per_point) break;
      }
      if (tested >= opts.max_candidates_per_point) break;
    }
    res.candidates_tested += tested;
    if (!placed) {
      throw ConstructionError("corona_gap_perturb: search budget exhausted at point " +
                              std::to_string(id) + " after " + std::to_string(tested) + " candidates");
    }
    grid.erase(id, work.point(id));
    work.set_point(id, cand);
    grid.insert(id, work.point(id));
    ++res.moved;
    res.max_displacement = std::max(res.max_displacement, euclidean_distance(origin, cand));
  }

  res.perturbation.epsilon = eps;
  res.perturbation.domain = metric::all_ids(n);
  res.perturbation.image.resize(n);
  for (std::size_t k = 0; k < n; ++k) res.perturbation.image[k] = static_cast<PointId>(n + k);
  res.set.tau = x.tau - 2 * eps;
  // Both are upper bounds; the probe certificate is usually the tighter one.
  res.set.eta = std::min(x.eta + eps, certify_covering_radius(work, x.window, x.margin, x.tau / 8));
  res.set.cloud = std::move(work);
  res.set.window = x.window;
  res.set.margin = x.margin;
  return res;
}

std::size_t count_gap_violations(const PointCloud& cloud, double sigma, double rho) {
  const std::size_t n = cloud.size();
  if (n < 2) return 0;
  GridIndex grid(cloud.dim(), sigma + rho);
  for (PointId id = 0; id < n; ++id) grid.insert(id, cloud.point(id));
  std::vector<std::size_t> per(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const auto pa = cloud.point(PointId(a));
      grid.for_each_candidate(pa, sigma + rho, [&](PointId b) {
        if (b > a && in_gap(euclidean_distance(pa, cloud.point(b)), sigma, rho)) ++per[a];
      });
    }
  });
  std::size_t total = 0;
  for (auto c : per) total += c;
  return total;
}

// ---------------------------------------------------------------------------
// Graph extraction

ColoredGraph delone_to_graph(const DeloneSet& x, double sigma, std::vector<Color> colors) {
  if (!(sigma >= 3 * x.eta)) {
    throw ConfigError("delone_to_graph: sigma must be at least 3 eta (sigma=" + format_double(sigma) +
                      ", eta=" + format_double(x.eta) + ")");
  }
  const std::size_t n = x.cloud.size();
  GridIndex grid(x.cloud.dim(), sigma);
  for (PointId id = 0; id < n; ++id) grid.insert(id, x.cloud.point(id));
  std::vector<std::vector<PointId>> nbrs(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      const auto pa = x.cloud.point(PointId(a));
      grid.for_each_candidate(pa, sigma, [&](PointId b) {
        if (b <= a) return;
        const double dist = euclidean_distance(pa, x.cloud.point(b));
        if (dist > 0 && dist <= sigma) nbrs[a].push_back(b);
      });
      std::sort(nbrs[a].begin(), nbrs[a].end());
    }
  });
  std::vector<std::pair<PointId, PointId>> edges;
  for (PointId a = 0; a < n; ++a) {
    for (PointId b : nbrs[a]) edges.emplace_back(a, b);
  }
  auto g = ColoredGraph::from_edges(n, edges, std::move(colors));
  const auto bound = packing_bound(x.cloud.dim(), x.tau, sigma);
  if (g.max_degree() > bound) {
    throw ConstructionError("delone_to_graph: degree " + std::to_string(g.max_degree()) +
                            " exceeds packing bound " + std::to_string(bound));
  }
  if (!is_connected(g)) throw ConstructionError("delone_to_graph: graph is not connected");
  return g;
}

SandwichReport check_metric_sandwich(const DeloneSet& x, const ColoredGraph& g, double sigma,
                                     int r_max, double interior) {
  const std::size_t n = x.cloud.size();
  const auto hop_cap = static_cast<std::uint32_t>(std::floor(r_max / x.eta)) + 1;
  GridIndex grid(x.cloud.dim(), std::max(1.0, double(r_max)));
  for (PointId id = 0; id < n; ++id) grid.insert(id, x.cloud.point(id));

  struct Local {
    std::size_t vertices = 0, pairs = 0, upper = 0, lower = 0;
    std::string first;
  };
  std::vector<Local> per(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    Bfs bfs(g);
    for (std::size_t a = begin; a < end; ++a) {
      const auto pa = x.cloud.point(PointId(a));
      if (x.window.boundary_distance(pa) < interior) continue;
      auto& loc = per[a];
      ++loc.vertices;
      const auto& reached = bfs.run(PointId(a), std::max<std::uint32_t>(hop_cap, r_max));
      // Hop ball of radius r inside the Euclidean ball of radius r sigma.
      for (PointId b : reached) {
        const auto h = bfs.dist(b);
        if (h > r_max) continue;
        ++loc.pairs;
        if (euclidean_distance(pa, x.cloud.point(b)) > static_cast<double>(h) * sigma) {
          ++loc.upper;
          if (loc.first.empty()) loc.first = "upper x=" + std::to_string(a) + " y=" + std::to_string(b);
        }
      }
      // Euclidean ball of radius r inside the hop ball floor(r/eta)+1; the
      // binding radius for y is the least integer r >= |x - y|.
      grid.for_each_candidate(pa, r_max, [&](PointId b) {
        const double dist = euclidean_distance(pa, x.cloud.point(b));
        if (dist > r_max) return;
        ++loc.pairs;
        const double r = std::ceil(dist);
        const auto allowed = static_cast<std::int64_t>(std::floor(r / x.eta)) + 1;
        const auto h = bfs.dist(b);
        if (h < 0 || h > allowed) {
          ++loc.lower;
          if (loc.first.empty()) loc.first = "lower x=" + std::to_string(a) + " y=" + std::to_string(b);
        }
      });
    }
  });
  SandwichReport rep;
  for (const auto& loc : per) {
    rep.vertices_checked += loc.vertices;
    rep.pairs_checked += loc.pairs;
    rep.upper_violations += loc.upper;
    rep.lower_violations += loc.lower;
    if (rep.first_counterexample.empty()) rep.first_counterexample = loc.first;
  }
  return rep;
}

}  // namespace repnet::delone
