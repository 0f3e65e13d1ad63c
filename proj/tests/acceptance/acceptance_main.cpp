// Acceptance suite: one PASS/FAIL line per criterion. Every derived value is
// recomputed here by brute force (see oracles.hpp) and compared with what the
// library reports. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "repnet/delone.hpp"
#include "repnet/graph_space.hpp"
#include "repnet/hierarchy.hpp"
#include "repnet/metric_core.hpp"
#include "repnet/schedule.hpp"

using namespace repnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates the first failure message, keeps the rest quiet.
struct Verdict {
  bool pass = true;
  std::ostringstream note;
  std::string first;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) first = what;
    pass = pass && ok;
  }
  Outcome done() {
    Outcome o;
    o.pass = pass;
    o.detail = pass ? note.str() : "first failure: " + first + "; " + note.str();
    return o;
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

ColoredGraph relabel(const ColoredGraph& g, const std::vector<PointId>& perm) {
  std::vector<std::pair<PointId, PointId>> e;
  for (auto [a, b] : g.edges()) e.emplace_back(perm[a], perm[b]);
  std::vector<Color> c(g.size());
  for (PointId v = 0; v < g.size(); ++v) c[perm[v]] = g.color(v);
  return ColoredGraph::from_edges(g.size(), e, c);
}

std::vector<PointId> shuffled_ids(std::mt19937_64& rng, std::size_t n) {
  std::vector<PointId> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// ---------------------------------------------------------------------------
// 1. Net laws

Outcome net_laws() {
  Verdict v;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> nd(200, 2000);
  std::uniform_real_distribution<double> kd(0.5, 3.0);
  std::size_t points = 0, kept = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = nd(rng);
    const auto c = oracle::random_cloud(rng, n, std::sqrt(double(n)) * 1.5);
    const double k = kd(rng);
    EuclideanSpace space(c, k);
    const auto ids = metric::all_ids(n);
    const auto cert = metric::greedy_maximal_net(space, k, {}, ids);
    points += n;
    kept += cert.subset.size();
    const auto& s = cert.subset;
    double sep = metric::kInfinity;
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) sep = std::min(sep, oracle::dist(c, s[a], s[b]));
    v.require(sep >= k, "trial " + std::to_string(trial) + " not K-separated");
    std::vector<char> in(n, 0);
    for (auto x : s) in[x] = 1;
    double cov = 0;
    for (PointId y = 0; y < n; ++y) {
      double best = metric::kInfinity;
      for (auto x : s) best = std::min(best, oracle::dist(c, x, y));
      cov = std::max(cov, best);
      // Re-insertion: y would join the net iff every net point is >= K away.
      if (!in[y]) v.require(best < k, "trial " + std::to_string(trial) + " not maximal at " + std::to_string(y));
    }
    v.require(cov <= k, "trial " + std::to_string(trial) + " covering radius above K");
    v.require(cert.covering_radius == cov, "trial " + std::to_string(trial) + " certificate differs from scan");
  }
  v.note << "50 clouds, " << points << " points, " << kept << " net points";
  return v.done();
}

// ---------------------------------------------------------------------------
// 2. Perturbation arithmetic
//
// A 6x6 rectangular lattice with pitches a <= b <= 2a has separation a and
// covering radius sqrt(a^2 + b^2)/2 over its cell centres. Pushing the four
// corners of cell (0,0) away from its centre makes that centre sit at eta +
// eps, and pulling (4,4) and (5,4) together leaves them at tau - 2 eps, so
// both bounds are attained.

Outcome perturbation_arithmetic() {
  Verdict v;
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = 0.5 + 1.5 * u(rng);
    const double b = a * (1.0 + u(rng));
    const double eps = a * (0.01 + 0.44 * u(rng));
    const double move = eps * (1 - 1e-12);  // keeps |displacement| <= eps after rounding
    const double L = std::hypot(a, b);
    PointCloud c(2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) c.push_back(std::vector<double>{i * a, j * b});
    const std::size_t n = c.size();
    for (PointId k = 0; k < n; ++k) {
      const int i = int(k) / 6, j = int(k) % 6;
      std::vector<double> p{i * a, j * b};
      if (i <= 1 && j <= 1) {
        p[0] += (i ? 1 : -1) * move * a / L;
        p[1] += (j ? 1 : -1) * move * b / L;
      } else if (i == 4 && j == 4) {
        p[0] += move;
      } else if (i == 5 && j == 4) {
        p[0] -= move;
      }
      c.push_back(p);
    }
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) c.push_back(std::vector<double>{(i + 0.5) * a, (j + 0.5) * b});
    EuclideanSpace space(c, a);
    std::vector<PointId> q(n), img(n), probes;
    std::iota(q.begin(), q.end(), 0);
    std::iota(img.begin(), img.end(), PointId(n));
    for (PointId k = PointId(2 * n); k < c.size(); ++k) probes.push_back(k);

    metric::NetCertificate before;
    before.subset = q;
    before.separation = oracle::min_pair(PointCloud(2, {c.coords().begin(), c.coords().begin() + 2 * n}));
    before.covering_radius = metric::covering_radius(space, q, probes);
    v.require(std::abs(before.separation - a) < 1e-12, "lattice separation");
    v.require(std::abs(before.covering_radius - L / 2) < 1e-12, "lattice covering radius");

    const auto out = metric::apply_perturbation(space, before, {q, img, eps});
    const double tau = before.separation, eta = before.covering_radius;
    v.require(out.separation_claimed, "separation not claimed with tau > 2 eps");
    v.require(std::abs(out.certificate.separation - (tau - 2 * eps)) < 1e-9, "certificate separation formula");
    v.require(std::abs(out.certificate.covering_radius - (eta + eps)) < 1e-9, "certificate covering formula");

    PointCloud moved(2, {c.coords().begin() + 2 * n, c.coords().begin() + 4 * n});
    const double sep_after = oracle::min_pair(moved);
    double cov_after = 0;
    for (auto pr : probes) {
      double best = metric::kInfinity;
      for (auto y : img) best = std::min(best, oracle::dist(c, pr, y));
      cov_after = std::max(cov_after, best);
    }
    const double e1 = std::abs(out.certificate.separation - sep_after);
    const double e2 = std::abs(out.certificate.covering_radius - cov_after);
    worst = std::max({worst, e1, e2});
    v.require(e1 < 1e-9, "trial " + std::to_string(trial) + " separation bound not matched");
    v.require(e2 < 1e-9, "trial " + std::to_string(trial) + " covering bound not matched");
  }
  v.note << "20 lattices, max |certificate - measured| = " << fmt(worst);
  return v.done();
}

// ---------------------------------------------------------------------------
// 3. Corona gap, 4. graph extraction

struct DeskScale {
  delone::DeloneSet x;
  delone::CoronaGapParams params;
  std::vector<PointId> frozen;
  delone::CoronaGapResult res;
};

DeskScale& desk() {
  static DeskScale d;
  return d;
}

// Probe-grid covering bound computed by linear scans: cell centres of
// spacing tau/8 on the box eroded by `margin`, plus the half diagonal.
double brute_covering_bound(const PointCloud& c, const delone::EuclideanBox& box, double margin, double h) {
  std::vector<std::vector<double>> probes;
  const double len0 = box.hi[0] - box.lo[0] - 2 * margin;
  const double len1 = box.hi[1] - box.lo[1] - 2 * margin;
  const auto n0 = static_cast<std::size_t>(std::ceil(len0 / h));
  const auto n1 = static_cast<std::size_t>(std::ceil(len1 / h));
  const double s0 = len0 / double(n0), s1 = len1 / double(n1);
  for (std::size_t i = 0; i < n0; ++i)
    for (std::size_t j = 0; j < n1; ++j)
      probes.push_back({box.lo[0] + margin + (i + 0.5) * s0, box.lo[1] + margin + (j + 0.5) * s1});
  return oracle::covering_over(c, probes) + std::hypot(s0, s1) / 2;
}

Outcome corona_gap() {
  Verdict v;
  auto& d = desk();
  const double tau = 1.0, sigma = 3.0, eps = 0.2;
  d.x = delone::generate_delone(fixture::box50(), tau, 7);
  d.params = delone::make_corona_params(2, tau, sigma, eps);
  d.frozen = fixture::spread_points(d.x.cloud, 10, sigma);
  v.require(d.frozen.size() == 10, "could not pick 10 frozen points");
  for (std::size_t a = 0; a < d.frozen.size(); ++a)
    for (std::size_t b = a + 1; b < d.frozen.size(); ++b)
      v.require(!delone::in_gap(oracle::dist(d.x.cloud, d.frozen[a], d.frozen[b]), sigma, d.params.rho),
                "frozen pair in the gap");
  d.res = delone::corona_gap_perturb(d.x, d.params, d.frozen);
  const auto& x = d.x.cloud;
  const auto& y = d.res.set.cloud;

  v.require(oracle::min_pair(x) >= tau, "input not tau-separated");
  const double eta_in = brute_covering_bound(x, d.x.window, d.x.margin, tau / 8);
  v.require(eta_in <= d.x.eta + 1e-12, "input eta certificate not reproduced");

  bool unmoved = true;
  for (auto f : d.frozen) unmoved = unmoved && std::equal(x.point(f).begin(), x.point(f).end(), y.point(f).begin());
  v.require(unmoved, "a frozen point moved");
  double disp = 0;
  for (PointId k = 0; k < x.size(); ++k) {
    disp = std::max(disp, std::hypot(x.point(k)[0] - y.point(k)[0], x.point(k)[1] - y.point(k)[1]));
  }
  v.require(y.size() == x.size() && disp <= eps, "not an eps-perturbation");
  const double sep = oracle::min_pair(y);
  v.require(sep >= tau - 2 * eps, "output not (tau - 2 eps)-separated");
  const double eta_out = brute_covering_bound(y, d.x.window, d.x.margin, tau / 8);
  v.require(eta_out <= d.x.eta + eps, "output not (eta + eps)-relatively dense");
  v.require(eta_out <= d.res.set.eta + 1e-12, "output eta certificate not reproduced");
  const auto before = oracle::gap_pairs(x, sigma, d.params.rho);
  const auto after = oracle::gap_pairs(y, sigma, d.params.rho);
  v.require(after == 0, std::to_string(after) + " pair distances in the gap");
  v.note << "n=" << x.size() << " rho=" << fmt(d.params.rho) << " moved=" << d.res.moved
         << " max_disp=" << fmt(disp) << " min_pair=" << fmt(sep) << " eta: " << fmt(eta_in) << " -> "
         << fmt(eta_out) << " (bound " << fmt(d.x.eta + eps) << ") gap pairs " << before << " -> " << after;
  return v.done();
}

Outcome graph_extraction() {
  Verdict v;
  auto& d = desk();
  if (d.res.set.cloud.empty()) return {false, "criterion 3 produced no set"};
  const auto& y = d.res.set;
  const double sigma = 3.0, tau = 1.0;
  const int r_max = 5;
  v.require(sigma >= 3 * y.eta, "sigma below 3 eta");
  const auto g = delone::delone_to_graph(y, sigma);
  const std::size_t n = g.size();

  bool edges_ok = true;
  for (PointId a = 0; a < n; ++a) {
    for (PointId b = a + 1; b < n; ++b) {
      const double dd = oracle::dist(y.cloud, a, b);
      edges_ok = edges_ok && g.adjacent(a, b) == (dd > 0 && dd <= sigma);
    }
  }
  v.require(edges_ok, "edge set differs from the sigma-graph");
  const auto from0 = oracle::hops_from(g, 0);
  v.require(std::all_of(from0.begin(), from0.end(), [](int h) { return h != oracle::kFar; }), "graph disconnected");
  std::size_t maxdeg = 0;
  for (PointId a = 0; a < n; ++a) maxdeg = std::max(maxdeg, g.neighbors(a).size());
  const auto bound = delone::packing_bound(2, tau, sigma);
  v.require(maxdeg <= bound, "degree above packing bound");

  const double interior = r_max + y.margin + sigma;
  std::size_t checked = 0, pairs = 0;
  for (PointId x = 0; x < n; ++x) {
    if (y.window.boundary_distance(y.cloud.point(x)) < interior) continue;
    ++checked;
    const auto h = oracle::hops_from(g, x);
    for (PointId z = 0; z < n; ++z) {
      const double dd = oracle::dist(y.cloud, x, z);
      for (int r = 0; r <= r_max; ++r) {
        if (h[z] <= r) {
          ++pairs;
          v.require(dd <= r * sigma, "hop ball leaves D_M(x, r sigma) at " + std::to_string(x));
        }
        if (dd <= r) v.require(h[z] <= int(std::floor(r / y.eta)) + 1, "Euclidean ball leaves the hop ball at " + std::to_string(x));
      }
    }
  }
  v.require(checked > 0, "no interior vertex");
  v.note << "vertices=" << n << " edges=" << g.edge_count() << " max_degree=" << maxdeg << " <= " << bound
         << " eta=" << fmt(y.eta) << " interior vertices=" << checked << " (boundary distance >= "
         << fmt(interior) << ") hop-ball pairs=" << pairs;
  return v.done();
}

// ---------------------------------------------------------------------------
// 5. Ball isomorphism against exhaustive search

Outcome iso_equivalence() {
  Verdict v;
  std::mt19937_64 rng(505);
  std::size_t isos = 0, agree = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    const unsigned colors = 1 + unsigned(rng() % 3);
    const double p = 0.2 + 0.6 * double(rng() % 100) / 100.0;
    const auto g1 = oracle::random_graph(rng, n, p, colors);
    const auto perm = shuffled_ids(rng, n);
    const bool twin = trial % 2 == 0;
    const auto g2 = twin ? relabel(g1, perm) : oracle::random_graph(rng, n, p, colors);
    const PointId x1 = PointId(rng() % n);
    const PointId x2 = twin ? perm[x1] : PointId(rng() % n);
    const std::uint32_t r = rng() % 4;
    const auto b1 = gspace::hop_ball(g1, x1, r);
    const auto b2 = gspace::hop_ball(g2, x2, r);
    const auto got = gspace::ball_isomorphism(b1, b2);
    const auto want = oracle::brute_ball_iso(g1, x1, g2, x2, int(r));
    const bool same = got.has_value() == want.has_value() && (!got || got->image == *want);
    v.require(same, "trial " + std::to_string(trial) + " disagrees");
    v.require(!twin || got.has_value(), "relabelled twin not recognised in trial " + std::to_string(trial));
    agree += same;
    isos += want.has_value();
  }
  v.note << agree << "/500 agree, " << isos << " isomorphic pairs, witnesses equal to the lexicographically first";
  return v.done();
}

// ---------------------------------------------------------------------------
// 6. Integer-metric rigidity

Outcome integer_rigidity() {
  Verdict v;
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> lam(1.0, 1.9);
  std::size_t accepted = 0, rejected = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng() % 7;
    const auto g1 = oracle::random_graph(rng, n, 0.35, 2);
    const PointId x1 = PointId(rng() % n);
    const std::uint32_t r = 1 + rng() % 2;
    const auto dom = oracle::ball(oracle::hops_from(g1, x1), int(r));
    const auto perm = shuffled_ids(rng, n);
    const auto g2 = relabel(g1, perm);
    std::vector<std::pair<PointId, PointId>> map;
    for (auto s : dom) map.emplace_back(s, perm[s]);
    const int kind = trial % 3;
    if (kind == 1 && map.size() > 2) {
      // Swap two non-centre images.
      std::size_t a = 0, b = 0;
      while (map[a].first == x1) ++a;
      b = a + 1;
      while (b < map.size() && map[b].first == x1) ++b;
      if (b < map.size()) std::swap(map[a].second, map[b].second);
    } else if (kind == 2) {
      // Random injective map with the centre pinned.
      auto targets = shuffled_ids(rng, n);
      targets.erase(std::find(targets.begin(), targets.end(), perm[x1]));
      std::size_t t = 0;
      for (auto& [s, img] : map) img = s == x1 ? perm[x1] : targets[t++];
    }
    const double l = lam(rng);
    const auto rep = gspace::ppqi_check(g1, x1, g2, perm[x1], r, l, map);
    // Exhaustive isomorphism-onto-image check.
    bool iso = true;
    for (std::size_t a = 0; a < map.size(); ++a) {
      for (std::size_t b = a + 1; b < map.size(); ++b) {
        if (map[a].second == map[b].second) iso = false;
        if (g1.adjacent(map[a].first, map[b].first) != g2.adjacent(map[a].second, map[b].second)) iso = false;
      }
    }
    v.require(rep.isomorphism_onto_image == iso, "report disagrees with exhaustive check in trial " + std::to_string(trial));
    if (rep.accepted) {
      ++accepted;
      v.require(iso, "accepted map is not an isomorphism onto its image in trial " + std::to_string(trial));
    } else {
      ++rejected;
    }
  }
  v.require(accepted >= 40, "too few accepted maps to be meaningful");
  v.note << accepted << " accepted (all isomorphisms onto image), " << rejected << " rejected";
  return v.done();
}

// ---------------------------------------------------------------------------
// 7. Schedule validity, re-derived with plain pow

Outcome schedule_validity() {
  Verdict v;
  const auto sc = sched::make_schedule(1.25, fixture::cycle_probe, 3);
  const auto recorded = sched::check_schedule(sc);
  const double l0 = 1.25;
  double min_slack = metric::kInfinity;
  auto lin = [&](const std::string& name, std::size_t i, double lhs, double rhs) {
    const double s = (lhs - rhs) / rhs;
    min_slack = std::min(min_slack, s);
    v.require(s >= 0.05, name + "[" + std::to_string(i) + "] slack " + fmt(s));
    for (const auto& c : recorded)
      if (c.name == name && c.index == int(i)) v.require(std::abs(c.slack - s) < 1e-9, name + " recorded slack differs");
  };
  auto logc = [&](const std::string& name, std::size_t i, double lhs, double rhs) {
    v.require(lhs > rhs, name + "[" + std::to_string(i) + "] fails");
    if (rhs <= 1) return;  // automatic
    const double s = std::log(lhs) / std::log(rhs) - 1;
    min_slack = std::min(min_slack, s);
    v.require(s >= 0.05, name + "[" + std::to_string(i) + "] log slack " + fmt(s));
    for (const auto& c : recorded)
      if (c.name == name && c.index == int(i)) v.require(std::abs(c.slack - s) < 1e-6 * std::max(1.0, s), name + " recorded slack differs");
  };
  // A constantly coloured cycle is vertex transitive, so omega is 0 at every radius.
  for (double w : sc.omega) v.require(w == 0.0, "omega on the cycle should be 0");
  for (std::size_t i = 0; i < sc.depth(); ++i) {
    const bool first = i == 0;
    const double rp = first ? 0 : sc.r[i - 1], sp = first ? 0 : sc.s[i - 1], tp = first ? 0 : sc.t[i - 1];
    const double wp = first ? 0 : sc.omega[i - 1];
    const double lp = first ? std::pow(l0, 2.2) : sc.lambda[i - 1];
    const double r = sc.r[i], s = sc.s[i], t = sc.t[i], l = sc.lambda[i], w = sc.omega[i];
    lin("radius_growth", i, r, std::pow(l0, 5) / (l0 - 1) * (rp + sp + tp + 2 * wp + 1));
    lin("separation_growth", i, s, 2 * std::pow(l0, 5) * (r + sp + w));
    lin("margin_growth", i, t, std::pow(l0, 3) * (5 * tp + r + sp + 2 * wp + 1));
    const double l2 = l * l;
    lin("margin_distortion", i, t, 4 * (l2 * l2 + l2 - 1) / l2 * r + tp + l2 * (sp + 2 * wp + w));
    logc("lambda_decay", i, lp, l2);
    if (!first) {
      const double cap = std::pow(2.0, std::pow(2.0, -double(i)));
      for (int e : {5, 6}) {
        const double ratio = r * (std::pow(l, e) - 1) * lp * lp / (rp * (std::pow(lp, e) - 1) * l2);
        logc("lambda_ratio" + std::to_string(e), i, cap, ratio);
      }
    }
    // lambda_{k+1}^2 < lambda_k gives lambda_{i+m} < lambda_i^(2^-m), so the
    // infinite product from i is below lambda_i^(1 + 1/2 + ...) = lambda_i^2.
    double prod = 1;
    for (std::size_t k = i; k < sc.depth(); ++k) prod *= sc.lambda[k];
    v.require(prod < l2, "materialised product above lambda_i^2");
  }
  const double big_lambda0 = sc.lambda[0] * sc.lambda[0];
  v.require(big_lambda0 < 2, "Lambda_0 bound not below 2");
  v.require(sched::schedule_valid(recorded, 0.05), "library evaluator disagrees");
  v.note << "r=" << fmt(sc.r[0]) << "," << fmt(sc.r[1]) << "," << fmt(sc.r[2]) << " s=" << fmt(sc.s[0]) << ","
         << fmt(sc.s[1]) << "," << fmt(sc.s[2]) << " t=" << fmt(sc.t[0]) << "," << fmt(sc.t[1]) << ","
         << fmt(sc.t[2]) << " lambda=" << sc.lambda[0] << "," << fmt(sc.lambda[1]) << "," << fmt(sc.lambda[2])
         << " min slack=" << fmt(min_slack) << " Lambda_0 < " << big_lambda0;
  return v.done();
}

// ---------------------------------------------------------------------------
// 8. Hierarchy clauses

Outcome hierarchy_clauses() {
  Verdict v;
  const auto& sc = fixture::default_schedule();
  const std::size_t N = fixture::cycle_length(sc);
  v.require(double(N) >= 4 * sc.r[2], "cycle shorter than 4 r_2");
  const auto g = cycle_graph(N);
  hier::Hierarchy h(g, sc, hier::HierarchyOptions{});
  h.build(2);
  std::size_t dich = 0, manifold = 0;
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}}) {
    const auto rep = hier::verify_level(h, i, j);
    for (const auto& c : rep.clauses)
      v.require(c.ok, "level (" + std::to_string(i) + "," + std::to_string(j) + ") clause " + c.name + " " + c.detail);
    v.require(rep.clauses.size() == 12, "clause count");
    if (i == 0 && j == 2) {
      dich = rep.dichotomy_pairs;
      manifold = rep.manifold_threshold_pairs;
    }
  }
  const auto x0 = hier::limit_level(h, 0);
  const auto x1 = hier::limit_level(h, 1);
  const auto nr = hier::check_nesting(h, x0, x1);
  v.require(nr.nested, "X_1 not inside X_0");
  v.require(nr.restriction_coherent, "maps of X_1 do not restrict to maps of X_0");
  // Independent subset test.
  v.require(std::includes(x0.members.begin(), x0.members.end(), x1.members.begin(), x1.members.end()),
            "subset re-check");
  std::ostringstream dens;
  for (const auto* lim : {&x0, &x1}) {
    const auto dr = hier::density_report(h, *lim);
    for (double m : dr.measured) {
      v.require(std::isfinite(m), "infinite covering radius");
      v.require(m <= dr.bound, "covering radius above the assembled bound");
    }
    v.require(dr.pass, "density report fails");
    dens << " X_" << lim->i << ": covering " << fmt(dr.measured.front()) << " over D(p," << dr.windows.front()
         << ") <= " << fmt(dr.bound);
  }
  v.note << "N=" << N << " |X^1_0|=" << h.level(0, 1).members.size() << " |X^2_0|=" << h.level(0, 2).members.size()
         << " |X^2_1|=" << h.level(1, 2).members.size() << " all 12 clauses on 3 levels; (0,2) dichotomy pairs="
         << dich << " (lambda-scaled threshold misses " << manifold << ");" << dens.str();
  return v.done();
}

// ---------------------------------------------------------------------------
// 9. Pattern statistics

Outcome pattern_statistics() {
  Verdict v;
  std::vector<Color> periodic(1000);
  for (std::size_t k = 0; k < periodic.size(); ++k) periodic[k] = 1 + k % 2;
  const auto g = path_graph(1000, periodic);
  double worst = 0;
  for (std::uint32_t r = 0; r <= 10; ++r) {
    gspace::Window w;
    for (PointId x = r; x + r < 1000; ++x) w.vertices.push_back(x);
    for (PointId p : {PointId(500), PointId(501), PointId(r)}) {
      const auto om = gspace::omega_set(g, p, r, w);
      // Interior balls are paths, so the pattern is the parity of the centre.
      bool same_parity = !om.empty();
      for (auto x : om) same_parity = same_parity && x % 2 == p % 2;
      v.require(same_parity, "omega set is not the parity class");
      const auto rep = gspace::repetitivity_radius(g, p, r, w);
      worst = std::max(worst, rep.radius);
      v.require(rep.repetitive && rep.radius <= 2, "omega above 2 at R=" + std::to_string(r));
    }
  }
  std::vector<Color> injective(1000);
  std::iota(injective.begin(), injective.end(), 1);
  const auto gi = path_graph(1000, injective);
  const auto t = gspace::persistence_depth(gi, gspace::Window::whole(gi), 3);
  v.require(t.max_off_diagonal() == 0, "injective path has positive persistence off the diagonal");
  v.note << "max omega(R) for R<=10: " << worst << "; injective path: max off-diagonal depth "
         << t.max_off_diagonal() << " over " << t.vertices.size() << " vertices";
  return v.done();
}

// ---------------------------------------------------------------------------
// 10. End-to-end determinism

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Verdict v;
  const auto root = fs::temp_directory_path() / "repnet_acceptance_pipeline";
  fs::remove_all(root);
  std::string manifests[2];
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    cli::RunConfig cfg;
    cli::apply_settings(cfg, cli::read_config_file(REPNET_SOURCE_DIR "/configs/default.conf"));
    cfg.out = (root / ("run" + std::to_string(k))).string();
    codes[k] = cli::run_guarded("pipeline", cli::cmd_pipeline, cfg);
    manifests[k] = slurp(fs::path(cfg.out) / "manifest.json");
  }
  v.require(codes[0] == cli::kExitOk && codes[1] == cli::kExitOk, "pipeline exit codes " + std::to_string(codes[0]) + "," + std::to_string(codes[1]));
  v.require(!manifests[0].empty() && manifests[0] == manifests[1], "manifests differ");
  const auto m = nlohmann::json::parse(manifests[0]);
  v.note << "two runs, " << m["artifacts"].size() << " artifacts, manifest " << manifests[0].size()
         << " bytes identical";
  fs::remove_all(root);
  return v.done();
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all = {
      {1, "net laws", 10, net_laws},
      {2, "perturbation arithmetic", 5, perturbation_arithmetic},
      {3, "corona gap at desk scale", 60, corona_gap},
      {4, "graph extraction claims", 60, graph_extraction},
      {5, "ball isomorphism vs exhaustive search", 30, iso_equivalence},
      {6, "integer-metric rigidity", 10, integer_rigidity},
      {7, "schedule validity", 1, schedule_validity},
      {8, "hierarchy clauses", 120, hierarchy_clauses},
      {9, "pattern statistics", 10, pattern_statistics},
      {10, "end-to-end determinism", 300, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %s  (%.2f s, limit %.0f s)%s  %s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs,
                c.limit_seconds, in_time ? "" : " over time", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
