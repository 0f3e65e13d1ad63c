#include <algorithm>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "repnet/metric_core.hpp"
#include "repnet/point_cloud.hpp"

using namespace repnet;
using metric::all_ids;

namespace {

PointCloud line(std::vector<double> xs) { return PointCloud(1, std::move(xs)); }

}  // namespace

TEST_CASE("greedy net on a hand-traced line") {
  // 0 kept, 1 blocked, 2.5 kept, 3 blocked, 5 kept, 6.2 blocked at 1.2.
  const auto c = line({0, 1, 2.5, 3, 5, 6.2});
  EuclideanSpace s(c, 2.0);
  const auto ids = all_ids(c.size());
  const auto cert = metric::greedy_maximal_net(s, 2.0, {}, ids);
  CHECK(cert.subset == std::vector<PointId>{0, 2, 4});
  CHECK(cert.separation == 2.0);
  CHECK(cert.covering_radius == doctest::Approx(1.2));
}

TEST_CASE("required points are kept first") {
  const auto c = line({0, 1, 2.5, 3, 5, 6.2});
  EuclideanSpace s(c, 2.0);
  const auto ids = all_ids(c.size());
  const std::vector<PointId> req{1};
  const auto cert = metric::greedy_maximal_net(s, 2.0, req, ids);
  // 1 first, then 0 and 2.5 blocked, 3 kept, 5 kept at exactly 2, 6.2 blocked.
  CHECK(cert.subset == std::vector<PointId>{1, 3, 4});

  const std::vector<PointId> bad{0, 1};
  CHECK_THROWS_AS(metric::greedy_maximal_net(s, 2.0, bad, ids), std::invalid_argument);
  const std::vector<PointId> partial{0, 2};
  const std::vector<PointId> outside{4};
  CHECK_THROWS_AS(metric::greedy_maximal_net(s, 2.0, outside, partial), std::invalid_argument);
}

TEST_CASE("separation policy at the boundary") {
  const auto c = line({0, 1.9999999999});
  EuclideanSpace s(c, 2.0);
  const auto ids = all_ids(2);
  CHECK_FALSE(metric::is_k_separated(s, ids, 2.0));
  metric::SeparationPolicy tol;
  tol.tolerant = true;
  CHECK(metric::is_k_separated(s, ids, 2.0, tol));
  CHECK(metric::greedy_maximal_net(s, 2.0, {}, ids).subset.size() == 1);
  CHECK(metric::greedy_maximal_net(s, 2.0, {}, ids, tol).subset.size() == 2);
}

TEST_CASE("penumbra, min pair and covering radius") {
  const auto c = line({0, 1, 2.5, 3, 5, 6.2});
  EuclideanSpace s(c, 1.0);
  const std::vector<PointId> q{0, 4};
  CHECK(metric::closed_penumbra(s, q, 1.0) == std::vector<PointId>{0, 1, 4});
  CHECK(metric::closed_penumbra(s, {}, 5.0).empty());
  CHECK(metric::min_pair_distance(s, all_ids(6)) == doctest::Approx(0.5));
  CHECK(metric::min_pair_distance(s, std::vector<PointId>{3}) == metric::kInfinity);
  CHECK(metric::covering_radius(s, q) == doctest::Approx(2.5));  // 2.5 is halfway
  CHECK_THROWS_AS(metric::covering_radius(s, {}), std::invalid_argument);
}

TEST_CASE("greedy nets against brute force on random clouds") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 8; ++trial) {
    const auto c = oracle::random_cloud(rng, 300, 20.0);
    const double k = 0.5 + trial * 0.4;
    EuclideanSpace s(c, k);
    const auto ids = all_ids(c.size());
    const auto cert = metric::greedy_maximal_net(s, k, {}, ids);
    std::vector<char> in(c.size(), 0);
    for (auto v : cert.subset) in[v] = 1;
    for (std::size_t a = 0; a < cert.subset.size(); ++a)
      for (std::size_t b = a + 1; b < cert.subset.size(); ++b)
        CHECK(oracle::dist(c, cert.subset[a], cert.subset[b]) >= k);
    double cov = 0;
    for (PointId v = 0; v < c.size(); ++v) {
      double best = 1e300;
      for (auto w : cert.subset) best = std::min(best, oracle::dist(c, v, w));
      cov = std::max(cov, best);
      if (!in[v]) CHECK(best < k);  // re-insertion would break separation
    }
    CHECK(cov <= k);
    CHECK(cert.covering_radius == doctest::Approx(cov).epsilon(1e-12));
  }
}

TEST_CASE("perturbation certificates") {
  // Four points spaced 2 apart and their images; the image of k is at 4 + k.
  const auto c = line({0, 2, 4, 6, 0.1, 2.2, 3.9, 6.0});
  EuclideanSpace s(c, 1.0);
  metric::NetCertificate q;
  q.subset = {0, 1, 2, 3};
  q.separation = 2.0;
  q.covering_radius = 1.0;
  metric::Perturbation p{{0, 1, 2, 3}, {4, 5, 6, 7}, 0.25};
  const auto out = metric::apply_perturbation(s, q, p);
  CHECK(out.separation_claimed);
  CHECK(out.certificate.separation == doctest::Approx(1.5));
  CHECK(out.certificate.covering_radius == doctest::Approx(1.25));
  CHECK(out.certificate.subset == std::vector<PointId>{4, 5, 6, 7});
  CHECK(oracle::min_pair(PointCloud(1, {0.1, 2.2, 3.9, 6.0})) >= out.certificate.separation);

  SUBCASE("no separation claim once 2 eps reaches tau") {
    metric::Perturbation wide{{0, 1, 2, 3}, {4, 5, 6, 7}, 1.0};
    const auto w = metric::apply_perturbation(s, q, wide);
    CHECK_FALSE(w.separation_claimed);
    CHECK(w.certificate.separation == 0.0);
  }
  SUBCASE("rejects long moves and non-bijections") {
    metric::Perturbation tight{{0, 1, 2, 3}, {4, 5, 6, 7}, 0.15};
    CHECK_THROWS_AS(metric::apply_perturbation(s, q, tight), std::invalid_argument);
    metric::Perturbation twice{{0, 1, 2, 3}, {4, 4, 6, 7}, 3.0};
    CHECK_THROWS_AS(metric::apply_perturbation(s, q, twice), std::invalid_argument);
    metric::Perturbation missing{{0, 1, 2}, {4, 5, 6}, 0.25};
    CHECK_THROWS_AS(metric::apply_perturbation(s, q, missing), std::invalid_argument);
  }
}

TEST_CASE("small worked examples") {
  const auto c = line({0, 1, 2, 3, 4});
  EuclideanSpace s(c, 1.0);
  const auto ids = all_ids(5);
  const std::vector<PointId> q0{0};
  CHECK(metric::closed_penumbra(s, q0, 2.0) == std::vector<PointId>{0, 1, 2});
  CHECK(metric::closed_penumbra(s, ids, 0.0) == ids);
  CHECK(metric::is_k_separated(s, std::vector<PointId>{3}, 100.0));
  const std::vector<PointId> three{0, 1, 2};
  CHECK(metric::is_k_separated(s, three, 1.0));
  CHECK_FALSE(metric::is_k_separated(s, three, 1.5));
  CHECK(metric::greedy_maximal_net(s, 2.0, {}, ids).subset == std::vector<PointId>{0, 2, 4});
  CHECK(metric::greedy_maximal_net(s, 2.0, {}, {}).subset.empty());
  CHECK(metric::covering_radius(s, ids) == 0.0);

  std::vector<double> eleven(11);
  for (int k = 0; k <= 10; ++k) eleven[k] = k;
  const auto l11 = line(eleven);
  EuclideanSpace s11(l11, 1.0);
  CHECK(metric::covering_radius(s11, std::vector<PointId>{0, 10}) == 5.0);
}

TEST_CASE("greedy extension of a nested chain stays separated") {
  // Each round extends the previous net with fresh candidates.
  std::mt19937_64 rng(29);
  const auto c = oracle::random_cloud(rng, 600, 15.0);
  EuclideanSpace s(c, 1.0);
  std::vector<PointId> net;
  for (std::size_t upto = 100; upto <= 600; upto += 100) {
    const auto cand = all_ids(upto);
    const auto cert = metric::greedy_maximal_net(s, 1.0, net, cand);
    CHECK(std::includes(cert.subset.begin(), cert.subset.end(), net.begin(), net.end()));
    CHECK(metric::is_k_separated(s, cert.subset, 1.0));
    net = cert.subset;
    std::sort(net.begin(), net.end());
  }
}

TEST_CASE("perturbation examples") {
  // Identity perturbation keeps the certificate.
  const auto c = line({0, 3, 6});
  EuclideanSpace s(c, 1.0);
  metric::NetCertificate q{{0, 1, 2}, 3.0, 1.5};
  auto out = metric::apply_perturbation(s, q, {{0, 1, 2}, {0, 1, 2}, 0.0});
  CHECK(out.certificate.separation == 3.0);
  CHECK(out.certificate.covering_radius == 1.5);
  // tau = 3, eps = 1.
  const auto m = line({0, 3, 6, 1, 2, 6});
  EuclideanSpace sm(m, 1.0);
  out = metric::apply_perturbation(sm, q, {{0, 1, 2}, {3, 4, 5}, 1.0});
  CHECK(out.separation_claimed);
  CHECK(out.certificate.separation == 1.0);
  CHECK(out.certificate.covering_radius == 2.5);
  CHECK(metric::min_pair_distance(sm, std::vector<PointId>{3, 4, 5}) >= 1.0);
}
