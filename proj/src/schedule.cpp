#include "repnet/schedule.hpp"

#include <cmath>
#include <limits>

#include "repnet/common.hpp"

namespace repnet::sched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Values of lambda sit within 1e-5 of 1 by the third level; expm1/log1p keep
// lambda^e - 1 accurate there.
double pow_minus_one(double lambda, int e) { return std::expm1(e * std::log1p(lambda - 1.0)); }

double linear_slack(double lhs, double rhs) { return (lhs - rhs) / rhs; }

double log_slack(double lhs, double rhs) {
  const double lr = std::log(rhs);
  if (lr <= 0) return kInf;
  return std::log(lhs) / lr - 1.0;
}

// Right-hand sides at index i; previous values follow the zero convention at
// i = 0.
struct Prev {
  double r = 0, s = 0, t = 0, omega = 0, lambda = 0;
};

Prev prev_of(const Schedule& sc, std::size_t i) {
  if (i == 0) return {0, 0, 0, 0, sc.lambda_minus1};
  return {sc.r[i - 1], sc.s[i - 1], sc.t[i - 1], sc.omega[i - 1], sc.lambda[i - 1]};
}

double rhs7(double l0, const Prev& p) {
  return std::pow(l0, 5) / (l0 - 1) * (p.r + p.s + p.t + 2 * p.omega + 1);
}
double rhs8(double l0, const Prev& p, double r, double omega) {
  return 2 * std::pow(l0, 5) * (r + p.s + omega);
}
double rhs9(double l0, const Prev& p, double r) {
  return std::pow(l0, 3) * (5 * p.t + r + p.s + 2 * p.omega + 1);
}
double rhs10(const Prev& p, double r, double lambda, double omega) {
  const double l2 = lambda * lambda;
  const double big_lambda = l2;  // tail bound on Lambda_i
  return 4 * (l2 * l2 + l2 - 1) / l2 * r + p.t + big_lambda * (p.s + 2 * p.omega + omega);
}
// Distortion ratio bounded by 2^(2^-i), for exponent e.
double ratio12(double r, double lambda, double r_prev, double lambda_prev, int e) {
  return r * pow_minus_one(lambda, e) * lambda_prev * lambda_prev /
         (r_prev * pow_minus_one(lambda_prev, e) * lambda * lambda);
}

double with_slack(double rhs, double slack) {
  double v = std::ceil((1 + slack) * rhs);
  if (linear_slack(v, rhs) < slack) v += 1;
  return v;
}

}  // namespace

double Schedule::lambda_product(std::size_t i, std::size_t j) const {
  double p = 1.0;
  for (std::size_t k = i; k <= j && k < lambda.size(); ++k) p *= lambda[k];
  return p;
}

Schedule make_schedule(double lambda0, const OmegaProbe& omega_probe, std::size_t depth,
                       double slack) {
  if (!(lambda0 > 1 && lambda0 < std::sqrt(2.0))) {
    throw ConfigError("make_schedule: lambda0 must lie in (1, sqrt 2)");
  }
  if (depth == 0) throw ConfigError("make_schedule: depth must be positive");
  Schedule sc;
  sc.lambda0 = lambda0;
  sc.lambda_minus1 = std::pow(lambda0, 2.2);
  constexpr double kGuard = 1e-7;  // keeps the recorded slack clear of rounding
  for (std::size_t i = 0; i < depth; ++i) {
    const Prev p = prev_of(sc, i);
    const double r = with_slack(rhs7(lambda0, p), slack);
    const double omega = omega_probe(i, r);
    if (!std::isfinite(omega) || omega < 0) {
      throw ConstructionError("make_schedule: omega unbounded at level " + std::to_string(i) +
                              " (pattern not repetitive in the probe window)");
    }
    double lambda = lambda0;
    if (i > 0) {
      auto ok = [&](double l) {
        if (log_slack(p.lambda, l * l) < slack + kGuard) return false;
        const double cap = std::pow(2.0, std::ldexp(1.0, -static_cast<int>(i)));
        for (int e : {5, 6}) {
          if (log_slack(cap, ratio12(r, l, p.r, p.lambda, e)) < slack + kGuard) return false;
        }
        return true;
      };
      double lo = 1.0;
      double hi = std::pow(p.lambda, 1.0 / (2.0 * (1.0 + slack)));
      if (ok(hi)) {
        lo = hi;
      } else {
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (mid <= lo || mid >= hi) break;
          (ok(mid) ? lo : hi) = mid;
        }
      }
      if (!(lo > 1.0) || !ok(lo)) {
        throw ConstructionError("make_schedule: no lambda above 1 fits at level " + std::to_string(i));
      }
      lambda = lo;
    }
    const double s = with_slack(rhs8(lambda0, p, r, omega), slack);
    const double t = with_slack(std::max(rhs9(lambda0, p, r), rhs10(p, r, lambda, omega)), slack);
    sc.r.push_back(r);
    sc.s.push_back(s);
    sc.t.push_back(t);
    sc.lambda.push_back(lambda);
    sc.omega.push_back(omega);
  }
  return sc;
}

std::vector<ConditionCheck> check_schedule(const Schedule& sc) {
  std::vector<ConditionCheck> out;
  const double l0 = sc.lambda0;
  auto linear = [&](const char* name, std::size_t i, double lhs, double rhs) {
    ConditionCheck c;
    c.name = name;
    c.index = static_cast<int>(i);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = linear_slack(lhs, rhs);
    c.holds = lhs > rhs;
    out.push_back(c);
  };
  auto logarithmic = [&](const char* name, std::size_t i, double lhs, double rhs) {
    ConditionCheck c;
    c.name = name;
    c.index = static_cast<int>(i);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = log_slack(lhs, rhs);
    c.holds = lhs > rhs;
    if (!std::isfinite(c.slack)) c.note = "rhs <= 1, holds for any lambda";
    out.push_back(c);
  };
  for (std::size_t i = 0; i < sc.depth(); ++i) {
    const Prev p = prev_of(sc, i);
    linear("radius_growth", i, sc.r[i], rhs7(l0, p));
    linear("separation_growth", i, sc.s[i], rhs8(l0, p, sc.r[i], sc.omega[i]));
    linear("margin_growth", i, sc.t[i], rhs9(l0, p, sc.r[i]));
    linear("margin_distortion", i, sc.t[i], rhs10(p, sc.r[i], sc.lambda[i], sc.omega[i]));
    logarithmic("lambda_decay", i, p.lambda, sc.lambda[i] * sc.lambda[i]);
    if (i == 0) {
      ConditionCheck c;
      c.name = "lambda_ratio";
      c.index = 0;
      c.holds = true;
      c.slack = kInf;
      c.note = "r_{-1} = 0 leaves the ratio undefined; not imposed at i = 0";
      out.push_back(c);
    } else {
      const double cap = std::pow(2.0, std::ldexp(1.0, -static_cast<int>(i)));
      logarithmic("lambda_ratio5", i, cap, ratio12(sc.r[i], sc.lambda[i], p.r, p.lambda, 5));
      logarithmic("lambda_ratio6", i, cap, ratio12(sc.r[i], sc.lambda[i], p.r, p.lambda, 6));
    }
    ConditionCheck tail;
    tail.name = "tail";
    tail.index = static_cast<int>(i);
    tail.lhs = sc.lambda_tail_bound(i);
    tail.rhs = sc.lambda_product(i, sc.depth() - 1);
    tail.slack = linear_slack(tail.lhs, tail.rhs);
    tail.holds = tail.lhs > tail.rhs;
    tail.note = "materialized Lambda_{i,J} below the tail bound lambda_i^2";
    out.push_back(tail);
  }
  if (sc.depth() > 0) {
    ConditionCheck c;
    c.name = "lambda_total";
    c.index = 0;
    c.lhs = 2.0;
    c.rhs = sc.lambda_tail_bound(0);
    c.slack = linear_slack(c.lhs, c.rhs);
    c.holds = c.lhs > c.rhs;
    c.note = "Lambda_0 < lambda_0^2 < 2";
    out.push_back(c);
  }
  return out;
}

bool schedule_valid(const std::vector<ConditionCheck>& checks, double min_slack) {
  for (const auto& c : checks) {
    if (!c.holds) return false;
    if (c.name == "tail" || c.name == "lambda_total") continue;
    if (c.slack < min_slack) return false;
  }
  return true;
}

nlohmann::json to_json(const Schedule& s) {
  nlohmann::json j;
  j["lambda0"] = s.lambda0;
  j["lambda_minus1"] = s.lambda_minus1;
  j["r"] = s.r;
  j["s"] = s.s;
  j["t"] = s.t;
  j["lambda"] = s.lambda;
  j["omega"] = s.omega;
  std::vector<double> products;
  std::vector<double> tails;
  for (std::size_t i = 0; i < s.depth(); ++i) {
    products.push_back(s.lambda_product(i, s.depth() - 1));
    tails.push_back(s.lambda_tail_bound(i));
  }
  j["lambda_products"] = products;
  j["lambda_tail_bounds"] = tails;
  return j;
}

nlohmann::json to_json(const ConditionCheck& c) {
  nlohmann::json j;
  j["condition"] = c.name;
  j["index"] = c.index;
  j["lhs"] = c.lhs;
  j["rhs"] = c.rhs;
  j["slack"] = std::isfinite(c.slack) ? nlohmann::json(c.slack) : nlohmann::json(nullptr);
  j["holds"] = c.holds;
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

}  // namespace repnet::sched
