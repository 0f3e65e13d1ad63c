#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <type_traits>

#include "repnet/colored_graph.hpp"
#include "repnet/common.hpp"
#include "repnet/delone.hpp"
#include "repnet/graph_space.hpp"
#include "repnet/hierarchy.hpp"
#include "repnet/metric_core.hpp"
#include "repnet/parallel.hpp"
#include "repnet/point_cloud.hpp"
#include "repnet/schedule.hpp"

namespace repnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x)) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
  return x;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("config: " + key + " expects a non-negative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " out of range");
  }
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dim", [](RunConfig& c, const std::string& v) { c.dim = parse_uint("dim", v); }},
      {"box",
       [](RunConfig& c, const std::string& v) {
         c.box.clear();
         for (const auto& p : split(v, ',')) c.box.push_back(parse_double("box", trim(p)));
       }},
      {"tau", [](RunConfig& c, const std::string& v) { c.tau = parse_double("tau", v); }},
      {"eta", [](RunConfig& c, const std::string& v) { c.eta = parse_double("eta", v); }},
      {"sigma", [](RunConfig& c, const std::string& v) { c.sigma = parse_double("sigma", v); }},
      {"epsilon", [](RunConfig& c, const std::string& v) { c.epsilon = parse_double("epsilon", v); }},
      {"frozen", [](RunConfig& c, const std::string& v) { c.frozen = parse_uint("frozen", v); }},
      {"lambda0", [](RunConfig& c, const std::string& v) { c.lambda0 = parse_double("lambda0", v); }},
      {"depth", [](RunConfig& c, const std::string& v) { c.depth = parse_uint("depth", v); }},
      {"interior_margin",
       [](RunConfig& c, const std::string& v) { c.interior_margin = parse_double("interior_margin", v); }},
      {"sandwich_radius",
       [](RunConfig& c, const std::string& v) {
         c.sandwich_radius = static_cast<int>(parse_uint("sandwich_radius", v));
       }},
      {"analysis_radii",
       [](RunConfig& c, const std::string& v) {
         c.analysis_radii.clear();
         for (const auto& p : split(v, ',')) {
           c.analysis_radii.push_back(static_cast<std::uint32_t>(parse_uint("analysis_radii", trim(p))));
         }
       }},
      {"persistence_sample",
       [](RunConfig& c, const std::string& v) { c.persistence_sample = parse_uint("persistence_sample", v); }},
      {"persistence_radius",
       [](RunConfig& c, const std::string& v) {
         c.persistence_radius = static_cast<std::uint32_t>(parse_uint("persistence_radius", v));
       }},
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_uint("seed", v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
      {"in", [](RunConfig& c, const std::string& v) { c.in = v; }},
      {"in2", [](RunConfig& c, const std::string& v) { c.in2 = v; }},
      {"certificate", [](RunConfig& c, const std::string& v) { c.certificate = v; }},
      {"net_k", [](RunConfig& c, const std::string& v) { c.net_k = parse_double("net_k", v); }},
      {"x1", [](RunConfig& c, const std::string& v) { c.x1 = static_cast<std::uint32_t>(parse_uint("x1", v)); }},
      {"x2", [](RunConfig& c, const std::string& v) { c.x2 = static_cast<std::uint32_t>(parse_uint("x2", v)); }},
      {"r_max",
       [](RunConfig& c, const std::string& v) { c.r_max = static_cast<std::uint32_t>(parse_uint("r_max", v)); }},
      {"base_point",
       [](RunConfig& c, const std::string& v) {
         c.base_point = static_cast<std::uint32_t>(parse_uint("base_point", v));
       }},
  };
  return table;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (!setters().count(key)) {
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    auto it = setters().find(k);
    if (it == setters().end()) throw ConfigError("config: unknown key '" + k + "'");
    it->second(cfg, v);
  }
}

void RunConfig::validate() const {
  if (dim == 0) throw ConfigError("config: dim must be positive");
  if (box.size() != 2 * dim) {
    throw ConfigError("config: box needs " + std::to_string(2 * dim) + " numbers (lo..., hi...)");
  }
  for (std::size_t k = 0; k < dim; ++k) {
    if (!(box[k] < box[dim + k])) throw ConfigError("config: box has lo >= hi on axis " + std::to_string(k));
  }
  if (!(tau > 0)) throw ConfigError("config: tau must be positive");
  if (!(eta > 0)) throw ConfigError("config: eta must be positive");
  if (!(sigma >= 3 * eta)) {
    throw ConfigError("config: sigma must be at least 3 eta (sigma=" + format_double(sigma) +
                      ", eta=" + format_double(eta) + ")");
  }
  if (!(epsilon > 0 && epsilon < tau / 2)) throw ConfigError("config: epsilon must lie in (0, tau/2)");
  if (!(lambda0 > 1 && lambda0 < std::sqrt(2.0))) throw ConfigError("config: lambda0 must lie in (1, sqrt 2)");
  if (depth < 2) throw ConfigError("config: depth must be at least 2");
  if (analysis_radii.empty()) throw ConfigError("config: analysis_radii is empty");
  if (net_k < 0) throw ConfigError("config: net_k must be non-negative");
}

json RunConfig::to_json() const {
  json j;
  j["dim"] = dim;
  j["box"] = box;
  j["tau"] = tau;
  j["eta"] = eta;
  j["sigma"] = sigma;
  j["epsilon"] = epsilon;
  j["frozen"] = frozen;
  j["lambda0"] = lambda0;
  j["depth"] = depth;
  j["interior_margin"] = interior_margin;
  j["sandwich_radius"] = sandwich_radius;
  j["analysis_radii"] = analysis_radii;
  j["persistence_sample"] = persistence_sample;
  j["persistence_radius"] = persistence_radius;
  j["seed"] = seed;
  return j;
}

// ---------------------------------------------------------------------------
// Output bookkeeping

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("sha256: cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int k = 0; k < len; ++k) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return hex.str();
}

namespace {

using Clock = std::chrono::steady_clock;

// One command invocation: artifacts, checks and timings.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {
    fs::create_directories(cfg.out);
    report_["schema_version"] = kSchemaVersion;
    report_["command"] = command_;
    report_["config"] = cfg.to_json();
    report_["checks"] = json::object();
    report_["measurements"] = json::object();
    report_["counterexamples"] = json::object();
    report_["wall_clock_file"] = "timings.json";
  }

  std::string path(const std::string& name) const { return (fs::path(cfg_.out) / name).string(); }

  void write_text(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path(name));
    out << content;
    artifacts_.push_back(name);
  }
  void write_json(const std::string& name, const json& j, int indent = 2) {
    write_text(name, j.dump(indent) + "\n");
  }

  void check(const std::string& name, bool ok, const json& witness = nullptr) {
    report_["checks"][name] = ok;
    if (!ok && !witness.is_null()) report_["counterexamples"][name] = witness;
  }
  json& measure(const std::string& name) { return report_["measurements"][name]; }

  template <class F>
  auto stage(const std::string& name, F&& f) {
    const auto t0 = Clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings_[name] = std::chrono::duration<double>(Clock::now() - t0).count();
    } else {
      auto r = f();
      timings_[name] = std::chrono::duration<double>(Clock::now() - t0).count();
      return r;
    }
  }
  int finish() {
    bool green = true;
    for (const auto& [k, v] : report_["checks"].items()) green = green && v.get<bool>();
    report_["all_checks_passed"] = green;
    write_json("report.json", report_);
    json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["command"] = command_;
    manifest["artifacts"] = json::array();
    auto names = artifacts_;
    std::sort(names.begin(), names.end());
    for (const auto& n : names) {
      manifest["artifacts"].push_back(
          {{"path", n}, {"sha256", sha256_file(path(n))}, {"bytes", fs::file_size(path(n))}});
    }
    {
      std::ofstream out(path("manifest.json"), std::ios::binary);
      out << manifest.dump(2) << "\n";
    }
    {
      json t;
      t["command"] = command_;
      t["stages_seconds"] = timings_;
      t["workers"] = worker_count();
      std::ofstream out(path("timings.json"), std::ios::binary);
      out << t.dump(2) << "\n";
    }
    return green ? kExitOk : kExitVerification;
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  json report_;
  std::vector<std::string> artifacts_;
  std::map<std::string, double> timings_;
};

// Stage name of the most recent run, for error messages.
thread_local std::string g_stage;

delone::EuclideanBox box_of(const RunConfig& cfg) {
  delone::EuclideanBox b;
  b.lo.assign(cfg.box.begin(), cfg.box.begin() + static_cast<std::ptrdiff_t>(cfg.dim));
  b.hi.assign(cfg.box.begin() + static_cast<std::ptrdiff_t>(cfg.dim), cfg.box.end());
  b.validate();
  return b;
}

double margin_of(const RunConfig& cfg) { return cfg.interior_margin < 0 ? cfg.tau : cfg.interior_margin; }

std::string cloud_csv(const PointCloud& c) {
  std::ostringstream out;
  write_point_csv(out, c);
  return out.str();
}

PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open point file " + path);
  return read_point_csv(in);
}

ColoredGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open graph file " + path);
  return read_graph(in);
}

json box_json(const delone::EuclideanBox& b) { return {{"lo", b.lo}, {"hi", b.hi}}; }

json certificate_json(const delone::DeloneSet& x, double min_pair) {
  json j;
  j["tau"] = x.tau;
  j["eta"] = x.eta;
  j["margin"] = x.margin;
  j["window"] = box_json(x.window);
  j["points"] = x.cloud.size();
  j["min_pair_distance"] = std::isfinite(min_pair) ? json(min_pair) : json(nullptr);
  return j;
}

delone::DeloneSet load_set(const RunConfig& cfg, const std::string& cloud_path, const std::string& cert_path) {
  delone::DeloneSet x;
  x.cloud = load_cloud(cloud_path);
  if (!cert_path.empty()) {
    std::ifstream in(cert_path);
    if (!in) throw ConfigError("cannot open certificate " + cert_path);
    const auto j = json::parse(in);
    x.tau = j.at("tau").get<double>();
    x.eta = j.at("eta").get<double>();
    x.margin = j.at("margin").get<double>();
    x.window.lo = j.at("window").at("lo").get<std::vector<double>>();
    x.window.hi = j.at("window").at("hi").get<std::vector<double>>();
  } else {
    x.window = box_of(cfg);
    x.tau = cfg.tau;
    x.margin = margin_of(cfg);
    x.eta = delone::certify_covering_radius(x.cloud, x.window, x.margin, cfg.tau / 8);
  }
  if (x.cloud.dim() != x.window.dim()) throw ConfigError("point file dimension differs from the window");
  return x;
}

// Exact all-pairs minimum distance.
double exact_min_pair(const PointCloud& c) {
  const std::size_t n = c.size();
  std::vector<double> best(n, metric::kInfinity);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t a = begin; a < end; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        best[a] = std::min(best[a], euclidean_distance(c.point(PointId(a)), c.point(PointId(b))));
      }
    }
  });
  double m = metric::kInfinity;
  for (double v : best) m = std::min(m, v);
  return m;
}

// Spread-out frozen points: for each of `count` evenly spaced id targets take
// the first id at or after it lying at distance >= 2 sigma + 1 from the ones
// already chosen, so no frozen pair can sit in the gap.
std::vector<PointId> select_frozen(const PointCloud& c, std::size_t count, double sigma) {
  std::vector<PointId> out;
  const std::size_t n = c.size();
  for (std::size_t k = 0; k < count && n > 0; ++k) {
    for (std::size_t id = k * n / count; id < n; ++id) {
      bool ok = true;
      for (PointId f : out) {
        if (euclidean_distance(c.point(f), c.point(PointId(id))) < 2 * sigma + 1) ok = false;
      }
      if (ok) {
        out.push_back(PointId(id));
        break;
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Stages shared by the single commands and the pipeline

delone::DeloneSet stage_net(Run& run, const RunConfig& cfg) {
  delone::DeloneSet x;
  if (cfg.in.empty() || cfg.net_k > 0) {
    if (cfg.in.empty()) {
      delone::GenerateOptions opts;
      opts.interior_margin = cfg.interior_margin;
      x = delone::generate_delone(box_of(cfg), cfg.tau, cfg.seed, opts);
    } else {
      auto input = load_set(cfg, cfg.in, cfg.certificate);
      EuclideanSpace space(input.cloud, cfg.net_k);
      const auto cert = metric::greedy_maximal_net(space, cfg.net_k, {}, metric::all_ids(input.cloud.size()));
      x.cloud = PointCloud(input.cloud.dim());
      for (PointId id : cert.subset) x.cloud.push_back(input.cloud.point(id));
      x.tau = cfg.net_k;
      x.window = input.window;
      x.margin = input.margin + cfg.net_k;
      // Every input point is within K of the net, so eta grows by at most K.
      x.eta = std::min(input.eta + cfg.net_k,
                       delone::certify_covering_radius(x.cloud, x.window, x.margin, cfg.tau / 8));
      run.measure("net_covering_radius_over_input") = cert.covering_radius;
    }
  } else {
    x = load_set(cfg, cfg.in, cfg.certificate);
  }
  const double mp = exact_min_pair(x.cloud);
  run.write_text("points.csv", cloud_csv(x.cloud));
  run.write_json("net_certificate.json", certificate_json(x, mp));
  run.measure("net") = {{"points", x.cloud.size()}, {"eta", x.eta}, {"min_pair_distance", mp}};
  run.check("net.separated", mp >= x.tau, {{"min_pair_distance", mp}});
  run.check("net.eta_within_config", x.eta <= cfg.eta, {{"eta", x.eta}, {"configured", cfg.eta}});
  return x;
}

void pair_band(const PointCloud& c, double lo, double hi, const std::string& phase, std::ostringstream& csv,
               std::vector<double>& dists) {
  const std::size_t n = c.size();
  for (PointId a = 0; a < n; ++a) {
    for (PointId b = a + 1; b < n; ++b) {
      const double d = euclidean_distance(c.point(a), c.point(b));
      if (d >= lo && d <= hi) {
        csv << phase << "," << a << "," << b << "," << format_double(d) << "\n";
        dists.push_back(d);
      }
    }
  }
}

delone::CoronaGapResult stage_perturb(Run& run, const RunConfig& cfg, const delone::DeloneSet& x) {
  const auto budget = delone::corona_volume_budget(x.cloud.dim(), x.tau, cfg.sigma, cfg.epsilon);
  const auto params = delone::make_corona_params(x.cloud.dim(), x.tau, cfg.sigma, cfg.epsilon);
  const auto frozen = select_frozen(x.cloud, cfg.frozen, cfg.sigma);
  auto res = delone::corona_gap_perturb(x, params, frozen);
  const auto& y = res.set;
  const std::size_t n = x.cloud.size();

  // Independent re-checks on the output.
  bool frozen_ok = true;
  for (PointId f : frozen) {
    const auto a = x.cloud.point(f);
    const auto b = y.cloud.point(f);
    frozen_ok = frozen_ok && std::equal(a.begin(), a.end(), b.begin());
  }
  const auto joined = join_clouds(x.cloud, y.cloud);
  EuclideanSpace space(joined, std::max(x.tau, cfg.epsilon));
  metric::NetCertificate before;
  before.subset = metric::all_ids(n);
  before.separation = x.tau;
  before.covering_radius = x.eta;
  bool is_pert = true;
  json pert_witness;
  metric::PerturbedCertificate after;
  try {
    after = metric::apply_perturbation(space, before, res.perturbation);
  } catch (const std::invalid_argument& e) {
    is_pert = false;
    pert_witness = e.what();
  }
  const double mp = exact_min_pair(y.cloud);
  const double eta_out = delone::certify_covering_radius(y.cloud, y.window, y.margin, x.tau / 8);
  const std::size_t gap = delone::count_gap_violations(y.cloud, params.sigma, params.rho);
  const std::size_t gap_before = delone::count_gap_violations(x.cloud, params.sigma, params.rho);

  run.write_text("perturbed.csv", cloud_csv(y.cloud));
  run.write_json("perturbed_certificate.json", certificate_json(y, mp));
  json pj;
  pj["epsilon"] = params.epsilon;
  pj["sigma"] = params.sigma;
  pj["rho"] = params.rho;
  pj["P_epsilon"] = params.P_epsilon;
  pj["budget"] = {{"C", budget.C}, {"K", budget.K}, {"L", budget.L}, {"P0", budget.P0}};
  pj["frozen"] = frozen;
  pj["moved"] = res.moved;
  pj["max_displacement"] = res.max_displacement;
  pj["candidates_tested"] = res.candidates_tested;
  pj["pairs_joined_ids"] = json::array();
  for (std::size_t k = 0; k < n; ++k) {
    pj["pairs_joined_ids"].push_back({res.perturbation.domain[k], res.perturbation.image[k]});
  }
  run.write_json("perturbation.json", pj, -1);

  // Plot data: pair distances near sigma, and a histogram with bins of
  // width rho / 2 over sigma +- 20 rho.
  const double band = 20 * params.rho;
  std::ostringstream csv;
  csv << "phase,a,b,distance\n";
  std::vector<double> d_before, d_after;
  pair_band(x.cloud, params.sigma - band, params.sigma + band, "before", csv, d_before);
  pair_band(y.cloud, params.sigma - band, params.sigma + band, "after", csv, d_after);
  run.write_text("pair_distances.csv", csv.str());
  std::ostringstream hist;
  // after_in_gap counts pairs strictly inside (sigma - rho, sigma + rho); pairs
  // on the closed boundary are admissible and land in the edge bins.
  hist << "bin_lo,bin_hi,before,after,after_in_gap\n";
  const int bins = 80;
  const double w = params.rho / 2;
  std::size_t in_band_after = 0;
  for (int k = 0; k < bins; ++k) {
    const double lo = params.sigma - band + k * w;
    const double hi = lo + w;
    auto count = [&](const std::vector<double>& v) {
      return std::count_if(v.begin(), v.end(), [&](double d) { return d >= lo && (d < hi || (k == bins - 1 && d <= hi)); });
    };
    std::vector<double> inside;
    for (double d : d_after) {
      if (delone::in_gap(d, params.sigma, params.rho)) inside.push_back(d);
    }
    const auto g = count(inside);
    in_band_after += static_cast<std::size_t>(g);
    hist << format_double(lo) << "," << format_double(hi) << "," << count(d_before) << ","
         << count(d_after) << "," << g << "\n";
  }
  run.write_text("gap_histogram.csv", hist.str());

  run.measure("perturb") = {{"moved", res.moved},
                            {"max_displacement", res.max_displacement},
                            {"rho", params.rho},
                            {"gap_pairs_before", gap_before},
                            {"gap_pairs_after", gap},
                            {"min_pair_distance", mp},
                            {"eta_certified", eta_out}};
  run.check("perturb.frozen_unmoved", frozen_ok && frozen.size() == cfg.frozen, {{"frozen", frozen}});
  run.check("perturb.epsilon_perturbation", is_pert && res.max_displacement <= cfg.epsilon, pert_witness);
  run.check("perturb.separated", mp >= x.tau - 2 * cfg.epsilon, {{"min_pair_distance", mp}});
  run.check("perturb.relatively_dense", eta_out <= x.eta + cfg.epsilon, {{"eta", eta_out}});
  run.check("perturb.certificate_consistent",
            is_pert && after.separation_claimed && after.certificate.separation <= mp &&
                std::abs(after.certificate.covering_radius - (x.eta + cfg.epsilon)) < 1e-12);
  run.check("perturb.gap_free", gap == 0, {{"pairs", gap}});
  run.check("perturb.histogram_band_empty", in_band_after == 0, {{"pairs", in_band_after}});
  return res;
}

ColoredGraph stage_graph(Run& run, const RunConfig& cfg, const delone::DeloneSet& y) {
  auto g = delone::delone_to_graph(y, cfg.sigma);
  std::ostringstream gs;
  write_graph(gs, g);
  run.write_text("graph.txt", gs.str());
  const auto bound = delone::packing_bound(y.cloud.dim(), y.tau, cfg.sigma);
  const double interior = cfg.sandwich_radius + y.margin + cfg.sigma;
  const auto sw = delone::check_metric_sandwich(y, g, cfg.sigma, cfg.sandwich_radius, interior);
  json gj;
  gj["vertices"] = g.size();
  gj["edges"] = g.edge_count();
  gj["max_degree"] = g.max_degree();
  gj["packing_bound"] = bound;
  gj["connected"] = is_connected(g);
  gj["eta"] = y.eta;
  gj["sandwich"] = {{"r_max", cfg.sandwich_radius},
                    {"interior", interior},
                    {"vertices_checked", sw.vertices_checked},
                    {"pairs_checked", sw.pairs_checked},
                    {"upper_violations", sw.upper_violations},
                    {"lower_violations", sw.lower_violations}};
  run.write_json("graph_report.json", gj);
  run.measure("graph") = gj;
  run.check("graph.connected", is_connected(g));
  run.check("graph.degree_bound", g.max_degree() <= bound, {{"max_degree", g.max_degree()}});
  run.check("graph.sigma_at_least_3_eta", cfg.sigma >= 3 * y.eta, {{"eta", y.eta}});
  run.check("graph.metric_sandwich", sw.ok() && sw.vertices_checked > 0, sw.first_counterexample);
  return g;
}

// omega_i on a cycle long enough for balls of radius r to be paths, measured
// over a small window around the base point.
double cycle_probe(std::size_t, double r) {
  const auto rr = static_cast<std::uint32_t>(std::floor(r));
  const std::uint32_t n = 4 * rr + 8;
  const auto g = cycle_graph(n);
  gspace::Window w;
  w.vertices = {0, 1, n / 2};
  return gspace::repetitivity_radius(g, 0, rr, w).radius;
}

sched::Schedule stage_schedule(Run& run, const RunConfig& cfg) {
  auto s = sched::make_schedule(cfg.lambda0, cycle_probe, cfg.depth);
  const auto checks = sched::check_schedule(s);
  json sj;
  sj["schedule"] = sched::to_json(s);
  sj["omega_probe"] = "cycle of length 4 floor(r_i) + 8, window {0, 1, n/2}";
  sj["checks"] = json::array();
  json failing = json::array();
  for (const auto& c : checks) {
    sj["checks"].push_back(sched::to_json(c));
    if (!c.holds) failing.push_back(c.name + "[" + std::to_string(c.index) + "]");
  }
  run.write_json("schedule.json", sj);
  run.measure("schedule") = sched::to_json(s);
  run.check("schedule.conditions_hold", failing.empty(), failing);
  run.check("schedule.slack_at_least_5pct", sched::schedule_valid(checks, 0.05));
  run.check("schedule.lambda_total_below_2", s.lambda_tail_bound(0) < 2);
  return s;
}

struct HierarchyOutcome {
  std::vector<hier::LimitLevel> limits;
  std::vector<Color> coloring;
};

HierarchyOutcome stage_hierarchy(Run& run, const sched::Schedule& s,
                                 const ColoredGraph& host, PointId p) {
  const std::size_t top = s.depth() - 1;
  hier::HierarchyOptions opts;
  opts.p = p;
  hier::Hierarchy h(host, s, opts);
  h.build(top);
  json reports = json::array();
  json failing = json::array();
  for (std::size_t j = 1; j <= top; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto rep = hier::verify_level(h, i, j);
      auto rj = hier::to_json(rep);
      rj["hat_size"] = h.level(i, j).hat.size();
      rj["tilde_size"] = h.level(i, j).tilde.size();
      reports.push_back(rj);
      if (!rep.all_ok()) failing.push_back({i, j});
    }
  }
  HierarchyOutcome out;
  for (std::size_t i = 0; i <= top; ++i) out.limits.push_back(hier::limit_level(h, i));
  json nesting = json::array();
  bool nested = true, coherent = true;
  for (std::size_t i = 0; i + 1 <= top; ++i) {
    const auto nr = hier::check_nesting(h, out.limits[i], out.limits[i + 1]);
    nested = nested && nr.nested;
    coherent = coherent && nr.restriction_coherent;
    nesting.push_back({{"lower", i}, {"upper", i + 1}, {"nested", nr.nested},
                       {"restriction_coherent", nr.restriction_coherent}, {"witnesses", nr.witnesses}});
  }
  json density = json::array();
  bool dense = true;
  for (std::size_t i = 0; i < top; ++i) {
    const auto dr = hier::density_report(h, out.limits[i]);
    density.push_back(hier::to_json(dr));
    dense = dense && dr.pass;
  }
  out.coloring = hier::level_coloring(host, out.limits);

  run.write_json("hierarchy.json", hier::to_json(h), 1);
  json hr;
  hr["host"] = {{"vertices", host.size()}, {"base_point", p}};
  hr["levels"] = reports;
  hr["nesting"] = nesting;
  hr["density"] = density;
  json sizes = json::array();
  for (const auto& l : out.limits) sizes.push_back(l.members.size());
  hr["limit_sizes"] = sizes;
  run.write_json("hierarchy_report.json", hr);
  std::ostringstream col;
  col << "vertex,color\n";
  for (PointId v = 0; v < host.size(); ++v) {
    if (out.coloring[v] != 0) col << v << "," << out.coloring[v] << "\n";
  }
  run.write_text("level_coloring.csv", col.str());

  run.measure("hierarchy") = {{"limit_sizes", sizes}, {"density", density}};
  run.check("hierarchy.levels_verified", failing.empty(), failing);
  run.check("hierarchy.nesting", nested, nesting);
  run.check("hierarchy.restriction_coherent", coherent, nesting);
  run.check("hierarchy.density_within_bound", dense, density);
  return out;
}

json analyze_graph(const ColoredGraph& g, PointId p, const gspace::Window& window, const RunConfig& cfg) {
  json j;
  j["base_point"] = p;
  j["window_vertices"] = window.vertices.size();
  json rep = json::array();
  for (auto r : cfg.analysis_radii) {
    const auto rr = gspace::repetitivity_radius(g, p, r, window);
    rep.push_back({{"R", r},
                   {"omega_size", rr.omega_size},
                   {"repetitive", rr.repetitive},
                   {"radius", std::isfinite(rr.radius) ? json(rr.radius) : json(nullptr)}});
  }
  j["repetitivity"] = rep;
  gspace::Window sample;
  const std::size_t m = std::min(cfg.persistence_sample, window.vertices.size());
  for (std::size_t k = 0; k < m; ++k) sample.vertices.push_back(window.vertices[k * window.vertices.size() / m]);
  sample.trusted = window.trusted;
  const auto t = gspace::persistence_depth(g, sample, cfg.persistence_radius);
  j["persistence"] = {{"sample", sample.vertices},
                      {"r_max", t.r_max},
                      {"saturated_pairs", t.saturated_pairs()},
                      {"max_off_diagonal", t.max_off_diagonal()},
                      {"mean_off_diagonal", t.mean_off_diagonal()}};
  return j;
}

// Window of Delone-graph vertices whose hop balls up to radius r are exact:
// trusted vertices are at least sigma from the box boundary.
gspace::Window delone_window(const ColoredGraph& g, const delone::DeloneSet& y, double sigma, std::uint32_t r) {
  gspace::Window w;
  w.trusted.assign(g.size(), 0);
  for (PointId v = 0; v < g.size(); ++v) w.trusted[v] = y.window.boundary_distance(y.cloud.point(v)) >= sigma;
  for (PointId v = 0; v < g.size(); ++v) {
    if (w.trusted[v] && w.ball_exact(g, v, r)) w.vertices.push_back(v);
  }
  return w;
}

PointId nearest_to_center(const delone::DeloneSet& y) {
  std::vector<double> c(y.window.dim());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = (y.window.lo[k] + y.window.hi[k]) / 2;
  PointId best = 0;
  double bd = metric::kInfinity;
  for (PointId v = 0; v < y.cloud.size(); ++v) {
    const double d = euclidean_distance(c, y.cloud.point(v));
    if (d < bd) {
      bd = d;
      best = v;
    }
  }
  return best;
}

std::uint32_t max_radius(const RunConfig& cfg) {
  auto r = *std::max_element(cfg.analysis_radii.begin(), cfg.analysis_radii.end());
  return std::max(r, cfg.persistence_radius);
}

ColoredGraph cycle_host(const sched::Schedule& s) {
  const auto r_top = static_cast<std::size_t>(std::ceil(s.r.back()));
  return cycle_graph(4 * r_top + 4);
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

int cmd_net(const RunConfig& cfg) {
  cfg.validate();
  Run run("net", cfg);
  run.stage("net", [&] { return stage_net(run, cfg); });
  return run.finish();
}

int cmd_perturb(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.in.empty()) throw ConfigError("perturb: --in points.csv is required");
  Run run("perturb", cfg);
  const auto x = load_set(cfg, cfg.in, cfg.certificate);
  run.stage("perturb", [&] { return stage_perturb(run, cfg, x); });
  return run.finish();
}

int cmd_graphify(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.in.empty()) throw ConfigError("graphify: --in points.csv is required");
  Run run("graphify", cfg);
  const auto y = load_set(cfg, cfg.in, cfg.certificate);
  run.stage("graph", [&] { return stage_graph(run, cfg, y); });
  return run.finish();
}

int cmd_schedule(const RunConfig& cfg) {
  cfg.validate();
  Run run("schedule", cfg);
  run.stage("schedule", [&] { return stage_schedule(run, cfg); });
  return run.finish();
}

int cmd_hierarchy(const RunConfig& cfg) {
  cfg.validate();
  Run run("hierarchy", cfg);
  const auto s = run.stage("schedule", [&] { return stage_schedule(run, cfg); });
  const ColoredGraph host = cfg.in.empty() ? cycle_host(s) : load_graph(cfg.in);
  if (cfg.base_point >= host.size()) throw ConfigError("hierarchy: base_point out of range");
  run.stage("hierarchy", [&] { return stage_hierarchy(run, s, host, cfg.base_point); });
  return run.finish();
}

int cmd_analyze(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.in.empty()) throw ConfigError("analyze: --in graph.txt is required");
  Run run("analyze", cfg);
  const auto g = load_graph(cfg.in);
  if (cfg.base_point >= g.size()) throw ConfigError("analyze: base_point out of range");
  run.stage("analyze", [&] {
    const auto j = analyze_graph(g, cfg.base_point, gspace::Window::whole(g), cfg);
    run.write_json("analysis.json", j);
    run.measure("analysis") = j;
  });
  return run.finish();
}

int cmd_gdist(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.in.empty()) throw ConfigError("gdist: --in graph.txt is required");
  Run run("gdist", cfg);
  const auto g1 = load_graph(cfg.in);
  const auto g2 = cfg.in2.empty() ? g1 : load_graph(cfg.in2);
  if (cfg.x1 >= g1.size() || cfg.x2 >= g2.size()) throw ConfigError("gdist: base vertex out of range");
  run.stage("gdist", [&] {
    const auto d = gspace::gstar_distance(g1, cfg.x1, g2, cfg.x2, cfg.r_max);
    json j = {{"x1", cfg.x1}, {"x2", cfg.x2}, {"r_max", cfg.r_max}, {"value", d.value},
              {"r_star", d.r_star}, {"saturated", d.saturated}};
    run.write_json("gdist.json", j);
    run.measure("gdist") = j;
    std::cout << j.dump() << "\n";
  });
  return run.finish();
}

int cmd_verify(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.in.empty() || cfg.certificate.empty()) {
    throw ConfigError("verify: --in points.csv and --certificate cert.json are required");
  }
  Run run("verify", cfg);
  const auto x = load_set(cfg, cfg.in, cfg.certificate);
  run.stage("verify", [&] {
    const double mp = exact_min_pair(x.cloud);
    // Brute-force probe scan, independent of the grid index: cell centers of
    // spacing tau/8 on the eroded window, nearest point by linear search.
    const std::size_t d = x.window.dim();
    const double h = x.tau / 8;
    std::vector<std::size_t> counts(d);
    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
      const double len = (x.window.hi[k] - x.window.lo[k]) - 2 * x.margin;
      counts[k] = len > 0 ? static_cast<std::size_t>(std::ceil(len / h)) : 0;
      total *= counts[k];
    }
    std::vector<double> worst(total, 0.0);
    parallel_for(total, [&](std::size_t begin, std::size_t end) {
      std::vector<double> q(d);
      for (std::size_t t = begin; t < end; ++t) {
        std::size_t rest = t;
        for (std::size_t k = d; k-- > 0;) {
          const std::size_t i = rest % counts[k];
          rest /= counts[k];
          const double lo = x.window.lo[k] + x.margin;
          const double hi = x.window.hi[k] - x.margin;
          const double step = (hi - lo) / static_cast<double>(counts[k]);
          q[k] = lo + (static_cast<double>(i) + 0.5) * step;
        }
        double best = metric::kInfinity;
        for (PointId v = 0; v < x.cloud.size(); ++v) best = std::min(best, euclidean_distance(q, x.cloud.point(v)));
        worst[t] = best;
      }
    });
    double measured = 0.0;
    for (double w : worst) measured = std::max(measured, w);
    double half_diag = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double step = ((x.window.hi[k] - x.window.lo[k]) - 2 * x.margin) / static_cast<double>(counts[k]);
      half_diag += step * step / 4;
    }
    const double bound = measured + std::sqrt(half_diag);
    run.measure("verify") = {{"min_pair_distance", mp}, {"probe_max_nearest", measured},
                             {"covering_upper_bound", bound}, {"probes", total}};
    run.check("verify.separated", mp >= x.tau, {{"min_pair_distance", mp}});
    run.check("verify.covering", total > 0 && bound <= x.eta + 1e-12, {{"bound", bound}, {"eta", x.eta}});
  });
  return run.finish();
}

int cmd_pipeline(const RunConfig& cfg) {
  cfg.validate();
  Run run("pipeline", cfg);
  g_stage = "net";
  const auto x = run.stage("net", [&] { return stage_net(run, cfg); });
  g_stage = "perturb";
  const auto pr = run.stage("perturb", [&] { return stage_perturb(run, cfg, x); });
  g_stage = "graphify";
  const auto g = run.stage("graph", [&] { return stage_graph(run, cfg, pr.set); });
  g_stage = "schedule";
  const auto s = run.stage("schedule", [&] { return stage_schedule(run, cfg); });
  g_stage = "hierarchy";
  const auto host = cycle_host(s);
  const auto ho = run.stage("hierarchy", [&] { return stage_hierarchy(run, s, host, 0); });
  g_stage = "analyze";
  run.stage("analyze", [&] {
    json a;
    const auto w = delone_window(g, pr.set, cfg.sigma, max_radius(cfg));
    if (w.vertices.empty()) throw ConstructionError("no Delone-graph vertex has an exact ball");
    a["delone_graph"] = analyze_graph(g, nearest_to_center(pr.set), w, cfg);
    // Level coloring of the cycle host, over D(0, s_1).
    ColoredGraph colored = host;
    colored.set_colors(ho.coloring);
    gspace::Window cw;
    Bfs bfs(colored);
    cw.vertices = bfs.run(PointId(0), static_cast<std::uint32_t>(std::floor(s.s[1])));
    std::sort(cw.vertices.begin(), cw.vertices.end());
    a["level_colored_cycle"] = analyze_graph(colored, 0, cw, cfg);
    run.write_json("analysis.json", a);
    run.measure("analysis") = a;
  });
  g_stage.clear();
  return run.finish();
}

int run_guarded(const std::string& name, int (*cmd)(const RunConfig&), const RunConfig& cfg) {
  g_stage.clear();
  auto where = [&] { return g_stage.empty() ? name : name + "/" + g_stage; };
  try {
    return cmd(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "repnet " << where() << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConstructionError& e) {
    std::cerr << "repnet " << where() << ": construction failed: " << e.what() << "\n";
    return kExitConstruction;
  } catch (const std::invalid_argument& e) {
    std::cerr << "repnet " << where() << ": invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "repnet " << where() << ": malformed JSON input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "repnet " << where() << ": " << e.what() << "\n";
    return kExitConstruction;
  }
}

}  // namespace repnet::cli
