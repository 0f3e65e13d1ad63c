#include "repnet/point_cloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "repnet/parallel.hpp"

namespace repnet {

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 || coords_.size() % dim_ != 0) {
    throw std::invalid_argument("PointCloud: coordinate count is not a multiple of dim");
  }
}

void PointCloud::push_back(std::span<const double> p) {
  if (p.size() != dim_) throw std::invalid_argument("PointCloud::push_back: dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

void PointCloud::set_point(PointId id, std::span<const double> p) {
  if (p.size() != dim_) throw std::invalid_argument("PointCloud::set_point: dimension mismatch");
  std::copy(p.begin(), p.end(), coords_.begin() + static_cast<std::ptrdiff_t>(id * dim_));
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// GridIndex

std::size_t GridIndex::KeyHash::operator()(const std::vector<std::int64_t>& k) const noexcept {
  std::size_t h = 1469598103934665603ull;
  for (auto v : k) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

GridIndex::GridIndex(std::size_t dim, double cell) : dim_(dim), cell_(cell) {
  if (!(cell > 0)) throw std::invalid_argument("GridIndex: cell size must be positive");
}

std::vector<std::int64_t> GridIndex::key_of(std::span<const double> p) const {
  std::vector<std::int64_t> key(dim_);
  for (std::size_t k = 0; k < dim_; ++k) {
    key[k] = static_cast<std::int64_t>(std::floor(p[k] / cell_));
  }
  return key;
}

void GridIndex::insert(PointId id, std::span<const double> p) {
  auto key = key_of(p);
  for (auto v : key) max_abs_key_ = std::max(max_abs_key_, v < 0 ? -v : v);
  cells_[std::move(key)].push_back(id);
  ++count_;
}

void GridIndex::erase(PointId id, std::span<const double> p) {
  auto it = cells_.find(key_of(p));
  if (it == cells_.end()) return;
  auto& bucket = it->second;
  auto pos = std::find(bucket.begin(), bucket.end(), id);
  if (pos == bucket.end()) return;
  bucket.erase(pos);
  --count_;
  if (bucket.empty()) cells_.erase(it);
}

void GridIndex::for_each_candidate(std::span<const double> q, double r,
                                   const std::function<void(PointId)>& f) const {
  if (count_ == 0) return;
  const auto center = key_of(q);
  const auto reach = static_cast<std::int64_t>(std::ceil(r / cell_));
  // Too many cells to enumerate: walk every bucket instead.
  double cube = 1.0;
  for (std::size_t k = 0; k < dim_; ++k) cube *= static_cast<double>(2 * reach + 1);
  if (cube > static_cast<double>(cells_.size()) * 4.0) {
    for (const auto& [key, bucket] : cells_) {
      bool near = true;
      for (std::size_t k = 0; k < dim_; ++k) {
        if (std::abs(key[k] - center[k]) > reach) {
          near = false;
          break;
        }
      }
      if (!near) continue;
      for (PointId id : bucket) f(id);
    }
    return;
  }
  std::vector<std::int64_t> key(dim_);
  std::vector<std::int64_t> offset(dim_, -reach);
  while (true) {
    for (std::size_t k = 0; k < dim_; ++k) key[k] = center[k] + offset[k];
    if (auto it = cells_.find(key); it != cells_.end()) {
      for (PointId id : it->second) f(id);
    }
    std::size_t k = 0;
    while (k < dim_ && offset[k] == reach) offset[k++] = -reach;
    if (k == dim_) break;
    ++offset[k];
  }
}

double GridIndex::nearest_distance(std::span<const double> q, const PointCloud& coords) const {
  if (count_ == 0) return metric::kInfinity;
  double best = metric::kInfinity;
  // Ring k covers cells at Chebyshev offset exactly k; everything outside the
  // first k rings is at distance >= k * cell.
  const auto center = key_of(q);
  std::int64_t farthest = 0;
  for (std::size_t k = 0; k < dim_; ++k) {
    farthest = std::max(farthest, std::abs(center[k]) + max_abs_key_ + 1);
  }
  std::vector<std::int64_t> key(dim_);
  for (std::int64_t ring = 0; ring <= farthest; ++ring) {
    if (best <= static_cast<double>(ring - 1) * cell_) break;
    std::vector<std::int64_t> offset(dim_, -ring);
    while (true) {
      std::int64_t cheb = 0;
      for (std::size_t k = 0; k < dim_; ++k) cheb = std::max(cheb, std::abs(offset[k]));
      if (cheb == ring) {
        for (std::size_t k = 0; k < dim_; ++k) key[k] = center[k] + offset[k];
        if (auto it = cells_.find(key); it != cells_.end()) {
          for (PointId id : it->second) best = std::min(best, euclidean_distance(q, coords.point(id)));
        }
      }
      std::size_t k = 0;
      while (k < dim_ && offset[k] == ring) offset[k++] = -ring;
      if (k == dim_) break;
      ++offset[k];
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// EuclideanSpace

EuclideanSpace::EuclideanSpace(const PointCloud& cloud, double cell)
    : cloud_(cloud), cell_(cell), index_(cloud.dim(), cell) {
  for (PointId id = 0; id < cloud.size(); ++id) index_.insert(id, cloud.point(id));
}

std::vector<PointId> EuclideanSpace::within(PointId x, double r) const {
  std::vector<PointId> out;
  const auto q = cloud_.point(x);
  index_.for_each_candidate(q, r, [&](PointId y) {
    if (euclidean_distance(q, cloud_.point(y)) <= r) out.push_back(y);
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> EuclideanSpace::distances_to_set(std::span<const PointId> q) const {
  std::vector<double> out(cloud_.size(), metric::kInfinity);
  if (q.empty()) return out;
  GridIndex sub(cloud_.dim(), cell_);
  for (PointId id : q) sub.insert(id, cloud_.point(id));
  parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t y = begin; y < end; ++y) {
      out[y] = sub.nearest_distance(cloud_.point(static_cast<PointId>(y)), cloud_);
    }
  });
  return out;
}

PointCloud join_clouds(const PointCloud& a, const PointCloud& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("join_clouds: dimension mismatch");
  auto coords = a.coords();
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return PointCloud(a.dim(), std::move(coords));
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

PointCloud read_point_csv(std::istream& in) {
  std::string line;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto pos = line.find("dim=");
    if (line[0] != '#' || pos == std::string::npos) {
      throw std::invalid_argument("point CSV: first line must be '# dim=<d>'");
    }
    dim = std::stoul(line.substr(pos + 4));
    break;
  }
  if (dim == 0) throw std::invalid_argument("point CSV: missing or zero dimension");
  PointCloud cloud(dim);
  std::vector<double> row;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    row.clear();
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      while (first < last && *first == ' ') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc()) {
        throw std::invalid_argument("point CSV: bad number on line " + std::to_string(line_no));
      }
      row.push_back(v);
    }
    if (row.size() != dim) {
      throw std::invalid_argument("point CSV: wrong coordinate count on line " +
                                  std::to_string(line_no));
    }
    cloud.push_back(row);
  }
  return cloud;
}

void write_point_csv(std::ostream& out, const PointCloud& cloud) {
  out << "# dim=" << cloud.dim() << '\n';
  for (PointId id = 0; id < cloud.size(); ++id) {
    const auto p = cloud.point(id);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out << ',';
      out << format_double(p[k]);
    }
    out << '\n';
  }
}

}  // namespace repnet
