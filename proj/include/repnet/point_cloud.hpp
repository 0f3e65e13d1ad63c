#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "repnet/metric_core.hpp"

namespace repnet {

/// Finite set of points in R^d stored as a flat coordinate array.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::size_t dim) : dim_(dim) {}
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(PointId id) const {
    return {coords_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }
  void push_back(std::span<const double> p);
  void set_point(PointId id, std::span<const double> p);
  const std::vector<double>& coords() const { return coords_; }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// sqrt of the sum of squared coordinate differences; exactly symmetric.
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Uniform grid bucket over a subset of a cloud's points. Supports moving
/// points, which the corona-gap search relies on.
class GridIndex {
 public:
  GridIndex(std::size_t dim, double cell);

  void insert(PointId id, std::span<const double> p);
  void erase(PointId id, std::span<const double> p);

  /// Calls f(id) for every stored id whose cell lies within the cube of
  /// half-width r around q. Callers filter by exact distance.
  void for_each_candidate(std::span<const double> q, double r,
                          const std::function<void(PointId)>& f) const;

  /// Distance from q to the nearest stored point, using `coords` to resolve
  /// ids. +inf when the index is empty.
  double nearest_distance(std::span<const double> q, const PointCloud& coords) const;

  std::size_t size() const { return count_; }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept;
  };
  std::vector<std::int64_t> key_of(std::span<const double> p) const;

  std::size_t dim_;
  double cell_;
  std::size_t count_ = 0;
  std::int64_t max_abs_key_ = 0;
  std::unordered_map<std::vector<std::int64_t>, std::vector<PointId>, KeyHash> cells_;
};

/// MetricSpace view of a PointCloud with grid-accelerated queries.
class EuclideanSpace final : public metric::MetricSpace {
 public:
  /// `cell` is the bucket size; pass the typical query radius.
  EuclideanSpace(const PointCloud& cloud, double cell);

  std::size_t size() const override { return cloud_.size(); }
  double distance(PointId a, PointId b) const override {
    return euclidean_distance(cloud_.point(a), cloud_.point(b));
  }
  std::vector<PointId> within(PointId x, double r) const override;
  std::vector<double> distances_to_set(std::span<const PointId> q) const override;

  const PointCloud& cloud() const { return cloud_; }

 private:
  const PointCloud& cloud_;
  double cell_;
  GridIndex index_;
};

/// Concatenation: ids of `b` are shifted by a.size().
PointCloud join_clouds(const PointCloud& a, const PointCloud& b);

/// CSV with a `# dim=<d>` header and one point per row.
PointCloud read_point_csv(std::istream& in);
void write_point_csv(std::ostream& out, const PointCloud& cloud);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace repnet
