#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ensf_da {

/// Geographic point in degrees, east and north positive.
struct Vertex {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

inline constexpr double kEarthRadiusKm = 6371.0;

/// Closed fire boundary stored open: the last vertex does not repeat the
/// first. Construction validates at least 3 finite in-range vertices and a
/// positive planar perimeter length.
class Perimeter {
 public:
  explicit Perimeter(std::vector<Vertex> vertices);

  const std::vector<Vertex>& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const Vertex& operator[](std::size_t i) const { return vertices_[i]; }

  /// Planar length of the closed loop (degrees treated as Euclidean).
  double length() const;
  /// Arithmetic mean of the vertices.
  Vertex centroid() const;

  friend bool operator==(const Perimeter&, const Perimeter&) = default;

 private:
  std::vector<Vertex> vertices_;
};

/// Resamples to `count` vertices spaced uniformly in arclength along the
/// closed boundary, starting at the first vertex. Targets are the inclusive
/// linspace over [0, L] with count + 1 points; the final target is the
/// closing point (a repeat of the first vertex) and is dropped.
Perimeter resample(const Perimeter& p, std::size_t count);

/// Shoelace signed area; positive for counter-clockwise order.
double signed_area(const Perimeter& p);

/// Clockwise winding, starting at the vertex whose polar angle about the
/// origin has the smallest magnitude (first occurrence wins ties).
/// Throws std::invalid_argument for zero signed area.
Perimeter normalize(const Perimeter& p);

/// normalize() with polar angles measured about `origin` instead of (0, 0).
/// Coordinates of the result are untranslated.
Perimeter normalize_about(const Perimeter& p, const Vertex& origin);

/// Great-circle distance in km on a sphere of radius kEarthRadiusKm.
double haversine(const Vertex& a, const Vertex& b);

/// Root mean square of the pairwise Haversine distances.
double rmse_haversine(std::span<const Vertex> a, std::span<const Vertex> b);

/// Same metric on flattened (lon, lat, lon, lat, ...) coordinate vectors.
/// Values are not range-checked, so abstract state vectors can be scored.
double rmse_haversine_flat(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b);

Eigen::VectorXd flatten(const Perimeter& p);
Perimeter unflatten(const Eigen::Ref<const Eigen::VectorXd>& coords);

/// Distance from a point to the segment [a, b] in the plane.
double point_segment_distance(const Vertex& p, const Vertex& a, const Vertex& b);

}  // namespace ensf_da
