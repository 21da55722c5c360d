#include "ensf_da/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ensf_da {
namespace {

double segment_length(const Vertex& a, const Vertex& b) {
  return std::hypot(b.lon - a.lon, b.lat - a.lat);
}

double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Perimeter::Perimeter(std::vector<Vertex> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3)
    throw std::invalid_argument("perimeter needs at least 3 vertices, got " +
                                std::to_string(vertices_.size()));
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vertex& v = vertices_[i];
    if (!std::isfinite(v.lon) || !std::isfinite(v.lat))
      throw std::invalid_argument("perimeter vertex " + std::to_string(i) + " is not finite");
    if (v.lon < -180.0 || v.lon > 180.0 || v.lat < -90.0 || v.lat > 90.0)
      throw std::invalid_argument("perimeter vertex " + std::to_string(i) +
                                  " is outside the lon/lat range");
  }
  if (!(length() > 0.0)) throw std::invalid_argument("perimeter has zero length");
}

double Perimeter::length() const {
  double total = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    total += segment_length(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  return total;
}

Vertex Perimeter::centroid() const {
  Vertex c;
  for (const Vertex& v : vertices_) {
    c.lon += v.lon;
    c.lat += v.lat;
  }
  c.lon /= static_cast<double>(vertices_.size());
  c.lat /= static_cast<double>(vertices_.size());
  return c;
}

Perimeter resample(const Perimeter& p, std::size_t count) {
  if (count < 3) throw std::invalid_argument("resample count must be at least 3");

  // Closed loop v_1..v_M, v_{M+1} = v_1 with cumulative distances D.
  const auto& src = p.vertices();
  const std::size_t m = src.size();
  std::vector<Vertex> closed(src);
  closed.push_back(src.front());
  std::vector<double> cumulative(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    cumulative[i + 1] = cumulative[i] + segment_length(closed[i], closed[i + 1]);
  const double total = cumulative[m];

  std::vector<Vertex> out;
  out.reserve(count + 1);
  std::size_t seg = 0;
  for (std::size_t j = 0; j <= count; ++j) {
    const double target = total * static_cast<double>(j) / static_cast<double>(count);
    // Advance to the segment with D_k <= target <= D_{k+1}, skipping
    // zero-length segments.
    while (seg + 1 < m &&
           (target > cumulative[seg + 1] || cumulative[seg + 1] == cumulative[seg]))
      ++seg;
    const double span = cumulative[seg + 1] - cumulative[seg];
    const double alpha = span > 0.0 ? std::clamp((target - cumulative[seg]) / span, 0.0, 1.0) : 0.0;
    const Vertex& a = closed[seg];
    const Vertex& b = closed[seg + 1];
    out.push_back({(1.0 - alpha) * a.lon + alpha * b.lon, (1.0 - alpha) * a.lat + alpha * b.lat});
  }
  // The last target is L, i.e. the closing repeat of the first vertex.
  out.pop_back();
  return Perimeter(std::move(out));
}

double signed_area(const Perimeter& p) {
  const auto& v = p.vertices();
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vertex& a = v[i];
    const Vertex& b = v[(i + 1) % v.size()];
    twice += a.lon * b.lat - b.lon * a.lat;
  }
  return 0.5 * twice;
}

Perimeter normalize_about(const Perimeter& p, const Vertex& origin) {
  const double area = signed_area(p);
  if (area == 0.0) throw std::invalid_argument("cannot normalize a polygon with zero signed area");

  std::vector<Vertex> cw(p.vertices());
  if (area > 0.0) std::reverse(cw.begin(), cw.end());

  std::size_t start = 0;
  double best = std::abs(std::atan2(cw[0].lat - origin.lat, cw[0].lon - origin.lon));
  for (std::size_t i = 1; i < cw.size(); ++i) {
    const double theta = std::abs(std::atan2(cw[i].lat - origin.lat, cw[i].lon - origin.lon));
    if (theta < best) {
      best = theta;
      start = i;
    }
  }
  std::rotate(cw.begin(), cw.begin() + static_cast<std::ptrdiff_t>(start), cw.end());
  return Perimeter(std::move(cw));
}

Perimeter normalize(const Perimeter& p) { return normalize_about(p, Vertex{0.0, 0.0}); }

double haversine(const Vertex& a, const Vertex& b) {
  const double phi1 = to_radians(a.lat);
  const double phi2 = to_radians(b.lat);
  const double dphi = phi2 - phi1;
  const double dtheta = to_radians(b.lon) - to_radians(a.lon);
  const double s_phi = std::sin(dphi / 2.0);
  const double s_theta = std::sin(dtheta / 2.0);
  double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_theta * s_theta;
  h = std::clamp(h, 0.0, 1.0);
  const double c = 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
  return kEarthRadiusKm * c;
}

double rmse_haversine(std::span<const Vertex> a, std::span<const Vertex> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("rmse_haversine: mismatched lengths " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()));
  if (a.empty()) throw std::invalid_argument("rmse_haversine: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = haversine(a[i], b[i]);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double rmse_haversine_flat(const Eigen::Ref<const Eigen::VectorXd>& a,
                           const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("rmse_haversine_flat: mismatched lengths");
  if (a.size() < 2 || a.size() % 2 != 0)
    throw std::invalid_argument("rmse_haversine_flat: length must be a positive even number");
  const Eigen::Index pairs = a.size() / 2;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pairs; ++i) {
    const double d = haversine({a[2 * i], a[2 * i + 1]}, {b[2 * i], b[2 * i + 1]});
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairs));
}

Eigen::VectorXd flatten(const Perimeter& p) {
  Eigen::VectorXd out(2 * static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[2 * static_cast<Eigen::Index>(i)] = p[i].lon;
    out[2 * static_cast<Eigen::Index>(i) + 1] = p[i].lat;
  }
  return out;
}

Perimeter unflatten(const Eigen::Ref<const Eigen::VectorXd>& coords) {
  if (coords.size() % 2 != 0)
    throw std::invalid_argument("coordinate vector has odd length " + std::to_string(coords.size()));
  std::vector<Vertex> v(static_cast<std::size_t>(coords.size() / 2));
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = {coords[2 * static_cast<Eigen::Index>(i)], coords[2 * static_cast<Eigen::Index>(i) + 1]};
  return Perimeter(std::move(v));
}

double point_segment_distance(const Vertex& p, const Vertex& a, const Vertex& b) {
  const double dx = b.lon - a.lon;
  const double dy = b.lat - a.lat;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.lon - (a.lon + t * dx), p.lat - (a.lat + t * dy));
}

}  // namespace ensf_da
