#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace clab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }

  Vec2 normalized() const {
    double n = norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return {x / n, y / n};
  }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline Vec2 lerp(const Vec2& a, const Vec2& b, double t) {
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

struct BBox {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Vec2& p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

/// Convex region of the plane. Disks and ellipses are strictly convex,
/// polygons are not (edge midpoints lie on the boundary).
class ConvexDomain {
 public:
  enum class Kind { Disk, Ellipse, Polygon };

  static ConvexDomain disk(Vec2 center, double radius) {
    if (radius <= 0.0) throw std::invalid_argument("disk radius must be positive");
    ConvexDomain d;
    d.kind_ = Kind::Disk;
    d.center_ = center;
    d.a_ = d.b_ = radius;
    d.strictly_convex_ = true;
    return d;
  }

  static ConvexDomain ellipse(Vec2 center, double a, double b) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("ellipse semi-axes must be positive");
    ConvexDomain d;
    d.kind_ = Kind::Ellipse;
    d.center_ = center;
    d.a_ = a;
    d.b_ = b;
    d.strictly_convex_ = true;
    return d;
  }

  /// Vertices in CCW order; all interior angles must be < pi.
  static ConvexDomain polygon(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    const size_t n = vertices.size();
    for (size_t i = 0; i < n; ++i) {
      Vec2 e1 = vertices[(i + 1) % n] - vertices[i];
      Vec2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
      if (e1.cross(e2) <= 0.0)
        throw std::invalid_argument("polygon vertices must be CCW and strictly convex at each vertex");
    }
    ConvexDomain d;
    d.kind_ = Kind::Polygon;
    d.vertices_ = std::move(vertices);
    d.strictly_convex_ = false;
    Vec2 c{0, 0};
    for (const auto& v : d.vertices_) c = c + v;
    d.center_ = c / static_cast<double>(d.vertices_.size());
    return d;
  }

  Kind kind() const { return kind_; }
  bool strictly_convex() const { return strictly_convex_; }
  Vec2 center() const { return center_; }
  double semi_axis_a() const { return a_; }
  double semi_axis_b() const { return b_; }
  const std::vector<Vec2>& vertices() const { return vertices_; }

  BBox bounding_box() const {
    switch (kind_) {
      case Kind::Disk:
      case Kind::Ellipse:
        return {center_.x - a_, center_.x + a_, center_.y - b_, center_.y + b_};
      case Kind::Polygon: {
        BBox b{vertices_[0].x, vertices_[0].x, vertices_[0].y, vertices_[0].y};
        for (const auto& v : vertices_) {
          b.xmin = std::min(b.xmin, v.x);
          b.xmax = std::max(b.xmax, v.x);
          b.ymin = std::min(b.ymin, v.y);
          b.ymax = std::max(b.ymax, v.y);
        }
        return b;
      }
    }
    throw std::logic_error("unreachable");
  }

  double diameter() const {
    BBox b = bounding_box();
    return std::hypot(b.width(), b.height());
  }

  /// Signed "level" negative inside, zero on the boundary, positive outside.
  /// For the polygon this is the signed distance to the nearest edge line.
  double level(const Vec2& p) const {
    switch (kind_) {
      case Kind::Disk:
        return (p - center_).norm() - a_;
      case Kind::Ellipse: {
        double u = (p.x - center_.x) / a_;
        double v = (p.y - center_.y) / b_;
        // not a distance, but has the right sign and vanishes on the boundary
        return std::sqrt(u * u + v * v) - 1.0;
      }
      case Kind::Polygon: {
        // max over half-planes of signed distance to each edge line
        double worst = -std::numeric_limits<double>::infinity();
        const size_t n = vertices_.size();
        for (size_t i = 0; i < n; ++i) {
          Vec2 a = vertices_[i], b = vertices_[(i + 1) % n];
          Vec2 e = b - a;
          Vec2 nrm = Vec2{e.y, -e.x}.normalized();  // outward for CCW
          worst = std::max(worst, (p - a).dot(nrm));
        }
        return worst;
      }
    }
    throw std::logic_error("unreachable");
  }

  /// True iff p lies in the open interior.
  bool contains(const Vec2& p) const { return level(p) < -boundary_tol(); }

  bool on_boundary(const Vec2& p) const { return std::abs(level(p)) <= boundary_tol(); }

  double boundary_tol() const { return 1e-12 * diameter(); }

  /// Closest boundary point together with the outward unit normal there.
  /// The disk/ellipse center projects ambiguously; we return normal (1,0).
  std::pair<Vec2, Vec2> boundary_projection(const Vec2& p) const {
    switch (kind_) {
      case Kind::Disk: {
        Vec2 d = p - center_;
        if (d.norm() < boundary_tol()) {
          return {center_ + Vec2{a_, 0}, Vec2{1, 0}};
        }
        Vec2 n = d.normalized();
        return {center_ + n * a_, n};
      }
      case Kind::Ellipse:
        return project_ellipse(p);
      case Kind::Polygon:
        return project_polygon(p);
    }
    throw std::logic_error("unreachable");
  }

  /// Samples the boundary pairwise and checks that chord midpoints are interior.
  bool strict_convexity_check(int n_samples) const {
    if (n_samples < 2) throw std::invalid_argument("need at least 2 boundary samples");
    std::vector<Vec2> pts = boundary_samples(n_samples);
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j) {
        Vec2 mid = lerp(pts[i], pts[j], 0.5);
        if (!contains(mid)) return false;
      }
    return true;
  }

  /// n points spread along the boundary (arc-parameter for disk/ellipse,
  /// per-edge subdivision for polygons).
  std::vector<Vec2> boundary_samples(int n) const {
    std::vector<Vec2> out;
    out.reserve(static_cast<size_t>(n));
    if (kind_ == Kind::Polygon) {
      const size_t nv = vertices_.size();
      int per_edge = std::max(1, n / static_cast<int>(nv));
      for (size_t i = 0; i < nv; ++i) {
        Vec2 a = vertices_[i], b = vertices_[(i + 1) % nv];
        for (int k = 0; k < per_edge; ++k)
          out.push_back(lerp(a, b, static_cast<double>(k) / per_edge));
      }
      return out;
    }
    for (int k = 0; k < n; ++k) {
      double t = 2.0 * M_PI * k / n;
      out.push_back({center_.x + a_ * std::cos(t), center_.y + b_ * std::sin(t)});
    }
    return out;
  }

  /// Radius of the largest ball contained in the domain (used as a cheap
  /// interior-ball proxy; for polygons the flag below is authoritative).
  double inradius() const {
    switch (kind_) {
      case Kind::Disk:
        return a_;
      case Kind::Ellipse:
        return std::min(a_, b_);
      case Kind::Polygon: {
        double best = std::numeric_limits<double>::infinity();
        const size_t n = vertices_.size();
        for (size_t i = 0; i < n; ++i) {
          Vec2 a = vertices_[i], b = vertices_[(i + 1) % n];
          Vec2 e = b - a;
          Vec2 nrm = Vec2{e.y, -e.x}.normalized();
          best = std::min(best, -(center_ - a).dot(nrm));
        }
        return best;
      }
    }
    throw std::logic_error("unreachable");
  }

  /// The interior-ball hypothesis is not verified analytically for polygons;
  /// callers assert it per run. Disk/ellipse always satisfy it.
  bool interior_ball_default() const { return kind_ != Kind::Polygon; }

 private:
  std::pair<Vec2, Vec2> project_ellipse(const Vec2& p) const {
    // Newton on the boundary parameter t -> (a cos t, b sin t).
    Vec2 q = p - center_;
    if (q.norm() < boundary_tol()) return {center_ + Vec2{a_, 0}, Vec2{1, 0}};
    double t = std::atan2(q.y * a_, q.x * b_);
    for (int it = 0; it < 60; ++it) {
      double ct = std::cos(t), st = std::sin(t);
      Vec2 bp{a_ * ct, b_ * st};
      Vec2 dp{-a_ * st, b_ * ct};
      Vec2 ddp{-a_ * ct, -b_ * st};
      Vec2 r = bp - q;
      double g = r.dot(dp);
      double gp = dp.dot(dp) + r.dot(ddp);
      if (std::abs(gp) < 1e-30) break;
      double step = g / gp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    double ct = std::cos(t), st = std::sin(t);
    Vec2 bp = center_ + Vec2{a_ * ct, b_ * st};
    Vec2 n = Vec2{ct / a_, st / b_}.normalized();  // gradient of the level set
    return {bp, n};
  }

  std::pair<Vec2, Vec2> project_polygon(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    Vec2 bp{}, bn{};
    const size_t n = vertices_.size();
    for (size_t i = 0; i < n; ++i) {
      Vec2 a = vertices_[i], b = vertices_[(i + 1) % n];
      Vec2 e = b - a;
      double t = std::clamp((p - a).dot(e) / e.norm2(), 0.0, 1.0);
      Vec2 cand = lerp(a, b, t);
      double d = (p - cand).norm();
      if (d < best) {
        best = d;
        bp = cand;
        bn = Vec2{e.y, -e.x}.normalized();
      }
    }
    return {bp, bn};
  }

  Kind kind_ = Kind::Disk;
  Vec2 center_{};
  double a_ = 1.0, b_ = 1.0;  // radius / semi-axes
  std::vector<Vec2> vertices_;
  bool strictly_convex_ = true;
};

}  // namespace clab
