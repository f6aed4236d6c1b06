#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <queue>
#include <vector>

#include "concavity/geometry.hpp"

namespace clab {

struct GridSpec {
  int nx = 0, ny = 0;
  BBox bbox;

  GridSpec() = default;
  GridSpec(int nx_, int ny_, BBox box) : nx(nx_), ny(ny_), bbox(box) {
    if (nx < 3 || ny < 3) throw std::invalid_argument("grid needs nx, ny >= 3");
    if (bbox.width() <= 0 || bbox.height() <= 0)
      throw std::invalid_argument("degenerate bounding box");
  }

  /// Square-cell grid covering [c-r-margin, c+r+margin]^2 style boxes with a
  /// requested spacing. nx is forced odd so the box center is a node.
  static GridSpec with_spacing(BBox box, double h) {
    int nx = static_cast<int>(std::llround(box.width() / h)) + 1;
    int ny = static_cast<int>(std::llround(box.height() / h)) + 1;
    if (nx % 2 == 0) ++nx;
    if (ny % 2 == 0) ++ny;
    return GridSpec(nx, ny, box);
  }

  double hx() const { return bbox.width() / (nx - 1); }
  double hy() const { return bbox.height() / (ny - 1); }
  double h() const { return std::max(hx(), hy()); }

  Vec2 node(int i, int j) const { return {bbox.xmin + i * hx(), bbox.ymin + j * hy()}; }
  int index(int i, int j) const { return j * nx + i; }
  int size() const { return nx * ny; }
};

enum class NodeClass : uint8_t { Interior, Boundary, Exterior };

/// A boundary point where a grid line crosses the domain boundary,
/// with the outward unit normal of the domain there.
struct BoundarySample {
  Vec2 point;
  Vec2 normal;
};

/// Node classification of a grid against a convex domain.
///
/// "Interior" nodes lie in the open domain with all four axis neighbors also
/// inside; "Boundary" nodes are the remaining nodes of the closed domain (the
/// cut layer, plus nodes that fall on the boundary itself). Cut distances to
/// the boundary are stored per axis direction for the Shortley-Weller stencil.
class DomainMask {
 public:
  DomainMask(ConvexDomain domain, GridSpec spec) : domain_(std::move(domain)), spec_(spec) {}

  const ConvexDomain& domain() const { return domain_; }
  const GridSpec& spec() const { return spec_; }

  NodeClass node_class(int i, int j) const { return classes_[spec_.index(i, j)]; }
  NodeClass node_class(int idx) const { return classes_[idx]; }
  bool usable(int idx) const { return classes_[idx] != NodeClass::Exterior && !on_bdry_[idx]; }
  bool on_domain_boundary(int idx) const { return on_bdry_[idx]; }

  /// Distance from node idx to the domain boundary along direction
  /// dir in {0:+x, 1:-x, 2:+y, 3:-y}; spec.h-sized when the neighbor is inside.
  double cut_distance(int idx, int dir) const { return cuts_[4 * idx + dir]; }

  const std::vector<BoundarySample>& boundary_samples() const { return bsamples_; }

  int interior_count() const { return interior_count_; }
  int unknown_count() const { return static_cast<int>(unknowns_.size()); }
  const std::vector<int>& unknowns() const { return unknowns_; }
  int unknown_of_node(int idx) const { return node_to_unknown_[idx]; }

  void export_csv(std::ostream& os) const {
    os << "index,x,y,class\n";
    for (int j = 0; j < spec_.ny; ++j)
      for (int i = 0; i < spec_.nx; ++i) {
        int idx = spec_.index(i, j);
        Vec2 p = spec_.node(i, j);
        const char* cls = classes_[idx] == NodeClass::Interior   ? "interior"
                          : classes_[idx] == NodeClass::Boundary ? "boundary"
                                                                 : "exterior";
        os << idx << ',' << p.x << ',' << p.y << ',' << cls << '\n';
      }
  }

  friend DomainMask build_mask(const ConvexDomain& domain, const GridSpec& spec);

 private:
  ConvexDomain domain_;
  GridSpec spec_;
  std::vector<NodeClass> classes_;
  std::vector<uint8_t> on_bdry_;
  std::vector<double> cuts_;
  std::vector<BoundarySample> bsamples_;
  std::vector<int> unknowns_;        // nodes in the open domain (solver DOFs)
  std::vector<int> node_to_unknown_;
  int interior_count_ = 0;
};

namespace detail {

/// Bisect for the boundary crossing on the segment [inside, outside].
inline double crossing_fraction(const ConvexDomain& dom, const Vec2& inside, const Vec2& outside) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (dom.level(lerp(inside, outside, mid)) < 0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline DomainMask build_mask(const ConvexDomain& domain, const GridSpec& spec) {
  const BBox db = domain.bounding_box();
  const double tol = domain.boundary_tol();
  if (db.xmin < spec.bbox.xmin - tol || db.xmax > spec.bbox.xmax + tol || db.ymin < spec.bbox.ymin - tol ||
      db.ymax > spec.bbox.ymax + tol)
    throw std::invalid_argument("grid bounding box must contain the domain");

  DomainMask mask(domain, spec);
  const int n = spec.size();
  mask.classes_.assign(n, NodeClass::Exterior);
  mask.on_bdry_.assign(n, 0);
  mask.cuts_.assign(4 * n, 0.0);
  mask.node_to_unknown_.assign(n, -1);

  std::vector<uint8_t> inside(n, 0);
  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      Vec2 p = spec.node(i, j);
      int idx = spec.index(i, j);
      if (domain.on_boundary(p)) {
        mask.classes_[idx] = NodeClass::Boundary;
        mask.on_bdry_[idx] = 1;
      } else if (domain.contains(p)) {
        inside[idx] = 1;
      }
    }

  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  const double step[4] = {spec.hx(), spec.hx(), spec.hy(), spec.hy()};

  for (int j = 0; j < spec.ny; ++j)
    for (int i = 0; i < spec.nx; ++i) {
      int idx = spec.index(i, j);
      if (!inside[idx]) continue;
      Vec2 p = spec.node(i, j);
      bool deep = true;
      for (int d = 0; d < 4; ++d) {
        int ii = i + di[d], jj = j + dj[d];
        bool nb_in = ii >= 0 && ii < spec.nx && jj >= 0 && jj < spec.ny &&
                     (inside[spec.index(ii, jj)] || mask.on_bdry_[spec.index(ii, jj)]);
        if (nb_in) {
          mask.cuts_[4 * idx + d] = step[d];
        } else {
          deep = false;
          Vec2 q{p.x + di[d] * step[d], p.y + dj[d] * step[d]};
          double t = detail::crossing_fraction(domain, p, q);
          Vec2 cross = lerp(p, q, t);
          mask.cuts_[4 * idx + d] = std::max(t * step[d], 1e-14 * step[d]);
          auto [bp, nrm] = domain.boundary_projection(cross);
          (void)bp;
          mask.bsamples_.push_back({cross, nrm});
        }
      }
      mask.classes_[idx] = deep ? NodeClass::Interior : NodeClass::Boundary;
      if (deep) ++mask.interior_count_;
      mask.node_to_unknown_[idx] = static_cast<int>(mask.unknowns_.size());
      mask.unknowns_.push_back(idx);
    }

  if (mask.unknowns_.empty()) throw std::invalid_argument("grid too coarse: no node inside the domain");

  // nodes that fall exactly on the boundary are samples too (an axis-aligned
  // polygon edge produces no cut crossings at all)
  for (int idx = 0; idx < n; ++idx)
    if (mask.on_bdry_[idx]) {
      Vec2 p = spec.node(idx % spec.nx, idx / spec.nx);
      auto [bp, nrm] = domain.boundary_projection(p);
      (void)bp;
      mask.bsamples_.push_back({p, nrm});
    }

  // interior + cut nodes of a convex domain must form one 4-connected component
  {
    std::vector<uint8_t> seen(n, 0);
    std::queue<int> q;
    q.push(mask.unknowns_[0]);
    seen[mask.unknowns_[0]] = 1;
    int reached = 0;
    while (!q.empty()) {
      int idx = q.front();
      q.pop();
      ++reached;
      int i = idx % spec.nx, j = idx / spec.nx;
      for (int d = 0; d < 4; ++d) {
        int ii = i + di[d], jj = j + dj[d];
        if (ii < 0 || ii >= spec.nx || jj < 0 || jj >= spec.ny) continue;
        int nb = spec.index(ii, jj);
        if (!seen[nb] && mask.node_to_unknown_[nb] >= 0) {
          seen[nb] = 1;
          q.push(nb);
        }
      }
    }
    if (reached != mask.unknown_count())
      throw std::runtime_error("interior nodes do not form a single 4-connected component");
  }
  return mask;
}

}  // namespace clab
