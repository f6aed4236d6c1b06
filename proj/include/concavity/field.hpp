#pragma once

#include <algorithm>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "concavity/grid.hpp"

namespace clab {

/// Pointwise map applied to a field: s -> s^a, -s^a, log s, -log s, or a
/// user-supplied f with derivatives.
struct Transform {
  enum class Kind { Power, NegPower, Log, NegLog, Custom };

  Kind kind = Kind::Power;
  double alpha = 1.0;
  std::function<double(double)> f, df, ddf;
  double valid_min = -std::numeric_limits<double>::infinity();
  double valid_max = std::numeric_limits<double>::infinity();

  static Transform power(double a) {
    if (a <= 0.0 || a > 1.0) throw std::invalid_argument("power transform needs alpha in (0,1]");
    Transform t;
    t.kind = Kind::Power;
    t.alpha = a;
    t.valid_min = 0.0;
    return t;
  }
  static Transform neg_power(double a) {
    Transform t = power(a);
    t.kind = Kind::NegPower;
    return t;
  }
  static Transform log() {
    Transform t;
    t.kind = Kind::Log;
    t.valid_min = 0.0;  // zeros map to the -inf marker
    return t;
  }
  static Transform neg_log() {
    Transform t = log();
    t.kind = Kind::NegLog;
    return t;
  }
  static Transform custom(std::function<double(double)> f, std::function<double(double)> df,
                          std::function<double(double)> ddf, double smin, double smax) {
    Transform t;
    t.kind = Kind::Custom;
    t.f = std::move(f);
    t.df = std::move(df);
    t.ddf = std::move(ddf);
    t.valid_min = smin;
    t.valid_max = smax;
    return t;
  }

  double operator()(double s) const {
    switch (kind) {
      case Kind::Power:
        return std::pow(s, alpha);
      case Kind::NegPower:
        return -std::pow(s, alpha);
      case Kind::Log:
        return std::log(s);
      case Kind::NegLog:
        return -std::log(s);
      case Kind::Custom:
        return f(s);
    }
    throw std::logic_error("unreachable");
  }
};

struct FieldStats {
  double m = 0.0;               // sup |u| over nodes
  double M = 0.0;               // estimated C^2 norm
  double gradient_bound = 0.0;  // radius of the gradient ball B_M
  double stencil_h = 0.0;
  double cutoff = 0.0;  // nodes closer than this to the boundary were skipped
};

/// Scalar function on the nodes of a masked grid (open-domain nodes plus nodes
/// that fall on the boundary itself). A boundary trace function supplies values
/// at off-node boundary crossings; solver outputs use the constant 0 trace.
///
/// Fields produced by apply_transform remember their base field: off-grid
/// evaluation then interpolates the smooth base and maps the result through
/// the transform, which avoids the large bilinear error of d^alpha-like
/// profiles near the boundary.
class GridField {
 public:
  explicit GridField(std::shared_ptr<const DomainMask> mask, double boundary_value = 0.0)
      : mask_(std::move(mask)),
        values_(mask_->spec().size(), 0.0),
        flags_(mask_->spec().size(), 0),
        boundary_value_(boundary_value) {
    for (int idx = 0; idx < mask_->spec().size(); ++idx)
      if (mask_->on_domain_boundary(idx)) values_[idx] = boundary_value;
  }

  const DomainMask& mask() const { return *mask_; }
  std::shared_ptr<const DomainMask> mask_ptr() const { return mask_; }
  const GridSpec& spec() const { return mask_->spec(); }

  double value(int idx) const { return values_[idx]; }
  double value(int i, int j) const { return values_[spec().index(i, j)]; }
  void set_value(int idx, double v) {
    values_[idx] = v;
    ghosts_dirty_ = true;
  }

  bool flagged(int idx) const { return flags_[idx] != 0; }
  bool has_flags() const { return extended_; }

  /// True for nodes that carry a meaningful value: in the closed domain and
  /// not marked as an extended (-inf) node.
  bool node_usable(int idx) const {
    return (mask_->usable(idx) || mask_->on_domain_boundary(idx)) && !flags_[idx];
  }

  double trace(Vec2 p) const { return trace_ ? trace_(p) : boundary_value_; }

  void fill(const std::function<double(Vec2)>& f) {
    const auto& sp = spec();
    for (int j = 0; j < sp.ny; ++j)
      for (int i = 0; i < sp.nx; ++i) {
        int idx = sp.index(i, j);
        if (mask_->usable(idx) || mask_->on_domain_boundary(idx)) values_[idx] = f(sp.node(i, j));
      }
    trace_ = f;
    ghosts_dirty_ = true;
  }

  /// Value at an arbitrary point of the closed domain. Bilinear on the base
  /// grid, composed with the transform chain when present.
  double evaluate(Vec2 p) const {
    if (base_) {
      double s = base_->evaluate(p);
      if (transform_.kind == Transform::Kind::Power || transform_.kind == Transform::Kind::NegPower)
        s = std::max(s, 0.0);
      else if (transform_.kind == Transform::Kind::Log || transform_.kind == Transform::Kind::NegLog)
        s = std::max(s, log_floor_);
      else
        s = std::clamp(s, transform_.valid_min, transform_.valid_max);
      return transform_(s);
    }
    return bilinear(p);
  }

  /// Plain bilinear interpolation (exact on affine fields). Throws when p is
  /// outside the closed domain.
  double interpolate(Vec2 p) const {
    if (mask_->domain().level(p) > mask_->domain().boundary_tol())
      throw std::invalid_argument("interpolation point outside the domain");
    return bilinear(p);
  }

  GridField with_values(std::vector<double> vals) const {
    GridField out(mask_, boundary_value_);
    if (vals.size() != values_.size()) throw std::invalid_argument("value size mismatch");
    out.values_ = std::move(vals);
    for (int idx = 0; idx < spec().size(); ++idx)
      if (mask_->on_domain_boundary(idx)) out.values_[idx] = boundary_value_;
    return out;
  }

  /// Copy with nodes below min_value marked as excluded (treated like
  /// extended-value nodes by sweeps and envelopes).
  GridField restricted_above(double min_value) const {
    GridField out = *this;
    for (int idx = 0; idx < spec().size(); ++idx)
      if (out.node_usable(idx) && out.values_[idx] < min_value) {
        out.flags_[idx] = 1;
        out.extended_ = true;
      }
    out.ghosts_dirty_ = true;
    return out;
  }

  friend GridField apply_transform(const GridField& u, const Transform& t);
  friend GridField operator*(double c, const GridField& u);
  friend GridField operator+(const GridField& u, double c);

  FieldStats stats() const {
    const auto& sp = spec();
    if (mask_->unknown_count() < 9) throw std::invalid_argument("field_stats needs >= 9 interior nodes");
    FieldStats st;
    st.stencil_h = sp.h();
    st.cutoff = 2.0 * sp.h();
    double gmax = 0.0, hmax = 0.0;
    for (int idx = 0; idx < sp.size(); ++idx)
      if (node_usable(idx)) st.m = std::max(st.m, std::abs(values_[idx]));
    const double hx = sp.hx(), hy = sp.hy();
    for (int idx : mask_->unknowns()) {
      if (mask_->node_class(idx) != NodeClass::Interior) continue;
      int i = idx % sp.nx, j = idx / sp.nx;
      // keep a 2h margin from the boundary to avoid cut-stencil noise
      bool deep = i >= 2 && i + 2 < sp.nx && j >= 2 && j + 2 < sp.ny;
      for (int d = -2; d <= 2 && deep; ++d) {
        if (mask_->unknown_of_node(sp.index(i + d, j)) < 0 || mask_->unknown_of_node(sp.index(i, j + d)) < 0)
          deep = false;
      }
      if (!deep) continue;
      double ux = (value(i + 1, j) - value(i - 1, j)) / (2 * hx);
      double uy = (value(i, j + 1) - value(i, j - 1)) / (2 * hy);
      double uxx = (value(i + 1, j) - 2 * value(i, j) + value(i - 1, j)) / (hx * hx);
      double uyy = (value(i, j + 1) - 2 * value(i, j) + value(i, j - 1)) / (hy * hy);
      double uxy = (value(i + 1, j + 1) - value(i + 1, j - 1) - value(i - 1, j + 1) + value(i - 1, j - 1)) /
                   (4 * hx * hy);
      gmax = std::max(gmax, std::hypot(ux, uy));
      hmax = std::max({hmax, std::abs(uxx), std::abs(uyy), std::abs(uxy)});
    }
    st.gradient_bound = gmax;
    st.M = std::max({st.m, gmax, hmax});
    return st;
  }

  /// Outward normal derivative at a boundary sample, one-sided second order.
  double normal_derivative(const BoundarySample& b) const {
    const double h = spec().h();
    Vec2 p1 = b.point - b.normal * h;
    Vec2 p2 = b.point - b.normal * (2 * h);
    const auto& dom = mask_->domain();
    if (dom.level(p2) > -0.5 * dom.boundary_tol())
      throw std::invalid_argument("insufficient stencil depth along the inward normal");
    double g0 = trace(b.point);
    double g1 = evaluate(p1);
    double g2 = evaluate(p2);
    return (3 * g0 - 4 * g1 + g2) / (2 * h);
  }

  void export_csv(std::ostream& os) const {
    const auto& sp = spec();
    os << "nx=" << sp.nx << ",ny=" << sp.ny << ",xmin=" << sp.bbox.xmin << ",xmax=" << sp.bbox.xmax
       << ",ymin=" << sp.bbox.ymin << ",ymax=" << sp.bbox.ymax << ",h=" << sp.h() << '\n';
    os << "x,y,class,value\n";
    os.precision(17);
    for (int j = 0; j < sp.ny; ++j)
      for (int i = 0; i < sp.nx; ++i) {
        int idx = sp.index(i, j);
        Vec2 p = sp.node(i, j);
        const char* cls = mask_->node_class(idx) == NodeClass::Interior   ? "interior"
                          : mask_->node_class(idx) == NodeClass::Boundary ? "boundary"
                                                                          : "exterior";
        os << p.x << ',' << p.y << ',' << cls << ',';
        if (flags_[idx])
          os << "NEG_INF";
        else
          os << values_[idx];
        os << '\n';
      }
  }

 private:
  double bilinear(Vec2 p) const {
    const auto& sp = spec();
    double fx = (p.x - sp.bbox.xmin) / sp.hx();
    double fy = (p.y - sp.bbox.ymin) / sp.hy();
    int i = std::clamp(static_cast<int>(std::floor(fx)), 0, sp.nx - 2);
    int j = std::clamp(static_cast<int>(std::floor(fy)), 0, sp.ny - 2);
    double tx = fx - i, ty = fy - j;
    if (ghosts_dirty_) build_ghosts();
    auto v = [&](int ii, int jj) { return interp_values_[sp.index(ii, jj)]; };
    return (1 - tx) * (1 - ty) * v(i, j) + tx * (1 - ty) * v(i + 1, j) + (1 - tx) * ty * v(i, j + 1) +
           tx * ty * v(i + 1, j + 1);
  }

  /// Extends the field linearly across the boundary so that bilinear cells
  /// with exterior corners stay consistent with the boundary trace.
  void build_ghosts() const {
    const auto& sp = spec();
    interp_values_ = values_;
    for (int idx = 0; idx < sp.size(); ++idx)
      if (mask_->node_class(idx) == NodeClass::Exterior) interp_values_[idx] = 0.0;
    std::vector<uint8_t> have_ghost(sp.size(), 0);
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    const double step[4] = {sp.hx(), sp.hx(), sp.hy(), sp.hy()};
    for (int idx : mask_->unknowns()) {
      int i = idx % sp.nx, j = idx / sp.nx;
      for (int d = 0; d < 4; ++d) {
        double cut = mask_->cut_distance(idx, d);
        if (cut >= step[d]) continue;
        int ii = i + di[d], jj = j + dj[d];
        if (ii < 0 || ii >= sp.nx || jj < 0 || jj >= sp.ny) continue;
        int g = sp.index(ii, jj);
        if (mask_->node_class(g) != NodeClass::Exterior) continue;
        Vec2 p = sp.node(i, j);
        Vec2 cross{p.x + di[d] * cut, p.y + dj[d] * cut};
        double bv = trace(cross);
        double ghost = values_[idx] + (bv - values_[idx]) * step[d] / cut;
        // a node may receive several donors; keep the least extreme extension
        if (!have_ghost[g] || std::abs(ghost) < std::abs(interp_values_[g])) {
          interp_values_[g] = ghost;
          have_ghost[g] = 1;
        }
      }
    }
    ghosts_dirty_ = false;
  }

  std::shared_ptr<const DomainMask> mask_;
  std::vector<double> values_;
  std::vector<uint8_t> flags_;
  double boundary_value_ = 0.0;
  std::function<double(Vec2)> trace_;
  bool extended_ = false;
  std::shared_ptr<const GridField> base_;
  Transform transform_;
  double log_floor_ = 0.0;
  mutable std::vector<double> interp_values_;
  mutable bool ghosts_dirty_ = true;
};

inline GridField apply_transform(const GridField& u, const Transform& t) {
  GridField out(u.mask_ptr(), 0.0);
  const bool is_power = t.kind == Transform::Kind::Power || t.kind == Transform::Kind::NegPower;
  const bool is_log = t.kind == Transform::Kind::Log || t.kind == Transform::Kind::NegLog;

  const auto& sp = u.spec();
  double m = 0.0;
  for (int idx = 0; idx < sp.size(); ++idx)
    if (u.node_usable(idx)) m = std::max(m, std::abs(u.value(idx)));
  const double log_floor = 1e-12 * std::max(m, 1e-300);
  const double undershoot = 1e-12 * std::max(m, 1.0);

  for (int idx = 0; idx < sp.size(); ++idx) {
    if (!(u.mask().usable(idx) || u.mask().on_domain_boundary(idx))) continue;
    if (u.flagged(idx)) throw std::domain_error("transform of an extended-value node");
    double s = u.value(idx);
    if (is_power) {
      if (s < 0.0) {
        if (s > -undershoot) {
          s = 0.0;  // roundoff-level undershoot at near-boundary nodes
        } else {
          std::ostringstream msg;
          msg << "transform domain violation at node " << idx << " (value " << s << ")";
          throw std::domain_error(msg.str());
        }
      }
      out.values_[idx] = t(s);
    } else if (is_log) {
      if (s < -undershoot) {
        std::ostringstream msg;
        msg << "transform domain violation at node " << idx << " (value " << s << ")";
        throw std::domain_error(msg.str());
      }
      if (s <= log_floor) {
        out.flags_[idx] = 1;
        out.extended_ = true;
        out.values_[idx] = t.kind == Transform::Kind::Log ? -std::numeric_limits<double>::infinity()
                                                          : std::numeric_limits<double>::infinity();
      } else {
        out.values_[idx] = t(s);
      }
    } else {
      if (s < t.valid_min || s > t.valid_max) {
        std::ostringstream msg;
        msg << "transform domain violation at node " << idx << " (value " << s << ")";
        throw std::domain_error(msg.str());
      }
      out.values_[idx] = t(s);
    }
  }

  out.base_ = std::make_shared<GridField>(u);
  out.transform_ = t;
  out.log_floor_ = log_floor;
  out.trace_ = [base = out.base_, t, log_floor, is_power, is_log](Vec2 p) {
    double s = base->trace(p);
    if (is_power) s = std::max(s, 0.0);
    if (is_log) s = std::max(s, log_floor);
    return t(s);
  };
  out.ghosts_dirty_ = true;
  return out;
}

inline GridField operator*(double c, const GridField& u) {
  GridField out = u;
  for (double& v : out.values_) v *= c;
  out.boundary_value_ *= c;
  if (out.trace_) out.trace_ = [f = u.trace_, c](Vec2 p) { return c * f(p); };
  out.base_.reset();  // scaling breaks the stored transform chain
  out.ghosts_dirty_ = true;
  return out;
}

inline GridField operator+(const GridField& u, double c) {
  GridField out = u;
  for (double& v : out.values_) v += c;
  out.boundary_value_ += c;
  if (out.trace_)
    out.trace_ = [f = u.trace_, c](Vec2 p) { return f(p) + c; };
  else
    out.trace_ = [bv = out.boundary_value_](Vec2) { return bv; };
  out.base_.reset();
  out.ghosts_dirty_ = true;
  return out;
}

inline GridField negate(const GridField& u) { return -1.0 * u; }

/// Flat table of grid samples read back from the CSV format; enough for the
/// envelope tooling, which needs positions and usable values only.
struct FieldTable {
  int nx = 0, ny = 0;
  BBox bbox;
  double h = 0.0;
  std::vector<Vec2> points;
  std::vector<double> values;
  std::vector<bool> usable;

  static FieldTable import_csv(std::istream& is) {
    FieldTable t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty field CSV");
    {
      std::stringstream ss(line);
      std::string kv;
      while (std::getline(ss, kv, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string k = kv.substr(0, eq);
        double v = std::stod(kv.substr(eq + 1));
        if (k == "nx") t.nx = static_cast<int>(v);
        else if (k == "ny") t.ny = static_cast<int>(v);
        else if (k == "xmin") t.bbox.xmin = v;
        else if (k == "xmax") t.bbox.xmax = v;
        else if (k == "ymin") t.bbox.ymin = v;
        else if (k == "ymax") t.bbox.ymax = v;
        else if (k == "h") t.h = v;
      }
    }
    std::getline(is, line);  // column header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string x, y, cls, val;
      std::getline(ss, x, ',');
      std::getline(ss, y, ',');
      std::getline(ss, cls, ',');
      std::getline(ss, val, ',');
      t.points.push_back({std::stod(x), std::stod(y)});
      bool use = cls != "exterior" && val != "NEG_INF";
      t.usable.push_back(use);
      t.values.push_back(use ? std::stod(val) : 0.0);
    }
    return t;
  }
};

}  // namespace clab
