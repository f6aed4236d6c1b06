#pragma once

#include "concavity/field.hpp"
#include "concavity/linprog.hpp"

namespace clab {

struct Envelope1D {
  std::vector<double> envelope;
  std::vector<double> witness;
  double gap = 0.0;
  double witness_distance = 0.0;
  int argmax = 0;
};

/// Least concave majorant of samples (xs, values): upper hull by monotone
/// chain, then linear interpolation between hull vertices.
inline Envelope1D concave_envelope_1d(const std::vector<double>& xs, const std::vector<double>& values) {
  const size_t n = xs.size();
  if (n < 2 || values.size() != n) throw std::invalid_argument("need >= 2 matching samples");
  for (size_t i = 1; i < n; ++i)
    if (!(xs[i] > xs[i - 1])) throw std::invalid_argument("xs must be strictly increasing");

  std::vector<size_t> hull;
  for (size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
      // keep right turns (concave chain): drop b when it lies below chord a-i
      double cross = (xs[b] - xs[a]) * (values[i] - values[a]) - (values[b] - values[a]) * (xs[i] - xs[a]);
      if (cross >= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }

  Envelope1D res;
  res.envelope.resize(n);
  size_t seg = 0;
  for (size_t i = 0; i < n; ++i) {
    while (seg + 1 < hull.size() && xs[hull[seg + 1]] < xs[i]) ++seg;
    size_t a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
    if (a == b) {
      res.envelope[i] = values[a];
    } else {
      double t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
      res.envelope[i] = values[a] + t * (values[b] - values[a]);
    }
    double d = res.envelope[i] - values[i];
    if (d > res.gap) {
      res.gap = d;
      res.argmax = static_cast<int>(i);
    }
  }
  res.witness_distance = 0.5 * res.gap;
  res.witness = res.envelope;
  for (double& w : res.witness) w -= res.witness_distance;
  return res;
}

struct EnvelopeOptions {
  int max_nodes = 4000;  // stride-subsample the node set beyond this
  unsigned seed = 424242;
};

/// Envelope of a flat point cloud (positions and values, no grid attached).
struct PointEnvelope {
  std::vector<double> envelope;  // one value per input point
  double gap = 0.0;
  double witness_distance = 0.0;
  int argmax = -1;     // index into the input arrays
  int nodes_used = 0;  // active LP points after subsampling
};

/// Least concave majorant over a planar point cloud. Each point value is the
/// optimum of a 3-variable LP (the lowest plane dominating every point), which
/// is exactly the upper hull of the lifted point cloud evaluated back at the
/// points. Beyond max_nodes the point set is stride-subsampled; the remaining
/// points are filled from the collected support planes.
inline PointEnvelope concave_envelope_points(const std::vector<Vec2>& pts, const std::vector<double>& vals,
                                             const EnvelopeOptions& opts = {}) {
  const size_t n = pts.size();
  if (n < 3) throw std::invalid_argument("envelope needs >= 3 usable points");
  if (vals.size() != n) throw std::invalid_argument("points/values size mismatch");

  std::vector<size_t> active;
  if (opts.max_nodes > 0 && static_cast<int>(n) > opts.max_nodes) {
    double stride = static_cast<double>(n) / opts.max_nodes;
    for (int k = 0; k < opts.max_nodes; ++k) active.push_back(static_cast<size_t>(k * stride));
  } else {
    for (size_t k = 0; k < n; ++k) active.push_back(k);
  }

  // center and scale for conditioning
  double cx = 0, cy = 0, cv = 0;
  for (size_t k : active) {
    cx += pts[k].x;
    cy += pts[k].y;
    cv += vals[k];
  }
  cx /= active.size();
  cy /= active.size();
  cv /= active.size();
  double sxy = 1e-30, sv = 1e-30;
  for (size_t k : active) {
    sxy = std::max({sxy, std::abs(pts[k].x - cx), std::abs(pts[k].y - cy)});
    sv = std::max(sv, std::abs(vals[k] - cv));
  }

  // degeneracy probe: all active points collinear?
  {
    Vec2 p0 = pts[active[0]];
    Vec2 dir{0, 0};
    bool collinear = true;
    for (size_t k = 1; k < active.size() && collinear; ++k) {
      Vec2 d = pts[active[k]] - p0;
      if (dir.norm() == 0.0)
        dir = d;
      else if (std::abs(dir.cross(d)) > 1e-12 * sxy * sxy)
        collinear = false;
    }
    if (collinear) throw std::invalid_argument("degenerate point set: all points collinear");
  }

  std::vector<seidel::Constraint3> cons;
  cons.reserve(active.size());
  for (size_t k : active) {
    // plane a*X + b*Y + c >= V  ->  -a*X - b*Y - c <= -V (scaled coordinates)
    double X = (pts[k].x - cx) / sxy, Y = (pts[k].y - cy) / sxy, V = (vals[k] - cv) / sv;
    cons.push_back({{-X, -Y, -1.0}, -V});
  }

  const double box = 1e6;
  const double tol = 1e-12;
  std::vector<std::array<double, 3>> planes;
  planes.reserve(active.size());

  PointEnvelope out;
  out.envelope.assign(n, 0.0);
  out.nodes_used = static_cast<int>(active.size());
  std::vector<uint8_t> is_active(n, 0);
  for (size_t k = 0; k < active.size(); ++k) {
    size_t i = active[k];
    is_active[i] = 1;
    double X = (pts[i].x - cx) / sxy, Y = (pts[i].y - cy) / sxy;
    // the LP is feasible by construction (any plane above all points); an
    // infeasible verdict is roundoff on degenerate (coplanar) inputs, so retry
    // with a reshuffled insertion order and a relaxed pivot tolerance
    seidel::LPResult res;
    for (int attempt = 0;; ++attempt) {
      res = seidel::solve3(cons, {X, Y, 1.0}, box, tol * std::pow(100.0, attempt),
                           opts.seed + static_cast<unsigned>(k) + 7919u * attempt);
      if (res.feasible || attempt == 3) break;
    }
    if (!res.feasible) throw std::runtime_error("envelope LP infeasible (numerical breakdown)");
    double env = cv + sv * (res.x[0] * X + res.x[1] * Y + res.x[2]);
    env = std::max(env, vals[i]);  // guard roundoff undershoot
    out.envelope[i] = env;
    planes.push_back(res.x);
    double d = env - vals[i];
    if (d > out.gap) {
      out.gap = d;
      out.argmax = static_cast<int>(i);
    }
  }
  if (out.argmax < 0) out.argmax = static_cast<int>(active[0]);

  // fill the inactive points from the collected support planes
  for (size_t i = 0; i < n; ++i) {
    if (is_active[i]) continue;
    double X = (pts[i].x - cx) / sxy, Y = (pts[i].y - cy) / sxy;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pl : planes) best = std::min(best, pl[0] * X + pl[1] * Y + pl[2]);
    out.envelope[i] = std::max(cv + sv * best, vals[i]);
  }
  out.witness_distance = 0.5 * out.gap;
  return out;
}

struct EnvelopeResult {
  GridField envelope;
  GridField witness;
  double gap = 0.0;
  double witness_distance = 0.0;
  int argmax_node = -1;
  int nodes_used = 0;
};

/// Grid wrapper: envelope over the usable nodes of a field.
inline EnvelopeResult concave_envelope_2d(const GridField& u, const EnvelopeOptions& opts = {}) {
  const auto& sp = u.spec();
  std::vector<int> nodes;
  std::vector<Vec2> pts;
  std::vector<double> vals;
  for (int idx = 0; idx < sp.size(); ++idx)
    if (u.node_usable(idx)) {
      nodes.push_back(idx);
      pts.push_back(sp.node(idx % sp.nx, idx / sp.nx));
      vals.push_back(u.value(idx));
    }
  if (nodes.size() < 3) throw std::invalid_argument("envelope needs >= 3 usable nodes");

  auto pe = concave_envelope_points(pts, vals, opts);

  EnvelopeResult out{GridField(u.mask_ptr()), GridField(u.mask_ptr())};
  out.gap = pe.gap;
  out.witness_distance = pe.witness_distance;
  out.nodes_used = pe.nodes_used;
  out.argmax_node = pe.argmax >= 0 ? nodes[pe.argmax] : -1;
  for (size_t k = 0; k < nodes.size(); ++k) {
    out.envelope.set_value(nodes[k], pe.envelope[k]);
    out.witness.set_value(nodes[k], pe.envelope[k] - pe.witness_distance);
  }
  return out;
}

/// Independent cross-check: repeated midpoint-max sweep over symmetric node
/// pairs whose midpoint is itself a node, iterated to a fixed point. Returns
/// the nodal values of the resulting lattice-concave majorant.
inline std::vector<double> midpoint_sweep_envelope(const GridField& u, int max_sweeps = 10000,
                                                   double tol = 1e-14) {
  const auto& sp = u.spec();
  std::vector<double> env(sp.size(), -std::numeric_limits<double>::infinity());
  std::vector<int> nodes;
  for (int idx = 0; idx < sp.size(); ++idx)
    if (u.node_usable(idx)) {
      env[idx] = u.value(idx);
      nodes.push_back(idx);
    }

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double worst = 0.0;
    for (int idx : nodes) {
      int i = idx % sp.nx, j = idx / sp.nx;
      for (int dj = -(sp.ny - 1); dj <= sp.ny - 1; ++dj) {
        for (int di = -(sp.nx - 1); di <= sp.nx - 1; ++di) {
          if (di == 0 && dj == 0) continue;
          int ia = i + di, ja = j + dj, ib = i - di, jb = j - dj;
          if (ia < 0 || ia >= sp.nx || ja < 0 || ja >= sp.ny) continue;
          if (ib < 0 || ib >= sp.nx || jb < 0 || jb >= sp.ny) continue;
          double va = env[sp.index(ia, ja)], vb = env[sp.index(ib, jb)];
          if (!std::isfinite(va) || !std::isfinite(vb)) continue;
          double mid = 0.5 * (va + vb);
          if (mid > env[idx]) {
            worst = std::max(worst, mid - env[idx]);
            env[idx] = mid;
          }
        }
      }
    }
    if (worst <= tol) break;
  }
  return env;
}

/// Empirical stability constant: witness distance of the concave
/// approximation divided by the measured defect delta.
inline double hyers_ulam_ratio(const GridField& u, double delta, const EnvelopeOptions& opts = {}) {
  auto env = concave_envelope_2d(u, opts);
  if (delta <= 0.0) {
    return env.witness_distance > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return env.witness_distance / delta;
}

}  // namespace clab
