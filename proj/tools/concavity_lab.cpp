#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "concavity/experiments.hpp"

namespace {

using namespace clab;

int cmd_run(const std::string& preset, const std::string& config_path, const std::string& out_dir,
            int lambda_steps, bool refine, int grid_n) {
  Config cfg = Config::load(config_path);
  RunOptions opts;
  opts.lambda_steps = lambda_steps;
  opts.refine = refine;
  opts.grid_n = grid_n;
  opts.out_dir = out_dir;
  auto [rep, code] = run_preset(preset, cfg, opts);
  std::cout << to_json(rep).dump(2) << '\n';
  return code;
}

/// Randomized property sweeps of the defect-functional identities:
/// sub-additivity of the harmonic variant, the ratio-convexity transfer and
/// the inverse-convexity transfer, each on a fixed analytic family.
int cmd_verify(long long samples, unsigned seed) {
  bool all_ok = true;
  auto line = [&](const std::string& name, bool ok, double measured) {
    all_ok = all_ok && ok;
    std::cout << (ok ? "pass" : "FAIL") << "  " << name << "  (measured " << measured << ")\n";
  };
  const double tol = 1e-9;
  BBox box{-1.0, 1.0, -1.0, 1.0};

  {
    Nonlinearity f, g;
    f.b = [](Vec2 x, double s) { return 2.0 + std::sin(x.x + s) * std::cos(x.y); };
    g.b = [](Vec2 x, double s) { return 1.5 + 0.5 * std::cos(x.x - s) * std::sin(x.y + 1.0); };
    auto rep = hc_subadd_check(f, g, box, -1.0, 1.0, samples, seed);
    line("hc_subadditivity_sum", rep.sum_samples > 0 && rep.sum_violation <= tol, rep.sum_violation);
    line("hc_subadditivity_diff", rep.diff_samples > 0 && rep.diff_violation <= tol, rep.diff_violation);
  }
  {
    // concave positive g: ratio s^2/g must be C1*delta-convex
    ConvexDomain dom = ConvexDomain::disk({0, 0}, 1.0);
    Nonlinearity g;
    g.b = [](Vec2 x, double s) { return 5.0 - 0.2 * (x.x * x.x + x.y * x.y + s * s); };
    auto rep = ratio_convexity_check(g, dom, 4.0, 5.1, 1.0, 1e-3, samples, seed + 1);
    line("ratio_convexity_transfer", rep.max_excess <= tol, rep.max_excess);
  }
  {
    // 1/g jointly convex: g must be harmonically concave up to C^2*delta
    ConvexDomain dom = ConvexDomain::disk({0, 0}, 1.0);
    Nonlinearity g;
    g.smin = -1.0;
    g.smax = 1.0;
    g.b = [](Vec2 x, double s) { return 1.0 / (0.5 + 0.1 * (x.x * x.x + x.y * x.y + s * s)); };
    auto rep = inverse_convexity_check(g, dom, 2.1, 1e-3, samples, seed + 2);
    line("inverse_convexity_transfer", rep.samples > 0 && rep.worst_margin >= -tol, rep.worst_margin);
    line("inverse_is_delta_convex", rep.max_inv_defect <= 1e-3 + tol, rep.max_inv_defect);
  }
  {
    // antisymmetry C_{-u} = -C_u and HC >= C on random admissible queries
    std::mt19937_64 rng(seed + 3);
    std::uniform_real_distribution<double> ux(-1.0, 1.0), us(0.1, 3.0), ul(0.0, 1.0);
    Nonlinearity g;
    g.b = [](Vec2 x, double s) { return 0.2 + s * s + 0.3 * std::sin(x.x * 2.0 + x.y); };
    double worst_anti = 0.0, worst_dom = -std::numeric_limits<double>::infinity();
    long long admissible = 0;
    for (long long k = 0; k < samples; ++k) {
      HCQuery q;
      q.y1 = {ux(rng), ux(rng)};
      q.y3 = {ux(rng), ux(rng)};
      q.s1 = us(rng);
      q.s3 = us(rng);
      q.lambda = ul(rng);
      double c = joint_convexity_value(g, q);
      Nonlinearity neg;
      neg.b = [&g](Vec2 x, double s) { return -g.eval(x, s); };
      worst_anti = std::max(worst_anti, std::abs(joint_convexity_value(neg, q) + c));
      if (auto hc = harmonic_convexity_value(g, q)) {
        worst_dom = std::max(worst_dom, c - *hc);
        ++admissible;
      }
    }
    line("defect_antisymmetry", worst_anti <= tol, worst_anti);
    line("hc_dominates_c", admissible > 0 && worst_dom <= tol, worst_dom);
  }
  return all_ok ? ExitOk : ExitVerdictFailed;
}

int cmd_envelope(const std::string& csv_path) {
  std::ifstream f(csv_path);
  if (!f) {
    std::cerr << "cannot open field CSV: " << csv_path << '\n';
    return ExitSolverError;
  }
  FieldTable table = FieldTable::import_csv(f);
  std::vector<Vec2> pts;
  std::vector<double> vals;
  std::vector<size_t> rows;
  for (size_t i = 0; i < table.points.size(); ++i)
    if (table.usable[i]) {
      pts.push_back(table.points[i]);
      vals.push_back(table.values[i]);
      rows.push_back(i);
    }
  auto pe = concave_envelope_points(pts, vals);

  json j;
  j["gap"] = pe.gap;
  j["witness_distance"] = pe.witness_distance;
  j["nodes_used"] = pe.nodes_used;
  if (pe.argmax >= 0) {
    j["argmax"] = {{"x", pts[pe.argmax].x}, {"y", pts[pe.argmax].y}};
  }
  std::cout << j.dump(2) << '\n';

  // witness field next to the input, same CSV layout
  std::string out_path = csv_path + ".witness.csv";
  std::ofstream out(out_path);
  out << "nx=" << table.nx << ",ny=" << table.ny << ",xmin=" << table.bbox.xmin
      << ",xmax=" << table.bbox.xmax << ",ymin=" << table.bbox.ymin << ",ymax=" << table.bbox.ymax
      << ",h=" << table.h << '\n';
  out << "x,y,class,value\n";
  out.precision(17);
  std::vector<double> wit(table.points.size());
  std::vector<bool> have(table.points.size(), false);
  for (size_t k = 0; k < rows.size(); ++k) {
    wit[rows[k]] = pe.envelope[k] - pe.witness_distance;
    have[rows[k]] = true;
  }
  for (size_t i = 0; i < table.points.size(); ++i) {
    out << table.points[i].x << ',' << table.points[i].y << ',' << (have[i] ? "interior" : "exterior")
        << ',';
    if (have[i])
      out << wit[i];
    else
      out << "NEG_INF";
    out << '\n';
  }
  std::cerr << "witness written to " << out_path << '\n';
  return ExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for approximate concavity of elliptic solutions"};
  app.require_subcommand(1);

  std::string preset, config_path, out_dir, csv_path;
  int lambda_steps = 16, grid_n = 0;
  bool refine = false;
  long long samples = 10000;
  unsigned seed = 20240817;

  auto* run = app.add_subcommand("run", "solve a preset problem and test its concavity verdicts");
  run->add_option("preset", preset,
                  "one of: torsion, eigen_log, kennington_power, power_perturbed, log_concave, "
                  "source_perturbed, perturbation_rate")
      ->required();
  run->add_option("--config", config_path, "key=value configuration file")->required();
  run->add_option("--out", out_dir, "output directory for reports and field CSVs");
  run->add_option("--lambda-steps", lambda_steps, "chord parameter grid resolution");
  run->add_flag("--refine", refine, "golden-section polish of the defect argmax");
  run->add_option("--grid", grid_n, "override grid spacing with h = 1/N");

  auto* verify = app.add_subcommand("verify-appendix", "randomized property sweeps of the defect algebra");
  verify->add_option("--samples", samples, "number of random queries per sweep");
  verify->add_option("--seed", seed, "RNG seed");

  auto* env = app.add_subcommand("envelope", "concave envelope and witness of a field CSV");
  env->add_option("field", csv_path, "field CSV (header row, then x,y,class,value)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(preset, config_path, out_dir, lambda_steps, refine, grid_n);
    if (verify->parsed()) return cmd_verify(samples, seed);
    if (env->parsed()) return cmd_envelope(csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return clab::ExitSolverError;
  }
  return clab::ExitSolverError;
}
