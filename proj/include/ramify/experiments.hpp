#pragma once

// The five commands of the ramify tool. Each run_* function computes; each
// cmd_* function also writes its outputs and returns the exit status.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ramify/config.hpp"
#include "ramify/diagnostics.hpp"
#include "ramify/errors.hpp"
#include "ramify/exact_cost.hpp"
#include "ramify/json_io.hpp"
#include "ramify/optimizer.hpp"
#include "ramify/svg.hpp"

namespace ramify {

enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitConfig = 2, kExitNumerical = 3 };

/// Raised when a run finishes but one of its checks does not hold.
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Output helpers

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Streams trace rows to a CSV file, flushing after every row.
class TraceWriter {
 public:
  explicit TraceWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw Error("cannot open " + path.string());
    out_ << "iter,eps,J,I,P,H,tau,gnorm,backtracks\n" << std::flush;
  }
  void operator()(const TraceRow& r) {
    out_ << r.iter << ',' << format_double(r.eps) << ',' << format_double(r.J) << ',' << format_double(r.I) << ','
         << format_double(r.P) << ',' << format_double(r.H) << ',' << format_double(r.tau) << ','
         << format_double(r.gnorm) << ',' << r.backtracks << '\n'
         << std::flush;
  }

 private:
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

/// Accepted rows within a stage must strictly decrease J.
inline void check_monotone(const RunTrace& trace) {
  std::size_t begin = 0;
  for (std::size_t s = 0; s < trace.stage_end.size(); ++s) {
    double last = std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < trace.stage_end[s]; ++i) {
      const TraceRow& r = trace.rows[i];
      if (r.tau == 0.0) continue;
      if (!(r.J < last))
        throw AssertionFailure("objective increased in stage " + std::to_string(s) + " at iteration " +
                               std::to_string(r.iter));
      last = r.J;
    }
    begin = trace.stage_end[s];
  }
}

// ---------------------------------------------------------------------------
// irrigate

struct IrrigateResult {
  PathPlan initial;
  ContinuationResult<PathPlan> run;
  std::vector<std::size_t> clusters;  // initial, then one per stage
  double final_energy = 0.0;
  std::optional<double> exact_cost;  // empty when the merged tree is not a tree
  std::string topology_error;
  double merge_tol = 0.0;
};

inline IrrigationProblem irrigation_problem(const RunConfig& c) {
  IrrigationProblem p;
  p.options = {c.functional, c.kernel, c.objective.alpha, c.descent.eps_schedule.front(), c.quad_points};
  return p;
}

inline IrrigateResult run_irrigate(const RunConfig& c, const RowCallback& on_row = {},
                                   const std::function<void(std::size_t, const PathPlan&)>& on_stage = {}) {
  IrrigateResult r;
  const TargetMeasure mu = half_circle_targets(c.measure.n, c.measure.radius, c.measure.total_mass);
  r.initial = build_star_plan(mu, c.measure.segments);
  r.clusters.push_back(trunk_clusters(r.initial, c.cluster.radius, c.cluster.tol));
  if (on_stage) on_stage(0, r.initial);
  r.run = eps_continuation(irrigation_problem(c), r.initial, c.descent, on_row,
                           [&](std::size_t s, double, const PathPlan& plan) {
                             r.clusters.push_back(trunk_clusters(plan, c.cluster.radius, c.cluster.tol));
                             if (on_stage) on_stage(s + 1, plan);
                           });
  r.final_energy = r.run.value.J;
  r.merge_tol = c.merge_tol ? *c.merge_tol : c.descent.eps_schedule.back();
  try {
    r.exact_cost = exact_plan_cost(r.run.plan, c.objective.alpha, r.merge_tol);
  } catch (const TopologyError& e) {
    r.topology_error = e.what();
  }
  return r;
}

inline int cmd_irrigate(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  TraceWriter trace(dir / "trace.csv");
  auto write_stage = [&](std::size_t i, const PathPlan& plan) {
    write_json_file((dir / ("plan_stage_" + std::to_string(i) + ".json")).string(), to_json(plan));
    write_text_file(dir / ("stage_" + std::to_string(i) + ".svg"), render_svg(plan, c.objective.alpha, c.svg));
  };
  const IrrigateResult r = run_irrigate(c, std::ref(trace), write_stage);
  write_json_file((dir / "plan_final.json").string(), to_json(r.run.plan));

  nlohmann::json s;
  s["experiment"] = "irrigate";
  s["functional"] = std::string(form_name(c.functional));
  s["kernel"] = std::string(kernel_name(c.kernel.kind));
  s["kernel_mass"] = kernel_mass(c.kernel);
  s["alpha"] = c.objective.alpha;
  s["n"] = c.measure.n;
  s["eps_schedule"] = c.descent.eps_schedule;
  s["final_energy"] = r.final_energy;
  s["exact_cost"] = r.exact_cost ? nlohmann::json(*r.exact_cost) : nlohmann::json(nullptr);
  if (!r.exact_cost) s["topology_error"] = r.topology_error;
  s["merge_tol"] = r.merge_tol;
  s["trunk_clusters"] = r.clusters;
  s["iterations"] = r.run.trace.rows.size();
  write_json_file((dir / "summary.json").string(), s);
  std::printf("irrigate: final energy %.9g, exact cost %s, trunk clusters", r.final_energy,
              r.exact_cost ? format_double(*r.exact_cost).c_str() : "n/a");
  for (std::size_t k : r.clusters) std::printf(" %zu", k);
  std::printf("\n");
  check_monotone(r.run.trace);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// treeopt

struct TreeOptResult {
  BranchPlan initial;
  ObjectiveValue initial_value;
  ContinuationResult<BranchPlan> run;
};

inline TreeShapeProblem tree_problem(const RunConfig& c) {
  TreeShapeProblem p;
  p.config = c.objective;
  p.config.eps = c.descent.eps_schedule.front();
  return p;
}

inline TreeOptResult run_treeopt(const RunConfig& c, const RowCallback& on_row = {},
                                 const std::function<void(std::size_t, const BranchPlan&)>& on_stage = {}) {
  TreeOptResult r;
  r.initial = build_fan_branches(c.fan.n, c.fan.spread, c.fan.length0, c.fan.segments, c.descent.m_init);
  const TreeShapeProblem problem = tree_problem(c);
  r.initial_value = problem.evaluate(r.initial);
  if (on_stage) on_stage(0, r.initial);
  r.run = eps_continuation(problem, r.initial, c.descent, on_row,
                           [&](std::size_t s, double, const BranchPlan& plan) {
                             if (on_stage) on_stage(s + 1, plan);
                           });
  return r;
}

inline int cmd_treeopt(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  TraceWriter trace(dir / "trace.csv");
  auto write_stage = [&](std::size_t i, const BranchPlan& plan) {
    write_json_file((dir / ("plan_stage_" + std::to_string(i) + ".json")).string(), to_json(plan));
    write_text_file(dir / ("stage_" + std::to_string(i) + ".svg"), render_svg(plan, c.objective.alpha, c.svg));
  };
  const TreeOptResult r = run_treeopt(c, std::ref(trace), write_stage);
  write_json_file((dir / "plan_final.json").string(), to_json(r.run.plan));
  const ObjectiveValue& v = r.run.value;
  nlohmann::json s;
  s["experiment"] = "treeopt";
  s["alpha"] = c.objective.alpha;
  s["c1"] = c.objective.c1;
  s["c2"] = c.objective.c2;
  s["n"] = c.fan.n;
  s["eps_schedule"] = c.descent.eps_schedule;
  s["initial"] = {{"J", r.initial_value.J}, {"I", r.initial_value.I}, {"P", r.initial_value.P}, {"H", r.initial_value.H}};
  s["final"] = {{"J", v.J}, {"I", v.I}, {"P", v.P}, {"H", v.H}};
  s["iterations"] = r.run.trace.rows.size();
  write_json_file((dir / "summary.json").string(), s);
  std::printf("treeopt: J %.9g -> %.9g (I %.6g, P %.6g, H %.6g)\n", r.initial_value.J, v.J, v.I, v.P, v.H);
  check_monotone(r.run.trace);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gamma-table

inline std::vector<GammaRow> run_gamma_table(const RunConfig& c) {
  const TargetMeasure mu = half_circle_targets(c.measure.n, c.measure.radius, c.measure.total_mass);
  const PathPlan plan = build_star_plan(mu, c.measure.segments);
  const double tol = c.merge_tol ? *c.merge_tol : default_merge_tol(plan);
  std::vector<double> eps = c.gamma_table.eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  return gamma_table(plan, c.objective.alpha, eps, c.kernel, tol, c.quad_points);
}

/// Row index violating E_max <= E_exact (1 + tol) or monotonicity, or npos.
inline std::size_t gamma_table_violation(const std::vector<GammaRow>& rows, double tol) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].E_max > rows[i].E_exact * (1.0 + tol)) return i;
    if (i > 0 && rows[i].E_max < rows[i - 1].E_max) return i;
  }
  return static_cast<std::size_t>(-1);
}

inline int cmd_gamma_table(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const auto rows = run_gamma_table(c);
  std::string csv = "eps,E_exact,E_max,E_avg,gap_max,gap_avg\n";
  for (const auto& r : rows)
    csv += format_double(r.eps) + ',' + format_double(r.E_exact) + ',' + format_double(r.E_max) + ',' +
           format_double(r.E_avg) + ',' + format_double(r.gap_max) + ',' + format_double(r.gap_avg) + '\n';
  write_text_file(dir / "gamma_table.csv", csv);
  std::fputs(csv.c_str(), stdout);
  const std::size_t bad = gamma_table_violation(rows, c.gamma_table.tol);
  if (bad != static_cast<std::size_t>(-1))
    throw AssertionFailure("gamma table check failed at eps = " + format_double(rows[bad].eps));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// counterexample

inline int cmd_counterexample(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const auto& x = c.counterexample;
  const CounterexampleReport r = run_counterexample(x);
  nlohmann::json j;
  j["fixture"] = {{"m1", x.m1}, {"m2", x.m2}, {"l1", x.l1}, {"l2", x.l2}, {"delta", x.delta},
                  {"alpha", x.alpha}, {"eps", x.eps}, {"kernel", std::string(kernel_name(x.kernel.kind))}};
  j["closed_form"] = {{"cost", r.closed_cost}, {"cost_longer", r.closed_cost_longer}, {"derivative", r.derivative}};
  j["pipeline"] = {{"energy", r.energy},
                   {"energy_longer", r.energy_longer},
                   {"longer_cheaper", r.longer_cheaper},
                   {"plan_diameter", r.plan_diameter}};
  j["control_alpha_1"] = {{"energy", r.control_energy},
                          {"energy_longer", r.control_energy_longer},
                          {"reversed", r.control_reversed}};
  write_json_file((dir / "counterexample.json").string(), j);
  std::printf("closed form: %.9g vs %.9g (derivative %.6g)\n", r.closed_cost, r.closed_cost_longer, r.derivative);
  std::printf("energy_avg:  %.9g vs %.9g; alpha = 1 control: %.9g vs %.9g\n", r.energy, r.energy_longer,
              r.control_energy, r.control_energy_longer);
  if (!(r.derivative < 0.0)) throw AssertionFailure("derivative at the fixture is not negative");
  if (!r.longer_cheaper) throw AssertionFailure("the longer path is not cheaper");
  if (!r.control_reversed) throw AssertionFailure("alpha = 1 control did not reverse");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

inline int cmd_gradcheck(const RunConfig& c) {
  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  fs::create_directories(dir);
  const GradcheckReport r = run_gradcheck(c.gradcheck);
  nlohmann::json j = {{"seed", c.gradcheck.seed},         {"samples", r.samples},
                      {"components", r.components},       {"worst", r.worst},
                      {"worst_sample", r.worst_sample},   {"worst_component", r.worst_component},
                      {"tol", c.gradcheck.tol},           {"passed", r.passed}};
  write_json_file((dir / "gradcheck.json").string(), j);
  std::printf("gradcheck: %zu samples, worst relative error %.3e (tol %.1e) %s\n", r.samples, r.worst,
              c.gradcheck.tol, r.passed ? "PASS" : "FAIL");
  if (!r.passed) throw AssertionFailure("gradient check failed");
  return kExitOk;
}

inline int run_command(const RunConfig& c) {
  switch (c.experiment) {
    case Experiment::Irrigate: return cmd_irrigate(c);
    case Experiment::TreeOpt: return cmd_treeopt(c);
    case Experiment::GammaTable: return cmd_gamma_table(c);
    case Experiment::Counterexample: return cmd_counterexample(c);
    case Experiment::Gradcheck: return cmd_gradcheck(c);
  }
  return kExitOther;
}

}  // namespace ramify
