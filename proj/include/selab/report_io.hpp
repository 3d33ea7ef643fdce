#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "selab/config.hpp"
#include "selab/continuation.hpp"
#include "selab/diagnostics.hpp"
#include "selab/discrete_operator.hpp"
#include "selab/mesh.hpp"
#include "selab/problem.hpp"
#include "selab/shooting.hpp"
#include "selab/solve.hpp"

namespace selab {

using json = nlohmann::ordered_json;

/// 17-significant-digit scientific rendering used by the CSV emitters.
inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline json json_number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline json to_json(const Mesh& mesh) {
  json j;
  j["geometry"] = mesh.geometry().is_interval() ? "interval" : "ball";
  if (!mesh.geometry().is_interval()) j["dimension"] = mesh.geometry().dimension;
  j["n"] = mesh.size();
  j["grading"] = mesh.grading_exponent();
  j["nodes"] = mesh.nodes();
  return j;
}

inline json to_json(const SolveReport& rep) {
  json j;
  j["status"] = status_name(rep.status);
  j["iterations"] = rep.iterations;
  j["final_residual"] = json_number_or_null(rep.final_residual);
  j["sup_norm"] = json_number_or_null(rep.sup_norm);
  j["h1_seminorm"] = json_number_or_null(rep.h1_seminorm);
  j["min_interior_value"] = json_number_or_null(rep.min_interior_value);
  j["deepest_epsilon"] = json_number_or_null(rep.deepest_epsilon);
  if (std::isfinite(rep.original_residual))
    j["original_equation_residual"] = rep.original_residual;
  j["epsilon_schedule_used"] = rep.epsilon_schedule_used;
  j["notes"] = rep.notes;
  if (!rep.solution.empty()) j["solution"] = rep.solution;
  return j;
}

inline json to_json(const EigenPair& eig, bool with_field = true) {
  json j;
  j["lambda1"] = eig.lambda1;
  j["residual"] = eig.residual;
  j["iterations"] = eig.iterations;
  j["c1"] = eig.c1;
  j["c2"] = eig.c2;
  if (with_field) j["phi"] = eig.phi;
  return j;
}

inline json to_json(const ThresholdBracket& br) {
  json j;
  j["param"] = sweep_param_name(br.param);
  j["lo"] = br.lo;
  j["hi"] = br.hi;
  j["width"] = br.width();
  j["relative_width"] = br.width() / br.lo;
  j["probes"] = br.probes;
  j["stalled_probes"] = br.stalled_probes;
  j["lo_status"] = status_name(br.lo_report.status);
  j["hi_status"] = status_name(br.hi_report.status);
  j["lo_sup_norm"] = json_number_or_null(br.lo_report.sup_norm);
  j["hi_sup_norm"] = json_number_or_null(br.hi_report.sup_norm);
  return j;
}

inline std::string atlas_status_name(SolveStatus s) {
  // Stalled/Diverged cells near the existence boundary stay unresolved.
  if (s == SolveStatus::Converged) return "solvable";
  if (s == SolveStatus::NoSolutionEvidence) return "unsolvable";
  return "unresolved";
}

inline json to_json(std::span<const AtlasCell> cells) {
  json arr = json::array();
  for (const auto& c : cells) {
    json j;
    j["lambda"] = c.lambda;
    j["mu"] = c.mu;
    j["status"] = atlas_status_name(c.status);
    j["sup_norm"] = json_number_or_null(c.sup_norm);
    arr.push_back(std::move(j));
  }
  return arr;
}

inline json to_json(const RateFit& fit) {
  json j;
  j["sigma"] = fit.sigma;
  j["constant"] = fit.constant;
  j["window"] = {fit.window_lo, fit.window_hi};
  j["fit_residual"] = fit.fit_residual;
  j["node_count"] = fit.node_count;
  j["sigma_asymmetry"] = fit.sigma_asymmetry;
  return j;
}

inline json to_json(const MembershipVerdict& v) {
  json j;
  j["verdict"] = membership_name(v.verdict);
  j["seminorm_sequence"] = v.seminorm_sequence;
  j["node_counts"] = v.node_counts;
  j["boundary_cells"] = v.boundary_cells;
  j["loglog_slope"] = v.loglog_slope;
  return j;
}

inline json to_json(const LazerMcKennaResult& r) {
  json j;
  j["verdict"] = r.verdict == LazerMcKennaResult::Verdict::Finite
                     ? "finite"
                     : (r.verdict == LazerMcKennaResult::Verdict::Divergent ? "divergent"
                                                                            : "inconclusive");
  j["value"] = json_number_or_null(r.value);
  j["values"] = r.values;
  j["node_counts"] = r.node_counts;
  return j;
}

inline json to_json(const FoldReport& r) {
  json j;
  j["lambda_grid"] = r.lambda_grid;
  j["solution_count"] = r.solution_count;
  j["lambda0_bracket"] = {r.lambda0_lo, r.lambda0_hi};
  j["lambda1_bracket"] = {r.lambda1_lo, r.lambda1_hi};
  return j;
}

inline json to_json(const HypothesisReport& r) {
  json j;
  j["f1"] = tri_name(r.f1);
  j["f2"] = tri_name(r.f2);
  j["f3"] = tri_name(r.f3);
  j["f4"] = tri_name(r.f4);
  j["f5"] = tri_name(r.f5);
  j["f6"] = tri_name(r.f6);
  j["f7"] = tri_name(r.f7);
  j["g1"] = tri_name(r.g1);
  j["g2"] = tri_name(r.g2);
  j["g3"] = tri_name(r.g3);
  j["g4"] = tri_name(r.g4);
  j["f3_limit"] = r.f3_limit;
  j["g2_alpha"] = r.g2_alpha;
  j["g_integral_divergent"] = r.g_integral_divergent;
  switch (r.keller_osserman.kind) {
    case KellerOsserman::Kind::Finite:
      j["keller_osserman"] = {{"kind", "finite"}, {"value", r.keller_osserman.value}};
      break;
    case KellerOsserman::Kind::Divergent:
      j["keller_osserman"] = {{"kind", "divergent"}};
      break;
    case KellerOsserman::Kind::NonIntegrableInner:
      j["keller_osserman"] = {{"kind", "non_integrable_inner"}};
      break;
  }
  j["g2_implies_ko_ok"] = r.g2_implies_ko_ok;
  return j;
}

inline json config_to_json(const ConfigMap& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.raw()) j[k] = v;
  return j;
}

/// CSV for sweep results. Stable column schema:
/// param,status,sup_norm,h1_seminorm,iterations
inline std::string sweep_csv(std::span<const SweepPoint> points, const std::string& param_name) {
  std::string out = param_name + ",status,sup_norm,h1_seminorm,iterations\n";
  for (const auto& p : points) {
    out += csv_number(p.param) + "," + status_name(p.report.status) + "," +
           csv_number(p.report.sup_norm) + "," + csv_number(p.report.h1_seminorm) + "," +
           std::to_string(p.report.iterations) + "\n";
  }
  return out;
}

/// CSV for atlas cells. Columns: lambda,mu,status,sup_norm
inline std::string atlas_csv(std::span<const AtlasCell> cells) {
  std::string out = "lambda,mu,status,sup_norm\n";
  for (const auto& c : cells)
    out += csv_number(c.lambda) + "," + csv_number(c.mu) + "," + atlas_status_name(c.status) +
           "," + csv_number(c.sup_norm) + "\n";
  return out;
}

/// CSV for blow-up profiles. Columns: param,window_min,status
inline std::string blowup_csv(std::span<const BlowupPoint> points) {
  std::string out = "param,window_min,status\n";
  for (const auto& p : points)
    out += csv_number(p.param) + "," + csv_number(p.window_min) + "," + status_name(p.status) +
           "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

}  // namespace selab
