// selab: batch experiment driver for the singular elliptic laboratory.
//
// Usage: selab <action> --config <path> [--override section.key=value]... [--out <dir>]
// Actions: solve sweep bracket atlas blowup fold rate h1 hyp eig lm-check verify
//
// Exit codes: 0 = completed run (no-solution evidence is a result),
//             2 = config error, 3 = solver error (stalled without classification).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selab/config.hpp"
#include "selab/report_io.hpp"

namespace fs = std::filesystem;
using namespace selab;

namespace {

struct ActionResult {
  json result;
  std::string csv;       // optional CSV artifact
  bool solver_error = false;
};

std::vector<double> hyp_sample_grid(const ConfigMap& cfg) {
  const double lo = cfg.get_double("action.sample.min", 1e-6);
  const double hi = cfg.get_double("action.sample.max", 1e6);
  const long n = cfg.get_long("action.sample.count", 121);
  return logspace(lo, hi, static_cast<std::size_t>(n));
}

SweepParam parse_param(const ConfigMap& cfg) {
  const auto p = cfg.get_string("action.param", "lambda");
  if (p == "lambda") return SweepParam::Lambda;
  if (p == "mu") return SweepParam::Mu;
  throw ConfigError("action.param must be lambda|mu");
}

ActionResult run_action(const std::string& action, const ConfigMap& cfg) {
  ActionResult out;
  if (action == "hyp") {
    const auto prob = parse_problem(cfg);
    const auto grid = hyp_sample_grid(cfg);
    out.result = to_json(check_hypotheses(prob, grid));
    return out;
  }
  if (action == "eig") {
    const auto ms = parse_mesh(cfg);
    const auto mesh = build_mesh(ms.geometry, ms.n, ms.grading);
    const auto eig = principal_eigenpair(assemble(mesh));
    out.result = to_json(eig, cfg.get_bool("action.with_field", false));
    return out;
  }
  if (action == "lm-check") {
    const auto ms = parse_mesh(cfg);
    const auto mesh = build_mesh(ms.geometry, ms.n, ms.grading);
    const auto svals = cfg.get_list("action.s");
    const int levels = static_cast<int>(cfg.get_long("action.levels", 3));
    json arr = json::array();
    for (double s : svals) {
      auto r = lazer_mckenna_check(mesh, s, levels);
      json j = to_json(r);
      j["s"] = s;
      arr.push_back(std::move(j));
    }
    out.result = std::move(arr);
    return out;
  }
  if (action == "fold") {
    const auto ms = parse_mesh(cfg);
    auto prob = parse_problem(cfg);
    FoldScanOptions fopts;
    fopts.dim = ms.geometry.is_interval() ? 1 : ms.geometry.dimension;
    fopts.center_lo = cfg.get_double("action.center.min", fopts.center_lo);
    fopts.center_hi = cfg.get_double("action.center.max", fopts.center_hi);
    fopts.center_grid_size =
        static_cast<std::size_t>(cfg.get_long("action.center.count", 1200));
    fopts.bracket_rel_width = cfg.get_double("action.bracket_rel_width", 0.01);
    const auto grid = cfg.get_grid("action.lambda_grid");
    const auto rep = fold_scan(prob, grid, fopts);
    out.result = to_json(rep);
    return out;
  }

  // Remaining actions solve PDEs on one mesh (or a mesh family for h1).
  const auto ms = parse_mesh(cfg);
  auto prob = parse_problem(cfg);

  if (action == "h1") {
    const auto nlist = cfg.get_list("action.n_list");
    std::vector<Mesh> meshes;
    for (double n : nlist)
      meshes.push_back(build_mesh(ms.geometry, static_cast<std::size_t>(n), ms.grading));
    out.result = to_json(h1_membership(prob, meshes));
    return out;
  }

  const auto mesh = build_mesh(ms.geometry, ms.n, ms.grading);

  if (action == "solve") {
    const std::string solver = cfg.get_string("action.solver", "auto");
    SolveReport rep;
    if (solver == "auto")
      rep = solve_auto(prob, mesh);
    else if (solver == "singular")
      rep = solve_singular(prob, mesh);
    else if (solver == "exp")
      rep = exp_transform_solve(prob, mesh);
    else if (solver == "regularized")
      rep = solve_regularized(prob, mesh, cfg.get_double("action.eps", 1e-4));
    else
      throw ConfigError("action.solver must be auto|singular|exp|regularized");
    if (!cfg.get_bool("action.with_field", true)) rep.solution.clear();
    out.result = to_json(rep);
    out.solver_error = rep.status == SolveStatus::Stalled;
    return out;
  }
  if (action == "sweep") {
    const auto param = parse_param(cfg);
    const auto grid = cfg.get_grid("action.grid");
    SweepOptions sopts;
    sopts.warm_start = cfg.get_bool("action.warm_start", true);
    auto points = sweep(prob, param, grid, mesh, sopts);
    json arr = json::array();
    for (auto& p : points) {
      json j;
      j["param"] = p.param;
      p.report.solution.clear();
      j["report"] = to_json(p.report);
      arr.push_back(std::move(j));
    }
    out.result = std::move(arr);
    out.csv = sweep_csv(points, sweep_param_name(param));
    return out;
  }
  if (action == "bracket") {
    const auto param = parse_param(cfg);
    const auto br = bracket_threshold(prob, param, cfg.get_double("action.lo"),
                                      cfg.get_double("action.hi"),
                                      cfg.get_double("action.width_tol", 0.01), mesh);
    out.result = to_json(br);
    return out;
  }
  if (action == "atlas") {
    const auto lg = cfg.get_grid("action.lambda_grid");
    const auto mg = cfg.get_grid("action.mu_grid");
    auto cells = atlas(prob, lg, mg, mesh);
    out.result = to_json(std::span<const AtlasCell>(cells));
    json meta;
    meta["cells"] = std::move(out.result);
    meta["upclosed_violations"] = atlas_upclosed_violations(cells, lg.size(), mg.size()).size();
    out.result = std::move(meta);
    out.csv = atlas_csv(cells);
    return out;
  }
  if (action == "blowup") {
    const auto param = parse_param(cfg);
    const auto seq = cfg.get_grid("action.sequence");
    const double dlo = cfg.get_double("action.window.min", 0.25);
    const double dhi = cfg.get_double("action.window.max", 0.5);
    auto points = blowup_profile(prob, param, seq, dlo, dhi, mesh);
    json arr = json::array();
    for (const auto& p : points)
      arr.push_back({{"param", p.param},
                     {"window_min", json_number_or_null(p.window_min)},
                     {"status", status_name(p.status)}});
    out.result = {{"window", {dlo, dhi}}, {"points", std::move(arr)}};
    out.csv = blowup_csv(points);
    return out;
  }
  if (action == "rate") {
    auto rep = solve_auto(prob, mesh);
    if (!rep.converged()) {
      out.result = {{"status", status_name(rep.status)}};
      out.solver_error = rep.status == SolveStatus::Stalled;
      return out;
    }
    auto [dlo, dhi] = default_rate_window(mesh);
    dlo = cfg.get_double("action.window.min", dlo);
    dhi = cfg.get_double("action.window.max", dhi);
    const auto fit = fit_boundary_rate(mesh, rep.solution, dlo, dhi);
    out.result = to_json(fit);
    out.result["solve_status"] = status_name(rep.status);
    return out;
  }
  throw ConfigError("unknown action: " + action);
}

struct Expectation {
  std::string description;
  bool passed = false;
  std::string measured;
};

std::vector<Expectation> check_expectations(const std::string& action, const ConfigMap& cfg,
                                            const json& result) {
  std::vector<Expectation> checks;
  auto add = [&](const std::string& desc, bool ok, const std::string& measured) {
    checks.push_back({desc, ok, measured});
  };
  if (cfg.has("expect.status")) {
    const auto want = cfg.get_string("expect.status");
    const auto got = result.value("status", std::string("?"));
    add("status == " + want, got == want, got);
  }
  if (cfg.has("expect.note_contains")) {
    const auto want = cfg.get_string("expect.note_contains");
    bool found = false;
    if (result.contains("notes"))
      for (const auto& n : result["notes"])
        if (n.get<std::string>().find(want) != std::string::npos) found = true;
    add("notes mention '" + want + "'", found, found ? "present" : "absent");
  }
  if (cfg.has("expect.lambda1")) {
    const double want = cfg.get_double("expect.lambda1");
    const double tol = cfg.get_double("expect.lambda1_rel_tol", 1e-3);
    const double got = result.value("lambda1", 0.0);
    add("lambda1 within " + std::to_string(tol) + " of " + std::to_string(want),
        std::abs(got - want) <= tol * want, std::to_string(got));
  }
  if (cfg.has("expect.bracket_contains")) {
    const double want = cfg.get_double("expect.bracket_contains");
    const double lo = result.value("lo", 0.0), hi = result.value("hi", 0.0);
    add("bracket contains " + std::to_string(want), lo <= want && want <= hi,
        "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (cfg.has("expect.bracket_rel_width_max")) {
    const double want = cfg.get_double("expect.bracket_rel_width_max");
    const double got = result.value("relative_width", 1e30);
    add("bracket relative width <= " + std::to_string(want), got <= want, std::to_string(got));
  }
  if (cfg.has("expect.sigma_min")) {
    const double lo = cfg.get_double("expect.sigma_min");
    const double hi = cfg.get_double("expect.sigma_max");
    const double got = result.value("sigma", 1e30);
    add("sigma in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]",
        got >= lo && got <= hi, std::to_string(got));
  }
  if (cfg.has("expect.verdict")) {
    const auto want = cfg.get_string("expect.verdict");
    const auto got = result.value("verdict", std::string("?"));
    add("verdict == " + want, got == want, got);
  }
  if (cfg.has("expect.verdicts")) {
    // lm-check: comma list matching the action.s list order.
    std::vector<std::string> want;
    {
      std::istringstream in(cfg.get_string("expect.verdicts"));
      std::string tok;
      while (std::getline(in, tok, ',')) want.push_back(tok);
    }
    bool ok = result.is_array() && want.size() == result.size();
    std::string got;
    if (result.is_array())
      for (std::size_t i = 0; i < result.size(); ++i) {
        const auto v = result[i].value("verdict", std::string("?"));
        got += (i ? "," : "") + v;
        if (i < want.size() && v != want[i]) ok = false;
      }
    add("verdicts match", ok, got);
  }
  if (cfg.has("expect.solvable_min") && action == "atlas") {
    const long want = cfg.get_long("expect.solvable_min");
    long solvable = 0, unsolvable = 0;
    for (const auto& c : result["cells"]) {
      const auto s = c.value("status", std::string());
      if (s == "solvable") ++solvable;
      if (s == "unsolvable") ++unsolvable;
    }
    add("solvable cells >= " + std::to_string(want), solvable >= want, std::to_string(solvable));
    if (cfg.has("expect.unsolvable_min")) {
      const long wu = cfg.get_long("expect.unsolvable_min");
      add("unsolvable cells >= " + std::to_string(wu), unsolvable >= wu,
          std::to_string(unsolvable));
    }
    if (cfg.get_bool("expect.upclosed", false)) {
      const long v = result.value("upclosed_violations", -1);
      add("up-closedness violations == 0", v == 0, std::to_string(v));
    }
  }
  if (cfg.has("expect.min_increasing") && action == "blowup") {
    bool inc = true;
    double prev = -1e300;
    std::string got;
    for (const auto& p : result["points"]) {
      if (!p["window_min"].is_number()) {
        inc = false;
        break;
      }
      const double v = p["window_min"].get<double>();
      got += got.empty() ? "" : " -> ";
      got += std::to_string(v);
      if (v <= prev) inc = false;
      prev = v;
    }
    add("window minima strictly increasing", inc, got);
    if (cfg.has("expect.growth_ratio_min")) {
      const double want = cfg.get_double("expect.growth_ratio_min");
      const auto& pts = result["points"];
      double ratio = 0.0;
      if (!pts.empty() && pts.front()["window_min"].is_number() &&
          pts.back()["window_min"].is_number())
        ratio = pts.back()["window_min"].get<double>() / pts.front()["window_min"].get<double>();
      add("growth ratio >= " + std::to_string(want), ratio >= want, std::to_string(ratio));
    }
  }
  if (cfg.has("expect.lambda0_in") && action == "fold") {
    const auto w0 = cfg.get_list("expect.lambda0_in");
    const auto w1 = cfg.get_list("expect.lambda1_in");
    const double l0 = 0.5 * (result["lambda0_bracket"][0].get<double>() +
                             result["lambda0_bracket"][1].get<double>());
    const double l1 = 0.5 * (result["lambda1_bracket"][0].get<double>() +
                             result["lambda1_bracket"][1].get<double>());
    add("lambda0 in declared range", w0.size() == 2 && l0 >= w0[0] && l0 <= w0[1],
        std::to_string(l0));
    add("lambda1 in declared range", w1.size() == 2 && l1 >= w1[0] && l1 <= w1[1],
        std::to_string(l1));
    bool has2 = false, bad = false;
    for (const auto& c : result["solution_count"]) {
      const int v = c.get<int>();
      if (v == 2) has2 = true;
      if (v < 0 || v > 2) bad = true;
    }
    add("count pattern inside {0,1,2} with a 2-region", has2 && !bad, has2 ? "ok" : "no 2s");
  }
  return checks;
}

int run_verify(const std::string& dir) {
  std::vector<fs::path> files;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".cfg") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "selab verify: no .cfg files under " << dir << "\n";
    return 2;
  }
  int failures = 0;
  for (const auto& f : files) {
    ConfigMap cfg;
    std::string action;
    try {
      cfg = ConfigMap::parse_file(f.string());
      action = cfg.get_string("action.name");
      const auto t0 = std::chrono::steady_clock::now();
      auto res = run_action(action, cfg);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      auto checks = check_expectations(action, cfg, res.result);
      cfg.reject_unknown_keys();
      bool all = true;
      for (const auto& c : checks) all = all && c.passed;
      std::printf("%s  %-28s (%.1fs)\n", all ? "PASS" : "FAIL", f.filename().c_str(), secs);
      for (const auto& c : checks)
        std::printf("      %s  %s (measured: %s)\n", c.passed ? "ok  " : "FAIL",
                    c.description.c_str(), c.measured.c_str());
      if (!all) ++failures;
    } catch (const std::exception& e) {
      std::printf("FAIL  %-28s exception: %s\n", f.filename().c_str(), e.what());
      ++failures;
    }
  }
  std::printf("verify: %zu claims, %d failed\n", files.size(), failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selab: numerical laboratory for singular semilinear elliptic problems"};
  std::string action, config_path, out_dir = ".";
  std::vector<std::string> overrides;
  app.add_option("action", action,
                 "solve|sweep|bracket|atlas|blowup|fold|rate|h1|hyp|eig|lm-check|verify")
      ->required();
  app.add_option("--config", config_path, "config file (directory for verify)");
  app.add_option("--override", overrides, "override section.key=value");
  app.add_option("--out", out_dir, "output directory");
  CLI11_PARSE(app, argc, argv);

  try {
    if (action == "verify")
      return run_verify(config_path.empty() ? "configs/acceptance" : config_path);

    if (config_path.empty()) {
      std::cerr << "selab: --config is required\n";
      return 2;
    }
    ConfigMap cfg = ConfigMap::parse_file(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    if (cfg.has("action.name")) {
      const auto declared = cfg.get_string("action.name");
      if (declared != action) {
        std::cerr << "selab: config declares action '" << declared << "', got '" << action
                  << "'\n";
        return 2;
      }
    }

    const auto t0 = std::chrono::steady_clock::now();
    ActionResult res = run_action(action, cfg);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    json doc;
    doc["config"] = config_to_json(cfg);
    doc["result"] = std::move(res.result);
    doc["meta"] = {{"tool", "selab"}, {"wall_ms", wall_ms}};

    const auto checks = check_expectations(action, cfg, doc["result"]);
    if (!checks.empty()) {
      json jc = json::array();
      for (const auto& c : checks)
        jc.push_back({{"check", c.description}, {"passed", c.passed}, {"measured", c.measured}});
      doc["expectations"] = std::move(jc);
    }
    const std::string json_name = cfg.get_string("output.json", action + ".json");
    const std::string csv_name = cfg.get_string("output.csv", action + ".csv");
    cfg.reject_unknown_keys();

    fs::create_directories(out_dir);
    const std::string json_path = (fs::path(out_dir) / json_name).string();
    write_text_file(json_path, doc.dump(2) + "\n");
    std::cerr << "selab: wrote " << json_path << "\n";
    if (!res.csv.empty()) {
      const std::string csv_path = (fs::path(out_dir) / csv_name).string();
      write_text_file(csv_path, res.csv);
      std::cerr << "selab: wrote " << csv_path << "\n";
    }
    return res.solver_error ? 3 : 0;
  } catch (const ConfigError& e) {
    std::cerr << "selab: config error: " << e.what() << "\n";
    return 2;
  } catch (const BadInitialBracket& e) {
    std::cerr << "selab: solver error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "selab: solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "selab: error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
