#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "selab/errors.hpp"
#include "selab/mesh.hpp"
#include "selab/problem.hpp"
#include "selab/shooting.hpp"
#include "selab/solve.hpp"

namespace selab {

enum class SweepParam { Lambda, Mu };

inline std::string sweep_param_name(SweepParam p) {
  return p == SweepParam::Lambda ? "lambda" : "mu";
}

inline ProblemInstance with_param(ProblemInstance prob, SweepParam p, double value) {
  if (p == SweepParam::Lambda)
    prob.lambda = value;
  else
    prob.mu = value;
  return prob;
}

/// Number of worker threads: SELAB_THREADS caps it, default hardware size.
inline unsigned thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SELAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = static_cast<unsigned>(std::min<long>(v, 512));
  }
  return hw;
}

struct SweepOptions {
  bool warm_start = true;
  SolveOptions solve;
};

struct SweepPoint {
  double param = 0.0;
  SolveReport report;
};

/// Solves the problem at every grid value of the parameter, warm-starting
/// from the previous converged solution when enabled. Failures are recorded
/// per point, never thrown.
inline std::vector<SweepPoint> sweep(const ProblemInstance& prob_template, SweepParam param,
                                     std::span<const double> grid, const Mesh& mesh,
                                     const SweepOptions& opts = {}) {
  std::vector<SweepPoint> out;
  std::vector<double> warm;
  for (double v : grid) {
    const auto prob = with_param(prob_template, param, v);
    SolveReport rep = solve_auto(prob, mesh, opts.solve,
                                 opts.warm_start ? std::span<const double>(warm)
                                                 : std::span<const double>{});
    if (opts.warm_start && rep.converged()) warm = rep.solution;
    out.push_back({v, std::move(rep)});
  }
  return out;
}

/// Interval [lo, hi] around a critical parameter value: the solve at lo
/// converged, the solve at hi produced no-solution evidence.
struct ThresholdBracket {
  SweepParam param = SweepParam::Lambda;
  double lo = 0.0;
  double hi = 0.0;
  SolveReport lo_report;
  SolveReport hi_report;
  int probes = 0;
  int stalled_probes = 0;  // Stalled counts as unsolvable (conservative)

  double width() const { return hi - lo; }
};

/// Bisection on the solvable/unsolvable classification until
/// hi - lo <= width_tol * lo. Ties (Stalled, Diverged) count as unsolvable.
inline ThresholdBracket bracket_threshold(const ProblemInstance& prob_template, SweepParam param,
                                          double lo_init, double hi_init, double width_tol,
                                          const Mesh& mesh, const SolveOptions& sopts = {}) {
  if (!(lo_init < hi_init)) throw BadInitialBracket("bracket requires lo < hi");
  ThresholdBracket br;
  br.param = param;
  br.lo = lo_init;
  br.hi = hi_init;

  auto classify = [&](double v, SolveReport& rep) {
    rep = solve_auto(with_param(prob_template, param, v), mesh, sopts);
    ++br.probes;
    if (rep.status == SolveStatus::Stalled) ++br.stalled_probes;
    return rep.converged();
  };

  if (!classify(lo_init, br.lo_report))
    throw BadInitialBracket("solve at lo_init did not converge");
  if (classify(hi_init, br.hi_report))
    throw BadInitialBracket("solve at hi_init converged; no threshold inside the bracket");

  while (br.hi - br.lo > width_tol * br.lo) {
    const double mid = 0.5 * (br.lo + br.hi);
    SolveReport rep;
    if (classify(mid, rep)) {
      br.lo = mid;
      br.lo_report = std::move(rep);
    } else {
      br.hi = mid;
      br.hi_report = std::move(rep);
    }
  }
  return br;
}

struct AtlasCell {
  double lambda = 0.0;
  double mu = 0.0;
  SolveStatus status = SolveStatus::Stalled;
  double sup_norm = std::numeric_limits<double>::quiet_NaN();
};

/// Full (lambda, mu) grid classification, row-major with mu as the row index.
/// Rows run in parallel (SELAB_THREADS workers); within a row the lambda
/// sweep is warm-start chained, so the merge is deterministic by grid index.
inline std::vector<AtlasCell> atlas(const ProblemInstance& prob_template,
                                    std::span<const double> lambda_grid,
                                    std::span<const double> mu_grid, const Mesh& mesh,
                                    const SolveOptions& sopts = {}) {
  const std::size_t nl = lambda_grid.size(), nm = mu_grid.size();
  std::vector<AtlasCell> cells(nl * nm);
  auto run_row = [&](std::size_t j) {
    auto prob = prob_template;
    prob.mu = mu_grid[j];
    auto points = sweep(prob, SweepParam::Lambda, lambda_grid, mesh, {true, sopts});
    for (std::size_t i = 0; i < nl; ++i) {
      AtlasCell& c = cells[j * nl + i];
      c.lambda = lambda_grid[i];
      c.mu = mu_grid[j];
      c.status = points[i].report.status;
      c.sup_norm = points[i].report.sup_norm;
    }
  };
  const unsigned workers = std::min<unsigned>(thread_count(), std::max<std::size_t>(nm, 1));
  if (workers <= 1 || nm <= 1) {
    for (std::size_t j = 0; j < nm; ++j) run_row(j);
  } else {
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < workers; ++t)
      futs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t j = next.fetch_add(1); j < nm; j = next.fetch_add(1)) run_row(j);
      }));
    for (auto& f : futs) f.get();
  }
  return cells;
}

/// Pairs (i, j) where cell (i, j) is solvable but some cell with both
/// parameters >= is unsolvable; empty means the solvable set is up-closed.
inline std::vector<std::pair<std::size_t, std::size_t>> atlas_upclosed_violations(
    std::span<const AtlasCell> cells, std::size_t nl, std::size_t nm) {
  std::vector<std::pair<std::size_t, std::size_t>> bad;
  auto at = [&](std::size_t i, std::size_t j) -> const AtlasCell& { return cells[j * nl + i]; };
  for (std::size_t j = 0; j < nm; ++j)
    for (std::size_t i = 0; i < nl; ++i) {
      if (at(i, j).status != SolveStatus::Converged) continue;
      for (std::size_t jj = j; jj < nm; ++jj)
        for (std::size_t ii = i; ii < nl; ++ii)
          if (at(ii, jj).status == SolveStatus::NoSolutionEvidence) {
            bad.emplace_back(i, j);
            jj = nm;
            break;
          }
    }
  return bad;
}

struct BlowupPoint {
  double param = 0.0;
  double window_min = std::numeric_limits<double>::quiet_NaN();
  SolveStatus status = SolveStatus::Stalled;
};

/// Minimum of the solution over the nodes with d(x) in the window, along an
/// increasing parameter sequence below the threshold.
inline std::vector<BlowupPoint> blowup_profile(const ProblemInstance& prob_template,
                                               SweepParam param,
                                               std::span<const double> param_sequence,
                                               double d_min, double d_max, const Mesh& mesh,
                                               const SolveOptions& sopts = {}) {
  std::vector<BlowupPoint> out;
  std::vector<double> warm;
  for (double v : param_sequence) {
    const auto rep = solve_auto(with_param(prob_template, param, v), mesh, sopts, warm);
    BlowupPoint pt;
    pt.param = v;
    pt.status = rep.status;
    if (rep.converged()) {
      warm = rep.solution;
      double mn = std::numeric_limits<double>::infinity();
      const auto& d = mesh.boundary_distance();
      for (std::size_t i = 0; i < mesh.size(); ++i)
        if (d[i] >= d_min && d[i] <= d_max) mn = std::min(mn, rep.solution[i]);
      pt.window_min = mn;
    }
    out.push_back(pt);
  }
  return out;
}

struct FoldReport {
  std::vector<double> lambda_grid;
  std::vector<int> solution_count;
  double lambda0_lo = 0.0, lambda0_hi = 0.0;  // 0 -> >=1 transition
  double lambda1_lo = 0.0, lambda1_hi = 0.0;  // 2 -> 1 transition
};

struct FoldScanOptions {
  std::size_t center_grid_size = 1200;
  double center_lo = 1e-2;
  double center_hi = 1e6;
  double bracket_rel_width = 0.01;
  int dim = 1;
};

/// Runs the shooting solver over a lambda grid and brackets the fold
/// endpoints lambda_0 (no solution -> solutions) and lambda_1 (two -> one).
inline FoldReport fold_scan(const ProblemInstance& prob_template,
                            std::span<const double> lambda_grid,
                            const FoldScanOptions& opts = {}) {
  const auto centers = logspace(opts.center_lo, opts.center_hi, opts.center_grid_size);
  auto count_at = [&](double lambda) {
    auto prob = prob_template;
    prob.lambda = lambda;
    return static_cast<int>(shoot_radial(prob, opts.dim, centers).size());
  };

  FoldReport rep;
  rep.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
  rep.solution_count.resize(lambda_grid.size());

  {
    const unsigned workers =
        std::min<unsigned>(thread_count(), std::max<std::size_t>(lambda_grid.size(), 1));
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < workers; ++t)
      futs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next.fetch_add(1); i < lambda_grid.size(); i = next.fetch_add(1))
          rep.solution_count[i] = count_at(lambda_grid[i]);
      }));
    for (auto& f : futs) f.get();
  }

  const auto& cnt = rep.solution_count;
  for (int c : cnt)
    if (c < 0 || c > 2) throw FoldNotResolved("solution count outside {0,1,2}");
  std::size_t first_nonzero = cnt.size();
  for (std::size_t i = 0; i < cnt.size(); ++i)
    if (cnt[i] > 0) {
      first_nonzero = i;
      break;
    }
  if (first_nonzero == cnt.size() || first_nonzero == 0)
    throw FoldNotResolved("lambda grid does not straddle lambda_0");
  for (std::size_t i = first_nonzero; i < cnt.size(); ++i)
    if (cnt[i] == 0) throw FoldNotResolved("solution counts return to zero past lambda_0");
  std::size_t last_two = cnt.size();
  for (std::size_t i = cnt.size(); i-- > first_nonzero;)
    if (cnt[i] == 2) {
      last_two = i;
      break;
    }
  if (last_two == cnt.size() || last_two + 1 >= cnt.size() || cnt.back() != 1)
    throw FoldNotResolved("no 2 -> 1 transition inside the lambda grid");

  auto bisect = [&](double lo, double hi, auto&& pred) {
    // pred(count) true on the hi side
    while (hi - lo > opts.bracket_rel_width * lo) {
      const double mid = 0.5 * (lo + hi);
      if (pred(count_at(mid)))
        hi = mid;
      else
        lo = mid;
    }
    return std::pair<double, double>(lo, hi);
  };
  std::tie(rep.lambda0_lo, rep.lambda0_hi) =
      bisect(lambda_grid[first_nonzero - 1], lambda_grid[first_nonzero],
             [](int c) { return c >= 1; });
  std::tie(rep.lambda1_lo, rep.lambda1_hi) =
      bisect(lambda_grid[last_two], lambda_grid[last_two + 1], [](int c) { return c <= 1; });
  return rep;
}

}  // namespace selab
