#pragma once

// Command execution, CSV emission, parameter sweeps and the bundled property check.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fieldroad/config.hpp"
#include "fieldroad/diagnostics.hpp"
#include "fieldroad/discrete.hpp"
#include "fieldroad/errors.hpp"
#include "fieldroad/simulate.hpp"
#include "fieldroad/spectral.hpp"
#include "fieldroad/speed.hpp"
#include "fieldroad/steady.hpp"

namespace fieldroad {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitProperty = 4 };

/// Minimal CSV writer: quotes fields containing separators or quotes.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out_ << ',';
      out_ << escape(fields[k]);
    }
    out_ << '\n';
  }

  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
  }

 private:
  std::ofstream out_;
};

inline std::filesystem::path prepare_output(const RunConfig& c) {
  const std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "manifest.cfg") << manifest_text(c);
  return dir;
}

inline State make_init(const RunConfig& c, const StripGrid& g) {
  const auto& in = c.init;
  if (in.kind == "zero") return State::zero(g);
  if (in.kind == "capacity") {
    State s = State::zero(g);
    s.u().setConstant(c.model.road_capacity());
    s.w.tail(static_cast<Eigen::Index>(g.nx * g.ny)).setConstant(1.0);
    return s;
  }
  if (in.kind == "subsolution") return kpp_subsolution(c.model, c.spec(), g, in.epsilon, in.center);
  return bump_init(c.model, g, in.center, in.width, in.amp_u, in.amp_v);
}

// ---- simulate ---------------------------------------------------------------

inline void write_snapshots(const std::filesystem::path& path, const Trajectory& tr, const StripGrid& g) {
  CsvWriter w(path, {"t", "x", "y", "u", "v"});
  for (const auto& s : tr.snapshots) {
    const std::string t = fmt17(s.t);
    for (std::size_t i = 0; i < g.nx; ++i) w.row({t, fmt17(g.x(i)), "", fmt17(s.u(i)), ""});
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) w.row({t, fmt17(g.x(i)), fmt17(g.y(j)), "", fmt17(s.v(i, j))});
  }
}

inline void write_probes(const std::filesystem::path& path, const Trajectory& tr) {
  CsvWriter w(path, {"t", "probe_name", "value"});
  for (const auto& p : tr.probes) w.row({fmt17(p.t), p.name, fmt17(p.value)});
}

inline int run_simulate(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto g = c.run_grid();
  const std::vector<Probe> probes = {sup_norm_probe(), front_probe(g, c.front.level, false),
                                     front_probe(g, c.front.level, true)};
  const auto tr = simulate(make_init(c, g), c.model, c.spec(), g, c.sim, probes);
  write_snapshots(dir / "snapshots.csv", tr, g);
  write_probes(dir / "probes.csv", tr);
  log << "simulate: " << tr.snapshots.size() << " snapshots, final sup norm "
      << fmt17(tr.snapshots.back().w.cwiseAbs().maxCoeff()) << "\n";
  return kExitOk;
}

// ---- steady -----------------------------------------------------------------

inline const char* to_string(LowerStart s) {
  switch (s) {
    case LowerStart::Subsolution: return "subsolution";
    case LowerStart::Eigenfunction: return "eigenfunction";
    case LowerStart::None: return "none";
  }
  return "?";
}

inline void write_steady(const std::filesystem::path& path, const SteadyState& st) {
  CsvWriter w(path, {"x", "y", "U", "V"});
  const auto& g = st.grid;
  for (std::size_t j = 0; j <= g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i)
      w.row({fmt17(g.x(i)), fmt17(g.y(j)), fmt17(st.U[static_cast<Eigen::Index>(i)]), fmt17(st.v(i, j))});
}

inline int run_steady(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto st = compute_steady(c.model, c.spec(), c.period_grid(), c.steady_tol);
  write_steady(dir / "steady.csv", st);
  CsvWriter w(dir / "steady_summary.csv", {"persistent", "margin", "lambda0", "residual", "bracket_gap", "steps",
                                           "lower_start", "epsilon"});
  w.row({st.persistent ? "true" : "false", fmt17(st.persistence.margin), fmt17(st.lambda0), fmt17(st.residual),
         fmt17(st.bracket_gap), std::to_string(st.steps), to_string(st.lower_start), fmt17(st.epsilon)});
  log << "steady: " << (st.persistent ? "persistent" : "extinction (zero state)") << ", lambda_R(0) = "
      << fmt17(st.lambda0) << ", condition margin " << fmt17(st.persistence.margin) << "\n";
  return kExitOk;
}

// ---- eigen ------------------------------------------------------------------

inline int run_eigen(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto& sp = c.spectral;
  if (sp.halfplane) {
    const EigenEvaluator ev(c.model, c.spec(), sp.policy, sp.eigen);
    CsvWriter w(dir / "dispersion.csv", {"alpha", "R", "lambda", "residual", "iterations", "converged"});
    for (double a : sp.alphas) {
      const auto hp = halfplane_eigen(ev, a, sp.tol_limit);
      for (double R : hp.R_schedule) {
        const auto sm = ev.summary(R, a);
        w.row({fmt17(a), fmt17(R), fmt17(sm.lambda), fmt17(sm.residual), std::to_string(sm.iterations),
               hp.converged ? "true" : "false"});
      }
      log << "eigen: lambda(" << fmt17(a) << ") = " << fmt17(hp.lambda_inf) << (hp.converged ? "" : " (not converged)")
          << "\n";
    }
    return kExitOk;
  }
  const auto g = c.period_grid();
  CsvWriter w(dir / "dispersion.csv", {"alpha", "R", "lambda", "residual", "iterations"});
  for (std::size_t k = 0; k < sp.alphas.size(); ++k) {
    const double a = sp.alphas[k];
    const auto ep = principal_eigen(c.model, c.spec(), g, a, sp.eigen);
    w.row({fmt17(a), fmt17(c.model.R), fmt17(ep.lambda), fmt17(ep.residual), std::to_string(ep.iterations)});
    if (ep.advection == AdvectionScheme::Upwind)
      log << "eigen: |alpha| dx > 1/2 at alpha = " << fmt17(a) << "; upwind advection used\n";
    if (sp.dump_operator)
      write_coo((dir / ("operator_" + std::to_string(k) + ".coo")).string(),
                assemble_eigen_operator(c.model, c.spec(), g, a));
    log << "eigen: lambda_R(" << fmt17(a) << ") = " << fmt17(ep.lambda) << "\n";
  }
  return kExitOk;
}

// ---- speed ------------------------------------------------------------------

inline int run_speed(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto& sp = c.spectral;
  CsvWriter w(dir / "speed.csv", {"mode", "R", "direction", "alpha_star", "c_star", "evaluations"});
  if (sp.halfplane) {
    const auto r = speed_halfplane(c.model, c.spec(), sp.policy, sp.tol_alpha, sp.tol_limit, sp.eigen);
    for (std::size_t k = 0; k < r.strip_speeds.size(); ++k)
      w.row({"strip", fmt17(r.R_schedule[k]), "right", fmt17(r.strip_alphas[k]), fmt17(r.strip_speeds[k]),
             std::to_string(r.strip_evaluations[k])});
    w.row({"halfplane", fmt17(r.R), "right", fmt17(r.alpha_star), fmt17(r.c_star), std::to_string(r.evaluations)});
    log << "speed: c* = " << fmt17(r.c_star) << " at alpha* = " << fmt17(r.alpha_star) << "\n";
    return kExitOk;
  }
  const auto g = c.period_grid();
  for (Direction d : {Direction::Right, Direction::Left}) {
    const auto r = speed_strip(c.model, c.spec(), g, d, sp.tol_alpha, sp.eigen);
    w.row({"strip", fmt17(r.R), to_string(d), fmt17(r.alpha_star), fmt17(r.c_star), std::to_string(r.evaluations)});
    log << "speed: c*_R (" << to_string(d) << ") = " << fmt17(r.c_star) << "\n";
  }
  return kExitOk;
}

// ---- front ------------------------------------------------------------------

inline int run_front(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto g = c.run_grid();
  const auto init = make_init(c, g);
  const auto tr = simulate(init, c.model, c.spec(), g, c.sim);
  const auto trace = track_front(tr, g, c.front.level, c.front.window_fraction);
  {
    CsvWriter w(dir / "front.csv", {"t", "pos_left", "pos_right"});
    for (std::size_t k = 0; k < trace.times.size(); ++k)
      w.row({fmt17(trace.times[k]), fmt17(trace.pos_left[k]), fmt17(trace.pos_right[k])});
  }
  CsvWriter w(dir / "front_summary.csv", {"c_hat", "stderr", "r2", "deviation"});
  if (trace.empty) {
    w.row({"nan", "nan", "nan", "nan"});
    log << "front: level " << fmt17(c.front.level) << " never attained (empty trace)\n";
    return kExitOk;
  }
  const auto est = estimate_speed(trace, c.front.window_fraction);
  double deviation = std::nan("");
  if (c.front.pulsating) {
    // Second run with dt aligned so that L/c_hat is a whole number of snapshot strides.
    SimConfig sc = c.sim;
    sc.dt = aligned_dt(c.model.L, est.c_hat, c.sim.dt, c.sim.record_every);
    sc.record_from = 0.5 * c.sim.T;
    const auto tr2 = simulate(init, c.model, c.spec(), g, sc);
    PulsatingOptions po;
    po.t_from = sc.record_from;
    po.x_lo = c.init.center + c.model.L;
    deviation = pulsating_diagnostic(tr2, g, c.model, est.c_hat, po).deviation;
  }
  w.row({fmt17(est.c_hat), fmt17(est.stderr_c), fmt17(est.r2), fmt17(deviation)});
  log << "front: c_hat = " << fmt17(est.c_hat) << " +- " << fmt17(est.stderr_c) << "\n";
  return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

struct SweepTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> sweep_result_columns(Command cmd, bool halfplane) {
  switch (cmd) {
    case Command::Speed: return {"c_star", "alpha_star", "evaluations"};
    case Command::Steady: return {"persistent", "margin", "lambda0", "U_min", "U_max", "residual"};
    default: return halfplane ? std::vector<std::string>{"lambda", "R_last", "converged"}
                              : std::vector<std::string>{"lambda", "residual", "iterations"};
  }
}

inline std::vector<std::string> sweep_point(const RunConfig& c) {
  const auto& sp = c.spectral;
  switch (c.sweep_command) {
    case Command::Speed: {
      const auto r = sp.halfplane ? speed_halfplane(c.model, c.spec(), sp.policy, sp.tol_alpha, sp.tol_limit, sp.eigen)
                                  : speed_strip(c.model, c.spec(), c.period_grid(), Direction::Right, sp.tol_alpha,
                                                sp.eigen);
      return {fmt17(r.c_star), fmt17(r.alpha_star), std::to_string(r.evaluations)};
    }
    case Command::Steady: {
      const auto st = compute_steady(c.model, c.spec(), c.period_grid(), c.steady_tol);
      return {st.persistent ? "true" : "false", fmt17(st.persistence.margin), fmt17(st.lambda0),
              fmt17(st.U.minCoeff()), fmt17(st.U.maxCoeff()), fmt17(st.residual)};
    }
    default: {
      const double a = sp.alphas.front();
      if (sp.halfplane) {
        const auto hp = halfplane_eigen(c.model, c.spec(), a, sp.policy, sp.tol_limit, sp.eigen);
        return {fmt17(hp.lambda_inf), fmt17(hp.R_schedule.back()), hp.converged ? "true" : "false"};
      }
      const auto ep = principal_eigen(c.model, c.spec(), c.period_grid(), a, sp.eigen);
      return {fmt17(ep.lambda), fmt17(ep.residual), std::to_string(ep.iterations)};
    }
  }
}

}  // namespace detail

/// Cross product of the sweep lists (first listed key outermost). Every point
/// runs on its own resolved config; failures are recorded in the row.
inline SweepTable run_sweep(const RunConfig& c) {
  const auto& lists = c.settings.sweep();
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> values;
  std::size_t total = lists.empty() ? 0 : 1;
  for (const auto& [key, list] : lists) {
    keys.push_back(key);
    values.push_back(detail::split_list(list));
    total *= values.back().size();
  }
  if (total > c.sweep_max_points) {
    std::ostringstream os;
    os << "sweep has " << total << " points; sweep.max_points is " << c.sweep_max_points;
    throw ConfigError(os.str());
  }

  SweepTable table;
  table.header = keys;
  for (const auto& col : detail::sweep_result_columns(c.sweep_command, c.spectral.halfplane))
    table.header.push_back(col);
  table.header.push_back("status");
  table.header.push_back("error");
  const std::size_t n_result = table.header.size() - keys.size() - 2;
  table.rows.resize(total);

  auto run_point = [&](std::size_t idx) {
    std::vector<std::string> row(keys.size());
    std::size_t rem = idx;
    for (std::size_t k = keys.size(); k-- > 0;) {
      row[k] = values[k][rem % values[k].size()];
      rem /= values[k].size();
    }
    std::vector<std::string> result;
    std::string status = "ok", error;
    try {
      Settings s = c.settings;
      for (std::size_t k = 0; k < keys.size(); ++k) s.set(keys[k], row[k]);
      auto pc = resolve(s);
      pc.sweep_command = c.sweep_command;
      result = detail::sweep_point(pc);
    } catch (const std::exception& e) {
      status = "error";
      error = e.what();
      result.assign(n_result, "");
    }
    row.insert(row.end(), result.begin(), result.end());
    row.push_back(status);
    row.push_back(error);
    table.rows[idx] = std::move(row);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) run_point(i);
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(c.threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return table;
}

inline int run_sweep_command(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto table = run_sweep(c);
  CsvWriter w(dir / "sweep.csv", table.header);
  std::size_t failed = 0;
  for (const auto& r : table.rows) {
    w.row(r);
    if (r[r.size() - 2] != "ok") ++failed;
  }
  log << "sweep: " << table.rows.size() << " points, " << failed << " failed\n";
  return kExitOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyLine {
  std::string property;
  bool pass;
  double margin;
  std::string note;
};

/// Runs the KPP check, the eigenvalue property report, the speed invariants
/// and the spreading dichotomy on a reference run.
inline std::vector<VerifyLine> verify_all(const RunConfig& c) {
  std::vector<VerifyLine> lines;
  const auto& spec = c.spec();

  const auto kpp = kpp_check(spec, 64, 64);
  lines.push_back({"kpp", kpp.ok, kpp.m, kpp.ok ? "" : kpp.violations.front().what});

  GridPolicy pol = c.spectral.policy;
  const auto rep = verify_eigen_properties(c.model, spec, pol, c.verify.alphas, c.verify.R_list, {}, c.spectral.eigen);
  for (const auto& pr : rep.properties)
    lines.push_back({"eigen: " + pr.name, pr.pass, pr.worst_margin, rep.refined ? "refined grid" : ""});
  const double dx = c.model.L / static_cast<double>(pol.nx);
  for (double a : c.verify.alphas)
    if (!peclet_ok(a, dx)) {
      std::ostringstream os;
      os << "M-matrix regime: |alpha| dx > 1/2 at alpha = " << a << "; upwind fallback used";
      lines.push_back({"eigen: advection regime", true, 0.5 - std::abs(a) * dx, os.str()});
      break;
    }

  const auto pg = c.period_grid();
  const double lam0 = principal_eigen(c.model, spec, pg, 0.0, c.spectral.eigen).lambda;
  if (!(lam0 < 0.0)) {
    lines.push_back({"speed", true, lam0, "below persistence (expected negative)"});
    lines.push_back({"dichotomy", true, lam0, "below persistence; skipped"});
    return lines;
  }
  const auto right = speed_strip(c.model, spec, pg, Direction::Right, c.spectral.tol_alpha, c.spectral.eigen);
  const auto left = speed_strip(c.model, spec, pg, Direction::Left, c.spectral.tol_alpha, c.spectral.eigen);
  lines.push_back({"speed: c*_R > 0", right.c_star > 0.0 && left.c_star > 0.0, std::min(right.c_star, left.c_star), ""});
  // c*_R against the closed-form bounds on -lambda_R: inf_a max{D a^2 - mu, d a^2 + m - d pi^2/R^2} / a.
  {
    const auto& p = c.model;
    const double m = spec.m();
    const double corr = p.d * std::numbers::pi * std::numbers::pi / (p.R * p.R);
    const auto lo = minimize_positive(
        [&](double a) { return std::max(p.D * a * a - p.mu, p.d * a * a + m - corr) / a; }, 1e-6);
    const double margin = std::min(right.c_star, left.c_star) - lo.f_min;
    lines.push_back({"speed: c*_R above bound", margin > -1e-6, margin, ""});
  }
  const auto hp = speed_halfplane(c.model, spec, pol, c.spectral.tol_alpha, c.spectral.tol_limit, c.spectral.eigen);
  double inc_margin = std::numeric_limits<double>::infinity(), below_margin = inc_margin;
  for (std::size_t k = 0; k < hp.strip_speeds.size(); ++k) {
    if (k > 0) inc_margin = std::min(inc_margin, hp.strip_speeds[k] - hp.strip_speeds[k - 1]);
    below_margin = std::min(below_margin, hp.c_star - hp.strip_speeds[k]);
  }
  lines.push_back({"speed: c*_R increasing in R", hp.strip_speeds_increasing, inc_margin, ""});
  lines.push_back({"speed: c*_R < c*", hp.strip_speeds_below, below_margin, ""});

  // Reference spreading run on a coarse tiled window.
  ModelParams p = c.model;
  const auto ref_pg = build_grid_dy(p, 8, 0.25);
  const auto ref_c = speed_strip(p, spec, ref_pg, Direction::Right, c.spectral.tol_alpha, c.spectral.eigen).c_star;
  const auto win = tile_window(ref_pg, c.verify.copies);
  SimConfig sc;
  sc.dt = std::min(0.05, 0.5 / spec.M());
  sc.T = c.verify.T;
  sc.record_every = 20;
  const double center = static_cast<double>(c.verify.copies / 2) * p.L;
  const auto tr = simulate(bump_init(p, win, center, 2.0, p.road_capacity(), 1.0), p, spec, win, sc);
  const auto st = compute_steady(p, spec, ref_pg, 1e-8);
  DichotomyOptions dopt;
  dopt.origin = center;
  const auto dich = dichotomy_check(tr, win, tile_steady(st, win), ref_c, dopt);
  lines.push_back({"dichotomy: outer", dich.outer_pass, dopt.threshold_out - dich.outer_sup, ""});
  lines.push_back({"dichotomy: inner", dich.inner_pass || !dich.inner_applicable, dopt.threshold_in - dich.inner_sup, ""});
  return lines;
}

inline int run_verify(const RunConfig& c, std::ostream& log) {
  const auto dir = prepare_output(c);
  const auto lines = verify_all(c);
  CsvWriter w(dir / "verify.csv", {"property", "pass", "margin", "note"});
  bool ok = true;
  for (const auto& l : lines) {
    w.row({l.property, l.pass ? "true" : "false", fmt17(l.margin), l.note});
    log << std::left << std::setw(32) << l.property << (l.pass ? "PASS  " : "FAIL  ") << std::setw(24)
        << fmt17(l.margin) << l.note << "\n";
    ok = ok && l.pass;
  }
  if (!ok) {
    for (const auto& l : lines)
      if (!l.pass) log << "verify: property failed: " << l.property << "\n";
    return kExitProperty;
  }
  return kExitOk;
}

/// Dispatches on c.command and maps exceptions to exit codes.
inline int run(const RunConfig& c, std::ostream& log, std::ostream& err) {
  try {
    switch (c.command) {
      case Command::Simulate: return run_simulate(c, log);
      case Command::Steady: return run_steady(c, log);
      case Command::Eigen: return run_eigen(c, log);
      case Command::Speed: return run_speed(c, log);
      case Command::Sweep: return run_sweep_command(c, log);
      case Command::Verify: return run_verify(c, log);
      case Command::Front: return run_front(c, log);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace fieldroad
