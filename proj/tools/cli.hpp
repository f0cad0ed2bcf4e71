#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
//   qsw recur   --model M --theta LIST --p LIST --z LIST --nmax N --grid N
//   qsw evolve  --model M --theta LIST --p LIST --tmax T --coin R|L|mixed
//   qsw slope   --model M --theta LIST --t LIST
//   qsw fit     --in FILE [--form auto|a-b|1-b]
//   qsw minima  --model M --theta LIST --z Z
//   qsw oracle  --which unitary|pihalf|catalan ...
//
// All options live on the top-level app, so a --config file uses plain
// key=value lines (theta=0.25pi) and flags given on the command line win.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "CLI11.hpp"

#include "qsw/core_model.hpp"
#include "qsw/direct_sim.hpp"
#include "qsw/errors.hpp"
#include "qsw/fit.hpp"
#include "qsw/genfun.hpp"
#include "qsw/io.hpp"
#include "qsw/oracles.hpp"
#include "qsw/parallel.hpp"
#include "qsw/perturbation.hpp"

namespace qsw::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_partial = 2;
inline constexpr int max_tmax = 300;

struct Options {
  std::string model = "balanced";
  std::string theta = "0.25pi";
  std::string p = "0";
  std::string z;
  int n_max = 20;
  int grid_n = 1024;
  int t_max = 100;
  std::string coin = "R";
  std::string t;
  std::string out;
  std::string in;
  std::string form = "auto";
  std::string which;
  int iterations = 15;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

// Thrown for bad flag values discovered after parsing; maps to exit 1.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<double> sorted_values(const std::string& spec) {
  auto v = io::parse_values(spec);
  std::sort(v.begin(), v.end());
  return v;
}

inline std::vector<double> theta_values(const Options& o) {
  auto v = sorted_values(o.theta);
  for (double th : v) (void)CoinAngle(th);
  return v;
}

inline std::vector<double> p_values(const Options& o) {
  auto v = sorted_values(o.p);
  for (double p : v)
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p = " + io::format_number(p) + " outside [0, 1]");
  return v;
}

inline std::vector<double> z_values(const Options& o, std::vector<double> fallback) {
  auto v = o.z.empty() ? fallback : sorted_values(o.z);
  for (double z : v)
    if (!(z > 0.0 && z < 1.0)) throw ParameterError("z = " + io::format_number(z) + " outside (0, 1)");
  return v;
}

inline void check_grid(const Options& o) {
  if (o.n_max < 2 || o.n_max % 2) throw ParameterError("--nmax must be even and >= 2");
  if (o.grid_n < 4 || o.grid_n % 4) throw ParameterError("--grid must be a positive multiple of 4");
}

// Runs the outer loop on `jobs` workers and keeps inner kernels serial, so
// the thread count stays bounded. Results are index-addressed either way.
template <class Body>
void run_points(std::size_t n, unsigned jobs, Body&& body) {
  const unsigned saved = worker_count();
  if (n >= jobs) set_worker_count(1);
  try {
    parallel_for(n, body, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  } catch (...) {
    set_worker_count(saved);
    throw;
  }
  set_worker_count(saved);
}

inline Mat2 coin_density(const std::string& name) {
  Mat2 m = Mat2::Zero();
  if (name == "R") {
    m(0, 0) = 1.0;
  } else if (name == "L") {
    m(1, 1) = 1.0;
  } else if (name == "mixed") {
    m(0, 0) = m(1, 1) = 0.5;
  } else {
    throw ParameterError("--coin must be R, L or mixed");
  }
  return m;
}

} // namespace detail

inline int cmd_recur(const Options& o, std::ostream& out) {
  const Model model = io::parse_model(o.model);
  detail::check_grid(o);
  const auto thetas = detail::theta_values(o);
  const auto ps = detail::p_values(o);
  const auto zs = detail::z_values(o, default_z_samples());

  std::vector<io::SweepRecord> rows;
  for (double th : thetas)
    for (double p : ps)
      for (double z : zs) {
        io::SweepRecord r;
        r.model = model_name(model);
        r.theta = th;
        r.p = p;
        r.z = z;
        r.n_max = o.n_max;
        r.grid_n = o.grid_n;
        r.kind = io::Kind::RTilde;
        rows.push_back(r);
      }

  RecurrenceOptions ropts;
  ropts.grid_n = o.grid_n;
  detail::run_points(rows.size(), o.jobs, [&](std::size_t i) {
    auto& r = rows[i];
    try {
      const auto fam = kraus_family(WalkParams(r.theta, r.p, model));
      r.value = recurrence_estimate_detailed(fam, *r.z, o.n_max, ropts).value;
    } catch (const Error& e) {
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.error = e.what();
    }
  });
  io::write_csv(out, rows);
  const bool partial = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.error.empty(); });
  return partial ? exit_partial : exit_ok;
}

inline int cmd_evolve(const Options& o, std::ostream& out) {
  const Model model = io::parse_model(o.model);
  if (o.t_max < 1 || o.t_max > max_tmax)
    throw UsageError("--tmax must lie in [1, " + std::to_string(max_tmax) + "] (resource cap)");
  const Mat2 rho = detail::coin_density(o.coin);
  const auto thetas = detail::theta_values(o);
  const auto ps = detail::p_values(o);

  std::vector<std::pair<double, double>> grid;
  for (double th : thetas)
    for (double p : ps) grid.emplace_back(th, p);
  std::vector<std::vector<io::SweepRecord>> blocks(grid.size());

  detail::run_points(grid.size(), o.jobs, [&](std::size_t i) {
    const auto [th, p] = grid[i];
    io::SweepRecord base;
    base.model = model_name(model);
    base.theta = th;
    base.p = p;
    auto& rows = blocks[i];
    try {
      const auto s = return_series(WalkParams(th, p, model), o.t_max, rho);
      for (int t = 0; t <= o.t_max; ++t) {
        auto r = base;
        r.t = t;
        r.kind = io::Kind::St;
        r.value = s.survival[t];
        rows.push_back(r);
        r.kind = io::Kind::Rt;
        r.value = s.return_prob[t];
        rows.push_back(r);
        if (t >= 1) {
          r.kind = io::Kind::QHat;
          r.value = s.first_return[t];
          rows.push_back(r);
        }
      }
    } catch (const Error& e) {
      rows.clear();
      auto r = base;
      r.kind = io::Kind::Rt;
      r.t = o.t_max;
      r.value = std::numeric_limits<double>::quiet_NaN();
      r.error = e.what();
      rows.push_back(r);
    }
  });

  bool partial = false;
  out << io::sweep_header << '\n';
  for (const auto& b : blocks)
    for (const auto& r : b) {
      partial |= !r.error.empty();
      io::write_record(out, r);
    }
  return partial ? exit_partial : exit_ok;
}

inline int cmd_slope(const Options& o, std::ostream& out, std::ostream& err) {
  const Model model = io::parse_model(o.model);
  const auto thetas = detail::theta_values(o);
  if (o.t.empty()) throw UsageError("slope needs --t");
  auto ts = io::parse_int_values(o.t);
  std::sort(ts.begin(), ts.end());
  if (ts.front() < 1) throw ParameterError("--t values must be >= 1");
  const int t_top = ts.back();
  if (t_top > max_tmax) throw UsageError("--t must not exceed " + std::to_string(max_tmax) + " (resource cap)");

  for (double th : thetas)
    if (slope_limit_unreliable(CoinAngle(th)))
      err << "warning: theta = " << io::format_number(th)
          << " > 0.45 pi; lim B_t may differ from the p-derivative of R here\n";

  std::vector<std::vector<double>> series(thetas.size());
  detail::run_points(thetas.size(), o.jobs,
                     [&](std::size_t i) { series[i] = slope_series(CoinAngle(thetas[i]), model, t_top); });

  out << io::sweep_header << '\n';
  for (std::size_t i = 0; i < thetas.size(); ++i)
    for (int t : ts) {
      io::SweepRecord r;
      r.model = model_name(model);
      r.theta = thetas[i];
      r.p = 0.0;
      r.kind = io::Kind::Bt;
      r.t = t;
      r.value = series[i][t - 1];
      io::write_record(out, r);
    }
  return exit_ok;
}

inline constexpr const char* fit_header =
    "model,theta,p,nmax,grid,form,a,a_err,b,b_err,c,c_err,residual,limit,points,error";

inline int cmd_fit(const Options& o, std::ostream& out) {
  if (o.in.empty()) throw UsageError("fit needs --in FILE");
  std::ifstream f(o.in);
  if (!f) throw UsageError("cannot read '" + o.in + "'");
  std::vector<io::SweepRecord> rows;
  try {
    rows = io::read_csv(f);
  } catch (const ParameterError& e) {
    throw UsageError(std::string("bad input CSV: ") + e.what());
  }

  using Key = std::tuple<std::string, double, double, int, int>;
  std::map<Key, std::vector<FitPoint>> groups;
  for (const auto& r : rows) {
    if (r.kind != io::Kind::RTilde || !r.z || !std::isfinite(r.value)) continue;
    groups[{r.model, r.theta, r.p, r.n_max.value_or(0), r.grid_n.value_or(0)}].push_back({*r.z, r.value});
  }

  bool partial = false;
  out << fit_header << '\n';
  for (auto& [key, pts] : groups) {
    const auto& [model_s, th, p, nmax, grid] = key;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.z < b.z; });
    FitForm form = FitForm::AMinusB;
    if (o.form == "1-b" || (o.form == "auto" && model_s == "correlated"))
      form = FitForm::OneMinusB;
    else if (o.form != "auto" && o.form != "a-b")
      throw UsageError("--form must be auto, a-b or 1-b");

    const auto nan = std::numeric_limits<double>::quiet_NaN();
    PowerLawFit fit;
    std::string error;
    try {
      if (form == FitForm::OneMinusB) check_one_minus_b_applicable(WalkParams(th, p, io::parse_model(model_s)));
      fit = fit_power_law(pts, form);
    } catch (const Error& e) {
      error = e.what();
      partial = true;
      fit.a_fit = fit.b_fit = fit.c_fit = fit.a_err = fit.b_err = fit.c_err = fit.residual_norm = nan;
    }
    using io::format_number;
    out << model_s << ',' << format_number(th) << ',' << format_number(p) << ',' << nmax << ',' << grid << ','
        << fit_form_name(form) << ',' << format_number(fit.a_fit) << ',' << format_number(fit.a_err) << ','
        << format_number(fit.b_fit) << ',' << format_number(fit.b_err) << ',' << format_number(fit.c_fit) << ','
        << format_number(fit.c_err) << ',' << format_number(fit.residual_norm) << ','
        << format_number(error.empty() ? fit.limit() : nan) << ',' << pts.size() << ','
        << io::csv_escape(error) << '\n';
  }
  return partial ? exit_partial : exit_ok;
}

inline constexpr const char* minima_header =
    "model,theta,z,nmax,grid,p_min,r_min,lo_1e2,hi_1e2,lo_1e3,hi_1e3,monotone,error";

inline int cmd_minima(const Options& o, std::ostream& out) {
  const Model model = io::parse_model(o.model);
  detail::check_grid(o);
  const auto thetas = detail::theta_values(o);
  const auto zs = detail::z_values(o, {0.99999});
  if (zs.size() != 1) throw UsageError("minima takes a single --z");
  const double z = zs.front();

  std::vector<MinimumEstimate> est(thetas.size());
  std::vector<std::string> errors(thetas.size());
  // the search itself evaluates candidate pairs concurrently; thetas run serially
  const unsigned saved = worker_count();
  set_worker_count(o.jobs);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    try {
      est[i] = find_minimum(CoinAngle(thetas[i]), z, o.n_max, o.iterations, model, o.grid_n);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  }
  set_worker_count(saved);

  bool partial = false;
  out << minima_header << '\n';
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    using io::format_number;
    out << model_name(model) << ',' << format_number(thetas[i]) << ',' << format_number(z) << ','
        << o.n_max << ',' << o.grid_n << ',';
    if (!errors[i].empty()) {
      partial = true;
      out << "nan,nan,,,,,," << io::csv_escape(errors[i]) << '\n';
      continue;
    }
    const auto& e = est[i];
    out << format_number(e.p_min) << ',' << format_number(e.r_min) << ',';
    if (e.monotone)
      out << ",,,,1,\n";
    else
      out << format_number(e.interval_1e2.first) << ',' << format_number(e.interval_1e2.second) << ','
          << format_number(e.interval_1e3.first) << ',' << format_number(e.interval_1e3.second) << ",0,\n";
  }
  return partial ? exit_partial : exit_ok;
}

inline constexpr const char* oracle_header = "which,theta,p,z,m,key,value";

inline int cmd_oracle(const Options& o, std::ostream& out) {
  using io::format_number;
  out << oracle_header << '\n';
  if (o.which == "unitary") {
    for (double th : detail::theta_values(o))
      out << "unitary," << format_number(th) << ",0,1,,recurrence," << format_number(recurrence_unitary(CoinAngle(th)))
          << '\n';
  } else if (o.which == "pihalf") {
    const double th = pi / 2;
    const auto ps = detail::p_values(o);
    // z = 1 selects the closed-form limit
    auto zs = o.z.empty() ? std::vector<double>{1.0} : detail::sorted_values(o.z);
    for (double z : zs)
      if (!(z > 0.0 && z <= 1.0)) throw ParameterError("pihalf needs 0 < z <= 1");
    const char* names[2][2] = {{"q_rr", "q_rl"}, {"q_lr", "q_ll"}};
    for (double p : ps)
      for (double z : zs) {
        const Eigen::Matrix2d q = z == 1.0 ? pi_half_first_return_limit(p) : pi_half_genfun(z, p).first_returns;
        const std::string prefix =
            "pihalf," + format_number(th) + ',' + format_number(p) + ',' + format_number(z) + ",,";
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) out << prefix << names[a][b] << ',' << format_number(q(a, b)) << '\n';
        const double rec = z == 1.0 ? q(0, 0) + q(1, 0) : pi_half_recurrence(z, p);
        out << prefix << "recurrence," << format_number(rec) << '\n';
      }
  } else if (o.which == "catalan") {
    if (!o.t.empty()) {
      auto ms = io::parse_int_values(o.t);
      std::sort(ms.begin(), ms.end());
      for (int m : ms)
        out << "catalan,,1,," << m << ",first_return," << format_number(classical_first_return(m)) << '\n';
    }
    if (!o.z.empty())
      for (double z : detail::sorted_values(o.z))
        out << "catalan,,1," << format_number(z) << ",,genfun,"
            << format_number(classical_first_return_genfun(z)) << '\n';
    if (o.t.empty() && o.z.empty()) throw UsageError("catalan needs --t and/or --z");
  } else {
    throw UsageError("--which must be unitary, pihalf or catalan");
  }
  return exit_ok;
}

/// Full CLI. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monitored recurrence of discrete-time quantum stochastic walks"};
  app.name("qsw");
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file mirroring the long flags");

  Options o;
  app.add_option("--model", o.model, "balanced or correlated")->capture_default_str();
  app.add_option("--theta", o.theta, "coin angles, list or range; accepts 'pi' (0.2892pi+0.1)")
      ->capture_default_str();
  app.add_option("--p", o.p, "stochasticity values, list or start:stop:step")->capture_default_str();
  app.add_option("--z", o.z, "generating-function arguments (recur default: ten samples up to 0.99999)");
  app.add_option("--nmax", o.n_max, "cross half-size")->capture_default_str();
  app.add_option("--grid", o.grid_n, "quadrature intervals per axis")->capture_default_str();
  app.add_option("--tmax", o.t_max, "steps for evolve (<= 300)")->capture_default_str();
  app.add_option("--coin", o.coin, "initial coin: R, L or mixed")->capture_default_str();
  app.add_option("--t", o.t, "step list for slope, or m list for oracle catalan");
  app.add_option("--in", o.in, "input CSV for fit");
  app.add_option("--form", o.form, "fit form: auto, a-b or 1-b")->capture_default_str();
  app.add_option("--which", o.which, "oracle: unitary, pihalf or catalan");
  app.add_option("--iterations", o.iterations, "bisection iterations for minima")->capture_default_str();
  app.add_option("--out", o.out, "output file (default stdout)");
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

  const char* names[][2] = {{"recur", "R~_z sweep over (theta, p, z)"},
                            {"evolve", "finite-time S_t, R_t and first returns by direct simulation"},
                            {"slope", "B_t, the p-derivative of R_t at p = 0"},
                            {"fit", "power-law fits of recur output"},
                            {"minima", "minimum of p -> R~_z(p)"},
                            {"oracle", "closed-form reference values"}};
  for (const auto& n : names) app.add_subcommand(n[0], n[1])->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return exit_usage;
  }

  std::ostringstream buf;
  std::ostringstream warnings;
  int code = exit_ok;
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "recur") code = cmd_recur(o, buf);
    else if (cmd == "evolve") code = cmd_evolve(o, buf);
    else if (cmd == "slope") code = cmd_slope(o, buf, warnings);
    else if (cmd == "fit") code = cmd_fit(o, buf);
    else if (cmd == "minima") code = cmd_minima(o, buf);
    else code = cmd_oracle(o, buf);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_partial;
  }
  err << warnings.str();

  if (o.out.empty()) {
    out << buf.str();
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) {
      err << "error: cannot write '" << o.out << "'\n";
      return exit_usage;
    }
    f << buf.str();
  }
  if (code == exit_partial) err << "warning: some points failed; see the error column\n";
  return code;
}

} // namespace qsw::cli
