// twinwave: simulate, analyse and sweep twin-beam intensity coherence.
// Exit codes: 0 ok, 2 configuration/usage, 3 numeric failure, 4 I/O.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "twinwave/config.hpp"
#include "twinwave/dynamics.hpp"
#include "twinwave/ensemble.hpp"
#include "twinwave/io.hpp"
#include "twinwave/oracle.hpp"
#include "twinwave/stats.hpp"
#include "twinwave/sweep.hpp"
#include "twinwave/synth.hpp"

using namespace twinwave;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_io = 4;
constexpr const char* workers_env = "TWINWAVE_WORKERS";

struct RunFlags {
  std::string config;
  std::string out;
  std::size_t shots = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
};

// Worker count precedence: --workers, then $TWINWAVE_WORKERS, then [run].workers.
RunConfig load_run_config(const RunFlags& f, const CLI::App& sub) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : parse_config(f.config);
  if (sub.count("--shots")) cfg.shots = f.shots;
  if (sub.count("--seed")) cfg.seed = f.seed;
  if (const char* env = std::getenv(workers_env); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw config_error(std::string(workers_env) + " must be a non-negative integer");
    cfg.workers = static_cast<std::size_t>(v);
  }
  if (sub.count("--workers")) cfg.workers = f.workers;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

void add_run_flags(CLI::App* sub, RunFlags& f, bool require_out) {
  sub->add_option("--config", f.config, "TOML configuration file");
  auto* o = sub->add_option("--out", f.out, "output directory");
  if (require_out) o->required();
  sub->add_option("--shots", f.shots, "shots per run (overrides [run].shots)")->check(CLI::PositiveNumber);
  sub->add_option("--seed", f.seed, "master seed (overrides [run].seed)");
  sub->add_option("--workers", f.workers, "worker threads, 0 = all cores (overrides $TWINWAVE_WORKERS)");
}

std::vector<double> parse_range(const std::string& s) {
  // start:stop:step, inclusive of stop (within half a step)
  std::vector<double> v;
  double a, b, h;
  char c1, c2;
  std::istringstream in(s);
  if (!(in >> a >> c1 >> b >> c2 >> h) || c1 != ':' || c2 != ':' || !(h > 0) || !(b >= a) || !(a > 0))
    throw config_error("--powers expects start:stop:step with 0 < start <= stop and step > 0, got '" + s + "'");
  for (std::size_t i = 0;; ++i) {
    const double p = a + h * static_cast<double>(i);
    if (p > b + 0.5 * h) break;
    v.push_back(p);
  }
  return v;
}

Window parse_window(const std::string& s, const FrameStack& st) {
  if (s.empty()) return Window::whole(st);
  Window w;
  char c1, c2, c3;
  std::istringstream in(s);
  if (!(in >> w.row_begin >> c1 >> w.row_end >> c2 >> w.col_begin >> c3 >> w.col_end) || c1 != ':' || c2 != ':' ||
      c3 != ':')
    throw config_error("--window expects row_begin:row_end:col_begin:col_end, got '" + s + "'");
  if (w.row_end <= w.row_begin || w.col_end <= w.col_begin || w.row_end > st.rows() || w.col_end > st.cols())
    throw config_error("--window lies outside the " + std::to_string(st.rows()) + "x" + std::to_string(st.cols()) +
                       " strip");
  return w;
}

int cmd_simulate(const RunFlags& f, const CLI::App& sub) {
  const auto cfg = load_run_config(f, sub);
  const fs::path out = f.out;
  detail::ensure_dir(out);
  RunManifest manifest{"simulate", to_json(cfg), cfg.seed};
  const auto stack = run_ensemble(cfg);
  write_frames(out, stack);
  detail::write_text(out / "config.effective.toml", config_to_toml(cfg));
  manifest.write(out);
  std::printf("%zu shots, %zux%zu pixels per strip -> %s\n", stack.shots, stack.rows(), stack.cols(),
              out.string().c_str());
  return 0;
}

struct AnalyzeFlags {
  std::string frames, out, window, strip = "signal", axis = "freq";
  std::size_t group = 1;
};

int cmd_analyze(const AnalyzeFlags& a) {
  const auto stack = read_frames(a.frames);
  const fs::path out = a.out.empty() ? fs::path(a.frames) / "analysis" : fs::path(a.out);
  detail::ensure_dir(out);
  RunManifest manifest{"analyze", stack.metadata.value("config", nlohmann::json{}),
                       stack.metadata.value("seed", std::uint64_t{0})};
  const Strip strip = a.strip == "idler" ? Strip::idler : Strip::signal;
  GroupingSpec grouping{a.group, parse_group_axis(a.axis)};
  const auto window = parse_window(a.window, stack);
  G2Map map;
  try {
    map = g2bar_map(stack, strip, grouping, window);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  write_g2_map_csv(out / "g2_map.csv", map, stack.geometry);
  emit_heatmap(out / "g2_map.pgm", map, {{"group", a.group}, {"axis", a.axis}, {"strip", a.strip}});
  emit_heatmap(out / "mode_number.pgm", map.mode_number, map.cell_cols, map.cell_rows);

  // Correlation profiles through the window centre, over the window.
  const std::size_t cr = (window.row_begin + window.row_end) / 2, cc = (window.col_begin + window.col_end) / 2;
  nlohmann::json summary = {{"strip", a.strip},
                            {"group", a.group},
                            {"axis", a.axis},
                            {"window", {window.row_begin, window.row_end, window.col_begin, window.col_end}},
                            {"stderr_method", g2_stderr_method},
                            {"dark_level_subtracted", stack.dark_level()}};
  auto profile = [&](CorrelationAxis ax, std::size_t anchor, std::size_t b, std::size_t e, const char* file) {
    if (e < b + 2) return;
    const auto p = autocorrelation_profile(stack, strip, ax, anchor, b, e, (e - b) / 2);
    write_profile_csv(out / file, p);
    try {
      summary[std::string("ac_fwhm_") + to_string(ax)] = fwhm(p);
    } catch (const analysis_error& err) {
      summary[std::string("ac_fwhm_") + to_string(ax)] = nullptr;
      summary[std::string("ac_fwhm_") + to_string(ax) + "_error"] = err.what();
    }
  };
  profile(CorrelationAxis::frequency, cr, window.col_begin, window.col_end, "ac_omega.csv");
  profile(CorrelationAxis::radial, cc, window.row_begin, window.row_end, "ac_k.csv");
  if (strip == Strip::signal) {
    const auto xc = cross_correlation_peak(stack, cr, cc);
    summary["xc"] = {{"anchor", {cr, cc}},
                     {"idler_peak", {xc.idler_row, xc.idler_col}},
                     {"mirrored", {stack.rows() - 1 - cr, stack.cols() - 1 - cc}},
                     {"peak", xc.peak},
                     {"background", xc.background},
                     {"contrast", xc.contrast}};
  }
  detail::write_text(out / "summary.json", summary.dump(2) + "\n");
  manifest.write(out);
  std::printf("g2 map %zux%zu cells -> %s\n", map.cell_rows, map.cell_cols, out.string().c_str());
  return 0;
}

struct SweepFlags {
  std::string powers;
  std::size_t points = 10, calibration_shots = 500;
  bool keep_frames = false;
};

int cmd_sweep(const RunFlags& f, const SweepFlags& s, const CLI::App& sub) {
  const auto cfg = load_run_config(f, sub);
  SweepOptions opt;
  opt.points = s.points;
  opt.calibration_shots = s.calibration_shots;
  opt.keep_frames = s.keep_frames;
  if (!s.powers.empty()) opt.powers_mW = parse_range(s.powers);
  const auto r = run_sweep(cfg, opt, f.out, [](const SweepPoint& p, const FrameStack&) {
    std::printf("P = %8.3f mW  G_lead = %6.3f  g2_center = %.4f +- %.4f  maxima:", p.power_mW, p.leading_gain,
                p.center.value, p.center.std_error);
    for (double m : p.maxima) std::printf(" %.3f", m);
    std::printf("  (%.1f s)\n", p.seconds);
    std::fflush(stdout);
  });
  if (opt.powers_mW.empty())
    std::printf("calibrated threshold: %.3f mW%s\n", r.calibration.threshold_mW,
                r.calibration.at_edge ? " (at scan edge)" : "");
  return 0;
}

struct OracleFlags {
  double min = 0.01, max = 100;
  std::size_t points = 200;
  std::string out = "table.csv";
};

int cmd_oracle(const OracleFlags& o) {
  if (!(o.min > 0) || !(o.max > o.min) || o.points < 2)
    throw config_error("oracle needs 0 < min < max and at least 2 points");
  const auto rows = oracle::sensitivity_table(oracle::log_grid(o.min, o.max, o.points));
  CsvWriter csv({"delta_a", "g2bar_1d", "dg2_d_delta_a", "dg2_d_ln_delta_a", "g2bar_1d_quadrature"});
  for (const auto& r : rows) csv.row({r.da, r.g2, r.slope, r.log_slope, oracle::g2_1d_quadrature(r.da, 1.0)});
  csv.save(o.out);
  const auto peak = oracle::max_sensitivity_point(rows);
  std::printf("%zu points -> %s; steepest per-decade response at delta_a = %.4g\n", rows.size(), o.out.c_str(),
              peak);
  return 0;
}

struct SynthFlags {
  std::string kind = "thermal", out, config;
  int modes = 1;
  double sigma_nm = 0.5, sigma_mrad = 1.0;
  std::size_t shots = 1000;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthFlags& s) {
  SyntheticSpec spec;
  spec.kind = parse_synth_kind(s.kind);
  spec.modes = s.modes;
  spec.sigma_nm = s.sigma_nm;
  spec.sigma_mrad = s.sigma_mrad;
  spec.shots = s.shots;
  if (!s.config.empty()) spec.geometry = parse_config(s.config).model.detector;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  const fs::path out = s.out;
  detail::ensure_dir(out);
  RunManifest manifest{"synth-thermal", {{"kind", s.kind}, {"modes", s.modes}, {"sigma_nm", s.sigma_nm},
                                         {"sigma_mrad", s.sigma_mrad}, {"shots", s.shots}},
                       s.seed};
  write_frames(out, synth_thermal(spec, s.seed));
  manifest.write(out);
  std::printf("synthetic %s stack, %zu shots -> %s\n", s.kind.c_str(), s.shots, out.string().c_str());
  return 0;
}

struct TripletFlags {
  double np = 1e6, ns = 1, ni = 1, K = 1e-3, z_end = 10, dz = 0;
  std::string out = "triplet.csv";
  bool frozen = false;
};

int cmd_triplet(const TripletFlags& t) {
  if (!(t.np >= 0) || !(t.ns >= 0) || !(t.ni >= 0)) throw config_error("photon numbers must be non-negative");
  if (!(t.K >= 0) || !(t.z_end > 0)) throw config_error("need K >= 0 and z_end > 0");
  const TripletState s0{{std::sqrt(t.np), 0}, {std::sqrt(t.ns), 0}, {std::sqrt(t.ni), 0}};
  double dz = t.dz;
  if (dz <= 0) dz = t.z_end / static_cast<double>(required_steps(s0, t.K, t.z_end, 400));
  const auto traj = integrate(s0, t.K, t.z_end, dz, !t.frozen);
  CsvWriter csv({"z", "re_ap", "im_ap", "re_as", "im_as", "re_ai", "im_ai", "N_p", "N_s", "N_i"});
  for (const auto& [z, s] : traj)
    csv.row({z, s.pump.real(), s.pump.imag(), s.signal.real(), s.signal.imag(), s.idler.real(), s.idler.imag(),
             s.pump_photons(), s.signal_photons(), s.idler_photons()});
  csv.save(t.out);
  std::printf("%zu samples -> %s\n", traj.size(), t.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twinwave: Monte Carlo twin-beam coherence simulator and g2 analysis"};
  app.set_version_flag("--version", TWINWAVE_VERSION);
  app.require_subcommand(1);

  RunFlags sim_f;
  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo and write a frame stack");
  add_run_flags(sim, sim_f, true);

  AnalyzeFlags an_f;
  auto* an = app.add_subcommand("analyze", "g2bar map, correlation profiles and widths of a frame stack");
  an->add_option("--frames", an_f.frames, "frame-stack directory")->required();
  an->add_option("--out", an_f.out, "output directory (default <frames>/analysis)");
  an->add_option("--group", an_f.group, "pixels summed per detection cell")->check(CLI::IsMember({1, 4, 8}));
  an->add_option("--axis", an_f.axis, "grouping axis")->check(CLI::IsMember({"freq", "radial"}));
  an->add_option("--window", an_f.window, "row_begin:row_end:col_begin:col_end (default whole strip)");
  an->add_option("--strip", an_f.strip, "strip to analyse")->check(CLI::IsMember({"signal", "idler"}));

  RunFlags sw_f;
  SweepFlags sw_s;
  auto* sw = app.add_subcommand("sweep", "power sweep with threshold calibration");
  add_run_flags(sw, sw_f, true);
  sw->add_option("--powers", sw_s.powers, "start:stop:step in mW (default: 0.2-2x calibrated threshold)");
  sw->add_option("--points", sw_s.points, "points of the default sweep")->check(CLI::PositiveNumber);
  sw->add_option("--calibration-shots", sw_s.calibration_shots, "shots per calibration run")->check(CLI::Range(2, 1 << 30));
  sw->add_flag("--keep-frames", sw_s.keep_frames, "also write every power's frame stack");

  OracleFlags or_f;
  auto* orc = app.add_subcommand("oracle", "1D Gaussian detection-volume g2 table");
  orc->add_option("--min", or_f.min, "smallest delta_a");
  orc->add_option("--max", or_f.max, "largest delta_a");
  orc->add_option("--points", or_f.points, "log-spaced grid points");
  orc->add_option("--out", or_f.out, "CSV path");

  SynthFlags sy_f;
  auto* sy = app.add_subcommand("synth-thermal", "synthetic frame stack with known statistics");
  sy->add_option("--kind", sy_f.kind, "thermal | gaussian | white")->check(CLI::IsMember({"thermal", "gaussian", "white"}));
  sy->add_option("--modes", sy_f.modes, "thermal modes per pixel");
  sy->add_option("--sigma-nm", sy_f.sigma_nm, "gaussian: intensity-correlation sigma along wavelength");
  sy->add_option("--sigma-mrad", sy_f.sigma_mrad, "gaussian: intensity-correlation sigma along radial axis");
  sy->add_option("--shots", sy_f.shots, "shots");
  sy->add_option("--seed", sy_f.seed, "seed");
  sy->add_option("--config", sy_f.config, "take the detector geometry from this config");
  sy->add_option("--out", sy_f.out, "output directory")->required();

  TripletFlags tr_f;
  auto* tr = app.add_subcommand("triplet", "integrate one triplet and dump its trajectory");
  tr->add_option("--np", tr_f.np, "initial pump photons");
  tr->add_option("--ns", tr_f.ns, "initial signal photons");
  tr->add_option("--ni", tr_f.ni, "initial idler photons");
  tr->add_option("--K", tr_f.K, "coupling constant");
  tr->add_option("--z-end", tr_f.z_end, "propagation length");
  tr->add_option("--dz", tr_f.dz, "step (default: smallest count satisfying the step bound, >= 400)");
  tr->add_flag("--frozen-pump", tr_f.frozen, "hold the pump amplitude fixed");
  tr->add_option("--out", tr_f.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    if (*sim) return cmd_simulate(sim_f, *sim);
    if (*an) return cmd_analyze(an_f);
    if (*sw) return cmd_sweep(sw_f, sw_s, *sw);
    if (*orc) return cmd_oracle(or_f);
    if (*sy) return cmd_synth(sy_f);
    if (*tr) return cmd_triplet(tr_f);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const analysis_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return exit_numeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_numeric;
  }
  return 0;
}
