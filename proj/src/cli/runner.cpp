#include "cli/runner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "cli/output.hpp"
#include "cli/plot_svg.hpp"
#include "lspdyn/error.hpp"

namespace lspdyn::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs fn(i) for every i on a small pool; results are indexed, so the
// caller writes them in sweep order regardless of completion order.
template <class Fn>
void for_each_point(std::size_t n, int workers, Fn&& fn) {
  const std::size_t w = std::clamp<std::size_t>(std::size_t(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  std::exception_ptr failure;
  std::mutex m;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(m);
        if (failure || next >= n) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (w == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

struct Point {
  double value = 0.0;  // sweep value, unused without a sweep
  SystemGeometry geom;
  std::string tag;     // file-name suffix
  json describe;       // distance/count of this point
};

std::vector<Point> points_of(const RunConfig& cfg) {
  std::vector<Point> out;
  auto make = [&](double v) {
    Point p;
    p.value = v;
    p.geom = cfg.geometry_at(v);
    if (!cfg.sweep)
      p.tag = "";
    else if (cfg.sweep->parameter == SweepParameter::distance_nm)
      p.tag = fmt::format("_r{:.2f}", v);
    else
      p.tag = fmt::format("_N{}", int(v));
    p.describe = {{"distance_nm", p.geom.distance_nm}, {"count", p.geom.n_emitters}};
    return p;
  };
  if (!cfg.sweep)
    out.push_back(make(0.0));
  else
    for (const double v : cfg.sweep->values) out.push_back(make(v));
  return out;
}

std::string sweep_axis(const RunConfig& cfg) {
  return cfg.sweep && cfg.sweep->parameter == SweepParameter::count ? "N" : "r [nm]";
}

double axis_value(const RunConfig& cfg, const Point& p) {
  return cfg.sweep && cfg.sweep->parameter == SweepParameter::count ? double(p.geom.n_emitters) : p.geom.distance_nm;
}

std::string point_label(const RunConfig& cfg, const Point& p) {
  if (cfg.sweep && cfg.sweep->parameter == SweepParameter::count) return fmt::format("N = {}", p.geom.n_emitters);
  return fmt::format("r = {:g} nm", p.geom.distance_nm);
}

class Job {
 public:
  Job(const RunConfig& cfg, const RunOptions& options, fs::path dir, RunReport& report, std::ostream& log)
      : cfg_(cfg), options_(options), dir_(std::move(dir)), report_(report), log_(log), config_(to_json(cfg)) {
    plots_ = options.emit_plots || cfg.emit_plots;
    points_ = points_of(cfg);
  }

  void run() {
    for (const auto& n : cfg_.notes) log_ << "note: " << n << '\n';
    if (cfg_.sweep && cfg_.sweep->values.empty()) {
      warn(fmt::format("{}: sweep is empty; nothing computed and no images written", cfg_.name));
      return;
    }
    switch (cfg_.kind) {
      case ScenarioKind::dynamics: dynamics(true); break;
      case ScenarioKind::steady_sweep: dynamics(false); break;
      case ScenarioKind::spectrum_scan: spectrum_scan(); break;
      case ScenarioKind::spectral_density: spectral_density(); break;
    }
  }

 private:
  const RunConfig& cfg_;
  const RunOptions& options_;
  fs::path dir_;
  RunReport& report_;
  std::ostream& log_;
  json config_;
  bool plots_ = false;
  std::vector<Point> points_;

  void warn(const std::string& w) {
    log_ << "warning: " << w << '\n';
    report_.warnings.push_back(w);
  }

  void emit(const std::string& file, const std::string& content) {
    const fs::path path = dir_ / file;
    write_atomic(path, content);
    report_.files.push_back(path);
    log_ << "wrote " << path.string() << '\n';
  }

  void emit_json(const std::string& file, json body) { emit(file, dump(with_provenance(config_, std::move(body)))); }

  void emit_plot(const std::string& file, const PlotSpec& spec) {
    if (!plots_) return;
    try {
      emit(file, render_svg(spec));
    } catch (const std::exception& e) {
      warn(fmt::format("plot {} not written: {}", file, e.what()));
    }
  }

  TableOptions table_options(std::size_t n_points) const {
    TableOptions t;
    t.n_max = cfg_.numerics.n_max;
    t.workers = n_points == 1 ? std::max(1, options_.workers) : 1;
    return t;
  }

  int pool_size() const { return points_.size() == 1 ? 1 : std::max(1, options_.workers); }

  static json bound_json(const std::vector<std::optional<BoundState>>& bound) {
    json out = json::array();
    for (const auto& b : bound)
      if (b) out.push_back({{"channel", b->channel}, {"energy_ev", b->energy}, {"residue", b->residue}});
    return out;
  }

  void dynamics(bool write_trajectories) {
    std::vector<TrajectoryResult> results(points_.size());
    for_each_point(points_.size(), pool_size(), [&](std::size_t i) {
      DynamicsOptions o;
      o.grid = cfg_.numerics.grid;
      o.table = table_options(points_.size());
      o.t_max_fs = cfg_.numerics.t_max_fs;
      o.dt_fs = cfg_.numerics.dt_fs;
      InitialCondition ic;
      ic.kind = cfg_.initial;
      results[i] = run_scenario(cfg_.metal, points_[i].geom, ic, o);
    });

    json steady = json::array();
    json convergence = json::array();
    std::string summary = csv_preamble(config_) +
                          "distance_nm,count,bound_states,observed_class,predicted_class,observed_mean,observed_ptp,"
                          "predicted_mean,predicted_ptp,agrees\n";
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& r = results[i];
      const auto& p = points_[i];
      const json steady_entry = {
          {"point", p.describe},
          {"observed",
           {{"class", steady_class_name(r.observed.steady_class)},
            {"window_start_fs", r.observed.window_start_fs},
            {"mean", r.observed.mean},
            {"ptp", r.observed.ptp},
            {"line_ev", r.observed.line_ev},
            {"line_fraction", r.observed.line_fraction},
            {"beat_match", r.observed.beat_match},
            {"settled", r.observed.settled}}},
          {"predicted",
           {{"class", steady_class_name(r.predicted.steady_class)},
            {"distinct_energies", r.predicted.distinct_energies},
            {"energies_ev", r.predicted.energies},
            {"weights", r.predicted.weights},
            {"mean", r.predicted.mean},
            {"min", r.predicted.min},
            {"max", r.predicted.max},
            {"beat_ev", r.predicted.beat_ev},
            {"window_mean", r.predicted_window_mean},
            {"window_ptp", r.predicted_window_ptp}}},
          {"agrees", r.agrees},
          {"bound_states", bound_json(r.bound)},
      };
      const json conv = {{"point", p.describe},
                         {"non_converged_points", r.non_converged_points},
                         {"max_multipole_tail", r.max_tail},
                         {"step_discrepancy", r.step_discrepancy},
                         {"max_norm", r.max_norm},
                         {"dt_fs", r.time.dt_fs},
                         {"t_max_fs", r.time.t_max()},
                         {"n_steps", r.time.n_steps},
                         {"notes", r.notes}};
      steady.push_back(steady_entry);
      convergence.push_back(conv);
      summary += fmt::format("{},{},{},{},{},{:.10f},{:.10f},{:.10f},{:.10f},{}\n", p.geom.distance_nm,
                             p.geom.n_emitters, std::count_if(r.bound.begin(), r.bound.end(),
                                                               [](const auto& b) { return b.has_value(); }),
                             steady_class_name(r.observed.steady_class), steady_class_name(r.predicted.steady_class),
                             r.observed.mean, r.observed.ptp, r.predicted_window_mean, r.predicted_window_ptp,
                             r.agrees ? "true" : "false");
      for (const auto& n : r.notes) warn(fmt::format("{} ({}): {}", cfg_.name, point_label(cfg_, p), n));
      if (write_trajectories) {
        std::ostringstream csv;
        csv << csv_preamble(config_);
        write_trajectory_csv(r, csv);
        emit(cfg_.name + p.tag + ".csv", csv.str());
        json side = steady_entry;
        side["convergence"] = conv;
        emit_json(cfg_.name + p.tag + ".json", side);
      }
    }
    if (write_trajectories)
      emit_json(cfg_.name + "_steady.json", {{"points", steady}});
    else
      emit(cfg_.name + ".csv", summary);
    emit_json(cfg_.name + "_convergence.json", {{"points", convergence}});

    if (!plots_) return;
    if (write_trajectories) {
      PlotSpec fid{"Initial-state fidelity", "t [fs]", "P(t)", {}, {}, std::pair{0.0, 1.0}};
      PlotSpec conc{"Concurrence", "t [fs]", "C(t)", {}, {}, std::pair{0.0, 1.0}};
      for (std::size_t i = 0; i < points_.size(); ++i) {
        fid.series.push_back({point_label(cfg_, points_[i]), results[i].t_fs, results[i].p});
        if (!results[i].c.empty())
          conc.series.push_back({point_label(cfg_, points_[i]), results[i].t_fs, results[i].c});
      }
      emit_plot(cfg_.name + "_fidelity.svg", fid);
      if (!conc.series.empty()) emit_plot(cfg_.name + "_concurrence.svg", conc);
    }
    if (points_.size() >= 2 || !write_trajectories) {
      Series observed{"late-time mean (dynamics)", {}, {}, false, true};
      Series lo{"predicted min", {}, {}}, hi{"predicted max", {}, {}}, mean{"predicted mean", {}, {}};
      for (std::size_t i = 0; i < points_.size(); ++i) {
        const double x = axis_value(cfg_, points_[i]);
        observed.x.push_back(x);
        observed.y.push_back(results[i].observed.mean);
        for (auto* s : {&lo, &hi, &mean}) s->x.push_back(x);
        lo.y.push_back(results[i].predicted.min);
        hi.y.push_back(results[i].predicted.max);
        mean.y.push_back(results[i].predicted.mean);
      }
      emit_plot(cfg_.name + "_steady.svg",
                {"Long-time fidelity", sweep_axis(cfg_), "P(t -> inf)", {mean, lo, hi, observed}, {}, std::nullopt});
    }
  }

  void spectrum_scan() {
    const bool by_count = cfg_.sweep->parameter == SweepParameter::count;
    std::vector<std::vector<BoundState>> bound(points_.size());
    std::vector<json> conv(points_.size());
    std::vector<int> channels_per_point(points_.size());
    for_each_point(points_.size(), pool_size(), [&](std::size_t i) {
      const auto table = build_spectral_table(cfg_.metal, points_[i].geom, cfg_.numerics.grid,
                                              table_options(points_.size()));
      const auto channels = distinct_channels(points_[i].geom.n_emitters);
      channels_per_point[i] = int(channels.size());
      for (const int l : channels)
        if (auto b = find_bound_state(table, l, points_[i].geom.hbar_omega0)) bound[i].push_back(*b);
      conv[i] = {{"point", points_[i].describe},
                 {"non_converged_points", table.non_converged_points},
                 {"max_multipole_tail", table.max_tail}};
    });

    std::string csv = csv_preamble(config_);
    csv += by_count ? "count,channel,bound_energy_eV,residue\n" : "r_nm,channel,bound_energy_eV,residue\n";
    for (std::size_t i = 0; i < points_.size(); ++i)
      for (const auto& b : bound[i])
        csv += by_count ? fmt::format("{},{},{:.12f},{:.12f}\n", points_[i].geom.n_emitters, b.channel, b.energy,
                                      b.residue)
                        : fmt::format("{:.6f},{},{:.12f},{:.12f}\n", points_[i].geom.distance_nm, b.channel, b.energy,
                                      b.residue);
    emit(cfg_.name + ".csv", csv);

    // Thresholds: where a channel's bound state appears between adjacent distances.
    json thresholds = json::array();
    json regimes = json::array();
    if (!by_count) {
      std::vector<std::size_t> order(points_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return points_[a].geom.distance_nm < points_[b].geom.distance_nm; });
      auto has = [&](std::size_t i, int l) {
        return std::any_of(bound[i].begin(), bound[i].end(), [l](const BoundState& b) { return b.channel == l; });
      };
      ScanOptions so{table_options(1), cfg_.numerics.grid};
      for (const int l : distinct_channels(cfg_.geom.n_emitters))
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
          const std::size_t a = order[k], b = order[k + 1];
          if (has(a, l) && !has(b, l)) {
            const auto r = bound_threshold(cfg_.metal, cfg_.geom, l, points_[a].geom.distance_nm,
                                           points_[b].geom.distance_nm, so, 1e-3);
            thresholds.push_back({{"channel", l}, {"distance_nm", r ? json(*r) : json(nullptr)}});
          }
        }
      for (const std::size_t i : order)
        regimes.push_back({{"distance_nm", points_[i].geom.distance_nm}, {"bound_states", bound[i].size()}});
    }
    emit_json(cfg_.name + ".json", {{"thresholds", thresholds}, {"regimes", regimes}});
    emit_json(cfg_.name + "_convergence.json", {{"points", conv}, {"thresholds", thresholds}});

    if (!plots_) return;
    PlotSpec spec{"Bound-state branches", by_count ? "N" : "r [nm]", "bound energy [eV]", {}, {}, std::nullopt};
    int max_channel = 0;
    for (const auto& bs : bound)
      for (const auto& b : bs) max_channel = std::max(max_channel, b.channel);
    for (int l = 0; l <= max_channel; ++l) {
      Series s{fmt::format("channel {}", l), {}, {}, true, true};
      for (std::size_t i = 0; i < points_.size(); ++i)
        for (const auto& b : bound[i])
          if (b.channel == l) {
            s.x.push_back(axis_value(cfg_, points_[i]));
            s.y.push_back(b.energy);
          }
      if (!s.x.empty()) spec.series.push_back(std::move(s));
    }
    emit_plot(cfg_.name + "_branches.svg", spec);
  }

  void spectral_density() {
    std::vector<SpectralTable> tables(points_.size());
    for_each_point(points_.size(), pool_size(), [&](std::size_t i) {
      tables[i] = build_spectral_table(cfg_.metal, points_[i].geom, cfg_.numerics.grid, table_options(points_.size()));
    });
    json conv = json::array();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      std::ostringstream csv;
      csv << csv_preamble(config_);
      write_spectral_csv(tables[i], csv);
      emit(cfg_.name + points_[i].tag + ".csv", csv.str());
      conv.push_back({{"point", points_[i].describe},
                      {"non_converged_points", tables[i].non_converged_points},
                      {"max_multipole_tail", tables[i].max_tail}});
      if (tables[i].non_converged_points > 0)
        warn(fmt::format("{} ({}): {} grid points with multipole tail above {:.0e}", cfg_.name,
                         point_label(cfg_, points_[i]), tables[i].non_converged_points, kGreenTailTolerance));
    }
    emit_json(cfg_.name + "_convergence.json", {{"points", conv}});

    if (!plots_) return;
    PlotSpec spec{"Collective spectral density D_0", "energy [eV]", "D_0 [eV]", {}, {}, std::nullopt};
    const std::array<int, 2> orders{1, 2};
    const auto lsp = lsp_resonances(cfg_.metal, cfg_.geom.eps_d, orders);
    for (std::size_t k = 0; k < lsp.size(); ++k)
      spec.markers.push_back({lsp[k], fmt::format("n={} {:.2f} eV", orders[k], lsp[k])});
    for (std::size_t i = 0; i < points_.size(); ++i)
      spec.series.push_back({point_label(cfg_, points_[i]), tables[i].omega, tables[i].d_channels[0]});
    emit_plot(cfg_.name + "_D0.svg", spec);
  }
};

}  // namespace

RunReport run_jobs(const std::vector<RunConfig>& jobs, const RunOptions& options, std::ostream& log) {
  RunReport report;
  json manifest_jobs = json::array();
  fs::path manifest_dir;
  for (const auto& cfg : jobs) {
    const fs::path dir = options.out_dir ? *options.out_dir : cfg.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cli_runner", Errc::io, fmt::format("cannot create output directory '{}'", dir.string()));
    if (manifest_dir.empty()) manifest_dir = dir;
    log << fmt::format("[{}] {} ({} point(s))\n", cfg.name, scenario_name(cfg.kind),
                       cfg.sweep ? cfg.sweep->values.size() : 1);
    const auto start = std::chrono::steady_clock::now();
    Job(cfg, options, dir, report, log).run();
    log << fmt::format("[{}] done in {:.1f} s\n", cfg.name,
                       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    manifest_jobs.push_back(to_json(cfg));
  }
  if (!manifest_dir.empty()) {
    json files = json::array();
    for (const auto& f : report.files) files.push_back(f.filename().string());
    const json manifest = {
        {"version", version()},
        {"jobs", manifest_jobs},
        {"files", files},
        {"warnings", report.warnings},
        {"metadata", {{"generated_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)))}}},
    };
    const fs::path path = manifest_dir / "manifest.json";
    write_atomic(path, dump(manifest));
    report.files.push_back(path);
  }
  return report;
}

}  // namespace lspdyn::cli
