#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "digirap/config.hpp"
#include "digirap/digitizer.hpp"
#include "digirap/dynamics.hpp"
#include "digirap/io.hpp"
#include "digirap/metrics.hpp"
#include "digirap/spectrum.hpp"
#include "digirap/version.hpp"

namespace digirap::cli {

/// Calls body(i) for i in [0, count) on up to `threads` workers. Each index
/// writes only its own slot, so results do not depend on scheduling. The
/// first exception thrown by any worker is rethrown here.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  json summary = json::object();
  double wall_clock_seconds = 0.0;
};

namespace detail {

inline PulseTrain digitize(const ContinuousPulse& source, std::size_t n, const TrainSpec& t) {
  if (t.r2) return digitize_scaled(source, n, t.r1, *t.r2, t.envelope);
  return digitize_matched(source, n, t.r1, t.envelope);
}

inline PulseTrain comb_train(const TrainSpec& t) {
  return constant_frequency_train(t.n, t.r1, t.subpulse_duration, t.area, 0.0, t.envelope);
}

/// Uniform grid of `count` points on [lo, hi]; a single point sits at the centre.
inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

inline double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, std::filesystem::path dir, std::size_t threads)
      : cfg_(config), dir_(std::move(dir)), threads_(threads) {}

  RunResult run() {
    switch (cfg_.experiment) {
      case Experiment::Continuous: continuous(); break;
      case Experiment::Digitize: digitize_only(); break;
      case Experiment::Compare: compare(); break;
      case Experiment::ErrorSweep: error_sweep(); break;
      case Experiment::SidebandScan: sideband_scan(); break;
      case Experiment::DetuningProfile: profile(); break;
      case Experiment::Superposition: superposition(); break;
    }
    return std::move(result_);
  }

 private:
  void write(const std::string& name, const io::Table& table) {
    const auto path = dir_ / name;
    io::write_csv(path, table);
    result_.outputs.push_back(path);
  }

  void continuous() {
    const auto pulse = cfg_.pulse.resolve();
    const auto system = cfg_.system.resolve();
    const auto traj = propagate_continuous(pulse, system, cfg_.integrator.continuous());
    write("trajectory.csv", io::trajectory_table(traj));
    json finals = json::array();
    for (std::size_t j = 0; j < traj.num_levels(); ++j) finals.push_back(final_yield(traj, j));
    result_.summary["final_populations"] = finals;
    result_.summary["max_norm_deviation"] = traj.max_norm_deviation();
  }

  void digitize_only() {
    const auto pulse = cfg_.pulse.resolve();
    const auto train = digitize(pulse, cfg_.train.n, cfg_.train);
    write("train.csv", io::train_table(train));
    const auto report = verify_matching(train, pulse);
    result_.summary["subpulse_duration"] = train.subpulse_duration();
    result_.summary["period"] = train.period();
    result_.summary["spacing"] = train.spacing();
    result_.summary["max_area_residual"] = report.max_area_residual;
    result_.summary["max_phase_residual"] = report.max_phase_residual;
  }

  void compare() {
    const auto pulse = cfg_.pulse.resolve();
    const auto train = digitize(pulse, cfg_.train.n, cfg_.train);
    const auto system = cfg_.system.resolve(tooth_spacing(train));
    Trajectory cont;
    Trajectory digi;
    parallel_for(2, threads_, [&](std::size_t i) {
      if (i == 0) cont = propagate_continuous(pulse, system, cfg_.integrator.continuous());
      else digi = propagate_train(train, system, cfg_.integrator.train());
    });
    const auto mapping = TimeMapping::for_train(train);

    write("continuous.csv", io::trajectory_table(cont));
    write("train.csv", io::train_table(train));
    auto digi_table = io::trajectory_table(digi);
    digi_table.header.insert(digi_table.header.begin() + 1, "mapped_time");
    for (auto& row : digi_table.rows) row.insert(row.begin() + 1, mapping(row[0]));
    write("train_trajectory.csv", digi_table);

    // Train populations on the continuous grid.
    io::Table cmp;
    const std::size_t levels = system.dimension();
    cmp.header.push_back("time");
    for (std::size_t j = 0; j < levels; ++j) {
      cmp.header.push_back("P" + std::to_string(j) + "_continuous");
      cmp.header.push_back("P" + std::to_string(j) + "_train");
    }
    std::vector<double> mapped(digi.times.size());
    std::transform(digi.times.begin(), digi.times.end(), mapped.begin(), mapping);
    std::vector<std::vector<double>> pops(levels);
    for (std::size_t j = 0; j < levels; ++j) pops[j] = digi.populations(j);
    for (std::size_t i = 0; i < cont.size(); ++i) {
      std::vector<double> row{cont.times[i]};
      for (std::size_t j = 0; j < levels; ++j) {
        row.push_back(cont.population(i, j));
        row.push_back(digirap::detail::interpolate(mapped, pops[j], cont.times[i]));
      }
      cmp.rows.push_back(std::move(row));
    }
    write("comparison.csv", cmp);

    io::Table summary;
    summary.header = {"level", "sigma_P", "final_continuous", "final_train", "final_difference"};
    json levels_json = json::array();
    for (std::size_t j = 0; j < levels; ++j) {
      const double sp = integrated_population_error(cont, digi, mapping, j);
      const double fc = final_yield(cont, j);
      const double ft = final_yield(digi, j);
      summary.rows.push_back({static_cast<double>(j), sp, fc, ft, ft - fc});
      levels_json.push_back({{"level", j}, {"sigma_P", sp}, {"final_continuous", fc}, {"final_train", ft}});
    }
    write("summary.csv", summary);
    result_.summary["levels"] = levels_json;
    result_.summary["max_norm_deviation"] =
        std::max(cont.max_norm_deviation(), digi.max_norm_deviation());
  }

  void error_sweep() {
    const auto& sw = cfg_.sweep;
    const auto system = cfg_.system.resolve();
    const std::size_t nc = sw.cases.size();
    const std::size_t nn = sw.n_values.size();

    std::vector<ContinuousPulse> pulses;
    for (const auto& c : sw.cases) {
      pulses.push_back(ContinuousPulse::from_area(c.area, cfg_.pulse.duration, c.chirp,
                                                  cfg_.pulse.envelope, cfg_.pulse.carrier_offset));
    }
    std::vector<Trajectory> references(nc);
    parallel_for(nc, threads_, [&](std::size_t i) {
      references[i] = propagate_continuous(pulses[i], system, cfg_.integrator.continuous());
    });

    struct Point {
      double sigma = 0.0;
      double final_cont = 0.0;
      double final_train = 0.0;
      double norm = 0.0;
    };
    std::vector<Point> points(nc * nn);
    parallel_for(points.size(), threads_, [&](std::size_t idx) {
      const std::size_t c = idx / nn;
      const auto train = digitize(pulses[c], sw.n_values[idx % nn], cfg_.train);
      const auto traj = propagate_train(train, system, cfg_.integrator.train());
      auto& p = points[idx];
      p.sigma = integrated_population_error(references[c], traj, TimeMapping::for_train(train), sw.level);
      p.final_cont = final_yield(references[c], sw.level);
      p.final_train = final_yield(traj, sw.level);
      p.norm = traj.max_norm_deviation();
    });

    io::Table t;
    t.header = {"area", "chirp", "N", "r1", "r2", "level", "sigma_P", "final_continuous", "final_train"};
    double worst_norm = 0.0;
    for (std::size_t idx = 0; idx < points.size(); ++idx) {
      const auto& c = sw.cases[idx / nn];
      const auto& p = points[idx];
      t.rows.push_back({c.area, c.chirp, static_cast<double>(sw.n_values[idx % nn]), cfg_.train.r1,
                        cfg_.train.r2.value_or(std::nan("")), static_cast<double>(sw.level), p.sigma,
                        p.final_cont, p.final_train});
      worst_norm = std::max(worst_norm, p.norm);
    }
    write("error_sweep.csv", t);
    result_.summary["points"] = points.size();
    result_.summary["max_norm_deviation"] = worst_norm;
  }

  void sideband_scan() {
    const auto& sw = cfg_.sweep;
    const auto carrier = comb_train(cfg_.train);
    const double spacing = tooth_spacing(carrier);
    std::vector<double> teeth;
    for (int n = sw.n_min; n <= sw.n_max; ++n) {
      for (std::size_t j = 0; j < sw.points_per_tooth; ++j) {
        if (n == sw.n_max && j > 0) break;
        teeth.push_back(n + static_cast<double>(j) / static_cast<double>(sw.points_per_tooth));
      }
    }
    const double area = cfg_.train.area;
    std::vector<std::vector<double>> rows(teeth.size());
    parallel_for(teeth.size(), threads_, [&](std::size_t i) {
      const double x = teeth[i];
      const double ratio = sideband_ratio(carrier, x);
      double scale = 1.0;
      if (sw.rescale) scale = ratio > 0.0 ? 1.0 / ratio : std::nan("");
      double yield = std::nan("");
      if (std::isfinite(scale)) {
        yield = train_yield(carrier.scaled(scale), x * spacing, cfg_.integrator.train());
      }
      const double predicted = sin2(0.5 * area * ratio * scale);
      rows[i] = {x, x * spacing, ratio, scale, predicted, yield};
    });
    io::Table t;
    t.header = {"teeth", "detuning", "spectral_ratio", "amplitude_scale", "predicted", "yield"};
    t.rows = std::move(rows);
    write("sideband_scan.csv", t);
    result_.summary["points"] = teeth.size();
    result_.summary["tooth_spacing"] = spacing;
  }

  void profile() {
    const auto& sw = cfg_.sweep;
    const auto carrier = comb_train(cfg_.train);
    const double spacing = tooth_spacing(carrier);
    const auto fractions = linspace(-sw.offset_span, sw.offset_span, sw.offset_points);
    const std::size_t np = fractions.size();
    std::vector<double> yields(sw.teeth.size() * np);
    parallel_for(yields.size(), threads_, [&](std::size_t idx) {
      const int n = sw.teeth[idx / np];
      const double offset = fractions[idx % np] * spacing;
      yields[idx] = detuning_profile(carrier, n, std::span(&offset, 1), cfg_.integrator.train())[0];
    });
    io::Table t;
    t.header = {"teeth", "offset_fraction", "offset", "detuning", "yield", "difference_from_first"};
    double worst = 0.0;
    for (std::size_t idx = 0; idx < yields.size(); ++idx) {
      const int n = sw.teeth[idx / np];
      const double f = fractions[idx % np];
      const double diff = yields[idx] - yields[idx % np];
      worst = std::max(worst, std::abs(diff));
      t.rows.push_back({static_cast<double>(n), f, f * spacing, n * spacing + f * spacing,
                        yields[idx], diff});
    }
    write("detuning_profile.csv", t);
    result_.summary["max_difference_from_first"] = worst;
  }

  void superposition() {
    const auto& sw = cfg_.sweep;
    const auto carrier = comb_train(cfg_.train);
    const double spacing = tooth_spacing(carrier);
    std::vector<std::vector<double>> rows(sw.teeth.size());
    parallel_for(sw.teeth.size(), threads_, [&](std::size_t i) {
      const int n = sw.teeth[i];
      const double f = superposition_prefactor(carrier, 0, n);
      const double scale = sw.kappa * (sw.prefactor ? 1.0 / f : 1.0);
      const auto system = LevelSystem::v_system(0.0, n * spacing);
      const auto traj = propagate_train(carrier.scaled(scale), system, cfg_.integrator.train());
      const double fn = sideband_ratio(carrier, n);
      const double predicted = 1.0 / (1.0 + fn * fn);
      const double p1 = final_yield(traj, 1);
      const double p2 = final_yield(traj, 2);
      double ratio = std::nan("");
      try {
        ratio = superposition_ratio(traj);
      } catch (const UndefinedRatio&) {
      }
      rows[i] = {static_cast<double>(n), f, scale, p1, p2, ratio, predicted,
                 (ratio - predicted) / predicted};
    });
    io::Table t;
    t.header = {"teeth", "prefactor", "amplitude_scale", "P1", "P2", "ratio", "predicted_ratio",
                "relative_error"};
    t.rows = std::move(rows);
    write("superposition.csv", t);
    double worst = 0.0;
    for (const auto& r : t.rows) {
      if (std::isfinite(r[7])) worst = std::max(worst, std::abs(r[7]));
    }
    result_.summary["max_relative_error"] = worst;
  }

  const ExperimentConfig& cfg_;
  std::filesystem::path dir_;
  std::size_t threads_;
  RunResult result_;
};

}  // namespace detail

inline json manifest_json(const ExperimentConfig& config, const RunResult& result) {
  json outputs = json::array();
  for (const auto& p : result.outputs) outputs.push_back(p.filename().string());
  return {
      {"tool", "digirap"},
      {"version", std::string(version)},
      {"experiment", std::string(to_string(config.experiment))},
      {"config", resolved_json(config)},
      {"defaults_applied", config.defaults_applied},
      {"outputs", outputs},
      {"summary", result.summary},
      {"wall_clock_seconds", result.wall_clock_seconds},
  };
}

/// Run a validated experiment, writing its tables and manifest.json into
/// `out_dir` (created if needed).
inline RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                std::size_t threads = 1) {
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  RunResult result = detail::Runner(config, out_dir, threads).run();
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto path = out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << manifest_json(config, result).dump(2) << '\n';
  result.outputs.push_back(path);
  return result;
}

}  // namespace digirap::cli
