#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "digirap/digitizer.hpp"
#include "digirap/dynamics.hpp"

namespace digirap::io {

/// %.17g: round-trips every double.
inline std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    out << (i ? "," : "") << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_number(row[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// time, P_0..P_M, then Re/Im of every amplitude.
inline Table trajectory_table(const Trajectory& traj) {
  Table t;
  const std::size_t levels = traj.num_levels();
  t.header.push_back("time");
  for (std::size_t j = 0; j < levels; ++j) t.header.push_back("P" + std::to_string(j));
  for (std::size_t j = 0; j < levels; ++j) {
    t.header.push_back("re_c" + std::to_string(j));
    t.header.push_back("im_c" + std::to_string(j));
  }
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::vector<double> row{traj.times[i]};
    for (std::size_t j = 0; j < levels; ++j) row.push_back(traj.population(i, j));
    for (const auto& c : traj.states[i].amplitudes) {
      row.push_back(c.real());
      row.push_back(c.imag());
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// One row per subpulse: index, t_k, Omega_k0, delta_k, A_k, phi_k.
inline Table train_table(const PulseTrain& train) {
  Table t;
  t.header = {"index", "peak_time", "peak_rabi", "detuning", "area", "phase"};
  for (std::size_t k = 0; k < train.size(); ++k) {
    const auto& sp = train[k];
    const auto si = subpulse_integrals(sp, train.period());
    t.rows.push_back({static_cast<double>(k), sp.peak_time, sp.peak_rabi, sp.detuning, si.area,
                      si.phase});
  }
  return t;
}

}  // namespace digirap::io
