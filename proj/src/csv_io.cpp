#include "mgdde/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mgdde/errors.hpp"

namespace mgdde {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open: " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError(path + ": bad numeric cell '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path + ": empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_dde_system(const std::string& dir, const DdeSystem& sys) {
  write_matrix_csv(dir + "/A.csv", sys.a);
  write_matrix_csv(dir + "/A_d.csv", sys.a_d);
  nlohmann::json j;
  j["n"] = sys.inverter_count;
  j["t_d"] = sys.delay;
  j["labels"] = sys.labels;
  auto out = open_out(dir + "/system.json");
  out << j.dump(2) << '\n';
}

DdeSystem read_dde_system(const std::string& dir) {
  DdeSystem sys;
  sys.a = read_matrix_csv(dir + "/A.csv");
  sys.a_d = read_matrix_csv(dir + "/A_d.csv");
  auto in = open_in(dir + "/system.json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(dir + "/system.json: " + e.what());
  }
  sys.inverter_count = j.at("n").get<int>();
  sys.delay = j.at("t_d").get<double>();
  sys.labels = j.at("labels").get<std::vector<std::string>>();
  if (sys.a.rows() != sys.a.cols() || sys.a_d.rows() != sys.a_d.cols() ||
      sys.a.rows() != sys.a_d.rows() ||
      sys.a.rows() != static_cast<Eigen::Index>(sys.labels.size())) {
    throw ConfigError(dir + ": inconsistent matrix/label dimensions");
  }
  return sys;
}

void write_equilibrium_csv(const std::string& path, const EquilibriumPoint& eq) {
  auto out = open_out(path);
  out << "inverter,e_d,e_q,i_d,i_q,p,q,p_ref\n";
  for (int i = 0; i < eq.size(); ++i) {
    out << (i + 1) << ',' << format_double(eq.e_d(i)) << ',' << format_double(eq.e_q(i)) << ','
        << format_double(eq.i_d(i)) << ',' << format_double(eq.i_q(i)) << ','
        << format_double(eq.p(i)) << ',' << format_double(eq.q(i)) << ','
        << format_double(eq.p_ref(i)) << '\n';
  }
  out << "omega," << format_double(eq.omega) << ",,,,,,\n";
}

void write_spectrum_csv(const std::string& path, const SpectrumResult& result) {
  auto out = open_out(path);
  out << "re,im,residual,is_origin_mode,is_artifact\n";
  for (const auto& ev : result.eigenvalues) {
    out << format_double(ev.value.real()) << ',' << format_double(ev.value.imag()) << ','
        << format_double(ev.residual) << ',' << (ev.origin_mode ? 1 : 0) << ','
        << (ev.artifact ? 1 : 0) << '\n';
  }
}

void write_root_locus_csv(const std::string& path,
                          const std::vector<std::pair<double, SpectrumResult>>& locus) {
  auto out = open_out(path);
  out << "sweep_value,re,im,residual,is_origin_mode\n";
  for (const auto& [value, result] : locus) {
    for (const auto& ev : result.eigenvalues) {
      if (ev.artifact) continue;
      out << format_double(value) << ',' << format_double(ev.value.real()) << ','
          << format_double(ev.value.imag()) << ',' << format_double(ev.residual) << ','
          << (ev.origin_mode ? 1 : 0) << '\n';
    }
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory) {
  auto out = open_out(path);
  out << "time";
  for (const auto& label : trajectory.labels) out << ',' << label;
  out << '\n';
  for (int k = 0; k < trajectory.samples(); ++k) {
    out << format_double(trajectory.time[k]);
    for (Eigen::Index c = 0; c < trajectory.channels.cols(); ++c) {
      out << ',' << format_double(trajectory.channels(k, c));
    }
    out << '\n';
  }
}

void write_packet_log_csv(const std::string& path, const std::vector<PacketRecord>& packets) {
  auto out = open_out(path);
  out << "sample,link_from,link_to,delivered\n";
  for (const auto& p : packets) {
    out << p.sample << ',' << (p.from + 1) << ',' << (p.to + 1) << ',' << (p.delivered ? 1 : 0)
        << '\n';
  }
}

void emit_trajectory_plot_script(const std::string& path, const std::string& csv_name,
                                 int inverter_count) {
  auto out = open_out(path);
  out << "#!/usr/bin/env python3\n"
         "import csv\n"
         "import matplotlib.pyplot as plt\n\n"
         "with open('"
      << csv_name
      << "') as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "t = [float(r['time']) for r in rows]\n"
         "n = "
      << inverter_count
      << "\n"
         "fig, axes = plt.subplots(n, 1, sharex=True, figsize=(7, 2.2 * n))\n"
         "axes = axes if n > 1 else [axes]\n"
         "for i in range(n):\n"
         "    w = [float(r['omega_%d' % (i + 1)]) for r in rows]\n"
         "    axes[i].plot(t, w)\n"
         "    axes[i].set_ylabel('omega_%d [rad/s]' % (i + 1))\n"
         "    axes[i].grid(True)\n"
         "axes[-1].set_xlabel('time [s]')\n"
         "fig.tight_layout()\n"
         "fig.savefig('trajectory.png', dpi=150)\n"
         "print('wrote trajectory.png')\n";
}

void emit_spectrum_plot_script(const std::string& path, const std::string& csv_name) {
  auto out = open_out(path);
  out << "#!/usr/bin/env python3\n"
         "import csv\n"
         "import matplotlib.pyplot as plt\n\n"
         "with open('"
      << csv_name
      << "') as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "kept = [r for r in rows if r['is_artifact'] == '0']\n"
         "plt.scatter([float(r['re']) for r in kept], [float(r['im']) for r in kept], s=18)\n"
         "plt.axvline(0.0, color='k', lw=0.6)\n"
         "plt.xlabel('Re [rad/s]'); plt.ylabel('Im [rad/s]'); plt.grid(True)\n"
         "plt.savefig('spectrum.png', dpi=150)\n"
         "print('wrote spectrum.png')\n";
}

void emit_root_locus_plot_script(const std::string& path, const std::string& csv_name) {
  auto out = open_out(path);
  out << "#!/usr/bin/env python3\n"
         "import csv\n"
         "import matplotlib.pyplot as plt\n\n"
         "with open('"
      << csv_name
      << "') as f:\n"
         "    rows = list(csv.DictReader(f))\n"
         "x = [float(r['re']) for r in rows]\n"
         "y = [float(r['im']) for r in rows]\n"
         "c = [float(r['sweep_value']) for r in rows]\n"
         "sc = plt.scatter(x, y, c=c, s=16, cmap='viridis')\n"
         "plt.colorbar(sc, label='sweep value')\n"
         "plt.axvline(0.0, color='k', lw=0.6)\n"
         "plt.xlabel('Re [rad/s]'); plt.ylabel('Im [rad/s]'); plt.grid(True)\n"
         "plt.savefig('root_locus.png', dpi=150)\n"
         "print('wrote root_locus.png')\n";
}

}  // namespace mgdde
