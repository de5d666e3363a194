#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asmc/evaluation.hpp"
#include "asmc/samplers.hpp"

namespace asmc {

// Doubles round-trip exactly at 17 significant digits; all CSV output uses
// this so reruns with the same seed are byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline std::string csv_field(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

inline std::string kernel_tag(KernelSpec::Kind kind, Ordering ordering) {
  std::string tag = kind == KernelSpec::Kind::RandomWalk ? "rw" : "lw";
  switch (ordering) {
    case Ordering::ByMeans: return tag + "_means";
    case Ordering::ByVariances: return tag + "_vars";
    default: return tag + "_none";
  }
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::RWfixed: return "rwfixed";
    case Method::RWadaptive: return "rwadaptive";
    case Method::LWmean: return "lwmean";
    case Method::LWvariance: return "lwvariance";
    case Method::Kmix: return "kmix";
    case Method::AMCMC: return "amcmc";
  }
  return "unknown";
}

inline Method parse_method(std::string name) {
  for (char& c : name) c = static_cast<char>(std::tolower(c));
  if (name == "rwfixed") return Method::RWfixed;
  if (name == "rwadaptive") return Method::RWadaptive;
  if (name == "lwmean") return Method::LWmean;
  if (name == "lwvariance") return Method::LWvariance;
  if (name == "kmix") return Method::Kmix;
  if (name == "amcmc") return Method::AMCMC;
  throw std::invalid_argument("unknown method: " + name);
}

inline void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "iter,ess,resampled,acc_prob_mean,acc_rate,jd_mean";
  for (const MenuEntry& me : trace.menu) {
    const std::string tag = kernel_tag(me.kind, me.ordering);
    os << ",h_mean_" << tag << ",propn_" << tag;
  }
  os << "\n";
  for (const IterationRow& row : trace.iterations) {
    os << row.iter << "," << format_double(row.ess) << ","
       << (row.resampled ? 1 : 0);
    if (row.move_index >= 0) {
      const MoveStepStats& st =
          trace.move_steps[static_cast<std::size_t>(row.move_index)];
      os << "," << format_double(st.acc_prob_mean) << ","
         << format_double(st.acc_rate) << "," << format_double(st.jd_mean);
      for (const KernelStepStats& ks : st.kernels) {
        os << "," << csv_field(ks.h_mean) << ","
           << format_double(ks.proportion);
      }
    } else {
      os << ",,,";
      for (std::size_t i = 0; i < trace.menu.size(); ++i) os << ",,";
    }
    os << "\n";
  }
}

inline void write_final_particles_csv(std::ostream& os,
                                      const RunTrace& trace) {
  const ParticleSystem& sys = trace.final_particles;
  os << "index,weight";
  for (Eigen::Index i = 0; i < sys.dim(); ++i) os << ",theta_" << i;
  os << "\n";
  const auto [w, log_z] = normalize_log_weights(sys.log_weights);
  (void)log_z;
  for (Eigen::Index j = 0; j < sys.count(); ++j) {
    os << j << "," << format_double(w[j]);
    for (Eigen::Index i = 0; i < sys.dim(); ++i) {
      os << "," << format_double(sys.particles(i, j));
    }
    os << "\n";
  }
}

inline void write_samples_csv(std::ostream& os, const Eigen::MatrixXd& samples) {
  os << "index";
  for (Eigen::Index i = 0; i < samples.rows(); ++i) os << ",theta_" << i;
  os << "\n";
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    os << j;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      os << "," << format_double(samples(i, j));
    }
    os << "\n";
  }
}

inline void write_population_log_csv(std::ostream& os, const RunTrace& trace) {
  os << "step,particle_index,kernel_id,h,score\n";
  for (const PopulationSnapshot& snap : trace.population_log) {
    for (std::size_t j = 0; j < snap.entries.size(); ++j) {
      os << snap.iter << "," << j << "," << snap.entries[j].kernel_id << ","
         << format_double(snap.entries[j].h) << ","
         << format_double(snap.scores[static_cast<Eigen::Index>(j)]) << "\n";
    }
  }
}

inline void write_gcurve_csv(std::ostream& os,
                             const std::vector<GCurvePoint>& points) {
  os << "h,g_hat,se\n";
  for (const GCurvePoint& p : points) {
    os << format_double(p.h) << "," << format_double(p.g_hat) << ","
       << format_double(p.se) << "\n";
  }
}

inline void write_predictive_csv(std::ostream& os, const PredictiveGrid& grid) {
  os << "y,density\n";
  for (Eigen::Index i = 0; i < grid.points.size(); ++i) {
    os << format_double(grid.points[i]) << "," << format_double(grid.values[i])
       << "\n";
  }
}

inline void write_study_csv(std::ostream& os, const StudyResult& result) {
  os << "dataset,method,runs,failed,particles,vpd,rel_vpd,jd,"
        "acc_prob_mean,acc_rate,h_rw_means,h_lw_means,h_lw_vars,"
        "propn_rw_means,propn_lw_means,propn_lw_vars\n";
  for (const MethodSummary& ms : result.methods) {
    os << result.dataset << "," << method_name(ms.method) << ","
       << ms.runs_completed << "," << ms.runs_failed << "," << result.particles
       << "," << csv_field(ms.vpd_value) << "," << csv_field(ms.rel_vpd) << ","
       << csv_field(ms.jd) << "," << csv_field(ms.acc_prob_mean) << ","
       << csv_field(ms.acc_rate);
    for (const double v : ms.h_by_kernel) os << "," << csv_field(v);
    for (const double v : ms.propn_by_kernel) os << "," << csv_field(v);
    os << "\n";
  }
}

// Datasets are plain text, one observation per line.
inline void write_dataset(std::ostream& os, const std::vector<double>& y) {
  for (const double v : y) os << format_double(v) << "\n";
}

inline std::vector<double> read_dataset(std::istream& is) {
  std::vector<double> y;
  std::string line;
  while (std::getline(is, line)) {
    std::size_t start = 0;
    while (start < line.size() &&
           std::isspace(static_cast<unsigned char>(line[start]))) {
      ++start;
    }
    if (start == line.size()) continue;
    std::size_t consumed = 0;
    const double v = std::stod(line.substr(start), &consumed);
    y.push_back(v);
    (void)consumed;
  }
  return y;
}

}  // namespace asmc
