#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nhaah/spectral.hpp"
#include "nhaah/sweep.hpp"

namespace nhaah {

// Data files are CSV with a header row preceded by '#' metadata lines;
// manifests are JSON; eigenvector blobs are little-endian doubles with a JSON
// sidecar header.  Everything is plain enough to plot from any language.

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << std::setprecision(17);
  }

  void meta(const std::string& key, const std::string& value) {
    out_ << "# " << key << ": " << value << "\n";
  }

  void header(const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << vals[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_eigenvalue_csv(const std::filesystem::path& path, const Spectrum& s,
                                 const std::string& param_hash) {
  CsvWriter csv(path);
  csv.meta("param_hash", param_hash);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", s.residual);
  csv.meta("residual", buf);
  csv.header({"index", "re_E", "im_E"});
  for (Eigen::Index i = 0; i < s.dim(); ++i)
    csv.row({static_cast<double>(i), s.eigenvalues[i].real(), s.eigenvalues[i].imag()});
}

// column-major, interleaved (re, im) float64 little-endian + JSON header
inline void write_eigenvector_blob(const std::filesystem::path& path, const Eigen::MatrixXcd& V,
                                   const std::string& param_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (Eigen::Index c = 0; c < V.cols(); ++c)
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
      const double re = V(r, c).real(), im = V(r, c).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(double));
      out.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
  const nlohmann::json header{{"rows", V.rows()},
                              {"cols", V.cols()},
                              {"scalar", "complex128"},
                              {"layout", "column-major"},
                              {"byte_order", "little-endian"},
                              {"param_hash", param_hash}};
  std::ofstream hdr(path.string() + ".json");
  hdr << header.dump(2) << "\n";
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

// Per-row and phi-averaged tables for a finished sweep.
inline void write_result_table(const std::filesystem::path& dir, const std::string& stem,
                               const ResultTable& table) {
  const auto& spec = table.spec;
  std::vector<std::string> axis_names;
  for (const auto& a : spec.axes) axis_names.push_back(a.name);

  {
    CsvWriter csv(dir / (stem + "_rows.csv"));
    csv.meta("spec_hash", spec.hash());
    std::vector<std::string> cols = axis_names;
    cols.insert(cols.end(), {"sample", "phi", "ok"});
    for (const auto& o : spec.observables) cols.push_back(o);
    csv.header(cols);
    for (int gi = 0; gi < spec.n_grid(); ++gi) {
      const auto coords = spec.grid_coords(gi);
      for (int k = 0; k < spec.n_phi_samples; ++k) {
        const auto& r = table.row(gi, k);
        std::vector<double> vals;
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
          vals.push_back(spec.axes[a].value(coords[a]));
        vals.push_back(k);
        vals.push_back(r.phi);
        vals.push_back(r.ok ? 1.0 : 0.0);
        for (const auto& o : spec.observables) {
          const auto it = r.values.find(o);
          vals.push_back(it == r.values.end() ? std::numeric_limits<double>::quiet_NaN()
                                              : it->second);
        }
        csv.row(vals);
      }
    }
  }
  {
    CsvWriter csv(dir / (stem + "_mean.csv"));
    csv.meta("spec_hash", spec.hash());
    csv.meta("n_phi_samples", std::to_string(spec.n_phi_samples));
    std::vector<std::string> cols = axis_names;
    for (const auto& o : spec.observables) {
      cols.push_back(o);
      cols.push_back(o + "_n");
    }
    csv.header(cols);
    for (int gi = 0; gi < spec.n_grid(); ++gi) {
      const auto coords = spec.grid_coords(gi);
      std::vector<double> vals;
      for (std::size_t a = 0; a < spec.axes.size(); ++a)
        vals.push_back(spec.axes[a].value(coords[a]));
      for (const auto& o : spec.observables) {
        std::size_t n = 0;
        vals.push_back(table.averaged(gi, o, &n));
        vals.push_back(static_cast<double>(n));
      }
      csv.row(vals);
    }
  }
}

}  // namespace nhaah
