// Command-line front end: every workflow is a subcommand reading a JSON
// config and writing plot-ready CSV/JSON files plus a run manifest.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nhaah/io.hpp"
#include "nhaah/model.hpp"
#include "nhaah/observables.hpp"
#include "nhaah/params.hpp"
#include "nhaah/spectral.hpp"
#include "nhaah/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nhaah;

namespace {

constexpr const char* tool_version = "nhaah 0.1.0";

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  int workers = 0;       // 0 = take from config
  long long seed = -1;   // <0 = take from config
  bool resume = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config_path, "JSON config file");
  if (needs_config) opt->required();
  cmd->add_option("--out", c.out_dir, "output directory (created if missing)");
  cmd->add_option("--workers", c.workers, "worker threads (overrides config)");
  cmd->add_option("--seed", c.seed, "master seed (overrides config)");
  cmd->add_flag("--resume", c.resume, "reuse cached rows from a previous run");
}

json load_config(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw std::runtime_error("cannot open config " + c.config_path);
  return json::parse(in, nullptr, true, /*ignore_comments=*/true);
}

class Manifest {
 public:
  Manifest(const std::string& subcommand, const fs::path& out_dir)
      : start_(std::chrono::steady_clock::now()), dir_(out_dir) {
    j_["subcommand"] = subcommand;
    j_["tool_version"] = tool_version;
    fs::create_directories(out_dir);
  }
  void config(const json& resolved) { j_["config"] = resolved; }
  void spec_hash(const std::string& h) { j_["spec_hash"] = h; }
  void note(const std::string& key, const json& v) { j_[key] = v; }
  fs::path file(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }
  void finish() {
    j_["outputs"] = outputs_;
    j_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(dir_ / "run_manifest.json", j_);
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path dir_;
  json j_;
  std::vector<std::string> outputs_;
};

SweepSpec sweep_spec_from(const json& cfg, const Common& c, bool validate = true) {
  SweepSpec spec = sweep_from_json(cfg);
  if (c.workers > 0) spec.workers = c.workers;
  if (c.seed >= 0) spec.master_seed = static_cast<std::uint64_t>(c.seed);
  if (validate) spec.validate();
  return spec;
}

// Sweeps checkpoint per-row results under out/cache/<spec-hash>/.  Without
// --resume any stale entries for this spec are dropped first.
fs::path prepare_cache(const Common& c, const SweepSpec& spec) {
  const fs::path root = fs::path(c.out_dir) / "cache";
  if (!c.resume) fs::remove_all(root / spec.hash());
  fs::create_directories(root);
  return root;
}

int cmd_spectrum(const Common& c) {
  Manifest m("spectrum", c.out_dir);
  const json cfg = load_config(c);
  const bool many_body = cfg.value("many_body", false);
  ModelParams p = params_from_json(cfg.at("model"));
  p.validate(many_body);
  const auto state_index = cfg.value("state_index", 0);
  m.config(cfg);

  Matrix H;
  std::optional<FockBasis> basis;
  if (many_body) {
    basis = build_fock_basis(p.L, p.N);
    H = build_many_body(p, *basis);
  } else {
    H = build_single_particle(p);
  }
  const Spectrum s = eig(H);
  const std::string ph = params_hash(p);
  m.spec_hash(ph);

  write_eigenvalue_csv(m.file("eigenvalues.csv"), s, ph);
  if (state_index < 0 || state_index >= s.dim())
    throw std::runtime_error("state_index " + std::to_string(state_index) + " out of range");
  {
    CsvWriter csv(m.file("density_profile.csv"));
    csv.meta("param_hash", ph);
    csv.meta("state_index", std::to_string(state_index));
    csv.header({"j", "density"});
    const Eigen::VectorXd rho = density_profile(s.right_vectors.col(state_index));
    for (Eigen::Index j = 0; j < rho.size(); ++j) csv.row({static_cast<double>(j), rho[j]});
  }
  if (cfg.value("eigenvectors", false))
    write_eigenvector_blob(m.file("eigenvectors.bin"), s.right_vectors, ph);
  m.note("residual", s.residual);
  m.note("degraded", s.degraded);
  m.finish();
  return 0;
}

int cmd_phase_diagram(const Common& c) {
  Manifest m("phase-diagram", c.out_dir);
  const json cfg = load_config(c);
  const SweepSpec spec = sweep_spec_from(cfg, c);
  m.config(cfg);
  m.spec_hash(spec.hash());

  const ResultTable table = run_sweep(spec, prepare_cache(c, spec));
  write_result_table(c.out_dir, "phase_diagram", table);
  m.file("phase_diagram_rows.csv");
  m.file("phase_diagram_mean.csv");

  // localization boundary overlay for (V1, V2)-type scans
  bool has_v1 = false;
  for (const auto& a : spec.axes) has_v1 |= a.name == "V1";
  if (has_v1) {
    CsvWriter csv(m.file("boundary_v1c.csv"));
    csv.header({"V2", "V1c"});
    const AxisSpec* v2_axis = nullptr;
    for (const auto& a : spec.axes)
      if (a.name == "V2") v2_axis = &a;
    if (v2_axis) {
      for (int i = 0; i < v2_axis->count; ++i) {
        const double v2 = v2_axis->value(i);
        csv.row({v2, boundary_v1c(spec.base.g, spec.base.h, v2, spec.base.t)});
      }
    } else {
      csv.row({spec.base.V2, boundary_v1c(spec.base.g, spec.base.h, spec.base.V2, spec.base.t)});
    }
  }
  m.note("n_diagonalizations", table.n_diagonalizations);
  m.note("cache_hits", table.cache_hits);
  m.note("failures", table.failures);
  m.note("indeterminate_windings", table.indeterminate);
  m.finish();
  return table.failures == 0 ? 0 : 1;
}

int cmd_winding(const Common& c) {
  Manifest m("winding", c.out_dir);
  const json cfg = load_config(c);
  const std::string family = cfg.at("family").get<std::string>();
  if (family != "g" && family != "h")
    throw std::runtime_error("winding: family must be \"g\" or \"h\"");
  const bool base_zero = cfg.value("base_energy", std::string("auto")) == "zero";

  SweepSpec spec = sweep_spec_from(cfg, c, false);
  spec.observables = {std::string("winding_") + family + (base_zero ? "0" : "")};
  spec.validate();
  m.config(cfg);
  m.spec_hash(spec.hash());

  const ResultTable table = run_sweep(spec, prepare_cache(c, spec));
  write_result_table(c.out_dir, "winding", table);
  m.file("winding_rows.csv");
  m.file("winding_mean.csv");

  if (cfg.value("trajectory", false)) {
    const ModelParams p = spec.base;
    std::optional<FockBasis> basis;
    std::function<Matrix(double)> fam;
    if (spec.many_body) {
      basis = build_fock_basis(p.L, p.N);
      fam = many_body_family(p, *basis, family == "g" ? WindingFamily::g : WindingFamily::h);
    } else {
      fam = single_particle_family(p, family == "g" ? WindingFamily::g : WindingFamily::h);
    }
    const auto loop = det_trajectory(fam, spec.n_theta);
    CsvWriter csv(m.file("det_trajectory.csv"));
    csv.meta("param_hash", params_hash(p));
    csv.header({"theta", "re", "im"});
    for (std::size_t k = 0; k < loop.size(); ++k)
      csv.row({2.0 * M_PI * static_cast<double>(k) / (loop.size() - 1), loop[k].real(),
               loop[k].imag()});
  }
  m.note("indeterminate_windings", table.indeterminate);
  m.note("n_diagonalizations", table.n_diagonalizations);
  m.note("cache_hits", table.cache_hits);
  m.finish();
  return table.failures == 0 ? 0 : 1;
}

int default_phi_samples(int L) {
  if (L <= 10) return 100;
  if (L == 12) return 30;
  return 10;
}

int cmd_mbl(const Common& c) {
  Manifest m("mbl", c.out_dir);
  const json cfg = load_config(c);
  const std::vector<int> L_values = cfg.at("L_values").get<std::vector<int>>();
  m.config(cfg);

  std::map<int, ResultTable> tables;
  std::map<std::string, std::map<int, Curve>> curves;  // observable -> L -> curve
  std::string combined_hash;
  std::size_t failures = 0;
  for (int L : L_values) {
    json sub = cfg;
    sub.erase("L_values");
    sub.erase("collapse");
    SweepSpec spec = sweep_spec_from(sub, c);
    spec.many_body = true;
    spec.base.L = L;
    spec.base.N = cfg.contains("N_values")
                      ? cfg.at("N_values").at(std::to_string(L)).get<int>()
                      : L / 2;  // half filling
    if (!cfg.contains("n_phi_samples")) spec.n_phi_samples = default_phi_samples(L);
    spec.validate();
    const ResultTable table = run_sweep(spec, prepare_cache(c, spec));
    write_result_table(c.out_dir, "mbl_L" + std::to_string(L), table);
    m.file("mbl_L" + std::to_string(L) + "_rows.csv");
    m.file("mbl_L" + std::to_string(L) + "_mean.csv");
    combined_hash += (combined_hash.empty() ? "" : "+") + spec.hash();
    failures += table.failures;

    for (const auto& o : spec.observables) {
      Curve& curve = curves[o][L];
      for (int gi = 0; gi < spec.n_grid(); ++gi) {
        curve.x.push_back(spec.axes.at(0).value(spec.grid_coords(gi)[0]));
        curve.y.push_back(table.averaged(gi, o));
      }
    }
    m.note("indeterminate_windings_L" + std::to_string(L), table.indeterminate);
    tables.emplace(L, std::move(table));
  }
  m.spec_hash(hash_hex(canonical_hash(json(combined_hash))));

  // optional mean across system sizes (per-size curves are the primary data)
  if (cfg.value("cross_size_mean", false)) {
    CsvWriter csv(m.file("mbl_crossL_mean.csv"));
    std::vector<std::string> cols = {"V1"};
    for (const auto& [o, per_size] : curves) cols.push_back(o);
    csv.header(cols);
    const Curve& ref = curves.begin()->second.begin()->second;
    for (std::size_t i = 0; i < ref.x.size(); ++i) {
      std::vector<double> row = {ref.x[i]};
      for (const auto& [o, per_size] : curves) {
        double sum = 0.0;
        for (const auto& [L, curve] : per_size) sum += curve.y[i];
        row.push_back(sum / static_cast<double>(per_size.size()));
      }
      csv.row(row);
    }
  }

  if (cfg.contains("collapse")) {
    const json& cc = cfg.at("collapse");
    const std::string obs = cc.value("observable", std::string("ee"));
    if (!curves.count(obs))
      throw std::runtime_error("collapse observable \"" + obs + "\" was not swept");
    const auto xc = cc.at("xc_range").get<std::array<double, 2>>();
    const auto nu = cc.at("nu_range").get<std::array<double, 2>>();
    const CollapseFit fit =
        scaling_collapse(curves.at(obs), {xc[0], xc[1]}, {nu[0], nu[1]});
    write_json(m.file("collapse_fit.json"),
               json{{"observable", obs},
                    {"x_c", fit.x_c},
                    {"nu", fit.nu},
                    {"cost", fit.cost},
                    {"trace_points", fit.search_trace.size()}});
  }
  m.finish();
  return failures == 0 ? 0 : 1;
}

int cmd_levelstats(const Common& c) {
  Manifest m("levelstats", c.out_dir);
  const json cfg = load_config(c);
  const bool many_body = cfg.value("many_body", true);
  ModelParams p = params_from_json(cfg.at("model"));
  p.validate(many_body);
  const int n_samples = cfg.value("n_phi_samples", 1);
  const std::uint64_t seed =
      c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : cfg.value("master_seed", std::uint64_t{1});
  m.config(cfg);
  m.spec_hash(params_hash(p));

  std::optional<FockBasis> basis;
  if (many_body) basis = build_fock_basis(p.L, p.N);

  std::vector<SpacingSample> per_sample;
  for (int k = 0; k < n_samples; ++k) {
    ModelParams q = p;
    if (n_samples > 1) q.phi = 2.0 * M_PI * counter_uniform(seed, 0, static_cast<std::uint64_t>(k));
    const Matrix H = many_body ? build_many_body(q, *basis) : build_single_particle(q);
    per_sample.push_back(nearest_spacings(eig_values(H).eigenvalues));
  }
  const SpacingSample pooled = pool_spacings(per_sample);
  if (pooled.normalized.size() < 100)
    std::cerr << "warning: only " << pooled.normalized.size()
              << " spacings pooled; statistics will be noisy\n";

  std::vector<std::pair<std::string, ReferenceDistribution>> refs;
  const auto wanted = cfg.value("references", std::vector<std::string>{"ginibre_complex",
                                                                       "poisson_real",
                                                                       "poisson_complex"});
  for (const auto& name : wanted) {
    if (name == "ginibre_complex") refs.emplace_back(name, ReferenceDistribution::ginibre());
    else if (name == "poisson_real") refs.emplace_back(name, ReferenceDistribution::poisson_real());
    else if (name == "poisson_complex")
      refs.emplace_back(name, ReferenceDistribution::poisson_complex());
    else if (name == "sub_wigner")
      refs.emplace_back(name, ReferenceDistribution::sub_wigner(cfg.at("sub_wigner").at("b"),
                                                                cfg.at("sub_wigner").at("c")));
    else throw std::runtime_error("unknown reference \"" + name + "\"");
  }

  const Histogram hist = make_histogram(pooled.normalized, cfg.value("bin_width", 0.0));
  {
    CsvWriter csv(m.file("levelstats.csv"));
    csv.meta("param_hash", params_hash(p));
    csv.meta("n_spacings", std::to_string(pooled.normalized.size()));
    csv.meta("degenerate", std::to_string(pooled.degenerate_count));
    std::vector<std::string> cols = {"bin_center", "empirical_pdf"};
    for (const auto& [name, ref] : refs) cols.push_back(name);
    csv.header(cols);
    for (std::size_t i = 0; i < hist.centers.size(); ++i) {
      std::vector<double> row = {hist.centers[i], hist.density[i]};
      for (const auto& [name, ref] : refs) row.push_back(ref.pdf(hist.centers[i]));
      csv.row(row);
    }
  }
  json ks;
  for (const auto& [name, ref] : refs) ks[name] = distribution_distance(pooled, ref);
  m.note("ks_distance", ks);
  if (cfg.value("fit_sub_wigner", false)) {
    const SubWignerFit fit = fit_sub_wigner(hist);
    m.note("sub_wigner_fit",
           json{{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"residual", fit.residual}});
  }
  m.note("n_spacings", pooled.normalized.size());
  m.note("degenerate_spacings", pooled.degenerate_count);
  m.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-Hermitian generalized Aubry-Andre-Harper lattice toolkit"};
  app.require_subcommand(1);

  Common c_spec, c_phase, c_wind, c_mbl, c_stats;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, vectors and density profile");
  add_common(spectrum, c_spec);
  auto* phase = app.add_subcommand("phase-diagram", "observable grids over 1-2 parameter axes");
  add_common(phase, c_phase);
  auto* winding = app.add_subcommand("winding", "spectral winding numbers over a parameter scan");
  add_common(winding, c_wind);
  auto* mbl = app.add_subcommand("mbl", "many-body curves per system size, with optional collapse");
  add_common(mbl, c_mbl);
  auto* stats = app.add_subcommand("levelstats", "nearest-spacing histogram vs reference laws");
  add_common(stats, c_stats);

  double bg = 0.0, bh = 0.0, bV2 = 0.0, bt = 1.0;
  auto* boundary = app.add_subcommand("boundary", "localization boundary V1c(g, h, V2, t)");
  boundary->set_help_flag("--help", "print help");  // frees -h / --h for the phase
  boundary->add_option("--g", bg, "nonreciprocity")->required();
  boundary->add_option("--h", bh, "complex potential phase")->required();
  boundary->add_option("--V2", bV2, "hopping modulation")->required();
  boundary->add_option("--t", bt, "hopping energy unit");

  CLI11_PARSE(app, argc, argv);
  try {
    if (spectrum->parsed()) return cmd_spectrum(c_spec);
    if (phase->parsed()) return cmd_phase_diagram(c_phase);
    if (winding->parsed()) return cmd_winding(c_wind);
    if (mbl->parsed()) return cmd_mbl(c_mbl);
    if (stats->parsed()) return cmd_levelstats(c_stats);
    if (boundary->parsed()) {
      std::printf("%.12f\n", boundary_v1c(bg, bh, bV2, bt));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
