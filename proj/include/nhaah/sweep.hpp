#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nhaah/observables.hpp"
#include "nhaah/params.hpp"
#include "nhaah/spectral.hpp"

namespace nhaah {

// Empirical localization boundary V1c = e^{-|h|} (2K cosh|g| + 2 sqrt(K^2 - V2^2) sinh|g|)
// with K = max(t, V2).
inline double boundary_v1c(double g, double h, double V2, double t) {
  const double K = std::max(t, V2);
  // max() guards the K = V2 corner against fused-multiply contraction noise
  const double root = std::sqrt(std::max(0.0, K * K - V2 * V2));
  return std::exp(-std::abs(h)) *
         (2.0 * K * std::cosh(std::abs(g)) + 2.0 * root * std::sinh(std::abs(g)));
}

// --- sweep specification -------------------------------------------------------

struct AxisSpec {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double value(int i) const {
    if (count == 1) return min;
    return min + (max - min) * static_cast<double>(i) / (count - 1);
  }
};

inline const std::set<std::string>& sweepable_fields() {
  static const std::set<std::string> fields = {"t",  "V1",     "V2",      "alpha", "g",
                                               "h",  "theta_g", "theta_h", "phi",   "U"};
  return fields;
}

inline void set_field(ModelParams& p, const std::string& name, double v) {
  if (name == "t") p.t = v;
  else if (name == "V1") p.V1 = v;
  else if (name == "V2") p.V2 = v;
  else if (name == "alpha") p.alpha = v;
  else if (name == "g") p.g = v;
  else if (name == "h") p.h = v;
  else if (name == "theta_g") p.theta_g = v;
  else if (name == "theta_h") p.theta_h = v;
  else if (name == "phi") p.phi = v;
  else if (name == "U") p.U = v;
  else throw std::invalid_argument("axis \"" + name + "\" is not a sweepable model field");
}

inline const std::set<std::string>& known_observables() {
  static const std::set<std::string> obs = {"fd",   "fd_mid6",   "f_im",      "eps",
                                            "ee",   "winding_g", "winding_h", "winding_g0",
                                            "winding_h0"};
  return obs;
}

struct SweepSpec {
  ModelParams base;
  bool many_body = false;
  std::vector<AxisSpec> axes;  // 0..2 axes; a degenerate axis (count 1) gives a line cut
  std::vector<std::string> observables;
  int n_phi_samples = 1;
  std::uint64_t master_seed = 1;
  int workers = 1;
  int n_theta = winding_default_n_theta;

  void validate() const {
    base.validate(many_body);
    if (axes.size() > 2) throw std::invalid_argument("sweep supports at most two axes");
    for (const auto& a : axes) {
      if (!sweepable_fields().count(a.name))
        throw std::invalid_argument("axis \"" + a.name + "\" is not a sweepable model field");
      if (a.count < 1) throw std::invalid_argument("axis count must be >= 1");
      if (a.count > 1 && !(a.max > a.min))
        throw std::invalid_argument("axis \"" + a.name + "\" needs max > min");
    }
    if (observables.empty()) throw std::invalid_argument("no observables requested");
    for (const auto& o : observables) {
      if (!known_observables().count(o))
        throw std::invalid_argument("unknown observable \"" + o + "\"");
      if (o == "ee" && !many_body)
        throw std::invalid_argument("observable \"ee\" requires a many-body sweep");
    }
    if (n_phi_samples < 1) throw std::invalid_argument("n_phi_samples must be >= 1");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (n_theta < 64) throw std::invalid_argument("n_theta must be >= 64");
  }

  int n_grid() const {
    int n = 1;
    for (const auto& a : axes) n *= a.count;
    return n;
  }

  // grid index -> per-axis indices (axis 0 fastest)
  std::vector<int> grid_coords(int gi) const {
    std::vector<int> c(axes.size(), 0);
    for (std::size_t a = 0; a < axes.size(); ++a) {
      c[a] = gi % axes[a].count;
      gi /= axes[a].count;
    }
    return c;
  }

  ModelParams params_at(int gi) const {
    ModelParams p = base;
    const auto c = grid_coords(gi);
    for (std::size_t a = 0; a < axes.size(); ++a) set_field(p, axes[a].name, axes[a].value(c[a]));
    return p;
  }

  // phi stream per (grid point, sample); a single-sample sweep keeps the base
  // phi so it reduces to a direct evaluation
  double phi_for(int gi, int k) const {
    if (n_phi_samples == 1) return base.phi;
    return 2.0 * M_PI * counter_uniform(master_seed, static_cast<std::uint64_t>(gi),
                                        static_cast<std::uint64_t>(k));
  }

  nlohmann::json to_json() const {
    nlohmann::json ja = nlohmann::json::array();
    for (const auto& a : axes)
      ja.push_back({{"name", a.name}, {"min", a.min}, {"max", a.max}, {"count", a.count}});
    return nlohmann::json{{"model", nhaah::to_json(base)},
                          {"many_body", many_body},
                          {"axes", ja},
                          {"observables", observables},
                          {"n_phi_samples", n_phi_samples},
                          {"master_seed", master_seed},
                          {"n_theta", n_theta}};
  }

  // cache key; worker count deliberately excluded so results and cache hits
  // are independent of parallelism
  std::string hash() const { return hash_hex(canonical_hash(to_json())); }
};

inline SweepSpec sweep_from_json(const nlohmann::json& j) {
  SweepSpec s;
  if (j.contains("model")) s.base = params_from_json(j.at("model"));
  s.many_body = j.value("many_body", false);
  if (j.contains("axes"))
    for (const auto& ja : j.at("axes"))
      s.axes.push_back({ja.at("name").get<std::string>(), ja.value("min", 0.0),
                        ja.value("max", 0.0), ja.value("count", 1)});
  if (j.contains("observables"))
    s.observables = j.at("observables").get<std::vector<std::string>>();
  s.n_phi_samples = j.value("n_phi_samples", 1);
  s.master_seed = j.value("master_seed", std::uint64_t{1});
  s.workers = j.value("workers", 1);
  s.n_theta = j.value("n_theta", winding_default_n_theta);
  return s;
}

// --- result table ----------------------------------------------------------------

struct JobResult {
  bool ok = false;
  bool from_cache = false;
  double phi = 0.0;
  std::map<std::string, double> values;  // NaN marks an indeterminate winding
  std::string error;
};

struct ResultTable {
  SweepSpec spec;
  std::vector<JobResult> rows;  // row = gi * n_phi_samples + k
  std::size_t n_diagonalizations = 0;
  std::size_t cache_hits = 0;
  std::size_t failures = 0;
  std::size_t indeterminate = 0;

  const JobResult& row(int gi, int k) const {
    return rows[static_cast<std::size_t>(gi) * spec.n_phi_samples + static_cast<std::size_t>(k)];
  }

  // sample mean over ok rows, skipping NaN entries; deterministic k-ordered sum
  double averaged(int gi, const std::string& column, std::size_t* n_used = nullptr) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (int k = 0; k < spec.n_phi_samples; ++k) {
      const auto& r = row(gi, k);
      if (!r.ok) continue;
      const auto it = r.values.find(column);
      if (it == r.values.end() || std::isnan(it->second)) continue;
      sum += it->second;
      ++n;
    }
    if (n_used) *n_used = n;
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  }
};

namespace detail {

inline bool needs_vectors(const std::vector<std::string>& obs) {
  for (const auto& o : obs)
    if (o == "fd" || o == "fd_mid6" || o == "ee") return true;
  return false;
}

inline double headline_winding(const ModelParams& p, const FockBasis* basis, WindingFamily nu,
                               const Spectrum& s, int n_theta, std::size_t& indeterminate) {
  const auto family = basis ? many_body_family(p, *basis, nu) : single_particle_family(p, nu);
  double best = std::numeric_limits<double>::quiet_NaN();
  bool any = false;
  for (Complex eb : select_base_energies(s)) {
    const WindingResult wr = winding_number(family, nu, eb, n_theta);
    if (wr.indeterminate) {
      ++indeterminate;
      continue;
    }
    const double aw = std::abs(wr.w);
    if (!any || aw > best) best = aw;
    any = true;
  }
  return best;
}

inline double base_zero_winding(const ModelParams& p, const FockBasis* basis, WindingFamily nu,
                                int n_theta, std::size_t& indeterminate) {
  const auto family = basis ? many_body_family(p, *basis, nu) : single_particle_family(p, nu);
  const WindingResult wr = winding_number(family, nu, Complex{0.0, 0.0}, n_theta);
  if (wr.indeterminate) {
    ++indeterminate;
    return std::numeric_limits<double>::quiet_NaN();
  }
  return wr.w;
}

}  // namespace detail

// Evaluate every requested observable for one parameter record.
inline JobResult evaluate_point(const SweepSpec& spec, const ModelParams& p, const FockBasis* basis,
                                std::size_t& indeterminate) {
  JobResult r;
  r.phi = p.phi;
  const Matrix H = basis ? build_many_body(p, *basis) : build_single_particle(p);
  const Spectrum s = eig(H, detail::needs_vectors(spec.observables));
  for (const auto& o : spec.observables) {
    double v = std::numeric_limits<double>::quiet_NaN();
    if (o == "fd") v = averaged_fd(s, FdSelection::all).averaged;
    else if (o == "fd_mid6") v = averaged_fd(s, FdSelection::mid_sixth_real).averaged;
    else if (o == "f_im") v = complex_fraction(s);
    else if (o == "eps") v = max_imag(s);
    else if (o == "ee") v = averaged_ee(s, *basis);
    else if (o == "winding_g")
      v = detail::headline_winding(p, basis, WindingFamily::g, s, spec.n_theta, indeterminate);
    else if (o == "winding_h")
      v = detail::headline_winding(p, basis, WindingFamily::h, s, spec.n_theta, indeterminate);
    else if (o == "winding_g0")
      v = detail::base_zero_winding(p, basis, WindingFamily::g, spec.n_theta, indeterminate);
    else if (o == "winding_h0")
      v = detail::base_zero_winding(p, basis, WindingFamily::h, spec.n_theta, indeterminate);
    r.values[o] = v;
  }
  r.ok = true;
  return r;
}

// Grid x sample sweep with an optional on-disk cache.  Jobs are independent
// work units pulled by a small worker pool; every row lands in its
// preassigned slot so the table is identical for any worker count.  Cache
// files are written atomically (tmp + rename), one per (spec hash, grid
// index, sample).
inline ResultTable run_sweep(const SweepSpec& spec,
                             const std::optional<std::filesystem::path>& cache_root = {}) {
  spec.validate();
  ResultTable table;
  table.spec = spec;
  const int n_grid = spec.n_grid();
  const int n_samples = spec.n_phi_samples;
  table.rows.resize(static_cast<std::size_t>(n_grid) * n_samples);

  std::optional<FockBasis> basis;
  if (spec.many_body) basis = build_fock_basis(spec.base.L, spec.base.N);

  std::filesystem::path cache_dir;
  if (cache_root) {
    cache_dir = *cache_root / spec.hash();
    std::filesystem::create_directories(cache_dir);
  }
  auto cache_file = [&](int gi, int k) {
    return cache_dir / ("g" + std::to_string(gi) + "_s" + std::to_string(k) + ".json");
  };

  std::atomic<int> next{0};
  std::atomic<std::size_t> diags{0}, hits{0}, fails{0}, indet{0};
  const int total_jobs = n_grid * n_samples;

  auto worker = [&] {
    for (;;) {
      const int job = next.fetch_add(1);
      if (job >= total_jobs) return;
      const int gi = job / n_samples;
      const int k = job % n_samples;
      JobResult& slot = table.rows[static_cast<std::size_t>(job)];

      if (cache_root) {
        std::ifstream in(cache_file(gi, k));
        if (in) {
          try {
            const auto j = nlohmann::json::parse(in);
            JobResult r;
            r.ok = j.at("ok").get<bool>();
            r.phi = j.at("phi").get<double>();
            r.error = j.value("error", "");
            bool complete = true;
            for (const auto& o : spec.observables) {
              if (!j.at("values").contains(o)) {
                complete = false;
                break;
              }
              const auto& v = j.at("values").at(o);
              r.values[o] = v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : v.get<double>();
            }
            if (complete && r.ok) {
              r.from_cache = true;
              slot = r;
              ++hits;
              continue;
            }
          } catch (const std::exception&) {
            // unreadable cache entry: fall through and recompute
          }
        }
      }

      const ModelParams p = with_phase_shift(spec.params_at(gi), spec.phi_for(gi, k));
      std::size_t local_indet = 0;
      try {
        slot = evaluate_point(spec, p, basis ? &*basis : nullptr, local_indet);
        ++diags;
      } catch (const std::exception& e) {
        slot.ok = false;
        slot.phi = p.phi;
        slot.error = std::string(e.what()) + " [params " + params_hash(p) + "]";
        ++fails;
      }
      indet += local_indet;

      if (cache_root) {
        nlohmann::json jv;
        for (const auto& [kname, v] : slot.values) {
          if (std::isnan(v)) jv[kname] = nullptr;
          else jv[kname] = v;
        }
        const nlohmann::json j{
            {"ok", slot.ok}, {"phi", slot.phi}, {"error", slot.error}, {"values", jv}};
        const auto tmp = cache_file(gi, k).string() + ".tmp";
        {
          std::ofstream out(tmp);
          out << j.dump();
        }
        std::filesystem::rename(tmp, cache_file(gi, k));
      }
    }
  };

  if (spec.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < spec.workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  table.n_diagonalizations = diags;
  table.cache_hits = hits;
  table.failures = fails;
  table.indeterminate = indet;
  return table;
}

// Mean winding per grid point over the phi samples; indeterminate samples are
// excluded from the mean and surfaced through the table counters.
inline std::vector<double> averaged_winding(const ResultTable& table, const std::string& column) {
  std::vector<double> out;
  for (int gi = 0; gi < table.spec.n_grid(); ++gi) out.push_back(table.averaged(gi, column));
  return out;
}

// --- transition detection ---------------------------------------------------------

// x where y crosses the midpoint of its asymptotic plateaus (outer 20% of
// points on each side), linearly interpolated.
inline double transition_half_crossing(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 5)
    throw std::invalid_argument("transition_half_crossing: need >= 5 points");
  const std::size_t n = x.size();
  const std::size_t wing = std::max<std::size_t>(1, n / 5);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < wing; ++i) lo += y[i];
  for (std::size_t i = n - wing; i < n; ++i) hi += y[i];
  lo /= static_cast<double>(wing);
  hi /= static_cast<double>(wing);
  if (lo == hi)
    throw std::invalid_argument("transition_half_crossing: flat plateaus at " + std::to_string(lo));
  const double mid = 0.5 * (lo + hi);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = y[i] - mid, b = y[i + 1] - mid;
    if (a == 0.0) return x[i];
    if (a * b < 0.0) return x[i] + (x[i + 1] - x[i]) * a / (a - b);
  }
  throw std::invalid_argument("transition_half_crossing: no crossing; plateaus " +
                              std::to_string(lo) + " / " + std::to_string(hi));
}

// x where two curves for different sizes cross, linearly interpolated; both
// sampled on the same grid.
inline double transition_size_crossing(const std::vector<double>& x, const std::vector<double>& y1,
                                       const std::vector<double>& y2) {
  if (x.size() != y1.size() || x.size() != y2.size() || x.size() < 2)
    throw std::invalid_argument("transition_size_crossing: mismatched curves");
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = y1[i] - y2[i], b = y1[i + 1] - y2[i + 1];
    if (a == 0.0) return x[i];
    if (a * b < 0.0) return x[i] + (x[i + 1] - x[i]) * a / (a - b);
  }
  throw std::invalid_argument("transition_size_crossing: curves do not cross in range");
}

// --- finite-size scaling collapse ---------------------------------------------------

struct Curve {
  std::vector<double> x, y;
};

struct CollapseFit {
  double x_c = 0.0;
  double nu = 0.0;
  double cost = 0.0;
  std::vector<std::array<double, 3>> search_trace;  // (x_c, nu, cost)
};

// Quality of collapse: curves are mapped x -> (x - x_c) L^(1/nu), interpolated
// onto the overlap of their scaled supports, and scored by the mean squared
// deviation from the pointwise mean curve, normalized by the variance of that
// mean curve over the overlap.  The normalization closes the small-nu escape
// where the rescaling zooms every curve onto the crossing point and a raw
// deviation would vanish for free.
inline double collapse_cost(const std::map<int, Curve>& curves, double x_c, double nu) {
  constexpr int n_probe = 64;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::vector<double>, const Curve*>> scaled;
  for (const auto& [L, c] : curves) {
    const double f = std::pow(static_cast<double>(L), 1.0 / nu);
    std::vector<double> xs(c.x.size());
    for (std::size_t i = 0; i < c.x.size(); ++i) xs[i] = (c.x[i] - x_c) * f;
    lo = std::max(lo, xs.front());
    hi = std::min(hi, xs.back());
    scaled.emplace_back(std::move(xs), &c);
  }
  if (!(hi > lo)) return std::numeric_limits<double>::infinity();

  std::vector<double> mean(n_probe, 0.0);
  std::vector<std::vector<double>> vals(scaled.size(), std::vector<double>(n_probe));
  for (std::size_t ci = 0; ci < scaled.size(); ++ci)
    for (int m = 0; m < n_probe; ++m) {
      const double xq = lo + (hi - lo) * static_cast<double>(m) / (n_probe - 1);
      vals[ci][static_cast<std::size_t>(m)] =
          interp_linear(scaled[ci].first, scaled[ci].second->y, xq);
      mean[static_cast<std::size_t>(m)] += vals[ci][static_cast<std::size_t>(m)];
    }
  for (double& v : mean) v /= static_cast<double>(scaled.size());
  double grand = 0.0;
  for (double v : mean) grand += v;
  grand /= n_probe;
  double mean_var = 0.0;
  for (double v : mean) mean_var += (v - grand) * (v - grand);
  mean_var /= n_probe;
  if (mean_var <= 0.0) return std::numeric_limits<double>::infinity();
  double cost = 0.0;
  for (const auto& v : vals)
    for (int m = 0; m < n_probe; ++m) {
      const double d = v[static_cast<std::size_t>(m)] - mean[static_cast<std::size_t>(m)];
      cost += d * d;
    }
  return cost / static_cast<double>(scaled.size() * n_probe) / mean_var;
}

// Lowest collapse cost over a rectangle of (x_c, nu), probed on a fixed grid;
// used to ask whether a low-cost basin reaches a given parameter region.
struct CollapseProbe {
  double x_c = 0.0, nu = 0.0, cost = std::numeric_limits<double>::infinity();
};

inline CollapseProbe collapse_box_minimum(const std::map<int, Curve>& curves,
                                          std::pair<double, double> xc_box,
                                          std::pair<double, double> nu_box, int n = 41) {
  CollapseProbe best;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double xc = xc_box.first + (xc_box.second - xc_box.first) * i / (n - 1);
      const double nu = nu_box.first + (nu_box.second - nu_box.first) * j / (n - 1);
      const double c = collapse_cost(curves, xc, nu);
      if (c < best.cost) best = {xc, nu, c};
    }
  return best;
}

// Coarse grid search over (x_c, nu) followed by derivative-free refinement;
// the reported minimum dominates every evaluated trace point.
inline CollapseFit scaling_collapse(const std::map<int, Curve>& curves,
                                    std::pair<double, double> xc_range,
                                    std::pair<double, double> nu_range) {
  if (curves.size() < 2)
    throw std::invalid_argument("scaling_collapse: need curves for >= 2 system sizes");
  for (const auto& [L, c] : curves)
    if (c.x.size() != c.y.size() || c.x.size() < 3)
      throw std::invalid_argument("scaling_collapse: curve for L=" + std::to_string(L) +
                                  " too short");

  CollapseFit fit;
  fit.cost = std::numeric_limits<double>::infinity();
  auto probe = [&](double xc, double nu) {
    const double c = collapse_cost(curves, xc, nu);
    if (std::isfinite(c)) {
      fit.search_trace.push_back({xc, nu, c});
      if (c < fit.cost) {
        fit.cost = c;
        fit.x_c = xc;
        fit.nu = nu;
      }
    }
    return c;
  };

  constexpr int n_coarse = 25;
  for (int i = 0; i < n_coarse; ++i)
    for (int j = 0; j < n_coarse; ++j)
      probe(xc_range.first +
                (xc_range.second - xc_range.first) * static_cast<double>(i) / (n_coarse - 1),
            nu_range.first +
                (nu_range.second - nu_range.first) * static_cast<double>(j) / (n_coarse - 1));
  if (!std::isfinite(fit.cost)) {
    std::string sizes;
    for (const auto& [L, c] : curves) sizes += (sizes.empty() ? "" : ", ") + std::to_string(L);
    throw std::invalid_argument(
        "scaling_collapse: scaled supports never overlap for sizes {" + sizes + "}");
  }

  const double step_x = (xc_range.second - xc_range.first) / (n_coarse - 1);
  const double step_n = (nu_range.second - nu_range.first) / (n_coarse - 1);
  nelder_mead_2d(
      [&](double xc, double nu) {
        if (xc < xc_range.first || xc > xc_range.second || nu < nu_range.first ||
            nu > nu_range.second)
          return std::numeric_limits<double>::infinity();
        return probe(xc, nu);
      },
      {fit.x_c, fit.nu}, {step_x, step_n}, 1e-12, 400);
  return fit;
}

}  // namespace nhaah
