#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhaah/fock.hpp"
#include "nhaah/model.hpp"

namespace nhaah {

struct EigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Complex eigenvalues and unit-norm right eigenvectors, sorted by real part
// (ties by imaginary part).  `residual` is max_n ||H v_n - E_n v_n||_inf;
// the result is flagged degraded when it exceeds 1e-10 * ||H||_inf.
struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd right_vectors;  // 0x0 for a values-only solve
  double residual = 0.0;
  bool degraded = false;

  bool has_vectors() const { return right_vectors.cols() > 0; }
  Eigen::Index dim() const { return eigenvalues.size(); }
};

inline constexpr int eig_default_max_dim = 4096;

namespace detail {

inline std::vector<Eigen::Index> sort_order(const Eigen::VectorXcd& ev) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(ev.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
    return ev[a].imag() < ev[b].imag();
  });
  return idx;
}

inline double inf_norm(const Matrix& H) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < H.rows(); ++i) best = std::max(best, H.row(i).cwiseAbs().sum());
  return best;
}

}  // namespace detail

// Dense nonsymmetric eigensolve.  Deterministic for identical input bits; a
// numerically real matrix is routed through the real Schur path so that real
// eigenvalues come out exactly real and complex ones in exact conjugate pairs.
inline Spectrum eig(const Matrix& H, bool compute_vectors = true,
                    int max_dim = eig_default_max_dim) {
  if (H.rows() != H.cols()) throw EigError("eig: matrix not square");
  if (H.rows() > max_dim)
    throw EigError("eig: dim " + std::to_string(H.rows()) + " exceeds budget " +
                   std::to_string(max_dim));
  if (!H.allFinite()) throw EigError("eig: non-finite matrix entries");

  Spectrum s;
  Eigen::VectorXcd ev;
  Eigen::MatrixXcd vec;
  const bool is_real = H.imag().cwiseAbs().maxCoeff() == 0.0;
  if (is_real) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(H.real(), compute_vectors);
    if (solver.info() != Eigen::Success) throw EigError("eig: real Schur iteration failed");
    ev = solver.eigenvalues();
    if (compute_vectors) vec = solver.eigenvectors();
  } else {
    Eigen::ComplexEigenSolver<Matrix> solver(H, compute_vectors);
    if (solver.info() != Eigen::Success) throw EigError("eig: complex Schur iteration failed");
    ev = solver.eigenvalues();
    if (compute_vectors) vec = solver.eigenvectors();
  }

  const auto order = detail::sort_order(ev);
  const Eigen::Index D = ev.size();
  s.eigenvalues.resize(D);
  for (Eigen::Index i = 0; i < D; ++i) s.eigenvalues[i] = ev[order[static_cast<std::size_t>(i)]];
  if (compute_vectors) {
    s.right_vectors.resize(D, D);
    for (Eigen::Index i = 0; i < D; ++i) {
      s.right_vectors.col(i) = vec.col(order[static_cast<std::size_t>(i)]);
      s.right_vectors.col(i).normalize();
    }
    Eigen::MatrixXcd R;
    if (is_real) {
      const Eigen::MatrixXd& Hr = H.real();
      R = (Hr * s.right_vectors.real()).cast<Complex>() +
          Complex{0.0, 1.0} * (Hr * s.right_vectors.imag());
    } else {
      R = H * s.right_vectors;
    }
    R.noalias() -= s.right_vectors * s.eigenvalues.asDiagonal();
    s.residual = R.cwiseAbs().maxCoeff();
    s.degraded = s.residual >= 1e-10 * detail::inf_norm(H);
  }
  return s;
}

inline Spectrum eig_values(const Matrix& H, int max_dim = eig_default_max_dim) {
  return eig(H, false, max_dim);
}

// f_Im: fraction of eigenvalues whose |Im E| exceeds the numerical cutoff.
inline double complex_fraction(const Spectrum& s, double cutoff = 1e-13) {
  if (s.dim() == 0) throw std::invalid_argument("complex_fraction: empty spectrum");
  Eigen::Index n = 0;
  for (Eigen::Index i = 0; i < s.dim(); ++i)
    if (std::abs(s.eigenvalues[i].imag()) > cutoff) ++n;
  return static_cast<double>(n) / static_cast<double>(s.dim());
}

// epsilon: largest |Im E| over the spectrum.
inline double max_imag(const Spectrum& s) {
  if (s.dim() == 0) throw std::invalid_argument("max_imag: empty spectrum");
  return s.eigenvalues.imag().cwiseAbs().maxCoeff();
}

struct SingularDetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LogDet {
  double log_abs = 0.0;
  double arg = 0.0;  // principal value in (-pi, pi]
};

// log det(H - E_B) via LU with partial pivoting, accumulating log-magnitudes
// and phases of the diagonal factors so determinants at D ~ 3432 cannot
// overflow.
inline LogDet log_det_phase(const Matrix& H, Complex E_B) {
  Matrix A = H;
  A.diagonal().array() -= E_B;
  Eigen::PartialPivLU<Matrix> lu(A);
  double log_abs = 0.0, arg = 0.0;
  const auto& diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double m = std::abs(diag[i]);
    if (m == 0.0 || !std::isfinite(m))
      throw SingularDetError("det(H - E_B) singular to working precision; perturb E_B");
    log_abs += std::log(m);
    arg += std::arg(diag[i]);
  }
  if (lu.permutationP().determinant() < 0) arg += M_PI;
  return {log_abs, wrap_to_pi(arg)};
}

enum class WindingFamily { g, h };

struct WindingResult {
  WindingFamily nu = WindingFamily::g;
  Complex E_B = 0.0;
  int w = 0;
  double raw_phase = 0.0;  // accumulated argument / 2pi before rounding
  int n_theta = 0;         // determinant evaluations actually used
  bool indeterminate = false;
};

inline constexpr int winding_default_n_theta = 256;
inline constexpr int winding_max_evaluations = 1 << 14;

// Spectral winding number: the loop det[H(theta) - E_B] is sampled on a
// uniform grid over [0, 2pi], phase increments are unwrapped, and any segment
// whose increment exceeds pi/2 is bisected until resolved or the evaluation
// budget runs out.  The loop is closed back onto the theta = 0 matrix, so the
// accumulated phase is an exact multiple of 2pi up to floating noise; a
// result is indeterminate when refinement stalls, the closure jump stays
// large, or the total fails the integrality check (E_B too close to a trail).
inline WindingResult winding_number(const std::function<Matrix(double)>& family,
                                    WindingFamily nu, Complex E_B,
                                    int n_theta = winding_default_n_theta) {
  if (n_theta < 64) throw std::invalid_argument("winding_number: n_theta must be >= 64");
  WindingResult res;
  res.nu = nu;
  res.E_B = E_B;

  int evals = 0;
  bool stalled = false;
  auto arg_at = [&](double theta) {
    ++evals;
    return log_det_phase(family(theta), E_B).arg;
  };

  double total = 0.0;
  std::function<void(double, double, double, double)> accumulate =
      [&](double ta, double tb, double aa, double ab) {
        const double delta = wrap_to_pi(ab - aa);
        if (std::abs(delta) <= M_PI_2) {
          total += delta;
          return;
        }
        if (evals >= winding_max_evaluations) {
          stalled = true;
          total += delta;
          return;
        }
        const double tm = 0.5 * (ta + tb);
        const double am = arg_at(tm);
        accumulate(ta, tm, aa, am);
        accumulate(tm, tb, am, ab);
      };

  try {
    std::vector<double> thetas(static_cast<std::size_t>(n_theta) + 1);
    std::vector<double> args(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      thetas[k] = 2.0 * M_PI * static_cast<double>(k) / n_theta;
      args[k] = arg_at(thetas[k]);
    }
    for (std::size_t k = 0; k + 1 < thetas.size(); ++k)
      accumulate(thetas[k], thetas[k + 1], args[k], args[k + 1]);
    // close the polygon onto the theta = 0 endpoint; for the g family the
    // determinant is gauge-exactly periodic, for the h family the mismatch is
    // the finite-size non-closure and must stay small
    const double closure = wrap_to_pi(args.front() - args.back());
    if (std::abs(closure) > M_PI_2) stalled = true;
    total += closure;
  } catch (const SingularDetError&) {
    res.indeterminate = true;
  }

  res.raw_phase = total / (2.0 * M_PI);
  res.w = static_cast<int>(std::lround(res.raw_phase));
  res.n_theta = evals;
  if (stalled || std::abs(res.raw_phase - res.w) >= 1e-3) res.indeterminate = true;
  return res;
}

struct BaseEnergyOptions {
  double cluster_factor = 5.0;      // single-linkage threshold, x median NN spacing
  double min_imag_spread = 1e-4;    // relative to the spectral radius; rejects the
                                    // near-real dust a finite irrational-alpha
                                    // lattice leaves at 1e-5 and below
  std::size_t max_candidates = 6;   // largest clusters kept (ranked by population)
};

// Candidate base energies for the winding headline: eigenvalues are grouped
// by single-linkage clustering at 5x the median nearest-neighbor spacing and
// each cluster centroid with nonzero imaginary spread is emitted, largest
// clusters first.  E_B = 0 (the many-body convention) is always appended.
// Quasiperiodic spectra are Cantor-like and can splinter into hundreds of
// near-real fragments, hence the spread floor and the population cap.
inline std::vector<Complex> select_base_energies(const Spectrum& s,
                                                 const BaseEnergyOptions& opt = {}) {
  const Eigen::Index D = s.dim();
  if (D == 0) throw std::invalid_argument("select_base_energies: empty spectrum");
  std::vector<Complex> out;
  if (D >= 2) {
    std::vector<double> nn(static_cast<std::size_t>(D),
                           std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index j = i + 1; j < D; ++j) {
        const double d = std::abs(s.eigenvalues[i] - s.eigenvalues[j]);
        nn[static_cast<std::size_t>(i)] = std::min(nn[static_cast<std::size_t>(i)], d);
        nn[static_cast<std::size_t>(j)] = std::min(nn[static_cast<std::size_t>(j)], d);
      }
    const double threshold = opt.cluster_factor * median(nn);

    // single linkage = connected components of the <threshold proximity graph;
    // eigenvalues are sorted by real part, so linking each point to its
    // in-threshold successors within the sorted window covers all edges
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(D));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<Eigen::Index(Eigen::Index)> find = [&](Eigen::Index x) {
      while (parent[static_cast<std::size_t>(x)] != x) {
        parent[static_cast<std::size_t>(x)] =
            parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        x = parent[static_cast<std::size_t>(x)];
      }
      return x;
    };
    for (Eigen::Index i = 0; i < D; ++i)
      for (Eigen::Index j = i + 1; j < D; ++j) {
        if (s.eigenvalues[j].real() - s.eigenvalues[i].real() >= threshold) break;
        if (std::abs(s.eigenvalues[i] - s.eigenvalues[j]) < threshold)
          parent[static_cast<std::size_t>(find(i))] = find(j);
      }

    struct Cluster {
      Complex sum = 0.0;
      double im_lo = std::numeric_limits<double>::infinity();
      double im_hi = -std::numeric_limits<double>::infinity();
      Eigen::Index count = 0;
    };
    std::map<Eigen::Index, Cluster> clusters;
    for (Eigen::Index i = 0; i < D; ++i) {
      Cluster& c = clusters[find(i)];
      c.sum += s.eigenvalues[i];
      c.im_lo = std::min(c.im_lo, s.eigenvalues[i].imag());
      c.im_hi = std::max(c.im_hi, s.eigenvalues[i].imag());
      ++c.count;
    }
    const double scale = std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
    std::vector<std::pair<Eigen::Index, Complex>> ranked;
    for (const auto& [root, c] : clusters)
      if (c.im_hi - c.im_lo > opt.min_imag_spread * scale)
        ranked.emplace_back(c.count, c.sum / static_cast<double>(c.count));
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      if (a.second.real() != b.second.real()) return a.second.real() < b.second.real();
      return a.second.imag() < b.second.imag();
    });
    if (ranked.size() > opt.max_candidates) ranked.resize(opt.max_candidates);
    for (const auto& [count, centroid] : ranked) {
      bool dup = false;
      for (Complex seen : out)
        if (std::abs(seen - centroid) < 1e-9 * scale) dup = true;
      if (!dup && std::abs(centroid) >= 1e-9 * scale) out.push_back(centroid);
    }
  }
  out.push_back(Complex{0.0, 0.0});
  return out;
}

// Normalized determinant loop det H(theta) / |det H(0)| on an inclusive
// [0, 2pi] grid; the winding is readable as encirclements of the origin.
inline std::vector<Complex> det_trajectory(const std::function<Matrix(double)>& family,
                                           int n_theta = winding_default_n_theta) {
  if (n_theta < 2) throw std::invalid_argument("det_trajectory: n_theta must be >= 2");
  LogDet at0;
  try {
    at0 = log_det_phase(family(0.0), Complex{0.0, 0.0});
  } catch (const SingularDetError&) {
    throw std::invalid_argument("det_trajectory: det H(0) = 0");
  }
  std::vector<Complex> loop;
  loop.reserve(static_cast<std::size_t>(n_theta) + 1);
  for (int k = 0; k <= n_theta; ++k) {
    const double theta = 2.0 * M_PI * static_cast<double>(k) / n_theta;
    const LogDet ld = log_det_phase(family(theta), Complex{0.0, 0.0});
    loop.push_back(std::exp(Complex{ld.log_abs - at0.log_abs, ld.arg}));
  }
  return loop;
}

// ---- winding families over the model ----------------------------------------

inline std::function<Matrix(double)> single_particle_family(const ModelParams& p,
                                                            WindingFamily nu) {
  return [p, nu](double theta) {
    ModelParams q = p;
    (nu == WindingFamily::g ? q.theta_g : q.theta_h) = theta;
    return build_single_particle(q);
  };
}

inline std::function<Matrix(double)> many_body_family(const ModelParams& p, const FockBasis& basis,
                                                      WindingFamily nu) {
  return [p, &basis, nu](double theta) {
    ModelParams q = p;
    (nu == WindingFamily::g ? q.theta_g : q.theta_h) = theta;
    return build_many_body(q, basis);
  };
}

}  // namespace nhaah
