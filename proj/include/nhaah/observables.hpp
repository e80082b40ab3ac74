#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "nhaah/fock.hpp"
#include "nhaah/numerics.hpp"
#include "nhaah/spectral.hpp"

namespace nhaah {

// eta = -ln(sum_j |psi_j|^4) / ln D for a normalized state; 1 for a uniform
// state, 0 for a single-site state.
inline double fractal_dimension(const Eigen::VectorXcd& state, std::size_t hilbert_dim) {
  if (hilbert_dim < 2) throw std::invalid_argument("fractal_dimension: need dim >= 2");
  const double norm2 = state.squaredNorm();
  if (norm2 == 0.0) throw std::invalid_argument("fractal_dimension: zero vector");
  double ipr = 0.0;
  for (Eigen::Index j = 0; j < state.size(); ++j) {
    const double a2 = std::norm(state[j]);
    ipr += a2 * a2;
  }
  return -std::log(ipr) / std::log(static_cast<double>(hilbert_dim));
}

enum class FdSelection { all, mid_sixth_real, center_tenth_complex };

struct FDReport {
  std::vector<double> per_state;  // over the selected states, selection order
  double averaged = 0.0;
  FdSelection selection = FdSelection::all;
};

namespace detail {

// Indices of the `count` eigenvalues closest to `anchor` under `dist`.
template <typename DistFn>
std::vector<Eigen::Index> nearest_indices(const Spectrum& s, std::size_t count, DistFn dist) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(s.dim()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b); });
  idx.resize(count);
  return idx;
}

// floor(D * fraction), clamped to [1, D]; a selection that would be empty
// falls back to the whole spectrum (small-D rule).
inline std::size_t selection_count(std::size_t D, double fraction) {
  auto c = static_cast<std::size_t>(static_cast<double>(D) * fraction);
  if (c == 0) c = D;
  return std::min(c, D);
}

inline std::vector<Eigen::Index> select_states(const Spectrum& s, FdSelection sel, double fraction) {
  const auto D = static_cast<std::size_t>(s.dim());
  std::vector<Eigen::Index> idx;
  switch (sel) {
    case FdSelection::all: {
      idx.resize(D);
      std::iota(idx.begin(), idx.end(), 0);
      break;
    }
    case FdSelection::mid_sixth_real: {
      std::vector<double> re(D);
      for (std::size_t i = 0; i < D; ++i) re[i] = s.eigenvalues[static_cast<Eigen::Index>(i)].real();
      const double med = median(re);
      idx = nearest_indices(s, selection_count(D, fraction),
                            [&](Eigen::Index a) { return std::abs(s.eigenvalues[a].real() - med); });
      break;
    }
    case FdSelection::center_tenth_complex: {
      const Complex centroid = s.eigenvalues.mean();
      idx = nearest_indices(s, selection_count(D, fraction),
                            [&](Eigen::Index a) { return std::abs(s.eigenvalues[a] - centroid); });
      break;
    }
  }
  return idx;
}

}  // namespace detail

// Averaged fractal dimension over a spectral selection: all states, the
// mid-1/6 of the real part, or the center-1/10 of the complex plane.
inline FDReport averaged_fd(const Spectrum& s, FdSelection sel = FdSelection::all) {
  if (!s.has_vectors()) throw std::invalid_argument("averaged_fd: spectrum lacks eigenvectors");
  const double fraction = sel == FdSelection::mid_sixth_real ? 1.0 / 6.0 : 1.0 / 10.0;
  const auto idx = detail::select_states(s, sel, fraction);
  FDReport r;
  r.selection = sel;
  r.per_state.reserve(idx.size());
  const auto D = static_cast<std::size_t>(s.dim());
  for (Eigen::Index i : idx) r.per_state.push_back(fractal_dimension(s.right_vectors.col(i), D));
  r.averaged = std::accumulate(r.per_state.begin(), r.per_state.end(), 0.0) /
               static_cast<double>(r.per_state.size());
  return r;
}

// |psi(j)|^2 per site/basis state, sums to 1 for a normalized state.
inline Eigen::VectorXd density_profile(const Eigen::VectorXcd& state) {
  return state.cwiseAbs2();
}

// Half-chain von Neumann entropy of a fixed-N Fock state.  Basis words are
// grouped by left-block occupation; within each left-particle-number sector
// the coefficient matrix is SVD'd and S = -sum sigma^2 ln sigma^2 over all
// sectors (0 ln 0 := 0).  Sites 0..cut-1 form the left block.
inline double entanglement_entropy(const Eigen::VectorXcd& state, const FockBasis& basis,
                                   int cut = -1) {
  if (cut < 0) cut = basis.L / 2;
  if (cut <= 0 || cut >= basis.L)
    throw std::invalid_argument("entanglement_entropy: cut outside (0, L)");
  if (static_cast<std::size_t>(state.size()) != basis.dim())
    throw std::invalid_argument("entanglement_entropy: state/basis size mismatch");

  const int n_right = basis.L - cut;

  double S = 0.0;
  const int k_lo = std::max(0, basis.N - n_right);
  const int k_hi = std::min(cut, basis.N);
  for (int k = k_lo; k <= k_hi; ++k) {
    // enumerate left words with k particles and right words with N-k
    std::vector<std::uint32_t> lwords, rwords;
    for (std::uint32_t w = 0; w < (std::uint32_t{1} << cut); ++w)
      if (std::popcount(w) == k) lwords.push_back(w);
    for (std::uint32_t w = 0; w < (std::uint32_t{1} << n_right); ++w)
      if (std::popcount(w) == basis.N - k) rwords.push_back(w);

    Eigen::MatrixXcd M(lwords.size(), rwords.size());
    for (std::size_t a = 0; a < lwords.size(); ++a)
      for (std::size_t b = 0; b < rwords.size(); ++b) {
        const std::uint32_t word = lwords[a] | (rwords[b] << cut);
        M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            state[static_cast<Eigen::Index>(basis.index_of(word))];
      }
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
      const double p = svd.singularValues()[i] * svd.singularValues()[i];
      if (p > 0.0) S -= p * std::log(p);
    }
  }
  return S;
}

// Mean half-chain EE per site over the eigenstates nearest the spectral
// centroid in the complex plane.
inline double averaged_ee(const Spectrum& s, const FockBasis& basis, double fraction = 0.1) {
  if (!s.has_vectors()) throw std::invalid_argument("averaged_ee: spectrum lacks eigenvectors");
  const auto D = static_cast<std::size_t>(s.dim());
  const Complex centroid = s.eigenvalues.mean();
  const auto idx = detail::nearest_indices(s, detail::selection_count(D, fraction),
                                           [&](Eigen::Index a) { return std::abs(s.eigenvalues[a] - centroid); });
  double sum = 0.0;
  for (Eigen::Index i : idx) sum += entanglement_entropy(s.right_vectors.col(i), basis);
  return sum / static_cast<double>(idx.size()) / static_cast<double>(basis.L);
}

// --- level statistics ---------------------------------------------------------

struct SpacingSample {
  std::vector<double> raw;         // s_n = min_m |E_n - E_m|
  std::vector<double> normalized;  // rescaled to unit mean
  double mean_raw = 0.0;
  std::size_t degenerate_count = 0;  // zero spacings retained, flagged here
};

// Nearest-level spacings in the complex plane.  Eigenvalues are swept in
// real-part order; for each one the scan stops once the |Re| gap alone
// exceeds its current best, which bounds the window.  The quadratic oracle
// in the tests checks this path.
inline SpacingSample nearest_spacings(const Eigen::VectorXcd& ev) {
  const Eigen::Index n = ev.size();
  if (n < 2) throw std::invalid_argument("nearest_spacings: need two or more eigenvalues");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() < ev[b].real();
    return ev[a].imag() < ev[b].imag();
  });
  SpacingSample out;
  out.raw.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < order.size(); ++i) {
    double& best = out.raw[static_cast<std::size_t>(order[i])];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (ev[order[j]].real() - ev[order[i]].real() >= best) break;
      best = std::min(best, std::abs(ev[order[i]] - ev[order[j]]));
    }
    for (std::size_t j = i; j-- > 0;) {
      if (ev[order[i]].real() - ev[order[j]].real() >= best) break;
      best = std::min(best, std::abs(ev[order[i]] - ev[order[j]]));
    }
  }
  out.degenerate_count = static_cast<std::size_t>(
      std::count(out.raw.begin(), out.raw.end(), 0.0));
  out.mean_raw = std::accumulate(out.raw.begin(), out.raw.end(), 0.0) /
                 static_cast<double>(out.raw.size());
  out.normalized.resize(out.raw.size());
  const double scale = out.mean_raw > 0.0 ? 1.0 / out.mean_raw : 0.0;
  for (std::size_t i = 0; i < out.raw.size(); ++i) out.normalized[i] = out.raw[i] * scale;
  return out;
}

// Pool spacing sets from several disorder samples: each sample is first
// rescaled to unit mean (its own spectral density), then the union is
// renormalized once more.
inline SpacingSample pool_spacings(const std::vector<SpacingSample>& samples) {
  SpacingSample out;
  for (const auto& s : samples) {
    out.raw.insert(out.raw.end(), s.normalized.begin(), s.normalized.end());
    out.degenerate_count += s.degenerate_count;
  }
  if (out.raw.empty()) throw std::invalid_argument("pool_spacings: nothing to pool");
  out.mean_raw = std::accumulate(out.raw.begin(), out.raw.end(), 0.0) /
                 static_cast<double>(out.raw.size());
  const double scale = out.mean_raw > 0.0 ? 1.0 / out.mean_raw : 0.0;
  out.normalized.resize(out.raw.size());
  for (std::size_t i = 0; i < out.raw.size(); ++i) out.normalized[i] = out.raw[i] * scale;
  return out;
}

// --- analytic spacing laws ----------------------------------------------------

inline constexpr int ginibre_default_truncation = 300;

// Nearest-spacing law of the complex Ginibre ensemble, evaluated at finite
// truncation N with log-domain accumulation:
//   p(s) = [prod_{n=1}^{N-1} e_n(s^2) e^{-s^2}] sum_{n=1}^{N-1} 2 s^(2n+1) / (n! e_n(s^2))
// where e_n(x) = sum_{m<=n} x^m / m!.
inline double ginibre_pdf_unscaled(double s, int n_trunc = ginibre_default_truncation) {
  if (n_trunc < 50) throw std::invalid_argument("ginibre_pdf: truncation below 50");
  if (s <= 0.0) return 0.0;
  const double x = s * s;
  double T = std::exp(-x);  // x^n/n! * e^-x, running term
  double Q = T;             // e_n(x) e^{-x}, running partial sum
  double log_prod = 0.0;
  double sum = 0.0;
  double log_nfact = 0.0;
  const double log_s = std::log(s);
  for (int n = 1; n < n_trunc; ++n) {
    T *= x / n;
    Q += T;
    log_nfact += std::log(static_cast<double>(n));
    log_prod += std::log(Q);
    const double log_en = x + std::log(Q);
    sum += std::exp(std::log(2.0) + (2.0 * n + 1.0) * log_s - log_nfact - log_en);
  }
  return std::exp(log_prod) * sum;
}

// c = int_0^inf s p(s) ds; the unit-mean comparison form is c p(c s).
inline double ginibre_c(int n_trunc = ginibre_default_truncation) {
  return integrate([n_trunc](double s) { return s * ginibre_pdf_unscaled(s, n_trunc); }, 0.0,
                   10.0, 1e-11);
}

enum class RefKind { ginibre_complex, poisson_real, poisson_complex, sub_wigner };

inline std::string to_string(RefKind k) {
  switch (k) {
    case RefKind::ginibre_complex: return "ginibre_complex";
    case RefKind::poisson_real: return "poisson_real";
    case RefKind::poisson_complex: return "poisson_complex";
    case RefKind::sub_wigner: return "sub_wigner";
  }
  return "?";
}

// Analytic nearest-spacing reference law with a cached CDF table for KS use.
// ginibre_complex is the unit-mean rescaled form c p(c s); sub_wigner is
// a s^b exp(-c s^2) with a fixed by normalization.
class ReferenceDistribution {
 public:
  static ReferenceDistribution ginibre(int n_trunc = ginibre_default_truncation) {
    ReferenceDistribution r;
    r.kind_ = RefKind::ginibre_complex;
    r.n_trunc_ = n_trunc;
    r.gin_c_ = ginibre_c(n_trunc);
    r.build_cdf();
    return r;
  }
  static ReferenceDistribution poisson_real() {
    ReferenceDistribution r;
    r.kind_ = RefKind::poisson_real;
    r.build_cdf();
    return r;
  }
  static ReferenceDistribution poisson_complex() {
    ReferenceDistribution r;
    r.kind_ = RefKind::poisson_complex;
    r.build_cdf();
    return r;
  }
  static ReferenceDistribution sub_wigner(double b, double c) {
    if (!(c > 0.0) || !(b > -1.0))
      throw std::invalid_argument("sub_wigner: requires c > 0 and b > -1");
    ReferenceDistribution r;
    r.kind_ = RefKind::sub_wigner;
    r.b_ = b;
    r.c_ = c;
    r.a_ = 2.0 * std::pow(c, 0.5 * (b + 1.0)) / std::tgamma(0.5 * (b + 1.0));
    r.build_cdf();
    return r;
  }

  RefKind kind() const { return kind_; }
  double sub_wigner_a() const { return a_; }

  double pdf(double s) const {
    if (s < 0.0) return 0.0;
    switch (kind_) {
      case RefKind::ginibre_complex:
        return gin_c_ * ginibre_pdf_unscaled(gin_c_ * s, n_trunc_);
      case RefKind::poisson_real:
        return std::exp(-s);
      case RefKind::poisson_complex:
        return 0.5 * M_PI * s * std::exp(-0.25 * M_PI * s * s);
      case RefKind::sub_wigner:
        return a_ * std::pow(s, b_) * std::exp(-c_ * s * s);
    }
    return 0.0;
  }

  double cdf(double s) const {
    if (s <= 0.0) return 0.0;
    if (s >= cdf_x_.back()) return 1.0;
    return interp_linear(cdf_x_, cdf_y_, s);
  }

 private:
  void build_cdf() {
    constexpr int n = 4096;
    const double s_max = 12.0;
    cdf_x_.resize(n + 1);
    cdf_y_.resize(n + 1);
    cdf_x_[0] = 0.0;
    cdf_y_[0] = 0.0;
    double acc = 0.0, prev = pdf(0.0);
    for (int i = 1; i <= n; ++i) {
      const double x = s_max * static_cast<double>(i) / n;
      const double px = pdf(x);
      acc += 0.5 * (prev + px) * (s_max / n);
      prev = px;
      cdf_x_[static_cast<std::size_t>(i)] = x;
      cdf_y_[static_cast<std::size_t>(i)] = acc;
    }
    // trapezoid tail defect stays ~1e-8 here; pin the endpoint exactly
    const double total = cdf_y_.back();
    if (total > 0.0)
      for (double& y : cdf_y_) y /= total;
  }

  RefKind kind_ = RefKind::poisson_real;
  double a_ = 0.0, b_ = 0.0, c_ = 0.0;
  double gin_c_ = 0.0;
  int n_trunc_ = ginibre_default_truncation;
  std::vector<double> cdf_x_, cdf_y_;
};

// Pointwise pdf of a named reference law (sub-Wigner needs b, c).
inline double reference_pdf(RefKind kind, double s, double b = 0.0, double c = 0.0) {
  switch (kind) {
    case RefKind::ginibre_complex: {
      const double cg = ginibre_c();
      return cg * ginibre_pdf_unscaled(cg * s);
    }
    case RefKind::poisson_real:
    case RefKind::poisson_complex:
    case RefKind::sub_wigner: {
      const ReferenceDistribution r =
          kind == RefKind::poisson_real    ? ReferenceDistribution::poisson_real()
          : kind == RefKind::poisson_complex ? ReferenceDistribution::poisson_complex()
                                             : ReferenceDistribution::sub_wigner(b, c);
      return r.pdf(s);
    }
  }
  throw std::invalid_argument("reference_pdf: unknown kind");
}

struct SubWignerFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double residual = 0.0;
  bool converged = false;
};

// Least-squares fit of a s^b exp(-c s^2) to a normalized histogram; a is
// pinned by the unit-normalization constraint and (b, c) found by a
// derivative-free search from a small grid of starts.
inline SubWignerFit fit_sub_wigner(const Histogram& hist) {
  std::size_t nonempty = 0;
  for (double d : hist.density)
    if (d > 0.0) ++nonempty;
  if (nonempty < 10)
    throw std::invalid_argument("fit_sub_wigner: need >= 10 nonempty bins");

  auto cost = [&](double b, double c) {
    if (c <= 1e-6 || b <= -0.9) return 1e12;
    const double a = 2.0 * std::pow(c, 0.5 * (b + 1.0)) / std::tgamma(0.5 * (b + 1.0));
    if (!std::isfinite(a)) return 1e12;
    double r = 0.0;
    for (std::size_t i = 0; i < hist.centers.size(); ++i) {
      const double m = a * std::pow(hist.centers[i], b) * std::exp(-c * hist.centers[i] * hist.centers[i]);
      r += (m - hist.density[i]) * (m - hist.density[i]);
    }
    return r / static_cast<double>(hist.centers.size());
  };

  SubWignerFit fit;
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double b0 : {1.0, 2.0, 3.0})
    for (double c0 : {0.8, 1.6, 2.4}) {
      const auto r = nelder_mead_2d(cost, {b0, c0}, {0.4, 0.4}, 1e-12, 800);
      if (r.value < best) {
        best = r.value;
        fit.b = r.x[0];
        fit.c = r.x[1];
        fit.converged = r.converged;
        any = true;
      }
    }
  if (!any) throw std::runtime_error("fit_sub_wigner: search failed");
  fit.a = 2.0 * std::pow(fit.c, 0.5 * (fit.b + 1.0)) / std::tgamma(0.5 * (fit.b + 1.0));
  fit.residual = best;
  return fit;
}

// Kolmogorov-Smirnov statistic between the empirical CDF of the normalized
// spacings and a reference law.
inline double distribution_distance(const SpacingSample& sample, const ReferenceDistribution& ref) {
  if (sample.normalized.empty())
    throw std::invalid_argument("distribution_distance: empty sample");
  std::vector<double> s = sample.normalized;
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double F = ref.cdf(s[i]);
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - F));
    ks = std::max(ks, std::abs(static_cast<double>(i) / n - F));
  }
  return ks;
}

// Two-sample variant (empirical vs empirical); identical sets give 0.
inline double distribution_distance(const SpacingSample& a, const SpacingSample& b) {
  if (a.normalized.empty() || b.normalized.empty())
    throw std::invalid_argument("distribution_distance: empty sample");
  std::vector<double> sa = a.normalized, sb = b.normalized;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;  // step both CDFs past ties
    while (j < sb.size() && sb[j] == x) ++j;
    ks = std::max(ks, std::abs(static_cast<double>(i) / sa.size() -
                               static_cast<double>(j) / sb.size()));
  }
  return ks;
}

}  // namespace nhaah
