#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nhaah {

inline constexpr double golden_ratio_inverse = 0.6180339887498948482045868343656;

inline double wrap_to_pi(double x) {
  while (x > M_PI) x -= 2.0 * M_PI;
  while (x <= -M_PI) x += 2.0 * M_PI;
  return x;
}

// --- counter-based RNG -------------------------------------------------------
//
// Stateless streams keyed by (seed, counter words); every job in a sweep draws
// its random phase from its own key, so results do not depend on how jobs are
// distributed over workers.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix64(seed ^ 0x853c49e6748fea9bULL);
  x = splitmix64(x ^ a);
  x = splitmix64(x ^ (b + 0xda3e39cb94b95bdbULL));
  return x;
}

// uniform in [0, 1)
inline double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(counter_hash(seed, a, b) >> 11) * 0x1.0p-53;
}

// --- quadrature --------------------------------------------------------------

namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson over an initial composite grid; the panels keep narrow
// features from slipping through the first coarse probe.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 40, int panels = 16) {
  double total = 0.0;
  const double w = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double pa = a + p * w, pb = pa + w;
    const double fa = f(pa), fb = f(pb), fm = f(0.5 * (pa + pb));
    const double whole = w / 6.0 * (fa + 4.0 * fm + fb);
    total += detail::simpson_rec(f, pa, pb, fa, fm, fb, whole, tol / panels, max_depth);
  }
  return total;
}

// --- order statistics --------------------------------------------------------

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
  return 0.5 * (v[n / 2 - 1] + hi);
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

// --- 1D linear interpolation -------------------------------------------------

// x must be strictly increasing; clamps outside the support.
inline double interp_linear(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("interp_linear: need two or more points");
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), xq);
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double t = (xq - x[i - 1]) / (x[i] - x[i - 1]);
  return y[i - 1] * (1.0 - t) + y[i] * t;
}

// --- Nelder-Mead in 2 parameters ----------------------------------------------

struct NelderMeadResult {
  std::array<double, 2> x;
  double value = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  bool converged = false;
};

inline NelderMeadResult nelder_mead_2d(const std::function<double(double, double)>& f,
                                       std::array<double, 2> start,
                                       std::array<double, 2> step,
                                       double ftol = 1e-10, int max_eval = 2000) {
  using P = std::array<double, 2>;
  struct V { P x; double fx; };
  NelderMeadResult res;
  auto eval = [&](const P& p) {
    ++res.evaluations;
    return f(p[0], p[1]);
  };
  std::array<V, 3> s;
  s[0] = {start, eval(start)};
  s[1] = {{start[0] + step[0], start[1]}, 0.0};
  s[1].fx = eval(s[1].x);
  s[2] = {{start[0], start[1] + step[1]}, 0.0};
  s[2].fx = eval(s[2].x);

  auto order = [&] { std::sort(s.begin(), s.end(), [](const V& a, const V& b) { return a.fx < b.fx; }); };
  order();
  while (res.evaluations < max_eval) {
    if (std::abs(s[2].fx - s[0].fx) <= ftol * (std::abs(s[0].fx) + ftol)) {
      res.converged = true;
      break;
    }
    const P c = {0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
    const P refl = {c[0] + (c[0] - s[2].x[0]), c[1] + (c[1] - s[2].x[1])};
    const double fr = eval(refl);
    if (fr < s[0].fx) {
      const P exp_ = {c[0] + 2.0 * (c[0] - s[2].x[0]), c[1] + 2.0 * (c[1] - s[2].x[1])};
      const double fe = eval(exp_);
      s[2] = fe < fr ? V{exp_, fe} : V{refl, fr};
    } else if (fr < s[1].fx) {
      s[2] = {refl, fr};
    } else {
      const P con = {c[0] + 0.5 * (s[2].x[0] - c[0]), c[1] + 0.5 * (s[2].x[1] - c[1])};
      const double fc = eval(con);
      if (fc < s[2].fx) {
        s[2] = {con, fc};
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i].x = {0.5 * (s[i].x[0] + s[0].x[0]), 0.5 * (s[i].x[1] + s[0].x[1])};
          s[i].fx = eval(s[i].x);
        }
      }
    }
    order();
  }
  res.x = s[0].x;
  res.value = s[0].fx;
  return res;
}

// --- histograms ----------------------------------------------------------------

struct Histogram {
  std::vector<double> centers;
  std::vector<double> density;  // normalized: sum(density * width) = 1
  double width = 0.0;
};

// Freedman-Diaconis bin width; falls back to sqrt rule for degenerate IQR.
inline Histogram make_histogram(const std::vector<double>& sample, double bin_width = 0.0) {
  if (sample.size() < 2) throw std::invalid_argument("make_histogram: need two or more samples");
  const double lo = 0.0;
  const double hi = *std::max_element(sample.begin(), sample.end());
  if (!(hi > lo)) throw std::invalid_argument("make_histogram: degenerate sample range");
  double w = bin_width;
  if (w <= 0.0) {
    const double iqr = quantile(sample, 0.75) - quantile(sample, 0.25);
    w = 2.0 * iqr / std::cbrt(static_cast<double>(sample.size()));
    if (w <= 0.0) w = hi / std::ceil(std::sqrt(static_cast<double>(sample.size())));
  }
  const std::size_t nbins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(hi / w)));
  Histogram h;
  h.width = w;
  h.centers.resize(nbins);
  h.density.assign(nbins, 0.0);
  for (std::size_t i = 0; i < nbins; ++i) h.centers[i] = (static_cast<double>(i) + 0.5) * w;
  for (double s : sample) {
    std::size_t b = static_cast<std::size_t>(s / w);
    if (b >= nbins) b = nbins - 1;
    h.density[b] += 1.0;
  }
  const double norm = 1.0 / (w * static_cast<double>(sample.size()));
  for (double& d : h.density) d *= norm;
  return h;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace nhaah
