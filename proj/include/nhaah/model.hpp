#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "nhaah/params.hpp"

namespace nhaah {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// t_j = t + V2 cos[2pi (j+1/2) alpha + theta_h/L + phi]
inline double hopping_amplitude(int j, const ModelParams& p) {
  const double arg = 2.0 * M_PI * (static_cast<double>(j) + 0.5) * p.alpha +
                     p.theta_h / static_cast<double>(p.L) + p.phi;
  return p.t + p.V2 * std::cos(arg);
}

// Delta_j = V1 cos(2pi j alpha + theta_h/L + phi + i h)
//         = V1 [cos(x) cosh(h) - i sin(x) sinh(h)]
inline Complex onsite_potential(int j, const ModelParams& p) {
  const double x = 2.0 * M_PI * static_cast<double>(j) * p.alpha +
                   p.theta_h / static_cast<double>(p.L) + p.phi;
  return p.V1 * Complex{std::cos(x) * std::cosh(p.h), -std::sin(x) * std::sinh(p.h)};
}

// Directed hop amplitudes on bond j (connecting sites j and j+1).
// forward: c^dag_{j+1} c_j carries t_j e^{-g + i theta_g / L},
// backward: c^dag_j c_{j+1} carries t_j e^{ g - i theta_g / L}.
inline Complex hop_forward(int j, const ModelParams& p) {
  return hopping_amplitude(j, p) *
         std::exp(Complex{-p.g, p.theta_g / static_cast<double>(p.L)});
}

inline Complex hop_backward(int j, const ModelParams& p) {
  return hopping_amplitude(j, p) *
         std::exp(Complex{p.g, -p.theta_g / static_cast<double>(p.L)});
}

// Dense L x L first-quantized Hamiltonian.  Under PBC the wrap couple
// (0, L-1) uses bond L-1; under OBC it is absent.
inline Matrix build_single_particle(const ModelParams& p) {
  p.validate();
  const int L = p.L;
  Matrix H = Matrix::Zero(L, L);
  for (int j = 0; j < L; ++j) H(j, j) = onsite_potential(j, p);
  for (int j = 0; j + 1 < L; ++j) {
    H(j + 1, j) = hop_forward(j, p);
    H(j, j + 1) = hop_backward(j, p);
  }
  if (p.boundary == Boundary::periodic) {
    H(0, L - 1) = hop_forward(L - 1, p);
    H(L - 1, 0) = hop_backward(L - 1, p);
  }
  return H;
}

}  // namespace nhaah
