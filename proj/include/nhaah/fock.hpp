#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nhaah/model.hpp"

namespace nhaah {

// Occupation-number basis of the fixed-N fermionic sector.  Words are L-bit
// masks (bit j = site j occupation) listed in ascending numeric order.
struct FockBasis {
  int L = 0;
  int N = 0;
  std::vector<std::uint32_t> states;

  std::size_t dim() const { return states.size(); }

  // Ordinal of a word; the list is sorted so a binary search suffices.
  std::size_t index_of(std::uint32_t word) const {
    const auto it = std::lower_bound(states.begin(), states.end(), word);
    if (it == states.end() || *it != word)
      throw std::out_of_range("fock word not in basis");
    return static_cast<std::size_t>(it - states.begin());
  }
};

inline constexpr int fock_max_sites = 24;
inline constexpr std::size_t fock_default_memory_budget = std::size_t{1} << 31;  // 2 GiB

inline FockBasis build_fock_basis(int L, int N,
                                  std::size_t memory_budget = fock_default_memory_budget) {
  if (L < 1 || L > fock_max_sites)
    throw std::invalid_argument("fock basis limited to 1..24 sites, got L=" + std::to_string(L));
  if (N < 0 || N > L)
    throw std::invalid_argument("particle count N=" + std::to_string(N) + " outside [0, L]");
  const std::uint64_t D = binomial(static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(N));
  if (D * D * sizeof(Complex) > memory_budget)
    throw std::invalid_argument("dense many-body matrix for L=" + std::to_string(L) +
                                ", N=" + std::to_string(N) + " exceeds the memory budget");
  FockBasis b{L, N, {}};
  b.states.reserve(D);
  const std::uint32_t limit = std::uint32_t{1} << L;
  for (std::uint32_t w = 0; w < limit; ++w)
    if (std::popcount(w) == N) b.states.push_back(w);
  return b;
}

namespace detail {
// Sign of c_j applied to |word>: (-1)^(number of occupied sites below j).
inline int jordan_wigner_sign(std::uint32_t word, int j) {
  const std::uint32_t below = word & ((std::uint32_t{1} << j) - 1);
  return (std::popcount(below) & 1) ? -1 : 1;
}
}  // namespace detail

// Dense fixed-N Hamiltonian over the given basis.  Diagonal carries the
// on-site potential and the U n_j n_{j+1} interaction (with the wrap pair
// n_{L-1} n_0 under PBC); off-diagonals carry the directed hops with the
// fermionic string sign.  The PBC seam hop picks up (-1)^(N-1) from the
// ordered-operator convention |b> = c^dag_{j1} ... c^dag_{jN} |0>, j1<...<jN.
inline Matrix build_many_body(const ModelParams& p, const FockBasis& basis) {
  p.validate(true);
  if (basis.L != p.L || basis.N != p.N)
    throw std::invalid_argument("fock basis does not match (L, N) in params");
  const int L = p.L;
  const std::size_t D = basis.dim();
  const bool pbc = p.boundary == Boundary::periodic;

  std::vector<Complex> delta(L);
  std::vector<Complex> fwd(L), bwd(L);
  for (int j = 0; j < L; ++j) {
    delta[j] = onsite_potential(j, p);
    fwd[j] = hop_forward(j, p);
    bwd[j] = hop_backward(j, p);
  }

  Matrix H = Matrix::Zero(D, D);
  const int n_bonds = pbc ? L : L - 1;
  // amplitude * c^dag_i c_j |word>, i != j, scattering into column `col`
  auto add_hop = [&](std::uint32_t word, std::size_t col, int i, int j, Complex amp) {
    const std::uint32_t bi = std::uint32_t{1} << i, bj = std::uint32_t{1} << j;
    if (!(word & bj) || (word & bi)) return;
    int sign = detail::jordan_wigner_sign(word, j);
    const std::uint32_t removed = word & ~bj;
    sign *= detail::jordan_wigner_sign(removed, i);
    H(basis.index_of(removed | bi), col) += static_cast<double>(sign) * amp;
  };

  for (std::size_t col = 0; col < D; ++col) {
    const std::uint32_t word = basis.states[col];
    Complex diag = 0.0;
    for (int j = 0; j < L; ++j)
      if (word & (std::uint32_t{1} << j)) diag += delta[j];
    for (int j = 0; j < n_bonds; ++j) {
      const int jn = (j + 1) % L;
      if ((word >> j & 1u) && (word >> jn & 1u)) diag += p.U;
    }
    H(col, col) += diag;
    for (int j = 0; j < n_bonds; ++j) {
      const int jn = (j + 1) % L;
      add_hop(word, col, jn, j, fwd[j]);  // c^dag_{j+1} c_j
      add_hop(word, col, j, jn, bwd[j]);  // c^dag_j c_{j+1}
    }
  }
  return H;
}

}  // namespace nhaah
