#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nhaah/numerics.hpp"

namespace nhaah {

enum class Boundary { periodic, open };

inline std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "open") return Boundary::open;
  throw std::invalid_argument("boundary must be \"periodic\" or \"open\", got \"" + s + "\"");
}

// Parameter record of the generalized AAH chain with nonreciprocal hopping
// (strength g) and complex potential phase (h).  Angles are in radians.
// alpha is kept at full floating precision; it is never replaced by a
// rational approximant.
struct ModelParams {
  int L = 3;                            // lattice sites
  double t = 1.0;                       // hopping energy unit
  double V1 = 0.0;                      // on-site modulation amplitude
  double V2 = 0.0;                      // hopping modulation amplitude
  double alpha = golden_ratio_inverse;  // incommensurate wavenumber
  double g = 0.0;                       // nonreciprocity
  double h = 0.0;                       // complex potential phase
  double theta_g = 0.0;                 // hopping flux angle (winding loops)
  double theta_h = 0.0;                 // potential phase angle (winding loops)
  double phi = 0.0;                     // random phase shift, sample averaging
  double U = 0.0;                       // nearest-neighbor interaction
  int N = 0;                            // particle count (many-body only)
  Boundary boundary = Boundary::periodic;

  void validate(bool many_body = false) const {
    const int min_L = boundary == Boundary::periodic ? 3 : 2;
    if (L < min_L)
      throw std::invalid_argument("L=" + std::to_string(L) + " below minimum " +
                                  std::to_string(min_L) + " for " + to_string(boundary) +
                                  " boundary");
    for (double v : {t, V1, V2, alpha, g, h, theta_g, theta_h, phi, U})
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite model parameter");
    if (V1 < 0.0 || V2 < 0.0) throw std::invalid_argument("V1 and V2 must be non-negative");
    if (many_body && (N < 0 || N > L))
      throw std::invalid_argument("particle count N=" + std::to_string(N) +
                                  " outside [0, L] for L=" + std::to_string(L));
  }
};

// Copy with the random phase shift applied; phi enters both cosine arguments
// alongside theta_h/L.
inline ModelParams with_phase_shift(ModelParams p, double phi) {
  p.phi = phi;
  return p;
}

inline nlohmann::json to_json(const ModelParams& p) {
  return nlohmann::json{{"L", p.L},           {"t", p.t},
                        {"V1", p.V1},         {"V2", p.V2},
                        {"alpha", p.alpha},   {"g", p.g},
                        {"h", p.h},           {"theta_g", p.theta_g},
                        {"theta_h", p.theta_h}, {"phi", p.phi},
                        {"U", p.U},           {"N", p.N},
                        {"boundary", to_string(p.boundary)}};
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  for (const auto& [key, value] : j.items()) {
    if (key == "L") p.L = value.get<int>();
    else if (key == "t") p.t = value.get<double>();
    else if (key == "V1") p.V1 = value.get<double>();
    else if (key == "V2") p.V2 = value.get<double>();
    else if (key == "alpha") p.alpha = value.get<double>();
    else if (key == "g") p.g = value.get<double>();
    else if (key == "h") p.h = value.get<double>();
    else if (key == "theta_g") p.theta_g = value.get<double>();
    else if (key == "theta_h") p.theta_h = value.get<double>();
    else if (key == "phi") p.phi = value.get<double>();
    else if (key == "U") p.U = value.get<double>();
    else if (key == "N") p.N = value.get<int>();
    else if (key == "boundary") p.boundary = boundary_from_string(value.get<std::string>());
    else throw std::invalid_argument("unknown model parameter \"" + key + "\"");
  }
  return p;
}

// FNV-1a over the canonical (key-sorted) serialized form; keys result caches.
inline std::uint64_t canonical_hash(const nlohmann::json& j) {
  const std::string s = j.dump();  // nlohmann objects serialize with sorted keys
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string params_hash(const ModelParams& p) { return hash_hex(canonical_hash(to_json(p))); }

}  // namespace nhaah
