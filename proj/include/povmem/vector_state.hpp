#pragma once

// Polarization x OAM states: the abstract two-qubit ket over {H,V} x {L1,L2},
// its sampled vector-beam realization, hybrid-order Poincare sphere
// coordinates and analyzer (petal) patterns.

#include <array>
#include <cmath>
#include <complex>
#include <regex>
#include <sstream>
#include <string>

#include "povmem/density_matrix.hpp"
#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"

namespace povmem {

struct KetPolicy {
  int l_min = -5;
  int l_max = 5;
  bool allow_degenerate = false;  // L1 == L2
};

class TwoDofKet {
 public:
  // Normalizes the amplitudes and fixes the global phase so that the first
  // nonzero amplitude (normally c_HL1) is real and positive.
  static TwoDofKet make(const Ket4& amplitudes, int l1, int l2, const KetPolicy& policy = {}) {
    if (l1 < policy.l_min || l1 > policy.l_max || l2 < policy.l_min || l2 > policy.l_max) {
      throw DomainError("OAM labels (" + std::to_string(l1) + ", " + std::to_string(l2) + ") outside [" +
                        std::to_string(policy.l_min) + ", " + std::to_string(policy.l_max) + "]");
    }
    if (l1 == l2 && !policy.allow_degenerate) {
      throw DomainError("L1 == L2 requires the degenerate flag");
    }
    const double nrm = amplitudes.norm();
    if (!(nrm > 0.0)) throw InvalidState("zero ket");
    Ket4 c = amplitudes / nrm;
    for (int i = 0; i < 4; ++i) {
      if (std::abs(c(i)) > 1e-15) {
        c *= std::conj(c(i)) / std::abs(c(i));
        c(i) = cplx(std::abs(c(i)), 0.0);
        break;
      }
    }
    return TwoDofKet(c, l1, l2);
  }

  const Ket4& amplitudes() const { return c_; }
  cplx amplitude(Pol p, Oam o) const { return c_(basis_index(p, o)); }
  int l1() const { return l1_; }
  int l2() const { return l2_; }
  bool degenerate() const { return l1_ == l2_; }

  DensityMatrix projector() const { return DensityMatrix::from_ket(c_); }

 private:
  TwoDofKet(Ket4 c, int l1, int l2) : c_(std::move(c)), l1_(l1), l2_(l2) {}
  Ket4 c_;
  int l1_;
  int l2_;
};

class VectorBeamField {
 public:
  static VectorBeamField make(TransverseField e_h, TransverseField e_v) {
    if (!e_h.grid().matches(e_v.grid())) throw GridMismatch("H and V components on different grids");
    if (!(e_h.sum_intensity() + e_v.sum_intensity() > 0.0)) throw DegenerateField("vector beam has zero power");
    return VectorBeamField(std::move(e_h), std::move(e_v));
  }

  const TransverseField& h() const { return h_; }
  const TransverseField& v() const { return v_; }
  const GridSpec& grid() const { return h_.grid(); }
  double power() const { return h_.power() + v_.power(); }

 private:
  VectorBeamField(TransverseField h, TransverseField v) : h_(std::move(h)), v_(std::move(v)) {}
  TransverseField h_;
  TransverseField v_;
};

struct RingParams {
  double radius = 100e-6;
  double waist = 20e-6;
};

struct PoincareBeam {
  TwoDofKet ket;
  VectorBeamField field;
};

// (|H,L1> + e^{i theta} |V,L2>) / sqrt(2) with arms built from `arm(l)`,
// each arm carrying half the power.
template <typename ArmFactory>
PoincareBeam make_poincare_beam(int l1, int l2, double theta, const GridSpec& grid, ArmFactory&& arm,
                                KetPolicy policy) {
  policy.allow_degenerate = true;
  Ket4 c = Ket4::Zero();
  c(basis_index(Pol::H, Oam::L1)) = 1.0 / std::sqrt(2.0);
  c(basis_index(Pol::V, Oam::L2)) = std::polar(1.0 / std::sqrt(2.0), theta);
  TwoDofKet ket = TwoDofKet::make(c, l1, l2, policy);
  TransverseField e_h = synthesize(arm(l1), grid).normalized(0.5);
  TransverseField e_v = synthesize(arm(l2), grid).normalized(0.5).scaled(std::polar(1.0, theta));
  return PoincareBeam{std::move(ket), VectorBeamField::make(std::move(e_h), std::move(e_v))};
}

// Perfect Poincare beam: both arms are perfect vortices on the same ring.
inline PoincareBeam make_ppb(int l1, int l2, double theta, const RingParams& ring, const GridSpec& grid,
                             const KetPolicy& policy = {}) {
  return make_poincare_beam(
      l1, l2, theta, grid, [&](int l) { return ModeSpec{PerfectVortexMode{l, ring.radius, ring.waist}}; }, policy);
}

// Conventional Poincare beam with Laguerre-Gauss (p = 0) arms of a common waist.
inline PoincareBeam make_lg_poincare_beam(int l1, int l2, double theta, double waist, const GridSpec& grid,
                                          const KetPolicy& policy = {}) {
  return make_poincare_beam(
      l1, l2, theta, grid, [&](int l) { return ModeSpec{LaguerreGaussMode{l, waist}}; }, policy);
}

// Projections of the sampled field onto {H,V} x {mode_l1, mode_l2}; the mode
// fields must have unit power.
inline Ket4 field_amplitudes(const VectorBeamField& field, const TransverseField& mode_l1,
                             const TransverseField& mode_l2) {
  Ket4 c;
  c(basis_index(Pol::H, Oam::L1)) = inner_product(mode_l1, field.h());
  c(basis_index(Pol::H, Oam::L2)) = inner_product(mode_l2, field.h());
  c(basis_index(Pol::V, Oam::L1)) = inner_product(mode_l1, field.v());
  c(basis_index(Pol::V, Oam::L2)) = inner_product(mode_l2, field.v());
  return c;
}

// Field behind a linear polarizer at angle beta from H: E_H cos(beta) + E_V sin(beta).
// Its intensity is the petal pattern.
inline TransverseField polarizer_pattern(const VectorBeamField& field, double polarizer_angle) {
  const double cb = std::cos(polarizer_angle);
  const double sb = std::sin(polarizer_angle);
  TransverseField out(field.grid());
  auto o = out.samples();
  const auto h = field.h().samples();
  const auto v = field.v().samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = cb * h[i] + sb * v[i];
  return out;
}

// Number of bright arcs around a circle of the given radius: runs of samples
// above the mid level between min and max. Interpolation on the square grid
// leaves a percent-level ripple on a uniform ring, so profiles with
// visibility (max - min) / (max + min) below 0.05 count as uniform (0 petals).
inline int count_petals(const TransverseField& pattern, double radius, int samples = 720) {
  const auto prof = azimuthal_profile(pattern, radius, samples);
  const auto [lo, hi] = std::minmax_element(prof.begin(), prof.end());
  if (!(*hi > 0.0) || (*hi - *lo) < 0.05 * (*hi + *lo)) return 0;
  const double threshold = *lo + 0.5 * (*hi - *lo);
  const int n = samples;
  int arcs = 0;
  for (int i = 0; i < n; ++i) {
    const bool prev = prof[static_cast<std::size_t>((i + n - 1) % n)] > threshold;
    const bool cur = prof[static_cast<std::size_t>(i)] > threshold;
    if (cur && !prev) ++arcs;
  }
  return arcs;
}

// Point on the hybrid-order Poincare sphere with poles |H,L1> (Theta = 0)
// and |V,L2> (Theta = pi).
struct HyopsCoord {
  double theta;  // polar angle [0, pi]
  double phi;    // azimuth [0, 2 pi)
  int l1;
  int l2;
};

inline HyopsCoord hyops_coord(const TwoDofKet& ket) {
  const double cross = std::max(std::abs(ket.amplitude(Pol::H, Oam::L2)), std::abs(ket.amplitude(Pol::V, Oam::L1)));
  if (cross > 1e-9) throw NotOnSphere("ket has |H,L2> or |V,L1> weight " + std::to_string(cross));
  const cplx ch = ket.amplitude(Pol::H, Oam::L1);
  const cplx cv = ket.amplitude(Pol::V, Oam::L2);
  const double theta = 2.0 * std::atan2(std::abs(cv), std::abs(ch));
  const double phi = (std::abs(ch) > 0.0 && std::abs(cv) > 0.0) ? wrap_phase(std::arg(cv) - std::arg(ch)) : 0.0;
  return HyopsCoord{theta, phi, ket.l1(), ket.l2()};
}

inline TwoDofKet ket_from_hyops(const HyopsCoord& coord, const KetPolicy& policy = {.allow_degenerate = true}) {
  Ket4 c = Ket4::Zero();
  c(basis_index(Pol::H, Oam::L1)) = std::cos(coord.theta / 2.0);
  c(basis_index(Pol::V, Oam::L2)) = std::polar(std::sin(coord.theta / 2.0), coord.phi);
  return TwoDofKet::make(c, coord.l1, coord.l2, policy);
}

struct EncodingCapacity {
  long long conventional;  // symmetric +-l pairs: 2d - 1
  long long perfect;       // arbitrary (L1, L2): d^2
};

inline EncodingCapacity encoding_capacity(long long d) {
  if (d < 1) throw DomainError("encoding_capacity needs d >= 1");
  return EncodingCapacity{2 * d - 1, d * d};
}

// Text descriptor `PPB(L1,L2,theta_deg)`, e.g. `PPB(1,3,0)` or `PPB(2,-2,270)`.
struct PpbDescriptor {
  int l1;
  int l2;
  double theta_deg;

  double theta_rad() const { return theta_deg * kPi / 180.0; }

  static PpbDescriptor parse(const std::string& text) {
    static const std::regex re(R"(^\s*PPB\(\s*([+-]?\d+)\s*,\s*([+-]?\d+)\s*,\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*\)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) throw ConfigError("malformed state descriptor '" + text + "'");
    return PpbDescriptor{std::stoi(m[1].str()), std::stoi(m[2].str()), std::stod(m[3].str())};
  }

  std::string str() const {
    std::ostringstream os;
    os << "PPB(" << l1 << "," << l2 << "," << theta_deg << ")";
    return os.str();
  }
};

}  // namespace povmem
