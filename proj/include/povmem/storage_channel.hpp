#pragma once

// Phenomenological memory channel. Each spatial mode is stored with an
// efficiency set by its transverse overlap with a Gaussian optical-depth
// profile; retrieved amplitudes are weighted per mode and the state is then
// dephased (H/V coherences) and depolarized.

#include <cmath>
#include <string>

#include "povmem/density_matrix.hpp"
#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"
#include "povmem/vector_state.hpp"

namespace povmem {

// How a storage efficiency eta scales the retrieved amplitude of a mode.
// `eta` reproduces the retrieved-state expression (eta1|L1> + eta2|L2>)/N,
// for which the fidelity is 1/2 + kappa/(1 + kappa^2). `sqrt_eta` treats eta
// as an energy efficiency.
enum class AmplitudeConvention { eta, sqrt_eta };

struct NoiseSpec {
  double p_dep = 0.0;  // weight of the I/4 admixture
  double p_phi = 0.0;  // fractional loss of H<->V coherence

  static NoiseSpec make(double p_dep, double p_phi) {
    if (!(p_dep >= 0.0 && p_dep <= 1.0)) throw DomainError("p_dep must lie in [0, 1]");
    if (!(p_phi >= 0.0 && p_phi <= 1.0)) throw DomainError("p_phi must lie in [0, 1]");
    return NoiseSpec{p_dep, p_phi};
  }
};

struct ChannelSpec {
  double eta0 = 0.143;          // peak efficiency
  double sigma_a = 1.0e-3;      // acceptance radius of the OD profile, m
  NoiseSpec noise{};
  double storage_time = 1.5e-6; // s, metadata only
  AmplitudeConvention convention = AmplitudeConvention::eta;

  static ChannelSpec make(double eta0, double sigma_a, NoiseSpec noise = {}, double storage_time = 1.5e-6,
                          AmplitudeConvention convention = AmplitudeConvention::eta) {
    if (!(eta0 > 0.0 && eta0 <= 1.0)) throw DomainError("eta0 must lie in (0, 1]");
    if (!(sigma_a > 0.0) || !std::isfinite(sigma_a)) throw DomainError("sigma_a must be > 0");
    noise = NoiseSpec::make(noise.p_dep, noise.p_phi);
    return ChannelSpec{eta0, sigma_a, noise, storage_time, convention};
  }

  ChannelSpec with_noise(NoiseSpec n) const {
    ChannelSpec c = *this;
    c.noise = NoiseSpec::make(n.p_dep, n.p_phi);
    return c;
  }
};

struct ChannelReport {
  double eta1;
  double eta2;
  double kappa;               // eta2 / eta1
  double predicted_fidelity;  // closed form for equal-weight inputs, noise off
};

// Fidelity of (|L1> + |L2>)/sqrt(2) after the amplitudes are reweighted by
// eta1, eta2 with kappa = eta2 / eta1.
inline double predict_fidelity(double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be > 0");
  return 0.5 + kappa / (1.0 + kappa * kappa);
}

// eta = eta0 * int I(r) exp(-r^2 / (2 sigma_a^2)) dA / int I dA.
inline double mode_efficiency(const TransverseField& mode, const ChannelSpec& ch) {
  const auto& g = mode.grid();
  double num = 0.0;
  double den = 0.0;
  const double inv = 1.0 / (2.0 * ch.sigma_a * ch.sigma_a);
  for (int iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy);
    for (int ix = 0; ix < g.n; ++ix) {
      const double x = g.coord(ix);
      const double I = std::norm(mode(ix, iy));
      num += I * std::exp(-(x * x + y * y) * inv);
      den += I;
    }
  }
  if (!(den > 1e-200)) throw DegenerateField("mode_efficiency of a zero-power field");
  return ch.eta0 * num / den;
}

struct ChannelOutput {
  DensityMatrix state;
  ChannelReport report;
};

// Applies the channel with explicit per-mode efficiencies for the L1 and L2
// spatial modes.
inline ChannelOutput apply_channel(const TwoDofKet& ket, double eta1, double eta2, const ChannelSpec& ch) {
  if (!(eta1 > 0.0) || !(eta2 > 0.0)) throw DegenerateField("storage efficiencies must be > 0");
  const bool amp_eta = ch.convention == AmplitudeConvention::eta;
  const double w1 = amp_eta ? eta1 : std::sqrt(eta1);
  const double w2 = amp_eta ? eta2 : std::sqrt(eta2);

  Ket4 c = ket.amplitudes();
  for (Pol p : {Pol::H, Pol::V}) {
    c(basis_index(p, Oam::L1)) *= w1;
    c(basis_index(p, Oam::L2)) *= w2;
  }
  c /= c.norm();
  Mat4 rho = c * c.adjoint();

  const double keep = 1.0 - ch.noise.p_phi;
  for (int r = 0; r < 4; ++r) {
    for (int col = 0; col < 4; ++col) {
      if ((r / 2) != (col / 2)) rho(r, col) *= keep;
    }
  }
  rho = (1.0 - ch.noise.p_dep) * rho + ch.noise.p_dep * Mat4::Identity() / 4.0;

  const double kappa = eta2 / eta1;
  const ChannelReport report{eta1, eta2, kappa, predict_fidelity(amp_eta ? kappa : std::sqrt(kappa))};
  return ChannelOutput{DensityMatrix::from_matrix(rho), report};
}

// Efficiencies taken from the sampled arms: E_H carries L1, E_V carries L2.
inline ChannelOutput apply_channel(const TwoDofKet& ket, const VectorBeamField& fields, const ChannelSpec& ch) {
  return apply_channel(ket, mode_efficiency(fields.h(), ch), mode_efficiency(fields.v(), ch), ch);
}

inline const char* to_string(AmplitudeConvention c) { return c == AmplitudeConvention::eta ? "eta" : "sqrt_eta"; }

inline AmplitudeConvention parse_amplitude_convention(const std::string& s) {
  if (s == "eta") return AmplitudeConvention::eta;
  if (s == "sqrt_eta") return AmplitudeConvention::sqrt_eta;
  throw ConfigError("amplitude_convention must be \"eta\" or \"sqrt_eta\", got \"" + s + "\"");
}

}  // namespace povmem
