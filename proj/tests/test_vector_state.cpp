#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <tuple>

#include "oracles.hpp"
#include "povmem/vector_state.hpp"

using namespace povmem;

namespace {

const GridSpec kGrid = GridSpec::make(512, 1.5625e-6, 795e-9);
const RingParams kRing{};

}  // namespace

TEST(TwoDofKet, NormalizesAndFixesGlobalPhase) {
  Ket4 c;
  c << cplx(0.0, 2.0), 0.0, 0.0, cplx(-2.0, 0.0);
  const auto k = TwoDofKet::make(c, 1, 3);
  EXPECT_NEAR(k.amplitudes().norm(), 1.0, 1e-15);
  EXPECT_NEAR(k.amplitude(Pol::H, Oam::L1).real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(k.amplitude(Pol::H, Oam::L1).imag(), 0.0);
  // Relative phase survives: -2 / 2i = i.
  EXPECT_NEAR(std::abs(k.amplitude(Pol::V, Oam::L2) - cplx(0.0, 1 / std::sqrt(2.0))), 0.0, 1e-15);
}

TEST(TwoDofKet, PolicyChecks) {
  const Ket4 c = Ket4::Ones();
  EXPECT_THROW(TwoDofKet::make(c, 6, 0), DomainError);
  EXPECT_THROW(TwoDofKet::make(c, 2, 2), DomainError);
  EXPECT_NO_THROW(TwoDofKet::make(c, 2, 2, {.allow_degenerate = true}));
  EXPECT_NO_THROW(TwoDofKet::make(c, 8, -9, {.l_min = -10, .l_max = 10}));
  EXPECT_THROW(TwoDofKet::make(Ket4::Zero(), 0, 1), InvalidState);
}

TEST(MakePpb, ReferenceStatesHaveExpectedKets) {
  struct Case {
    int l1, l2;
    double theta;
  };
  for (const Case& s : {Case{1, 3, 0.0}, Case{-3, 4, oracle::pi / 2}, Case{0, -5, oracle::pi}, Case{2, -2, 1.5 * oracle::pi}}) {
    const auto b = make_ppb(s.l1, s.l2, s.theta, kRing, kGrid);
    EXPECT_EQ(b.ket.l1(), s.l1);
    EXPECT_EQ(b.ket.l2(), s.l2);
    const Ket4& a = b.ket.amplitudes();
    EXPECT_NEAR(std::abs(a(0) - 1 / std::sqrt(2.0)), 0.0, 1e-15);
    EXPECT_EQ(a(1), cplx(0.0));
    EXPECT_EQ(a(2), cplx(0.0));
    EXPECT_NEAR(std::abs(a(3) - std::polar(1 / std::sqrt(2.0), s.theta)), 0.0, 1e-15);
    EXPECT_NEAR(b.field.h().power(), 0.5, 1e-12);
    EXPECT_NEAR(b.field.v().power(), 0.5, 1e-12);
  }
}

TEST(MakePpb, FieldAmplitudesAgreeWithKet) {
  for (auto [l1, l2, theta] : {std::tuple{1, 3, 0.0}, std::tuple{-3, 4, 1.0}, std::tuple{0, -5, 2.5}, std::tuple{5, -4, 4.0}}) {
    const auto b = make_ppb(l1, l2, theta, kRing, kGrid);
    const auto m1 = synthesize(PerfectVortexMode{l1, kRing.radius, kRing.waist}, kGrid);
    const auto m2 = synthesize(PerfectVortexMode{l2, kRing.radius, kRing.waist}, kGrid);
    const Ket4 c = field_amplitudes(b.field, m1, m2);
    // Gram matrices <a_i|a_j> of field-level and ket-level amplitude vectors.
    EXPECT_LT((c * c.adjoint() - b.ket.amplitudes() * b.ket.amplitudes().adjoint()).cwiseAbs().maxCoeff(), 1e-6)
        << l1 << "," << l2;
  }
}

TEST(MakePpb, DegenerateChargeIsUniformDiagonalPolarization) {
  const auto b = make_ppb(0, 0, 0.0, kRing, kGrid);
  EXPECT_TRUE(b.ket.degenerate());
  for (std::size_t i = 0; i < b.field.h().samples().size(); i += 97) {
    EXPECT_EQ(b.field.h().samples()[i], b.field.v().samples()[i]);
  }
  // An anti-diagonal analyzer blocks everything.
  EXPECT_LT(polarizer_pattern(b.field, -oracle::pi / 4).power(), 1e-28);
  EXPECT_EQ(count_petals(polarizer_pattern(b.field, oracle::pi / 4), kRing.radius), 0);
}

TEST(MakePpb, SamplingErrorPropagates) {
  EXPECT_THROW(make_ppb(1, 3, 0.0, RingParams{100e-6, 1e-6}, kGrid), SamplingError);
}

TEST(PolarizerPattern, PetalCountMatchesChargeDifference) {
  const GridSpec g = GridSpec::make(256, 3.125e-6, 795e-9);
  std::vector<TransverseField> modes;
  for (int l = -5; l <= 5; ++l) modes.push_back(synthesize(PerfectVortexMode{l, kRing.radius, kRing.waist}, g));
  auto arm = [&](int l) { return modes[static_cast<std::size_t>(l + 5)]; };
  for (int l1 = -5; l1 <= 5; ++l1) {
    for (int l2 = -5; l2 <= 5; ++l2) {
      if (l1 == l2) continue;
      const auto field = VectorBeamField::make(arm(l1).normalized(0.5), arm(l2).normalized(0.5));
      const int petals = count_petals(polarizer_pattern(field, oracle::pi / 4), kRing.radius);
      EXPECT_EQ(petals, oracle::count_cos_maxima(l2 - l1, 0.0)) << l1 << "," << l2;
      EXPECT_EQ(petals, std::abs(l2 - l1));
    }
  }
}

TEST(PolarizerPattern, ReferenceStatesAndHorizontalAnalyzer) {
  const auto psi1 = make_ppb(1, 3, 0.0, kRing, kGrid);
  EXPECT_EQ(count_petals(polarizer_pattern(psi1.field, oracle::pi / 4), kRing.radius), 2);
  EXPECT_EQ(count_petals(polarizer_pattern(psi1.field, 0.0), kRing.radius), 0);
  const auto psi3 = make_ppb(0, -5, oracle::pi, kRing, kGrid);
  EXPECT_EQ(count_petals(polarizer_pattern(psi3.field, oracle::pi / 4), kRing.radius), 5);

  // Azimuthal profile follows 1 + cos((L2 - L1) phi + theta).
  const auto psi2 = make_ppb(-3, 4, oracle::pi / 2, kRing, kGrid);
  const auto prof = azimuthal_profile(polarizer_pattern(psi2.field, oracle::pi / 4), kRing.radius, 360);
  const double mean = std::accumulate(prof.begin(), prof.end(), 0.0) / 360.0;
  for (int s = 0; s < 360; s += 5) {
    const double phi = 2 * oracle::pi * s / 360;
    EXPECT_NEAR(prof[static_cast<std::size_t>(s)] / mean, 1 + std::cos(7 * phi + oracle::pi / 2), 0.03) << s;
  }
}

TEST(Hyops, PolesAndEquator) {
  Ket4 c = Ket4::Zero();
  c(0) = 1.0;
  const auto pole = hyops_coord(TwoDofKet::make(c, 1, 3));
  EXPECT_EQ(pole.theta, 0.0);
  c(0) = 0.0;
  c(3) = cplx(0.0, 1.0);
  EXPECT_NEAR(hyops_coord(TwoDofKet::make(c, 1, 3)).theta, oracle::pi, 1e-15);

  const double thetas[] = {0.0, oracle::pi / 2, oracle::pi, 1.5 * oracle::pi};
  const int ls[][2] = {{1, 3}, {-3, 4}, {0, -5}, {2, -2}};
  for (int i = 0; i < 4; ++i) {
    const auto b = make_ppb(ls[i][0], ls[i][1], thetas[i], kRing, kGrid);
    const auto h = hyops_coord(b.ket);
    EXPECT_NEAR(h.theta, oracle::pi / 2, 1e-12);
    EXPECT_NEAR(h.phi, thetas[i], 1e-12);
    EXPECT_EQ(h.l1, ls[i][0]);
  }
}

TEST(Hyops, RejectsCrossTerms) {
  Ket4 c;
  c << 1.0, 0.1, 0.0, 1.0;
  EXPECT_THROW(hyops_coord(TwoDofKet::make(c, 0, 1)), NotOnSphere);
}

TEST(Hyops, RoundTripProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.01, oracle::pi - 0.01), ph(0.0, 2 * oracle::pi);
  for (int i = 0; i < 500; ++i) {
    const HyopsCoord in{th(rng), ph(rng), 2, -1};
    const HyopsCoord out = hyops_coord(ket_from_hyops(in));
    EXPECT_NEAR(out.theta, in.theta, 1e-12);
    double d = std::abs(out.phi - in.phi);
    d = std::min(d, 2 * oracle::pi - d);
    EXPECT_LT(d, 1e-12);
  }
}

TEST(Capacity, Arithmetic) {
  EXPECT_EQ(encoding_capacity(11).conventional, 21);
  EXPECT_EQ(encoding_capacity(11).perfect, 121);
  EXPECT_EQ(encoding_capacity(1).conventional, 1);
  EXPECT_EQ(encoding_capacity(1).perfect, 1);
  EXPECT_EQ(encoding_capacity(2).conventional, 3);
  EXPECT_EQ(encoding_capacity(2).perfect, 4);
  EXPECT_THROW(encoding_capacity(0), DomainError);
}

TEST(PpbDescriptor, ParseAndFormat) {
  const auto d = PpbDescriptor::parse("PPB(2,-2,270)");
  EXPECT_EQ(d.l1, 2);
  EXPECT_EQ(d.l2, -2);
  EXPECT_DOUBLE_EQ(d.theta_rad(), 1.5 * oracle::pi);
  EXPECT_EQ(d.str(), "PPB(2,-2,270)");
  EXPECT_EQ(PpbDescriptor::parse(" PPB( -3 , 4 , 90.5 ) ").theta_deg, 90.5);
  EXPECT_THROW(PpbDescriptor::parse("PPB(1,3)"), ConfigError);
  EXPECT_THROW(PpbDescriptor::parse("LG(1,3,0)"), ConfigError);
  EXPECT_THROW(PpbDescriptor::parse("PPB(a,3,0)"), ConfigError);
}
