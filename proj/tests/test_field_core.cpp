#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "oracles.hpp"
#include "povmem/field_core.hpp"
#include "povmem/fourier_optics.hpp"

using namespace povmem;

namespace {

const GridSpec kGrid = GridSpec::make(512, 1.5625e-6, 795e-9);  // ring 100 um at n * pitch / 8
const GridSpec kLgGrid = GridSpec::make(512, 32e-6, 795e-9);
constexpr double kRing = 100e-6;
constexpr double kWaist = 20e-6;

TransverseField pov(int l, const GridSpec& g = kGrid) { return synthesize(PerfectVortexMode{l, kRing, kWaist}, g); }

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("povmem_test_" + name);
}

}  // namespace

TEST(GridSpec, RejectsInvalidGrids) {
  EXPECT_THROW(GridSpec::make(32, 1e-6, 795e-9), DomainError);
  EXPECT_THROW(GridSpec::make(100, 1e-6, 795e-9), DomainError);
  EXPECT_THROW(GridSpec::make(64, 0.0, 795e-9), DomainError);
  EXPECT_THROW(GridSpec::make(64, 1e-6, -1.0), DomainError);
  EXPECT_NEAR(kGrid.wave_number(), 2 * oracle::pi / 795e-9, 1e-6);
  // No sample on the axis.
  EXPECT_DOUBLE_EQ(kGrid.coord(255), -0.5 * kGrid.pitch);
  EXPECT_DOUBLE_EQ(kGrid.coord(256), 0.5 * kGrid.pitch);
}

TEST(Synthesize, PovChargeZeroIsRealRing) {
  const auto f = pov(0);
  const double peak = std::abs(f(256, 256 + 64));  // ~ on the ring
  double max_imag = 0.0;
  for (int iy = 0; iy < kGrid.n; iy += 7) {
    for (int ix = 0; ix < kGrid.n; ix += 7) {
      const double r = std::hypot(kGrid.coord(ix), kGrid.coord(iy));
      const double expect = std::exp(-(r - kRing) * (r - kRing) / (kWaist * kWaist));
      max_imag = std::max(max_imag, std::abs(f(ix, iy).imag()));
      const double ring_at = std::hypot(kGrid.coord(256), kGrid.coord(256 + 64));
      const double ref = std::exp(-(ring_at - kRing) * (ring_at - kRing) / (kWaist * kWaist));
      EXPECT_NEAR(f(ix, iy).real() / peak, expect / ref, 1e-12);
    }
  }
  EXPECT_EQ(max_imag, 0.0);
}

TEST(Synthesize, PovModulusIndependentOfCharge) {
  const auto ref = pov(0);
  for (int l = -5; l <= 5; ++l) {
    const auto f = pov(l);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.samples().size(); ++i) {
      worst = std::max(worst, std::abs(std::abs(f.samples()[i]) - std::abs(ref.samples()[i])));
    }
    EXPECT_LT(worst, 1e-12 * std::abs(ref(256, 256 + 64))) << "l=" << l;
  }
  // Only the phase differs between l = 3 and l = -5.
  const auto a = pov(3);
  const auto b = pov(-5);
  const double phi = std::atan2(kGrid.coord(300), kGrid.coord(350));
  const cplx ratio = a(350, 300) / b(350, 300);
  EXPECT_NEAR(std::arg(ratio), std::arg(std::polar(1.0, 8 * phi)), 1e-9);
}

TEST(Synthesize, UnitPowerUnlessPrefactorRequested) {
  EXPECT_NEAR(pov(2).power(), 1.0, 1e-12);
  EXPECT_NEAR(synthesize(LaguerreGaussMode{3, 1e-3}, kLgGrid).power(), 1.0, 1e-12);
  const double f = 0.075;
  const auto raw = synthesize(PerfectVortexMode{2, kRing, kWaist, f}, kGrid);
  // i^(l-1) 2f/(k w0^2) on the ring, phase l*phi.
  const double amp = 2 * f / (kGrid.wave_number() * kWaist * kWaist);
  const int ix = 256 + 64, iy = 255;
  const double x = kGrid.coord(ix), y = kGrid.coord(iy), r = std::hypot(x, y);
  const cplx expect = std::polar(amp, oracle::pi / 2 * (2 - 1)) * std::polar(std::exp(-(r - kRing) * (r - kRing) / (kWaist * kWaist)), 2 * std::atan2(y, x));
  EXPECT_NEAR(std::abs(raw(ix, iy) - expect), 0.0, 1e-9 * amp);
}

TEST(Synthesize, SamplingGuard) {
  EXPECT_THROW(synthesize(PerfectVortexMode{1, 190e-6, 20e-6}, kGrid), SamplingError);
  EXPECT_THROW(synthesize(BesselGaussMode{1, 3.2 / kGrid.pitch, 50e-6}, kGrid), SamplingError);
  EXPECT_THROW(synthesize(GaussianMode{0.5 * kGrid.pitch}, kGrid), SamplingError);
  EXPECT_THROW(synthesize(LaguerreGaussMode{5, 2e-3}, kLgGrid), SamplingError);
  EXPECT_THROW(synthesize(PerfectVortexMode{1, -1.0, 20e-6}, kGrid), DomainError);
}

TEST(InnerProduct, SelfIsPowerAndZeroFieldGivesZero) {
  const auto f = synthesize(LaguerreGaussMode{2, 1e-3}, kLgGrid).scaled(3.0);
  const cplx s = inner_product(f, f);
  EXPECT_NEAR(s.real(), f.power(), 1e-12 * f.power());
  EXPECT_EQ(s.imag(), 0.0);
  EXPECT_GT(s.real(), 0.0);
  EXPECT_EQ(inner_product(f, TransverseField(kLgGrid)), cplx(0.0, 0.0));
  EXPECT_THROW(inner_product(f, pov(0)), GridMismatch);
}

TEST(InnerProduct, AzimuthalOrthogonalityOfRingModes) {
  const auto a = pov(2);
  const auto b = pov(3);
  const double scale = std::sqrt(a.power() * b.power());
  EXPECT_LT(std::abs(inner_product(a, b)), 1e-6 * scale);
  // Charges differing by a multiple of 4 are not zero by lattice symmetry alone.
  EXPECT_LT(std::abs(inner_product(pov(-2), pov(2))), 1e-6 * scale);
  EXPECT_LT(std::abs(inner_product(pov(1), pov(5))), 1e-6 * scale);
}

TEST(InnerProduct, SesquilinearPositiveDefiniteProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GridSpec g = GridSpec::make(64, 1e-6, 795e-9);
  auto random_field = [&] {
    TransverseField f(g);
    for (auto& s : f.samples()) s = {u(rng), u(rng)};
    return f;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_field();
    const auto b = random_field();
    const auto c = random_field();
    const cplx alpha{u(rng), u(rng)};
    TransverseField combo(g);
    for (std::size_t i = 0; i < combo.samples().size(); ++i) combo.samples()[i] = alpha * b.samples()[i] + c.samples()[i];
    const cplx lhs = inner_product(a, combo);
    const cplx rhs = alpha * inner_product(a, b) + inner_product(a, c);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * std::abs(rhs) + 1e-25);
    EXPECT_LT(std::abs(inner_product(a, b) - std::conj(inner_product(b, a))), 1e-25);
    EXPECT_GT(inner_product(a, a).real(), 0.0);
  }
}

TEST(RingRadius, PovMatchesDesignRadius) {
  EXPECT_NEAR(ring_radius(pov(0)), kRing, kGrid.pitch / 2);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  for (int l = -5; l <= 5; ++l) {
    const double r = ring_radius(pov(l));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
  }
  EXPECT_LT((hi - lo) / (sum / 11), 0.01);
}

TEST(RingRadius, LgCentroidMatchesProfileQuadrature) {
  const double w = 1e-3;
  double previous = -1.0;
  for (int l = 0; l <= 6; ++l) {
    const double r = ring_radius(synthesize(LaguerreGaussMode{l, w}, kLgGrid));
    // The 1/r weight is singular on axis, which costs the Gaussian about a percent.
    const double tol = l == 0 ? 0.02 : 0.005;
    EXPECT_NEAR(r, oracle::lg_profile_centroid(l, w), tol * oracle::lg_profile_centroid(l, w)) << "l=" << l;
    EXPECT_GT(r, previous);
    previous = r;
  }
}

TEST(RingRadius, GridConvergence) {
  const GridSpec coarse = GridSpec::make(256, 2 * kGrid.pitch, kGrid.wavelength);
  const double a = ring_radius(synthesize(PerfectVortexMode{3, kRing, kWaist}, coarse));
  const double b = ring_radius(pov(3));
  EXPECT_LT(std::abs(a - b) / b, 1e-3);
}

TEST(RingRadius, DegenerateField) {
  EXPECT_THROW(ring_radius(TransverseField(kGrid)), DegenerateField);
  EXPECT_THROW(peak_radius(TransverseField(kGrid)), DegenerateField);
}

TEST(PeakRadius, LgMatchesAnalyticArgmax) {
  const double w = 1e-3;
  for (int l = 1; l <= 5; ++l) {
    const double expect = oracle::lg_radial_argmax(l, w);
    EXPECT_NEAR(peak_radius(synthesize(LaguerreGaussMode{l, w}, kLgGrid)), expect, 0.01 * expect) << "l=" << l;
    EXPECT_NEAR(peak_radius(synthesize(LaguerreGaussMode{-l, w}, kLgGrid)), expect, 0.01 * expect) << "l=" << -l;
  }
  const double ratio = peak_radius(synthesize(LaguerreGaussMode{4, w}, kLgGrid)) /
                       peak_radius(synthesize(LaguerreGaussMode{1, w}, kLgGrid));
  EXPECT_NEAR(ratio, oracle::lg_radial_argmax(4, w) / oracle::lg_radial_argmax(1, w), 0.02);
  EXPECT_NEAR(ratio, 2.0, 0.02);
  EXPECT_EQ(peak_radius(synthesize(GaussianMode{1e-3}, kLgGrid)), 0.0);
}

TEST(Hologram, ChargeZeroIsPlainBlazedGrating) {
  const HologramMask m = make_hologram(GaussianMode{1e-3}, GridSpec::make(128, 8e-6, 795e-9), 64e-6);
  for (int ix = 0; ix < 128; ++ix) {
    for (int iy = 1; iy < 128; ++iy) EXPECT_DOUBLE_EQ(m(ix, iy), m(ix, 0));
  }
  for (double p : m.phase) {
    EXPECT_GE(p, 0.0);
    EXPECT_LT(p, 2 * oracle::pi);
  }
}

TEST(Hologram, ForkWindingEqualsCharge) {
  const GridSpec g = GridSpec::make(128, 8e-6, 795e-9);
  for (int l = -5; l <= 5; ++l) {
    const HologramMask m = make_hologram(LaguerreGaussMode{l, 200e-6}, g, 64e-6);
    // Counter-clockwise square loop of pixels at Chebyshev distance 4 from the axis.
    const int lo = 64 - 4, hi = 64 + 3;
    std::vector<double> loop;
    for (int ix = lo; ix < hi; ++ix) loop.push_back(m(ix, lo));
    for (int iy = lo; iy < hi; ++iy) loop.push_back(m(hi, iy));
    for (int ix = hi; ix > lo; --ix) loop.push_back(m(ix, hi));
    for (int iy = hi; iy > lo; --iy) loop.push_back(m(lo, iy));
    EXPECT_EQ(oracle::winding_number(loop), l) << "l=" << l;
  }
}

TEST(Hologram, RejectsAliasedCarrier) {
  const GridSpec g = GridSpec::make(128, 8e-6, 795e-9);
  EXPECT_THROW(make_hologram(GaussianMode{1e-3}, g, 3 * 8e-6), SamplingError);
  EXPECT_THROW(make_hologram(BesselGaussMode{1, 3.0 / 8e-6, 1e-3}, g, 32e-6), SamplingError);
}

TEST(Hologram, BesselMaskFarFieldRingInFirstOrder) {
  const GridSpec g = GridSpec::make(512, 8e-6, 795e-9);
  const LensSpec lens = LensSpec::make(0.075);
  const double du = g.wavelength * lens.focal_length / (g.n * g.pitch);
  const double k = g.wave_number();
  const double ring = 40 * du;
  const double k_r = ring * k / lens.focal_length;
  const double period = 8 * g.pitch;
  const HologramMask mask = make_hologram(BesselGaussMode{3, k_r, 1e-3}, g, period);

  TransverseField lit = synthesize(GaussianMode{64 * g.pitch}, g);
  const auto t = mask.transmission();
  for (std::size_t i = 0; i < lit.samples().size(); ++i) lit.samples()[i] *= t.samples()[i];
  const TransverseField far = lens_fourier(lit, lens);

  const Point2 order1{g.wavelength * lens.focal_length / period, 0.0};
  const double r = peak_radius(far, order1);
  EXPECT_NEAR(r, ring, 0.02 * ring);
}

TEST(Hologram, ExportIsBitExactPgm) {
  const HologramMask m = make_hologram(LaguerreGaussMode{2, 200e-6}, GridSpec::make(64, 8e-6, 795e-9), 64e-6);
  const auto p1 = temp_file("mask1.pgm");
  const auto p2 = temp_file("mask2.pgm");
  export_mask_image(m, p1);
  export_mask_image(m, p2);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  const std::string a = slurp(p1);
  EXPECT_EQ(a, slurp(p2));
  const std::string header = "P5\n64 64\n255\n";
  ASSERT_EQ(a.size(), header.size() + 64 * 64);
  EXPECT_EQ(a.substr(0, header.size()), header);
  for (int i = 0; i < 64 * 64; ++i) {
    const auto v = static_cast<unsigned char>(a[header.size() + static_cast<std::size_t>(i)]);
    EXPECT_EQ(static_cast<long>(v), std::lround(m.phase[static_cast<std::size_t>(i)] / (2 * oracle::pi) * 255.0));
  }
  HologramMask half{m.grid, std::vector<double>(m.phase.size(), oracle::pi), m.carrier_period};
  EXPECT_EQ(half.levels().front(), 128);  // round(127.5)
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST(FieldDump, HeaderAndRoundTrip) {
  const auto f = synthesize(LaguerreGaussMode{1, 10e-6}, GridSpec::make(64, 1.5e-6, 795e-9));
  const auto path = temp_file("field.bin");
  write_field_dump(f, path);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + 64u * 64u * 16u);
  std::ifstream is(path, std::ios::binary);
  unsigned char head[16];
  is.read(reinterpret_cast<char*>(head), 16);
  EXPECT_EQ(head[0], 64);
  EXPECT_EQ(head[1] | head[2] | head[3] | head[4] | head[5] | head[6] | head[7], 0);
  double pitch;
  std::memcpy(&pitch, head + 8, 8);
  EXPECT_EQ(pitch, 1.5e-6);
  const auto back = read_field_dump(path, 795e-9);
  ASSERT_TRUE(back.grid().matches(f.grid()));
  for (std::size_t i = 0; i < f.samples().size(); ++i) EXPECT_EQ(back.samples()[i], f.samples()[i]);
  std::filesystem::remove(path);
}
