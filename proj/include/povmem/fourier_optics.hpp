#pragma once

// Lens Fourier transforms between focal planes, 4f relays, and the
// Bessel-Gauss -> perfect vortex cross-check.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <vector>

#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"

namespace povmem {

struct LensSpec {
  double focal_length;

  static LensSpec make(double f) {
    if (!(f > 0.0) || !std::isfinite(f)) throw DomainError("focal length must be > 0");
    return LensSpec{f};
  }
};

struct RelaySpec {
  double f_a;
  double f_b;

  static RelaySpec make(double f_a, double f_b) {
    if (!(f_a > 0.0) || !(f_b > 0.0)) throw DomainError("relay focal lengths must be > 0");
    return RelaySpec{f_a, f_b};
  }

  double magnification() const { return f_b / f_a; }
};

namespace detail {

// FFTW's planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

// In-place unnormalized forward 2-D DFT of an n x n row-major array.
// Aligned scratch and FFTW_ESTIMATE keep the result bit-reproducible.
inline void fft2_forward(std::span<cplx> data, int n) {
  std::unique_ptr<fftw_complex, FftwFree> buf(fftw_alloc_complex(data.size()));
  if (!buf) throw std::bad_alloc();
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(n, n, buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  std::memcpy(static_cast<void*>(buf.get()), data.data(), data.size() * sizeof(cplx));
  fftw_execute(plan);
  std::memcpy(static_cast<void*>(data.data()), buf.get(), data.size() * sizeof(cplx));
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

// exp(-2*pi*i * (num mod n) / n) with the reduction done exactly.
inline cplx unit_twiddle(double num, int n) {
  const double r = std::fmod(num, static_cast<double>(n));
  return std::polar(1.0, -kTwoPi * r / n);
}

// Fraction of power within the outer n/16 border of the grid.
inline double edge_power_fraction(const TransverseField& f) {
  const int n = f.n();
  const int band = n / 16;
  double edge = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (ix < band || iy < band || ix >= n - band || iy >= n - band) edge += std::norm(f(ix, iy));
    }
  }
  const double total = f.sum_intensity();
  return total > 0.0 ? edge / total : 0.0;
}

}  // namespace detail

// Optical Fourier transform from the front to the back focal plane:
//   E_out(u) = 1/(i lambda f) * int E_in(x) exp(-2 pi i x.u / (lambda f)) d^2x,
// evaluated exactly on the centered half-pixel lattice. The output pitch is
// lambda f / (n pitch_in); power is conserved.
inline TransverseField lens_fourier(const TransverseField& in, const LensSpec& lens) {
  const GridSpec& g = in.grid();
  const int n = g.n;
  if (!(in.sum_intensity() > 0.0)) throw DegenerateField("lens_fourier of a zero-power field");
  if (detail::edge_power_fraction(in) > 1e-6) {
    throw SamplingError("input field reaches the grid border; its transform would alias");
  }
  const double out_pitch = g.wavelength * lens.focal_length / (n * g.pitch);
  const GridSpec out_grid = GridSpec::make(n, out_pitch, g.wavelength);

  // Sample coordinate index a = j + c with c = (1 - n)/2.
  const double c = 0.5 - n / 2.0;
  std::vector<cplx> pre(static_cast<std::size_t>(n)), post(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    pre[static_cast<std::size_t>(j)] = detail::unit_twiddle(c * j, n);
    post[static_cast<std::size_t>(j)] = detail::unit_twiddle(c * j + c * c, n);
  }

  std::vector<cplx> work(in.samples().begin(), in.samples().end());
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      work[static_cast<std::size_t>(iy) * n + ix] *= pre[static_cast<std::size_t>(ix)] * pre[static_cast<std::size_t>(iy)];
    }
  }
  detail::fft2_forward(work, n);

  // Unitary DFT (1/n) times the continuous-measure factor pitch_in / pitch_out,
  // and the 1/i of the lens kernel.
  const cplx scale = cplx(0.0, -1.0) * (g.pitch / out_pitch) / static_cast<double>(n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      work[static_cast<std::size_t>(iy) * n + ix] *=
          scale * post[static_cast<std::size_t>(ix)] * post[static_cast<std::size_t>(iy)];
    }
  }
  return TransverseField(out_grid, std::move(work));
}

// Two lenses in 4f: inverted image magnified by f_b / f_a.
inline TransverseField relay_4f(const TransverseField& in, const RelaySpec& relay) {
  return lens_fourier(lens_fourier(in, LensSpec{relay.f_a}), LensSpec{relay.f_b});
}

// Perfect vortex produced by a lens of focal length f from a Bessel-Gauss
// beam: ring radius k_r f / k, Gaussian waist 2 f / (k w_env).
inline PerfectVortexMode pov_from_bessel_gauss(const BesselGaussMode& bg, const LensSpec& lens, double wavelength,
                                               bool with_prefactor = false) {
  const double k = kTwoPi / wavelength;
  PerfectVortexMode pov{bg.l, bg.radial_wavenumber * lens.focal_length / k,
                        2.0 * lens.focal_length / (k * bg.envelope_waist), std::nullopt};
  if (with_prefactor) pov.focal_length = lens.focal_length;
  return pov;
}

// L2 distance between the numerically transformed Bessel-Gauss beam and the
// analytic ring, both unit power, phase-aligned at the numeric ring peak.
// Only meaningful for ring radius >= 5 waists.
inline double validate_pov_analytic(const BesselGaussMode& bg, const LensSpec& lens, const GridSpec& grid) {
  const PerfectVortexMode pov = pov_from_bessel_gauss(bg, lens, grid.wavelength);
  if (pov.ring_radius < 5.0 * pov.waist * (1.0 - 1e-9)) {
    throw RegimeViolation("ring radius / waist = " + std::to_string(pov.ring_radius / pov.waist) +
                          " < 5; the analytic ring approximation does not apply");
  }
  const TransverseField numeric = lens_fourier(synthesize(bg, grid), lens).normalized();
  const TransverseField analytic = synthesize(pov, numeric.grid());

  const auto sn = numeric.samples();
  const auto sa = analytic.samples();
  std::size_t peak = 0;
  for (std::size_t i = 1; i < sn.size(); ++i) {
    if (std::norm(sn[i]) > std::norm(sn[peak])) peak = i;
  }
  cplx align = sn[peak] / sa[peak];
  align /= std::abs(align);

  double acc = 0.0;
  for (std::size_t i = 0; i < sn.size(); ++i) acc += std::norm(sn[i] - align * sa[i]);
  const double dA = numeric.grid().pitch * numeric.grid().pitch;
  return std::sqrt(acc * dA);
}

}  // namespace povmem
