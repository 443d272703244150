#pragma once

// Grid-sampled complex scalar fields and analytic mode synthesis.
//
// Sample (ix, iy) sits at x = (ix + 0.5 - n/2) * pitch, y = (iy + 0.5 - n/2) * pitch,
// stored row-major (iy outer). No sample lies on the optical axis.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "povmem/errors.hpp"

namespace povmem {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into [0, 2*pi).
inline double wrap_phase(double phase) {
  double w = phase - kTwoPi * std::floor(phase / kTwoPi);
  return (w >= kTwoPi || w < 0.0) ? 0.0 : w;
}

struct GridSpec {
  int n = 512;
  double pitch = 1.5625e-6;        // m per sample
  double wavelength = 795e-9;      // m

  static GridSpec make(int n, double pitch, double wavelength) {
    if (n < 64 || (n & (n - 1)) != 0) {
      throw DomainError("grid size must be a power of two >= 64, got " + std::to_string(n));
    }
    if (!(pitch > 0.0) || !std::isfinite(pitch)) throw DomainError("grid pitch must be > 0");
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw DomainError("wavelength must be > 0");
    return GridSpec{n, pitch, wavelength};
  }

  double wave_number() const { return kTwoPi / wavelength; }
  double extent() const { return n * pitch; }
  double coord(int i) const { return (i + 0.5 - n / 2.0) * pitch; }
  std::size_t size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(n); }

  // Grids produced by chains of transforms accumulate rounding in the pitch,
  // so equality is relative to 1e-12.
  bool matches(const GridSpec& o) const {
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
    return n == o.n && close(pitch, o.pitch) && close(wavelength, o.wavelength);
  }
};

class TransverseField {
 public:
  explicit TransverseField(GridSpec grid) : grid_(grid), amp_(grid.size(), cplx{}) {}

  TransverseField(GridSpec grid, std::vector<cplx> amplitude) : grid_(grid), amp_(std::move(amplitude)) {
    if (amp_.size() != grid_.size()) {
      throw GridMismatch("amplitude array has " + std::to_string(amp_.size()) + " samples, grid needs " +
                         std::to_string(grid_.size()));
    }
  }

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n; }

  cplx operator()(int ix, int iy) const { return amp_[index(ix, iy)]; }
  cplx& operator()(int ix, int iy) { return amp_[index(ix, iy)]; }

  std::span<const cplx> samples() const { return amp_; }
  std::span<cplx> samples() { return amp_; }

  // Sum of |E|^2 without the area measure.
  double sum_intensity() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
  }

  // Total power: integral of |E|^2 dA.
  double power() const { return sum_intensity() * grid_.pitch * grid_.pitch; }

  TransverseField scaled(cplx factor) const {
    TransverseField out = *this;
    for (auto& a : out.amp_) a *= factor;
    return out;
  }

  TransverseField normalized(double target_power = 1.0) const {
    double p = power();
    if (!(p > 0.0)) throw DegenerateField("cannot normalize a zero-power field");
    return scaled(std::sqrt(target_power / p));
  }

  std::vector<double> intensity() const {
    std::vector<double> out(amp_.size());
    std::transform(amp_.begin(), amp_.end(), out.begin(), [](cplx a) { return std::norm(a); });
    return out;
  }

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid_.n) + static_cast<std::size_t>(ix);
  }

  GridSpec grid_;
  std::vector<cplx> amp_;
};

// ---------------------------------------------------------------------------
// Mode specifications

struct GaussianMode {
  double waist;
};

// p = 0 only.
struct LaguerreGaussMode {
  int l;
  double waist;
};

struct BesselGaussMode {
  int l;
  double radial_wavenumber;  // k_r, 1/m
  double envelope_waist;     // Gaussian apodization waist, m
};

// Ring of radius r_r and Gaussian half-width w0 carrying exp(i l phi). When a
// focal length is given the field carries the i^(l-1) * 2f/(k w0^2) amplitude
// prefactor of the Fourier-transformed Bessel-Gauss beam and is not normalized.
struct PerfectVortexMode {
  int l;
  double ring_radius;
  double waist;
  std::optional<double> focal_length{};
};

using ModeSpec = std::variant<GaussianMode, LaguerreGaussMode, BesselGaussMode, PerfectVortexMode>;

inline int topological_charge(const ModeSpec& spec) {
  return std::visit(
      [](const auto& m) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, GaussianMode>) {
          return 0;
        } else {
          return m.l;
        }
      },
      spec);
}

// Integer-order Bessel function of the first kind, negative orders included.
inline double bessel_j(int order, double x) {
  const int m = std::abs(order);
  double v = std::cyl_bessel_j(static_cast<double>(m), std::abs(x));
  if (x < 0.0 && (m % 2) == 1) v = -v;
  if (order < 0 && (m % 2) == 1) v = -v;
  return v;
}

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be > 0");
}

// Characteristic radius used by the sampling guard.
inline double characteristic_radius(const ModeSpec& spec) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMode>) {
          return m.waist;
        } else if constexpr (std::is_same_v<T, LaguerreGaussMode>) {
          return m.waist * std::sqrt(std::abs(m.l) + 1.0);
        } else if constexpr (std::is_same_v<T, BesselGaussMode>) {
          return m.envelope_waist;
        } else {
          return m.ring_radius + m.waist;
        }
      },
      spec);
}

inline void check_sampling(const ModeSpec& spec, const GridSpec& grid) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BesselGaussMode>) {
          require_positive(m.radial_wavenumber, "radial wavenumber");
          require_positive(m.envelope_waist, "envelope waist");
          if (m.radial_wavenumber * grid.pitch >= kPi) {
            throw SamplingError("Bessel radial oscillation exceeds Nyquist (k_r * pitch >= pi)");
          }
        } else if constexpr (std::is_same_v<T, PerfectVortexMode>) {
          require_positive(m.ring_radius, "ring radius");
          require_positive(m.waist, "waist");
          if (m.focal_length) require_positive(*m.focal_length, "focal length");
          if (m.waist < grid.pitch) throw SamplingError("ring width below one sample");
          if (std::abs(m.l) * grid.pitch / m.ring_radius >= kPi) {
            throw SamplingError("azimuthal phase gradient exceeds Nyquist on the ring");
          }
        } else {
          require_positive(m.waist, "waist");
          if (m.waist < grid.pitch) throw SamplingError("waist below one sample");
          if constexpr (std::is_same_v<T, LaguerreGaussMode>) {
            if (m.l != 0) {
              double r_peak = m.waist * std::sqrt(std::abs(m.l) / 2.0);
              if (std::abs(m.l) * grid.pitch / r_peak >= kPi) {
                throw SamplingError("azimuthal phase gradient exceeds Nyquist at the LG ring");
              }
            }
          }
        }
      },
      spec);
  const double rc = characteristic_radius(spec);
  if (rc >= grid.extent() / 4.0) {
    throw SamplingError("mode characteristic radius " + std::to_string(rc) + " m does not fit the grid (limit " +
                        std::to_string(grid.extent() / 4.0) + " m)");
  }
}

}  // namespace detail

// Samples the analytic mode on the grid. Unit power, except for the
// perfect vortex with a focal length, which keeps its physical prefactor.
inline TransverseField synthesize(const ModeSpec& spec, const GridSpec& grid) {
  detail::check_sampling(spec, grid);
  TransverseField field(grid);
  const int n = grid.n;
  bool normalize = true;

  auto fill = [&](auto&& value_at) {
    for (int iy = 0; iy < n; ++iy) {
      const double y = grid.coord(iy);
      for (int ix = 0; ix < n; ++ix) {
        const double x = grid.coord(ix);
        field(ix, iy) = value_at(std::hypot(x, y), std::atan2(y, x));
      }
    }
  };

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GaussianMode>) {
          const double w2 = m.waist * m.waist;
          fill([&](double r, double) { return cplx(std::exp(-r * r / w2), 0.0); });
        } else if constexpr (std::is_same_v<T, LaguerreGaussMode>) {
          const double w2 = m.waist * m.waist;
          const int al = std::abs(m.l);
          fill([&](double r, double phi) {
            double radial = std::pow(std::sqrt(2.0) * r / m.waist, al) * std::exp(-r * r / w2);
            return std::polar(radial, m.l * phi);
          });
        } else if constexpr (std::is_same_v<T, BesselGaussMode>) {
          const double w2 = m.envelope_waist * m.envelope_waist;
          fill([&](double r, double phi) {
            double radial = bessel_j(m.l, m.radial_wavenumber * r) * std::exp(-r * r / w2);
            return std::polar(1.0, m.l * phi) * radial;
          });
        } else {
          const double w2 = m.waist * m.waist;
          cplx prefactor{1.0, 0.0};
          if (m.focal_length) {
            normalize = false;
            const double f = *m.focal_length;
            prefactor = std::polar(2.0 * f / (grid.wave_number() * w2), kPi / 2.0 * (m.l - 1));
          }
          fill([&](double r, double phi) {
            const double d = r - m.ring_radius;
            return prefactor * std::polar(std::exp(-d * d / w2), m.l * phi);
          });
        }
      },
      spec);

  if (!(field.sum_intensity() > 0.0)) throw DegenerateField("synthesized mode has zero power on the grid");
  return normalize ? field.normalized() : field;
}

// Discrete integral of conj(a) * b dA.
inline cplx inner_product(const TransverseField& a, const TransverseField& b) {
  if (!a.grid().matches(b.grid())) throw GridMismatch("inner_product requires identical grids");
  const auto sa = a.samples();
  const auto sb = b.samples();
  cplx acc{};
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::conj(sa[i]) * sb[i];
  const double dA = a.grid().pitch * a.grid().pitch;
  return acc * dA;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Radial centroid of the azimuthally averaged intensity,
//   R = int r Ibar(r) dr / int Ibar(r) dr = sum I / sum (I / r).
inline double ring_radius(const TransverseField& f, Point2 center = {}) {
  const auto& g = f.grid();
  if (!(f.sum_intensity() > 1e-200)) throw DegenerateField("ring_radius of a zero-power field");
  double num = 0.0;
  double den = 0.0;
  for (int iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy) - center.y;
    for (int ix = 0; ix < g.n; ++ix) {
      const double r = std::hypot(g.coord(ix) - center.x, y);
      if (r < 1e-9 * g.pitch) continue;
      const double I = std::norm(f(ix, iy));
      num += I;
      den += I / r;
    }
  }
  if (!(den > 0.0)) throw DegenerateField("ring_radius: no intensity off axis");
  return num / den;
}

// Radius of the maximum of the azimuthally averaged intensity, refined to
// sub-sample precision with a parabola through the three bins around the
// peak. Returns 0 for an on-axis spot.
inline double peak_radius(const TransverseField& f, Point2 center = {}) {
  const auto& g = f.grid();
  if (!(f.sum_intensity() > 1e-200)) throw DegenerateField("peak_radius of a zero-power field");
  const int bins = g.n;
  std::vector<double> sum_i(bins, 0.0), sum_r(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (int iy = 0; iy < g.n; ++iy) {
    const double y = g.coord(iy) - center.y;
    for (int ix = 0; ix < g.n; ++ix) {
      const double r = std::hypot(g.coord(ix) - center.x, y);
      const int b = static_cast<int>(r / g.pitch);
      if (b >= bins) continue;
      sum_i[b] += std::norm(f(ix, iy));
      sum_r[b] += r;
      ++count[b];
    }
  }
  std::vector<double> rb, ib;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    rb.push_back(sum_r[b] / count[b]);
    ib.push_back(sum_i[b] / count[b]);
  }
  const auto k = static_cast<std::size_t>(std::distance(ib.begin(), std::max_element(ib.begin(), ib.end())));
  if (k == 0) return 0.0;
  if (k + 1 >= ib.size()) return rb[k];
  // Vertex of the parabola through three (r, I) points with uneven spacing.
  const double x0 = rb[k - 1], x1 = rb[k], x2 = rb[k + 1];
  const double y0 = ib[k - 1], y1 = ib[k], y2 = ib[k + 1];
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double curv = (d1 - d0) / (x2 - x0);
  if (!(curv < 0.0)) return x1;
  const double vertex = 0.5 * (x0 + x1) - d0 / (2.0 * curv);
  return std::clamp(vertex, x0, x2);
}

// Bilinear interpolation at a physical point; zero outside the sampled square.
inline cplx sample_bilinear(const TransverseField& f, double x, double y) {
  const auto& g = f.grid();
  const double fx = x / g.pitch + g.n / 2.0 - 0.5;
  const double fy = y / g.pitch + g.n / 2.0 - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0;
  const double ty = fy - y0;
  auto at = [&](int ix, int iy) -> cplx {
    if (ix < 0 || iy < 0 || ix >= g.n || iy >= g.n) return {};
    return f(ix, iy);
  };
  return (1 - tx) * (1 - ty) * at(x0, y0) + tx * (1 - ty) * at(x0 + 1, y0) + (1 - tx) * ty * at(x0, y0 + 1) +
         tx * ty * at(x0 + 1, y0 + 1);
}

// Bilinear resampling onto another grid (same wavelength assumed).
inline TransverseField resample_bilinear(const TransverseField& f, const GridSpec& target) {
  TransverseField out(target);
  for (int iy = 0; iy < target.n; ++iy) {
    for (int ix = 0; ix < target.n; ++ix) {
      out(ix, iy) = sample_bilinear(f, target.coord(ix), target.coord(iy));
    }
  }
  return out;
}

// Intensity sampled on a circle, counter-clockwise from the +x axis.
inline std::vector<double> azimuthal_profile(const TransverseField& f, double radius, int samples,
                                             Point2 center = {}) {
  std::vector<double> out(static_cast<std::size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    const double phi = kTwoPi * s / samples;
    out[static_cast<std::size_t>(s)] =
        std::norm(sample_bilinear(f, center.x + radius * std::cos(phi), center.y + radius * std::sin(phi)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// SLM holograms

struct HologramMask {
  GridSpec grid;
  std::vector<double> phase;  // [0, 2*pi), row-major like TransverseField
  double carrier_period;      // blazed grating period along x, m

  double operator()(int ix, int iy) const {
    return phase[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(ix)];
  }

  // Phase-only transmission exp(i * phase) as a field.
  TransverseField transmission() const {
    TransverseField t(grid);
    auto s = t.samples();
    for (std::size_t i = 0; i < phase.size(); ++i) s[i] = std::polar(1.0, phase[i]);
    return t;
  }

  // 8-bit levels round(phase / 2pi * 255).
  std::vector<std::uint8_t> levels() const {
    std::vector<std::uint8_t> out(phase.size());
    for (std::size_t i = 0; i < phase.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(std::lround(phase[i] / kTwoPi * 255.0));
    }
    return out;
  }
};

// Fork grating: wrap(l*phi + k_r*r [Bessel-Gauss only] + 2*pi*x/carrier_period).
inline HologramMask make_hologram(const ModeSpec& target, const GridSpec& grid, double carrier_period) {
  if (!(carrier_period >= 4.0 * grid.pitch)) {
    throw SamplingError("carrier period must be at least 4 samples");
  }
  double k_r = 0.0;
  if (const auto* bg = std::get_if<BesselGaussMode>(&target)) k_r = bg->radial_wavenumber;
  if ((k_r + kTwoPi / carrier_period) * grid.pitch > kPi) {
    throw SamplingError("carrier plus radial phase gradient aliases on the SLM grid");
  }
  const int l = topological_charge(target);
  HologramMask mask{grid, std::vector<double>(grid.size()), carrier_period};
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.coord(iy);
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.coord(ix);
      const double phi = l * std::atan2(y, x) + k_r * std::hypot(x, y) + kTwoPi * x / carrier_period;
      mask.phase[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.n) + static_cast<std::size_t>(ix)] =
          wrap_phase(phi);
    }
  }
  return mask;
}

// Binary PGM (P5), row-major, top-left origin = first stored row.
inline void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "P5\n" << width << " " << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

inline void export_mask_image(const HologramMask& mask, const std::filesystem::path& path) {
  const auto lv = mask.levels();
  write_pgm(path, mask.grid.n, mask.grid.n, lv);
}

// ---------------------------------------------------------------------------
// Debug field dump: 16-byte header {n: u32 le, 4 zero bytes, pitch: f64 le},
// then n*n (re, im) pairs as little-endian float64.

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw IoError("truncated field dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline void write_field_dump(const TransverseField& f, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.n()));
  detail::put_le<std::uint32_t>(os, 0u);
  detail::put_le<double>(os, f.grid().pitch);
  for (const auto& a : f.samples()) {
    detail::put_le<double>(os, a.real());
    detail::put_le<double>(os, a.imag());
  }
  if (!os) throw IoError("write failed: " + path.string());
}

// The dump does not carry the wavelength; the caller supplies it.
inline TransverseField read_field_dump(const std::filesystem::path& path, double wavelength) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  const auto n = detail::get_le<std::uint32_t>(is);
  (void)detail::get_le<std::uint32_t>(is);
  const auto pitch = detail::get_le<double>(is);
  const GridSpec grid = GridSpec::make(static_cast<int>(n), pitch, wavelength);
  std::vector<cplx> amp(grid.size());
  for (auto& a : amp) {
    const double re = detail::get_le<double>(is);
    const double im = detail::get_le<double>(is);
    a = {re, im};
  }
  return TransverseField(grid, std::move(amp));
}

}  // namespace povmem
