#pragma once

// Projective measurements on the {H,V} x {L1,L2} space: interference scans,
// visibility-based fidelity estimates, 16-setting tomography and the Uhlmann
// fidelity.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "povmem/density_matrix.hpp"
#include "povmem/errors.hpp"
#include "povmem/field_core.hpp"

namespace povmem {

struct MeasurementSetting {
  Ket2 pol;
  Ket2 oam;
  std::string label;

  static MeasurementSetting make(Ket2 pol, Ket2 oam, std::string label = {}) {
    if (!(pol.norm() > 0.0) || !(oam.norm() > 0.0)) throw DomainError("measurement kets must be nonzero");
    return MeasurementSetting{pol.normalized(), oam.normalized(), std::move(label)};
  }

  Ket4 ket() const {
    Ket4 k;
    for (int p = 0; p < 2; ++p)
      for (int o = 0; o < 2; ++o) k(2 * p + o) = pol(p) * oam(o);
    return k;
  }

  Mat4 projector() const {
    const Ket4 k = ket();
    return k * k.adjoint();
  }
};

namespace basis {

// (first + e^{i phase} second) / sqrt(2)
inline Ket2 superposition(double phase) {
  Ket2 k;
  k << 1.0 / std::sqrt(2.0), std::polar(1.0 / std::sqrt(2.0), phase);
  return k;
}
inline Ket2 first() { return Ket2(1.0, 0.0); }
inline Ket2 second() { return Ket2(0.0, 1.0); }

}  // namespace basis

inline double project(const DensityMatrix& rho, const MeasurementSetting& s) {
  const Ket4 k = s.ket();
  const double p = (k.adjoint() * rho.matrix() * k)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

// Projection used in the interference scans: polarization (H + e^{i beta} V)/sqrt2,
// OAM (L1 + e^{i alpha} L2)/sqrt2.
inline MeasurementSetting diagonal_setting(double beta, double alpha) {
  return MeasurementSetting::make(basis::superposition(beta), basis::superposition(alpha));
}

struct SinusoidFit {
  double amplitude;   // A
  double theta;       // [0, 2 pi)
  double visibility;  // [0, 1]
  bool indeterminate; // zero signal; theta and visibility reported as 0
};

// Least squares of I(alpha) = a + b cos(alpha) + c sin(alpha), read as
// A (1 + V cos(theta - alpha)).
inline SinusoidFit fit_sinusoid(std::span<const double> alpha, std::span<const double> intensity) {
  if (alpha.size() != intensity.size() || alpha.size() < 3) throw DomainError("fit needs >= 3 paired samples");
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d aty = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const Eigen::Vector3d row(1.0, std::cos(alpha[i]), std::sin(alpha[i]));
    ata += row * row.transpose();
    aty += row * intensity[i];
  }
  const Eigen::Vector3d coef = ata.ldlt().solve(aty);
  const double a = coef(0);
  const double amp = std::hypot(coef(1), coef(2));
  const double scale = std::max(1.0, *std::max_element(intensity.begin(), intensity.end()));
  if (!(a > 1e-14 * scale)) return SinusoidFit{0.0, 0.0, 0.0, true};
  return SinusoidFit{a, wrap_phase(std::atan2(coef(2), coef(1))), std::min(1.0, amp / a), false};
}

struct InterferenceScan {
  std::vector<double> alpha;
  std::vector<double> intensity;
  double theta_ref;
  SinusoidFit fit;

  double fit_theta() const { return fit.theta; }
  double fit_visibility() const { return fit.visibility; }
};

inline std::vector<double> uniform_angles(int count) {
  std::vector<double> a(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = kTwoPi * i / count;
  return a;
}

namespace detail {

inline void check_scan_grid(std::span<const double> grid) {
  if (grid.size() < 8) throw DomainError("scan grid needs at least 8 angles");
  for (double a : grid) {
    if (!(a >= 0.0 && a < kTwoPi)) throw DomainError("scan angles must lie in [0, 2 pi)");
  }
}

}  // namespace detail

// OAM-phase scan with the polarization analyzer fixed at (H + V)/sqrt2.
// theta_ref is the preparation phase the fit is compared against.
inline InterferenceScan interference_scan(const DensityMatrix& rho, double theta_ref, std::span<const double> alpha_grid) {
  detail::check_scan_grid(alpha_grid);
  InterferenceScan scan{{alpha_grid.begin(), alpha_grid.end()}, {}, theta_ref, {}};
  scan.intensity.reserve(alpha_grid.size());
  for (double a : alpha_grid) scan.intensity.push_back(project(rho, diagonal_setting(0.0, a)));
  scan.fit = fit_sinusoid(scan.alpha, scan.intensity);
  return scan;
}

// Polarization-phase scan with the OAM analyzer fixed at (L1 + L2)/sqrt2.
inline InterferenceScan polarization_scan(const DensityMatrix& rho, double theta_ref, std::span<const double> beta_grid) {
  detail::check_scan_grid(beta_grid);
  InterferenceScan scan{{beta_grid.begin(), beta_grid.end()}, {}, theta_ref, {}};
  scan.intensity.reserve(beta_grid.size());
  for (double b : beta_grid) scan.intensity.push_back(project(rho, diagonal_setting(b, 0.0)));
  scan.fit = fit_sinusoid(scan.alpha, scan.intensity);
  return scan;
}

enum class Dof { oam, polarization };

// (Imax - Imin) / (Imax + Imin) from the two analyzer settings with the
// highest and lowest ideal outcome for preparation phase theta.
inline double extremal_visibility(const DensityMatrix& rho, double theta, Dof dof) {
  auto setting = [&](double phase) {
    return dof == Dof::oam ? diagonal_setting(0.0, phase) : diagonal_setting(phase, 0.0);
  };
  const double imax = project(rho, setting(theta));
  const double imin = project(rho, setting(theta + kPi));
  if (!(imax + imin > 0.0)) return 0.0;
  return std::clamp((imax - imin) / (imax + imin), 0.0, 1.0);
}

inline double estimate_fidelity_from_visibility(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError("visibility must lie in [0, 1]");
  return (1.0 + 3.0 * v) / 4.0;
}

// Product of {H, V, H+iV, H+V} and {L1, L2, L1+iL2, L1+L2}, polarization-major.
inline std::vector<MeasurementSetting> tomography_settings(int l1, int l2) {
  if (l1 == l2) throw DomainError("tomography needs distinct OAM labels");
  struct Named {
    Ket2 k;
    const char* name;
  };
  const Named pol[] = {{basis::first(), "H"}, {basis::second(), "V"}, {basis::superposition(kPi / 2), "H+iV"},
                       {basis::superposition(0.0), "H+V"}};
  const Named oam[] = {{basis::first(), "L1"}, {basis::second(), "L2"}, {basis::superposition(kPi / 2), "L1+iL2"},
                       {basis::superposition(0.0), "L1+L2"}};
  std::vector<MeasurementSetting> out;
  out.reserve(16);
  for (const auto& p : pol) {
    for (const auto& o : oam) {
      out.push_back(MeasurementSetting::make(p.k, o.k, std::string(p.name) + "," + o.name));
    }
  }
  return out;
}

inline std::vector<double> forward_probabilities(const DensityMatrix& rho, std::span<const MeasurementSetting> settings) {
  std::vector<double> p;
  p.reserve(settings.size());
  for (const auto& s : settings) p.push_back(project(rho, s));
  return p;
}

// Counts ~ Poisson(counts_per_setting * p_k); returns counts / counts_per_setting
// clipped to [0, 1].
template <typename Rng>
std::vector<double> sample_poisson_frequencies(std::span<const double> probabilities, double counts_per_setting, Rng& rng) {
  std::vector<double> f;
  f.reserve(probabilities.size());
  for (double p : probabilities) {
    const double mean = counts_per_setting * p;
    double counts = 0.0;
    if (mean > 0.0) {
      std::poisson_distribution<long long> dist(mean);
      counts = static_cast<double>(dist(rng));
    }
    f.push_back(std::clamp(counts / counts_per_setting, 0.0, 1.0));
  }
  return f;
}

// Hermitian part, negative eigenvalues clipped to zero, trace renormalized.
inline DensityMatrix project_to_physical(const Mat4& m) {
  const Mat4 h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4> es(h);
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0)) throw InvalidState("reconstruction has no positive spectrum");
  ev /= tr;
  Mat4 rho = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  return DensityMatrix::from_matrix(rho);
}

enum class Estimator { clip, mle };

namespace detail {

// Operators Q_k with Tr(Q_k P_l) = delta_kl on the span of the projectors:
// rho = sum_k p_k Q_k.
inline std::vector<Mat4> dual_frame(std::span<const MeasurementSetting> settings) {
  const auto m = static_cast<Eigen::Index>(settings.size());
  if (m != 16) throw SingularFrame("tomography needs exactly 16 settings");
  std::vector<Mat4> proj;
  proj.reserve(settings.size());
  for (const auto& s : settings) proj.push_back(s.projector());
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) gram(i, j) = (proj[static_cast<std::size_t>(i)] * proj[static_cast<std::size_t>(j)]).trace().real();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.rank() < m) throw SingularFrame("settings are not informationally complete");
  const Eigen::MatrixXd ginv = lu.inverse();
  std::vector<Mat4> dual(settings.size(), Mat4::Zero());
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) dual[static_cast<std::size_t>(k)] += ginv(k, l) * proj[static_cast<std::size_t>(l)];
  return dual;
}

inline DensityMatrix mle_refine(const DensityMatrix& start, std::span<const double> freqs,
                                std::span<const MeasurementSetting> settings, int max_iter = 5000) {
  std::vector<Mat4> proj;
  Mat4 s_sum = Mat4::Zero();
  for (const auto& s : settings) {
    proj.push_back(s.projector());
    s_sum += proj.back();
  }
  const Mat4 s_inv = s_sum.inverse();
  Mat4 rho = 0.99 * start.matrix() + 0.01 * Mat4::Identity() / 4.0;
  constexpr double dilution = 0.5;
  for (int it = 0; it < max_iter; ++it) {
    Mat4 r = Mat4::Zero();
    for (std::size_t k = 0; k < proj.size(); ++k) {
      const double p = std::max((rho * proj[k]).trace().real(), 1e-15);
      r += (freqs[k] / p) * proj[k];
    }
    const Mat4 t = Mat4::Identity() + dilution * (s_inv * r - Mat4::Identity());
    Mat4 next = t * rho * t.adjoint();
    next = 0.5 * (next + next.adjoint());
    next /= next.trace().real();
    const double change = (next - rho).cwiseAbs().maxCoeff();
    rho = next;
    if (change < 1e-13) break;
  }
  return project_to_physical(rho);
}

}  // namespace detail

// Linear inversion on the projector frame followed by eigenvalue clipping;
// Estimator::mle additionally runs a diluted R-rho-R likelihood iteration.
inline DensityMatrix reconstruct(std::span<const double> probabilities, std::span<const MeasurementSetting> settings,
                                 Estimator estimator = Estimator::clip) {
  if (probabilities.size() != settings.size()) throw DomainError("one probability per setting required");
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probabilities must lie in [0, 1]");
  }
  const auto dual = detail::dual_frame(settings);
  Mat4 lin = Mat4::Zero();
  for (std::size_t k = 0; k < dual.size(); ++k) lin += probabilities[k] * dual[k];
  DensityMatrix rho = project_to_physical(lin);
  if (estimator == Estimator::mle) rho = detail::mle_refine(rho, probabilities, settings);
  return rho;
}

// Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2. When either state
// is pure to 1e-12 the exact expectation <psi|other|psi> is used, which avoids
// the sqrt(epsilon) error of matrix square roots near rank deficiency.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<Mat4> er(rho.matrix());
  Eigen::SelfAdjointEigenSolver<Mat4> es(sigma.matrix());
  auto pure_overlap = [](const Eigen::SelfAdjointEigenSolver<Mat4>& pure, const DensityMatrix& other) {
    const Ket4 psi = pure.eigenvectors().col(3);
    return std::clamp((psi.adjoint() * other.matrix() * psi)(0, 0).real(), 0.0, 1.0);
  };
  if (er.eigenvalues()(3) >= 1.0 - 1e-12) return pure_overlap(er, sigma);
  if (es.eigenvalues()(3) >= 1.0 - 1e-12) return pure_overlap(es, rho);

  const Eigen::Vector4d sq = er.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat4 root = er.eigenvectors() * sq.cast<cplx>().asDiagonal() * er.eigenvectors().adjoint();
  Mat4 inner = root * sigma.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4> ei(inner, Eigen::EigenvaluesOnly);
  const double tr = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

}  // namespace povmem
