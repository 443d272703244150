#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "povmem/errors.hpp"

namespace povmem {

using cplx = std::complex<double>;

// Basis ordering over {H,V} x {L1,L2}: index = 2 * pol + oam.
//   0 = |H,L1>, 1 = |H,L2>, 2 = |V,L1>, 3 = |V,L2>
using Ket4 = Eigen::Vector4cd;
using Mat4 = Eigen::Matrix4cd;
using Ket2 = Eigen::Vector2cd;

enum class Pol { H = 0, V = 1 };
enum class Oam { L1 = 0, L2 = 1 };

inline constexpr int basis_index(Pol p, Oam o) { return 2 * static_cast<int>(p) + static_cast<int>(o); }

inline constexpr double kStateTolerance = 1e-12;

// 4x4 Hermitian, unit-trace, positive semidefinite matrix. Only constructible
// through validating factories.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(const Mat4& m) {
    const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm > kStateTolerance) throw InvalidState("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
    const cplx tr = m.trace();
    if (std::abs(tr - cplx(1.0, 0.0)) > kStateTolerance) {
      throw InvalidState("density matrix trace " + std::to_string(tr.real()) + " != 1");
    }
    const Mat4 h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat4> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kStateTolerance) {
      throw InvalidState("density matrix not positive semidefinite (min eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return DensityMatrix(h);
  }

  static DensityMatrix from_ket(const Ket4& v) {
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw InvalidState("zero ket");
    const Ket4 u = v / nrm;
    return DensityMatrix(u * u.adjoint());
  }

  static DensityMatrix maximally_mixed() { return DensityMatrix(Mat4::Identity() / 4.0); }

  const Mat4& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }

  Eigen::Vector4d eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Mat4> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  double purity() const { return (m_ * m_).trace().real(); }

 private:
  explicit DensityMatrix(Mat4 m) : m_(std::move(m)) {}
  Mat4 m_;
};

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  const Mat4 d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace povmem
