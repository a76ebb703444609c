// Gate descriptors for the register simulator: H, X, Z, RY, RZ, CNOT.
//
// Conventions (also documented in the README format reference):
//   * RY carries the full rotation angle a and its matrix uses the half
//     angle: RY(a) = [[cos(a/2), -sin(a/2)], [sin(a/2), cos(a/2)]].
//   * RZ(l) = diag(1, e^{il}), the global-phase-free form; the phase sits
//     entirely on |1>, which is what the entangled-channel estimator needs.
#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>
#include <type_traits>

namespace qfed::sim {

enum class GateKind { H, X, Z, RY, RZ, CNOT };

template <typename T>
inline constexpr bool is_complex_v = false;
template <typename T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

/// One gate application: single-qubit kinds use `q0`; CNOT uses
/// `q0` as control and `q1` as target. `angle` is meaningful for RY/RZ only.
struct GateOp {
  GateKind kind = GateKind::H;
  double angle = 0.0;
  int q0 = 0;
  int q1 = -1;

  static GateOp h(int q) { return {GateKind::H, 0.0, q, -1}; }
  static GateOp x(int q) { return {GateKind::X, 0.0, q, -1}; }
  static GateOp z(int q) { return {GateKind::Z, 0.0, q, -1}; }
  static GateOp ry(int q, double angle) { return {GateKind::RY, angle, q, -1}; }
  static GateOp rz(int q, double angle) { return {GateKind::RZ, angle, q, -1}; }
  static GateOp cnot(int control, int target) {
    return {GateKind::CNOT, 0.0, control, target};
  }

  bool is_rotation() const { return kind == GateKind::RY || kind == GateKind::RZ; }
  bool is_two_qubit() const { return kind == GateKind::CNOT; }

  /// Same-kind gate undoing this one (rotations negate their angle; the
  /// other kinds are involutions).
  GateOp inverse() const {
    GateOp g = *this;
    if (is_rotation()) g.angle = -angle;
    return g;
  }
};

/// 2x2 matrix of a single-qubit gate. RZ requires a complex scalar type.
template <typename Scalar = std::complex<double>>
Eigen::Matrix<Scalar, 2, 2> gate_matrix(const GateOp& g) {
  using std::cos;
  using std::sin;
  Eigen::Matrix<Scalar, 2, 2> m;
  switch (g.kind) {
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      m << Scalar(r), Scalar(r), Scalar(r), Scalar(-r);
      return m;
    }
    case GateKind::X:
      m << Scalar(0), Scalar(1), Scalar(1), Scalar(0);
      return m;
    case GateKind::Z:
      m << Scalar(1), Scalar(0), Scalar(0), Scalar(-1);
      return m;
    case GateKind::RY: {
      const double c = cos(g.angle / 2.0), s = sin(g.angle / 2.0);
      m << Scalar(c), Scalar(-s), Scalar(s), Scalar(c);
      return m;
    }
    case GateKind::RZ:
      if constexpr (is_complex_v<Scalar>) {
        m << Scalar(1), Scalar(0), Scalar(0),
            std::exp(Scalar(0, 1) * typename Scalar::value_type(g.angle));
        return m;
      } else {
        throw std::logic_error("RZ has no real-valued matrix");
      }
    case GateKind::CNOT:
      throw std::logic_error("CNOT is not a single-qubit gate");
  }
  throw std::logic_error("unknown gate kind");
}

}  // namespace qfed::sim
