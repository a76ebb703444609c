// Dense statevector simulator for small registers (up to 12 qubits).
//
// The amplitude type is a template parameter: the classifier circuits are
// real (RY/CNOT only), so they run on StatevectorT<double>; the entangled
// channel needs phases and runs on the complex alias Statevector.
//
// Qubit index convention: qubit 0 is the leftmost ket position and maps to
// the most significant bit of the amplitude index, i.e. |q0 q1 ... q(n-1)>.
// The ring entanglers and the channel decode circuit depend on this order.
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <stdexcept>

#include "qfed/gates.hpp"

namespace qfed::sim {

inline constexpr int kMaxQubits = 12;

template <typename Scalar = std::complex<double>>
class StatevectorT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Initializes |0...0>.
  explicit StatevectorT(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits)
      throw std::out_of_range("qubit count must be in [1, 12]");
    amp_ = Vector::Zero(Eigen::Index(1) << n_qubits);
    amp_[0] = Scalar(1);
  }

  int qubits() const { return n_; }
  Eigen::Index dim() const { return amp_.size(); }
  const Vector& amplitudes() const { return amp_; }
  Vector& amplitudes() { return amp_; }
  Scalar amplitude(Eigen::Index i) const { return amp_[i]; }

  /// Bit position (from LSB) of a qubit index under the MSB-first convention.
  int bit_position(int qubit) const { return n_ - 1 - qubit; }

  void check_qubit(int qubit) const {
    if (qubit < 0 || qubit >= n_) throw std::out_of_range("qubit index out of range");
  }

 private:
  int n_;
  Vector amp_;
};

using Statevector = StatevectorT<std::complex<double>>;
using RealStatevector = StatevectorT<double>;

template <typename Scalar>
StatevectorT<Scalar> new_statevector(int n_qubits) {
  return StatevectorT<Scalar>(n_qubits);
}
inline Statevector new_statevector(int n_qubits) { return Statevector(n_qubits); }

namespace detail {
template <typename T>
double abs2(const std::complex<T>& v) {
  return std::norm(v);
}
inline double abs2(double v) { return v * v; }
}  // namespace detail

/// In-place gate application; identity on all non-target qubits.
template <typename Scalar>
void apply_gate_in_place(StatevectorT<Scalar>& state, const GateOp& g) {
  state.check_qubit(g.q0);
  auto& amp = state.amplitudes();
  const Eigen::Index dim = amp.size();

  if (g.kind == GateKind::CNOT) {
    state.check_qubit(g.q1);
    if (g.q0 == g.q1) throw std::invalid_argument("CNOT control equals target");
    const Eigen::Index cmask = Eigen::Index(1) << state.bit_position(g.q0);
    const Eigen::Index tmask = Eigen::Index(1) << state.bit_position(g.q1);
    for (Eigen::Index i = 0; i < dim; ++i)
      if ((i & cmask) && !(i & tmask)) std::swap(amp[i], amp[i | tmask]);
    return;
  }

  const Eigen::Index step = Eigen::Index(1) << state.bit_position(g.q0);
  switch (g.kind) {
    case GateKind::X:
      for (Eigen::Index base = 0; base < dim; base += 2 * step)
        for (Eigen::Index i = base; i < base + step; ++i) std::swap(amp[i], amp[i + step]);
      return;
    case GateKind::Z:
      for (Eigen::Index base = 0; base < dim; base += 2 * step)
        for (Eigen::Index i = base; i < base + step; ++i) amp[i + step] = -amp[i + step];
      return;
    case GateKind::H: {
      const double r = 1.0 / std::sqrt(2.0);
      for (Eigen::Index base = 0; base < dim; base += 2 * step)
        for (Eigen::Index i = base; i < base + step; ++i) {
          const Scalar a = amp[i], b = amp[i + step];
          amp[i] = Scalar(r) * (a + b);
          amp[i + step] = Scalar(r) * (a - b);
        }
      return;
    }
    case GateKind::RY: {
      const double c = std::cos(g.angle / 2.0), s = std::sin(g.angle / 2.0);
      for (Eigen::Index base = 0; base < dim; base += 2 * step)
        for (Eigen::Index i = base; i < base + step; ++i) {
          const Scalar a = amp[i], b = amp[i + step];
          amp[i] = Scalar(c) * a - Scalar(s) * b;
          amp[i + step] = Scalar(s) * a + Scalar(c) * b;
        }
      return;
    }
    case GateKind::RZ:
      if constexpr (is_complex_v<Scalar>) {
        const Scalar phase = std::exp(Scalar(0, 1) * typename Scalar::value_type(g.angle));
        for (Eigen::Index base = 0; base < dim; base += 2 * step)
          for (Eigen::Index i = base; i < base + step; ++i) amp[i + step] *= phase;
        return;
      } else {
        throw std::logic_error("RZ requires a complex-amplitude register");
      }
    case GateKind::CNOT:
      break;  // handled above
  }
  throw std::logic_error("unknown gate kind");
}

template <typename Scalar>
StatevectorT<Scalar> apply_gate(StatevectorT<Scalar> state, const GateOp& g) {
  apply_gate_in_place(state, g);
  return state;
}

template <typename Scalar>
void apply_circuit(StatevectorT<Scalar>& state, std::span<const GateOp> gates) {
  for (const GateOp& g : gates) apply_gate_in_place(state, g);
}

/// Probability that a computational-basis measurement of `qubit` yields 0.
/// Divided by the register's squared norm (1 up to rounding) so that
/// accumulated floating-point drift cancels instead of skewing estimates
/// near p = 0 or 1.
template <typename Scalar>
double prob_zero(const StatevectorT<Scalar>& state, int qubit) {
  state.check_qubit(qubit);
  const auto& amp = state.amplitudes();
  const Eigen::Index step = Eigen::Index(1) << state.bit_position(qubit);
  double zero_part = 0.0, one_part = 0.0;
  for (Eigen::Index base = 0; base < amp.size(); base += 2 * step)
    for (Eigen::Index i = base; i < base + step; ++i) {
      zero_part += detail::abs2(amp[i]);
      one_part += detail::abs2(amp[i + step]);
    }
  const double total = zero_part + one_part;
  if (total <= 0.0) throw std::runtime_error("zero-norm register");
  return zero_part / total;
}

/// <Z> on one qubit: +1 weight where the bit is 0, -1 where it is 1.
template <typename Scalar>
double expectation_pauli_z(const StatevectorT<Scalar>& state, int qubit) {
  const double p0 = prob_zero(state, qubit);
  return p0 - (1.0 - p0);
}

/// Samples one computational-basis measurement of `qubit` without collapsing
/// the state (every transmitted qubit in this codebase is measured once).
template <typename Scalar>
int sample_bit(const StatevectorT<Scalar>& state, int qubit, std::mt19937_64& rng) {
  const double p0 = prob_zero(state, qubit);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p0 ? 0 : 1;
}

/// Overwrites the amplitudes with `values / ||values||_2`.
template <typename Scalar>
void set_amplitudes(StatevectorT<Scalar>& state, Eigen::Ref<const Eigen::VectorXd> values) {
  if (values.size() != state.dim())
    throw std::invalid_argument("amplitude count must equal 2^n_qubits");
  const double norm = values.norm();
  if (norm <= 0.0 || !std::isfinite(norm))
    throw std::invalid_argument("cannot encode a zero-norm vector");
  state.amplitudes() = (values / norm).cast<Scalar>();
}

template <typename Scalar>
double state_norm(const StatevectorT<Scalar>& state) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < state.dim(); ++i) s += detail::abs2(state.amplitude(i));
  return std::sqrt(s);
}

/// Widens a real-amplitude register to the complex representation.
inline Statevector to_complex(const RealStatevector& state) {
  Statevector out(state.qubits());
  out.amplitudes() = state.amplitudes().cast<std::complex<double>>();
  return out;
}

}  // namespace qfed::sim
