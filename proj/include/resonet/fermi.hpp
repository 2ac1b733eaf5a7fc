#pragma once

#include <complex>
#include <vector>

#include "resonet/wave_solver.hpp"

namespace resonet {

/// Closed form of the integral over [0, length] of
/// (ua sin kx + ub cos kx) * conj(ea sin kx + eb cos kx), real k.
template <typename Scalar>
std::complex<Scalar> edge_overlap(Scalar k, Scalar length, std::complex<Scalar> ua, std::complex<Scalar> ub,
                                  std::complex<Scalar> ea, std::complex<Scalar> eb) {
  using std::sin;
  const Scalar s2 = sin(Scalar(2) * k * length) / (Scalar(4) * k);
  const Scalar ss = length / Scalar(2) - s2;
  const Scalar cc = length / Scalar(2) + s2;
  const Scalar sk = sin(k * length);
  const Scalar sc = sk * sk / (Scalar(2) * k);
  const auto ca = std::conj(ea);
  const auto cb = std::conj(eb);
  return ua * ca * ss + ub * cb * cc + (ua * cb + ub * ca) * sc;
}

/// Squared L2 norm over the internal edges (real k).
double internal_norm_squared(const WaveField &field);

/// Normalized eigenfunction of an eigenvalue embedded in the continuous
/// spectrum at t = 0. Lead amplitudes are zero; coefficients are real up to
/// rounding.
struct EmbeddedEigenpair {
  double k = 0.0;
  WaveField u;
  double norm = 0.0;          // L2 norm over internal edges after normalization
  double null_sigma = 0.0;    // smallest singular value / largest
  double second_sigma = 0.0;  // second smallest / largest
};

/// Throws NumericalError when no real zero lies near k_guess, when the zero
/// has no eigenfunction vanishing on the leads, or when it is not simple.
EmbeddedEigenpair embedded_eigenpair(const MetricGraph &graph, double k_guess);

/// Scattering solution with unit incoming wave on one lead, extended through
/// embedded eigenvalues as a holomorphic limit.
struct GeneralizedEigenfunction {
  int lead = 0;
  WaveField field;
  Eigen::VectorXcd scattering; // s_{j,lead} for every lead j
  bool extrapolated = false;
  double side_mismatch = 0.0;  // relative disagreement of the one-sided limits
};

/// At nonsingular k this is the direct driven solve at t = 0. Near a
/// singular point it solves at k(1 +- d) for d in {1e-3, 5e-4, 2.5e-4},
/// Richardson-extrapolates each side to d -> 0 and averages them; throws
/// NumericalError if the sides disagree by more than 1e-6 relative.
GeneralizedEigenfunction generalized_eigenfunction(const MetricGraph &graph, double k, int lead);

/// k * sum_j a_j int u_j conj(e_j).
Complex volume_term(const MetricGraph &graph, const EmbeddedEigenpair &pair,
                    const GeneralizedEigenfunction &gef, const PerturbationVector &rates);

/// (1/k) sum_v sum_{j at v} (a_j / 4) [3 dn u_j(v) conj(e(v)) - u(v) conj(dn e_j(v))],
/// with dn the derivative into the vertex.
Complex vertex_term(const MetricGraph &graph, const EmbeddedEigenpair &pair,
                    const GeneralizedEigenfunction &gef, const PerturbationVector &rates);

struct FermiResult {
  double k = 0.0;
  std::vector<Complex> F;
  std::vector<Complex> volume;
  std::vector<Complex> vertex;
  double im_k_ddot = 0.0; // -sum |F_s|^2, m^-1

  /// Curvature of Im k(t) = a t^2 near t = 0.
  double predicted_a() const { return 0.5 * im_k_ddot; }
};

FermiResult fermi_rate(const MetricGraph &graph, const EmbeddedEigenpair &pair, const PerturbationVector &rates);
FermiResult fermi_rate(const MetricGraph &graph, double k_embedded, const PerturbationVector &rates);

} // namespace resonet
