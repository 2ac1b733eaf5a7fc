#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "resonet/constants.hpp"
#include "resonet/graph.hpp"

namespace resonet {

using Complex = std::complex<double>;

/// Solution on a graph at wavenumber k: a_j sin(kx) + b_j cos(kx) on internal
/// edge j, in_s e^{-ikx} + out_s e^{ikx} on lead s.
struct WaveField {
  Complex k;
  std::vector<double> lengths;
  Eigen::VectorXcd sin_coeff;
  Eigen::VectorXcd cos_coeff;
  Eigen::VectorXcd incoming;
  Eigen::VectorXcd outgoing;

  Complex edge_value(int edge, double x) const;
  Complex edge_derivative(int edge, double x) const;
  /// Value at the vertex end of an edge or lead.
  Complex value(const EdgeEnd &end) const;
  /// Derivative pointing into the vertex: -u'(0) at a tail or lead, u'(l) at a head.
  Complex normal_derivative(const EdgeEnd &end) const;
};

/// Matrix realization of the vertex conditions. Unknowns are ordered
/// (a_0, b_0, a_1, b_1, ..., out_0, ..., out_{M-1}); rows run over vertices in
/// ascending order, continuity rows first, then the Kirchhoff row divided by k.
struct SecularSystem {
  Complex k;
  double t = 0.0;
  std::vector<double> lengths;
  Eigen::MatrixXcd matrix;
  /// Column s is the right-hand side for unit incoming amplitude on lead s.
  Eigen::MatrixXcd drives;
};

struct ScatterResult {
  Eigen::MatrixXcd S;
  Complex det_S;
  Complex secular_det;
  double rcond = 0.0;
  bool ill_conditioned = false;
};

/// Reciprocal condition numbers below this are treated as singular.
inline constexpr double kSingularRcond = 1e-12;

SecularSystem assemble(const MetricGraph &graph, double t, Complex k);
Complex secular_det(const MetricGraph &graph, double t, Complex k);

/// sigma_min / sigma_max.
double reciprocal_condition(const Eigen::MatrixXcd &m);

/// Unpacks a solution vector of the secular system into a field; `incoming`
/// holds the drive amplitudes.
WaveField make_field(const MetricGraph &graph, const SecularSystem &system,
                     const Eigen::VectorXcd &solution, const Eigen::VectorXcd &incoming);

/// Direct solve with unit drive on `lead`.
WaveField driven_field(const MetricGraph &graph, const SecularSystem &system, int lead);

ScatterResult scattering_matrix(const MetricGraph &graph, double t, Complex k);

/// Largest continuity or Kirchhoff mismatch over all vertices, relative to the
/// field's own magnitude at the vertices.
double vertex_residual(const MetricGraph &graph, const WaveField &field);

/// Lossy-cable dispersion: Re k = 2 pi nu / c, Im k = beta sqrt(2 pi nu / c).
struct Dispersion {
  double beta = 0.0; // m^-1/2

  Complex at_frequency(double nu) const;
  /// Analytic continuation to a complex free-space wavenumber kappa = 2 pi nu / c:
  /// kappa + i beta sqrt(kappa), principal branch.
  Complex at_wavenumber(Complex kappa) const;
};

Complex dispersion_k(double nu, double beta);

inline double frequency_of(double wavenumber) { return kSpeedOfLight * wavenumber / (2.0 * kPi); }
inline double wavenumber_of(double frequency) { return 2.0 * kPi * frequency / kSpeedOfLight; }

struct TraceRow {
  double nu = 0.0;
  Complex det_S;
  double abs_det_S = 0.0;
  bool ill_conditioned = false;
};

struct FrequencyGrid {
  double min = 0.0;
  double max = 0.0;
  int steps = 1;

  std::vector<double> points() const;
};

/// |det S| along a uniform frequency grid. Rows are evaluated concurrently and
/// returned in grid order. Throws InputError if the grid reaches the cable's
/// TE11 cutoff.
std::vector<TraceRow> trace_detS(const MetricGraph &graph, double t, const FrequencyGrid &grid,
                                 double beta, const CableProfile &cable = {});

} // namespace resonet
