#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resonet/wave_solver.hpp"

namespace resonet {

/// Secular determinant as a function of the free-space wavenumber
/// kappa = 2 pi nu / c. With absorption the cable wavenumber is
/// Dispersion{beta}.at_wavenumber(kappa); at beta = 0 the two coincide.
class SecularFunction {
public:
  SecularFunction(const MetricGraph &graph, double t, double beta = 0.0)
      : graph_(&graph), t_(t), dispersion_{beta} {}

  Complex operator()(Complex kappa) const {
    return secular_det(*graph_, t_, dispersion_.at_wavenumber(kappa));
  }

  /// Central difference with step |kappa| * 1e-7.
  Complex derivative(Complex kappa) const;

private:
  const MetricGraph *graph_;
  double t_;
  Dispersion dispersion_;
};

/// Complex zero of the secular determinant. `k` is the free-space wavenumber,
/// so frequency() and width() are the nu and g a frequency-domain fit reports.
struct Resonance {
  Complex k;
  double t = 0.0;
  double beta = 0.0;
  double residual = 0.0;     // |det| at k
  double rel_residual = 0.0; // |det| / (|det'| |k|)
  int iterations = 0;
  bool converged = false;

  double frequency() const { return frequency_of(k.real()); }
  double width() const { return frequency_of(k.imag()); }
};

struct ComplexBox {
  double re_min = 0.0;
  double re_max = 0.0;
  double im_min = 0.0;
  double im_max = 0.0;

  bool contains(Complex z) const {
    return z.real() > re_min && z.real() < re_max && z.imag() > im_min && z.imag() < im_max;
  }
  ComplexBox inflated(double fraction) const;
};

/// Number of zeros enclosed, by phase accumulation of the secular determinant
/// along the box boundary with adaptive bisection. A boundary that passes
/// through (or numerically grazes) a zero is inflated and retried; throws
/// NumericalError if the winding still is not an integer.
int count_zeros(const MetricGraph &graph, double t, const ComplexBox &box, double beta = 0.0);

/// Winding number of the secular determinant along a circle.
int winding_on_circle(const MetricGraph &graph, double t, Complex center, double radius,
                      double beta = 0.0);

struct NewtonOptions {
  int max_iterations = 50;
  double step_tolerance = 1e-13; // relative to |k|
  double residual_tolerance = 1e-9;
};

/// Damped Newton iteration from k0. Never throws on divergence: the returned
/// Resonance carries the last iterate with converged = false.
Resonance refine_zero(const MetricGraph &graph, double t, Complex k0, double beta = 0.0,
                      const NewtonOptions &options = {});

/// Distinct zeros inside `box`, seeded from a re_points x im_points grid.
std::vector<Resonance> find_zeros(const MetricGraph &graph, double t, const ComplexBox &box,
                                  double beta = 0.0, int re_points = 16, int im_points = 8);

struct Trajectory {
  std::vector<Resonance> points; // ascending in t
  bool complete = true;
  std::string failure;
};

/// Continues `seed` (a zero at t = 0) along t_grid in both directions from
/// t = 0. Each grid step must satisfy |dk| <= 10 * median of earlier steps in
/// that branch (rates per unit t); violations are retried with the t-step
/// halved up to four times before the branch stops and complete = false.
Trajectory trace_trajectory(const MetricGraph &graph, const std::vector<double> &t_grid,
                            const Resonance &seed, double beta = 0.0);

struct QuadraticFit {
  double a = 0.0; // m^-1
  double b = 0.0; // m^-1
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  int points = 0;

  double stderr_a() const { return std::sqrt(covariance(0, 0)); }
  double stderr_b() const { return std::sqrt(covariance(1, 1)); }
};

/// Least squares of y against (t^2, 1) by the normal equations.
template <typename Scalar>
QuadraticFit fit_even_quadratic(const std::vector<Scalar> &t, const std::vector<Scalar> &y) {
  const auto n = static_cast<Eigen::Index>(t.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> design(n, 2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = t[i] * t[i];
    design(i, 1) = Scalar(1);
    rhs(i) = y[i];
  }
  const Eigen::Matrix<Scalar, 2, 2> normal = design.transpose() * design;
  const Eigen::Matrix<Scalar, 2, 1> coeff = normal.ldlt().solve(design.transpose() * rhs);
  const Scalar rss = (rhs - design * coeff).squaredNorm();
  const Scalar dof = n > 2 ? Scalar(n - 2) : Scalar(1);
  QuadraticFit fit;
  fit.a = static_cast<double>(coeff(0));
  fit.b = static_cast<double>(coeff(1));
  fit.covariance = ((rss / dof) * normal.inverse()).template cast<double>();
  fit.points = static_cast<int>(n);
  return fit;
}

/// Fits Im k = a t^2 + b over the `window` trajectory points centred on t = 0.
QuadraticFit fit_quadratic(const Trajectory &trajectory, int window);

} // namespace resonet
