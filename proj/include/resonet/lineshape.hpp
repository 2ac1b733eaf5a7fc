#pragma once

#include <complex>
#include <string>
#include <vector>

#include "resonet/wave_solver.hpp"

namespace resonet {

/// i nu A / (nu^2 - (nu_m + i g_m)^2)
template <typename Scalar>
std::complex<Scalar> lorentzian_term(Scalar nu, std::complex<Scalar> amplitude, Scalar nu_m, Scalar g_m) {
  const std::complex<Scalar> pole(nu_m, g_m);
  return std::complex<Scalar>(0, 1) * nu * amplitude / (nu * nu - pole * pole);
}

/// Sum of `order` complex Lorentzians plus a complex linear baseline:
///   order 2: B (nu - nu_1) + C
///   order 3: B_1 (nu - nu_1) + B_2 (nu - nu_2) + C
/// Only the modulus is observable, so one global phase is free; canonical
/// models have C real and nonnegative and nu ascending.
struct LineshapeModel {
  int order = 2;
  std::vector<Complex> amplitude; // A_m, Hz
  std::vector<double> nu;         // Hz
  std::vector<double> g;          // Hz, negative for decaying resonances
  std::vector<Complex> slopes;    // B or (B_1, B_2), per Hz
  Complex offset;                 // C

  static LineshapeModel zeros(int order);

  Complex baseline(double frequency) const;
  /// Baseline written as slope * nu + intercept.
  Complex effective_slope() const;
  Complex effective_intercept() const;
  /// Index of the narrowest resonance.
  int narrowest() const;
};

struct LineshapeValue {
  Complex value;
  double modulus = 0.0;
  bool near_pole = false;
};

LineshapeValue eval_lineshape(const LineshapeModel &model, double frequency);

/// Sorts resonances by nu, re-expresses the baseline in the model's own form
/// (B_1 = B_2 for order 3) and rotates the global phase so C is real >= 0.
/// |f| is unchanged.
LineshapeModel canonicalize(const LineshapeModel &model);

struct TracePoint {
  double nu = 0.0;
  double value = 0.0;
};

struct FrequencyWindow {
  double min = 0.0;
  double max = 0.0;

  bool contains(double nu) const { return nu >= min && nu <= max; }
};

struct FitOutcome {
  LineshapeModel model;
  double rss = 0.0;
  double initial_rss = 0.0;
  std::vector<double> stderr_nu;
  std::vector<double> stderr_g;
  int iterations = 0;
  int samples = 0;
  bool converged = false;
  bool escaped = false; // some nu_m left the window
  std::string message;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double step_tolerance = 1e-12;
};

/// Damped least squares (Levenberg-Marquardt with Marquardt scaling) of
/// sum_i (|f(nu_i)| - y_i)^2 over the window. Jacobian by forward differences.
/// Internally the widths are log-parametrized (g < 0 always) and the baseline
/// is optimized in identifiable coordinates. Never throws on non-convergence;
/// throws InputError on unusable input.
FitOutcome fit_lineshape(const std::vector<TracePoint> &trace, int order, const FrequencyWindow &window,
                         const LineshapeModel &init, const FitOptions &options = {});

/// Initial guess from dips in the trace: positions from the deepest local
/// minima, widths from half-depth support, amplitudes from depths, baseline
/// from the window endpoints. A single dip standing in for several resonances
/// is split into equally spaced seeds across its support; other missing seeds
/// go into the widest gap. Throws InputError on a flat trace.
LineshapeModel seed_initial_guess(const std::vector<TracePoint> &trace, int order, const FrequencyWindow &window);

std::vector<TracePoint> to_points(const std::vector<TraceRow> &rows);

} // namespace resonet
