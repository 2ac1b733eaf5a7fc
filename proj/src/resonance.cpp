#include "resonet/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "resonet/errors.hpp"

namespace resonet {

Complex SecularFunction::derivative(Complex kappa) const {
  const double h = std::abs(kappa) * 1e-7;
  return ((*this)(kappa + h) - (*this)(kappa - h)) / (2.0 * h);
}

ComplexBox ComplexBox::inflated(double fraction) const {
  const double dr = fraction * (re_max - re_min);
  const double di = fraction * (im_max - im_min);
  return {re_min - dr, re_max + dr, im_min - di, im_max + di};
}

namespace {

struct PhaseWalk {
  double total = 0.0;
  bool grazed = false;
};

constexpr double kMaxPhaseStep = kPi / 8.0;
constexpr int kMaxBisections = 40;

// Accumulates arg f along path(s), s in [sa, sb], bisecting until consecutive
// samples differ in phase by less than kMaxPhaseStep.
void walk_segment(const SecularFunction &f, const std::function<Complex(double)> &path, double sa,
                  Complex fa, double sb, Complex fb, int depth, PhaseWalk &walk) {
  if (fa == 0.0 || fb == 0.0 || !std::isfinite(std::abs(fa)) || !std::isfinite(std::abs(fb))) {
    walk.grazed = true;
    return;
  }
  const double dtheta = std::arg(fb / fa);
  if (std::abs(dtheta) < kMaxPhaseStep) {
    walk.total += dtheta;
    return;
  }
  if (depth >= kMaxBisections) {
    walk.grazed = true;
    walk.total += dtheta;
    return;
  }
  const double sm = 0.5 * (sa + sb);
  const Complex fm = f(path(sm));
  walk_segment(f, path, sa, fa, sm, fm, depth + 1, walk);
  walk_segment(f, path, sm, fm, sb, fb, depth + 1, walk);
}

PhaseWalk walk_closed_path(const SecularFunction &f, const std::function<Complex(double)> &path,
                           int samples) {
  PhaseWalk walk;
  std::vector<Complex> values(samples + 1);
  for (int i = 0; i < samples; ++i) values[i] = f(path(static_cast<double>(i) / samples));
  values[samples] = values[0];
  for (int i = 0; i < samples; ++i)
    walk_segment(f, path, static_cast<double>(i) / samples, values[i],
                 static_cast<double>(i + 1) / samples, values[i + 1], 0, walk);
  return walk;
}

std::function<Complex(double)> box_path(const ComplexBox &b) {
  const Complex corners[5] = {{b.re_min, b.im_min}, {b.re_max, b.im_min}, {b.re_max, b.im_max},
                              {b.re_min, b.im_max}, {b.re_min, b.im_min}};
  return [=](double s) {
    const double u = 4.0 * s;
    const int side = std::min(3, static_cast<int>(u));
    const double frac = u - side;
    return corners[side] + frac * (corners[side + 1] - corners[side]);
  };
}

int rounded_winding(const PhaseWalk &walk, bool &ok) {
  const double w = walk.total / (2.0 * kPi);
  const double r = std::round(w);
  ok = !walk.grazed && std::abs(w - r) < 0.05;
  return static_cast<int>(r);
}

} // namespace

int count_zeros(const MetricGraph &graph, double t, const ComplexBox &box, double beta) {
  if (!(box.re_max > box.re_min) || !(box.im_max > box.im_min)) throw InputError("degenerate contour box");
  const SecularFunction f(graph, t, beta);
  ComplexBox current = box;
  for (int attempt = 0; attempt < 6; ++attempt) {
    bool ok = false;
    const int n = rounded_winding(walk_closed_path(f, box_path(current), 256), ok);
    if (ok) return n;
    current = current.inflated(0.01);
  }
  throw NumericalError("contour passes through a zero of the secular determinant");
}

int winding_on_circle(const MetricGraph &graph, double t, Complex center, double radius, double beta) {
  const SecularFunction f(graph, t, beta);
  auto path = [=](double s) { return center + radius * std::polar(1.0, 2.0 * kPi * s); };
  bool ok = false;
  const int n = rounded_winding(walk_closed_path(f, path, 256), ok);
  if (!ok) throw NumericalError("circle passes through a zero of the secular determinant");
  return n;
}

Resonance refine_zero(const MetricGraph &graph, double t, Complex k0, double beta,
                      const NewtonOptions &options) {
  const SecularFunction secular(graph, t, beta);
  // k = 0 is outside the model; steps that land on it count as ascent.
  const double floor = 1e-8 * std::abs(k0);
  auto f = [&](Complex z) {
    return std::abs(z) > floor ? secular(z) : Complex(std::numeric_limits<double>::infinity());
  };
  Resonance r;
  r.t = t;
  r.beta = beta;
  Complex k = k0;
  Complex fk = f(k);
  bool step_converged = fk == 0.0;
  bool stalled = false;
  for (int it = 1; it <= options.max_iterations && !step_converged; ++it) {
    const Complex d = secular.derivative(k);
    if (d == 0.0 || !std::isfinite(std::abs(d))) break;
    const Complex step = fk / d;
    double lambda = 1.0;
    Complex kn = k - step;
    Complex fn = f(kn);
    for (int h = 0; h < 12 && !(std::abs(fn) < std::abs(fk)); ++h) {
      lambda *= 0.5;
      kn = k - lambda * step;
      fn = f(kn);
    }
    const bool decreased = std::abs(fn) < std::abs(fk);
    r.iterations = it;
    if (!decreased) {
      // Rounding floor: the full step is already below resolution.
      step_converged = std::abs(step) < 1e3 * options.step_tolerance * std::abs(k);
      stalled = !step_converged;
      break;
    }
    k = kn;
    fk = fn;
    step_converged = std::abs(lambda * step) < options.step_tolerance * std::abs(k) || fk == 0.0;
  }
  r.k = k;
  r.residual = std::abs(fk);
  const double slope = std::abs(secular.derivative(k)) * std::abs(k);
  r.rel_residual = slope > 0.0 ? r.residual / slope : std::numeric_limits<double>::infinity();
  r.converged = !stalled && std::isfinite(r.rel_residual) &&
                (step_converged || r.rel_residual < 1e-3 * options.residual_tolerance) &&
                r.rel_residual < options.residual_tolerance;
  return r;
}

std::vector<Resonance> find_zeros(const MetricGraph &graph, double t, const ComplexBox &box, double beta,
                                  int re_points, int im_points) {
  std::vector<Resonance> found;
  for (int i = 0; i < re_points; ++i) {
    for (int j = 0; j < im_points; ++j) {
      const Complex seed{box.re_min + (i + 0.5) * (box.re_max - box.re_min) / re_points,
                         box.im_min + (j + 0.5) * (box.im_max - box.im_min) / im_points};
      const Resonance r = refine_zero(graph, t, seed, beta);
      if (!r.converged || !box.contains(r.k)) continue;
      const bool duplicate = std::any_of(found.begin(), found.end(), [&](const Resonance &o) {
        return std::abs(o.k - r.k) < 1e-7 * std::max(1.0, std::abs(r.k));
      });
      if (!duplicate) found.push_back(r);
    }
  }
  std::sort(found.begin(), found.end(), [](const Resonance &a, const Resonance &b) { return a.k.real() < b.k.real(); });
  return found;
}

namespace {

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

} // namespace

Trajectory trace_trajectory(const MetricGraph &graph, const std::vector<double> &t_grid,
                            const Resonance &seed, double beta) {
  if (t_grid.empty()) throw InputError("empty t grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end())) throw InputError("t grid must be ascending");
  const auto zero_it = std::find_if(t_grid.begin(), t_grid.end(), [](double t) { return std::abs(t) < 1e-12; });
  if (zero_it == t_grid.end()) throw InputError("t grid must contain 0");
  const auto i0 = static_cast<std::size_t>(zero_it - t_grid.begin());

  Trajectory traj;
  const Resonance start = refine_zero(graph, 0.0, seed.k, beta);
  if (!start.converged) {
    traj.complete = false;
    traj.failure = "seed does not refine to a zero at t = 0";
    return traj;
  }

  std::vector<Resonance> lower, upper;
  auto run_branch = [&](int direction, std::vector<Resonance> &out) {
    std::vector<double> rates;
    Resonance prev = start;
    for (std::size_t i = i0;;) {
      if (direction > 0 ? i + 1 >= t_grid.size() : i == 0) return;
      const std::size_t next = direction > 0 ? i + 1 : i - 1;
      const double dt = t_grid[next] - t_grid[i];
      const double bound = rates.empty() ? std::numeric_limits<double>::infinity() : 10.0 * median(rates);
      bool accepted = false;
      Resonance cur;
      for (int halvings = 0; halvings <= 4 && !accepted; ++halvings) {
        const int substeps = 1 << halvings;
        const double h = dt / substeps;
        cur = prev;
        accepted = true;
        for (int s = 1; s <= substeps; ++s) {
          const double ts = s == substeps ? t_grid[next] : t_grid[i] + s * h;
          Resonance r = refine_zero(graph, ts, cur.k, beta);
          if (!r.converged || std::abs(r.k - cur.k) / std::abs(h) > bound) {
            accepted = false;
            break;
          }
          cur = r;
        }
      }
      if (!accepted) {
        traj.complete = false;
        traj.failure = "continuation guard violated at t = " + std::to_string(t_grid[next]);
        return;
      }
      rates.push_back(std::abs(cur.k - prev.k) / std::abs(dt));
      out.push_back(cur);
      prev = cur;
      i = next;
    }
  };
  run_branch(-1, lower);
  run_branch(+1, upper);

  traj.points.assign(lower.rbegin(), lower.rend());
  traj.points.push_back(start);
  traj.points.insert(traj.points.end(), upper.begin(), upper.end());
  return traj;
}

QuadraticFit fit_quadratic(const Trajectory &trajectory, int window) {
  if (window < 3 || window % 2 == 0) throw InputError("fit window must be odd and >= 3");
  const auto &pts = trajectory.points;
  const auto center = std::find_if(pts.begin(), pts.end(), [](const Resonance &r) { return std::abs(r.t) < 1e-12; });
  if (center == pts.end()) throw InputError("trajectory has no point at t = 0");
  const auto c = center - pts.begin();
  const auto half = window / 2;
  if (c < half || c + half >= static_cast<std::ptrdiff_t>(pts.size()))
    throw InputError("trajectory has fewer points than the fit window");
  std::vector<double> t, y;
  for (auto i = c - half; i <= c + half; ++i) {
    t.push_back(pts[i].t);
    y.push_back(pts[i].k.imag());
  }
  return fit_even_quadratic(t, y);
}

} // namespace resonet
