#include "resonet/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "resonet/errors.hpp"

namespace resonet {

using namespace std::complex_literals;

LineshapeModel LineshapeModel::zeros(int order) {
  if (order != 2 && order != 3) throw InputError("lineshape order must be 2 or 3");
  LineshapeModel m;
  m.order = order;
  m.amplitude.assign(order, 0.0);
  m.nu.assign(order, 0.0);
  m.g.assign(order, 0.0);
  m.slopes.assign(order == 2 ? 1 : 2, 0.0);
  return m;
}

Complex LineshapeModel::baseline(double frequency) const {
  Complex b = offset;
  for (std::size_t i = 0; i < slopes.size(); ++i) b += slopes[i] * (frequency - nu[i]);
  return b;
}

Complex LineshapeModel::effective_slope() const {
  return std::accumulate(slopes.begin(), slopes.end(), Complex{});
}

Complex LineshapeModel::effective_intercept() const {
  Complex c = offset;
  for (std::size_t i = 0; i < slopes.size(); ++i) c -= slopes[i] * nu[i];
  return c;
}

int LineshapeModel::narrowest() const {
  return static_cast<int>(std::min_element(g.begin(), g.end(), [](double a, double b) {
                            return std::abs(a) < std::abs(b);
                          }) - g.begin());
}

LineshapeValue eval_lineshape(const LineshapeModel &model, double frequency) {
  if (!(frequency > 0.0)) throw InputError("lineshape frequency must be positive");
  LineshapeValue out;
  out.value = model.baseline(frequency);
  for (int m = 0; m < model.order; ++m) {
    const Complex pole(model.nu[m], model.g[m]);
    if (std::abs(frequency * frequency - pole * pole) < 1e-10 * frequency * frequency) out.near_pole = true;
    out.value += lorentzian_term(frequency, model.amplitude[m], model.nu[m], model.g[m]);
  }
  out.modulus = std::abs(out.value);
  return out;
}

namespace {

std::vector<int> ascending_order(const std::vector<double> &nu) {
  std::vector<int> idx(nu.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return nu[a] < nu[b]; });
  return idx;
}

// Rebuilds the model's baseline parameters from an effective slope/intercept.
void set_baseline(LineshapeModel &m, Complex slope, Complex intercept) {
  if (m.order == 2) {
    m.slopes = {slope};
    m.offset = intercept + slope * m.nu[0];
  } else {
    m.slopes = {0.5 * slope, 0.5 * slope};
    m.offset = intercept + 0.5 * slope * (m.nu[0] + m.nu[1]);
  }
}

void rotate_phase(LineshapeModel &m, Complex factor) {
  for (auto &a : m.amplitude) a *= factor;
  for (auto &b : m.slopes) b *= factor;
  m.offset *= factor;
}

LineshapeModel canonicalize_with(const LineshapeModel &model, const std::vector<int> &perm) {
  LineshapeModel out = model;
  const Complex slope = model.effective_slope();
  const Complex intercept = model.effective_intercept();
  for (int m = 0; m < model.order; ++m) {
    out.amplitude[m] = model.amplitude[perm[m]];
    out.nu[m] = model.nu[perm[m]];
    out.g[m] = model.g[perm[m]];
  }
  set_baseline(out, slope, intercept);
  if (std::abs(out.offset) > 0.0) rotate_phase(out, std::abs(out.offset) / out.offset);
  out.offset = out.offset.real();
  return out;
}

// Internal coordinates, all dimensionless with nu_ref = window centre:
//   per resonance: Re A/g, Im A/g, nu/nu_ref, log(-g/nu_ref)
//   baseline: Re, Im of (effective slope * nu_ref), real offset at nu_1.
struct Packing {
  int order;
  double nu_ref;

  int size() const { return 4 * order + 3; }

  Eigen::VectorXd pack(const LineshapeModel &model) const {
    LineshapeModel m = model;
    const Complex slope = m.effective_slope();
    Complex offset = m.effective_intercept() + slope * m.nu[0];
    Complex rot = std::abs(offset) > 0.0 ? std::abs(offset) / offset : Complex(1.0);
    Eigen::VectorXd p(size());
    for (int i = 0; i < order; ++i) {
      const Complex a = m.amplitude[i] * rot / m.g[i];
      p[4 * i] = a.real();
      p[4 * i + 1] = a.imag();
      p[4 * i + 2] = m.nu[i] / nu_ref;
      p[4 * i + 3] = std::log(-m.g[i] / nu_ref);
    }
    const Complex s = slope * rot * nu_ref;
    p[4 * order] = s.real();
    p[4 * order + 1] = s.imag();
    p[4 * order + 2] = (offset * rot).real();
    return p;
  }

  LineshapeModel unpack(const Eigen::VectorXd &p) const {
    LineshapeModel m = LineshapeModel::zeros(order);
    for (int i = 0; i < order; ++i) {
      m.nu[i] = p[4 * i + 2] * nu_ref;
      m.g[i] = -std::exp(p[4 * i + 3]) * nu_ref;
      m.amplitude[i] = Complex(p[4 * i], p[4 * i + 1]) * m.g[i];
    }
    const Complex slope = Complex(p[4 * order], p[4 * order + 1]) / nu_ref;
    const Complex intercept = p[4 * order + 2] - slope * m.nu[0];
    set_baseline(m, slope, intercept);
    return m;
  }

  Complex eval(const Eigen::VectorXd &p, double u) const {
    Complex f = Complex(p[4 * order], p[4 * order + 1]) * (u - p[2]) + p[4 * order + 2];
    for (int i = 0; i < order; ++i) {
      const double g = -std::exp(p[4 * i + 3]);
      f += lorentzian_term(u, g * Complex(p[4 * i], p[4 * i + 1]), p[4 * i + 2], g);
    }
    return f;
  }
};

struct Samples {
  std::vector<double> u;
  std::vector<double> y;
};

Eigen::VectorXd residuals(const Packing &pk, const Samples &s, const Eigen::VectorXd &p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(s.u.size()));
  for (std::size_t i = 0; i < s.u.size(); ++i) r[i] = std::abs(pk.eval(p, s.u[i])) - s.y[i];
  return r;
}

Eigen::MatrixXd jacobian(const Packing &pk, const Samples &s, const Eigen::VectorXd &p, const Eigen::VectorXd &r0) {
  Eigen::MatrixXd J(r0.size(), p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    Eigen::VectorXd q = p;
    const double h = 1e-7 * std::max(std::abs(p[j]), 1e-3);
    q[j] += h;
    J.col(j) = (residuals(pk, s, q) - r0) / h;
  }
  return J;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd &sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const auto &ev = es.eigenvalues();
  const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Eigen::VectorXd inv = ev.unaryExpr([cut](double x) { return std::abs(x) > cut ? 1.0 / x : 0.0; });
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

struct Descent {
  Eigen::VectorXd p;
  Eigen::VectorXd r;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with Marquardt scaling, Nielsen's damping update and
// geodesic acceleration. Every accepted step lowers the cost.
Descent levenberg_marquardt(const Packing &pk, const Samples &s, Eigen::VectorXd p, const FitOptions &options) {
  Descent out;
  Eigen::VectorXd r = residuals(pk, s, p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  double growth = 2.0;

  int it = 0;
  for (; it < options.max_iterations && !out.converged; ++it) {
    const Eigen::MatrixXd J = jacobian(pk, s, p, r);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd grad = J.transpose() * r;
    const Eigen::VectorXd scale = JtJ.diagonal().cwiseMax(1e-12 * std::max(JtJ.diagonal().maxCoeff(), 1e-300));

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = JtJ;
      damped.diagonal() += lambda * scale;
      const auto solver = damped.ldlt();
      const Eigen::VectorXd velocity = solver.solve(-grad);
      // Second directional derivative of the residuals along the step.
      const double h = 0.1;
      const Eigen::VectorXd r_vv =
          (2.0 / h) * ((residuals(pk, s, p + h * velocity) - r) / h - J * velocity);
      const Eigen::VectorXd accel = solver.solve(-J.transpose() * r_vv);
      const bool use_accel = r_vv.allFinite() && 2.0 * accel.norm() <= 0.75 * velocity.norm();
      const Eigen::VectorXd step = use_accel ? Eigen::VectorXd(velocity + 0.5 * accel) : velocity;
      const Eigen::VectorXd trial = p + step;
      const Eigen::VectorXd r_trial = residuals(pk, s, trial);
      const double c_trial = r_trial.squaredNorm();
      const double predicted = velocity.dot(lambda * scale.asDiagonal() * velocity - grad);
      if (std::isfinite(c_trial) && c_trial < cost && predicted > 0.0) {
        const double rho = (cost - c_trial) / predicted;
        const double rel = (cost - c_trial) / cost;
        const double step_norm = step.norm() / (p.norm() + 1e-300);
        p = trial;
        r = r_trial;
        cost = c_trial;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        lambda = std::max(lambda, 1e-15);
        growth = 2.0;
        accepted = true;
        if (rel < options.relative_tolerance || step_norm < options.step_tolerance || cost == 0.0)
          out.converged = true;
      } else {
        lambda *= growth;
        growth *= 2.0;
        if (lambda > 1e16) {
          // No descent direction left at working precision.
          out.converged = true;
          break;
        }
      }
    }
  }
  out.p = std::move(p);
  out.r = std::move(r);
  out.cost = cost;
  out.iterations = it;
  return out;
}

} // namespace

LineshapeModel canonicalize(const LineshapeModel &model) {
  return canonicalize_with(model, ascending_order(model.nu));
}

FitOutcome fit_lineshape(const std::vector<TracePoint> &trace, int order, const FrequencyWindow &window,
                         const LineshapeModel &init, const FitOptions &options) {
  if (order != 2 && order != 3) throw InputError("lineshape order must be 2 or 3");
  if (init.order != order || static_cast<int>(init.nu.size()) != order)
    throw InputError("initial model has the wrong order");
  if (!(window.min > 0.0) || !(window.max > window.min)) throw InputError("invalid fit window");
  for (int m = 0; m < order; ++m) {
    if (!window.contains(init.nu[m])) throw InputError("initial resonance frequency outside the fit window");
    if (!(init.g[m] < 0.0)) throw InputError("initial widths must be negative");
  }

  const Packing pk{order, 0.5 * (window.min + window.max)};
  Samples s;
  for (const auto &pt : trace) {
    if (window.contains(pt.nu)) {
      s.u.push_back(pt.nu / pk.nu_ref);
      s.y.push_back(pt.value);
    }
  }
  const auto n = static_cast<int>(s.u.size());
  if (n < 10 * pk.size())
    throw InputError("fit window holds " + std::to_string(n) + " samples, need " + std::to_string(10 * pk.size()));

  FitOutcome out;
  out.samples = n;
  const Eigen::VectorXd p0 = pk.pack(init);
  out.initial_rss = residuals(pk, s, p0).squaredNorm();
  Descent best = levenberg_marquardt(pk, s, p0, options);
  // |C + B x| is blind to the sign of Im B when C is real; only the
  // Lorentzian cross terms tell the two apart, so also try the mirror.
  Eigen::VectorXd mirror = best.p;
  mirror[4 * order + 1] = -mirror[4 * order + 1];
  Descent other = levenberg_marquardt(pk, s, mirror, options);
  const int total = best.iterations + other.iterations;
  if (other.converged && other.cost < best.cost) best = std::move(other);
  const Eigen::VectorXd &p = best.p;
  const Eigen::VectorXd &r = best.r;
  const double cost = best.cost;
  out.converged = best.converged;
  out.iterations = total;
  out.rss = cost;
  if (!out.converged) out.message = "no convergence after " + std::to_string(best.iterations) + " iterations";

  // Standard errors in internal coordinates, mapped to Hz.
  const Eigen::MatrixXd J = jacobian(pk, s, p, r);
  const double dof = std::max(1, n - pk.size());
  const Eigen::MatrixXd cov = (cost / dof) * pseudo_inverse(J.transpose() * J);

  const LineshapeModel raw = pk.unpack(p);
  const std::vector<int> perm = ascending_order(raw.nu);
  out.model = canonicalize_with(raw, perm);
  for (int m = 0; m < order; ++m) {
    const int i = perm[m];
    out.stderr_nu.push_back(pk.nu_ref * std::sqrt(std::max(0.0, cov(4 * i + 2, 4 * i + 2))));
    out.stderr_g.push_back(std::abs(raw.g[i]) * std::sqrt(std::max(0.0, cov(4 * i + 3, 4 * i + 3))));
    if (!window.contains(out.model.nu[m])) out.escaped = true;
  }
  if (out.escaped) out.message += (out.message.empty() ? "" : "; ") + std::string("resonance left the fit window");
  return out;
}

namespace {

struct Dip {
  std::size_t index;
  double depth;
  double lo, hi; // half-depth support
};

} // namespace

LineshapeModel seed_initial_guess(const std::vector<TracePoint> &trace, int order, const FrequencyWindow &window) {
  if (order != 2 && order != 3) throw InputError("lineshape order must be 2 or 3");
  std::vector<TracePoint> pts;
  for (const auto &pt : trace)
    if (window.contains(pt.nu)) pts.push_back(pt);
  std::sort(pts.begin(), pts.end(), [](const TracePoint &a, const TracePoint &b) { return a.nu < b.nu; });
  if (pts.size() < 5) throw InputError("too few samples in the fit window to seed a fit");

  const double nu0 = pts.front().nu, nu1 = pts.back().nu;
  const double y0 = pts.front().value, y1 = pts.back().value;
  const double slope = (y1 - y0) / (nu1 - nu0);
  auto base = [&](double nu) { return y0 + slope * (nu - nu0); };
  std::vector<double> d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) d[i] = base(pts[i].nu) - pts[i].value;

  std::vector<Dip> candidates;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i)
    if (d[i] > 0.0 && d[i] >= d[i - 1] && d[i] > d[i + 1]) candidates.push_back({i, d[i], 0.0, 0.0});
  std::sort(candidates.begin(), candidates.end(), [](const Dip &a, const Dip &b) { return a.depth > b.depth; });
  if (candidates.empty() || candidates.front().depth < 0.01 * std::abs(base(pts[candidates.front().index].nu)))
    throw InputError("flat trace: no dip below 0.99 of the baseline");

  auto support = [&](Dip &dip) {
    std::size_t lo = dip.index, hi = dip.index;
    while (lo > 0 && d[lo - 1] > 0.5 * dip.depth) --lo;
    while (hi + 1 < pts.size() && d[hi + 1] > 0.5 * dip.depth) ++hi;
    dip.lo = pts[lo].nu;
    dip.hi = pts[hi].nu;
    if (dip.hi - dip.lo <= 0.0) {
      dip.lo = pts[lo > 0 ? lo - 1 : lo].nu;
      dip.hi = pts[hi + 1 < pts.size() ? hi + 1 : hi].nu;
    }
  };

  // Deepest first, skipping candidates inside an accepted dip's support.
  std::vector<Dip> dips;
  const double noise_floor = 1e-3 * std::abs(y0);
  for (auto c : candidates) {
    if (static_cast<int>(dips.size()) == order) break;
    if (c.depth < noise_floor) break;
    const double nu = pts[c.index].nu;
    if (std::any_of(dips.begin(), dips.end(), [&](const Dip &o) { return nu >= o.lo && nu <= o.hi; })) continue;
    support(c);
    dips.push_back(c);
  }

  struct Seed {
    double nu, half_width, depth;
  };
  std::vector<Seed> seeds;
  if (dips.size() == 1) {
    // Merged dip: spread all seeds across its support.
    const Dip &dip = dips.front();
    const double span = dip.hi - dip.lo;
    for (int m = 0; m < order; ++m)
      seeds.push_back({dip.lo + span * (m + 1) / (order + 1), 0.5 * span / order, dip.depth});
  } else {
    for (const auto &dip : dips) seeds.push_back({pts[dip.index].nu, 0.5 * (dip.hi - dip.lo), dip.depth});
    while (static_cast<int>(seeds.size()) < order) {
      std::vector<double> edges{nu0, nu1};
      for (const auto &sd : seeds) edges.push_back(sd.nu);
      std::sort(edges.begin(), edges.end());
      std::size_t widest = 0;
      for (std::size_t i = 1; i + 1 < edges.size(); ++i)
        if (edges[i + 1] - edges[i] > edges[widest + 1] - edges[widest]) widest = i;
      const double gap = edges[widest + 1] - edges[widest];
      seeds.push_back({edges[widest] + 0.5 * gap, 0.25 * gap, 0.01 * std::abs(y0)});
    }
  }

  LineshapeModel m = LineshapeModel::zeros(order);
  std::sort(seeds.begin(), seeds.end(), [](const Seed &a, const Seed &b) { return a.nu < b.nu; });
  for (int i = 0; i < order; ++i) {
    m.nu[i] = seeds[i].nu;
    m.g[i] = -std::max(seeds[i].half_width, 1e-6 * seeds[i].nu);
    // A term with A = 2 g depth pulls the modulus down by `depth` at nu_m.
    m.amplitude[i] = 2.0 * m.g[i] * seeds[i].depth;
  }
  set_baseline(m, slope, y0 - slope * nu0);
  return canonicalize(m);
}

std::vector<TracePoint> to_points(const std::vector<TraceRow> &rows) {
  std::vector<TracePoint> out;
  out.reserve(rows.size());
  for (const auto &r : rows)
    if (!r.ill_conditioned) out.push_back({r.nu, r.abs_det_S});
  return out;
}

} // namespace resonet
