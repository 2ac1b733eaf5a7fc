#include "resonet/wave_solver.hpp"

#include <cmath>
#include <limits>

#include "resonet/errors.hpp"
#include "resonet/parallel.hpp"

namespace resonet {

using namespace std::complex_literals;

Complex WaveField::edge_value(int edge, double x) const {
  return sin_coeff[edge] * std::sin(k * x) + cos_coeff[edge] * std::cos(k * x);
}

Complex WaveField::edge_derivative(int edge, double x) const {
  return k * (sin_coeff[edge] * std::cos(k * x) - cos_coeff[edge] * std::sin(k * x));
}

Complex WaveField::value(const EdgeEnd &end) const {
  switch (end.kind) {
  case EdgeEnd::Kind::Tail: return cos_coeff[end.index];
  case EdgeEnd::Kind::Head: return edge_value(end.index, lengths[end.index]);
  case EdgeEnd::Kind::Lead: return incoming[end.index] + outgoing[end.index];
  }
  return {};
}

Complex WaveField::normal_derivative(const EdgeEnd &end) const {
  switch (end.kind) {
  case EdgeEnd::Kind::Tail: return -k * sin_coeff[end.index];
  case EdgeEnd::Kind::Head: return edge_derivative(end.index, lengths[end.index]);
  case EdgeEnd::Kind::Lead: return 1i * k * (incoming[end.index] - outgoing[end.index]);
  }
  return {};
}

namespace {

// Coefficients of one vertex end in the value and (derivative / k) rows.
// `drive` is the contribution of a unit incoming amplitude on a lead.
struct EndRow {
  int col_a = -1;
  Complex a;
  int col_b = -1;
  Complex b;
  Complex drive;
};

EndRow value_row(const EdgeEnd &end, int n_edges, Complex sin_kl, Complex cos_kl) {
  switch (end.kind) {
  case EdgeEnd::Kind::Tail: return {2 * end.index + 1, 1.0, -1, 0.0, 0.0};
  case EdgeEnd::Kind::Head: return {2 * end.index, sin_kl, 2 * end.index + 1, cos_kl, 0.0};
  case EdgeEnd::Kind::Lead: return {2 * n_edges + end.index, 1.0, -1, 0.0, 1.0};
  }
  return {};
}

EndRow derivative_row(const EdgeEnd &end, int n_edges, Complex sin_kl, Complex cos_kl) {
  switch (end.kind) {
  case EdgeEnd::Kind::Tail: return {2 * end.index, -1.0, -1, 0.0, 0.0};
  case EdgeEnd::Kind::Head: return {2 * end.index, cos_kl, 2 * end.index + 1, -sin_kl, 0.0};
  case EdgeEnd::Kind::Lead: return {2 * n_edges + end.index, -1i, -1, 0.0, 1i};
  }
  return {};
}

} // namespace

SecularSystem assemble(const MetricGraph &graph, double t, Complex k) {
  if (k == 0.0) throw InputError("wavenumber k = 0 is not admissible");
  SecularSystem sys;
  sys.k = k;
  sys.t = t;
  sys.lengths = graph.lengths_at(t);

  const int n_edges = graph.edge_count();
  const int n_leads = graph.lead_count();
  const int n = 2 * n_edges + n_leads;
  sys.matrix = Eigen::MatrixXcd::Zero(n, n);
  sys.drives = Eigen::MatrixXcd::Zero(n, n_leads);

  std::vector<Complex> sin_kl(n_edges), cos_kl(n_edges);
  for (int j = 0; j < n_edges; ++j) {
    sin_kl[j] = std::sin(k * sys.lengths[j]);
    cos_kl[j] = std::cos(k * sys.lengths[j]);
  }
  auto trig = [&](const EdgeEnd &e) {
    return e.kind == EdgeEnd::Kind::Lead ? std::pair<Complex, Complex>{}
                                         : std::pair{sin_kl[e.index], cos_kl[e.index]};
  };
  auto add = [&](int row, const EndRow &r, double sign) {
    if (r.col_a >= 0) sys.matrix(row, r.col_a) += sign * r.a;
    if (r.col_b >= 0) sys.matrix(row, r.col_b) += sign * r.b;
  };

  int row = 0;
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto &ends = graph.incidence(v);
    if (ends.empty()) continue;
    const auto [s0, c0] = trig(ends[0]);
    const EndRow first = value_row(ends[0], n_edges, s0, c0);
    for (std::size_t i = 1; i < ends.size(); ++i, ++row) {
      const auto [si, ci] = trig(ends[i]);
      const EndRow cur = value_row(ends[i], n_edges, si, ci);
      add(row, cur, 1.0);
      add(row, first, -1.0);
      if (ends[i].kind == EdgeEnd::Kind::Lead) sys.drives(row, ends[i].index) -= cur.drive;
      if (ends[0].kind == EdgeEnd::Kind::Lead) sys.drives(row, ends[0].index) += first.drive;
    }
    for (const auto &e : ends) {
      const auto [se, ce] = trig(e);
      const EndRow d = derivative_row(e, n_edges, se, ce);
      add(row, d, 1.0);
      if (e.kind == EdgeEnd::Kind::Lead) sys.drives(row, e.index) -= d.drive;
    }
    ++row;
  }
  return sys;
}

Complex secular_det(const MetricGraph &graph, double t, Complex k) {
  return assemble(graph, t, k).matrix.partialPivLu().determinant();
}

double reciprocal_condition(const Eigen::MatrixXcd &m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  const auto &sv = svd.singularValues();
  const double top = sv(0);
  if (!(top > 0.0)) return 0.0;
  return sv(sv.size() - 1) / top;
}

WaveField make_field(const MetricGraph &graph, const SecularSystem &system,
                     const Eigen::VectorXcd &solution, const Eigen::VectorXcd &incoming) {
  const int n_edges = graph.edge_count();
  const int n_leads = graph.lead_count();
  WaveField f;
  f.k = system.k;
  f.lengths = system.lengths;
  f.sin_coeff.resize(n_edges);
  f.cos_coeff.resize(n_edges);
  for (int j = 0; j < n_edges; ++j) {
    f.sin_coeff[j] = solution[2 * j];
    f.cos_coeff[j] = solution[2 * j + 1];
  }
  f.outgoing = solution.segment(2 * n_edges, n_leads);
  f.incoming = incoming;
  return f;
}

WaveField driven_field(const MetricGraph &graph, const SecularSystem &system, int lead) {
  if (lead < 0 || lead >= graph.lead_count()) throw InputError("lead index out of range");
  const Eigen::VectorXcd x = system.matrix.fullPivLu().solve(system.drives.col(lead));
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(graph.lead_count());
  in[lead] = 1.0;
  return make_field(graph, system, x, in);
}

ScatterResult scattering_matrix(const MetricGraph &graph, double t, Complex k) {
  if (graph.lead_count() < 1) throw InputError("scattering needs at least one lead");
  const SecularSystem sys = assemble(graph, t, k);
  ScatterResult r;
  r.rcond = reciprocal_condition(sys.matrix);
  r.ill_conditioned = !(r.rcond >= kSingularRcond);
  const auto lu = sys.matrix.fullPivLu();
  r.secular_det = lu.determinant();
  const Eigen::MatrixXcd x = lu.solve(sys.drives);
  r.S = x.bottomRows(graph.lead_count());
  r.det_S = r.S.determinant();
  return r;
}

double vertex_residual(const MetricGraph &graph, const WaveField &field) {
  double worst = 0.0;
  double scale = std::numeric_limits<double>::min();
  const double kabs = std::abs(field.k);
  for (int v = 0; v < graph.vertex_count(); ++v) {
    const auto &ends = graph.incidence(v);
    if (ends.empty()) continue;
    const Complex u0 = field.value(ends[0]);
    Complex flux = 0.0;
    for (const auto &e : ends) {
      const Complex u = field.value(e);
      const Complex d = field.normal_derivative(e) / kabs;
      scale = std::max({scale, std::abs(u), std::abs(d)});
      worst = std::max(worst, std::abs(u - u0));
      flux += d;
    }
    worst = std::max(worst, std::abs(flux));
  }
  return worst / scale;
}

Complex Dispersion::at_frequency(double nu) const { return dispersion_k(nu, beta); }

Complex Dispersion::at_wavenumber(Complex kappa) const { return kappa + 1i * beta * std::sqrt(kappa); }

Complex dispersion_k(double nu, double beta) {
  if (!(nu > 0.0)) throw InputError("frequency must be positive");
  const double kr = wavenumber_of(nu);
  return {kr, beta * std::sqrt(kr)};
}

std::vector<double> FrequencyGrid::points() const {
  if (steps < 1) throw InputError("frequency grid needs at least one step");
  if (!(min > 0.0) || !(max >= min)) throw InputError("frequency grid needs 0 < min <= max");
  if (steps == 1) return {min};
  std::vector<double> out(steps);
  const double h = (max - min) / (steps - 1);
  for (int i = 0; i < steps; ++i) out[i] = min + h * i;
  out.back() = max;
  return out;
}

std::vector<TraceRow> trace_detS(const MetricGraph &graph, double t, const FrequencyGrid &grid,
                                 double beta, const CableProfile &cable) {
  const auto nus = grid.points();
  const double nu_c = cutoff_frequency(cable);
  if (grid.max >= nu_c)
    throw InputError("sweep reaches the TE11 cutoff (" + std::to_string(nu_c) + " Hz)");
  graph.lengths_at(t); // positivity check before fanning out
  const Dispersion disp{beta};
  std::vector<TraceRow> rows(nus.size());
  parallel_for(nus.size(), [&](std::size_t i) {
    const ScatterResult r = scattering_matrix(graph, t, disp.at_frequency(nus[i]));
    rows[i] = {nus[i], r.det_S, std::abs(r.det_S), r.ill_conditioned};
  });
  return rows;
}

} // namespace resonet
