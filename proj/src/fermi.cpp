#include "resonet/fermi.hpp"

#include <algorithm>
#include <cmath>

#include "resonet/errors.hpp"
#include "resonet/resonance.hpp"

namespace resonet {

double internal_norm_squared(const WaveField &field) {
  const double k = field.k.real();
  double total = 0.0;
  for (Eigen::Index j = 0; j < field.sin_coeff.size(); ++j) {
    const Complex a = field.sin_coeff[j];
    const Complex b = field.cos_coeff[j];
    total += edge_overlap(k, field.lengths[j], a, b, a, b).real();
  }
  return total;
}

EmbeddedEigenpair embedded_eigenpair(const MetricGraph &graph, double k_guess) {
  if (!(k_guess > 0.0)) throw InputError("eigenvalue guess must be positive");
  const Resonance root = refine_zero(graph, 0.0, k_guess);
  if (!root.converged || std::abs(root.k.imag()) > 1e-8 * std::abs(root.k) ||
      std::abs(root.k.real() - k_guess) > 0.25 * k_guess)
    throw NumericalError("no real zero of the secular determinant near k = " + std::to_string(k_guess));

  EmbeddedEigenpair pair;
  pair.k = root.k.real();
  const SecularSystem sys = assemble(graph, 0.0, pair.k);
  const int n_edges = graph.edge_count();
  // Lead amplitudes pinned to zero: keep only the edge columns.
  const Eigen::MatrixXcd constrained = sys.matrix.leftCols(2 * n_edges);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(constrained, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  const Eigen::Index last = sv.size() - 1;
  const double top = Eigen::JacobiSVD<Eigen::MatrixXcd>(sys.matrix).singularValues()(0);
  pair.null_sigma = sv(last) / top;
  pair.second_sigma = last > 0 ? sv(last - 1) / top : 1.0;
  if (pair.null_sigma > 1e-8)
    throw NumericalError("zero at k = " + std::to_string(pair.k) + " has no eigenfunction vanishing on the leads");
  if (pair.second_sigma < 1e-6)
    throw NumericalError("eigenvalue at k = " + std::to_string(pair.k) + " is not simple");

  Eigen::VectorXcd v(2 * n_edges + graph.lead_count());
  v.setZero();
  v.head(2 * n_edges) = svd.matrixV().col(last);
  Eigen::Index big = 0;
  v.head(2 * n_edges).cwiseAbs().maxCoeff(&big);
  v *= std::abs(v[big]) / v[big];

  pair.u = make_field(graph, sys, v, Eigen::VectorXcd::Zero(graph.lead_count()));
  const double norm = std::sqrt(internal_norm_squared(pair.u));
  pair.u.sin_coeff /= norm;
  pair.u.cos_coeff /= norm;
  pair.norm = std::sqrt(internal_norm_squared(pair.u));
  return pair;
}

namespace {

Eigen::VectorXcd driven_solution(const MetricGraph &graph, double k, int lead) {
  const SecularSystem sys = assemble(graph, 0.0, k);
  return sys.matrix.fullPivLu().solve(sys.drives.col(lead));
}

// Two Richardson sweeps with ratio 2 remove the O(d) and O(d^2) terms.
Eigen::VectorXcd one_sided_limit(const MetricGraph &graph, double k, int lead, double side) {
  constexpr double deltas[3] = {1e-3, 5e-4, 2.5e-4};
  Eigen::VectorXcd x[3];
  for (int i = 0; i < 3; ++i) x[i] = driven_solution(graph, k * (1.0 + side * deltas[i]), lead);
  const Eigen::VectorXcd r1 = 2.0 * x[1] - x[0];
  const Eigen::VectorXcd r2 = 2.0 * x[2] - x[1];
  return (4.0 * r2 - r1) / 3.0;
}

constexpr double kDirectSolveRcond = 1e-8;

} // namespace

GeneralizedEigenfunction generalized_eigenfunction(const MetricGraph &graph, double k, int lead) {
  if (!(k > 0.0)) throw InputError("generalized eigenfunctions need k > 0");
  if (lead < 0 || lead >= graph.lead_count()) throw InputError("lead index out of range");
  const SecularSystem sys = assemble(graph, 0.0, k);
  GeneralizedEigenfunction gef;
  gef.lead = lead;
  Eigen::VectorXcd x;
  if (reciprocal_condition(sys.matrix) >= kDirectSolveRcond) {
    x = sys.matrix.fullPivLu().solve(sys.drives.col(lead));
  } else {
    const Eigen::VectorXcd plus = one_sided_limit(graph, k, lead, +1.0);
    const Eigen::VectorXcd minus = one_sided_limit(graph, k, lead, -1.0);
    const double scale = std::max(1.0, std::max(plus.cwiseAbs().maxCoeff(), minus.cwiseAbs().maxCoeff()));
    gef.side_mismatch = (plus - minus).cwiseAbs().maxCoeff() / scale;
    if (gef.side_mismatch > 1e-6)
      throw NumericalError("non-removable singularity of the scattering solution at k = " + std::to_string(k));
    x = 0.5 * (plus + minus);
    gef.extrapolated = true;
  }
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(graph.lead_count());
  in[lead] = 1.0;
  gef.field = make_field(graph, sys, x, in);
  gef.scattering = gef.field.outgoing;
  return gef;
}

namespace {

void check_compatible(const MetricGraph &graph, const EmbeddedEigenpair &pair,
                      const GeneralizedEigenfunction &gef, const PerturbationVector &rates) {
  if (std::abs(pair.k - gef.field.k.real()) > 1e-12 * pair.k || gef.field.k.imag() != 0.0)
    throw InputError("eigenfunction and generalized eigenfunction are at different k");
  if (static_cast<int>(rates.size()) != graph.edge_count())
    throw InputError("perturbation vector length does not match the edge count");
}

} // namespace

Complex volume_term(const MetricGraph &graph, const EmbeddedEigenpair &pair,
                    const GeneralizedEigenfunction &gef, const PerturbationVector &rates) {
  check_compatible(graph, pair, gef, rates);
  Complex sum = 0.0;
  for (int j = 0; j < graph.edge_count(); ++j) {
    if (rates[j] == 0.0) continue;
    sum += rates[j] * edge_overlap(pair.k, pair.u.lengths[j], pair.u.sin_coeff[j], pair.u.cos_coeff[j],
                                   gef.field.sin_coeff[j], gef.field.cos_coeff[j]);
  }
  return pair.k * sum;
}

Complex vertex_term(const MetricGraph &graph, const EmbeddedEigenpair &pair,
                    const GeneralizedEigenfunction &gef, const PerturbationVector &rates) {
  check_compatible(graph, pair, gef, rates);
  Complex sum = 0.0;
  for (int v = 0; v < graph.vertex_count(); ++v) {
    for (const auto &end : graph.incidence(v)) {
      if (end.kind == EdgeEnd::Kind::Lead || rates[end.index] == 0.0) continue;
      const Complex du = pair.u.normal_derivative(end);
      const Complex u = pair.u.value(end);
      const Complex e = gef.field.value(end);
      const Complex de = gef.field.normal_derivative(end);
      sum += 0.25 * rates[end.index] * (3.0 * du * std::conj(e) - u * std::conj(de));
    }
  }
  return sum / pair.k;
}

FermiResult fermi_rate(const MetricGraph &graph, const EmbeddedEigenpair &pair, const PerturbationVector &rates) {
  FermiResult out;
  out.k = pair.k;
  for (int s = 0; s < graph.lead_count(); ++s) {
    const GeneralizedEigenfunction gef = generalized_eigenfunction(graph, pair.k, s);
    out.volume.push_back(volume_term(graph, pair, gef, rates));
    out.vertex.push_back(vertex_term(graph, pair, gef, rates));
    out.F.push_back(out.volume.back() + out.vertex.back());
    out.im_k_ddot -= std::norm(out.F.back());
  }
  return out;
}

FermiResult fermi_rate(const MetricGraph &graph, double k_embedded, const PerturbationVector &rates) {
  return fermi_rate(graph, embedded_eigenpair(graph, k_embedded), rates);
}

} // namespace resonet
