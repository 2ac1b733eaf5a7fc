#include "resonet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

#include "resonet/errors.hpp"

namespace resonet {

bool SweepRange::contains(double t) const noexcept {
  const double slack = 1e-12 * std::max(1.0, std::abs(t_max - t_min));
  return t >= t_min - slack && t <= t_max + slack;
}

std::vector<double> SweepRange::grid() const {
  if (steps < 1) throw InputError("sweep needs at least one step");
  if (steps == 1) return {t_min};
  std::vector<double> out(steps);
  const double h = (t_max - t_min) / (steps - 1);
  for (int i = 0; i < steps; ++i) out[i] = t_min + h * i;
  // Snap the grid point closest to zero onto it so continuation can start there.
  if (contains(0.0)) {
    auto it = std::min_element(out.begin(), out.end(),
                               [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (std::abs(*it) < 1e-9 * std::max(1.0, std::abs(h))) *it = 0.0;
  }
  return out;
}

double length_at(const InternalEdge &edge, double t) {
  const double l = edge.length * (1.0 + edge.slope * t);
  if (!(l > 0.0))
    throw InputError("edge " + std::to_string(edge.id) + " has nonpositive length at t=" +
                     std::to_string(t));
  return l;
}

double length_at(const InternalEdge &edge, double t, const SweepRange &range) {
  if (!range.contains(t))
    throw InputError("t=" + std::to_string(t) + " outside sweep range [" +
                     std::to_string(range.t_min) + ", " + std::to_string(range.t_max) + "]");
  return length_at(edge, t);
}

bool is_connected(int vertex_count, const std::vector<InternalEdge> &edges) {
  if (vertex_count <= 1) return true;
  std::vector<std::vector<int>> adj(vertex_count);
  for (const auto &e : edges) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  std::vector<char> seen(vertex_count, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        q.push(w);
      }
    }
  }
  return reached == vertex_count;
}

MetricGraph::MetricGraph(int vertex_count, std::vector<InternalEdge> edges, std::vector<Lead> leads)
    : vertex_count_(vertex_count), edges_(std::move(edges)), leads_(std::move(leads)) {
  validate();
  incidence_.assign(vertex_count_, {});
  for (int j = 0; j < edge_count(); ++j) {
    incidence_[edges_[j].tail].push_back({EdgeEnd::Kind::Tail, j});
    incidence_[edges_[j].head].push_back({EdgeEnd::Kind::Head, j});
  }
  for (int s = 0; s < lead_count(); ++s) incidence_[leads_[s].vertex].push_back({EdgeEnd::Kind::Lead, s});
}

void MetricGraph::validate() const {
  if (vertex_count_ < 1) throw InputError("graph has no vertices");
  std::set<int> edge_ids, lead_ids;
  auto check_vertex = [&](int v, const std::string &who) {
    if (v < 0 || v >= vertex_count_)
      throw InputError(who + " references missing vertex " + std::to_string(v));
  };
  for (const auto &e : edges_) {
    const std::string who = "edge " + std::to_string(e.id);
    if (!edge_ids.insert(e.id).second) throw InputError("duplicate edge id " + std::to_string(e.id));
    check_vertex(e.tail, who);
    check_vertex(e.head, who);
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      throw InputError(who + " has nonpositive length");
    if (!std::isfinite(e.slope)) throw InputError(who + " has non-finite slope");
  }
  for (const auto &l : leads_) {
    if (!lead_ids.insert(l.id).second) throw InputError("duplicate lead id " + std::to_string(l.id));
    check_vertex(l.vertex, "lead " + std::to_string(l.id));
  }
  if (!is_connected(vertex_count_, edges_)) throw InputError("graph is not connected");
}

std::optional<int> MetricGraph::edge_index(int edge_id) const {
  for (int j = 0; j < edge_count(); ++j)
    if (edges_[j].id == edge_id) return j;
  return std::nullopt;
}

std::vector<double> MetricGraph::lengths_at(double t) const {
  std::vector<double> out(edges_.size());
  for (std::size_t j = 0; j < edges_.size(); ++j) out[j] = length_at(edges_[j], t);
  return out;
}

MetricGraph MetricGraph::scaled(double factor) const {
  if (!(factor > 0.0)) throw InputError("scale factor must be positive");
  auto edges = edges_;
  for (auto &e : edges) e.length *= factor;
  return MetricGraph(vertex_count_, std::move(edges), leads_);
}

MetricGraph MetricGraph::with_lead_order(const std::vector<int> &order) const {
  if (order.size() != leads_.size()) throw InputError("lead permutation has wrong size");
  std::vector<Lead> leads;
  leads.reserve(order.size());
  for (int i : order) leads.push_back(leads_.at(i));
  return MetricGraph(vertex_count_, edges_, std::move(leads));
}

bool MetricGraph::operator==(const MetricGraph &other) const {
  return vertex_count_ == other.vertex_count_ && edges_ == other.edges_ && leads_ == other.leads_;
}

double a_dot(const MetricGraph &graph, int edge_id) {
  const auto j = graph.edge_index(edge_id);
  if (!j) throw InputError("unknown edge id " + std::to_string(edge_id));
  return -graph.edge(*j).slope;
}

PerturbationVector perturbation_vector(const MetricGraph &graph) {
  PerturbationVector out(graph.edge_count());
  for (int j = 0; j < graph.edge_count(); ++j) out[j] = -graph.edge(j).slope;
  return out;
}

double optical_length(double geometric_length, double epsilon) {
  if (!(geometric_length > 0.0)) throw InputError("geometric length must be positive");
  if (!(epsilon >= 1.0)) throw InputError("permittivity must be >= 1");
  return geometric_length * std::sqrt(epsilon);
}

double cutoff_frequency(double r1, double r2, double epsilon) {
  if (!(r1 > 0.0) || !(r2 > r1)) throw InputError("cable radii must satisfy 0 < r1 < r2");
  if (!(epsilon >= 1.0)) throw InputError("permittivity must be >= 1");
  return kSpeedOfLight / (kPi * (r1 + r2) * std::sqrt(epsilon));
}

double cutoff_frequency(const CableProfile &cable) {
  return cutoff_frequency(cable.inner_radius, cable.outer_radius, cable.permittivity);
}

} // namespace resonet
