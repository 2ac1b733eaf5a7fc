#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resonet/constants.hpp"

namespace resonet {

/// Finite edge with an affine length family l(t) = length * (1 + slope * t).
/// Coordinate 0 sits at the tail vertex, coordinate l(t) at the head.
struct InternalEdge {
  int id = 0;
  int tail = 0;
  int head = 0;
  double length = 0.0; // m, optical
  double slope = 0.0;  // dimensionless

  bool operator==(const InternalEdge &) const = default;
};

/// Semi-infinite lead, x = 0 at the attachment vertex.
struct Lead {
  int id = 0;
  int vertex = 0;

  bool operator==(const Lead &) const = default;
};

/// One end of an edge or lead meeting a vertex.
struct EdgeEnd {
  enum class Kind { Tail, Head, Lead };
  Kind kind = Kind::Tail;
  int index = 0; // position in edges() or leads()

  bool operator==(const EdgeEnd &) const = default;
};

/// Closed parameter interval with a uniform grid.
struct SweepRange {
  double t_min = 0.0;
  double t_max = 0.0;
  int steps = 1;

  bool contains(double t) const noexcept;
  std::vector<double> grid() const;

  bool operator==(const SweepRange &) const = default;
};

/// Validated open metric graph with Kirchhoff vertices. Immutable once built.
class MetricGraph {
public:
  MetricGraph() = default;

  /// Validates ids, endpoints, positivity and connectivity; throws InputError.
  MetricGraph(int vertex_count, std::vector<InternalEdge> edges, std::vector<Lead> leads);

  int vertex_count() const noexcept { return vertex_count_; }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  int lead_count() const noexcept { return static_cast<int>(leads_.size()); }

  const std::vector<InternalEdge> &edges() const noexcept { return edges_; }
  const std::vector<Lead> &leads() const noexcept { return leads_; }
  const InternalEdge &edge(int index) const { return edges_.at(index); }

  /// Ends incident to `vertex`: edges in storage order (tail before head for
  /// loops), then leads.
  const std::vector<EdgeEnd> &incidence(int vertex) const { return incidence_.at(vertex); }

  /// Storage index for an edge id, or nullopt.
  std::optional<int> edge_index(int edge_id) const;

  /// Edge lengths at parameter t; throws InputError if any is nonpositive.
  std::vector<double> lengths_at(double t) const;

  /// Copy with every base length multiplied by `factor`.
  MetricGraph scaled(double factor) const;

  /// Copy with leads reordered: new lead i is old lead order[i].
  MetricGraph with_lead_order(const std::vector<int> &order) const;

  bool operator==(const MetricGraph &other) const;

private:
  void validate() const;

  int vertex_count_ = 0;
  std::vector<InternalEdge> edges_;
  std::vector<Lead> leads_;
  std::vector<std::vector<EdgeEnd>> incidence_;
};

/// Rates a_j = -(1/l_j) dl_j/dt at t = 0, indexed like MetricGraph::edges().
using PerturbationVector = std::vector<double>;

/// Everything a graph-spec file describes.
struct GraphSpec {
  MetricGraph graph;
  SweepRange sweep;
  double beta = 0.0;                   // m^-1/2
  std::optional<double> eigen_hint;    // m^-1, embedded eigenvalue near here

  bool operator==(const GraphSpec &) const = default;
};

double length_at(const InternalEdge &edge, double t);
/// As above, rejecting t outside `range`.
double length_at(const InternalEdge &edge, double t, const SweepRange &range);

double a_dot(const MetricGraph &graph, int edge_id);
PerturbationVector perturbation_vector(const MetricGraph &graph);

double optical_length(double geometric_length, double epsilon);

/// TE11 cutoff of a coaxial line, Hz.
double cutoff_frequency(double r1, double r2, double epsilon);
double cutoff_frequency(const CableProfile &cable);

/// Breadth-first reachability through edges and leads' vertices.
bool is_connected(int vertex_count, const std::vector<InternalEdge> &edges);

GraphSpec parse_graph_spec(std::string_view text);
GraphSpec load_graph_spec(const std::string &path);
std::string serialize_graph_spec(const GraphSpec &spec);

} // namespace resonet
