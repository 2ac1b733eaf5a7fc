#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "resonet/errors.hpp"
#include "resonet/graph.hpp"

namespace resonet {
namespace {

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_real(std::string_view word, std::size_t line, const char *what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size())
    throw ParseError(line, std::string("expected a number for ") + what + ", got '" +
                               std::string(word) + "'");
  return v;
}

int parse_int(std::string_view word, std::size_t line, const char *what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size())
    throw ParseError(line, std::string("expected an integer for ") + what + ", got '" +
                               std::string(word) + "'");
  return v;
}

void expect_keyword(std::string_view word, std::string_view keyword, std::size_t line) {
  if (word != keyword)
    throw ParseError(line, "expected '" + std::string(keyword) + "', got '" + std::string(word) + "'");
}

std::string fmt_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

} // namespace

GraphSpec parse_graph_spec(std::string_view text) {
  std::map<int, std::size_t> vertex_lines;
  std::vector<std::pair<InternalEdge, std::size_t>> edges;
  std::vector<std::pair<Lead, std::size_t>> leads;
  std::optional<SweepRange> sweep;
  GraphSpec spec;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto w = split_words(line);
    if (w.empty()) continue;

    auto need = [&](std::size_t n) {
      if (w.size() != n)
        throw ParseError(line_no, "'" + std::string(w[0]) + "' takes " + std::to_string(n - 1) +
                                      " fields, got " + std::to_string(w.size() - 1));
    };

    if (w[0] == "vertex") {
      need(2);
      const int id = parse_int(w[1], line_no, "vertex id");
      if (!vertex_lines.emplace(id, line_no).second)
        throw ParseError(line_no, "duplicate vertex id " + std::to_string(id));
    } else if (w[0] == "edge") {
      if (w.size() != 6 && w.size() != 8)
        throw ParseError(line_no, "edge syntax: edge <id> <tail> <head> length <l> [slope <c>]");
      InternalEdge e;
      e.id = parse_int(w[1], line_no, "edge id");
      e.tail = parse_int(w[2], line_no, "tail vertex");
      e.head = parse_int(w[3], line_no, "head vertex");
      expect_keyword(w[4], "length", line_no);
      e.length = parse_real(w[5], line_no, "length");
      if (w.size() == 8) {
        expect_keyword(w[6], "slope", line_no);
        e.slope = parse_real(w[7], line_no, "slope");
      }
      edges.emplace_back(e, line_no);
    } else if (w[0] == "lead") {
      need(3);
      leads.emplace_back(Lead{parse_int(w[1], line_no, "lead id"), parse_int(w[2], line_no, "lead vertex")},
                         line_no);
    } else if (w[0] == "sweep") {
      need(5);
      expect_keyword(w[1], "t", line_no);
      if (sweep) throw ParseError(line_no, "duplicate sweep line");
      SweepRange r{parse_real(w[2], line_no, "t min"), parse_real(w[3], line_no, "t max"),
                   parse_int(w[4], line_no, "steps")};
      if (!(r.t_min <= r.t_max) || r.steps < 1)
        throw ParseError(line_no, "sweep needs min <= max and steps >= 1");
      sweep = r;
    } else if (w[0] == "absorption") {
      need(3);
      expect_keyword(w[1], "beta", line_no);
      spec.beta = parse_real(w[2], line_no, "beta");
      if (!(spec.beta >= 0.0)) throw ParseError(line_no, "beta must be nonnegative");
    } else if (w[0] == "eigen") {
      need(3);
      expect_keyword(w[1], "k", line_no);
      const double k = parse_real(w[2], line_no, "eigen k");
      if (!(k > 0.0)) throw ParseError(line_no, "eigen k must be positive");
      spec.eigen_hint = k;
    } else {
      throw ParseError(line_no, "unknown directive '" + std::string(w[0]) + "'");
    }
  }

  // Semantic checks, reported against the offending line.
  const int n_vertices = static_cast<int>(vertex_lines.size());
  int expected = 0;
  for (const auto &[id, ln] : vertex_lines) {
    if (id != expected)
      throw ParseError(ln, "vertex ids must be contiguous from 0 (missing " + std::to_string(expected) + ")");
    ++expected;
  }
  auto vertex_ok = [&](int v) { return v >= 0 && v < n_vertices; };
  std::map<int, std::size_t> seen_edges, seen_leads;
  for (const auto &[e, ln] : edges) {
    if (!seen_edges.emplace(e.id, ln).second) throw ParseError(ln, "duplicate edge id " + std::to_string(e.id));
    if (!vertex_ok(e.tail) || !vertex_ok(e.head))
      throw ParseError(ln, "edge " + std::to_string(e.id) + " references an undeclared vertex");
    if (!(e.length > 0.0)) throw ParseError(ln, "edge " + std::to_string(e.id) + " needs a positive length");
  }
  for (const auto &[l, ln] : leads) {
    if (!seen_leads.emplace(l.id, ln).second) throw ParseError(ln, "duplicate lead id " + std::to_string(l.id));
    if (!vertex_ok(l.vertex))
      throw ParseError(ln, "lead " + std::to_string(l.id) + " references an undeclared vertex");
  }

  spec.sweep = sweep.value_or(SweepRange{0.0, 0.0, 1});
  for (const auto &[e, ln] : edges) {
    // Affine in t: positivity at both ends covers the whole range.
    for (double t : {spec.sweep.t_min, spec.sweep.t_max})
      if (!(e.length * (1.0 + e.slope * t) > 0.0))
        throw ParseError(ln, "edge " + std::to_string(e.id) + " length is nonpositive inside the sweep range");
  }

  std::vector<InternalEdge> plain_edges;
  for (const auto &[e, ln] : edges) plain_edges.push_back(e);
  std::vector<Lead> plain_leads;
  for (const auto &[l, ln] : leads) plain_leads.push_back(l);
  spec.graph = MetricGraph(n_vertices, std::move(plain_edges), std::move(plain_leads));
  return spec;
}

GraphSpec load_graph_spec(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open graph spec '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_graph_spec(ss.str());
}

std::string serialize_graph_spec(const GraphSpec &spec) {
  std::ostringstream out;
  const auto &g = spec.graph;
  for (int v = 0; v < g.vertex_count(); ++v) out << "vertex " << v << '\n';
  for (const auto &e : g.edges()) {
    out << "edge " << e.id << ' ' << e.tail << ' ' << e.head << " length " << fmt_real(e.length);
    if (e.slope != 0.0) out << " slope " << fmt_real(e.slope);
    out << '\n';
  }
  for (const auto &l : g.leads()) out << "lead " << l.id << ' ' << l.vertex << '\n';
  out << "sweep t " << fmt_real(spec.sweep.t_min) << ' ' << fmt_real(spec.sweep.t_max) << ' '
      << spec.sweep.steps << '\n';
  if (spec.beta != 0.0) out << "absorption beta " << fmt_real(spec.beta) << '\n';
  if (spec.eigen_hint) out << "eigen k " << fmt_real(*spec.eigen_hint) << '\n';
  return out.str();
}

} // namespace resonet
