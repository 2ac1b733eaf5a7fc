#include "resonet/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "resonet/errors.hpp"

namespace resonet {

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return {buf, res.ptr};
}

void write_manifest_line(std::ostream &os, const std::string &text) {
  if (!text.empty()) os << "# manifest: " << text << '\n';
}

void write_trace_csv(std::ostream &os, const std::vector<TraceRow> &rows, const std::string &manifest) {
  write_manifest_line(os, manifest);
  os << "nu_Hz,re_detS,im_detS,abs_detS\n";
  for (const auto &r : rows)
    os << format_number(r.nu) << ',' << format_number(r.det_S.real()) << ',' << format_number(r.det_S.imag())
       << ',' << format_number(r.abs_det_S) << '\n';
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_field(std::string_view field, int line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    throw ParseError(line, "not a number: '" + std::string(field) + "'");
  return x;
}

} // namespace

std::vector<TraceRow> read_trace_csv(std::istream &is) {
  std::vector<TraceRow> rows;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line.rfind("nu_Hz,", 0) != 0) throw ParseError(lineno, "expected header starting with nu_Hz");
      header = true;
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != 4)
      throw ParseError(lineno, "expected 4 fields, found " + std::to_string(fields.size()));
    TraceRow r;
    r.nu = parse_field(fields[0], lineno);
    r.det_S = {parse_field(fields[1], lineno), parse_field(fields[2], lineno)};
    r.abs_det_S = parse_field(fields[3], lineno);
    if (!(r.nu > 0.0)) throw ParseError(lineno, "frequency must be positive");
    if (!(r.abs_det_S >= 0.0)) throw ParseError(lineno, "abs_detS must be nonnegative");
    rows.push_back(r);
  }
  if (!header) throw ParseError(lineno, "missing header");
  return rows;
}

std::vector<TraceRow> load_trace_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_trace_csv(in);
}

void write_trajectory_csv(std::ostream &os, const Trajectory &trajectory, const std::string &manifest) {
  write_manifest_line(os, manifest);
  os << "t,re_k_per_m,im_k_per_m,nu_Hz,g_Hz,residual\n";
  for (const auto &p : trajectory.points)
    os << format_number(p.t) << ',' << format_number(p.k.real()) << ',' << format_number(p.k.imag()) << ','
       << format_number(p.frequency()) << ',' << format_number(p.width()) << ',' << format_number(p.residual)
       << '\n';
}

void write_quadratic_report(std::ostream &os, const QuadraticFit &fit, int window, const double *predicted_a) {
  os << "window " << window << '\n';
  os << "a " << format_number(fit.a) << " +- " << format_number(fit.stderr_a()) << " m^-1\n";
  os << "b " << format_number(fit.b) << " +- " << format_number(fit.stderr_b()) << " m^-1\n";
  if (predicted_a) os << "a_th " << format_number(*predicted_a) << " m^-1\n";
}

void write_fit_report(std::ostream &os, const FitOutcome &outcome, const std::string &manifest) {
  write_manifest_line(os, manifest);
  const auto &m = outcome.model;
  os << "order,m,nu_Hz,g_Hz,abs_A,stderr_nu,stderr_g,rss,converged\n";
  for (int i = 0; i < m.order; ++i)
    os << m.order << ',' << i + 1 << ',' << format_number(m.nu[i]) << ',' << format_number(m.g[i]) << ','
       << format_number(std::abs(m.amplitude[i])) << ',' << format_number(outcome.stderr_nu[i]) << ','
       << format_number(outcome.stderr_g[i]) << ',' << format_number(outcome.rss) << ','
       << (outcome.converged ? 1 : 0) << '\n';
  const Complex s = m.effective_slope(), c = m.effective_intercept();
  os << "# baseline: slope=" << format_number(s.real()) << (s.imag() < 0 ? "" : "+") << format_number(s.imag())
     << "i intercept=" << format_number(c.real()) << (c.imag() < 0 ? "" : "+") << format_number(c.imag())
     << "i narrowest=" << m.narrowest() + 1 << '\n';
}

void write_fermi_report(std::ostream &os, const MetricGraph &graph, const FermiResult &result) {
  os << "k " << format_number(result.k) << " m^-1\n";
  for (std::size_t s = 0; s < result.F.size(); ++s)
    os << "lead " << graph.leads()[s].id << " abs_F " << format_number(std::abs(result.F[s])) << " volume "
       << format_number(result.volume[s].real()) << ',' << format_number(result.volume[s].imag()) << " vertex "
       << format_number(result.vertex[s].real()) << ',' << format_number(result.vertex[s].imag()) << '\n';
  os << "im_k_ddot " << format_number(result.im_k_ddot) << " m^-1\n";
  os << "a_th " << format_number(result.predicted_a()) << " m^-1\n";
}

} // namespace resonet
