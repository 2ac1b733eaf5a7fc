#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "resonet/fermi.hpp"
#include "resonet/lineshape.hpp"
#include "resonet/resonance.hpp"
#include "resonet/wave_solver.hpp"

namespace resonet {

/// 17 significant digits.
std::string format_number(double x);

/// Comment line `# manifest: <text>`; omitted when text is empty.
void write_manifest_line(std::ostream &os, const std::string &text);

/// nu_Hz,re_detS,im_detS,abs_detS
void write_trace_csv(std::ostream &os, const std::vector<TraceRow> &rows, const std::string &manifest = {});

/// Reads a trace CSV. Comment lines start with '#'; the header row is
/// required. Throws ParseError carrying the 1-based line number.
std::vector<TraceRow> read_trace_csv(std::istream &is);
std::vector<TraceRow> load_trace_csv(const std::string &path);

/// t,re_k_per_m,im_k_per_m,nu_Hz,g_Hz,residual
void write_trajectory_csv(std::ostream &os, const Trajectory &trajectory, const std::string &manifest = {});

/// Plain-text block: a, b, their standard errors, the window, and the
/// predicted curvature when available.
void write_quadratic_report(std::ostream &os, const QuadraticFit &fit, int window, const double *predicted_a = nullptr);

/// order,m,nu_Hz,g_Hz,abs_A,stderr_nu,stderr_g,rss,converged, then the
/// effective baseline as a comment line.
void write_fit_report(std::ostream &os, const FitOutcome &outcome, const std::string &manifest = {});

void write_fermi_report(std::ostream &os, const MetricGraph &graph, const FermiResult &result);

} // namespace resonet
