#include "resonet/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "resonet/errors.hpp"
#include "resonet/fermi.hpp"
#include "resonet/graph.hpp"
#include "resonet/lineshape.hpp"
#include "resonet/resonance.hpp"
#include "resonet/trace_io.hpp"
#include "resonet/wave_solver.hpp"

namespace resonet {

std::string RunManifest::header_line() const {
  std::string line = "resonet " + version + " " + command;
  for (const auto &a : argv) line += " " + a;
  return line;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["input"] = input;
  j["parameters"] = parameters;
  j["output_dir"] = output_dir;
  j["argv"] = argv;
  j["version"] = version;
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> split_colon(const std::string &s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

double to_double(const std::string &s, const std::string &what) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(s, &pos);
    if (pos == s.size()) return x;
  } catch (const std::exception &) {
  }
  throw InputError("bad number for " + what + ": '" + s + "'");
}

FrequencyGrid parse_nu_range(const std::string &s) {
  const auto p = split_colon(s);
  if (p.size() != 3) throw InputError("--nu expects min:max:steps");
  const double steps = to_double(p[2], "--nu steps");
  if (steps < 1 || steps != static_cast<int>(steps)) throw InputError("--nu steps must be a positive integer");
  return {to_double(p[0], "--nu min"), to_double(p[1], "--nu max"), static_cast<int>(steps)};
}

SweepRange parse_t_range(const std::string &s) {
  const auto p = split_colon(s);
  if (p.size() != 3) throw InputError("--t expects min:max:steps");
  const double steps = to_double(p[2], "--t steps");
  if (steps < 1 || steps != static_cast<int>(steps)) throw InputError("--t steps must be a positive integer");
  SweepRange r{to_double(p[0], "--t min"), to_double(p[1], "--t max"), static_cast<int>(steps)};
  if (r.t_max < r.t_min) throw InputError("--t needs min <= max");
  return r;
}

FrequencyWindow parse_window(const std::string &s) {
  const auto p = split_colon(s);
  if (p.size() != 2) throw InputError("--window expects min:max");
  FrequencyWindow w{to_double(p[0], "--window min"), to_double(p[1], "--window max")};
  if (!(w.min > 0.0) || !(w.max > w.min)) throw InputError("--window needs 0 < min < max");
  return w;
}

std::string one_line(std::string s) {
  for (auto &c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// Destination for one command's outputs: stdout, or files in a directory
// next to manifest.json.
class Sink {
public:
  Sink(std::ostream &out, RunManifest manifest) : out_(out), manifest_(std::move(manifest)) {}

  std::ostream &open(const std::string &name) {
    if (manifest_.output_dir.empty()) return out_;
    std::filesystem::create_directories(manifest_.output_dir);
    files_.emplace_back((std::filesystem::path(manifest_.output_dir) / name).string());
    if (!files_.back()) throw InputError("cannot write " + name + " in " + manifest_.output_dir);
    return files_.back();
  }

  void finish() {
    if (manifest_.output_dir.empty()) return;
    manifest_.timestamp = utc_now();
    std::ofstream(std::filesystem::path(manifest_.output_dir) / "manifest.json") << manifest_.to_json();
  }

  const RunManifest &manifest() const { return manifest_; }

private:
  std::ostream &out_;
  RunManifest manifest_;
  std::vector<std::ofstream> files_;
};

double resolve_hint(const GraphSpec &spec, const std::optional<double> &k) {
  if (k) return *k;
  if (spec.eigen_hint) return *spec.eigen_hint;
  throw InputError("no embedded eigenvalue hint: pass --k or add an 'eigen k' line to the graph spec");
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Resonances of open metric graphs: sweeps, trajectories, Fermi rates, line-shape fits", "resonet"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string input, out_dir;
  std::string nu_arg, t_arg, window_arg;
  double t = 0.0;
  std::optional<double> beta, k_hint;
  int window_points = 9, order = 2;

  auto *sweep = app.add_subcommand("sweep", "|det S| trace over a frequency grid");
  sweep->add_option("graph", input, "graph spec")->required();
  sweep->add_option("--t", t, "perturbation parameter");
  sweep->add_option("--nu", nu_arg, "frequency grid min:max:steps in Hz")->required();
  sweep->add_option("--beta", beta, "absorption coefficient, m^-1/2");
  sweep->add_option("--out", out_dir, "output directory");

  auto *traj = app.add_subcommand("trajectory", "track the topological resonance in t and fit Im k = a t^2 + b");
  traj->add_option("graph", input, "graph spec")->required();
  traj->add_option("--t", t_arg, "t grid min:max:steps (default: spec sweep)");
  traj->add_option("--beta", beta, "absorption coefficient, m^-1/2");
  traj->add_option("--window", window_points, "central points used by the quadratic fit");
  traj->add_option("--k", k_hint, "embedded eigenvalue guess, m^-1");
  traj->add_option("--out", out_dir, "output directory");

  auto *fermi = app.add_subcommand("fermi", "Fermi-rule decay rate of the embedded eigenvalue");
  fermi->add_option("graph", input, "graph spec")->required();
  fermi->add_option("--k", k_hint, "embedded eigenvalue guess, m^-1");
  fermi->add_option("--out", out_dir, "output directory");

  auto *fit = app.add_subcommand("fit", "multi-Lorentzian fit of a |det S| trace");
  fit->add_option("trace", input, "trace CSV")->required();
  fit->add_option("--order", order, "number of resonances (2 or 3)");
  fit->add_option("--window", window_arg, "frequency window min:max in Hz")->required();
  fit->add_option("--out", out_dir, "output directory");

  auto *validate = app.add_subcommand("validate", "lint a graph spec and check its embedded eigenvalue");
  validate->add_option("graph", input, "graph spec")->required();
  validate->add_option("--k", k_hint, "embedded eigenvalue guess, m^-1");

  auto fail = [&](int code, const std::string &kind, const std::string &detail) {
    err << "resonet: error=" << kind << " exit=" << code << " detail=" << one_line(detail) << '\n';
    return code;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion &) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    return fail(kExitInput, "usage", e.what());
  }

  RunManifest manifest;
  manifest.command = app.get_subcommands().front()->get_name();
  manifest.input = input;
  manifest.output_dir = out_dir;
  manifest.argv.assign(args.begin() + 1, args.end());
  for (const CLI::Option *opt : app.get_subcommands().front()->get_options()) {
    if (opt->count() == 0 || opt->get_positional() || opt->get_single_name() == "out") continue;
    manifest.parameters[opt->get_single_name()] = opt->as<std::string>();
  }
  Sink sink(out, manifest);
  const std::string header = manifest.header_line();

  try {
    if (sweep->parsed()) {
      const GraphSpec spec = load_graph_spec(input);
      const FrequencyGrid grid = parse_nu_range(nu_arg);
      const double b = beta.value_or(spec.beta);
      const auto rows = trace_detS(spec.graph, t, grid, b);
      write_trace_csv(sink.open("trace.csv"), rows, header);
    } else if (traj->parsed()) {
      const GraphSpec spec = load_graph_spec(input);
      const SweepRange range = t_arg.empty() ? spec.sweep : parse_t_range(t_arg);
      const double b = beta.value_or(spec.beta);
      const double hint = resolve_hint(spec, k_hint);
      const Resonance seed = refine_zero(spec.graph, 0.0, hint, b);
      if (!seed.converged) throw NumericalError("no resonance converged near k = " + format_number(hint));
      const Trajectory tr = trace_trajectory(spec.graph, range.grid(), seed, b);
      std::ostream &csv = sink.open("trajectory.csv");
      write_trajectory_csv(csv, tr, header);
      if (!tr.complete) {
        sink.finish();
        throw NumericalError("trajectory incomplete: " + tr.failure);
      }
      const QuadraticFit q = fit_quadratic(tr, window_points);
      std::optional<double> a_th;
      try {
        a_th = fermi_rate(spec.graph, hint, perturbation_vector(spec.graph)).predicted_a();
      } catch (const NumericalError &) {
      }
      if (out_dir.empty()) {
        std::ostringstream report;
        write_quadratic_report(report, q, window_points, a_th ? &*a_th : nullptr);
        std::istringstream lines(report.str());
        for (std::string line; std::getline(lines, line);) out << "# " << line << '\n';
      } else {
        write_quadratic_report(sink.open("quadratic_fit.txt"), q, window_points, a_th ? &*a_th : nullptr);
      }
    } else if (fermi->parsed()) {
      const GraphSpec spec = load_graph_spec(input);
      const double hint = resolve_hint(spec, k_hint);
      const FermiResult r = fermi_rate(spec.graph, hint, perturbation_vector(spec.graph));
      write_fermi_report(sink.open("fermi.txt"), spec.graph, r);
    } else if (fit->parsed()) {
      const auto rows = load_trace_csv(input);
      const FrequencyWindow window = parse_window(window_arg);
      const auto points = to_points(rows);
      const LineshapeModel init = seed_initial_guess(points, order, window);
      const FitOutcome r = fit_lineshape(points, order, window, init);
      write_fit_report(sink.open("fit.csv"), r, header);
      if (!r.converged || r.escaped) {
        sink.finish();
        throw NumericalError("fit flagged: " + r.message);
      }
    } else if (validate->parsed()) {
      const GraphSpec spec = load_graph_spec(input);
      out << "ok vertices " << spec.graph.vertex_count() << " edges " << spec.graph.edge_count() << " leads "
          << spec.graph.lead_count() << '\n';
      if (k_hint || spec.eigen_hint) {
        const EmbeddedEigenpair p = embedded_eigenpair(spec.graph, resolve_hint(spec, k_hint));
        out << "embedded k " << format_number(p.k) << " null_sigma " << format_number(p.null_sigma)
            << " second_sigma " << format_number(p.second_sigma) << '\n';
      }
    }
    sink.finish();
  } catch (const ParseError &e) {
    return fail(kExitInput, "parse line=" + std::to_string(e.line()), e.what());
  } catch (const InputError &e) {
    return fail(kExitInput, "input", e.what());
  } catch (const NumericalError &e) {
    return fail(kExitNumerical, "numerical", e.what());
  } catch (const std::exception &e) {
    return fail(kExitNumerical, "internal", e.what());
  }
  return kExitOk;
}

} // namespace resonet
