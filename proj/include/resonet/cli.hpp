#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace resonet {

inline constexpr const char *kVersion = "0.1.0";

/// Everything needed to rerun a command. The CSV header line leaves out the
/// timestamp so reruns are byte-identical.
struct RunManifest {
  std::string command;
  std::string input; // graph spec or trace CSV
  std::map<std::string, std::string> parameters;
  std::string output_dir;
  std::vector<std::string> argv;
  std::string version = kVersion;
  std::string timestamp;

  std::string header_line() const;
  std::string to_json() const;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// Runs `resonet` with args (program name excluded). Results go to `out`
/// unless --out names a directory; diagnostics go to `err` as one line.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace resonet
