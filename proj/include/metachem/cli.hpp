#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

// Command-line front end. Each command is a plain function returning the
// process exit code (0 success, 1 validation or domain failure, 2 usage or
// parse failure) so tests can drive them without spawning processes.

namespace metachem::cli {

struct RunOptions {
  std::string chemistry;          // stringcat | ja | swarm | nested
  std::string config_path;
  std::string recipe_path;        // swarm and nested I..IV
  std::string variant = "I";      // nested only
  std::uint64_t seed = 1;
  std::uint64_t max_transitions = 1000000;  // 0 = unlimited
  std::int64_t steps = -1;        // when >= 0 overrides the run's time bound
  std::int64_t frames_every = 10;
  std::string log_out;            // defaults derive from the chemistry name
  std::string snapshot_out;
  std::string frames_out;
  bool open_ended = false;        // stringcat: run the non-halting loop
};

int cmd_validate(const std::string& graph_file, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err);
int cmd_enumerate_atoms(const std::string& csv_out, std::ostream& out, std::ostream& err);
int cmd_export_dot(const std::string& graph_file, const std::string& out_path,
                   std::ostream& out, std::ostream& err);
// Serializes a built-in graph (the shipped asset files are generated with
// this). An empty or unknown name lists what is available.
int cmd_emit_graph(const std::string& name, const std::string& out_path,
                   std::ostream& out, std::ostream& err);

// argv dispatcher used by the binary.
int main_entry(int argc, const char* const* argv);

}  // namespace metachem::cli
