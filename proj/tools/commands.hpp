#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sp/crossval.hpp"
#include "sp/fusion.hpp"
#include "sp/optimizer.hpp"
#include "sp/random.hpp"
#include "sp/synth.hpp"

namespace sp::cli {

struct RunConfig {
  std::filesystem::path data;
  std::vector<std::string> sources;  // empty: every source in the dataset
  std::optional<std::filesystem::path> params_file;
  Hyperparams params;                // used when params_file is unset
  int iterations = 10;
  SolverSettings solver;
  std::filesystem::path out = "sp_out";
  std::uint64_t seed = kDefaultSeed;
  bool trace = false;
  std::optional<std::filesystem::path> dump_graphs;
  bool no_image_structure = false;
  Hinge hinge = Hinge::squared;
  bool warm_start = true;
  bool early_exit = true;
  bool prefer_binary = false;
};

struct TuneConfig {
  std::filesystem::path data;
  std::vector<std::string> sources;
  GridSpec grid = GridSpec::defaults();
  int iterations = 10;
  SolverSettings solver;
  std::filesystem::path out = "sp_tune";
  bool no_image_structure = false;
  Hinge hinge = Hinge::squared;
  bool prefer_binary = false;
};

struct SynthConfig {
  SynthParams params;
  std::filesystem::path out;
};

// Each command returns the process exit code and reports diagnostics on `err`.
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_tune(const TuneConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthConfig& config, std::ostream& out, std::ostream& err);

// Full argv entry point (subcommands run, tune, synth).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sp::cli
