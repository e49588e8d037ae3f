#include "commands.hpp"

#include <algorithm>
#include <exception>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sp/csv.hpp"
#include "sp/data.hpp"
#include "sp/kernels.hpp"
#include "sp/propagation.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace sp::cli {

namespace {

// Files created by a command; removed again if the command fails.
class OutputGuard {
public:
  fs::path track(fs::path p) {
    files_.push_back(p);
    return p;
  }
  void commit() { files_.clear(); }
  ~OutputGuard() {
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
  }

private:
  std::vector<fs::path> files_;
};

const char* hinge_name(Hinge h) { return h == Hinge::squared ? "squared" : "plain"; }

std::vector<std::string> resolve_sources(const Dataset& ds, const std::vector<std::string>& requested) {
  if (!requested.empty()) return requested;
  std::vector<std::string> all;
  for (const auto& [name, table] : ds.semantic) all.push_back(name);
  if (all.empty()) fail("dataset has no semantic sources");
  return all;
}

ordered_json solver_json(const SolverSettings& s) {
  return {{"max_outer_iters", s.max_outer_iters}, {"outer_tolerance", s.outer_tolerance},
          {"v_tolerance", s.v_tolerance},         {"v_max_steps", s.v_max_steps},
          {"beta_tolerance", s.beta_tolerance},   {"beta_max_steps", s.beta_max_steps}};
}

ordered_json params_json(const Hyperparams& p) {
  ordered_json j{{"lambda", p.lambda}, {"gamma", p.gamma}, {"sigma_image", p.sigma_image}};
  j["sigma_sources"] = ordered_json::object();
  for (const auto& [name, sigma] : p.sigma_sources) j["sigma_sources"][name] = sigma;
  return j;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    OutputGuard guard;
    IngestConfig ingest;
    ingest.sources = config.sources;
    ingest.prefer_binary = config.prefer_binary;
    const Dataset dataset = load_dataset(config.data, ingest);
    const auto sources = resolve_sources(dataset, config.sources);

    Hyperparams params = config.params_file ? read_params(*config.params_file) : config.params;
    params.validate();

    PropagationOptions options;
    options.iterations = config.iterations;
    options.early_exit = config.early_exit;
    options.warm_start = config.warm_start;
    options.fusion.sources = sources;
    options.fusion.include_image = !config.no_image_structure;
    options.hinge = config.hinge;
    options.solver = config.solver;

    const Task task = make_task(dataset);
    std::vector<ClassId> truth;
    if (dataset.has_truth())
      for (auto n : task.test_rows) truth.push_back(dataset.true_labels[n]);

    ordered_json accuracy_trace = ordered_json::array();
    const auto observer = [&](const IterationRecord& rec) {
      if (config.trace) {
        for (std::size_t i = 0; i < rec.objective_trace.size(); ++i)
          err << i << "," << csv::format(rec.objective_trace[i]) << "\n";
      }
      if (!truth.empty()) {
        const double acc = evaluate(rec.predictions, truth, dataset.unseen).mean_accuracy;
        out << rec.t << "," << csv::format(acc) << "\n";
        accuracy_trace.push_back({{"t", rec.t}, {"accuracy", acc}});
      }
    };
    const auto state = propagate(task, params, options, observer);

    fs::create_directories(config.out);
    std::string predictions = "sample_index";
    for (const auto& rec : state.history) predictions += ",t" + std::to_string(rec.t);
    predictions += "\n";
    for (std::size_t i = 0; i < task.test_rows.size(); ++i) {
      predictions += std::to_string(task.test_rows[i]);
      for (const auto& rec : state.history) predictions += "," + std::to_string(rec.predictions[i]);
      predictions += "\n";
    }
    csv::write_text(guard.track(config.out / "predictions.csv"), predictions);

    ordered_json report;
    report["config"] = {{"data", config.data.string()},
                        {"sources", sources},
                        {"iterations", config.iterations},
                        {"no_image_structure", config.no_image_structure},
                        {"hinge", hinge_name(config.hinge)},
                        {"warm_start", config.warm_start},
                        {"early_exit", config.early_exit},
                        {"solver", solver_json(config.solver)}};
    report["seed"] = config.seed;
    report["hyperparams"] = params_json(params);
    report["iterations_run"] = state.iteration;
    report["fixed_point"] = state.fixed_point;
    ordered_json beta_labels = ordered_json::array();
    if (options.fusion.include_image) beta_labels.push_back("image");
    for (const auto& s : sources) beta_labels.push_back(s);
    report["beta_labels"] = beta_labels;
    report["beta"] = std::vector<double>(state.model.beta.data(), state.model.beta.data() + state.model.beta.size());
    ordered_json objective = ordered_json::array();
    for (const auto& rec : state.history) objective.push_back(rec.objective_trace);
    report["objective_trace"] = objective;
    if (!truth.empty()) {
      const auto final_report = evaluate(state.predicted, truth, dataset.unseen);
      report["accuracy"] = final_report.mean_accuracy;
      ordered_json per_class = ordered_json::array();
      for (const auto& c : final_report.per_class)
        per_class.push_back({{"class", c.id}, {"count", c.count}, {"correct", c.correct}, {"accuracy", c.accuracy}});
      report["per_class"] = per_class;
      report["accuracy_trace"] = accuracy_trace;
    } else {
      report["accuracy"] = nullptr;
    }
    csv::write_text(guard.track(config.out / "report.json"), report.dump(2) + "\n");

    if (config.dump_graphs) {
      fs::create_directories(*config.dump_graphs);
      for (std::size_t g = 0; g < state.graphs.size(); ++g) {
        const auto& graph = state.graphs[g];
        const std::string name = graph.space == SpaceKind::image ? "image" : graph.source;
        write_graph_csv(guard.track(*config.dump_graphs / ("graph_" + name + ".csv")), graph, dataset.unseen);
      }
    }
    guard.commit();
    return 0;
  });
}

int cmd_tune(const TuneConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    OutputGuard guard;
    IngestConfig ingest;
    ingest.sources = config.sources;
    ingest.prefer_binary = config.prefer_binary;
    const Dataset dataset = load_dataset(config.data, ingest);
    const auto sources = resolve_sources(dataset, config.sources);

    PropagationOptions options;
    options.iterations = config.iterations;
    options.fusion.sources = sources;
    options.fusion.include_image = !config.no_image_structure;
    options.hinge = config.hinge;
    options.solver = config.solver;

    fs::create_directories(config.out);
    const auto table_path = config.out / "tune_table.csv";
    CVCache cache;
    if (fs::exists(table_path)) {
      const auto previous = read_cv_table(table_path, sources);
      cache = make_cache(previous);
      out << "resuming from " << previous.size() << " cached rows\n";
    }
    const auto result = tune(dataset, config.grid, options, cache);

    // Deduplicate by (setting, fold), keeping the first occurrence.
    std::vector<CVRow> rows;
    std::map<std::pair<std::vector<double>, int>, bool> seen_rows;
    for (const auto& row : result.table)
      if (seen_rows.emplace(std::make_pair(row.setting(), row.fold), true).second) rows.push_back(row);
    write_cv_table(guard.track(table_path), rows, sources);

    Hyperparams chosen = result.chosen;
    write_params(guard.track(config.out / "params.json"), chosen, result.chosen_accuracy);
    out << "chosen lambda=" << csv::format(chosen.lambda) << " gamma=" << csv::format(chosen.gamma)
        << " sigma_image=" << csv::format(chosen.sigma_image);
    for (const auto& [name, sigma] : chosen.sigma_sources) out << " sigma_" << name << "=" << csv::format(sigma);
    out << " accuracy=" << csv::format(result.chosen_accuracy) << "\n";
    guard.commit();
    return 0;
  });
}

int cmd_synth(const SynthConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(!config.out.empty(), "synth: output directory is required");
    write_synthetic(config.out, config.params);
    out << "wrote synthetic dataset to " << config.out.string() << "\n";
    return 0;
  });
}

namespace {

std::vector<double> parse_exponent_range(const std::string& spec, int stride) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    const int e = std::stoi(spec);
    return GridSpec::powers_of_two(e, e);
  }
  return GridSpec::powers_of_two(std::stoi(spec.substr(0, colon)), std::stoi(spec.substr(colon + 1)), stride);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto field : csv::split_fields(s))
    if (!field.empty()) out.emplace_back(field);
  return out;
}

void add_solver_options(CLI::App& app, SolverSettings& s) {
  app.add_option("--max-outer", s.max_outer_iters, "Outer alternating iterations per round");
  app.add_option("--outer-tol", s.outer_tolerance, "Relative objective decrease that ends alternation");
  app.add_option("--v-tol", s.v_tolerance, "Relative decrease that ends the V solver");
  app.add_option("--v-max-steps", s.v_max_steps, "Newton steps per V solve");
  app.add_option("--beta-tol", s.beta_tolerance, "Relative decrease that ends the beta solver");
}

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  kernels::configure_threads_from_env();
  CLI::App app{"Structure propagation for zero-shot classification"};
  app.require_subcommand(1);

  RunConfig run;
  std::string run_sources, run_hinge = "squared", params_file, dump_graphs;
  std::vector<std::string> sigma_pairs;
  auto* run_cmd = app.add_subcommand("run", "Propagate structure and label the test samples");
  run_cmd->add_option("--data", run.data, "Dataset directory")->required();
  run_cmd->add_option("--sources", run_sources, "Comma-separated semantic sources (default: all)");
  run_cmd->add_option("--params", params_file, "Chosen-params JSON written by tune");
  run_cmd->add_option("--lambda", run.params.lambda, "Ridge coefficient");
  run_cmd->add_option("--gamma", run.params.gamma, "Structure-alignment coefficient");
  run_cmd->add_option("--sigma-image", run.params.sigma_image, "Image-space bandwidth");
  run_cmd->add_option("--sigma", sigma_pairs, "Per-source bandwidth as name=value (repeatable)");
  run_cmd->add_option("--iters", run.iterations, "Maximum propagation rounds");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Seed recorded with the outputs");
  run_cmd->add_flag("--trace", run.trace, "Log iter,objective lines");
  run_cmd->add_option("--dump-graphs", dump_graphs, "Write the final similarity graphs here");
  run_cmd->add_flag("--no-image-structure", run.no_image_structure, "Drop the image graph slot");
  run_cmd->add_option("--hinge", run_hinge, "squared or plain")->check(CLI::IsMember({"squared", "plain"}));
  run_cmd->add_flag("!--no-warm-start", run.warm_start, "Solve each round from scratch");
  run_cmd->add_flag("!--no-early-exit", run.early_exit, "Run every round even after predictions repeat");
  run_cmd->add_flag("--binary", run.prefer_binary, "Prefer features.bin over features.csv");
  add_solver_options(*run_cmd, run.solver);

  TuneConfig tune_cfg;
  std::string tune_sources, tune_hinge = "squared", lambda_exp = "-24:-9", gamma_exp = "-24:-9", sigma_exp = "-5:5";
  int stride = 1;
  auto* tune_cmd = app.add_subcommand("tune", "Cross-validate hyperparameters on the seen classes");
  tune_cmd->add_option("--data", tune_cfg.data, "Dataset directory")->required();
  tune_cmd->add_option("--sources", tune_sources, "Comma-separated semantic sources (default: all)");
  tune_cmd->add_option("--out", tune_cfg.out, "Output directory (tune_table.csv, params.json)");
  tune_cmd->add_option("--lambda-exp", lambda_exp, "Exponent range lo:hi for lambda = 2^e");
  tune_cmd->add_option("--gamma-exp", gamma_exp, "Exponent range lo:hi for gamma = 2^e");
  tune_cmd->add_option("--sigma-exp", sigma_exp, "Exponent range lo:hi for sigma = 2^e");
  tune_cmd->add_option("--stride", stride, "Exponent step");
  tune_cmd->add_option("--folds", tune_cfg.grid.fold_count, "Number of alternating folds");
  tune_cmd->add_option("--ratio", tune_cfg.grid.ratio, "Validation share of seen classes (default U/(S+U))");
  tune_cmd->add_option("--seed", tune_cfg.grid.seed, "Seed for the class splits");
  tune_cmd->add_option("--iters", tune_cfg.iterations, "Propagation rounds per validation run");
  tune_cmd->add_flag("--full-sigma-product", tune_cfg.grid.full_sigma_product, "Search all bandwidth combinations");
  tune_cmd->add_flag("--no-image-structure", tune_cfg.no_image_structure, "Drop the image graph slot");
  tune_cmd->add_option("--hinge", tune_hinge, "squared or plain")->check(CLI::IsMember({"squared", "plain"}));
  tune_cmd->add_flag("--binary", tune_cfg.prefer_binary, "Prefer features.bin over features.csv");
  add_solver_options(*tune_cmd, tune_cfg.solver);

  SynthConfig synth;
  std::vector<std::string> source_specs;
  std::string manifest;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--manifest", manifest, "Regenerate from a manifest.json");
  synth_cmd->add_option("--seen", synth.params.seen, "Seen class count");
  synth_cmd->add_option("--unseen", synth.params.unseen, "Unseen class count");
  synth_cmd->add_option("--dim", synth.params.dim, "Image feature dimension");
  synth_cmd->add_option("--train-per-class", synth.params.train_per_class, "Training samples per seen class");
  synth_cmd->add_option("--test-per-class", synth.params.test_per_class, "Test samples per unseen class");
  synth_cmd->add_option("--centroid-scale", synth.params.centroid_scale, "Std-dev of class centroids");
  synth_cmd->add_option("--image-noise", synth.params.image_noise, "Std-dev of sample noise");
  synth_cmd->add_flag("!--independent-seen", synth.params.seen_between_unseen,
                      "Draw seen centroids independently instead of between unseen pairs");
  synth_cmd->add_option("--seen-offset", synth.params.seen_offset, "Std-dev of the seen-centroid offset");
  synth_cmd->add_option("--source", source_specs, "Semantic source name:dim:noise (repeatable)");
  synth_cmd->add_option("--seed", synth.params.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  return guarded(err, [&] {
    if (*run_cmd) {
      run.sources = split_list(run_sources);
      run.hinge = run_hinge == "plain" ? Hinge::plain : Hinge::squared;
      if (!params_file.empty()) run.params_file = params_file;
      if (!dump_graphs.empty()) run.dump_graphs = dump_graphs;
      for (const auto& pair : sigma_pairs) {
        const auto eq = pair.find('=');
        require(eq != std::string::npos, "--sigma expects name=value");
        run.params.sigma_sources[pair.substr(0, eq)] = std::stod(pair.substr(eq + 1));
      }
      return cmd_run(run, out, err);
    }
    if (*tune_cmd) {
      tune_cfg.sources = split_list(tune_sources);
      tune_cfg.hinge = tune_hinge == "plain" ? Hinge::plain : Hinge::squared;
      tune_cfg.grid.lambdas = parse_exponent_range(lambda_exp, stride);
      tune_cfg.grid.gammas = parse_exponent_range(gamma_exp, stride);
      tune_cfg.grid.sigmas = parse_exponent_range(sigma_exp, stride);
      return cmd_tune(tune_cfg, out, err);
    }
    if (!manifest.empty()) {
      synth.params = synth_params_from_json(nlohmann::json::parse(csv::read_text(manifest)));
    } else if (!source_specs.empty()) {
      synth.params.sources.clear();
      for (const auto& spec : source_specs) {
        std::vector<std::string> pieces;
        std::stringstream ss(spec);
        std::string piece;
        while (std::getline(ss, piece, ':')) pieces.push_back(piece);
        require(pieces.size() == 3, "--source expects name:dim:noise");
        synth.params.sources.push_back({pieces[0], std::stoi(pieces[1]), std::stod(pieces[2])});
      }
    }
    return cmd_synth(synth, out, err);
  });
}

}  // namespace sp::cli
