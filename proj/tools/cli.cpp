#include "cli.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include <ppcr/error.hpp>
#include <ppcr/io.hpp>
#include <ppcr/metrics.hpp>
#include <ppcr/synthetic.hpp>

namespace ppcr::cli {

namespace {

/// Raw criterion/model flags; turned into a RegistrationConfig after parsing.
struct AlgorithmFlags {
  std::size_t k = 10;
  std::optional<double> max_dist;
  std::string weight_model = "t";
  double nu = WeightModel::kDefaultNu;
  std::string criterion = "cost-drop";
  std::optional<double> threshold;
  std::optional<int> consecutive;
  int fixed_iterations = 100;
  int cap = 100;
  LmConfig lm;
};

void add_algorithm_flags(CLI::App& app, AlgorithmFlags& flags) {
  app.add_option("--k", flags.k, "Maximum number of neighbors per source point")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--max-dist", flags.max_dist, "Maximum neighbor distance in meters (default: 10x target resolution)")->check(CLI::PositiveNumber);
  app.add_option("--weight-model", flags.weight_model, "Association weights")->check(CLI::IsMember({"t", "gaussian"}))->capture_default_str();
  app.add_option("--nu", flags.nu, "Degrees of freedom of the t-distribution")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--criterion", flags.criterion, "Termination criterion")->check(CLI::IsMember({"cost-drop", "relative-mse", "fixed"}))->capture_default_str();
  app.add_option("--threshold", flags.threshold, "Relative threshold of cost-drop / relative-mse (default 0.01)")->check(CLI::Range(0.0, 1.0));
  app.add_option("--consecutive", flags.consecutive, "Consecutive iterations the condition must hold (default 10)")->check(CLI::PositiveNumber);
  app.add_option("--iterations", flags.fixed_iterations, "Iteration count of the fixed criterion")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--cap", flags.cap, "Hard cap on outer iterations")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lm-max-iterations", flags.lm.max_iterations, "Levenberg-Marquardt iterations per inner solve")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lm-lambda", flags.lm.initial_lambda, "Initial LM damping")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lm-step-tolerance", flags.lm.step_tolerance, "LM step-norm tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lm-function-tolerance", flags.lm.function_tolerance, "LM relative cost-change tolerance")->check(CLI::PositiveNumber)->capture_default_str();
}

RegistrationConfig to_config(const AlgorithmFlags& flags) {
  RegistrationConfig config;
  config.max_neighbors = flags.k;
  config.max_neighbor_distance = flags.max_dist;
  config.weight_model = flags.weight_model == "gaussian" ? WeightModel::gaussian() : WeightModel::t_distribution(flags.nu);
  if (flags.criterion == "fixed") {
    config.criterion = FixedIterations{flags.fixed_iterations};
  } else if (flags.criterion == "relative-mse") {
    RelativeMse c;
    c.ratio_threshold = flags.threshold.value_or(c.ratio_threshold);
    c.consecutive = flags.consecutive.value_or(c.consecutive);
    config.criterion = c;
  } else {
    CostDrop c;
    c.relative_threshold = flags.threshold.value_or(c.relative_threshold);
    c.consecutive = flags.consecutive.value_or(c.consecutive);
    config.criterion = c;
  }
  config.max_iterations = flags.cap;
  config.lm = flags.lm;
  config.validate();
  return config;
}

PointCloud load_cloud(const std::filesystem::path& path, const std::optional<std::string>& format) {
  if (!format) {
    return io::read_cloud(path);
  }
  return io::read_cloud(path, *format == "ply" ? io::CloudFormat::PlyAscii : io::CloudFormat::Xyz);
}

/// Maps registration outcome to an exit code.
int outcome_code(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Converged:
      return kOk;
    case TerminationReason::IterationCap:
      return kIterationCap;
    case TerminationReason::NoOverlap:
      return kNoOverlap;
  }
  return kInputError;
}

/// Runs `body`, translating library exceptions to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const EmptyCloudError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

struct Inputs {
  PointCloud source;
  PointCloud target;
  RigidTransform initial_guess;
  std::optional<RigidTransform> ground_truth;
};

Inputs load_inputs(const CliInvocation& inv) {
  Inputs inputs;
  inputs.source = load_cloud(inv.source, inv.format);
  inputs.target = load_cloud(inv.target, inv.format);
  if (inv.initial_guess) {
    inputs.initial_guess = io::read_transform(*inv.initial_guess);
  }
  if (inv.ground_truth) {
    inputs.ground_truth = io::read_transform(*inv.ground_truth);
  }
  return inputs;
}

/// Writes outputs; IoError here is an output failure, not an input one.
template <typename Body>
bool write_outputs(std::ostream& err, Body&& body) {
  try {
    body();
    return true;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return false;
  }
}

std::string csv_safe(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r') {
      c = ';';
    }
  }
  return text;
}

}  // namespace

int run_register(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Inputs inputs = load_inputs(inv);
    RegistrationConfig config = inv.config;
    config.record_mse_prev = config.record_mse_prev || inv.output_trace.has_value();
    RegistrationOptions options;
    options.ground_truth = inputs.ground_truth;

    const RegistrationResult result = register_clouds(inputs.source, inputs.target, inputs.initial_guess, config, options);

    const bool written = write_outputs(err, [&] {
      if (inv.output_transform) {
        io::write_transform(*inv.output_transform, result.transform);
      }
      if (inv.output_trace) {
        io::write_trace(*inv.output_trace, result.trace);
      }
    });

    out << "termination: " << to_string(result.reason) << '\n';
    out << "iterations: " << result.trace.size() << '\n';
    out << "final_cost: " << (result.trace.empty() ? std::string("") : io::format_number(result.trace.back().final_cost)) << '\n';
    out << "max_neighbor_distance: " << io::format_number(result.max_neighbor_distance) << '\n';
    if (!result.trace.empty() && result.trace.back().mse_ground_truth) {
      out << "mse_gt: " << io::format_number(*result.trace.back().mse_ground_truth) << '\n';
    }
    if (!written) {
      return static_cast<int>(kOutputError);
    }
    return outcome_code(result.reason);
  });
}

int run_compare_criteria(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  if (!inv.ground_truth) {
    err << "error: compare-criteria requires --ground-truth\n";
    return kUsage;
  }
  return guarded(err, [&] {
    const Inputs inputs = load_inputs(inv);
    RegistrationOptions options;
    options.ground_truth = inputs.ground_truth;

    RegistrationConfig fixed = inv.config;
    fixed.criterion = FixedIterations{fixed.max_iterations};
    RegistrationConfig cost_drop = inv.config;
    if (!std::holds_alternative<CostDrop>(cost_drop.criterion)) {
      cost_drop.criterion = CostDrop{};
    }

    std::ostringstream table;
    table << "criterion,mse_gt,iterations,termination\n";
    int code = kOk;
    for (const auto* config : {&fixed, &cost_drop}) {
      const RegistrationResult result = register_clouds(inputs.source, inputs.target, inputs.initial_guess, *config, options);
      const double mse = mse_to_ground_truth(inputs.source, result.transform, *inputs.ground_truth);
      table << criterion_name(config->criterion) << ',' << io::format_number(mse) << ',' << result.trace.size() << ',' << to_string(result.reason) << '\n';
      if (result.reason == TerminationReason::NoOverlap) {
        code = kNoOverlap;
      }
    }
    out << table.str();
    if (inv.output_table) {
      const bool written = write_outputs(err, [&] {
        std::ofstream file(*inv.output_table);
        if (!file || !(file << table.str())) {
          throw IoError("cannot write " + inv.output_table->string());
        }
      });
      if (!written) {
        return static_cast<int>(kOutputError);
      }
    }
    return code;
  });
}

int run_batch(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  std::vector<io::ManifestEntry> entries;
  const int manifest_code = guarded(err, [&] {
    entries = io::read_manifest(inv.manifest);
    return static_cast<int>(kOk);
  });
  if (manifest_code != kOk) {
    return manifest_code;
  }
  if (entries.empty()) {
    err << "error: manifest " << inv.manifest.string() << " lists no problems\n";
    return kInputError;
  }
  const std::filesystem::path dir = inv.output_dir.value_or(".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create " << dir.string() << ": " << ec.message() << '\n';
    return kOutputError;
  }

  struct Row {
    bool ok = false;
    double mse = 0.0;
    int iterations = 0;
    std::string termination;
    std::string message;
  };
  std::vector<Row> rows(entries.size());

  const auto solve_one = [&](std::size_t i) {
    const auto& entry = entries[i];
    Row& row = rows[i];
    try {
      CliInvocation single = inv;
      single.source = entry.source;
      single.target = entry.target;
      single.ground_truth = entry.ground_truth;
      const Inputs inputs = load_inputs(single);
      RegistrationConfig config = inv.config;
      config.record_mse_prev = true;
      RegistrationOptions options;
      options.ground_truth = inputs.ground_truth;
      const RegistrationResult result = register_clouds(inputs.source, inputs.target, inputs.initial_guess, config, options);
      row.termination = std::string(to_string(result.reason));
      row.iterations = static_cast<int>(result.trace.size());
      if (result.reason == TerminationReason::NoOverlap) {
        row.message = "no overlap between source and target";
        return;
      }
      row.mse = mse_to_ground_truth(inputs.source, result.transform, *inputs.ground_truth);
      const std::string stem = "problem_" + std::to_string(i);
      io::write_transform(dir / (stem + ".transform.txt"), result.transform);
      io::write_trace(dir / (stem + ".trace.csv"), result.trace);
      row.ok = true;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
  };

  const auto workers = static_cast<std::size_t>(std::max(1, inv.jobs));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, entries.size()); w++) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < entries.size(); i = next++) {
          solve_one(i);
        }
      });
    }
  }

  std::vector<double> values;
  std::vector<int> iterations;
  std::ostringstream results;
  results << "problem,line,source,target,status,mse_gt,iterations,termination,message\n";
  for (std::size_t i = 0; i < rows.size(); i++) {
    const Row& row = rows[i];
    results << i << ',' << entries[i].line << ',' << csv_safe(entries[i].source.string()) << ',' << csv_safe(entries[i].target.string()) << ','
            << (row.ok ? "ok" : "failed") << ',' << (row.ok ? io::format_number(row.mse) : "") << ',' << row.iterations << ',' << row.termination << ','
            << csv_safe(row.message) << '\n';
    if (row.ok) {
      values.push_back(row.mse);
      iterations.push_back(row.iterations);
    } else {
      err << "problem " << i << " (manifest line " << entries[i].line << ") failed: " << row.message << '\n';
    }
  }

  const bool written = write_outputs(err, [&] {
    std::ofstream file(dir / "results.csv");
    if (!file || !(file << results.str())) {
      throw IoError("cannot write " + (dir / "results.csv").string());
    }
    if (!values.empty()) {
      io::write_summary(dir / "summary.csv", aggregate(values, iterations));
    }
  });

  out << "problems: " << entries.size() << ", succeeded: " << values.size() << '\n';
  if (values.empty()) {
    return kAllFailed;
  }
  const EvaluationSummary summary = aggregate(values, iterations);
  out << io::kSummaryHeader << '\n'
      << summary.count << ',' << io::format_number(summary.median) << ',' << io::format_number(summary.q75) << ',' << io::format_number(summary.q95) << ','
      << io::format_number(summary.mean_iterations) << '\n';
  return written ? static_cast<int>(kOk) : static_cast<int>(kOutputError);
}

int run_synth(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const std::filesystem::path dir = inv.output_dir.value_or(".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create " << dir.string() << ": " << ec.message() << '\n';
    return kOutputError;
  }
  PointCloud source = inv.shape == "asymmetric" ? synthetic::asymmetric_shape(inv.count, inv.seed) : synthetic::random_cube(inv.count, inv.seed);
  std::mt19937_64 rng(inv.seed ^ 0x9e3779b97f4a7c15ull);
  const Eigen::Vector3d axis = synthetic::random_unit_vector(rng);
  const Eigen::Vector3d direction = synthetic::random_unit_vector(rng);
  const RigidTransform truth =
    compose(RigidTransform::from_translation(inv.translation * direction), RigidTransform::from_axis_angle(axis, inv.angle_deg * std::numbers::pi / 180.0));

  const auto format = inv.format.value_or("xyz") == "ply" ? io::CloudFormat::PlyAscii : io::CloudFormat::Xyz;
  const std::string ext = format == io::CloudFormat::PlyAscii ? ".ply" : ".xyz";
  const bool written = write_outputs(err, [&] {
    io::write_cloud(dir / ("source" + ext), source, format);
    io::write_cloud(dir / ("target" + ext), truth.apply(source), format);
    io::write_transform(dir / "truth.txt", truth);
  });
  if (!written) {
    return kOutputError;
  }
  out << "wrote " << (dir / ("source" + ext)).string() << ", " << (dir / ("target" + ext)).string() << ", " << (dir / "truth.txt").string() << '\n';
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probabilistic point cloud registration with automatic termination", "ppcr"};
  app.require_subcommand(1);

  CliInvocation inv;
  AlgorithmFlags flags;

  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--source", inv.source, "Source cloud (.ply or .xyz)")->required();
    sub->add_option("--target", inv.target, "Target cloud (.ply or .xyz)")->required();
    sub->add_option("--initial-guess", inv.initial_guess, "Initial source-to-target transform (4x4 text)");
    sub->add_option("--format", inv.format, "Force the cloud format instead of using file extensions")->check(CLI::IsMember({"ply", "xyz"}));
    add_algorithm_flags(*sub, flags);
  };

  auto* reg = app.add_subcommand("register", "Register one source cloud onto one target cloud");
  add_pair(reg);
  reg->add_option("--ground-truth", inv.ground_truth, "Ground-truth transform; fills the mse_gt trace column");
  reg->add_option("--output-transform", inv.output_transform, "Where to write the estimated transform");
  reg->add_option("--output-trace", inv.output_trace, "Where to write the per-iteration trace (CSV)");

  auto* cmp = app.add_subcommand("compare-criteria", "Run fixed-iteration and cost-drop termination on the same pair");
  add_pair(cmp);
  cmp->add_option("--ground-truth", inv.ground_truth, "Ground-truth transform")->required();
  cmp->add_option("--output", inv.output_table, "Also write the comparison table here");

  auto* batch = app.add_subcommand("batch", "Register every problem of a manifest and summarize the errors");
  batch->add_option("--manifest", inv.manifest, "Manifest: one 'source target ground_truth' triple per line")->required();
  batch->add_option("--output-dir", inv.output_dir, "Directory for per-problem outputs, results.csv and summary.csv");
  batch->add_option("--jobs", inv.jobs, "Problems solved in parallel")->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--initial-guess", inv.initial_guess, "Initial guess used for every problem");
  batch->add_option("--format", inv.format, "Force the cloud format")->check(CLI::IsMember({"ply", "xyz"}));
  add_algorithm_flags(*batch, flags);

  auto* synth = app.add_subcommand("synth", "Write a synthetic source/target pair with its ground truth");
  synth->add_option("--output-dir", inv.output_dir, "Output directory")->required();
  synth->add_option("--shape", inv.shape, "Point distribution")->check(CLI::IsMember({"cube", "asymmetric"}))->capture_default_str();
  synth->add_option("--count", inv.count, "Number of points")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--angle-deg", inv.angle_deg, "Rotation angle about a random axis, degrees")->capture_default_str();
  synth->add_option("--translation", inv.translation, "Translation length in a random direction")->capture_default_str();
  synth->add_option("--seed", inv.seed, "Random seed")->capture_default_str();
  synth->add_option("--format", inv.format, "Cloud format")->check(CLI::IsMember({"ply", "xyz"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << sub->help();
    }
    return kUsage;
  }

  inv.subcommand = app.get_subcommands().front()->get_name();
  try {
    inv.config = to_config(flags);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (inv.subcommand == "register") {
    return run_register(inv, out, err);
  }
  if (inv.subcommand == "compare-criteria") {
    return run_compare_criteria(inv, out, err);
  }
  if (inv.subcommand == "batch") {
    return run_batch(inv, out, err);
  }
  return run_synth(inv, out, err);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ppcr");
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ppcr::cli
