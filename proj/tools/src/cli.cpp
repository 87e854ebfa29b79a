#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dbal/balancing.hpp"
#include "dbal/contrastive.hpp"
#include "dbal/curation.hpp"
#include "dbal/errors.hpp"
#include "dbal/experiment.hpp"
#include "dbal/random.hpp"
#include "dbal/spectral.hpp"
#include "dbal/synthetic.hpp"
#include "dbal/version.hpp"
#include "manifest.hpp"

namespace dbal::cli {
namespace fs = std::filesystem;
namespace {

constexpr int kCheckFailed = 1;
constexpr int kBadInput = 2;

// Seed streams shared with run_simulation, so `gen --seed S` reproduces
// replicate 0 of `simulate --master-seed S`.
constexpr std::uint64_t kFunctionStream = 0;
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kCorruptionStream = 2;

/// Output bookkeeping for one command invocation.
class Run {
 public:
  Run(std::string command, fs::path out_dir, std::vector<std::string> args,
      std::map<std::string, std::string> flags)
      : out_dir_(std::move(out_dir)) {
    manifest_.command = std::move(command);
    manifest_.args = std::move(args);
    manifest_.flags = std::move(flags);
    manifest_.library_version = kVersion;
    manifest_.format_version = kFormatVersion;
    manifest_.started_at = utc_timestamp();
    manifest_.output_dir = fs::absolute(out_dir_).lexically_normal().string();
    manifest_.working_dir = fs::current_path().string();
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = out_dir_ / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw InvalidArgument("cannot write " + path.string());
      body(out);
      if (!out) throw InvalidArgument("failed writing " + path.string());
    }
    manifest_.outputs.push_back({name, sha256_file(path)});
  }

  void set_seed(std::uint64_t seed) { manifest_.master_seed = seed; }

  int finish(int exit_code) {
    manifest_.exit_code = exit_code;
    manifest_.finished_at = utc_timestamp();
    fs::create_directories(out_dir_);
    write_manifest(out_dir_ / (manifest_.command + ".manifest.json"), manifest_);
    return exit_code;
  }

 private:
  fs::path out_dir_;
  RunManifest manifest_;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path);
  return in;
}

JointMeasure load_measure(const std::string& path) {
  std::ifstream in = open_input(path);
  JointMeasure q = read_measure_csv(in);
  return q.normalized() ? q : q.normalize();
}

/// Values of `v` reordered to follow `labels`.
Vector align(const LabeledVector& v, const Labels& labels, const std::string& what) {
  if (v.labels.size() != labels.size()) {
    throw InvalidArgument(what + " has " + std::to_string(v.labels.size()) +
                          " entries, expected " + std::to_string(labels.size()));
  }
  std::map<std::string, double> by_label;
  for (std::size_t i = 0; i < v.labels.size(); ++i) {
    if (!by_label.emplace(v.labels[i], v.values(static_cast<Index>(i))).second) {
      throw InvalidArgument(what + " repeats label " + v.labels[i]);
    }
  }
  Vector out(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = by_label.find(labels[i]);
    if (it == by_label.end()) throw InvalidArgument(what + " has no label " + labels[i]);
    out(static_cast<Index>(i)) = it->second;
  }
  return out;
}

Vector load_marginal(const std::string& path, const Labels& labels, const std::string& what) {
  std::ifstream in = open_input(path);
  return align(read_vector_csv(in), labels, what);
}

std::vector<std::size_t> permutation(const Labels& from, const Labels& to,
                                     const std::string& what) {
  if (from.size() != to.size()) throw InvalidArgument(what + " has the wrong shape");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < from.size(); ++i) index.emplace(from[i], i);
  std::vector<std::size_t> order;
  for (const auto& label : to) {
    const auto it = index.find(label);
    if (it == index.end()) throw InvalidArgument(what + " has no label " + label);
    order.push_back(it->second);
  }
  return order;
}

/// A function table reordered to the measure's row and column labels.
TestFunction load_function(const std::string& path, const JointMeasure& p) {
  std::ifstream in = open_input(path);
  const LabeledTable table = read_table_csv(in);
  const auto rows = permutation(table.x_labels, p.x_labels(), "function rows");
  const auto cols = permutation(table.y_labels, p.y_labels(), "function columns");
  Matrix values(p.rows(), p.cols());
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j)
      values(i, j) = table.values(static_cast<Index>(rows[static_cast<std::size_t>(i)]),
                                  static_cast<Index>(cols[static_cast<std::size_t>(j)]));
  return TestFunction(values);
}

/// Arguments minus --out-dir, for the manifest.
std::vector<std::string> replayable(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (args[i].starts_with("--out-dir=")) continue;
    out.push_back(args[i]);
  }
  return out;
}

std::map<std::string, std::string> effective_flags(const CLI::App& sub) {
  std::map<std::string, std::string> flags;
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_name();
    if (name == "--help" || name == "--out-dir") continue;
    while (name.starts_with('-')) name.erase(0, 1);
    std::string value;
    if (opt->count() > 0) {
      for (const auto& result : opt->results()) value += (value.empty() ? "" : ",") + result;
    } else {
      value = opt->get_default_str();
    }
    flags[name] = value;
  }
  return flags;
}

struct BalanceOptions {
  std::string measure;
  std::string px;
  std::string py;
  std::optional<int> k;
  double tol = ConvergenceOptions{}.tol;
  int max_iter = ConvergenceOptions{}.max_iter;
  std::string order = "x-first";
  std::string divergence;
};

int balance_command(Run& run, const BalanceOptions& o) {
  const JointMeasure q = load_measure(o.measure);
  const TargetMarginals targets(load_marginal(o.px, q.x_labels(), "--px"),
                                load_marginal(o.py, q.y_labels(), "--py"));
  const Order order = parse_order(o.order);
  std::optional<Divergence> projection;
  if (!o.divergence.empty()) projection = parse_divergence(o.divergence);

  int steps = 0;
  if (o.k) {
    steps = *o.k;
  } else {
    try {
      steps = balance_to_convergence(q, targets, {o.tol, o.max_iter, order, projection})
                  .iterations;
    } catch (const NotConverged& e) {
      std::cerr << "dbal: not converged after " << e.iterations()
                << " steps (violation " << format_real(e.max_violation()) << ")\n";
      run.write("balanced.csv", [&](std::ostream& out) {
        write_measure_csv(out, e.last_iterate());
      });
      return run.finish(kCheckFailed);
    }
  }
  const BalanceTrace trace = balance_k(q, targets, steps, order, projection);
  run.write("balanced.csv",
            [&](std::ostream& out) { write_measure_csv(out, trace.final_measure()); });
  run.write("trace.csv", [&](std::ostream& out) {
    out << "iteration,axis,ratio_deviation,kl_violation\n";
    for (int l = 0; l <= trace.steps(); ++l) {
      out << l << ',';
      if (l > 0) {
        out << to_string(trace.axis_of_step(l)) << ','
            << format_real(trace.ratio_bounds[static_cast<std::size_t>(l - 1)]);
      } else {
        out << ',';
      }
      out << ',' << format_real(trace.kl_violations[static_cast<std::size_t>(l)]) << '\n';
    }
  });
  std::cout << "steps: " << steps << "\nmarginal violation: "
            << format_real(marginal_violation(trace.final_measure(), targets)) << '\n';
  return run.finish(0);
}

struct SpectrumOptions {
  std::string measure;
  std::string function;
  std::uint64_t seed = 1;
  int max_k = 10;
  std::string order = "x-first";
};

int spectrum_command(Run& run, const SpectrumOptions& o) {
  const JointMeasure p = load_measure(o.measure);
  const Order order = parse_order(o.order);
  std::optional<TestFunction> loaded;
  if (!o.function.empty()) {
    loaded = load_function(o.function, p);
  } else {
    run.set_seed(o.seed);
    loaded = random_test_function(p.rows(), p.cols(), o.seed);
  }
  const TestFunction& h = *loaded;
  const SpectralDecomposition d = decompose(p);
  const FunctionCoordinates c = coordinates(p, h, d);
  run.write("singular_values.csv", [&](std::ostream& out) {
    out << "index,singular_value\n";
    for (Index j = 0; j < d.rank(); ++j) {
      out << j + 1 << ',' << format_real(d.singular_values(j)) << '\n';
    }
  });
  const double sigma0 = variance(p, h);
  run.write("variances.csv", [&](std::ostream& out) {
    out << "k,sigma_sq_direct,sigma_sq_predicted\n";
    for (int k = 0; k <= o.max_k; ++k) {
      out << k << ',' << format_real(sigma_k_direct(p, h, k, order)) << ','
          << format_real(sigma0 - predicted_reduction(d, c, k, order)) << '\n';
    }
  });
  std::cout << "s_2: " << format_real(d.second_singular_value()) << '\n'
            << "sigma_0^2: " << format_real(sigma0) << '\n';
  try {
    const double gap = sigma_gap(d, c);
    std::cout << "sigma_gap^2: " << format_real(gap) << '\n'
              << "sigma_limit^2: " << format_real(sigma0 - gap) << '\n';
  } catch (const SpectralGapViolation&) {
    std::cout << "sigma_gap^2: undefined (s_2 = 1)\n";
  }
  return run.finish(0);
}

struct GenOptions {
  Index m = 10;
  double s = 0.5;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  std::int64_t n = 0;
};

int gen_command(Run& run, const GenOptions& o) {
  run.set_seed(o.seed);
  const JointMeasure p = spectrum_controlled_measure(o.m, o.s);
  TargetMarginals targets = TargetMarginals::of(p);
  if (o.epsilon > 0.0) {
    Rng rng(derive_seed(derive_seed(o.seed, kCorruptionStream), 0));
    const Vector draw_x = dirichlet_uniform(o.m, rng);
    const Vector draw_y = dirichlet_uniform(o.m, rng);
    targets = corrupt_marginals(targets, o.epsilon, draw_x, draw_y);
  }
  const TestFunction h = random_test_function(o.m, o.m, derive_seed(o.seed, kFunctionStream));
  run.write("measure.csv", [&](std::ostream& out) { write_measure_csv(out, p); });
  run.write("px.csv", [&](std::ostream& out) { write_vector_csv(out, p.x_labels(), targets.p_x()); });
  run.write("py.csv", [&](std::ostream& out) { write_vector_csv(out, p.y_labels(), targets.p_y()); });
  run.write("function.csv", [&](std::ostream& out) {
    write_table_csv(out, h.values(), p.x_labels(), p.y_labels());
  });
  if (o.n > 0) {
    const EmpiricalSample sample =
        sample_empirical(p, o.n, derive_seed(derive_seed(o.seed, kSampleStream), 0));
    run.write("sample.csv", [&](std::ostream& out) { write_measure_csv(out, sample.to_measure()); });
  }
  return run.finish(0);
}

struct SimulateOptions {
  SimulationConfig config;
  std::vector<std::string> estimators{"empirical", "ipwi", "balanced"};
};

void add_simulation_options(CLI::App& sub, SimulateOptions& o) {
  auto& c = o.config;
  sub.add_option("--m", c.m, "Atoms per axis")->capture_default_str()->check(CLI::Range(2, 1000));
  sub.add_option("--n", c.n, "Sample size")->capture_default_str()->check(CLI::PositiveNumber);
  sub.add_option("--k", c.k, "Balancing steps")->capture_default_str()->check(CLI::NonNegativeNumber);
  sub.add_option("--s-grid", c.s_grid, "Dependence levels")->delimiter(',')->capture_default_str();
  sub.add_option("--epsilon-grid", c.epsilon_grid, "Misspecification levels in [0, 0.5]")
      ->delimiter(',')
      ->capture_default_str();
  sub.add_option("--seeds", c.seeds, "Monte Carlo replicates")->capture_default_str()->check(CLI::PositiveNumber);
  sub.add_option("--estimators", o.estimators, "empirical, ipwi, balanced")
      ->delimiter(',')
      ->capture_default_str();
  sub.add_option("--master-seed", c.master_seed, "Seed for all random streams")->capture_default_str();
  sub.add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

std::vector<MseRecord> simulate(Run& run, SimulateOptions& o) {
  o.config.estimators.clear();
  for (const auto& name : o.estimators) o.config.estimators.push_back(parse_estimator_kind(name));
  run.set_seed(o.config.master_seed);
  std::vector<MseRecord> records = run_simulation(o.config);
  run.write("mse.csv", [&](std::ostream& out) { write_mse_csv(out, records); });
  return records;
}

int simulate_command(Run& run, SimulateOptions& o) {
  const auto records = simulate(run, o);
  std::cout << records.size() << " records\n";
  return run.finish(0);
}

int repro_command(Run& run, SimulateOptions& o) {
  const auto checks = check_orderings(simulate(run, o));
  int failed = 0;
  std::ostringstream report;
  for (const auto& check : checks) {
    const std::string status = check.skipped ? "SKIP" : (check.passed ? "PASS" : "FAIL");
    report << '(' << check.id << ") " << status << ' ' << check.description;
    if (!check.detail.empty()) report << "\n    " << check.detail;
    report << '\n';
    if (check.skipped || !check.passed) ++failed;
  }
  run.write("orderings.txt", [&](std::ostream& out) { out << report.str(); });
  std::cout << report.str();
  if (failed > 0) {
    std::cerr << "dbal repro: " << failed << " ordering check(s) did not hold\n";
    return run.finish(kCheckFailed);
  }
  return run.finish(0);
}

struct ClipOptions {
  std::string scores;
  int k = 1;
  bool trace = false;
};

int clip_loss_command(Run& run, const ClipOptions& o) {
  std::ifstream in = open_input(o.scores);
  const ScoreMatrix scores(read_table_csv(in).values);
  const double balanced = balanced_clip_loss(scores, o.k);
  const double standard = standard_clip_loss(scores);
  run.write("clip_loss.csv", [&](std::ostream& out) {
    out << "k,balanced_loss,standard_loss,difference\n"
        << o.k << ',' << format_real(balanced) << ',' << format_real(standard) << ','
        << format_real(standard - balanced) << '\n';
  });
  if (o.trace) {
    run.write("clip_trace.csv", [&](std::ostream& out) {
      out << "iteration,q_x_deviation,q_y_deviation,r_x_deviation,r_y_deviation,loss\n";
      for (const auto& e : clip_marginal_trace(scores, o.k)) {
        out << e.iteration << ',' << format_real(e.q_x_deviation) << ','
            << format_real(e.q_y_deviation) << ',' << format_real(e.r_x_deviation) << ','
            << format_real(e.r_y_deviation) << ',' << format_real(e.loss) << '\n';
      }
    });
  }
  std::cout << "balanced loss (k=" << o.k << "): " << format_real(balanced) << '\n'
            << "standard loss: " << format_real(standard) << '\n'
            << "standard - balanced: " << format_real(standard - balanced) << '\n';
  return run.finish(0);
}

struct CurateOptions {
  std::string input;
  std::string format = "auto";
  std::string keywords;
  std::int64_t threshold = 0;
  bool exact_bytes = false;
  std::string output_weights = "weights.csv";
  std::int64_t resample_size = 0;
  std::uint64_t seed = 1;
};

int curate_command(Run& run, const CurateOptions& o) {
  std::string format = o.format;
  if (format == "auto") format = fs::path(o.input).extension() == ".csv" ? "csv" : "jsonl";
  std::ifstream corpus_in = open_input(o.input);
  const Corpus corpus = format == "csv" ? read_corpus_csv(corpus_in) : read_corpus_jsonl(corpus_in);
  std::ifstream keyword_in = open_input(o.keywords);
  const auto keywords = read_keywords(keyword_in);

  const KeywordAssignment assignment = match_keywords(corpus, keywords, {o.exact_bytes});
  const auto counts = assignment.counts();
  const Vector target = truncated_target(counts, o.threshold);
  const CurationPlan plan = curation_weights(corpus, assignment, target, o.threshold);

  run.write(o.output_weights, [&](std::ostream& out) { write_weights_csv(out, plan); });
  run.write("observed_marginal.csv", [&](std::ostream& out) {
    write_vector_csv(out, plan.keywords, plan.observed_marginal);
  });
  run.write("target_marginal.csv", [&](std::ostream& out) {
    write_vector_csv(out, plan.keywords, plan.target_marginal);
  });
  if (o.resample_size > 0) {
    run.set_seed(o.seed);
    const auto ids = resample(plan, o.resample_size, o.seed);
    run.write("resampled_ids.csv", [&](std::ostream& out) {
      out << "id\n";
      for (const auto& id : ids) out << id << '\n';
    });
  }
  std::cout << "records: " << corpus.size() << "\nmatched: " << assignment.matched()
            << "\nkeywords: " << keywords.size() << '\n';
  return run.finish(0);
}

int replay_command(const std::string& manifest_path, std::string out_dir) {
  const RunManifest manifest = read_manifest(manifest_path);
  fs::path target = out_dir.empty() ? fs::path(manifest_path).parent_path() / "replay"
                                     : fs::path(out_dir);
  target = fs::absolute(target);
  std::vector<std::string> args = manifest.args;
  args.push_back("--out-dir");
  args.push_back(target.string());
  const fs::path here = fs::current_path();
  fs::current_path(manifest.working_dir);
  const int code = run(args);
  fs::current_path(here);

  int mismatches = 0;
  if (code != manifest.exit_code) {
    std::cout << "exit code " << code << " (recorded " << manifest.exit_code << ")\n";
    ++mismatches;
  }
  for (const auto& file : manifest.outputs) {
    const fs::path path = target / file.name;
    const std::string digest = fs::exists(path) ? sha256_file(path) : "missing";
    const bool same = digest == file.sha256;
    std::cout << (same ? "match    " : "MISMATCH ") << file.name << '\n';
    if (!same) ++mismatches;
  }
  if (mismatches > 0) {
    std::cerr << "dbal replay: " << mismatches << " difference(s)\n";
    return kCheckFailed;
  }
  std::cout << "replay reproduced " << manifest.outputs.size() << " output(s)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Marginal balancing of discrete joint measures", "dbal"};
  app.set_version_flag("--version", std::string("dbal ") + kVersion + " (format " +
                                        std::to_string(kFormatVersion) + ")");
  app.require_subcommand(1);

  std::string out_dir = default_output_dir();
  const auto add_out_dir = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "Output directory (default $DBAL_OUTPUT_DIR or .)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };

  BalanceOptions balance;
  auto* balance_cmd = app.add_subcommand("balance", "Balance a measure to target marginals");
  balance_cmd->add_option("--measure", balance.measure, "Measure CSV")->required()->check(CLI::ExistingFile);
  balance_cmd->add_option("--px", balance.px, "Target X marginal CSV")->required()->check(CLI::ExistingFile);
  balance_cmd->add_option("--py", balance.py, "Target Y marginal CSV")->required()->check(CLI::ExistingFile);
  balance_cmd->add_option("--k", balance.k, "Fixed number of steps (default: until --tol)")
      ->check(CLI::NonNegativeNumber);
  balance_cmd->add_option("--tol", balance.tol, "Marginal tolerance")->capture_default_str();
  balance_cmd->add_option("--max-iter", balance.max_iter, "Step limit")->capture_default_str();
  balance_cmd->add_option("--order", balance.order)->capture_default_str()->check(
      CLI::IsMember({"x-first", "y-first"}));
  balance_cmd->add_option("--divergence", balance.divergence, "Project in kl, reverse-kl or chi2")
      ->check(CLI::IsMember({"kl", "reverse-kl", "chi2"}));
  add_out_dir(balance_cmd);

  SpectrumOptions spectrum;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Singular values and variance table");
  spectrum_cmd->add_option("--measure", spectrum.measure, "Measure CSV")->required()->check(CLI::ExistingFile);
  spectrum_cmd->add_option("--function", spectrum.function, "Test function CSV (default: random)")
      ->check(CLI::ExistingFile);
  spectrum_cmd->add_option("--seed", spectrum.seed, "Seed for the default test function")->capture_default_str();
  spectrum_cmd->add_option("--max-k", spectrum.max_k)->capture_default_str()->check(CLI::NonNegativeNumber);
  spectrum_cmd->add_option("--order", spectrum.order)->capture_default_str()->check(
      CLI::IsMember({"x-first", "y-first"}));
  add_out_dir(spectrum_cmd);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Synthetic measure, marginals and test function");
  gen_cmd->add_option("--m", gen.m)->capture_default_str()->check(CLI::Range(2, 100000));
  gen_cmd->add_option("--s", gen.s, "Dependence level in (0, 1)")->capture_default_str();
  gen_cmd->add_option("--epsilon", gen.epsilon, "Marginal misspecification in [0, 1)")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "Also write an empirical sample of this size")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  add_out_dir(gen_cmd);

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo MSE table");
  add_simulation_options(*simulate_cmd, sim);
  add_out_dir(simulate_cmd);

  SimulateOptions repro;
  auto* repro_cmd = app.add_subcommand("repro", "MSE study with ordering checks");
  add_simulation_options(*repro_cmd, repro);
  add_out_dir(repro_cmd);

  ClipOptions clip;
  auto* clip_cmd = app.add_subcommand("clip-loss", "Standard and balanced contrastive losses");
  clip_cmd->add_option("--scores", clip.scores, "Square score matrix CSV")->required()->check(CLI::ExistingFile);
  clip_cmd->add_option("--k", clip.k)->capture_default_str()->check(CLI::NonNegativeNumber);
  clip_cmd->add_flag("--trace", clip.trace, "Write per-iteration marginal deviations");
  add_out_dir(clip_cmd);

  CurateOptions curate;
  auto* curate_cmd = app.add_subcommand("curate", "Keyword-balanced resampling weights");
  curate_cmd->add_option("--input", curate.input, "Corpus (JSONL or CSV)")->required()->check(CLI::ExistingFile);
  curate_cmd->add_option("--format", curate.format)->capture_default_str()->check(
      CLI::IsMember({"auto", "jsonl", "csv"}));
  curate_cmd->add_option("--keywords", curate.keywords, "One keyword per line")
      ->required()
      ->check(CLI::ExistingFile);
  curate_cmd->add_option("--threshold", curate.threshold, "Count cap of the target")
      ->required()
      ->check(CLI::PositiveNumber);
  curate_cmd->add_flag("--exact-bytes", curate.exact_bytes, "Match raw bytes");
  curate_cmd->add_option("--output-weights", curate.output_weights, "Weights CSV name")
      ->capture_default_str();
  curate_cmd->add_option("--resample", curate.resample_size, "Draws to resample (0: none)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  curate_cmd->add_option("--seed", curate.seed)->capture_default_str();
  add_out_dir(curate_cmd);

  std::string manifest_path;
  std::string replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare outputs");
  replay_cmd->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--out-dir", replay_dir, "Where to write (default: <manifest dir>/replay)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kBadInput;
  }

  try {
    if (replay_cmd->parsed()) return replay_command(manifest_path, replay_dir);
    CLI::App* sub = app.get_subcommands().front();
    Run run(sub->get_name(), out_dir, replayable(args), effective_flags(*sub));
    if (balance_cmd->parsed()) return balance_command(run, balance);
    if (spectrum_cmd->parsed()) return spectrum_command(run, spectrum);
    if (gen_cmd->parsed()) return gen_command(run, gen);
    if (simulate_cmd->parsed()) return simulate_command(run, sim);
    if (repro_cmd->parsed()) return repro_command(run, repro);
    if (clip_cmd->parsed()) return clip_loss_command(run, clip);
    if (curate_cmd->parsed()) return curate_command(run, curate);
  } catch (const Error& e) {
    std::cerr << "dbal: " << e.what() << '\n';
    return kBadInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "dbal: " << e.what() << '\n';
    return kBadInput;
  }
  return kBadInput;
}

}  // namespace dbal::cli
