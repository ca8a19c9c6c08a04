#include "cli.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "loom/errors.hpp"
#include "loom/estimator.hpp"
#include "loom/experiments.hpp"
#include "loom/io.hpp"
#include "loom/optimizer.hpp"
#include "loom/preloader.hpp"
#include "loom/profiles.hpp"
#include "loom/simulator.hpp"
#include "loom/slo.hpp"
#include "loom/zoo.hpp"

namespace loom::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string zoo, profiles, slo, plan, preload, out, out_dir, in, spec, emit = "summary";
  std::string tmpl = "intel", flavor = "intel", policy = "all", permutations = "all", candidates = "stitched";
  std::string gen_params, latency_csv, slo_out, slo_mode = "slo25";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> sigma_acc;
  double budget_frac = 1.0, comm_ms = 0.0, hop_ms = 0.0, compile_x = 23.7, load_x = 3.0;
  int tasks = 4, variants = 10, subgraphs = 3, processors = 3, queries = 100, train_n = 50, k = 10, max_sweeps = 0;
  std::optional<int> config;
  bool count_only = false, use_truth = false;
};

void check_matches(const Zoo& zoo, const ProfileTable& table) {
  for (const TaskZoo& tz : zoo.tasks()) {
    const int t = tz.task.task_id;
    const auto ids = table.task_ids();
    if (std::find(ids.begin(), ids.end(), t) == ids.end() || table.variant_count(t) != tz.task.variant_count ||
        table.subgraph_count(t) != tz.task.subgraph_count) {
      throw Error(ErrorKind::invalid_argument, "profiles do not match the zoo for task " + std::to_string(t));
    }
  }
}

struct Inputs {
  Zoo zoo;
  ProfileTable table;
  std::vector<PlacementOrder> orders;
};

Inputs load_inputs(const Options& o) {
  Inputs in{zoo_from_json(read_file(o.zoo)), profiles_from_json(read_file(o.profiles)), {}};
  check_matches(in.zoo, in.table);
  in.orders = enumerate_orders(in.table.processor_count(), in.zoo.tasks().front().task.subgraph_count);
  return in;
}

std::vector<SloConfig> load_slo(const Options& o) {
  auto configs = slo_configs_from_json(read_file(o.slo));
  if (o.config) {
    std::erase_if(configs, [&](const SloConfig& c) { return c.config_id != *o.config; });
    if (configs.empty()) throw Error(ErrorKind::missing_key, "no SLO config " + std::to_string(*o.config) + " in " + o.slo);
  }
  if (configs.empty()) throw Error(ErrorKind::invalid_argument, "no SLO configs in " + o.slo);
  return configs;
}

// Accuracy model used for planning: ground truth or per-task estimators
// trained from the seed.
struct Planner {
  std::optional<TruthAccuracy> truth;
  std::optional<PredictedAccuracy> predicted;
  const AccuracyModel& model() const {
    return truth ? static_cast<const AccuracyModel&>(*truth) : static_cast<const AccuracyModel&>(*predicted);
  }
};

void init_planner(Planner& p, const Inputs& in, const Options& o) {
  if (o.use_truth) {
    p.truth.emplace(in.table);
  } else {
    p.predicted.emplace(in.table, train_estimators(in.zoo, in.table, o.train_n, o.seed));
  }
}

void emit(const Options&, const std::string& path, const std::string& contents, std::ostream& out) {
  write_file_atomic(path, contents);
  out << "wrote " << path << "\n";
}

int cmd_gen_zoo(const Options& o, std::ostream& out) {
  Zoo zoo;
  if (o.tmpl == "intel") {
    zoo = intel_template_zoo();
  } else if (o.tmpl == "jetson") {
    zoo = jetson_template_zoo();
  } else if (o.tmpl == "custom") {
    zoo = custom_zoo(o.tasks, o.variants, o.subgraphs);
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown template '" + o.tmpl + "'");
  }
  emit(o, o.out, zoo_to_json(zoo), out);
  return 0;
}

int cmd_gen_profiles(const Options& o, std::ostream& out) {
  const Zoo zoo = zoo_from_json(read_file(o.zoo));
  GenParams params;
  if (!o.gen_params.empty()) {
    params = gen_params_from_json(read_file(o.gen_params));
  } else if (o.flavor == "intel") {
    params = intel_gen_params();
  } else if (o.flavor == "jetson") {
    params = jetson_gen_params();
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown flavor '" + o.flavor + "'");
  }
  if (o.sigma_acc) params.sigma_acc = *o.sigma_acc;
  const ProfileTable table = generate_synthetic(zoo, default_processors(o.processors), params, o.seed);
  emit(o, o.out, profiles_to_json(table), out);
  if (!o.latency_csv.empty()) emit(o, o.latency_csv, latency_csv(table), out);
  if (!o.slo_out.empty()) {
    const auto orders = enumerate_orders(o.processors, zoo.tasks().front().task.subgraph_count);
    std::vector<SloConfig> configs;
    if (o.slo_mode == "slo25") {
      configs = generate_slo_configs(zoo, table, orders);
    } else if (o.slo_mode == "acc_guaranteed") {
      configs = generate_guaranteed_slos(zoo, table, orders, GuaranteeMode::accuracy_guaranteed);
    } else if (o.slo_mode == "lat_guaranteed") {
      configs = generate_guaranteed_slos(zoo, table, orders, GuaranteeMode::latency_guaranteed);
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown SLO mode '" + o.slo_mode + "'");
    }
    emit(o, o.slo_out, slo_configs_to_json(configs), out);
  }
  return 0;
}

int cmd_stitch(const Options& o, std::ostream& out) {
  const Zoo zoo = zoo_from_json(read_file(o.zoo));
  if (o.count_only) {
    std::uint64_t total = 0;
    for (const TaskZoo& tz : zoo.tasks()) {
      total += stitched_variant_count(1, static_cast<std::uint64_t>(tz.task.variant_count),
                                      static_cast<std::uint64_t>(tz.task.subgraph_count));
    }
    out << total << "\n";
    return 0;
  }
  std::string csv = "task_id,rank,donors\n";
  for (const TaskZoo& tz : zoo.tasks()) {
    std::uint64_t rank = 0;
    for (const StitchMap& m : enumerate_stitched(tz.task)) {
      csv += std::to_string(m.task_id) + "," + std::to_string(rank++) + "," + format_donors(m) + "\n";
    }
  }
  if (o.out.empty()) {
    out << csv;
  } else {
    emit(o, o.out, csv, out);
  }
  return 0;
}

int cmd_profile(const Options& o, std::ostream& out) {
  const Inputs in = load_inputs(o);
  const auto estimators = train_estimators(in.zoo, in.table, o.train_n, o.seed);
  std::vector<RecallRow> recall;
  for (const TaskZoo& tz : in.zoo.tasks()) {
    const auto candidates = enumerate_stitched(tz.task);
    const int k = std::min<int>(o.k, static_cast<int>(candidates.size()));
    recall.push_back({o.seed, tz.task.task_id, k, top_k_recall(estimators.at(tz.task.task_id), candidates, in.table, k)});
  }
  std::vector<double> estimates, truths;
  for (const TaskZoo& tz : in.zoo.tasks()) {
    for (const StitchMap& m : enumerate_stitched(tz.task)) {
      for (const PlacementOrder& p : in.orders) {
        estimates.push_back(estimate_latency(m, p, in.table));
        truths.push_back(simulate_single_query(m, p.procs, in.table, o.comm_ms));
      }
    }
  }
  const std::vector<LatencyErrorRow> lat{{o.seed, o.comm_ms, latency_error(estimates, truths)}};

  const auto T = static_cast<std::uint64_t>(in.zoo.task_count());
  const auto& first = in.zoo.tasks().front().task;
  const auto V = static_cast<std::uint64_t>(first.variant_count), S = static_cast<std::uint64_t>(first.subgraph_count);
  const auto P = static_cast<std::uint64_t>(in.table.processor_count());
  std::string cost = "# seed=" + std::to_string(o.seed) +
                     "\nT,V,S,P,exhaustive_original,exhaustive_stitched,with_estimators,training_runs\n";
  cost += std::to_string(T) + "," + std::to_string(V) + "," + std::to_string(S) + "," + std::to_string(P) + "," +
          std::to_string(profiling_cost(T, V, S, P, false, false)) + "," +
          std::to_string(profiling_cost(T, V, S, P, true, false)) + "," +
          std::to_string(profiling_cost(T, V, S, P, true, true)) + "," +
          std::to_string(estimator_training_runs(T, static_cast<std::uint64_t>(o.train_n))) + "\n";

  const fs::path dir(o.out_dir);
  emit(o, (dir / "estimator_recall.csv").string(), recall_csv(recall, o.seed), out);
  emit(o, (dir / "latency_error.csv").string(), latency_error_csv(lat, o.seed), out);
  emit(o, (dir / "profiling_cost.csv").string(), cost, out);
  return 0;
}

int cmd_optimize(const Options& o, std::ostream& out) {
  const Inputs in = load_inputs(o);
  const auto configs = load_slo(o);
  Planner planner;
  init_planner(planner, in, o);
  CandidateSet candidates = CandidateSet::stitched;
  if (o.candidates == "original") {
    candidates = CandidateSet::original;
  } else if (o.candidates != "stitched") {
    throw Error(ErrorKind::invalid_argument, "unknown candidate set '" + o.candidates + "'");
  }
  const ProfileLatency latency(in.table, o.comm_ms);
  std::vector<PlanResult> plans;
  for (const SloConfig& c : configs) {
    const FeasibleSets feasible = compute_feasible_sets(in.zoo, planner.model(), latency, c, in.orders, candidates);
    try {
      plans.push_back(plan_from_feasible(feasible, latency, c, in.orders));
    } catch (const Error& e) {
      // A sweep keeps going past configs nobody can meet; a single config reports it.
      if (e.kind() != ErrorKind::all_infeasible || configs.size() == 1) throw;
      plans.push_back(empty_plan(feasible, c.config_id));
    }
  }
  const std::string text = plans.size() == 1 ? plan_to_json(plans.front(), in.table.processors(), o.seed)
                                             : plans_to_json(plans, in.table.processors(), o.seed);
  emit(o, o.out, text, out);
  return 0;
}

int cmd_preload(const Options& o, std::ostream& out) {
  const Inputs in = load_inputs(o);
  const auto configs = load_slo(o);
  Planner planner;
  init_planner(planner, in, o);
  const ProfileLatency latency(in.table, o.comm_ms);
  std::vector<FeasibleSets> feasible;
  for (const SloConfig& c : configs) feasible.push_back(compute_feasible_sets(in.zoo, planner.model(), latency, c, in.orders));
  const HotnessTable hotness = compute_hotness(satisfying_sets(configs, feasible));
  const PreloadPlan plan =
      greedy_preload(hotness, in.zoo, budget_from_fraction(in.zoo, o.budget_frac), PreloadOptions{o.max_sweeps});
  emit(o, o.out, preload_to_json(plan, o.seed), out);
  return 0;
}

std::vector<Policy> parse_policies(const std::string& text) {
  if (text == "all") return all_policies();
  std::vector<Policy> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(Policy{parse_policy(item), std::nullopt});
  if (out.empty()) throw Error(ErrorKind::invalid_argument, "--policy lists no policies");
  return out;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  const Inputs in = load_inputs(o);
  const auto configs = load_slo(o);
  Planner planner;
  init_planner(planner, in, o);
  std::optional<PreloadPlan> preload;
  if (!o.preload.empty()) preload = preload_from_json(read_file(o.preload));

  WorkloadSpec workload{in.zoo.task_ids(), o.queries, all_permutations(in.zoo.task_ids())};
  if (o.permutations != "all") {
    int n = 0;
    try {
      n = std::stoi(o.permutations);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument, "--permutations must be 'all' or a positive integer");
    }
    if (n < 1) throw Error(ErrorKind::invalid_argument, "--permutations must be 'all' or a positive integer");
    if (static_cast<std::size_t>(n) < workload.arrival_permutations.size()) workload.arrival_permutations.resize(static_cast<std::size_t>(n));
  }
  SimOptions options;
  options.hop_cost_ms = o.hop_ms;
  options.switch_multipliers.compile_x = o.compile_x;
  options.switch_multipliers.load_x = o.load_x;
  const SelectionContext ctx{in.zoo, in.table, planner.model(), in.orders, o.comm_ms};
  const auto policies = parse_policies(o.policy);
  const SimReport report =
      run_simulation(workload, policies, configs, ctx, preload ? &*preload : nullptr, options, o.seed);
  const fs::path dir(o.out_dir);
  emit(o, (dir / "report.csv").string(), report_csv(report, o.seed), out);
  emit(o, (dir / "summary.csv").string(), summary_csv(aggregate(report), o.seed), out);
  return 0;
}

int cmd_experiment(const Options& o, std::ostream& out) {
  ExperimentSpec spec = parse_experiment_spec(read_file(o.spec));
  if (o.seed_override) spec.seeds = {*o.seed_override};
  const ExperimentBundle bundle = run_experiment(spec);
  write_bundle(bundle, o.out_dir);
  out << "wrote " << bundle.files.size() << " files to " << o.out_dir << "\n";
  return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
  const SimReport report = report_from_csv(read_file(o.in));
  const std::uint64_t seed = report.rows.empty() ? 0 : report.rows.front().seed;
  const auto summary = aggregate(report);
  std::string text;
  if (o.emit == "summary") {
    text = summary_csv(summary, seed);
  } else if (o.emit == "violation" || o.emit == "throughput") {
    std::map<PolicyKind, std::pair<double, int>> acc;
    for (const SummaryRow& r : summary) {
      acc[r.policy].first += o.emit == "violation" ? r.violation_rate : r.throughput_qps;
      ++acc[r.policy].second;
    }
    text = "# seed=" + std::to_string(seed) + "\npolicy," + (o.emit == "violation" ? "violation_rate" : "throughput_qps") + "\n";
    for (const auto& [p, a] : acc) text += std::string(to_string(p)) + "," + format_double(a.first / a.second) + "\n";
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown --emit '" + o.emit + "'");
  }
  if (o.out.empty()) {
    out << text;
  } else {
    emit(o, o.out, text, out);
  }
  return 0;
}

std::string quote(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stitched multi-DNN planning, preloading and simulation"};
  app.name("loom");
  app.require_subcommand(1);
  Options o;

  auto add_zoo = [&](CLI::App* c) { c->add_option("--zoo", o.zoo, "Zoo JSON")->required(); };
  auto add_profiles = [&](CLI::App* c) { c->add_option("--profiles", o.profiles, "Profile JSON")->required(); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "64-bit seed"); };
  auto add_planner = [&](CLI::App* c) {
    c->add_flag("--use-truth", o.use_truth, "Plan with ground-truth accuracy instead of estimators");
    c->add_option("--train-n", o.train_n, "Training samples per task")->check(CLI::PositiveNumber);
    c->add_option("--comm-ms", o.comm_ms, "Per-hop communication cost known to the planner")->check(CLI::NonNegativeNumber);
  };

  auto* gen_zoo = app.add_subcommand("gen-zoo", "Write a template zoo");
  gen_zoo->add_option("--template", o.tmpl, "intel | jetson | custom");
  gen_zoo->add_option("--tasks", o.tasks, "custom: T")->check(CLI::PositiveNumber);
  gen_zoo->add_option("--variants", o.variants, "custom: V")->check(CLI::PositiveNumber);
  gen_zoo->add_option("--subgraphs", o.subgraphs, "custom: S")->check(CLI::PositiveNumber);
  gen_zoo->add_option("--out", o.out, "Output zoo JSON")->required();

  auto* gen_profiles = app.add_subcommand("gen-profiles", "Generate synthetic profiles");
  add_zoo(gen_profiles);
  add_seed(gen_profiles);
  gen_profiles->add_option("--processors", o.processors, "Processor count (CPU, GPU, NPU)")->check(CLI::Range(1, 3));
  gen_profiles->add_option("--flavor", o.flavor, "intel | jetson generation parameters");
  gen_profiles->add_option("--gen-params", o.gen_params, "Generation parameter JSON");
  gen_profiles->add_option("--sigma-acc", o.sigma_acc, "Stitched-accuracy noise")->check(CLI::NonNegativeNumber);
  gen_profiles->add_option("--out", o.out, "Output profile JSON")->required();
  gen_profiles->add_option("--latency-csv", o.latency_csv, "Also export the latency map as CSV");
  gen_profiles->add_option("--slo", o.slo_out, "Also write generated SLO configs");
  gen_profiles->add_option("--slo-mode", o.slo_mode, "slo25 | acc_guaranteed | lat_guaranteed");

  auto* stitch = app.add_subcommand("stitch", "Enumerate stitched variants");
  add_zoo(stitch);
  stitch->add_flag("--count-only", o.count_only, "Print T*V^S only");
  stitch->add_option("--out", o.out, "Output CSV (stdout if absent)");

  auto* profile = app.add_subcommand("profile", "Evaluate the accuracy and latency estimators");
  add_zoo(profile);
  add_profiles(profile);
  add_seed(profile);
  profile->add_option("--train-n", o.train_n, "Training samples per task")->check(CLI::PositiveNumber);
  profile->add_option("--comm-ms", o.comm_ms, "Unmodelled per-hop cost injected into the simulator")->check(CLI::NonNegativeNumber);
  profile->add_option("--k", o.k, "Top-K")->check(CLI::PositiveNumber);
  profile->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* optimize = app.add_subcommand("optimize", "Choose a placement order and variants");
  add_zoo(optimize);
  add_profiles(optimize);
  add_seed(optimize);
  add_planner(optimize);
  optimize->add_option("--slo", o.slo, "SLO config JSON")->required();
  optimize->add_option("--config", o.config, "Only this config id");
  optimize->add_option("--candidates", o.candidates, "stitched | original");
  optimize->add_option("--out", o.out, "Output plan JSON")->required();

  auto* preload = app.add_subcommand("preload", "Greedy hotness-based preload plan");
  add_zoo(preload);
  add_profiles(preload);
  add_seed(preload);
  add_planner(preload);
  preload->add_option("--slo", o.slo, "SLO configs JSON")->required();
  preload->add_option("--budget-frac", o.budget_frac, "Budget as a fraction of full preload")->check(CLI::Range(0.0, 1.0));
  preload->add_option("--max-sweeps", o.max_sweeps, "Sweep limit, 0 for unlimited")->check(CLI::NonNegativeNumber);
  preload->add_option("--out", o.out, "Output preload JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Run the discrete-event simulation");
  add_zoo(simulate);
  add_profiles(simulate);
  add_seed(simulate);
  add_planner(simulate);
  simulate->add_option("--slo", o.slo, "SLO configs JSON")->required();
  simulate->add_option("--config", o.config, "Only this config id");
  simulate->add_option("--preload", o.preload, "SPARSELOOM preload plan (default: everything resident)");
  simulate->add_option("--policy", o.policy, "all or comma-separated policy names");
  simulate->add_option("--queries", o.queries, "Queries per task")->check(CLI::PositiveNumber);
  simulate->add_option("--permutations", o.permutations, "all or N");
  simulate->add_option("--hop-ms", o.hop_ms, "Unmodelled per-hop delay, simulator only")->check(CLI::NonNegativeNumber);
  simulate->add_option("--compile-x", o.compile_x, "Compile time / inference time")->check(CLI::NonNegativeNumber);
  simulate->add_option("--load-x", o.load_x, "Load time / inference time")->check(CLI::NonNegativeNumber);
  simulate->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* experiment = app.add_subcommand("experiment", "Run an experiment spec");
  experiment->add_option("--spec", o.spec, "Experiment spec JSON")->required();
  experiment->add_option("--seed", o.seed_override, "Run this single seed instead of the spec's list");
  experiment->add_option("--out-dir", o.out_dir, "Bundle directory")->required();

  auto* report = app.add_subcommand("report", "Summarise a simulation report");
  report->add_option("--in", o.in, "Report CSV")->required();
  report->add_option("--emit", o.emit, "summary | violation | throughput");
  report->add_option("--out", o.out, "Output CSV (stdout if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen_zoo) return cmd_gen_zoo(o, out);
    if (*gen_profiles) return cmd_gen_profiles(o, out);
    if (*stitch) return cmd_stitch(o, out);
    if (*profile) return cmd_profile(o, out);
    if (*optimize) return cmd_optimize(o, out);
    if (*preload) return cmd_preload(o, out);
    if (*simulate) return cmd_simulate(o, out);
    if (*experiment) return cmd_experiment(o, out);
    if (*report) return cmd_report(o, out);
  } catch (const Error& e) {
    err << "error kind=" << to_string(e.kind()) << " message=" << quote(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error kind=internal message=" << quote(e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace loom::cli
