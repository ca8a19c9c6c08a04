#include "loom/experiments.hpp"

#include <algorithm>
#include <future>
#include <limits>

#include <json.hpp>

#include "loom/errors.hpp"
#include "loom/preloader.hpp"
#include "loom/rng.hpp"
#include "loom/simulator.hpp"
#include "loom/slo.hpp"

namespace loom {

using nlohmann::json;

namespace {

constexpr std::pair<ZooTemplate, std::string_view> kTemplates[] = {
    {ZooTemplate::intel_appendixA, "intel_appendixA"},
    {ZooTemplate::jetson_appendixA, "jetson_appendixA"},
    {ZooTemplate::custom, "custom"}};

constexpr std::pair<Sweep, std::string_view> kSweeps[] = {
    {Sweep::slo25, "slo25"},
    {Sweep::acc_guaranteed, "acc_guaranteed"},
    {Sweep::lat_guaranteed, "lat_guaranteed"},
    {Sweep::budget, "budget"},
    {Sweep::order_sensitivity, "order_sensitivity"},
    {Sweep::profiling_cost, "profiling_cost"},
    {Sweep::estimator_eval, "estimator_eval"}};

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }
std::string header(std::uint64_t seed) { return "# seed=" + std::to_string(seed) + "\n"; }

bool uses_seeds(Sweep s) { return s != Sweep::order_sensitivity && s != Sweep::profiling_cost; }

struct SeedResult {
  std::vector<BundleFile> files;
  SimReport report;
  std::vector<BudgetRow> budget_rows;
  std::vector<InfeasibleRow> infeasible_rows;
  std::vector<RecallRow> recall_rows;
  std::vector<LatencyErrorRow> latency_error_rows;
};

std::vector<std::vector<int>> arrival_orders(const ExperimentSpec& spec, const Zoo& zoo) {
  auto perms = all_permutations(zoo.task_ids());
  if (spec.permutations > 0 && static_cast<std::size_t>(spec.permutations) < perms.size()) {
    perms.resize(static_cast<std::size_t>(spec.permutations));
  }
  return perms;
}

SimOptions sim_options(const ExperimentSpec& spec) {
  SimOptions o;
  o.switch_multipliers.compile_x = spec.compile_x;
  o.switch_multipliers.load_x = spec.load_x;
  return o;
}

std::vector<FeasibleSets> feasible_per_config(const World& w, const AccuracyModel& acc, double comm_ms,
                                              std::span<const SloConfig> configs) {
  const ProfileLatency lat(w.table, comm_ms);
  std::vector<FeasibleSets> out;
  for (const SloConfig& c : configs) out.push_back(compute_feasible_sets(w.zoo, acc, lat, c, w.orders));
  return out;
}

PreloadPlan hotness_preload(const World& w, std::span<const SloConfig> configs, std::span<const FeasibleSets> feasible,
                            double fraction) {
  const auto sets = satisfying_sets(configs, feasible);
  return greedy_preload(compute_hotness(sets), w.zoo, budget_from_fraction(w.zoo, fraction));
}

SeedResult run_slo_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedResult out;
  const World w = build_world(spec, seed, !spec.use_truth);
  const TruthAccuracy truth(w.table);
  const PredictedAccuracy predicted(w.table, w.estimators);
  const AccuracyModel& acc = spec.use_truth ? static_cast<const AccuracyModel&>(truth) : predicted;

  std::vector<SloConfig> configs;
  switch (spec.sweep) {
    case Sweep::acc_guaranteed:
      configs = generate_guaranteed_slos(w.zoo, w.table, w.orders, GuaranteeMode::accuracy_guaranteed);
      break;
    case Sweep::lat_guaranteed:
      configs = generate_guaranteed_slos(w.zoo, w.table, w.orders, GuaranteeMode::latency_guaranteed);
      break;
    default: configs = generate_slo_configs(w.zoo, w.table, w.orders);
  }
  const auto feasible = feasible_per_config(w, acc, spec.comm_ms, configs);
  const PreloadPlan preload = hotness_preload(w, configs, feasible, spec.preload_budget);

  const ProfileLatency lat(w.table, spec.comm_ms);
  std::vector<PlanResult> plans;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    try {
      plans.push_back(plan_from_feasible(feasible[c], lat, configs[c], w.orders));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::all_infeasible) throw;
      plans.push_back(empty_plan(feasible[c], configs[c].config_id));
    }
  }

  const SelectionContext ctx{w.zoo, w.table, acc, w.orders, spec.comm_ms};
  const auto policies = all_policies();
  for (const SloConfig& c : configs) {
    for (const Policy& p : policies) {
      const auto sel = select_workload(p, ctx, c);
      const int n = static_cast<int>(std::count_if(sel.begin(), sel.end(), [](const TaskSelection& s) { return s.planning_infeasible; }));
      out.infeasible_rows.push_back({seed, c.config_id, p.kind, n});
    }
  }

  const WorkloadSpec workload{w.zoo.task_ids(), spec.queries, arrival_orders(spec, w.zoo)};
  out.report = run_simulation(workload, policies, configs, ctx, &preload, sim_options(spec), seed);

  const std::string dir = seed_dir(seed) + "/";
  out.files.push_back({dir + "slo_configs.json", slo_configs_to_json(configs)});
  out.files.push_back({dir + "plans.json", plans_to_json(plans, w.table.processors(), seed)});
  out.files.push_back({dir + "preload.json", preload_to_json(preload, seed)});
  return out;
}

SeedResult run_budget_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedResult out;
  const World w = build_world(spec, seed, !spec.use_truth);
  const TruthAccuracy truth(w.table);
  const PredictedAccuracy predicted(w.table, w.estimators);
  const AccuracyModel& acc = spec.use_truth ? static_cast<const AccuracyModel&>(truth) : predicted;

  const auto configs = generate_slo_configs(w.zoo, w.table, w.orders);
  const auto feasible = feasible_per_config(w, acc, spec.comm_ms, configs);
  const HotnessTable hotness = compute_hotness(satisfying_sets(configs, feasible));
  const SelectionContext ctx{w.zoo, w.table, acc, w.orders, spec.comm_ms};
  const WorkloadSpec workload{w.zoo.task_ids(), spec.queries, arrival_orders(spec, w.zoo)};
  const std::vector<Policy> policies{Policy{PolicyKind::SPARSELOOM, std::nullopt}};

  auto run = [&](double frac, const PreloadPlan& plan) {
    const SimReport r = run_simulation(workload, policies, configs, ctx, &plan, sim_options(spec), seed);
    BudgetRow row{seed, frac, plan.total_mem_bytes, plan.size(), 0.0, 0.0};
    for (const SimRow& x : r.rows) {
      row.violation_rate += x.violation_rate;
      row.throughput_qps += x.throughput_qps;
    }
    row.violation_rate /= static_cast<double>(r.rows.size());
    row.throughput_qps /= static_cast<double>(r.rows.size());
    out.budget_rows.push_back(row);
    out.report.rows.insert(out.report.rows.end(), r.rows.begin(), r.rows.end());
  };

  for (double frac : spec.budgets) {
    const PreloadPlan plan = greedy_preload(hotness, w.zoo, budget_from_fraction(w.zoo, frac));
    out.files.push_back({seed_dir(seed) + "/preload_" + format_double(frac) + ".json", preload_to_json(plan, seed)});
    run(frac, plan);
  }
  run(-1.0, full_preload(w.zoo));
  return out;
}

SeedResult run_estimator_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  SeedResult out;
  const World w = build_world(spec, seed, true);
  for (const TaskZoo& tz : w.zoo.tasks()) {
    const auto candidates = enumerate_stitched(tz.task);
    const int k = std::min<int>(10, static_cast<int>(candidates.size()));
    out.recall_rows.push_back({seed, tz.task.task_id, k, top_k_recall(w.estimators.at(tz.task.task_id), candidates, w.table, k)});
  }
  const double hop = spec.hop_cost_frac * mean_stage_latency(w.table);
  for (double h : {0.0, hop}) {
    std::vector<double> estimates, truths;
    for (const TaskZoo& tz : w.zoo.tasks()) {
      for (const StitchMap& m : enumerate_stitched(tz.task)) {
        for (const PlacementOrder& o : w.orders) {
          estimates.push_back(estimate_latency(m, o, w.table));
          truths.push_back(simulate_single_query(m, o.procs, w.table, h));
        }
      }
    }
    out.latency_error_rows.push_back({seed, h, latency_error(estimates, truths)});
  }
  return out;
}

SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  try {
    switch (spec.sweep) {
      case Sweep::budget: return run_budget_seed(spec, seed);
      case Sweep::estimator_eval: return run_estimator_seed(spec, seed);
      default: return run_slo_seed(spec, seed);
    }
  } catch (const Error& e) {
    throw Error(e.kind(), "experiment '" + spec.name + "' seed " + std::to_string(seed) + ": " + e.what());
  }
}

void add_order_sensitivity(ExperimentBundle& b, std::uint64_t seed) {
  const OrderLatencyFixture fx = resnet_order_fixture();
  std::string table = header(seed) + "order";
  for (const auto& v : fx.variant_labels) table += "," + v;
  table += "\n";
  for (std::size_t o = 0; o < fx.order_labels.size(); ++o) {
    table += fx.order_labels[o];
    for (double x : fx.latency_ms[o]) table += "," + format_double(x);
    table += "\n";
  }
  const FixtureLatency lat(fx, "DPQ", "CGN");
  std::vector<PlacementOrder> orders;
  for (const auto& label : fx.order_labels) orders.push_back(lat.order_for(label));
  std::sort(orders.begin(), orders.end());
  std::string best = header(seed) + "variant,best_order,latency_ms\n";
  for (const auto& v : fx.variant_labels) {
    const FeasibleSets feasible{{1, {lat.map_for(1, v)}}};
    const OrderChoice c = choose_order(feasible, lat, orders);
    best += v + "," + lat.order_label(c.order) + "," + format_double(c.mean_latency_ms) + "\n";
  }
  b.files.push_back({"order_table.csv", table});
  b.files.push_back({"best_orders.csv", best});
}

void add_profiling_cost(ExperimentBundle& b, const ExperimentSpec& spec, std::uint64_t seed) {
  const auto S = static_cast<std::uint64_t>(spec.S), P = static_cast<std::uint64_t>(spec.P);
  std::string csv = header(seed) + "T,V,S,P,exhaustive_original,exhaustive_stitched,with_estimators,training_runs,reduction\n";
  for (std::uint64_t T = 1; T <= static_cast<std::uint64_t>(spec.T); ++T) {
    for (std::uint64_t V = 2; V <= static_cast<std::uint64_t>(spec.V); ++V) {
      const auto orig = profiling_cost(T, V, S, P, false, false);
      const auto stitched = profiling_cost(T, V, S, P, true, false);
      const auto est = profiling_cost(T, V, S, P, true, true);
      const double reduction = 1.0 - static_cast<double>(est) / static_cast<double>(stitched);
      csv += std::to_string(T) + "," + std::to_string(V) + "," + std::to_string(S) + "," + std::to_string(P) + "," +
             std::to_string(orig) + "," + std::to_string(stitched) + "," + std::to_string(est) + "," +
             std::to_string(estimator_training_runs(T, static_cast<std::uint64_t>(spec.train_n))) + "," +
             format_double(reduction) + "\n";
    }
  }
  b.files.push_back({"profiling_cost.csv", csv});
}

void add_seed_outputs(ExperimentBundle& b, const ExperimentSpec& spec, std::uint64_t seed) {
  switch (spec.sweep) {
    case Sweep::budget: {
      std::string csv = header(seed) + "budget_frac,seed,preloaded_bytes,preloaded_subgraphs,violation_rate,throughput_qps\n";
      std::map<double, std::pair<double, int>> per_budget;
      for (const BudgetRow& r : b.budget_rows) {
        const std::string frac = r.budget_frac < 0 ? "full" : format_double(r.budget_frac);
        csv += frac + "," + std::to_string(r.seed) + "," + std::to_string(r.preloaded_bytes) + "," +
               std::to_string(r.preloaded_subgraphs) + "," + format_double(r.violation_rate) + "," +
               format_double(r.throughput_qps) + "\n";
        if (r.budget_frac >= 0) {
          per_budget[r.budget_frac].first += r.violation_rate;
          ++per_budget[r.budget_frac].second;
        }
      }
      std::string plot = header(seed) + "budget_frac,violation_rate\n";
      for (const auto& [frac, acc] : per_budget) plot += format_double(frac) + "," + format_double(acc.first / acc.second) + "\n";
      b.files.push_back({"budget_sweep.csv", csv});
      b.files.push_back({"plot_budget.csv", plot});
      b.files.push_back({"report.csv", report_csv(b.report, seed)});
      break;
    }
    case Sweep::estimator_eval:
      b.files.push_back({"estimator_recall.csv", recall_csv(b.recall_rows, seed)});
      b.files.push_back({"latency_error.csv", latency_error_csv(b.latency_error_rows, seed)});
      break;
    default: {
      const auto summary = aggregate(b.report);
      b.files.push_back({"report.csv", report_csv(b.report, seed)});
      b.files.push_back({"summary.csv", summary_csv(summary, seed)});
      std::string inf = header(seed) + "seed,config_id,policy,planning_infeasible\n";
      for (const InfeasibleRow& r : b.infeasible_rows) {
        inf += std::to_string(r.seed) + "," + std::to_string(r.config_id) + "," + std::string(to_string(r.policy)) + "," +
               std::to_string(r.planning_infeasible) + "\n";
      }
      b.files.push_back({"planning_infeasible.csv", inf});
      // Per-policy means, one point per policy, for bar-chart style plots.
      std::map<PolicyKind, std::pair<double, double>> sums;
      std::map<PolicyKind, int> counts;
      for (const SummaryRow& r : summary) {
        sums[r.policy].first += r.violation_rate;
        sums[r.policy].second += r.throughput_qps;
        ++counts[r.policy];
      }
      std::string viol = header(seed) + "policy,violation_rate\n";
      std::string thr = header(seed) + "policy,throughput_qps\n";
      for (const auto& [p, s] : sums) {
        viol += std::string(to_string(p)) + "," + format_double(s.first / counts[p]) + "\n";
        thr += std::string(to_string(p)) + "," + format_double(s.second / counts[p]) + "\n";
      }
      b.files.push_back({"plot_violation.csv", viol});
      b.files.push_back({"plot_throughput.csv", thr});
    }
  }
}

}  // namespace

std::string_view to_string(ZooTemplate t) noexcept {
  for (const auto& [k, name] : kTemplates) {
    if (k == t) return name;
  }
  return "?";
}

std::string_view to_string(Sweep s) noexcept {
  for (const auto& [k, name] : kSweeps) {
    if (k == s) return name;
  }
  return "?";
}

ZooTemplate parse_zoo_template(std::string_view text) {
  for (const auto& [k, name] : kTemplates) {
    if (name == text) return k;
  }
  throw Error(ErrorKind::parse, "unknown zoo template '" + std::string(text) + "'");
}

Sweep parse_sweep(std::string_view text) {
  for (const auto& [k, name] : kSweeps) {
    if (name == text) return k;
  }
  throw Error(ErrorKind::parse, "unknown sweep '" + std::string(text) + "'");
}

void ExperimentSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, "experiment spec: " + msg); };
  if (T < 1 || V < 1 || S < 1 || P < 1) fail("T, V, S and P must be >= 1");
  if (S > P) fail("S must not exceed P");
  if (P > 3) fail("at most three processors are modelled");
  if (uses_seeds(sweep) && seeds.empty()) fail("at least one seed is required");
  for (double b : budgets) {
    if (!(b >= 0.0 && b <= 1.0)) fail("budget fractions must lie in [0,1]");
  }
  if (!(preload_budget >= 0.0 && preload_budget <= 1.0)) fail("preload_budget must lie in [0,1]");
  if (queries < 1) fail("queries must be >= 1");
  if (permutations < 0) fail("permutations must be >= 0");
  if (train_n < 1) fail("train_n must be >= 1");
  if (sigma_acc < 0.0 || comm_ms < 0.0 || hop_cost_frac < 0.0 || compile_x < 0.0 || load_x < 0.0) {
    fail("sigma_acc, comm_ms, hop_cost_frac, compile_x and load_x must be >= 0");
  }
  if (zoo_template == ZooTemplate::intel_appendixA && (T != 4 || V != 10 || S != 3)) fail("intel template is T=4, V=10, S=3");
  if (zoo_template == ZooTemplate::jetson_appendixA && (T != 4 || V != 10 || S != 2)) fail("jetson template is T=4, V=10, S=2");
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("experiment spec: ") + e.what());
  }
  ExperimentSpec s;
  try {
    if (j.contains("zoo_template")) s.zoo_template = parse_zoo_template(j.at("zoo_template").get<std::string>());
    if (s.zoo_template == ZooTemplate::jetson_appendixA) {
      s.S = 2;
      s.P = 2;
    }
    s.name = j.value("name", s.name);
    s.T = j.value("T", s.T);
    s.V = j.value("V", s.V);
    s.S = j.value("S", s.S);
    s.P = j.value("P", s.P);
    s.seeds = j.value("seeds", s.seeds);
    s.budgets = j.value("budgets", s.budgets);
    if (j.contains("sweep")) s.sweep = parse_sweep(j.at("sweep").get<std::string>());
    s.queries = j.value("queries", s.queries);
    s.permutations = j.value("permutations", s.permutations);
    s.sigma_acc = j.value("sigma_acc", s.sigma_acc);
    s.train_n = j.value("train_n", s.train_n);
    s.use_truth = j.value("use_truth", s.use_truth);
    s.comm_ms = j.value("comm_ms", s.comm_ms);
    s.hop_cost_frac = j.value("hop_cost_frac", s.hop_cost_frac);
    s.preload_budget = j.value("preload_budget", s.preload_budget);
    s.compile_x = j.value("compile_x", s.compile_x);
    s.load_x = j.value("load_x", s.load_x);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::string experiment_spec_to_json(const ExperimentSpec& s) {
  const json j{{"name", s.name},
               {"zoo_template", std::string(to_string(s.zoo_template))},
               {"T", s.T},
               {"V", s.V},
               {"S", s.S},
               {"P", s.P},
               {"seeds", s.seeds},
               {"budgets", s.budgets},
               {"sweep", std::string(to_string(s.sweep))},
               {"queries", s.queries},
               {"permutations", s.permutations},
               {"sigma_acc", s.sigma_acc},
               {"train_n", s.train_n},
               {"use_truth", s.use_truth},
               {"comm_ms", s.comm_ms},
               {"hop_cost_frac", s.hop_cost_frac},
               {"preload_budget", s.preload_budget},
               {"compile_x", s.compile_x},
               {"load_x", s.load_x}};
  return j.dump(2) + "\n";
}

Zoo make_zoo(const ExperimentSpec& spec) {
  switch (spec.zoo_template) {
    case ZooTemplate::intel_appendixA: return intel_template_zoo();
    case ZooTemplate::jetson_appendixA: return jetson_template_zoo();
    case ZooTemplate::custom: return custom_zoo(spec.T, spec.V, spec.S);
  }
  throw Error(ErrorKind::invalid_argument, "unknown zoo template");
}

GenParams make_gen_params(const ExperimentSpec& spec) {
  GenParams p = spec.zoo_template == ZooTemplate::jetson_appendixA ? jetson_gen_params() : intel_gen_params();
  p.sigma_acc = spec.sigma_acc;
  return p;
}

std::map<int, AccuracyEstimator> train_estimators(const Zoo& zoo, const ProfileTable& table, int train_n,
                                                  std::uint64_t seed) {
  std::map<int, AccuracyEstimator> out;
  for (const TaskZoo& tz : zoo.tasks()) {
    const auto samples = sample_training_set(tz.task, table, train_n, derive_seed(seed, {5}));
    out.emplace(tz.task.task_id,
                train_accuracy_estimator(samples, BoostParams{}, derive_seed(seed, {6, static_cast<std::uint64_t>(tz.task.task_id)})));
  }
  return out;
}

World build_world(const ExperimentSpec& spec, std::uint64_t seed, bool with_estimators) {
  World w;
  w.seed = seed;
  w.zoo = make_zoo(spec);
  w.table = generate_synthetic(w.zoo, default_processors(spec.P), make_gen_params(spec), seed);
  w.orders = enumerate_orders(spec.P, spec.S);
  if (with_estimators) w.estimators = train_estimators(w.zoo, w.table, spec.train_n, seed);
  return w;
}

double simulate_single_query(const StitchMap& map, std::span<const int> placement, const ProfileTable& table,
                             double hop_cost_ms) {
  TaskSelection sel;
  sel.task_id = map.task_id;
  sel.dispatched = true;
  sel.map = map;
  sel.placement.assign(placement.begin(), placement.end());
  SloConfig slo;
  slo.per_task[map.task_id] = {0.0, std::numeric_limits<double>::infinity()};
  SimOptions options;
  options.hop_cost_ms = hop_cost_ms;
  const int arrival[] = {map.task_id};
  const RunResult r = simulate_run({&sel, 1}, slo, table, nullptr, arrival, 1, options, 0);
  return r.tasks.front().query_latency_ms.front();
}

double mean_stage_latency(const ProfileTable& table) {
  double sum = 0.0;
  std::size_t n = 0;
  for (int t : table.task_ids()) {
    for (int i = 1; i <= table.variant_count(t); ++i) {
      for (int j = 1; j <= table.subgraph_count(t); ++j) {
        for (const Processor& p : table.processors()) {
          sum += table.latency(t, i, j, p.proc_id);
          ++n;
        }
      }
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

const BundleFile* ExperimentBundle::find(std::string_view path) const {
  for (const BundleFile& f : files) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

ExperimentBundle run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentBundle b;
  const std::uint64_t first_seed = spec.seeds.empty() ? 0 : spec.seeds.front();
  b.files.push_back({"spec.json", experiment_spec_to_json(spec)});

  if (spec.sweep == Sweep::order_sensitivity) {
    add_order_sensitivity(b, first_seed);
  } else if (spec.sweep == Sweep::profiling_cost) {
    add_profiling_cost(b, spec, first_seed);
  } else {
    std::vector<std::future<SeedResult>> futures;
    for (std::uint64_t seed : spec.seeds) {
      futures.push_back(std::async(std::launch::async, [&spec, seed] { return run_seed(spec, seed); }));
    }
    std::vector<SeedResult> results;
    for (auto& f : futures) results.push_back(f.get());
    for (SeedResult& r : results) {
      b.files.insert(b.files.end(), r.files.begin(), r.files.end());
      b.report.rows.insert(b.report.rows.end(), r.report.rows.begin(), r.report.rows.end());
      b.budget_rows.insert(b.budget_rows.end(), r.budget_rows.begin(), r.budget_rows.end());
      b.infeasible_rows.insert(b.infeasible_rows.end(), r.infeasible_rows.begin(), r.infeasible_rows.end());
      b.recall_rows.insert(b.recall_rows.end(), r.recall_rows.begin(), r.recall_rows.end());
      b.latency_error_rows.insert(b.latency_error_rows.end(), r.latency_error_rows.begin(), r.latency_error_rows.end());
    }
    add_seed_outputs(b, spec, first_seed);
  }
  std::sort(b.files.begin(), b.files.end(), [](const BundleFile& x, const BundleFile& y) { return x.path < y.path; });
  return b;
}

void write_bundle(const ExperimentBundle& bundle, const std::filesystem::path& out_dir) {
  for (const BundleFile& f : bundle.files) write_file_atomic(out_dir / f.path, f.contents);
}

}  // namespace loom
