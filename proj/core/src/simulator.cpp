#include "loom/simulator.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <queue>

#include "loom/errors.hpp"
#include "loom/estimator.hpp"
#include "loom/rng.hpp"

namespace loom {

namespace {

constexpr PolicyKind kAllKinds[] = {PolicyKind::SV_AO_P, PolicyKind::SV_AO_NP, PolicyKind::SV_LO_P,   PolicyKind::SV_LO_NP,
                                    PolicyKind::AV_P,    PolicyKind::AV_NP,    PolicyKind::SPARSELOOM};

bool is_av(PolicyKind k) { return k == PolicyKind::AV_P || k == PolicyKind::AV_NP; }

// Whole variant on the processor with the lowest total latency.
std::pair<std::vector<int>, double> monolithic_placement(const StitchMap& m, const ProfileTable& table) {
  int best_proc = 0;
  double best = std::numeric_limits<double>::infinity();
  for (const Processor& p : table.processors()) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m.donors.size(); ++j) {
      sum += table.latency(m.task_id, m.donors[j], static_cast<int>(j) + 1, p.proc_id);
    }
    if (sum < best) {
      best = sum;
      best_proc = p.proc_id;
    }
  }
  return {std::vector<int>(m.donors.size(), best_proc), best};
}

std::pair<std::vector<int>, double> baseline_placement(const Policy& policy, const StitchMap& m,
                                                       const SelectionContext& ctx) {
  if (!policy.partitioned()) return monolithic_placement(m, ctx.table);
  const PlacementOrder order = policy.fixed_order.value_or(default_baseline_order(ctx.table.processors(), m.subgraph_count()));
  return {order.procs, estimate_latency(m, order, ctx.table, ctx.comm_ms)};
}

}  // namespace

std::string_view to_string(PolicyKind kind) noexcept {
  switch (kind) {
    case PolicyKind::SV_AO_P: return "SV_AO_P";
    case PolicyKind::SV_AO_NP: return "SV_AO_NP";
    case PolicyKind::SV_LO_P: return "SV_LO_P";
    case PolicyKind::SV_LO_NP: return "SV_LO_NP";
    case PolicyKind::AV_P: return "AV_P";
    case PolicyKind::AV_NP: return "AV_NP";
    case PolicyKind::SPARSELOOM: return "SPARSELOOM";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view text) {
  std::string norm(text);
  std::replace(norm.begin(), norm.end(), '-', '_');
  std::transform(norm.begin(), norm.end(), norm.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (PolicyKind k : kAllKinds) {
    if (norm == to_string(k)) return k;
  }
  throw Error(ErrorKind::parse, "unknown policy '" + std::string(text) + "'");
}

bool Policy::partitioned() const noexcept {
  switch (kind) {
    case PolicyKind::SV_AO_NP:
    case PolicyKind::SV_LO_NP:
    case PolicyKind::AV_NP: return false;
    default: return true;
  }
}

std::vector<Policy> all_policies() {
  std::vector<Policy> out;
  for (PolicyKind k : kAllKinds) out.push_back(Policy{k, std::nullopt});
  return out;
}

TaskSelection select_for_policy(const Policy& policy, int task_id, const SelectionContext& ctx, const SloConfig& slo) {
  if (policy.kind == PolicyKind::SPARSELOOM) {
    for (const TaskSelection& s : select_workload(policy, ctx, slo)) {
      if (s.task_id == task_id) return s;
    }
    throw Error(ErrorKind::missing_key, "no task " + std::to_string(task_id) + " in the zoo");
  }
  const TaskZoo& tz = ctx.zoo.task(task_id);
  TaskSelection sel;
  sel.task_id = task_id;
  std::optional<double> best_acc;
  for (const StitchMap& m : enumerate_original(tz.task)) {
    const double acc = ctx.table.variant_accuracy(task_id, m.donors.front());
    auto [placement, lat] = baseline_placement(policy, m, ctx);
    bool better = false;
    switch (policy.kind) {
      case PolicyKind::SV_AO_P:
      case PolicyKind::SV_AO_NP: better = !best_acc || acc > *best_acc; break;
      case PolicyKind::SV_LO_P:
      case PolicyKind::SV_LO_NP: better = !sel.dispatched || lat < sel.planned_latency_ms; break;
      default: {
        const TaskSlo& t = slo.at(task_id);
        better = acc >= t.acc_floor && lat <= t.lat_ceiling_ms && (!sel.dispatched || lat < sel.planned_latency_ms);
      }
    }
    if (better) {
      best_acc = acc;
      sel.dispatched = true;
      sel.map = m;
      sel.placement = std::move(placement);
      sel.planned_latency_ms = lat;
    }
  }
  sel.planning_infeasible = is_av(policy.kind) && !sel.dispatched;
  return sel;
}

std::vector<TaskSelection> select_workload(const Policy& policy, const SelectionContext& ctx, const SloConfig& slo,
                                           PlanResult* plan_out) {
  std::vector<TaskSelection> out;
  if (policy.kind != PolicyKind::SPARSELOOM) {
    for (int t : ctx.zoo.task_ids()) out.push_back(select_for_policy(policy, t, ctx, slo));
    return out;
  }
  const ProfileLatency latency(ctx.table, ctx.comm_ms);
  const FeasibleSets feasible = compute_feasible_sets(ctx.zoo, ctx.planner_accuracy, latency, slo, ctx.orders);
  std::optional<PlanResult> result;
  try {
    result = plan_from_feasible(feasible, latency, slo, ctx.orders);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::all_infeasible) throw;
  }
  for (const auto& [task_id, maps] : feasible) {
    TaskSelection sel;
    sel.task_id = task_id;
    sel.planning_infeasible = maps.empty();
    if (result) {
      const TaskChoice& c = result->per_task.at(task_id);
      if (c.feasible()) {
        sel.dispatched = true;
        sel.map = *c.map;
        sel.placement = result->best_order.procs;
        sel.planned_latency_ms = c.latency_ms;
      }
    }
    out.push_back(std::move(sel));
  }
  if (plan_out && result) *plan_out = *result;
  return out;
}

std::vector<std::vector<int>> all_permutations(std::vector<int> ids) {
  std::sort(ids.begin(), ids.end());
  std::vector<std::vector<int>> out;
  do {
    out.push_back(ids);
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

double true_accuracy(const ProfileTable& table, const StitchMap& map) {
  if (map.is_constant()) return table.variant_accuracy(map.task_id, map.donors.front());
  return table.stitched_truth(map);
}

namespace {

// Consecutive positions on the same processor run as one unit.
struct Segment {
  int proc_id = 0;
  double duration_ms = 0.0;
  double switch_ms = 0.0;  // charged on the first query only
};

struct Job {
  int task = 0;  // index into the arrival order
  int query = 0;
  int segment = 0;
};

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  bool finish = false;
  int proc_id = 0;  // finish events
  Job job;          // ready events

  bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

}  // namespace

RunResult simulate_run(std::span<const TaskSelection> selections, const SloConfig& slo, const ProfileTable& table,
                       const PreloadPlan* preload, std::span<const int> arrival, int queries_per_task,
                       const SimOptions& options, std::uint64_t seed) {
  if (queries_per_task < 1) throw Error(ErrorKind::invalid_argument, "queries_per_task must be >= 1");
  if (arrival.size() != selections.size()) {
    throw Error(ErrorKind::length_mismatch, "arrival order must list every selected task once");
  }
  if (!(options.runtime_jitter >= 0.0 && options.runtime_jitter < 1.0) || options.hop_cost_ms < 0.0) {
    throw Error(ErrorKind::invalid_parameter, "runtime jitter must lie in [0,1) and hop cost must be >= 0");
  }

  const std::size_t n = selections.size();
  std::vector<const TaskSelection*> tasks;
  for (int id : arrival) {
    auto it = std::find_if(selections.begin(), selections.end(), [&](const TaskSelection& s) { return s.task_id == id; });
    if (it == selections.end()) throw Error(ErrorKind::inconsistent_plan, "arrival names unknown task " + std::to_string(id));
    if (std::find(tasks.begin(), tasks.end(), &*it) != tasks.end()) {
      throw Error(ErrorKind::inconsistent_plan, "arrival lists task " + std::to_string(id) + " twice");
    }
    tasks.push_back(&*it);
  }

  std::vector<std::vector<Segment>> segments(n);
  for (std::size_t k = 0; k < n; ++k) {
    const TaskSelection& s = *tasks[k];
    if (!s.dispatched) continue;
    if (s.placement.size() != s.map.donors.size() || s.map.donors.empty()) {
      throw Error(ErrorKind::inconsistent_plan, "task " + std::to_string(s.task_id) + " placement does not cover its subgraphs");
    }
    for (std::size_t j = 0; j < s.map.donors.size(); ++j) {
      const int position = static_cast<int>(j) + 1;
      double lat = 0.0;
      try {
        lat = table.latency(s.task_id, s.map.donors[j], position, s.placement[j]);
      } catch (const Error& e) {
        throw Error(ErrorKind::inconsistent_plan, std::string("plan references unknown subgraph: ") + e.what());
      }
      double sw = 0.0;
      if (preload && options.charge_switch && !preload->contains({s.task_id, s.map.donors[j], position})) {
        sw = options.switch_multipliers.factor() * lat;
      }
      if (segments[k].empty() || segments[k].back().proc_id != s.placement[j]) segments[k].push_back({s.placement[j], 0.0, 0.0});
      segments[k].back().duration_ms += lat;
      segments[k].back().switch_ms += sw;
    }
  }

  Rng rng(seed);
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;
  std::map<int, std::deque<Job>> queues;
  std::map<int, std::optional<Job>> running;
  std::vector<double> release(n, 0.0);
  RunResult result;
  result.tasks.resize(n);

  auto start_next = [&](int proc, double now) {
    auto& q = queues[proc];
    if (running[proc] || q.empty()) return;
    const Job job = q.front();
    q.pop_front();
    const Segment& seg = segments[static_cast<std::size_t>(job.task)][static_cast<std::size_t>(job.segment)];
    double d = seg.duration_ms;
    if (options.runtime_jitter > 0.0) d *= rng.uniform(1.0 - options.runtime_jitter, 1.0 + options.runtime_jitter);
    if (job.query == 1) d += seg.switch_ms;
    running[proc] = job;
    if (options.record_trace) {
      result.trace.push_back({tasks[static_cast<std::size_t>(job.task)]->task_id, job.query, job.segment + 1, proc, now, now + d});
    }
    events.push(Event{now + d, seq++, true, proc, {}});
  };

  for (std::size_t k = 0; k < n; ++k) {
    result.tasks[k].task_id = tasks[k]->task_id;
    if (!tasks[k]->dispatched) continue;
    events.push(Event{0.0, seq++, false, 0, Job{static_cast<int>(k), 1, 0}});
  }

  double now = 0.0;
  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();
    now = ev.time;
    if (!ev.finish) {
      const int proc = segments[static_cast<std::size_t>(ev.job.task)][static_cast<std::size_t>(ev.job.segment)].proc_id;
      queues[proc].push_back(ev.job);
      start_next(proc, now);
      continue;
    }
    const Job job = *running[ev.proc_id];
    running[ev.proc_id].reset();
    const auto k = static_cast<std::size_t>(job.task);
    if (static_cast<std::size_t>(job.segment) + 1 < segments[k].size()) {
      events.push(Event{now + options.hop_cost_ms, seq++, false, 0, Job{job.task, job.query, job.segment + 1}});
    } else {
      result.tasks[k].query_latency_ms.push_back(now - release[k]);
      ++result.tasks[k].completed;
      if (job.query < queries_per_task) {
        release[k] = now;
        events.push(Event{now, seq++, false, 0, Job{job.task, job.query + 1, 0}});
      }
    }
    start_next(ev.proc_id, now);
  }
  result.makespan_ms = now;

  int violated = 0;
  int completed = 0;
  double latency_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    TaskOutcome& o = result.tasks[k];
    const TaskSelection& s = *tasks[k];
    const TaskSlo& t = slo.at(s.task_id);
    if (!s.dispatched) {
      o.violated = true;
      ++result.infeasible_tasks;
    } else {
      double sum = 0.0;
      for (double l : o.query_latency_ms) sum += l;
      o.mean_latency_ms = sum / o.completed;
      latency_sum += sum;
      completed += o.completed;
      o.violated = o.mean_latency_ms > t.lat_ceiling_ms || true_accuracy(table, s.map) < t.acc_floor;
    }
    if (o.violated) ++violated;
  }
  result.violation_rate = n ? static_cast<double>(violated) / static_cast<double>(n) : 0.0;
  result.mean_latency_ms = completed ? latency_sum / completed : 0.0;
  result.throughput_qps = result.makespan_ms > 0.0 ? completed / result.makespan_ms * 1000.0 : 0.0;
  return result;
}

SimReport run_simulation(const WorkloadSpec& workload, std::span<const Policy> policies,
                         std::span<const SloConfig> configs, const SelectionContext& ctx,
                         const PreloadPlan* sparseloom_preload, const SimOptions& options, std::uint64_t seed) {
  const auto perms = workload.arrival_permutations.empty() ? all_permutations(workload.task_ids)
                                                           : workload.arrival_permutations;
  SimReport report;
  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    const Policy& policy = policies[pi];
    const PreloadPlan* preload = policy.kind == PolicyKind::SPARSELOOM ? sparseloom_preload : nullptr;
    for (const SloConfig& config : configs) {
      auto selections = select_workload(policy, ctx, config);
      std::erase_if(selections, [&](const TaskSelection& s) {
        return std::find(workload.task_ids.begin(), workload.task_ids.end(), s.task_id) == workload.task_ids.end();
      });
      for (std::size_t k = 0; k < perms.size(); ++k) {
        const std::uint64_t run_seed =
            derive_seed(seed, {static_cast<std::uint64_t>(policy.kind), static_cast<std::uint64_t>(config.config_id), k});
        const RunResult r = simulate_run(selections, config, ctx.table, preload, perms[k], workload.queries_per_task,
                                         options, run_seed);
        report.rows.push_back(SimRow{policy.kind, config.config_id, static_cast<int>(k), seed, r.violation_rate,
                                     r.throughput_qps, r.mean_latency_ms, r.infeasible_tasks});
      }
    }
  }
  return report;
}

std::vector<SummaryRow> aggregate(const SimReport& report) {
  std::map<std::pair<int, int>, SummaryRow> groups;
  for (const SimRow& r : report.rows) {
    SummaryRow& g = groups[{static_cast<int>(r.policy), r.config_id}];
    g.policy = r.policy;
    g.config_id = r.config_id;
    ++g.runs;
    g.violation_rate += r.violation_rate;
    g.throughput_qps += r.throughput_qps;
  }
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    g.violation_rate /= g.runs;
    g.throughput_qps /= g.runs;
    out.push_back(g);
  }
  return out;
}

}  // namespace loom
