#include "loom/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "loom/errors.hpp"

namespace loom {

using nlohmann::json;

namespace {

template <typename F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string(what) + ": " + e.what());
  }
}

json parse_json(const std::string& text, const char* what) {
  return parse_guard(what, [&] { return json::parse(text); });
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string seed_header(std::uint64_t seed) { return "# seed=" + std::to_string(seed) + "\n"; }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorKind::parse, "not a number: '" + s + "'");
  return v;
}

template <typename Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorKind::parse, "not an integer: '" + s + "'");
  return v;
}

json tuning_json(const ProcessorTuning& t) {
  return {{"unstructured_gain", t.unstructured_gain},
          {"structured_gain", t.structured_gain},
          {"fp16_scale", t.fp16_scale},
          {"int8_scale", t.int8_scale}};
}

ProcessorTuning tuning_from(const json& j) {
  return {j.at("unstructured_gain").get<double>(), j.at("structured_gain").get<double>(),
          j.at("fp16_scale").get<double>(), j.at("int8_scale").get<double>()};
}

json workload_json(const TaskWorkload& w) { return {{"base_work_ms", w.base_work_ms}, {"base_accuracy", w.base_accuracy}}; }

TaskWorkload workload_from(const json& j) {
  return {j.at("base_work_ms").get<std::vector<double>>(), j.at("base_accuracy").get<double>()};
}

json gen_params_json(const GenParams& p) {
  json tuning = json::object();
  for (const auto& [name, t] : p.tuning) tuning[name] = tuning_json(t);
  json workloads = json::array();
  for (const auto& [id, w] : p.workloads) {
    json e = workload_json(w);
    e["task_id"] = id;
    workloads.push_back(e);
  }
  return {{"tuning", tuning},
          {"default_tuning", tuning_json(p.default_tuning)},
          {"workloads", workloads},
          {"default_workload", workload_json(p.default_workload)},
          {"latency_jitter", p.latency_jitter},
          {"variant_acc_noise", p.variant_acc_noise},
          {"sigma_acc", p.sigma_acc},
          {"unstructured_acc_coef", p.unstructured_acc_coef},
          {"unstructured_acc_exp", p.unstructured_acc_exp},
          {"structured_acc_coef", p.structured_acc_coef},
          {"structured_acc_exp", p.structured_acc_exp},
          {"fp16_acc_penalty", p.fp16_acc_penalty},
          {"int8_acc_penalty", p.int8_acc_penalty}};
}

GenParams gen_params_from(const json& j) {
  GenParams p;
  for (const auto& [name, t] : j.at("tuning").items()) p.tuning[name] = tuning_from(t);
  p.default_tuning = tuning_from(j.at("default_tuning"));
  for (const json& w : j.at("workloads")) p.workloads[w.at("task_id").get<int>()] = workload_from(w);
  p.default_workload = workload_from(j.at("default_workload"));
  p.latency_jitter = j.at("latency_jitter").get<double>();
  p.variant_acc_noise = j.at("variant_acc_noise").get<double>();
  p.sigma_acc = j.at("sigma_acc").get<double>();
  p.unstructured_acc_coef = j.at("unstructured_acc_coef").get<double>();
  p.unstructured_acc_exp = j.at("unstructured_acc_exp").get<double>();
  p.structured_acc_coef = j.at("structured_acc_coef").get<double>();
  p.structured_acc_exp = j.at("structured_acc_exp").get<double>();
  p.fp16_acc_penalty = j.at("fp16_acc_penalty").get<double>();
  p.int8_acc_penalty = j.at("int8_acc_penalty").get<double>();
  p.validate();
  return p;
}

json slo_json(const SloConfig& c) {
  json per_task = json::array();
  for (const auto& [id, s] : c.per_task) {
    per_task.push_back({{"task_id", id}, {"acc_floor", s.acc_floor}, {"lat_ceiling_ms", s.lat_ceiling_ms}});
  }
  return {{"config_id", c.config_id}, {"per_task", per_task}};
}

SloConfig slo_from(const json& j) {
  SloConfig c;
  c.config_id = j.at("config_id").get<int>();
  for (const json& t : j.at("per_task")) {
    c.per_task[t.at("task_id").get<int>()] = {t.at("acc_floor").get<double>(), t.at("lat_ceiling_ms").get<double>()};
  }
  return c;
}

json plan_json(const PlanResult& plan, std::span<const Processor> processors) {
  json order = json::array();
  for (int p : plan.best_order.procs) {
    auto it = std::find_if(processors.begin(), processors.end(), [&](const Processor& x) { return x.proc_id == p; });
    order.push_back(it == processors.end() ? std::to_string(p) : it->name);
  }
  json per_task = json::array();
  for (const auto& [id, c] : plan.per_task) {
    json e{{"task_id", id}, {"status", std::string(to_string(c.status))}};
    if (c.map) e["latency_ms"] = c.latency_ms;
    if (c.feasible()) {
      e["donors"] = c.map->donors;
    } else {
      e["donors"] = "infeasible";
    }
    per_task.push_back(e);
  }
  return {{"config_id", plan.config_id},
          {"best_order", order},
          {"per_task", per_task},
          {"mean_latency_ms", plan.mean_latency_ms},
          {"objective_ms", plan.objective_ms},
          {"empty_feasible_tasks", plan.empty_feasible_tasks}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorKind::invalid_argument, "cannot format double");
  return std::string(buf, p);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::io, "cannot create directory " + path.parent_path().string());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorKind::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, "cannot rename " + tmp.string() + " to " + path.string());
}

std::string zoo_to_json(const Zoo& zoo) {
  json tasks = json::array();
  for (const TaskZoo& tz : zoo.tasks()) {
    json variants = json::array();
    for (const SparseVariant& v : tz.variants) {
      std::vector<Bytes> mem;
      for (const Subgraph& s : v.subgraphs) mem.push_back(s.mem_bytes);
      variants.push_back({{"variant_index", v.variant_index},
                          {"sparsity_kind", std::string(to_string(v.sparsity_kind))},
                          {"sparsity_level", v.sparsity_level},
                          {"precision", std::string(to_string(v.precision))},
                          {"subgraph_mem_bytes", mem}});
    }
    tasks.push_back({{"task_id", tz.task.task_id}, {"name", tz.task.name}, {"S", tz.task.subgraph_count}, {"variants", variants}});
  }
  return dump({{"tasks", tasks}});
}

Zoo zoo_from_json(const std::string& text) {
  const json j = parse_json(text, "zoo");
  return parse_guard("zoo", [&] {
    std::vector<TaskZoo> tasks;
    for (const json& t : j.at("tasks")) {
      TaskZoo tz;
      tz.task.task_id = t.at("task_id").get<int>();
      tz.task.name = t.at("name").get<std::string>();
      tz.task.subgraph_count = t.at("S").get<int>();
      for (const json& v : t.at("variants")) {
        SparseVariant sv;
        sv.task_id = tz.task.task_id;
        sv.variant_index = v.at("variant_index").get<int>();
        sv.sparsity_kind = parse_sparsity_kind(v.at("sparsity_kind").get<std::string>());
        sv.sparsity_level = v.at("sparsity_level").get<double>();
        sv.precision = parse_precision(v.at("precision").get<std::string>());
        const auto mem = v.at("subgraph_mem_bytes").get<std::vector<Bytes>>();
        for (std::size_t k = 0; k < mem.size(); ++k) {
          sv.subgraphs.push_back({sv.task_id, sv.variant_index, static_cast<int>(k) + 1, mem[k]});
        }
        tz.variants.push_back(std::move(sv));
      }
      tz.task.variant_count = static_cast<int>(tz.variants.size());
      tasks.push_back(std::move(tz));
    }
    return Zoo(std::move(tasks));
  });
}

std::string gen_params_to_json(const GenParams& params) { return dump(gen_params_json(params)); }

GenParams gen_params_from_json(const std::string& text) {
  const json j = parse_json(text, "gen params");
  return parse_guard("gen params", [&] { return gen_params_from(j); });
}

std::string profiles_to_json(const ProfileTable& table) {
  json procs = json::array();
  for (const Processor& p : table.processors()) {
    procs.push_back({{"proc_id", p.proc_id}, {"name", p.name}, {"speed_factor", p.speed_factor}});
  }
  json tasks = json::array(), latency = json::array(), accuracy = json::array(), truth = json::array();
  for (int t : table.task_ids()) {
    const int V = table.variant_count(t), S = table.subgraph_count(t);
    tasks.push_back({{"task_id", t}, {"V", V}, {"S", S}});
    for (int i = 1; i <= V; ++i) {
      for (int j = 1; j <= S; ++j) {
        for (const Processor& p : table.processors()) {
          latency.push_back({{"task_id", t}, {"variant_index", i}, {"position", j}, {"proc_id", p.proc_id},
                             {"latency_ms", table.latency(t, i, j, p.proc_id)}});
        }
      }
      accuracy.push_back({{"task_id", t}, {"variant_index", i}, {"accuracy", table.variant_accuracy(t, i)}});
    }
    if (table.has_stitched_truth(t)) {
      for (const StitchMap& m : enumerate_stitched(Task{t, "", V, S})) {
        truth.push_back({{"task_id", t}, {"donors", m.donors}, {"accuracy", table.stitched_truth(m)}});
      }
    }
  }
  return dump({{"seed", table.seed()},
               {"gen_params", gen_params_json(table.gen_params())},
               {"processors", procs},
               {"tasks", tasks},
               {"subgraph_latency_ms", latency},
               {"variant_accuracy", accuracy},
               {"stitched_accuracy_truth", truth}});
}

ProfileTable profiles_from_json(const std::string& text) {
  const json j = parse_json(text, "profiles");
  return parse_guard("profiles", [&] {
    std::vector<Processor> procs;
    for (const json& p : j.at("processors")) {
      procs.push_back({p.at("proc_id").get<int>(), p.at("name").get<std::string>(), p.at("speed_factor").get<double>()});
    }
    ProfileTable table(std::move(procs), j.at("seed").get<std::uint64_t>(), gen_params_from(j.at("gen_params")));
    for (const json& t : j.at("tasks")) table.add_task(t.at("task_id").get<int>(), t.at("V").get<int>(), t.at("S").get<int>());
    for (const json& e : j.at("subgraph_latency_ms")) {
      table.set_latency(e.at("task_id").get<int>(), e.at("variant_index").get<int>(), e.at("position").get<int>(),
                        e.at("proc_id").get<int>(), e.at("latency_ms").get<double>());
    }
    for (const json& e : j.at("variant_accuracy")) {
      table.set_variant_accuracy(e.at("task_id").get<int>(), e.at("variant_index").get<int>(), e.at("accuracy").get<double>());
    }
    for (const json& e : j.at("stitched_accuracy_truth")) {
      table.set_stitched_truth(StitchMap{e.at("task_id").get<int>(), e.at("donors").get<std::vector<int>>()},
                               e.at("accuracy").get<double>());
    }
    return table;
  });
}

std::string latency_csv(const ProfileTable& table) {
  std::string out = seed_header(table.seed()) + "task_id,variant_index,position,proc_id,latency_ms\n";
  for (int t : table.task_ids()) {
    for (int i = 1; i <= table.variant_count(t); ++i) {
      for (int j = 1; j <= table.subgraph_count(t); ++j) {
        for (const Processor& p : table.processors()) {
          out += std::to_string(t) + "," + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(p.proc_id) +
                 "," + format_double(table.latency(t, i, j, p.proc_id)) + "\n";
        }
      }
    }
  }
  return out;
}

std::string slo_configs_to_json(std::span<const SloConfig> configs) {
  json arr = json::array();
  for (const SloConfig& c : configs) arr.push_back(slo_json(c));
  return dump({{"configs", arr}});
}

std::vector<SloConfig> slo_configs_from_json(const std::string& text) {
  const json j = parse_json(text, "slo");
  return parse_guard("slo", [&] {
    std::vector<SloConfig> out;
    if (j.contains("configs")) {
      for (const json& c : j.at("configs")) out.push_back(slo_from(c));
    } else {
      out.push_back(slo_from(j));
    }
    return out;
  });
}

std::string plan_to_json(const PlanResult& plan, std::span<const Processor> processors, std::uint64_t seed) {
  json j = plan_json(plan, processors);
  j["seed"] = seed;
  return dump(j);
}

std::string plans_to_json(std::span<const PlanResult> plans, std::span<const Processor> processors, std::uint64_t seed) {
  json arr = json::array();
  for (const PlanResult& p : plans) arr.push_back(plan_json(p, processors));
  return dump({{"seed", seed}, {"plans", arr}});
}

std::string preload_to_json(const PreloadPlan& plan, std::uint64_t seed) {
  json per_task = json::array();
  for (const auto& [id, keys] : plan.per_task) {
    json subgraphs = json::array();
    for (const SubgraphKey& k : keys) subgraphs.push_back({k.variant_index, k.position});
    per_task.push_back({{"task_id", id}, {"subgraphs", subgraphs}});
  }
  return dump({{"seed", seed},
               {"budget_bytes", plan.budget_bytes},
               {"per_task", per_task},
               {"total_mem_bytes", plan.total_mem_bytes}});
}

PreloadPlan preload_from_json(const std::string& text) {
  const json j = parse_json(text, "preload plan");
  return parse_guard("preload plan", [&] {
    PreloadPlan plan;
    plan.budget_bytes = j.at("budget_bytes").get<Bytes>();
    plan.total_mem_bytes = j.at("total_mem_bytes").get<Bytes>();
    for (const json& t : j.at("per_task")) {
      const int id = t.at("task_id").get<int>();
      auto& keys = plan.per_task[id];
      for (const json& s : t.at("subgraphs")) keys.insert({id, s.at(0).get<int>(), s.at(1).get<int>()});
    }
    return plan;
  });
}

std::string report_csv(const SimReport& report, std::uint64_t seed) {
  std::string out = seed_header(seed) +
                    "policy,config_id,permutation_index,seed,violation_rate,throughput_qps,mean_latency_ms,infeasible_tasks\n";
  for (const SimRow& r : report.rows) {
    out += std::string(to_string(r.policy)) + "," + std::to_string(r.config_id) + "," + std::to_string(r.permutation_index) +
           "," + std::to_string(r.seed) + "," + format_double(r.violation_rate) + "," + format_double(r.throughput_qps) + "," +
           format_double(r.mean_latency_ms) + "," + std::to_string(r.infeasible_tasks) + "\n";
  }
  return out;
}

SimReport report_from_csv(const std::string& text) {
  SimReport report;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": expected 8 columns");
    report.rows.push_back(SimRow{parse_policy(cells[0]), parse_int<int>(cells[1]), parse_int<int>(cells[2]),
                                 parse_int<std::uint64_t>(cells[3]), parse_double(cells[4]), parse_double(cells[5]),
                                 parse_double(cells[6]), parse_int<int>(cells[7])});
  }
  return report;
}

std::string summary_csv(std::span<const SummaryRow> rows, std::uint64_t seed) {
  std::string out = seed_header(seed) + "policy,config_id,runs,violation_rate,throughput_qps\n";
  for (const SummaryRow& r : rows) {
    out += std::string(to_string(r.policy)) + "," + std::to_string(r.config_id) + "," + std::to_string(r.runs) + "," +
           format_double(r.violation_rate) + "," + format_double(r.throughput_qps) + "\n";
  }
  return out;
}

std::string recall_csv(std::span<const RecallRow> rows, std::uint64_t seed) {
  std::string out = seed_header(seed) + "seed,task_id,K,recall\n";
  for (const RecallRow& r : rows) {
    out += std::to_string(r.seed) + "," + std::to_string(r.task_id) + "," + std::to_string(r.k) + "," + format_double(r.recall) + "\n";
  }
  return out;
}

std::string latency_error_csv(std::span<const LatencyErrorRow> rows, std::uint64_t seed) {
  std::string out = seed_header(seed) + "seed,hop_cost_ms,MAE_ms,MAPE\n";
  for (const LatencyErrorRow& r : rows) {
    out += std::to_string(r.seed) + "," + format_double(r.hop_cost_ms) + "," + format_double(r.error.mae_ms) + "," +
           format_double(r.error.mape) + "\n";
  }
  return out;
}

}  // namespace loom
