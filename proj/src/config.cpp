#include "fognet/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

namespace fognet {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(where("") + "expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) { return used_.insert(key), j_.at(key); }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParseError(name(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  void get_int(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ParseError(name(key) + ": expected an integer");
    out = v.get<int>();
  }

  void get_seed(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ParseError(name(key) + ": expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  template <class E>
  void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    std::string allowed;
    for (auto& [label, value] : options) {
      if (v.is_string() && v.get<std::string>() == label) {
        out = value;
        return;
      }
      allowed += (allowed.empty() ? "" : ", ") + std::string(label);
    }
    throw ParseError(name(key) + ": expected one of " + allowed + " (got " + v.dump() + ")");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ParseError(name(it.key()) + ": unknown key");
  }

 private:
  std::string where(const std::string& key) const {
    std::string n = name(key);
    return n.empty() ? "" : n + ": ";
  }
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string resolve(const std::string& base, const std::string& p, const std::string& field, bool must_exist) {
  if (p.empty()) return p;
  fs::path out = p;
  if (!base.empty() && out.is_relative()) out = fs::path(base) / out;
  out = out.lexically_normal();
  if (must_exist && !fs::exists(out)) throw ParseError(field + ": file not found: " + out.string());
  return out.string();
}

const std::initializer_list<std::pair<const char*, TopologyKind>> kTopologies = {
    {"full", TopologyKind::Full},
    {"random", TopologyKind::Random},
    {"small_world", TopologyKind::SmallWorld},
    {"hierarchical", TopologyKind::Hierarchical}};
const std::initializer_list<std::pair<const char*, ErrorModel>> kModels = {{"linear", ErrorModel::Linear},
                                                                          {"sqrt", ErrorModel::Sqrt}};
const std::initializer_list<std::pair<const char*, WeightSchedule>> kSchedules = {
    {"constant", WeightSchedule::Constant}, {"decay", WeightSchedule::Decay}};
const std::initializer_list<std::pair<const char*, PlanMode>> kModes = {
    {"none", PlanMode::None}, {"greedy", PlanMode::Greedy}, {"linear", PlanMode::Linear}, {"sqrt", PlanMode::Sqrt}};
const std::initializer_list<std::pair<const char*, LpBackend>> kBackends = {{"transport", LpBackend::Transport},
                                                                           {"simplex", LpBackend::Simplex}};
const std::initializer_list<std::pair<const char*, Arch>> kArchs = {{"softmax", Arch::Softmax}, {"mlp", Arch::MLP}};

template <class E>
std::string label_of(E value, std::initializer_list<std::pair<const char*, E>> options) {
  for (auto& [label, v] : options)
    if (v == value) return label;
  return "?";
}

}  // namespace

std::string mode_name(PlanMode mode) { return label_of(mode, kModes); }

PlanMode parse_mode(const std::string& name) {
  for (auto& [label, v] : kModes)
    if (name == label) return v;
  throw InvalidArgument("unknown mode '" + name + "' (expected none, greedy, linear or sqrt)");
}

SimConfig config_from_json(const json& j, const std::string& base_dir) {
  SimConfig cfg;
  Section root(j, "");
  root.get_seed("seed", cfg.seed);
  if (root.has("seeds")) {
    const json& s = root.at("seeds");
    if (!s.is_array()) throw ParseError("seeds: expected an array");
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw ParseError("seeds: expected non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  root.get_int("n", cfg.n);
  root.get_int("horizon", cfg.horizon);
  root.get_int("tau", cfg.tau);
  root.get("output_dir", cfg.output_dir);

  if (root.has("topology")) {
    Section s(root.at("topology"), "topology");
    s.get_enum("kind", cfg.topology.kind, kTopologies);
    s.get("rho", cfg.topology.rho);
    s.get_int("neighbors", cfg.topology.neighbors);
    s.get("rewire", cfg.topology.rewire);
    s.finish();
  }
  if (root.has("churn")) {
    Section s(root.at("churn"), "churn");
    s.get("p_exit", cfg.churn.p_exit);
    s.get("p_entry", cfg.churn.p_entry);
    s.finish();
  }
  if (root.has("costs")) {
    Section s(root.at("costs"), "costs");
    s.get("trace", cfg.costs.trace);
    s.get("lo", cfg.costs.lo);
    s.get("hi", cfg.costs.hi);
    s.finish();
  }
  if (root.has("capacities")) {
    Section s(root.at("capacities"), "capacities");
    s.get("enforced", cfg.capacities.enforced);
    s.get("node", cfg.capacities.node);
    s.get("link", cfg.capacities.link);
    s.finish();
  }
  if (root.has("error")) {
    Section s(root.at("error"), "error");
    s.get_enum("model", cfg.error.model, kModels);
    s.get("weight", cfg.error.weight);
    s.get_enum("schedule", cfg.error.schedule, kSchedules);
    s.get("gamma", cfg.error.gamma);
    s.get("link_surcharge", cfg.error.link_surcharge);
    s.finish();
  }
  if (root.has("optimizer")) {
    Section s(root.at("optimizer"), "optimizer");
    s.get_enum("mode", cfg.optimizer.mode, kModes);
    s.get_int("intervals", cfg.optimizer.intervals);
    std::string rounding = cfg.optimizer.integral ? "integral" : "fractional";
    s.get("rounding", rounding);
    if (rounding != "integral" && rounding != "fractional")
      throw ParseError("optimizer.rounding: expected fractional or integral");
    cfg.optimizer.integral = rounding == "integral";
    s.get_enum("backend", cfg.optimizer.backend, kBackends);
    s.finish();
  }
  if (root.has("dataset")) {
    Section s(root.at("dataset"), "dataset");
    auto& d = cfg.dataset;
    s.get("kind", d.kind);
    s.get("train_images", d.train_images);
    s.get("train_labels", d.train_labels);
    s.get("test_images", d.test_images);
    s.get("test_labels", d.test_labels);
    s.get_int("train_limit", d.train_limit);
    s.get_int("test_limit", d.test_limit);
    s.get_int("d", d.d);
    s.get_int("classes", d.classes);
    s.get_int("train_size", d.train_size);
    s.get_int("test_size", d.test_size);
    s.get("separation", d.separation);
    s.finish();
  }
  if (root.has("model")) {
    Section s(root.at("model"), "model");
    s.get_enum("arch", cfg.model.arch, kArchs);
    s.get_int("hidden", cfg.model.hidden);
    s.get("step_size", cfg.model.step_size);
    s.finish();
  }
  root.finish();

  auto& d = cfg.dataset;
  if (d.kind == "idx") {
    for (auto [field, value] : {std::pair{"dataset.train_images", &d.train_images},
                                {"dataset.train_labels", &d.train_labels},
                                {"dataset.test_images", &d.test_images},
                                {"dataset.test_labels", &d.test_labels}}) {
      if (value->empty()) throw ParseError(std::string(field) + ": missing (required for idx datasets)");
      *value = resolve(base_dir, *value, field, true);
    }
  }
  cfg.costs.trace = resolve(base_dir, cfg.costs.trace, "costs.trace", true);
  cfg.output_dir = resolve(base_dir, cfg.output_dir, "output_dir", false);
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what());
  }
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(fs::path(path)).parent_path().string());
}

json config_to_json(const SimConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["seeds"] = cfg.seeds;
  j["n"] = cfg.n;
  j["horizon"] = cfg.horizon;
  j["tau"] = cfg.tau;
  j["output_dir"] = cfg.output_dir;
  j["topology"] = {{"kind", label_of(cfg.topology.kind, kTopologies)},
                   {"rho", cfg.topology.rho},
                   {"neighbors", cfg.topology.neighbors},
                   {"rewire", cfg.topology.rewire}};
  j["churn"] = {{"p_exit", cfg.churn.p_exit}, {"p_entry", cfg.churn.p_entry}};
  j["costs"] = {{"trace", cfg.costs.trace}, {"lo", cfg.costs.lo}, {"hi", cfg.costs.hi}};
  j["capacities"] = {
      {"enforced", cfg.capacities.enforced}, {"node", cfg.capacities.node}, {"link", cfg.capacities.link}};
  j["error"] = {{"model", label_of(cfg.error.model, kModels)},
                {"weight", cfg.error.weight},
                {"schedule", label_of(cfg.error.schedule, kSchedules)},
                {"gamma", cfg.error.gamma},
                {"link_surcharge", cfg.error.link_surcharge}};
  j["optimizer"] = {{"mode", mode_name(cfg.optimizer.mode)},
                    {"intervals", cfg.optimizer.intervals},
                    {"rounding", cfg.optimizer.integral ? "integral" : "fractional"},
                    {"backend", label_of(cfg.optimizer.backend, kBackends)}};
  const auto& d = cfg.dataset;
  j["dataset"] = {{"kind", d.kind},
                  {"train_images", d.train_images},
                  {"train_labels", d.train_labels},
                  {"test_images", d.test_images},
                  {"test_labels", d.test_labels},
                  {"train_limit", d.train_limit},
                  {"test_limit", d.test_limit},
                  {"d", d.d},
                  {"classes", d.classes},
                  {"train_size", d.train_size},
                  {"test_size", d.test_size},
                  {"separation", d.separation}};
  j["model"] = {
      {"arch", label_of(cfg.model.arch, kArchs)}, {"hidden", cfg.model.hidden}, {"step_size", cfg.model.step_size}};
  return j;
}

// ---- movement problems ----

namespace {

double num_or_inf(const json& v, const std::string& field) {
  if (v.is_null()) return kInf;
  if (!v.is_number()) throw ParseError(field + ": expected a number or null");
  return v.get<double>();
}

json inf_to_null(double v) { return std::isinf(v) ? json(nullptr) : json(v); }

Grid<double> read_grid(const json& v, int rows, int cols, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != rows)
    throw ParseError(field + ": expected " + std::to_string(rows) + " rows");
  Grid<double> g(rows);
  for (int r = 0; r < rows; ++r) {
    const json& row = v[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw ParseError(field + "[" + std::to_string(r) + "]: expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      g[r].push_back(num_or_inf(row[c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
  }
  return g;
}

std::vector<Grid<double>> read_cube(const json& v, int T, int n, const std::string& field) {
  if (!v.is_array() || static_cast<int>(v.size()) != T)
    throw ParseError(field + ": expected " + std::to_string(T) + " slots");
  std::vector<Grid<double>> out;
  for (int t = 0; t < T; ++t) out.push_back(read_grid(v[t], n, n, field + "[" + std::to_string(t) + "]"));
  return out;
}

Grid<std::uint8_t> to_mask(const Grid<double>& g) {
  Grid<std::uint8_t> out(g.size());
  for (std::size_t r = 0; r < g.size(); ++r)
    for (double x : g[r]) out[r].push_back(x != 0.0);
  return out;
}

template <class T>
json grid_json(const Grid<T>& g) {
  json out = json::array();
  for (const auto& row : g) {
    json jr = json::array();
    for (auto x : row) {
      if constexpr (std::is_floating_point_v<T>)
        jr.push_back(inf_to_null(x));
      else
        jr.push_back(static_cast<int>(x));
    }
    out.push_back(std::move(jr));
  }
  return out;
}

template <class T>
json cube_json(const std::vector<Grid<T>>& c) {
  json out = json::array();
  for (const auto& g : c) out.push_back(grid_json(g));
  return out;
}

}  // namespace

MovementProblem problem_from_json(const json& j) {
  Section s(j, "");
  int n = 0, T = 0;
  s.get_int("n", n);
  s.get_int("horizon", T);
  if (n < 1 || T < 1) throw ParseError("n and horizon must be positive integers");
  MovementProblem p;
  p.net = make_network(n, T);
  auto& net = p.net;
  if (s.has("active")) net.active = to_mask(read_grid(s.at("active"), T, n, "active"));
  net.present = net.active;
  if (s.has("edges")) {
    auto e = read_cube(s.at("edges"), T, n, "edges");
    for (int t = 0; t < T; ++t) net.edges[t] = to_mask(e[t]);
  }
  if (s.has("proc_cost")) net.proc_cost = read_grid(s.at("proc_cost"), T, n, "proc_cost");
  if (s.has("link_cost")) net.link_cost = read_cube(s.at("link_cost"), T, n, "link_cost");
  if (s.has("proc_cap")) net.proc_cap = read_grid(s.at("proc_cap"), T, n, "proc_cap");
  if (s.has("link_cap")) net.link_cap = read_cube(s.at("link_cap"), T, n, "link_cap");
  if (s.has("err_weight")) net.err_weight = read_grid(s.at("err_weight"), T, n, "err_weight");
  p.D = s.has("D") ? read_grid(s.at("D"), T, n, "D") : make_grid<double>(T, n, 0.0);
  s.get_enum("error_model", p.error_model, kModels);
  p.gamma.assign(n, 0.0);
  if (s.has("gamma")) p.gamma = read_grid(json::array({s.at("gamma")}), 1, n, "gamma")[0];
  s.get("capacities_enforced", p.capacities_enforced);
  s.get("link_surcharge", p.link_surcharge);
  if (s.has("inbound")) p.inbound = read_grid(json::array({s.at("inbound")}), 1, n, "inbound")[0];
  s.finish();
  p.validate();
  return p;
}

json problem_to_json(const MovementProblem& p) {
  const auto& net = p.net;
  json j;
  j["n"] = net.n;
  j["horizon"] = net.horizon;
  j["active"] = grid_json(net.active);
  j["edges"] = cube_json(net.edges);
  j["proc_cost"] = grid_json(net.proc_cost);
  j["link_cost"] = cube_json(net.link_cost);
  j["proc_cap"] = grid_json(net.proc_cap);
  j["link_cap"] = cube_json(net.link_cap);
  j["err_weight"] = grid_json(net.err_weight);
  j["D"] = grid_json(p.D);
  j["error_model"] = label_of(p.error_model, kModels);
  j["gamma"] = p.gamma;
  j["capacities_enforced"] = p.capacities_enforced;
  j["link_surcharge"] = p.link_surcharge;
  if (!p.inbound.empty()) j["inbound"] = p.inbound;
  return j;
}

MovementProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open problem '" + path + "'");
  try {
    return problem_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

json plan_to_json(const MovementPlan& plan) {
  return {{"s", cube_json(plan.s)}, {"r", grid_json(plan.r)}, {"G", grid_json(plan.G)}};
}

MovementPlan plan_from_json(const json& j) {
  Section s(j, "");
  if (!s.has("r") || !j.at("r").is_array() || j.at("r").empty()) throw ParseError("r: missing");
  int T = static_cast<int>(j.at("r").size());
  int n = static_cast<int>(j.at("r")[0].size());
  MovementPlan plan;
  plan.r = read_grid(s.at("r"), T, n, "r");
  plan.s = s.has("s") ? read_cube(s.at("s"), T, n, "s") : empty_plan(n, T).s;
  plan.G = s.has("G") ? read_grid(s.at("G"), T, n, "G") : make_grid<double>(T, n, 0.0);
  s.finish();
  return plan;
}

json ledger_to_json(const CostLedger& l) {
  return {{"process", l.process},   {"transfer", l.transfer}, {"discard", l.discard},
          {"total", l.total},       {"data", l.data},         {"unit_cost", l.unit_cost}};
}

}  // namespace fognet
