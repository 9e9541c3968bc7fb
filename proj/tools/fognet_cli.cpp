// fognet command-line front end. Exit codes: 0 ok, 2 config/usage,
// 3 infeasible, 4 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fognet/analytics.hpp"
#include "fognet/config.hpp"
#include "fognet/report.hpp"
#include "fognet/simulator.hpp"

using namespace fognet;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kUsage = 2, kInfeasible = 3, kRuntime = 4;

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void kv(const std::string& key, double v) { std::cout << key << '=' << g6(v) << '\n'; }
void kv(const std::string& key, bool v) { std::cout << key << '=' << (v ? "true" : "false") << '\n'; }

struct SeedFlag {
  std::optional<std::uint64_t> seed;
  void apply(SimConfig& cfg) const {
    if (!seed) return;
    cfg.seed = *seed;
    cfg.seeds.clear();
  }
};

DegreeDistribution degrees_from(int regular, int sf_n, double exponent) {
  if (regular > 0) return DegreeDistribution::point_mass(regular);
  if (sf_n > 0) return DegreeDistribution::scale_free(sf_n, exponent);
  throw InvalidArgument("give --degree K or --scale-free-n N");
}

CapacityDist parse_capacity(const std::string& s) {
  CapacityDist c;
  if (s == "inf") return c;
  std::stringstream in(s);
  std::string kind, a, b;
  std::getline(in, kind, ':');
  std::getline(in, a, ':');
  std::getline(in, b, ':');
  try {
    if (kind == "point") {
      c.kind = CapacityDist::Kind::PointMass;
      c.a = std::stod(a);
      return c;
    }
    if (kind == "uniform") {
      c.kind = CapacityDist::Kind::Uniform;
      c.a = std::stod(a);
      c.b = std::stod(b);
      return c;
    }
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("--capacity must be inf, point:A or uniform:A:B");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data movement planning and federated learning simulation for fog networks"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the configured experiment");
  std::string sim_config, sim_output;
  SeedFlag sim_seed;
  bool dump_config = false, centralized = false;
  sim->add_option("config", sim_config, "Experiment config (JSON)")->required();
  sim->add_option("--seed", sim_seed.seed, "Override the seed list with one seed");
  sim->add_option("--output", sim_output, "Output directory (overrides output_dir)");
  sim->add_flag("--dump-config", dump_config, "Print the resolved config and exit");
  sim->add_flag("--centralized", centralized, "Run the single-node baseline instead");

  // optimize
  auto* opt = app.add_subcommand("optimize", "Solve a movement problem");
  std::string opt_problem, opt_output, opt_mode = "linear", opt_backend = "transport";
  bool opt_integral = false;
  std::optional<std::uint64_t> opt_seed;
  opt->add_option("problem", opt_problem, "Movement problem (JSON)")->required();
  opt->add_option("--mode", opt_mode, "greedy | linear | sqrt")
      ->check(CLI::IsMember({"none", "greedy", "linear", "sqrt"}));
  opt->add_option("--backend", opt_backend, "transport | simplex")->check(CLI::IsMember({"transport", "simplex"}));
  opt->add_flag("--integral", opt_integral, "Round the plan to whole datapoints");
  opt->add_option("--output", opt_output, "Write plan.json and ledger.json here instead of stdout");
  opt->add_option("--seed", opt_seed, "Accepted for uniformity; solvers are deterministic");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Closed-form and Monte Carlo analytics");
  ana->require_subcommand(1);
  std::optional<std::uint64_t> ana_seed;
  ana->add_option("--seed", ana_seed, "Seed for Monte Carlo analyses");

  double mu = 1.0, sigma = 1.0, capacity = 0.5, phi = 0.5;
  auto* a_cap = ana->add_subcommand("capacity-for-wait", "Capacity meeting a mean-wait target");
  a_cap->add_option("--mu", mu)->required();
  a_cap->add_option("--sigma", sigma)->required();
  auto* a_phi = ana->add_subcommand("phi", "Fixed point for a given capacity");
  a_phi->add_option("--mu", mu)->required();
  a_phi->add_option("--capacity", capacity)->required();
  auto* a_wait = ana->add_subcommand("dm1-wait", "Mean D/M/1 queueing delay");
  a_wait->add_option("--mu", mu)->required();
  a_wait->add_option("--phi", phi)->required();

  BoundInputs bound;
  std::optional<int> bound_K;
  auto* a_bound = ana->add_subcommand("loss-bound", "Loss bound under periodic aggregation");
  a_bound->add_option("--rho", bound.rho_lipschitz);
  a_bound->add_option("--beta", bound.beta);
  a_bound->add_option("--eta", bound.eta);
  a_bound->add_option("--delta", bound.delta);
  a_bound->add_option("--omega", bound.omega);
  a_bound->add_option("--tau", bound.tau);
  a_bound->add_option("--t", bound.t);
  a_bound->add_option("--floor", bound.epsilon_floor);
  a_bound->add_option("--K", bound_K);

  double gamma_i = 1, gamma_total = 1, G = 1, D_total = 1, Delta = 1;
  auto* a_div = ana->add_subcommand("divergence-bound", "Gradient divergence bound for one device");
  a_div->add_option("--gamma-i", gamma_i);
  a_div->add_option("--gamma-total", gamma_total);
  a_div->add_option("--G", G);
  a_div->add_option("--D-total", D_total);
  a_div->add_option("--Delta", Delta);

  HierarchyParams hp;
  auto* a_frac = ana->add_subcommand("optimal-fractions", "Optimal offload/discard in a two-level hierarchy");
  a_frac->add_option("--gamma", hp.gamma);
  a_frac->add_option("--c", hp.c);
  a_frac->add_option("--c-server", hp.c_server);
  a_frac->add_option("--c-transmit", hp.c_transmit);
  a_frac->add_option("--n", hp.n);
  a_frac->add_option("--D", hp.D);

  int degree = 0, sf_n = 0;
  double exponent = 2.5, cost_C = 1.0;
  auto* a_val = ana->add_subcommand("offloading-value", "Expected savings from cheapest-neighbor offloading");
  a_val->add_option("--degree", degree, "Every device has this degree");
  a_val->add_option("--scale-free-n", sf_n, "Scale-free degrees on 1..N");
  a_val->add_option("--exponent", exponent);
  a_val->add_option("--C", cost_C, "Processing costs are U(0, C)");

  ViolationInputs vi;
  std::string cap_spec = "inf", neighbor_model = "regular";
  auto* a_vio = ana->add_subcommand("expected-violations", "Expected capacity violations (Monte Carlo)");
  a_vio->add_option("--degree", degree);
  a_vio->add_option("--scale-free-n", sf_n);
  a_vio->add_option("--exponent", exponent);
  a_vio->add_option("--neighbors", neighbor_model, "regular | configuration")
      ->check(CLI::IsMember({"regular", "configuration"}));
  a_vio->add_option("--capacity", cap_spec, "inf | point:A | uniform:A:B");
  a_vio->add_option("--D", vi.D);
  a_vio->add_option("--cost-hi", vi.cost_hi);
  a_vio->add_option("--discard-cost", vi.discard_cost);
  a_vio->add_option("--devices", vi.devices);
  a_vio->add_option("--samples", vi.samples);
  a_vio->add_option("--batches", vi.batches);
  a_vio->add_option("--shards", vi.shards);

  // sweep
  auto* swp = app.add_subcommand("sweep", "Repeat the experiment over one parameter");
  std::string swp_config, swp_axis, swp_output;
  std::string swp_values_arg;
  int jobs = 1;
  SeedFlag swp_seed;
  swp->add_option("config", swp_config, "Experiment config (JSON)")->required();
  swp->add_option("--axis", swp_axis, "n | rho | tau | p_exit | p_entry")
      ->required()
      ->check(CLI::IsMember({"n", "rho", "tau", "p_exit", "p_entry"}));
  swp->add_option("--values", swp_values_arg, "Comma-separated values")->required();
  swp->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  swp->add_option("--seed", swp_seed.seed);
  swp->add_option("--output", swp_output, "Output directory (overrides output_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (ana->parsed() && ana->get_subcommands().empty() && e.get_exit_code() != 0) {
      std::cerr << "fognet: analyze needs a name; available:";
      for (const auto* sub : ana->get_subcommands({})) std::cerr << ' ' << sub->get_name();
      std::cerr << '\n';
      return kUsage;
    }
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (sim->parsed()) {
      SimConfig cfg = load_config(sim_config);
      sim_seed.apply(cfg);
      if (!sim_output.empty()) cfg.output_dir = sim_output;
      if (dump_config) {
        std::cout << config_to_json(cfg).dump(2) << '\n';
        return kOk;
      }
      Data data = load_data(cfg.dataset, cfg.seed);
      std::vector<SimResult> runs;
      for (auto s : cfg.run_seeds()) runs.push_back(centralized ? run_centralized(cfg, data, s) : run(cfg, data, s));
      write_run_outputs(cfg, runs);
      std::cout << "seed " << kTableHeader << '\n';
      for (const auto& r : runs) std::cout << r.seed << ' ' << table_row(r.ledger, r.final_accuracy) << '\n';
      return kOk;
    }

    if (opt->parsed()) {
      MovementProblem prob = load_problem(opt_problem);
      PlanMode mode = parse_mode(opt_mode);
      Solution sol = solve(prob, mode, opt_backend == "simplex" ? LpBackend::Simplex : LpBackend::Transport);
      if (opt_integral) {
        sol.plan = round_plan(prob, sol.plan);
        sol.ledger = evaluate_plan(prob, sol.plan);
      }
      nlohmann::json ledger = ledger_to_json(sol.ledger);
      ledger["method"] = sol.info.method;
      ledger["converged"] = sol.info.converged;
      ledger["iterations"] = sol.info.iterations;
      ledger["gap"] = sol.info.gap;
      if (!sol.info.warning.empty()) std::cerr << "fognet: " << sol.info.warning << '\n';
      if (opt_output.empty()) {
        std::cout << nlohmann::json{{"plan", plan_to_json(sol.plan)}, {"ledger", ledger}}.dump(2) << '\n';
      } else {
        fs::create_directories(opt_output);
        std::ofstream(fs::path(opt_output) / "plan.json") << plan_to_json(sol.plan).dump(2) << '\n';
        std::ofstream(fs::path(opt_output) / "ledger.json") << ledger.dump(2) << '\n';
        std::cout << kTableHeader << '\n' << table_row(sol.ledger, 0.0) << '\n';
      }
      return kOk;
    }

    if (ana->parsed()) {
      if (a_cap->parsed()) {
        double C = capacity_for_wait(mu, sigma);
        kv("capacity", C);
        kv("phi", phi_of_C(mu, C).phi);
      } else if (a_phi->parsed()) {
        auto r = phi_of_C(mu, capacity);
        kv("phi", r.phi);
        kv("stable", r.stable);
      } else if (a_wait->parsed()) {
        kv("wait", dm1_mean_wait(mu, phi));
      } else if (a_bound->parsed()) {
        LossBound lb = bound_K ? loss_bound(bound, *bound_K) : loss_bound(bound);
        kv("K", static_cast<double>(lb.K));
        kv("epsilon0", lb.epsilon0);
        kv("g_term", lb.g_term);
        kv("bound", lb.bound);
        kv("residual", lb.residual);
        kv("above_floor", lb.above_floor);
      } else if (a_div->parsed()) {
        kv("divergence", divergence_bound(gamma_i, gamma_total, G, D_total, Delta));
      } else if (a_frac->parsed()) {
        auto f = optimal_fractions(hp);
        kv("processed", f.processed);
        kv("s_star", f.s_star);
        kv("r_star", f.r_star);
        kv("in_regime", f.in_regime);
        kv("objective", hierarchy_objective(hp, f.r_star, f.s_star));
      } else if (a_val->parsed()) {
        kv("value", offloading_value(degrees_from(degree, sf_n, exponent), cost_C));
      } else if (a_vio->parsed()) {
        vi.dist = degrees_from(degree, sf_n, exponent);
        vi.neighbor_degree = neighbor_model == "regular" ? regular_neighbor_degrees(vi.dist)
                                                         : configuration_neighbor_degrees(vi.dist);
        vi.capacity = parse_capacity(cap_spec);
        if (ana_seed) vi.seed = *ana_seed;
        Estimate e = expected_violations(vi);
        kv("value", e.value);
        kv("std_error", e.std_error);
      }
      return kOk;
    }

    if (swp->parsed()) {
      std::vector<double> swp_values;
      std::stringstream list(swp_values_arg);
      for (std::string item; std::getline(list, item, ',');) {
        std::size_t used = 0;
        try {
          swp_values.push_back(std::stod(item, &used));
        } catch (const std::logic_error&) {
          used = 0;
        }
        if (used == 0 || used != item.size()) throw InvalidArgument("--values: '" + item + "' is not a number");
      }
      if (swp_values.empty()) throw InvalidArgument("--values needs at least one value");
      SimConfig cfg = load_config(swp_config);
      swp_seed.apply(cfg);
      if (!swp_output.empty()) cfg.output_dir = swp_output;
      SweepAxis axis = parse_axis(swp_axis);
      auto points = sweep(cfg, axis, swp_values, jobs);
      fs::create_directories(cfg.output_dir);
      fs::path out = fs::path(cfg.output_dir) / ("sweep_" + axis_name(axis) + ".csv");
      std::ofstream f(out, std::ios::binary);
      if (!f) throw ParseError("cannot write " + out.string());
      write_sweep_csv(f, axis, points);
      write_sweep_csv(std::cout, axis, points);
      bool failed = false;
      for (const auto& p : points) failed = failed || !p.error.empty();
      return failed ? kRuntime : kOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "fognet: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "fognet: " << e.what() << '\n';
    return kUsage;
  } catch (const InfeasibleError& e) {
    std::cerr << "fognet: infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const PreconditionError& e) {
    std::cerr << "fognet: precondition failed: " << e.what() << '\n';
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "fognet: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
