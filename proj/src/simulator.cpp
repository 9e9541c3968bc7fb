#include "fognet/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "fognet/idx.hpp"

namespace fognet {

namespace {

NetworkState build_topology(const SimConfig& cfg, std::uint64_t seed, const std::vector<double>& mean_cost) {
  const int n = cfg.n, T = cfg.horizon;
  const auto& tp = cfg.topology;
  switch (tp.kind) {
    case TopologyKind::Full:
      return n >= 2 ? build_fully_connected(n, T) : make_network(n, T);
    case TopologyKind::Random:
      return build_random(n, tp.rho, seed, T);
    case TopologyKind::SmallWorld: {
      int k = tp.neighbors > 0 ? tp.neighbors : std::max(2, (n / 5) / 2 * 2);
      return build_watts_strogatz(n, k, tp.rewire, seed, T);
    }
    case TopologyKind::Hierarchical:
      return build_hierarchical(n, mean_cost, seed, T);
  }
  throw InvalidArgument("unknown topology kind");
}

// Largest-remainder split of `count` items over weights summing to ~1.
std::vector<int> split_counts(int count, const std::vector<double>& frac) {
  const std::size_t m = frac.size();
  std::vector<int> out(m, 0);
  if (count == 0) return out;
  std::vector<double> want(m);
  int assigned = 0;
  for (std::size_t k = 0; k < m; ++k) {
    want[k] = std::max(0.0, frac[k]) * count;
    out[k] = static_cast<int>(std::floor(want[k] + 1e-9));
    assigned += out[k];
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return want[a] - out[a] > want[b] - out[b]; });
  for (std::size_t k = 0; assigned < count; k = (k + 1) % m, ++assigned) out[order[k]] += 1;
  for (std::size_t k = m; assigned > count;) {
    k = (k + m - 1) % m;
    if (out[order[k]] > 0) --out[order[k]], --assigned;
  }
  return out;
}

struct Packet {
  int src = 0;
  int dst = 0;
  std::vector<int> rows;
  double amount = 0.0;
};

double mean_rate(const SimConfig& cfg, const Data& data) {
  return static_cast<double>(data.train.size()) / (static_cast<double>(cfg.n) * cfg.horizon);
}

}  // namespace

void SimConfig::validate() const {
  if (n < 1) throw InvalidArgument("devices must be at least 1");
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (tau < 1 || tau > horizon) throw InvalidArgument("tau must lie in [1, horizon]");
  if (!(churn.p_exit >= 0.0 && churn.p_exit <= 1.0 && churn.p_entry >= 0.0 && churn.p_entry <= 1.0))
    throw InvalidArgument("churn probabilities must lie in [0,1]");
  if (!(topology.rho >= 0.0 && topology.rho <= 1.0)) throw InvalidArgument("topology.rho must lie in [0,1]");
  if (!(costs.lo >= 0.0 && costs.hi >= costs.lo)) throw InvalidArgument("costs must satisfy 0 <= lo <= hi");
  if (!(capacities.node >= 0.0 && capacities.link >= 0.0)) throw InvalidArgument("capacities must be non-negative");
  if (!(error.weight >= 0.0 && error.gamma >= 0.0 && error.link_surcharge >= 0.0))
    throw InvalidArgument("error weight, gamma and surcharge must be non-negative");
  if (optimizer.intervals < 0 || optimizer.intervals > horizon)
    throw InvalidArgument("optimizer.intervals must lie in [0, horizon]");
  if (!(model.step_size > 0.0)) throw InvalidArgument("model.step_size must be positive");
  if (model.arch == Arch::MLP && model.hidden < 1) throw InvalidArgument("model.hidden must be positive");
  if (dataset.kind != "idx" && dataset.kind != "blobs") throw InvalidArgument("dataset.kind must be idx or blobs");
  if (topology.kind == TopologyKind::Hierarchical && n % 3 != 0)
    throw InvalidArgument("hierarchical topology needs devices divisible by 3");
}

Data load_data(const DatasetSpec& spec, std::uint64_t seed) {
  Data data;
  if (spec.kind == "blobs") {
    Dataset all = synth_blobs(spec.d, spec.classes, spec.train_size + spec.test_size, seed, spec.separation);
    data.train = slice(all, 0, spec.train_size);
    data.test = slice(all, spec.train_size, all.size());
  } else {
    data.train = load_idx(spec.train_images, spec.train_labels, spec.train_limit);
    data.test = load_idx(spec.test_images, spec.test_labels, spec.test_limit);
  }
  return data;
}

double SimResult::mean_movement_rate() const {
  if (movement_rate.empty()) return 0.0;
  return std::accumulate(movement_rate.begin(), movement_rate.end(), 0.0) / movement_rate.size();
}

double SimResult::min_movement_rate() const {
  return movement_rate.empty() ? 0.0 : *std::min_element(movement_rate.begin(), movement_rate.end());
}

double SimResult::max_movement_rate() const {
  return movement_rate.empty() ? 0.0 : *std::max_element(movement_rate.begin(), movement_rate.end());
}

World build_world(const SimConfig& cfg, const Data& data, std::uint64_t seed) {
  cfg.validate();
  const int n = cfg.n, T = cfg.horizon;

  NetworkState costs = make_network(n, T);
  if (cfg.costs.trace.empty())
    costs = synth_costs(std::move(costs), {cfg.costs.lo, cfg.costs.hi}, seed);
  else
    costs = load_cost_trace(std::move(costs), cfg.costs.trace);
  std::vector<double> mean_cost(n, 0.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) mean_cost[i] += costs.proc_cost[t][i] / T;

  NetworkState net = build_topology(cfg, seed, mean_cost);
  net.proc_cost = costs.proc_cost;
  net.link_cost = costs.link_cost;
  if (!cfg.costs.trace.empty()) {
    // Trace gaps on links that only exist in the final topology.
    NetworkState filled = load_cost_trace(net, cfg.costs.trace);
    net.link_cost = filled.link_cost;
  }

  ChurnConfig churn = cfg.churn;
  churn.seed = seed;
  net = apply_churn(std::move(net), churn, cfg.tau);

  const double rate = mean_rate(cfg, data);
  if (cfg.capacities.enforced) {
    double node = cfg.capacities.node > 0.0 ? cfg.capacities.node : rate;
    double link = cfg.capacities.link > 0.0 ? cfg.capacities.link : rate;
    for (int t = 0; t < T; ++t) {
      std::fill(net.proc_cap[t].begin(), net.proc_cap[t].end(), node);
      for (auto& row : net.link_cap[t]) std::fill(row.begin(), row.end(), link);
    }
  }
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      net.err_weight[t][i] =
          cfg.error.schedule == WeightSchedule::Constant ? cfg.error.weight : cfg.error.weight / (1.0 + t);

  World w;
  w.arrivals = generate_arrivals(data.train.size(), n, T, seed, &net.active);
  w.problem.D = make_grid<double>(T, n, 0.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) w.problem.D[t][i] = static_cast<double>(w.arrivals.at[t][i].size());
  w.problem.net = std::move(net);
  w.problem.error_model = cfg.error.model;
  w.problem.gamma.assign(n, cfg.error.gamma);
  w.problem.capacities_enforced = cfg.capacities.enforced;
  w.problem.link_surcharge = cfg.error.link_surcharge;
  return w;
}

SimResult execute(const SimConfig& cfg, const Data& data, const World& world, const MovementPlan& plan,
                  std::uint64_t seed) {
  const auto& prob = world.problem;
  const auto& net = prob.net;
  const int n = cfg.n, T = cfg.horizon;
  const bool linear = prob.error_model == ErrorModel::Linear;

  ModelSpec spec{cfg.model.arch, data.train.d, cfg.model.hidden, data.train.classes};
  ModelState global = init_model(spec, cfg.model.step_size, seed);
  std::vector<ModelState> local(n, global);
  std::vector<double> H(n, 0.0);
  std::vector<Packet> in_transit;

  SimResult res;
  res.seed = seed;
  res.slots.assign(T, std::vector<DeviceSlot>(n));
  CostLedger& led = res.ledger;
  std::vector<std::vector<int>> batch(n);
  std::vector<double> g_real(n);
  int windows = 0;
  double active_sum = 0.0;

  for (int t = 0; t < T; ++t) {
    auto& rec = res.slots[t];
    for (int i = 0; i < n; ++i) {
      rec[i].active = net.is_active(t, i);
      batch[i].clear();
      g_real[i] = 0.0;
    }
    if (t % cfg.tau == 0) {
      ++windows;
      active_sum += net.active_count(t);
    }

    for (auto& p : in_transit) {
      if (net.is_active(t, p.dst) && net.is_active(t, p.src)) {
        batch[p.dst].insert(batch[p.dst].end(), p.rows.begin(), p.rows.end());
        g_real[p.dst] += p.amount;
        rec[p.dst].received += static_cast<int>(p.rows.size());
      } else {
        rec[p.dst].lost += static_cast<int>(p.rows.size());
      }
    }
    in_transit.clear();

    long slot_arrivals = 0, slot_moved = 0;
    for (int i = 0; i < n; ++i) {
      const auto& rows = world.arrivals.at[t][i];
      const double D = prob.D[t][i];
      led.data += D;
      if (rows.empty()) continue;
      // Offloads over links that do not exist in the realized network stay local.
      std::vector<double> frac(n + 1, 0.0);
      for (int j = 0; j < n; ++j) {
        double v = std::max(0.0, plan.s[t][i][j]);
        if (j == i || prob.can_offload(t, i, j))
          frac[j] += v;
        else
          frac[i] += v;
      }
      frac[n] = std::max(0.0, plan.r[t][i]);
      double norm = std::accumulate(frac.begin(), frac.end(), 0.0);
      if (norm > 0.0)
        for (double& v : frac) v /= norm;
      else
        frac[i] = 1.0;
      auto counts = split_counts(static_cast<int>(rows.size()), frac);

      std::size_t next = 0;
      auto take = [&](int c) {
        std::vector<int> out(rows.begin() + next, rows.begin() + next + c);
        next += c;
        return out;
      };
      auto kept = take(counts[i]);
      batch[i].insert(batch[i].end(), kept.begin(), kept.end());
      g_real[i] += D * frac[i];
      rec[i].kept = counts[i];
      for (int j = 0; j < n; ++j) {
        if (j == i || (counts[j] == 0 && frac[j] <= 0.0)) continue;
        Packet p{i, j, take(counts[j]), D * frac[j]};
        led.transfer += p.amount * (net.link_cost[t][i][j] + prob.link_surcharge);
        rec[i].offloaded += counts[j];
        in_transit.push_back(std::move(p));
      }
      rec[i].discarded = counts[n];
      if (linear) led.discard += net.err_weight[t][i] * D * frac[n];
      rec[i].arrivals = static_cast<int>(rows.size());
      slot_arrivals += rec[i].arrivals;
      slot_moved += rec[i].offloaded + rec[i].discarded;
    }
    res.movement_rate.push_back(slot_arrivals > 0 ? static_cast<double>(slot_moved) / slot_arrivals : 0.0);

    for (int i = 0; i < n; ++i) {
      if (!net.is_active(t, i)) continue;
      if (prob.capacities_enforced) {
        const double cap = net.proc_cap[t][i];
        if (g_real[i] > cap + 1e-9) {
          if (linear) led.discard += net.err_weight[t][i] * (g_real[i] - cap);
          g_real[i] = cap;
        }
        auto limit = static_cast<std::size_t>(std::max(0.0, std::ceil(cap - 1e-9)));
        if (batch[i].size() > limit) {
          rec[i].overflow = static_cast<int>(batch[i].size() - limit);
          batch[i].resize(limit);
        }
      }
      led.process += g_real[i] * net.proc_cost[t][i];
      if (!linear && g_real[i] > 0.0) led.discard += prob.gamma[i] / std::sqrt(g_real[i]);
      rec[i].processed = static_cast<int>(batch[i].size());
      rec[i].batch_loss = local_update(local[i], data.train, batch[i]);
      H[i] += static_cast<double>(batch[i].size());
    }

    if ((t + 1) % cfg.tau == 0 || t == T - 1) {
      AggregationRecord agg;
      agg.slot = t;
      std::vector<double> weights;
      std::vector<const std::vector<double>*> params;
      for (int i = 0; i < n; ++i) {
        if (!net.is_active(t, i)) continue;
        agg.contributors.push_back(i);
        agg.H.push_back(H[i]);
        weights.push_back(H[i]);
        params.push_back(&local[i].w);
      }
      agg.skipped = !aggregate(weights, params, global.w);
      for (auto& m : local) m.w = global.w;
      std::fill(H.begin(), H.end(), 0.0);
      EvalResult ev = evaluate(global, data.test);
      agg.test_loss = ev.loss;
      agg.test_accuracy = ev.accuracy;
      res.aggregations.push_back(std::move(agg));
    }
  }

  led.total = led.process + led.transfer + led.discard;
  led.unit_cost = led.data > 0.0 ? led.total / led.data : 0.0;
  res.planned = evaluate_plan(prob, plan);
  res.avg_active = windows ? active_sum / windows : 0.0;
  if (!res.aggregations.empty()) {
    res.final_accuracy = res.aggregations.back().test_accuracy;
    res.final_loss = res.aggregations.back().test_loss;
  }
  for (const auto& slot : res.slots)
    for (const auto& d : slot) {
      res.total_arrivals += d.arrivals;
      res.total_processed += d.processed;
      res.total_discarded += d.discarded + d.overflow;
      res.total_lost += d.lost;
    }
  res.final_weights = global.w;
  return res;
}

SimResult run(const SimConfig& cfg, const Data& data, std::uint64_t seed) {
  World world = build_world(cfg, data, seed);
  const auto& prob = world.problem;
  MovementPlan plan;
  if (cfg.optimizer.intervals > 0 && cfg.optimizer.mode != PlanMode::None) {
    Priors pr;
    pr.proc_cost = pr.link_cost = cfg.costs.trace.empty() ? 0.5 * (cfg.costs.lo + cfg.costs.hi) : 0.5;
    pr.data = mean_rate(cfg, data);
    if (prob.capacities_enforced) {
      pr.proc_cap = prob.net.proc_cap[0].empty() ? kInf : prob.net.proc_cap[0][0];
      pr.link_cap = pr.proc_cap;
    }
    plan = plan_imperfect(prob, cfg.optimizer.intervals, pr, cfg.optimizer.mode, cfg.optimizer.backend);
  } else {
    plan = solve(prob, cfg.optimizer.mode, cfg.optimizer.backend).plan;
  }
  if (cfg.optimizer.integral) plan = round_plan(prob, plan);
  return execute(cfg, data, world, plan, seed);
}

SimResult run(const SimConfig& cfg, std::uint64_t seed) {
  Data data = load_data(cfg.dataset, cfg.seed);
  return run(cfg, data, seed);
}

SimResult run_centralized(const SimConfig& cfg, const Data& data, std::uint64_t seed) {
  SimConfig c = cfg;
  c.n = 1;
  c.topology = TopologySpec{};
  c.churn = ChurnConfig{};
  c.capacities.enforced = false;
  c.optimizer.mode = PlanMode::None;
  c.optimizer.intervals = 0;
  return run(c, data, seed);
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "n") return SweepAxis::N;
  if (name == "rho") return SweepAxis::Rho;
  if (name == "tau") return SweepAxis::Tau;
  if (name == "p_exit") return SweepAxis::PExit;
  if (name == "p_entry") return SweepAxis::PEntry;
  throw InvalidArgument("unknown sweep axis '" + name + "' (expected n, rho, tau, p_exit or p_entry)");
}

std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::N:
      return "n";
    case SweepAxis::Rho:
      return "rho";
    case SweepAxis::Tau:
      return "tau";
    case SweepAxis::PExit:
      return "p_exit";
    case SweepAxis::PEntry:
      return "p_entry";
  }
  return "?";
}

SimConfig with_axis(SimConfig cfg, SweepAxis axis, double value) {
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1) throw InvalidArgument(std::string(what) + " must be a positive integer");
    return static_cast<int>(value);
  };
  switch (axis) {
    case SweepAxis::N:
      cfg.n = as_int("n");
      break;
    case SweepAxis::Rho:
      cfg.topology.kind = TopologyKind::Random;
      cfg.topology.rho = value;
      break;
    case SweepAxis::Tau:
      cfg.tau = as_int("tau");
      break;
    case SweepAxis::PExit:
      cfg.churn.p_exit = value;
      break;
    case SweepAxis::PEntry:
      cfg.churn.p_entry = value;
      break;
  }
  cfg.validate();
  return cfg;
}

std::vector<SweepPoint> sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values, int jobs) {
  if (values.empty()) throw InvalidArgument("sweep needs at least one value");
  const auto seeds = cfg.run_seeds();
  std::vector<SweepPoint> points(values.size());
  std::vector<std::vector<std::string>> errors(values.size(), std::vector<std::string>(seeds.size()));
  for (std::size_t v = 0; v < values.size(); ++v) {
    points[v].value = values[v];
    points[v].runs.resize(seeds.size());
  }
  Data data = load_data(cfg.dataset, cfg.seed);

  std::atomic<std::size_t> next{0};
  const std::size_t total = values.size() * seeds.size();
  auto worker = [&] {
    for (std::size_t job; (job = next++) < total;) {
      std::size_t v = job / seeds.size(), s = job % seeds.size();
      try {
        SimConfig c = with_axis(cfg, axis, values[v]);
        points[v].runs[s] = run(c, data, seeds[s]);
      } catch (const std::exception& e) {
        errors[v][s] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t v = 0; v < values.size(); ++v)
    for (std::size_t s = 0; s < seeds.size(); ++s)
      if (!errors[v][s].empty() && points[v].error.empty()) {
        points[v].error = errors[v][s];
        std::clog << "fognet: sweep " << axis_name(axis) << "=" << values[v] << " seed " << seeds[s]
                  << " failed: " << errors[v][s] << "\n";
      }
  return points;
}

}  // namespace fognet
