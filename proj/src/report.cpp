#include "fognet/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "fognet/config.hpp"

namespace fognet {

using nlohmann::json;

namespace {

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json run_json(const SimResult& r) {
  json aggs = json::array();
  for (const auto& a : r.aggregations)
    aggs.push_back({{"slot", a.slot},
                    {"contributors", a.contributors},
                    {"H", a.H},
                    {"skipped", a.skipped},
                    {"test_loss", finite_or_null(a.test_loss)},
                    {"test_accuracy", a.test_accuracy}});
  return {{"seed", r.seed},
          {"ledger", ledger_to_json(r.ledger)},
          {"planned", ledger_to_json(r.planned)},
          {"movement_rate", {{"mean", r.mean_movement_rate()}, {"min", r.min_movement_rate()}, {"max", r.max_movement_rate()}}},
          {"avg_active", r.avg_active},
          {"final_accuracy", r.final_accuracy},
          {"final_loss", finite_or_null(r.final_loss)},
          {"totals",
           {{"arrivals", r.total_arrivals},
            {"processed", r.total_processed},
            {"discarded", r.total_discarded},
            {"lost", r.total_lost}}},
          {"aggregations", aggs}};
}

CostLedger mean_ledger(const std::vector<const SimResult*>& runs) {
  CostLedger m;
  if (runs.empty()) return m;
  for (const auto* r : runs) {
    m.process += r->ledger.process;
    m.transfer += r->ledger.transfer;
    m.discard += r->ledger.discard;
    m.total += r->ledger.total;
    m.data += r->ledger.data;
    m.unit_cost += r->ledger.unit_cost;
  }
  double k = static_cast<double>(runs.size());
  m.process /= k, m.transfer /= k, m.discard /= k, m.total /= k, m.data /= k, m.unit_cost /= k;
  return m;
}

}  // namespace

json summary_json(const SimConfig& cfg, const std::vector<SimResult>& runs) {
  json j;
  j["config"] = config_to_json(cfg);
  j["runs"] = json::array();
  std::vector<const SimResult*> ptrs;
  double acc = 0.0;
  for (const auto& r : runs) {
    j["runs"].push_back(run_json(r));
    ptrs.push_back(&r);
    acc += r.final_accuracy;
  }
  j["mean"] = {{"ledger", ledger_to_json(mean_ledger(ptrs))},
               {"final_accuracy", runs.empty() ? 0.0 : acc / runs.size()}};
  return j;
}

void write_timeseries(std::ostream& out, const SimResult& r) {
  out << "slot,device,metric,value\n";
  auto row = [&](int t, const std::string& dev, const char* metric, double v) {
    out << t << ',' << dev << ',' << metric << ',' << full(v) << '\n';
  };
  std::size_t next_agg = 0;
  for (std::size_t t = 0; t < r.slots.size(); ++t) {
    const int ts = static_cast<int>(t);
    for (std::size_t i = 0; i < r.slots[t].size(); ++i) {
      const auto& d = r.slots[t][i];
      const std::string dev = std::to_string(i);
      row(ts, dev, "active", d.active);
      row(ts, dev, "arrivals", d.arrivals);
      row(ts, dev, "kept", d.kept);
      row(ts, dev, "offloaded", d.offloaded);
      row(ts, dev, "discarded", d.discarded);
      row(ts, dev, "received", d.received);
      row(ts, dev, "overflow", d.overflow);
      row(ts, dev, "lost", d.lost);
      row(ts, dev, "processed", d.processed);
      row(ts, dev, "loss", d.batch_loss);
    }
    if (t < r.movement_rate.size()) row(ts, "all", "movement_rate", r.movement_rate[t]);
    while (next_agg < r.aggregations.size() && r.aggregations[next_agg].slot == ts) {
      const auto& a = r.aggregations[next_agg++];
      row(ts, "all", "contributors", static_cast<double>(a.contributors.size()));
      row(ts, "all", "test_loss", a.test_loss);
      row(ts, "all", "test_accuracy", a.test_accuracy);
    }
  }
}

std::string table_row(const CostLedger& l, double accuracy) {
  return short6(l.process) + ' ' + short6(l.transfer) + ' ' + short6(l.discard) + ' ' + short6(l.total) + ' ' +
         short6(l.unit_cost) + ' ' + short6(accuracy);
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "axis",          "value",         "runs",          "process",       "transfer",
      "discard",       "total",         "unit_cost",     "processed",     "discarded",
      "process_discard_ratio", "movement_mean", "movement_min", "movement_max", "accuracy",
      "avg_active",    "error"};
  return cols;
}

void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepPoint>& points) {
  const auto& cols = sweep_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << '\n';
  for (const auto& p : points) {
    std::vector<const SimResult*> ok;
    if (p.error.empty())
      for (const auto& r : p.runs) ok.push_back(&r);
    CostLedger l = mean_ledger(ok);
    double processed = 0, discarded = 0, mmean = 0, mmin = 0, mmax = 0, acc = 0, active = 0;
    for (const auto* r : ok) {
      processed += r->total_processed;
      discarded += r->total_discarded;
      mmean += r->mean_movement_rate();
      mmin += r->min_movement_rate();
      mmax += r->max_movement_rate();
      acc += r->final_accuracy;
      active += r->avg_active;
    }
    double k = ok.empty() ? 1.0 : static_cast<double>(ok.size());
    double ratio = discarded > 0 ? processed / discarded : kInf;
    std::string err = p.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    out << axis_name(axis) << ',' << full(p.value) << ',' << ok.size() << ',' << full(l.process) << ','
        << full(l.transfer) << ',' << full(l.discard) << ',' << full(l.total) << ',' << full(l.unit_cost) << ','
        << full(processed / k) << ',' << full(discarded / k) << ',' << full(ratio) << ',' << full(mmean / k) << ','
        << full(mmin / k) << ',' << full(mmax / k) << ',' << full(acc / k) << ',' << full(active / k) << ',' << err
        << '\n';
  }
}

void write_run_outputs(const SimConfig& cfg, const std::vector<SimResult>& runs) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(fs::path(cfg.output_dir) / name, std::ios::binary);
    if (!f) throw ParseError("cannot write " + (fs::path(cfg.output_dir) / name).string());
    return f;
  };
  {
    auto f = open("summary.json");
    f << summary_json(cfg, runs).dump(2) << '\n';
  }
  for (const auto& r : runs) {
    auto f = open(runs.size() == 1 ? std::string("timeseries.csv") : "timeseries_" + std::to_string(r.seed) + ".csv");
    write_timeseries(f, r);
  }
}

}  // namespace fognet
