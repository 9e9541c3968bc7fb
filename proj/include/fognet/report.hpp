#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fognet/simulator.hpp"

namespace fognet {

nlohmann::json summary_json(const SimConfig& cfg, const std::vector<SimResult>& runs);

/// Long-form `slot,device,metric,value`. Slot-level and aggregation metrics
/// use device `all`. Values are printed with %.17g.
void write_timeseries(std::ostream& out, const SimResult& result);

inline const char* kTableHeader = "Process Transfer Discard Total Unit Accuracy";

/// One row of the cost table, six significant digits.
std::string table_row(const CostLedger& ledger, double accuracy);

/// Columns of a sweep CSV, in order.
const std::vector<std::string>& sweep_columns();

/// One row per swept value, averaged over seeds.
void write_sweep_csv(std::ostream& out, SweepAxis axis, const std::vector<SweepPoint>& points);

/// Writes summary.json and timeseries.csv (or timeseries_<seed>.csv when
/// there is more than one seed) into cfg.output_dir.
void write_run_outputs(const SimConfig& cfg, const std::vector<SimResult>& runs);

}  // namespace fognet
