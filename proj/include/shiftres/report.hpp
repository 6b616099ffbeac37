#pragma once

// Result files: per-realization CSV, JSON summaries and plot-data tables.
// Every file carries the config hash in a leading comment or field.

#include "shiftres/experiment.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace shiftres {

/// Columns: task, kind, M1, M2, tau_max, seed, err_omega1, err_omega2,
/// rank_omega1, rank_omega2, mc_omega1, mc_omega2, diverged.
void write_records_csv(std::ostream& os, const std::vector<RealizationRecord>& records,
                       const SweepConfig& cfg);

nlohmann::json summary_json(const std::vector<RealizationRecord>& records, const SweepConfig& cfg);

/// Mean curves vs M1 (one row per (M1, M2)) with standard errors.
void write_curve_csv(std::ostream& os, const std::vector<SummaryRow>& rows,
                     const SweepConfig& cfg);

void write_rank_bins_csv(std::ostream& os, const std::vector<RankBin>& bins,
                         const SweepConfig& cfg);

/// Raw (MC, error, rank) points of a scatter run.
void write_scatter_points_csv(std::ostream& os, const std::vector<RealizationRecord>& records,
                              const SweepConfig& cfg);

void write_memory_table_csv(std::ostream& os, const std::vector<MemoryTableCell>& cells,
                            const SweepConfig& cfg);

/// Shortest round-trip text for a double; "nan" for NaN.
std::string format_number(double v);

} // namespace shiftres
