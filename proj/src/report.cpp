#include "shiftres/report.hpp"

#include "shiftres/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <ostream>

namespace shiftres {

std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    return fmt::format("{}", v);
}

namespace {

void comment(std::ostream& os, std::string_view what, const SweepConfig& cfg) {
    os << "# shiftres " << what << " config_hash=" << config_hash_hex(cfg) << '\n';
}

nlohmann::json number(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json mean_se_json(const MeanSe& m) {
    return {{"mean", number(m.mean)}, {"se", number(m.se)}};
}

} // namespace

void write_records_csv(std::ostream& os, const std::vector<RealizationRecord>& records,
                       const SweepConfig& cfg) {
    comment(os, "results", cfg);
    os << "task,kind,M1,M2,tau_max,seed,err_omega1,err_omega2,rank_omega1,rank_omega2,"
          "mc_omega1,mc_omega2,diverged\n";
    for (const auto& r : records)
        os << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(r.task),
                          to_string(r.kind), r.m1, r.m2, format_number(r.tau_max), r.seed,
                          format_number(r.err_omega1), format_number(r.err_omega2),
                          format_number(r.rank_omega1), format_number(r.rank_omega2),
                          format_number(r.mc_omega1), format_number(r.mc_omega2),
                          r.diverged ? 1 : 0);
}

nlohmann::json summary_json(const std::vector<RealizationRecord>& records, const SweepConfig& cfg) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : summarize(records))
        rows.push_back({{"M1", s.m1},
                        {"M2", s.m2},
                        {"count", s.count},
                        {"diverged", s.diverged},
                        {"err_omega1", mean_se_json(s.err_omega1)},
                        {"err_omega2", mean_se_json(s.err_omega2)},
                        {"rank_omega1", mean_se_json(s.rank_omega1)},
                        {"rank_omega2", mean_se_json(s.rank_omega2)},
                        {"mc_omega1", mean_se_json(s.mc_omega1)},
                        {"mc_omega2", mean_se_json(s.mc_omega2)}});
    return {{"config_hash", config_hash_hex(cfg)},
            {"seed", cfg.seed},
            {"task", std::string(to_string(cfg.task))},
            {"kind", std::string(to_string(cfg.kind))},
            {"tau_max", cfg.tau_max},
            {"rows", rows}};
}

void write_curve_csv(std::ostream& os, const std::vector<SummaryRow>& rows,
                     const SweepConfig& cfg) {
    comment(os, "mean curves", cfg);
    os << "M1,M2,count,diverged,err_omega1,err_omega1_se,err_omega2,err_omega2_se,"
          "rank_omega1,rank_omega1_se,rank_omega2,rank_omega2_se,mc_omega1,mc_omega1_se,"
          "mc_omega2,mc_omega2_se\n";
    for (const auto& s : rows) {
        os << fmt::format("{},{},{},{}", s.m1, s.m2, s.count, s.diverged);
        for (const MeanSe* m : {&s.err_omega1, &s.err_omega2, &s.rank_omega1, &s.rank_omega2,
                                &s.mc_omega1, &s.mc_omega2})
            os << ',' << format_number(m->mean) << ',' << format_number(m->se);
        os << '\n';
    }
}

void write_rank_bins_csv(std::ostream& os, const std::vector<RankBin>& bins,
                         const SweepConfig& cfg) {
    comment(os, "error vs covariance rank", cfg);
    os << "M,rank_lo,rank_hi,count,err_mean,err_se\n";
    for (const auto& b : bins)
        os << fmt::format("{},{},{},{},{},{}\n", b.m, format_number(b.rank_lo),
                          format_number(b.rank_lo + cfg.scatter.bin_width), b.count,
                          format_number(b.err.mean), format_number(b.err.se));
}

void write_scatter_points_csv(std::ostream& os, const std::vector<RealizationRecord>& records,
                              const SweepConfig& cfg) {
    comment(os, "scatter points", cfg);
    os << "M,seed,rank,mc,err,diverged\n";
    for (const auto& r : records)
        os << fmt::format("{},{},{},{},{},{}\n", r.m1, r.seed, format_number(r.rank_omega1),
                          format_number(r.mc_omega1), format_number(r.err_omega1),
                          r.diverged ? 1 : 0);
}

void write_memory_table_csv(std::ostream& os, const std::vector<MemoryTableCell>& cells,
                            const SweepConfig& cfg) {
    comment(os, "memory capacity table", cfg);
    os << "nodes,columns,count,mc_mean,mc_se\n";
    for (const auto& c : cells) {
        const MeanSe m = mean_se(c.samples);
        os << fmt::format("{},{},{},{},{}\n", c.nodes, c.squares ? "r+r^2" : "r", c.samples.size(),
                          format_number(m.mean), format_number(m.se));
    }
}

} // namespace shiftres
