#pragma once

// Seeded realizations of the observer-task experiments: node sweeps with a
// time-shifted readout, random-parameter scatter, and a simulation of the
// hardware drive/reset/test schedule.

#include "shiftres/dynamics.hpp"
#include "shiftres/metrics.hpp"
#include "shiftres/readout.hpp"
#include "shiftres/reservoir.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace shiftres {

enum class Task { lorenz, rossler };

std::string_view to_string(Task task) noexcept;
Task parse_task(std::string_view name);

/// Fixed opto-electronic parameters used by sweeps (random draws are only
/// used by the scatter protocol).
struct OptoSettings {
    double filter_time = 200.0;
    double beta = 0.5;
    double rho_in = 1.0;
    double phi = 0.7853981633974483;
    std::size_t theta = 50;
};

struct SignalLengths {
    std::size_t n_train = 8000;          ///< driver samples in the training run
    std::size_t n_test = 4000;           ///< driver samples in the test run
    std::size_t driver_transient = 1000; ///< driver steps discarded before sampling
    std::size_t reservoir_transient = 200; ///< reservoir rows discarded (delay periods)
};

/// Drive/reset/test schedule of the hardware run.
struct ProtocolSchedule {
    std::size_t drive = 8000;
    std::size_t reset = 100;
    std::size_t test = 4000;
};

struct ScatterSettings {
    std::vector<std::size_t> sizes{50, 100};
    std::size_t count = 100;
    double bin_width = 10.0; ///< covariance-rank bin width for the error-vs-rank curve
};

struct SweepConfig {
    Task task = Task::lorenz;
    ReservoirKind kind = ReservoirKind::opto;
    std::vector<std::size_t> m1{2, 5, 10, 20, 50, 100, 200};
    std::vector<std::size_t> m2{200};
    double tau_max = 10.0; ///< in delay periods (input samples)
    std::size_t realizations = 20;
    SignalLengths lengths;
    double ridge_relative = 1e-8;
    Seed seed = 1;
    OptoSettings opto;
    /// Augment Omega with squared columns; defaults to true for tanh only.
    std::optional<bool> augment_squares;
    bool compute_memory = true;
    std::size_t memory_length = 4000;
    std::size_t memory_k_max = 50;
    ScatterSettings scatter;
    ProtocolSchedule protocol;

    bool squares() const noexcept {
        return augment_squares.value_or(kind == ReservoirKind::tanh);
    }
};

/// Throws ConfigError if the configuration cannot run.
void validate(const SweepConfig& cfg);

/// Stable 64-bit hash of everything in the config except the master seed.
std::uint64_t config_hash(const SweepConfig& cfg);
std::string config_hash_hex(const SweepConfig& cfg);

/// One realization. Omega_2 fields are NaN when no shifted matrix was built
/// (scatter) and every metric is NaN when the reservoir diverged.
struct RealizationRecord {
    std::string config_hash;
    Task task = Task::lorenz;
    ReservoirKind kind = ReservoirKind::opto;
    std::size_t m1 = 0;
    std::size_t m2 = 0;
    double tau_max = 0.0;
    Seed seed = 0;
    double err_omega1 = 0.0;
    double err_omega2 = 0.0;
    double rank_omega1 = 0.0;
    double rank_omega2 = 0.0;
    double mc_omega1 = 0.0;
    double mc_omega2 = 0.0;
    bool diverged = false;
};

/// Seed of the r-th realization under `master`.
Seed realization_seed(Seed master, std::size_t r);

/// Reservoir used by a sweep realization: the configured opto oscillator
/// with a fresh binary mask, or a random draw for tanh/polyODE.
ReservoirParams sweep_reservoir(const SweepConfig& cfg, std::size_t m1, Seed seed);

/// Normalized observer signals: x drives, z is the target. The test pair is
/// normalized with the training statistics.
struct ObserverData {
    TimeSeries drive_train, target_train, drive_test, target_test;
};
ObserverData observer_data(Task task, const SignalLengths& lengths, Seed seed);

/// First usable row for a given trace and schedule: the reservoir transient or
/// the shift warmup, whichever is later.
std::size_t first_fit_row(const SweepConfig& cfg, const NodeTrace& trace,
                          const ShiftSchedule& schedule);

/// Trains Omega_1 and Omega_2 on identical target rows, reports the test
/// error of each on a fresh driver trajectory, their covariance ranks, and
/// (optionally) their memory capacities.
RealizationRecord run_observer_realization(const SweepConfig& cfg, std::size_t m1,
                                           std::size_t m2, Seed seed);

/// Same as run_observer_realization for every M2 in cfg.m2 (simulating once).
std::vector<RealizationRecord> run_observer_group(const SweepConfig& cfg, std::size_t m1,
                                                  Seed seed);

/// All (M1, M2, realization) records ordered by M2, then M1 (config order),
/// then realization index. Output does not depend on `jobs`.
std::vector<RealizationRecord> sweep_nodes(const SweepConfig& cfg, unsigned jobs = 1);

/// Random-parameter realizations for each size in cfg.scatter.sizes; no
/// shifted matrix is built.
std::vector<RealizationRecord> scatter_random_params(const SweepConfig& cfg, unsigned jobs = 1);

/// Drive for the hardware schedule: driven segment, zero segment, driven
/// segment from a fresh initial condition. Row windows are in input samples.
struct ProtocolDrive {
    TimeSeries drive;
    TimeSeries target;
    RowWindow train;
    RowWindow test;
};
ProtocolDrive protocol_drive(const SweepConfig& cfg, std::size_t first_row, Seed seed);

RealizationRecord run_protocol_realization(const SweepConfig& cfg, std::size_t m1,
                                           std::size_t m2, Seed seed);

/// The hardware schedule reproduced in simulation for every (M1, M2, mask).
std::vector<RealizationRecord> experiment_protocol_sim(const SweepConfig& cfg, unsigned jobs = 1);

/// Memory capacity of random tanh reservoirs with and without squared
/// columns. Each draw is measured both ways on the same noise drive.
struct MemoryTableCell {
    std::size_t nodes = 0;
    bool squares = false;
    std::vector<double> samples; ///< NaN for diverged draws (none for tanh)
};
std::vector<MemoryTableCell> memory_table(const SweepConfig& cfg, unsigned jobs = 1);

// Aggregation -------------------------------------------------------------

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Mean and standard error (sample std / sqrt(n)) of the finite values.
MeanSe mean_se(std::span<const double> values);

struct SummaryRow {
    std::size_t m1 = 0;
    std::size_t m2 = 0;
    std::size_t count = 0;
    std::size_t diverged = 0;
    MeanSe err_omega1, err_omega2, rank_omega1, rank_omega2, mc_omega1, mc_omega2;
};

/// Per-(M1, M2) means over non-diverged records; diverged ones are counted.
std::vector<SummaryRow> summarize(const std::vector<RealizationRecord>& records);

struct RankBin {
    std::size_t m = 0;
    double rank_lo = 0.0;
    std::size_t count = 0;
    MeanSe err;
};

/// Mean Omega_1 test error in covariance-rank bins, per reservoir size.
std::vector<RankBin> bin_by_rank(const std::vector<RealizationRecord>& records, double width);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace shiftres
