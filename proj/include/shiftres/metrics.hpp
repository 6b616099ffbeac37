#pragma once

// Covariance rank and linear memory capacity of a state matrix.

#include "shiftres/dynamics.hpp"
#include "shiftres/readout.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace shiftres {

struct RankResult {
    std::size_t rank = 0;
    std::vector<double> singular_values; ///< descending
    double threshold = 0.0;
};

enum class RankMode {
    covariance, ///< singular values of Omega^T Omega (default)
    direct,     ///< singular values of Omega itself
};

/// Numerical rank with the MATLAB rank() tolerance: singular values above
/// max(rows, cols of Omega) * spacing(sigma_max) are counted, where
/// spacing(x) is the gap from x to the next larger double.
RankResult covariance_rank(const StateMatrix& m, RankMode mode = RankMode::covariance);
RankResult covariance_rank(const Eigen::MatrixXd& data, RankMode mode = RankMode::covariance);

struct MemoryResult {
    std::vector<double> per_delay; ///< MC_k for k = 1..k_max
    double total = 0.0;
    std::size_t k_max = 0; ///< delays actually evaluated
};

struct MemoryOptions {
    std::size_t k_max = 50;
    double ridge_relative = 1e-8;
    /// Stop after `stop_run` consecutive delays with MC_k < `stop_below`.
    bool early_stop = true;
    double stop_below = 0.01;
    std::size_t stop_run = 5;
};

/// Squared Pearson correlation; 0 if either side has zero variance.
double squared_correlation(std::span<const double> a, std::span<const double> b);

/// Memory capacity from states aligned with a drive: row n of `states` has
/// seen input[first_input + n] and everything before it. Delay k is fitted
/// from rows whose input index is at least k_max, so every delay uses the
/// same rows.
MemoryResult memory_capacity(const StateMatrix& states, std::span<const double> input,
                             std::size_t first_input, const MemoryOptions& options = {});

/// A state matrix plus the drive index of its first row.
struct DrivenStates {
    StateMatrix states;
    std::size_t first_input = 0;
};

/// Drives a reservoir (through `build`) with fresh U(-1,1) noise of
/// `n_samples` samples and measures its memory capacity.
MemoryResult memory_capacity(const std::function<DrivenStates(const TimeSeries&)>& build,
                             std::size_t n_samples, Seed seed, const MemoryOptions& options = {});

} // namespace shiftres
