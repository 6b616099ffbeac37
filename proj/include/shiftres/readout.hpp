#pragma once

// State matrices built from reservoir traces, the ordered time-shift
// construction, and the ridge-regression readout.

#include "shiftres/reservoir.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace shiftres {

/// Where a state-matrix column came from: 1-based node index and the time
/// shift (reservoir time units) at which it was sampled.
struct ColumnSource {
    std::size_t node = 0;
    double shift = 0.0;
    bool squared = false;

    friend bool operator==(const ColumnSource&, const ColumnSource&) = default;
};

struct StateMatrix {
    Eigen::MatrixXd data;
    std::vector<ColumnSource> columns;
    bool squares_augmented = false;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(data.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(data.cols()); }
};

/// Ordered shifts tau_j = j * tau_max / M2 for j = 1..M2.
struct ShiftSchedule {
    double tau_max = 0.0;
    std::size_t m2 = 0;

    double tau(std::size_t j) const noexcept {
        return static_cast<double>(j) * tau_max / static_cast<double>(m2);
    }
    std::vector<double> taus() const;
};

/// Selects rows [first, first + count) of a state matrix; count = npos means
/// "through the end of the trace".
struct RowWindow {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t first = 0;
    std::size_t count = npos;
};

/// Omega_1. Discrete: row n holds r_i(n). Delay: row i holds
/// nu(k theta + i tau_D) for k = 1..M1. Throws if the trace diverged.
StateMatrix build_state_matrix(const NodeTrace& trace, RowWindow window = {});

/// Smallest first row for which every shifted sample lies inside the trace.
std::size_t shifted_warmup_rows(const NodeTrace& trace, const ShiftSchedule& schedule);

/// Omega_2. Column j (1-based) samples physical node k = ((j-1) mod M1) + 1 at
/// lag tau_j. Off-grid times are linearly interpolated between the two
/// neighbouring theta-grid samples (the unit grid for discrete reservoirs).
/// Throws std::out_of_range if the window starts before shifted_warmup_rows.
StateMatrix build_shifted_matrix(const NodeTrace& trace, const ShiftSchedule& schedule,
                                 RowWindow window = {});

/// Appends the elementwise square of every column.
StateMatrix augment_squares(const StateMatrix& m);

struct ReadoutModel {
    Eigen::VectorXd coeffs;
    double ridge = 0.0;
};

/// relative * max diag(Omega^T Omega).
double default_ridge(const Eigen::MatrixXd& data, double relative = 1e-8);

/// Ridge solve through the eigendecomposition of the Gram matrix, so one
/// factorization serves any number of targets. With ridge = 0 the SVD of the
/// data is used instead and singular values below max(N,M) * eps * sigma_max
/// are dropped, giving the minimum-norm least-squares solution. `data` must
/// outlive the solver.
class RidgeSolver {
public:
    RidgeSolver(const Eigen::MatrixXd& data, double ridge);
    RidgeSolver(Eigen::MatrixXd&&, double) = delete;

    ReadoutModel solve(std::span<const double> target) const;
    double ridge() const noexcept { return ridge_; }

private:
    const Eigen::MatrixXd* data_;
    Eigen::MatrixXd left_; ///< U of the SVD; empty when ridge > 0
    Eigen::MatrixXd basis_;
    Eigen::VectorXd inv_;
    double ridge_;
};

/// C = (Omega^T Omega + ridge I)^-1 Omega^T f.
ReadoutModel ridge_train(const StateMatrix& m, std::span<const double> target, double ridge);

Eigen::VectorXd predict(const StateMatrix& m, const ReadoutModel& model);

/// std(f - Omega C) / std(f), population standard deviations.
double testing_error(const StateMatrix& m, const ReadoutModel& model,
                     std::span<const double> target);

/// Row-major CSV; a comment line, then a header of column provenance tokens
/// `n<node>@<shift>` (suffix `^2` for squared columns).
void write_state_matrix_csv(std::ostream& os, const StateMatrix& m);

/// Reads the format above. A headerless numeric CSV is accepted as well.
/// Throws std::runtime_error on empty input or ragged rows.
StateMatrix read_state_matrix_csv(std::istream& is);

} // namespace shiftres
