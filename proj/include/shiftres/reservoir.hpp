#pragma once

// The three reservoir types: a tanh map, a network of polynomial ODE nodes,
// and a time-multiplexed opto-electronic delay oscillator.

#include "shiftres/dynamics.hpp"
#include "shiftres/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>
#include <variant>
#include <vector>

namespace shiftres {

/// Sparse Gaussian coupling matrix rescaled to a target spectral radius.
struct Adjacency {
    Eigen::MatrixXd entries;
    double spectral_radius_target = 0.0;

    Eigen::Index size() const noexcept { return entries.rows(); }
};

enum class MaskKind { binary, uniform };

struct InputMask {
    Eigen::VectorXd weights;
    MaskKind kind = MaskKind::uniform;

    Eigen::Index size() const noexcept { return weights.size(); }
};

struct TanhParams {
    double g = 0.5;
    double eps = 0.5;
    Adjacency adjacency;
    InputMask mask;
};

struct PolyOdeParams {
    double p1 = -1.0;
    double p2 = 0.5;
    double p3 = 0.0;
    double alpha = 1.0;
    Adjacency adjacency;
    InputMask mask;
};

/// Opto-electronic delay oscillator. `rho_in` is the input gain, not a
/// spectral radius. The delay is tau_D = virtual_nodes * theta unit steps.
struct OptoParams {
    double filter_time = 200.0; ///< T_L
    double beta = 0.5;
    double rho_in = 1.0;
    double phi = 0.7853981633974483;
    std::size_t theta = 50;
    std::size_t virtual_nodes = 5;
    InputMask mask;

    std::size_t delay() const noexcept { return theta * virtual_nodes; }
};

enum class ReservoirKind { tanh, polyode, opto };

std::string_view to_string(ReservoirKind kind) noexcept;
ReservoirKind parse_reservoir_kind(std::string_view name);

using ReservoirParams = std::variant<TanhParams, PolyOdeParams, OptoParams>;

ReservoirKind kind_of(const ReservoirParams& params) noexcept;

/// Sampling layout of a delay reservoir trace.
struct DelayLayout {
    std::size_t theta = 0;
    std::size_t delay = 0; ///< tau_D in unit steps
    std::size_t virtual_nodes = 0;
};

/// Output of a reservoir simulation.
///
/// Discrete reservoirs fill `nodes`: row n is the state after the drive
/// sample s(n) has been applied, so it depends on s(0..n). Delay reservoirs
/// fill `nu` with nu(t) for t = 0..N*tau_D (nu(0) = 0), where the interval
/// (n*tau_D, (n+1)*tau_D] is the response to s(n).
struct NodeTrace {
    Eigen::MatrixXd nodes;
    std::vector<double> nu;
    DelayLayout layout;
    bool diverged = false;
    std::size_t diverged_at = 0; ///< first row (or step) that left the bound

    bool is_delay() const noexcept { return layout.delay > 0; }
    /// Number of drive samples represented.
    std::size_t samples() const noexcept {
        return is_delay() ? (nu.empty() ? 0 : (nu.size() - 1) / layout.delay)
                          : static_cast<std::size_t>(nodes.rows());
    }
    /// Number of nodes (virtual nodes for delay reservoirs).
    std::size_t node_count() const noexcept {
        return is_delay() ? layout.virtual_nodes : static_cast<std::size_t>(nodes.cols());
    }
};

/// Largest eigenvalue modulus.
double spectral_radius(const Eigen::MatrixXd& m);

/// Exactly ceil(M^2/2) standard-Gaussian entries at random positions, then
/// rescaled so the spectral radius equals `spectral_radius`. A draw with zero
/// spectral radius is redrawn from the next seed.
Adjacency build_adjacency(std::size_t m, double spectral_radius, Seed seed);

InputMask draw_binary_mask(std::size_t m, Seed seed);
InputMask draw_uniform_mask(std::size_t m, Seed seed);

/// State magnitude beyond which a continuous reservoir is declared diverged.
inline constexpr double kDivergenceBound = 1e6;

/// R(n+1) = g tanh(A R(n) + eps W s(n)), R(0) = 0.
NodeTrace simulate_tanh(const TanhParams& params, const TimeSeries& drive);

/// RK4 with unit step; the drive is held constant across each step.
NodeTrace simulate_polyode(const PolyOdeParams& params, const TimeSeries& drive);

/// RK4 with unit step on T_L nu' = -nu + beta sin^2(nu(t - tau_D) + phi + rho W(t) s_in(t)).
/// History is zero for t <= 0. Stage times t + 1/2 read the delayed term by
/// linear interpolation of the stored history and hold the input at its value
/// at t; the endpoints take s_in(t) = s(floor(t / tau_D)).
NodeTrace simulate_opto(const OptoParams& params, const TimeSeries& drive);

NodeTrace simulate(const ReservoirParams& params, const TimeSeries& drive);

/// Random parameter set for one realization: tanh draws g, eps and the
/// spectral radius from U(0,1); polyODE draws p1 in (-5,0), p2 in (0,1),
/// p3 in (-1,1), alpha in (0,5), spectral radius in (0,1); opto draws T_L in
/// (0,300), beta and rho in (0,1), phi in (0,pi). Opto uses theta = 50 and
/// `m` virtual nodes with a binary mask.
ReservoirParams draw_random_params(ReservoirKind kind, std::size_t m, Seed seed);

} // namespace shiftres
