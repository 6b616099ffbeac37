#pragma once

// Drive and training signals: fixed-step RK4, the Lorenz and Rossler
// observer systems, and uniform noise for memory-capacity runs.

#include "shiftres/random.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace shiftres {

/// Uniformly sampled scalar signal.
struct TimeSeries {
    std::vector<double> values;
    double dt = 1.0; ///< integration time units per sample
    double t0 = 0.0;
    bool diverged = false;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const noexcept { return values; }
};

struct LorenzParams {
    double p1 = 10.0;
    double p2 = 28.0;
    double p3 = 8.0 / 3.0;
    double time_scale = 0.1;
    /// RK4 steps per unit sample interval.
    std::size_t steps_per_sample = 1;
};

struct RosslerParams {
    double p1 = 1.0;
    double p2 = 0.2;
    double p3 = 0.2;
    double p4 = 5.7;
    double time_scale = 0.65;
    /// RK4 steps per unit sample interval. A single unit step is unstable at
    /// time_scale = 0.65 (the z spike exceeds the RK4 stability region).
    std::size_t steps_per_sample = 10;
};

/// One classical Runge-Kutta step of dy/dt = f(t, y).
/// `State` is any Eigen vector type; non-finite results are returned as-is
/// and the caller decides whether that counts as divergence.
template <typename State, typename Field>
State rk4_step(Field&& f, const State& y, double t, double h) {
    const double half = 0.5 * h;
    const State k1 = f(t, y);
    const State k2 = f(t + half, (y + half * k1).eval());
    const State k3 = f(t + half, (y + half * k2).eval());
    const State k4 = f(t + h, (y + h * k3).eval());
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::Vector3d lorenz_derivative(const LorenzParams& p, const Eigen::Vector3d& s);
Eigen::Vector3d rossler_derivative(const RosslerParams& p, const Eigen::Vector3d& s);

/// Integrates with unit step from `initial`, returning `n_steps` states after
/// the initial one. Throws NumericalFailure if the state leaves |s| < 1e6.
std::vector<Eigen::Vector3d> integrate_lorenz(const LorenzParams& p, Eigen::Vector3d initial,
                                              std::size_t n_steps, double h = 1.0);
std::vector<Eigen::Vector3d> integrate_rossler(const RosslerParams& p, Eigen::Vector3d initial,
                                               std::size_t n_steps, double h = 1.0);

/// Observer-task pair: the measured x and the target z.
struct ObserverSignals {
    TimeSeries x;
    TimeSeries z;
};

/// Samples at unit intervals of the scaled time, integrating with
/// `steps_per_sample` RK4 steps per interval. The initial condition is uniform
/// in [-5,5]^3 from `seed`; the first `transient` samples are discarded. A
/// start outside the attractor's basin is redrawn deterministically (up to 16
/// times) before NumericalFailure is thrown.
ObserverSignals generate_lorenz(const LorenzParams& p, std::size_t n_samples, Seed seed,
                                std::size_t transient = 1000);
ObserverSignals generate_rossler(const RosslerParams& p, std::size_t n_samples, Seed seed,
                                 std::size_t transient = 1000);

/// Population mean and standard deviation (divide by N).
struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};
Moments moments(std::span<const double> v);
double population_std(std::span<const double> v);

/// Affine map (v - mean) / stddev. Throws std::invalid_argument on zero variance.
TimeSeries normalize(const TimeSeries& s);
/// Applies the normalization fitted on another signal.
TimeSeries normalize_with(const TimeSeries& s, const Moments& reference);

/// i.i.d. uniform samples on [-1, 1].
TimeSeries generate_uniform_noise(std::size_t n_samples, Seed seed);

} // namespace shiftres
