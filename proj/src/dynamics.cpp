#include "shiftres/dynamics.hpp"

#include "shiftres/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shiftres {

namespace {

constexpr double kBound = 1e6;

template <typename Field>
std::vector<Eigen::Vector3d> integrate(Field&& f, Eigen::Vector3d state, std::size_t n_steps,
                                       double h, const char* name) {
    if (!(h > 0.0))
        throw std::invalid_argument("integration step must be positive");
    std::vector<Eigen::Vector3d> out;
    out.reserve(n_steps);
    double t = 0.0;
    for (std::size_t n = 0; n < n_steps; ++n) {
        state = rk4_step(f, state, t, h);
        t += h;
        if (!state.allFinite() || state.cwiseAbs().maxCoeff() > kBound)
            throw NumericalFailure(std::string(name) + " trajectory diverged at step " +
                                   std::to_string(n + 1));
        out.push_back(state);
    }
    return out;
}

Eigen::Vector3d random_initial_state(Seed seed, std::uint64_t attempt) {
    auto rng = make_engine(derive_seed(derive_seed(seed, stream::initial_state), attempt));
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    Eigen::Vector3d s;
    for (int i = 0; i < 3; ++i)
        s[i] = u(rng);
    return s;
}

void check_lengths(std::size_t n_samples) {
    if (n_samples == 0)
        throw std::invalid_argument("n_samples must be positive");
}

template <typename Integrate>
ObserverSignals sample_xz(Integrate&& run, std::size_t steps_per_sample, std::size_t n_samples,
                          Seed seed, std::size_t transient) {
    check_lengths(n_samples);
    if (steps_per_sample == 0)
        throw std::invalid_argument("steps_per_sample must be at least 1");
    const double h = 1.0 / static_cast<double>(steps_per_sample);
    const std::size_t total = (transient + n_samples) * steps_per_sample;
    constexpr std::uint64_t attempts = 16;
    for (std::uint64_t attempt = 0;; ++attempt) {
        std::vector<Eigen::Vector3d> traj;
        try {
            traj = run(random_initial_state(seed, attempt), total, h);
        } catch (const NumericalFailure&) {
            if (attempt + 1 == attempts)
                throw;
            continue;
        }
        ObserverSignals out;
        out.x.values.resize(n_samples);
        out.z.values.resize(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const auto& s = traj[(transient + i + 1) * steps_per_sample - 1];
            out.x.values[i] = s[0];
            out.z.values[i] = s[2];
        }
        out.x.t0 = out.z.t0 = static_cast<double>(transient + 1);
        return out;
    }
}

} // namespace

Eigen::Vector3d lorenz_derivative(const LorenzParams& p, const Eigen::Vector3d& s) {
    return p.time_scale * Eigen::Vector3d(p.p1 * (s[1] - s[0]),
                                          s[0] * (p.p2 - s[2]) - s[1],
                                          s[0] * s[1] - p.p3 * s[2]);
}

Eigen::Vector3d rossler_derivative(const RosslerParams& p, const Eigen::Vector3d& s) {
    return p.time_scale * Eigen::Vector3d(-s[1] - p.p1 * s[2],
                                          s[0] + p.p2 * s[1],
                                          p.p3 + s[2] * (s[0] - p.p4));
}

std::vector<Eigen::Vector3d> integrate_lorenz(const LorenzParams& p, Eigen::Vector3d initial,
                                              std::size_t n_steps, double h) {
    auto f = [&p](double, const Eigen::Vector3d& s) { return lorenz_derivative(p, s); };
    return integrate(f, initial, n_steps, h, "Lorenz");
}

std::vector<Eigen::Vector3d> integrate_rossler(const RosslerParams& p, Eigen::Vector3d initial,
                                               std::size_t n_steps, double h) {
    auto f = [&p](double, const Eigen::Vector3d& s) { return rossler_derivative(p, s); };
    return integrate(f, initial, n_steps, h, "Rossler");
}

ObserverSignals generate_lorenz(const LorenzParams& p, std::size_t n_samples, Seed seed,
                                std::size_t transient) {
    auto run = [&p](const Eigen::Vector3d& y0, std::size_t n, double h) {
        return integrate_lorenz(p, y0, n, h);
    };
    return sample_xz(run, p.steps_per_sample, n_samples, seed, transient);
}

ObserverSignals generate_rossler(const RosslerParams& p, std::size_t n_samples, Seed seed,
                                 std::size_t transient) {
    auto run = [&p](const Eigen::Vector3d& y0, std::size_t n, double h) {
        return integrate_rossler(p, y0, n, h);
    };
    return sample_xz(run, p.steps_per_sample, n_samples, seed, transient);
}

Moments moments(std::span<const double> v) {
    if (v.empty())
        throw std::invalid_argument("moments of an empty sequence");
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

double population_std(std::span<const double> v) { return moments(v).stddev; }

TimeSeries normalize_with(const TimeSeries& s, const Moments& reference) {
    if (!(reference.stddev > 0.0) || !std::isfinite(reference.stddev))
        throw std::invalid_argument("cannot normalize a zero-variance signal");
    TimeSeries out = s;
    for (double& x : out.values)
        x = (x - reference.mean) / reference.stddev;
    return out;
}

TimeSeries normalize(const TimeSeries& s) { return normalize_with(s, moments(s.values)); }

TimeSeries generate_uniform_noise(std::size_t n_samples, Seed seed) {
    check_lengths(n_samples);
    auto rng = make_engine(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TimeSeries out;
    out.values.resize(n_samples);
    for (double& x : out.values)
        x = u(rng);
    return out;
}

} // namespace shiftres
