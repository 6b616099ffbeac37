#include "shiftres/reservoir.hpp"

#include "shiftres/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace shiftres {

std::string_view to_string(ReservoirKind kind) noexcept {
    switch (kind) {
    case ReservoirKind::tanh:
        return "tanh";
    case ReservoirKind::polyode:
        return "polyode";
    case ReservoirKind::opto:
        return "opto";
    }
    return "unknown";
}

ReservoirKind parse_reservoir_kind(std::string_view name) {
    if (name == "tanh")
        return ReservoirKind::tanh;
    if (name == "polyode")
        return ReservoirKind::polyode;
    if (name == "opto")
        return ReservoirKind::opto;
    throw std::invalid_argument("unknown reservoir kind '" + std::string(name) + "'");
}

ReservoirKind kind_of(const ReservoirParams& params) noexcept {
    return static_cast<ReservoirKind>(params.index());
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.size() == 0)
        return 0.0;
    if (m.rows() == 1)
        return std::abs(m(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("eigenvalue computation failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Adjacency build_adjacency(std::size_t m, double target, Seed seed) {
    if (m == 0)
        throw std::invalid_argument("adjacency needs at least one node");
    if (!(target > 0.0))
        throw std::invalid_argument("spectral radius target must be positive");

    const std::size_t cells = m * m;
    const std::size_t filled = (cells + 1) / 2;
    std::vector<std::size_t> order(cells);
    for (Seed attempt = seed;; ++attempt) {
        auto rng = make_engine(derive_seed(attempt, stream::adjacency));
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::normal_distribution<double> gauss(0.0, 1.0);

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                  static_cast<Eigen::Index>(m));
        for (std::size_t c = 0; c < filled; ++c) {
            const auto idx = order[c];
            double v = 0.0;
            while (v == 0.0)
                v = gauss(rng);
            a(static_cast<Eigen::Index>(idx / m), static_cast<Eigen::Index>(idx % m)) = v;
        }
        const double raw = spectral_radius(a);
        if (raw > 0.0 && std::isfinite(raw)) {
            a *= target / raw;
            return {std::move(a), target};
        }
    }
}

InputMask draw_binary_mask(std::size_t m, Seed seed) {
    auto rng = make_engine(derive_seed(seed, stream::mask));
    std::bernoulli_distribution coin(0.5);
    InputMask mask{Eigen::VectorXd(static_cast<Eigen::Index>(m)), MaskKind::binary};
    for (Eigen::Index i = 0; i < mask.weights.size(); ++i)
        mask.weights[i] = coin(rng) ? 1.0 : -1.0;
    return mask;
}

InputMask draw_uniform_mask(std::size_t m, Seed seed) {
    auto rng = make_engine(derive_seed(seed, stream::mask));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    InputMask mask{Eigen::VectorXd(static_cast<Eigen::Index>(m)), MaskKind::uniform};
    for (Eigen::Index i = 0; i < mask.weights.size(); ++i)
        mask.weights[i] = u(rng);
    return mask;
}

namespace {

void check_network(const Adjacency& adj, const InputMask& mask) {
    if (adj.entries.rows() == 0 || adj.entries.rows() != adj.entries.cols())
        throw std::invalid_argument("adjacency must be a non-empty square matrix");
    if (mask.size() != adj.entries.rows())
        throw std::invalid_argument("input mask length " + std::to_string(mask.size()) +
                                    " does not match node count " +
                                    std::to_string(adj.entries.rows()));
}

} // namespace

NodeTrace simulate_tanh(const TanhParams& params, const TimeSeries& drive) {
    check_network(params.adjacency, params.mask);
    const Eigen::Index m = params.adjacency.entries.rows();
    const auto n = static_cast<Eigen::Index>(drive.size());
    const Eigen::VectorXd input = params.eps * params.mask.weights;

    NodeTrace trace;
    trace.nodes.resize(n, m);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd pre(m);
    for (Eigen::Index t = 0; t < n; ++t) {
        pre.noalias() = params.adjacency.entries * state;
        pre += drive.values[static_cast<std::size_t>(t)] * input;
        state = params.g * pre.array().tanh();
        trace.nodes.row(t) = state.transpose();
    }
    return trace;
}

NodeTrace simulate_polyode(const PolyOdeParams& params, const TimeSeries& drive) {
    check_network(params.adjacency, params.mask);
    const Eigen::Index m = params.adjacency.entries.rows();
    const auto n = static_cast<Eigen::Index>(drive.size());

    NodeTrace trace;
    trace.nodes = Eigen::MatrixXd::Zero(n, m);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd input(m);
    auto field = [&](double, const Eigen::VectorXd& r) -> Eigen::VectorXd {
        Eigen::VectorXd d = params.adjacency.entries * r + input;
        d.array() += r.array() * (params.p1 + r.array() * (params.p2 + params.p3 * r.array()));
        return params.alpha * d;
    };
    for (Eigen::Index t = 0; t < n; ++t) {
        input = drive.values[static_cast<std::size_t>(t)] * params.mask.weights;
        state = rk4_step(field, state, static_cast<double>(t), 1.0);
        if (!state.allFinite() || state.cwiseAbs().maxCoeff() > kDivergenceBound) {
            trace.diverged = true;
            trace.diverged_at = static_cast<std::size_t>(t);
            break;
        }
        trace.nodes.row(t) = state.transpose();
    }
    return trace;
}

NodeTrace simulate_opto(const OptoParams& p, const TimeSeries& drive) {
    if (p.theta == 0 || p.virtual_nodes == 0)
        throw std::invalid_argument("opto reservoir needs theta >= 1 and at least one node");
    if (!(p.filter_time > 0.0))
        throw std::invalid_argument("filter time constant must be positive");
    if (static_cast<std::size_t>(p.mask.size()) != p.virtual_nodes)
        throw std::invalid_argument("input mask length does not match virtual node count");

    const std::size_t theta = p.theta;
    const std::size_t nodes = p.virtual_nodes;
    const std::size_t delay = p.delay();
    const std::size_t n = drive.size();

    NodeTrace trace;
    trace.layout = {theta, delay, nodes};
    trace.nu.assign(n * delay + 1, 0.0);
    if (n == 0)
        return trace;

    const double inv_tl = 1.0 / p.filter_time;
    const double* s = drive.values.data();
    const double* w = p.mask.weights.data();
    double* nu = trace.nu.data();

    auto drive_term = [&](double delayed, double input) {
        const double v = std::sin(delayed + p.phi + p.rho_in * input);
        return p.beta * v * v;
    };
    auto history = [&](std::size_t t) { return t >= delay ? nu[t - delay] : 0.0; };

    double y = 0.0;
    // Forcing at the left endpoint of the current step; equals the previous
    // step's right-endpoint forcing.
    double f_left = drive_term(0.0, w[0] * s[0]);
    std::size_t t = 0;
    for (std::size_t sample = 0; sample < n; ++sample) {
        const double s_now = s[sample];
        const double s_next = sample + 1 < n ? s[sample + 1] : s_now;
        for (std::size_t k = 0; k < nodes; ++k) {
            const double u_hold = w[k] * s_now;
            for (std::size_t q = 0; q < theta; ++q, ++t) {
                double u_right = u_hold;
                if (q + 1 == theta)
                    u_right = (k + 1 < nodes) ? w[k + 1] * s_now : w[0] * s_next;
                const double d0 = history(t);
                const double d1 = history(t + 1);
                const double f_mid = drive_term(0.5 * (d0 + d1), u_hold);
                const double f_right = drive_term(d1, u_right);

                const double k1 = (f_left - y) * inv_tl;
                const double k2 = (f_mid - (y + 0.5 * k1)) * inv_tl;
                const double k3 = (f_mid - (y + 0.5 * k2)) * inv_tl;
                const double k4 = (f_right - (y + k3)) * inv_tl;
                y += (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
                f_left = f_right;

                if (!(std::abs(y) <= kDivergenceBound)) {
                    trace.diverged = true;
                    trace.diverged_at = t + 1;
                    std::fill(trace.nu.begin() + static_cast<std::ptrdiff_t>(t + 1),
                              trace.nu.end(), 0.0);
                    return trace;
                }
                nu[t + 1] = y;
            }
        }
    }
    return trace;
}

NodeTrace simulate(const ReservoirParams& params, const TimeSeries& drive) {
    return std::visit(
        [&](const auto& p) -> NodeTrace {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TanhParams>)
                return simulate_tanh(p, drive);
            else if constexpr (std::is_same_v<T, PolyOdeParams>)
                return simulate_polyode(p, drive);
            else
                return simulate_opto(p, drive);
        },
        params);
}

ReservoirParams draw_random_params(ReservoirKind kind, std::size_t m, Seed seed) {
    auto rng = make_engine(derive_seed(seed, stream::params));
    // Open interval: a zero spectral radius or filter time is not drawable.
    auto uniform = [&rng](double lo, double hi) {
        std::uniform_real_distribution<double> u(lo, hi);
        double v = u(rng);
        while (v == lo)
            v = u(rng);
        return v;
    };
    switch (kind) {
    case ReservoirKind::tanh: {
        TanhParams p;
        p.g = uniform(0.0, 1.0);
        p.eps = uniform(0.0, 1.0);
        p.adjacency = build_adjacency(m, uniform(0.0, 1.0), seed);
        p.mask = draw_uniform_mask(m, seed);
        return p;
    }
    case ReservoirKind::polyode: {
        PolyOdeParams p;
        p.p1 = uniform(-5.0, 0.0);
        p.p2 = uniform(0.0, 1.0);
        p.p3 = uniform(-1.0, 1.0);
        p.alpha = uniform(0.0, 5.0);
        p.adjacency = build_adjacency(m, uniform(0.0, 1.0), seed);
        p.mask = draw_uniform_mask(m, seed);
        return p;
    }
    case ReservoirKind::opto: {
        OptoParams p;
        p.filter_time = uniform(0.0, 300.0);
        p.beta = uniform(0.0, 1.0);
        p.rho_in = uniform(0.0, 1.0);
        p.phi = uniform(0.0, std::numbers::pi);
        p.theta = 50;
        p.virtual_nodes = m;
        p.mask = draw_binary_mask(m, seed);
        return p;
    }
    }
    throw std::invalid_argument("unknown reservoir kind");
}

} // namespace shiftres
