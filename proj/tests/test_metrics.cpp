#include "shiftres/metrics.hpp"
#include "shiftres/reservoir.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace shiftres;

namespace {

StateMatrix wrap(Eigen::MatrixXd d) {
    StateMatrix m;
    m.columns.resize(static_cast<std::size_t>(d.cols()));
    m.data = std::move(d);
    return m;
}

} // namespace

TEST_CASE("rank of simple structures") {
    std::mt19937_64 rng(1);
    const Eigen::VectorXd col = oracle::gaussian(100, 1, rng).col(0);
    const Eigen::MatrixXd same = col.replicate(1, 8);
    CHECK(covariance_rank(same).rank == 1);
    CHECK(covariance_rank(same, RankMode::direct).rank == 1);
    CHECK(covariance_rank(Eigen::MatrixXd::Zero(20, 4)).rank == 0);

    for (int draw = 0; draw < 100; ++draw) {
        const Eigen::MatrixXd g = oracle::gaussian(400, 20, rng);
        CHECK(covariance_rank(g).rank == 20);
    }

    const Eigen::MatrixXd g = oracle::gaussian(300, 12, rng);
    Eigen::MatrixXd dup(300, 13);
    dup << g, g.col(4);
    CHECK(covariance_rank(dup).rank == 12);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(13);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 13, rng);
    CHECK(covariance_rank(dup * perm).rank == 12);

    const auto r = covariance_rank(g);
    CHECK(r.singular_values.size() == 12);
    CHECK(std::is_sorted(r.singular_values.rbegin(), r.singular_values.rend()));
    const double smax = r.singular_values.front();
    CHECK(r.threshold == 300.0 * (std::nextafter(smax, INFINITY) - smax));
}

TEST_CASE("rank agrees with exact integer elimination") {
    std::mt19937_64 rng(7);
    int covariance_hits = 0, direct_hits = 0, trials = 0;
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<int> dims(1, 30);
        const Eigen::Index rows = dims(rng) + 10, cols = dims(rng);
        const Eigen::Index inner = std::uniform_int_distribution<Eigen::Index>(1, std::min(rows, cols))(rng);
        const Eigen::MatrixXd a = oracle::integer_matrix(rows, inner, 3, rng) * oracle::integer_matrix(inner, cols, 3, rng);
        const std::size_t exact = oracle::exact_rank(a);
        ++trials;
        covariance_hits += covariance_rank(a).rank == exact;
        direct_hits += covariance_rank(a, RankMode::direct).rank == exact;
    }
    CHECK(direct_hits == trials);
    CHECK(covariance_hits == trials);
}

TEST_CASE("squared correlation") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{2, 4, 6, 8.5};
    const std::vector<double> flat{3, 3, 3, 3};
    CHECK(squared_correlation(a, a) == doctest::Approx(1.0));
    CHECK(squared_correlation(a, std::vector<double>{-1, -2, -3, -4}) == doctest::Approx(1.0));
    CHECK(squared_correlation(a, b) < 1.0);
    CHECK(squared_correlation(a, flat) == 0.0);
}

TEST_CASE("memory capacity of an exact delay line") {
    const std::size_t d = 10, n = 4000;
    const auto noise = generate_uniform_noise(n, 3);
    const Eigen::MatrixXd states = oracle::delay_line(noise.values, d);
    MemoryOptions opts;
    opts.k_max = 30;
    opts.early_stop = false;
    const auto mc = memory_capacity(wrap(states), noise.values, 0, opts);
    REQUIRE(mc.per_delay.size() == 30);
    for (std::size_t k = 1; k <= d; ++k)
        CHECK(mc.per_delay[k - 1] == doctest::Approx(1.0).epsilon(1e-9));
    const double bound = 3.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t k = d + 1; k <= 30; ++k)
        CHECK(mc.per_delay[k - 1] < bound);
    CHECK(mc.total == doctest::Approx(static_cast<double>(d)).epsilon(0.05 / d));

    MemoryOptions early;
    early.k_max = 30;
    const auto stopped = memory_capacity(wrap(states), noise.values, 0, early);
    CHECK(stopped.k_max == d + 5);
}

TEST_CASE("memory capacity of unrelated states is near zero") {
    const std::size_t n = 4000;
    const auto noise = generate_uniform_noise(n, 5);
    std::mt19937_64 rng(9);
    const auto mc = memory_capacity(wrap(oracle::gaussian(static_cast<Eigen::Index>(n), 3, rng)), noise.values, 0,
                                    {20, 1e-8, false, 0.01, 5});
    for (double v : mc.per_delay)
        CHECK(v < 3.0 / std::sqrt(static_cast<double>(n)));

    const auto zero = memory_capacity(wrap(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 2)),
                                      noise.values, 0, {5, 1e-8, false, 0.01, 5});
    for (double v : zero.per_delay)
        CHECK(v == 0.0);
}

TEST_CASE("memory capacity does not drop when columns are added") {
    auto p = std::get<TanhParams>(draw_random_params(ReservoirKind::tanh, 30, 12));
    const auto noise = generate_uniform_noise(3000, 12);
    // Centred fit rows make the fitted correlation equal the explained variance.
    Eigen::MatrixXd states = simulate_tanh(p, noise).nodes.bottomRows(3000 - 15);
    states.rowwise() -= states.colwise().mean();
    const MemoryOptions opts{15, 0.0, false, 0.01, 5};
    std::vector<double> prev(15, 0.0);
    for (Eigen::Index cols : {5, 10, 20, 30}) {
        const auto mc = memory_capacity(wrap(states.leftCols(cols)), noise.values, 15, opts);
        for (std::size_t k = 0; k < 15; ++k) {
            CHECK(mc.per_delay[k] >= prev[k] - 1e-9);
            CHECK(mc.per_delay[k] <= 1.0 + 1e-12);
            prev[k] = mc.per_delay[k];
        }
    }
}

TEST_CASE("memory capacity argument checks") {
    const auto noise = generate_uniform_noise(100, 1);
    std::mt19937_64 rng(1);
    const auto m = wrap(oracle::gaussian(100, 2, rng));
    CHECK_THROWS_AS(memory_capacity(m, noise.values, 1), std::invalid_argument);
    CHECK_THROWS_AS(memory_capacity(m, noise.values, 0, {0, 1e-8, true, 0.01, 5}), std::invalid_argument);
    const auto closure = [](const TimeSeries& s) {
        StateMatrix st;
        st.data = Eigen::Map<const Eigen::VectorXd>(s.values.data(), static_cast<Eigen::Index>(s.size()));
        st.columns.resize(1);
        return DrivenStates{st, 0};
    };
    const auto a = memory_capacity(closure, 500, 4);
    const auto b = memory_capacity(closure, 500, 4);
    CHECK(a.per_delay == b.per_delay);
}
