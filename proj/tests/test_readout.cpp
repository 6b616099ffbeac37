#include "shiftres/readout.hpp"
#include "shiftres/reservoir.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace shiftres;

namespace {

StateMatrix wrap(Eigen::MatrixXd d) {
    StateMatrix m;
    m.columns.resize(static_cast<std::size_t>(d.cols()));
    for (std::size_t j = 0; j < m.columns.size(); ++j)
        m.columns[j] = {j + 1, 0.0, false};
    m.data = std::move(d);
    return m;
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out.data()[i] = nd(rng);
    return out;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double training_error(const StateMatrix& m, const std::vector<double>& f, double ridge) {
    return testing_error(m, ridge_train(m, f, ridge), f);
}

NodeTrace affine_delay_trace(std::size_t theta, std::size_t nodes, std::size_t samples) {
    NodeTrace t;
    t.layout = {theta, theta * nodes, nodes};
    t.nu.resize(samples * theta * nodes + 1);
    for (std::size_t i = 0; i < t.nu.size(); ++i)
        t.nu[i] = static_cast<double>(i);
    return t;
}

} // namespace

TEST_CASE("Omega_1 index arithmetic") {
    const auto t = affine_delay_trace(2, 2, 4);
    const auto m = build_state_matrix(t);
    REQUIRE(m.rows() == 4);
    REQUIRE(m.cols() == 2);
    CHECK(m.data(0, 0) == 2.0);
    CHECK(m.data(0, 1) == 4.0);
    CHECK(m.data(1, 0) == 6.0);
    CHECK(m.data(1, 1) == 8.0);
    CHECK(m.columns[1] == ColumnSource{2, 0.0, false});

    const auto w = build_state_matrix(t, {1, 2});
    CHECK(w.rows() == 2);
    CHECK(w.data(0, 0) == 6.0);

    NodeTrace single;
    single.nodes = gaussian(30, 1, 1);
    CHECK(build_state_matrix(single).data == single.nodes);
}

TEST_CASE("Omega_2 degenerates to Omega_1 at zero shift") {
    NodeTrace t;
    t.nodes = gaussian(50, 3, 2);
    const auto m2 = build_shifted_matrix(t, {0.0, 7});
    const auto m1 = build_state_matrix(t);
    for (Eigen::Index j = 0; j < 7; ++j)
        CHECK(m2.data.col(j) == m1.data.col(j % 3));

    auto p = std::get<OptoParams>(draw_random_params(ReservoirKind::opto, 4, 3));
    p.filter_time = 50.0;
    const auto o = simulate_opto(p, generate_uniform_noise(40, 3));
    const auto o1 = build_state_matrix(o);
    const auto o2 = build_shifted_matrix(o, {0.0, 4});
    CHECK(o1.data == o2.data);
}

TEST_CASE("Omega_2 sampling on and off the grid") {
    SUBCASE("delay reservoir") {
        const auto t = affine_delay_trace(4, 3, 20);
        const ShiftSchedule sched{24.0, 12}; // tau_j = 2j: odd j are half-theta shifts
        const std::size_t first = shifted_warmup_rows(t, sched);
        const auto m = build_shifted_matrix(t, sched, {first, RowWindow::npos});
        for (std::size_t j = 1; j <= 12; ++j) {
            const std::size_t node = (j - 1) % 3 + 1;
            for (std::size_t r = 0; r < m.rows(); ++r) {
                const double time = static_cast<double>(node * 4 + (first + r) * 12) - sched.tau(j);
                CHECK(m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 1)) == time);
            }
        }
    }
    SUBCASE("discrete reservoir") {
        NodeTrace t;
        t.nodes.resize(40, 2);
        for (Eigen::Index i = 0; i < 40; ++i) {
            t.nodes(i, 0) = 3.0 * i - 1.0;
            t.nodes(i, 1) = -0.5 * i;
        }
        const ShiftSchedule sched{5.0, 10};
        const auto m = build_shifted_matrix(t, sched, {5, RowWindow::npos});
        CHECK(m.rows() == 35);
        for (std::size_t j = 1; j <= 10; ++j)
            for (std::size_t r = 0; r < 35; ++r) {
                const double time = static_cast<double>(5 + r) - sched.tau(j);
                const double want = j % 2 ? 3.0 * time - 1.0 : -0.5 * time;
                CHECK(m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 1)) ==
                      doctest::Approx(want).epsilon(1e-14));
            }
    }
    SUBCASE("interpolated entries lie between grid neighbours") {
        NodeTrace t;
        t.nodes = gaussian(200, 4, 7);
        const ShiftSchedule sched{13.3, 37};
        const auto m = build_shifted_matrix(t, sched, {14, RowWindow::npos});
        for (std::size_t j = 1; j <= 37; ++j) {
            const auto c = static_cast<Eigen::Index>((j - 1) % 4);
            for (std::size_t r = 0; r < m.rows(); ++r) {
                const double time = static_cast<double>(14 + r) - sched.tau(j);
                const auto lo = static_cast<Eigen::Index>(std::floor(time));
                const double a = t.nodes(lo, c);
                const double b = t.nodes(std::min<Eigen::Index>(lo + 1, 199), c);
                const double v = m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j - 1));
                CHECK(v >= std::min(a, b));
                CHECK(v <= std::max(a, b));
            }
        }
    }
    SUBCASE("warmup diagnostic") {
        NodeTrace t;
        t.nodes = gaussian(30, 2, 1);
        CHECK(shifted_warmup_rows(t, {4.5, 3}) == 5);
        CHECK_THROWS_AS(build_shifted_matrix(t, {4.5, 3}, {4, RowWindow::npos}), std::out_of_range);
        CHECK_NOTHROW(build_shifted_matrix(t, {4.5, 3}, {5, RowWindow::npos}));
        CHECK_THROWS_AS(build_shifted_matrix(t, {1.0, 0}), std::invalid_argument);
    }
    SUBCASE("schedule") {
        const ShiftSchedule s{10.0, 200};
        const auto taus = s.taus();
        CHECK(taus.size() == 200);
        CHECK(std::is_sorted(taus.begin(), taus.end()));
        CHECK(std::adjacent_find(taus.begin(), taus.end()) == taus.end());
        CHECK(taus.back() == 10.0);
    }
}

TEST_CASE("augment_squares") {
    Eigen::MatrixXd d(4, 2);
    d << 1, 0, -1, 0, 1, 0, -1, 0;
    const auto a = augment_squares(wrap(d));
    CHECK(a.cols() == 4);
    CHECK(a.squares_augmented);
    CHECK(a.data.col(2) == Eigen::VectorXd::Ones(4));
    CHECK(a.data.col(3).isZero(0.0));
    CHECK(a.columns[2].squared);
    CHECK(a.columns[2].node == 1);
    CHECK_THROWS(augment_squares(a));
}

TEST_CASE("ridge regression") {
    SUBCASE("orthonormal columns") {
        const Eigen::MatrixXd q = gaussian(40, 5, 3).householderQr().householderQ() *
                                  Eigen::MatrixXd::Identity(40, 5);
        const auto f = to_vec(gaussian(40, 1, 4).col(0));
        const auto c = ridge_train(wrap(q), f, 0.0).coeffs;
        const Eigen::VectorXd want = q.transpose() * Eigen::Map<const Eigen::VectorXd>(f.data(), 40);
        CHECK((c - want).norm() < 1e-12);
    }
    SUBCASE("single column") {
        const Eigen::MatrixXd w = gaussian(25, 1, 5);
        const auto f = to_vec(gaussian(25, 1, 6).col(0));
        const double wf = w.col(0).dot(Eigen::Map<const Eigen::VectorXd>(f.data(), 25));
        for (double ridge : {0.0, 0.3, 12.0})
            CHECK(ridge_train(wrap(w), f, ridge).coeffs[0] ==
                  doctest::Approx(wf / (w.squaredNorm() + ridge)).epsilon(1e-12));
    }
    SUBCASE("consistent system is recovered") {
        const Eigen::MatrixXd a = gaussian(60, 8, 7);
        const Eigen::VectorXd c0 = gaussian(8, 1, 8).col(0);
        const auto c = ridge_train(wrap(a), to_vec(a * c0), 0.0).coeffs;
        CHECK((c - c0).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("random systems agree with the normal-equation oracle") {
        for (unsigned trial = 0; trial < 20; ++trial) {
            const Eigen::MatrixXd a = gaussian(50, 10, 100 + trial);
            const auto f = to_vec(gaussian(50, 1, 200 + trial).col(0));
            for (double ridge : {0.0, 1e-6, 0.5, 40.0}) {
                const auto c = ridge_train(wrap(a), f, ridge).coeffs;
                const auto oracle = oracle::normal_equations(a, f, ridge);
                for (std::size_t i = 0; i < 10; ++i)
                    CHECK(c[static_cast<Eigen::Index>(i)] == doctest::Approx(oracle[i]).epsilon(1e-8));
            }
        }
    }
    SUBCASE("rank-deficient system gives the minimum-norm solution") {
        Eigen::MatrixXd a(30, 3);
        a.leftCols(2) = gaussian(30, 2, 9);
        a.col(2) = a.col(0);
        const auto f = to_vec(gaussian(30, 1, 10).col(0));
        const auto c = ridge_train(wrap(a), f, 0.0).coeffs;
        const Eigen::VectorXd pinv = a.completeOrthogonalDecomposition().solve(
            Eigen::Map<const Eigen::VectorXd>(f.data(), 30));
        CHECK((c - pinv).norm() < 1e-9);
        CHECK(c[0] == doctest::Approx(c[2]).epsilon(1e-9));
    }
    SUBCASE("training error grows with ridge and shrinks with columns") {
        // Centred data: the fit minimizes the residual norm, which equals the
        // residual spread only when the residual mean vanishes.
        Eigen::MatrixXd a = gaussian(80, 12, 11);
        a.rowwise() -= a.colwise().mean();
        Eigen::VectorXd fv = gaussian(80, 1, 12).col(0);
        fv.array() -= fv.mean();
        const auto f = to_vec(fv);
        double prev = 0.0;
        for (double ridge : {0.0, 1e-3, 1e-1, 1.0, 10.0, 100.0, 1e4}) {
            const double e = training_error(wrap(a), f, ridge);
            CHECK(e >= prev - 1e-12);
            prev = e;
        }
        double last = 1.0 + 1e-12;
        for (Eigen::Index cols = 1; cols <= 12; ++cols) {
            const double e = training_error(wrap(a.leftCols(cols)), f, 0.0);
            CHECK(e <= last + 1e-12);
            last = e;
        }
    }
    SUBCASE("column permutation") {
        const Eigen::MatrixXd a = gaussian(70, 6, 13);
        const auto f = to_vec(gaussian(70, 1, 14).col(0));
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
        perm.indices() << 3, 0, 5, 1, 4, 2;
        const Eigen::MatrixXd b = a * perm;
        const auto ca = ridge_train(wrap(a), f, 0.01).coeffs;
        const auto cb = ridge_train(wrap(b), f, 0.01).coeffs;
        CHECK((perm.transpose() * ca - cb).norm() < 1e-10);
        CHECK(training_error(wrap(a), f, 0.01) == doctest::Approx(training_error(wrap(b), f, 0.01)));
    }
    SUBCASE("default ridge scale") {
        Eigen::MatrixXd a(3, 2);
        a << 1, 2, 1, 2, 1, 2;
        CHECK(default_ridge(a) == doctest::Approx(12e-8));
    }
    SUBCASE("mismatched target length") {
        CHECK_THROWS(ridge_train(wrap(gaussian(10, 2, 1)), std::vector<double>(9, 0.0), 0.0));
    }
}

TEST_CASE("testing error") {
    const Eigen::MatrixXd a = gaussian(50, 4, 21);
    const Eigen::VectorXd c0 = gaussian(4, 1, 22).col(0);
    const auto f = to_vec(a * c0);
    const auto m = wrap(a);
    CHECK(testing_error(m, {c0, 0.0}, f) < 1e-14);
    CHECK(testing_error(m, {Eigen::VectorXd::Zero(4), 0.0}, f) == 1.0);

    // A constant prediction leaves only the mean-removed target.
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(50, 1);
    Eigen::VectorXd k(1);
    k << 3.25;
    CHECK(testing_error(wrap(ones), {k, 0.0}, f) == doctest::Approx(1.0).epsilon(1e-14));

    // A residual that is a constant offset has zero spread.
    auto shifted = f;
    for (double& v : shifted)
        v += 2.0;
    CHECK(testing_error(m, {c0, 0.0}, shifted) < 1e-12);
}

TEST_CASE("state matrix CSV round trip") {
    NodeTrace t;
    t.nodes = gaussian(20, 3, 31);
    const auto m = augment_squares(build_shifted_matrix(t, {2.5, 5}, {3, RowWindow::npos}));
    std::stringstream ss;
    write_state_matrix_csv(ss, m);
    const auto back = read_state_matrix_csv(ss);
    CHECK(back.data == m.data);
    CHECK(back.columns == m.columns);
    CHECK(back.squares_augmented);

    std::istringstream plain("1,2\n3,4\n");
    const auto p = read_state_matrix_csv(plain);
    CHECK(p.rows() == 2);
    CHECK(p.data(1, 0) == 3.0);

    std::istringstream empty("");
    CHECK_THROWS(read_state_matrix_csv(empty));
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS(read_state_matrix_csv(ragged));
    std::istringstream junk("1,x\n");
    CHECK_THROWS(read_state_matrix_csv(junk));
}
