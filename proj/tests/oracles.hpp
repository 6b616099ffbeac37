#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Normal equations (A^T A + ridge I) c = A^T f by Gaussian elimination with
/// partial pivoting.
inline std::vector<double> normal_equations(const Eigen::MatrixXd& a, const std::vector<double>& f,
                                            double ridge) {
    const auto n = static_cast<std::size_t>(a.rows());
    const auto m = static_cast<std::size_t>(a.cols());
    std::vector<std::vector<double>> g(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t r = 0; r < n; ++r)
                g[i][j] += a(r, i) * a(r, j);
        g[i][i] += ridge;
        for (std::size_t r = 0; r < n; ++r)
            g[i][m] += a(r, i) * f[r];
    }
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < m; ++r)
            if (std::abs(g[r][c]) > std::abs(g[piv][c]))
                piv = r;
        std::swap(g[c], g[piv]);
        for (std::size_t r = c + 1; r < m; ++r) {
            const double k = g[r][c] / g[c][c];
            for (std::size_t j = c; j <= m; ++j)
                g[r][j] -= k * g[c][j];
        }
    }
    std::vector<double> x(m);
    for (std::size_t c = m; c-- > 0;) {
        double s = g[c][m];
        for (std::size_t j = c + 1; j < m; ++j)
            s -= g[c][j] * x[j];
        x[c] = s / g[c][c];
    }
    return x;
}

/// Exact rank of an integer-valued matrix by fraction-free (Bareiss) elimination.
inline std::size_t exact_rank(const Eigen::MatrixXd& a) {
    using boost::multiprecision::cpp_int;
    const auto rows = static_cast<std::size_t>(a.rows());
    const auto cols = static_cast<std::size_t>(a.cols());
    std::vector<std::vector<cpp_int>> m(rows, std::vector<cpp_int>(cols));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            m[i][j] = static_cast<long long>(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    cpp_int prev = 1;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < cols && rank < rows; ++c) {
        std::size_t piv = rank;
        while (piv < rows && m[piv][c] == 0)
            ++piv;
        if (piv == rows)
            continue;
        std::swap(m[rank], m[piv]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            for (std::size_t j = c + 1; j < cols; ++j)
                m[r][j] = (m[r][j] * m[rank][c] - m[r][c] * m[rank][j]) / prev;
            m[r][c] = 0;
        }
        prev = m[rank][c];
        ++rank;
    }
    return rank;
}

inline Eigen::MatrixXd integer_matrix(Eigen::Index rows, Eigen::Index cols, int spread,
                                      std::mt19937_64& rng) {
    std::uniform_int_distribution<int> u(-spread, spread);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out.data()[i] = u(rng);
    return out;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out.data()[i] = nd(rng);
    return out;
}

/// Delay line of depth d: row n holds the inputs s(n-1), ..., s(n-d).
inline Eigen::MatrixXd delay_line(const std::vector<double>& s, std::size_t d) {
    const auto n = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t k = 1; k <= d && k <= i; ++k)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = s[i - k];
    return out;
}

/// Log-log slopes of the RK4 global error on y' = -y over [0, 2].
inline std::vector<double> rk4_decay_orders(
    const std::function<double(double y, double h)>& step, const std::vector<double>& hs) {
    std::vector<double> errs;
    for (double h : hs) {
        double y = 1.0;
        const long steps = std::lround(2.0 / h);
        for (long i = 0; i < steps; ++i)
            y = step(y, h);
        errs.push_back(std::abs(y - std::exp(-2.0)));
    }
    std::vector<double> out;
    for (std::size_t i = 1; i < hs.size(); ++i)
        out.push_back(std::log(errs[i - 1] / errs[i]) / std::log(hs[i - 1] / hs[i]));
    return out;
}

} // namespace oracle
