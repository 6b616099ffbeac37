#include "shiftres/metrics.hpp"

#include "shiftres/errors.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace shiftres {

RankResult covariance_rank(const Eigen::MatrixXd& data, RankMode mode) {
    if (!data.allFinite())
        throw NumericalFailure("rank of a matrix with non-finite entries");
    RankResult out;
    if (data.size() == 0)
        return out;
    Eigen::VectorXd sv;
    if (mode == RankMode::covariance) {
        const Eigen::MatrixXd gram = data.transpose() * data;
        sv = Eigen::BDCSVD<Eigen::MatrixXd>(gram).singularValues();
    } else {
        sv = Eigen::BDCSVD<Eigen::MatrixXd>(data).singularValues();
    }
    out.singular_values.assign(sv.data(), sv.data() + sv.size());
    const double top = sv.size() ? sv[0] : 0.0;
    const double spacing = std::nextafter(top, std::numeric_limits<double>::infinity()) - top;
    out.threshold = static_cast<double>(std::max(data.rows(), data.cols())) * spacing;
    for (double s : out.singular_values)
        if (s > out.threshold)
            ++out.rank;
    return out;
}

RankResult covariance_rank(const StateMatrix& m, RankMode mode) {
    return covariance_rank(m.data, mode);
}

double squared_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("squared_correlation needs equal, non-empty lengths");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0))
        return 0.0;
    return (sab * sab) / (saa * sbb);
}

MemoryResult memory_capacity(const StateMatrix& states, std::span<const double> input,
                             std::size_t first_input, const MemoryOptions& options) {
    if (options.k_max == 0)
        throw std::invalid_argument("k_max must be at least 1");
    if (first_input + states.rows() > input.size())
        throw std::invalid_argument("state rows extend past the end of the drive");
    const std::size_t skip = first_input >= options.k_max ? 0 : options.k_max - first_input;
    if (skip + 2 > states.rows())
        throw std::invalid_argument(
            fmt::format("memory capacity needs more than {} rows (have {})", skip + 1, states.rows()));

    const std::size_t rows = states.rows() - skip;
    const Eigen::MatrixXd fit_rows = states.data.bottomRows(static_cast<Eigen::Index>(rows));
    const RidgeSolver solver(fit_rows, default_ridge(fit_rows, options.ridge_relative));

    MemoryResult out;
    std::vector<double> delayed(rows);
    std::size_t quiet = 0;
    for (std::size_t k = 1; k <= options.k_max; ++k) {
        const std::size_t base = first_input + skip; // input index of fit row 0
        for (std::size_t n = 0; n < rows; ++n)
            delayed[n] = input[base + n - k];
        const ReadoutModel model = solver.solve(delayed);
        const Eigen::VectorXd h = fit_rows * model.coeffs;
        const double mc = squared_correlation(delayed, std::span<const double>(h.data(), rows));
        out.per_delay.push_back(mc);
        out.total += mc;
        quiet = mc < options.stop_below ? quiet + 1 : 0;
        if (options.early_stop && quiet >= options.stop_run)
            break;
    }
    out.k_max = out.per_delay.size();
    return out;
}

MemoryResult memory_capacity(const std::function<DrivenStates(const TimeSeries&)>& build,
                             std::size_t n_samples, Seed seed, const MemoryOptions& options) {
    const TimeSeries noise = generate_uniform_noise(n_samples, seed);
    const DrivenStates driven = build(noise);
    return memory_capacity(driven.states, noise.values, driven.first_input, options);
}

} // namespace shiftres
