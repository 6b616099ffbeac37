#include "shiftres/readout.hpp"

#include "shiftres/dynamics.hpp"
#include "shiftres/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace shiftres {

std::vector<double> ShiftSchedule::taus() const {
    std::vector<double> out(m2);
    for (std::size_t j = 1; j <= m2; ++j)
        out[j - 1] = tau(j);
    return out;
}

namespace {

std::size_t resolve_count(const RowWindow& w, std::size_t available) {
    if (w.first > available)
        throw std::out_of_range(fmt::format("row window starts at {} but the trace has {} rows",
                                            w.first, available));
    const std::size_t rest = available - w.first;
    if (w.count == RowWindow::npos)
        return rest;
    if (w.count > rest)
        throw std::out_of_range(fmt::format("row window [{}, {}) exceeds the {} available rows",
                                            w.first, w.first + w.count, available));
    return w.count;
}

void require_usable(const NodeTrace& trace) {
    if (trace.diverged)
        throw NumericalFailure("cannot build a state matrix from a diverged trace");
}

// Value of a delay trace at time `grid * theta`, linearly interpolated
// between neighbouring theta samples.
double sample_theta_grid(const std::vector<double>& nu, std::size_t theta, double grid) {
    const double lo = std::floor(grid);
    const double frac = grid - lo;
    const auto i = static_cast<std::size_t>(lo);
    const double a = nu[i * theta];
    if (frac == 0.0)
        return a;
    return a + frac * (nu[(i + 1) * theta] - a);
}

} // namespace

StateMatrix build_state_matrix(const NodeTrace& trace, RowWindow window) {
    require_usable(trace);
    const std::size_t rows = resolve_count(window, trace.samples());
    const std::size_t cols = trace.node_count();
    StateMatrix out;
    out.columns.resize(cols);
    for (std::size_t k = 0; k < cols; ++k)
        out.columns[k] = {k + 1, 0.0, false};

    if (!trace.is_delay()) {
        out.data = trace.nodes.middleRows(static_cast<Eigen::Index>(window.first),
                                          static_cast<Eigen::Index>(rows));
        return out;
    }
    const auto& lay = trace.layout;
    out.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = (window.first + r) * lay.delay;
        for (std::size_t k = 0; k < cols; ++k)
            out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
                trace.nu[base + (k + 1) * lay.theta];
    }
    return out;
}

std::size_t shifted_warmup_rows(const NodeTrace& trace, const ShiftSchedule& schedule) {
    const double tau_max = schedule.m2 == 0 ? 0.0 : schedule.tau(schedule.m2);
    if (tau_max <= 0.0)
        return 0;
    if (!trace.is_delay())
        return static_cast<std::size_t>(std::ceil(tau_max));
    // Earliest sample in a row is node 1 at time theta + row * tau_D.
    const double need = (tau_max - static_cast<double>(trace.layout.theta)) /
                        static_cast<double>(trace.layout.delay);
    return need <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(need));
}

StateMatrix build_shifted_matrix(const NodeTrace& trace, const ShiftSchedule& schedule,
                                 RowWindow window) {
    require_usable(trace);
    if (schedule.m2 == 0)
        throw std::invalid_argument("shift schedule needs M2 >= 1");
    if (schedule.tau_max < 0.0)
        throw std::invalid_argument("tau_max must be non-negative");
    const std::size_t warmup = shifted_warmup_rows(trace, schedule);
    if (window.first < warmup)
        throw std::out_of_range(fmt::format(
            "shift schedule with tau_max={} reaches before the trace start; the row window "
            "must start at row {} or later (got {})",
            schedule.tau_max, warmup, window.first));

    const std::size_t rows = resolve_count(window, trace.samples());
    const std::size_t m1 = trace.node_count();
    if (m1 == 0)
        throw std::invalid_argument("trace has no nodes");

    StateMatrix out;
    out.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(schedule.m2));
    out.columns.resize(schedule.m2);
    for (std::size_t j = 1; j <= schedule.m2; ++j) {
        const std::size_t node = (j - 1) % m1 + 1;
        const double tau = schedule.tau(j);
        out.columns[j - 1] = {node, tau, false};
        const auto col = static_cast<Eigen::Index>(j - 1);

        if (trace.is_delay()) {
            const auto& lay = trace.layout;
            const double lag = tau / static_cast<double>(lay.theta);
            for (std::size_t r = 0; r < rows; ++r) {
                const double grid =
                    static_cast<double>(node + (window.first + r) * lay.virtual_nodes) - lag;
                out.data(static_cast<Eigen::Index>(r), col) =
                    sample_theta_grid(trace.nu, lay.theta, grid);
            }
        } else {
            const auto c = static_cast<Eigen::Index>(node - 1);
            for (std::size_t r = 0; r < rows; ++r) {
                const double t = static_cast<double>(window.first + r) - tau;
                const double lo = std::floor(t);
                const double frac = t - lo;
                const auto i = static_cast<Eigen::Index>(lo);
                double v = trace.nodes(i, c);
                if (frac != 0.0)
                    v += frac * (trace.nodes(i + 1, c) - v);
                out.data(static_cast<Eigen::Index>(r), col) = v;
            }
        }
    }
    return out;
}

StateMatrix augment_squares(const StateMatrix& m) {
    if (m.squares_augmented)
        throw std::invalid_argument("state matrix is already augmented with squares");
    StateMatrix out;
    out.data.resize(m.data.rows(), 2 * m.data.cols());
    out.data.leftCols(m.data.cols()) = m.data;
    out.data.rightCols(m.data.cols()) = m.data.array().square().matrix();
    out.columns = m.columns;
    for (auto c : m.columns) {
        c.squared = true;
        out.columns.push_back(c);
    }
    out.squares_augmented = true;
    return out;
}

double default_ridge(const Eigen::MatrixXd& data, double relative) {
    if (data.size() == 0)
        return 0.0;
    return relative * data.colwise().squaredNorm().maxCoeff();
}

RidgeSolver::RidgeSolver(const Eigen::MatrixXd& data, double ridge) : data_(&data), ridge_(ridge) {
    if (!(ridge >= 0.0))
        throw std::invalid_argument("ridge parameter must be non-negative");
    if (!data.allFinite())
        throw NumericalFailure("state matrix contains non-finite entries");
    const Eigen::Index m = data.cols();
    const double scale = static_cast<double>(std::max(data.rows(), m)) *
                         std::numeric_limits<double>::epsilon();
    if (ridge == 0.0) {
        // Minimum-norm least squares from the SVD of the data itself.
        Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.info() != Eigen::Success)
            throw NumericalFailure("singular value decomposition of the state matrix failed");
        left_ = svd.matrixU();
        basis_ = svd.matrixV();
        const Eigen::VectorXd& sigma = svd.singularValues();
        const double cutoff = sigma.size() > 0 ? scale * sigma[0] : 0.0;
        inv_.resize(sigma.size());
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            inv_[i] = sigma[i] > cutoff ? 1.0 / sigma[i] : 0.0;
        return;
    }

    Eigen::MatrixXd gram(m, m);
    gram.setZero();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(data.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
        throw NumericalFailure("eigendecomposition of the Gram matrix failed");
    basis_ = eig.eigenvectors();
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    inv_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i)
        inv_[i] = 1.0 / (std::max(lambda[i], 0.0) + ridge);
}

ReadoutModel RidgeSolver::solve(std::span<const double> target) const {
    if (target.size() != static_cast<std::size_t>(data_->rows()))
        throw std::invalid_argument(fmt::format("target has {} samples but the state matrix has {} rows",
                                                target.size(), data_->rows()));
    const Eigen::Map<const Eigen::VectorXd> f(target.data(),
                                              static_cast<Eigen::Index>(target.size()));
    Eigen::VectorXd proj = left_.size() > 0 ? (left_.transpose() * f).eval()
                                            : (basis_.transpose() * (data_->transpose() * f)).eval();
    proj.array() *= inv_.array();
    return {basis_ * proj, ridge_};
}

ReadoutModel ridge_train(const StateMatrix& m, std::span<const double> target, double ridge) {
    return RidgeSolver(m.data, ridge).solve(target);
}

Eigen::VectorXd predict(const StateMatrix& m, const ReadoutModel& model) {
    if (model.coeffs.size() != m.data.cols())
        throw std::invalid_argument(fmt::format("model has {} coefficients but the state matrix has {} columns",
                                                model.coeffs.size(), m.data.cols()));
    return m.data * model.coeffs;
}

double testing_error(const StateMatrix& m, const ReadoutModel& model,
                     std::span<const double> target) {
    if (target.size() != m.rows())
        throw std::invalid_argument(fmt::format("target has {} samples but the state matrix has {} rows",
                                                target.size(), m.rows()));
    const Eigen::VectorXd fit = predict(m, model);
    std::vector<double> residual(target.size());
    for (std::size_t i = 0; i < residual.size(); ++i)
        residual[i] = target[i] - fit[static_cast<Eigen::Index>(i)];
    const double scale = population_std(target);
    if (!(scale > 0.0))
        throw std::invalid_argument("testing target has zero variance");
    return population_std(residual) / scale;
}

void write_state_matrix_csv(std::ostream& os, const StateMatrix& m) {
    os << fmt::format("# shiftres state-matrix rows={} cols={} squares={}\n", m.rows(), m.cols(),
                      m.squares_augmented ? 1 : 0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        const ColumnSource src = c < m.columns.size() ? m.columns[c] : ColumnSource{c + 1, 0.0};
        os << (c ? "," : "") << fmt::format("n{}@{}{}", src.node, src.shift, src.squared ? "^2" : "");
    }
    os << '\n';
    std::string line;
    for (Eigen::Index r = 0; r < m.data.rows(); ++r) {
        line.clear();
        for (Eigen::Index c = 0; c < m.data.cols(); ++c) {
            if (c)
                line += ',';
            line += fmt::format("{}", m.data(r, c));
        }
        line += '\n';
        os << line;
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string cell = line.substr(start, comma - start);
        while (!cell.empty() && std::isspace(static_cast<unsigned char>(cell.back())))
            cell.pop_back();
        std::size_t lead = 0;
        while (lead < cell.size() && std::isspace(static_cast<unsigned char>(cell[lead])))
            ++lead;
        out.push_back(cell.substr(lead));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty())
        return false;
    const char* end = s.data() + s.size();
    const char* first = s.data();
    if (*first == '+')
        ++first;
    auto res = std::from_chars(first, end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

bool parse_source(const std::string& tok, ColumnSource& out) {
    if (tok.size() < 4 || tok[0] != 'n')
        return false;
    const auto at = tok.find('@');
    if (at == std::string::npos)
        return false;
    std::string shift = tok.substr(at + 1);
    out.squared = shift.size() > 2 && shift.ends_with("^2");
    if (out.squared)
        shift.resize(shift.size() - 2);
    const std::string node = tok.substr(1, at - 1);
    auto res = std::from_chars(node.data(), node.data() + node.size(), out.node);
    if (res.ec != std::errc{} || res.ptr != node.data() + node.size())
        return false;
    return parse_double(shift, out.shift);
}

} // namespace

StateMatrix read_state_matrix_csv(std::istream& is) {
    StateMatrix out;
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    std::size_t width = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        const auto cells = split_csv(line);
        if (!header_seen && rows.empty()) {
            std::vector<ColumnSource> sources(cells.size());
            bool all = true;
            for (std::size_t i = 0; i < cells.size() && all; ++i)
                all = parse_source(cells[i], sources[i]);
            if (all) {
                header_seen = true;
                out.columns = std::move(sources);
                width = cells.size();
                continue;
            }
        }
        if (width == 0)
            width = cells.size();
        if (cells.size() != width)
            throw std::runtime_error(fmt::format("line {}: expected {} values, found {}", line_no,
                                                 width, cells.size()));
        std::vector<double> row(width);
        for (std::size_t i = 0; i < width; ++i)
            if (!parse_double(cells[i], row[i]))
                throw std::runtime_error(
                    fmt::format("line {}: '{}' is not a number", line_no, cells[i]));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw std::runtime_error("state matrix CSV contains no data rows");

    out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    if (!out.data.allFinite())
        throw std::runtime_error("state matrix CSV contains non-finite values");
    if (out.columns.empty()) {
        out.columns.resize(width);
        for (std::size_t c = 0; c < width; ++c)
            out.columns[c] = {c + 1, 0.0, false};
    }
    for (const auto& c : out.columns)
        out.squares_augmented = out.squares_augmented || c.squared;
    return out;
}

} // namespace shiftres
