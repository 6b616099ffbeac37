#include "shiftres/experiment.hpp"

#include "shiftres/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

namespace shiftres {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results land at their
// index, so scheduling never changes the output order.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

ObserverSignals generate_task(Task task, std::size_t n, Seed seed, std::size_t transient) {
    return task == Task::lorenz ? generate_lorenz(LorenzParams{}, n, seed, transient)
                                : generate_rossler(RosslerParams{}, n, seed, transient);
}

std::span<const double> tail(const TimeSeries& s, const RowWindow& w) {
    const std::size_t count = w.count == RowWindow::npos ? s.size() - w.first : w.count;
    return std::span<const double>(s.values).subspan(w.first, count);
}

std::size_t delay_of(const NodeTrace& trace) {
    return trace.is_delay() ? trace.layout.delay : 1;
}

RealizationRecord blank_record(const SweepConfig& cfg, std::size_t m1, std::size_t m2, Seed seed) {
    RealizationRecord r;
    r.config_hash = config_hash_hex(cfg);
    r.task = cfg.task;
    r.kind = cfg.kind;
    r.m1 = m1;
    r.m2 = m2;
    r.tau_max = cfg.tau_max;
    r.seed = seed;
    r.err_omega1 = r.err_omega2 = kNaN;
    r.rank_omega1 = r.rank_omega2 = kNaN;
    r.mc_omega1 = r.mc_omega2 = kNaN;
    return r;
}

struct Evaluation {
    double error = kNaN;
    double rank = kNaN;
    double memory = kNaN;
};

// Train on one window, test on another, rank and optional memory capacity.
template <typename Build>
Evaluation evaluate(const SweepConfig& cfg, Build&& build, const NodeTrace& train_trace,
                    RowWindow train_rows, std::span<const double> train_target,
                    const NodeTrace& test_trace, RowWindow test_rows,
                    std::span<const double> test_target, const NodeTrace* memory_trace,
                    const TimeSeries* memory_drive, std::size_t memory_first) {
    auto matrix = [&](const NodeTrace& trace, RowWindow w) {
        StateMatrix m = build(trace, w);
        return cfg.squares() ? augment_squares(m) : m;
    };
    const StateMatrix train = matrix(train_trace, train_rows);
    const StateMatrix test = matrix(test_trace, test_rows);
    const ReadoutModel model =
        ridge_train(train, train_target, default_ridge(train.data, cfg.ridge_relative));

    Evaluation out;
    out.error = testing_error(test, model, test_target);
    out.rank = static_cast<double>(covariance_rank(train).rank);
    if (memory_trace) {
        const StateMatrix states = matrix(*memory_trace, {memory_first});
        MemoryOptions opts;
        opts.k_max = cfg.memory_k_max;
        opts.ridge_relative = cfg.ridge_relative;
        out.memory = memory_capacity(states, memory_drive->values, memory_first, opts).total;
    }
    return out;
}

void fill(RealizationRecord& r, const Evaluation& one, const Evaluation& two) {
    r.err_omega1 = one.error;
    r.rank_omega1 = one.rank;
    r.mc_omega1 = one.memory;
    r.err_omega2 = two.error;
    r.rank_omega2 = two.rank;
    r.mc_omega2 = two.memory;
}

ShiftSchedule schedule_for(const SweepConfig& cfg, const NodeTrace& trace, std::size_t m2) {
    return {cfg.tau_max * static_cast<double>(delay_of(trace)), m2};
}

auto plain_builder() {
    return [](const NodeTrace& t, RowWindow w) { return build_state_matrix(t, w); };
}

auto shifted_builder(const ShiftSchedule& schedule) {
    return [schedule](const NodeTrace& t, RowWindow w) {
        return build_shifted_matrix(t, schedule, w);
    };
}

struct MemoryRun {
    TimeSeries noise;
    NodeTrace trace;
};

std::optional<MemoryRun> memory_run(const SweepConfig& cfg, const ReservoirParams& params,
                                    std::size_t first, Seed seed) {
    if (!cfg.compute_memory)
        return std::nullopt;
    MemoryRun run;
    run.noise = generate_uniform_noise(first + cfg.memory_length,
                                       derive_seed(seed, stream::memory_noise));
    run.trace = simulate(params, run.noise);
    return run;
}

} // namespace

std::string_view to_string(Task task) noexcept {
    return task == Task::lorenz ? "lorenz" : "rossler";
}

Task parse_task(std::string_view name) {
    if (name == "lorenz" || name == "lorenz-observer")
        return Task::lorenz;
    if (name == "rossler" || name == "rossler-observer")
        return Task::rossler;
    throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

void validate(const SweepConfig& cfg) {
    if (cfg.m1.empty())
        throw ConfigError("m1 list is empty");
    if (cfg.m2.empty())
        throw ConfigError("m2 list is empty");
    for (auto m : cfg.m1)
        if (m == 0)
            throw ConfigError("m1 entries must be positive");
    for (auto m : cfg.m2)
        if (m == 0)
            throw ConfigError("m2 entries must be positive");
    if (cfg.realizations == 0)
        throw ConfigError("realizations must be at least 1");
    if (!(cfg.tau_max >= 0.0) || !std::isfinite(cfg.tau_max))
        throw ConfigError("tau_max must be finite and non-negative");
    if (cfg.lengths.n_train == 0 || cfg.lengths.n_test == 0)
        throw ConfigError("signal lengths must be positive");
    const std::size_t warm =
        std::max(cfg.lengths.reservoir_transient,
                 static_cast<std::size_t>(std::ceil(cfg.tau_max)));
    if (warm + 2 > cfg.lengths.n_train || warm + 2 > cfg.lengths.n_test)
        throw ConfigError(fmt::format("n_train and n_test must exceed the {}-row warmup", warm));
    if (!(cfg.ridge_relative >= 0.0))
        throw ConfigError("ridge must be non-negative");
    if (cfg.opto.theta == 0)
        throw ConfigError("opto.theta must be at least 1");
    if (!(cfg.opto.filter_time > 0.0))
        throw ConfigError("opto.tl must be positive");
    if (cfg.compute_memory && cfg.memory_length <= cfg.memory_k_max + 1)
        throw ConfigError("memory_length must exceed memory_kmax");
    if (cfg.memory_k_max == 0)
        throw ConfigError("memory_kmax must be at least 1");
    if (cfg.protocol.drive <= warm + 1 || cfg.protocol.test < 2)
        throw ConfigError("protocol segments are too short for the warmup");
    if (cfg.scatter.count == 0 || cfg.scatter.sizes.empty())
        throw ConfigError("scatter needs a positive count and at least one size");
    if (!(cfg.scatter.bin_width > 0.0))
        throw ConfigError("scatter.bin_width must be positive");
}

Seed realization_seed(Seed master, std::size_t r) {
    return derive_seed(master, 0x100000 + static_cast<std::uint64_t>(r));
}

ReservoirParams sweep_reservoir(const SweepConfig& cfg, std::size_t m1, Seed seed) {
    if (cfg.kind != ReservoirKind::opto)
        return draw_random_params(cfg.kind, m1, seed);
    OptoParams p;
    p.filter_time = cfg.opto.filter_time;
    p.beta = cfg.opto.beta;
    p.rho_in = cfg.opto.rho_in;
    p.phi = cfg.opto.phi;
    p.theta = cfg.opto.theta;
    p.virtual_nodes = m1;
    p.mask = draw_binary_mask(m1, seed);
    return p;
}

ObserverData observer_data(Task task, const SignalLengths& lengths, Seed seed) {
    const auto train = generate_task(task, lengths.n_train, derive_seed(seed, stream::drive_train),
                                     lengths.driver_transient);
    const auto test = generate_task(task, lengths.n_test, derive_seed(seed, stream::drive_test),
                                    lengths.driver_transient);
    const Moments mx = moments(train.x.values);
    const Moments mz = moments(train.z.values);
    return {normalize_with(train.x, mx), normalize_with(train.z, mz), normalize_with(test.x, mx),
            normalize_with(test.z, mz)};
}

std::size_t first_fit_row(const SweepConfig& cfg, const NodeTrace& trace,
                          const ShiftSchedule& schedule) {
    return std::max({cfg.lengths.reservoir_transient,
                     static_cast<std::size_t>(std::ceil(cfg.tau_max)),
                     shifted_warmup_rows(trace, schedule)});
}

std::vector<RealizationRecord> run_observer_group(const SweepConfig& cfg, std::size_t m1,
                                                  Seed seed) {
    std::vector<RealizationRecord> out;
    for (auto m2 : cfg.m2)
        out.push_back(blank_record(cfg, m1, m2, seed));

    const ReservoirParams params = sweep_reservoir(cfg, m1, seed);
    const ObserverData data = observer_data(cfg.task, cfg.lengths, seed);
    const NodeTrace train = simulate(params, data.drive_train);
    const NodeTrace test = simulate(params, data.drive_test);
    auto mark_diverged = [&] {
        for (auto& r : out)
            r.diverged = true;
        return out;
    };
    if (train.diverged || test.diverged)
        return mark_diverged();

    const std::size_t first = first_fit_row(cfg, train, schedule_for(cfg, train, cfg.m2.front()));
    const RowWindow rows{first};
    const auto mem = memory_run(cfg, params, first, seed);
    if (mem && mem->trace.diverged)
        return mark_diverged();
    const NodeTrace* mem_trace = mem ? &mem->trace : nullptr;
    const TimeSeries* mem_drive = mem ? &mem->noise : nullptr;

    const auto train_target = tail(data.target_train, rows);
    const auto test_target = tail(data.target_test, rows);
    const Evaluation one = evaluate(cfg, plain_builder(), train, rows, train_target, test, rows,
                                    test_target, mem_trace, mem_drive, first);
    for (auto& r : out) {
        const Evaluation two =
            evaluate(cfg, shifted_builder(schedule_for(cfg, train, r.m2)), train, rows,
                     train_target, test, rows, test_target, mem_trace, mem_drive, first);
        fill(r, one, two);
    }
    return out;
}

RealizationRecord run_observer_realization(const SweepConfig& cfg, std::size_t m1,
                                           std::size_t m2, Seed seed) {
    SweepConfig single = cfg;
    single.m2 = {m2};
    auto records = run_observer_group(single, m1, seed);
    records.front().config_hash = config_hash_hex(cfg);
    return records.front();
}

namespace {

template <typename Group>
std::vector<RealizationRecord> run_grid(const SweepConfig& cfg, unsigned jobs, Group&& group) {
    validate(cfg);
    const std::size_t units = cfg.m1.size() * cfg.realizations;
    std::vector<std::vector<RealizationRecord>> results(units);
    parallel_for(units, jobs, [&](std::size_t i) {
        const std::size_t m1 = cfg.m1[i / cfg.realizations];
        const Seed seed = realization_seed(cfg.seed, i % cfg.realizations);
        results[i] = group(cfg, m1, seed);
    });
    std::vector<RealizationRecord> out;
    out.reserve(units * cfg.m2.size());
    for (std::size_t j = 0; j < cfg.m2.size(); ++j)
        for (const auto& unit : results)
            out.push_back(unit[j]);
    return out;
}

} // namespace

std::vector<RealizationRecord> sweep_nodes(const SweepConfig& cfg, unsigned jobs) {
    return run_grid(cfg, jobs, [](const SweepConfig& c, std::size_t m1, Seed seed) {
        return run_observer_group(c, m1, seed);
    });
}

std::vector<RealizationRecord> scatter_random_params(const SweepConfig& cfg, unsigned jobs) {
    validate(cfg);
    const auto& sizes = cfg.scatter.sizes;
    const std::size_t units = sizes.size() * cfg.scatter.count;
    std::vector<RealizationRecord> out(units);
    parallel_for(units, jobs, [&](std::size_t i) {
        const std::size_t m = sizes[i / cfg.scatter.count];
        const Seed seed = derive_seed(realization_seed(cfg.seed, i % cfg.scatter.count), m);
        RealizationRecord rec = blank_record(cfg, m, 0, seed);

        const ReservoirParams params = draw_random_params(cfg.kind, m, seed);
        const ObserverData data = observer_data(cfg.task, cfg.lengths, seed);
        const NodeTrace train = simulate(params, data.drive_train);
        const NodeTrace test = simulate(params, data.drive_test);
        const std::size_t first = cfg.lengths.reservoir_transient;
        const auto mem = train.diverged || test.diverged ? std::nullopt
                                                         : memory_run(cfg, params, first, seed);
        if (train.diverged || test.diverged || (mem && mem->trace.diverged)) {
            rec.diverged = true;
            out[i] = rec;
            return;
        }
        const RowWindow rows{first};
        const Evaluation one = evaluate(cfg, plain_builder(), train, rows,
                                        tail(data.target_train, rows), test, rows,
                                        tail(data.target_test, rows), mem ? &mem->trace : nullptr,
                                        mem ? &mem->noise : nullptr, first);
        rec.err_omega1 = one.error;
        rec.rank_omega1 = one.rank;
        rec.mc_omega1 = one.memory;
        out[i] = rec;
    });
    return out;
}

ProtocolDrive protocol_drive(const SweepConfig& cfg, std::size_t first_row, Seed seed) {
    const auto& sched = cfg.protocol;
    if (first_row >= sched.drive)
        throw ConfigError("protocol warmup covers the whole driven segment");
    SignalLengths lengths = cfg.lengths;
    lengths.n_train = sched.drive;
    lengths.n_test = sched.test;
    const ObserverData data = observer_data(cfg.task, lengths, seed);

    ProtocolDrive out;
    auto concat = [&](const TimeSeries& a, const TimeSeries& b) {
        TimeSeries s;
        s.values.reserve(sched.drive + sched.reset + sched.test);
        s.values = a.values;
        s.values.resize(sched.drive + sched.reset, 0.0);
        s.values.insert(s.values.end(), b.values.begin(), b.values.end());
        return s;
    };
    out.drive = concat(data.drive_train, data.drive_test);
    out.target = concat(data.target_train, data.target_test);
    out.train = {first_row, sched.drive - first_row};
    out.test = {sched.drive + sched.reset, sched.test};
    return out;
}

namespace {

std::vector<RealizationRecord> run_protocol_group(const SweepConfig& cfg, std::size_t m1,
                                                  Seed seed) {
    std::vector<RealizationRecord> out;
    for (auto m2 : cfg.m2)
        out.push_back(blank_record(cfg, m1, m2, seed));
    const ReservoirParams params = sweep_reservoir(cfg, m1, seed);

    // Warmup depends only on the layout, so size it on an empty trace.
    NodeTrace probe = simulate(params, TimeSeries{});
    const std::size_t first = first_fit_row(cfg, probe, schedule_for(cfg, probe, cfg.m2.front()));
    const ProtocolDrive pd = protocol_drive(cfg, first, seed);
    const NodeTrace trace = simulate(params, pd.drive);
    const auto mem = trace.diverged ? std::nullopt : memory_run(cfg, params, first, seed);
    if (trace.diverged || (mem && mem->trace.diverged)) {
        for (auto& r : out)
            r.diverged = true;
        return out;
    }
    const auto train_target = tail(pd.target, pd.train);
    const auto test_target = tail(pd.target, pd.test);
    const NodeTrace* mem_trace = mem ? &mem->trace : nullptr;
    const TimeSeries* mem_drive = mem ? &mem->noise : nullptr;
    const Evaluation one = evaluate(cfg, plain_builder(), trace, pd.train, train_target, trace,
                                    pd.test, test_target, mem_trace, mem_drive, first);
    for (auto& r : out) {
        const Evaluation two =
            evaluate(cfg, shifted_builder(schedule_for(cfg, trace, r.m2)), trace, pd.train,
                     train_target, trace, pd.test, test_target, mem_trace, mem_drive, first);
        fill(r, one, two);
    }
    return out;
}

} // namespace

RealizationRecord run_protocol_realization(const SweepConfig& cfg, std::size_t m1,
                                           std::size_t m2, Seed seed) {
    SweepConfig single = cfg;
    single.m2 = {m2};
    auto rec = run_protocol_group(single, m1, seed).front();
    rec.config_hash = config_hash_hex(cfg);
    return rec;
}

std::vector<RealizationRecord> experiment_protocol_sim(const SweepConfig& cfg, unsigned jobs) {
    return run_grid(cfg, jobs, run_protocol_group);
}

std::vector<MemoryTableCell> memory_table(const SweepConfig& cfg, unsigned jobs) {
    validate(cfg);
    const auto& sizes = cfg.scatter.sizes;
    const std::size_t count = cfg.scatter.count;
    std::vector<std::array<double, 2>> values(sizes.size() * count);
    parallel_for(values.size(), jobs, [&](std::size_t i) {
        const std::size_t m = sizes[i / count];
        const Seed seed = derive_seed(realization_seed(cfg.seed, i % count), m);
        const auto params = draw_random_params(ReservoirKind::tanh, m, seed);
        const std::size_t first = cfg.lengths.reservoir_transient;
        const TimeSeries noise = generate_uniform_noise(first + cfg.memory_length,
                                                        derive_seed(seed, stream::memory_noise));
        const NodeTrace trace = simulate(params, noise);
        MemoryOptions opts;
        opts.k_max = cfg.memory_k_max;
        opts.ridge_relative = cfg.ridge_relative;
        const StateMatrix plain = build_state_matrix(trace, {first});
        values[i][0] = memory_capacity(plain, noise.values, first, opts).total;
        values[i][1] = memory_capacity(augment_squares(plain), noise.values, first, opts).total;
    });
    std::vector<MemoryTableCell> out;
    for (std::size_t s = 0; s < sizes.size(); ++s)
        for (int sq = 0; sq < 2; ++sq) {
            MemoryTableCell cell{sizes[s], sq == 1, {}};
            for (std::size_t r = 0; r < count; ++r)
                cell.samples.push_back(values[s * count + r][static_cast<std::size_t>(sq)]);
            out.push_back(std::move(cell));
        }
    return out;
}

MeanSe mean_se(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values)
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    if (n == 0)
        return {kNaN, kNaN};
    const double mean = sum / static_cast<double>(n);
    if (n == 1)
        return {mean, kNaN};
    double ss = 0.0;
    for (double v : values)
        if (std::isfinite(v))
            ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

std::vector<SummaryRow> summarize(const std::vector<RealizationRecord>& records) {
    // Keyed by first appearance so the row order follows the record order.
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const RealizationRecord*>> groups;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.m1, r.m2);
        if (!groups.contains(key))
            keys.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : keys) {
        const auto& group = groups[key];
        SummaryRow row;
        row.m1 = key.first;
        row.m2 = key.second;
        std::vector<double> e1, e2, g1, g2, c1, c2;
        for (const auto* r : group) {
            if (r->diverged) {
                ++row.diverged;
                continue;
            }
            ++row.count;
            e1.push_back(r->err_omega1);
            e2.push_back(r->err_omega2);
            g1.push_back(r->rank_omega1);
            g2.push_back(r->rank_omega2);
            c1.push_back(r->mc_omega1);
            c2.push_back(r->mc_omega2);
        }
        row.err_omega1 = mean_se(e1);
        row.err_omega2 = mean_se(e2);
        row.rank_omega1 = mean_se(g1);
        row.rank_omega2 = mean_se(g2);
        row.mc_omega1 = mean_se(c1);
        row.mc_omega2 = mean_se(c2);
        out.push_back(row);
    }
    return out;
}

std::vector<RankBin> bin_by_rank(const std::vector<RealizationRecord>& records, double width) {
    if (!(width > 0.0))
        throw std::invalid_argument("bin width must be positive");
    std::map<std::pair<std::size_t, long>, std::vector<double>> bins;
    for (const auto& r : records) {
        if (r.diverged || !std::isfinite(r.rank_omega1) || !std::isfinite(r.err_omega1))
            continue;
        const long b = static_cast<long>(std::floor(r.rank_omega1 / width));
        bins[{r.m1, b}].push_back(r.err_omega1);
    }
    std::vector<RankBin> out;
    for (const auto& [key, errs] : bins)
        out.push_back({key.first, static_cast<double>(key.second) * width, errs.size(),
                       mean_se(errs)});
    return out;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

} // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("spearman needs two equal-length samples of size >= 2");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const Moments ma = moments(ra), mb = moments(rb);
    if (!(ma.stddev > 0.0) || !(mb.stddev > 0.0))
        return kNaN;
    double cov = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i)
        cov += (ra[i] - ma.mean) * (rb[i] - mb.mean);
    return cov / static_cast<double>(ra.size()) / (ma.stddev * mb.stddev);
}

} // namespace shiftres
