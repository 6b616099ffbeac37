#include "shiftres/cli.hpp"

#include "shiftres/config.hpp"
#include "shiftres/errors.hpp"
#include "shiftres/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace shiftres::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    bool json = false;
};

SweepConfig load(const Common& c, const SweepConfig& defaults = {}) {
    SweepConfig cfg = c.config.empty() ? defaults : load_config(c.config);
    if (c.seed)
        cfg.seed = *c.seed;
    validate(cfg);
    return cfg;
}

fs::path prepare_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ConfigError("cannot create output directory '" + dir + "'");
    return fs::path(dir);
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw ConfigError("cannot write '" + path.string() + "'");
    writer(os);
    if (!os)
        throw ConfigError("write failed for '" + path.string() + "'");
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

std::string figure_name(const SweepConfig& cfg, std::string_view prefix) {
    return fmt::format("{}_{}.csv", prefix, to_string(cfg.task));
}

void print_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << fmt::format("{:>5} {:>5} {:>5} {:>12} {:>12} {:>9} {:>9} {:>8} {:>8}\n", "M1", "M2",
                       "n", "err(O1)", "err(O2)", "rank(O1)", "rank(O2)", "MC(O1)", "MC(O2)");
    for (const auto& s : rows)
        out << fmt::format("{:>5} {:>5} {:>5} {:>12.5g} {:>12.5g} {:>9.1f} {:>9.1f} {:>8.2f} {:>8.2f}\n",
                           s.m1, s.m2, s.count, s.err_omega1.mean, s.err_omega2.mean,
                           s.rank_omega1.mean, s.rank_omega2.mean, s.mc_omega1.mean,
                           s.mc_omega2.mean);
}

int cmd_generate(const Common& c, const std::string& task, std::size_t n, std::size_t transient,
                 bool normalized, std::ostream& out) {
    const Seed seed = c.seed.value_or(1);
    std::ofstream file;
    std::ostream* os = &out;
    if (c.out != "-" && c.out != ".") {
        file.open(c.out, std::ios::binary);
        if (!file)
            throw ConfigError("cannot write '" + c.out + "'");
        os = &file;
    }
    *os << fmt::format("# shiftres generate task={} n={} seed={} transient={} normalized={}\n",
                       task, n, seed, transient, normalized ? 1 : 0);
    if (task == "noise") {
        const TimeSeries s = generate_uniform_noise(n, seed);
        *os << "n,s\n";
        for (std::size_t i = 0; i < n; ++i)
            *os << i << ',' << format_number(s[i]) << '\n';
        return ok;
    }
    const Task t = parse_task(task);
    auto sig = t == Task::lorenz ? generate_lorenz({}, n, seed, transient)
                                 : generate_rossler({}, n, seed, transient);
    if (normalized) {
        sig.x = normalize(sig.x);
        sig.z = normalize(sig.z);
    }
    *os << "n,x,z\n";
    for (std::size_t i = 0; i < n; ++i)
        *os << i << ',' << format_number(sig.x[i]) << ',' << format_number(sig.z[i]) << '\n';
    return ok;
}

int cmd_simulate(const Common& c, std::ostream& out) {
    const SweepConfig cfg = load(c);
    const fs::path dir = prepare_dir(c.out);
    const std::size_t m1 = cfg.m1.front();
    const std::size_t m2 = cfg.m2.front();
    const Seed seed = realization_seed(cfg.seed, 0);
    const auto params = sweep_reservoir(cfg, m1, seed);
    const auto data = observer_data(cfg.task, cfg.lengths, seed);
    const NodeTrace trace = simulate(params, data.drive_train);
    if (trace.diverged)
        throw NumericalFailure("reservoir diverged");
    const ShiftSchedule schedule{
        cfg.tau_max * static_cast<double>(trace.is_delay() ? trace.layout.delay : 1), m2};
    const RowWindow rows{first_fit_row(cfg, trace, schedule)};
    StateMatrix one = build_state_matrix(trace, rows);
    StateMatrix two = build_shifted_matrix(trace, schedule, rows);
    if (cfg.squares()) {
        one = augment_squares(one);
        two = augment_squares(two);
    }
    write_file(dir / "omega1.csv", [&](std::ostream& os) { write_state_matrix_csv(os, one); });
    write_file(dir / "omega2.csv", [&](std::ostream& os) { write_state_matrix_csv(os, two); });
    write_file(dir / "target.csv", [&](std::ostream& os) {
        os << "# shiftres training target config_hash=" << config_hash_hex(cfg) << "\nf\n";
        for (std::size_t i = rows.first; i < data.target_train.size(); ++i)
            os << format_number(data.target_train[i]) << '\n';
    });
    out << fmt::format("wrote {}x{} and {}x{} state matrices to {}\n", one.rows(), one.cols(),
                       two.rows(), two.cols(), dir.string());
    return ok;
}

int cmd_sweep(const Common& c, std::ostream& out) {
    const SweepConfig cfg = load(c);
    const fs::path dir = prepare_dir(c.out);
    const auto records = sweep_nodes(cfg, c.jobs);
    const auto summary = summarize(records);
    write_file(dir / "results.csv", [&](std::ostream& os) { write_records_csv(os, records, cfg); });
    write_json(dir / "summary.json", summary_json(records, cfg));
    const char* fig = cfg.task == Task::lorenz ? "fig3" : "fig4";
    write_file(dir / figure_name(cfg, fig),
               [&](std::ostream& os) { write_curve_csv(os, summary, cfg); });
    if (c.json)
        out << summary_json(records, cfg).dump(2) << '\n';
    else
        print_summary(out, summary);
    return ok;
}

int cmd_scatter(const Common& c, std::ostream& out) {
    SweepConfig defaults;
    defaults.kind = ReservoirKind::tanh;
    const SweepConfig cfg = load(c, defaults);
    const fs::path dir = prepare_dir(c.out);
    const auto records = scatter_random_params(cfg, c.jobs);
    const auto bins = bin_by_rank(records, cfg.scatter.bin_width);
    std::vector<double> ranks, errs;
    std::size_t diverged = 0;
    for (const auto& r : records) {
        if (r.diverged) {
            ++diverged;
            continue;
        }
        ranks.push_back(r.rank_omega1);
        errs.push_back(r.err_omega1);
    }
    const double rho = ranks.size() >= 2 ? spearman(ranks, errs) : std::nan("");
    const std::string tag = fmt::format("{}_{}", to_string(cfg.task), to_string(cfg.kind));
    write_file(dir / "scatter_results.csv",
               [&](std::ostream& os) { write_records_csv(os, records, cfg); });
    write_file(dir / ("fig1_" + tag + ".csv"),
               [&](std::ostream& os) { write_rank_bins_csv(os, bins, cfg); });
    write_file(dir / ("fig2_" + tag + ".csv"),
               [&](std::ostream& os) { write_scatter_points_csv(os, records, cfg); });
    nlohmann::json j = {{"config_hash", config_hash_hex(cfg)},
                        {"realizations", records.size()},
                        {"diverged", diverged},
                        {"spearman_rank_error", std::isfinite(rho) ? nlohmann::json(rho) : nullptr}};
    write_json(dir / "scatter_summary.json", j);
    if (c.json)
        out << j.dump(2) << '\n';
    else
        out << fmt::format("{} realizations ({} diverged), Spearman(rank, error) = {:.3f}\n",
                           records.size(), diverged, rho);
    return ok;
}

int cmd_metrics(const Common& c, const std::string& path, const std::string& mode,
                const std::string& drive_path, std::size_t first_input, std::ostream& out) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open '" + path + "'");
    StateMatrix m;
    try {
        m = read_state_matrix_csv(is);
    } catch (const std::runtime_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    const RankMode rm = mode == "direct" ? RankMode::direct : RankMode::covariance;
    const RankResult rank = covariance_rank(m, rm);

    std::optional<MemoryResult> memory;
    if (!drive_path.empty()) {
        std::ifstream ds(drive_path);
        if (!ds)
            throw ConfigError("cannot open '" + drive_path + "'");
        StateMatrix drive;
        try {
            drive = read_state_matrix_csv(ds);
        } catch (const std::runtime_error& e) {
            throw ConfigError(drive_path + ": " + e.what());
        }
        const Eigen::VectorXd col = drive.data.col(drive.data.cols() - 1);
        std::vector<double> s(col.data(), col.data() + col.size());
        memory = memory_capacity(m, s, first_input);
    }

    if (c.json) {
        nlohmann::json j = {{"rows", m.rows()},
                            {"cols", m.cols()},
                            {"mode", rm == RankMode::direct ? "direct" : "covariance"},
                            {"rank", rank.rank},
                            {"threshold", rank.threshold},
                            {"singular_values", rank.singular_values}};
        if (memory)
            j["memory_capacity"] = {{"total", memory->total}, {"per_delay", memory->per_delay}};
        out << j.dump(2) << '\n';
        return ok;
    }
    out << fmt::format("matrix: {} x {}\nrank: {}\nthreshold: {}\n", m.rows(), m.cols(), rank.rank,
                       format_number(rank.threshold));
    out << "singular values:";
    for (double s : rank.singular_values)
        out << ' ' << format_number(s);
    out << '\n';
    if (memory)
        out << fmt::format("memory capacity: {} ({} delays)\n", format_number(memory->total),
                           memory->k_max);
    return ok;
}

int cmd_table1(const Common& c, std::ostream& out) {
    const SweepConfig cfg = load(c);
    const auto cells = memory_table(cfg, c.jobs);
    if (c.out != ".") {
        const fs::path dir = prepare_dir(c.out);
        write_file(dir / "table1.csv",
                   [&](std::ostream& os) { write_memory_table_csv(os, cells, cfg); });
    }
    if (c.json) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& cell : cells) {
            const MeanSe m = mean_se(cell.samples);
            j.push_back({{"nodes", cell.nodes},
                         {"columns", cell.squares ? "r+r^2" : "r"},
                         {"count", cell.samples.size()},
                         {"mean", m.mean},
                         {"se", m.se}});
        }
        out << j.dump(2) << '\n';
        return ok;
    }
    out << "Mean memory capacity, tanh reservoirs driven by U(-1,1) noise\n";
    for (const auto& cell : cells) {
        const MeanSe m = mean_se(cell.samples);
        out << fmt::format("{:>4} nodes {:<6} {:7.3f} +/- {:.3f}  (n={})\n", cell.nodes,
                           cell.squares ? "r+r^2" : "r", m.mean, m.se, cell.samples.size());
    }
    return ok;
}

int cmd_protocol(const Common& c, std::ostream& out) {
    SweepConfig defaults;
    defaults.m1 = {5, 10, 50, 100, 150, 200};
    const SweepConfig cfg = load(c, defaults);
    const fs::path dir = prepare_dir(c.out);
    const auto records = experiment_protocol_sim(cfg, c.jobs);
    const auto summary = summarize(records);
    write_file(dir / "protocol_results.csv",
               [&](std::ostream& os) { write_records_csv(os, records, cfg); });
    write_json(dir / "protocol_summary.json", summary_json(records, cfg));
    write_file(dir / figure_name(cfg, "fig5"),
               [&](std::ostream& os) { write_curve_csv(os, summary, cfg); });
    if (c.json)
        out << summary_json(records, cfg).dump(2) << '\n';
    else
        print_summary(out, summary);
    return ok;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-shifted reservoir computing experiments"};
    app.require_subcommand(1);
    Common common;

    auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config)
            sub->add_option("--config", common.config, "Experiment config file");
        sub->add_option("--out", common.out, "Output directory (file for generate)");
        sub->add_option("--seed", common.seed, "Override the master seed");
        sub->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--json", common.json, "Machine-readable output");
    };

    std::string gen_task = "lorenz";
    std::size_t gen_n = 1000, gen_transient = 1000;
    bool gen_normalize = false;
    auto* gen = app.add_subcommand("generate", "Write a drive signal as CSV");
    add_common(gen, false);
    gen->add_option("--task", gen_task, "lorenz | rossler | noise");
    gen->add_option("--samples", gen_n, "Number of samples")->check(CLI::PositiveNumber);
    gen->add_option("--transient", gen_transient, "Driver steps discarded");
    gen->add_flag("--normalize", gen_normalize, "Zero mean, unit variance");

    auto* sim = app.add_subcommand("simulate", "Export Omega_1 / Omega_2 for one realization");
    add_common(sim, true);
    auto* sweep = app.add_subcommand("sweep", "Node-count sweep with time-shifted readout");
    add_common(sweep, true);
    sweep->get_option("--config")->required();
    auto* scatter = app.add_subcommand("scatter", "Random-parameter error/rank/memory scatter");
    add_common(scatter, true);

    std::string matrix_path, rank_mode = "covariance", drive_path;
    std::size_t first_input = 0;
    auto* metrics = app.add_subcommand("metrics", "Covariance rank (and MC) of a matrix CSV");
    add_common(metrics, false);
    metrics->add_option("matrix", matrix_path, "State matrix CSV")->required();
    metrics->add_option("--mode", rank_mode, "covariance | direct")
        ->check(CLI::IsMember({"covariance", "direct"}));
    metrics->add_option("--drive", drive_path, "Drive CSV (last column) for memory capacity");
    metrics->add_option("--first-input", first_input, "Drive index of the first matrix row");

    auto* table1 = app.add_subcommand("table1", "Memory capacity of random tanh reservoirs");
    add_common(table1, true);
    auto* protocol = app.add_subcommand("protocol-sim", "Drive/reset/test schedule in simulation");
    add_common(protocol, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    }

    try {
        if (gen->parsed())
            return cmd_generate(common, gen_task, gen_n, gen_transient, gen_normalize, out);
        if (sim->parsed())
            return cmd_simulate(common, out);
        if (sweep->parsed())
            return cmd_sweep(common, out);
        if (scatter->parsed())
            return cmd_scatter(common, out);
        if (metrics->parsed())
            return cmd_metrics(common, matrix_path, rank_mode, drive_path, first_input, out);
        if (table1->parsed())
            return cmd_table1(common, out);
        if (protocol->parsed())
            return cmd_protocol(common, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numerical_failure;
    }
    return usage;
}

} // namespace shiftres::cli
