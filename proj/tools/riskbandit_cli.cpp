// Command-line front end: `run` executes a seeded experiment from a JSON
// config and writes trace/curve CSVs; `oracle` prints the ground-truth risks
// and derived constants of the configured arm set.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "riskbandit/config.hpp"
#include "riskbandit/regret_lab.hpp"
#include "riskbandit/report.hpp"

namespace {

namespace fs = std::filesystem;
using namespace riskbandit;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

unsigned thread_count(std::optional<unsigned> flag) {
    if (flag) return std::max(1u, *flag);
    if (const char* env = std::getenv("RISKBANDIT_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) return static_cast<unsigned>(parsed);
    }
    return 1;
}

int cmd_run(const ExperimentConfig& config, const std::string& out_dir, unsigned threads) {
    if (out_dir.empty())
        throw BadConfig("out-dir required (flag --out-dir or config out_dir)");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    const auto table = oracle_table(config.arms, config.risk);
    std::cout << "riskbandit run: K=" << config.arms.size() << ", "
              << risk_name(config.risk) << ", R=" << config.replications
              << ", seed=" << config.seed << ", threads=" << threads << "\n";
    std::cout << "optimal arm k* = " << table.optimal_arm + 1
              << ", rho* = " << format_number(table.arms[table.optimal_arm].true_risk)
              << "\n";

    RegretCurve curve;
    curve.grid = config.horizons;
    curve.replications = config.replications;
    for (std::size_t h = 0; h < config.horizons.size(); ++h) {
        const std::uint64_t n = config.horizons[h];
        const std::uint64_t stream_base =
            replication_seed(config.seed, h * config.replications);
        const auto traces = detail::map_replications<EpisodeTrace>(
            config.replications, threads, [&](std::uint64_t r) {
                return run_episode(config.arms, config.risk, config.delta, n,
                                   replication_seed(stream_base, r));
            });
        write_trace_csv(fs::path(out_dir) / ("trace_n" + std::to_string(n) + ".csv"), traces);

        const double optimal_risk = table.arms[table.optimal_arm].true_risk;
        std::vector<double> regrets(traces.size());
        for (std::size_t r = 0; r < traces.size(); ++r) {
            SampleBuffer pooled;
            for (const auto& step : traces[r].steps) pooled.push(step.cost);
            regrets[r] = empirical_risk(pooled, config.risk) - optimal_risk;
        }
        double mean = 0.0;
        for (double regret : regrets) mean += regret;
        mean /= static_cast<double>(regrets.size());
        double se = std::numeric_limits<double>::quiet_NaN();
        if (regrets.size() >= 2) {
            double ss = 0.0;
            for (double regret : regrets) ss += (regret - mean) * (regret - mean);
            se = std::sqrt(ss / static_cast<double>(regrets.size() - 1)) /
                 std::sqrt(static_cast<double>(regrets.size()));
        }
        curve.regret_mean.push_back(mean);
        curve.regret_se.push_back(se);
        curve.bound.push_back(theoretical_bound(table, config.risk, n, config.arms.size())
                                  .value_or(std::numeric_limits<double>::quiet_NaN()));
    }
    write_curve_csv(fs::path(out_dir) / "curve.csv", curve);
    print_curve_summary(std::cout, curve);
    std::cout << "wrote " << config.horizons.size() << " trace file(s) and curve.csv to "
              << out_dir << "\n";
    return 0;
}

int cmd_oracle(const ExperimentConfig& config) {
    const auto table = oracle_table(config.arms, config.risk);
    print_oracle_report(std::cout, config, table);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-averse multi-armed bandit simulation lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<unsigned> threads_flag;
    std::optional<std::uint64_t> seed_flag;

    auto* run = app.add_subcommand("run", "run a seeded experiment and write CSV output");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out-dir", out_dir, "output directory for CSV files");
    run->add_option("--seed", seed_flag, "override the config seed");
    run->add_option("--threads", threads_flag,
                    "worker threads (default: RISKBANDIT_THREADS or 1)");

    auto* oracle = app.add_subcommand("oracle", "print ground-truth risks and constants");
    oracle->add_option("--config", config_path, "experiment config (JSON)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = riskbandit::parse_config(read_file(config_path));
        if (seed_flag) config.seed = *seed_flag;
        if (run->parsed()) {
            const std::string target = out_dir.empty() ? config.out_dir : out_dir;
            return cmd_run(config, target, thread_count(threads_flag));
        }
        return cmd_oracle(config);
    } catch (const riskbandit::AssumptionViolated& e) {
        std::cerr << "assumption violated: " << e.what() << "\n";
    } catch (const riskbandit::NonUniqueOptimum& e) {
        std::cerr << "non-unique optimum: " << e.what() << "\n";
    } catch (const riskbandit::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
    } catch (const riskbandit::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
}
