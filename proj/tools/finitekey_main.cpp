#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "finitekey/config.hpp"
#include "finitekey/experiments.hpp"
#include "finitekey/format.hpp"
#include "finitekey/keyrate.hpp"

namespace fk = finitekey;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAbort = 1;
constexpr int kExitConfig = 2;

struct Options {
    std::string config_path;
    std::optional<double> distance;
    std::optional<double> time;
    std::optional<double> eps_sec;
    std::optional<double> eps_ver;
    std::uint64_t seed = 1;
    int repeats = 1;
    std::string out;
    bool force = false;

    fk::Count N = 120000;
    fk::Count n = 103820;
    fk::Count K = 600;
    double eps = 1e-10;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fk::RunConfig effective_config(const Options& opt) {
    fk::RunConfig config;
    if (!opt.config_path.empty()) config = fk::load_config(opt.config_path);
    if (opt.distance) config.channel.fiber_length_km = *opt.distance;
    if (opt.time) config.protocol.acquisition_time_s = *opt.time;
    if (opt.eps_sec) config.protocol.eps_sec = *opt.eps_sec;
    if (opt.eps_ver) config.protocol.eps_ver = *opt.eps_ver;
    try {
        fk::validate(config);
    } catch (const std::domain_error& e) {
        throw UsageError(std::string("invalid setting: ") + e.what());
    }
    return config;
}

// Writes to --out when given (refusing to clobber an existing file unless
// --force), otherwise to stdout.
template <typename Fn>
void emit(const Options& opt, Fn&& write) {
    if (opt.out.empty()) {
        write(std::cout);
        return;
    }
    if (!opt.force && std::filesystem::exists(opt.out)) {
        throw UsageError(opt.out + " exists; pass --force to overwrite");
    }
    std::ofstream file(opt.out);
    if (!file) throw UsageError("cannot write " + opt.out);
    write(file);
}

void print_params(std::ostream& out, const fk::ProtocolConfig& p) {
    out << "p_x = " << fk::format_double(p.p_x) << '\n'
        << "p_u = " << fk::format_double(p.class_prob[0]) << '\n'
        << "p_v = " << fk::format_double(p.class_prob[1]) << '\n'
        << "p_w = " << fk::format_double(p.class_prob[2]) << '\n'
        << "intensity_u = " << fk::format_double(p.intensity[0]) << '\n'
        << "intensity_v = " << fk::format_double(p.intensity[1]) << '\n'
        << "intensity_w = " << fk::format_double(p.intensity[2]) << '\n';
}

int run_keyrate(const Options& opt) {
    const fk::RunConfig c = effective_config(opt);
    const fk::KeyRateReport report = fk::evaluate_link(c.channel, c.protocol);
    emit(opt, [&](std::ostream& out) {
        out << "distance_km = " << fk::format_double(c.channel.fiber_length_km) << '\n';
        fk::write_report(out, report);
    });
    return report.aborted ? kExitAbort : kExitOk;
}

int run_optimize(const Options& opt) {
    const fk::RunConfig c = effective_config(opt);
    const fk::OptimizationResult result =
        fk::optimize_parameters(c.channel, c.protocol, c.optimization);
    emit(opt, [&](std::ostream& out) {
        out << "distance_km = " << fk::format_double(c.channel.fiber_length_km) << '\n'
            << "evaluations = " << result.evaluations << '\n';
        print_params(out, result.best);
        fk::write_report(out, result.report);
        for (const std::string& d : result.diagnostics) out << "# " << d << '\n';
    });
    return result.report.aborted ? kExitAbort : kExitOk;
}

int run_sweep(const Options& opt, bool by_distance) {
    const fk::RunConfig c = effective_config(opt);
    const unsigned threads = fk::sweep_threads_from_env();
    const fk::SweepResult sweep =
        by_distance ? fk::distance_sweep(fk::default_distances(), c.channel, c.protocol,
                                         c.optimization, threads)
                    : fk::blocksize_sweep(fk::default_block_times(), c.channel, c.protocol,
                                          c.optimization, threads);
    if (opt.out.empty()) {
        fk::write_sweep_csv(std::cout, sweep);
    } else {
        emit(opt, [&](std::ostream& out) { fk::write_sweep_csv(out, sweep); });
        fk::write_sweep_summary(std::cout, sweep);
    }
    return kExitOk;
}

int run_bounds_demo(const Options& opt) {
    if (!(opt.N >= 1 && opt.n >= 0 && opt.n <= opt.N && opt.K >= 0 && opt.K <= opt.N)) {
        throw UsageError("bounds-demo needs 0 <= n <= N, 0 <= K <= N, N >= 1");
    }
    if (!(opt.eps > 0.0 && opt.eps < 0.5 / std::sqrt(2.0))) {
        throw UsageError("bounds-demo needs 0 < eps < 0.5/sqrt(2)");
    }
    const fk::BoundsDemo demo = fk::bounds_demo(opt.N, opt.n, opt.K, opt.eps);
    emit(opt, [&](std::ostream& out) { fk::write_bounds_demo_csv(out, demo); });
    const auto& s = demo.selected;
    std::cerr << "observed k = " << demo.observed << ", permuted (n, K, k) = ("
              << demo.image.permuted_draws << ", " << demo.image.permuted_successes << ", "
              << demo.image.map.apply(demo.observed) << ")\n"
              << "selected lower = " << fk::format_double(s.lower) << " ("
              << fk::to_string(s.lower_source) << "), upper = " << fk::format_double(s.upper)
              << " (" << fk::to_string(s.upper_source) << ")\n";
    return kExitOk;
}

int run_mc(const Options& opt) {
    if (opt.repeats < 1) throw UsageError("--repeats must be >= 1");
    const fk::RunConfig c = effective_config(opt);
    const double truth[2] = {fk::photon_yield(c.channel, 0), fk::photon_yield(c.channel, 1)};

    int aborted = 0;
    int contained = 0;
    std::ostringstream out;
    out << "round,seed,aborted,abort_reason,n_sec,y0_Z_lower,y0_Z_upper,y1_Z_lower,y1_Z_upper,"
           "y0_true,y1_true,y1_Z_contained\n";
    for (int r = 0; r < opt.repeats; ++r) {
        const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(r);
        const fk::ObservedCounts counts = fk::sample_counts(c.channel, c.protocol, seed);
        const fk::KeyRateReport report = fk::evaluate_counts(counts, c.protocol);
        out << r << ',' << seed << ',' << (report.aborted ? 1 : 0) << ','
            << fk::to_string(report.abort_reason) << ',' << report.n_sec;
        bool inside = false;
        if (report.estimation) {
            const fk::PhotonYieldBounds& y = report.estimation->yields_in(fk::Basis::Z);
            inside = y.y1_lower <= truth[1] && truth[1] <= y.y1_upper;
            out << ',' << fk::format_double(y.y0_lower) << ',' << fk::format_double(y.y0_upper)
                << ',' << fk::format_double(y.y1_lower) << ',' << fk::format_double(y.y1_upper);
        } else {
            out << ",,,,";
        }
        out << ',' << fk::format_double(truth[0]) << ',' << fk::format_double(truth[1]) << ','
            << (inside ? 1 : 0) << '\n';
        aborted += report.aborted ? 1 : 0;
        contained += inside ? 1 : 0;
    }
    out << "# rounds = " << opt.repeats << ", aborted = " << aborted
        << ", p_abt estimate = " << fk::format_double(static_cast<double>(aborted) / opt.repeats)
        << ", y1_Z containment = " << contained << '/' << opt.repeats << '\n';
    emit(opt, [&](std::ostream& o) { o << out.str(); });
    return aborted == opt.repeats ? kExitAbort : kExitOk;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--config", opt.config_path, "key = value configuration file");
    cmd->add_option("--distance", opt.distance, "fiber length in km");
    cmd->add_option("--time", opt.time, "acquisition time in seconds");
    cmd->add_option("--eps-sec", opt.eps_sec, "secrecy parameter");
    cmd->add_option("--eps-ver", opt.eps_ver, "correctness parameter");
    cmd->add_option("--out", opt.out, "output file (default stdout)");
    cmd->add_flag("--force", opt.force, "overwrite --out if it exists");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite-key secret key rate calculator for decoy-state BB84"};
    app.require_subcommand(1);
    Options opt;

    auto* keyrate = app.add_subcommand("keyrate", "key length breakdown for one configuration");
    auto* optimize = app.add_subcommand("optimize", "optimize p_X, p_mu and intensities");
    auto* sweep_d = app.add_subcommand("sweep-distance", "optimized key rate versus distance");
    auto* sweep_b = app.add_subcommand("sweep-blocksize", "optimized key rate versus block size");
    auto* demo = app.add_subcommand("bounds-demo", "binomial, hypergeometric and permuted bounds");
    auto* mc = app.add_subcommand("mc-run", "Monte Carlo protocol rounds");
    for (auto* cmd : {keyrate, optimize, sweep_d, sweep_b, mc}) add_common(cmd, opt);
    mc->add_option("--seed", opt.seed, "first round seed");
    mc->add_option("--repeats", opt.repeats, "number of rounds");
    demo->add_option("--N", opt.N, "population size");
    demo->add_option("--n", opt.n, "sample size");
    demo->add_option("--K", opt.K, "successes in the population");
    demo->add_option("--eps", opt.eps, "failure probability");
    demo->add_option("--out", opt.out, "output file (default stdout)");
    demo->add_flag("--force", opt.force, "overwrite --out if it exists");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*keyrate) return run_keyrate(opt);
        if (*optimize) return run_optimize(opt);
        if (*sweep_d) return run_sweep(opt, true);
        if (*sweep_b) return run_sweep(opt, false);
        if (*demo) return run_bounds_demo(opt);
        if (*mc) return run_mc(opt);
    } catch (const fk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
