#include <stdexcept>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "finitekey/config.hpp"
#include "finitekey/experiments.hpp"
#include "oracles.hpp"

using namespace finitekey;

namespace {

OptimizationSpec quick(int evals) {
    OptimizationSpec spec;
    spec.max_evals = evals;
    spec.starts = 3;
    return spec;
}

bool same_params(const ProtocolConfig& a, const ProtocolConfig& b) {
    // p_w is rebuilt as 1 - p_u - p_v, so it only matches to rounding.
    return a.p_x == b.p_x && a.class_prob[0] == b.class_prob[0] && a.class_prob[1] == b.class_prob[1] &&
           std::fabs(a.class_prob[2] - b.class_prob[2]) < 1e-15 && a.intensity == b.intensity;
}

}  // namespace

TEST_CASE("optimizer with a single evaluation returns the start point") {
    const ProtocolConfig start;
    const OptimizationResult r = optimize_parameters(ChannelConfig{}, start, quick(1));
    CHECK(r.evaluations == 1);
    CHECK(same_params(r.best, start));
}

TEST_CASE("optimizer is deterministic and never worse than the start") {
    const ChannelConfig ch;
    const ProtocolConfig start;
    const OptimizationResult a = optimize_parameters(ch, start, quick(150));
    const OptimizationResult b = optimize_parameters(ch, start, quick(150));
    CHECK(same_params(a.best, b.best));
    CHECK(a.report.n_sec == b.report.n_sec);
    CHECK(a.evaluations <= 150);
    const KeyRateReport published = evaluate_link(ch, start);
    CHECK(a.report.n_sec >= published.n_sec);
    CHECK(a.report.n_sec == compose_key_length(a.report.terms));
}

TEST_CASE("optimizer reports diagnostics when every point aborts") {
    ChannelConfig ch;
    ch.fiber_length_km = 400;
    const OptimizationResult r = optimize_parameters(ch, ProtocolConfig{}, quick(20));
    CHECK(r.report.n_sec == 0);
    CHECK_FALSE(r.diagnostics.empty());
}

TEST_CASE("sweeps give identical results serially and in parallel") {
    const std::vector<double> km{0.0, 30.0, 60.0};
    const SweepResult serial = distance_sweep(km, ChannelConfig{}, ProtocolConfig{}, quick(40), 1);
    const SweepResult parallel = distance_sweep(km, ChannelConfig{}, ProtocolConfig{}, quick(40), 3);
    REQUIRE(serial.points.size() == 3);
    for (std::size_t i = 0; i < km.size(); ++i) {
        CHECK(serial.points[i].axis == km[i]);
        CHECK(serial.points[i].report.n_sec == parallel.points[i].report.n_sec);
        CHECK(same_params(serial.points[i].params, parallel.points[i].params));
        CHECK(serial.points[i].report.n_sec == compose_key_length(serial.points[i].report.terms));
    }
    CHECK(serial.points[0].report.rate_bps > serial.points[1].report.rate_bps);
    CHECK(serial.points[1].report.rate_bps > serial.points[2].report.rate_bps);

    std::ostringstream csv;
    write_sweep_csv(csv, serial);
    CHECK(csv.str().rfind("distance_km,block_size,n_sec,rate_bps", 0) == 0);
    std::ostringstream table;
    write_sweep_summary(table, serial);
    CHECK(table.str().find("Key rate (bps)") != std::string::npos);
}

TEST_CASE("sweep axes must be strictly increasing") {
    CHECK_THROWS_AS(distance_sweep({50, 30}, ChannelConfig{}, ProtocolConfig{}, quick(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(blocksize_sweep({}, ChannelConfig{}, ProtocolConfig{}, quick(1)),
                    std::invalid_argument);
}

TEST_CASE("default grids") {
    CHECK(default_distances() == std::vector<double>{30, 50, 70, 90, 110});
    const std::vector<double> t = default_block_times();
    CHECK(t.front() == 0.016);
    CHECK(t.back() == 1200.0);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
}

TEST_CASE("parallel_for visits every index once and forwards exceptions") {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                     if (i == 7) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}

TEST_CASE("bounds demo on a tiny population matches brute force") {
    const BoundsDemo demo = bounds_demo(20, 10, 6, 0.1);
    REQUIRE(demo.rows.size() == 7);
    long double cumulative = 0.0L;
    for (const BoundsDemoRow& row : demo.rows) {
        const long double hg = oracle::hypergeom(20, 10, 6, static_cast<int>(row.k));
        cumulative += hg;
        CHECK(row.hypergeom_pmf == doctest::Approx(static_cast<double>(hg)).epsilon(1e-12));
        CHECK(row.binomial_pmf ==
              doctest::Approx(static_cast<double>(oracle::binomial(10, 0.3L, static_cast<int>(row.k))))
                  .epsilon(1e-12));
        CHECK(row.hypergeom_cdf == doctest::Approx(static_cast<double>(cumulative)).epsilon(1e-12));
        CHECK(row.ahrens_bound >= row.hypergeom_pmf);
        CHECK(row.ahrens_cdf >= row.hypergeom_cdf * (1 - 1e-12));
    }
    CHECK(demo.observed == 3);
}

TEST_CASE("bounds demo degenerates to a spike when the whole population is drawn") {
    const BoundsDemo demo = bounds_demo(50, 50, 12, 0.05);
    REQUIRE(demo.rows.size() == 1);
    CHECK(demo.rows[0].k == 12);
    CHECK(demo.rows[0].hypergeom_pmf == doctest::Approx(1.0));
}

TEST_CASE("bounds demo for (120000, 103820, 600)") {
    const BoundsDemo demo = bounds_demo(120000, 103820, 600, 1e-10);
    for (const BoundsDemoRow& row : demo.rows) {
        CHECK(row.ahrens_bound >= row.hypergeom_pmf);
    }
    CHECK(demo.selected.lower_source == BoundSource::binomial);
    std::ostringstream csv;
    write_bounds_demo_csv(csv, demo);
    CHECK(csv.str().rfind("k,binomial_pmf,hypergeom_pmf,ahrens_bound", 0) == 0);
}

TEST_CASE("config round trip") {
    RunConfig c;
    c.channel.fiber_length_km = 72.5;
    c.channel.misalignment_error = 0.0071;
    c.protocol.class_prob = {0.9, 0.07, 0.03};
    c.protocol.intensity[1] = 0.1 / 3.0;
    c.optimization.seed = 123456789012345ULL;
    std::stringstream text;
    write_config(text, c);
    const RunConfig back = parse_config(text, "roundtrip");
    std::stringstream again;
    write_config(again, back);
    std::stringstream first;
    write_config(first, c);
    CHECK(first.str() == again.str());
    CHECK(back.protocol.intensity[1] == c.protocol.intensity[1]);
    CHECK(evaluate_link(back.channel, back.protocol).n_sec ==
          evaluate_link(c.channel, c.protocol).n_sec);
}

TEST_CASE("config errors carry line numbers and leave the base untouched") {
    const RunConfig base;
    auto parse = [&](const std::string& text) {
        std::istringstream in(text);
        return parse_config(in, "cfg", base);
    };
    CHECK_NOTHROW(parse("# comment\n\nfiber_length_km = 30  # trailing\n"));
    CHECK(parse("fiber_length_km = 30\n").channel.fiber_length_km == 30.0);

    auto line_of = [&](const std::string& text) {
        try {
            parse(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    CHECK(line_of("fiber_length_km = 30\nfoo = 1\n") == 2);
    CHECK(line_of("\n\nfiber_length_km = thirty\n") == 3);
    CHECK(line_of("p_x = 0.1\np_x = 0.2\n") == 2);
    CHECK(line_of("gamma\n") == 1);
    CHECK(line_of("p_x = 0.7\nfiber_length_km = 10\n") == 1);
    CHECK(line_of("num_detectors = 2.5\n") == 1);
    CHECK(base.channel.fiber_length_km == 50.0);
    CHECK(config_keys().size() == 37);
}
