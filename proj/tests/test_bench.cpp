#include "apls/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace apls;
using namespace apls::bench;
using plan::Strategy;

namespace {

constexpr const char* kSmallSpec = R"(
# two strategies on one code
backend      = simulator
strategies   = ecpipe, apls
codes        = 6+6
chunk_sizes  = 1M
packet_sizes = 16K 64K
helper_bw    = 100M
starter_bw   = inf
q            = auto
repetitions  = 3
seed         = 4
hop_latency  = 0.0001
)";

} // namespace

TEST(Spec, Parse) {
    const auto s = parse_spec(kSmallSpec);
    EXPECT_EQ(s.backend, Backend::Simulator);
    EXPECT_EQ(s.strategies, (std::vector<Strategy>{Strategy::ECPipe, Strategy::APLSPipelined}));
    EXPECT_EQ(s.codes, (std::vector<Code>{{6, 6}}));
    EXPECT_EQ(s.chunk_sizes, (std::vector<std::size_t>{1 << 20}));
    EXPECT_EQ(s.packet_sizes, (std::vector<std::size_t>{16 << 10, 64 << 10}));
    EXPECT_DOUBLE_EQ(s.helper_bw.at(0), 100.0 * (1 << 20));
    EXPECT_TRUE(std::isinf(s.starter_bw));
    EXPECT_TRUE(s.q_values.empty());
    EXPECT_EQ(s.repetitions, 3u);
    EXPECT_EQ(s.seed, 4u);
    EXPECT_DOUBLE_EQ(s.hop_latency, 0.0001);
}

TEST(Spec, Rejections) {
    EXPECT_THROW(parse_spec("backend = tape\n"), std::invalid_argument);
    EXPECT_THROW(parse_spec("colour = blue\n"), std::invalid_argument);
    EXPECT_THROW(parse_spec("codes = 6x6\n"), std::invalid_argument);
    EXPECT_THROW(parse_spec("just words\n"), std::invalid_argument);
    auto s = parse_spec(kSmallSpec);
    s.q_values = {5};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.q_values = {12};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s.q_values = {6, 11};
    EXPECT_NO_THROW(s.validate());
    s.packet_sizes = {3000};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = parse_spec(kSmallSpec);
    s.repetitions = 0;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = parse_spec(kSmallSpec);
    s.strategies.clear();
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Run, SimulatorRowsAndNormalization) {
    const auto rows = run_experiment(parse_spec(kSmallSpec));
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.backend, "simulator");
        EXPECT_GT(r.normal_latency, 0);
        EXPECT_NEAR(r.normalized, r.latency_mean / r.normal_latency, 1e-12);
        EXPECT_EQ(r.latency_min, r.latency_max);
        EXPECT_EQ(r.q, r.strategy == "ecpipe" ? 6u : 11u);
    }
    // APLS with an unlimited starter beats ECPipe.
    EXPECT_LT(rows[1].latency_mean, rows[0].latency_mean);
}

TEST(Run, SingleDegenerateConfiguration) {
    const auto rows = run_experiment(parse_spec("strategies = traditional\ncodes = 1+1\nchunk_sizes = 64K\n"
                                                "packet_sizes = 64K\nhelper_bw = 8M\n"));
    ASSERT_EQ(rows.size(), 1u);
    // With k = 1 the single survivor is the reconstructing node, so no
    // transfer is needed at all, or the read costs one chunk transfer.
    EXPECT_LE(rows[0].latency_mean, rows[0].normal_latency + 1e-9);
}

TEST(Run, OnRowSeesEveryRowInOrder) {
    std::vector<Row> seen;
    const auto rows = run_experiment(parse_spec(kSmallSpec), [&](const Row& r) { seen.push_back(r); });
    ASSERT_EQ(seen.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(to_csv(seen[i]), to_csv(rows[i]));
    }
}

TEST(Run, FixedSeedGivesIdenticalCsv) {
    auto render = [] {
        std::string out = csv_header() + "\n";
        for (const auto& r : run_experiment(parse_spec(kSmallSpec))) {
            out += to_csv(r) + "\n";
        }
        return out;
    };
    EXPECT_EQ(render(), render());
}

TEST(Run, ClusterBackendSmall) {
    const auto rows = run_experiment(parse_spec("backend = cluster\nstrategies = ecpipe apls-parallel\n"
                                                "codes = 4+2\nchunk_sizes = 128K\npacket_sizes = 16K\n"
                                                "helper_bw = inf\nrepetitions = 2\n"));
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_EQ(r.backend, "cluster");
        EXPECT_GT(r.latency_mean, 0);
        EXPECT_LE(r.latency_min, r.latency_mean);
        EXPECT_GE(r.latency_max, r.latency_mean);
    }
}

TEST(Csv, RoundTrip) {
    const auto rows = run_experiment(parse_spec(kSmallSpec));
    std::string text = csv_header() + "\n";
    for (const auto& r : rows) {
        text += to_csv(r) + "\n";
    }
    const auto back = parse_csv(text);
    ASSERT_EQ(back.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(to_csv(back[i]), to_csv(rows[i]));
    }
    EXPECT_THROW(parse_csv("a,b,c\n"), std::invalid_argument);
    EXPECT_THROW(parse_csv(csv_header() + "\nsimulator,ecpipe,6\n"), std::invalid_argument);
}

TEST(Compare, BaselineAgainstItselfIsOne) {
    const auto cmp = compare_strategies(run_experiment(parse_spec(kSmallSpec)), Strategy::ECPipe);
    ASSERT_EQ(cmp.size(), 4u);
    for (const auto& c : cmp) {
        if (c.row.strategy == "ecpipe") {
            EXPECT_DOUBLE_EQ(c.vs_baseline, 1.0);
        } else {
            EXPECT_LT(c.vs_baseline, 1.0);
        }
        EXPECT_GT(c.model, 0);
    }
    const auto text = format_comparison(cmp);
    EXPECT_NE(text.find("apls-pipelined"), std::string::npos);
}

TEST(Compare, MismatchedConfigurationsRejected) {
    auto rows = run_experiment(parse_spec(kSmallSpec));
    EXPECT_THROW(compare_strategies(rows, Strategy::PPR), std::invalid_argument);
    rows.pop_back();
    EXPECT_THROW(compare_strategies(rows, Strategy::ECPipe), std::invalid_argument);
    EXPECT_THROW(compare_strategies({}, Strategy::ECPipe), std::invalid_argument);
}

TEST(Model, ClosedForms) {
    const double c = 64.0 * (1 << 20);
    const double b = 100.0 * (1 << 20);
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(model_latency(Strategy::Traditional, 6, 6, c, b, inf), 5 * 5.12, 1e-9);
    EXPECT_NEAR(model_latency(Strategy::PPR, 6, 6, c, b, inf), 2 * 5.12, 1e-9);
    EXPECT_NEAR(model_latency(Strategy::ECPipe, 6, 6, c, b, inf), 5.12, 1e-9);
    EXPECT_NEAR(model_latency(Strategy::ECPipe, 6, 6, c, b, b / 2), 10.24, 1e-9);
    EXPECT_NEAR(model_latency(Strategy::APLSPipelined, 6, 11, c, b, inf), 5.12 * 6 / 11, 1e-9);
    EXPECT_NEAR(model_latency(Strategy::APLSParallel, 6, 11, c, b, b), 5.12, 1e-9);
}
