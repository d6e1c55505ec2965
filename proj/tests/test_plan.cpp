#include "apls/plan.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace apls;
using namespace apls::plan;

namespace {

std::vector<Agent> survivors_of(std::size_t width, ChunkIndex lost) {
    std::vector<Agent> out;
    for (std::size_t c = 0; c < width; ++c) {
        if (c != lost) {
            out.push_back({static_cast<NodeId>(10 + c), c});
        }
    }
    return out;
}

} // namespace

TEST(StrategyNames, RoundTrip) {
    for (auto s : {Strategy::Traditional, Strategy::PPR, Strategy::ECPipe, Strategy::ECPipeMulti,
                   Strategy::APLSParallel, Strategy::APLSPipelined}) {
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    }
    EXPECT_EQ(parse_strategy("apls"), Strategy::APLSPipelined);
    EXPECT_THROW(parse_strategy("raid"), std::invalid_argument);
}

TEST(BuildLists, SlidingWindowOverAgents) {
    const auto lists = build_lists(3, 5);
    const std::vector<std::vector<std::size_t>> expect{{3, 4, 0}, {4, 0, 1}, {0, 1, 2}, {1, 2, 3}, {2, 3, 4}};
    EXPECT_EQ(lists, expect);
    EXPECT_THROW(build_lists(4, 3), std::invalid_argument);
    EXPECT_THROW(build_lists(0, 3), std::invalid_argument);
}

// Property: each agent appears in exactly k lists and aggregates exactly one.
TEST(BuildLists, BalancedMembership) {
    std::mt19937 rng(21);
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = 1 + rng() % 12;
        const std::size_t q = k + rng() % 12;
        const auto lists = build_lists(k, q);
        ASSERT_EQ(lists.size(), q);
        std::vector<std::size_t> member(q, 0), last(q, 0);
        for (const auto& l : lists) {
            ASSERT_EQ(l.size(), k);
            ASSERT_EQ(std::set<std::size_t>(l.begin(), l.end()).size(), k);
            for (auto a : l) {
                ++member[a];
            }
            ++last[l.back()];
        }
        for (std::size_t a = 0; a < q; ++a) {
            ASSERT_EQ(member[a], k);
            ASSERT_EQ(last[a], 1u);
        }
    }
}

TEST(AssignPackets, RoundRobin) {
    EXPECT_EQ(assign_packets(8, 1, 3), (std::vector<std::size_t>{0, 1, 2, 0, 1, 2, 0, 1}));
    EXPECT_THROW(assign_packets(10, 3, 2), std::invalid_argument);
    EXPECT_THROW(assign_packets(10, 5, 0), std::invalid_argument);
}

TEST(ByteBudget, SixElevenSixtySixMegabytes) {
    const double c = 66.0 * 1024 * 1024;
    const auto b = byte_budget(6, 11, c);
    EXPECT_DOUBLE_EQ(b.send_to_agents, 30.0 * 1024 * 1024);
    EXPECT_DOUBLE_EQ(b.recv_from_agents, 30.0 * 1024 * 1024);
    EXPECT_DOUBLE_EQ(b.send_to_starter, 6.0 * 1024 * 1024);
    EXPECT_DOUBLE_EQ(b.starter_recv, c);
    EXPECT_THROW(byte_budget(6, 5, c), std::invalid_argument);
}

TEST(LoadTable, WindowEviction) {
    LoadTable t(60);
    t.record(1, 100, 0);
    t.record(2, 50, 30);
    t.record(1, 10, 59);
    EXPECT_EQ(t.totals(59), (std::map<NodeId, std::uint64_t>{{1, 110}, {2, 50}}));
    EXPECT_EQ(t.totals(61), (std::map<NodeId, std::uint64_t>{{1, 10}, {2, 50}}));
    EXPECT_EQ(t.totals(200).size(), 0u);
    EXPECT_EQ(t.entry_count(), 0u);
    EXPECT_THROW(LoadTable(0), std::invalid_argument);
}

TEST(LightSet, NearestRankQuantile) {
    const std::map<NodeId, std::uint64_t> totals{{1, 400}, {2, 100}, {3, 300}, {4, 200}, {5, 500},
                                                 {6, 600}, {7, 700}, {8, 800}};
    const std::vector<NodeId> cands{1, 2, 3, 4, 5, 6, 7, 8};
    // ceil(0.25 * 8) = 2nd smallest load = 200.
    EXPECT_EQ(light_set(totals, cands, 0.25), (std::vector<NodeId>{2, 4}));
    EXPECT_EQ(light_set(totals, cands, 0.0), (std::vector<NodeId>{2}));
    EXPECT_EQ(light_set(totals, cands, 1.0), cands);
    // Nodes missing from the table have zero load.
    const std::vector<NodeId> with_idle{1, 9};
    EXPECT_EQ(light_set(totals, with_idle, 0.25), (std::vector<NodeId>{9}));
    EXPECT_TRUE(light_set(totals, {}, 0.25).empty());
}

// Property: the light set is never empty and never contains a node heavier
// than one excluded from it.
TEST(LightSet, RandomLoadsSeparateLightFromHeavy) {
    std::mt19937 rng(8);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 20;
        std::map<NodeId, std::uint64_t> totals;
        std::vector<NodeId> cands;
        for (std::size_t i = 0; i < n; ++i) {
            cands.push_back(static_cast<NodeId>(i));
            totals[static_cast<NodeId>(i)] = rng() % 10;
        }
        const double f = (rng() % 101) / 100.0;
        const auto light = light_set(totals, cands, f);
        ASSERT_FALSE(light.empty());
        std::uint64_t max_light = 0;
        for (auto x : light) {
            max_light = std::max(max_light, totals[x]);
        }
        for (auto c : cands) {
            if (std::find(light.begin(), light.end(), c) == light.end()) {
                ASSERT_GT(totals[c], max_light);
            }
        }
        const auto rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(f * n)));
        ASSERT_GE(light.size(), std::min(rank, n));
    }
}

TEST(StarterSelector, AvoidsHeavyNodesAndRefreshes) {
    LoadTable t(60);
    t.record(1, 1000, 0);
    t.record(2, 1000, 0);
    t.record(3, 1000, 0);
    const std::vector<NodeId> cands{1, 2, 3, 4};
    StarterSelector sel({0.25, 1.0}, 42);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(sel.select(t, cands, 0.1), 4u);
    }
    // Node 4 becomes heavy, but the snapshot is still fresh.
    t.record(4, 5000, 0.2);
    EXPECT_EQ(sel.select(t, cands, 0.5), 4u);
    const auto picked = sel.select(t, cands, 1.5);
    EXPECT_NE(picked, 4u);
    sel.invalidate();
    EXPECT_NE(sel.select(t, cands, 1.6), 4u);
}

TEST(StarterSelector, SameSeedSameChoices) {
    LoadTable t(60);
    const std::vector<NodeId> cands{1, 2, 3, 4, 5, 6, 7, 8};
    StarterSelector a({1.0, 1.0}, 7), b({1.0, 1.0}, 7);
    std::set<NodeId> seen;
    for (int i = 0; i < 50; ++i) {
        const auto x = a.select(t, cands, i);
        EXPECT_EQ(x, b.select(t, cands, i));
        seen.insert(x);
    }
    EXPECT_GT(seen.size(), 4u);
}

TEST(BuildPlan, AllSurvivorsUseKPlusMMinusOne) {
    const rs::CodeParams p{6, 6, 64 * 1024, 1024};
    const auto g = gf::build_generator_matrix(6, 6);
    const auto survivors = survivors_of(12, 0);
    LoadTable load;
    std::mt19937_64 rng(1);
    PlanOptions opts;
    opts.starter = 99;
    const auto plan = build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 0, rng, opts);
    EXPECT_EQ(plan.q, 11u);
    EXPECT_EQ(plan.lists.size(), 11u);
    EXPECT_EQ(plan.packet_count, 64u);
    EXPECT_EQ(plan.starter, 99u);
    EXPECT_EQ(plan.coefficient_lists.size(), 11u);

    opts.source_limit = 8;
    EXPECT_EQ(build_plan(p, g, 0, survivors, Strategy::APLSParallel, load, 0, rng, opts).q, 8u);
    opts.source_limit = 2;
    EXPECT_EQ(build_plan(p, g, 0, survivors, Strategy::APLSParallel, load, 0, rng, opts).q, 6u);
}

TEST(BuildPlan, KSourceStrategies) {
    const rs::CodeParams p{4, 2, 4096, 1024};
    const auto g = gf::build_generator_matrix(4, 2);
    const auto survivors = survivors_of(6, 2);
    LoadTable load;
    std::mt19937_64 rng(1);
    PlanOptions opts;
    opts.starter = 77;
    for (auto s : {Strategy::Traditional, Strategy::PPR}) {
        const auto plan = build_plan(p, g, 2, survivors, s, load, 0, rng, opts);
        ASSERT_EQ(plan.agents.size(), 4u);
        // Lowest surviving chunk reconstructs and sits last.
        EXPECT_EQ(plan.agents.back().chunk, 0u);
        EXPECT_EQ(plan.starter, plan.agents.back().node);
    }
    const auto ec = build_plan(p, g, 2, survivors, Strategy::ECPipe, load, 0, rng, opts);
    EXPECT_EQ(ec.starter, 77u);
    EXPECT_EQ(ec.lists.size(), 1u);
    const auto ecb = build_plan(p, g, 2, survivors, Strategy::ECPipeMulti, load, 0, rng, opts);
    EXPECT_EQ(ecb.lists.size(), 3u);
}

TEST(BuildPlan, StarterFromCandidates) {
    const rs::CodeParams p{4, 2, 4096, 1024};
    const auto g = gf::build_generator_matrix(4, 2);
    const auto survivors = survivors_of(6, 0);
    LoadTable load;
    load.record(200, 1 << 20, 0);
    std::mt19937_64 rng(3);
    PlanOptions opts;
    opts.starter_candidates = {200, 201};
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 1, rng, opts).starter, 201u);
    }
}

TEST(BuildPlan, UnrecoverableWithFewerThanKSurvivors) {
    const rs::CodeParams p{4, 2, 4096, 1024};
    const auto g = gf::build_generator_matrix(4, 2);
    auto survivors = survivors_of(6, 0);
    survivors.resize(3);
    LoadTable load;
    std::mt19937_64 rng(1);
    PlanOptions opts;
    opts.starter = 50;
    try {
        build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 0, rng, opts);
        FAIL() << "expected unrecoverable";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "unrecoverable");
    }
}

TEST(BuildPlan, ReadRangeValidation) {
    const rs::CodeParams p{4, 2, 4096, 1024};
    const auto g = gf::build_generator_matrix(4, 2);
    const auto survivors = survivors_of(6, 0);
    LoadTable load;
    std::mt19937_64 rng(1);
    PlanOptions opts;
    opts.starter = 50;
    opts.read_offset = 1024;
    opts.read_length = 2048;
    const auto plan = build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 0, rng, opts);
    EXPECT_EQ(plan.packet_count, 2u);
    opts.read_offset = 100;
    EXPECT_THROW(build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 0, rng, opts), std::invalid_argument);
    opts.read_offset = 3072;
    EXPECT_THROW(build_plan(p, g, 0, survivors, Strategy::APLSPipelined, load, 0, rng, opts), std::invalid_argument);
}

TEST(MakePlan, RejectsBadAgents) {
    const rs::CodeParams p{4, 2, 4096, 1024};
    const auto g = gf::build_generator_matrix(4, 2);
    std::vector<Agent> dup{{1, 1}, {2, 1}, {3, 2}, {4, 3}};
    EXPECT_THROW(make_plan(p, g, 0, Strategy::ECPipe, dup, 9, 0, 4096), std::invalid_argument);
    std::vector<Agent> with_lost{{1, 0}, {2, 1}, {3, 2}, {4, 3}};
    EXPECT_THROW(make_plan(p, g, 0, Strategy::ECPipe, with_lost, 9, 0, 4096), std::invalid_argument);
    std::vector<Agent> five{{1, 1}, {2, 2}, {3, 3}, {4, 4}, {5, 5}};
    EXPECT_THROW(make_plan(p, g, 0, Strategy::ECPipe, five, 9, 0, 4096), std::invalid_argument);
    std::vector<Agent> four{{1, 1}, {2, 2}, {3, 3}, {4, 4}};
    EXPECT_THROW(make_plan(p, g, 0, Strategy::PPR, four, 9, 0, 4096), std::invalid_argument);
    EXPECT_NO_THROW(make_plan(p, g, 0, Strategy::PPR, four, 4, 0, 4096));
}
