#include "apls/strategy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace apls;
using plan::Strategy;

namespace {

constexpr Strategy kAll[] = {Strategy::Traditional, Strategy::PPR,          Strategy::ECPipe,
                             Strategy::ECPipeMulti, Strategy::APLSParallel, Strategy::APLSPipelined};

constexpr plan::NodeId kStarter = 1000;

struct Fixture {
    rs::CodeParams params;
    gf::Matrix generator;
    rs::Stripe stripe;

    Fixture(std::size_t k, std::size_t m, std::size_t chunk, std::size_t packet, std::mt19937& rng)
        : params{k, m, chunk, packet}, generator(gf::build_generator_matrix(k, m)) {
        std::vector<rs::Buffer> data(k, rs::Buffer(chunk));
        for (auto& c : data) {
            for (auto& b : c) {
                b = static_cast<std::uint8_t>(rng());
            }
        }
        stripe = rs::make_stripe(params, std::move(data));
    }

    plan::ReconstructionPlan plan_for(Strategy s, rs::ChunkIndex lost, std::size_t q = 0, std::size_t offset = 0,
                                      std::size_t length = 0) const {
        std::vector<plan::Agent> survivors;
        for (std::size_t c = 0; c < params.width(); ++c) {
            if (c != lost) {
                survivors.push_back({static_cast<plan::NodeId>(c), c});
            }
        }
        plan::LoadTable load;
        std::mt19937_64 rng(1);
        plan::PlanOptions opts;
        opts.starter = kStarter;
        if (q) {
            opts.source_limit = q;
        }
        opts.read_offset = offset;
        if (length) {
            opts.read_length = length;
        }
        return plan::build_plan(params, generator, lost, survivors, s, load, 0, rng, opts);
    }

    std::map<rs::ChunkIndex, rs::Buffer> store_without(rs::ChunkIndex lost) const {
        std::map<rs::ChunkIndex, rs::Buffer> out;
        for (std::size_t c = 0; c < params.width(); ++c) {
            if (c != lost) {
                out[c] = stripe.chunks[c];
            }
        }
        return out;
    }
};

// Children of the root and largest fan-in of the pairing tree, by hand:
// k=4: 3<-{2,1}; k=6: 5<-{4,3}, 3<-{2,1}; k=10: 9<-{8,7}, 7<-{6,5,3}.
struct PprShape {
    std::size_t root_children;
    std::size_t max_fan_in;
};
const std::map<std::size_t, PprShape> kPprShapes{{4, {2, 2}}, {5, {1, 2}}, {6, {2, 2}}, {8, {3, 3}}, {10, {2, 3}}};

} // namespace

// Property: every strategy reconstructs the lost chunk exactly.
TEST(Flow, ExecuteLocalReconstructsForEveryStrategy) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t k = 1 + rng() % 8;
        const std::size_t m = 1 + rng() % 5;
        const std::size_t packet = 16;
        const std::size_t packets = 1 + rng() % 24;
        const Fixture f(k, m, packet * packets, packet, rng);
        const rs::ChunkIndex lost = rng() % (k + m);
        for (auto s : kAll) {
            const auto p = f.plan_for(s, lost);
            const auto g = flow::build_flow(p);
            ASSERT_NO_THROW(flow::validate(g)) << plan::to_string(s);
            ASSERT_EQ(flow::execute_local(g, f.store_without(lost)), f.stripe.chunks[lost])
                << plan::to_string(s) << " k=" << k << " m=" << m << " lost=" << lost;
        }
    }
}

TEST(Flow, PartialRangeAndSourceCap) {
    std::mt19937 rng(5);
    const Fixture f(6, 6, 64 * 32, 64, rng);
    for (std::size_t q = 6; q <= 11; ++q) {
        for (auto s : {Strategy::APLSParallel, Strategy::APLSPipelined}) {
            const auto p = f.plan_for(s, 3, q, 64 * 5, 64 * 20);
            EXPECT_EQ(p.q, q);
            const auto out = flow::execute_local(flow::build_flow(p), f.store_without(3));
            const rs::Buffer expect(f.stripe.chunks[3].begin() + 64 * 5, f.stripe.chunks[3].begin() + 64 * 25);
            ASSERT_EQ(out, expect) << "q=" << q;
        }
    }
}

TEST(Flow, NormalReadFlow) {
    std::mt19937 rng(2);
    const Fixture f(4, 2, 1024, 128, rng);
    const auto g = flow::build_normal_read_flow(7, 2, kStarter, 128, 256, 512);
    flow::validate(g);
    std::map<rs::ChunkIndex, rs::Buffer> store{{2, f.stripe.chunks[2]}};
    const rs::Buffer expect(f.stripe.chunks[2].begin() + 256, f.stripe.chunks[2].begin() + 768);
    EXPECT_EQ(flow::execute_local(g, store), expect);
    const auto bytes = flow::flow_byte_summary(g);
    EXPECT_EQ(bytes.at(kStarter).ingress, 512u);
    EXPECT_EQ(bytes.at(7).egress, 512u);
    EXPECT_EQ(flow::transfer_depth(g), 1u);
}

TEST(Flow, StarterIngressPerStrategy) {
    std::mt19937 rng(3);
    for (auto [k, m] : {std::pair<std::size_t, std::size_t>{4, 2}, {6, 3}, {6, 6}, {10, 4}}) {
        const std::size_t c = 64 * 60;
        const Fixture f(k, m, c, 64, rng);
        {
            const auto p = f.plan_for(Strategy::Traditional, 0);
            const auto b = flow::flow_byte_summary(flow::build_flow(p));
            EXPECT_EQ(b.at(p.starter).ingress, (k - 1) * c);
        }
        {
            const auto p = f.plan_for(Strategy::PPR, 0);
            const auto b = flow::flow_byte_summary(flow::build_flow(p));
            EXPECT_EQ(b.at(p.starter).ingress, kPprShapes.at(k).root_children * c) << "k=" << k;
        }
        for (auto s : {Strategy::ECPipe, Strategy::ECPipeMulti, Strategy::APLSParallel, Strategy::APLSPipelined}) {
            const auto p = f.plan_for(s, 0);
            const auto b = flow::flow_byte_summary(flow::build_flow(p));
            EXPECT_EQ(b.at(kStarter).ingress, c) << plan::to_string(s);
            EXPECT_EQ(b.at(kStarter).egress, 0u);
        }
    }
}

TEST(Flow, AplsAgentTrafficMatchesBudget) {
    std::mt19937 rng(4);
    const std::size_t k = 6;
    const std::size_t q = 11;
    const std::size_t c = 64 * q * 4;
    const Fixture f(k, 6, c, 64, rng);
    const auto budget = plan::byte_budget(k, q, static_cast<double>(c));
    const auto p = f.plan_for(Strategy::APLSPipelined, 0);
    ASSERT_EQ(p.q, q);
    const auto bytes = flow::flow_byte_summary(flow::build_flow(p));
    for (const auto& a : p.agents) {
        const auto& b = bytes.at(a.node);
        EXPECT_DOUBLE_EQ(static_cast<double>(b.ingress), budget.recv_from_agents);
        EXPECT_DOUBLE_EQ(static_cast<double>(b.egress), budget.send_to_agents + budget.send_to_starter);
    }
}

TEST(Flow, PprFanIn) {
    for (const auto& [k, shape] : kPprShapes) {
        EXPECT_EQ(flow::ppr_max_fan_in(k), shape.max_fan_in) << "k=" << k;
    }
    EXPECT_EQ(flow::ppr_max_fan_in(1), 0u);
    EXPECT_EQ(flow::ppr_max_fan_in(2), 1u);
}

TEST(Flow, TransferDepth) {
    std::mt19937 rng(6);
    const Fixture f(6, 3, 64 * 8, 64, rng);
    EXPECT_EQ(flow::transfer_depth(flow::build_flow(f.plan_for(Strategy::Traditional, 0))), 1u);
    EXPECT_EQ(flow::transfer_depth(flow::build_flow(f.plan_for(Strategy::PPR, 0))), 3u);
    EXPECT_EQ(flow::transfer_depth(flow::build_flow(f.plan_for(Strategy::ECPipe, 0))), 6u);
    EXPECT_EQ(flow::transfer_depth(flow::build_flow(f.plan_for(Strategy::APLSPipelined, 0))), 6u);
    EXPECT_EQ(flow::transfer_depth(flow::build_flow(f.plan_for(Strategy::APLSParallel, 0))), 2u);
}

TEST(Flow, TextRoundTrip) {
    std::mt19937 rng(7);
    const Fixture f(5, 3, 64 * 12, 64, rng);
    for (auto s : kAll) {
        const auto g = flow::build_flow(f.plan_for(s, 1, 0, 64, 64 * 9));
        const auto text = flow::to_text(g);
        EXPECT_EQ(flow::parse_flow_text(text), g) << plan::to_string(s);
    }
    EXPECT_THROW(flow::parse_flow_text("garbage line\n"), std::invalid_argument);
}

TEST(Flow, ValidateRejectsBrokenGraphs) {
    std::mt19937 rng(8);
    const Fixture f(4, 2, 64 * 4, 64, rng);
    const auto good = flow::build_flow(f.plan_for(Strategy::ECPipe, 0));

    auto cyclic = good;
    cyclic.steps.front().deps.push_back(cyclic.steps.back().id);
    EXPECT_THROW(flow::validate(cyclic), std::invalid_argument);

    auto dangling = good;
    dangling.steps.back().deps.push_back(99999);
    EXPECT_THROW(flow::validate(dangling), std::invalid_argument);

    auto missing_output = good;
    missing_output.outputs.pop_back();
    EXPECT_THROW(flow::validate(missing_output), std::invalid_argument);
}

TEST(Flow, TopologicalOrderRespectsDeps) {
    std::mt19937 rng(9);
    const Fixture f(6, 6, 64 * 22, 64, rng);
    for (auto s : kAll) {
        const auto g = flow::build_flow(f.plan_for(s, 0));
        const auto order = flow::topological_order(g);
        ASSERT_EQ(order.size(), g.steps.size());
        std::vector<std::size_t> pos(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            pos[order[i]] = i;
        }
        for (const auto& st : g.steps) {
            for (auto d : st.deps) {
                ASSERT_LT(pos[d], pos[st.id]);
                // Id order is itself a schedule.
                ASSERT_LT(d, st.id);
            }
        }
    }
}
