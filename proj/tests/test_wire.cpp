#include "apls/cluster/manifest.hpp"
#include "apls/cluster/messages.hpp"
#include "apls/cluster/wire.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace apls;
using namespace apls::cluster;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::mt19937& rng) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng());
    }
    return out;
}

plan::SubRequestCommand sample_command() {
    plan::SubRequestCommand c;
    c.start_position = 65536;
    c.read_length = 1 << 20;
    c.k = 6;
    c.m = 6;
    c.agent_count = 3;
    c.agent_locations = {"127.0.0.1:7001", "127.0.0.1:7002", "127.0.0.1:7003"};
    c.chunk_indices = {1, 2, 3};
    c.lost_chunk_index = 0;
    c.reconstruction_method = plan::Strategy::APLSParallel;
    c.packet_size = 65536;
    return c;
}

} // namespace

TEST(Frame, HeaderLayout) {
    const std::vector<std::uint8_t> payload{0xAA, 0xBB, 0xCC};
    const auto bytes = encode_frame({MessageType::Done, payload});
    EXPECT_EQ(bytes, (std::vector<std::uint8_t>{3, 0, 0, 0, 5, 0xAA, 0xBB, 0xCC}));
    EXPECT_TRUE(is_known_type(1));
    EXPECT_TRUE(is_known_type(6));
    EXPECT_FALSE(is_known_type(0));
    EXPECT_FALSE(is_known_type(7));
    EXPECT_EQ(to_string(MessageType::SubreqCmd), "SUBREQ_CMD");
}

// Property: decoding any split of a frame stream yields the original frames,
// and no strict prefix yields the final frame early.
TEST(Frame, ArbitrarySplitsDecode) {
    std::mt19937 rng(12);
    for (int t = 0; t < 200; ++t) {
        std::vector<Frame> frames;
        std::vector<std::uint8_t> stream;
        const std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) {
            Frame f{static_cast<MessageType>(1 + rng() % 6), random_bytes(rng() % 300, rng)};
            append_frame(stream, f.type, f.payload);
            frames.push_back(std::move(f));
        }
        FrameDecoder dec;
        std::vector<Frame> got;
        std::size_t pos = 0;
        while (pos < stream.size()) {
            const std::size_t step = std::min<std::size_t>(1 + rng() % 64, stream.size() - pos);
            dec.feed(std::span(stream).subspan(pos, step));
            pos += step;
            while (auto f = dec.next()) {
                got.push_back(std::move(*f));
            }
            if (pos < stream.size()) {
                ASSERT_LT(got.size(), frames.size());
            }
        }
        ASSERT_EQ(got, frames);
        ASSERT_EQ(dec.buffered(), 0u);
    }
}

TEST(Frame, RejectsUnknownTypeAndOversize) {
    {
        FrameDecoder dec;
        const std::vector<std::uint8_t> bad{0, 0, 0, 0, 9};
        dec.feed(bad);
        EXPECT_THROW(dec.next(), WireError);
    }
    {
        FrameDecoder dec(1024);
        const std::vector<std::uint8_t> big{0x01, 0x04, 0, 0, 4};
        dec.feed(big);
        EXPECT_THROW(dec.next(), WireError);
    }
}

// Property: random garbage either decodes into well-formed frames or throws
// WireError; nothing else escapes.
TEST(Frame, FuzzedInputOnlyThrowsWireError) {
    std::mt19937 rng(77);
    for (int t = 0; t < 2000; ++t) {
        FrameDecoder dec(4096);
        const auto junk = random_bytes(rng() % 64, rng);
        try {
            dec.feed(junk);
            while (dec.next()) {
            }
        } catch (const WireError&) {
        }
    }
}

TEST(Codec, ScalarsAndTruncation) {
    Writer w;
    w.u8(7).u32(0xDEADBEEF).u64(1ull << 40).f64(2.5).str("abc");
    const auto bytes = w.take();
    Reader r(bytes);
    EXPECT_EQ(r.u8(), 7);
    EXPECT_EQ(r.u32(), 0xDEADBEEFu);
    EXPECT_EQ(r.u64(), 1ull << 40);
    EXPECT_EQ(r.f64(), 2.5);
    EXPECT_EQ(r.str(), "abc");
    EXPECT_TRUE(r.done());
    Reader short_reader{std::span(bytes).first(6)};
    short_reader.u8();
    EXPECT_THROW(short_reader.u64(), WireError);
}

TEST(Messages, RoundTrips) {
    ReadRequest rq{0, 3, 4, plan::Strategy::ECPipe, ReadMode::Degraded, StarterMode::Auto, "127.0.0.1:9000", 8,
                   4096, 8192};
    EXPECT_EQ(decode_read_request(encode(rq)), rq);

    ReadResponse normal;
    normal.kind = ResponseKind::Normal;
    normal.read_id = 5;
    normal.host = 2;
    normal.host_address = "127.0.0.1:7002";
    EXPECT_EQ(decode_read_response(encode(normal)), normal);

    ReadResponse degraded;
    degraded.kind = ResponseKind::Degraded;
    degraded.read_id = 6;
    degraded.stripe = 1;
    degraded.command = sample_command();
    degraded.starter = kRequestorNode;
    degraded.starter_address = "127.0.0.1:9000";
    EXPECT_EQ(decode_read_response(encode(degraded)), degraded);

    ReadResponse error;
    error.kind = ResponseKind::Error;
    error.error = "unrecoverable";
    EXPECT_EQ(decode_read_response(encode(error)), error);

    SubRequest sr{9, 2, 4, "127.0.0.1:7004", "127.0.0.1:9000", sample_command()};
    EXPECT_EQ(decode_subrequest(encode(sr)), sr);

    DoneMessage done{9, 3, 1000, 2000};
    EXPECT_EQ(decode_done(encode(done)), done);
    ErrorMessage err{9, 3, "missing chunk"};
    EXPECT_EQ(decode_error(encode(err)), err);
    EXPECT_EQ(decode_command(encode(sample_command())), sample_command());
}

TEST(Messages, PacketHeader) {
    const PacketHeader h{42, 7, 1, 3, 2};
    const std::vector<std::uint8_t> data{1, 2, 3, 4, 5};
    const auto payload = encode_packet(h, data);
    EXPECT_EQ(payload.size(), kPacketHeaderSize + data.size());
    std::span<const std::uint8_t> body;
    EXPECT_EQ(decode_packet(payload, body), h);
    EXPECT_TRUE(std::equal(body.begin(), body.end(), data.begin(), data.end()));
    EXPECT_THROW(decode_packet(std::span(payload).first(10), body), WireError);
}

TEST(Messages, RejectTrailingAndTruncated) {
    auto bytes = encode(DoneMessage{1, 2, 3, 4});
    bytes.push_back(0);
    EXPECT_THROW(decode_done(bytes), WireError);
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(decode_done(bytes), WireError);
    auto cmd = encode(sample_command());
    cmd[cmd.size() - 9] = 99; // reconstruction method out of range
    EXPECT_THROW(decode_command(cmd), WireError);
}

// Property: truncating any encoded message at any point is rejected.
TEST(Messages, EveryTruncationRejected) {
    const auto full = encode(SubRequest{1, 2, 3, "a:1", "b:2", sample_command()});
    for (std::size_t n = 0; n < full.size(); ++n) {
        ASSERT_THROW(decode_subrequest(std::span(full).first(n)), WireError) << n;
    }
}

TEST(Manifest, RoundTripAndValidation) {
    ClusterManifest m;
    m.coordinator = {"127.0.0.1", 7000};
    m.params = {4, 2, 1 << 20, 1 << 16};
    m.stripe_dir = "/tmp/apls-test";
    m.seed = 9;
    for (NodeId i = 0; i < 7; ++i) {
        m.helpers[i] = {{"127.0.0.1", static_cast<std::uint16_t>(7100 + i)}, 100.0 * (1 << 20), 50.0 * (1 << 20)};
    }
    m.helpers[6].up_bw = std::numeric_limits<double>::infinity();
    m.placement = {{0, 1, 2, 3, 4, 5}, {1, 2, 3, 4, 5, 6}};
    m.failed = {{0, 3}, {1, 0}};
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(parse_manifest(format_manifest(m)), m);
    EXPECT_EQ(m.node_of({"127.0.0.1", 7103}), NodeId{3});
    EXPECT_FALSE(m.node_of({"127.0.0.1", 1}).has_value());

    auto bad = m;
    bad.placement[0][2] = 99;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_THROW(parse_manifest("k = 4\nnonsense\n"), std::invalid_argument);
    EXPECT_EQ(parse_chunk_id("12:5"), (std::pair<std::uint32_t, std::uint32_t>{12, 5}));
    EXPECT_THROW(parse_chunk_id("12"), std::invalid_argument);
    EXPECT_THROW(parse_chunk_id("a:b"), std::invalid_argument);
}
