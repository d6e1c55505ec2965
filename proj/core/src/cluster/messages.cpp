#include "apls/cluster/messages.hpp"

namespace apls::cluster {

namespace {

plan::Strategy strategy_from(std::uint8_t v) {
    if (v > static_cast<std::uint8_t>(plan::Strategy::APLSPipelined)) {
        throw WireError("unknown reconstruction method " + std::to_string(v));
    }
    return static_cast<plan::Strategy>(v);
}

void write_command(Writer& w, const plan::SubRequestCommand& c) {
    if (c.agent_locations.size() != c.agent_count || c.chunk_indices.size() != c.agent_count) {
        throw std::invalid_argument("sub-request command lists disagree with agent_count");
    }
    w.u64(c.start_position).u64(c.read_length).u32(c.k).u32(c.m).u32(c.agent_count);
    for (const auto& a : c.agent_locations) {
        w.str(a);
    }
    for (auto i : c.chunk_indices) {
        w.u32(i);
    }
    w.u32(c.lost_chunk_index).u8(static_cast<std::uint8_t>(c.reconstruction_method)).u64(c.packet_size);
}

plan::SubRequestCommand read_command(Reader& r) {
    plan::SubRequestCommand c;
    c.start_position = r.u64();
    c.read_length = r.u64();
    c.k = r.u32();
    c.m = r.u32();
    c.agent_count = r.u32();
    if (c.agent_count > 256) {
        throw WireError("agent count out of range");
    }
    for (std::uint32_t i = 0; i < c.agent_count; ++i) {
        c.agent_locations.push_back(r.str());
    }
    for (std::uint32_t i = 0; i < c.agent_count; ++i) {
        c.chunk_indices.push_back(r.u32());
    }
    c.lost_chunk_index = r.u32();
    c.reconstruction_method = strategy_from(r.u8());
    c.packet_size = r.u64();
    return c;
}

} // namespace

std::vector<std::uint8_t> encode(const plan::SubRequestCommand& cmd) {
    Writer w;
    write_command(w, cmd);
    return w.take();
}

plan::SubRequestCommand decode_command(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    auto c = read_command(r);
    r.expect_done();
    return c;
}

std::vector<std::uint8_t> encode(const ReadRequest& m) {
    Writer w;
    w.u64(m.read_id).u32(m.stripe).u32(m.chunk).u8(static_cast<std::uint8_t>(m.strategy));
    w.u8(static_cast<std::uint8_t>(m.mode)).u8(static_cast<std::uint8_t>(m.starter)).str(m.reply_address);
    w.u32(m.source_limit).u64(m.offset).u64(m.length);
    return w.take();
}

ReadRequest decode_read_request(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    ReadRequest m;
    m.read_id = r.u64();
    m.stripe = r.u32();
    m.chunk = r.u32();
    m.strategy = strategy_from(r.u8());
    const auto mode = r.u8();
    if (mode > static_cast<std::uint8_t>(ReadMode::Degraded)) {
        throw WireError("unknown read mode");
    }
    m.mode = static_cast<ReadMode>(mode);
    const auto starter = r.u8();
    if (starter > static_cast<std::uint8_t>(StarterMode::Auto)) {
        throw WireError("unknown starter mode");
    }
    m.starter = static_cast<StarterMode>(starter);
    m.reply_address = r.str();
    m.source_limit = r.u32();
    m.offset = r.u64();
    m.length = r.u64();
    r.expect_done();
    return m;
}

std::vector<std::uint8_t> encode(const ReadResponse& m) {
    Writer w;
    w.u8(static_cast<std::uint8_t>(m.kind)).u64(m.read_id);
    switch (m.kind) {
    case ResponseKind::Error:
        w.str(m.error);
        break;
    case ResponseKind::Normal:
        w.u32(m.host).str(m.host_address);
        break;
    case ResponseKind::Degraded:
        w.u32(m.stripe).u32(m.starter).str(m.starter_address);
        write_command(w, m.command);
        break;
    }
    return w.take();
}

ReadResponse decode_read_response(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    ReadResponse m;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ResponseKind::Error)) {
        throw WireError("unknown response kind");
    }
    m.kind = static_cast<ResponseKind>(kind);
    m.read_id = r.u64();
    switch (m.kind) {
    case ResponseKind::Error:
        m.error = r.str();
        break;
    case ResponseKind::Normal:
        m.host = r.u32();
        m.host_address = r.str();
        break;
    case ResponseKind::Degraded:
        m.stripe = r.u32();
        m.starter = r.u32();
        m.starter_address = r.str();
        m.command = read_command(r);
        break;
    }
    r.expect_done();
    return m;
}

std::vector<std::uint8_t> encode(const SubRequest& m) {
    Writer w;
    w.u64(m.read_id).u32(m.stripe).u32(m.starter).str(m.starter_address).str(m.client_address);
    write_command(w, m.command);
    return w.take();
}

SubRequest decode_subrequest(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    SubRequest m;
    m.read_id = r.u64();
    m.stripe = r.u32();
    m.starter = r.u32();
    m.starter_address = r.str();
    m.client_address = r.str();
    m.command = read_command(r);
    r.expect_done();
    return m;
}

std::vector<std::uint8_t> encode(const DoneMessage& m) {
    Writer w;
    w.u64(m.read_id).u32(m.node).u64(m.ingress).u64(m.egress);
    return w.take();
}

DoneMessage decode_done(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    DoneMessage m;
    m.read_id = r.u64();
    m.node = r.u32();
    m.ingress = r.u64();
    m.egress = r.u64();
    r.expect_done();
    return m;
}

std::vector<std::uint8_t> encode(const ErrorMessage& m) {
    Writer w;
    w.u64(m.read_id).u32(m.node).str(m.message);
    return w.take();
}

ErrorMessage decode_error(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    ErrorMessage m;
    m.read_id = r.u64();
    m.node = r.u32();
    m.message = r.str();
    r.expect_done();
    return m;
}

std::vector<std::uint8_t> encode_packet(const PacketHeader& h, std::span<const std::uint8_t> data) {
    Writer w;
    w.data().reserve(kPacketHeaderSize + data.size());
    w.u64(h.read_id).u32(h.step).u32(h.list).u32(h.packet).u32(h.stage).raw(data);
    return w.take();
}

PacketHeader decode_packet(std::span<const std::uint8_t> payload, std::span<const std::uint8_t>& data) {
    Reader r(payload);
    PacketHeader h;
    h.read_id = r.u64();
    h.step = r.u32();
    h.list = r.u32();
    h.packet = r.u32();
    h.stage = r.u32();
    data = r.rest();
    return h;
}

} // namespace apls::cluster
