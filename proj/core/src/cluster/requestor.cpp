#include "apls/cluster/requestor.hpp"

#include "apls/cluster/throttle.hpp"
#include "service.hpp"

#include <spdlog/spdlog.h>

#include <condition_variable>
#include <set>

namespace apls::cluster {

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

// Reassembly state shared by the connection threads of one degraded read.
struct Collector {
    std::mutex mutex;
    std::condition_variable cv;
    std::uint64_t read_id = 0;
    std::size_t packet_size = 0;
    rs::Buffer data;
    std::vector<bool> have;
    std::size_t missing = 0;
    Clock::time_point last_byte;
    std::map<NodeId, flow::NodeBytes> counters;
    std::optional<std::string> error;

    void on_frame(const Frame& f) {
        std::unique_lock lock(mutex);
        switch (f.type) {
        case MessageType::Packet: {
            std::span<const std::uint8_t> bytes;
            const auto h = decode_packet(f.payload, bytes);
            if (h.read_id != read_id || h.packet >= have.size() || bytes.size() != packet_size) {
                error = "unexpected packet frame";
                break;
            }
            if (!have[h.packet]) {
                std::copy(bytes.begin(), bytes.end(), data.begin() + static_cast<std::ptrdiff_t>(h.packet * packet_size));
                have[h.packet] = true;
                if (--missing == 0) {
                    last_byte = Clock::now();
                }
            }
            break;
        }
        case MessageType::Done: {
            const auto d = decode_done(f.payload);
            if (d.read_id == read_id) {
                counters[d.node] = {d.ingress, d.egress};
            }
            break;
        }
        case MessageType::Error: {
            const auto e = decode_error(f.payload);
            if (e.read_id == read_id && !error) {
                error = "helper " + std::to_string(e.node) + ": " + e.message;
            }
            break;
        }
        default:
            throw WireError("unexpected " + std::string(to_string(f.type)) + " frame");
        }
        lock.unlock();
        cv.notify_all();
    }
};

ReadResponse ask_coordinator(const RequestorOptions& opts, const ReadRequest& req) {
    Socket s = Socket::connect(opts.coordinator, opts.timeout);
    write_frame(s, MessageType::ReadReq, encode(req));
    FrameReader reader(s);
    auto frame = reader.next(opts.timeout);
    if (!frame || frame->type != MessageType::ReadResp) {
        throw ReadError("coordinator closed the connection without an answer");
    }
    return decode_read_response(frame->payload);
}

ReadResult normal_read(const ReadResponse& resp, std::uint32_t stripe, std::uint32_t chunk,
                       const RequestorOptions& opts, TokenBucket& gate, Clock::time_point t0) {
    ReadResult result;
    result.read_id = resp.read_id;
    Socket s = Socket::connect(parse_address(resp.host_address), opts.timeout);
    ReadRequest req;
    req.read_id = resp.read_id;
    req.stripe = stripe;
    req.chunk = chunk;
    req.mode = ReadMode::Normal;
    req.offset = opts.offset;
    req.length = opts.length;
    write_frame(s, MessageType::ReadReq, encode(req));
    FrameReader reader(s, &gate);
    Clock::time_point last = Clock::now();
    std::uint32_t expected_packet = 0;
    while (true) {
        auto f = reader.next(opts.timeout);
        if (!f) {
            throw ReadError("helper closed the connection mid-read");
        }
        if (f->type == MessageType::Packet) {
            std::span<const std::uint8_t> bytes;
            const auto h = decode_packet(f->payload, bytes);
            if (h.packet != expected_packet++) {
                throw ReadError("normal read packets out of order");
            }
            result.data.insert(result.data.end(), bytes.begin(), bytes.end());
            last = Clock::now();
        } else if (f->type == MessageType::Done) {
            const auto d = decode_done(f->payload);
            if (d.egress != result.data.size()) {
                throw ReadError("normal read length mismatch");
            }
            result.node_bytes[d.node] = {d.ingress, d.egress};
            break;
        } else if (f->type == MessageType::Error) {
            throw ReadError(decode_error(f->payload).message);
        } else {
            throw ReadError("unexpected frame during normal read");
        }
    }
    result.latency = seconds(last - t0);
    return result;
}

} // namespace

ReadResult requestor_read(std::uint32_t stripe, std::uint32_t chunk, const RequestorOptions& opts) {
    TokenBucket gate(opts.down_bw, TokenBucket::default_burst(opts.down_bw));
    Collector collector;
    detail::Server server(Listener::bind(opts.listen_host, 0), [&](Socket& s) {
        FrameReader reader(s, &gate);
        try {
            while (auto f = reader.next()) {
                collector.on_frame(*f);
            }
        } catch (const std::exception& e) {
            spdlog::debug("requestor: connection ended: {}", e.what());
        }
    });

    ReadRequest req;
    req.stripe = stripe;
    req.chunk = chunk;
    req.strategy = opts.strategy;
    req.mode = opts.mode;
    req.starter = opts.starter;
    req.reply_address = server.address().to_string();
    req.source_limit = opts.source_limit;
    req.offset = opts.offset;
    req.length = opts.length;

    const auto t0 = Clock::now();
    const auto resp = ask_coordinator(opts, req);
    const double rtt = seconds(Clock::now() - t0);
    if (resp.kind == ResponseKind::Error) {
        throw ReadError(resp.error);
    }
    if (resp.kind == ResponseKind::Normal) {
        auto r = normal_read(resp, stripe, chunk, opts, gate, t0);
        r.coordinator_rtt = rtt;
        return r;
    }

    const auto& cmd = resp.command;
    if (cmd.packet_size == 0 || cmd.read_length % cmd.packet_size != 0) {
        throw ReadError("coordinator sent a malformed command");
    }
    {
        std::lock_guard lock(collector.mutex);
        collector.read_id = resp.read_id;
        collector.packet_size = cmd.packet_size;
        collector.data.assign(cmd.read_length, 0);
        collector.have.assign(cmd.read_length / cmd.packet_size, false);
        collector.missing = collector.have.size();
    }

    SubRequest sub;
    sub.read_id = resp.read_id;
    sub.stripe = resp.stripe;
    sub.starter = resp.starter;
    sub.starter_address = resp.starter_address;
    sub.client_address = req.reply_address;
    sub.command = cmd;
    const auto payload = encode(sub);

    std::set<std::string> targets(cmd.agent_locations.begin(), cmd.agent_locations.end());
    if (resp.starter != kRequestorNode) {
        targets.insert(resp.starter_address);
    }
    for (const auto& address : targets) {
        Socket s = Socket::connect(parse_address(address), opts.timeout);
        write_frame(s, MessageType::SubreqCmd, payload);
    }

    ReadResult result;
    result.degraded = true;
    result.read_id = resp.read_id;
    result.coordinator_rtt = rtt;
    result.starter = resp.starter;
    result.command = cmd;

    std::unique_lock lock(collector.mutex);
    const auto deadline = Clock::now() + opts.timeout;
    if (!collector.cv.wait_until(lock, deadline, [&] { return collector.missing == 0 || collector.error; })) {
        throw ReadError("timed out after " + std::to_string(opts.timeout.count()) + " ms with " +
                        std::to_string(collector.missing) + " packets missing");
    }
    if (collector.error) {
        throw ReadError(*collector.error);
    }
    result.latency = seconds(collector.last_byte - t0);
    if (opts.collect_counters) {
        collector.cv.wait_until(lock, Clock::now() + opts.timeout,
                                [&] { return collector.counters.size() >= targets.size() || collector.error; });
        if (collector.error) {
            throw ReadError(*collector.error);
        }
    }
    result.data = std::move(collector.data);
    result.node_bytes = collector.counters;
    lock.unlock();
    server.stop();
    return result;
}

} // namespace apls::cluster
