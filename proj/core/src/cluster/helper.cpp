#include "apls/cluster/helper.hpp"

#include "apls/cluster/messages.hpp"
#include "apls/cluster/store.hpp"
#include "apls/cluster/throttle.hpp"
#include "apls/strategy.hpp"
#include "service.hpp"

#include <spdlog/spdlog.h>

#include <condition_variable>
#include <deque>
#include <map>
#include <set>

namespace apls::cluster {

namespace {

using BufferPtr = std::shared_ptr<const rs::Buffer>;

// Frames for one destination of one read, sent in order on a lazily opened
// connection.
class Outbox {
public:
    Outbox(Address to, TokenBucket& gate) : to_(std::move(to)), gate_(gate) {
        thread_ = std::thread([this] { run(); });
    }

    ~Outbox() { close(); }

    void push(MessageType type, std::vector<std::uint8_t> payload) {
        {
            std::lock_guard lock(mutex_);
            queue_.emplace_back(type, std::move(payload));
        }
        cv_.notify_one();
    }

    /// Flushes what is queued, then closes. Returns the first send error.
    std::string close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_one();
        if (thread_.joinable()) {
            thread_.join();
        }
        return error_;
    }

private:
    void run() {
        Socket socket;
        while (true) {
            std::pair<MessageType, std::vector<std::uint8_t>> item;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return closed_ || !queue_.empty(); });
                if (queue_.empty()) {
                    return;
                }
                item = std::move(queue_.front());
                queue_.pop_front();
            }
            if (!error_.empty()) {
                continue; // drain without sending
            }
            try {
                if (!socket.valid()) {
                    socket = Socket::connect(to_);
                }
                write_frame(socket, item.first, item.second, &gate_);
            } catch (const std::exception& e) {
                error_ = "send to " + to_.to_string() + ": " + e.what();
            }
        }
    }

    Address to_;
    TokenBucket& gate_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::pair<MessageType, std::vector<std::uint8_t>>> queue_;
    bool closed_ = false;
    std::string error_;
    std::thread thread_;
};

struct ReadState {
    std::mutex mutex;
    std::condition_variable cv;
    std::map<flow::StepId, BufferPtr> received; // by the transfer step that delivered it
    std::uint64_t ingress = 0;
    bool aborted = false;
};

class ReadFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace

struct HelperServer::Impl {
    Impl(ClusterManifest m, NodeId node, Listener listener, HelperOptions opts)
        : manifest(std::move(m)), id(node), options(opts),
          egress(opts.up_bw, TokenBucket::default_burst(opts.up_bw)),
          ingress(opts.down_bw, TokenBucket::default_burst(opts.down_bw)) {
        manifest.params.validate();
        server = std::make_unique<detail::Server>(std::move(listener), [this](Socket& s) { handle_connection(s); });
    }

    ~Impl() { stop(); }

    void stop() {
        if (server) {
            server->stop();
        }
        {
            std::lock_guard lock(mutex);
            for (auto& [rid, state] : reads) {
                std::lock_guard l(state->mutex);
                state->aborted = true;
                state->cv.notify_all();
            }
        }
        executors.join_all();
    }

    std::shared_ptr<ReadState> state_for(std::uint64_t read_id, bool create) {
        std::lock_guard lock(mutex);
        auto it = reads.find(read_id);
        if (it != reads.end()) {
            return it->second;
        }
        if (!create || finished.contains(read_id)) {
            return nullptr;
        }
        auto s = std::make_shared<ReadState>();
        reads.emplace(read_id, s);
        return s;
    }

    void finish(std::uint64_t read_id, bool ok) {
        std::lock_guard lock(mutex);
        reads.erase(read_id);
        finished.insert(read_id);
        ++(ok ? reads_completed : reads_failed);
    }

    const gf::Matrix& generator(std::size_t k, std::size_t m) {
        std::lock_guard lock(mutex);
        auto it = generators.find({k, m});
        if (it == generators.end()) {
            it = generators.emplace(std::pair{k, m}, gf::build_generator_matrix(k, m)).first;
        }
        return it->second;
    }

    void handle_connection(Socket& socket) {
        FrameReader reader(socket, &ingress);
        try {
            while (auto frame = reader.next()) {
                switch (frame->type) {
                case MessageType::ReadReq:
                    serve_normal_read(socket, decode_read_request(frame->payload));
                    break;
                case MessageType::SubreqCmd: {
                    auto sub = std::make_shared<SubRequest>(decode_subrequest(frame->payload));
                    state_for(sub->read_id, true);
                    executors.spawn([this, sub] { execute(*sub); });
                    break;
                }
                case MessageType::Packet:
                    deliver(frame->payload);
                    break;
                default:
                    throw WireError("unexpected " + std::string(to_string(frame->type)) + " frame");
                }
            }
        } catch (const WireError& e) {
            ++connections_dropped;
            spdlog::warn("helper {}: resetting connection: {}", id, e.what());
            socket.shutdown_both();
        } catch (const std::exception& e) {
            spdlog::debug("helper {}: connection ended: {}", id, e.what());
        }
    }

    void deliver(std::span<const std::uint8_t> payload) {
        std::span<const std::uint8_t> data;
        const auto h = decode_packet(payload, data);
        auto state = state_for(h.read_id, true);
        if (!state) {
            return; // late frame of a finished read
        }
        auto buf = std::make_shared<const rs::Buffer>(data.begin(), data.end());
        {
            std::lock_guard lock(state->mutex);
            state->ingress += data.size();
            state->received[h.step] = std::move(buf);
        }
        state->cv.notify_all();
    }

    void serve_normal_read(Socket& socket, const ReadRequest& req) {
        const auto chunk = read_chunk_file(manifest, id, req.stripe, req.chunk);
        if (!chunk) {
            ErrorMessage err{req.read_id, id,
                             "helper " + std::to_string(id) + " has no chunk " + std::to_string(req.stripe) + ":" +
                                 std::to_string(req.chunk)};
            write_frame(socket, MessageType::Error, encode(err));
            return;
        }
        const std::size_t ps = manifest.params.packet_size;
        const std::size_t offset = req.offset;
        const std::size_t length = req.length == 0 ? chunk->size() - std::min(offset, chunk->size()) : req.length;
        if (offset + length > chunk->size()) {
            write_frame(socket, MessageType::Error, encode(ErrorMessage{req.read_id, id, "read range out of bounds"}));
            return;
        }
        std::uint32_t p = 0;
        for (std::size_t at = 0; at < length; at += ps, ++p) {
            const auto n = std::min(ps, length - at);
            const PacketHeader h{req.read_id, p, 0, p, 0};
            write_frame(socket, MessageType::Packet,
                        encode_packet(h, std::span(*chunk).subspan(offset + at, n)), &egress);
        }
        write_frame(socket, MessageType::Done, encode(DoneMessage{req.read_id, id, 0, length}));
    }

    void execute(const SubRequest& sub) {
        auto state = state_for(sub.read_id, true);
        if (!state) {
            return;
        }
        std::map<std::string, std::unique_ptr<Outbox>> outboxes;
        auto outbox = [&](const std::string& address) -> Outbox& {
            auto& slot = outboxes[address];
            if (!slot) {
                slot = std::make_unique<Outbox>(parse_address(address), egress);
            }
            return *slot;
        };
        bool ok = true;
        try {
            run_steps(sub, *state, outbox);
        } catch (const std::exception& e) {
            ok = false;
            spdlog::warn("helper {}: read {} failed: {}", id, sub.read_id, e.what());
            if (!sub.client_address.empty()) {
                outbox(sub.client_address)
                    .push(MessageType::Error, encode(ErrorMessage{sub.read_id, id, e.what()}));
            }
        }
        for (auto& [address, box] : outboxes) {
            if (auto err = box->close(); !err.empty()) {
                ok = false;
                spdlog::warn("helper {}: read {}: {}", id, sub.read_id, err);
            }
        }
        finish(sub.read_id, ok);
    }

    template <typename OutboxFn>
    void run_steps(const SubRequest& sub, ReadState& state, OutboxFn& outbox) {
        const auto& cmd = sub.command;
        rs::CodeParams params{cmd.k, cmd.m, manifest.params.chunk_size, cmd.packet_size};
        params.validate();

        std::vector<plan::Agent> agents;
        std::optional<rs::ChunkIndex> mine;
        for (std::uint32_t i = 0; i < cmd.agent_count; ++i) {
            const auto node = manifest.node_of(parse_address(cmd.agent_locations[i]));
            if (!node) {
                throw ReadFailed("agent " + cmd.agent_locations[i] + " is not in the manifest");
            }
            agents.push_back({*node, cmd.chunk_indices[i]});
            if (*node == id) {
                mine = cmd.chunk_indices[i];
            }
        }
        const bool starter = sub.starter == id;
        if (!mine && !starter) {
            throw ReadFailed("command names neither this helper nor it as starter");
        }

        std::optional<rs::Buffer> chunk;
        if (mine) {
            // Fetch the whole chunk before any computation.
            chunk = read_chunk_file(manifest, id, sub.stripe, static_cast<std::uint32_t>(*mine));
            if (!chunk) {
                throw ReadFailed("helper " + std::to_string(id) + " is missing chunk " + std::to_string(sub.stripe) +
                                 ":" + std::to_string(*mine));
            }
        }

        const auto p = plan::make_plan(params, generator(cmd.k, cmd.m), cmd.lost_chunk_index,
                                       cmd.reconstruction_method, agents, sub.starter, cmd.start_position,
                                       cmd.read_length);
        const auto graph = flow::build_flow(p);

        auto address_of = [&](NodeId node) {
            return node == sub.starter ? sub.starter_address : manifest.helper(node).address.to_string();
        };

        // Payloads that reach this node by transfer, keyed to the delivering step.
        std::map<flow::PayloadId, flow::StepId> inbound;
        std::multimap<flow::StepId, const flow::Output*> relays;
        for (const auto& s : graph.steps) {
            if (s.is_transfer() && s.transfer().dst == id) {
                inbound[s.transfer().payload] = s.id;
            }
        }
        if (starter) {
            for (const auto& o : graph.outputs) {
                relays.emplace(o.step, &o);
            }
        }

        std::map<flow::PayloadId, BufferPtr> local;
        auto payload = [&](flow::PayloadId pid) -> BufferPtr {
            if (auto it = local.find(pid); it != local.end()) {
                return it->second;
            }
            auto in = inbound.find(pid);
            if (in == inbound.end()) {
                throw ReadFailed("payload " + std::to_string(pid) + " never reaches this helper");
            }
            std::unique_lock lock(state.mutex);
            const auto deadline = std::chrono::steady_clock::now() + options.timeout;
            while (!state.received.contains(in->second)) {
                if (state.aborted) {
                    throw ReadFailed("helper shutting down");
                }
                if (state.cv.wait_until(lock, deadline) == std::cv_status::timeout &&
                    !state.received.contains(in->second)) {
                    throw ReadFailed("timed out waiting for step " + std::to_string(in->second));
                }
            }
            auto buf = state.received.at(in->second);
            lock.unlock();
            local.emplace(pid, buf);
            return buf;
        };

        std::uint64_t egress_bytes = 0;
        for (const auto& s : graph.steps) {
            if (!s.is_transfer() && s.compute().node == id) {
                const auto& c = s.compute();
                auto out = std::make_shared<rs::Buffer>(c.bytes, 0);
                for (const auto& t : c.inputs) {
                    if (t.source == flow::Term::Source::Local) {
                        if (!chunk || t.chunk != *mine || t.offset + c.bytes > chunk->size()) {
                            throw ReadFailed("compute step needs a slice this helper does not hold");
                        }
                        gf::mul_add_region(t.coeff, std::span(*chunk).subspan(t.offset, c.bytes), *out);
                    } else {
                        gf::mul_add_region(t.coeff, *payload(t.payload), *out);
                    }
                }
                local[c.output] = std::move(out);
            } else if (s.is_transfer() && s.transfer().src == id) {
                const auto& t = s.transfer();
                const auto data = payload(t.payload);
                outbox(address_of(t.dst))
                    .push(MessageType::Packet, encode_packet({sub.read_id, s.id, s.list, s.packet, s.stage}, *data));
                egress_bytes += data->size();
            }
            auto [lo, hi] = relays.equal_range(s.id);
            for (auto it = lo; it != hi; ++it) {
                const auto* o = it->second;
                const auto data = payload(o->payload);
                outbox(sub.client_address)
                    .push(MessageType::Packet, encode_packet({sub.read_id, s.id, s.list,
                                                              static_cast<std::uint32_t>(o->packet), s.stage},
                                                             *data));
            }
        }
        // Everything addressed here must have arrived before the counters are final.
        for (const auto& [pid, step] : inbound) {
            payload(pid);
        }
        std::uint64_t ingress_bytes = 0;
        {
            std::lock_guard lock(state.mutex);
            ingress_bytes = state.ingress;
        }
        if (!sub.client_address.empty()) {
            outbox(sub.client_address)
                .push(MessageType::Done, encode(DoneMessage{sub.read_id, id, ingress_bytes, egress_bytes}));
        }
    }

    ClusterManifest manifest;
    NodeId id;
    HelperOptions options;
    TokenBucket egress;
    TokenBucket ingress;

    std::mutex mutex;
    std::map<std::uint64_t, std::shared_ptr<ReadState>> reads;
    std::set<std::uint64_t> finished;
    std::map<std::pair<std::size_t, std::size_t>, gf::Matrix> generators;
    std::uint64_t reads_completed = 0;
    std::uint64_t reads_failed = 0;
    std::atomic<std::uint64_t> connections_dropped{0};

    detail::ThreadGroup executors;
    std::unique_ptr<detail::Server> server;
};

HelperServer::HelperServer(ClusterManifest manifest, NodeId id, Listener listener, HelperOptions options)
    : impl_(std::make_unique<Impl>(std::move(manifest), id, std::move(listener), options)) {}

HelperServer::~HelperServer() = default;

NodeId HelperServer::id() const noexcept { return impl_->id; }

Address HelperServer::address() const { return impl_->server->address(); }

HelperStats HelperServer::stats() const {
    HelperStats s;
    s.egress_bytes = impl_->egress.total();
    s.ingress_bytes = impl_->ingress.total();
    std::lock_guard lock(impl_->mutex);
    s.reads_completed = impl_->reads_completed;
    s.reads_failed = impl_->reads_failed;
    s.connections_dropped = impl_->connections_dropped.load();
    return s;
}

void HelperServer::stop() { impl_->stop(); }

} // namespace apls::cluster
