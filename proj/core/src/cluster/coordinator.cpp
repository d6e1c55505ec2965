#include "apls/cluster/coordinator.hpp"

#include "apls/cluster/store.hpp"
#include "service.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

namespace apls::cluster {

struct Coordinator::Server {
    Server(Listener listener, detail::Server::Handler handler) : server(std::move(listener), std::move(handler)) {}
    detail::Server server;
};

Coordinator::Coordinator(ClusterManifest manifest, CoordinatorOptions options)
    : manifest_(std::move(manifest)), options_(options), load_(options.load_window),
      selector_(options.starter_policy, options.seed), rng_(options.seed),
      generator_(gf::build_generator_matrix(manifest_.params.k, manifest_.params.m)),
      epoch_(std::chrono::steady_clock::now()) {
    manifest_.validate();
}

Coordinator::~Coordinator() { stop(); }

plan::Timestamp Coordinator::clock() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

ClusterManifest Coordinator::manifest() const {
    std::lock_guard lock(mutex_);
    return manifest_;
}

void Coordinator::set_failed(std::uint32_t stripe, std::uint32_t chunk, bool failed) {
    std::lock_guard lock(mutex_);
    if (failed) {
        manifest_.failed.insert({stripe, chunk});
    } else {
        manifest_.failed.erase({stripe, chunk});
    }
}

ReadResponse Coordinator::handle_read_request(const ReadRequest& req, plan::Timestamp now) {
    std::lock_guard lock(mutex_);
    ReadResponse resp;
    resp.read_id = next_read_id_++;
    auto fail = [&](std::string message) {
        resp.kind = ResponseKind::Error;
        resp.error = std::move(message);
        return resp;
    };

    const auto& params = manifest_.params;
    if (req.stripe >= manifest_.stripe_count() || req.chunk >= params.width()) {
        return fail("unknown chunk " + std::to_string(req.stripe) + ":" + std::to_string(req.chunk));
    }
    const std::uint64_t offset = req.offset;
    const std::uint64_t length = req.length == 0 ? params.chunk_size - std::min<std::uint64_t>(offset, params.chunk_size)
                                                 : req.length;
    if (length == 0 || offset + length > params.chunk_size || offset % params.packet_size != 0 ||
        length % params.packet_size != 0) {
        return fail("read range must be nonempty, packet aligned and inside the chunk");
    }

    const auto& row = manifest_.placement[req.stripe];
    const bool available = chunk_available(manifest_, req.stripe, req.chunk);
    if (req.mode == ReadMode::Normal || (req.mode == ReadMode::Auto && available)) {
        if (!available) {
            return fail("chunk " + std::to_string(req.stripe) + ":" + std::to_string(req.chunk) + " is unavailable");
        }
        resp.kind = ResponseKind::Normal;
        resp.host = row[req.chunk];
        resp.host_address = manifest_.helper(resp.host).address.to_string();
        plan::record_request(load_, resp.host, length, now);
        return resp;
    }

    std::vector<plan::Agent> survivors;
    for (std::uint32_t c = 0; c < params.width(); ++c) {
        if (c != req.chunk && chunk_available(manifest_, req.stripe, c)) {
            survivors.push_back({row[c], c});
        }
    }
    if (survivors.size() < params.k) {
        return fail("unrecoverable");
    }

    plan::PlanOptions opts;
    opts.read_offset = offset;
    opts.read_length = length;
    if (req.source_limit != 0) {
        opts.source_limit = req.source_limit;
    }
    std::string starter_address;
    if (plan::has_external_starter(req.strategy)) {
        if (req.starter == StarterMode::Self) {
            if (req.reply_address.empty()) {
                return fail("starter mode self needs a reply address");
            }
            opts.starter = kRequestorNode;
            starter_address = req.reply_address;
        } else {
            // Light-loaded storage nodes that hold no chunk of this stripe.
            const std::set<NodeId> hosting(row.begin(), row.end());
            std::vector<NodeId> candidates;
            for (const auto& [id, h] : manifest_.helpers) {
                if (!hosting.contains(id)) {
                    candidates.push_back(id);
                }
            }
            if (candidates.empty()) {
                for (const auto& [id, h] : manifest_.helpers) {
                    if (std::none_of(survivors.begin(), survivors.end(),
                                     [id = id](const plan::Agent& a) { return a.node == id; })) {
                        candidates.push_back(id);
                    }
                }
            }
            if (candidates.empty()) {
                return fail("no helper left to act as starter");
            }
            opts.starter = selector_.select(load_, candidates, now);
            starter_address = manifest_.helper(*opts.starter).address.to_string();
        }
    }

    plan::ReconstructionPlan p;
    try {
        p = plan::build_plan(params, generator_, req.chunk, survivors, req.strategy, load_, now, rng_, opts);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (!plan::has_external_starter(req.strategy)) {
        starter_address = manifest_.helper(p.starter).address.to_string();
    }

    resp.kind = ResponseKind::Degraded;
    resp.stripe = req.stripe;
    resp.starter = p.starter;
    resp.starter_address = starter_address;
    auto& cmd = resp.command;
    cmd.start_position = offset;
    cmd.read_length = length;
    cmd.k = static_cast<std::uint32_t>(params.k);
    cmd.m = static_cast<std::uint32_t>(params.m);
    cmd.agent_count = static_cast<std::uint32_t>(p.agents.size());
    for (const auto& a : p.agents) {
        cmd.agent_locations.push_back(manifest_.helper(a.node).address.to_string());
        cmd.chunk_indices.push_back(static_cast<std::uint32_t>(a.chunk));
    }
    cmd.lost_chunk_index = req.chunk;
    cmd.reconstruction_method = req.strategy;
    cmd.packet_size = params.packet_size;

    // Each agent moves about k/q of the range; the starter takes all of it.
    const auto share = length * params.k / std::max<std::size_t>(p.q, 1);
    for (const auto& a : p.agents) {
        plan::record_request(load_, a.node, share, now);
    }
    if (p.starter != kRequestorNode) {
        plan::record_request(load_, p.starter, length, now);
    }
    return resp;
}

void Coordinator::start(Listener listener) {
    if (server_) {
        throw std::logic_error("coordinator already started");
    }
    server_ = std::make_unique<Server>(std::move(listener), [this](Socket& s) { handle_connection(s); });
}

void Coordinator::stop() { server_.reset(); }

Address Coordinator::address() const {
    if (!server_) {
        throw std::logic_error("coordinator not started");
    }
    return server_->server.address();
}

void Coordinator::handle_connection(Socket& socket) {
    FrameReader reader(socket);
    try {
        while (auto frame = reader.next()) {
            if (frame->type != MessageType::ReadReq) {
                throw WireError("unexpected " + std::string(to_string(frame->type)) + " frame");
            }
            const auto req = decode_read_request(frame->payload);
            const auto resp = handle_read_request(req, clock());
            if (resp.kind == ResponseKind::Error) {
                spdlog::warn("read {}:{} refused: {}", req.stripe, req.chunk, resp.error);
            } else {
                spdlog::debug("read {} for {}:{} -> {}", resp.read_id, req.stripe, req.chunk,
                              resp.kind == ResponseKind::Normal ? "normal" : "degraded");
            }
            write_frame(socket, MessageType::ReadResp, encode(resp));
        }
    } catch (const WireError& e) {
        spdlog::warn("coordinator: dropping connection: {}", e.what());
    } catch (const SocketError& e) {
        spdlog::debug("coordinator: connection closed: {}", e.what());
    }
}

} // namespace apls::cluster
