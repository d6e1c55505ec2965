#pragma once

#include "apls/cluster/manifest.hpp"
#include "apls/cluster/wire.hpp"
#include "apls/plan.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Payload encodings for each frame type. All integers little-endian; strings
// and byte blobs carry a u32 length prefix.
namespace apls::cluster {

enum class ReadMode : std::uint8_t {
    Auto = 0,     // degraded only when the chunk is unavailable
    Normal = 1,   // fail if the chunk is unavailable
    Degraded = 2, // reconstruct even if the chunk is available (hot spot)
};

enum class StarterMode : std::uint8_t {
    Self = 0, // the requestor receives the reconstructed packets itself
    Auto = 1, // coordinator picks a light-loaded helper, which relays
};

/// Sent to the coordinator to locate a chunk, and to a helper to stream a
/// chunk it hosts (normal read).
struct ReadRequest {
    std::uint64_t read_id = 0; // assigned by the coordinator; 0 in client requests
    std::uint32_t stripe = 0;
    std::uint32_t chunk = 0;
    plan::Strategy strategy = plan::Strategy::APLSPipelined;
    ReadMode mode = ReadMode::Auto;
    StarterMode starter = StarterMode::Self;
    std::string reply_address; // requestor's listening address
    std::uint32_t source_limit = 0; // 0: no cap on q
    std::uint64_t offset = 0;
    std::uint64_t length = 0; // 0: to the end of the chunk

    bool operator==(const ReadRequest&) const = default;
};

enum class ResponseKind : std::uint8_t { Normal = 0, Degraded = 1, Error = 2 };

struct ReadResponse {
    ResponseKind kind = ResponseKind::Error;
    std::uint64_t read_id = 0;
    std::string error;
    // Normal: the hosting helper.
    NodeId host = 0;
    std::string host_address;
    // Degraded.
    std::uint32_t stripe = 0;
    plan::SubRequestCommand command;
    NodeId starter = 0;
    std::string starter_address;

    bool operator==(const ReadResponse&) const = default;
};

/// SUBREQ_CMD payload: routing envelope followed by the command fields in
/// their canonical order.
struct SubRequest {
    std::uint64_t read_id = 0;
    std::uint32_t stripe = 0;
    NodeId starter = 0;
    std::string starter_address;
    std::string client_address;
    plan::SubRequestCommand command;

    bool operator==(const SubRequest&) const = default;
};

/// PACKET payload. `step` is the flow step the frame carries out; list,
/// packet and stage repeat the step's labels.
struct PacketHeader {
    std::uint64_t read_id = 0;
    std::uint32_t step = 0;
    std::uint32_t list = 0;
    std::uint32_t packet = 0;
    std::uint32_t stage = 0;

    bool operator==(const PacketHeader&) const = default;
};

inline constexpr std::size_t kPacketHeaderSize = 24;

struct DoneMessage {
    std::uint64_t read_id = 0;
    NodeId node = 0;
    std::uint64_t ingress = 0; // payload bytes received for this read
    std::uint64_t egress = 0;  // payload bytes sent for this read

    bool operator==(const DoneMessage&) const = default;
};

struct ErrorMessage {
    std::uint64_t read_id = 0;
    NodeId node = 0;
    std::string message;

    bool operator==(const ErrorMessage&) const = default;
};

std::vector<std::uint8_t> encode(const plan::SubRequestCommand& cmd);
plan::SubRequestCommand decode_command(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode(const ReadRequest& m);
std::vector<std::uint8_t> encode(const ReadResponse& m);
std::vector<std::uint8_t> encode(const SubRequest& m);
std::vector<std::uint8_t> encode(const DoneMessage& m);
std::vector<std::uint8_t> encode(const ErrorMessage& m);

/// Header followed by the packet bytes.
std::vector<std::uint8_t> encode_packet(const PacketHeader& h, std::span<const std::uint8_t> data);

// Decoders throw WireError on truncated, trailing or out-of-range content.
ReadRequest decode_read_request(std::span<const std::uint8_t> payload);
ReadResponse decode_read_response(std::span<const std::uint8_t> payload);
SubRequest decode_subrequest(std::span<const std::uint8_t> payload);
DoneMessage decode_done(std::span<const std::uint8_t> payload);
ErrorMessage decode_error(std::span<const std::uint8_t> payload);
/// Returns the header; `data` is set to the bytes after it.
PacketHeader decode_packet(std::span<const std::uint8_t> payload, std::span<const std::uint8_t>& data);

} // namespace apls::cluster
