#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Length-prefixed frames: 4-byte little-endian payload length, 1-byte type,
// payload. The length does not include the 5-byte header.
namespace apls::cluster {

enum class MessageType : std::uint8_t {
    ReadReq = 1,
    ReadResp = 2,
    SubreqCmd = 3,
    Packet = 4,
    Done = 5,
    Error = 6,
};

inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::size_t kMaxPayload = std::size_t{128} << 20;

bool is_known_type(std::uint8_t type) noexcept;
std::string_view to_string(MessageType type) noexcept;

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frame {
    MessageType type = MessageType::Error;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

std::vector<std::uint8_t> encode_frame(const Frame& frame);
void append_frame(std::vector<std::uint8_t>& out, MessageType type, std::span<const std::uint8_t> payload);

/// Incremental decoder over an arbitrary byte stream. next() yields whole
/// frames in order and std::nullopt while the buffered prefix is incomplete.
/// A header with an unknown type or an oversized length throws WireError;
/// the decoder is unusable afterwards.
class FrameDecoder {
public:
    explicit FrameDecoder(std::size_t max_payload = kMaxPayload) : max_payload_(max_payload) {}

    void feed(std::span<const std::uint8_t> bytes);
    std::optional<Frame> next();

    std::size_t buffered() const noexcept { return buffer_.size() - start_; }

private:
    std::size_t max_payload_;
    std::vector<std::uint8_t> buffer_;
    std::size_t start_ = 0;
};

/// Little-endian field writer for frame payloads.
class Writer {
public:
    Writer& u8(std::uint8_t v);
    Writer& u32(std::uint32_t v);
    Writer& u64(std::uint64_t v);
    Writer& f64(double v);
    Writer& str(std::string_view s); // u32 length + bytes
    Writer& bytes(std::span<const std::uint8_t> b); // u32 length + bytes
    Writer& raw(std::span<const std::uint8_t> b);

    std::vector<std::uint8_t>& data() noexcept { return out_; }
    std::vector<std::uint8_t> take() noexcept { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

/// Reader matching Writer. Throws WireError on truncation.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str();
    std::vector<std::uint8_t> bytes();
    std::span<const std::uint8_t> rest();

    bool done() const noexcept { return pos_ == data_.size(); }
    /// Throws WireError when bytes remain.
    void expect_done() const;

private:
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace apls::cluster
