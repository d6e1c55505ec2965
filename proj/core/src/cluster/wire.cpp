#include "apls/cluster/wire.hpp"

#include <bit>
#include <cstring>

namespace apls::cluster {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint64_t get_le(const std::uint8_t* p, std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v |= std::uint64_t{p[i]} << (8 * i);
    }
    return v;
}

} // namespace

bool is_known_type(std::uint8_t type) noexcept {
    return type >= static_cast<std::uint8_t>(MessageType::ReadReq) && type <= static_cast<std::uint8_t>(MessageType::Error);
}

std::string_view to_string(MessageType type) noexcept {
    switch (type) {
    case MessageType::ReadReq:
        return "READ_REQ";
    case MessageType::ReadResp:
        return "READ_RESP";
    case MessageType::SubreqCmd:
        return "SUBREQ_CMD";
    case MessageType::Packet:
        return "PACKET";
    case MessageType::Done:
        return "DONE";
    case MessageType::Error:
        return "ERROR";
    }
    return "UNKNOWN";
}

void append_frame(std::vector<std::uint8_t>& out, MessageType type, std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayload) {
        throw WireError("frame payload too large");
    }
    put_le(out, payload.size(), 4);
    out.push_back(static_cast<std::uint8_t>(type));
    out.insert(out.end(), payload.begin(), payload.end());
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + frame.payload.size());
    append_frame(out, frame.type, frame.payload);
    return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
    if (start_ > 0 && start_ >= buffer_.size() / 2) {
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(start_));
        start_ = 0;
    }
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
    if (buffered() < kHeaderSize) {
        return std::nullopt;
    }
    const std::uint8_t* head = buffer_.data() + start_;
    const auto length = static_cast<std::size_t>(get_le(head, 4));
    const std::uint8_t type = head[4];
    if (!is_known_type(type)) {
        throw WireError("unknown frame type " + std::to_string(type));
    }
    if (length > max_payload_) {
        throw WireError("frame length " + std::to_string(length) + " exceeds limit");
    }
    if (buffered() < kHeaderSize + length) {
        return std::nullopt;
    }
    Frame f;
    f.type = static_cast<MessageType>(type);
    f.payload.assign(head + kHeaderSize, head + kHeaderSize + length);
    start_ += kHeaderSize + length;
    if (start_ == buffer_.size()) {
        buffer_.clear();
        start_ = 0;
    }
    return f;
}

Writer& Writer::u8(std::uint8_t v) {
    out_.push_back(v);
    return *this;
}

Writer& Writer::u32(std::uint32_t v) {
    put_le(out_, v, 4);
    return *this;
}

Writer& Writer::u64(std::uint64_t v) {
    put_le(out_, v, 8);
    return *this;
}

Writer& Writer::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

Writer& Writer::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
    return *this;
}

Writer& Writer::bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    return raw(b);
}

Writer& Writer::raw(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
    return *this;
}

std::span<const std::uint8_t> Reader::take(std::size_t n) {
    if (data_.size() - pos_ < n) {
        throw WireError("truncated message");
    }
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t Reader::u8() { return take(1)[0]; }
std::uint32_t Reader::u32() { return static_cast<std::uint32_t>(get_le(take(4).data(), 4)); }
std::uint64_t Reader::u64() { return get_le(take(8).data(), 8); }
double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string Reader::str() {
    const auto n = u32();
    auto s = take(n);
    return {s.begin(), s.end()};
}

std::vector<std::uint8_t> Reader::bytes() {
    const auto n = u32();
    auto s = take(n);
    return {s.begin(), s.end()};
}

std::span<const std::uint8_t> Reader::rest() { return take(data_.size() - pos_); }

void Reader::expect_done() const {
    if (!done()) {
        throw WireError("trailing bytes in message");
    }
}

} // namespace apls::cluster
