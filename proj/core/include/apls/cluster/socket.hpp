#pragma once

#include "apls/cluster/wire.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

// Blocking IPv4 TCP sockets with RAII ownership.
namespace apls::cluster {

class TokenBucket;

class SocketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Address {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const;
    bool operator==(const Address&) const = default;
};

/// "host:port". Throws std::invalid_argument.
Address parse_address(std::string_view text);

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    /// Retries refused connections until `timeout` elapses.
    static Socket connect(const Address& to, std::chrono::milliseconds timeout = std::chrono::seconds(5));

    bool valid() const noexcept { return fd_ >= 0; }
    int fd() const noexcept { return fd_; }

    void send_all(std::span<const std::uint8_t> bytes);
    /// Returns 0 on orderly shutdown by the peer.
    std::size_t recv_some(std::span<std::uint8_t> buffer);

    /// Waits up to `timeout` for readable data. False on timeout.
    bool wait_readable(std::chrono::milliseconds timeout) const;

    void shutdown_write() noexcept;
    void shutdown_both() noexcept;
    void close() noexcept;

private:
    int fd_ = -1;
};

class Listener {
public:
    Listener() = default;
    /// Port 0 binds an ephemeral port; see port().
    static Listener bind(const std::string& host, std::uint16_t port);

    std::uint16_t port() const noexcept { return port_; }
    Address address() const { return {host_, port_}; }

    /// Waits up to `timeout` for a connection.
    std::optional<Socket> accept(std::chrono::milliseconds timeout);

    void close() noexcept { socket_.close(); }
    bool valid() const noexcept { return socket_.valid(); }

private:
    Socket socket_;
    std::string host_;
    std::uint16_t port_ = 0;
};

/// Writes one frame; when `gate` is set its tokens are taken first.
void write_frame(Socket& socket, MessageType type, std::span<const std::uint8_t> payload, TokenBucket* gate = nullptr);

/// Reads frames from a socket. Incoming bytes pass through `gate` when set.
class FrameReader {
public:
    explicit FrameReader(Socket& socket, TokenBucket* gate = nullptr) : socket_(socket), gate_(gate) {}

    /// Next whole frame, or std::nullopt at a clean end of stream. Throws
    /// WireError on malformed input or a stream cut mid-frame, and
    /// SocketError on timeout.
    std::optional<Frame> next(std::optional<std::chrono::milliseconds> timeout = std::nullopt);

private:
    Socket& socket_;
    TokenBucket* gate_;
    FrameDecoder decoder_;
    std::vector<std::uint8_t> chunk_ = std::vector<std::uint8_t>(256 * 1024);
};

} // namespace apls::cluster
