#include "apls/cluster/socket.hpp"

#include "apls/cluster/throttle.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <thread>

namespace apls::cluster {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
    throw SocketError(what + ": " + std::strerror(errno));
}

sockaddr_in resolve(const Address& a) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(a.port);
    const std::string host = a.host.empty() || a.host == "localhost" ? "127.0.0.1" : a.host;
    if (::inet_pton(AF_INET, host.c_str(), &sa.sin_addr) == 1) {
        return sa;
    }
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw SocketError("cannot resolve host " + host);
    }
    sa.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return sa;
}

void set_nodelay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

} // namespace

std::string Address::to_string() const { return host + ":" + std::to_string(port); }

Address parse_address(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw std::invalid_argument("address must be host:port, got '" + std::string(text) + "'");
    }
    unsigned port = 0;
    const auto digits = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535) {
        throw std::invalid_argument("bad port in address '" + std::string(text) + "'");
    }
    return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

Socket Socket::connect(const Address& to, std::chrono::milliseconds timeout) {
    const auto sa = resolve(to);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
        if (!s.valid()) {
            throw_errno("socket");
        }
        if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) == 0) {
            set_nodelay(s.fd());
            return s;
        }
        const int err = errno;
        if ((err != ECONNREFUSED && err != EAGAIN && err != EINTR) || std::chrono::steady_clock::now() >= deadline) {
            errno = err;
            throw_errno("connect to " + to.to_string());
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

void Socket::send_all(std::span<const std::uint8_t> bytes) {
    while (!bytes.empty()) {
        const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw_errno("send");
        }
        bytes = bytes.subspan(static_cast<std::size_t>(n));
    }
}

std::size_t Socket::recv_some(std::span<std::uint8_t> buffer) {
    while (true) {
        const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
        if (n >= 0) {
            return static_cast<std::size_t>(n);
        }
        if (errno != EINTR) {
            throw_errno("recv");
        }
    }
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) const {
    pollfd p{fd_, POLLIN, 0};
    while (true) {
        const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (r >= 0) {
            return r > 0;
        }
        if (errno != EINTR) {
            throw_errno("poll");
        }
    }
}

void Socket::shutdown_write() noexcept {
    if (valid()) {
        ::shutdown(fd_, SHUT_WR);
    }
}

void Socket::shutdown_both() noexcept {
    if (valid()) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Listener Listener::bind(const std::string& host, std::uint16_t port) {
    Listener l;
    l.socket_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!l.socket_.valid()) {
        throw_errno("socket");
    }
    int one = 1;
    ::setsockopt(l.socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto sa = resolve({host, port});
    if (::bind(l.socket_.fd(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0) {
        throw_errno("bind " + host + ":" + std::to_string(port));
    }
    if (::listen(l.socket_.fd(), 128) != 0) {
        throw_errno("listen");
    }
    socklen_t len = sizeof sa;
    ::getsockname(l.socket_.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
    l.host_ = host;
    l.port_ = ntohs(sa.sin_port);
    return l;
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds timeout) {
    if (!socket_.valid() || !socket_.wait_readable(timeout)) {
        return std::nullopt;
    }
    const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
        if (errno == EAGAIN || errno == EINTR || errno == ECONNABORTED) {
            return std::nullopt;
        }
        throw_errno("accept");
    }
    set_nodelay(fd);
    return Socket(fd);
}

void write_frame(Socket& socket, MessageType type, std::span<const std::uint8_t> payload, TokenBucket* gate) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + payload.size());
    append_frame(out, type, payload);
    if (gate == nullptr) {
        socket.send_all(out);
        return;
    }
    // Pace the write in burst-sized pieces so a large frame does not leave
    // as one unthrottled spike.
    std::span<const std::uint8_t> rest(out);
    while (!rest.empty()) {
        const std::size_t n = std::min(rest.size(), gate->burst());
        gate->acquire(n);
        socket.send_all(rest.first(n));
        rest = rest.subspan(n);
    }
}

std::optional<Frame> FrameReader::next(std::optional<std::chrono::milliseconds> timeout) {
    while (true) {
        if (auto f = decoder_.next()) {
            return f;
        }
        if (timeout && !socket_.wait_readable(*timeout)) {
            throw SocketError("timed out waiting for data");
        }
        const std::size_t n = socket_.recv_some(chunk_);
        if (n == 0) {
            if (decoder_.buffered() != 0) {
                throw WireError("stream ended inside a frame");
            }
            return std::nullopt;
        }
        if (gate_ != nullptr) {
            gate_->acquire(n);
        }
        decoder_.feed(std::span(chunk_).first(n));
    }
}

} // namespace apls::cluster
