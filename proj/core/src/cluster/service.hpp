#pragma once

#include "apls/cluster/socket.hpp"

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

namespace apls::cluster::detail {

/// Threads that are reaped once finished and joined on destruction.
class ThreadGroup {
public:
    ~ThreadGroup() { join_all(); }

    void spawn(std::function<void()> fn) {
        std::lock_guard lock(mutex_);
        reap_locked();
        auto done = std::make_shared<std::atomic<bool>>(false);
        threads_.push_back({std::thread([fn = std::move(fn), done] {
                                fn();
                                done->store(true);
                            }),
                            done});
    }

    void join_all() {
        std::list<Entry> all;
        {
            std::lock_guard lock(mutex_);
            all.swap(threads_);
        }
        for (auto& e : all) {
            if (e.thread.joinable()) {
                e.thread.join();
            }
        }
    }

private:
    struct Entry {
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };

    void reap_locked() {
        for (auto it = threads_.begin(); it != threads_.end();) {
            if (it->done->load()) {
                it->thread.join();
                it = threads_.erase(it);
            } else {
                ++it;
            }
        }
    }

    std::mutex mutex_;
    std::list<Entry> threads_;
};

/// Open sockets that stop() must interrupt.
class SocketRegistry {
public:
    void add(Socket* s) {
        std::lock_guard lock(mutex_);
        if (closing_) {
            s->shutdown_both();
        }
        sockets_.insert(s);
    }
    void remove(Socket* s) {
        std::lock_guard lock(mutex_);
        sockets_.erase(s);
    }
    void shutdown_all() {
        std::lock_guard lock(mutex_);
        closing_ = true;
        for (auto* s : sockets_) {
            s->shutdown_both();
        }
    }

private:
    std::mutex mutex_;
    std::set<Socket*> sockets_;
    bool closing_ = false;
};

/// Accept loop plus per-connection threads.
class Server {
public:
    using Handler = std::function<void(Socket&)>;

    Server(Listener listener, Handler handler) : listener_(std::move(listener)), handler_(std::move(handler)) {
        accept_thread_ = std::thread([this] { run(); });
    }

    ~Server() { stop(); }

    void stop() {
        if (stopping_.exchange(true)) {
            return;
        }
        if (accept_thread_.joinable()) {
            accept_thread_.join();
        }
        registry_.shutdown_all();
        connections_.join_all();
        listener_.close();
    }

    Address address() const { return listener_.address(); }
    SocketRegistry& registry() { return registry_; }
    ThreadGroup& threads() { return connections_; }
    bool stopping() const { return stopping_.load(); }

private:
    void run() {
        while (!stopping_.load()) {
            std::optional<Socket> s;
            try {
                s = listener_.accept(std::chrono::milliseconds(100));
            } catch (const SocketError&) {
                continue;
            }
            if (!s) {
                continue;
            }
            auto sock = std::make_shared<Socket>(std::move(*s));
            connections_.spawn([this, sock] {
                registry_.add(sock.get());
                handler_(*sock);
                registry_.remove(sock.get());
            });
        }
    }

    Listener listener_;
    Handler handler_;
    std::atomic<bool> stopping_{false};
    SocketRegistry registry_;
    ThreadGroup connections_;
    std::thread accept_thread_;
};

} // namespace apls::cluster::detail
