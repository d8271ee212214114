#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace linesim::net {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    static Endpoint parse(const std::string& text);  // "host:port" or "port"
    std::string str() const { return host + ":" + std::to_string(port); }
};

// Owning socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void close() noexcept;
    void shutdown() noexcept;

    // Throws BindFailed.
    static Socket listen(const Endpoint& ep, int backlog = 16);
    // Throws IoError on failure or timeout.
    static Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout);

    std::uint16_t local_port() const;
    bool send_all(const std::uint8_t* data, std::size_t n);
    // Returns bytes read, 0 on orderly close, -1 on timeout, -2 on error.
    long recv_some(std::uint8_t* buf, std::size_t cap, std::chrono::milliseconds timeout);
    // Accept with timeout; invalid socket on timeout.
    Socket accept(std::chrono::milliseconds timeout);

private:
    int fd_ = -1;
};

// Accepts TCP connections on one port and reassembles Modbus frames from
// each. Complete frames are queued for the kernel, which drains them at tick
// boundaries; replies are written back by connection id.
class FrameGateway {
public:
    struct Inbound {
        std::uint32_t conn;
        std::vector<std::uint8_t> bytes;  // one complete MBAP frame
    };

    explicit FrameGateway(const Endpoint& ep);
    ~FrameGateway();
    FrameGateway(const FrameGateway&) = delete;
    FrameGateway& operator=(const FrameGateway&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    std::vector<Inbound> drain();
    void reply(std::uint32_t conn, const std::vector<std::uint8_t>& bytes);
    std::uint64_t received() const noexcept { return received_.load(); }
    void stop();

private:
    void accept_loop();
    void reader(std::uint32_t conn, std::shared_ptr<Socket> sock);

    Socket listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stop_{false};
    std::atomic<std::uint64_t> received_{0};
    std::mutex mu_;
    std::vector<Inbound> inbox_;
    std::map<std::uint32_t, std::shared_ptr<Socket>> conns_;
    std::uint32_t next_conn_ = 1;
    std::thread acceptor_;
    std::vector<std::thread> readers_;
};

}  // namespace linesim::net
