#include "linesim/net/tcp.hpp"
#include "linesim/error.hpp"
#include "linesim/modbus/frame.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace linesim::net {

namespace {

sockaddr_in resolve(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    const std::string host = ep.host.empty() || ep.host == "localhost" ? "127.0.0.1" : ep.host;
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw Error(ErrorKind::IoError, "cannot resolve " + host);
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

bool wait_fd(int fd, short events, std::chrono::milliseconds timeout) {
    pollfd p{fd, events, 0};
    int rc;
    do {
        rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    } while (rc < 0 && errno == EINTR);
    return rc > 0;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
    Endpoint ep;
    const auto colon = text.rfind(':');
    const std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
    if (colon != std::string::npos) ep.host = text.substr(0, colon);
    try {
        const long p = std::stol(port);
        if (p < 0 || p > 65535) throw std::out_of_range("port");
        ep.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        throw Error(ErrorKind::ConfigInvalid, "bad endpoint '" + text + "'");
    }
    return ep;
}

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void Socket::shutdown() noexcept {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket Socket::listen(const Endpoint& ep, int backlog) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw Error(ErrorKind::BindFailed, ep.str() + ": " + std::strerror(errno));
    int one = 1;
    ::setsockopt(s.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = resolve(ep);
    if (::bind(s.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(s.fd_, backlog) != 0) {
        throw Error(ErrorKind::BindFailed, ep.str() + ": " + std::strerror(errno));
    }
    return s;
}

Socket Socket::connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw Error(ErrorKind::IoError, std::strerror(errno));
    sockaddr_in addr = resolve(ep);
    const int flags = ::fcntl(s.fd_, F_GETFL, 0);
    ::fcntl(s.fd_, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc != 0 && errno != EINPROGRESS) throw Error(ErrorKind::IoError, ep.str() + ": " + std::strerror(errno));
    if (rc != 0) {
        if (!wait_fd(s.fd_, POLLOUT, timeout)) throw Error(ErrorKind::IoError, ep.str() + ": connect timeout");
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd_, SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) throw Error(ErrorKind::IoError, ep.str() + ": " + std::strerror(err));
    }
    ::fcntl(s.fd_, F_SETFL, flags);
    int one = 1;
    ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

std::uint16_t Socket::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

bool Socket::send_all(const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const auto w = ::send(fd_, data, n, MSG_NOSIGNAL);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) return false;
        data += w;
        n -= static_cast<std::size_t>(w);
    }
    return true;
}

long Socket::recv_some(std::uint8_t* buf, std::size_t cap, std::chrono::milliseconds timeout) {
    if (!wait_fd(fd_, POLLIN, timeout)) return -1;
    long r;
    do {
        r = ::recv(fd_, buf, cap, 0);
    } while (r < 0 && errno == EINTR);
    return r < 0 ? -2 : r;
}

Socket Socket::accept(std::chrono::milliseconds timeout) {
    if (!wait_fd(fd_, POLLIN, timeout)) return Socket();
    Socket c(::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC));
    if (c.valid()) {
        int one = 1;
        ::setsockopt(c.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return c;
}

FrameGateway::FrameGateway(const Endpoint& ep) : listener_(Socket::listen(ep)) {
    port_ = listener_.local_port();
    acceptor_ = std::thread([this] { accept_loop(); });
}

FrameGateway::~FrameGateway() { stop(); }

void FrameGateway::stop() {
    if (stop_.exchange(true)) return;
    {
        std::lock_guard lk(mu_);
        for (auto& [id, s] : conns_) s->shutdown();
    }
    if (acceptor_.joinable()) acceptor_.join();
    for (auto& t : readers_) {
        if (t.joinable()) t.join();
    }
    listener_.close();
}

void FrameGateway::accept_loop() {
    using namespace std::chrono_literals;
    while (!stop_) {
        auto c = listener_.accept(50ms);
        if (!c.valid()) continue;
        auto sock = std::make_shared<Socket>(std::move(c));
        std::uint32_t id;
        {
            std::lock_guard lk(mu_);
            id = next_conn_++;
            conns_[id] = sock;
        }
        readers_.emplace_back([this, id, sock] { reader(id, sock); });
    }
}

void FrameGateway::reader(std::uint32_t conn, std::shared_ptr<Socket> sock) {
    using namespace std::chrono_literals;
    modbus::StreamDecoder dec;
    std::uint8_t buf[4096];
    while (!stop_) {
        const long n = sock->recv_some(buf, sizeof buf, 50ms);
        if (n == -1) continue;
        if (n <= 0) break;
        dec.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
        while (auto f = dec.next()) {
            if (f->status == modbus::FrameStatus::BadProtocolId) continue;
            std::lock_guard lk(mu_);
            inbox_.push_back({conn, f->raw});
            ++received_;
        }
    }
    std::lock_guard lk(mu_);
    conns_.erase(conn);
}

std::vector<FrameGateway::Inbound> FrameGateway::drain() {
    std::lock_guard lk(mu_);
    std::vector<Inbound> out;
    out.swap(inbox_);
    return out;
}

void FrameGateway::reply(std::uint32_t conn, const std::vector<std::uint8_t>& bytes) {
    std::shared_ptr<Socket> s;
    {
        std::lock_guard lk(mu_);
        auto it = conns_.find(conn);
        if (it == conns_.end()) return;
        s = it->second;
    }
    s->send_all(bytes.data(), bytes.size());
}

}  // namespace linesim::net
