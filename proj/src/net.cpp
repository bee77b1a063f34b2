// SPDX-License-Identifier: Apache-2.0
#include "fusecast/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "fusecast/error.hpp"

namespace fusecast::net {

Socket& Socket::operator=(Socket&& o) noexcept
{
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void Socket::shutdown()
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

TcpStream::TcpStream(Socket s) : sock_(std::move(s)) {}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr) {
        throw Error(ErrorCode::ConnectFailure, "cannot resolve " + host);
    }
    Socket s(::socket(res->ai_family, SOCK_STREAM | SOCK_CLOEXEC, 0));
    int rc = ::connect(s.fd(), res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    (void)timeout; // loopback and LAN connects either succeed or are refused promptly
    if (rc != 0) {
        throw Error(ErrorCode::ConnectFailure,
                    "connect " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
    }
    TcpStream stream(std::move(s));
    stream.set_no_delay();
    return stream;
}

bool TcpStream::read_exact(std::span<std::uint8_t> out)
{
    std::size_t done = 0;
    // Bytes already pulled in by read_line come first.
    if (!line_buf_.empty()) {
        std::size_t n = std::min(out.size(), line_buf_.size());
        std::memcpy(out.data(), line_buf_.data(), n);
        line_buf_.erase(0, n);
        done = n;
    }
    while (done < out.size()) {
        ssize_t n = ::recv(sock_.fd(), out.data() + done, out.size() - done, 0);
        if (n > 0) {
            done += static_cast<std::size_t>(n);
        } else if (n < 0 && errno == EINTR) {
            continue;
        } else {
            return false;
        }
    }
    return true;
}

std::optional<std::string> TcpStream::read_line(std::size_t max_len)
{
    for (;;) {
        auto nl = line_buf_.find('\n');
        if (nl != std::string::npos) {
            std::string line = line_buf_.substr(0, nl);
            line_buf_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            return line;
        }
        if (line_buf_.size() > max_len) {
            return std::nullopt;
        }
        char buf[4096];
        ssize_t n = ::recv(sock_.fd(), buf, sizeof buf, 0);
        if (n > 0) {
            line_buf_.append(buf, static_cast<std::size_t>(n));
        } else if (n < 0 && errno == EINTR) {
            continue;
        } else {
            return std::nullopt;
        }
    }
}

bool TcpStream::write_all(std::span<const std::uint8_t> data)
{
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::send(sock_.fd(), data.data() + done, data.size() - done, MSG_NOSIGNAL);
        if (n > 0) {
            done += static_cast<std::size_t>(n);
        } else if (n < 0 && errno == EINTR) {
            continue;
        } else {
            return false;
        }
    }
    return true;
}

bool TcpStream::write_all(std::string_view text)
{
    return write_all(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void TcpStream::set_read_timeout(std::chrono::milliseconds timeout)
{
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(sock_.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

void TcpStream::set_no_delay()
{
    int one = 1;
    ::setsockopt(sock_.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port)
{
    TcpListener l;
    l.sock_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    int one = 1;
    ::setsockopt(l.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.empty() ? "0.0.0.0" : host.c_str(), &addr.sin_addr) != 1) {
        throw Error(ErrorCode::BindFailure, "bad listen address " + host);
    }
    if (::bind(l.sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(l.sock_.fd(), 64) != 0) {
        throw Error(ErrorCode::BindFailure, host + ":" + std::to_string(port) + ": " + std::strerror(errno));
    }
    socklen_t len = sizeof addr;
    ::getsockname(l.sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    l.port_ = ntohs(addr.sin_port);
    return l;
}

std::optional<TcpStream> TcpListener::accept()
{
    for (;;) {
        int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd >= 0) {
            TcpStream s{Socket(fd)};
            s.set_no_delay();
            return s;
        }
        if (errno == EINTR || errno == ECONNABORTED) {
            continue;
        }
        return std::nullopt;
    }
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& text, const std::string& default_host)
{
    auto colon = text.rfind(':');
    std::string host = colon == std::string::npos ? default_host : text.substr(0, colon);
    std::string port = colon == std::string::npos ? text : text.substr(colon + 1);
    if (host.empty()) {
        host = default_host;
    }
    try {
        std::size_t used = 0;
        int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) {
            throw std::out_of_range(port);
        }
        return {host, static_cast<std::uint16_t>(p)};
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedCommand, "bad address '" + text + "'");
    }
}

} // namespace fusecast::net
