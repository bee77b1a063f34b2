// SPDX-License-Identifier: Apache-2.0
#pragma once

// Thin RAII wrappers over blocking POSIX TCP sockets.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace fusecast::net {

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();
    /// Unblocks any thread sitting in read/accept on this socket.
    void shutdown();

private:
    int fd_ = -1;
};

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(Socket s);

    /// Throws Error(ConnectFailure).
    static TcpStream connect(const std::string& host, std::uint16_t port,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

    /// False on EOF or error.
    bool read_exact(std::span<std::uint8_t> out);
    /// Reads up to a newline (stripped). nullopt on EOF/error.
    std::optional<std::string> read_line(std::size_t max_len = 1 << 20);
    bool write_all(std::span<const std::uint8_t> data);
    bool write_all(std::string_view text);
    void set_read_timeout(std::chrono::milliseconds timeout);
    void set_no_delay();

    void shutdown() { sock_.shutdown(); }
    bool valid() const { return sock_.valid(); }
    int fd() const { return sock_.fd(); }

private:
    Socket sock_;
    std::string line_buf_;
};

class TcpListener {
public:
    /// Binds host:port (port 0 picks an ephemeral port). Throws Error(BindFailure).
    static TcpListener bind(const std::string& host, std::uint16_t port);

    std::uint16_t port() const { return port_; }
    /// nullopt once the listener is shut down.
    std::optional<TcpStream> accept();
    void shutdown() { sock_.shutdown(); }

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

/// "host:port" or ":port" / "port" (host defaults to 127.0.0.1).
std::pair<std::string, std::uint16_t> parse_address(const std::string& text, const std::string& default_host = "127.0.0.1");

} // namespace fusecast::net
