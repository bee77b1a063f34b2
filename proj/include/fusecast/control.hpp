// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "fusecast/clock.hpp"
#include "fusecast/compositor.hpp"
#include "fusecast/error.hpp"
#include "fusecast/net.hpp"

namespace fusecast {

enum class CommandKind { select, layout, toggle_visibility };

std::string_view to_string(CommandKind kind);

struct ControlCommand {
    CommandKind kind = CommandKind::select;
    ChannelId channel;      // select, toggle_visibility, layout focus
    LayoutMode mode = LayoutMode::grid;
    Micros client_input_ts = 0;
    std::string id;
};

struct ControlAck {
    std::string id;
    std::uint64_t applied_frame_seq = 0;
    Micros server_apply_ts = 0;
};

/// {"type":"select","channel":2,"client_ts_us":...,"id":"c-17"} and friends.
/// Throws Error(MalformedCommand) or Error(UnknownChannel) for an out-of-range channel.
ControlCommand parse_command(const nlohmann::json& j);
nlohmann::json command_to_json(const ControlCommand& cmd);
nlohmann::json ack_to_json(const ControlAck& ack);
nlohmann::json error_to_json(const std::string& id, ErrorCode code);

/// Applies interaction commands to the compositor. Commands are staged in arrival order under
/// one lock; each ack names the first fused frame that reflects the command.
class ControlPlane {
public:
    struct Session {
        bool authenticated = false;
        std::set<std::string> seen_ids;
    };

    struct LogEntry {
        std::string id;
        CommandKind kind;
        std::uint64_t applied_frame_seq;
        Micros server_apply_ts;
    };

    ControlPlane(Compositor& compositor, StreamClock clock, std::optional<std::string> token = std::nullopt);

    /// Throws Error(UnknownChannel) / Error(InvalidLayout).
    ControlAck handle_command(const ControlCommand& cmd);

    /// One NDJSON request line in, one response line out (hello, ping and the command types).
    std::string handle_message(Session& session, std::string_view line);

    bool requires_token() const { return token_.has_value(); }
    std::vector<LogEntry> log() const;

private:
    Compositor& compositor_;
    StreamClock clock_;
    std::optional<std::string> token_;
    mutable std::mutex mutex_;
    std::vector<LogEntry> log_;
};

/// Client-clock response time: arrival of the first frame reflecting the command minus input
/// time. Throws Error(AckTimeout) when no reflecting frame arrived within `timeout`.
Micros measure_response(const ControlCommand& sent, const ControlAck& ack, std::optional<Micros> reflecting_arrival,
                        Micros timeout_us = 5'000'000);

/// NDJSON control listener; one thread per connection.
class ControlServer {
public:
    ControlServer(ControlPlane& plane, const std::string& host, std::uint16_t port);
    ~ControlServer();
    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    std::uint16_t port() const { return listener_.port(); }
    void stop();

private:
    struct Conn {
        net::TcpStream stream;
        std::thread thread;
        std::atomic<bool> done{false};
    };
    void accept_loop();

    ControlPlane& plane_;
    net::TcpListener listener_;
    std::atomic<bool> stopping_{false};
    std::mutex mutex_;
    std::vector<std::unique_ptr<Conn>> conns_;
    std::thread accept_thread_;
};

/// Blocking request/response client for the control channel.
class ControlClient {
public:
    static ControlClient connect(const std::string& host, std::uint16_t port);

    /// Sends one JSON message and returns the reply. Throws Error(AckTimeout) if none arrives.
    nlohmann::json request(const nlohmann::json& message, std::chrono::milliseconds timeout = std::chrono::seconds(5));

private:
    explicit ControlClient(net::TcpStream s) : stream_(std::move(s)) {}
    net::TcpStream stream_;
};

} // namespace fusecast
