// SPDX-License-Identifier: Apache-2.0
#include "fusecast/control.hpp"

namespace fusecast {

std::string_view to_string(CommandKind kind)
{
    switch (kind) {
    case CommandKind::select: return "select";
    case CommandKind::layout: return "layout";
    case CommandKind::toggle_visibility: return "toggle_visibility";
    }
    return "unknown";
}

namespace {

ChannelId channel_field(const nlohmann::json& j)
{
    if (!j.contains("channel") || !j["channel"].is_number_integer()) {
        throw Error(ErrorCode::MalformedCommand, "missing integer 'channel'");
    }
    auto v = j["channel"].get<long long>();
    if (v < 0 || v >= kMaxDevices) {
        throw Error(ErrorCode::UnknownChannel, "channel " + std::to_string(v));
    }
    return ChannelId(static_cast<int>(v));
}

} // namespace

ControlCommand parse_command(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw Error(ErrorCode::MalformedCommand, "message needs a string 'type'");
    }
    ControlCommand cmd;
    if (!j.contains("id") || !j["id"].is_string()) {
        throw Error(ErrorCode::MalformedCommand, "command needs a string 'id'");
    }
    cmd.id = j["id"].get<std::string>();
    if (j.contains("client_ts_us")) {
        if (!j["client_ts_us"].is_number()) {
            throw Error(ErrorCode::MalformedCommand, "'client_ts_us' must be a number");
        }
        cmd.client_input_ts = j["client_ts_us"].get<Micros>();
    }
    const auto type = j["type"].get<std::string>();
    if (type == "select") {
        cmd.kind = CommandKind::select;
        cmd.channel = channel_field(j);
    } else if (type == "toggle_visibility") {
        cmd.kind = CommandKind::toggle_visibility;
        cmd.channel = channel_field(j);
    } else if (type == "layout") {
        cmd.kind = CommandKind::layout;
        auto mode = j.value("mode", std::string{});
        if (mode == "grid") {
            cmd.mode = LayoutMode::grid;
        } else if (mode == "focus") {
            cmd.mode = LayoutMode::focus;
            cmd.channel = channel_field(j);
        } else {
            throw Error(ErrorCode::MalformedCommand, "layout mode must be 'grid' or 'focus'");
        }
    } else {
        throw Error(ErrorCode::MalformedCommand, "unknown command type '" + type + "'");
    }
    return cmd;
}

nlohmann::json command_to_json(const ControlCommand& cmd)
{
    nlohmann::json j{{"type", std::string(to_string(cmd.kind))}, {"id", cmd.id}, {"client_ts_us", cmd.client_input_ts}};
    if (cmd.kind == CommandKind::layout) {
        j["mode"] = cmd.mode == LayoutMode::grid ? "grid" : "focus";
        if (cmd.mode == LayoutMode::focus) {
            j["channel"] = cmd.channel.value();
        }
    } else {
        j["channel"] = cmd.channel.value();
    }
    return j;
}

nlohmann::json ack_to_json(const ControlAck& ack)
{
    return {{"type", "ack"}, {"id", ack.id}, {"applied_frame_seq", ack.applied_frame_seq}, {"server_ts_us", ack.server_apply_ts}};
}

nlohmann::json error_to_json(const std::string& id, ErrorCode code)
{
    return {{"type", "error"}, {"id", id}, {"code", std::string(to_string(code))}};
}

ControlPlane::ControlPlane(Compositor& compositor, StreamClock clock, std::optional<std::string> token)
    : compositor_(compositor), clock_(clock), token_(std::move(token))
{
}

ControlAck ControlPlane::handle_command(const ControlCommand& cmd)
{
    std::lock_guard lock(mutex_);
    std::uint64_t seq = 0;
    switch (cmd.kind) {
    case CommandKind::select:
        seq = compositor_.select(cmd.channel);
        break;
    case CommandKind::toggle_visibility:
        seq = compositor_.toggle_visibility(cmd.channel);
        break;
    case CommandKind::layout:
        try {
            seq = compositor_.apply_layout({cmd.mode, cmd.channel});
        } catch (const Error& e) {
            // A focus on a channel without a board is reported as an unknown channel to clients.
            throw Error(ErrorCode::UnknownChannel, e.what());
        }
        break;
    }
    ControlAck ack{cmd.id, seq, clock_.now()};
    log_.push_back({cmd.id, cmd.kind, seq, ack.server_apply_ts});
    return ack;
}

std::string ControlPlane::handle_message(Session& session, std::string_view line)
{
    nlohmann::json j;
    std::string id;
    try {
        j = nlohmann::json::parse(line);
        if (j.is_object() && j.contains("id") && j["id"].is_string()) {
            id = j["id"].get<std::string>();
        }
        if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
            throw Error(ErrorCode::MalformedCommand, "message needs a string 'type'");
        }
        const auto type = j["type"].get<std::string>();
        if (type == "hello") {
            if (token_ && j.value("token", std::string{}) != *token_) {
                return error_to_json(id, ErrorCode::Unauthorized).dump();
            }
            session.authenticated = true;
            return nlohmann::json{{"type", "welcome"}, {"server_ts_us", clock_.now()}}.dump();
        }
        if (token_ && !session.authenticated) {
            return error_to_json(id, ErrorCode::Unauthorized).dump();
        }
        if (type == "ping") {
            return nlohmann::json{{"type", "pong"}, {"id", id}, {"server_ts_us", clock_.now()}}.dump();
        }
        auto cmd = parse_command(j);
        if (!session.seen_ids.insert(cmd.id).second) {
            throw Error(ErrorCode::MalformedCommand, "duplicate command id " + cmd.id);
        }
        return ack_to_json(handle_command(cmd)).dump();
    } catch (const nlohmann::json::exception&) {
        return error_to_json(id, ErrorCode::MalformedCommand).dump();
    } catch (const Error& e) {
        return error_to_json(id, e.code()).dump();
    }
}

std::vector<ControlPlane::LogEntry> ControlPlane::log() const
{
    std::lock_guard lock(mutex_);
    return log_;
}

Micros measure_response(const ControlCommand& sent, const ControlAck& ack, std::optional<Micros> reflecting_arrival,
                        Micros timeout_us)
{
    if (!reflecting_arrival || *reflecting_arrival - sent.client_input_ts > timeout_us) {
        throw Error(ErrorCode::AckTimeout, "no frame reflecting command " + ack.id);
    }
    return *reflecting_arrival - sent.client_input_ts;
}

ControlServer::ControlServer(ControlPlane& plane, const std::string& host, std::uint16_t port)
    : plane_(plane), listener_(net::TcpListener::bind(host, port))
{
    accept_thread_ = std::thread(&ControlServer::accept_loop, this);
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::stop()
{
    if (stopping_.exchange(true)) {
        return;
    }
    listener_.shutdown();
    if (accept_thread_.joinable()) {
        accept_thread_.join();
    }
    std::lock_guard lock(mutex_);
    for (auto& c : conns_) {
        c->stream.shutdown();
    }
    for (auto& c : conns_) {
        if (c->thread.joinable()) {
            c->thread.join();
        }
    }
    conns_.clear();
}

void ControlServer::accept_loop()
{
    while (!stopping_) {
        auto s = listener_.accept();
        if (!s) {
            break;
        }
        std::lock_guard lock(mutex_);
        std::erase_if(conns_, [](auto& c) {
            if (c->done) {
                c->thread.join();
                return true;
            }
            return false;
        });
        auto conn = std::make_unique<Conn>();
        conn->stream = std::move(*s);
        auto* raw = conn.get();
        raw->thread = std::thread([this, raw] {
            ControlPlane::Session session;
            while (auto line = raw->stream.read_line()) {
                if (line->empty()) {
                    continue;
                }
                if (!raw->stream.write_all(plane_.handle_message(session, *line) + "\n")) {
                    break;
                }
            }
            raw->done = true;
        });
        conns_.push_back(std::move(conn));
    }
}

ControlClient ControlClient::connect(const std::string& host, std::uint16_t port)
{
    return ControlClient(net::TcpStream::connect(host, port));
}

nlohmann::json ControlClient::request(const nlohmann::json& message, std::chrono::milliseconds timeout)
{
    if (!stream_.write_all(message.dump() + "\n")) {
        throw Error(ErrorCode::ConnectFailure, "control connection closed");
    }
    stream_.set_read_timeout(timeout);
    auto line = stream_.read_line();
    if (!line) {
        throw Error(ErrorCode::AckTimeout, "no reply to " + message.value("type", std::string{}));
    }
    try {
        return nlohmann::json::parse(*line);
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::MalformedCommand, "unparseable reply");
    }
}

} // namespace fusecast
