// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "json.hpp"

#include "fusecast/control.hpp"
#include "fusecast/error.hpp"

using namespace fusecast;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

struct Rig {
    Compositor comp{validate_config(paired_scene(4, 320, 240, 30)), {.overlay_height = 24}};
    ControlPlane plane{comp, StreamClock{}};
};

json reply(ControlPlane& plane, ControlPlane::Session& s, const json& msg)
{
    return json::parse(plane.handle_message(s, msg.dump()));
}

} // namespace

TEST_CASE("select is acknowledged for the next capture and shows in it")
{
    Rig r;
    r.comp.capture(0);
    r.comp.capture(33'333);
    ControlPlane::Session s;
    auto ack = reply(r.plane, s, {{"type", "select"}, {"channel", 2}, {"id", "a"}});
    CHECK(ack.at("type") == "ack");
    CHECK(ack.at("applied_frame_seq") == 2);
    auto f = r.comp.capture(66'666);
    CHECK(f->frame_seq == 2);
    auto groups = r.comp.control_groups();
    CHECK(groups[2].selected);
    CHECK_FALSE(groups[0].selected);
}

TEST_CASE("toggling visibility twice restores the layout")
{
    Rig r;
    auto before = r.comp.pending_layout();
    auto a1 = r.plane.handle_command({CommandKind::toggle_visibility, ChannelId(1), LayoutMode::grid, 0, "t1"});
    auto hidden = r.comp.pending_layout().boards;
    CHECK(hidden.size() == 3);
    CHECK(std::none_of(hidden.begin(), hidden.end(), [](const auto& b) { return b.channel == ChannelId(1); }));
    auto a2 = r.plane.handle_command({CommandKind::toggle_visibility, ChannelId(1), LayoutMode::grid, 0, "t2"});
    CHECK(a1.applied_frame_seq == a2.applied_frame_seq);
    CHECK(r.comp.pending_layout().boards == before.boards);
}

TEST_CASE("unknown channels are rejected without changing state")
{
    Rig r;
    ControlPlane::Session s;
    auto before = r.comp.pending_layout();
    auto e = reply(r.plane, s, {{"type", "select"}, {"channel", 99}, {"id", "x"}});
    CHECK(e.at("type") == "error");
    CHECK(e.at("code") == "UnknownChannel");
    e = reply(r.plane, s, {{"type", "layout"}, {"mode", "focus"}, {"channel", 7}, {"id", "y"}});
    CHECK(e.at("code") == "UnknownChannel");
    e = reply(r.plane, s, {{"type", "select"}, {"channel", 300}, {"id", "z"}});
    CHECK(e.at("code") == "UnknownChannel");
    CHECK(r.comp.pending_layout().boards == before.boards);
    CHECK(r.plane.log().empty());
}

TEST_CASE("malformed and duplicate messages")
{
    Rig r;
    ControlPlane::Session s;
    CHECK(json::parse(r.plane.handle_message(s, "not json")).at("code") == "MalformedCommand");
    CHECK(reply(r.plane, s, {{"type", "select"}, {"id", "m"}}).at("code") == "MalformedCommand");
    CHECK(reply(r.plane, s, {{"type", "warp"}, {"id", "w"}}).at("code") == "MalformedCommand");
    CHECK(reply(r.plane, s, {{"type", "layout"}, {"mode", "mosaic"}, {"id", "l"}}).at("code") == "MalformedCommand");
    CHECK(reply(r.plane, s, {{"type", "select"}, {"channel", 1}}).at("code") == "MalformedCommand");
    CHECK(reply(r.plane, s, {{"type", "select"}, {"channel", 1}, {"id", "d"}}).at("type") == "ack");
    CHECK(reply(r.plane, s, {{"type", "select"}, {"channel", 1}, {"id", "d"}}).at("code") == "MalformedCommand");
}

TEST_CASE("a token gates every command")
{
    Compositor comp{validate_config(paired_scene(2, 320, 240, 30)), {}};
    ControlPlane plane{comp, StreamClock{}, std::string("s3cret")};
    ControlPlane::Session s;
    CHECK(reply(plane, s, {{"type", "select"}, {"channel", 1}, {"id", "a"}}).at("code") == "Unauthorized");
    CHECK(reply(plane, s, {{"type", "hello"}, {"token", "nope"}}).at("code") == "Unauthorized");
    CHECK(reply(plane, s, {{"type", "hello"}, {"token", "s3cret"}}).at("type") == "welcome");
    CHECK(reply(plane, s, {{"type", "select"}, {"channel", 1}, {"id", "a"}}).at("type") == "ack");
}

TEST_CASE("commands apply in arrival order")
{
    Rig r;
    ControlPlane::Session s;
    reply(r.plane, s, {{"type", "layout"}, {"mode", "focus"}, {"channel", 3}, {"id", "1"}});
    reply(r.plane, s, {{"type", "layout"}, {"mode", "grid"}, {"id", "2"}});
    reply(r.plane, s, {{"type", "layout"}, {"mode", "focus"}, {"channel", 1}, {"id", "3"}});
    auto layout = r.comp.pending_layout();
    CHECK(layout.request.mode == LayoutMode::focus);
    CHECK(layout.request.focus == ChannelId(1));
    auto log = r.plane.log();
    REQUIRE(log.size() == 3);
    CHECK(log[0].id == "1");
    CHECK(log[2].id == "3");
}

TEST_CASE("response time is input to reflecting arrival")
{
    ControlCommand cmd{CommandKind::select, ChannelId(0), LayoutMode::grid, 1'000, "r"};
    ControlAck ack{"r", 5, 1'200};
    CHECK(measure_response(cmd, ack, 41'000) == 40'000);
    CHECK_THROWS_AS(measure_response(cmd, ack, std::nullopt), Error);
    try {
        measure_response(cmd, ack, 7'000'000, 5'000'000);
        FAIL("no timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AckTimeout);
    }
}

TEST_CASE("commands round trip through their json form")
{
    for (auto cmd : {ControlCommand{CommandKind::select, ChannelId(3), LayoutMode::grid, 10, "a"},
                     ControlCommand{CommandKind::toggle_visibility, ChannelId(255), LayoutMode::grid, 11, "b"},
                     ControlCommand{CommandKind::layout, ChannelId(0), LayoutMode::grid, 12, "c"},
                     ControlCommand{CommandKind::layout, ChannelId(9), LayoutMode::focus, 13, "d"}}) {
        auto back = parse_command(command_to_json(cmd));
        CHECK(back.kind == cmd.kind);
        CHECK(back.id == cmd.id);
        CHECK(back.client_input_ts == cmd.client_input_ts);
        if (cmd.kind != CommandKind::layout || cmd.mode == LayoutMode::focus) {
            CHECK(back.channel == cmd.channel);
        }
    }
}

TEST_CASE("ndjson control server answers over tcp")
{
    Rig r;
    ControlServer server(r.plane, "127.0.0.1", 0);
    auto client = ControlClient::connect("127.0.0.1", server.port());
    auto pong = client.request({{"type", "ping"}, {"id", "p"}});
    CHECK(pong.at("type") == "pong");
    auto ack = client.request({{"type", "select"}, {"channel", 3}, {"id", "s"}});
    CHECK(ack.at("type") == "ack");
    CHECK(ack.at("applied_frame_seq") == r.comp.next_frame_seq());
    auto err = client.request({{"type", "toggle_visibility"}, {"channel", 12}, {"id", "t"}});
    CHECK(err.at("code") == "UnknownChannel");
    server.stop();
}
