// SPDX-License-Identifier: Apache-2.0
#include "fusecast/channel_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

#include "fusecast/error.hpp"

namespace fusecast {

ChannelId::ChannelId(int value)
{
    if (value < 0 || value >= kMaxDevices) {
        throw Error(ErrorCode::InvalidChannelId, "channel id " + std::to_string(value) + " outside [0, 255]");
    }
    value_ = static_cast<std::uint8_t>(value);
}

bool SceneConfig::has_board(ChannelId ch) const
{
    return std::any_of(boards_.begin(), boards_.end(), [ch](const auto& b) { return b.channel == ch; });
}

bool SceneConfig::has_control_group(ChannelId ch) const
{
    return std::any_of(groups_.begin(), groups_.end(), [ch](const auto& g) { return g.channel == ch; });
}

bool operator==(const SceneConfig& a, const SceneConfig& b)
{
    auto same_boards = std::equal(a.boards_.begin(), a.boards_.end(), b.boards_.begin(), b.boards_.end(),
                                  [](const auto& x, const auto& y) { return x.channel == y.channel && x.enabled == y.enabled; });
    auto same_groups = std::equal(a.groups_.begin(), a.groups_.end(), b.groups_.begin(), b.groups_.end(),
                                  [](const auto& x, const auto& y) { return x.channel == y.channel && x.enabled == y.enabled; });
    return same_boards && same_groups && a.width_ == b.width_ && a.height_ == b.height_ && a.tick_rate_ == b.tick_rate_;
}

SceneConfig validate_config(const RawScene& raw)
{
    int board_count = static_cast<int>(std::count_if(raw.channels.begin(), raw.channels.end(),
                                                     [](const auto& c) { return c.board; }));
    if (board_count > kMaxDevices) {
        throw Error(ErrorCode::CapacityExceeded,
                    std::to_string(board_count) + " boards requested, at most 256 devices are supported");
    }
    if (raw.canvas_width <= 0 || raw.canvas_height <= 0 || raw.canvas_width > 65535 || raw.canvas_height > 65535) {
        throw Error(ErrorCode::BadDimensions, "canvas " + std::to_string(raw.canvas_width) + "x" +
                                                  std::to_string(raw.canvas_height));
    }
    if (!(raw.tick_rate > 0)) {
        throw Error(ErrorCode::InvalidTickRate, "tick rate must be positive");
    }

    SceneConfig cfg;
    std::set<int> board_ids;
    std::set<int> group_ids;
    for (const auto& c : raw.channels) {
        ChannelId id(c.id);
        if (c.board) {
            if (!board_ids.insert(c.id).second) {
                throw Error(ErrorCode::DuplicateChannel, "board for channel " + std::to_string(c.id) + " declared twice");
            }
            cfg.boards_.push_back({id, c.board_enabled});
        }
        if (c.control_group) {
            if (!group_ids.insert(c.id).second) {
                throw Error(ErrorCode::DuplicateChannel,
                            "control group for channel " + std::to_string(c.id) + " declared twice");
            }
            cfg.groups_.push_back({id, c.control_group_enabled});
        }
    }
    for (int g : group_ids) {
        if (!board_ids.count(g)) {
            throw Error(ErrorCode::DanglingControlGroup, "control group " + std::to_string(g) + " has no display board");
        }
    }
    auto by_channel = [](const auto& a, const auto& b) { return a.channel < b.channel; };
    std::sort(cfg.boards_.begin(), cfg.boards_.end(), by_channel);
    std::sort(cfg.groups_.begin(), cfg.groups_.end(), by_channel);
    cfg.width_ = raw.canvas_width;
    cfg.height_ = raw.canvas_height;
    cfg.tick_rate_ = raw.tick_rate;
    return cfg;
}

int count_noninteractive(const SceneConfig& config)
{
    return static_cast<int>(std::count_if(config.boards().begin(), config.boards().end(),
                                          [](const auto& b) { return b.enabled; }));
}

int count_interactive(const SceneConfig& config)
{
    return static_cast<int>(std::count_if(config.control_groups().begin(), config.control_groups().end(),
                                          [](const auto& g) { return g.enabled; }));
}

ChannelCount count_total_channels(const SceneConfig& config)
{
    ChannelCount c;
    c.non_interactive = count_noninteractive(config);
    c.interactive = count_interactive(config);
    c.total = c.non_interactive + c.interactive;
    return c;
}

RawScene paired_scene(int n, int width, int height, double tick_rate)
{
    RawScene raw;
    raw.canvas_width = width;
    raw.canvas_height = height;
    raw.tick_rate = tick_rate;
    for (int i = 0; i < n; ++i) {
        raw.channels.push_back({.id = i});
    }
    return raw;
}

RawScene to_raw(const SceneConfig& config)
{
    RawScene raw;
    raw.canvas_width = config.canvas_width();
    raw.canvas_height = config.canvas_height();
    raw.tick_rate = config.tick_rate();
    for (const auto& b : config.boards()) {
        RawScene::Channel c{.id = b.channel.value(), .board = true, .board_enabled = b.enabled, .control_group = false};
        for (const auto& g : config.control_groups()) {
            if (g.channel == b.channel) {
                c.control_group = true;
                c.control_group_enabled = g.enabled;
            }
        }
        raw.channels.push_back(c);
    }
    return raw;
}

nlohmann::json scene_to_json(const SceneConfig& config)
{
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : to_raw(config).channels) {
        nlohmann::json j{{"id", c.id}, {"board", c.board}, {"control_group", c.control_group}};
        if (!c.board_enabled) {
            j["board_enabled"] = false;
        }
        if (c.control_group && !c.control_group_enabled) {
            j["control_group_enabled"] = false;
        }
        channels.push_back(std::move(j));
    }
    return {{"canvas", {{"width", config.canvas_width()}, {"height", config.canvas_height()}}},
            {"tick_rate", config.tick_rate()},
            {"channels", channels}};
}

RawScene scene_from_json(const nlohmann::json& j)
{
    RawScene raw;
    try {
        raw.canvas_width = j.at("canvas").at("width").get<int>();
        raw.canvas_height = j.at("canvas").at("height").get<int>();
        raw.tick_rate = j.value("tick_rate", 30.0);
        for (const auto& c : j.at("channels")) {
            RawScene::Channel ch;
            ch.id = c.at("id").get<int>();
            ch.board = c.value("board", true);
            ch.board_enabled = c.value("board_enabled", true);
            ch.control_group = c.value("control_group", false);
            ch.control_group_enabled = c.value("control_group_enabled", true);
            raw.channels.push_back(ch);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadDimensions, std::string("malformed scene description: ") + e.what());
    }
    return raw;
}

SceneConfig load_scene_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open scene file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, "scene file " + path + ": " + e.what());
    }
    return validate_config(scene_from_json(j));
}

} // namespace fusecast
