// SPDX-License-Identifier: Apache-2.0
#pragma once

// Channel accounting for a fused scene. A scene carries display boards on the video canvas and
// interactive control groups on the interaction canvas; the main capture wraps both, so the
// channel total is simply the sum of the two indicator sums over devices 0..255.

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace fusecast {

inline constexpr int kMaxDevices = 256;

/// Index of an input device, 0..255.
class ChannelId {
public:
    constexpr ChannelId() = default;
    /// Throws Error(InvalidChannelId) outside [0, 255].
    explicit ChannelId(int value);

    constexpr int value() const { return value_; }
    friend constexpr auto operator<=>(ChannelId, ChannelId) = default;

private:
    std::uint8_t value_ = 0;
};

struct DisplayBoardSpec {
    ChannelId channel;
    bool enabled = true;
};

struct ControlGroupSpec {
    ChannelId channel;
    bool enabled = true;
};

/// Unvalidated scene description, as read from a file or built from CLI flags.
struct RawScene {
    struct Channel {
        int id = 0;
        bool board = true;
        bool board_enabled = true;
        bool control_group = true;
        bool control_group_enabled = true;
    };
    std::vector<Channel> channels;
    int canvas_width = 1280;
    int canvas_height = 720;
    double tick_rate = 30.0;
};

/// A scene that satisfies every pairing and capacity invariant. Only validate_config builds one.
class SceneConfig {
public:
    const std::vector<DisplayBoardSpec>& boards() const { return boards_; }
    const std::vector<ControlGroupSpec>& control_groups() const { return groups_; }
    int canvas_width() const { return width_; }
    int canvas_height() const { return height_; }
    double tick_rate() const { return tick_rate_; }

    bool has_board(ChannelId ch) const;
    bool has_control_group(ChannelId ch) const;

    friend bool operator==(const SceneConfig&, const SceneConfig&);

private:
    friend SceneConfig validate_config(const RawScene& raw);

    std::vector<DisplayBoardSpec> boards_;
    std::vector<ControlGroupSpec> groups_;
    int width_ = 0;
    int height_ = 0;
    double tick_rate_ = 0;
};

struct ChannelCount {
    int non_interactive = 0;
    int interactive = 0;
    int total = 0;
    friend bool operator==(const ChannelCount&, const ChannelCount&) = default;
};

/// Throws Error with CapacityExceeded, DanglingControlGroup, DuplicateChannel, BadDimensions,
/// InvalidChannelId or InvalidTickRate.
SceneConfig validate_config(const RawScene& raw);

/// Enabled display boards (the non-interactive sum).
int count_noninteractive(const SceneConfig& config);
/// Enabled control groups (the interactive sum).
int count_interactive(const SceneConfig& config);
ChannelCount count_total_channels(const SceneConfig& config);

/// n devices 0..n-1, each with a board and a paired control group.
RawScene paired_scene(int n, int width, int height, double tick_rate);

RawScene to_raw(const SceneConfig& config);

nlohmann::json scene_to_json(const SceneConfig& config);
RawScene scene_from_json(const nlohmann::json& j);
SceneConfig load_scene_file(const std::string& path);

} // namespace fusecast
