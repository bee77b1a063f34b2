// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>

#include "doctest.h"
#include "fusecast/channel_model.hpp"
#include "fusecast/error.hpp"

using namespace fusecast;

namespace {

ErrorCode error_of(const RawScene& raw)
{
    try {
        validate_config(raw);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected validation error");
    return ErrorCode::IoError;
}

// Independent count: walk the raw description rather than the validated config.
int enabled_boards(const RawScene& raw)
{
    int n = 0;
    for (const auto& c : raw.channels) {
        n += (c.board && c.board_enabled) ? 1 : 0;
    }
    return n;
}

} // namespace

TEST_CASE("channel id range")
{
    CHECK(ChannelId(0).value() == 0);
    CHECK(ChannelId(255).value() == 255);
    CHECK_THROWS_AS(ChannelId(256), Error);
    CHECK_THROWS_AS(ChannelId(-1), Error);
}

TEST_CASE("count_noninteractive")
{
    CHECK(count_noninteractive(validate_config(paired_scene(0, 1280, 720, 30))) == 0);
    CHECK(count_noninteractive(validate_config(paired_scene(3, 1280, 720, 30))) == 3);
    auto raw = paired_scene(256, 1280, 720, 30);
    CHECK(count_noninteractive(validate_config(raw)) == enabled_boards(raw));
    CHECK(enabled_boards(raw) == 256);
}

TEST_CASE("count_total_channels")
{
    CHECK(count_total_channels(validate_config(paired_scene(3, 1280, 720, 30))) == ChannelCount{3, 3, 6});

    RawScene one = paired_scene(1, 1280, 720, 30);
    one.channels[0].control_group = false;
    CHECK(count_total_channels(validate_config(one)) == ChannelCount{1, 0, 1});

    auto raw = paired_scene(255, 1280, 720, 30);
    std::size_t boards = 0, groups = 0;
    for (const auto& c : raw.channels) {
        boards += c.board;
        groups += c.control_group;
    }
    CHECK(count_total_channels(validate_config(raw)) == ChannelCount{255, 255, static_cast<int>(boards + groups)});
}

TEST_CASE("disabled boards keep their slot but count zero")
{
    auto raw = paired_scene(4, 640, 360, 30);
    raw.channels[2].board_enabled = false;
    raw.channels[2].control_group_enabled = false;
    auto cfg = validate_config(raw);
    CHECK(cfg.boards().size() == 4);
    CHECK(count_total_channels(cfg) == ChannelCount{3, 3, 6});
}

TEST_CASE("validate_config errors")
{
    auto too_many = paired_scene(256, 1280, 720, 30);
    too_many.channels.push_back({.id = 0});
    CHECK(error_of(too_many) == ErrorCode::CapacityExceeded);

    RawScene dangling = paired_scene(3, 1280, 720, 30);
    dangling.channels.push_back({.id = 7, .board = false, .control_group = true});
    CHECK(error_of(dangling) == ErrorCode::DanglingControlGroup);

    RawScene dup = paired_scene(2, 1280, 720, 30);
    dup.channels.push_back({.id = 1});
    CHECK(error_of(dup) == ErrorCode::DuplicateChannel);

    CHECK(error_of(paired_scene(2, 0, 720, 30)) == ErrorCode::BadDimensions);
    CHECK(error_of(paired_scene(2, 1280, -1, 30)) == ErrorCode::BadDimensions);
    CHECK(error_of(paired_scene(2, 1280, 720, 0)) == ErrorCode::InvalidTickRate);

    RawScene bad_id = paired_scene(0, 1280, 720, 30);
    bad_id.channels.push_back({.id = 300});
    CHECK(error_of(bad_id) == ErrorCode::InvalidChannelId);
}

TEST_CASE("ten paired channels at 1280x720 30 Hz validate")
{
    auto cfg = validate_config(paired_scene(10, 1280, 720, 30));
    CHECK(cfg.boards().size() == 10);
    CHECK(cfg.control_groups().size() == 10);
    CHECK(cfg.canvas_width() == 1280);
    CHECK(cfg.canvas_height() == 720);
    CHECK(cfg.tick_rate() == 30.0);
    for (const auto& g : cfg.control_groups()) {
        CHECK(cfg.has_board(g.channel));
    }
}

TEST_CASE("property: paired scenes total 2n, independent of declaration order")
{
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        int n = std::uniform_int_distribution<int>(0, 256)(rng);
        std::vector<int> ids(256);
        for (int i = 0; i < 256; ++i) {
            ids[i] = i;
        }
        std::shuffle(ids.begin(), ids.end(), rng);
        RawScene raw = paired_scene(0, 640, 360, 30);
        for (int i = 0; i < n; ++i) {
            raw.channels.push_back({.id = ids[i]});
        }
        auto base = count_total_channels(validate_config(raw));
        CHECK(base.total == 2 * n);
        std::shuffle(raw.channels.begin(), raw.channels.end(), rng);
        CHECK(count_total_channels(validate_config(raw)) == base);
    }
}

TEST_CASE("property: validate . serialize . validate is idempotent")
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        RawScene raw = paired_scene(0, 320 + trial, 240, 15 + trial % 30);
        for (int id = 0; id < 256; ++id) {
            if (std::bernoulli_distribution(0.1)(rng)) {
                RawScene::Channel c{.id = id};
                c.board_enabled = std::bernoulli_distribution(0.8)(rng);
                c.control_group = std::bernoulli_distribution(0.7)(rng);
                c.control_group_enabled = std::bernoulli_distribution(0.8)(rng);
                raw.channels.push_back(c);
            }
        }
        auto cfg = validate_config(raw);
        auto again = validate_config(scene_from_json(nlohmann::json::parse(scene_to_json(cfg).dump())));
        CHECK(again == cfg);
    }
}

TEST_CASE("scene file format")
{
    auto j = nlohmann::json::parse(R"({"canvas": {"width": 1280, "height": 720}, "tick_rate": 30,
        "channels": [{"id": 0, "board": true, "control_group": true}, {"id": 1, "board": true}]})");
    auto cfg = validate_config(scene_from_json(j));
    CHECK(count_total_channels(cfg) == ChannelCount{2, 1, 3});
    CHECK_THROWS_AS(scene_from_json(nlohmann::json::parse(R"({"tick_rate": 30})")), Error);
}
