// SPDX-License-Identifier: Apache-2.0
#pragma once

// FUSE/1 framing. Every message starts with the preamble "FUS1" and a type byte; all integers
// are little-endian.
//
//   0x01 frame        (server -> client)
//        u64 frame_seq, u64 composite_ts_us, u16 width, u16 height, u8 pixel_format,
//        u16 reserved, u16 channel_count,                                   25 bytes
//        channel_count x { u16 channel_id, u16 reserved, u64 source_seq,
//                          u64 capture_ts_us, u16 x, u16 y, u16 w, u16 h,
//                          u16 reserved }                                   30 bytes each
//        u32 payload_len, payload (raw RGB8 rows or a JPEG image)
//   0x02 stream info  (server -> client, once per session)
//        u64 stream epoch on the host monotonic clock, microseconds
//   0x10 subscribe    (client -> server, once per session)
//        u8 pixel_format

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fusecast/compositor.hpp"
#include "fusecast/net.hpp"

namespace fusecast::wire {

enum class PixelFormat : std::uint8_t { raw_rgb8 = 0, jpeg = 1 };

enum class MessageType : std::uint8_t { frame = 0x01, stream_info = 0x02, subscribe = 0x10 };

inline constexpr std::array<std::uint8_t, 4> kMagic{'F', 'U', 'S', '1'};
inline constexpr std::size_t kPreambleSize = 5;
inline constexpr std::size_t kFixedHeaderSize = 25;
inline constexpr std::size_t kDescriptorSize = 30;
inline constexpr std::size_t kPayloadLenSize = 4;

/// Header bytes following the preamble.
constexpr std::size_t header_size(std::size_t channel_count)
{
    return kFixedHeaderSize + kDescriptorSize * channel_count + kPayloadLenSize;
}

struct WireDescriptor {
    std::uint16_t channel_id = 0;
    std::uint64_t source_seq = 0;
    std::uint64_t capture_ts_us = 0;
    std::uint16_t x = 0, y = 0, w = 0, h = 0;
    friend bool operator==(const WireDescriptor&, const WireDescriptor&) = default;
};

struct WireFrameHeader {
    std::uint64_t frame_seq = 0;
    std::uint64_t composite_ts_us = 0;
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    PixelFormat pixel_format = PixelFormat::raw_rgb8;
    std::vector<WireDescriptor> channels;
    std::uint32_t payload_len = 0;
    friend bool operator==(const WireFrameHeader&, const WireFrameHeader&) = default;
};

struct DecodedFrame {
    WireFrameHeader header;
    std::vector<std::uint8_t> payload;
};

struct StreamInfo {
    std::uint64_t epoch_monotonic_us = 0;
};

struct Subscribe {
    PixelFormat pixel_format = PixelFormat::raw_rgb8;
};

WireFrameHeader make_header(const FusedFrame& frame, PixelFormat format, std::uint32_t payload_len);
/// Preamble plus header.
std::vector<std::uint8_t> encode_header(const WireFrameHeader& header);
/// Throws Error(EncodeFailure) if the JPEG encoder fails.
std::vector<std::uint8_t> encode_frame(const FusedFrame& frame, PixelFormat format, int jpeg_quality = 80);
/// Throws Error(DecodeFailure) on a malformed or truncated message.
DecodedFrame decode_frame(std::span<const std::uint8_t> bytes);
/// Rebuilds a FusedFrame from a raw-format message.
FusedFrame to_fused(const DecodedFrame& decoded);

std::vector<std::uint8_t> encode_stream_info(const StreamInfo& info);
std::vector<std::uint8_t> encode_subscribe(const Subscribe& sub);

using Message = std::variant<DecodedFrame, StreamInfo, Subscribe>;
/// Blocking read of one message. Throws Error(DecodeFailure) on garbage, returns nullopt on EOF.
std::optional<Message> read_message(net::TcpStream& stream, std::size_t max_payload = 64u << 20);

} // namespace fusecast::wire
