// SPDX-License-Identifier: Apache-2.0
#include "fusecast/wire.hpp"

#include <algorithm>
#include <cstring>

#include "fusecast/error.hpp"
#include "fusecast/jpeg.hpp"

namespace fusecast::wire {

namespace {

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(T v)
    {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
        }
    }
    void preamble(MessageType type)
    {
        out_.insert(out_.end(), kMagic.begin(), kMagic.end());
        out_.push_back(static_cast<std::uint8_t>(type));
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    template <typename T>
    T get()
    {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }
    std::span<const std::uint8_t> take(std::size_t n)
    {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (in_.size() - pos_ < n) {
            throw Error(ErrorCode::DecodeFailure, "truncated FUSE/1 message");
        }
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

std::uint16_t checked_u16(int v, const char* what)
{
    if (v < 0 || v > 0xFFFF) {
        throw Error(ErrorCode::EncodeFailure, std::string(what) + " does not fit in 16 bits");
    }
    return static_cast<std::uint16_t>(v);
}

void write_header_body(Writer& w, const WireFrameHeader& h)
{
    w.put<std::uint64_t>(h.frame_seq);
    w.put<std::uint64_t>(h.composite_ts_us);
    w.put<std::uint16_t>(h.width);
    w.put<std::uint16_t>(h.height);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(h.pixel_format));
    w.put<std::uint16_t>(0);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(h.channels.size()));
    for (const auto& d : h.channels) {
        w.put<std::uint16_t>(d.channel_id);
        w.put<std::uint16_t>(0);
        w.put<std::uint64_t>(d.source_seq);
        w.put<std::uint64_t>(d.capture_ts_us);
        w.put<std::uint16_t>(d.x);
        w.put<std::uint16_t>(d.y);
        w.put<std::uint16_t>(d.w);
        w.put<std::uint16_t>(d.h);
        w.put<std::uint16_t>(0);
    }
    w.put<std::uint32_t>(h.payload_len);
}

WireFrameHeader read_fixed(Reader& r)
{
    WireFrameHeader h;
    h.frame_seq = r.get<std::uint64_t>();
    h.composite_ts_us = r.get<std::uint64_t>();
    h.width = r.get<std::uint16_t>();
    h.height = r.get<std::uint16_t>();
    auto fmt = r.get<std::uint8_t>();
    if (fmt > 1) {
        throw Error(ErrorCode::DecodeFailure, "unknown pixel format " + std::to_string(fmt));
    }
    h.pixel_format = static_cast<PixelFormat>(fmt);
    r.get<std::uint16_t>();
    h.channels.resize(r.get<std::uint16_t>());
    return h;
}

void read_descriptors(Reader& r, WireFrameHeader& h)
{
    for (auto& d : h.channels) {
        d.channel_id = r.get<std::uint16_t>();
        r.get<std::uint16_t>();
        d.source_seq = r.get<std::uint64_t>();
        d.capture_ts_us = r.get<std::uint64_t>();
        d.x = r.get<std::uint16_t>();
        d.y = r.get<std::uint16_t>();
        d.w = r.get<std::uint16_t>();
        d.h = r.get<std::uint16_t>();
        r.get<std::uint16_t>();
    }
    h.payload_len = r.get<std::uint32_t>();
}

void check_preamble(std::span<const std::uint8_t> p)
{
    if (!std::equal(kMagic.begin(), kMagic.end(), p.begin())) {
        throw Error(ErrorCode::DecodeFailure, "bad FUSE/1 preamble");
    }
}

} // namespace

WireFrameHeader make_header(const FusedFrame& frame, PixelFormat format, std::uint32_t payload_len)
{
    WireFrameHeader h;
    h.frame_seq = frame.frame_seq;
    h.composite_ts_us = static_cast<std::uint64_t>(frame.composite_ts);
    h.width = checked_u16(frame.image.width, "width");
    h.height = checked_u16(frame.image.height, "height");
    h.pixel_format = format;
    h.channels.reserve(frame.channels.size());
    for (const auto& c : frame.channels) {
        h.channels.push_back({static_cast<std::uint16_t>(c.channel.value()), c.source_seq,
                              static_cast<std::uint64_t>(c.capture_ts), checked_u16(c.rect.x, "x"),
                              checked_u16(c.rect.y, "y"), checked_u16(c.rect.w, "w"), checked_u16(c.rect.h, "h")});
    }
    h.payload_len = payload_len;
    return h;
}

std::vector<std::uint8_t> encode_header(const WireFrameHeader& header)
{
    std::vector<std::uint8_t> out;
    out.reserve(kPreambleSize + header_size(header.channels.size()));
    Writer w(out);
    w.preamble(MessageType::frame);
    write_header_body(w, header);
    return out;
}

std::vector<std::uint8_t> encode_frame(const FusedFrame& frame, PixelFormat format, int jpeg_quality)
{
    std::vector<std::uint8_t> jpeg;
    std::span<const std::uint8_t> payload = frame.image.pixels;
    if (format == PixelFormat::jpeg) {
        jpeg = encode_jpeg(frame.image, jpeg_quality);
        payload = jpeg;
    }
    auto out = encode_header(make_header(frame, format, static_cast<std::uint32_t>(payload.size())));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

DecodedFrame decode_frame(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    check_preamble(r.take(4));
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(MessageType::frame)) {
        throw Error(ErrorCode::DecodeFailure, "not a frame message");
    }
    DecodedFrame d;
    d.header = read_fixed(r);
    read_descriptors(r, d.header);
    auto payload = r.take(d.header.payload_len);
    if (r.remaining() != 0) {
        throw Error(ErrorCode::DecodeFailure, "trailing bytes after payload");
    }
    if (d.header.pixel_format == PixelFormat::raw_rgb8 &&
        payload.size() != static_cast<std::size_t>(d.header.width) * d.header.height * 3) {
        throw Error(ErrorCode::DecodeFailure, "raw payload length does not match dimensions");
    }
    d.payload.assign(payload.begin(), payload.end());
    return d;
}

FusedFrame to_fused(const DecodedFrame& decoded)
{
    const auto& h = decoded.header;
    FusedFrame f;
    f.frame_seq = h.frame_seq;
    f.composite_ts = static_cast<Micros>(h.composite_ts_us);
    f.image.width = h.width;
    f.image.height = h.height;
    f.image.pixels = h.pixel_format == PixelFormat::raw_rgb8 ? decoded.payload : decode_jpeg(decoded.payload).pixels;
    for (const auto& d : h.channels) {
        f.channels.push_back({ChannelId(d.channel_id), d.source_seq, static_cast<Micros>(d.capture_ts_us),
                              {d.x, d.y, d.w, d.h}});
    }
    return f;
}

std::vector<std::uint8_t> encode_stream_info(const StreamInfo& info)
{
    std::vector<std::uint8_t> out;
    Writer w(out);
    w.preamble(MessageType::stream_info);
    w.put<std::uint64_t>(info.epoch_monotonic_us);
    return out;
}

std::vector<std::uint8_t> encode_subscribe(const Subscribe& sub)
{
    std::vector<std::uint8_t> out;
    Writer w(out);
    w.preamble(MessageType::subscribe);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(sub.pixel_format));
    return out;
}

std::optional<Message> read_message(net::TcpStream& stream, std::size_t max_payload)
{
    std::array<std::uint8_t, kPreambleSize> pre{};
    if (!stream.read_exact(pre)) {
        return std::nullopt;
    }
    check_preamble(pre);
    auto type = static_cast<MessageType>(pre[4]);
    switch (type) {
    case MessageType::stream_info: {
        std::array<std::uint8_t, 8> b{};
        if (!stream.read_exact(b)) {
            return std::nullopt;
        }
        Reader r(b);
        return StreamInfo{r.get<std::uint64_t>()};
    }
    case MessageType::subscribe: {
        std::array<std::uint8_t, 1> b{};
        if (!stream.read_exact(b)) {
            return std::nullopt;
        }
        if (b[0] > 1) {
            throw Error(ErrorCode::DecodeFailure, "unknown pixel format in subscribe");
        }
        return Subscribe{static_cast<PixelFormat>(b[0])};
    }
    case MessageType::frame: {
        std::array<std::uint8_t, kFixedHeaderSize> fixed{};
        if (!stream.read_exact(fixed)) {
            return std::nullopt;
        }
        Reader fr(fixed);
        DecodedFrame d;
        d.header = read_fixed(fr);
        std::vector<std::uint8_t> rest(kDescriptorSize * d.header.channels.size() + kPayloadLenSize);
        if (!stream.read_exact(rest)) {
            return std::nullopt;
        }
        Reader rr(rest);
        read_descriptors(rr, d.header);
        if (d.header.payload_len > max_payload) {
            throw Error(ErrorCode::DecodeFailure, "payload exceeds limit");
        }
        d.payload.resize(d.header.payload_len);
        if (!stream.read_exact(d.payload)) {
            return std::nullopt;
        }
        return d;
    }
    }
    throw Error(ErrorCode::DecodeFailure, "unknown message type " + std::to_string(pre[4]));
}

} // namespace fusecast::wire
