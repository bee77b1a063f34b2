// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fusecast/channel_model.hpp"
#include "fusecast/clock.hpp"
#include "fusecast/image.hpp"

namespace fusecast {

struct Frame {
    ChannelId channel;
    std::uint64_t seq = 0;
    Micros capture_ts = 0;
    Image image;
};

using FramePtr = std::shared_ptr<const Frame>;

enum class SourceKind { synthetic, file };

struct SourceSpec {
    ChannelId channel;
    SourceKind kind = SourceKind::synthetic;
    double frame_rate = 30.0;
    int width = 320;
    int height = 180;
    std::string path;
};

// Signature block: 32 cells of 2x8 pixels per strip, most significant bit first.
// Row strip 0 carries the sequence number, strip 1 the channel id.
inline constexpr int kSignatureWidth = 64;
inline constexpr int kSignatureHeight = 16;
inline constexpr int kSignatureBits = 32;

struct Signature {
    int channel = 0;
    std::uint32_t seq = 0;
    friend bool operator==(const Signature&, const Signature&) = default;
};

/// Deterministic test frame. Throws Error(DimensionsTooSmall) below 64x16.
Frame synthetic_frame(ChannelId channel, std::uint64_t seq, int width, int height);

/// Background colour of synthetic frames for a channel.
Rgb channel_hue(ChannelId channel);

/// Decodes a signature block of any size; each bit cell covers 1/32 of the width and half the
/// height, and is decided by majority vote over saturated pixels.
/// Throws Error(UndecodableRegion) when a cell has no clear black/white majority.
Signature decode_signature(ImageView region);

/// Decodes the signature of a frame of `src_w` x `src_h` that was nearest-neighbor scaled into
/// `tile` of `canvas`. Cells are reconstructed through the inverse sample mapping, so arbitrary
/// (non-integer) factors work as long as each cell keeps at least one sample.
Signature decode_tile(ImageView canvas, const Rect& tile, int src_w, int src_h);

Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& image);

/// Sorted P6 frames of a directory. Throws Error(FileUnreadable).
std::vector<Image> load_frame_directory(const std::string& dir);

/// `synthetic:<count>` or `file:<dir>@<fps>`. Channels are numbered from `first_channel`.
std::vector<SourceSpec> parse_source_spec(const std::string& text, int first_channel, int width, int height,
                                          double frame_rate);

/// Returns false when the consumer is closed; the source then stops.
using FrameSink = std::function<bool(FramePtr)>;

struct SourceTiming {
    /// First emission happens at start_at + phase (stream time).
    Micros start_at = 0;
    Micros phase = 0;
};

/// A running producer; stop() joins the thread and no frame is emitted afterwards.
class SourceHandle {
public:
    SourceHandle(const SourceHandle&) = delete;
    SourceHandle& operator=(const SourceHandle&) = delete;
    ~SourceHandle();

    void stop();
    bool running() const { return !stopped_.load(); }
    std::uint64_t frames_emitted() const { return emitted_.load(); }
    /// CPU time spent by the producer thread so far.
    Micros cpu_us() const { return cpu_us_.load(); }

private:
    friend std::unique_ptr<SourceHandle> run_source(const SourceSpec&, FrameSink, const StreamClock&, SourceTiming);
    SourceHandle() = default;
    void loop(SourceSpec spec, FrameSink sink, StreamClock clock, SourceTiming timing, std::vector<Image> files);

    std::mutex mutex_;
    std::condition_variable wake_;
    bool stop_requested_ = false;
    std::atomic<bool> stopped_{false};
    std::atomic<std::uint64_t> emitted_{0};
    std::atomic<Micros> cpu_us_{0};
    std::thread thread_;
};

/// Starts emitting frames at spec.frame_rate. File sources loop over their frame list and
/// throw Error(FileUnreadable) here, before the thread starts.
std::unique_ptr<SourceHandle> run_source(const SourceSpec& spec, FrameSink sink, const StreamClock& clock,
                                         SourceTiming timing = {});

} // namespace fusecast
