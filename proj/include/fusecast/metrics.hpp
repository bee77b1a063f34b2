// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fusecast/channel_model.hpp"
#include "fusecast/clock.hpp"
#include "fusecast/control.hpp"

namespace fusecast {

/// Capture-to-render delay of one channel in one received frame, on the stream clock.
struct LatencyRecord {
    int channel = 0;
    Micros capture_ts = 0;
    Micros render_ts = 0;
    Micros latency_us() const { return render_ts - capture_ts; }
    friend bool operator==(const LatencyRecord&, const LatencyRecord&) = default;
};

/// Spread of capture timestamps inside one fused frame.
struct SyncRecord {
    std::uint64_t frame_seq = 0;
    Micros t_us = 0;
    Micros spread_us = 0;
    friend bool operator==(const SyncRecord&, const SyncRecord&) = default;
};

struct LoadSample {
    double t = 0;                    // seconds since bench start
    double cpu_fraction = 0;         // whole process, share of all cores
    double source_cpu_fraction = 0;  // source threads only
    double composite_time_us = 0;    // mean CPU time per capture over the interval
    friend bool operator==(const LoadSample&, const LoadSample&) = default;
};

struct Stats {
    std::size_t count = 0;
    double mean = 0, p50 = 0, p95 = 0, p99 = 0, min = 0, max = 0;
};

Stats summarize(std::span<const double> values);
/// Least-squares slope of y over x; 0 for fewer than two points.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Normalised discrete Gaussian over [-ceil(3 sigma), ceil(3 sigma)].
std::vector<double> gaussian_kernel(double sigma);
/// Gaussian smoothing with the kernel truncated and renormalised at the series ends; output
/// has the input's length. Throws Error(EmptySeries); sigma must be positive.
std::vector<double> gaussian_smooth(std::span<const double> series, double sigma = 1.0);

struct ChannelStats {
    int channel = 0;
    Stats latency_us;
};

struct LatencyReport {
    nlohmann::json config = nlohmann::json::object();
    std::vector<LatencyRecord> latency;
    std::vector<SyncRecord> sync;
    std::vector<LoadSample> load;

    Stats overall() const;
    std::vector<ChannelStats> per_channel() const;
    /// Mean over channels of each channel's mean latency.
    double mean_latency_us() const;
    Micros max_sync_spread_us() const;
    double mean_composite_time_us() const;
    double cpu_slope_per_s() const;
};

struct ResponseSample {
    CommandKind kind = CommandKind::select;
    std::string id;
    Micros response_us = 0;
    Micros rtt_us = 0;
    bool timeout = false;
    friend bool operator==(const ResponseSample&, const ResponseSample&) = default;
};

struct ResponseReport {
    nlohmann::json config = nlohmann::json::object();
    std::vector<ResponseSample> samples;

    std::size_t timeouts() const;
    Stats overall_ms() const;
    Stats kind_ms(CommandKind kind) const;
    Stats rtt_us() const;
    /// Published hardware-scale figures, reported next to local numbers and never asserted.
    static nlohmann::json reference_context();
};

enum class ReportFormat { csv, json };

inline constexpr const char* kCsvHeader = "t_us,channel,metric,value";

/// Throws Error(IoError).
void write_report(const LatencyReport& report, const std::string& path, ReportFormat format);
void write_report(const ResponseReport& report, const std::string& path, ReportFormat format);
nlohmann::json report_to_json(const LatencyReport& report);
nlohmann::json report_to_json(const ResponseReport& report);
LatencyReport latency_report_from_json(const nlohmann::json& j);
ResponseReport response_report_from_json(const nlohmann::json& j);
std::string report_to_csv(const LatencyReport& report);
std::string report_to_csv(const ResponseReport& report);

} // namespace fusecast
