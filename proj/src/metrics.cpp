// SPDX-License-Identifier: Apache-2.0
#include "fusecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "fusecast/error.hpp"
#include "fusecast/kernels.hpp"

namespace fusecast {

namespace {

double percentile(const std::vector<double>& sorted, double p)
{
    // nearest-rank
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

} // namespace

Stats summarize(std::span<const double> values)
{
    Stats s;
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0;
    for (double v : sorted) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(sorted.size());
    s.p50 = percentile(sorted, 50);
    s.p95 = percentile(sorted, 95);
    s.p99 = percentile(sorted, 99);
    s.min = sorted.front();
    s.max = sorted.back();
    return s;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) {
        return 0;
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx == 0 ? 0 : sxy / sxx;
}

std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0)) {
        throw Error(ErrorCode::EmptySeries, "sigma must be positive");
    }
    const int radius = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double total = 0;
    for (int k = -radius; k <= radius; ++k) {
        double v = std::exp(-0.5 * k * k / (sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
        w[static_cast<std::size_t>(k + radius)] = v;
        total += v;
    }
    for (auto& v : w) {
        v /= total;
    }
    return w;
}

std::vector<double> gaussian_smooth(std::span<const double> series, double sigma)
{
    if (series.empty()) {
        throw Error(ErrorCode::EmptySeries, "cannot smooth an empty series");
    }
    const auto taps = gaussian_kernel(sigma);
    const int radius = static_cast<int>(taps.size() / 2);
    const std::size_t n = series.size();
    std::vector<double> out(n);
    kernels::active().convolve_interior(series.data(), n, taps.data(), radius, out.data());
    // Ends: drop the taps that fall outside and renormalise the rest.
    auto edge = [&](std::size_t i) {
        double acc = 0, weight = 0;
        for (int k = -radius; k <= radius; ++k) {
            auto j = static_cast<long long>(i) + k;
            if (j < 0 || j >= static_cast<long long>(n)) {
                continue;
            }
            double w = taps[static_cast<std::size_t>(k + radius)];
            acc += w * series[static_cast<std::size_t>(j)];
            weight += w;
        }
        out[i] = acc / weight;
    };
    const auto r = static_cast<std::size_t>(radius);
    for (std::size_t i = 0; i < n; ++i) {
        if (i < r || i + r >= n) {
            edge(i);
        }
    }
    return out;
}

Stats LatencyReport::overall() const
{
    std::vector<double> v;
    v.reserve(latency.size());
    for (const auto& r : latency) {
        v.push_back(static_cast<double>(r.latency_us()));
    }
    return summarize(v);
}

std::vector<ChannelStats> LatencyReport::per_channel() const
{
    std::map<int, std::vector<double>> by;
    for (const auto& r : latency) {
        by[r.channel].push_back(static_cast<double>(r.latency_us()));
    }
    std::vector<ChannelStats> out;
    for (const auto& [ch, v] : by) {
        out.push_back({ch, summarize(v)});
    }
    return out;
}

double LatencyReport::mean_latency_us() const
{
    auto pc = per_channel();
    if (pc.empty()) {
        return 0;
    }
    double sum = 0;
    for (const auto& c : pc) {
        sum += c.latency_us.mean;
    }
    return sum / static_cast<double>(pc.size());
}

Micros LatencyReport::max_sync_spread_us() const
{
    Micros m = 0;
    for (const auto& s : sync) {
        m = std::max(m, s.spread_us);
    }
    return m;
}

double LatencyReport::mean_composite_time_us() const
{
    if (load.empty()) {
        return 0;
    }
    double sum = 0;
    for (const auto& l : load) {
        sum += l.composite_time_us;
    }
    return sum / static_cast<double>(load.size());
}

double LatencyReport::cpu_slope_per_s() const
{
    std::vector<double> t, c;
    for (const auto& l : load) {
        t.push_back(l.t);
        c.push_back(l.cpu_fraction);
    }
    return least_squares_slope(t, c);
}

std::size_t ResponseReport::timeouts() const
{
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.timeout; }));
}

Stats ResponseReport::overall_ms() const
{
    std::vector<double> v;
    for (const auto& s : samples) {
        if (!s.timeout) {
            v.push_back(static_cast<double>(s.response_us) / 1000.0);
        }
    }
    return summarize(v);
}

Stats ResponseReport::kind_ms(CommandKind kind) const
{
    std::vector<double> v;
    for (const auto& s : samples) {
        if (!s.timeout && s.kind == kind) {
            v.push_back(static_cast<double>(s.response_us) / 1000.0);
        }
    }
    return summarize(v);
}

Stats ResponseReport::rtt_us() const
{
    std::vector<double> v;
    for (const auto& s : samples) {
        v.push_back(static_cast<double>(s.rtt_us));
    }
    return summarize(v);
}

nlohmann::json ResponseReport::reference_context()
{
    return {{"mean_ms", 600}, {"range_ms", {50, 1300}}, {"note", "hardware-scale reference figures; not asserted"}};
}

namespace {

nlohmann::json stats_json(const Stats& s)
{
    return {{"count", s.count}, {"mean", s.mean}, {"p50", s.p50}, {"p95", s.p95},
            {"p99", s.p99}, {"min", s.min}, {"max", s.max}};
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path);
    }
    out << text;
    if (!out) {
        throw Error(ErrorCode::IoError, "short write to " + path);
    }
}

std::string scalar_text(const nlohmann::json& v)
{
    return v.is_string() ? v.get<std::string>() : v.dump();
}

// Config echo as "config.<key>" rows, keys in sorted order (nlohmann objects are ordered).
void config_rows(std::ostringstream& out, const nlohmann::json& config, const std::string& prefix = "config")
{
    for (auto it = config.begin(); it != config.end(); ++it) {
        if (it->is_object()) {
            config_rows(out, *it, prefix + "." + it.key());
        } else {
            out << "0,-1," << prefix << "." << it.key() << "," << scalar_text(*it) << "\n";
        }
    }
}

} // namespace

nlohmann::json report_to_json(const LatencyReport& report)
{
    nlohmann::json latency = nlohmann::json::array();
    for (const auto& r : report.latency) {
        latency.push_back({{"channel", r.channel}, {"capture_ts_us", r.capture_ts}, {"render_ts_us", r.render_ts}});
    }
    nlohmann::json sync = nlohmann::json::array();
    for (const auto& s : report.sync) {
        sync.push_back({{"frame_seq", s.frame_seq}, {"t_us", s.t_us}, {"spread_us", s.spread_us}});
    }
    nlohmann::json load = nlohmann::json::array();
    for (const auto& l : report.load) {
        load.push_back({{"t", l.t}, {"cpu_fraction", l.cpu_fraction}, {"source_cpu_fraction", l.source_cpu_fraction},
                        {"composite_time_us", l.composite_time_us}});
    }
    nlohmann::json channels = nlohmann::json::array();
    for (const auto& c : report.per_channel()) {
        channels.push_back({{"channel", c.channel}, {"latency_us", stats_json(c.latency_us)}});
    }
    return {{"config", report.config},
            {"summary",
             {{"latency_us", stats_json(report.overall())},
              {"mean_latency_us", report.mean_latency_us()},
              {"max_sync_spread_us", report.max_sync_spread_us()},
              {"mean_composite_time_us", report.mean_composite_time_us()},
              {"cpu_slope_per_s", report.cpu_slope_per_s()},
              {"channels", channels}}},
            {"latency", latency},
            {"sync", sync},
            {"load", load}};
}

LatencyReport latency_report_from_json(const nlohmann::json& j)
{
    LatencyReport r;
    try {
        r.config = j.value("config", nlohmann::json::object());
        for (const auto& e : j.at("latency")) {
            r.latency.push_back({e.at("channel").get<int>(), e.at("capture_ts_us").get<Micros>(),
                                 e.at("render_ts_us").get<Micros>()});
        }
        for (const auto& e : j.at("sync")) {
            r.sync.push_back({e.at("frame_seq").get<std::uint64_t>(), e.at("t_us").get<Micros>(),
                              e.at("spread_us").get<Micros>()});
        }
        for (const auto& e : j.at("load")) {
            r.load.push_back({e.at("t").get<double>(), e.at("cpu_fraction").get<double>(),
                              e.at("source_cpu_fraction").get<double>(), e.at("composite_time_us").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed latency report: ") + e.what());
    }
    return r;
}

std::string report_to_csv(const LatencyReport& report)
{
    std::ostringstream out;
    out << kCsvHeader << "\n";
    config_rows(out, report.config);
    for (const auto& r : report.latency) {
        out << r.render_ts << "," << r.channel << ",latency_us," << r.latency_us() << "\n";
    }
    for (const auto& s : report.sync) {
        out << s.t_us << ",-1,sync_spread_us," << s.spread_us << "\n";
    }
    for (const auto& l : report.load) {
        auto t = static_cast<long long>(std::llround(l.t * 1e6));
        out << t << ",-1,cpu_fraction," << l.cpu_fraction << "\n";
        out << t << ",-1,source_cpu_fraction," << l.source_cpu_fraction << "\n";
        out << t << ",-1,composite_time_us," << l.composite_time_us << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const ResponseReport& report)
{
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : report.samples) {
        samples.push_back({{"kind", std::string(to_string(s.kind))}, {"id", s.id}, {"response_us", s.response_us},
                           {"rtt_us", s.rtt_us}, {"timeout", s.timeout}});
    }
    nlohmann::json kinds = nlohmann::json::object();
    for (auto k : {CommandKind::select, CommandKind::layout, CommandKind::toggle_visibility}) {
        auto s = report.kind_ms(k);
        if (s.count > 0) {
            kinds[std::string(to_string(k))] = stats_json(s);
        }
    }
    return {{"config", report.config},
            {"summary",
             {{"response_ms", stats_json(report.overall_ms())},
              {"per_kind_ms", kinds},
              {"rtt_us", stats_json(report.rtt_us())},
              {"timeouts", report.timeouts()},
              {"reference", ResponseReport::reference_context()}}},
            {"samples", samples}};
}

ResponseReport response_report_from_json(const nlohmann::json& j)
{
    ResponseReport r;
    try {
        r.config = j.value("config", nlohmann::json::object());
        for (const auto& e : j.at("samples")) {
            auto kind = e.at("kind").get<std::string>();
            ResponseSample s;
            s.kind = kind == "layout" ? CommandKind::layout
                     : kind == "toggle_visibility" ? CommandKind::toggle_visibility
                                                   : CommandKind::select;
            s.id = e.at("id").get<std::string>();
            s.response_us = e.at("response_us").get<Micros>();
            s.rtt_us = e.at("rtt_us").get<Micros>();
            s.timeout = e.at("timeout").get<bool>();
            r.samples.push_back(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed response report: ") + e.what());
    }
    return r;
}

std::string report_to_csv(const ResponseReport& report)
{
    std::ostringstream out;
    out << kCsvHeader << "\n";
    config_rows(out, report.config);
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        std::string metric = "response_us." + std::string(to_string(s.kind));
        out << i << ",-1," << (s.timeout ? "ack_timeout." + std::string(to_string(s.kind)) : metric) << ","
            << (s.timeout ? 1 : s.response_us) << "\n";
        out << i << ",-1,rtt_us," << s.rtt_us << "\n";
    }
    return out.str();
}

void write_report(const LatencyReport& report, const std::string& path, ReportFormat format)
{
    write_text(path, format == ReportFormat::json ? report_to_json(report).dump(2) + "\n" : report_to_csv(report));
}

void write_report(const ResponseReport& report, const std::string& path, ReportFormat format)
{
    write_text(path, format == ReportFormat::json ? report_to_json(report).dump(2) + "\n" : report_to_csv(report));
}

} // namespace fusecast
