// SPDX-License-Identifier: Apache-2.0
// fusecast: serve, client and bench front ends.
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <regex>
#include <thread>

#include "CLI11.hpp"

#include "fusecast/bench.hpp"
#include "fusecast/client.hpp"
#include "fusecast/error.hpp"
#include "fusecast/kernels.hpp"
#include "fusecast/server.hpp"

using namespace fusecast;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBind = 3;
constexpr int kExitConnect = 4;
constexpr int kExitVerify = 5;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::pair<int, int> parse_size(const std::string& text)
{
    std::smatch m;
    static const std::regex re(R"((\d+)[xX](\d+))");
    if (!std::regex_match(text, m, re)) {
        throw UsageError("size must look like 1280x720: " + text);
    }
    return {std::stoi(m[1]), std::stoi(m[2])};
}

/// "30s", "500ms", "2m" or plain seconds.
double parse_duration(const std::string& text)
{
    std::smatch m;
    static const std::regex re(R"(([0-9]*\.?[0-9]+)\s*(ms|s|m)?)");
    if (!std::regex_match(text, m, re)) {
        throw UsageError("bad duration: " + text);
    }
    double v = std::stod(m[1]);
    std::string unit = m[2];
    double s = unit == "ms" ? v / 1000 : unit == "m" ? v * 60 : v;
    if (!(s > 0)) {
        throw UsageError("duration must be positive");
    }
    return s;
}

/// Bytes per second from "50mbps" (bits), "6MB/s" (bytes) or a plain byte rate.
double parse_bandwidth(const std::string& text)
{
    std::smatch m;
    static const std::regex re(R"(([0-9]*\.?[0-9]+)\s*(kbps|mbps|gbps|KB/s|MB/s|GB/s)?)", std::regex::icase);
    if (!std::regex_match(text, m, re)) {
        throw UsageError("bad bandwidth: " + text);
    }
    double v = std::stod(m[1]);
    std::string unit = m[2];
    std::string lower = unit;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    double bps = v;
    if (lower == "kbps") {
        bps = v * 1e3 / 8;
    } else if (lower == "mbps") {
        bps = v * 1e6 / 8;
    } else if (lower == "gbps") {
        bps = v * 1e9 / 8;
    } else if (lower == "kb/s") {
        bps = v * 1e3;
    } else if (lower == "mb/s") {
        bps = v * 1e6;
    } else if (lower == "gb/s") {
        bps = v * 1e9;
    }
    if (!(bps > 0)) {
        throw UsageError("bandwidth must be positive");
    }
    return bps;
}

std::uint16_t parse_transport(const std::string& text)
{
    const std::string prefix = "fuse1:";
    if (text.rfind(prefix, 0) != 0) {
        throw UsageError("transport must be fuse1:PORT");
    }
    int port = std::stoi(text.substr(prefix.size()));
    if (port < 0 || port > 65535) {
        throw UsageError("port out of range");
    }
    return static_cast<std::uint16_t>(port);
}

std::vector<int> parse_channel_list(const std::string& text)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(std::stoi(item));
        if (out.back() < 1 || out.back() > kMaxDevices) {
            throw UsageError("channel counts must be in 1..256");
        }
    }
    if (out.empty()) {
        throw UsageError("empty channel list");
    }
    return out;
}

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

struct ServeArgs {
    std::vector<std::string> sources;
    std::string size = "1280x720";
    std::string source_size = "320x180";
    double tick = 30;
    std::string transport = "fuse1:7070";
    int http = -1;
    int control = -1;
    std::string token;
    std::string scene;
    std::string host = "127.0.0.1";
    int quality = 80;
};

int run_serve(const ServeArgs& a)
{
    ServerOptions so;
    try {
        auto [w, h] = parse_size(a.size);
        auto [sw, sh] = parse_size(a.source_size);
        int next_channel = 0;
        for (const auto& text : a.sources) {
            auto specs = parse_source_spec(text, next_channel, sw, sh, a.tick);
            next_channel += static_cast<int>(specs.size());
            so.sources.insert(so.sources.end(), specs.begin(), specs.end());
        }
        if (!a.scene.empty()) {
            so.scene = load_scene_file(a.scene);
        } else {
            RawScene raw;
            raw.canvas_width = w;
            raw.canvas_height = h;
            raw.tick_rate = a.tick;
            for (const auto& s : so.sources) {
                raw.channels.push_back({s.channel.value(), true, true, true, true});
            }
            so.scene = validate_config(raw);
        }
        so.host = a.host;
        so.fuse1_port = parse_transport(a.transport);
        so.control_port = a.control >= 0 ? static_cast<std::uint16_t>(a.control)
                          : *so.fuse1_port == 0 ? 0
                                                : static_cast<std::uint16_t>(*so.fuse1_port + 1);
        if (a.http >= 0) {
            so.http_port = static_cast<std::uint16_t>(a.http);
        }
        std::string token = a.token;
        if (token.empty()) {
            if (const char* env = std::getenv("FUSECAST_TOKEN")) {
                token = env;
            }
        }
        if (!token.empty()) {
            so.token = token;
        }
        so.jpeg_quality = a.quality;
    } catch (const UsageError& e) {
        std::cerr << "fusecast serve: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "fusecast serve: " << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "fusecast serve: " << e.what() << "\n";
        return kExitConfig;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::unique_ptr<StreamingServer> server;
    try {
        server = std::make_unique<StreamingServer>(std::move(so));
    } catch (const Error& e) {
        std::cerr << "fusecast serve: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::BindFailure ? kExitBind : kExitConfig;
    }
    std::cout << "fuse1=" << *server->fuse1_port() << " control=" << *server->control_port();
    if (server->http_port()) {
        std::cout << " http=" << *server->http_port();
    }
    std::cout << " kernels=" << kernels::name(kernels::active().isa) << std::endl;
    while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server->stop();
    std::cout << "ticks=" << server->ticks() << std::endl;
    return 0;
}

struct ClientArgs {
    std::string connect;
    bool verify = false;
    std::string duration = "10s";
    std::string source_size = "320x180";
    std::string format = "raw";
};

int run_client_cmd(const ClientArgs& a)
{
    ClientOptions o;
    try {
        auto [host, port] = net::parse_address(a.connect);
        o.host = host;
        o.port = port;
        o.duration_s = parse_duration(a.duration);
        auto [sw, sh] = parse_size(a.source_size);
        o.source_width = sw;
        o.source_height = sh;
        o.verify = a.verify;
        o.format = a.format == "jpeg" ? wire::PixelFormat::jpeg : wire::PixelFormat::raw_rgb8;
    } catch (const std::exception& e) {
        std::cerr << "fusecast client: " << e.what() << "\n";
        return kExitConfig;
    }
    ClientSummary s;
    try {
        s = run_client(o);
    } catch (const Error& e) {
        std::cerr << "fusecast client: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::ConnectFailure ? kExitConnect : 1;
    }
    std::printf("frames=%llu mean_latency_ms=%.2f max_sync_spread_ms=%.2f", static_cast<unsigned long long>(s.frames),
                s.mean_latency_ms, s.max_sync_spread_ms);
    if (o.verify) {
        std::printf(" tiles_checked=%llu tiles_mismatched=%llu", static_cast<unsigned long long>(s.tiles_checked),
                    static_cast<unsigned long long>(s.tiles_mismatched));
    }
    std::printf("\n");
    if (o.verify && (s.tiles_mismatched > 0 || s.tiles_checked == 0)) {
        std::cerr << "fusecast client: verification failed"
                  << (s.first_mismatch.empty() ? std::string(": no tiles received") : ": " + s.first_mismatch) << "\n";
        return kExitVerify;
    }
    return s.frames > 0 ? 0 : 1;
}

struct BenchArgs {
    std::string mode = "fused";
    std::string channels = "1,5,10";
    std::string duration = "30s";
    std::string bandwidth;
    double base_delay_ms = 0;
    int count = 500;
    std::string out;
    std::string size = "640x360";
    std::string source_size = "320x180";
    double tick = 30;
};

std::string numbered_path(const std::string& path, int n, bool many)
{
    if (!many) {
        return path;
    }
    std::filesystem::path p(path);
    return (p.parent_path() / (p.stem().string() + "-n" + std::to_string(n) + p.extension().string())).string();
}

ReportFormat format_for(const std::string& path)
{
    return std::filesystem::path(path).extension() == ".csv" ? ReportFormat::csv : ReportFormat::json;
}

int run_bench_cmd(const BenchArgs& a)
{
    BenchOptions base;
    std::vector<int> counts;
    try {
        if (a.mode != "fused" && a.mode != "naive" && a.mode != "response") {
            throw UsageError("mode must be fused, naive or response");
        }
        counts = parse_channel_list(a.channels);
        base.duration_s = parse_duration(a.duration);
        std::tie(base.canvas_width, base.canvas_height) = parse_size(a.size);
        std::tie(base.source_width, base.source_height) = parse_size(a.source_size);
        base.tick_rate = a.tick;
        if (!(a.tick > 0) || a.count < 1 || a.base_delay_ms < 0) {
            throw UsageError("tick and count must be positive");
        }
        if (!a.bandwidth.empty()) {
            base.link = LinkParams{parse_bandwidth(a.bandwidth), 0, static_cast<Micros>(a.base_delay_ms * 1000)};
        }
    } catch (const std::exception& e) {
        std::cerr << "fusecast bench: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        for (int n : counts) {
            if (a.mode == "response") {
                auto r = run_response_bench({n, a.count, base.canvas_width, base.canvas_height, base.tick_rate});
                auto s = r.overall_ms();
                auto rtt = r.rtt_us();
                std::printf("response n=%d count=%zu mean_ms=%.2f p95_ms=%.2f max_ms=%.2f rtt_mean_us=%.0f timeouts=%zu\n",
                            n, s.count, s.mean, s.p95, s.max, rtt.mean, r.timeouts());
                if (!a.out.empty()) {
                    auto path = numbered_path(a.out, n, counts.size() > 1);
                    write_report(r, path, format_for(path));
                }
                continue;
            }
            BenchOptions o = base;
            o.channels = n;
            auto r = a.mode == "fused" ? run_fused_bench(o) : run_naive_bench(o);
            auto s = r.overall();
            std::printf("%s n=%d samples=%zu mean_ms=%.2f p95_ms=%.2f max_sync_ms=%.2f composite_us=%.0f "
                        "cpu_slope_per_s=%.5f\n",
                        a.mode.c_str(), n, s.count, r.mean_latency_us() / 1000.0, s.p95 / 1000.0,
                        static_cast<double>(r.max_sync_spread_us()) / 1000.0, r.mean_composite_time_us(),
                        r.cpu_slope_per_s());
            std::fflush(stdout);
            if (!a.out.empty()) {
                auto path = numbered_path(a.out, n, counts.size() > 1);
                write_report(r, path, format_for(path));
            }
        }
    } catch (const Error& e) {
        std::cerr << "fusecast bench: " << to_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::SetupFailure ? kExitConfig : 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fusecast: fused multi-camera streaming"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* s = app.add_subcommand("serve", "run a streaming server");
    s->add_option("--sources", serve.sources, "synthetic:N or file:DIR@FPS (repeatable)");
    s->add_option("--size", serve.size, "canvas size WxH")->capture_default_str();
    s->add_option("--source-size", serve.source_size, "synthetic camera size WxH")->capture_default_str();
    s->add_option("--tick", serve.tick, "capture ticks per second")->capture_default_str();
    s->add_option("--transport", serve.transport, "fuse1:PORT")->capture_default_str();
    s->add_option("--control", serve.control, "control port (default: fuse1 port + 1)");
    s->add_option("--http", serve.http, "browser bridge port");
    s->add_option("--token", serve.token, "control token (or FUSECAST_TOKEN)");
    s->add_option("--scene", serve.scene, "scene JSON file");
    s->add_option("--host", serve.host, "bind address")->capture_default_str();
    s->add_option("--quality", serve.quality, "JPEG quality")->capture_default_str();

    ClientArgs client;
    auto* c = app.add_subcommand("client", "subscribe to a fused stream");
    c->add_option("--connect", client.connect, "host:port")->required();
    c->add_flag("--verify", client.verify, "check tile signatures against descriptors");
    c->add_option("--duration", client.duration, "e.g. 10s")->capture_default_str();
    c->add_option("--source-size", client.source_size, "camera frame size WxH")->capture_default_str();
    c->add_option("--format", client.format, "raw or jpeg")->check(CLI::IsMember({"raw", "jpeg"}));

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "latency, load and response benches");
    b->add_option("--mode", bench.mode, "fused, naive or response")->capture_default_str();
    b->add_option("--channels", bench.channels, "comma separated camera counts")->capture_default_str();
    b->add_option("--duration", bench.duration, "per run")->capture_default_str();
    b->add_option("--bandwidth", bench.bandwidth, "emulated link, e.g. 50mbps or 6MB/s");
    b->add_option("--base-delay", bench.base_delay_ms, "emulated one-way delay in ms");
    b->add_option("--count", bench.count, "commands for the response bench")->capture_default_str();
    b->add_option("--out", bench.out, "report path (.json or .csv)");
    b->add_option("--size", bench.size, "canvas size WxH")->capture_default_str();
    b->add_option("--source-size", bench.source_size, "camera size WxH")->capture_default_str();
    b->add_option("--tick", bench.tick, "capture ticks per second")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    if (*s) {
        return run_serve(serve);
    }
    if (*c) {
        return run_client_cmd(client);
    }
    return run_bench_cmd(bench);
}
