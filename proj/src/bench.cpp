// SPDX-License-Identifier: Apache-2.0
#include "fusecast/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "fusecast/error.hpp"
#include "fusecast/server.hpp"

namespace fusecast {

namespace {

using namespace std::chrono_literals;

void check_options(const BenchOptions& o)
{
    if (o.channels < 1 || o.channels > kMaxDevices) {
        throw Error(ErrorCode::SetupFailure, "channel count must be in 1.." + std::to_string(kMaxDevices));
    }
    if (!(o.duration_s > 0) || o.warmup_s < 0 || !(o.load_interval_s > 0)) {
        throw Error(ErrorCode::SetupFailure, "durations must be positive");
    }
    if (o.link && !(o.link->bandwidth_bytes_per_s > 0)) {
        throw Error(ErrorCode::SetupFailure, "link bandwidth must be positive");
    }
}

std::shared_ptr<ShapedLink> make_link(const BenchOptions& o)
{
    if (!o.link) {
        return nullptr;
    }
    // One write chunk: every frame pays its serialisation time.
    double burst = o.link->burst_bytes > 0 ? o.link->burst_bytes : 64.0 * 1024;
    return std::make_shared<ShapedLink>(o.link->bandwidth_bytes_per_s, burst, o.link->base_delay_us);
}

nlohmann::json config_echo(const BenchOptions& o, const char* mode)
{
    nlohmann::json j{{"mode", mode},
                     {"channels", o.channels},
                     {"duration_s", o.duration_s},
                     {"warmup_s", o.warmup_s},
                     {"canvas", {{"width", o.canvas_width}, {"height", o.canvas_height}}},
                     {"tick_rate", o.tick_rate},
                     {"source_rate", o.source_rate},
                     {"hardware_threads", std::max(1u, std::thread::hardware_concurrency())}};
    if (std::string(mode) == "fused") {
        j["source"] = {{"width", o.source_width}, {"height", o.source_height}};
    }
    if (o.link) {
        j["link"] = {{"bandwidth_bytes_per_s", o.link->bandwidth_bytes_per_s},
                     {"base_delay_us", o.link->base_delay_us}};
    } else {
        j["link"] = "loopback";
    }
    return j;
}

// Reads one stream until `stop`, recording every descriptor of frames that arrive after `from`.
void read_stream(StreamClient& client, const std::atomic<bool>& stop, Micros from, std::vector<LatencyRecord>& out)
{
    client.set_read_timeout(500ms);
    while (!stop.load()) {
        std::optional<ReceivedFrame> rf;
        try {
            rf = client.next();
        } catch (const Error&) {
            if (stop.load()) {
                break;
            }
            continue; // read timeout
        }
        if (!rf) {
            break;
        }
        if (rf->arrival_ts < from) {
            continue;
        }
        for (const auto& d : rf->frame.header.channels) {
            out.push_back({d.channel_id, static_cast<Micros>(d.capture_ts_us), rf->arrival_ts});
        }
    }
}

// Samples CPU use every interval for `duration`; composite time comes from the callers' counters.
template <typename SourceCpu, typename CompositeMean>
std::vector<LoadSample> sample_load(const BenchOptions& o, SourceCpu source_cpu, CompositeMean composite_mean)
{
    const double cores = std::max(1u, std::thread::hardware_concurrency());
    std::vector<LoadSample> samples;
    const Micros start = monotonic_us();
    const auto interval = static_cast<Micros>(o.load_interval_s * 1e6);
    const auto end = start + static_cast<Micros>(o.duration_s * 1e6);
    Micros prev_t = start;
    Micros prev_cpu = process_cpu_us();
    Micros prev_src = source_cpu();
    for (Micros next = start + interval; next <= end; next += interval) {
        std::this_thread::sleep_for(std::chrono::microseconds(next - monotonic_us()));
        Micros t = monotonic_us();
        Micros cpu = process_cpu_us();
        Micros src = source_cpu();
        double wall = static_cast<double>(t - prev_t) * cores;
        samples.push_back({static_cast<double>(t - start) / 1e6, static_cast<double>(cpu - prev_cpu) / wall,
                           static_cast<double>(src - prev_src) / wall, composite_mean()});
        prev_t = t;
        prev_cpu = cpu;
        prev_src = src;
    }
    return samples;
}

SourceTiming spread_timing(Micros start_at, double period_us, std::size_t k, std::size_t n)
{
    double age = 0.1 + 0.8 * (static_cast<double>(k) + 0.5) / static_cast<double>(n);
    return {start_at, static_cast<Micros>(std::llround((1.0 - age) * period_us))};
}

} // namespace

LatencyReport run_fused_bench(const BenchOptions& o)
{
    check_options(o);
    LatencyReport report;
    report.config = config_echo(o, "fused");

    ServerOptions so;
    so.scene = validate_config(paired_scene(o.channels, o.canvas_width, o.canvas_height, o.tick_rate));
    for (int i = 0; i < o.channels; ++i) {
        so.sources.push_back({ChannelId(i), SourceKind::synthetic, o.source_rate, o.source_width, o.source_height, {}});
    }
    so.fuse1_port = 0;
    so.link = make_link(o);

    std::mutex m;
    std::atomic<Micros> window_start{std::numeric_limits<Micros>::max()};
    std::vector<SyncRecord> sync;
    Micros composite_sum = 0;
    std::uint64_t composite_count = 0;
    so.on_frame = [&](const FusedFramePtr& f, const TickStats& stats) {
        std::lock_guard lock(m);
        composite_sum += stats.composite_cpu_us;
        ++composite_count;
        if (f->composite_ts < window_start.load() || f->channels.empty()) {
            return;
        }
        auto [lo, hi] = std::minmax_element(f->channels.begin(), f->channels.end(),
                                            [](const auto& a, const auto& b) { return a.capture_ts < b.capture_ts; });
        sync.push_back({f->frame_seq, f->composite_ts, hi->capture_ts - lo->capture_ts});
    };

    StreamingServer server(std::move(so));
    auto client = StreamClient::connect("127.0.0.1", *server.fuse1_port());
    std::atomic<bool> stop{false};
    const Micros from = server.clock().now() + static_cast<Micros>(o.warmup_s * 1e6);
    std::thread reader([&] { read_stream(client, stop, from, report.latency); });

    std::this_thread::sleep_for(std::chrono::microseconds(from - server.clock().now()));
    window_start = server.clock().now();
    {
        std::lock_guard lock(m);
        composite_sum = 0;
        composite_count = 0;
    }
    report.load = sample_load(
        o, [&] { return server.source_cpu_us(); },
        [&] {
            std::lock_guard lock(m);
            double mean = composite_count ? static_cast<double>(composite_sum) / static_cast<double>(composite_count) : 0;
            composite_sum = 0;
            composite_count = 0;
            return mean;
        });
    const Micros window_end = server.clock().now();

    stop = true;
    reader.join();
    client.close();
    server.stop();
    std::erase_if(report.latency, [&](const LatencyRecord& r) { return r.render_ts > window_end; });
    std::lock_guard lock(m);
    std::erase_if(sync, [&](const SyncRecord& s) { return s.t_us > window_end; });
    report.sync = std::move(sync);
    return report;
}

LatencyReport run_naive_bench(const BenchOptions& o)
{
    check_options(o);
    LatencyReport report;
    report.config = config_echo(o, "naive");

    StreamClock clock;
    auto link = make_link(o);
    const auto n = static_cast<std::size_t>(o.channels);
    std::vector<std::unique_ptr<FrameFeed>> feeds;
    std::vector<std::unique_ptr<StreamServer>> servers;
    for (std::size_t i = 0; i < n; ++i) {
        feeds.push_back(std::make_unique<FrameFeed>());
        servers.push_back(std::make_unique<StreamServer>(*feeds.back(), clock, StreamServerOptions{"127.0.0.1", 0, link, 80}));
    }

    // Every camera is its own full-resolution stream.
    std::vector<std::unique_ptr<SourceHandle>> sources;
    const Micros start_at = clock.now() + 100'000;
    const Rect full{0, 0, o.canvas_width, o.canvas_height};
    for (std::size_t i = 0; i < n; ++i) {
        SourceSpec spec{ChannelId(static_cast<int>(i)), SourceKind::synthetic, o.source_rate, o.canvas_width,
                        o.canvas_height, {}};
        FrameFeed* feed = feeds[i].get();
        sources.push_back(run_source(
            spec,
            [feed, full](FramePtr f) {
                auto fused = std::make_shared<FusedFrame>();
                fused->frame_seq = f->seq;
                fused->composite_ts = f->capture_ts;
                fused->image = f->image;
                fused->channels.push_back({f->channel, f->seq, f->capture_ts, full});
                feed->publish(std::move(fused));
                return true;
            },
            clock, spread_timing(start_at, 1e6 / o.source_rate, i, n)));
    }

    std::vector<StreamClient> clients;
    for (auto& s : servers) {
        clients.push_back(StreamClient::connect("127.0.0.1", s->port()));
    }
    std::atomic<bool> stop{false};
    const Micros from = clock.now() + static_cast<Micros>(o.warmup_s * 1e6);
    std::vector<std::vector<LatencyRecord>> per(n);
    std::vector<std::thread> readers;
    for (std::size_t i = 0; i < n; ++i) {
        readers.emplace_back([&, i] { read_stream(clients[i], stop, from, per[i]); });
    }

    std::this_thread::sleep_for(std::chrono::microseconds(from - clock.now()));
    report.load = sample_load(
        o,
        [&] {
            Micros total = 0;
            for (const auto& s : sources) {
                total += s->cpu_us();
            }
            return total;
        },
        [] { return 0.0; });
    const Micros window_end = clock.now();

    stop = true;
    for (auto& t : readers) {
        t.join();
    }
    for (auto& c : clients) {
        c.close();
    }
    for (auto& s : servers) {
        s->stop();
    }
    for (auto& s : sources) {
        s->stop();
    }
    for (auto& f : feeds) {
        f->close();
    }
    for (auto& v : per) {
        for (const auto& r : v) {
            if (r.render_ts <= window_end) {
                report.latency.push_back(r);
            }
        }
    }
    std::sort(report.latency.begin(), report.latency.end(),
              [](const auto& a, const auto& b) { return a.render_ts < b.render_ts; });
    return report;
}

namespace {

// Arrival log of one subscriber, searchable by frame seq.
class ArrivalLog {
public:
    void record(std::uint64_t seq, Micros arrival)
    {
        std::lock_guard lock(mutex_);
        log_.push_back({seq, arrival});
        if (log_.size() > 4096) {
            log_.pop_front();
        }
        cv_.notify_all();
    }

    void close()
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

    /// Arrival of the first frame with seq >= min_seq, waiting until `deadline` (monotonic).
    std::optional<Micros> first_at_or_after(std::uint64_t min_seq, Micros deadline_mono)
    {
        std::unique_lock lock(mutex_);
        for (;;) {
            for (const auto& [seq, t] : log_) {
                if (seq >= min_seq) {
                    return t;
                }
            }
            auto now = monotonic_us();
            if (closed_ || now >= deadline_mono) {
                return std::nullopt;
            }
            cv_.wait_for(lock, std::chrono::microseconds(deadline_mono - now));
        }
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::pair<std::uint64_t, Micros>> log_;
    bool closed_ = false;
};

} // namespace

ResponseReport response_bench(const ResponseTarget& target, const std::vector<ControlCommand>& script, int repetitions,
                              Micros timeout_us)
{
    if (script.empty() || repetitions < 1) {
        throw Error(ErrorCode::SetupFailure, "empty command script");
    }
    ResponseReport report;
    report.config = {{"commands", script.size() * static_cast<std::size_t>(repetitions)},
                     {"repetitions", repetitions},
                     {"timeout_us", timeout_us}};

    auto stream = StreamClient::connect(target.host, target.stream_port);
    auto control = ControlClient::connect(target.host, target.control_port);
    if (target.token) {
        auto reply = control.request({{"type", "hello"}, {"token", *target.token}});
        if (reply.value("type", "") != "welcome") {
            throw Error(ErrorCode::Unauthorized, "control handshake rejected");
        }
    }

    ArrivalLog arrivals;
    std::atomic<bool> stop{false};
    stream.set_read_timeout(200ms);
    std::thread reader([&] {
        while (!stop.load()) {
            try {
                auto rf = stream.next();
                if (!rf) {
                    break;
                }
                arrivals.record(rf->frame.header.frame_seq, rf->arrival_ts);
            } catch (const Error&) {
            }
        }
        arrivals.close();
    });

    const StreamClock& clock = stream.clock();
    int counter = 0;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (ControlCommand cmd : script) {
            ResponseSample sample;
            sample.kind = cmd.kind;
            cmd.id = "r-" + std::to_string(counter++);
            sample.id = cmd.id;

            Micros ping_at = clock.now();
            control.request({{"type", "ping"}, {"id", "p-" + cmd.id}});
            sample.rtt_us = clock.now() - ping_at;

            cmd.client_input_ts = clock.now();
            try {
                auto reply = control.request(command_to_json(cmd), std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::microseconds(timeout_us)));
                if (reply.value("type", "") != "ack") {
                    throw Error(ErrorCode::MalformedCommand, "command rejected: " + reply.dump());
                }
                ControlAck ack{reply.at("id").get<std::string>(), reply.at("applied_frame_seq").get<std::uint64_t>(),
                               reply.value("server_ts_us", Micros{0})};
                Micros deadline = clock.epoch() + cmd.client_input_ts + timeout_us;
                auto arrival = arrivals.first_at_or_after(ack.applied_frame_seq, deadline);
                sample.response_us = measure_response(cmd, ack, arrival, timeout_us);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::AckTimeout) {
                    stop = true;
                    stream.close();
                    reader.join();
                    throw;
                }
                sample.timeout = true;
            }
            report.samples.push_back(sample);
        }
    }
    stop = true;
    stream.close();
    reader.join();
    return report;
}

ResponseReport run_response_bench(const ResponseBenchOptions& o)
{
    if (o.channels < 1 || o.channels > kMaxDevices || o.count < 1) {
        throw Error(ErrorCode::SetupFailure, "bad response bench parameters");
    }
    ServerOptions so;
    so.scene = validate_config(paired_scene(o.channels, o.canvas_width, o.canvas_height, o.tick_rate));
    for (int i = 0; i < o.channels; ++i) {
        so.sources.push_back({ChannelId(i), SourceKind::synthetic, 30, 320, 180, {}});
    }
    so.fuse1_port = 0;
    so.control_port = 0;
    StreamingServer server(std::move(so));
    std::this_thread::sleep_for(300ms);

    std::vector<ControlCommand> script;
    for (int i = 0; i < o.count; ++i) {
        ControlCommand c;
        c.kind = CommandKind::select;
        c.channel = ChannelId(i % o.channels);
        script.push_back(c);
    }
    auto report = response_bench({"127.0.0.1", *server.fuse1_port(), *server.control_port(), std::nullopt}, script, 1);
    report.config["channels"] = o.channels;
    report.config["tick_rate"] = o.tick_rate;
    report.config["canvas"] = {{"width", o.canvas_width}, {"height", o.canvas_height}};
    server.stop();
    return report;
}

} // namespace fusecast
