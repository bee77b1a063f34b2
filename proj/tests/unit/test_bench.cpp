// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"

#include "fusecast/bench.hpp"
#include "fusecast/error.hpp"
#include "fusecast/metrics.hpp"
#include "fusecast/shaped_link.hpp"

using namespace fusecast;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const char* name)
{
    return (std::filesystem::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("smoothing leaves a constant series unchanged")
{
    std::vector<double> xs(50, 3.25);
    for (double sigma : {0.5, 1.0, 2.5, 10.0}) {
        for (double v : gaussian_smooth(xs, sigma)) {
            CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
        }
    }
}

TEST_CASE("impulse response is the normalised gaussian")
{
    std::vector<double> xs(41, 0.0);
    xs[20] = 1.0;
    auto out = gaussian_smooth(xs, 1.0);
    // phi(0) / sum_{|k|<=3} phi(k) with phi the unit normal density
    CHECK(out[20] == doctest::Approx(0.39905).epsilon(1e-4));
    double norm = 0;
    for (int k = -3; k <= 3; ++k) {
        norm += std::exp(-0.5 * k * k);
    }
    for (int k = -3; k <= 3; ++k) {
        CHECK(out[static_cast<std::size_t>(20 + k)] == doctest::Approx(std::exp(-0.5 * k * k) / norm).epsilon(1e-12));
        CHECK(out[static_cast<std::size_t>(20 + k)] == doctest::Approx(out[static_cast<std::size_t>(20 - k)]).epsilon(1e-15));
    }
    CHECK(out[16] == 0.0);
    CHECK(out[24] == 0.0);
}

TEST_CASE("affine series are preserved away from the ends")
{
    std::vector<double> xs(200);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = 7.5 - 0.25 * static_cast<double>(i);
    }
    for (double sigma : {1.0, 3.0}) {
        auto out = gaussian_smooth(xs, sigma);
        auto r = static_cast<std::size_t>(std::ceil(3 * sigma));
        for (std::size_t i = r; i + r < xs.size(); ++i) {
            CHECK(std::abs(out[i] - xs[i]) < 1e-9);
        }
    }
}

TEST_CASE("ends renormalise over the taps that exist")
{
    std::vector<double> xs{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    auto out = gaussian_smooth(xs, 1.0);
    double norm = 0;
    for (int k = 0; k <= 3; ++k) {
        norm += std::exp(-0.5 * k * k);
    }
    CHECK(out[0] == doctest::Approx(1.0 / norm).epsilon(1e-12));
    CHECK(gaussian_smooth(std::vector<double>{4.0}, 2.0)[0] == doctest::Approx(4.0));
    CHECK_THROWS_AS(gaussian_smooth(std::vector<double>{}, 1.0), Error);
}

TEST_CASE("smoothing agrees between kernel paths and keeps the mean of a periodic interior")
{
    std::mt19937 rng(5);
    std::normal_distribution<double> noise(0, 1);
    std::vector<double> xs(1000);
    for (auto& x : xs) {
        x = noise(rng);
    }
    auto out = gaussian_smooth(xs, 2.0);
    REQUIRE(out.size() == xs.size());
    double in_sum = std::accumulate(xs.begin() + 50, xs.end() - 50, 0.0);
    double out_sum = std::accumulate(out.begin() + 50, out.end() - 50, 0.0);
    CHECK(std::abs(in_sum - out_sum) / 900.0 < 0.05);
    double var = 0;
    for (std::size_t i = 50; i < 950; ++i) {
        var += out[i] * out[i];
    }
    CHECK(var / 900.0 < 0.5);
}

TEST_CASE("summary statistics")
{
    std::vector<double> v{5, 1, 4, 2, 3};
    auto s = summarize(v);
    CHECK(s.count == 5);
    CHECK(s.mean == doctest::Approx(3));
    CHECK(s.p50 == 3);
    CHECK(s.min == 1);
    CHECK(s.max == 5);
    CHECK(s.p99 == 5);
    CHECK(summarize(std::vector<double>{}).count == 0);
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    CHECK(least_squares_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("empty report is a header-only csv")
{
    LatencyReport r;
    auto path = temp_path("fusecast_empty.csv");
    write_report(r, path, ReportFormat::csv);
    CHECK(slurp(path) == std::string(kCsvHeader) + "\n");
    std::filesystem::remove(path);
}

TEST_CASE("latency report survives a json round trip and echoes its config in csv")
{
    LatencyReport r;
    r.config = {{"mode", "fused"}, {"channels", 5}, {"link", "loopback"}};
    r.latency = {{0, 100, 30'100}, {1, 110, 30'100}, {0, 33'400, 63'400}};
    r.sync = {{1, 30'000, 10}};
    r.load = {{1.0, 0.25, 0.05, 812.5}};

    auto jpath = temp_path("fusecast_r.json");
    write_report(r, jpath, ReportFormat::json);
    auto back = latency_report_from_json(nlohmann::json::parse(slurp(jpath)));
    CHECK(back.config == r.config);
    CHECK(back.latency == r.latency);
    CHECK(back.sync == r.sync);
    CHECK(back.load == r.load);
    CHECK(back.mean_latency_us() == doctest::Approx(30'000 - 10.0 / 2 + 0.0).epsilon(1e-3));

    auto cpath = temp_path("fusecast_r.csv");
    write_report(r, cpath, ReportFormat::csv);
    auto csv = slurp(cpath);
    CHECK(csv.rfind(kCsvHeader, 0) == 0);
    CHECK(csv.find("0,-1,config.channels,5\n") != std::string::npos);
    CHECK(csv.find("0,-1,config.mode,fused\n") != std::string::npos);
    CHECK(csv.find("30100,1,latency_us,29990\n") != std::string::npos);
    std::filesystem::remove(jpath);
    std::filesystem::remove(cpath);

    CHECK_THROWS_AS(write_report(r, "/nonexistent/dir/x.csv", ReportFormat::csv), Error);
}

TEST_CASE("response report carries reference figures without asserting them")
{
    ResponseReport r;
    r.samples = {{CommandKind::select, "a", 40'000, 200, false}, {CommandKind::select, "b", 0, 150, true}};
    auto j = report_to_json(r);
    CHECK(j["summary"]["timeouts"] == 1);
    CHECK(j["summary"]["reference"]["mean_ms"] == 600);
    CHECK(j["summary"]["response_ms"]["mean"].get<double>() == doctest::Approx(40.0));
    auto back = response_report_from_json(j);
    CHECK(back.samples == r.samples);
}

TEST_CASE("shaped link paces writers at its rate")
{
    ShapedLink link(1'000'000, 100'000);
    Micros t0 = monotonic_us();
    for (int i = 0; i < 10; ++i) {
        link.acquire(50'000);
    }
    double elapsed = static_cast<double>(monotonic_us() - t0) / 1e6;
    // 500 kB at 1 MB/s with 100 kB already in the bucket
    CHECK(elapsed > 0.35);
    CHECK(elapsed < 0.7);
}

TEST_CASE("short fused and naive runs produce sane reports")
{
    BenchOptions o;
    o.channels = 2;
    o.duration_s = 1.5;
    o.warmup_s = 0.5;
    o.load_interval_s = 0.5;
    auto fused = run_fused_bench(o);
    CHECK(fused.latency.size() > 50);
    CHECK(fused.per_channel().size() == 2);
    CHECK(fused.mean_latency_us() > 0);
    CHECK(fused.mean_latency_us() < 200'000);
    CHECK(fused.load.size() == 3);
    CHECK(fused.max_sync_spread_us() < 66'667);

    auto naive = run_naive_bench(o);
    CHECK(naive.per_channel().size() == 2);
    CHECK(naive.mean_latency_us() > 0);

    o.channels = 0;
    CHECK_THROWS_AS(run_fused_bench(o), Error);
}
