// End-to-end coverage of the command-line tool: argument handling, offline
// query/ingest/simulate flows, and parity between server and offline modes.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <string>
#include <thread>
#include <vector>

#include "support.hpp"
#include "tvws/config.hpp"
#include "tvws/service.hpp"

using namespace tvws;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Stops the listener and joins its thread even when an assertion unwinds.
struct ServerGuard {
    HttpService& http;
    std::thread thread;
    ~ServerGuard() {
        http.stop();
        if (thread.joinable()) thread.join();
    }
};

} // namespace

TEST_CASE("argument errors exit with the validation code") {
    sup::TempDir dir;

    CHECK(sup::run_cli(dir, "").exit_code == 2);
    CHECK(sup::run_cli(dir, "query --y 5").exit_code == 2);
    CHECK(sup::run_cli(dir, "ingest --kind bogus --file x").exit_code == 2);
    CHECK(sup::run_cli(dir, "simulate --scale 0 --city miami").exit_code == 2);
    CHECK(sup::run_cli(dir, "simulate --base sometimes --scale 0.01").exit_code == 2);
    CHECK(sup::run_cli(dir, "query --x 1 --y 1 --server not-an-endpoint").exit_code == 2);

    const auto help = sup::run_cli(dir, "--help");
    CHECK(help.exit_code == 0);
    CHECK(contains(help.out, "simulate"));
    CHECK(contains(help.out, "query"));
    CHECK(contains(help.out, "ingest"));
    CHECK(contains(help.out, "serve"));
}

TEST_CASE("offline queries print the availability table") {
    sup::TempDir dir;

    const auto r = sup::run_cli(dir, "query --x 1000 --y 500 --power 100 --time 1000");
    REQUIRE(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 28); // header + the default 27-channel plan
    CHECK(contains(lines[0], "channel"));
    CHECK(contains(lines[0], "max_power_mw"));
    CHECK(contains(lines[0], "reliability"));
    CHECK(contains(lines[0], "layer"));
    CHECK(contains(lines[0], "valid_for_s"));
    int prev = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const int ch = std::stoi(lines[i]);
        CHECK(ch > prev);
        prev = ch;
        CHECK(contains(lines[i], "geodb"));
        CHECK(contains(lines[i], "86400.000"));
        CHECK(contains(lines[i], "1.0000"));
    }
    CHECK(std::stoi(lines[1]) == 21);
    CHECK(prev == 47);

    const auto outside = sup::run_cli(dir, "query --x 50000 --y 0 --time 1000");
    CHECK(outside.exit_code == 4);
    CHECK(contains(outside.err, "error:"));

    CHECK(sup::run_cli(dir, "query --x 1 --y 1 --config " + dir.file("absent.json")).exit_code == 3);
    CHECK(sup::run_cli(dir, "query --x 1 --y 1 --server 127.0.0.1:1").exit_code == 3);
}

TEST_CASE("simulate runs are reproducible and render their artifacts") {
    sup::TempDir dir;
    const std::string cmd = "simulate --city miami --powers 100 --scale 0.01 --seed 7 --threads 2";

    const auto r1 = sup::run_cli(dir, cmd);
    const auto r2 = sup::run_cli(dir, cmd);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out == r2.out);

    const auto lines = lines_of(r1.out);
    REQUIRE(lines.size() == 3); // header, one power row, fingerprint
    CHECK(contains(lines[0], "pct_gaining"));
    CHECK(contains(lines[0], "target_pct"));
    CHECK(contains(lines[1], "miami"));
    CHECK(contains(lines[1], "100.0")); // published share target
    CHECK(contains(lines[1], "12.20")); // published average target
    CHECK(contains(lines[2], "# miami scenario fingerprint "));

    SUBCASE("multi-city run covers both presets") {
        const auto r = sup::run_cli(dir, "simulate --scale 0.004 --seed 3 --powers 5,40 --threads 2");
        REQUIRE(r.exit_code == 0);
        const auto all = lines_of(r.out);
        REQUIRE(all.size() == 7); // header + 2 cities x (2 rows + fingerprint)
        CHECK(contains(r.out, "new_york"));
        CHECK(contains(r.out, "miami"));
        CHECK(contains(all[1], "99.0")); // 5 mW share target for the first city
        CHECK(contains(all[1], "4.00"));
    }

    SUBCASE("csv and chart artifacts") {
        const std::string csv = dir.file("gain.csv");
        const std::string svg = dir.file("gain.svg");
        const auto r = sup::run_cli(dir, cmd + " --out " + csv + " --chart " + svg);
        REQUIRE(r.exit_code == 0);

        const std::string table = sup::read_file(csv);
        CHECK(table.rfind("city,power_mw,pct_gaining,avg_gained,stderr,paper_target_pct,"
                          "paper_target_avg\n",
                          0) == 0);
        CHECK(contains(table, "\nmiami,100,"));
        CHECK(contains(table, ",100,12.2\n"));

        const std::string chart = sup::read_file(svg);
        CHECK(chart.rfind("<svg", 0) == 0);
        CHECK(contains(chart, "</svg>"));
        CHECK(contains(chart, "miami"));

        // The CSV is thread-count invariant end to end.
        const std::string csv2 = dir.file("gain2.csv");
        REQUIRE(sup::run_cli(dir, cmd + " --threads 1 --out " + csv2).exit_code == 0);
        CHECK(sup::read_file(csv2) == table);
    }

    SUBCASE("scenario files are interchangeable with presets") {
        const std::string scn = dir.file("scenario.json");
        sup::write_file(scn, "{\"city\": \"miami\", \"seed\": 7, \"scale\": 0.01}");
        const auto from_file =
            sup::run_cli(dir, "simulate --city " + scn + " --powers 100 --threads 2");
        REQUIRE(from_file.exit_code == 0);
        CHECK(from_file.out == r1.out);

        sup::write_file(scn, "{ this is not json");
        CHECK(sup::run_cli(dir, "simulate --city " + scn).exit_code == 2);
        CHECK(sup::run_cli(dir, "simulate --city " + dir.file("missing.json")).exit_code == 3);
    }
}

TEST_CASE("ingest counts accepted and rejected records") {
    sup::TempDir dir;

    SUBCASE("empty input") {
        const std::string f = dir.file("empty.jsonl");
        sup::write_file(f, "");
        const auto r = sup::run_cli(dir, "ingest --kind spectrum --file " + f);
        CHECK(r.exit_code == 0);
        CHECK(r.out == "accepted 0 rejected 0\n");
    }

    SUBCASE("spectrum lines: bare bodies, envelopes, garbage, stale backdating") {
        const GeoPoint loc{500.0, 400.0};
        const std::string fresh =
            wire::to_json(sup::sensing_report("s1", loc, 1000.0, {{30, -95.0}})).dump();
        const std::string stale =
            wire::to_json(sup::sensing_report("s1", loc, 800.0, {{30, -95.0}})).dump();
        const std::string enveloped =
            sup::envelope("spectrum_report",
                          wire::to_json(sup::sensing_report("s1", loc, 1005.0, {{30, -110.0}})))
                .dump();
        const std::string f = dir.file("mixed.jsonl");
        sup::write_file(f, "# spectrum capture\n" + fresh + "\nnot json{\n" + stale + "\n" +
                               enveloped + "\n");
        const auto r = sup::run_cli(dir, "ingest --kind spectrum --file " + f);
        CHECK(r.exit_code == 0);
        CHECK(r.out == "accepted 2 rejected 2\n");
    }

    SUBCASE("tv events") {
        const std::string a =
            wire::to_json(sup::tv_event("obs", {500.0, 400.0}, 100.0, PowerState::on, 30, 0.9))
                .dump();
        const std::string b =
            wire::to_json(sup::tv_event("obs", {500.0, 400.0}, 107.0, PowerState::off)).dump();
        const std::string f = dir.file("tv.jsonl");
        sup::write_file(f, a + "\n" + b + "\n");
        const auto r = sup::run_cli(dir, "ingest --kind tv --file " + f);
        CHECK(r.exit_code == 0);
        CHECK(r.out == "accepted 2 rejected 0\n");
    }

    SUBCASE("transmitter tables") {
        const std::string f = dir.file("stations.txt");
        sup::write_file(f, "tx-a,300,300,25,500,80\n# relay\ntx-b,900,700,31,1000,120\n");
        const auto r = sup::run_cli(dir, "ingest --kind transmitters --file " + f);
        CHECK(r.exit_code == 0);
        CHECK(r.out == "accepted 2 rejected 0\n");

        sup::write_file(f, "tx-a,300,300\n");
        CHECK(sup::run_cli(dir, "ingest --kind transmitters --file " + f).exit_code == 2);
    }

    SUBCASE("missing input file") {
        CHECK(sup::run_cli(dir, "ingest --kind spectrum --file " + dir.file("nope")).exit_code == 3);
    }
}

TEST_CASE("a served instance answers exactly like the offline path") {
    sup::TempDir dir;
    sup::write_file(dir.file("stations.txt"), "tx-1,1000,500,30,1000,100\n");
    const std::string cfg_path = dir.file("world.json");
    sup::write_file(cfg_path, "{\"fixtures\": {\"transmitters\": \"stations.txt\"}}");

    // Expected free-channel count straight from the library.
    const WorldConfig cfg = WorldConfig::load_file(cfg_path);
    const double t_query = std::floor(std::time(nullptr));
    Resolver oracle(cfg.resolver_deps());
    preload_fixtures(oracle, cfg);
    const QueryResponse expect =
        oracle.resolve_query({GeoPoint{300.0, 300.0}, PowerClass{100.0}, t_query});
    REQUIRE(expect.items.size() > 0);
    REQUIRE(expect.items.size() < 27); // the fixture must actually block something

    char t_arg[32];
    std::snprintf(t_arg, sizeof t_arg, "%.0f", t_query);
    const std::string query_args =
        std::string("query --x 300 --y 300 --power 100 --time ") + t_arg;

    const auto offline = sup::run_cli(dir, query_args + " --config " + cfg_path);
    REQUIRE(offline.exit_code == 0);
    CHECK(lines_of(offline.out).size() == expect.items.size() + 1);

    // Stand up the same world over HTTP, seeded the way `serve` seeds it.
    Service svc(cfg.resolver_deps(), cfg.service_options());
    {
        const auto txs = TransmitterRegistry::load_file(cfg.transmitters_file);
        wire::json arr = wire::json::array();
        for (const auto& tx : txs) arr.push_back(wire::to_json(tx));
        const auto reply =
            svc.handle(sup::envelope("admin_load", wire::json{{"transmitters", arr}}));
        REQUIRE(reply.status == 200);
    }
    HttpService http(svc);
    const int port = http.bind_any_port("127.0.0.1");
    REQUIRE(port > 0);
    ServerGuard guard{http, std::thread([&] { http.listen_after_bind(); })};
    REQUIRE(http.wait_until_ready());
    const std::string endpoint = "127.0.0.1:" + std::to_string(port);

    const auto served = sup::run_cli(dir, query_args + " --server " + endpoint);
    CHECK(served.exit_code == 0);
    CHECK(served.out == offline.out);

    SUBCASE("bulk ingest over http applies the server's clock gates") {
        const std::string fresh =
            wire::to_json(sup::sensing_report("s9", {300.0, 300.0}, t_query, {{30, -95.0}})).dump();
        const std::string skewed =
            wire::to_json(sup::sensing_report("s9", {300.0, 300.0}, t_query - 100000.0,
                                              {{30, -95.0}}))
                .dump();
        const std::string f = dir.file("net.jsonl");
        sup::write_file(f, fresh + "\n" + skewed + "\n");
        const auto r =
            sup::run_cli(dir, "ingest --kind spectrum --file " + f + " --server " + endpoint);
        CHECK(r.exit_code == 0);
        CHECK(r.out == "accepted 1 rejected 1\n");
    }

    SUBCASE("a second listener on the same port fails loudly") {
        const auto clash = sup::run_cli(
            dir, "serve --config " + cfg_path + " --listen 127.0.0.1:" + std::to_string(port));
        CHECK(clash.exit_code == 3);
        CHECK(contains(clash.out, "loaded 1 transmitters"));
        CHECK(contains(clash.out, "listening on 127.0.0.1:" + std::to_string(port)));
        CHECK(contains(clash.err, "error:"));
    }
}
