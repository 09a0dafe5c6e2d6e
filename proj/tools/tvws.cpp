#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>

#include "tvws/chart.hpp"
#include "tvws/config.hpp"
#include "tvws/errors.hpp"
#include "tvws/service.hpp"
#include "tvws/simulator.hpp"
#include "tvws/wire.hpp"

namespace {

using tvws::wire::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitDomain = 4;

double system_now_s() {
    using clock = std::chrono::system_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Endpoint {
    std::string host;
    int port = 0;
};

Endpoint parse_endpoint(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
        throw tvws::ValidationError("address must be host:port, got " + addr, "server");
    Endpoint ep;
    ep.host = addr.substr(0, colon);
    try {
        std::size_t pos = 0;
        ep.port = std::stoi(addr.substr(colon + 1), &pos);
        if (pos != addr.size() - colon - 1) throw std::invalid_argument(addr);
    } catch (const std::exception&) {
        throw tvws::ValidationError("port must be an integer in " + addr, "server");
    }
    if (ep.port <= 0 || ep.port > 65535)
        throw tvws::ValidationError("port out of range in " + addr, "server");
    return ep;
}

json post_envelope(const Endpoint& ep, const std::string& path, const std::string& kind,
                   json body, int* status_out = nullptr) {
    httplib::Client client(ep.host, ep.port);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(30, 0);
    const json envelope = tvws::wire::to_json(tvws::wire::make_envelope(kind, std::move(body)));
    const auto res = client.Post(path, envelope.dump(), "application/json");
    if (!res) throw tvws::IoError("cannot reach server " + ep.host + ":" + std::to_string(ep.port));
    if (status_out) *status_out = res->status;
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded())
        throw tvws::IoError("server returned a non-JSON reply (status " +
                            std::to_string(res->status) + ")");
    return reply;
}

tvws::WorldConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return tvws::WorldConfig{};
    return tvws::WorldConfig::load_file(path);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw tvws::IoError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw tvws::IoError("write to " + path + " failed");
}

// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string config_path;
    std::string listen = "127.0.0.1:8080";
};

int run_serve(const ServeArgs& args) {
    const tvws::WorldConfig cfg = load_config_or_default(args.config_path);
    tvws::Service service(cfg.resolver_deps(), cfg.service_options());
    const std::size_t replayed = service.recover();

    if (service.seq() == 0 && !cfg.transmitters_file.empty()) {
        const auto txs = tvws::TransmitterRegistry::load_file(cfg.transmitters_file);
        json arr = json::array();
        for (const auto& tx : txs) arr.push_back(tvws::wire::to_json(tx));
        const auto reply = service.handle(tvws::wire::to_json(
            tvws::wire::make_envelope("admin_load", json{{"transmitters", arr}})));
        if (reply.status != 200) {
            std::cerr << "transmitter fixture rejected: " << reply.body.dump() << "\n";
            return kExitValidation;
        }
        std::cout << "loaded " << reply.body.at("count") << " transmitters from "
                  << cfg.transmitters_file << "\n";
    }

    const Endpoint ep = parse_endpoint(args.listen);
    tvws::HttpService http(service);
    std::cout << "recovered " << replayed << " events (seq " << service.seq() << ")\n";
    std::cout << "listening on " << ep.host << ":" << ep.port << "\n";
    if (!http.listen(ep.host, ep.port))
        throw tvws::IoError("cannot listen on " + args.listen);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::vector<std::string> cities{"new_york", "miami"};
    std::vector<double> powers;
    std::uint64_t seed = 1;
    bool seed_set = false;
    double scale = 1.0;
    std::string base = "operational";
    int threads = 0;
    std::string out_path;
    std::string chart_path;
};

tvws::CityScenario scenario_for(const std::string& name, const SimulateArgs& args) {
    tvws::CityScenario city;
    if (name == "ny" || name == "new_york")
        city = tvws::CityScenario::new_york(args.seed);
    else if (name == "miami")
        city = tvws::CityScenario::miami(args.seed);
    else {
        city = tvws::load_scenario_file(name);
        if (args.seed_set) city.seed = args.seed;
    }
    city.broadcast_base = args.base == "all" ? tvws::BroadcastBase::of_all
                                             : tvws::BroadcastBase::of_operational;
    if (args.scale != 1.0) city = city.scaled(args.scale);
    city.validate();
    return city;
}

int run_simulate(const SimulateArgs& args) {
    if (args.base != "operational" && args.base != "all")
        throw tvws::ValidationError("--base must be operational or all", "base");
    if (args.scale <= 0.0) throw tvws::ValidationError("--scale must be positive", "scale");

    const tvws::SeparationTable table = tvws::SeparationTable::builtin();
    std::vector<tvws::PowerClass> ladder;
    if (args.powers.empty()) {
        ladder = tvws::default_power_ladder();
    } else {
        for (double mw : args.powers) {
            if (mw <= 0) throw tvws::ValidationError("--powers entries must be positive", "powers");
            ladder.push_back(tvws::PowerClass{mw});
        }
        std::sort(ladder.begin(), ladder.end());
        ladder.erase(std::unique(ladder.begin(), ladder.end()), ladder.end());
    }

    std::vector<tvws::CityScenario> cities;
    for (const std::string& name : args.cities) cities.push_back(scenario_for(name, args));

    tvws::GainOptions options;
    options.threads = args.threads;
    const std::vector<tvws::GainStats> stats = tvws::run_experiment(cities, table, ladder, options);

    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %9s %12s %14s %12s %11s %11s\n", "city", "power_mw",
                  "pct_gaining", "avg_gaining", "avg_all", "target_pct", "target_avg");
    std::cout << buf;
    for (const tvws::GainStats& run : stats) {
        const auto& targets = tvws::reference_targets(run.city);
        for (const tvws::PowerGain& g : run.per_power) {
            const auto t = targets.find(g.power_mw);
            std::string tp = "-", ta = "-";
            if (t != targets.end()) {
                std::snprintf(buf, sizeof buf, "%.1f", t->second.pct);
                tp = buf;
                std::snprintf(buf, sizeof buf, "%.2f", t->second.avg);
                ta = buf;
            }
            std::snprintf(buf, sizeof buf, "%-10s %9g %12.4f %14.4f %12.4f %11s %11s\n",
                          run.city.c_str(), g.power_mw, g.pct_gaining, g.avg_gained_over_gaining,
                          g.avg_gained_over_all, tp.c_str(), ta.c_str());
            std::cout << buf;
        }
        std::cout << "# " << run.city << " scenario fingerprint " << run.fingerprint << "\n";
    }

    if (!args.out_path.empty()) write_text_file(args.out_path, tvws::results_csv(stats));
    if (!args.chart_path.empty()) write_text_file(args.chart_path, tvws::gain_chart_svg(stats));
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct QueryArgs {
    double x = 0.0;
    double y = 0.0;
    double power_mw = 100.0;
    double time = -1.0; // <0: current system time
    std::string server;
    std::string config_path;
};

void print_query_items(const json& channels, double req_time) {
    if (!channels.is_array() || channels.empty()) {
        std::cout << "no channels available\n";
        return;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%8s %13s %12s %13s %12s\n", "channel", "max_power_mw",
                  "reliability", "layer", "valid_for_s");
    std::cout << buf;
    for (const json& item : channels) {
        std::snprintf(buf, sizeof buf, "%8d %13g %12.4f %13s %12.3f\n",
                      item.at("channel").get<int>(), item.at("max_power_mw").get<double>(),
                      item.at("reliability").get<double>(),
                      item.at("source_layer").get<std::string>().c_str(),
                      item.at("valid_until").get<double>() - req_time);
        std::cout << buf;
    }
}

int run_query(const QueryArgs& args) {
    const double req_time = args.time < 0 ? system_now_s() : args.time;
    const json body{{"loc", json{{"x", args.x}, {"y", args.y}}},
                    {"power_mw", args.power_mw},
                    {"time", req_time}};

    if (!args.server.empty()) {
        int status = 0;
        const json reply = post_envelope(parse_endpoint(args.server), "/v1/query", "query", body,
                                         &status);
        if (status == 200 && reply.contains("channels")) {
            print_query_items(reply.at("channels"), req_time);
            return kExitOk;
        }
        std::cerr << "query rejected (status " << status << "): " << reply.dump() << "\n";
        return status == 404 ? kExitDomain : kExitValidation;
    }

    const tvws::WorldConfig cfg = load_config_or_default(args.config_path);
    tvws::Resolver resolver(cfg.resolver_deps());
    tvws::preload_fixtures(resolver, cfg);
    const tvws::QueryRequest req{tvws::GeoPoint{args.x, args.y}, tvws::PowerClass{args.power_mw},
                                 req_time};
    const tvws::QueryResponse resp = resolver.resolve_query(req); // throws OutOfAreaError
    print_query_items(tvws::wire::to_json(resp).at("channels"), req_time);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string kind;
    std::string file;
    std::string server;
    std::string config_path;
};

int run_ingest(const IngestArgs& args) {
    std::size_t accepted = 0, rejected = 0;

    if (args.kind == "transmitters") {
        const auto txs = tvws::TransmitterRegistry::load_file(args.file);
        if (!args.server.empty()) {
            json arr = json::array();
            for (const auto& tx : txs) arr.push_back(tvws::wire::to_json(tx));
            int status = 0;
            const json reply = post_envelope(parse_endpoint(args.server), "/v1/admin/transmitters",
                                             "admin_load", json{{"transmitters", arr}}, &status);
            if (status != 200) {
                std::cerr << "rejected: " << reply.dump() << "\n";
                return kExitValidation;
            }
            accepted = reply.at("count").get<std::size_t>();
        } else {
            tvws::WorldConfig cfg = load_config_or_default(args.config_path);
            tvws::Resolver resolver(cfg.resolver_deps());
            accepted = resolver.ingest_transmitters(txs);
        }
        std::cout << "accepted " << accepted << " rejected 0\n";
        return kExitOk;
    }

    const bool spectrum = args.kind == "spectrum";
    std::ifstream in(args.file);
    if (!in) throw tvws::IoError("cannot open " + args.file);

    std::optional<Endpoint> ep;
    if (!args.server.empty()) ep = parse_endpoint(args.server);
    std::optional<tvws::WorldConfig> cfg;
    std::optional<tvws::Resolver> resolver;
    if (!ep) {
        cfg = load_config_or_default(args.config_path);
        resolver.emplace(cfg->resolver_deps());
        tvws::preload_fixtures(*resolver, *cfg);
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            ++rejected;
            continue;
        }
        const json body = j.is_object() && j.contains("kind") && j.contains("body") ? j.at("body") : j;
        try {
            if (ep) {
                int status = 0;
                const json reply = post_envelope(
                    *ep, spectrum ? "/v1/reports/spectrum" : "/v1/reports/tv",
                    spectrum ? "spectrum_report" : "tv_event", body, &status);
                const bool ok = status == 200 &&
                                (!reply.contains("accepted") || reply.at("accepted") == true);
                ok ? ++accepted : ++rejected;
            } else {
                if (spectrum)
                    resolver->ingest_sensing(tvws::wire::sensing_report_from_json(body));
                else
                    resolver->ingest_tv_event(tvws::wire::tv_event_from_json(body));
                ++accepted;
            }
        } catch (const tvws::IoError&) {
            throw;
        } catch (const std::exception&) {
            ++rejected;
        }
    }
    std::cout << "accepted " << accepted << " rejected " << rejected << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TV white-space availability engine"};
    app.require_subcommand(1);

    ServeArgs serve_args;
    CLI::App* serve = app.add_subcommand("serve", "Run the availability service over HTTP");
    serve->add_option("--config", serve_args.config_path, "World config JSON");
    serve->add_option("--listen", serve_args.listen, "host:port to bind");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "City-scale channel gain study");
    simulate->add_option("--city", sim_args.cities,
                         "new_york|ny|miami or a scenario JSON path (repeatable)");
    CLI::Option* seed_opt = simulate->add_option("--seed", sim_args.seed, "RNG seed");
    simulate->add_option("--powers", sim_args.powers, "EIRP ladder in mW")->delimiter(',');
    simulate->add_option("--scale", sim_args.scale, "Area/population scale factor");
    simulate->add_option("--base", sim_args.base,
                         "Broadcast share base: operational (default) or all");
    simulate->add_option("--threads", sim_args.threads, "Worker threads (0 = hardware)");
    simulate->add_option("--out", sim_args.out_path, "Write results CSV here");
    simulate->add_option("--chart", sim_args.chart_path, "Write SVG chart here");

    QueryArgs query_args;
    CLI::App* query = app.add_subcommand("query", "Ask for free channels at a point");
    query->add_option("--x", query_args.x, "Easting within the area, meters")->required();
    query->add_option("--y", query_args.y, "Northing within the area, meters")->required();
    query->add_option("--power", query_args.power_mw, "Requested EIRP, mW");
    query->add_option("--time", query_args.time, "Query time, unix seconds (default: now)");
    query->add_option("--server", query_args.server, "host:port of a running service");
    query->add_option("--config", query_args.config_path, "World config JSON for offline mode");

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "Bulk load records from a file");
    ingest->add_option("--kind", ingest_args.kind, "transmitters|spectrum|tv")
        ->required()
        ->check(CLI::IsMember({"transmitters", "spectrum", "tv"}));
    ingest->add_option("--file", ingest_args.file, "Input path")->required();
    ingest->add_option("--server", ingest_args.server, "host:port of a running service");
    ingest->add_option("--config", ingest_args.config_path, "World config JSON for offline mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    sim_args.seed_set = seed_opt->count() > 0;
    try {
        if (serve->parsed()) return run_serve(serve_args);
        if (simulate->parsed()) return run_simulate(sim_args);
        if (query->parsed()) return run_query(query_args);
        if (ingest->parsed()) return run_ingest(ingest_args);
    } catch (const tvws::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const tvws::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const tvws::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
