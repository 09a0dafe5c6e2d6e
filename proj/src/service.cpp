#include "tvws/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "tvws/digest.hpp"
#include "tvws/errors.hpp"

namespace tvws {

using wire::json;

namespace {

double system_now_s() {
    using clock = std::chrono::system_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

json error_body(const std::string& code, const std::string& message, const std::string& field = "") {
    json j{{"code", code}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    return j;
}

json rejection(const std::string& code, const std::string& message) {
    return json{{"accepted", false}, {"code", code}, {"message", message}};
}

bool mutating_kind(const std::string& kind) {
    return kind == "query" || kind == "spectrum_report" || kind == "tv_event" ||
           kind == "admin_load";
}

bool was_accepted(const Service::Reply& r) {
    if (r.status != 200) return false;
    if (r.body.is_object() && r.body.contains("accepted")) return r.body.at("accepted") == true;
    return true;
}

} // namespace

Service::Service(Resolver::Deps deps, ServiceOptions opts)
    : resolver_(std::move(deps)), opts_(std::move(opts)) {
    clock_ = opts_.clock ? opts_.clock : system_now_s;
}

Service::~Service() = default;

std::uint64_t Service::seq() const {
    std::lock_guard lk(mu_);
    return seq_;
}

Service::Reply Service::handle(const wire::json& envelope_json) {
    std::lock_guard lk(mu_);
    wire::Envelope env;
    try {
        env = wire::envelope_from_json(envelope_json);
    } catch (const ValidationError& e) {
        return {422, error_body("invalid_envelope", e.what(), e.field)};
    }
    if (env.schema_version != wire::kSchemaVersion) {
        return {422, error_body("unsupported_schema_version",
                                "this server only accepts schema_version " +
                                    std::to_string(wire::kSchemaVersion),
                                "schema_version")};
    }

    const double server_time = clock_();
    Reply reply;
    try {
        reply = apply(env.kind, env.body, server_time);
    } catch (const ValidationError& e) {
        return {422, error_body("validation", e.what(), e.field)};
    } catch (const OutOfAreaError& e) {
        return {404, error_body("out_of_area", e.what())};
    } catch (const StaleTimestampError& e) {
        return {200, rejection("stale_timestamp", e.what())};
    } catch (const DomainError& e) {
        return {422, error_body("domain", e.what())};
    } catch (const IoError& e) {
        return {500, error_body("io", e.what())};
    }

    if (mutating_kind(env.kind) && was_accepted(reply)) {
        maybe_sweep_locked(server_time);
        ++seq_;
        try {
            append_log(wire::to_json(env), server_time);
            if (!opts_.snapshot_path.empty() && opts_.snapshot_every > 0 &&
                seq_ % opts_.snapshot_every == 0)
                write_snapshot_locked();
        } catch (const IoError& e) {
            return {500, error_body("io", e.what())};
        }
    }
    return reply;
}

Service::Reply Service::handle_text(const std::string& envelope_text) {
    json j = json::parse(envelope_text, nullptr, false);
    if (j.is_discarded())
        return {422, error_body("malformed_json", "request body is not valid JSON")};
    return handle(j);
}

Service::Reply Service::handle_endpoint(const std::string& expected_kind,
                                        const std::string& envelope_text) {
    json j = json::parse(envelope_text, nullptr, false);
    if (j.is_discarded())
        return {422, error_body("malformed_json", "request body is not valid JSON")};
    try {
        const wire::Envelope env = wire::envelope_from_json(j);
        if (env.kind != expected_kind)
            return {422, error_body("kind_mismatch", "this endpoint expects kind " + expected_kind,
                                    "kind")};
    } catch (const ValidationError& e) {
        return {422, error_body("invalid_envelope", e.what(), e.field)};
    }
    return handle(j);
}

Service::Reply Service::apply(const std::string& kind, const wire::json& body,
                              double server_time) {
    if (kind == "query") return apply_query(body, server_time);
    if (kind == "spectrum_report") return apply_spectrum_report(body, server_time);
    if (kind == "tv_event") return apply_tv_event(body, server_time);
    if (kind == "admin_load") return apply_admin_load(body);
    if (kind == "pull_poll") {
        json tasks = json::array();
        for (const PullTask& t : resolver_.open_pull_tasks(server_time)) tasks.push_back(wire::to_json(t));
        return {200, json{{"tasks", tasks}}};
    }
    throw ValidationError("unknown envelope kind " + kind, "kind");
}

Service::Reply Service::apply_query(const wire::json& body, double server_time) {
    QueryRequest req = wire::query_request_from_json(body);
    // Client clocks are honored only inside the skew window.
    req.time = std::clamp(req.time, server_time - opts_.clock_skew_s,
                          server_time + opts_.clock_skew_s);
    const QueryResponse resp = resolver_.resolve_query(req);
    return {200, wire::to_json(resp)};
}

Service::Reply Service::apply_spectrum_report(const wire::json& body, double server_time) {
    const WsdSensingReport report = wire::sensing_report_from_json(body);
    if (std::abs(report.timestamp - server_time) > opts_.clock_skew_s)
        return {200, rejection("clock_skew", "report timestamp outside the accepted window")};
    resolver_.ingest_sensing(report);
    return {200, json{{"accepted", true}}};
}

Service::Reply Service::apply_tv_event(const wire::json& body, double server_time) {
    const TvDetectionEvent event = wire::tv_event_from_json(body);
    if (std::abs(event.timestamp - server_time) > opts_.clock_skew_s)
        return {200, rejection("clock_skew", "event timestamp outside the accepted window")};
    const TvSetRecord rec = resolver_.ingest_tv_event(event);
    return {200, json{{"accepted", true}, {"tv_id", rec.tv_id}}};
}

Service::Reply Service::apply_admin_load(const wire::json& body) {
    if (!body.is_object() || !body.contains("transmitters") || !body.at("transmitters").is_array())
        throw ValidationError("transmitters must be an array", "transmitters");
    std::vector<TvTransmitter> txs;
    for (const json& t : body.at("transmitters")) txs.push_back(wire::transmitter_from_json(t));
    const std::size_t n = resolver_.ingest_transmitters(txs);
    return {200, json{{"count", n}}};
}

wire::json Service::pull_tasks() {
    std::lock_guard lk(mu_);
    json tasks = json::array();
    for (const PullTask& t : resolver_.open_pull_tasks(clock_())) tasks.push_back(wire::to_json(t));
    return json{{"tasks", tasks}};
}

void Service::append_log(const wire::json& envelope_json, double server_time) {
    if (opts_.log_path.empty()) return;
    if (!log_.is_open()) {
        log_.open(opts_.log_path, std::ios::app);
        if (!log_) throw IoError("cannot open event log " + opts_.log_path);
    }
    const json line{{"seq", seq_}, {"server_time", server_time}, {"envelope", envelope_json}};
    log_ << line.dump() << '\n';
    log_.flush();
    if (!log_) throw IoError("write to event log " + opts_.log_path + " failed");
}

void Service::snapshot_now() {
    std::lock_guard lk(mu_);
    write_snapshot_locked();
}

// Runs at most once per sweep period, keyed to event time so replay repeats it.
void Service::maybe_sweep_locked(double server_time) {
    if (server_time - last_sweep_ < kExpirySweepPeriodS) return;
    resolver_.expire(server_time);
    last_sweep_ = server_time;
}

void Service::write_snapshot_locked() {
    if (opts_.snapshot_path.empty()) return;
    const json snap{{"seq", seq_}, {"last_sweep", last_sweep_}, {"state", state_json_locked()}};
    const std::string tmp = opts_.snapshot_path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << snap.dump() << '\n';
        out.flush();
        if (!out) throw IoError("cannot write snapshot " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, opts_.snapshot_path, ec);
    if (ec) throw IoError("cannot move snapshot into place: " + ec.message());
}

wire::json Service::state_json_locked() const {
    json txs = json::array();
    for (const TvTransmitter& t : resolver_.transmitters().all()) txs.push_back(wire::to_json(t));

    json contributors = json::array();
    for (const ContributorProfile& p : resolver_.contributors().all())
        contributors.push_back(wire::to_json(p));

    const SensingStore::Dump sd = resolver_.sensing().dump();
    json sensing_reports = json::array();
    for (const WsdSensingReport& r : sd.reports) sensing_reports.push_back(wire::to_json(r));
    json latest = json::array();
    for (const auto& [id, ts] : sd.latest_ts) latest.push_back(json::array({id, ts}));

    const TvStore::Dump td = resolver_.tvs().dump();
    json tv_entries = json::array();
    for (const TvStore::Dump::Entry& e : td.entries) {
        json events = json::array();
        for (const TvDetectionEvent& ev : e.events) events.push_back(wire::to_json(ev));
        tv_entries.push_back(json{{"record", wire::to_json(e.record)}, {"events", events}});
    }
    json first_ts = json::array();
    for (const auto& [cell, ts] : td.first_event_ts)
        first_ts.push_back(json::array({wire::to_json(cell), ts}));

    const Resolver::StateDump rd = resolver_.dump_state();
    json cache = json::array();
    for (const Resolver::StateDump::CacheRow& row : rd.cache)
        cache.push_back(json{{"cell", wire::to_json(row.cell)},
                             {"channel", row.channel},
                             {"power_mw", row.power_mw},
                             {"query_loc", wire::to_json(row.query_loc)},
                             {"entry", wire::to_json(row.entry)}});
    json tasks = json::array();
    for (const PullTask& t : rd.tasks) tasks.push_back(wire::to_json(t));

    return json{{"transmitters", txs},
                {"contributors", contributors},
                {"sensing", json{{"reports", sensing_reports}, {"latest_ts", latest}}},
                {"tvs", json{{"entries", tv_entries},
                             {"first_event_ts", first_ts},
                             {"next_id", td.next_id}}},
                {"resolver", json{{"cache", cache},
                                  {"tasks", tasks},
                                  {"next_task_id", rd.next_task_id}}}};
}

void Service::restore_state_locked(const wire::json& state) {
    try {
        std::vector<TvTransmitter> txs;
        for (const json& t : state.at("transmitters")) txs.push_back(wire::transmitter_from_json(t));
        resolver_.transmitters().clear();
        resolver_.ingest_transmitters(txs);

        std::vector<ContributorProfile> contributors;
        for (const json& p : state.at("contributors"))
            contributors.push_back(wire::contributor_from_json(p));
        resolver_.contributors().restore(contributors);

        SensingStore::Dump sd;
        for (const json& r : state.at("sensing").at("reports"))
            sd.reports.push_back(wire::sensing_report_from_json(r));
        for (const json& pair : state.at("sensing").at("latest_ts"))
            sd.latest_ts.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<double>());
        resolver_.sensing().restore(sd);

        TvStore::Dump td;
        for (const json& e : state.at("tvs").at("entries")) {
            TvStore::Dump::Entry entry;
            entry.record = wire::tv_record_from_json(e.at("record"));
            for (const json& ev : e.at("events")) entry.events.push_back(wire::tv_event_from_json(ev));
            td.entries.push_back(std::move(entry));
        }
        for (const json& pair : state.at("tvs").at("first_event_ts"))
            td.first_event_ts.emplace_back(wire::cell_from_json(pair.at(0), "cell"),
                                           pair.at(1).get<double>());
        td.next_id = state.at("tvs").at("next_id").get<std::uint64_t>();
        resolver_.tvs().restore(td);

        Resolver::StateDump rd;
        for (const json& row : state.at("resolver").at("cache")) {
            Resolver::StateDump::CacheRow r;
            r.cell = wire::cell_from_json(row.at("cell"), "cell");
            r.channel = row.at("channel").get<int>();
            r.power_mw = row.at("power_mw").get<double>();
            r.query_loc = wire::geo_point_from_json(row.at("query_loc"), "query_loc");
            r.entry = wire::availability_entry_from_json(row.at("entry"));
            rd.cache.push_back(r);
        }
        for (const json& t : state.at("resolver").at("tasks"))
            rd.tasks.push_back(wire::pull_task_from_json(t));
        rd.next_task_id = state.at("resolver").at("next_task_id").get<std::uint64_t>();
        resolver_.restore_state(rd);
    } catch (const json::exception& e) {
        throw IoError(std::string("corrupt snapshot: ") + e.what());
    }
}

std::size_t Service::recover() {
    std::lock_guard lk(mu_);
    seq_ = 0;
    last_sweep_ = 0.0;
    if (!opts_.snapshot_path.empty() && std::filesystem::exists(opts_.snapshot_path)) {
        std::ifstream in(opts_.snapshot_path);
        json snap = json::parse(in, nullptr, false);
        if (snap.is_discarded()) throw IoError("corrupt snapshot " + opts_.snapshot_path);
        try {
            seq_ = snap.at("seq").get<std::uint64_t>();
            last_sweep_ = snap.at("last_sweep").get<double>();
            restore_state_locked(snap.at("state"));
        } catch (const json::exception& e) {
            throw IoError(std::string("corrupt snapshot: ") + e.what());
        }
    }

    std::size_t replayed = 0;
    if (!opts_.log_path.empty() && std::filesystem::exists(opts_.log_path)) {
        std::ifstream in(opts_.log_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json entry = json::parse(line, nullptr, false);
            if (entry.is_discarded()) break; // torn tail from an interrupted write
            std::uint64_t seq = 0;
            double server_time = 0.0;
            wire::Envelope env;
            try {
                seq = entry.at("seq").get<std::uint64_t>();
                server_time = entry.at("server_time").get<double>();
                env = wire::envelope_from_json(entry.at("envelope"));
            } catch (const std::exception&) {
                break;
            }
            if (seq <= seq_) continue; // already covered by the snapshot
            apply(env.kind, env.body, server_time);
            maybe_sweep_locked(server_time);
            seq_ = seq;
            ++replayed;
        }
    }
    return replayed;
}

std::string Service::state_digest() const {
    std::lock_guard lk(mu_);
    const json j{{"seq", seq_}, {"last_sweep", last_sweep_}, {"state", state_json_locked()}};
    Digest d;
    d.str(j.dump());
    return d.hex();
}

// ---------------------------------------------------------------------------

struct HttpService::Impl {
    httplib::Server srv;
};

HttpService::HttpService(Service& service) : service_(service), impl_(std::make_unique<Impl>()) {
    auto& srv = impl_->srv;
    const auto send = [](httplib::Response& res, const Service::Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };

    srv.Post("/v1/query", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service_.handle_endpoint("query", req.body));
    });
    srv.Post("/v1/reports/spectrum",
             [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, service_.handle_endpoint("spectrum_report", req.body));
             });
    srv.Post("/v1/reports/tv", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service_.handle_endpoint("tv_event", req.body));
    });
    srv.Post("/v1/admin/transmitters",
             [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, service_.handle_endpoint("admin_load", req.body));
             });
    srv.Get("/v1/pull-tasks", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, service_.pull_tasks()});
    });
    srv.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, json{{"status", "ok"}, {"seq", service_.seq()}}});
    });
    srv.Get("/v1/digest", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, {200, json{{"digest", service_.state_digest()}, {"seq", service_.seq()}}});
    });
}

HttpService::~HttpService() = default;

bool HttpService::listen(const std::string& host, int port) {
    return impl_->srv.listen(host, port);
}

int HttpService::bind_any_port(const std::string& host) {
    return impl_->srv.bind_to_any_port(host);
}

bool HttpService::listen_after_bind() { return impl_->srv.listen_after_bind(); }

void HttpService::stop() { impl_->srv.stop(); }

bool HttpService::wait_until_ready(double timeout_s) const {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
        if (impl_->srv.is_running()) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return impl_->srv.is_running();
}

} // namespace tvws
