#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "tvws/resolver.hpp"
#include "tvws/wire.hpp"

namespace tvws {

struct ServiceOptions {
    std::string log_path;             // JSONL event log; empty disables persistence
    std::string snapshot_path;        // state checkpoint; empty disables
    std::size_t snapshot_every = 256; // logged events between checkpoints
    double clock_skew_s = 120.0;      // tolerated client/server clock difference
    std::function<double()> clock;    // unix seconds; defaults to the system clock
};

// Request broker over a Resolver. Every mutating request is appended to a
// JSONL event log as {seq, server_time, envelope}; state is a pure function
// of that sequence, so recovery replays the tail over the latest checkpoint
// through the same code path with the recorded server times.
class Service {
public:
    // Cache expiry runs as part of the event stream (at most once per period
    // of server time) so replay reproduces it exactly.
    static constexpr double kExpirySweepPeriodS = 10.0;

    struct Reply {
        int status = 200;
        wire::json body;
    };

    Service(Resolver::Deps deps, ServiceOptions opts = {});
    ~Service();

    // Dispatches one enveloped request: query, spectrum_report, tv_event,
    // pull_poll, or admin_load. Unknown schema versions and malformed bodies
    // yield 422; out-of-area 404; skewed or stale reports 200 accepted:false.
    Reply handle(const wire::json& envelope_json);
    Reply handle_text(const std::string& envelope_text);
    // Same, but the envelope kind must match the endpoint the request hit.
    Reply handle_endpoint(const std::string& expected_kind, const std::string& envelope_text);

    wire::json pull_tasks();

    // Loads the checkpoint (if any) and replays newer log entries; returns
    // the number of replayed events.
    std::size_t recover();

    // FNV-1a 64 over the canonical serialization of the full state.
    std::string state_digest() const;
    void snapshot_now();

    std::uint64_t seq() const;
    double now() const { return clock_(); }
    Resolver& resolver() { return resolver_; }
    const Resolver& resolver() const { return resolver_; }
    const ServiceOptions& options() const { return opts_; }

private:
    Reply apply(const std::string& kind, const wire::json& body, double server_time);
    Reply apply_query(const wire::json& body, double server_time);
    Reply apply_spectrum_report(const wire::json& body, double server_time);
    Reply apply_tv_event(const wire::json& body, double server_time);
    Reply apply_admin_load(const wire::json& body);
    void append_log(const wire::json& envelope_json, double server_time);
    void maybe_sweep_locked(double server_time);
    void write_snapshot_locked();
    wire::json state_json_locked() const;
    void restore_state_locked(const wire::json& state);

    Resolver resolver_;
    ServiceOptions opts_;
    std::function<double()> clock_;
    std::uint64_t seq_ = 0;
    double last_sweep_ = 0.0;
    std::ofstream log_;
    mutable std::mutex mu_;
};

// HTTP adapter: POST /v1/query, /v1/reports/spectrum, /v1/reports/tv,
// /v1/admin/transmitters (enveloped bodies); GET /v1/pull-tasks, /v1/health,
// /v1/digest.
class HttpService {
public:
    explicit HttpService(Service& service);
    ~HttpService();

    bool listen(const std::string& host, int port); // blocks
    int bind_any_port(const std::string& host);     // returns the bound port
    bool listen_after_bind();                       // blocks
    void stop();
    bool wait_until_ready(double timeout_s = 5.0) const;

private:
    struct Impl;
    Service& service_;
    std::unique_ptr<Impl> impl_;
};

} // namespace tvws
