#pragma once

// Shared test fixtures: scratch directories, compact worlds, record builders,
// and a generator of physically consistent populated worlds whose free-channel
// answers can be audited for protection violations after the fact.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tvws/protection.hpp"
#include "tvws/resolver.hpp"
#include "tvws/wire.hpp"

namespace sup {

namespace fs = std::filesystem;
using namespace tvws;

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        std::ostringstream name;
        name << "tvws-test-" << rd() << "-" << counter++;
        path_ = fs::temp_directory_path() / name.str();
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline std::string write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 4 km x 2 km grid with a seven-channel plan. The resolver fits its field law
// from the builtin separation table on construction.
inline Resolver::Deps small_world() {
    Resolver::Deps deps;
    deps.area = AreaOfInterest(4000.0, 2000.0, 50.0);
    deps.plan = ChannelPlan::us_uhf(21, 7);
    return deps;
}

inline PathLossCalibration fitted_calibration(const SeparationTable& table = SeparationTable::builtin(),
                                              const ProtectionCriteria& criteria = {}) {
    return PathLossCalibration::fit(table.calibration_rows(),
                                    interference_limit(criteria, InterferenceMode::co),
                                    interference_limit(criteria, InterferenceMode::adjacent));
}

inline WsdSensingReport sensing_report(std::string contributor, GeoPoint loc, double ts,
                                       std::map<int, double> readings,
                                       double sensitivity_dbm = -110.0) {
    WsdSensingReport r;
    r.contributor_id = std::move(contributor);
    r.loc = loc;
    r.timestamp = ts;
    r.readings_dbm = std::move(readings);
    r.claimed_sensitivity_dbm = sensitivity_dbm;
    return r;
}

inline TvDetectionEvent tv_event(std::string contributor, GeoPoint loc, double ts,
                                 PowerState state, std::optional<int> tuned = std::nullopt,
                                 double confidence = 1.0,
                                 std::optional<std::string> tv_id = std::nullopt) {
    TvDetectionEvent e;
    e.contributor_id = std::move(contributor);
    e.tv_id = std::move(tv_id);
    e.loc = loc;
    e.timestamp = ts;
    e.presence = Presence::present;
    e.power_state = state;
    e.tuned_channel = tuned;
    e.confidence = confidence;
    return e;
}

inline std::vector<int> channel_set(const QueryResponse& r) {
    std::vector<int> out;
    out.reserve(r.items.size());
    for (const QueryResponse::Item& it : r.items) out.push_back(it.channel);
    return out;
}

inline std::vector<int> channel_set(const std::vector<Channel>& cs) {
    std::vector<int> out;
    out.reserve(cs.size());
    for (const Channel& c : cs) out.push_back(c.index);
    return out;
}

// A populated world whose crowd reports never contradict the broadcast
// physics: a set is only ever reported tuned to a channel whose transmitter
// contour covers the set's surroundings with deep margin. Any channel the
// resolver then frees is provably clear of protected receivers at every
// granted power, so answers can be audited with the exhaustive checker.
struct ConsistentWorld {
    // Contour depth required before a channel counts as watchable at a point:
    // co-channel radius of the top power class (533 m) plus record-location
    // drift from aggregation (<= 29 m) plus the cell-center offset the
    // geo layer evaluates at (<= 36 m), with slack.
    static constexpr double kDepthM = 645.0;
    // Queries keep this far from every set so adjacent-channel radii
    // (26.4 m at the top class) cannot reach a drifted record location.
    static constexpr double kQueryClearM = 100.0;

    Resolver::Deps deps;
    std::vector<TvTransmitter> transmitters;
    std::vector<GeoPoint> tv_locs; // ground-truth set locations
    std::vector<WsdSensingReport> sensing;
    std::vector<TvDetectionEvent> events;
    double t0 = 1000.0;
    double t_query = 0.0; // after every report timestamp
};

inline ConsistentWorld make_consistent_world(std::uint64_t seed) {
    ConsistentWorld w;
    w.deps = small_world();
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 1);
    const AreaOfInterest& area = w.deps.area;
    const std::vector<Channel>& chans = w.deps.plan.channels();
    const PathLossCalibration calib = fitted_calibration(w.deps.table, w.deps.criteria);

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> px(1.0, area.width() - 1.0);
    std::uniform_real_distribution<double> py(1.0, area.height() - 1.0);
    auto pick_channel = [&](std::mt19937_64& g) {
        return chans[std::uniform_int_distribution<std::size_t>(0, chans.size() - 1)(g)].index;
    };

    {
        std::uniform_real_distribution<double> ux(300.0, area.width() - 300.0);
        std::uniform_real_distribution<double> uy(300.0, area.height() - 300.0);
        std::uniform_real_distribution<double> uerp(200.0, 5000.0);
        const int n_tx = std::uniform_int_distribution<int>(3, 6)(rng);
        for (int k = 0; k < n_tx; ++k) {
            TvTransmitter tx;
            tx.id = "tx-" + std::to_string(k);
            tx.loc = {ux(rng), uy(rng)};
            tx.channel = pick_channel(rng);
            tx.erp_w = uerp(rng);
            tx.antenna_height_m = 50.0;
            w.transmitters.push_back(std::move(tx));
        }
    }

    const auto contour_m = [&](const TvTransmitter& tx) {
        return solve_distance_for_field(calib, watts_to_dbm(tx.erp_w),
                                        w.deps.criteria.min_tv_field_dbu);
    };
    const auto eligible_at = [&](GeoPoint p) {
        std::vector<int> out;
        for (const Channel& c : chans)
            for (const TvTransmitter& tx : w.transmitters)
                if (tx.channel == c.index &&
                    contour_m(tx) - distance(p, tx.loc) >= ConsistentWorld::kDepthM) {
                    out.push_back(c.index);
                    break;
                }
        return out;
    };

    const char* reporters[5] = {"obs-1", "obs-2", "obs-3", "obs-4", "obs-5"};
    std::uniform_real_distribution<double> jitter(-20.0, 20.0);
    std::uniform_real_distribution<double> conf_d(0.6, 1.0);
    double ts = w.t0;
    const int n_tv = std::uniform_int_distribution<int>(10, 25)(rng);
    for (int k = 0; k < n_tv; ++k) {
        const GeoPoint loc{px(rng), py(rng)};
        w.tv_locs.push_back(loc);
        const std::vector<int> elig = eligible_at(loc);
        const bool on = coin(rng) < 0.6;
        std::optional<int> tuned;
        if (on && !elig.empty() && coin(rng) < 0.8)
            tuned = elig[std::uniform_int_distribution<std::size_t>(0, elig.size() - 1)(rng)];

        const int n_ev = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int e = 0; e < n_ev; ++e) {
            ts += 7.0;
            const GeoPoint ev_loc{std::clamp(loc.x + jitter(rng), 0.0, area.width()),
                                  std::clamp(loc.y + jitter(rng), 0.0, area.height())};
            const bool state_on = coin(rng) < 0.1 ? !on : on; // occasional conflicting report
            w.events.push_back(tv_event(reporters[std::uniform_int_distribution<int>(0, 4)(rng)],
                                        ev_loc, ts, state_on ? PowerState::on : PowerState::off,
                                        state_on ? tuned : std::nullopt, conf_d(rng),
                                        "set-" + std::to_string(k)));
        }
    }

    const char* sensors[4] = {"sen-1", "sen-2", "sen-3", "sen-4"};
    double sensor_ts[4] = {w.t0, w.t0, w.t0, w.t0};
    const int n_rep = std::uniform_int_distribution<int>(5, 15)(rng);
    for (int k = 0; k < n_rep; ++k) {
        const int who = std::uniform_int_distribution<int>(0, 3)(rng);
        sensor_ts[who] += 15.0;
        std::map<int, double> readings;
        const int n_ch = std::uniform_int_distribution<int>(1, 3)(rng);
        for (int c = 0; c < n_ch; ++c)
            readings[pick_channel(rng)] = coin(rng) < 0.5 ? -115.0 : -95.0;
        w.sensing.push_back(
            sensing_report(sensors[who], {px(rng), py(rng)}, sensor_ts[who], std::move(readings)));
        ts = std::max(ts, sensor_ts[who]);
    }

    w.t_query = ts + 30.0;
    return w;
}

inline Resolver make_resolver(const ConsistentWorld& w) {
    Resolver r(w.deps);
    r.ingest_transmitters(w.transmitters);
    struct Item {
        double ts;
        bool is_event;
        std::size_t idx;
    };
    std::vector<Item> order;
    for (std::size_t i = 0; i < w.events.size(); ++i)
        order.push_back({w.events[i].timestamp, true, i});
    for (std::size_t i = 0; i < w.sensing.size(); ++i)
        order.push_back({w.sensing[i].timestamp, false, i});
    std::stable_sort(order.begin(), order.end(),
                     [](const Item& a, const Item& b) { return a.ts < b.ts; });
    for (const Item& it : order) {
        if (it.is_event)
            r.ingest_tv_event(w.events[it.idx]);
        else
            r.ingest_sensing(w.sensing[it.idx]);
    }
    return r;
}

inline GeoPoint random_query_loc(const ConsistentWorld& w, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> qx(0.0, w.deps.area.width());
    std::uniform_real_distribution<double> qy(0.0, w.deps.area.height());
    while (true) {
        const GeoPoint p{qx(rng), qy(rng)};
        bool clear = true;
        for (const GeoPoint& tv : w.tv_locs)
            if (distance(p, tv) < ConsistentWorld::kQueryClearM) {
                clear = false;
                break;
            }
        if (clear) return p;
    }
}

// True when any answered channel/power combination violates a protected
// receiver in the store's current record set.
inline bool response_violates(const Resolver& r, const QueryResponse& resp, GeoPoint loc) {
    const std::vector<TvSetRecord> tvs = r.tvs().snapshot();
    for (const QueryResponse::Item& item : resp.items) {
        const WsdLink link{loc, item.max_power, item.channel};
        for (const TvSetRecord& tv : tvs)
            if (violates(link, tv, r.table(), r.area(), r.policy().unknown_tuning)) return true;
    }
    return false;
}

// Adjustable test clock for service instances.
struct TestClock {
    std::shared_ptr<double> t = std::make_shared<double>(1000.0);

    std::function<double()> fn() const {
        auto p = t;
        return [p] { return *p; };
    }
    void set(double v) { *t = v; }
    void advance(double dv) { *t += dv; }
    double now() const { return *t; }
};

inline wire::json envelope(const std::string& kind, wire::json body) {
    return wire::to_json(wire::make_envelope(kind, std::move(body)));
}

} // namespace sup

#ifdef TVWS_CLI_PATH
#include <sys/wait.h>

namespace sup {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline CliResult run_cli(const TempDir& dir, const std::string& args) {
    static std::atomic<unsigned> counter{0};
    const unsigned n = counter++;
    const std::string out_file = dir.file("cli-out-" + std::to_string(n));
    const std::string err_file = dir.file("cli-err-" + std::to_string(n));
    const std::string cmd =
        std::string(TVWS_CLI_PATH) + " " + args + " >" + out_file + " 2>" + err_file;
    const int rc = std::system(cmd.c_str());
    CliResult res;
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    res.out = read_file(out_file);
    res.err = read_file(err_file);
    return res;
}

} // namespace sup
#endif
