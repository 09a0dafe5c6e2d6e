#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "tvws/geo.hpp"

namespace tvws {

struct TvTransmitter {
    std::string id;
    GeoPoint loc;
    int channel = 0;
    double erp_w = 0.0;
    double antenna_height_m = 0.0;

    void validate() const;
};

enum class Presence { present, absent };
enum class PowerState { on, off, unknown };

struct WsdSensingReport {
    std::string contributor_id;
    GeoPoint loc;
    double timestamp = 0.0; // seconds since epoch
    std::map<int, double> readings_dbm; // channel index -> received power
    double claimed_sensitivity_dbm = -107.0;

    void validate() const; // readings non-empty, loc finite
};

struct TvDetectionEvent {
    std::string contributor_id;
    std::optional<std::string> tv_id;
    std::optional<GeoPoint> loc; // at least one of loc / cell must be set
    std::optional<Cell> cell;
    double timestamp = 0.0;
    Presence presence = Presence::present;
    PowerState power_state = PowerState::unknown;
    std::optional<int> tuned_channel;
    double confidence = 0.0; // [0, 1]

    void validate() const;
};

struct TvSetRecord {
    std::string tv_id;
    Cell cell;
    std::optional<GeoPoint> loc; // best estimate; cell rectangle when absent
    PowerState state = PowerState::unknown;
    std::optional<int> tuned_channel;
    double reliability = 0.0; // [0, 1]
    double last_seen = 0.0;
    std::map<int, double> viewing_histogram; // channel -> watch weight
};

struct ContributorProfile {
    std::string contributor_id;
    double trust = 0.5; // [0, 1]
    std::uint64_t report_count = 0;
    std::uint64_t conflict_count = 0;
};

// Distance from a point to the record's best location estimate; falls back to
// the nearest point of the record's cell rectangle.
double tv_distance_m(const TvSetRecord& tv, GeoPoint from, const AreaOfInterest& area);

} // namespace tvws
