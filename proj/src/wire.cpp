#include "tvws/wire.hpp"

#include <cmath>

#include "tvws/errors.hpp"

namespace tvws::wire {
namespace {

const json& member(const json& j, const char* key) {
    if (!j.is_object()) throw ValidationError("expected object", key);
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing field ") + key, key);
    return *it;
}

double num(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_number()) throw ValidationError(std::string(key) + " must be numeric", key);
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ValidationError(std::string(key) + " must be finite", key);
    return d;
}

std::string str(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_string()) throw ValidationError(std::string(key) + " must be a string", key);
    return v.get<std::string>();
}

long long integer(const json& j, const char* key) {
    const json& v = member(j, key);
    if (!v.is_number_integer()) throw ValidationError(std::string(key) + " must be an integer", key);
    return v.get<long long>();
}

bool has(const json& j, const char* key) { return j.is_object() && j.contains(key) && !j.at(key).is_null(); }

Presence presence_from(const std::string& s, const char* field) {
    if (s == "present") return Presence::present;
    if (s == "absent") return Presence::absent;
    throw ValidationError("presence must be present|absent", field);
}

PowerState power_state_from(const std::string& s, const char* field) {
    if (s == "on") return PowerState::on;
    if (s == "off") return PowerState::off;
    if (s == "unknown") return PowerState::unknown;
    throw ValidationError("power_state must be on|off|unknown", field);
}

const char* presence_name(Presence p) { return p == Presence::present ? "present" : "absent"; }

const char* power_state_name(PowerState s) {
    switch (s) {
    case PowerState::on: return "on";
    case PowerState::off: return "off";
    default: return "unknown";
    }
}

const char* availability_name(Availability a) {
    switch (a) {
    case Availability::free: return "free";
    case Availability::occupied: return "occupied";
    default: return "unknown";
    }
}

const char* persistence_name(Persistence p) {
    switch (p) {
    case Persistence::static_: return "static";
    case Persistence::quasi_static: return "quasi_static";
    default: return "volatile";
    }
}

} // namespace

json to_json(const Envelope& e) {
    return json{{"schema_version", e.schema_version}, {"kind", e.kind}, {"body", e.body}};
}

Envelope envelope_from_json(const json& j) {
    Envelope e;
    e.schema_version = static_cast<int>(integer(j, "schema_version"));
    e.kind = str(j, "kind");
    e.body = member(j, "body");
    if (e.kind.empty()) throw ValidationError("kind must be non-empty", "kind");
    return e;
}

Envelope make_envelope(const std::string& kind, json body) {
    return Envelope{kSchemaVersion, kind, std::move(body)};
}

json to_json(const GeoPoint& p) { return json{{"x", p.x}, {"y", p.y}}; }

GeoPoint geo_point_from_json(const json& j, const char* field) {
    if (!j.is_object()) throw ValidationError("location must be an object {x, y}", field);
    GeoPoint p{num(j, "x"), num(j, "y")};
    return p;
}

json to_json(const Cell& c) { return json{{"i", c.i}, {"j", c.j}}; }

Cell cell_from_json(const json& j, const char* field) {
    if (!j.is_object()) throw ValidationError("cell must be an object {i, j}", field);
    return Cell{static_cast<int>(integer(j, "i")), static_cast<int>(integer(j, "j"))};
}

json to_json(const QueryRequest& q) {
    return json{{"loc", to_json(q.loc)}, {"power_mw", q.power.eirp_mw}, {"time", q.time}};
}

QueryRequest query_request_from_json(const json& j) {
    QueryRequest q;
    q.loc = geo_point_from_json(member(j, "loc"), "loc");
    q.power = PowerClass{num(j, "power_mw")};
    q.time = num(j, "time");
    if (!q.loc.finite()) throw ValidationError("loc must be finite", "loc");
    if (q.power.eirp_mw <= 0) throw ValidationError("power_mw must be positive", "power_mw");
    return q;
}

json to_json(const QueryResponse& r) {
    json items = json::array();
    for (const auto& it : r.items) {
        items.push_back(json{{"channel", it.channel},
                             {"max_power_mw", it.max_power.eirp_mw},
                             {"valid_until", it.valid_until},
                             {"reliability", it.reliability},
                             {"source_layer", source_layer_name(it.source_layer)}});
    }
    return json{{"channels", items}};
}

json to_json(const WsdSensingReport& r) {
    json readings = json::object();
    for (const auto& [ch, dbm] : r.readings_dbm) readings[std::to_string(ch)] = dbm;
    return json{{"contributor_id", r.contributor_id},
                {"loc", to_json(r.loc)},
                {"timestamp", r.timestamp},
                {"readings", readings},
                {"claimed_sensitivity_dbm", r.claimed_sensitivity_dbm}};
}

WsdSensingReport sensing_report_from_json(const json& j) {
    WsdSensingReport r;
    r.contributor_id = str(j, "contributor_id");
    r.loc = geo_point_from_json(member(j, "loc"), "loc");
    r.timestamp = num(j, "timestamp");
    const json& readings = member(j, "readings");
    if (!readings.is_object()) throw ValidationError("readings must be an object of channel -> dBm", "readings");
    for (auto it = readings.begin(); it != readings.end(); ++it) {
        int ch = 0;
        try {
            std::size_t pos = 0;
            ch = std::stoi(it.key(), &pos);
            if (pos != it.key().size()) throw std::invalid_argument(it.key());
        } catch (const std::exception&) {
            throw ValidationError("readings keys must be integer channel indexes", "readings");
        }
        if (!it.value().is_number()) throw ValidationError("readings values must be numeric dBm", "readings");
        r.readings_dbm[ch] = it.value().get<double>();
    }
    if (has(j, "claimed_sensitivity_dbm")) r.claimed_sensitivity_dbm = num(j, "claimed_sensitivity_dbm");
    r.validate();
    return r;
}

json to_json(const TvDetectionEvent& e) {
    json j{{"contributor_id", e.contributor_id},
           {"timestamp", e.timestamp},
           {"presence", presence_name(e.presence)},
           {"power_state", power_state_name(e.power_state)},
           {"confidence", e.confidence}};
    if (e.tv_id) j["tv_id"] = *e.tv_id;
    if (e.loc) j["loc"] = to_json(*e.loc);
    if (e.cell) j["cell"] = to_json(*e.cell);
    if (e.tuned_channel) j["tuned_channel"] = *e.tuned_channel;
    return j;
}

TvDetectionEvent tv_event_from_json(const json& j) {
    TvDetectionEvent e;
    e.contributor_id = str(j, "contributor_id");
    e.timestamp = num(j, "timestamp");
    e.presence = presence_from(str(j, "presence"), "presence");
    e.power_state = power_state_from(str(j, "power_state"), "power_state");
    e.confidence = num(j, "confidence");
    if (has(j, "tv_id")) e.tv_id = str(j, "tv_id");
    if (has(j, "loc")) e.loc = geo_point_from_json(j.at("loc"), "loc");
    if (has(j, "cell")) e.cell = cell_from_json(j.at("cell"), "cell");
    if (has(j, "tuned_channel")) e.tuned_channel = static_cast<int>(integer(j, "tuned_channel"));
    e.validate();
    return e;
}

json to_json(const TvTransmitter& t) {
    return json{{"id", t.id},
                {"loc", to_json(t.loc)},
                {"channel", t.channel},
                {"erp_w", t.erp_w},
                {"antenna_height_m", t.antenna_height_m}};
}

TvTransmitter transmitter_from_json(const json& j) {
    TvTransmitter t;
    t.id = str(j, "id");
    t.loc = geo_point_from_json(member(j, "loc"), "loc");
    t.channel = static_cast<int>(integer(j, "channel"));
    t.erp_w = num(j, "erp_w");
    t.antenna_height_m = num(j, "antenna_height_m");
    t.validate();
    return t;
}

json to_json(const PullTask& t) {
    return json{{"task_id", t.task_id},
                {"cell", to_json(t.cell)},
                {"channels", t.channels},
                {"issued_at", t.issued_at},
                {"deadline", t.deadline}};
}

PullTask pull_task_from_json(const json& j) {
    PullTask t;
    t.task_id = static_cast<std::uint64_t>(integer(j, "task_id"));
    t.cell = cell_from_json(member(j, "cell"), "cell");
    const json& channels = member(j, "channels");
    if (!channels.is_array()) throw ValidationError("channels must be an array", "channels");
    for (const json& c : channels) {
        if (!c.is_number_integer()) throw ValidationError("channels must hold integers", "channels");
        t.channels.push_back(c.get<int>());
    }
    t.issued_at = num(j, "issued_at");
    t.deadline = num(j, "deadline");
    return t;
}

json to_json(const TvSetRecord& r) {
    json hist = json::object();
    for (const auto& [ch, w] : r.viewing_histogram) hist[std::to_string(ch)] = w;
    json j{{"tv_id", r.tv_id},
           {"cell", to_json(r.cell)},
           {"state", power_state_name(r.state)},
           {"reliability", r.reliability},
           {"last_seen", r.last_seen},
           {"viewing_histogram", hist}};
    if (r.loc) j["loc"] = to_json(*r.loc);
    if (r.tuned_channel) j["tuned_channel"] = *r.tuned_channel;
    return j;
}

TvSetRecord tv_record_from_json(const json& j) {
    TvSetRecord r;
    r.tv_id = str(j, "tv_id");
    r.cell = cell_from_json(member(j, "cell"), "cell");
    r.state = power_state_from(str(j, "state"), "state");
    r.reliability = num(j, "reliability");
    r.last_seen = num(j, "last_seen");
    if (has(j, "loc")) r.loc = geo_point_from_json(j.at("loc"), "loc");
    if (has(j, "tuned_channel")) r.tuned_channel = static_cast<int>(integer(j, "tuned_channel"));
    const json& hist = member(j, "viewing_histogram");
    if (!hist.is_object()) throw ValidationError("viewing_histogram must be an object", "viewing_histogram");
    for (auto it = hist.begin(); it != hist.end(); ++it)
        r.viewing_histogram[std::stoi(it.key())] = it.value().get<double>();
    return r;
}

json to_json(const ContributorProfile& p) {
    return json{{"contributor_id", p.contributor_id},
                {"trust", p.trust},
                {"report_count", p.report_count},
                {"conflict_count", p.conflict_count}};
}

ContributorProfile contributor_from_json(const json& j) {
    ContributorProfile p;
    p.contributor_id = str(j, "contributor_id");
    p.trust = num(j, "trust");
    p.report_count = static_cast<std::uint64_t>(integer(j, "report_count"));
    p.conflict_count = static_cast<std::uint64_t>(integer(j, "conflict_count"));
    return p;
}

json to_json(const AvailabilityEntry& e) {
    json j{{"cell", to_json(e.cell)},
           {"channel", e.channel},
           {"status", availability_name(e.status)},
           {"source_layer", source_layer_name(e.source_layer)},
           {"reliability", e.reliability},
           {"persistence", persistence_name(e.persistence)},
           {"valid_until", e.valid_until}};
    if (e.max_power) j["max_power_mw"] = e.max_power->eirp_mw;
    return j;
}

AvailabilityEntry availability_entry_from_json(const json& j) {
    AvailabilityEntry e;
    e.cell = cell_from_json(member(j, "cell"), "cell");
    e.channel = static_cast<int>(integer(j, "channel"));
    const std::string status = str(j, "status");
    if (status == "free")
        e.status = Availability::free;
    else if (status == "occupied")
        e.status = Availability::occupied;
    else if (status == "unknown")
        e.status = Availability::unknown;
    else
        throw ValidationError("status must be free|occupied|unknown", "status");
    e.source_layer = source_layer_from_name(str(j, "source_layer"));
    e.reliability = num(j, "reliability");
    const std::string persistence = str(j, "persistence");
    if (persistence == "static")
        e.persistence = Persistence::static_;
    else if (persistence == "quasi_static")
        e.persistence = Persistence::quasi_static;
    else if (persistence == "volatile")
        e.persistence = Persistence::volatile_;
    else
        throw ValidationError("persistence must be static|quasi_static|volatile", "persistence");
    e.valid_until = num(j, "valid_until");
    if (has(j, "max_power_mw")) e.max_power = PowerClass{num(j, "max_power_mw")};
    return e;
}

std::string source_layer_name(SourceLayer s) {
    switch (s) {
    case SourceLayer::geodb: return "geodb";
    case SourceLayer::wsd_sensing: return "wsd_sensing";
    default: return "tv_awareness";
    }
}

SourceLayer source_layer_from_name(const std::string& s) {
    if (s == "geodb") return SourceLayer::geodb;
    if (s == "wsd_sensing") return SourceLayer::wsd_sensing;
    if (s == "tv_awareness") return SourceLayer::tv_awareness;
    throw ValidationError("source_layer must be geodb|wsd_sensing|tv_awareness", "source_layer");
}

std::string to_string_canonical(const json& j) { return j.dump(); }

} // namespace tvws::wire
