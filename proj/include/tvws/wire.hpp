#pragma once

#include <string>

#include <json.hpp>

#include "tvws/records.hpp"
#include "tvws/resolver.hpp"

namespace tvws::wire {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Envelope around every request body: {schema_version, kind, body}.
struct Envelope {
    int schema_version = kSchemaVersion;
    std::string kind;
    json body;
};

json to_json(const Envelope& e);
// Throws ValidationError (field set) on missing/ill-typed members; ignores
// unknown members.
Envelope envelope_from_json(const json& j);
Envelope make_envelope(const std::string& kind, json body);

json to_json(const GeoPoint& p);
GeoPoint geo_point_from_json(const json& j, const char* field = "loc");
json to_json(const Cell& c);
Cell cell_from_json(const json& j, const char* field = "cell");

json to_json(const QueryRequest& q);
QueryRequest query_request_from_json(const json& j);
json to_json(const QueryResponse& r);

json to_json(const WsdSensingReport& r);
WsdSensingReport sensing_report_from_json(const json& j);

json to_json(const TvDetectionEvent& e);
TvDetectionEvent tv_event_from_json(const json& j);

json to_json(const TvTransmitter& t);
TvTransmitter transmitter_from_json(const json& j);

json to_json(const PullTask& t);
PullTask pull_task_from_json(const json& j);
json to_json(const TvSetRecord& r);
TvSetRecord tv_record_from_json(const json& j);
json to_json(const ContributorProfile& p);
ContributorProfile contributor_from_json(const json& j);
json to_json(const AvailabilityEntry& e);
AvailabilityEntry availability_entry_from_json(const json& j);

std::string source_layer_name(SourceLayer s);
SourceLayer source_layer_from_name(const std::string& s);
std::string to_string_canonical(const json& j); // sorted keys, no whitespace

} // namespace tvws::wire
