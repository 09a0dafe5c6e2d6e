#include "tvws/config.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "tvws/errors.hpp"

namespace tvws {

using wire::json;
namespace fs = std::filesystem;

namespace {

double num_or(const json& j, const char* key, double dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number()) throw ValidationError(std::string(key) + " must be numeric", key);
    return v.get<double>();
}

std::uint64_t uint_or(const json& j, const char* key, std::uint64_t dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError(std::string(key) + " must be a non-negative integer", key);
    return v.get<std::uint64_t>();
}

bool bool_or(const json& j, const char* key, bool dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ValidationError(std::string(key) + " must be a boolean", key);
    return v.get<bool>();
}

std::string str_or(const json& j, const char* key, const std::string& dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_string()) throw ValidationError(std::string(key) + " must be a string", key);
    return v.get<std::string>();
}

std::string join_path(const std::string& base_dir, const std::string& p) {
    if (p.empty() || base_dir.empty() || fs::path(p).is_absolute()) return p;
    return (fs::path(base_dir) / p).string();
}

std::string input_path(const std::string& base_dir, const std::string& p, const char* what) {
    const std::string full = join_path(base_dir, p);
    if (!fs::exists(full))
        throw IoError(std::string(what) + " file not found: " + full);
    return full;
}

ChannelPlan plan_from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ValidationError("channel_plan must be an object", "channel_plan");
    if (j.contains("file"))
        return ChannelPlan::load(input_path(base_dir, str_or(j, "file", ""), "channel plan"));
    if (j.contains("us_uhf")) {
        const json& u = j.at("us_uhf");
        const int first = static_cast<int>(uint_or(u, "first", 21));
        const int count = static_cast<int>(uint_or(u, "count", 27));
        return ChannelPlan::us_uhf(first, count);
    }
    if (j.contains("channels")) {
        std::vector<Channel> chans;
        for (const json& c : j.at("channels"))
            chans.push_back(Channel{static_cast<int>(uint_or(c, "index", 0)),
                                    num_or(c, "center_freq_mhz", 0.0)});
        return ChannelPlan(chans);
    }
    throw ValidationError("channel_plan needs file, us_uhf, or channels", "channel_plan");
}

AreaOfInterest area_from_json(const json& j) {
    const double w = num_or(j, "width_m", 2000.0);
    const double h = num_or(j, "height_m", 1000.0);
    const double cell = num_or(j, "cell_size_m", 50.0);
    return AreaOfInterest(w, h, cell);
}

BroadcastBase broadcast_base_from(const std::string& s) {
    if (s == "operational") return BroadcastBase::of_operational;
    if (s == "all") return BroadcastBase::of_all;
    throw ValidationError("broadcast_base must be operational|all", "broadcast_base");
}

} // namespace

WorldConfig WorldConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("config is not valid JSON: " + path, "config");
    return from_json(j, fs::path(path).parent_path().string());
}

WorldConfig WorldConfig::from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object", "config");
    WorldConfig cfg;

    if (j.contains("area")) cfg.area = area_from_json(j.at("area"));
    if (j.contains("channel_plan")) cfg.plan = plan_from_json(j.at("channel_plan"), base_dir);

    if (j.contains("separation_table")) {
        const json& t = j.at("separation_table");
        if (t.is_string() && t.get<std::string>() == "builtin") {
            cfg.table = SeparationTable::builtin();
        } else if (t.is_object() && t.contains("file")) {
            cfg.table =
                SeparationTable::load(input_path(base_dir, str_or(t, "file", ""), "separation table"));
        } else {
            throw ValidationError("separation_table must be \"builtin\" or {file}", "separation_table");
        }
    }
    cfg.table.validate();

    if (j.contains("criteria")) {
        const json& c = j.at("criteria");
        cfg.criteria.co_channel_snr_db = num_or(c, "co_channel_snr_db", cfg.criteria.co_channel_snr_db);
        cfg.criteria.adjacent_snr_db = num_or(c, "adjacent_snr_db", cfg.criteria.adjacent_snr_db);
        cfg.criteria.min_tv_field_dbu = num_or(c, "min_tv_field_dbu", cfg.criteria.min_tv_field_dbu);
        cfg.criteria.sensing_threshold_dbm =
            num_or(c, "sensing_threshold_dbm", cfg.criteria.sensing_threshold_dbm);
        cfg.criteria.validate();
    }

    if (j.contains("policy")) {
        const json& p = j.at("policy");
        ResolverPolicy& pol = cfg.policy;
        pol.theta = num_or(p, "theta", pol.theta);
        pol.k_min = static_cast<int>(uint_or(p, "k_min", static_cast<std::uint64_t>(pol.k_min)));
        pol.gamma = num_or(p, "gamma", pol.gamma);
        pol.t_base_geodb_s = num_or(p, "t_base_geodb_s", pol.t_base_geodb_s);
        pol.t_base_sensing_s = num_or(p, "t_base_sensing_s", pol.t_base_sensing_s);
        pol.t_base_tv_s = num_or(p, "t_base_tv_s", pol.t_base_tv_s);
        pol.validity_floor_s = num_or(p, "validity_floor_s", pol.validity_floor_s);
        pol.occupied_validity_s = num_or(p, "occupied_validity_s", pol.occupied_validity_s);
        pol.sensing_window_s = num_or(p, "sensing_window_s", pol.sensing_window_s);
        pol.sensing_stale_skew_s = num_or(p, "sensing_stale_skew_s", pol.sensing_stale_skew_s);
        pol.pull_deadline_s = num_or(p, "pull_deadline_s", pol.pull_deadline_s);
        pol.cache_loc_epsilon_m = num_or(p, "cache_loc_epsilon_m", pol.cache_loc_epsilon_m);
        pol.viewing_boost_age_s = num_or(p, "viewing_boost_age_s", pol.viewing_boost_age_s);
        pol.layer1_co_margin_m = num_or(p, "layer1_co_margin_m", pol.layer1_co_margin_m);
        pol.layer1_adj_margin_m = num_or(p, "layer1_adj_margin_m", pol.layer1_adj_margin_m);
        pol.enable_layer1 = bool_or(p, "enable_layer1", pol.enable_layer1);
        pol.enable_layer2 = bool_or(p, "enable_layer2", pol.enable_layer2);
        pol.enable_layer3 = bool_or(p, "enable_layer3", pol.enable_layer3);
        pol.layer2_co_override = bool_or(p, "layer2_co_override", pol.layer2_co_override);
        const std::string fusion = str_or(p, "fusion", "any_detect");
        if (fusion == "any_detect")
            pol.fusion = FusionRule::any_detect;
        else if (fusion == "k_of_n")
            pol.fusion = FusionRule::k_of_n;
        else
            throw ValidationError("fusion must be any_detect|k_of_n", "fusion");
        pol.fusion_k = static_cast<int>(uint_or(p, "fusion_k", static_cast<std::uint64_t>(pol.fusion_k)));
        const std::string tuning = str_or(p, "unknown_tuning", "histogram_support");
        if (tuning == "histogram_support")
            pol.unknown_tuning = UnknownTuningPolicy::histogram_support;
        else if (tuning == "all_channels")
            pol.unknown_tuning = UnknownTuningPolicy::all_channels;
        else
            throw ValidationError("unknown_tuning must be histogram_support|all_channels",
                                  "unknown_tuning");
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        cfg.model.use_hata = bool_or(m, "use_hata", cfg.model.use_hata);
        cfg.model.hata.freq_mhz = num_or(m, "freq_mhz", cfg.model.hata.freq_mhz);
        cfg.model.hata.tx_height_m = num_or(m, "tx_height_m", cfg.model.hata.tx_height_m);
        cfg.model.hata.rx_height_m = num_or(m, "rx_height_m", cfg.model.hata.rx_height_m);
        const std::string env = str_or(m, "environment", "small_medium");
        if (env == "small_medium")
            cfg.model.hata.environment = UrbanEnvironment::small_medium;
        else if (env == "large")
            cfg.model.hata.environment = UrbanEnvironment::large;
        else
            throw ValidationError("environment must be small_medium|large", "environment");
        if (cfg.model.use_hata) cfg.model.hata.validate();
    }

    if (j.contains("ladder_mw")) {
        const json& l = j.at("ladder_mw");
        if (!l.is_array() || l.empty())
            throw ValidationError("ladder_mw must be a non-empty array", "ladder_mw");
        cfg.ladder.clear();
        for (const json& v : l) {
            if (!v.is_number() || v.get<double>() <= 0)
                throw ValidationError("ladder_mw entries must be positive numbers", "ladder_mw");
            cfg.ladder.push_back(PowerClass{v.get<double>()});
        }
        std::sort(cfg.ladder.begin(), cfg.ladder.end());
    }

    if (j.contains("trust")) {
        const json& t = j.at("trust");
        cfg.trust.initial = num_or(t, "initial", cfg.trust.initial);
        cfg.trust.conforming_delta = num_or(t, "conforming_delta", cfg.trust.conforming_delta);
        cfg.trust.conflicting_delta = num_or(t, "conflicting_delta", cfg.trust.conflicting_delta);
    }

    if (j.contains("service")) {
        const json& s = j.at("service");
        cfg.log_path = join_path(base_dir, str_or(s, "log_path", ""));
        cfg.snapshot_path = join_path(base_dir, str_or(s, "snapshot_path", ""));
        cfg.snapshot_every = uint_or(s, "snapshot_every", cfg.snapshot_every);
        cfg.clock_skew_s = num_or(s, "clock_skew_s", cfg.clock_skew_s);
    }

    if (j.contains("fixtures")) {
        const json& f = j.at("fixtures");
        const std::string txs = str_or(f, "transmitters", "");
        if (!txs.empty()) cfg.transmitters_file = input_path(base_dir, txs, "transmitter");
        if (f.contains("spectrum"))
            for (const json& p : f.at("spectrum"))
                cfg.spectrum_files.push_back(input_path(base_dir, p.get<std::string>(), "spectrum fixture"));
        if (f.contains("tv"))
            for (const json& p : f.at("tv"))
                cfg.tv_files.push_back(input_path(base_dir, p.get<std::string>(), "tv fixture"));
    }

    if (j.contains("simulation")) cfg.simulation = scenario_from_json(j.at("simulation"));

    return cfg;
}

Resolver::Deps WorldConfig::resolver_deps() const {
    Resolver::Deps deps;
    deps.area = area;
    deps.plan = plan;
    deps.policy = policy;
    deps.criteria = criteria;
    deps.table = table;
    deps.model = model;
    deps.ladder = ladder;
    deps.trust = trust;
    return deps;
}

ServiceOptions WorldConfig::service_options() const {
    ServiceOptions opts;
    opts.log_path = log_path;
    opts.snapshot_path = snapshot_path;
    opts.snapshot_every = snapshot_every;
    opts.clock_skew_s = clock_skew_s;
    return opts;
}

namespace {

// Fixture lines may be bare bodies or full envelopes.
const json body_of(const json& line) {
    if (line.is_object() && line.contains("kind") && line.contains("body")) return line.at("body");
    return line;
}

} // namespace

FixtureCounts preload_fixtures(Resolver& resolver, const WorldConfig& cfg) {
    FixtureCounts counts;
    if (!cfg.transmitters_file.empty()) {
        const auto txs = TransmitterRegistry::load_file(cfg.transmitters_file);
        counts.transmitters = resolver.ingest_transmitters(txs);
    }
    const auto each_line = [&counts](const std::string& path, auto&& fn) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open fixture " + path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded()) {
                ++counts.rejected;
                continue;
            }
            try {
                fn(body_of(j));
            } catch (const std::exception&) {
                ++counts.rejected;
            }
        }
    };
    for (const std::string& path : cfg.spectrum_files)
        each_line(path, [&](const json& body) {
            resolver.ingest_sensing(wire::sensing_report_from_json(body));
            ++counts.spectrum;
        });
    for (const std::string& path : cfg.tv_files)
        each_line(path, [&](const json& body) {
            resolver.ingest_tv_event(wire::tv_event_from_json(body));
            ++counts.tv;
        });
    return counts;
}

CityScenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("scenario must be a JSON object", "scenario");
    CityScenario cfg;
    const std::string city = str_or(j, "city", "");
    const std::uint64_t seed = uint_or(j, "seed", 1);
    if (city == "new_york" || city == "ny")
        cfg = CityScenario::new_york(seed);
    else if (city == "miami")
        cfg = CityScenario::miami(seed);
    else if (!city.empty())
        throw ValidationError("city must be new_york|miami when given", "city");
    else
        cfg.seed = seed;

    cfg.name = str_or(j, "name", city.empty() ? "custom" : cfg.name);
    if (j.contains("area_sq_miles"))
        cfg.area = rect_for_sq_miles(num_or(j, "area_sq_miles", 1.0), num_or(j, "aspect", 2.0),
                                     num_or(j, "cell_size_m", 50.0));
    else if (j.contains("area"))
        cfg.area = area_from_json(j.at("area"));
    cfg.households = uint_or(j, "households", cfg.households);
    cfg.n_wsd = uint_or(j, "n_wsd", cfg.n_wsd);
    cfg.pct_on = num_or(j, "pct_on", cfg.pct_on);
    cfg.pct_broadcast = num_or(j, "pct_broadcast", cfg.pct_broadcast);
    if (j.contains("broadcast_base"))
        cfg.broadcast_base = broadcast_base_from(str_or(j, "broadcast_base", "operational"));
    if (j.contains("assignment")) {
        const std::string a = str_or(j, "assignment", "uniform");
        if (a == "uniform")
            cfg.assignment = tvws::ChannelAssignment::uniform;
        else if (a == "zipf")
            cfg.assignment = tvws::ChannelAssignment::zipf;
        else
            throw ValidationError("assignment must be uniform|zipf", "assignment");
    }
    cfg.zipf_exponent = num_or(j, "zipf_exponent", cfg.zipf_exponent);
    if (j.contains("channel_plan")) cfg.plan = plan_from_json(j.at("channel_plan"), "");
    if (j.contains("scale")) cfg = cfg.scaled(num_or(j, "scale", 1.0));
    cfg.validate();
    return cfg;
}

CityScenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("scenario is not valid JSON: " + path, "scenario");
    return scenario_from_json(j);
}

} // namespace tvws
