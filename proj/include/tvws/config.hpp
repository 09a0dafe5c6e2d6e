#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvws/resolver.hpp"
#include "tvws/service.hpp"
#include "tvws/simulator.hpp"
#include "tvws/wire.hpp"

namespace tvws {

// Everything needed to stand up a resolver or service, loadable from a JSON
// file. Relative paths are resolved against the config file's directory and
// must exist at load time.
struct WorldConfig {
    AreaOfInterest area{2000.0, 1000.0, 50.0};
    ChannelPlan plan = ChannelPlan::us_uhf(21, 27);
    SeparationTable table = SeparationTable::builtin();
    ProtectionCriteria criteria{};
    ResolverPolicy policy{};
    PropagationModel model{};
    std::vector<PowerClass> ladder = default_power_ladder();
    TrustPolicy trust{};

    std::string log_path;
    std::string snapshot_path;
    std::size_t snapshot_every = 256;
    double clock_skew_s = 120.0;

    std::string transmitters_file;
    std::vector<std::string> spectrum_files; // JSONL of sensing report bodies
    std::vector<std::string> tv_files;       // JSONL of tv event bodies

    std::optional<CityScenario> simulation;  // default scenario for batch runs

    static WorldConfig load_file(const std::string& path); // throws IoError/ValidationError
    static WorldConfig from_json(const wire::json& j, const std::string& base_dir = "");

    Resolver::Deps resolver_deps() const;
    ServiceOptions service_options() const;
};

struct FixtureCounts {
    std::size_t transmitters = 0;
    std::size_t spectrum = 0;
    std::size_t tv = 0;
    std::size_t rejected = 0;
};

// Applies the config's fixture files directly to the resolver; fixture
// timestamps are trusted as-is. Rejected records are counted, not fatal.
FixtureCounts preload_fixtures(Resolver& resolver, const WorldConfig& cfg);

// Simulation scenario from JSON: either a preset name under "city"
// ("new_york"/"miami") with optional overrides, or explicit dimensions.
CityScenario scenario_from_json(const wire::json& j);
CityScenario load_scenario_file(const std::string& path);

} // namespace tvws
