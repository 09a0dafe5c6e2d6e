#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "tvws/channel.hpp"
#include "tvws/geo.hpp"
#include "tvws/propagation.hpp"
#include "tvws/protection.hpp"
#include "tvws/registry.hpp"
#include "tvws/reliability.hpp"

namespace tvws {

enum class Availability { free, occupied, unknown };
enum class SourceLayer { geodb, wsd_sensing, tv_awareness };
enum class Persistence { static_, quasi_static, volatile_ };

struct AvailabilityEntry {
    Cell cell{};
    int channel = 0;
    Availability status = Availability::unknown;
    std::optional<PowerClass> max_power; // present whenever status is free
    SourceLayer source_layer = SourceLayer::geodb;
    double reliability = 0.0;
    Persistence persistence = Persistence::volatile_;
    double valid_until = 0.0;
};

struct QueryRequest {
    GeoPoint loc{};
    PowerClass power{};
    double time = 0.0;
};

struct QueryResponse {
    struct Item {
        int channel = 0;
        PowerClass max_power{};
        double valid_until = 0.0;
        double reliability = 0.0;
        SourceLayer source_layer = SourceLayer::geodb;
    };
    std::vector<Item> items; // free channels only, ascending channel index
};

struct PullTask {
    std::uint64_t task_id = 0;
    Cell cell{};
    std::vector<int> channels;
    double issued_at = 0.0;
    double deadline = 0.0;
};

struct ResolverPolicy {
    double theta = 0.8; // reliability threshold for crowd-sourced answers
    int k_min = 3;      // contributors needed for full confidence / validity
    double gamma = 1.0; // conflict penalty weight

    double t_base_geodb_s = 86400.0;
    double t_base_sensing_s = 600.0;
    double t_base_tv_s = 120.0;
    double validity_floor_s = 60.0;
    double occupied_validity_s = 60.0;

    double sensing_window_s = 600.0;
    double sensing_stale_skew_s = 120.0; // tolerated backdating per contributor
    FusionRule fusion = FusionRule::any_detect;
    int fusion_k = 2;

    bool enable_layer1 = true;
    bool enable_layer2 = true;
    bool enable_layer3 = true;
    // Whether confident sensing vacancy may free a channel blocked by a
    // co-channel protected contour (an obstructed station). Default off: only
    // adjacent-channel blocks may be lifted by sensing.
    bool layer2_co_override = false;

    double layer1_co_margin_m = 0.0;
    double layer1_adj_margin_m = 0.0;

    UnknownTuningPolicy unknown_tuning = UnknownTuningPolicy::histogram_support;

    double pull_deadline_s = 120.0;
    double cache_loc_epsilon_m = 1.0; // cached answers reused within this radius

    // A channel never watched across this much cell history is treated as
    // quasi-static rather than volatile.
    double viewing_boost_age_s = 7.0 * 86400.0;
};

// Per-layer validity period: the geo-database layer always gets its full base
// period; crowd layers scale by contributor count and reliability, clamped to
// [floor, base].
double compute_validity(SourceLayer layer, double reliability, int n_contributors,
                        const ResolverPolicy& policy);

class Resolver {
public:
    struct Deps {
        AreaOfInterest area;
        ChannelPlan plan;
        ResolverPolicy policy{};
        ProtectionCriteria criteria{};
        SeparationTable table = SeparationTable::builtin();
        PropagationModel model{};
        std::vector<PowerClass> ladder = default_power_ladder();
        TrustPolicy trust{};
    };

    explicit Resolver(Deps deps);

    // Receiver-blind geo-database rule: free iff the cell center clears every
    // co-channel protected contour (plus margin) and every adjacent-channel
    // contour (plus margin).
    bool layer1_free(const Cell& cell, int channel) const;

    QueryResponse resolve_query(const QueryRequest& req); // throws OutOfAreaError

    std::size_t expire(double now);
    std::vector<PullTask> open_pull_tasks(double now) const;

    std::size_t ingest_transmitters(const std::vector<TvTransmitter>& txs);
    // Throws OutOfAreaError / StaleTimestampError; closes matching pull tasks.
    void ingest_sensing(const WsdSensingReport& report);
    TvSetRecord ingest_tv_event(const TvDetectionEvent& event);

    const AreaOfInterest& area() const { return area_; }
    const ChannelPlan& plan() const { return plan_; }
    const ResolverPolicy& policy() const { return policy_; }
    const ProtectionCriteria& criteria() const { return criteria_; }
    const SeparationTable& table() const { return table_; }
    const std::vector<PowerClass>& ladder() const { return ladder_; }

    TransmitterRegistry& transmitters() { return transmitters_; }
    const TransmitterRegistry& transmitters() const { return transmitters_; }
    SensingStore& sensing() { return sensing_; }
    const SensingStore& sensing() const { return sensing_; }
    TvStore& tvs() { return tvs_; }
    const TvStore& tvs() const { return tvs_; }
    ContributorLedger& contributors() { return contributors_; }
    const ContributorLedger& contributors() const { return contributors_; }

    std::vector<AvailabilityEntry> entries_snapshot() const;

    // Key-ordered copy of the derived resolver state (availability cache and
    // open pull tasks), sufficient to rebuild it exactly.
    struct StateDump {
        struct CacheRow {
            Cell cell{};
            int channel = 0;
            double power_mw = 0.0;
            GeoPoint query_loc{};
            AvailabilityEntry entry;
        };
        std::vector<CacheRow> cache;
        std::vector<PullTask> tasks;
        std::uint64_t next_task_id = 1;
    };
    StateDump dump_state() const;
    void restore_state(const StateDump& d);

private:
    enum class Layer1Verdict { free, blocked_adjacent, blocked_co };

    Layer1Verdict layer1_verdict(GeoPoint at, int channel) const;
    double transmitter_contour_m(const TvTransmitter& tx) const;
    void open_or_extend_task(const Cell& cell, const std::vector<int>& channels, double now);

    struct CacheKey {
        Cell cell{};
        int channel = 0;
        double power_mw = 0.0;
        bool operator<(const CacheKey& o) const;
    };
    struct CacheSlot {
        AvailabilityEntry entry;
        GeoPoint query_loc{};
    };

    AreaOfInterest area_;
    ChannelPlan plan_;
    ResolverPolicy policy_;
    ProtectionCriteria criteria_;
    SeparationTable table_;
    PropagationModel model_;
    std::vector<PowerClass> ladder_;

    TransmitterRegistry transmitters_;
    SensingStore sensing_;
    TvStore tvs_;
    ContributorLedger contributors_;

    std::map<CacheKey, CacheSlot> cache_;
    std::vector<PullTask> tasks_;
    std::uint64_t next_task_id_ = 1;
    mutable std::map<std::string, double> contour_cache_; // transmitter id -> meters
};

} // namespace tvws
