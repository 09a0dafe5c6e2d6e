#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "tvws/errors.hpp"
#include "tvws/geo.hpp"
#include "tvws/protection.hpp"
#include "tvws/records.hpp"

namespace tvws {

struct TrustPolicy {
    double initial = 0.5;
    double conforming_delta = 0.01;
    double conflicting_delta = -0.05;
};

class ContributorLedger {
public:
    explicit ContributorLedger(TrustPolicy policy = {}) : policy_(policy) {}

    double trust(const std::string& contributor_id) const; // initial when unseen
    const ContributorProfile* find(const std::string& contributor_id) const;
    void note_report(const std::string& contributor_id);
    void note_conforming(const std::string& contributor_id);
    void note_conflicting(const std::string& contributor_id);
    std::vector<ContributorProfile> all() const;
    void restore(const std::vector<ContributorProfile>& profiles);
    const TrustPolicy& policy() const { return policy_; }

private:
    ContributorProfile& touch(const std::string& contributor_id);

    TrustPolicy policy_;
    std::map<std::string, ContributorProfile> profiles_;
};

class TransmitterRegistry {
public:
    // Replaces on matching id; returns the number of records processed.
    std::size_t ingest(const TvTransmitter& tx);
    std::size_t ingest(const std::vector<TvTransmitter>& txs);

    const std::vector<TvTransmitter>& all() const { return txs_; }
    std::vector<const TvTransmitter*> on_channel(int channel) const;
    std::size_t size() const { return txs_.size(); }
    void clear();

    // One "id,x_m,y_m,channel,erp_w,haat_m" record per line, '#' comments.
    static std::vector<TvTransmitter> load_file(const std::string& path);
    static std::vector<TvTransmitter> parse(const std::string& text);
    static void save_file(const std::string& path, const std::vector<TvTransmitter>& txs);

private:
    std::vector<TvTransmitter> txs_;
    std::map<std::string, std::size_t> by_id_;
};

enum class FusionRule { any_detect, k_of_n };

struct OccupancyEvidence {
    bool occupied = false;
    double confidence = 0.0;
    int n_reports = 0; // reports in window carrying the channel
    int n_usable = 0;  // reports sensitive enough to prove absence
    int n_detections = 0;

    bool has_data() const { return n_reports > 0; }
};

struct SensingStoreOptions {
    double stale_skew_s = 120.0;   // reports older than a contributor's latest by more
    double trust_window_s = 600.0; // peer-comparison window for trust updates
    double detection_threshold_dbm = -107.0; // for ingest-time peer agreement only
};

class SensingStore {
public:
    SensingStore(AreaOfInterest area, SensingStoreOptions options = {})
        : area_(area), options_(options) {}

    // Throws OutOfAreaError / StaleTimestampError / ValidationError.
    void ingest(const WsdSensingReport& report, ContributorLedger& ledger);

    // Detection = reading at or above criteria.sensing_threshold_dbm. Reports
    // whose claimed sensitivity cannot hear down to the threshold still count
    // detections but never prove vacancy.
    OccupancyEvidence occupancy_evidence(const Cell& cell, int channel, double window_s,
                                         double now, FusionRule rule, int k,
                                         const ProtectionCriteria& criteria,
                                         const ContributorLedger& ledger) const;

    std::vector<const WsdSensingReport*> reports_in(const Cell& cell, double window_s,
                                                    double now) const;
    std::size_t size() const { return count_; }
    void prune(double older_than);
    const AreaOfInterest& area() const { return area_; }

    // Cell-ordered copy of the full store, sufficient to rebuild it exactly.
    struct Dump {
        std::vector<WsdSensingReport> reports;
        std::vector<std::pair<std::string, double>> latest_ts;
    };
    Dump dump() const;
    void restore(const Dump& d);

private:
    AreaOfInterest area_;
    SensingStoreOptions options_;
    std::unordered_map<Cell, std::vector<WsdSensingReport>, CellHash> by_cell_;
    std::map<std::string, double> latest_ts_;
    std::size_t count_ = 0;
};

struct TvStoreOptions {
    double simultaneity_window_s = 60.0; // events this close are weighed against each other
    double gamma = 1.0;                  // conflict penalty weight
    double retention_s = 86400.0;        // raw event history kept per record
};

class TvStore {
public:
    TvStore(AreaOfInterest area, TvStoreOptions options = {})
        : area_(area), options_(options) {}

    // Matches the event to a record (tv_id, else nearest in cell, else new),
    // reweighs state and reliability, and returns the updated record.
    // Throws OutOfAreaError / ValidationError.
    TvSetRecord ingest(const TvDetectionEvent& event, ContributorLedger& ledger);

    // Records whose best location estimate lies within radius (inclusive).
    std::vector<TvSetRecord> tv_sets_near(GeoPoint loc, double radius) const;

    std::vector<TvSetRecord> snapshot() const;
    std::size_t size() const { return count_; }
    const AreaOfInterest& area() const { return area_; }

    // Cell-ordered copy of records plus retained events, sufficient to
    // rebuild the store exactly (including record identity allocation).
    struct Dump {
        struct Entry {
            TvSetRecord record;
            std::vector<TvDetectionEvent> events;
        };
        std::vector<Entry> entries;
        std::vector<std::pair<Cell, double>> first_event_ts;
        std::uint64_t next_id = 1;
    };
    Dump dump() const;
    void restore(const Dump& d);

    // Total histogram weight on a channel across a cell's records, and the
    // earliest event timestamp seen in the cell (for history-span rules).
    double cell_channel_weight(const Cell& cell, int channel) const;
    std::optional<double> cell_history_start(const Cell& cell) const;

private:
    struct StoredTv {
        TvSetRecord record;
        std::vector<TvDetectionEvent> events; // sorted by timestamp
    };

    void reaggregate(StoredTv& tv, const ContributorLedger& ledger,
                     const TvDetectionEvent& incoming, ContributorLedger* mutable_ledger);

    AreaOfInterest area_;
    TvStoreOptions options_;
    std::unordered_map<Cell, std::vector<StoredTv>, CellHash> by_cell_;
    std::unordered_map<Cell, double, CellHash> first_event_ts_;
    std::uint64_t next_id_ = 1;
    std::size_t count_ = 0;
};

} // namespace tvws
