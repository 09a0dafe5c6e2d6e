#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tvws/channel.hpp"
#include "tvws/geo.hpp"
#include "tvws/propagation.hpp"
#include "tvws/records.hpp"

namespace tvws {

struct ProtectionCriteria {
    double co_channel_snr_db = 23.0;
    double adjacent_snr_db = -33.0;
    double min_tv_field_dbu = 41.0;
    double sensing_threshold_dbm = -107.0;

    void validate() const; // co_channel_snr > adjacent_snr, all finite
};

enum class InterferenceMode { co, adjacent };

// Maximum tolerable interfering field at a protected receiver.
double interference_limit(const ProtectionCriteria& criteria, InterferenceMode mode);

struct SeparationRow {
    double coverage_m = 0.0;
    double adj_sep_m = 0.0;
    double co_sep_m = 0.0;
};

class SeparationTable {
public:
    SeparationTable() = default;

    // Portable-device defaults: 1/5/10/40/100 mW rows.
    static SeparationTable builtin();
    // One "power_mw,coverage_m,adj_sep_m,co_sep_m" record per line, '#' comments.
    static SeparationTable load(const std::string& path);
    static SeparationTable parse(const std::string& text);
    void save(const std::string& path) const;

    void add_row(double power_mw, SeparationRow row);
    const SeparationRow* find(double power_mw) const;
    const SeparationRow& at(double power_mw) const; // throws UnknownPowerError
    std::vector<double> powers() const;             // ascending
    std::size_t size() const { return rows_.size(); }

    // co_sep > adj_sep per row; every column strictly increasing with power.
    void validate() const;

    // Calibration input rows in ascending power order.
    std::vector<PathLossCalibration::Row> calibration_rows() const;

private:
    std::vector<std::pair<double, SeparationRow>> rows_; // sorted by power
};

// Exact table lookup, falling back to the fitted law when the power class is
// not a table row. Throws UnknownPowerError when neither path applies.
double min_separation(PowerClass power, InterferenceMode mode, const SeparationTable& table,
                      const PathLossCalibration* calibration = nullptr,
                      const ProtectionCriteria& criteria = {});

struct SeparationRadii {
    double co_m = 0.0;
    double adj_m = 0.0;
};

SeparationRadii separation_radii(PowerClass power, const SeparationTable& table,
                                 const PathLossCalibration* calibration = nullptr,
                                 const ProtectionCriteria& criteria = {});

// How a receiver with unknown tuning is protected: every channel its cell's
// viewing history supports, or every channel outright.
enum class UnknownTuningPolicy { histogram_support, all_channels };

struct WsdLink {
    GeoPoint loc;
    PowerClass power;
    int channel = 0;
};

// True iff the receiver is ON and inside the co-channel radius while tuned to
// the link's channel, or inside the adjacent radius while tuned one channel
// away. OFF and unknown-state receivers never violate.
bool violates(const WsdLink& wsd, const TvSetRecord& tv, const SeparationRadii& radii,
              const AreaOfInterest& area,
              UnknownTuningPolicy policy = UnknownTuningPolicy::histogram_support);
bool violates(const WsdLink& wsd, const TvSetRecord& tv, const SeparationTable& table,
              const AreaOfInterest& area,
              UnknownTuningPolicy policy = UnknownTuningPolicy::histogram_support);

// Exhaustive free-channel oracle: every plan channel with no violating receiver.
std::vector<Channel> allowed_channels(GeoPoint loc, PowerClass power,
                                      const std::vector<TvSetRecord>& tvs,
                                      const ChannelPlan& plan, const SeparationTable& table,
                                      const AreaOfInterest& area,
                                      UnknownTuningPolicy policy =
                                          UnknownTuningPolicy::histogram_support);

// Highest ladder class with no violation on the channel; nullopt if even the
// lowest violates. Ladder must be ascending.
std::optional<PowerClass> max_power(GeoPoint loc, int channel,
                                    const std::vector<TvSetRecord>& tvs,
                                    const std::vector<PowerClass>& ladder,
                                    const SeparationTable& table, const AreaOfInterest& area,
                                    UnknownTuningPolicy policy =
                                        UnknownTuningPolicy::histogram_support);

} // namespace tvws
