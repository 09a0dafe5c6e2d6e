#include "tvws/protection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tvws {

void ProtectionCriteria::validate() const {
    if (!std::isfinite(co_channel_snr_db) || !std::isfinite(adjacent_snr_db) ||
        !std::isfinite(min_tv_field_dbu) || !std::isfinite(sensing_threshold_dbm))
        throw ValidationError("protection criteria must be finite", "criteria");
    if (!(co_channel_snr_db > adjacent_snr_db))
        throw ValidationError("co-channel SNR must exceed adjacent-channel SNR",
                              "co_channel_snr_db");
}

double interference_limit(const ProtectionCriteria& criteria, InterferenceMode mode) {
    return mode == InterferenceMode::co ? criteria.min_tv_field_dbu - criteria.co_channel_snr_db
                                        : criteria.min_tv_field_dbu - criteria.adjacent_snr_db;
}

SeparationTable SeparationTable::builtin() {
    SeparationTable t;
    t.add_row(1.0, {59.0, 9.0, 182.0});
    t.add_row(5.0, {86.0, 13.2, 265.0});
    t.add_row(10.0, {101.0, 15.5, 310.0});
    t.add_row(40.0, {140.0, 22.4, 430.0});
    t.add_row(100.0, {173.0, 26.4, 533.0});
    return t;
}

void SeparationTable::add_row(double power_mw, SeparationRow row) {
    if (!(power_mw > 0.0)) throw ValidationError("power must be positive", "power_mw");
    const auto it = std::lower_bound(rows_.begin(), rows_.end(), power_mw,
                                     [](const auto& a, double p) { return a.first < p; });
    if (it != rows_.end() && it->first == power_mw)
        it->second = row;
    else
        rows_.insert(it, {power_mw, row});
}

const SeparationRow* SeparationTable::find(double power_mw) const {
    for (const auto& [p, row] : rows_)
        if (std::abs(p - power_mw) <= 1e-9 * std::max(1.0, std::abs(power_mw))) return &row;
    return nullptr;
}

const SeparationRow& SeparationTable::at(double power_mw) const {
    const SeparationRow* row = find(power_mw);
    if (!row)
        throw UnknownPowerError("no separation row for " + std::to_string(power_mw) + " mW");
    return *row;
}

std::vector<double> SeparationTable::powers() const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& [p, row] : rows_) out.push_back(p);
    return out;
}

void SeparationTable::validate() const {
    const SeparationRow* prev = nullptr;
    for (const auto& [p, row] : rows_) {
        if (!(row.co_sep_m > row.adj_sep_m))
            throw ValidationError("co-channel separation must exceed adjacent separation",
                                  "co_sep_m");
        if (!(row.coverage_m > 0.0 && row.adj_sep_m > 0.0))
            throw ValidationError("separations must be positive", "coverage_m");
        if (prev && !(row.coverage_m > prev->coverage_m && row.adj_sep_m > prev->adj_sep_m &&
                      row.co_sep_m > prev->co_sep_m))
            throw ValidationError("separation columns must increase with power", "power_mw");
        prev = &row;
    }
}

std::vector<PathLossCalibration::Row> SeparationTable::calibration_rows() const {
    std::vector<PathLossCalibration::Row> out;
    out.reserve(rows_.size());
    for (const auto& [p, row] : rows_)
        out.push_back({p, row.coverage_m, row.adj_sep_m, row.co_sep_m});
    return out;
}

SeparationTable SeparationTable::parse(const std::string& text) {
    SeparationTable t;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        double power = 0.0;
        SeparationRow row;
        if (!(fields >> power)) continue;
        if (!(fields >> row.coverage_m >> row.adj_sep_m >> row.co_sep_m))
            throw ValidationError("separation table line " + std::to_string(lineno) +
                                      ": expected power_mw,coverage_m,adj_sep_m,co_sep_m",
                                  "row");
        t.add_row(power, row);
    }
    t.validate();
    return t;
}

SeparationTable SeparationTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open separation table: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void SeparationTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write separation table: " + path);
    out << "# power_mw,coverage_m,adj_sep_m,co_sep_m\n";
    for (const auto& [p, row] : rows_) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%g,%g,%g,%g\n", p, row.coverage_m, row.adj_sep_m,
                      row.co_sep_m);
        out << buf;
    }
}

double min_separation(PowerClass power, InterferenceMode mode, const SeparationTable& table,
                      const PathLossCalibration* calibration,
                      const ProtectionCriteria& criteria) {
    if (const SeparationRow* row = table.find(power.eirp_mw))
        return mode == InterferenceMode::co ? row->co_sep_m : row->adj_sep_m;
    if (calibration)
        return solve_distance_for_field(*calibration, power.dbm(),
                                        interference_limit(criteria, mode));
    throw UnknownPowerError("power " + std::to_string(power.eirp_mw) +
                            " mW not in table and no calibration provided");
}

SeparationRadii separation_radii(PowerClass power, const SeparationTable& table,
                                 const PathLossCalibration* calibration,
                                 const ProtectionCriteria& criteria) {
    return {min_separation(power, InterferenceMode::co, table, calibration, criteria),
            min_separation(power, InterferenceMode::adjacent, table, calibration, criteria)};
}

namespace {

bool tuned_channel_conflicts(int tuned, int wsd_channel, double d, const SeparationRadii& radii) {
    if (tuned == wsd_channel) return d < radii.co_m;
    if (std::abs(tuned - wsd_channel) == 1) return d < radii.adj_m;
    return false;
}

} // namespace

bool violates(const WsdLink& wsd, const TvSetRecord& tv, const SeparationRadii& radii,
              const AreaOfInterest& area, UnknownTuningPolicy policy) {
    if (tv.state != PowerState::on) return false;
    const double d = tv_distance_m(tv, wsd.loc, area);
    if (d >= radii.co_m) return false; // co radius dominates every check below

    if (tv.tuned_channel) return tuned_channel_conflicts(*tv.tuned_channel, wsd.channel, d, radii);

    if (policy == UnknownTuningPolicy::all_channels) return true; // could be co-tuned
    for (const auto& [ch, weight] : tv.viewing_histogram)
        if (weight > 0.0 && tuned_channel_conflicts(ch, wsd.channel, d, radii)) return true;
    return false;
}

bool violates(const WsdLink& wsd, const TvSetRecord& tv, const SeparationTable& table,
              const AreaOfInterest& area, UnknownTuningPolicy policy) {
    return violates(wsd, tv, separation_radii(wsd.power, table), area, policy);
}

std::vector<Channel> allowed_channels(GeoPoint loc, PowerClass power,
                                      const std::vector<TvSetRecord>& tvs,
                                      const ChannelPlan& plan, const SeparationTable& table,
                                      const AreaOfInterest& area, UnknownTuningPolicy policy) {
    const SeparationRadii radii = separation_radii(power, table);
    std::vector<Channel> out;
    for (const Channel& c : plan.channels()) {
        const WsdLink link{loc, power, c.index};
        const bool blocked = std::any_of(tvs.begin(), tvs.end(), [&](const TvSetRecord& tv) {
            return violates(link, tv, radii, area, policy);
        });
        if (!blocked) out.push_back(c);
    }
    return out;
}

std::optional<PowerClass> max_power(GeoPoint loc, int channel,
                                    const std::vector<TvSetRecord>& tvs,
                                    const std::vector<PowerClass>& ladder,
                                    const SeparationTable& table, const AreaOfInterest& area,
                                    UnknownTuningPolicy policy) {
    for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) {
        const WsdLink link{loc, *it, channel};
        const SeparationRadii radii = separation_radii(*it, table);
        const bool blocked = std::any_of(tvs.begin(), tvs.end(), [&](const TvSetRecord& tv) {
            return violates(link, tv, radii, area, policy);
        });
        if (!blocked) return *it;
    }
    return std::nullopt;
}

} // namespace tvws
