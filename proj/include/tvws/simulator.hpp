#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tvws/channel.hpp"
#include "tvws/geo.hpp"
#include "tvws/protection.hpp"

namespace tvws {

enum class BroadcastBase { of_all, of_operational };
enum class ChannelAssignment { uniform, zipf };

inline constexpr double kSqMileInSqM = 2589988.110336;

// Rectangle of the given land area with the given width:height aspect; the
// cell size is clamped so at least one cell fits.
AreaOfInterest rect_for_sq_miles(double sq_miles, double aspect = 2.0, double cell_size_m = 50.0);

struct CityScenario {
    std::string name;
    AreaOfInterest area{1000.0, 500.0, 50.0};
    std::uint64_t households = 0;
    double pct_on = 0.21;
    double pct_broadcast = 0.10;
    BroadcastBase broadcast_base = BroadcastBase::of_operational;
    ChannelAssignment assignment = ChannelAssignment::uniform;
    double zipf_exponent = 1.0; // used when assignment is zipf (rank weight 1/rank^s)
    ChannelPlan plan;
    std::uint64_t n_wsd = 0;
    std::uint64_t seed = 1;

    // Embedded city presets: household count, land area (2:1 rectangle),
    // and contiguous UHF plans of 27 (New York) / 26 (Miami) channels.
    static CityScenario new_york(std::uint64_t seed = 1);
    static CityScenario miami(std::uint64_t seed = 1);

    // Same densities over a rectangle scaled in area by `factor`.
    CityScenario scaled(double factor) const;
    void validate() const;
};

// A household TV that constrains WSDs: operational and showing a broadcast
// channel. Other sets never block and are kept as counts only.
struct ProtectedTv {
    GeoPoint loc{};
    int channel = 0;
};

struct Scenario {
    CityScenario cfg;
    std::vector<ProtectedTv> protected_tvs;
    std::vector<GeoPoint> wsd_locs;
    std::uint64_t n_on = 0;
    std::uint64_t n_on_broadcast = 0;
    std::string fingerprint;
};

Scenario generate_scenario(const CityScenario& cfg);

struct PowerGain {
    double power_mw = 0.0;
    std::uint64_t n_wsd = 0;
    std::uint64_t n_gaining = 0;
    double pct_gaining = 0.0;            // percent
    double avg_gained_over_gaining = 0.0; // mean channels gained among gainers
    double avg_gained_over_all = 0.0;
    double stderr_pct = 0.0; // percent points, binomial
    double stderr_avg = 0.0; // standard error of the over-gaining mean
    std::map<int, std::uint64_t> histogram; // gained-channel count -> WSDs
};

struct GainStats {
    std::string city;
    std::uint64_t seed = 0;
    std::string fingerprint;
    std::vector<PowerGain> per_power; // ascending power
};

struct GainOptions {
    int threads = 0; // 0 = hardware concurrency
    bool include_adjacent = true;
};

GainStats evaluate_gain(const Scenario& scenario, const SeparationTable& table,
                        const std::vector<PowerClass>& ladder, const GainOptions& options = {});

// Poisson void-probability cross-check: sum over plan channels of
// exp(-density * (pi r_co^2 + n_adjacent * pi r_adj^2)).
double analytic_expectation(double density_per_channel, double r_co, double r_adj,
                            const ChannelPlan& plan);
// Edge-corrected variant for a specific point: disk areas are clipped to the
// world rectangle.
double analytic_expectation_at(GeoPoint loc, const Rect& world, double density_per_channel,
                               double r_co, double r_adj, const ChannelPlan& plan);

struct ReferenceTarget {
    double pct = 0.0;
    double avg = 0.0;
};

// Published full-scale targets per city ("new_york"/"miami"), keyed by mW.
const std::map<double, ReferenceTarget>& reference_targets(const std::string& city);

std::vector<GainStats> run_experiment(const std::vector<CityScenario>& cities,
                                      const SeparationTable& table,
                                      const std::vector<PowerClass>& ladder,
                                      const GainOptions& options = {});

// Fixed-layout results table:
// city,power_mw,pct_gaining,avg_gained,stderr,paper_target_pct,paper_target_avg
std::string results_csv(const std::vector<GainStats>& stats);

} // namespace tvws
