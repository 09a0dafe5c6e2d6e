#include "tvws/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <thread>
#include <unordered_map>

#include "tvws/digest.hpp"

namespace tvws {

AreaOfInterest rect_for_sq_miles(double sq_miles, double aspect, double cell_size_m) {
    const double a = sq_miles * kSqMileInSqM;
    const double w = std::sqrt(aspect * a);
    const double h = a / w;
    return AreaOfInterest(w, h, std::min(cell_size_m, std::min(w, h)));
}

CityScenario CityScenario::new_york(std::uint64_t seed) {
    CityScenario c;
    c.name = "new_york";
    c.area = rect_for_sq_miles(22.83, 2.0, 50.0);
    c.households = 732204;
    c.plan = ChannelPlan::us_uhf(21, 27);
    c.n_wsd = 100000;
    c.seed = seed;
    return c;
}

CityScenario CityScenario::miami(std::uint64_t seed) {
    CityScenario c;
    c.name = "miami";
    c.area = rect_for_sq_miles(35.0, 2.0, 50.0);
    c.households = 149077;
    c.plan = ChannelPlan::us_uhf(21, 26);
    c.n_wsd = 100000;
    c.seed = seed;
    return c;
}

CityScenario CityScenario::scaled(double factor) const {
    if (!(factor > 0.0)) throw ValidationError("scale factor must be positive", "scale");
    CityScenario c = *this;
    const double lin = std::sqrt(factor);
    const double w = area.width() * lin;
    const double h = area.height() * lin;
    c.area = AreaOfInterest(w, h, std::min(area.cell_size(), std::min(w, h)));
    c.households = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(static_cast<double>(households) * factor)));
    c.n_wsd = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(static_cast<double>(n_wsd) * factor)));
    return c;
}

void CityScenario::validate() const {
    if (!(pct_on >= 0.0 && pct_on <= 1.0)) throw ValidationError("pct_on outside [0, 1]", "pct_on");
    if (!(pct_broadcast >= 0.0 && pct_broadcast <= 1.0))
        throw ValidationError("pct_broadcast outside [0, 1]", "pct_broadcast");
    if (households == 0) throw ValidationError("households must be positive", "households");
    if (n_wsd == 0) throw ValidationError("n_wsd must be positive", "n_wsd");
    if (plan.empty()) throw ValidationError("channel plan must not be empty", "plan");
    if (!(zipf_exponent >= 0.0)) throw ValidationError("zipf_exponent must be >= 0", "zipf_exponent");
}

Scenario generate_scenario(const CityScenario& cfg) {
    cfg.validate();
    Scenario s;
    s.cfg = cfg;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> ux(0.0, cfg.area.width());
    std::uniform_real_distribution<double> uy(0.0, cfg.area.height());
    std::bernoulli_distribution on(cfg.pct_on);
    std::bernoulli_distribution broadcast(cfg.pct_broadcast);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.plan.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // Rank-weighted popularity over plan order; cumulative inverse-CDF keeps
    // the draw deterministic.
    std::vector<double> popularity_cdf;
    if (cfg.assignment == ChannelAssignment::zipf) {
        popularity_cdf.resize(cfg.plan.size());
        double total = 0.0;
        for (std::size_t k = 0; k < cfg.plan.size(); ++k) {
            total += 1.0 / std::pow(static_cast<double>(k + 1), cfg.zipf_exponent);
            popularity_cdf[k] = total;
        }
        for (double& c : popularity_cdf) c /= total;
    }
    const auto pick_channel = [&]() -> int {
        if (cfg.assignment == ChannelAssignment::uniform)
            return cfg.plan.channels()[pick(rng)].index;
        const double u = unit(rng);
        const auto it = std::lower_bound(popularity_cdf.begin(), popularity_cdf.end(), u);
        const std::size_t k = std::min<std::size_t>(
            static_cast<std::size_t>(it - popularity_cdf.begin()), cfg.plan.size() - 1);
        return cfg.plan.channels()[k].index;
    };

    for (std::uint64_t i = 0; i < cfg.households; ++i) {
        const GeoPoint loc{ux(rng), uy(rng)};
        const bool is_on = on(rng);
        bool is_broadcast = false;
        if (cfg.broadcast_base == BroadcastBase::of_operational) {
            if (is_on) is_broadcast = broadcast(rng);
        } else {
            is_broadcast = broadcast(rng) && is_on;
        }
        if (is_on) s.n_on += 1;
        if (is_broadcast) {
            s.n_on_broadcast += 1;
            s.protected_tvs.push_back({loc, pick_channel()});
        }
    }
    s.wsd_locs.reserve(cfg.n_wsd);
    for (std::uint64_t i = 0; i < cfg.n_wsd; ++i) s.wsd_locs.push_back({ux(rng), uy(rng)});

    Digest d;
    d.str(cfg.name).u64(cfg.seed).u64(cfg.households).u64(cfg.n_wsd);
    d.u64(s.n_on).u64(s.n_on_broadcast);
    for (const ProtectedTv& tv : s.protected_tvs)
        d.f64(tv.loc.x).f64(tv.loc.y).u64(static_cast<std::uint64_t>(tv.channel));
    for (const GeoPoint& p : s.wsd_locs) d.f64(p.x).f64(p.y);
    s.fingerprint = d.hex();
    return s;
}

GainStats evaluate_gain(const Scenario& scenario, const SeparationTable& table,
                        const std::vector<PowerClass>& ladder, const GainOptions& options) {
    const CityScenario& cfg = scenario.cfg;
    const std::size_t n_powers = ladder.size();
    const std::size_t n_channels = cfg.plan.size();
    if (n_powers == 0) throw ValidationError("empty power ladder", "ladder");
    if (n_channels > 63) throw ValidationError("plan too large for bitmask evaluation", "plan");
    if (!std::is_sorted(ladder.begin(), ladder.end()))
        throw ValidationError("power ladder must ascend", "ladder");

    std::vector<double> co2(n_powers), adj2(n_powers);
    for (std::size_t p = 0; p < n_powers; ++p) {
        const SeparationRadii r = separation_radii(ladder[p], table);
        co2[p] = r.co_m * r.co_m;
        adj2[p] = options.include_adjacent ? r.adj_m * r.adj_m : 0.0;
    }
    const double max_co2 = co2.back();
    const double max_co = std::sqrt(max_co2);

    // Plan-ordinal bitmasks: a receiver tuned to ordinal o blocks co_mask[o]
    // inside the co radius and adj_mask[o] inside the adjacent radius.
    std::unordered_map<int, int> ordinal;
    for (std::size_t k = 0; k < n_channels; ++k) ordinal[cfg.plan.channels()[k].index] = static_cast<int>(k);
    std::vector<std::uint64_t> co_mask(n_channels), adj_mask(n_channels);
    for (std::size_t k = 0; k < n_channels; ++k) {
        co_mask[k] = 1ull << k;
        std::uint64_t m = 0;
        const int idx = cfg.plan.channels()[k].index;
        for (int nb : {idx - 1, idx + 1}) {
            const auto it = ordinal.find(nb);
            if (it != ordinal.end()) m |= 1ull << it->second;
        }
        adj_mask[k] = m;
    }

    // CSR bucket grid, bucket edge = the largest co-channel radius, so every
    // relevant receiver lies in the 3x3 neighborhood of a WSD's bucket.
    const double bucket = std::max(max_co, 1.0);
    const int cols = std::max(1, static_cast<int>(std::ceil(cfg.area.width() / bucket)));
    const int rows = std::max(1, static_cast<int>(std::ceil(cfg.area.height() / bucket)));
    auto bucket_of = [&](GeoPoint p) {
        const int bi = std::min(cols - 1, std::max(0, static_cast<int>(p.x / bucket)));
        const int bj = std::min(rows - 1, std::max(0, static_cast<int>(p.y / bucket)));
        return bj * cols + bi;
    };
    const std::size_t n_buckets = static_cast<std::size_t>(cols) * rows;
    std::vector<std::uint32_t> bucket_count(n_buckets + 1, 0);
    for (const ProtectedTv& tv : scenario.protected_tvs) bucket_count[bucket_of(tv.loc) + 1] += 1;
    for (std::size_t b = 1; b <= n_buckets; ++b) bucket_count[b] += bucket_count[b - 1];
    std::vector<double> tvx(scenario.protected_tvs.size()), tvy(scenario.protected_tvs.size());
    std::vector<int> tvord(scenario.protected_tvs.size());
    {
        std::vector<std::uint32_t> cursor(bucket_count.begin(), bucket_count.end() - 1);
        for (const ProtectedTv& tv : scenario.protected_tvs) {
            const std::uint32_t at = cursor[bucket_of(tv.loc)]++;
            tvx[at] = tv.loc.x;
            tvy[at] = tv.loc.y;
            tvord[at] = ordinal.at(tv.channel);
        }
    }

    const std::size_t n_wsd = scenario.wsd_locs.size();
    std::vector<std::uint8_t> gained(n_wsd * n_powers, 0);

    auto worker = [&](std::size_t lo, std::size_t hi) {
        std::vector<std::uint64_t> blocked(n_powers);
        for (std::size_t w = lo; w < hi; ++w) {
            const GeoPoint loc = scenario.wsd_locs[w];
            std::fill(blocked.begin(), blocked.end(), 0);
            const int bi = std::min(cols - 1, std::max(0, static_cast<int>(loc.x / bucket)));
            const int bj = std::min(rows - 1, std::max(0, static_cast<int>(loc.y / bucket)));
            for (int j = std::max(0, bj - 1); j <= std::min(rows - 1, bj + 1); ++j) {
                for (int i = std::max(0, bi - 1); i <= std::min(cols - 1, bi + 1); ++i) {
                    const std::size_t b = static_cast<std::size_t>(j) * cols + i;
                    for (std::uint32_t t = bucket_count[b]; t < bucket_count[b + 1]; ++t) {
                        const double dx = tvx[t] - loc.x;
                        const double dy = tvy[t] - loc.y;
                        const double d2 = dx * dx + dy * dy;
                        if (d2 >= max_co2) continue;
                        const int o = tvord[t];
                        for (std::size_t p = 0; p < n_powers; ++p) {
                            if (d2 < co2[p]) blocked[p] |= co_mask[o];
                            if (d2 < adj2[p]) blocked[p] |= adj_mask[o];
                        }
                    }
                }
            }
            for (std::size_t p = 0; p < n_powers; ++p)
                gained[w * n_powers + p] =
                    static_cast<std::uint8_t>(n_channels - std::popcount(blocked[p]));
        }
    };

    const unsigned hw = std::thread::hardware_concurrency();
    const std::size_t n_threads =
        options.threads > 0 ? static_cast<std::size_t>(options.threads)
                            : std::max<std::size_t>(1, hw ? hw : 1);
    if (n_threads <= 1 || n_wsd < 2 * n_threads) {
        worker(0, n_wsd);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_wsd + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(n_wsd, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (std::thread& th : pool) th.join();
    }

    GainStats stats;
    stats.city = cfg.name;
    stats.seed = cfg.seed;
    stats.fingerprint = scenario.fingerprint;
    for (std::size_t p = 0; p < n_powers; ++p) {
        PowerGain g;
        g.power_mw = ladder[p].eirp_mw;
        g.n_wsd = n_wsd;
        // Merge per-WSD counts in index order so thread count never shows.
        for (std::size_t w = 0; w < n_wsd; ++w) g.histogram[gained[w * n_powers + p]] += 1;

        std::uint64_t sum = 0, sumsq = 0;
        for (const auto& [count, wsds] : g.histogram) {
            if (count == 0) continue;
            g.n_gaining += wsds;
            sum += static_cast<std::uint64_t>(count) * wsds;
            sumsq += static_cast<std::uint64_t>(count) * count * wsds;
        }
        const double n = static_cast<double>(n_wsd);
        const double frac = n_wsd ? static_cast<double>(g.n_gaining) / n : 0.0;
        g.pct_gaining = 100.0 * frac;
        g.avg_gained_over_all = n_wsd ? static_cast<double>(sum) / n : 0.0;
        g.avg_gained_over_gaining =
            g.n_gaining ? static_cast<double>(sum) / static_cast<double>(g.n_gaining) : 0.0;
        g.stderr_pct = n_wsd ? 100.0 * std::sqrt(frac * (1.0 - frac) / n) : 0.0;
        if (g.n_gaining > 1) {
            const double ng = static_cast<double>(g.n_gaining);
            const double mean = g.avg_gained_over_gaining;
            const double var =
                (static_cast<double>(sumsq) - ng * mean * mean) / (ng - 1.0);
            g.stderr_avg = std::sqrt(std::max(0.0, var) / ng);
        }
        stats.per_power.push_back(std::move(g));
    }
    return stats;
}

double analytic_expectation(double density_per_channel, double r_co, double r_adj,
                            const ChannelPlan& plan) {
    if (density_per_channel < 0.0)
        throw ValidationError("density must be non-negative", "density");
    double total = 0.0;
    for (const Channel& c : plan.channels()) {
        const double n_adj = static_cast<double>(plan.adjacent(c.index).size());
        const double lam = density_per_channel *
                           (std::numbers::pi * r_co * r_co +
                            n_adj * std::numbers::pi * r_adj * r_adj);
        total += std::exp(-lam);
    }
    return total;
}

double analytic_expectation_at(GeoPoint loc, const Rect& world, double density_per_channel,
                               double r_co, double r_adj, const ChannelPlan& plan) {
    if (density_per_channel < 0.0)
        throw ValidationError("density must be non-negative", "density");
    const double a_co = disk_rect_intersection_area(loc, r_co, world);
    const double a_adj = disk_rect_intersection_area(loc, r_adj, world);
    double total = 0.0;
    for (const Channel& c : plan.channels()) {
        const double n_adj = static_cast<double>(plan.adjacent(c.index).size());
        total += std::exp(-density_per_channel * (a_co + n_adj * a_adj));
    }
    return total;
}

const std::map<double, ReferenceTarget>& reference_targets(const std::string& city) {
    static const std::map<double, ReferenceTarget> ny = {
        {1.0, {100.0, 9.65}}, {5.0, {99.0, 4.0}},    {10.0, {92.0, 2.7}},
        {40.0, {49.8, 1.53}}, {100.0, {19.9, 1.27}},
    };
    static const std::map<double, ReferenceTarget> miami = {
        {1.0, {100.0, 23.4}}, {5.0, {100.0, 21.0}},  {10.0, {100.0, 19.6}},
        {40.0, {100.0, 15.5}}, {100.0, {100.0, 12.2}},
    };
    static const std::map<double, ReferenceTarget> none;
    if (city == "new_york" || city == "ny") return ny;
    if (city == "miami") return miami;
    return none;
}

std::vector<GainStats> run_experiment(const std::vector<CityScenario>& cities,
                                      const SeparationTable& table,
                                      const std::vector<PowerClass>& ladder,
                                      const GainOptions& options) {
    std::vector<GainStats> out;
    out.reserve(cities.size());
    for (const CityScenario& city : cities) {
        const Scenario s = generate_scenario(city);
        out.push_back(evaluate_gain(s, table, ladder, options));
    }
    return out;
}

std::string results_csv(const std::vector<GainStats>& stats) {
    std::string out = "city,power_mw,pct_gaining,avg_gained,stderr,paper_target_pct,paper_target_avg\n";
    char buf[256];
    for (const GainStats& g : stats) {
        const auto& targets = reference_targets(g.city);
        for (const PowerGain& p : g.per_power) {
            const auto t = targets.find(p.power_mw);
            if (t != targets.end())
                std::snprintf(buf, sizeof buf, "%s,%g,%.4f,%.4f,%.4f,%g,%g\n", g.city.c_str(),
                              p.power_mw, p.pct_gaining, p.avg_gained_over_gaining, p.stderr_avg,
                              t->second.pct, t->second.avg);
            else
                std::snprintf(buf, sizeof buf, "%s,%g,%.4f,%.4f,%.4f,,\n", g.city.c_str(),
                              p.power_mw, p.pct_gaining, p.avg_gained_over_gaining, p.stderr_avg);
            out += buf;
        }
    }
    return out;
}

} // namespace tvws
