#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "support.hpp"
#include "tvws/resolver.hpp"
#include "tvws/wire.hpp"

using namespace tvws;
using sup::channel_set;
using sup::sensing_report;
using sup::tv_event;

namespace {

TvTransmitter station(std::string id, GeoPoint loc, int channel, double erp_w,
                      double height_m = 100.0) {
    TvTransmitter tx;
    tx.id = std::move(id);
    tx.loc = loc;
    tx.channel = channel;
    tx.erp_w = erp_w;
    tx.antenna_height_m = height_m;
    return tx;
}

// Query locations snapped to cell centers so the geo rule evaluates exactly
// the distances the test reasons about.
GeoPoint snapped(const AreaOfInterest& area, GeoPoint p) {
    return area.cell_center(area.cell_of(p));
}

} // namespace

TEST_CASE("validity periods scale with crowd size and reliability") {
    const ResolverPolicy policy;

    CHECK(compute_validity(SourceLayer::geodb, 0.0, 0, policy) == 86400.0);
    CHECK(compute_validity(SourceLayer::geodb, 1.0, 100, policy) == 86400.0);

    CHECK(compute_validity(SourceLayer::tv_awareness, 1.0, 3, policy) == 120.0);
    CHECK(compute_validity(SourceLayer::tv_awareness, 1.0, 30, policy) == 120.0);
    CHECK(compute_validity(SourceLayer::tv_awareness, 0.0, 3, policy) == 60.0);

    CHECK(compute_validity(SourceLayer::wsd_sensing, 0.875, 3, policy) ==
          doctest::Approx(525.0).epsilon(1e-12));
    CHECK(compute_validity(SourceLayer::wsd_sensing, 1.0, 1, policy) ==
          doctest::Approx(200.0).epsilon(1e-12));
    CHECK(compute_validity(SourceLayer::wsd_sensing, 1.0, 0, policy) == 60.0);
    CHECK(compute_validity(SourceLayer::wsd_sensing, 1.0, 9, policy) == 600.0);
}

TEST_CASE("an empty database frees every channel at full power") {
    Resolver r(sup::small_world());
    const QueryRequest req{{123.0, 456.0}, PowerClass{40.0}, 5000.0};
    const QueryResponse resp = r.resolve_query(req);

    REQUIRE(resp.items.size() == 7);
    CHECK(channel_set(resp) == std::vector<int>{21, 22, 23, 24, 25, 26, 27});
    for (const auto& item : resp.items) {
        CHECK(item.max_power.eirp_mw == 100.0);
        CHECK(item.valid_until == 5000.0 + 86400.0);
        CHECK(item.reliability == 1.0);
        CHECK(item.source_layer == SourceLayer::geodb);
    }
    CHECK(r.layer1_free(r.area().cell_of(req.loc), 24));

    CHECK_THROWS_AS(r.resolve_query(QueryRequest{{-1.0, 0.0}, PowerClass{40.0}, 0.0}),
                    OutOfAreaError);
}

TEST_CASE("resolver construction validates its inputs and fits the field law") {
    auto deps = sup::small_world();
    deps.plan = ChannelPlan();
    CHECK_THROWS_AS(Resolver{deps}, ValidationError);

    deps = sup::small_world();
    deps.ladder.clear();
    CHECK_THROWS_AS(Resolver{deps}, ValidationError);

    deps = sup::small_world();
    std::swap(deps.ladder.front(), deps.ladder.back());
    CHECK_THROWS_AS(Resolver{deps}, ValidationError);

    // The auto-fitted law is observable through contour geometry: a station's
    // protected contour must match the direct solve.
    const double direct =
        solve_distance_for_field(sup::fitted_calibration(), watts_to_dbm(1000.0), 41.0);
    Resolver probe(sup::small_world());
    probe.ingest_transmitters({station("s", {2000.0, 1000.0}, 24, 1000.0)});
    const Cell inside = probe.area().cell_of({2000.0 + direct - 60.0, 1000.0});
    const Cell outside = probe.area().cell_of({2000.0 + direct + 60.0, 1000.0});
    CHECK_FALSE(probe.layer1_free(inside, 24));
    CHECK(probe.layer1_free(outside, 24));
}

TEST_CASE("the geo layer blocks inside protected contours and their neighbors") {
    auto deps = sup::small_world();
    Resolver r(deps);
    const GeoPoint tx_loc{1000.0, 1000.0};
    r.ingest_transmitters({station("w24", tx_loc, 24, 1000.0)});

    const double contour =
        solve_distance_for_field(sup::fitted_calibration(), watts_to_dbm(1000.0), 41.0);
    REQUIRE(contour > 500.0);
    REQUIRE(contour < 2000.0);

    const GeoPoint in_loc = snapped(r.area(), {tx_loc.x + contour * 0.5, tx_loc.y});
    const GeoPoint out_loc = snapped(r.area(), {tx_loc.x + contour + 100.0, tx_loc.y});
    REQUIRE(distance(in_loc, tx_loc) < contour - 50.0);
    REQUIRE(distance(out_loc, tx_loc) > contour + 50.0);

    SUBCASE("co-channel and both adjacents are blocked inside") {
        const QueryResponse resp = r.resolve_query({in_loc, PowerClass{40.0}, 1000.0});
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 26, 27});
        // The blocked channels become occupied cache entries with fallback
        // provenance: full-confidence database answers, short-lived.
        int occupied = 0;
        for (const AvailabilityEntry& e : r.entries_snapshot())
            if (e.status == Availability::occupied) {
                occupied += 1;
                CHECK(e.source_layer == SourceLayer::geodb);
                CHECK(e.reliability == 1.0);
                CHECK(e.valid_until == 1000.0 + 60.0);
                CHECK_FALSE(e.max_power.has_value());
            }
        CHECK(occupied == 3);
    }

    SUBCASE("just beyond the contour everything frees") {
        const QueryResponse resp = r.resolve_query({out_loc, PowerClass{40.0}, 1000.0});
        CHECK(resp.items.size() == 7);
    }

    SUBCASE("boundary midpoints obey the exact contour comparison") {
        // A cell center sitting within one meter of the contour still resolves
        // strictly by d <= contour.
        const Cell cell = r.area().cell_of({tx_loc.x + contour, tx_loc.y});
        const GeoPoint center = r.area().cell_center(cell);
        const bool inside = distance(center, tx_loc) <= contour;
        CHECK(r.layer1_free(cell, 24) == !inside);
    }

    SUBCASE("a second query from the same cell is served from the cache") {
        const QueryResponse first = r.resolve_query({in_loc, PowerClass{40.0}, 1000.0});
        const QueryResponse again = r.resolve_query({in_loc, PowerClass{40.0}, 1030.0});
        REQUIRE(channel_set(first) == channel_set(again));
        for (std::size_t i = 0; i < first.items.size(); ++i) {
            CHECK(again.items[i].valid_until == first.items[i].valid_until);
            CHECK(again.items[i].reliability == first.items[i].reliability);
        }

        // A different power class is a different cache key.
        const QueryResponse low = r.resolve_query({in_loc, PowerClass{1.0}, 1030.0});
        CHECK(channel_set(low) == channel_set(first));

        // Beyond the location epsilon the cached answer no longer applies.
        const GeoPoint shifted{in_loc.x + 2.0, in_loc.y};
        REQUIRE(r.area().cell_of(shifted) == r.area().cell_of(in_loc));
        const QueryResponse moved = r.resolve_query({shifted, PowerClass{40.0}, 1030.0});
        CHECK(channel_set(moved) == channel_set(first));
        for (const auto& item : moved.items)
            CHECK(item.valid_until == 1030.0 + 86400.0); // freshly recomputed
    }
}

TEST_CASE("blanket coverage leaves nothing to grant") {
    Resolver r(sup::small_world());
    std::vector<TvTransmitter> txs;
    for (int ch = 21; ch <= 27; ++ch)
        txs.push_back(station("t" + std::to_string(ch), {2000.0, 1000.0}, ch, 5000.0));
    r.ingest_transmitters(txs);
    // 5 kW clears 41 dBu far beyond the 4 km x 2 km area.
    const QueryResponse resp = r.resolve_query({{100.0, 100.0}, PowerClass{40.0}, 1000.0});
    CHECK(resp.items.empty());
}

TEST_CASE("confident vacancy reports lift adjacent-channel blocks only") {
    auto deps = sup::small_world();
    const GeoPoint tx_loc{1000.0, 1000.0};

    auto build = [&](bool override_co) {
        deps.policy.layer2_co_override = override_co;
        Resolver r(deps);
        r.ingest_transmitters({station("w24", tx_loc, 24, 1000.0)});
        return r;
    };

    const double contour =
        solve_distance_for_field(sup::fitted_calibration(), watts_to_dbm(1000.0), 41.0);
    const AreaOfInterest area = deps.area;
    const GeoPoint loc = snapped(area, {tx_loc.x + contour * 0.5, tx_loc.y});
    const double t = 2000.0;

    auto feed_quiet = [&](Resolver& r) {
        // Three usable all-quiet sensors on the blocked channels, inside the
        // evidence window of the upcoming query.
        for (int k = 0; k < 3; ++k)
            r.ingest_sensing(sensing_report("s" + std::to_string(k), loc, t - 50.0 + k,
                                            {{23, -115.0}, {24, -115.0}}));
    };

    SUBCASE("adjacent block lifts; co-channel block stays") {
        Resolver r = build(false);
        feed_quiet(r);
        const QueryResponse resp = r.resolve_query({loc, PowerClass{40.0}, t});
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 23, 26, 27});

        const auto items = resp.items;
        const auto freed = std::find_if(items.begin(), items.end(),
                                        [](const auto& it) { return it.channel == 23; });
        REQUIRE(freed != items.end());
        CHECK(freed->source_layer == SourceLayer::wsd_sensing);
        // First sensor reports into an empty cell (trust stays 0.5); the other
        // two corroborate the quiet majority on ingest (+0.01 each), so the
        // noisy-or support is 1 - 0.5 * 0.49 * 0.49 and validity scales with it.
        const double support = 1.0 - 0.5 * 0.49 * 0.49;
        CHECK(freed->reliability == doctest::Approx(support).epsilon(1e-12));
        CHECK(freed->valid_until == doctest::Approx(t + 600.0 * support).epsilon(1e-12));
        CHECK(freed->max_power.eirp_mw == 100.0);

        // Channels without evidence become pull work: 24 (quiet but co-blocked,
        // no override) and 25 (no readings at all).
        const auto tasks = r.open_pull_tasks(t);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0].cell == area.cell_of(loc));
        CHECK(tasks[0].channels == std::vector<int>{24, 25});
        CHECK(tasks[0].deadline == t + 120.0);
    }

    SUBCASE("the override extends the lift to co-channel blocks") {
        Resolver r = build(true);
        feed_quiet(r);
        const QueryResponse resp = r.resolve_query({loc, PowerClass{40.0}, t});
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 23, 24, 26, 27});
        const auto tasks = r.open_pull_tasks(t);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0].channels == std::vector<int>{25});
    }

    SUBCASE("vacancy below the confidence bar does not lift") {
        Resolver r = build(false);
        // Two sensors only: 1 - 0.5^2 = 0.75 < theta, and n_usable < k_min.
        for (int k = 0; k < 2; ++k)
            r.ingest_sensing(
                sensing_report("s" + std::to_string(k), loc, t - 50.0 + k, {{23, -115.0}}));
        const QueryResponse resp = r.resolve_query({loc, PowerClass{40.0}, t});
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 26, 27});
    }

    SUBCASE("a detection marks the channel occupied with sensing provenance") {
        Resolver r = build(false);
        r.ingest_sensing(sensing_report("hot", loc, t - 10.0, {{23, -90.0}}));
        const QueryResponse resp = r.resolve_query({loc, PowerClass{40.0}, t});
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 26, 27});

        bool found = false;
        for (const AvailabilityEntry& e : r.entries_snapshot()) {
            if (e.channel != 23) continue;
            found = true;
            CHECK(e.status == Availability::occupied);
            CHECK(e.source_layer == SourceLayer::wsd_sensing);
            CHECK(e.reliability == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(e.valid_until == t + 60.0);
        }
        CHECK(found);
    }
}

TEST_CASE("pull tasks merge, close on fresh reports, and expire") {
    auto deps = sup::small_world();
    deps.policy.enable_layer1 = false; // everything co-blocked: all channels unresolved
    Resolver r(deps);
    const GeoPoint loc_a{100.0, 100.0};
    const GeoPoint loc_b{3900.0, 1900.0};

    r.resolve_query({loc_a, PowerClass{40.0}, 1000.0});
    auto tasks = r.open_pull_tasks(1000.0);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].cell == r.area().cell_of(loc_a));
    CHECK(tasks[0].channels == std::vector<int>{21, 22, 23, 24, 25, 26, 27});
    CHECK(tasks[0].issued_at == 1000.0);
    CHECK(tasks[0].deadline == 1120.0);
    const auto first_id = tasks[0].task_id;

    // Re-resolving the same cell merges into the live task instead of stacking.
    r.resolve_query({loc_a, PowerClass{40.0}, 1061.0}); // past the 60 s occupied validity
    tasks = r.open_pull_tasks(1061.0);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].task_id == first_id);
    CHECK(tasks[0].channels == std::vector<int>{21, 22, 23, 24, 25, 26, 27});

    r.resolve_query({loc_b, PowerClass{40.0}, 1062.0});
    tasks = r.open_pull_tasks(1062.0);
    REQUIRE(tasks.size() == 2);
    CHECK(tasks[1].task_id > first_id);

    // A sensing report in the task's cell inside its window closes it.
    r.ingest_sensing(sensing_report("closer", loc_a, 1100.0, {{24, -115.0}}));
    tasks = r.open_pull_tasks(1100.0);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].cell == r.area().cell_of(loc_b));

    // Reports outside the window leave tasks open.
    r.ingest_sensing(sensing_report("late", loc_b, 1500.0, {{24, -115.0}}));
    CHECK(r.open_pull_tasks(1182.0).size() == 1);

    // The deadline filter and the expiry sweep both retire stale tasks.
    CHECK(r.open_pull_tasks(1183.0).empty());
    r.expire(1183.0);
    CHECK(r.dump_state().tasks.empty());
}

TEST_CASE("receiver records gate the awareness layer") {
    auto deps = sup::small_world();
    deps.policy.enable_layer1 = false;
    deps.policy.enable_layer2 = false;
    auto fresh = [&] { return Resolver(deps); };
    const GeoPoint loc{2000.0, 1000.0};
    const PowerClass p40{40.0};

    SUBCASE("no records means no awareness answer at a positive threshold") {
        Resolver r = fresh();
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0});
        CHECK(resp.items.empty());
        for (const AvailabilityEntry& e : r.entries_snapshot()) {
            CHECK(e.status == Availability::occupied);
            CHECK(e.valid_until == 1060.0);
        }
    }

    SUBCASE("reliable determinate records free the clear channels") {
        Resolver r = fresh();
        // Three agreeing sightings: the second corroborator's trust rises to
        // 0.51 before the third lands, so 1 - 0.5 * 0.49 * 0.5 = 0.8775.
        for (int k = 0; k < 3; ++k)
            r.ingest_tv_event(tv_event("w" + std::to_string(k), {2100.0, 1000.0}, 900.0 + k,
                                       PowerState::on, 24, 1.0, "den"));
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0});
        // 100 m separation: inside the 430 m co radius and the 22.4 m adjacent
        // radius does not reach, so only the tuned channel is lost.
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 23, 25, 26, 27});
        for (const auto& item : resp.items) {
            CHECK(item.source_layer == SourceLayer::tv_awareness);
            CHECK(item.reliability == doctest::Approx(0.8775).epsilon(1e-12));
            // One nearby record: the crowd-size scaling pulls the validity
            // down to the floor.
            CHECK(item.valid_until == doctest::Approx(1000.0 + 60.0).epsilon(1e-9));
        }

        const auto items = resp.items;
        const auto ch23 = std::find_if(items.begin(), items.end(),
                                       [](const auto& it) { return it.channel == 23; });
        REQUIRE(ch23 != items.end());
        // The record sits 100 m away: adjacent separation for 100 mW is 26.4 m,
        // so even the top class clears and the grant escalates past 40 mW.
        CHECK(ch23->max_power.eirp_mw == 100.0);
    }

    SUBCASE("a record below the reliability bar blocks the whole layer") {
        Resolver r = fresh();
        r.ingest_tv_event(tv_event("w", {2100.0, 1000.0}, 900.0, PowerState::on, 24, 1.0, "den"));
        // Single sighting: reliability 0.5 < 0.8.
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0});
        CHECK(resp.items.empty());
    }

    SUBCASE("an indeterminate record blocks the whole layer") {
        Resolver r = fresh();
        for (int k = 0; k < 3; ++k)
            r.ingest_tv_event(tv_event("w" + std::to_string(k), {2100.0, 1000.0}, 900.0 + k,
                                       PowerState::on, 24, 1.0, "den"));
        r.ingest_tv_event(tv_event("x", {2050.0, 1000.0}, 950.0, PowerState::unknown,
                                   std::nullopt, 0.9, "mystery"));
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0});
        CHECK(resp.items.empty());
    }

    SUBCASE("records beyond the co radius do not gate") {
        // 500 m away: outside the 430 m co radius for 40 mW, so the gate never
        // sees it and every channel frees (empty neighborhood needs theta 0).
        auto open_deps = deps;
        open_deps.policy.theta = 0.0;
        Resolver r0(open_deps);
        r0.ingest_tv_event(tv_event("w", {2500.0, 1000.0}, 900.0, PowerState::on, 24, 1.0, "far"));
        const QueryResponse resp = r0.resolve_query({loc, p40, 1000.0});
        CHECK(resp.items.size() == 7);

        // The record still caps the escalated grant: it sits inside the
        // 533 m top-class co radius, so channel 24 stops at 40 mW.
        for (const auto& item : resp.items)
            CHECK(item.max_power.eirp_mw == (item.channel == 24 ? 40.0 : 100.0));
    }

    SUBCASE("off records never block and their channels stay grantable") {
        Resolver r = fresh();
        for (int k = 0; k < 3; ++k)
            r.ingest_tv_event(tv_event("w" + std::to_string(k), {2020.0, 1000.0}, 900.0 + k,
                                       PowerState::off, std::nullopt, 1.0, "idle"));
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0});
        CHECK(resp.items.size() == 7);
    }

    SUBCASE("long-unwatched channels are promoted to quasi-static persistence") {
        Resolver r = fresh();
        const double week = 7.0 * 86400.0;
        // History anchor: an old sighting in the query cell tuned to 24.
        r.ingest_tv_event(tv_event("old", {2001.0, 1001.0}, 1000.0, PowerState::on, 24, 1.0,
                                   "anchor"));
        // Fresh corroboration much later keeps the record alive and reliable.
        for (int k = 0; k < 3; ++k)
            r.ingest_tv_event(tv_event("w" + std::to_string(k), {2001.0, 1001.0},
                                       1000.0 + week + k, PowerState::on, 24, 1.0, "anchor"));
        const QueryResponse resp = r.resolve_query({loc, p40, 1000.0 + week + 30.0});
        // The record sits ~1.4 m from the query: its tuned channel and both
        // neighbors are blocked; everything else frees.
        CHECK(channel_set(resp) == std::vector<int>{21, 22, 26, 27});
        std::map<int, Persistence> persistence;
        for (const AvailabilityEntry& e : r.entries_snapshot())
            if (e.status == Availability::free) persistence[e.channel] = e.persistence;
        // None of the freed channels was ever watched across a week of cell
        // history, so they are all promoted.
        for (const int ch : {21, 22, 26, 27}) {
            REQUIRE(persistence.count(ch) == 1);
            CHECK(persistence[ch] == Persistence::quasi_static);
        }
    }
}

TEST_CASE("expiry flips stale cache entries to unknown exactly once") {
    Resolver r(sup::small_world());
    r.resolve_query({{100.0, 100.0}, PowerClass{40.0}, 1000.0}); // 7 free entries, 86400 validity
    auto deps = sup::small_world();
    deps.policy.enable_layer1 = false;
    Resolver blocked(deps);
    blocked.resolve_query({{100.0, 100.0}, PowerClass{40.0}, 1000.0}); // 7 occupied, 60 s

    CHECK(r.expire(1000.0 + 86400.0) == 0);        // valid_until == now is not yet stale
    CHECK(r.expire(1000.0 + 86400.0 + 1.0) == 7);  // strict comparison
    CHECK(r.expire(1000.0 + 86400.0 + 2.0) == 0);  // already unknown: not recounted
    for (const AvailabilityEntry& e : r.entries_snapshot()) {
        CHECK(e.status == Availability::unknown);
        CHECK_FALSE(e.max_power.has_value());
    }

    CHECK(blocked.expire(1061.0) == 7);

    // Expired entries are recomputed on the next query rather than served.
    const QueryResponse resp = r.resolve_query({{100.0, 100.0}, PowerClass{40.0}, 90000.0});
    CHECK(resp.items.size() == 7);
    for (const auto& item : resp.items) CHECK(item.valid_until == 90000.0 + 86400.0);
}

TEST_CASE("derived state dumps and restores exactly") {
    auto deps = sup::small_world();
    deps.policy.enable_layer1 = false;
    Resolver r(deps);
    r.resolve_query({{100.0, 100.0}, PowerClass{40.0}, 1000.0});
    r.resolve_query({{3900.0, 1900.0}, PowerClass{10.0}, 1005.0});

    const auto dump = r.dump_state();
    CHECK(dump.cache.size() == 14);
    CHECK(dump.tasks.size() == 2);

    Resolver copy(deps);
    copy.restore_state(dump);
    const auto redump = copy.dump_state();
    REQUIRE(redump.cache.size() == dump.cache.size());
    for (std::size_t i = 0; i < dump.cache.size(); ++i) {
        CHECK(redump.cache[i].cell == dump.cache[i].cell);
        CHECK(redump.cache[i].channel == dump.cache[i].channel);
        CHECK(redump.cache[i].power_mw == dump.cache[i].power_mw);
        CHECK(wire::to_json(redump.cache[i].entry) == wire::to_json(dump.cache[i].entry));
    }
    REQUIRE(redump.tasks.size() == dump.tasks.size());
    for (std::size_t i = 0; i < dump.tasks.size(); ++i)
        CHECK(wire::to_json(redump.tasks[i]) == wire::to_json(dump.tasks[i]));
    CHECK(redump.next_task_id == dump.next_task_id);

    // The restored resolver allocates the next task id from the same counter.
    r.resolve_query({{2000.0, 500.0}, PowerClass{40.0}, 1010.0});
    copy.resolve_query({{2000.0, 500.0}, PowerClass{40.0}, 1010.0});
    CHECK(r.dump_state().next_task_id == copy.dump_state().next_task_id);
}

TEST_CASE("crowd answers never contradict the receiver ledger they served") {
    std::mt19937_64 rng(2026);
    int freed_by_crowd = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto world = sup::make_consistent_world(seed);
        Resolver r = sup::make_resolver(world);
        Resolver geo_only = [&] {
            auto deps = world.deps;
            deps.policy.enable_layer2 = false;
            deps.policy.enable_layer3 = false;
            Resolver g(deps);
            g.ingest_transmitters(world.transmitters);
            return g;
        }();

        for (int q = 0; q < 10; ++q) {
            const GeoPoint loc = sup::random_query_loc(world, rng);
            const PowerClass power{
                r.ladder()[std::uniform_int_distribution<std::size_t>(0, 4)(rng)].eirp_mw};
            const double t = world.t_query + q * 130.0; // defeats the short crowd validities
            const QueryResponse full = r.resolve_query({loc, power, t});
            const QueryResponse base = geo_only.resolve_query({loc, power, t});

            // Conservative superset: everything the receiver-blind database
            // frees stays free, and crowd additions carry crowd provenance
            // above the reliability bar.
            const auto full_set = channel_set(full);
            for (const int ch : channel_set(base))
                CHECK(std::find(full_set.begin(), full_set.end(), ch) != full_set.end());
            const auto base_set = channel_set(base);
            for (const auto& item : full.items) {
                if (std::find(base_set.begin(), base_set.end(), item.channel) != base_set.end())
                    continue;
                freed_by_crowd += 1;
                CHECK(item.source_layer != SourceLayer::geodb);
                CHECK(item.reliability >= r.policy().theta);
            }

            // No granted channel/power combination violates any receiver record.
            CHECK_FALSE(sup::response_violates(r, full, loc));
        }
    }
    // The generator must actually exercise the crowd layers.
    CHECK(freed_by_crowd > 0);
}

TEST_CASE("with only the awareness layer the resolver equals the exhaustive oracle") {
    std::mt19937_64 rng(31337);
    auto deps = sup::small_world();
    deps.policy.enable_layer1 = false;
    deps.policy.enable_layer2 = false;
    deps.policy.theta = 0.0;

    for (int round = 0; round < 8; ++round) {
        Resolver r(deps);
        std::uniform_real_distribution<double> ux(0.0, deps.area.width());
        std::uniform_real_distribution<double> uy(0.0, deps.area.height());
        std::uniform_int_distribution<int> uch(21, 27);
        std::uniform_real_distribution<double> coin(0.0, 1.0);

        const int n_tv = std::uniform_int_distribution<int>(5, 60)(rng);
        double ts = 100.0;
        for (int k = 0; k < n_tv; ++k) {
            const GeoPoint loc{ux(rng), uy(rng)};
            const bool on = coin(rng) < 0.7;
            ts += 3.0;
            r.ingest_tv_event(tv_event("obs", loc, ts,
                                       on ? PowerState::on : PowerState::off,
                                       on ? std::optional<int>(uch(rng)) : std::nullopt, 1.0,
                                       "tv-" + std::to_string(k)));
            if (coin(rng) < 0.2) {
                ts += 3.0;
                r.ingest_tv_event(tv_event("obs2", loc, ts, PowerState::on, uch(rng), 0.9,
                                           "tv-" + std::to_string(k)));
            }
        }

        const auto records = r.tvs().snapshot();
        double t = ts + 10.0;
        for (int q = 0; q < 6; ++q) {
            const GeoPoint loc{ux(rng), uy(rng)};
            const PowerClass power{
                deps.ladder[std::uniform_int_distribution<std::size_t>(0, 4)(rng)].eirp_mw};
            const QueryResponse got = r.resolve_query({loc, power, t});
            const auto want = allowed_channels(loc, power, records, r.plan(), r.table(),
                                               r.area(), deps.policy.unknown_tuning);
            REQUIRE(channel_set(got) == channel_set(want));
            for (const auto& item : got.items) {
                const auto strongest = max_power(loc, item.channel, records, r.ladder(),
                                                 r.table(), r.area(),
                                                 deps.policy.unknown_tuning);
                CHECK(item.max_power.eirp_mw == strongest.value_or(power).eirp_mw);
            }
            t += 130.0; // past every crowd validity: no cache reuse across rounds
        }
    }
}
