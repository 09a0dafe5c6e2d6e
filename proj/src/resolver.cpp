#include "tvws/resolver.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace tvws {

double compute_validity(SourceLayer layer, double reliability, int n_contributors,
                        const ResolverPolicy& policy) {
    if (layer == SourceLayer::geodb) return policy.t_base_geodb_s;
    const double base =
        layer == SourceLayer::wsd_sensing ? policy.t_base_sensing_s : policy.t_base_tv_s;
    const double crowd =
        std::min(1.0, static_cast<double>(n_contributors) / static_cast<double>(policy.k_min));
    const double t = base * crowd * std::clamp(reliability, 0.0, 1.0);
    return std::clamp(t, policy.validity_floor_s, base);
}

bool Resolver::CacheKey::operator<(const CacheKey& o) const {
    return std::tie(cell.i, cell.j, channel, power_mw) <
           std::tie(o.cell.i, o.cell.j, o.channel, o.power_mw);
}

Resolver::Resolver(Deps deps)
    : area_(deps.area),
      plan_(std::move(deps.plan)),
      policy_(deps.policy),
      criteria_(deps.criteria),
      table_(std::move(deps.table)),
      model_(deps.model),
      ladder_(std::move(deps.ladder)),
      sensing_(deps.area, SensingStoreOptions{policy_.sensing_stale_skew_s,
                                              policy_.sensing_window_s,
                                              deps.criteria.sensing_threshold_dbm}),
      tvs_(deps.area, TvStoreOptions{60.0, policy_.gamma, 86400.0}),
      contributors_(deps.trust) {
    criteria_.validate();
    table_.validate();
    if (plan_.empty()) throw ValidationError("channel plan must not be empty", "plan");
    if (ladder_.empty()) throw ValidationError("power ladder must not be empty", "ladder");
    if (!std::is_sorted(ladder_.begin(), ladder_.end()))
        throw ValidationError("power ladder must ascend", "ladder");
    if (model_.calibration.slope_db_per_decade <= 0.0)
        model_.calibration = PathLossCalibration::fit(
            table_.calibration_rows(), interference_limit(criteria_, InterferenceMode::co),
            interference_limit(criteria_, InterferenceMode::adjacent));
}

double Resolver::transmitter_contour_m(const TvTransmitter& tx) const {
    const auto hit = contour_cache_.find(tx.id);
    if (hit != contour_cache_.end()) return hit->second;
    const double freq = plan_.contains(tx.channel) ? plan_.at(tx.channel).center_freq_mhz
                                                   : us_uhf_center_mhz(tx.channel);
    const double r = model_.contour_m(watts_to_dbm(tx.erp_w), freq, tx.antenna_height_m,
                                      criteria_.min_tv_field_dbu);
    contour_cache_[tx.id] = r;
    return r;
}

Resolver::Layer1Verdict Resolver::layer1_verdict(GeoPoint at, int channel) const {
    bool adjacent_block = false;
    for (const TvTransmitter& tx : transmitters_.all()) {
        const int gap = std::abs(tx.channel - channel);
        if (gap > 1) continue;
        const double d = distance(at, tx.loc);
        const double contour = transmitter_contour_m(tx);
        if (gap == 0) {
            if (d <= contour + policy_.layer1_co_margin_m) return Layer1Verdict::blocked_co;
        } else if (d <= contour + policy_.layer1_adj_margin_m) {
            adjacent_block = true;
        }
    }
    return adjacent_block ? Layer1Verdict::blocked_adjacent : Layer1Verdict::free;
}

bool Resolver::layer1_free(const Cell& cell, int channel) const {
    return layer1_verdict(area_.cell_center(cell), channel) == Layer1Verdict::free;
}

void Resolver::open_or_extend_task(const Cell& cell, const std::vector<int>& channels,
                                   double now) {
    if (channels.empty()) return;
    for (PullTask& t : tasks_) {
        if (!(t.cell == cell) || t.deadline < now) continue;
        for (int c : channels)
            if (std::find(t.channels.begin(), t.channels.end(), c) == t.channels.end())
                t.channels.push_back(c);
        std::sort(t.channels.begin(), t.channels.end());
        return;
    }
    PullTask t;
    t.task_id = next_task_id_++;
    t.cell = cell;
    t.channels = channels;
    std::sort(t.channels.begin(), t.channels.end());
    t.issued_at = now;
    t.deadline = now + policy_.pull_deadline_s;
    tasks_.push_back(std::move(t));
}

QueryResponse Resolver::resolve_query(const QueryRequest& req) {
    const Cell cell = area_.cell_of(req.loc); // throws OutOfAreaError
    const double now = req.time;

    QueryResponse resp;
    std::vector<int> unresolved;

    // Layer-3 context is shared by every channel of the query.
    bool l3_ready = false;
    std::vector<TvSetRecord> near_query, near_top;
    SeparationRadii radii_query{};
    bool gate_ok = false;
    double gate_rel = 0.0;
    int n_records = 0;

    auto ensure_l3 = [&] {
        if (l3_ready) return;
        l3_ready = true;
        radii_query = separation_radii(req.power, table_, &model_.calibration, criteria_);
        const double r_top =
            separation_radii(ladder_.back(), table_, &model_.calibration, criteria_).co_m;
        near_query = tvs_.tv_sets_near(req.loc, radii_query.co_m);
        near_top = r_top == radii_query.co_m ? near_query : tvs_.tv_sets_near(req.loc, r_top);
        n_records = static_cast<int>(near_query.size());

        gate_ok = true;
        std::vector<EvidenceWeight> conforming;
        conforming.reserve(near_query.size());
        for (const TvSetRecord& rec : near_query) {
            if (rec.state == PowerState::unknown || rec.reliability < policy_.theta)
                gate_ok = false;
            conforming.push_back({rec.reliability, 1.0});
        }
        gate_rel = compute_reliability(conforming, {}, policy_.gamma);
        gate_ok = gate_ok && gate_rel >= policy_.theta;
    };

    for (const Channel& c : plan_.channels()) {
        const CacheKey key{cell, c.index, req.power.eirp_mw};
        if (const auto hit = cache_.find(key); hit != cache_.end()) {
            const CacheSlot& slot = hit->second;
            if (slot.entry.valid_until > now && slot.entry.status != Availability::unknown &&
                distance(slot.query_loc, req.loc) <= policy_.cache_loc_epsilon_m) {
                if (slot.entry.status == Availability::free)
                    resp.items.push_back({c.index, *slot.entry.max_power, slot.entry.valid_until,
                                          slot.entry.reliability, slot.entry.source_layer});
                continue;
            }
        }

        AvailabilityEntry entry;
        entry.cell = cell;
        entry.channel = c.index;

        const Layer1Verdict l1 = policy_.enable_layer1
                                     ? layer1_verdict(area_.cell_center(cell), c.index)
                                     : Layer1Verdict::blocked_co;
        bool resolved = false;

        if (l1 == Layer1Verdict::free) {
            entry.status = Availability::free;
            entry.source_layer = SourceLayer::geodb;
            entry.reliability = 1.0;
            entry.persistence = Persistence::static_;
            entry.max_power = ladder_.back();
            entry.valid_until =
                now + compute_validity(SourceLayer::geodb, 1.0, policy_.k_min, policy_);
            resolved = true;
        }

        bool sensing_occupied = false;
        double sensing_confidence = 0.0;
        if (!resolved && policy_.enable_layer2) {
            const OccupancyEvidence ev =
                sensing_.occupancy_evidence(cell, c.index, policy_.sensing_window_s, now,
                                            policy_.fusion, policy_.fusion_k, criteria_,
                                            contributors_);
            const bool confidently_vacant = ev.has_data() && !ev.occupied &&
                                            ev.n_usable >= policy_.k_min &&
                                            ev.confidence >= policy_.theta;
            const bool may_free =
                l1 == Layer1Verdict::blocked_adjacent || policy_.layer2_co_override;
            if (confidently_vacant && may_free) {
                entry.status = Availability::free;
                entry.source_layer = SourceLayer::wsd_sensing;
                entry.reliability = ev.confidence;
                entry.persistence = Persistence::quasi_static;
                entry.max_power = ladder_.back();
                entry.valid_until =
                    now + compute_validity(SourceLayer::wsd_sensing, ev.confidence, ev.n_usable,
                                           policy_);
                resolved = true;
            } else if (ev.occupied) {
                sensing_occupied = true;
                sensing_confidence = ev.confidence;
            } else {
                unresolved.push_back(c.index); // not enough evidence: ask for more
            }
        }

        if (!resolved && policy_.enable_layer3) {
            ensure_l3();
            if (gate_ok) {
                const WsdLink link{req.loc, req.power, c.index};
                const bool blocked =
                    std::any_of(near_query.begin(), near_query.end(), [&](const TvSetRecord& tv) {
                        return violates(link, tv, radii_query, area_, policy_.unknown_tuning);
                    });
                if (!blocked) {
                    entry.status = Availability::free;
                    entry.source_layer = SourceLayer::tv_awareness;
                    entry.reliability = gate_rel;
                    entry.max_power = max_power(req.loc, c.index, near_top, ladder_, table_,
                                                area_, policy_.unknown_tuning)
                                          .value_or(req.power);
                    const auto history = tvs_.cell_history_start(cell);
                    const bool never_watched =
                        history && (now - *history >= policy_.viewing_boost_age_s) &&
                        tvs_.cell_channel_weight(cell, c.index) == 0.0;
                    entry.persistence =
                        never_watched ? Persistence::quasi_static : Persistence::volatile_;
                    entry.valid_until =
                        now + compute_validity(SourceLayer::tv_awareness, gate_rel, n_records,
                                               policy_);
                    resolved = true;
                } else {
                    entry.status = Availability::occupied;
                    entry.source_layer = SourceLayer::tv_awareness;
                    entry.reliability = gate_rel;
                    entry.persistence = Persistence::volatile_;
                    entry.valid_until = now + policy_.occupied_validity_s;
                    resolved = true;
                }
            }
        }

        if (!resolved) {
            entry.status = Availability::occupied;
            if (sensing_occupied) {
                entry.source_layer = SourceLayer::wsd_sensing;
                entry.reliability = sensing_confidence;
            } else {
                entry.source_layer = SourceLayer::geodb;
                entry.reliability = 1.0;
            }
            entry.persistence = Persistence::volatile_;
            entry.valid_until = now + policy_.occupied_validity_s;
        }

        cache_[key] = CacheSlot{entry, req.loc};
        if (entry.status == Availability::free)
            resp.items.push_back(
                {c.index, *entry.max_power, entry.valid_until, entry.reliability,
                 entry.source_layer});
    }

    open_or_extend_task(cell, unresolved, now);
    return resp;
}

std::size_t Resolver::expire(double now) {
    std::size_t n = 0;
    for (auto& [key, slot] : cache_) {
        if (slot.entry.valid_until < now && slot.entry.status != Availability::unknown) {
            slot.entry.status = Availability::unknown;
            slot.entry.max_power.reset();
            n += 1;
        }
    }
    std::erase_if(tasks_, [now](const PullTask& t) { return t.deadline < now; });
    return n;
}

std::vector<PullTask> Resolver::open_pull_tasks(double now) const {
    std::vector<PullTask> out;
    for (const PullTask& t : tasks_)
        if (t.deadline >= now) out.push_back(t);
    return out;
}

std::size_t Resolver::ingest_transmitters(const std::vector<TvTransmitter>& txs) {
    const std::size_t n = transmitters_.ingest(txs);
    contour_cache_.clear();
    cache_.clear();
    return n;
}

void Resolver::ingest_sensing(const WsdSensingReport& report) {
    sensing_.ingest(report, contributors_);
    const Cell cell = area_.cell_of(report.loc);
    std::erase_if(tasks_, [&](const PullTask& t) {
        return t.cell == cell && report.timestamp >= t.issued_at &&
               report.timestamp <= t.deadline;
    });
}

TvSetRecord Resolver::ingest_tv_event(const TvDetectionEvent& event) {
    return tvs_.ingest(event, contributors_);
}

std::vector<AvailabilityEntry> Resolver::entries_snapshot() const {
    std::vector<AvailabilityEntry> out;
    out.reserve(cache_.size());
    for (const auto& [key, slot] : cache_) out.push_back(slot.entry);
    return out;
}

Resolver::StateDump Resolver::dump_state() const {
    StateDump d;
    d.cache.reserve(cache_.size());
    for (const auto& [key, slot] : cache_)
        d.cache.push_back({key.cell, key.channel, key.power_mw, slot.query_loc, slot.entry});
    d.tasks = tasks_;
    std::sort(d.tasks.begin(), d.tasks.end(),
              [](const PullTask& a, const PullTask& b) { return a.task_id < b.task_id; });
    d.next_task_id = next_task_id_;
    return d;
}

void Resolver::restore_state(const StateDump& d) {
    cache_.clear();
    for (const StateDump::CacheRow& row : d.cache)
        cache_[CacheKey{row.cell, row.channel, row.power_mw}] = CacheSlot{row.entry, row.query_loc};
    tasks_ = d.tasks;
    next_task_id_ = d.next_task_id;
}

} // namespace tvws
