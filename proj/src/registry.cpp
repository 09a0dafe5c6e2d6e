#include "tvws/registry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tvws/reliability.hpp"

namespace tvws {

namespace {
constexpr double kGeoEpsilonM = 1e-6; // widens bucket scans so boundary hits survive
}

void TvTransmitter::validate() const {
    if (!loc.finite()) throw ValidationError("transmitter location must be finite", "loc");
    if (!(erp_w > 0.0)) throw ValidationError("ERP must be positive", "erp_w");
    if (!(antenna_height_m > 0.0))
        throw ValidationError("antenna height must be positive", "antenna_height_m");
}

void WsdSensingReport::validate() const {
    if (!loc.finite()) throw ValidationError("report location must be finite", "loc");
    if (readings_dbm.empty()) throw ValidationError("report carries no readings", "readings");
    for (const auto& [ch, dbm] : readings_dbm)
        if (!std::isfinite(dbm))
            throw ValidationError("reading for channel " + std::to_string(ch) + " not finite",
                                  "readings");
    if (!std::isfinite(claimed_sensitivity_dbm))
        throw ValidationError("claimed sensitivity not finite", "claimed_sensitivity_dbm");
    if (!std::isfinite(timestamp)) throw ValidationError("timestamp not finite", "timestamp");
}

void TvDetectionEvent::validate() const {
    if (!loc && !cell) throw ValidationError("event needs a location or a cell", "loc");
    if (loc && !loc->finite()) throw ValidationError("event location must be finite", "loc");
    if (!(confidence >= 0.0 && confidence <= 1.0))
        throw ValidationError("confidence outside [0, 1]", "confidence");
    if (!std::isfinite(timestamp)) throw ValidationError("timestamp not finite", "timestamp");
}

double tv_distance_m(const TvSetRecord& tv, GeoPoint from, const AreaOfInterest& area) {
    if (tv.loc) return distance(*tv.loc, from);
    return rect_distance(area.cell_rect(tv.cell), from);
}

double ContributorLedger::trust(const std::string& contributor_id) const {
    const ContributorProfile* p = find(contributor_id);
    return p ? p->trust : policy_.initial;
}

const ContributorProfile* ContributorLedger::find(const std::string& contributor_id) const {
    const auto it = profiles_.find(contributor_id);
    return it == profiles_.end() ? nullptr : &it->second;
}

ContributorProfile& ContributorLedger::touch(const std::string& contributor_id) {
    auto [it, inserted] = profiles_.try_emplace(contributor_id);
    if (inserted) {
        it->second.contributor_id = contributor_id;
        it->second.trust = policy_.initial;
    }
    return it->second;
}

void ContributorLedger::note_report(const std::string& contributor_id) {
    touch(contributor_id).report_count += 1;
}

void ContributorLedger::note_conforming(const std::string& contributor_id) {
    ContributorProfile& p = touch(contributor_id);
    p.report_count += 1;
    p.trust = std::clamp(p.trust + policy_.conforming_delta, 0.0, 1.0);
}

void ContributorLedger::note_conflicting(const std::string& contributor_id) {
    ContributorProfile& p = touch(contributor_id);
    p.report_count += 1;
    p.conflict_count += 1;
    p.trust = std::clamp(p.trust + policy_.conflicting_delta, 0.0, 1.0);
}

std::vector<ContributorProfile> ContributorLedger::all() const {
    std::vector<ContributorProfile> out;
    out.reserve(profiles_.size());
    for (const auto& [id, p] : profiles_) out.push_back(p);
    return out;
}

void ContributorLedger::restore(const std::vector<ContributorProfile>& profiles) {
    profiles_.clear();
    for (const ContributorProfile& p : profiles) profiles_[p.contributor_id] = p;
}

std::size_t TransmitterRegistry::ingest(const TvTransmitter& tx) {
    tx.validate();
    const auto it = by_id_.find(tx.id);
    if (it != by_id_.end()) {
        txs_[it->second] = tx;
    } else {
        by_id_[tx.id] = txs_.size();
        txs_.push_back(tx);
    }
    return 1;
}

std::size_t TransmitterRegistry::ingest(const std::vector<TvTransmitter>& txs) {
    std::size_t n = 0;
    for (const TvTransmitter& tx : txs) n += ingest(tx);
    return n;
}

std::vector<const TvTransmitter*> TransmitterRegistry::on_channel(int channel) const {
    std::vector<const TvTransmitter*> out;
    for (const TvTransmitter& tx : txs_)
        if (tx.channel == channel) out.push_back(&tx);
    return out;
}

void TransmitterRegistry::clear() {
    txs_.clear();
    by_id_.clear();
}

std::vector<TvTransmitter> TransmitterRegistry::parse(const std::string& text) {
    std::vector<TvTransmitter> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        TvTransmitter tx;
        if (!(fields >> tx.id)) continue;
        if (!(fields >> tx.loc.x >> tx.loc.y >> tx.channel >> tx.erp_w >> tx.antenna_height_m))
            throw ValidationError("transmitter file line " + std::to_string(lineno) +
                                      ": expected id,x_m,y_m,channel,erp_w,haat_m",
                                  "row");
        tx.validate();
        out.push_back(std::move(tx));
    }
    return out;
}

std::vector<TvTransmitter> TransmitterRegistry::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transmitter file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void TransmitterRegistry::save_file(const std::string& path,
                                    const std::vector<TvTransmitter>& txs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write transmitter file: " + path);
    out << "# id,x_m,y_m,channel,erp_w,haat_m\n";
    for (const TvTransmitter& tx : txs) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%d,%g,%g\n", tx.id.c_str(), tx.loc.x,
                      tx.loc.y, tx.channel, tx.erp_w, tx.antenna_height_m);
        out << buf;
    }
}

void SensingStore::ingest(const WsdSensingReport& report, ContributorLedger& ledger) {
    report.validate();
    const Cell cell = area_.cell_of(report.loc); // throws OutOfAreaError

    const auto latest = latest_ts_.find(report.contributor_id);
    if (latest != latest_ts_.end() && report.timestamp < latest->second - options_.stale_skew_s)
        throw StaleTimestampError("report from " + report.contributor_id + " predates their latest by more than " +
                                  std::to_string(options_.stale_skew_s) + " s");

    // Peer agreement: compare this report's detections with the per-channel
    // majority of nearby-in-time reports already in the cell. Trust only moves
    // when peers exist to corroborate or contradict.
    int agreements = 0, disagreements = 0;
    if (const auto it = by_cell_.find(cell); it != by_cell_.end()) {
        for (const auto& [channel, reading] : report.readings_dbm) {
            const bool mine = reading >= options_.detection_threshold_dbm;
            int peers_detect = 0, peers_quiet = 0;
            for (const WsdSensingReport& peer : it->second) {
                if (std::abs(peer.timestamp - report.timestamp) > options_.trust_window_s)
                    continue;
                const auto r = peer.readings_dbm.find(channel);
                if (r == peer.readings_dbm.end()) continue;
                (r->second >= options_.detection_threshold_dbm ? peers_detect : peers_quiet) += 1;
            }
            if (peers_detect == peers_quiet) continue; // no majority verdict
            const bool majority = peers_detect > peers_quiet;
            (mine == majority ? agreements : disagreements) += 1;
        }
    }
    if (disagreements > agreements)
        ledger.note_conflicting(report.contributor_id);
    else if (agreements > 0)
        ledger.note_conforming(report.contributor_id);
    else
        ledger.note_report(report.contributor_id);

    auto& bucket = by_cell_[cell];
    const auto pos = std::upper_bound(bucket.begin(), bucket.end(), report.timestamp,
                                      [](double t, const WsdSensingReport& r) { return t < r.timestamp; });
    bucket.insert(pos, report);
    count_ += 1;

    auto& latest_slot = latest_ts_[report.contributor_id];
    latest_slot = std::max(latest_slot, report.timestamp);
}

std::vector<const WsdSensingReport*> SensingStore::reports_in(const Cell& cell, double window_s,
                                                              double now) const {
    std::vector<const WsdSensingReport*> out;
    const auto it = by_cell_.find(cell);
    if (it == by_cell_.end()) return out;
    for (const WsdSensingReport& r : it->second)
        if (r.timestamp >= now - window_s) out.push_back(&r);
    return out;
}

OccupancyEvidence SensingStore::occupancy_evidence(const Cell& cell, int channel,
                                                   double window_s, double now, FusionRule rule,
                                                   int k, const ProtectionCriteria& criteria,
                                                   const ContributorLedger& ledger) const {
    OccupancyEvidence ev;
    std::vector<EvidenceWeight> detecting, vacant;
    for (const WsdSensingReport* r : reports_in(cell, window_s, now)) {
        const auto reading = r->readings_dbm.find(channel);
        if (reading == r->readings_dbm.end()) continue;
        ev.n_reports += 1;
        const bool usable = r->claimed_sensitivity_dbm <= criteria.sensing_threshold_dbm;
        if (usable) ev.n_usable += 1;
        if (reading->second >= criteria.sensing_threshold_dbm) {
            ev.n_detections += 1;
            detecting.push_back({1.0, ledger.trust(r->contributor_id)});
        } else if (usable) {
            vacant.push_back({1.0, ledger.trust(r->contributor_id)});
        }
    }
    ev.occupied = rule == FusionRule::any_detect ? ev.n_detections >= 1 : ev.n_detections >= k;
    if (ev.has_data())
        ev.confidence = ev.occupied ? compute_reliability(detecting, vacant)
                                    : compute_reliability(vacant, detecting);
    return ev;
}

void SensingStore::prune(double older_than) {
    for (auto& [cell, bucket] : by_cell_) {
        const auto cut = std::lower_bound(bucket.begin(), bucket.end(), older_than,
                                          [](const WsdSensingReport& r, double t) { return r.timestamp < t; });
        count_ -= static_cast<std::size_t>(cut - bucket.begin());
        bucket.erase(bucket.begin(), cut);
    }
}

SensingStore::Dump SensingStore::dump() const {
    Dump d;
    std::vector<Cell> cells;
    cells.reserve(by_cell_.size());
    for (const auto& [cell, bucket] : by_cell_) cells.push_back(cell);
    std::sort(cells.begin(), cells.end());
    for (const Cell& cell : cells) {
        const auto& bucket = by_cell_.at(cell);
        d.reports.insert(d.reports.end(), bucket.begin(), bucket.end());
    }
    d.latest_ts.assign(latest_ts_.begin(), latest_ts_.end());
    return d;
}

void SensingStore::restore(const Dump& d) {
    by_cell_.clear();
    latest_ts_.clear();
    count_ = 0;
    for (const WsdSensingReport& r : d.reports) {
        // Dump order preserves per-cell timestamp order, so append is enough.
        by_cell_[area_.cell_of(r.loc)].push_back(r);
        ++count_;
    }
    for (const auto& [id, ts] : d.latest_ts) latest_ts_[id] = ts;
}

namespace {

PowerState effective_state(const TvDetectionEvent& e) {
    if (e.presence == Presence::absent) return PowerState::off;
    return e.power_state;
}

bool is_determinate(const TvDetectionEvent& e) {
    return effective_state(e) != PowerState::unknown;
}

bool agrees(const TvDetectionEvent& a, const TvDetectionEvent& b) {
    if (effective_state(a) != effective_state(b)) return false;
    if (a.tuned_channel && b.tuned_channel) return *a.tuned_channel == *b.tuned_channel;
    return true;
}

} // namespace

TvSetRecord TvStore::ingest(const TvDetectionEvent& event, ContributorLedger& ledger) {
    event.validate();
    Cell cell;
    if (event.loc) {
        cell = area_.cell_of(*event.loc); // throws OutOfAreaError
        if (event.cell && !(*event.cell == cell))
            throw ValidationError("event cell disagrees with its location", "cell");
    } else {
        cell = *event.cell;
        if (!area_.valid_cell(cell)) throw OutOfAreaError("event cell outside the area");
    }

    auto& bucket = by_cell_[cell];
    StoredTv* target = nullptr;
    if (event.tv_id) {
        for (StoredTv& tv : bucket)
            if (tv.record.tv_id == *event.tv_id) {
                target = &tv;
                break;
            }
    } else if (!bucket.empty()) {
        const GeoPoint probe = event.loc ? *event.loc : area_.cell_center(cell);
        double best = std::numeric_limits<double>::infinity();
        for (StoredTv& tv : bucket) {
            const double d = tv_distance_m(tv.record, probe, area_);
            if (d < best) {
                best = d;
                target = &tv;
            }
        }
    }
    if (!target) {
        StoredTv tv;
        tv.record.tv_id = event.tv_id ? *event.tv_id : "tv-" + std::to_string(next_id_++);
        tv.record.cell = cell;
        bucket.push_back(std::move(tv));
        target = &bucket.back();
        count_ += 1;
    }

    auto [first_it, first_new] = first_event_ts_.try_emplace(cell, event.timestamp);
    if (!first_new) first_it->second = std::min(first_it->second, event.timestamp);

    auto& events = target->events;
    const auto pos = std::upper_bound(events.begin(), events.end(), event.timestamp,
                                      [](double t, const TvDetectionEvent& e) { return t < e.timestamp; });
    events.insert(pos, event);
    if (event.tuned_channel) target->record.viewing_histogram[*event.tuned_channel] += 1.0;

    const double newest = events.back().timestamp;
    const auto cut = std::lower_bound(events.begin(), events.end(), newest - options_.retention_s,
                                      [](const TvDetectionEvent& e, double t) { return e.timestamp < t; });
    events.erase(events.begin(), cut);

    reaggregate(*target, ledger, event, &ledger);
    return target->record;
}

void TvStore::reaggregate(StoredTv& tv, const ContributorLedger& ledger,
                          const TvDetectionEvent& incoming, ContributorLedger* mutable_ledger) {
    TvSetRecord& rec = tv.record;
    rec.last_seen = tv.events.empty() ? rec.last_seen : tv.events.back().timestamp;

    // Best location: confidence-and-trust weighted mean of located events.
    double wsum = 0.0, xsum = 0.0, ysum = 0.0;
    for (const TvDetectionEvent& e : tv.events) {
        if (!e.loc) continue;
        const double w = e.confidence * ledger.trust(e.contributor_id);
        wsum += w;
        xsum += w * e.loc->x;
        ysum += w * e.loc->y;
    }
    if (wsum > 0.0) rec.loc = GeoPoint{xsum / wsum, ysum / wsum};

    // State: the strongest assertion within one simultaneity window of the
    // latest assertion wins; everything else in that window is weighed as
    // agreeing or conflicting evidence.
    double anchor = -std::numeric_limits<double>::infinity();
    for (const TvDetectionEvent& e : tv.events)
        if (is_determinate(e)) anchor = std::max(anchor, e.timestamp);
    if (!std::isfinite(anchor)) {
        rec.state = PowerState::unknown;
        rec.tuned_channel.reset();
        rec.reliability = 0.0;
        return;
    }

    std::vector<const TvDetectionEvent*> candidates;
    for (const TvDetectionEvent& e : tv.events)
        if (is_determinate(e) && e.timestamp >= anchor - options_.simultaneity_window_s &&
            e.timestamp <= anchor)
            candidates.push_back(&e);

    const TvDetectionEvent* winner = nullptr;
    double winner_w = -1.0;
    for (const TvDetectionEvent* e : candidates) {
        const double w = e->confidence * ledger.trust(e->contributor_id);
        if (w > winner_w || (w == winner_w && winner && e->timestamp > winner->timestamp)) {
            winner = e;
            winner_w = w;
        }
    }

    std::vector<EvidenceWeight> conforming, conflicting;
    bool incoming_conflicts = false, incoming_conforms = false;
    for (const TvDetectionEvent* e : candidates) {
        const EvidenceWeight w{e->confidence, ledger.trust(e->contributor_id)};
        const bool is_incoming =
            e->timestamp == incoming.timestamp && e->contributor_id == incoming.contributor_id;
        if (agrees(*e, *winner)) {
            conforming.push_back(w);
            incoming_conforms |= is_incoming;
        } else {
            conflicting.push_back(w);
            incoming_conflicts |= is_incoming;
        }
    }

    rec.state = effective_state(*winner);
    rec.tuned_channel =
        rec.state == PowerState::on ? winner->tuned_channel : std::optional<int>{};
    rec.reliability = compute_reliability(conforming, conflicting, options_.gamma);

    // Trust moves only when peers exist to corroborate or contradict.
    if (mutable_ledger) {
        if (candidates.size() >= 2 && incoming_conflicts)
            mutable_ledger->note_conflicting(incoming.contributor_id);
        else if (candidates.size() >= 2 && incoming_conforms)
            mutable_ledger->note_conforming(incoming.contributor_id);
        else
            mutable_ledger->note_report(incoming.contributor_id);
    }
}

std::vector<TvSetRecord> TvStore::tv_sets_near(GeoPoint loc, double radius) const {
    std::vector<TvSetRecord> out;
    for (const Cell& cell : area_.cells_within(loc, radius + kGeoEpsilonM)) {
        const auto it = by_cell_.find(cell);
        if (it == by_cell_.end()) continue;
        for (const StoredTv& tv : it->second)
            if (tv_distance_m(tv.record, loc, area_) <= radius) out.push_back(tv.record);
    }
    return out;
}

std::vector<TvSetRecord> TvStore::snapshot() const {
    std::vector<TvSetRecord> out;
    out.reserve(count_);
    for (const auto& [cell, bucket] : by_cell_)
        for (const StoredTv& tv : bucket) out.push_back(tv.record);
    std::sort(out.begin(), out.end(),
              [](const TvSetRecord& a, const TvSetRecord& b) { return a.tv_id < b.tv_id; });
    return out;
}

double TvStore::cell_channel_weight(const Cell& cell, int channel) const {
    const auto it = by_cell_.find(cell);
    if (it == by_cell_.end()) return 0.0;
    double total = 0.0;
    for (const StoredTv& tv : it->second) {
        const auto w = tv.record.viewing_histogram.find(channel);
        if (w != tv.record.viewing_histogram.end()) total += w->second;
    }
    return total;
}

std::optional<double> TvStore::cell_history_start(const Cell& cell) const {
    const auto it = first_event_ts_.find(cell);
    if (it == first_event_ts_.end()) return std::nullopt;
    return it->second;
}

TvStore::Dump TvStore::dump() const {
    Dump d;
    std::vector<Cell> cells;
    cells.reserve(by_cell_.size());
    for (const auto& [cell, bucket] : by_cell_) cells.push_back(cell);
    std::sort(cells.begin(), cells.end());
    for (const Cell& cell : cells)
        for (const StoredTv& tv : by_cell_.at(cell)) d.entries.push_back({tv.record, tv.events});
    for (const auto& [cell, ts] : first_event_ts_) d.first_event_ts.emplace_back(cell, ts);
    std::sort(d.first_event_ts.begin(), d.first_event_ts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    d.next_id = next_id_;
    return d;
}

void TvStore::restore(const Dump& d) {
    by_cell_.clear();
    first_event_ts_.clear();
    count_ = 0;
    // Dump order preserves per-cell bucket order, which nearest-record
    // matching depends on for ties.
    for (const Dump::Entry& e : d.entries) {
        by_cell_[e.record.cell].push_back(StoredTv{e.record, e.events});
        ++count_;
    }
    for (const auto& [cell, ts] : d.first_event_ts) first_event_ts_[cell] = ts;
    next_id_ = d.next_id;
}

} // namespace tvws
