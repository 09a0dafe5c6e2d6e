#include "tvws/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tvws {

namespace {

double mobile_antenna_correction(double freq_mhz, double rx_height_m, UrbanEnvironment env) {
    if (env == UrbanEnvironment::large) {
        if (freq_mhz >= 400.0) {
            const double t = std::log10(11.75 * rx_height_m);
            return 3.2 * t * t - 4.97;
        }
        const double t = std::log10(1.54 * rx_height_m);
        return 8.29 * t * t - 1.1;
    }
    return (1.1 * std::log10(freq_mhz) - 0.7) * rx_height_m -
           (1.56 * std::log10(freq_mhz) - 0.8);
}

} // namespace

void HataParams::validate() const {
    if (!(freq_mhz >= 150.0 && freq_mhz <= 1500.0))
        throw ValidationError("frequency " + std::to_string(freq_mhz) + " MHz outside [150, 1500]",
                              "freq_mhz");
    if (!(rx_height_m >= 1.0 && rx_height_m <= 10.0))
        throw ValidationError("receiver height outside [1, 10] m", "rx_height_m");
    if (!(tx_height_m > 0.0))
        throw ValidationError("transmitter height must be positive", "tx_height_m");
}

bool HataParams::within_stated_validity() const {
    return tx_height_m >= 30.0 && tx_height_m <= 200.0;
}

double hata_path_loss(const HataParams& params, double d_km) {
    params.validate();
    if (d_km <= 0.0) throw InvalidDistanceError("distance must be positive");
    d_km = std::max(d_km, kMinSolveDistanceM / 1000.0);

    const double f = params.freq_mhz;
    const double hb = params.tx_height_m;
    const double a_hm = mobile_antenna_correction(f, params.rx_height_m, params.environment);
    return 69.55 + 26.16 * std::log10(f) - 13.82 * std::log10(hb) - a_hm +
           (44.9 - 6.55 * std::log10(hb)) * std::log10(d_km);
}

double dbm_to_dbu(double p_dbm, double freq_mhz) {
    return p_dbm + 20.0 * std::log10(freq_mhz) + 77.2;
}

double dbu_to_dbm(double e_dbu, double freq_mhz) {
    return e_dbu - 20.0 * std::log10(freq_mhz) - 77.2;
}

PathLossCalibration PathLossCalibration::fit(const std::vector<Row>& rows, double co_limit_dbu,
                                             double adj_limit_dbu) {
    if (rows.empty()) throw ValidationError("calibration needs at least one row", "rows");
    const double gap_db = adj_limit_dbu - co_limit_dbu;
    if (gap_db <= 0.0)
        throw ValidationError("co-channel limit must be below the adjacent limit", "co_limit_dbu");

    // Each row reaches adj_limit at adj_sep and co_limit at co_sep, so the
    // slope is gap / log10(co_sep / adj_sep); average the rows geometrically.
    double sum_log_ratio = 0.0;
    for (const Row& r : rows) {
        if (!(r.co_sep_m > r.adj_sep_m && r.adj_sep_m > 0.0))
            throw ValidationError("separation rows must satisfy 0 < adj_sep < co_sep", "rows");
        sum_log_ratio += std::log10(r.co_sep_m / r.adj_sep_m);
    }
    const double slope = gap_db / (sum_log_ratio / static_cast<double>(rows.size()));

    const Row* anchor = &rows.front();
    for (const Row& r : rows)
        if (std::abs(r.power_mw - 40.0) < std::abs(anchor->power_mw - 40.0)) anchor = &r;
    const double anchor_dbm = 10.0 * std::log10(anchor->power_mw);
    const double intercept =
        anchor_dbm - co_limit_dbu - slope * std::log10(anchor->co_sep_m / 1000.0);

    double coverage_sum = 0.0;
    for (const Row& r : rows) {
        const double p = 10.0 * std::log10(r.power_mw);
        coverage_sum += p - intercept - slope * std::log10(r.coverage_m / 1000.0);
    }

    PathLossCalibration c;
    c.intercept_db_1km = intercept;
    c.slope_db_per_decade = slope;
    c.coverage_field_dbu = coverage_sum / static_cast<double>(rows.size());
    return c;
}

double field_at(const PathLossCalibration& calib, double eirp_dbm, double distance_m) {
    if (distance_m <= 0.0) throw InvalidDistanceError("distance must be positive");
    distance_m = std::max(distance_m, kMinSolveDistanceM);
    return eirp_dbm - calib.intercept_db_1km -
           calib.slope_db_per_decade * std::log10(distance_m / 1000.0);
}

double field_at(const HataParams& params, double eirp_dbm, double distance_m) {
    if (distance_m <= 0.0) throw InvalidDistanceError("distance must be positive");
    const double loss = hata_path_loss(params, distance_m / 1000.0);
    return dbm_to_dbu(eirp_dbm - loss, params.freq_mhz);
}

double solve_distance_for_field(const PathLossCalibration& calib, double eirp_dbm,
                                double target_field_dbu) {
    if (field_at(calib, eirp_dbm, kMinSolveDistanceM) < target_field_dbu)
        throw OutOfRangeError("target field not attained at the minimum distance");
    if (field_at(calib, eirp_dbm, kMaxSolveDistanceM) > target_field_dbu)
        return kMaxSolveDistanceM;
    const double log_d_km =
        (eirp_dbm - calib.intercept_db_1km - target_field_dbu) / calib.slope_db_per_decade;
    const double d_m = 1000.0 * std::pow(10.0, log_d_km);
    return std::clamp(d_m, kMinSolveDistanceM, kMaxSolveDistanceM);
}

double solve_distance_for_field(const HataParams& params, double eirp_dbm,
                                double target_field_dbu) {
    if (field_at(params, eirp_dbm, kMinSolveDistanceM) < target_field_dbu)
        throw OutOfRangeError("target field not attained at the minimum distance");
    if (field_at(params, eirp_dbm, kMaxSolveDistanceM) > target_field_dbu)
        return kMaxSolveDistanceM;

    double lo = kMinSolveDistanceM, hi = kMaxSolveDistanceM;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = field_at(params, eirp_dbm, mid);
        if (std::abs(f - target_field_dbu) < 1e-6) return mid;
        (f > target_field_dbu ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double PropagationModel::field_dbu(double eirp_dbm, double freq_mhz, double tx_height_m,
                                   double distance_m) const {
    if (use_hata) {
        HataParams p = hata;
        p.freq_mhz = freq_mhz;
        p.tx_height_m = tx_height_m;
        return field_at(p, eirp_dbm, distance_m);
    }
    return field_at(calibration, eirp_dbm, distance_m);
}

double PropagationModel::contour_m(double eirp_dbm, double freq_mhz, double tx_height_m,
                                   double target_field_dbu) const {
    if (use_hata) {
        HataParams p = hata;
        p.freq_mhz = freq_mhz;
        p.tx_height_m = tx_height_m;
        return solve_distance_for_field(p, eirp_dbm, target_field_dbu);
    }
    return solve_distance_for_field(calibration, eirp_dbm, target_field_dbu);
}

double watts_to_dbm(double watts) {
    return 10.0 * std::log10(watts * 1000.0);
}

double dbm_to_watts(double dbm) {
    return std::pow(10.0, dbm / 10.0) / 1000.0;
}

} // namespace tvws
