#pragma once

#include <vector>

#include "tvws/errors.hpp"

namespace tvws {

enum class UrbanEnvironment { small_medium, large };

struct HataParams {
    double freq_mhz = 600.0;
    double tx_height_m = 30.0;
    double rx_height_m = 1.5;
    UrbanEnvironment environment = UrbanEnvironment::small_medium;

    // Enforces freq in [150, 1500] MHz, rx_height in [1, 10] m, tx_height > 0.
    void validate() const;
    // False when tx_height is below the model's stated 30 m floor.
    bool within_stated_validity() const;
};

// Okumura-Hata urban median path loss in dB at distance d_km.
// d <= 0 throws InvalidDistanceError; d below 10 m is clamped to 10 m.
double hata_path_loss(const HataParams& params, double d_km);

// Field strength (dBuV/m) of a received power (dBm) at a half-wave dipole.
double dbm_to_dbu(double p_dbm, double freq_mhz);
double dbu_to_dbm(double e_dbu, double freq_mhz);

// Distance bracket used by every contour/separation solver.
inline constexpr double kMinSolveDistanceM = 10.0;
inline constexpr double kMaxSolveDistanceM = 20000.0;

// Log-linear field law fitted to a separation-distance table:
//   field_dbu(d) = eirp_dbm - (intercept_db_1km + slope_db_per_decade * log10(d_km)).
struct PathLossCalibration {
    double intercept_db_1km = 0.0;
    double slope_db_per_decade = 0.0;
    // Receiver threshold implied by the table's coverage column.
    double coverage_field_dbu = 0.0;

    struct Row {
        double power_mw = 0.0;
        double coverage_m = 0.0;
        double adj_sep_m = 0.0;
        double co_sep_m = 0.0;
    };

    // Fits slope from the co/adjacent distance ratios (their field targets
    // differ by exactly co_limit - adj_limit dB), anchors the intercept on the
    // row nearest 40 mW, and sets coverage_field_dbu to the mean implied value.
    static PathLossCalibration fit(const std::vector<Row>& rows, double co_limit_dbu,
                                   double adj_limit_dbu);
};

double field_at(const PathLossCalibration& calib, double eirp_dbm, double distance_m);
double field_at(const HataParams& params, double eirp_dbm, double distance_m);

// Distance (m) at which the field decays to target_field_dbu. Targets weaker
// than the field at the far bracket clamp to kMaxSolveDistanceM; targets
// stronger than the field at the near bracket throw OutOfRangeError.
double solve_distance_for_field(const PathLossCalibration& calib, double eirp_dbm,
                                double target_field_dbu);
double solve_distance_for_field(const HataParams& params, double eirp_dbm,
                                double target_field_dbu);

// Model selector so callers can switch between the physical model and the
// table-fitted law via configuration.
struct PropagationModel {
    bool use_hata = false;
    HataParams hata;
    PathLossCalibration calibration;

    // freq_mhz and tx_height_m override the Hata template per transmitter;
    // the calibration law ignores both.
    double field_dbu(double eirp_dbm, double freq_mhz, double tx_height_m,
                     double distance_m) const;
    double contour_m(double eirp_dbm, double freq_mhz, double tx_height_m,
                     double target_field_dbu) const;
};

double watts_to_dbm(double watts);
double dbm_to_watts(double dbm);

} // namespace tvws
