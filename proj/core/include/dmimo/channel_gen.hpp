// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/network_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dmimo {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Parameters of one random network drop: uniform node placement on a square, log-distance
/// path loss, log-normal shadowing and Rayleigh fading.
struct DropConfig {
    int m_aps = 6;
    int k_ues = 6;
    double side_length_m = 250.0;
    double pathloss_exponent = 3.7;
    /// Path loss at the 1 m reference distance, dB.
    double pathloss_ref_db_at_1m = 58.95;
    double shadowing_sigma_db = 8.0;
    double bandwidth_hz = 200e3;
    double noise_density_dbm_per_hz = -174.0;
    double min_distance_m = 1.0;
    std::uint64_t seed = 1;

    /// Throws InvalidInput on out-of-range parameters.
    void validate() const;

    /// R_max = 250 m with path loss calibrated to a 26 dB mean reference SNR.
    static DropConfig dense();
    /// R_max = 1000 m with path loss calibrated to a 16 dB mean reference SNR.
    static DropConfig sparse();
};

struct Drop {
    std::vector<Point2> ap_positions;
    std::vector<Point2> ue_positions;
    ChannelMatrix channel;
};

/// Deterministic in cfg.seed.
Drop generate_drop(const DropConfig& cfg);

/// Linear large-scale gain (path loss times shadowing) for a link of the given length.
double large_scale_gain(const DropConfig& cfg, double distance_m, double shadowing_db);

/// Noise power N0 * bandwidth in watt.
double noise_power_watt(const DropConfig& cfg);

/// 10 log10 of the mean over all links of (P_max / K) |H_km|^2.
double reference_snr_db(const Drop& drop, const PowerBudget& p_max);

/// Average of reference_snr_db over drops seeded first_seed, first_seed + 1, ...
double mean_reference_snr_db(DropConfig cfg, const PowerBudget& p_max, int num_drops, std::uint64_t first_seed = 1);

struct CalibrationPoint {
    double pathloss_exponent = 0.0;
    double pathloss_ref_db_at_1m = 0.0;
    double mean_snr_db = 0.0;
};

/// Path-loss reference that puts the mean reference SNR at target_db. Every link gain scales
/// with the reference, so one Monte-Carlo pass and a shift suffice.
CalibrationPoint calibrate_pathloss_ref(DropConfig cfg, const PowerBudget& p_max, double target_db, int num_drops,
                                        std::uint64_t first_seed = 1);

std::string drop_to_json(const Drop& drop);
/// Throws InvalidInput on malformed documents.
Drop drop_from_json(const std::string& text);

}  // namespace dmimo
