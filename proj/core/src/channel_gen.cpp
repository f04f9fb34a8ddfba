// SPDX-License-Identifier: Apache-2.0
#include "dmimo/channel_gen.hpp"

#include "json.hpp"

#include <cmath>
#include <random>

namespace dmimo {

namespace {

using nlohmann::json;

json point_list(const std::vector<Point2>& pts) {
    json out = json::array();
    for (const auto& p : pts) {
        out.push_back({p.x, p.y});
    }
    return out;
}

std::vector<Point2> parse_points(const json& arr) {
    std::vector<Point2> out;
    for (const auto& p : arr) {
        if (!p.is_array() || p.size() != 2) {
            throw InvalidInput("position must be an [x, y] pair");
        }
        out.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return out;
}

}  // namespace

void DropConfig::validate() const {
    if (m_aps < 1 || k_ues < 1) {
        throw InvalidInput("a drop needs at least one AP and one UE");
    }
    if (!(side_length_m > 0.0)) {
        throw InvalidInput("side length must be positive");
    }
    if (!(pathloss_exponent > 2.0)) {
        throw InvalidInput("path-loss exponent must exceed 2");
    }
    if (!(shadowing_sigma_db >= 0.0)) {
        throw InvalidInput("shadowing deviation must be non-negative");
    }
    if (!(bandwidth_hz > 0.0)) {
        throw InvalidInput("bandwidth must be positive");
    }
    if (!(min_distance_m > 0.0)) {
        throw InvalidInput("minimum distance must be positive");
    }
    if (!std::isfinite(pathloss_ref_db_at_1m) || !std::isfinite(noise_density_dbm_per_hz)) {
        throw InvalidInput("path-loss reference and noise density must be finite");
    }
}

// Presets produced by `dmimo calibrate` (100 drops, seeds 1..100, M = K = 6, P_max = 1 W).
DropConfig DropConfig::dense() {
    DropConfig cfg;
    cfg.side_length_m = 250.0;
    cfg.pathloss_ref_db_at_1m = 58.95;
    return cfg;
}

DropConfig DropConfig::sparse() {
    DropConfig cfg;
    cfg.side_length_m = 1000.0;
    cfg.pathloss_ref_db_at_1m = 46.67;
    return cfg;
}

double noise_power_watt(const DropConfig& cfg) {
    return std::pow(10.0, (cfg.noise_density_dbm_per_hz - 30.0) / 10.0) * cfg.bandwidth_hz;
}

double large_scale_gain(const DropConfig& cfg, double distance_m, double shadowing_db) {
    const double d = std::max(distance_m, cfg.min_distance_m);
    const double loss_db = cfg.pathloss_ref_db_at_1m + 10.0 * cfg.pathloss_exponent * std::log10(d);
    return std::pow(10.0, (-loss_db + shadowing_db) / 10.0);
}

Drop generate_drop(const DropConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> pos(0.0, cfg.side_length_m);
    std::normal_distribution<double> normal(0.0, 1.0);

    Drop drop;
    drop.ap_positions.resize(static_cast<std::size_t>(cfg.m_aps));
    drop.ue_positions.resize(static_cast<std::size_t>(cfg.k_ues));
    for (auto& p : drop.ap_positions) {
        p.x = pos(rng);
        p.y = pos(rng);
    }
    for (auto& p : drop.ue_positions) {
        p.x = pos(rng);
        p.y = pos(rng);
    }

    const double noise_amplitude = std::sqrt(noise_power_watt(cfg));
    CMatrix h(cfg.k_ues, cfg.m_aps);
    for (int k = 0; k < cfg.k_ues; ++k) {
        for (int m = 0; m < cfg.m_aps; ++m) {
            const Point2& ue = drop.ue_positions[static_cast<std::size_t>(k)];
            const Point2& ap = drop.ap_positions[static_cast<std::size_t>(m)];
            const double d = std::hypot(ue.x - ap.x, ue.y - ap.y);
            const double shadow = cfg.shadowing_sigma_db * normal(rng);
            const double re = normal(rng) / std::sqrt(2.0);
            const double im = normal(rng) / std::sqrt(2.0);
            const double amplitude = std::sqrt(large_scale_gain(cfg, d, shadow));
            h(k, m) = cplx(re, im) * (amplitude / noise_amplitude);
        }
    }
    drop.channel = ChannelMatrix(std::move(h), cfg.bandwidth_hz, cfg.noise_density_dbm_per_hz);
    return drop;
}

double reference_snr_db(const Drop& drop, const PowerBudget& p_max) {
    const auto& h = drop.channel.entries();
    const double per_ue_power = p_max.p_max_watt / static_cast<double>(drop.channel.num_ues());
    const double mean_gain = h.cwiseAbs2().mean();
    return 10.0 * std::log10(per_ue_power * mean_gain);
}

double mean_reference_snr_db(DropConfig cfg, const PowerBudget& p_max, int num_drops, std::uint64_t first_seed) {
    if (num_drops < 1) {
        throw InvalidInput("need at least one drop");
    }
    double acc = 0.0;
    for (int i = 0; i < num_drops; ++i) {
        cfg.seed = first_seed + static_cast<std::uint64_t>(i);
        acc += reference_snr_db(generate_drop(cfg), p_max);
    }
    return acc / num_drops;
}

CalibrationPoint calibrate_pathloss_ref(DropConfig cfg, const PowerBudget& p_max, double target_db, int num_drops,
                                        std::uint64_t first_seed) {
    const double measured = mean_reference_snr_db(cfg, p_max, num_drops, first_seed);
    CalibrationPoint out;
    out.pathloss_exponent = cfg.pathloss_exponent;
    out.pathloss_ref_db_at_1m = cfg.pathloss_ref_db_at_1m + (measured - target_db);
    cfg.pathloss_ref_db_at_1m = out.pathloss_ref_db_at_1m;
    out.mean_snr_db = mean_reference_snr_db(cfg, p_max, num_drops, first_seed);
    return out;
}

std::string drop_to_json(const Drop& drop) {
    json doc;
    doc["ap_positions"] = point_list(drop.ap_positions);
    doc["ue_positions"] = point_list(drop.ue_positions);
    doc["bandwidth_hz"] = drop.channel.bandwidth_hz();
    doc["noise_density_dbm_per_hz"] = drop.channel.noise_density_dbm_per_hz();
    json rows = json::array();
    for (int k = 0; k < drop.channel.num_ues(); ++k) {
        json row = json::array();
        for (int m = 0; m < drop.channel.num_aps(); ++m) {
            row.push_back({drop.channel(k, m).real(), drop.channel(k, m).imag()});
        }
        rows.push_back(std::move(row));
    }
    doc["channel"] = std::move(rows);
    return doc.dump(2);
}

Drop drop_from_json(const std::string& text) {
    try {
        const json doc = json::parse(text);
        Drop drop;
        drop.ap_positions = parse_points(doc.at("ap_positions"));
        drop.ue_positions = parse_points(doc.at("ue_positions"));
        const json& rows = doc.at("channel");
        const auto num_ues = static_cast<Eigen::Index>(rows.size());
        const auto num_aps = num_ues > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
        CMatrix h(num_ues, num_aps);
        for (Eigen::Index k = 0; k < num_ues; ++k) {
            const json& row = rows[static_cast<std::size_t>(k)];
            if (static_cast<Eigen::Index>(row.size()) != num_aps) {
                throw InvalidInput("ragged channel matrix");
            }
            for (Eigen::Index m = 0; m < num_aps; ++m) {
                const json& e = row[static_cast<std::size_t>(m)];
                h(k, m) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
            }
        }
        drop.channel = ChannelMatrix(std::move(h), doc.value("bandwidth_hz", 200e3),
                                     doc.value("noise_density_dbm_per_hz", -174.0));
        if (static_cast<int>(drop.ap_positions.size()) != drop.channel.num_aps() ||
            static_cast<int>(drop.ue_positions.size()) != drop.channel.num_ues()) {
            throw InvalidInput("position counts do not match the channel dimensions");
        }
        return drop;
    } catch (const json::exception& e) {
        throw InvalidInput(std::string("malformed drop document: ") + e.what());
    }
}

}  // namespace dmimo
