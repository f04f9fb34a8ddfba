// SPDX-License-Identifier: Apache-2.0
#include "dmimo/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace dmimo {

namespace {

// Indices sorted by descending value, stable so equal values keep the lower index first.
std::vector<int> descending_order(const Eigen::VectorXd& values) {
    std::vector<int> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return values(a) > values(b); });
    return idx;
}

void check_quota(int quota, int num_aps) {
    if (quota < 1 || quota > num_aps) {
        throw InvalidInput("per-UE quota " + std::to_string(quota) + " outside [1, " + std::to_string(num_aps) + "]");
    }
}

SharingBudget quota_budget(int quota, int num_ues) {
    return {SharingVariant::PerUE, quota * num_ues};
}

}  // namespace

void BaselineConfig::validate(int num_aps) const {
    check_quota(per_ue_quota, num_aps);
}

int quota_from_budget(int b_tot, int num_ues) {
    if (num_ues < 1) {
        throw InvalidInput("need at least one UE");
    }
    return b_tot / num_ues;
}

PairingMatrix clust1_pairing(const ChannelMatrix& channel, int quota) {
    const int num_aps = channel.num_aps();
    const int num_ues = channel.num_ues();
    check_quota(quota, num_aps);
    const RMatrix gain = channel.entries().cwiseAbs2();
    PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
    for (int k = 0; k < num_ues; ++k) {
        const std::vector<int> order = descending_order(gain.row(k).transpose());
        for (int r = 0; r < quota; ++r) {
            a(order[static_cast<std::size_t>(r)], k) = 1;
        }
    }
    return PairingMatrix(std::move(a), quota_budget(quota, num_ues));
}

PairingMatrix clust2_pairing(const ChannelMatrix& channel, int quota) {
    const int num_aps = channel.num_aps();
    const int num_ues = channel.num_ues();
    check_quota(quota, num_aps);
    const RMatrix gain = channel.entries().cwiseAbs2();

    // ue_rank(m, k): position of k in AP m's gain order
    Eigen::MatrixXi ue_rank(num_aps, num_ues);
    for (int m = 0; m < num_aps; ++m) {
        const std::vector<int> order = descending_order(gain.col(m));
        for (int r = 0; r < num_ues; ++r) {
            ue_rank(m, order[static_cast<std::size_t>(r)]) = r;
        }
    }

    PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
    std::vector<int> aps(static_cast<std::size_t>(num_aps));
    for (int k = 0; k < num_ues; ++k) {
        std::iota(aps.begin(), aps.end(), 0);
        std::stable_sort(aps.begin(), aps.end(), [&](int x, int y) {
            if (ue_rank(x, k) != ue_rank(y, k)) {
                return ue_rank(x, k) < ue_rank(y, k);
            }
            return gain(k, x) > gain(k, y);
        });
        for (int r = 0; r < quota; ++r) {
            a(aps[static_cast<std::size_t>(r)], k) = 1;
        }
    }
    return PairingMatrix(std::move(a), quota_budget(quota, num_ues));
}

PairingMatrix random_pairing(int num_aps, int num_ues, int quota, std::uint64_t seed) {
    if (num_aps < 1 || num_ues < 1) {
        throw InvalidInput("network must have at least one AP and one UE");
    }
    check_quota(quota, num_aps);
    std::mt19937_64 rng(seed);
    PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
    std::vector<int> aps(static_cast<std::size_t>(num_aps));
    for (int k = 0; k < num_ues; ++k) {
        std::iota(aps.begin(), aps.end(), 0);
        // full shuffle so the pick for quota q + 1 extends the pick for q
        for (int r = 0; r + 1 < num_aps; ++r) {
            std::uniform_int_distribution<int> pick(r, num_aps - 1);
            std::swap(aps[static_cast<std::size_t>(r)], aps[static_cast<std::size_t>(pick(rng))]);
        }
        for (int r = 0; r < quota; ++r) {
            a(aps[static_cast<std::size_t>(r)], k) = 1;
        }
    }
    return PairingMatrix(std::move(a), quota_budget(quota, num_ues));
}

BaselineResult baseline_scheme(const ChannelMatrix& channel, const BaselineConfig& cfg, const PowerBudget& p_max,
                               const BisectionParams& bisection, const SolverTolerances& tol) {
    cfg.validate(channel.num_aps());
    BaselineResult out;
    switch (cfg.kind) {
        case BaselineKind::Clust1: out.pairing = clust1_pairing(channel, cfg.per_ue_quota); break;
        case BaselineKind::Clust2: out.pairing = clust2_pairing(channel, cfg.per_ue_quota); break;
        case BaselineKind::Random:
            out.pairing = random_pairing(channel.num_aps(), channel.num_ues(), cfg.per_ue_quota, cfg.seed);
            break;
    }
    out.solution = max_common_sinr(channel, ZeroSet::from_pairing(out.pairing.entries()), p_max, bisection, tol);
    return out;
}

}  // namespace dmimo
