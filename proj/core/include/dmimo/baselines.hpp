// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/network_model.hpp"
#include "dmimo/precoding.hpp"

#include <cstdint>

namespace dmimo {

enum class BaselineKind { Clust1, Clust2, Random };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::Clust1;
    int per_ue_quota = 1;
    /// Random only.
    std::uint64_t seed = 1;

    /// Throws InvalidInput unless 1 <= per_ue_quota <= num_aps.
    void validate(int num_aps) const;
};

/// floor(b_tot / K).
int quota_from_budget(int b_tot, int num_ues);

/// Each UE takes its `quota` strongest APs by |H_km|^2, ties to the lower AP index.
PairingMatrix clust1_pairing(const ChannelMatrix& channel, int quota);

/// UE k ranks AP m by k's position in AP m's gain column (k strongest there comes first),
/// ties by |H_km|^2 and then the lower index, and takes the top `quota`. Nested in the quota.
PairingMatrix clust2_pairing(const ChannelMatrix& channel, int quota);

/// `quota` distinct APs per UE, uniformly at random. Deterministic in the seed, and for a
/// fixed seed the pick at quota q is contained in the pick at q + 1.
PairingMatrix random_pairing(int num_aps, int num_ues, int quota, std::uint64_t seed);

struct BaselineResult {
    PrecodingSolution solution;
    PairingMatrix pairing;
};

/// Pairing from the selected rule, then the optimal precoder for that pairing.
BaselineResult baseline_scheme(const ChannelMatrix& channel, const BaselineConfig& cfg, const PowerBudget& p_max,
                               const BisectionParams& bisection = {}, const SolverTolerances& tol = {});

}  // namespace dmimo
