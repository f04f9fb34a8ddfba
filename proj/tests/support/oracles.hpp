// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used only by the test suites.
#pragma once

#include "dmimo/network_model.hpp"
#include "dmimo/precoding.hpp"

#include <cstdint>
#include <vector>

namespace dmimo::oracle {

/// i.i.d. CN(0, scale^2) channel, seeded.
ChannelMatrix random_channel(int num_ues, int num_aps, std::uint64_t seed, double scale = 1.0);

/// Max-min SINR over phase-aligned diagonal precoders, each UE's power on a uniform grid.
/// Square channels only; AP k serves UE k alone.
double grid_search_diagonal(const ChannelMatrix& channel, double p_max, int steps);

/// Every covering pairing that meets the budget. With maximal_only, only those that cannot
/// take another pair without breaking the budget.
std::vector<PairingMatrix::Entries> enumerate_pairings(int num_aps, int num_ues, const SharingBudget& budget,
                                                       bool maximal_only);

struct EnumerationResult {
    double t_star = 0.0;
    PairingMatrix::Entries best;
    int evaluated = 0;
};

/// Best fixed-pairing common SINR over enumerate_pairings(..., maximal_only), each pairing
/// evaluated with its own bisection.
EnumerationResult enumeration_optimum(const ChannelMatrix& channel, const SharingBudget& budget,
                                      const PowerBudget& p_max, const BisectionParams& params,
                                      bool maximal_only = true);

/// Direct evaluation of |h_i w_j|^2 summed over victims i != skip_victim and streams j != i.
double cross_interference(const ChannelMatrix& channel, const CMatrix& w, int skip_victim);

}  // namespace dmimo::oracle
