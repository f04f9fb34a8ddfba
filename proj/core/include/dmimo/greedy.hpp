// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/network_model.hpp"
#include "dmimo/precoding.hpp"

#include <utility>
#include <vector>

namespace dmimo {

struct GreedyScore {
    /// ||h_k w'_k||^2 with w_mk zeroed.
    double received_power = 0.0;
    /// sum over victims i != k and streams j != i of ||h_i w'_j||^2.
    double interference = 0.0;
    /// received_power / interference; +inf when only the interference vanishes, 0 when both do.
    double ratio = 0.0;
};

struct GreedyCandidate {
    int ap = 0;
    int ue = 0;
    GreedyScore score;
};

/// Scores every entry outside `zeroed` whose removal leaves its UE at least one AP, both in
/// the zero set and among the precoder's nonzero entries.
/// Candidates come back in (m, k) lexicographic order.
std::vector<GreedyCandidate> score_candidates(const ChannelMatrix& channel, const PrecoderMatrix& precoder,
                                              const ZeroSet& zeroed);

/// Highest ratio, then larger received power, then lowest (m, k). Null on an empty list.
const GreedyCandidate* best_candidate(const std::vector<GreedyCandidate>& candidates);

struct GreedyTrace {
    std::vector<std::pair<int, int>> removal_sequence;
    std::vector<double> t_after_each;
};

struct GreedyResult {
    PrecodingSolution solution;
    PairingMatrix pairing;
    GreedyTrace trace;
    /// Ran out of candidates before meeting the budget.
    bool partial = false;
    /// Totals over every bisection run, including the full-sharing start.
    int bisection_steps = 0;
    int numerical_failures = 0;
};

/// Starts from full sharing and zeroes one entry per step, re-optimizing the precoder after
/// each removal, until the sharing budget holds. PerUE only removes from over-cap columns.
GreedyResult greedy_pairing(const ChannelMatrix& channel, const SharingBudget& budget, const PowerBudget& p_max,
                            const BisectionParams& bisection = {}, const SolverTolerances& tol = {});

}  // namespace dmimo
