// SPDX-License-Identifier: Apache-2.0
#include "dmimo/greedy.hpp"

#include <limits>

namespace dmimo {

namespace {

GreedyScore score_entry(const ChannelMatrix& channel, CMatrix w, int m, int k) {
    w(m, k) = 0.0;
    // Row i of hw holds h_i w'_j for every stream j.
    const CMatrix hw = channel.entries() * w;
    GreedyScore s;
    s.received_power = std::norm(hw(k, k));
    for (int i = 0; i < channel.num_ues(); ++i) {
        if (i == k) {
            continue;
        }
        for (int j = 0; j < channel.num_ues(); ++j) {
            if (j != i) {
                s.interference += std::norm(hw(i, j));
            }
        }
    }
    if (s.interference > 0.0) {
        s.ratio = s.received_power / s.interference;
    } else {
        s.ratio = s.received_power > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return s;
}

bool over_budget(const ZeroSet& zeroed, const SharingBudget& budget) {
    const int num_ues = zeroed.num_ues();
    if (budget.variant == SharingVariant::Total) {
        return zeroed.num_aps() * num_ues - zeroed.size() > budget.b_tot;
    }
    for (int k = 0; k < num_ues; ++k) {
        if (zeroed.free_in_column(k) > budget.per_ue_cap(num_ues)) {
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<GreedyCandidate> score_candidates(const ChannelMatrix& channel, const PrecoderMatrix& precoder,
                                              const ZeroSet& zeroed) {
    if (precoder.num_aps() != channel.num_aps() || precoder.num_ues() != channel.num_ues() ||
        zeroed.num_aps() != channel.num_aps() || zeroed.num_ues() != channel.num_ues()) {
        throw InvalidInput("precoder, zero set and channel dimensions differ");
    }
    std::vector<GreedyCandidate> out;
    for (int m = 0; m < channel.num_aps(); ++m) {
        for (int k = 0; k < channel.num_ues(); ++k) {
            if (zeroed.contains(m, k) || zeroed.free_in_column(k) <= 1) {
                continue;
            }
            // Removing the last nonzero entry would cut the UE off as well.
            const auto column = precoder.entries().col(k).cwiseAbs();
            if (column(m) > kDefaultZeroTol && (column.array() > kDefaultZeroTol).count() == 1) {
                continue;
            }
            out.push_back({m, k, score_entry(channel, precoder.entries(), m, k)});
        }
    }
    return out;
}

const GreedyCandidate* best_candidate(const std::vector<GreedyCandidate>& candidates) {
    const GreedyCandidate* best = nullptr;
    for (const auto& c : candidates) {
        if (best == nullptr || c.score.ratio > best->score.ratio ||
            (c.score.ratio == best->score.ratio && c.score.received_power > best->score.received_power)) {
            best = &c;
        }
    }
    return best;
}

GreedyResult greedy_pairing(const ChannelMatrix& channel, const SharingBudget& budget, const PowerBudget& p_max,
                            const BisectionParams& bisection, const SolverTolerances& tol) {
    const int num_aps = channel.num_aps();
    const int num_ues = channel.num_ues();
    validate_budget(budget, num_aps, num_ues);
    bisection.validate();

    GreedyResult out;
    ZeroSet zeroed(num_aps, num_ues);
    auto solve = [&] {
        out.solution = max_common_sinr(channel, zeroed, p_max, bisection, tol);
        out.bisection_steps += out.solution.iterations_used;
        out.numerical_failures += out.solution.numerical_failures;
    };
    solve();

    const int cap = budget.per_ue_cap(num_ues);
    while (over_budget(zeroed, budget)) {
        std::vector<GreedyCandidate> candidates = score_candidates(channel, out.solution.precoder, zeroed);
        if (budget.variant == SharingVariant::PerUE) {
            std::erase_if(candidates, [&](const GreedyCandidate& c) { return zeroed.free_in_column(c.ue) <= cap; });
        }
        const GreedyCandidate* pick = best_candidate(candidates);
        if (pick == nullptr) {
            out.partial = true;
            break;
        }
        zeroed.insert(pick->ap, pick->ue);
        out.trace.removal_sequence.emplace_back(pick->ap, pick->ue);
        solve();
        out.trace.t_after_each.push_back(out.solution.t_star);
    }

    SharingBudget reported = budget;
    if (out.partial) {
        reported = {SharingVariant::Total, num_aps * num_ues};
    }
    out.pairing = PairingMatrix(zeroed.support(), reported);
    return out;
}

}  // namespace dmimo
