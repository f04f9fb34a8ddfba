// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dmimo::oracle {

ChannelMatrix random_channel(int num_ues, int num_aps, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale / std::sqrt(2.0));
    CMatrix h(num_ues, num_aps);
    for (int k = 0; k < num_ues; ++k) {
        for (int m = 0; m < num_aps; ++m) {
            h(k, m) = cplx(n(rng), n(rng));
        }
    }
    return ChannelMatrix(h);
}

double grid_search_diagonal(const ChannelMatrix& channel, double p_max, int steps) {
    const int k_count = channel.num_ues();
    std::vector<int> idx(static_cast<std::size_t>(k_count), 0);
    double best = 0.0;
    while (true) {
        double worst = std::numeric_limits<double>::infinity();
        for (int k = 0; k < k_count; ++k) {
            const double pk = p_max * idx[static_cast<std::size_t>(k)] / steps;
            double interference = 0.0;
            for (int i = 0; i < k_count; ++i) {
                if (i != k) {
                    interference += p_max * idx[static_cast<std::size_t>(i)] / steps * std::norm(channel(k, i));
                }
            }
            worst = std::min(worst, pk * std::norm(channel(k, k)) / (1.0 + interference));
        }
        best = std::max(best, worst);
        int pos = 0;
        while (pos < k_count && ++idx[static_cast<std::size_t>(pos)] > steps) {
            idx[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == k_count) {
            break;
        }
    }
    return best;
}

std::vector<PairingMatrix::Entries> enumerate_pairings(int num_aps, int num_ues, const SharingBudget& budget,
                                                       bool maximal_only) {
    std::vector<PairingMatrix::Entries> out;
    const int bits = num_aps * num_ues;
    const int cap = budget.b_tot / num_ues;
    for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
        PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
        int total = 0;
        for (int b = 0; b < bits; ++b) {
            if ((mask >> b) & 1u) {
                a(b % num_aps, b / num_aps) = 1;
                ++total;
            }
        }
        bool ok = true;
        bool maximal = true;
        for (int k = 0; k < num_ues && ok; ++k) {
            const int col = a.col(k).cast<int>().sum();
            ok = col >= 1;
            if (budget.variant == SharingVariant::PerUE) {
                ok = ok && col <= cap;
                maximal = maximal && col == std::min(cap, num_aps);
            }
        }
        if (budget.variant == SharingVariant::Total) {
            ok = ok && total <= budget.b_tot;
            maximal = total == std::min(budget.b_tot, bits);
        }
        if (ok && (!maximal_only || maximal)) {
            out.push_back(a);
        }
    }
    return out;
}

EnumerationResult enumeration_optimum(const ChannelMatrix& channel, const SharingBudget& budget,
                                      const PowerBudget& p_max, const BisectionParams& params, bool maximal_only) {
    EnumerationResult res;
    for (const auto& a : enumerate_pairings(channel.num_aps(), channel.num_ues(), budget, maximal_only)) {
        const PrecodingSolution sol = max_common_sinr(channel, ZeroSet::from_pairing(a), p_max, params);
        ++res.evaluated;
        if (res.evaluated == 1 || sol.t_star > res.t_star) {
            res.t_star = sol.t_star;
            res.best = a;
        }
    }
    return res;
}

double cross_interference(const ChannelMatrix& channel, const CMatrix& w, int skip_victim) {
    double total = 0.0;
    for (int i = 0; i < channel.num_ues(); ++i) {
        if (i == skip_victim) {
            continue;
        }
        for (int j = 0; j < channel.num_ues(); ++j) {
            if (j == i) {
                continue;
            }
            cplx acc = 0.0;
            for (int m = 0; m < channel.num_aps(); ++m) {
                acc += channel(i, m) * w(m, j);
            }
            total += std::norm(acc);
        }
    }
    return total;
}

}  // namespace dmimo::oracle
