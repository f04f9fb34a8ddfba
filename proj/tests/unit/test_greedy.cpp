// SPDX-License-Identifier: Apache-2.0
#include "dmimo/channel_gen.hpp"
#include "dmimo/greedy.hpp"
#include "dmimo/misocp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

using namespace dmimo;

namespace {

constexpr double kEps = 0.01;

ChannelMatrix dense_channel(int m, int k, std::uint64_t seed) {
    DropConfig cfg = DropConfig::dense();
    cfg.m_aps = m;
    cfg.k_ues = k;
    cfg.seed = seed;
    return generate_drop(cfg).channel;
}

const GreedyCandidate* find(const std::vector<GreedyCandidate>& c, int m, int k) {
    for (const auto& x : c) {
        if (x.ap == m && x.ue == k) {
            return &x;
        }
    }
    return nullptr;
}

}  // namespace

TEST(ScoreCandidates, IdentityPrecoderProtectsOnlySignalPath) {
    const ChannelMatrix h(CMatrix::Identity(2, 2));
    const PrecoderMatrix w(CMatrix::Identity(2, 2));
    const auto c = score_candidates(h, w, ZeroSet(2, 2));
    EXPECT_EQ(find(c, 0, 0), nullptr);
    EXPECT_EQ(find(c, 1, 1), nullptr);
    // zeroing an entry that is already zero changes nothing
    const GreedyCandidate* off = find(c, 1, 0);
    ASSERT_NE(off, nullptr);
    EXPECT_DOUBLE_EQ(off->score.received_power, 1.0);
    EXPECT_DOUBLE_EQ(off->score.interference, 0.0);
    EXPECT_TRUE(std::isinf(off->score.ratio));
}

TEST(ScoreCandidates, HandEvaluatedTwoByTwo) {
    // H = [1 2; 3 4], W = ones. Zeroing (1,0) gives W' = [1 1; 0 1] and H W' = [1 3; 3 7].
    CMatrix hm(2, 2);
    hm << 1.0, 2.0, 3.0, 4.0;
    const ChannelMatrix h(hm);
    const PrecoderMatrix w(CMatrix::Ones(2, 2));
    const auto c = score_candidates(h, w, ZeroSet(2, 2));
    ASSERT_EQ(c.size(), 4u);
    const GreedyCandidate* s = find(c, 1, 0);
    ASSERT_NE(s, nullptr);
    EXPECT_DOUBLE_EQ(s->score.received_power, 1.0);
    EXPECT_DOUBLE_EQ(s->score.interference, 9.0);
    EXPECT_DOUBLE_EQ(s->score.ratio, 1.0 / 9.0);
    // Zeroing (0,1): W' = [1 0; 1 1], H W' = [3 2; 7 4]; UE 1 gets 16, victim 0 sees stream 1: 4.
    const GreedyCandidate* t = find(c, 0, 1);
    ASSERT_NE(t, nullptr);
    EXPECT_DOUBLE_EQ(t->score.received_power, 16.0);
    EXPECT_DOUBLE_EQ(t->score.interference, 4.0);
}

TEST(ScoreCandidates, IdentityChannelAllOnesHasNoCrossTermAfterRemoval) {
    const ChannelMatrix h(CMatrix::Identity(2, 2));
    const PrecoderMatrix w(CMatrix::Ones(2, 2));
    const auto c = score_candidates(h, w, ZeroSet(2, 2));
    const GreedyCandidate* s = find(c, 1, 0);
    ASSERT_NE(s, nullptr);
    EXPECT_DOUBLE_EQ(s->score.received_power, 1.0);
    EXPECT_DOUBLE_EQ(s->score.interference, 0.0);
}

TEST(ScoreCandidates, MatchesDirectInterferenceSum) {
    const ChannelMatrix h = oracle::random_channel(3, 4, 21);
    const ChannelMatrix wc = oracle::random_channel(4, 3, 22);
    const PrecoderMatrix w(wc.entries());
    for (const auto& c : score_candidates(h, w, ZeroSet(4, 3))) {
        CMatrix wp = w.entries();
        wp(c.ap, c.ue) = 0.0;
        EXPECT_NEAR(c.score.interference, oracle::cross_interference(h, wp, c.ue), 1e-9);
        const cplx sig = (h.entries().row(c.ue) * wp.col(c.ue))(0);
        EXPECT_NEAR(c.score.received_power, std::norm(sig), 1e-9);
    }
}

TEST(ScoreCandidates, SkipsZeroedAndLastFreeEntries) {
    const ChannelMatrix h = oracle::random_channel(2, 2, 1);
    const PrecoderMatrix w(CMatrix::Ones(2, 2));
    ZeroSet z(2, 2);
    z.insert(0, 0);
    const auto c = score_candidates(h, w, z);
    EXPECT_EQ(find(c, 0, 0), nullptr);
    EXPECT_EQ(find(c, 1, 0), nullptr);
    EXPECT_NE(find(c, 0, 1), nullptr);
    EXPECT_NE(find(c, 1, 1), nullptr);
}

TEST(BestCandidate, TieRules) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<GreedyCandidate> c{{0, 0, {1.0, 0.0, inf}}, {0, 1, {2.0, 0.0, inf}}, {1, 0, {5.0, 1.0, 5.0}}};
    EXPECT_EQ(best_candidate(c)->ue, 1);
    c = {{0, 1, {2.0, 1.0, 2.0}}, {1, 0, {2.0, 1.0, 2.0}}};
    EXPECT_EQ(best_candidate(c)->ap, 0);
    c = {{0, 1, {1.0, 0.5, 2.0}}, {1, 0, {4.0, 2.0, 2.0}}};
    EXPECT_EQ(best_candidate(c)->ap, 1);
    EXPECT_EQ(best_candidate({}), nullptr);
}

TEST(GreedyPairing, FullBudgetMakesNoRemovals) {
    const ChannelMatrix h = dense_channel(3, 3, 2);
    const GreedyResult r = greedy_pairing(h, {SharingVariant::Total, 9}, PowerBudget(1.0));
    EXPECT_TRUE(r.trace.removal_sequence.empty());
    EXPECT_NEAR(r.solution.t_star, max_common_sinr(h, ZeroSet(3, 3), PowerBudget(1.0)).t_star, 1e-12);
    EXPECT_EQ(r.pairing.total_active(), 9);
}

TEST(GreedyPairing, MinimalTotalBudgetRemovalCount) {
    const ChannelMatrix h = dense_channel(3, 3, 4);
    const GreedyResult r = greedy_pairing(h, {SharingVariant::Total, 3}, PowerBudget(1.0));
    EXPECT_EQ(r.trace.removal_sequence.size(), 6u);
    EXPECT_EQ(r.trace.t_after_each.size(), 6u);
    EXPECT_EQ(r.pairing.total_active(), 3);
    EXPECT_FALSE(r.partial);
    std::set<std::pair<int, int>> unique(r.trace.removal_sequence.begin(), r.trace.removal_sequence.end());
    EXPECT_EQ(unique.size(), 6u);
    for (std::size_t i = 1; i < r.trace.t_after_each.size(); ++i) {
        EXPECT_LE(r.trace.t_after_each[i], r.trace.t_after_each[i - 1] + 2 * kEps);
    }
}

TEST(GreedyPairing, ColumnsStayCoveredAlongTrace) {
    const ChannelMatrix h = dense_channel(4, 3, 8);
    const GreedyResult r = greedy_pairing(h, {SharingVariant::Total, 3}, PowerBudget(1.0));
    ZeroSet z(4, 3);
    for (auto [m, k] : r.trace.removal_sequence) {
        z.insert(m, k);
        for (int col = 0; col < 3; ++col) {
            EXPECT_GE(z.free_in_column(col), 1);
        }
    }
    EXPECT_TRUE(r.pairing.is_valid());
}

TEST(GreedyPairing, PerUeOnlyTouchesOverCapColumns) {
    const ChannelMatrix h = dense_channel(3, 2, 5);
    const SharingBudget budget{SharingVariant::PerUE, 4};
    const GreedyResult r = greedy_pairing(h, budget, PowerBudget(1.0));
    EXPECT_EQ(r.trace.removal_sequence.size(), 2u);
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(r.pairing.column_active(k), 2);
    }
}

TEST(GreedyPairing, PrecoderRespectsPairing) {
    const ChannelMatrix h = dense_channel(3, 3, 12);
    const GreedyResult r = greedy_pairing(h, {SharingVariant::Total, 4}, PowerBudget(1.0));
    for (int m = 0; m < 3; ++m) {
        for (int k = 0; k < 3; ++k) {
            if (!r.pairing.active(m, k)) {
                EXPECT_LE(std::abs(r.solution.precoder(m, k)), kDefaultZeroTol);
            }
        }
    }
}

TEST(GreedyPairing, NeverBeatsExactOptimum) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const ChannelMatrix h = dense_channel(2, 2, seed);
        const SharingBudget budget{SharingVariant::Total, 2};
        const double opt = oracle::enumeration_optimum(h, budget, PowerBudget(1.0), {}).t_star;
        const GreedyResult r = greedy_pairing(h, budget, PowerBudget(1.0));
        EXPECT_LE(r.solution.t_star, opt + 2 * kEps) << "seed " << seed;
    }
}

TEST(GreedyPairing, RejectsInfeasibleBudget) {
    EXPECT_THROW(greedy_pairing(dense_channel(2, 3, 1), {SharingVariant::Total, 2}, PowerBudget(1.0)), InvalidInput);
}
