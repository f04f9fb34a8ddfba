// SPDX-License-Identifier: Apache-2.0
#include "dmimo/channel_gen.hpp"
#include "dmimo/misocp.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

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

int count_dim(const ConicProgram& p, int dim) {
    int n = 0;
    for (const auto& c : p.cones()) {
        n += c.dimension() == dim ? 1 : 0;
    }
    return n;
}

void expect_consistent(const OptResult& r, const SharingBudget& budget) {
    const auto& a = r.pairing;
    EXPECT_TRUE(a.covers_every_ue());
    if (budget.variant == SharingVariant::Total) {
        EXPECT_LE(a.total_active(), budget.b_tot);
    } else {
        for (int k = 0; k < a.num_ues(); ++k) {
            EXPECT_LE(a.column_active(k), budget.per_ue_cap(a.num_ues()));
        }
    }
    for (int m = 0; m < a.num_aps(); ++m) {
        for (int k = 0; k < a.num_ues(); ++k) {
            if (!a.active(m, k)) {
                EXPECT_LE(std::abs(r.solution.precoder(m, k)), kDefaultZeroTol);
            }
        }
    }
}

}  // namespace

TEST(BuildMisocp, TwoByTwoFullBudgetStructure) {
    const ConicProgram p =
        build_misocp_feasibility(oracle::random_channel(2, 2, 3), 1.0, {SharingVariant::Total, 4}, PowerBudget(1.0));
    EXPECT_EQ(p.binaries().size(), 4u);
    EXPECT_EQ(count_dim(p, 3), 4);
    // one budget row plus two covering rows
    EXPECT_EQ(count_dim(p, 1), 3);
    EXPECT_EQ(p.num_vars(), 12);
    for (int j : p.binaries()) {
        EXPECT_EQ(p.lower_bounds()(j), 0.0);
        EXPECT_EQ(p.upper_bounds()(j), 1.0);
    }
}

TEST(BuildMisocp, PerUeRowsOnePerColumn) {
    const ConicProgram p =
        build_misocp_feasibility(oracle::random_channel(2, 2, 3), 1.0, {SharingVariant::PerUE, 4}, PowerBudget(1.0));
    EXPECT_EQ(count_dim(p, 1), 4);
}

TEST(BuildMisocp, LayoutPlacesBinariesAfterPrecoder) {
    const MisocpLayout layout(3, 2);
    EXPECT_EQ(layout.binary(0, 0), 12);
    EXPECT_EQ(layout.binary(0, 1), 13);
    EXPECT_EQ(layout.binary(2, 1), 17);
    EXPECT_EQ(layout.num_vars(), 18);
}

TEST(BuildMisocp, RejectsBadInput) {
    const ChannelMatrix h = oracle::random_channel(3, 2, 1);
    EXPECT_THROW(build_misocp_feasibility(h, 1.0, {SharingVariant::Total, 2}, PowerBudget(1.0)), InvalidInput);
    EXPECT_THROW(build_misocp_feasibility(h, 1.0, {SharingVariant::PerUE, 2}, PowerBudget(1.0)), InvalidInput);
    EXPECT_THROW(build_misocp_feasibility(h, 0.0, {SharingVariant::Total, 3}, PowerBudget(1.0)), InvalidInput);
}

TEST(MisocpConfig, Validation) {
    MisocpConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.time_limit_s = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = MisocpConfig{};
    cfg.integrality_tol = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(SolveMisocp, IntegralRelaxationIsOneNode) {
    // maximize a binary x >= 0.75: the relaxation optimum is already x = 1
    ConicProgram p(1);
    p.set_bounds(0, 0.0, 1.0);
    p.mark_binary(0);
    p.add_linear_geq(RVector::Constant(1, 1.0), -0.75);
    p.set_objective(RVector::Constant(1, -1.0));
    const MisocpResult r = solve_misocp_feasibility(p, MisocpConfig{});
    ASSERT_TRUE(r.verdict.feasible());
    EXPECT_EQ(r.stats.nodes_explored, 1);
    EXPECT_NEAR((*r.verdict.solution)(0), 1.0, 1e-9);
}

TEST(SolveMisocp, FractionalRootBranches) {
    // two binaries summing to exactly one with a preference encoded by a continuous variable
    ConicProgram p(3);
    for (int j = 0; j < 2; ++j) {
        p.set_bounds(j, 0.0, 1.0);
        p.mark_binary(j);
    }
    RVector row = RVector::Zero(3);
    row << 1.0, 1.0, 0.0;
    p.add_equality(row, 1.0);
    row << 0.0, 1.0, -1.0;
    p.add_equality(row, 0.0);
    p.set_bounds(2, 0.2, 0.8);
    const MisocpResult r = solve_misocp_feasibility(p, MisocpConfig{});
    EXPECT_EQ(r.verdict.status, SolveStatus::Infeasible);
    EXPECT_GT(r.stats.nodes_explored, 1);
}

TEST(SolveMisocp, RejectsContinuousProgram) {
    ConicProgram p(1);
    EXPECT_THROW(solve_misocp_feasibility(p, MisocpConfig{}), InvalidInput);
}

TEST(SolveMisocp, RootInfeasibleAboveFullSharingOptimum) {
    const ChannelMatrix h = dense_channel(2, 2, 7);
    const double full = max_common_sinr(h, ZeroSet(2, 2), PowerBudget(1.0)).t_star;
    const ConicProgram p = build_misocp_feasibility(h, full + 1.0, {SharingVariant::Total, 2}, PowerBudget(1.0));
    const MisocpResult r = solve_misocp_feasibility(p, MisocpConfig{});
    EXPECT_EQ(r.verdict.status, SolveStatus::Infeasible);
    EXPECT_EQ(r.stats.nodes_explored, 1);
}

TEST(SolveMisocp, VerdictMatchesEnumerationAtFixedTargets) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const ChannelMatrix h = dense_channel(2, 2, seed);
        const SharingBudget budget{SharingVariant::Total, 2};
        const double opt = oracle::enumeration_optimum(h, budget, PowerBudget(1.0), {}).t_star;
        for (double t : {0.5 * opt, opt * 1.05 + 0.05}) {
            if (!(t > 0.0)) {
                continue;
            }
            bool any = false;
            for (const auto& a : oracle::enumerate_pairings(2, 2, budget, false)) {
                any = any || probe_fixed_pairing(h, t, ZeroSet::from_pairing(a), PowerBudget(1.0)).status ==
                                 SolveStatus::Feasible;
            }
            const MisocpResult r = solve_misocp_feasibility(
                build_misocp_feasibility(h, t, budget, PowerBudget(1.0)), MisocpConfig{});
            EXPECT_EQ(r.verdict.feasible(), any) << "seed " << seed << " t " << t;
            if (r.verdict.feasible()) {
                const PairingMatrix::Entries a = MisocpLayout(2, 2).pairing(*r.verdict.solution);
                EXPECT_LE(a.cast<int>().sum(), 2);
            }
        }
    }
}

TEST(SolveMisocp, DepthFirstAgreesWithBestFirst) {
    const ChannelMatrix h = dense_channel(3, 2, 11);
    const SharingBudget budget{SharingVariant::Total, 3};
    const double opt = oracle::enumeration_optimum(h, budget, PowerBudget(1.0), {}).t_star;
    MisocpConfig dfs;
    dfs.node_selection = NodeSelection::DepthFirst;
    for (double t : {0.8 * opt, 1.1 * opt + 0.05}) {
        const ConicProgram p = build_misocp_feasibility(h, t, budget, PowerBudget(1.0));
        EXPECT_EQ(solve_misocp_feasibility(p, MisocpConfig{}).verdict.status,
                  solve_misocp_feasibility(p, dfs).verdict.status);
    }
}

TEST(SolveMisocp, NodeCountBoundAndSoundPruning) {
    const ChannelMatrix h = dense_channel(2, 2, 5);
    const SharingBudget budget{SharingVariant::Total, 2};
    const double opt = oracle::enumeration_optimum(h, budget, PowerBudget(1.0), {}).t_star;
    MisocpConfig cfg;
    cfg.record_pruned = true;
    const MisocpLayout layout(2, 2);
    const int first_binary = layout.binary(0, 0);
    for (double t : {0.9 * opt, 1.1 * opt + 0.05}) {
        const MisocpResult r =
            solve_misocp_feasibility(build_misocp_feasibility(h, t, budget, PowerBudget(1.0)), cfg);
        EXPECT_LE(r.stats.nodes_explored, (1 << 4) + 1);
        // every integral completion of a pruned node must be infeasible
        for (const BnBNode& node : r.stats.pruned_nodes) {
            for (const auto& a : oracle::enumerate_pairings(2, 2, budget, false)) {
                bool consistent = true;
                for (int j : node.fixed_zero) {
                    const int e = j - first_binary;
                    consistent = consistent && a(e / 2, e % 2) == 0;
                }
                for (int j : node.fixed_one) {
                    const int e = j - first_binary;
                    consistent = consistent && a(e / 2, e % 2) == 1;
                }
                if (consistent) {
                    EXPECT_NE(probe_fixed_pairing(h, t, ZeroSet::from_pairing(a), PowerBudget(1.0)).status,
                              SolveStatus::Feasible);
                }
            }
        }
    }
}

TEST(SolveMisocp, TimeLimitReported) {
    const ChannelMatrix h = dense_channel(3, 3, 2);
    MisocpConfig cfg;
    cfg.time_limit_s = 1e-9;
    const MisocpResult r =
        solve_misocp_feasibility(build_misocp_feasibility(h, 1.0, {SharingVariant::Total, 3}, PowerBudget(1.0)), cfg);
    EXPECT_EQ(r.verdict.status, SolveStatus::TimeLimit);

    const OptResult o = opt_scheme(h, {SharingVariant::Total, 3}, PowerBudget(1.0), {}, cfg);
    EXPECT_TRUE(o.time_limited);
}

TEST(OptScheme, MatchesEnumerationOnSmallDrops) {
    for (auto [m, k] : {std::pair{2, 2}, std::pair{3, 2}}) {
        for (int b : {k, k + 1}) {
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                const ChannelMatrix h = dense_channel(m, k, seed);
                const SharingBudget budget{SharingVariant::Total, b};
                const OptResult r = opt_scheme(h, budget, PowerBudget(1.0));
                const double ref = oracle::enumeration_optimum(h, budget, PowerBudget(1.0), {}).t_star;
                EXPECT_NEAR(r.solution.t_star, ref, 2 * kEps) << m << "x" << k << " b=" << b << " seed " << seed;
                expect_consistent(r, budget);
                EXPECT_FALSE(r.time_limited);
            }
        }
    }
}

TEST(OptScheme, FullBudgetEqualsFullSharing) {
    const ChannelMatrix h = dense_channel(2, 3, 4);
    const OptResult r = opt_scheme(h, {SharingVariant::Total, 6}, PowerBudget(1.0));
    const double full = max_common_sinr(h, ZeroSet(2, 3), PowerBudget(1.0)).t_star;
    EXPECT_NEAR(r.solution.t_star, full, 2 * kEps);
}

TEST(OptScheme, MinimalBudgetOneApPerUe) {
    const ChannelMatrix h = dense_channel(3, 3, 6);
    const OptResult r = opt_scheme(h, {SharingVariant::Total, 3}, PowerBudget(1.0));
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(r.pairing.column_active(k), 1);
    }
}

TEST(OptScheme, TotalBudgetDominatesPerUe) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const ChannelMatrix h = dense_channel(2, 2, seed);
        const OptResult total = opt_scheme(h, {SharingVariant::Total, 2}, PowerBudget(1.0));
        const OptResult per_ue = opt_scheme(h, {SharingVariant::PerUE, 2}, PowerBudget(1.0));
        EXPECT_GE(total.solution.t_star, per_ue.solution.t_star - 2 * kEps);
        expect_consistent(per_ue, {SharingVariant::PerUE, 2});
    }
}

TEST(OptScheme, NonDecreasingInBudget) {
    const ChannelMatrix h = dense_channel(3, 3, 9);
    double prev = 0.0;
    for (int b = 3; b <= 9; ++b) {
        const OptResult r = opt_scheme(h, {SharingVariant::Total, b}, PowerBudget(1.0));
        EXPECT_GE(r.solution.t_star, prev - 2 * kEps) << "b_tot " << b;
        EXPECT_LE(r.pairing.total_active(), b);
        prev = std::max(prev, r.solution.t_star);
    }
}

TEST(OptScheme, UsesTwentyBisectionSteps) {
    const OptResult r = opt_scheme(dense_channel(2, 2, 1), {SharingVariant::Total, 2}, PowerBudget(1.0));
    EXPECT_EQ(r.solution.iterations_used, 20);
}
