// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/conic.hpp"
#include "dmimo/network_model.hpp"
#include "dmimo/precoding.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace dmimo {

enum class NodeSelection { BestFirst, DepthFirst };
enum class BranchRule { MostFractional };

struct MisocpConfig {
    double time_limit_s = 900.0;
    double integrality_tol = 1e-5;
    NodeSelection node_selection = NodeSelection::BestFirst;
    BranchRule branch_rule = BranchRule::MostFractional;
    /// Keep every node pruned as infeasible in the stats (diagnostics only).
    bool record_pruned = false;
    SolverTolerances socp;

    void validate() const;
};

/// Search-tree node. Fixed sets hold binary variable indices and are disjoint.
struct BnBNode {
    std::vector<int> fixed_zero;
    std::vector<int> fixed_one;
    int depth = 0;
    /// Relaxation objective of the parent, used for ordering.
    double parent_bound = 0.0;
};

struct MisocpStats {
    long nodes_explored = 0;
    long pruned_infeasible = 0;
    long heuristic_calls = 0;
    long heuristic_successes = 0;
    long relaxation_failures = 0;
    double wall_time_s = 0.0;
    std::vector<BnBNode> pruned_nodes;

    MisocpStats& operator+=(const MisocpStats& other);
};

/// Returns a point feasible for the mixed-integer program, or nothing. Receives the node's
/// relaxed solution.
using RoundingHeuristic = std::function<std::optional<RVector>(const RVector& relaxed)>;

struct MisocpResult {
    SolveVerdict verdict;
    MisocpStats stats;
};

/// Variable layout of the joint pairing-precoding program: the 2MK precoder reals first,
/// then a_mk at 2MK + mK + k.
class MisocpLayout {
  public:
    MisocpLayout(int num_aps, int num_ues) : precoder_(num_aps, num_ues) {}

    [[nodiscard]] const ComplexEmbedding& precoder() const { return precoder_; }
    [[nodiscard]] int num_aps() const { return precoder_.num_aps(); }
    [[nodiscard]] int num_ues() const { return precoder_.num_ues(); }
    [[nodiscard]] int binary(int m, int k) const {
        return precoder_.num_real_vars() + m * num_ues() + k;
    }
    [[nodiscard]] int num_vars() const { return precoder_.num_real_vars() + num_aps() * num_ues(); }

    /// Rounds the binary block of x.
    [[nodiscard]] PairingMatrix::Entries pairing(const RVector& x) const;

  private:
    ComplexEmbedding precoder_;
};

/// Joint feasibility program at SINR target t: precoding cones, MK binaries with coupling
/// cones ||w_mk|| <= a_mk sqrt(P), budget row(s) and per-UE covering rows.
/// Throws InvalidInput if the budget admits no covering pairing.
ConicProgram build_misocp_feasibility(const ChannelMatrix& channel, double t, const SharingBudget& budget,
                                      const PowerBudget& p_max);

/// Branch-and-bound over the binaries of `program`, relaxations solved as SOCPs.
/// Throws InvalidInput if the program has no binaries.
MisocpResult solve_misocp_feasibility(const ConicProgram& program, const MisocpConfig& cfg,
                                      const RoundingHeuristic& heuristic = {});

struct OptResult {
    PrecodingSolution solution;
    PairingMatrix pairing;
    MisocpStats stats;
    /// Some bisection step hit the time limit; t_star is only a lower bound.
    bool time_limited = false;
};

/// Bisection over the joint program. Each step first retries the last feasible pairing.
OptResult opt_scheme(const ChannelMatrix& channel, const SharingBudget& budget, const PowerBudget& p_max,
                     const BisectionParams& bisection = {}, const MisocpConfig& cfg = {});

}  // namespace dmimo
