// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/conic.hpp"
#include "dmimo/network_model.hpp"

#include <functional>
#include <optional>

namespace dmimo {

struct BisectionParams {
    double t_low = 0.0;
    double t_high = 1e4;
    double epsilon = 0.01;
    int max_iters = 200;

    /// Throws InvalidInput unless 0 <= t_low < t_high and epsilon > 0.
    void validate() const;
    /// Number of halvings until the bracket is no wider than epsilon.
    [[nodiscard]] int expected_iterations() const;
};

struct PrecodingSolution {
    double t_star = 0.0;
    PrecoderMatrix precoder;
    SinrReport sinr_report;
    int iterations_used = 0;
    int numerical_failures = 0;
    int time_limited_steps = 0;
    /// Extra solves spent recovering a precoder that falls short of the bisection target.
    int repair_solves = 0;

    /// More than 10% of the feasibility solves ended in a numerical failure.
    [[nodiscard]] bool failure_flagged() const { return numerical_failures * 10 > iterations_used; }
};

/// Outcome of one feasibility query at a fixed SINR target.
struct FeasibilityProbe {
    SolveStatus status = SolveStatus::Infeasible;
    std::optional<PrecoderMatrix> precoder;
};

using FeasibilityOracle = std::function<FeasibilityProbe(double t)>;

struct BisectionResult {
    double t_star = 0.0;
    std::optional<PrecoderMatrix> precoder;
    int iterations = 0;
    int numerical_failures = 0;
    int time_limited = 0;
};

/// Bisection on the common SINR target. A feasible probe raises the lower end, anything else
/// (infeasible, numerical failure, time limit) lowers the upper end. Returns the last feasible
/// target and its precoder, or t_low with no precoder if nothing was feasible.
BisectionResult bisect_common_sinr(const BisectionParams& params, const FeasibilityOracle& oracle);

/// Fixed-pairing feasibility SOCP at SINR target t over the 2MK real precoder variables.
/// Throws InvalidInput if t <= 0 or the zero set removes every AP of some UE.
ConicProgram build_feasibility(const ChannelMatrix& channel, double t, const ZeroSet& zero_set,
                               const PowerBudget& p_max);

/// Appends the SINR cones, phase equalities, and per-AP power cones to `program`, whose
/// precoder variables live at `layout`.
void add_precoding_constraints(ConicProgram& program, const ComplexEmbedding& layout, const ChannelMatrix& channel,
                               double t, const PowerBudget& p_max);

/// Solves the fixed-pairing problem at one target and returns the precoder if feasible.
FeasibilityProbe probe_fixed_pairing(const ChannelMatrix& channel, double t, const ZeroSet& zero_set,
                                     const PowerBudget& p_max, const SolverTolerances& tol = {});

/// make_solution, then, if the precoder falls short of the last feasible target, re-solves an
/// equivalent program without the own-stream cancellation on [reached, target] to close the gap.
PrecodingSolution finalize_solution(const ChannelMatrix& channel, const ZeroSet& zero_set, const PowerBudget& p_max,
                                    const BisectionResult& result, const SolverTolerances& tol = {});

/// Maximum common SINR for a fixed zero pattern.
PrecodingSolution max_common_sinr(const ChannelMatrix& channel, const ZeroSet& zero_set, const PowerBudget& p_max,
                                  const BisectionParams& params = {}, const SolverTolerances& tol = {});

/// Packs a bisection result into a solution with its SINR report. t_star is capped at the
/// min SINR the returned precoder actually reaches.
PrecodingSolution make_solution(const ChannelMatrix& channel, const BisectionResult& result);

}  // namespace dmimo
