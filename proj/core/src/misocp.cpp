// SPDX-License-Identifier: Apache-2.0
#include "dmimo/misocp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>
#include <tuple>

namespace dmimo {

void MisocpConfig::validate() const {
    if (!(time_limit_s > 0.0)) {
        throw InvalidInput("time limit must be positive");
    }
    if (!(integrality_tol > 0.0) || integrality_tol >= 0.5) {
        throw InvalidInput("integrality tolerance must lie in (0, 0.5)");
    }
}

MisocpStats& MisocpStats::operator+=(const MisocpStats& other) {
    nodes_explored += other.nodes_explored;
    pruned_infeasible += other.pruned_infeasible;
    heuristic_calls += other.heuristic_calls;
    heuristic_successes += other.heuristic_successes;
    relaxation_failures += other.relaxation_failures;
    wall_time_s += other.wall_time_s;
    pruned_nodes.insert(pruned_nodes.end(), other.pruned_nodes.begin(), other.pruned_nodes.end());
    return *this;
}

PairingMatrix::Entries MisocpLayout::pairing(const RVector& x) const {
    PairingMatrix::Entries a(num_aps(), num_ues());
    for (int m = 0; m < num_aps(); ++m) {
        for (int k = 0; k < num_ues(); ++k) {
            a(m, k) = x(binary(m, k)) > 0.5 ? 1 : 0;
        }
    }
    return a;
}

ConicProgram build_misocp_feasibility(const ChannelMatrix& channel, double t, const SharingBudget& budget,
                                      const PowerBudget& p_max) {
    const int num_aps = channel.num_aps();
    const int num_ues = channel.num_ues();
    validate_budget(budget, num_aps, num_ues);
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidInput("SINR target must be positive and finite");
    }

    const MisocpLayout layout(num_aps, num_ues);
    const int n = layout.num_vars();
    ConicProgram program(n);
    add_precoding_constraints(program, layout.precoder(), channel, t, p_max);

    const double amplitude = std::sqrt(p_max.p_max_watt);
    for (int m = 0; m < num_aps; ++m) {
        for (int k = 0; k < num_ues; ++k) {
            const int a = layout.binary(m, k);
            program.set_bounds(a, 0.0, 1.0);
            program.mark_binary(a);
            // ||w_mk|| <= sqrt(P) a_mk
            SocConstraint cone;
            cone.affine_map = RMatrix::Zero(2, n);
            cone.affine_map(0, layout.precoder().re(m, k)) = 1.0;
            cone.affine_map(1, layout.precoder().im(m, k)) = 1.0;
            cone.affine_offset = RVector::Zero(2);
            cone.scalar_row = RVector::Zero(n);
            cone.scalar_row(a) = amplitude;
            program.add_soc(std::move(cone));
        }
    }

    if (budget.variant == SharingVariant::Total) {
        RVector row = RVector::Zero(n);
        for (int m = 0; m < num_aps; ++m) {
            for (int k = 0; k < num_ues; ++k) {
                row(layout.binary(m, k)) = -1.0;
            }
        }
        program.add_linear_geq(std::move(row), budget.b_tot);
    } else {
        const int cap = budget.per_ue_cap(num_ues);
        for (int k = 0; k < num_ues; ++k) {
            RVector row = RVector::Zero(n);
            for (int m = 0; m < num_aps; ++m) {
                row(layout.binary(m, k)) = -1.0;
            }
            program.add_linear_geq(std::move(row), cap);
        }
    }
    for (int k = 0; k < num_ues; ++k) {
        RVector row = RVector::Zero(n);
        for (int m = 0; m < num_aps; ++m) {
            row(layout.binary(m, k)) = 1.0;
        }
        program.add_linear_geq(std::move(row), -1.0);
    }
    return program;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct QueuedNode {
    BnBNode node;
    long seq = 0;
};

// Binary j gates the cone whose scalar side is a multiple of x_j alone; the norm of that
// cone's argument is the continuous mass the binary controls.
std::vector<int> gated_cones(const ConicProgram& program) {
    std::vector<int> gate(static_cast<std::size_t>(program.num_vars()), -1);
    for (std::size_t c = 0; c < program.cones().size(); ++c) {
        const auto& cone = program.cones()[c];
        if (cone.affine_map.rows() == 0 || cone.scalar_offset != 0.0) {
            continue;
        }
        int nnz = 0;
        int idx = -1;
        for (int j = 0; j < program.num_vars(); ++j) {
            if (cone.scalar_row(j) != 0.0) {
                ++nnz;
                idx = j;
            }
        }
        if (nnz == 1) {
            gate[static_cast<std::size_t>(idx)] = static_cast<int>(c);
        }
    }
    return gate;
}

}  // namespace

MisocpResult solve_misocp_feasibility(const ConicProgram& program, const MisocpConfig& cfg,
                                      const RoundingHeuristic& heuristic) {
    cfg.validate();
    program.validate();
    if (program.binaries().empty()) {
        throw InvalidInput("branch-and-bound needs at least one binary variable");
    }
    const auto start = Clock::now();
    MisocpResult result;
    MisocpStats& stats = result.stats;

    ConicProgram relaxed = program.relaxation();
    if (!relaxed.objective()) {
        RVector c = RVector::Zero(program.num_vars());
        for (int j : program.binaries()) {
            c(j) = 1.0;
        }
        relaxed.set_objective(std::move(c));
    }
    const std::vector<int> gate = gated_cones(program);

    auto node_program = [&](const BnBNode& node, bool feasibility_only) {
        ConicProgram p = relaxed;
        if (feasibility_only) {
            p.clear_objective();
        }
        for (int j : node.fixed_zero) {
            p.set_bounds(j, 0.0, 0.0);
        }
        for (int j : node.fixed_one) {
            p.set_bounds(j, 1.0, 1.0);
        }
        return p;
    };

    auto accept = [&](const RVector& x) {
        return evaluate_constraints(program, x).worst_relative() <= cfg.socp.feas_tol;
    };

    // BestFirst: fewest fixed binaries, then smallest parent bound, then creation order.
    auto worse = [&](const QueuedNode& a, const QueuedNode& b) {
        if (cfg.node_selection == NodeSelection::DepthFirst) {
            return a.seq < b.seq;
        }
        return std::make_tuple(a.node.depth, a.node.parent_bound, a.seq) >
               std::make_tuple(b.node.depth, b.node.parent_bound, b.seq);
    };
    std::priority_queue<QueuedNode, std::vector<QueuedNode>, decltype(worse)> open(worse);
    long seq = 0;
    open.push({BnBNode{}, seq++});

    bool unresolved = false;
    while (!open.empty()) {
        if (seconds_since(start) > cfg.time_limit_s) {
            result.verdict.status = SolveStatus::TimeLimit;
            stats.wall_time_s = seconds_since(start);
            return result;
        }
        BnBNode node = open.top().node;
        open.pop();
        ++stats.nodes_explored;

        const SolveVerdict rel = solve_socp(node_program(node, false), cfg.socp);
        result.verdict.iterations += rel.iterations;
        if (rel.status == SolveStatus::Infeasible) {
            ++stats.pruned_infeasible;
            if (cfg.record_pruned) {
                stats.pruned_nodes.push_back(node);
            }
            continue;
        }

        std::vector<bool> is_fixed(static_cast<std::size_t>(program.num_vars()), false);
        for (int j : node.fixed_zero) {
            is_fixed[static_cast<std::size_t>(j)] = true;
        }
        for (int j : node.fixed_one) {
            is_fixed[static_cast<std::size_t>(j)] = true;
        }

        int branch_var = -1;
        if (!rel.solution) {
            // No usable relaxation: split on the first free binary without pruning.
            ++stats.relaxation_failures;
            for (int j : program.binaries()) {
                if (!is_fixed[static_cast<std::size_t>(j)]) {
                    branch_var = j;
                    break;
                }
            }
            if (branch_var < 0) {
                unresolved = true;
                continue;
            }
        } else {
            const RVector& x = *rel.solution;
            double best_frac = cfg.integrality_tol;
            double best_mass = -1.0;
            for (int j : program.binaries()) {
                if (is_fixed[static_cast<std::size_t>(j)]) {
                    continue;
                }
                const double frac = std::min(std::abs(x(j)), std::abs(1.0 - x(j)));
                double mass = 0.0;
                if (const int c = gate[static_cast<std::size_t>(j)]; c >= 0) {
                    const auto& cone = program.cones()[static_cast<std::size_t>(c)];
                    mass = (cone.affine_map * x + cone.affine_offset).norm();
                }
                if (frac > best_frac || (frac == best_frac && branch_var >= 0 && mass > best_mass)) {
                    best_frac = frac;
                    best_mass = mass;
                    branch_var = j;
                }
            }

            if (branch_var < 0) {
                // Integral relaxation: pin the rounded binaries so gated mass is exactly zero.
                BnBNode leaf = node;
                for (int j : program.binaries()) {
                    if (is_fixed[static_cast<std::size_t>(j)]) {
                        continue;
                    }
                    (x(j) > 0.5 ? leaf.fixed_one : leaf.fixed_zero).push_back(j);
                }
                const SolveVerdict pinned = solve_socp(node_program(leaf, true), cfg.socp);
                result.verdict.iterations += pinned.iterations;
                if (pinned.feasible() && accept(*pinned.solution)) {
                    result.verdict.status = SolveStatus::Feasible;
                    result.verdict.solution = pinned.solution;
                    stats.wall_time_s = seconds_since(start);
                    return result;
                }
                if (pinned.status != SolveStatus::Infeasible) {
                    ++stats.relaxation_failures;
                    unresolved = true;
                }
                if (leaf.fixed_zero.size() + leaf.fixed_one.size() == node.fixed_zero.size() + node.fixed_one.size()) {
                    continue;
                }
                // The relaxation is integral only to tolerance; keep searching below it.
                for (int j : program.binaries()) {
                    if (!is_fixed[static_cast<std::size_t>(j)]) {
                        branch_var = j;
                        break;
                    }
                }
            }

            if (heuristic) {
                ++stats.heuristic_calls;
                if (std::optional<RVector> candidate = heuristic(x); candidate && accept(*candidate)) {
                    ++stats.heuristic_successes;
                    result.verdict.status = SolveStatus::Feasible;
                    result.verdict.solution = std::move(candidate);
                    stats.wall_time_s = seconds_since(start);
                    return result;
                }
            }
        }

        const double bound = rel.objective_value.value_or(node.parent_bound);
        BnBNode zero = node;
        zero.fixed_zero.push_back(branch_var);
        zero.depth = node.depth + 1;
        zero.parent_bound = bound;
        BnBNode one = node;
        one.fixed_one.push_back(branch_var);
        one.depth = node.depth + 1;
        one.parent_bound = bound;
        // DepthFirst pops the newest first, so the a = 1 side is tried first.
        open.push({std::move(zero), seq++});
        open.push({std::move(one), seq++});
    }

    result.verdict.status = unresolved ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
    stats.wall_time_s = seconds_since(start);
    return result;
}

namespace {

struct RankedEntry {
    double a;
    double mass;
    int m;
    int k;
};

// Covers every UE with its strongest relaxed entry, then adds entries in rank order while
// the budget allows.
PairingMatrix::Entries round_pairing(const MisocpLayout& layout, const RVector& x, const SharingBudget& budget) {
    const int num_aps = layout.num_aps();
    const int num_ues = layout.num_ues();
    std::vector<RankedEntry> ranked;
    for (int m = 0; m < num_aps; ++m) {
        for (int k = 0; k < num_ues; ++k) {
            const cplx w(x(layout.precoder().re(m, k)), x(layout.precoder().im(m, k)));
            ranked.push_back({x(layout.binary(m, k)), std::abs(w), m, k});
        }
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedEntry& l, const RankedEntry& r) {
        if (l.a != r.a) {
            return l.a > r.a;
        }
        return l.mass > r.mass;
    });

    PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
    std::vector<int> per_ue(static_cast<std::size_t>(num_ues), 0);
    int total = 0;
    for (const auto& e : ranked) {
        if (per_ue[static_cast<std::size_t>(e.k)] == 0) {
            a(e.m, e.k) = 1;
            ++per_ue[static_cast<std::size_t>(e.k)];
            ++total;
        }
    }
    const int cap = budget.variant == SharingVariant::PerUE ? budget.per_ue_cap(num_ues) : num_aps;
    const int limit = budget.variant == SharingVariant::Total ? budget.b_tot : num_aps * num_ues;
    for (const auto& e : ranked) {
        if (total >= limit) {
            break;
        }
        if (a(e.m, e.k) == 0 && per_ue[static_cast<std::size_t>(e.k)] < cap) {
            a(e.m, e.k) = 1;
            ++per_ue[static_cast<std::size_t>(e.k)];
            ++total;
        }
    }
    return a;
}

std::optional<RVector> pairing_point(const MisocpLayout& layout, const PairingMatrix::Entries& a,
                                     const PrecoderMatrix& w) {
    RVector x = RVector::Zero(layout.num_vars());
    x.head(layout.precoder().num_real_vars()) = layout.precoder().embed(w, layout.precoder().num_real_vars());
    for (int m = 0; m < layout.num_aps(); ++m) {
        for (int k = 0; k < layout.num_ues(); ++k) {
            x(layout.binary(m, k)) = a(m, k);
        }
    }
    return x;
}

// Any covering pairing inside the budget: UE k served by AP k mod M.
PairingMatrix::Entries fallback_pairing(int num_aps, int num_ues) {
    PairingMatrix::Entries a = PairingMatrix::Entries::Zero(num_aps, num_ues);
    for (int k = 0; k < num_ues; ++k) {
        a(k % num_aps, k) = 1;
    }
    return a;
}

}  // namespace

OptResult opt_scheme(const ChannelMatrix& channel, const SharingBudget& budget, const PowerBudget& p_max,
                     const BisectionParams& bisection, const MisocpConfig& cfg) {
    validate_budget(budget, channel.num_aps(), channel.num_ues());
    bisection.validate();
    cfg.validate();
    const auto start = Clock::now();
    const MisocpLayout layout(channel.num_aps(), channel.num_ues());

    OptResult out;
    std::optional<PairingMatrix::Entries> incumbent;
    std::optional<PairingMatrix::Entries> best_pairing;

    auto oracle = [&](double t) -> FeasibilityProbe {
        if (incumbent) {
            FeasibilityProbe warm =
                probe_fixed_pairing(channel, t, ZeroSet::from_pairing(*incumbent), p_max, cfg.socp);
            if (warm.status == SolveStatus::Feasible) {
                best_pairing = incumbent;
                return warm;
            }
        }

        const ConicProgram program = build_misocp_feasibility(channel, t, budget, p_max);
        std::vector<PairingMatrix::Entries> tried;
        RoundingHeuristic heuristic = [&](const RVector& relaxed) -> std::optional<RVector> {
            PairingMatrix::Entries a = round_pairing(layout, relaxed, budget);
            if (std::find(tried.begin(), tried.end(), a) != tried.end()) {
                return std::nullopt;
            }
            tried.push_back(a);
            FeasibilityProbe probe = probe_fixed_pairing(channel, t, ZeroSet::from_pairing(a), p_max, cfg.socp);
            if (probe.status != SolveStatus::Feasible) {
                return std::nullopt;
            }
            return pairing_point(layout, a, *probe.precoder);
        };

        MisocpConfig step_cfg = cfg;
        step_cfg.time_limit_s = cfg.time_limit_s - seconds_since(start);
        if (step_cfg.time_limit_s <= 0.0) {
            out.time_limited = true;
            return FeasibilityProbe{SolveStatus::TimeLimit, std::nullopt};
        }
        MisocpResult res = solve_misocp_feasibility(program, step_cfg, heuristic);
        out.stats += res.stats;

        FeasibilityProbe probe;
        probe.status = res.verdict.status;
        if (res.verdict.feasible()) {
            incumbent = layout.pairing(*res.verdict.solution);
            best_pairing = incumbent;
            probe.precoder = layout.precoder().extract(*res.verdict.solution);
        } else if (res.verdict.status == SolveStatus::TimeLimit) {
            out.time_limited = true;
        }
        return probe;
    };

    const BisectionResult result = bisect_common_sinr(bisection, oracle);
    const PairingMatrix::Entries chosen =
        best_pairing ? *best_pairing : fallback_pairing(channel.num_aps(), channel.num_ues());
    out.solution = finalize_solution(channel, ZeroSet::from_pairing(chosen), p_max, result, cfg.socp);
    out.pairing = PairingMatrix(chosen, budget);
    out.stats.wall_time_s = seconds_since(start);
    return out;
}

}  // namespace dmimo
