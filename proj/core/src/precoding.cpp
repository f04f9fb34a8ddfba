// SPDX-License-Identifier: Apache-2.0
#include "dmimo/precoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dmimo {

void BisectionParams::validate() const {
    if (!(t_low >= 0.0) || !(t_high > t_low)) {
        throw InvalidInput("bisection bracket must satisfy 0 <= t_low < t_high");
    }
    if (!(epsilon > 0.0)) {
        throw InvalidInput("bisection tolerance must be positive");
    }
    if (max_iters < 1) {
        throw InvalidInput("bisection iteration cap must be positive");
    }
}

int BisectionParams::expected_iterations() const {
    int n = 0;
    for (double width = t_high - t_low; width > epsilon; width /= 2.0) {
        ++n;
    }
    return n;
}

BisectionResult bisect_common_sinr(const BisectionParams& params, const FeasibilityOracle& oracle) {
    params.validate();
    BisectionResult result;
    result.t_star = params.t_low;
    double lo = params.t_low;
    double hi = params.t_high;
    while (hi - lo > params.epsilon) {
        if (result.iterations >= params.max_iters) {
            throw std::runtime_error("bisection exceeded " + std::to_string(params.max_iters) +
                                     " iterations with bracket [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
        }
        const double t = 0.5 * (lo + hi);
        FeasibilityProbe probe = oracle(t);
        ++result.iterations;
        if (probe.status == SolveStatus::Feasible && probe.precoder) {
            lo = t;
            result.t_star = t;
            result.precoder = std::move(probe.precoder);
        } else {
            if (probe.status == SolveStatus::NumericalFailure) {
                ++result.numerical_failures;
            } else if (probe.status == SolveStatus::TimeLimit) {
                ++result.time_limited;
            }
            hi = t;
        }
    }
    return result;
}

namespace {

void add_power_cones(ConicProgram& program, const ComplexEmbedding& layout, const PowerBudget& p_max) {
    const int n = program.num_vars();
    const int num_ues = layout.num_ues();
    const double amplitude = std::sqrt(p_max.p_max_watt);
    for (int m = 0; m < layout.num_aps(); ++m) {
        SocConstraint cone;
        cone.affine_map = RMatrix::Zero(2 * num_ues, n);
        cone.affine_offset = RVector::Zero(2 * num_ues);
        for (int k = 0; k < num_ues; ++k) {
            cone.affine_map(2 * k, layout.re(m, k)) = 1.0;
            cone.affine_map(2 * k + 1, layout.im(m, k)) = 1.0;
        }
        cone.scalar_row = RVector::Zero(n);
        cone.scalar_offset = amplitude;
        program.add_soc(std::move(cone));
    }
}

void add_zero_rows(ConicProgram& program, const ComplexEmbedding& layout, const ZeroSet& zero_set) {
    const int n = program.num_vars();
    for (int k = 0; k < layout.num_ues(); ++k) {
        for (int m = 0; m < layout.num_aps(); ++m) {
            if (zero_set.contains(m, k)) {
                RVector re = RVector::Zero(n);
                RVector im = RVector::Zero(n);
                re(layout.re(m, k)) = 1.0;
                im(layout.im(m, k)) = 1.0;
                program.add_equality(std::move(re), 0.0);
                program.add_equality(std::move(im), 0.0);
            }
        }
    }
}

// Same feasible set as build_feasibility, with UE k's own stream taken off both sides of its
// cone: ||[1; h_k w_i, i != k]|| <= Re{h_k w_k} / sqrt(t). Stays well conditioned for large t.
ConicProgram build_interference_form(const ChannelMatrix& channel, double t, const ZeroSet& zero_set,
                                     const PowerBudget& p_max) {
    const int num_ues = channel.num_ues();
    const ComplexEmbedding layout(channel.num_aps(), num_ues);
    const int n = layout.num_real_vars();
    ConicProgram program(n);
    for (int k = 0; k < num_ues; ++k) {
        const Eigen::VectorXcd h_k = channel.entries().row(k).transpose();
        SocConstraint cone;
        cone.affine_map = RMatrix::Zero(2 * num_ues - 1, n);
        cone.affine_offset = RVector::Zero(2 * num_ues - 1);
        cone.affine_offset(0) = 1.0;
        int row = 1;
        for (int i = 0; i < num_ues; ++i) {
            if (i == k) {
                continue;
            }
            auto [re_row, im_row] = layout.column_functional(h_k, i, n);
            cone.affine_map.row(row++) = re_row.transpose();
            cone.affine_map.row(row++) = im_row.transpose();
        }
        auto [re_kk, im_kk] = layout.column_functional(h_k, k, n);
        cone.scalar_row = re_kk / std::sqrt(t);
        cone.scalar_offset = 0.0;
        program.add_soc(std::move(cone));
        program.add_equality(std::move(im_kk), 0.0);
    }
    add_power_cones(program, layout, p_max);
    add_zero_rows(program, layout, zero_set);
    return program;
}

constexpr int kRepairSteps = 8;
constexpr double kRepairRelTol = 1e-9;

}  // namespace

void add_precoding_constraints(ConicProgram& program, const ComplexEmbedding& layout, const ChannelMatrix& channel,
                               double t, const PowerBudget& p_max) {
    const int n = program.num_vars();
    const int num_ues = layout.num_ues();
    const double sinr_gain = std::sqrt(1.0 + 1.0 / t);

    for (int k = 0; k < num_ues; ++k) {
        const Eigen::VectorXcd h_k = channel.entries().row(k).transpose();
        // || [1; (h_k W)^H] || <= sqrt(1 + 1/t) Re{h_k w_k}
        SocConstraint cone;
        cone.affine_map = RMatrix::Zero(1 + 2 * num_ues, n);
        cone.affine_offset = RVector::Zero(1 + 2 * num_ues);
        cone.affine_offset(0) = 1.0;
        for (int i = 0; i < num_ues; ++i) {
            auto [re_row, im_row] = layout.column_functional(h_k, i, n);
            cone.affine_map.row(1 + 2 * i) = re_row.transpose();
            cone.affine_map.row(2 + 2 * i) = im_row.transpose();
        }
        auto [re_kk, im_kk] = layout.column_functional(h_k, k, n);
        cone.scalar_row = sinr_gain * re_kk;
        cone.scalar_offset = 0.0;
        program.add_soc(std::move(cone));
        // Im{h_k w_k} = 0
        program.add_equality(std::move(im_kk), 0.0);
    }

    add_power_cones(program, layout, p_max);
}

ConicProgram build_feasibility(const ChannelMatrix& channel, double t, const ZeroSet& zero_set,
                               const PowerBudget& p_max) {
    const int num_aps = channel.num_aps();
    const int num_ues = channel.num_ues();
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw InvalidInput("SINR target must be positive and finite");
    }
    if (zero_set.num_aps() != num_aps || zero_set.num_ues() != num_ues) {
        throw InvalidInput("zero set dimensions do not match the channel");
    }
    for (int k = 0; k < num_ues; ++k) {
        if (zero_set.free_in_column(k) < 1) {
            throw InvalidInput("zero set removes every AP serving UE " + std::to_string(k));
        }
    }

    const ComplexEmbedding layout(num_aps, num_ues);
    const int n = layout.num_real_vars();
    ConicProgram program(n);
    add_precoding_constraints(program, layout, channel, t, p_max);
    add_zero_rows(program, layout, zero_set);
    return program;
}

FeasibilityProbe probe_fixed_pairing(const ChannelMatrix& channel, double t, const ZeroSet& zero_set,
                                     const PowerBudget& p_max, const SolverTolerances& tol) {
    const ConicProgram program = build_feasibility(channel, t, zero_set, p_max);
    const SolveVerdict verdict = solve_socp(program, tol);
    FeasibilityProbe probe;
    probe.status = verdict.status;
    if (verdict.feasible()) {
        probe.precoder = ComplexEmbedding(channel.num_aps(), channel.num_ues()).extract(*verdict.solution);
    }
    return probe;
}

PrecodingSolution make_solution(const ChannelMatrix& channel, const BisectionResult& result) {
    PrecodingSolution sol;
    sol.t_star = result.t_star;
    sol.precoder = result.precoder ? *result.precoder : PrecoderMatrix::zeros(channel.num_aps(), channel.num_ues());
    sol.sinr_report = sinr_report(channel, sol.precoder);
    if (result.precoder) {
        // never claim more than the precoder delivers; near the optimum the SINR cone is flat in t
        sol.t_star = std::min(sol.t_star, sol.sinr_report.min_sinr);
    }
    sol.iterations_used = result.iterations;
    sol.numerical_failures = result.numerical_failures;
    sol.time_limited_steps = result.time_limited;
    return sol;
}

PrecodingSolution finalize_solution(const ChannelMatrix& channel, const ZeroSet& zero_set, const PowerBudget& p_max,
                                    const BisectionResult& result, const SolverTolerances& tol) {
    PrecodingSolution sol = make_solution(channel, result);
    if (!result.precoder || sol.t_star >= result.t_star) {
        return sol;
    }
    const ComplexEmbedding layout(channel.num_aps(), channel.num_ues());
    double low = sol.t_star;
    double high = result.t_star;
    double t = high;
    for (int step = 0; step < kRepairSteps && high - low > kRepairRelTol * high; ++step) {
        const SolveVerdict v = solve_socp(build_interference_form(channel, t, zero_set, p_max), tol);
        ++sol.repair_solves;
        if (v.feasible()) {
            PrecoderMatrix w = layout.extract(*v.solution);
            const double reached = sinr_report(channel, w).min_sinr;
            if (reached > sol.t_star) {
                sol.t_star = std::min(reached, result.t_star);
                sol.precoder = std::move(w);
            }
            low = std::max(low, std::min(reached, t));
            if (reached >= t) {
                low = t;
            }
        } else {
            high = t;
        }
        t = 0.5 * (low + high);
    }
    sol.sinr_report = sinr_report(channel, sol.precoder);
    return sol;
}

PrecodingSolution max_common_sinr(const ChannelMatrix& channel, const ZeroSet& zero_set, const PowerBudget& p_max,
                                  const BisectionParams& params, const SolverTolerances& tol) {
    // Validates the zero set before any solve.
    (void)build_feasibility(channel, 1.0, zero_set, p_max);
    const BisectionResult result = bisect_common_sinr(
        params, [&](double t) { return probe_fixed_pairing(channel, t, zero_set, p_max, tol); });
    return finalize_solution(channel, zero_set, p_max, result, tol);
}

}  // namespace dmimo
