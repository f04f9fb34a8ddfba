// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dmimo/network_model.hpp"

#include <algorithm>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dmimo {

/// ||A x + b|| <= c^T x + d. A zero-row map gives the linear inequality c^T x + d >= 0.
struct SocConstraint {
    RMatrix affine_map;
    RVector affine_offset;
    RVector scalar_row;
    double scalar_offset = 0.0;

    /// Number of real entries in the cone, norm argument plus the scalar side.
    [[nodiscard]] int dimension() const { return static_cast<int>(affine_map.rows()) + 1; }
};

struct LinearEquality {
    RVector row;
    double rhs = 0.0;
};

/// Real-variable second-order cone program. Feasibility problems leave the objective empty.
class ConicProgram {
  public:
    explicit ConicProgram(int num_vars = 0);

    [[nodiscard]] int num_vars() const { return num_vars_; }

    void set_objective(RVector c);
    void clear_objective() { objective_.reset(); }
    [[nodiscard]] const std::optional<RVector>& objective() const { return objective_; }

    void add_equality(RVector row, double rhs);
    void add_soc(SocConstraint cone);
    /// c^T x + d >= 0
    void add_linear_geq(RVector row, double offset);
    void set_bounds(int var, double lower, double upper);
    void mark_binary(int var);

    [[nodiscard]] const std::vector<LinearEquality>& equalities() const { return equalities_; }
    [[nodiscard]] const std::vector<SocConstraint>& cones() const { return cones_; }
    [[nodiscard]] const RVector& lower_bounds() const { return lower_; }
    [[nodiscard]] const RVector& upper_bounds() const { return upper_; }
    [[nodiscard]] const std::vector<int>& binaries() const { return binaries_; }
    [[nodiscard]] bool is_plain_socp() const { return binaries_.empty(); }

    /// Copy with integrality dropped; binaries keep [0, 1] bounds.
    [[nodiscard]] ConicProgram relaxation() const;

    /// Throws InvalidInput on inconsistent shapes or non-finite data.
    void validate() const;

  private:
    int num_vars_ = 0;
    std::optional<RVector> objective_;
    std::vector<LinearEquality> equalities_;
    std::vector<SocConstraint> cones_;
    RVector lower_;
    RVector upper_;
    std::vector<int> binaries_;
};

struct ConstraintViolation {
    double equality = 0.0;
    double cone = 0.0;
    double bounds = 0.0;
    double integrality = 0.0;
    /// Largest equality, cone or bound violation over max(1, summed magnitude of its terms).
    double relative = 0.0;

    [[nodiscard]] double worst() const;
    [[nodiscard]] double worst_relative() const { return std::max(relative, integrality); }
};

/// Evaluates every constraint of the program at x directly from its definition.
ConstraintViolation evaluate_constraints(const ConicProgram& program, const RVector& x);

enum class SolveStatus { Feasible, Infeasible, Unbounded, TimeLimit, NumericalFailure };

const char* to_string(SolveStatus status);

struct SolveVerdict {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::optional<RVector> solution;
    std::optional<double> objective_value;
    int iterations = 0;

    [[nodiscard]] bool feasible() const { return status == SolveStatus::Feasible; }
};

struct SolverTolerances {
    double feas_tol = 1e-7;
    double gap_tol = 1e-7;
    int max_iters = 150;
};

/// Interior-point solve of a program without binaries.
/// Throws InvalidInput for malformed programs or when binaries are present.
SolveVerdict solve_socp(const ConicProgram& program, const SolverTolerances& tol = {});

/// Writes the program in the Conic Benchmark Format (CBF, version 3).
void write_cbf(const ConicProgram& program, std::ostream& out);

/// Maps the M x K complex precoder onto 2MK consecutive real variables starting at `offset`.
/// Entry (m, k) occupies [offset + 2(kM + m), offset + 2(kM + m) + 1] as (Re, Im).
class ComplexEmbedding {
  public:
    ComplexEmbedding(int num_aps, int num_ues, int offset = 0);

    [[nodiscard]] int num_aps() const { return num_aps_; }
    [[nodiscard]] int num_ues() const { return num_ues_; }
    [[nodiscard]] int num_real_vars() const { return 2 * num_aps_ * num_ues_; }
    [[nodiscard]] int re(int m, int k) const { return offset_ + 2 * (k * num_aps_ + m); }
    [[nodiscard]] int im(int m, int k) const { return re(m, k) + 1; }

    /// Real rows (Re, Im) of the linear functional sum_m coeff(m) * w_mk for a fixed UE column k.
    [[nodiscard]] std::pair<RVector, RVector> column_functional(const Eigen::VectorXcd& coeff, int k,
                                                                int total_vars) const;

    /// Stacked (Re, Im) parts of a complex vector; its Euclidean norm equals the complex norm.
    static RVector stack(const Eigen::VectorXcd& z);
    static std::pair<double, double> stack(cplx z) { return {z.real(), z.imag()}; }

    [[nodiscard]] RVector embed(const PrecoderMatrix& precoder, int total_vars) const;
    [[nodiscard]] PrecoderMatrix extract(const RVector& x) const;

  private:
    int num_aps_;
    int num_ues_;
    int offset_;
};

}  // namespace dmimo
