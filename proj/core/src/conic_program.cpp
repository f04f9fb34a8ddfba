// SPDX-License-Identifier: Apache-2.0
#include "dmimo/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace dmimo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const RMatrix& m) {
    return m.allFinite();
}

}  // namespace

ConicProgram::ConicProgram(int num_vars)
    : num_vars_(num_vars), lower_(RVector::Constant(num_vars, -kInf)), upper_(RVector::Constant(num_vars, kInf)) {
    if (num_vars < 0) {
        throw InvalidInput("negative variable count");
    }
}

void ConicProgram::set_objective(RVector c) {
    if (c.size() != num_vars_) {
        throw InvalidInput("objective length does not match variable count");
    }
    objective_ = std::move(c);
}

void ConicProgram::add_equality(RVector row, double rhs) {
    if (row.size() != num_vars_) {
        throw InvalidInput("equality row length does not match variable count");
    }
    equalities_.push_back({std::move(row), rhs});
}

void ConicProgram::add_soc(SocConstraint cone) {
    if (cone.affine_map.cols() != num_vars_ || cone.scalar_row.size() != num_vars_ ||
        cone.affine_offset.size() != cone.affine_map.rows()) {
        throw InvalidInput("cone constraint shape does not match variable count");
    }
    cones_.push_back(std::move(cone));
}

void ConicProgram::add_linear_geq(RVector row, double offset) {
    SocConstraint c;
    c.affine_map = RMatrix::Zero(0, num_vars_);
    c.affine_offset = RVector::Zero(0);
    c.scalar_row = std::move(row);
    c.scalar_offset = offset;
    add_soc(std::move(c));
}

void ConicProgram::set_bounds(int var, double lower, double upper) {
    if (var < 0 || var >= num_vars_) {
        throw InvalidInput("bound on variable " + std::to_string(var) + " out of range");
    }
    if (lower > upper) {
        throw InvalidInput("empty bound interval on variable " + std::to_string(var));
    }
    lower_(var) = lower;
    upper_(var) = upper;
}

void ConicProgram::mark_binary(int var) {
    if (var < 0 || var >= num_vars_) {
        throw InvalidInput("binary index " + std::to_string(var) + " out of range");
    }
    if (std::find(binaries_.begin(), binaries_.end(), var) == binaries_.end()) {
        binaries_.push_back(var);
    }
}

ConicProgram ConicProgram::relaxation() const {
    ConicProgram out = *this;
    for (int j : binaries_) {
        out.lower_(j) = std::max(lower_(j), 0.0);
        out.upper_(j) = std::min(upper_(j), 1.0);
    }
    out.binaries_.clear();
    return out;
}

void ConicProgram::validate() const {
    if (objective_ && (objective_->size() != num_vars_ || !objective_->allFinite())) {
        throw InvalidInput("malformed objective");
    }
    for (const auto& eq : equalities_) {
        if (eq.row.size() != num_vars_ || !finite(eq.row) || !std::isfinite(eq.rhs)) {
            throw InvalidInput("malformed equality row");
        }
    }
    for (const auto& c : cones_) {
        if (c.affine_map.cols() != num_vars_ || c.scalar_row.size() != num_vars_ ||
            c.affine_offset.size() != c.affine_map.rows()) {
            throw InvalidInput("malformed cone constraint");
        }
        if (!finite(c.affine_map) || !finite(c.affine_offset) || !finite(c.scalar_row) ||
            !std::isfinite(c.scalar_offset)) {
            throw InvalidInput("cone constraint has non-finite data");
        }
    }
    for (int j = 0; j < num_vars_; ++j) {
        if (std::isnan(lower_(j)) || std::isnan(upper_(j)) || lower_(j) > upper_(j)) {
            throw InvalidInput("malformed bounds on variable " + std::to_string(j));
        }
    }
    for (int j : binaries_) {
        if (j < 0 || j >= num_vars_) {
            throw InvalidInput("binary index out of range");
        }
    }
}

double ConstraintViolation::worst() const {
    return std::max({equality, cone, bounds, integrality});
}

ConstraintViolation evaluate_constraints(const ConicProgram& program, const RVector& x) {
    if (x.size() != program.num_vars()) {
        throw InvalidInput("point has wrong dimension");
    }
    ConstraintViolation v;
    auto relative = [&](double violation, double magnitude) {
        v.relative = std::max(v.relative, violation / std::max(1.0, magnitude));
    };
    for (const auto& eq : program.equalities()) {
        const double r = std::abs(eq.row.dot(x) - eq.rhs);
        v.equality = std::max(v.equality, r);
        relative(r, std::max(eq.row.cwiseProduct(x).cwiseAbs().maxCoeff(), std::abs(eq.rhs)));
    }
    for (const auto& c : program.cones()) {
        const double lhs = (c.affine_map * x + c.affine_offset).norm();
        const double rhs = c.scalar_row.dot(x) + c.scalar_offset;
        v.cone = std::max(v.cone, lhs - rhs);
        // Term magnitudes before cancellation.
        const double spread = (c.affine_map.cwiseAbs() * x.cwiseAbs()).norm() + c.affine_offset.norm();
        const double scalar = c.scalar_row.cwiseAbs().dot(x.cwiseAbs()) + std::abs(c.scalar_offset);
        relative(lhs - rhs, std::max(spread, scalar));
    }
    for (int j = 0; j < program.num_vars(); ++j) {
        const double lo = program.lower_bounds()(j);
        const double hi = program.upper_bounds()(j);
        v.bounds = std::max({v.bounds, lo - x(j), x(j) - hi});
        relative(std::max(lo - x(j), x(j) - hi), std::abs(x(j)));
    }
    for (int j : program.binaries()) {
        v.integrality = std::max(v.integrality, std::min(std::abs(x(j)), std::abs(x(j) - 1.0)));
    }
    return v;
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Feasible: return "feasible";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::TimeLimit: return "time_limit";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

// CBF stores constraints as A x + b in K. Equalities become L= rows, each cone a Q block
// led by its scalar side, and finite bounds L+ rows.
void write_cbf(const ConicProgram& program, std::ostream& out) {
    program.validate();
    const int n = program.num_vars();

    struct Entry {
        int row;
        int col;
        double val;
    };
    std::vector<Entry> a;
    std::vector<std::pair<int, double>> b;
    std::vector<std::pair<std::string, int>> blocks;
    int row = 0;

    auto emit_row = [&](const RVector& coeffs, double offset) {
        for (int j = 0; j < n; ++j) {
            if (coeffs(j) != 0.0) {
                a.push_back({row, j, coeffs(j)});
            }
        }
        if (offset != 0.0) {
            b.emplace_back(row, offset);
        }
        ++row;
    };

    for (const auto& eq : program.equalities()) {
        emit_row(eq.row, -eq.rhs);
        blocks.emplace_back("L=", 1);
    }
    for (const auto& c : program.cones()) {
        emit_row(c.scalar_row, c.scalar_offset);
        for (Eigen::Index i = 0; i < c.affine_map.rows(); ++i) {
            emit_row(c.affine_map.row(i).transpose(), c.affine_offset(i));
        }
        blocks.emplace_back(c.affine_map.rows() == 0 ? "L+" : "Q", c.dimension());
    }
    for (int j = 0; j < n; ++j) {
        RVector e = RVector::Zero(n);
        if (std::isfinite(program.lower_bounds()(j))) {
            e(j) = 1.0;
            emit_row(e, -program.lower_bounds()(j));
            blocks.emplace_back("L+", 1);
        }
        if (std::isfinite(program.upper_bounds()(j))) {
            e(j) = -1.0;
            emit_row(e, program.upper_bounds()(j));
            blocks.emplace_back("L+", 1);
        }
    }

    out.precision(17);
    out << "VER\n3\n\nOBJSENSE\nMIN\n\nVAR\n" << n << " 1\nF " << n << "\n\n";
    if (!program.binaries().empty()) {
        out << "INT\n" << program.binaries().size() << "\n";
        for (int j : program.binaries()) {
            out << j << "\n";
        }
        out << "\n";
    }
    out << "CON\n" << row << " " << blocks.size() << "\n";
    for (const auto& [kind, dim] : blocks) {
        out << kind << " " << dim << "\n";
    }
    out << "\n";
    if (program.objective()) {
        const RVector& c = *program.objective();
        std::vector<int> nz;
        for (int j = 0; j < n; ++j) {
            if (c(j) != 0.0) {
                nz.push_back(j);
            }
        }
        out << "OBJACOORD\n" << nz.size() << "\n";
        for (int j : nz) {
            out << j << " " << c(j) << "\n";
        }
        out << "\n";
    }
    out << "ACOORD\n" << a.size() << "\n";
    for (const auto& e : a) {
        out << e.row << " " << e.col << " " << e.val << "\n";
    }
    out << "\nBCOORD\n" << b.size() << "\n";
    for (const auto& [i, v] : b) {
        out << i << " " << v << "\n";
    }
}

ComplexEmbedding::ComplexEmbedding(int num_aps, int num_ues, int offset)
    : num_aps_(num_aps), num_ues_(num_ues), offset_(offset) {
    if (num_aps < 1 || num_ues < 1 || offset < 0) {
        throw InvalidInput("invalid complex embedding layout");
    }
}

// Re{c w} = Re c Re w - Im c Im w,  Im{c w} = Im c Re w + Re c Im w.
std::pair<RVector, RVector> ComplexEmbedding::column_functional(const Eigen::VectorXcd& coeff, int k,
                                                                int total_vars) const {
    RVector re_row = RVector::Zero(total_vars);
    RVector im_row = RVector::Zero(total_vars);
    for (int m = 0; m < num_aps_; ++m) {
        const cplx c = coeff(m);
        re_row(re(m, k)) = c.real();
        re_row(im(m, k)) = -c.imag();
        im_row(re(m, k)) = c.imag();
        im_row(im(m, k)) = c.real();
    }
    return {re_row, im_row};
}

RVector ComplexEmbedding::stack(const Eigen::VectorXcd& z) {
    RVector out(2 * z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        out(2 * i) = z(i).real();
        out(2 * i + 1) = z(i).imag();
    }
    return out;
}

RVector ComplexEmbedding::embed(const PrecoderMatrix& precoder, int total_vars) const {
    RVector x = RVector::Zero(total_vars);
    for (int k = 0; k < num_ues_; ++k) {
        for (int m = 0; m < num_aps_; ++m) {
            x(re(m, k)) = precoder(m, k).real();
            x(im(m, k)) = precoder(m, k).imag();
        }
    }
    return x;
}

PrecoderMatrix ComplexEmbedding::extract(const RVector& x) const {
    CMatrix w(num_aps_, num_ues_);
    for (int k = 0; k < num_ues_; ++k) {
        for (int m = 0; m < num_aps_; ++m) {
            w(m, k) = cplx(x(re(m, k)), x(im(m, k)));
        }
    }
    return PrecoderMatrix(std::move(w));
}

}  // namespace dmimo
