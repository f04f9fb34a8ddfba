// SPDX-License-Identifier: Apache-2.0
//
// Primal-dual interior-point method for
//
//     minimize c^T x   s.t.   G x + s = h,  s in K,
//
// where K is a product of second-order cones (dimension-1 cones are the nonnegative
// half-line). The iteration runs on the homogeneous self-dual embedding so that
// infeasibility and unboundedness come out as certificates rather than stalls. Scaling is
// Nesterov-Todd, directions are Mehrotra predictor-corrector, and the Newton system is
// reduced to normal equations G^T W^-2 G. Equality rows are removed before the iteration:
// singleton rows fix variables, the rest are eliminated through a null-space basis.

#include "dmimo/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dmimo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cones {
    std::vector<int> offset;
    std::vector<int> dim;
    int rows = 0;

    void add(int d) {
        offset.push_back(rows);
        dim.push_back(d);
        rows += d;
    }
    [[nodiscard]] int count() const { return static_cast<int>(dim.size()); }
};

// Dense row-block form of the program after presolve. The original point is recovered as
// x = base + basis * (col_scale .* y).
struct Reduced {
    RMatrix G;
    RVector h;
    RVector c;
    Cones cones;
    RVector base;
    RMatrix basis;
    RVector col_scale;
    bool infeasible = false;
};

struct Block {
    RMatrix G;
    RVector h;
};

// ---------------------------------------------------------------------------------------
// Second-order cone algebra. A vector u is split as (u0, u1).

double soc_residual(const RVector& u) {
    if (u.size() == 1) {
        return u(0) * u(0);
    }
    const double n1 = u.tail(u.size() - 1).norm();
    return (u(0) - n1) * (u(0) + n1);
}

bool soc_interior(const RVector& u) {
    if (u(0) <= 0.0) {
        return false;
    }
    return u.size() == 1 || u(0) > u.tail(u.size() - 1).norm();
}

RVector jordan_product(const RVector& u, const RVector& v) {
    RVector out(u.size());
    out(0) = u.dot(v);
    if (u.size() > 1) {
        const Eigen::Index q = u.size() - 1;
        out.tail(q) = u(0) * v.tail(q) + v(0) * u.tail(q);
    }
    return out;
}

// Solves u o x = d for x.
RVector jordan_divide(const RVector& u, const RVector& d) {
    RVector x(u.size());
    if (u.size() == 1) {
        x(0) = d(0) / u(0);
        return x;
    }
    const Eigen::Index q = u.size() - 1;
    const double det = soc_residual(u);
    x(0) = (u(0) * d(0) - u.tail(q).dot(d.tail(q))) / det;
    x.tail(q) = (d.tail(q) - x(0) * u.tail(q)) / u(0);
    return x;
}

// Largest alpha with u + alpha d in the cone (u interior); +inf when unbounded.
double soc_step(const RVector& u, const RVector& d) {
    if (u.size() == 1) {
        return d(0) < 0.0 ? -u(0) / d(0) : kInf;
    }
    const Eigen::Index q = u.size() - 1;
    const double dn = d.tail(q).norm();
    const double a = (d(0) - dn) * (d(0) + dn);
    const double b = u(0) * d(0) - u.tail(q).dot(d.tail(q));
    const double c = std::max(soc_residual(u), 0.0);
    double best = kInf;
    auto consider = [&](double alpha) {
        if (alpha > 0.0 && alpha < best && u(0) + alpha * d(0) >= -1e-300) {
            best = alpha;
        }
    };
    if (a == 0.0) {
        if (b < 0.0) {
            consider(-c / (2.0 * b));
        }
    } else {
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double qq = -(b + std::copysign(sq, b));
            if (qq != 0.0) {
                consider(qq / a);
                consider(c / qq);
            } else {
                consider(0.0);
            }
        }
    }
    // The scalar side reaching zero before the quadratic does cannot happen for an interior
    // start, but guard against round-off.
    if (d(0) < 0.0) {
        best = std::min(best, -u(0) / d(0));
    }
    return best;
}

// Nesterov-Todd scaling W = eta * [w0, w1^T; w1, I + w1 w1^T / (1 + w0)], with W z = W^-1 s.
struct NtScaling {
    double eta = 1.0;
    RVector w;

    void compute(const RVector& s, const RVector& z) {
        if (s.size() == 1) {
            eta = std::sqrt(s(0) / z(0));
            w = RVector::Ones(1);
            return;
        }
        const double sr = std::sqrt(soc_residual(s));
        const double zr = std::sqrt(soc_residual(z));
        const RVector sb = s / sr;
        const RVector zb = z / zr;
        const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 0.0));
        const Eigen::Index q = s.size() - 1;
        w.resize(s.size());
        w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
        w.tail(q) = (sb.tail(q) - zb.tail(q)) / (2.0 * gamma);
        eta = std::sqrt(sr / zr);
    }

    [[nodiscard]] RVector apply(const RVector& v) const {
        RVector out(v.size());
        if (v.size() == 1) {
            out(0) = eta * v(0);
            return out;
        }
        const Eigen::Index q = v.size() - 1;
        const double w1v1 = w.tail(q).dot(v.tail(q));
        out(0) = eta * (w(0) * v(0) + w1v1);
        out.tail(q) = eta * (v(0) * w.tail(q) + v.tail(q) + (w1v1 / (1.0 + w(0))) * w.tail(q));
        return out;
    }

    [[nodiscard]] RVector apply_inverse(const RVector& v) const {
        RVector out(v.size());
        if (v.size() == 1) {
            out(0) = v(0) / eta;
            return out;
        }
        const Eigen::Index q = v.size() - 1;
        const double w1v1 = w.tail(q).dot(v.tail(q));
        out(0) = (w(0) * v(0) - w1v1) / eta;
        out.tail(q) = (-v(0) * w.tail(q) + v.tail(q) + (w1v1 / (1.0 + w(0))) * w.tail(q)) / eta;
        return out;
    }

    // W^-1 applied to every column of a row block.
    [[nodiscard]] RMatrix apply_inverse_rows(const RMatrix& g) const {
        if (g.rows() == 1) {
            return g / eta;
        }
        const Eigen::Index q = g.rows() - 1;
        const Eigen::RowVectorXd u = w.tail(q).transpose() * g.bottomRows(q);
        RMatrix out(g.rows(), g.cols());
        out.row(0) = (w(0) * g.row(0) - u) / eta;
        out.bottomRows(q) = (g.bottomRows(q) - w.tail(q) * g.row(0) + w.tail(q) * (u / (1.0 + w(0)))) / eta;
        return out;
    }
};

// ---------------------------------------------------------------------------------------
// Presolve

bool row_is_zero(const RVector& r, double tol) {
    return r.size() == 0 || r.cwiseAbs().maxCoeff() <= tol;
}

Reduced presolve(const ConicProgram& program, double tol) {
    const int n = program.num_vars();
    Reduced red;

    std::vector<Block> blocks;
    for (const auto& cone : program.cones()) {
        Block b;
        const Eigen::Index q = cone.affine_map.rows();
        b.G.resize(q + 1, n);
        b.h.resize(q + 1);
        b.G.row(0) = -cone.scalar_row.transpose();
        b.h(0) = cone.scalar_offset;
        b.G.bottomRows(q) = -cone.affine_map;
        b.h.tail(q) = cone.affine_offset;
        blocks.push_back(std::move(b));
    }
    std::vector<RVector> eq_rows;
    std::vector<double> eq_rhs;
    for (const auto& eq : program.equalities()) {
        eq_rows.push_back(eq.row);
        eq_rhs.push_back(eq.rhs);
    }

    for (int j = 0; j < n; ++j) {
        const double lo = program.lower_bounds()(j);
        const double hi = program.upper_bounds()(j);
        if (lo == hi) {
            RVector e = RVector::Zero(n);
            e(j) = 1.0;
            eq_rows.push_back(std::move(e));
            eq_rhs.push_back(lo);
            continue;
        }
        if (std::isfinite(lo)) {
            Block b{RMatrix::Zero(1, n), RVector::Constant(1, -lo)};
            b.G(0, j) = -1.0;
            blocks.push_back(std::move(b));
        }
        if (std::isfinite(hi)) {
            Block b{RMatrix::Zero(1, n), RVector::Constant(1, hi)};
            b.G(0, j) = 1.0;
            blocks.push_back(std::move(b));
        }
    }

    // Fixed-variable elimination and degenerate-cone detection until nothing changes.
    std::vector<bool> fixed(static_cast<std::size_t>(n), false);
    RVector fixed_value = RVector::Zero(n);
    std::vector<bool> block_alive(blocks.size(), true);

    auto fix = [&](int j, double v) {
        for (auto& b : blocks) {
            b.h.noalias() -= b.G.col(j) * v;
            b.G.col(j).setZero();
        }
        for (std::size_t r = 0; r < eq_rows.size(); ++r) {
            eq_rhs[r] -= eq_rows[r](j) * v;
            eq_rows[r](j) = 0.0;
        }
        fixed[static_cast<std::size_t>(j)] = true;
        fixed_value(j) = v;
    };

    bool changed = true;
    while (changed && !red.infeasible) {
        changed = false;
        for (std::size_t r = 0; r < eq_rows.size(); ++r) {
            int nnz = 0;
            int idx = -1;
            for (int j = 0; j < n; ++j) {
                if (eq_rows[r](j) != 0.0) {
                    ++nnz;
                    idx = j;
                }
            }
            if (nnz == 0) {
                if (std::abs(eq_rhs[r]) > tol) {
                    red.infeasible = true;
                }
                eq_rows.erase(eq_rows.begin() + static_cast<std::ptrdiff_t>(r));
                eq_rhs.erase(eq_rhs.begin() + static_cast<std::ptrdiff_t>(r));
                changed = true;
                break;
            }
            if (nnz == 1) {
                const double v = eq_rhs[r] / eq_rows[r](idx);
                eq_rows.erase(eq_rows.begin() + static_cast<std::ptrdiff_t>(r));
                eq_rhs.erase(eq_rhs.begin() + static_cast<std::ptrdiff_t>(r));
                fix(idx, v);
                changed = true;
                break;
            }
        }
        if (changed) {
            continue;
        }
        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            if (!block_alive[bi]) {
                continue;
            }
            const Block& b = blocks[bi];
            const double scale = std::max(1.0, b.h.cwiseAbs().maxCoeff());
            if (row_is_zero(b.G.row(0).transpose(), 0.0)) {
                const Eigen::Index q = b.h.size() - 1;
                const bool all_const = q == 0 || b.G.bottomRows(q).cwiseAbs().maxCoeff() == 0.0;
                if (all_const) {
                    const double lhs = q == 0 ? 0.0 : b.h.tail(q).norm();
                    if (lhs - b.h(0) > tol * scale) {
                        red.infeasible = true;
                    }
                    block_alive[bi] = false;
                    changed = true;
                    break;
                }
                if (std::abs(b.h(0)) <= tol) {
                    // ||G1 x - h1|| <= 0 pins the whole norm argument.
                    for (Eigen::Index i = 0; i < q; ++i) {
                        eq_rows.emplace_back(b.G.row(1 + i).transpose());
                        eq_rhs.push_back(b.h(1 + i));
                    }
                    block_alive[bi] = false;
                    changed = true;
                    break;
                }
            }
        }
    }

    // Null-space elimination of the remaining equalities.
    std::vector<int> free_vars;
    for (int j = 0; j < n; ++j) {
        if (!fixed[static_cast<std::size_t>(j)]) {
            free_vars.push_back(j);
        }
    }
    const int nf = static_cast<int>(free_vars.size());

    RVector base = fixed_value;
    RMatrix basis;
    if (!eq_rows.empty() && nf > 0) {
        RMatrix A(static_cast<Eigen::Index>(eq_rows.size()), nf);
        RVector b(static_cast<Eigen::Index>(eq_rows.size()));
        for (std::size_t r = 0; r < eq_rows.size(); ++r) {
            for (int c = 0; c < nf; ++c) {
                A(static_cast<Eigen::Index>(r), c) = eq_rows[r](free_vars[static_cast<std::size_t>(c)]);
            }
            b(static_cast<Eigen::Index>(r)) = eq_rhs[r];
        }
        Eigen::JacobiSVD<RMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
        svd.setThreshold(1e-12 * std::max(1.0, static_cast<double>(std::max(A.rows(), A.cols()))));
        const int rank = smax > 0.0 ? static_cast<int>(svd.rank()) : 0;
        const RVector xp = svd.solve(b);
        if ((A * xp - b).norm() > tol * std::max(1.0, b.norm())) {
            red.infeasible = true;
        }
        RMatrix local_basis = svd.matrixV().rightCols(nf - rank);
        basis = RMatrix::Zero(n, nf - rank);
        for (int c = 0; c < nf; ++c) {
            base(free_vars[static_cast<std::size_t>(c)]) = xp(c);
            basis.row(free_vars[static_cast<std::size_t>(c)]) = local_basis.row(c);
        }
    } else {
        if (!eq_rows.empty()) {
            for (std::size_t r = 0; r < eq_rows.size(); ++r) {
                if (std::abs(eq_rhs[r]) > tol) {
                    red.infeasible = true;
                }
            }
        }
        basis = RMatrix::Zero(n, nf);
        for (int c = 0; c < nf; ++c) {
            basis(free_vars[static_cast<std::size_t>(c)], c) = 1.0;
        }
    }

    // Assemble, dropping blocks the presolve resolved. Blocks were already shifted for the
    // fixed variables; the particular solution of the equalities shifts them again.
    const RVector shift = base - fixed_value;
    int rows = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        if (block_alive[bi]) {
            rows += static_cast<int>(blocks[bi].h.size());
        }
    }
    const Eigen::Index nr = basis.cols();
    red.G.resize(rows, nr);
    red.h.resize(rows);
    int r0 = 0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        if (!block_alive[bi]) {
            continue;
        }
        const Block& b = blocks[bi];
        const auto q = static_cast<int>(b.h.size());
        RMatrix gb = b.G * basis;
        RVector hb = b.h - b.G * shift;
        // Cones are invariant under positive scaling of a whole block.
        double s = 0.0;
        for (Eigen::Index i = 0; i < gb.rows(); ++i) {
            s = std::max(s, gb.row(i).norm());
        }
        if (s == 0.0) {
            s = std::max(1.0, hb.norm());
        }
        gb /= s;
        hb /= s;
        red.G.middleRows(r0, q) = gb;
        red.h.segment(r0, q) = hb;
        red.cones.add(q);
        r0 += q;
    }

    red.c = program.objective() ? RVector(basis.transpose() * *program.objective()) : RVector::Zero(nr);
    red.base = base;
    red.basis = std::move(basis);

    // Column equilibration.
    red.col_scale = RVector::Ones(nr);
    for (Eigen::Index j = 0; j < nr; ++j) {
        const double cn = red.G.col(j).norm();
        if (cn > 0.0) {
            red.col_scale(j) = 1.0 / cn;
            red.G.col(j) *= red.col_scale(j);
            red.c(j) *= red.col_scale(j);
        }
    }
    return red;
}

// ---------------------------------------------------------------------------------------
// Homogeneous self-dual interior-point iteration

enum class IpmOutcome { Solved, PrimalInfeasible, DualInfeasible, Failed };

struct IpmState {
    RVector x;
    RVector s;
    RVector z;
    double tau = 1.0;
    double kappa = 1.0;
};

class HsdeSolver {
  public:
    HsdeSolver(const Reduced& red, const SolverTolerances& tol) : red_(red), tol_(tol) {
        n_ = static_cast<int>(red.G.cols());
        m_ = red.cones.rows;
        scalings_.resize(static_cast<std::size_t>(red.cones.count()));
        degree_ = red.cones.count();
        feasibility_ = red.c.size() == 0 || red.c.cwiseAbs().maxCoeff() == 0.0;
    }

    template <typename Accept>
    IpmOutcome run(IpmState& st, int& iterations, Accept&& accept) {
        initialize(st);
        const double hnorm = std::max(1.0, red_.h.norm());
        const double cnorm = std::max(1.0, red_.c.norm());
        int stalls = 0;
        // Best certificates seen, for the reduced-accuracy verdict when the iteration stalls.
        double best_infres = kInf;
        double best_unbres = kInf;

        auto inaccurate_verdict = [&]() {
            if (best_infres < kInaccurateTol) {
                return IpmOutcome::PrimalInfeasible;
            }
            if (best_unbres < kInaccurateTol) {
                return IpmOutcome::DualInfeasible;
            }
            return IpmOutcome::Failed;
        };

        for (iterations = 0; iterations < tol_.max_iters; ++iterations) {
            const RVector rx = red_.G.transpose() * st.z + red_.c * st.tau;
            const RVector rz = st.s + red_.G * st.x - red_.h * st.tau;
            const double rt = st.kappa + red_.c.dot(st.x) + red_.h.dot(st.z);

            const double pres = rz.norm() / st.tau / hnorm;
            const double dres = rx.norm() / st.tau / cnorm;
            const double gap = st.s.dot(st.z) / (st.tau * st.tau);
            const double pcost = red_.c.dot(st.x) / st.tau;
            const double dcost = -red_.h.dot(st.z) / st.tau;

            const double inner = 0.1 * tol_.feas_tol;
            bool converged = false;
            if (feasibility_) {
                converged = pres < inner;
            } else {
                const double relgap = std::abs(pcost - dcost) / std::max(1.0, std::abs(pcost));
                converged = pres < inner && dres < inner && (gap < tol_.gap_tol || relgap < tol_.gap_tol);
            }
            if (converged && accept(st)) {
                return IpmOutcome::Solved;
            }
            const double hz = red_.h.dot(st.z);
            if (hz < 0.0) {
                const double infres = (red_.G.transpose() * st.z).norm() / (-hz);
                if (infres < inner) {
                    return IpmOutcome::PrimalInfeasible;
                }
                best_infres = std::min(best_infres, infres);
            }
            const double cx = red_.c.dot(st.x);
            if (cx < 0.0) {
                const double unbres = (red_.G * st.x + st.s).norm() / (-cx);
                if (unbres < inner) {
                    return IpmOutcome::DualInfeasible;
                }
                best_unbres = std::min(best_unbres, unbres);
            }
            // tau collapsing against kappa means no finite solution exists; the certificate
            // will not sharpen further.
            if (st.tau < 1e-8 * st.kappa) {
                return inaccurate_verdict();
            }

            if (!newton_step(st, rx, rz, rt)) {
                if (++stalls > 3) {
                    return inaccurate_verdict();
                }
            } else {
                stalls = 0;
            }
        }
        return inaccurate_verdict();
    }

  private:
    static constexpr double kInaccurateTol = 1e-5;
    const Reduced& red_;
    SolverTolerances tol_;
    int n_ = 0;
    int m_ = 0;
    int degree_ = 0;
    bool feasibility_ = true;
    std::vector<NtScaling> scalings_;
    RMatrix scaled_g_;
    Eigen::LLT<RMatrix> llt_;
    RMatrix normal_;

    template <typename F>
    void for_each_cone(F&& f) const {
        for (int i = 0; i < red_.cones.count(); ++i) {
            f(i, red_.cones.offset[static_cast<std::size_t>(i)], red_.cones.dim[static_cast<std::size_t>(i)]);
        }
    }

    RVector identity() const {
        RVector e = RVector::Zero(m_);
        for_each_cone([&](int, int off, int) { e(off) = 1.0; });
        return e;
    }

    // Smallest t with u + t e in the cone.
    double shift_needed(const RVector& u) const {
        double worst = -kInf;
        for_each_cone([&](int, int off, int d) {
            const double tail = d > 1 ? u.segment(off + 1, d - 1).norm() : 0.0;
            worst = std::max(worst, tail - u(off));
        });
        return worst;
    }

    void initialize(IpmState& st) {
        const RMatrix gtg = red_.G.transpose() * red_.G + 1e-10 * RMatrix::Identity(n_, n_);
        Eigen::LDLT<RMatrix> ldlt(gtg);
        st.x = n_ > 0 ? RVector(ldlt.solve(red_.G.transpose() * red_.h)) : RVector::Zero(0);
        st.s = red_.h - red_.G * st.x;
        st.z = n_ > 0 ? RVector(-red_.G * ldlt.solve(red_.c)) : RVector::Zero(m_);
        const RVector e = identity();
        const double as = shift_needed(st.s);
        if (as >= -1e-8) {
            st.s += (1.0 + std::max(as, 0.0)) * e;
        }
        const double az = shift_needed(st.z);
        if (az >= -1e-8) {
            st.z += (1.0 + std::max(az, 0.0)) * e;
        }
        st.tau = 1.0;
        st.kappa = 1.0;
    }

    bool factor() {
        scaled_g_.resize(m_, n_);
        for_each_cone([&](int i, int off, int d) {
            scaled_g_.middleRows(off, d) = scalings_[static_cast<std::size_t>(i)].apply_inverse_rows(red_.G.middleRows(off, d));
        });
        normal_ = RMatrix::Zero(n_, n_);
        normal_.selfadjointView<Eigen::Lower>().rankUpdate(scaled_g_.transpose());
        normal_.triangularView<Eigen::Upper>() = normal_.transpose();
        const double diag = std::max(1.0, normal_.diagonal().cwiseAbs().maxCoeff());
        double reg = 1e-13 * diag;
        for (int attempt = 0; attempt < 8; ++attempt) {
            llt_.compute(normal_ + reg * RMatrix::Identity(n_, n_));
            if (llt_.info() == Eigen::Success) {
                return true;
            }
            reg *= 100.0;
        }
        return false;
    }

    RVector w_apply(const RVector& v) const {
        RVector out(v.size());
        for_each_cone([&](int i, int off, int d) {
            out.segment(off, d) = scalings_[static_cast<std::size_t>(i)].apply(v.segment(off, d));
        });
        return out;
    }

    RVector w_apply_inverse(const RVector& v) const {
        RVector out(v.size());
        for_each_cone([&](int i, int off, int d) {
            out.segment(off, d) = scalings_[static_cast<std::size_t>(i)].apply_inverse(v.segment(off, d));
        });
        return out;
    }

    RVector cone_product(const RVector& u, const RVector& v) const {
        RVector out(u.size());
        for_each_cone([&](int, int off, int d) { out.segment(off, d) = jordan_product(u.segment(off, d), v.segment(off, d)); });
        return out;
    }

    RVector cone_divide(const RVector& u, const RVector& v) const {
        RVector out(u.size());
        for_each_cone([&](int, int off, int d) { out.segment(off, d) = jordan_divide(u.segment(off, d), v.segment(off, d)); });
        return out;
    }

    double max_step(const RVector& u, const RVector& du) const {
        double a = kInf;
        for_each_cone([&](int, int off, int d) { a = std::min(a, soc_step(u.segment(off, d), du.segment(off, d))); });
        return a;
    }

    void solve_normal(const RVector& bx, const RVector& bz, RVector& x, RVector& z) const {
        const RVector winv_bz = w_apply_inverse(bz);
        const RVector rhs = bx + scaled_g_.transpose() * winv_bz;
        x = llt_.solve(rhs);
        for (int refine = 0; refine < 3; ++refine) {
            const RVector r = rhs - normal_ * x;
            if (r.norm() <= 1e-14 * std::max(1.0, rhs.norm())) {
                break;
            }
            x += llt_.solve(r);
        }
        z = w_apply_inverse(scaled_g_ * x - winv_bz);
    }

    // Solves G^T z = bx, G x - W^2 z = bz, refining against the unreduced system.
    void solve_kkt(const RVector& bx, const RVector& bz, RVector& x, RVector& z) const {
        solve_normal(bx, bz, x, z);
        const double scale = std::max(1.0, std::max(bx.norm(), bz.norm()));
        for (int refine = 0; refine < 3; ++refine) {
            const RVector e1 = bx - red_.G.transpose() * z;
            const RVector e2 = bz - red_.G * x + w_apply(w_apply(z));
            if (std::max(e1.norm(), e2.norm()) <= 1e-14 * scale) {
                break;
            }
            RVector dx;
            RVector dz;
            solve_normal(e1, e2, dx, dz);
            x += dx;
            z += dz;
        }
    }

    bool newton_step(IpmState& st, const RVector& rx, const RVector& rz, double rt) {
        for_each_cone([&](int i, int off, int d) {
            scalings_[static_cast<std::size_t>(i)].compute(st.s.segment(off, d), st.z.segment(off, d));
        });
        if (!factor()) {
            return false;
        }
        const RVector lambda = w_apply(st.z);
        const double mu = (st.s.dot(st.z) + st.tau * st.kappa) / (degree_ + 1);

        RVector x1;
        RVector z1;
        solve_kkt(-red_.c, red_.h, x1, z1);
        const double denom = red_.c.dot(x1) + red_.h.dot(z1) - st.kappa / st.tau;

        struct Dir {
            RVector dx, ds, dz;
            double dtau = 0.0, dkappa = 0.0;
        };
        auto direction = [&](const RVector& ds_target, double dk_target, double scale) {
            Dir dir;
            const RVector lam_div = cone_divide(lambda, ds_target);
            RVector x2;
            RVector z2;
            solve_kkt(-scale * rx, -scale * rz - w_apply(lam_div), x2, z2);
            const double bt = -scale * rt;
            dir.dtau = (bt - dk_target / st.tau - red_.c.dot(x2) - red_.h.dot(z2)) / denom;
            dir.dx = x2 + dir.dtau * x1;
            dir.dz = z2 + dir.dtau * z1;
            dir.ds = w_apply(lam_div - w_apply(dir.dz));
            dir.dkappa = (dk_target - st.kappa * dir.dtau) / st.tau;
            return dir;
        };
        auto step_length = [&](const Dir& dir) {
            double a = std::min(max_step(st.s, dir.ds), max_step(st.z, dir.dz));
            if (dir.dtau < 0.0) {
                a = std::min(a, -st.tau / dir.dtau);
            }
            if (dir.dkappa < 0.0) {
                a = std::min(a, -st.kappa / dir.dkappa);
            }
            return a;
        };

        const RVector lam_sq = cone_product(lambda, lambda);
        const Dir aff = direction(-lam_sq, -st.tau * st.kappa, 1.0);
        const double alpha_aff = std::min(1.0, step_length(aff));
        const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-6, 1.0);

        const RVector corr = cone_product(w_apply_inverse(aff.ds), w_apply(aff.dz));
        const RVector ds_target = -lam_sq - corr + sigma * mu * identity();
        const double dk_target = -st.tau * st.kappa - aff.dtau * aff.dkappa + sigma * mu;
        const Dir dir = direction(ds_target, dk_target, 1.0 - sigma);

        double alpha = std::min(1.0, 0.99 * step_length(dir));
        if (!(alpha > 1e-12)) {
            return false;
        }
        for (int backoff = 0; backoff < 40; ++backoff) {
            IpmState next = st;
            next.x += alpha * dir.dx;
            next.s += alpha * dir.ds;
            next.z += alpha * dir.dz;
            next.tau += alpha * dir.dtau;
            next.kappa += alpha * dir.dkappa;
            bool ok = next.tau > 0.0 && next.kappa > 0.0;
            for_each_cone([&](int, int off, int d) {
                ok = ok && soc_interior(next.s.segment(off, d)) && soc_interior(next.z.segment(off, d));
            });
            if (ok) {
                st = std::move(next);
                return true;
            }
            alpha *= 0.8;
        }
        return false;
    }
};

}  // namespace

SolveVerdict solve_socp(const ConicProgram& program, const SolverTolerances& tol) {
    program.validate();
    if (!program.is_plain_socp()) {
        throw InvalidInput("solve_socp called on a program with binary variables");
    }
    SolveVerdict verdict;
    const Reduced red = presolve(program, tol.feas_tol * 1e-2);
    if (red.infeasible) {
        verdict.status = SolveStatus::Infeasible;
        return verdict;
    }

    auto recover = [&](const RVector& y) -> RVector {
        return red.base + red.basis * red.col_scale.cwiseProduct(y);
    };

    auto finish_feasible = [&](const RVector& x) {
        verdict.status = SolveStatus::Feasible;
        verdict.solution = x;
        if (program.objective()) {
            verdict.objective_value = program.objective()->dot(x);
        }
    };

    if (red.cones.count() == 0) {
        // Only equalities remain: any point of the affine set will do.
        const RVector x = recover(RVector::Zero(red.G.cols()));
        if (program.objective() && red.c.size() > 0 && red.c.cwiseAbs().maxCoeff() > 0.0) {
            verdict.status = SolveStatus::Unbounded;
            return verdict;
        }
        finish_feasible(x);
        return verdict;
    }
    if (red.G.cols() == 0) {
        // Everything fixed: membership check only.
        const RVector x = recover(RVector::Zero(0));
        if (evaluate_constraints(program, x).worst_relative() <= tol.feas_tol) {
            finish_feasible(x);
        } else {
            verdict.status = SolveStatus::Infeasible;
        }
        return verdict;
    }

    HsdeSolver solver(red, tol);
    IpmState st;
    int iterations = 0;
    RVector accepted;
    const IpmOutcome outcome = solver.run(st, iterations, [&](const IpmState& s) {
        const RVector x = recover(s.x / s.tau);
        if (evaluate_constraints(program, x).worst_relative() <= tol.feas_tol) {
            accepted = x;
            return true;
        }
        return false;
    });
    verdict.iterations = iterations;
    switch (outcome) {
        case IpmOutcome::Solved: finish_feasible(accepted); break;
        case IpmOutcome::PrimalInfeasible: verdict.status = SolveStatus::Infeasible; break;
        case IpmOutcome::DualInfeasible: verdict.status = SolveStatus::Unbounded; break;
        case IpmOutcome::Failed: verdict.status = SolveStatus::NumericalFailure; break;
    }
    return verdict;
}

}  // namespace dmimo
