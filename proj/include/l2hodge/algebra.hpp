#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "l2hodge/errors.hpp"

namespace l2hodge::vna {

using complex_t = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// One matrix factor M_{n}(C) of a finite von Neumann algebra, carrying a
/// coupling multiplicity mu and a trace density rho. The factor's weight in
/// the normalized trace is w = mu * rho.
struct FactorBlock {
    std::string label;
    int n = 1;
    double mu = 1.0;
    double rho = 1.0;

    double weight() const { return mu * rho; }
};

inline constexpr double kWeightSumTol = 1e-12;

/// A finite von Neumann algebra presented as a weighted direct sum of matrix
/// factors, with the normalized faithful trace
///   tau(a) = sum_i w_i * tr(a_i) / n_i,   sum_i w_i = 1.
class VnAlgebra {
public:
    VnAlgebra() = default;

    static VnAlgebra make(std::vector<FactorBlock> blocks) {
        if (blocks.empty())
            throw Error(errc::empty_algebra, "algebra needs at least one factor block");
        std::unordered_set<std::string> seen;
        double sum = 0.0;
        for (const auto& b : blocks) {
            if (b.label.empty())
                throw Error(errc::invalid_argument, "factor block label must be nonempty");
            if (!seen.insert(b.label).second)
                throw Error(errc::invalid_argument, "duplicate factor block label '" + b.label + "'");
            if (b.n < 1)
                throw Error(errc::invalid_argument,
                            "factor block '" + b.label + "' has nonpositive size");
            if (!(b.mu > 0.0) || !(b.rho > 0.0))
                throw Error(errc::invalid_argument,
                            "factor block '" + b.label + "' has nonpositive weight");
            sum += b.weight();
        }
        if (std::abs(sum - 1.0) > kWeightSumTol)
            throw Error(errc::not_normalized,
                        "block weights sum to " + std::to_string(sum) + ", expected 1");
        VnAlgebra a;
        a.blocks_ = std::move(blocks);
        return a;
    }

    /// The trivial algebra C with its unique tracial state.
    static VnAlgebra scalar() { return make({FactorBlock{"C", 1, 1.0, 1.0}}); }

    const std::vector<FactorBlock>& blocks() const { return blocks_; }
    std::size_t size() const { return blocks_.size(); }
    const FactorBlock& block(std::size_t i) const { return blocks_[i]; }
    double weight(std::size_t i) const { return blocks_[i].weight(); }

    /// Trace weight of a single matrix unit in block i: nu_i = w_i / n_i.
    /// Every eigenvalue computed in block i enters spectral counts with this
    /// weight.
    double nu(std::size_t i) const { return blocks_[i].weight() / blocks_[i].n; }

    bool same_as(const VnAlgebra& other) const {
        if (blocks_.size() != other.blocks_.size()) return false;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& a = blocks_[i];
            const auto& b = other.blocks_[i];
            if (a.label != b.label || a.n != b.n || a.mu != b.mu || a.rho != b.rho) return false;
        }
        return true;
    }

private:
    std::vector<FactorBlock> blocks_;
};

/// An element of a VnAlgebra: one n_i x n_i complex matrix per factor block.
struct AlgebraElement {
    VnAlgebra algebra;
    std::vector<Matrix> blocks;
};

inline void check_element(const AlgebraElement& a) {
    if (a.blocks.size() != a.algebra.size())
        throw Error(errc::shape_mismatch, "element has wrong number of blocks");
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        int n = a.algebra.block(i).n;
        if (a.blocks[i].rows() != n || a.blocks[i].cols() != n)
            throw Error(errc::shape_mismatch,
                        "element block '" + a.algebra.block(i).label + "' has wrong shape");
    }
}

inline void check_same_algebra(const VnAlgebra& a, const VnAlgebra& b) {
    if (!a.same_as(b))
        throw Error(errc::shape_mismatch, "operands live in different algebras");
}

inline AlgebraElement identity_element(const VnAlgebra& a) {
    AlgebraElement e{a, {}};
    e.blocks.reserve(a.size());
    for (const auto& b : a.blocks()) e.blocks.push_back(Matrix::Identity(b.n, b.n));
    return e;
}

inline AlgebraElement zero_element(const VnAlgebra& a) {
    AlgebraElement e{a, {}};
    e.blocks.reserve(a.size());
    for (const auto& b : a.blocks()) e.blocks.push_back(Matrix::Zero(b.n, b.n));
    return e;
}

/// tau(a) = sum_i w_i tr(a_i)/n_i, accumulated in block order.
inline complex_t trace(const AlgebraElement& a) {
    check_element(a);
    complex_t t = 0.0;
    for (std::size_t i = 0; i < a.algebra.size(); ++i)
        t += a.algebra.weight(i) * a.blocks[i].trace() / static_cast<double>(a.algebra.block(i).n);
    return t;
}

inline AlgebraElement adjoint(const AlgebraElement& a) {
    check_element(a);
    AlgebraElement r{a.algebra, {}};
    r.blocks.reserve(a.blocks.size());
    for (const auto& m : a.blocks) r.blocks.push_back(m.adjoint());
    return r;
}

inline AlgebraElement multiply(const AlgebraElement& a, const AlgebraElement& b) {
    check_element(a);
    check_element(b);
    check_same_algebra(a.algebra, b.algebra);
    AlgebraElement r{a.algebra, {}};
    r.blocks.reserve(a.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i) r.blocks.push_back(a.blocks[i] * b.blocks[i]);
    return r;
}

inline AlgebraElement add(const AlgebraElement& a, const AlgebraElement& b) {
    check_element(a);
    check_element(b);
    check_same_algebra(a.algebra, b.algebra);
    AlgebraElement r{a.algebra, {}};
    r.blocks.reserve(a.blocks.size());
    for (std::size_t i = 0; i < a.blocks.size(); ++i) r.blocks.push_back(a.blocks[i] + b.blocks[i]);
    return r;
}

inline AlgebraElement scale(complex_t c, const AlgebraElement& a) {
    check_element(a);
    AlgebraElement r{a.algebra, {}};
    r.blocks.reserve(a.blocks.size());
    for (const auto& m : a.blocks) r.blocks.push_back(c * m);
    return r;
}

/// Operator norm of one matrix: sqrt of the largest eigenvalue of m* m.
inline double matrix_operator_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw Error(errc::eigensolve_failure, "eigensolver failed on m* m");
    double top = es.eigenvalues().maxCoeff();
    return std::sqrt(std::max(top, 0.0));
}

/// C*-norm: the max over blocks of the matrix operator norm.
inline double cstar_norm(const AlgebraElement& a) {
    check_element(a);
    double r = 0.0;
    for (const auto& m : a.blocks) r = std::max(r, matrix_operator_norm(m));
    return r;
}

}  // namespace l2hodge::vna
