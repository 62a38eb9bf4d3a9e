#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "l2hodge/algebra.hpp"
#include "l2hodge/errors.hpp"

namespace l2hodge::hmod {

using vna::complex_t;
using vna::Matrix;
using vna::VnAlgebra;

/// A finitely generated Hilbert module over a VnAlgebra: block i of the
/// algebra acts on C^{n_i} (x) C^{m_i} through its first leg, so the module
/// is determined by the multiplicity vector m. Its von Neumann dimension is
///   dim_tau(M) = sum_i w_i * m_i / n_i = sum_i nu_i * m_i.
struct HilbertModule {
    VnAlgebra algebra;
    std::vector<int> mult;

    static HilbertModule make(VnAlgebra algebra, std::vector<int> mult) {
        if (mult.size() != algebra.size())
            throw Error(errc::shape_mismatch, "multiplicity vector length != number of blocks");
        for (std::size_t i = 0; i < mult.size(); ++i)
            if (mult[i] < 0)
                throw Error(errc::invalid_argument,
                            "negative multiplicity in block '" + algebra.block(i).label + "'");
        return HilbertModule{std::move(algebra), std::move(mult)};
    }

    bool same_as(const HilbertModule& other) const {
        return algebra.same_as(other.algebra) && mult == other.mult;
    }

    bool is_zero() const {
        return std::all_of(mult.begin(), mult.end(), [](int m) { return m == 0; });
    }

    /// Total complex dimension of the underlying Hilbert space.
    long fiber_dim() const {
        long d = 0;
        for (std::size_t i = 0; i < mult.size(); ++i) d += static_cast<long>(algebra.block(i).n) * mult[i];
        return d;
    }
};

inline HilbertModule zero_module(const VnAlgebra& a) {
    return HilbertModule{a, std::vector<int>(a.size(), 0)};
}

/// L^2(A) as a module over itself: multiplicity n_i per block, dimension 1.
inline HilbertModule regular_module(const VnAlgebra& a) {
    std::vector<int> m;
    m.reserve(a.size());
    for (const auto& b : a.blocks()) m.push_back(b.n);
    return HilbertModule{a, std::move(m)};
}

inline HilbertModule direct_sum(const HilbertModule& a, const HilbertModule& b) {
    vna::check_same_algebra(a.algebra, b.algebra);
    std::vector<int> m(a.mult.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.mult[i] + b.mult[i];
    return HilbertModule{a.algebra, std::move(m)};
}

/// dim_tau, accumulated block by block as nu_i * m_i so it is bit-compatible
/// with spectral counts that use the same per-block products.
inline double dim_tau(const HilbertModule& m) {
    double d = 0.0;
    for (std::size_t i = 0; i < m.mult.size(); ++i)
        d += m.algebra.nu(i) * static_cast<double>(m.mult[i]);
    return d;
}

struct GenerationReport {
    bool finitely_generated;
    double sup_ratio;    // max_i m_i / n_i, the dimension of the "largest" fiber
    int min_generators;  // smallest N with M embeddable in A^N
};

/// M embeds in the free module A^N iff m_i <= N * n_i for every block; the
/// report carries the smallest such N and the sup of the ratios m_i / n_i.
inline GenerationReport check_finitely_generated(const HilbertModule& m) {
    double sup = 0.0;
    for (std::size_t i = 0; i < m.mult.size(); ++i)
        sup = std::max(sup, static_cast<double>(m.mult[i]) / m.algebra.block(i).n);
    return GenerationReport{true, sup, static_cast<int>(std::ceil(sup))};
}

/// Farber's staircase module at truncation level K: blocks k = 1..K are
/// scalar factors of weight 2^{-k} carrying multiplicity k, plus a scalar
/// remainder block of weight 2^{-K} with multiplicity 0 so the trace stays
/// normalized. Its dimension is sum_{k<=K} k 2^{-k} = 2 - (K+2) 2^{-K},
/// increasing to 2, while the minimal number of generators is K.
inline HilbertModule farber_example(int K) {
    if (K < 1) throw Error(errc::invalid_argument, "farber_example needs K >= 1");
    std::vector<vna::FactorBlock> blocks;
    std::vector<int> mult;
    blocks.reserve(K + 1);
    mult.reserve(K + 1);
    for (int k = 1; k <= K; ++k) {
        blocks.push_back({"b" + std::to_string(k), 1, 1.0, std::ldexp(1.0, -k)});
        mult.push_back(k);
    }
    blocks.push_back({"rest", 1, 1.0, std::ldexp(1.0, -K)});
    mult.push_back(0);
    return HilbertModule::make(VnAlgebra::make(std::move(blocks)), std::move(mult));
}

/// An A-linear map between Hilbert modules over the same algebra: one
/// codomain.m_i x domain.m_i matrix per block, acting on the multiplicity
/// leg only (which is exactly what commuting with the block action allows).
struct ModuleMorphism {
    HilbertModule domain;
    HilbertModule codomain;
    std::vector<Matrix> blocks;

    static ModuleMorphism make(HilbertModule domain, HilbertModule codomain,
                               std::vector<Matrix> blocks) {
        vna::check_same_algebra(domain.algebra, codomain.algebra);
        if (blocks.size() != domain.algebra.size())
            throw Error(errc::shape_mismatch, "morphism has wrong number of blocks");
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (blocks[i].rows() != codomain.mult[i] || blocks[i].cols() != domain.mult[i])
                throw Error(errc::shape_mismatch,
                            "morphism block '" + domain.algebra.block(i).label +
                                "' has wrong shape");
        }
        return ModuleMorphism{std::move(domain), std::move(codomain), std::move(blocks)};
    }
};

inline ModuleMorphism zero_morphism(const HilbertModule& dom, const HilbertModule& cod) {
    vna::check_same_algebra(dom.algebra, cod.algebra);
    std::vector<Matrix> blocks;
    blocks.reserve(dom.algebra.size());
    for (std::size_t i = 0; i < dom.algebra.size(); ++i)
        blocks.push_back(Matrix::Zero(cod.mult[i], dom.mult[i]));
    return ModuleMorphism{dom, cod, std::move(blocks)};
}

inline ModuleMorphism identity_morphism(const HilbertModule& m) {
    std::vector<Matrix> blocks;
    blocks.reserve(m.algebra.size());
    for (std::size_t i = 0; i < m.algebra.size(); ++i)
        blocks.push_back(Matrix::Identity(m.mult[i], m.mult[i]));
    return ModuleMorphism{m, m, std::move(blocks)};
}

inline ModuleMorphism compose(const ModuleMorphism& g, const ModuleMorphism& f) {
    if (!g.domain.same_as(f.codomain))
        throw Error(errc::shape_mismatch, "compose: domain of outer != codomain of inner");
    std::vector<Matrix> blocks;
    blocks.reserve(f.blocks.size());
    for (std::size_t i = 0; i < f.blocks.size(); ++i) blocks.push_back(g.blocks[i] * f.blocks[i]);
    return ModuleMorphism{f.domain, g.codomain, std::move(blocks)};
}

inline ModuleMorphism adjoint_morphism(const ModuleMorphism& f) {
    std::vector<Matrix> blocks;
    blocks.reserve(f.blocks.size());
    for (const auto& m : f.blocks) blocks.push_back(m.adjoint());
    return ModuleMorphism{f.codomain, f.domain, std::move(blocks)};
}

inline ModuleMorphism add_morphisms(const ModuleMorphism& f, const ModuleMorphism& g) {
    if (!f.domain.same_as(g.domain) || !f.codomain.same_as(g.codomain))
        throw Error(errc::shape_mismatch, "add: morphisms have different domains or codomains");
    std::vector<Matrix> blocks;
    blocks.reserve(f.blocks.size());
    for (std::size_t i = 0; i < f.blocks.size(); ++i) blocks.push_back(f.blocks[i] + g.blocks[i]);
    return ModuleMorphism{f.domain, f.codomain, std::move(blocks)};
}

inline ModuleMorphism scale_morphism(complex_t c, const ModuleMorphism& f) {
    std::vector<Matrix> blocks;
    blocks.reserve(f.blocks.size());
    for (const auto& m : f.blocks) blocks.push_back(c * m);
    return ModuleMorphism{f.domain, f.codomain, std::move(blocks)};
}

inline double operator_norm(const ModuleMorphism& f) {
    double r = 0.0;
    for (const auto& m : f.blocks) r = std::max(r, vna::matrix_operator_norm(m));
    return r;
}

/// Trace of an endomorphism: sum_i nu_i * tr(B_i). Faithful, normal, and
/// tracial; trace(id_M) = dim_tau(M).
inline complex_t trace_endomorphism(const ModuleMorphism& f) {
    if (!f.domain.same_as(f.codomain))
        throw Error(errc::not_endomorphism, "trace requires domain == codomain");
    complex_t t = 0.0;
    for (std::size_t i = 0; i < f.blocks.size(); ++i)
        t += f.domain.algebra.nu(i) * f.blocks[i].trace();
    return t;
}

}  // namespace l2hodge::hmod
