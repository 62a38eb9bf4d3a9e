#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "l2hodge/complex.hpp"
#include "l2hodge/errors.hpp"
#include "l2hodge/module.hpp"

namespace l2hodge::trunc {

using hcx::ChainHomotopy;
using hcx::ChainMap;
using hcx::HilbertComplex;
using hcx::SpectralData;
using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;

inline constexpr double kDefaultGapTol = 1e-8;
inline constexpr double kDefaultTieTol = 1e-10;

struct TruncateOptions {
    double gap_tol = kDefaultGapTol;   // required distance from lambda to the first kept-out eigenvalue
    double tie_tol = kDefaultTieTol;   // eigenvalues this close to lambda abort the split
    double eps_d2 = 1e-9;              // tolerance for the induced complex's d~ d~ check
    int jobs = 1;
};

/// Basis of the spectral subspace of eigenvalues <= lambda: per block the
/// matrix of eigenvector columns, plus the kept multiplicities.
struct SpectralProjection {
    HilbertModule domain;        // module the Laplacian acts on
    HilbertModule range;         // truncated module, multiplicity = kept count per block
    std::vector<Matrix> basis;   // m_i x k_i isometric columns
};

/// Split a Laplacian spectrum at lambda. Eigenvalues within tie_tol of lambda
/// make the split ill-defined and raise boundary_tie; the caller should move
/// lambda into a spectral gap.
inline SpectralProjection spectral_projection(const SpectralData& s, double lambda,
                                              double tie_tol = kDefaultTieTol) {
    SpectralProjection p;
    p.domain = s.module;
    std::vector<int> kept(s.blocks.size(), 0);
    p.basis.reserve(s.blocks.size());
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const auto& eigs = s.blocks[i].eigenvalues;
        long count = 0;
        for (double ev : eigs) {
            if (std::abs(ev - lambda) <= tie_tol)
                throw Error(errc::boundary_tie,
                            "eigenvalue " + std::to_string(ev) + " lies within " +
                                std::to_string(tie_tol) + " of the cutoff " + std::to_string(lambda));
            if (ev <= lambda) ++count;
        }
        kept[i] = static_cast<int>(count);
        p.basis.push_back(s.blocks[i].eigenvectors.leftCols(count));
    }
    p.range = HilbertModule::make(s.module.algebra, std::move(kept));
    return p;
}

/// Isometric inclusion L_lambda -> C as a module morphism.
inline ModuleMorphism inclusion_morphism(const SpectralProjection& p) {
    return ModuleMorphism{p.range, p.domain, p.basis};
}

/// Green operator of the Laplacian relative to the cutoff:
///   G = sum_{mu > lambda} mu^{-1} v v*,
/// i.e. the inverse of Delta on the large spectral part and 0 on L_lambda.
/// Eigenvalues in (lambda, lambda + gap_tol] make G ill-conditioned and raise
/// gap_too_small.
inline ModuleMorphism green_operator(const SpectralData& s, double lambda,
                                     double gap_tol = kDefaultGapTol) {
    std::vector<Matrix> blocks;
    blocks.reserve(s.blocks.size());
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        const auto& eigs = s.blocks[i].eigenvalues;
        const Matrix& vecs = s.blocks[i].eigenvectors;
        long m = static_cast<long>(eigs.size());
        Matrix g = Matrix::Zero(m, m);
        for (long j = 0; j < m; ++j) {
            if (eigs[j] <= lambda) continue;
            if (eigs[j] - lambda <= gap_tol)
                throw Error(errc::gap_too_small,
                            "eigenvalue " + std::to_string(eigs[j]) + " is within " +
                                std::to_string(gap_tol) + " above the cutoff " +
                                std::to_string(lambda));
            g += (1.0 / eigs[j]) * (vecs.col(j) * vecs.col(j).adjoint());
        }
        blocks.push_back(std::move(g));
    }
    return ModuleMorphism{s.module, s.module, std::move(blocks)};
}

struct TruncatedComplex {
    HilbertComplex small;                  // induced complex on the spectral subspaces
    ChainMap inclusion;                    // small -> full, isometric in each degree
    ChainMap compression;                  // full -> small, adjoint of inclusion
    std::vector<ModuleMorphism> projector; // E_lambda per degree, endomorphism of C^p
    std::vector<SpectralData> spectra;     // full Laplacian spectra per degree
    double lambda = 0.0;
};

/// Compress the complex onto the spectral subspaces L_lambda^p of eigenvalue
/// <= lambda, with the induced differential d~_p = Q_{p+1}* d_p Q_p. Hodge
/// theory makes the subspaces a subcomplex, so d~ inherits d~ d~ = 0 up to
/// eigensolver accuracy, and the inclusion/compression are chain maps.
inline TruncatedComplex truncate(const HilbertComplex& x, double lambda,
                                 const TruncateOptions& opt = {}) {
    int P = x.top_degree();
    TruncatedComplex out;
    out.lambda = lambda;
    std::vector<SpectralProjection> proj;
    proj.reserve(P + 1);
    for (int p = 0; p <= P; ++p) {
        out.spectra.push_back(hcx::spectrum(x, p, opt.jobs));
        proj.push_back(spectral_projection(out.spectra.back(), lambda, opt.tie_tol));
    }
    std::vector<HilbertModule> small_modules;
    std::vector<ModuleMorphism> small_diffs;
    std::vector<ModuleMorphism> incl, comp;
    for (int p = 0; p <= P; ++p) {
        small_modules.push_back(proj[p].range);
        incl.push_back(inclusion_morphism(proj[p]));
        comp.push_back(adjoint_morphism(incl.back()));
        std::vector<Matrix> e;
        e.reserve(proj[p].basis.size());
        for (const auto& q : proj[p].basis) e.push_back(q * q.adjoint());
        out.projector.push_back(ModuleMorphism{x.modules[p], x.modules[p], std::move(e)});
    }
    for (int p = 0; p < P; ++p)
        small_diffs.push_back(compose(comp[p + 1], compose(x.differentials[p], incl[p])));
    out.small = HilbertComplex::make(std::move(small_modules), std::move(small_diffs), opt.eps_d2);
    out.inclusion = ChainMap::make(out.small, x, std::move(incl));
    out.compression = ChainMap::make(x, out.small, std::move(comp));
    return out;
}

struct HomotopyCertificate {
    ChainHomotopy homotopy;   // K_p = d_{p-1}* G^p, with K_0 = 0
    double residual = 0.0;    // max_p || (I - E_lambda) - (d K + K d) ||
    double eps_hom = 0.0;
    bool valid = false;
    double d_norm = 0.0;
    double green_norm = 0.0;
};

/// Certify that the complement of L_lambda is contractible: K = d* G satisfies
///   d K + K d = Delta G = I - E_lambda
/// exactly in the calculus, so the numerical residual is pure rounding. The
/// default acceptance threshold scales with ||d|| ||G||.
inline HomotopyCertificate homotopy_certificate(const HilbertComplex& x,
                                                const TruncatedComplex& t,
                                                double eps_hom = -1.0,
                                                double gap_tol = kDefaultGapTol) {
    int P = x.top_degree();
    HomotopyCertificate cert;
    std::vector<ModuleMorphism> greens;
    greens.reserve(P + 1);
    for (int p = 0; p <= P; ++p) {
        greens.push_back(green_operator(t.spectra[p], t.lambda, gap_tol));
        cert.green_norm = std::max(cert.green_norm, hmod::operator_norm(greens.back()));
    }
    for (const auto& d : x.differentials)
        cert.d_norm = std::max(cert.d_norm, hmod::operator_norm(d));
    std::vector<ModuleMorphism> k;
    k.reserve(P + 1);
    for (int p = 0; p <= P; ++p) {
        ModuleMorphism down = x.differential_or_zero(p - 1);
        k.push_back(compose(adjoint_morphism(down), greens[p]));
    }
    cert.homotopy = ChainHomotopy{x, x, std::move(k)};
    ChainMap projector_map{x, x, t.projector};
    cert.residual = hcx::homotopy_defect(projector_map, hcx::identity_chain_map(x), cert.homotopy);
    cert.eps_hom = eps_hom >= 0.0 ? eps_hom : 1e-9 * (1.0 + cert.d_norm * cert.green_norm);
    cert.valid = cert.residual <= cert.eps_hom;
    return cert;
}

/// sqrt(lambda) bound on the truncated differential, slack for rounding.
inline double truncated_norm_bound(double lambda) { return std::sqrt(std::max(lambda, 0.0)) + 1e-9; }

}  // namespace l2hodge::trunc
