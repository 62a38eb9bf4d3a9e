#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "l2hodge/errors.hpp"
#include "l2hodge/module.hpp"
#include "l2hodge/parallel.hpp"

namespace l2hodge::hcx {

using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;
using vna::VnAlgebra;

inline constexpr double kDefaultEpsD2 = 1e-10;
inline constexpr double kTieTol = 1e-10;

/// A finite cochain complex of Hilbert modules over one algebra:
///   C^0 --d_0--> C^1 --d_1--> ... --d_{P-1}--> C^P
/// with d_{p+1} d_p = 0 enforced up to a relative tolerance at construction.
struct HilbertComplex {
    std::vector<HilbertModule> modules;
    std::vector<ModuleMorphism> differentials;

    static HilbertComplex make(std::vector<HilbertModule> modules,
                               std::vector<ModuleMorphism> differentials,
                               double eps_d2 = kDefaultEpsD2) {
        if (modules.empty()) throw Error(errc::invalid_argument, "complex needs at least one module");
        const VnAlgebra& a = modules.front().algebra;
        for (const auto& m : modules) vna::check_same_algebra(a, m.algebra);
        if (differentials.size() + 1 != modules.size())
            throw Error(errc::shape_mismatch, "expected one differential per adjacent pair of modules");
        for (std::size_t p = 0; p < differentials.size(); ++p) {
            if (!differentials[p].domain.same_as(modules[p]) ||
                !differentials[p].codomain.same_as(modules[p + 1]))
                throw Error(errc::shape_mismatch,
                            "differential " + std::to_string(p) + " does not match its modules");
        }
        for (std::size_t p = 0; p + 1 < differentials.size(); ++p) {
            double dd = hmod::operator_norm(compose(differentials[p + 1], differentials[p]));
            double scale = 1.0 + hmod::operator_norm(differentials[p]) *
                                     hmod::operator_norm(differentials[p + 1]);
            if (dd > eps_d2 * scale)
                throw Error(errc::not_a_complex,
                            "d_" + std::to_string(p + 1) + " d_" + std::to_string(p) +
                                " has norm " + std::to_string(dd));
        }
        return HilbertComplex{std::move(modules), std::move(differentials)};
    }

    int top_degree() const { return static_cast<int>(modules.size()) - 1; }
    const VnAlgebra& algebra() const { return modules.front().algebra; }

    /// d_p for p in [0, P-1]; for p = -1 and p = P the zero morphism guarding
    /// the ends of the complex, so Laplacians can be formed uniformly.
    ModuleMorphism differential_or_zero(int p) const {
        int P = top_degree();
        if (p >= 0 && p < P) return differentials[p];
        if (p == -1) return hmod::zero_morphism(hmod::zero_module(algebra()), modules.front());
        if (p == P) return hmod::zero_morphism(modules.back(), hmod::zero_module(algebra()));
        throw Error(errc::invalid_argument, "degree " + std::to_string(p) + " out of range");
    }
};

/// Hodge Laplacian in degree p: Delta^p = d_p^* d_p + d_{p-1} d_{p-1}^*.
inline ModuleMorphism laplacian(const HilbertComplex& x, int p) {
    if (p < 0 || p > x.top_degree())
        throw Error(errc::invalid_argument, "laplacian degree out of range");
    ModuleMorphism up = x.differential_or_zero(p);
    ModuleMorphism down = x.differential_or_zero(p - 1);
    return hmod::add_morphisms(compose(adjoint_morphism(up), up),
                               compose(down, adjoint_morphism(down)));
}

struct BlockSpectrum {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // unitary, columns match eigenvalues
};

struct SpectralData {
    HilbertModule module;
    std::vector<BlockSpectrum> blocks;
    double laplacian_norm = 0.0;  // largest eigenvalue across blocks, clamped at 0
};

/// Eigendecomposition of a self-adjoint endomorphism, block by block. Blocks
/// are solved independently (optionally in parallel) and written into fixed
/// slots, so the result does not depend on the number of jobs.
inline SpectralData decompose_selfadjoint(const ModuleMorphism& f, int jobs = 1) {
    if (!f.domain.same_as(f.codomain))
        throw Error(errc::not_endomorphism, "spectral decomposition requires an endomorphism");
    SpectralData out;
    out.module = f.domain;
    out.blocks.resize(f.blocks.size());
    std::vector<int> bad(f.blocks.size(), 0);
    parallel_for(f.blocks.size(), jobs, [&](std::size_t i) {
        const Matrix& b = f.blocks[i];
        BlockSpectrum& s = out.blocks[i];
        if (b.rows() == 0) {
            s.eigenvectors = Matrix::Zero(0, 0);
            return;
        }
        Matrix h = 0.5 * (b + b.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        if (es.info() != Eigen::Success) {
            bad[i] = 1;
            return;
        }
        s.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + b.rows());
        s.eigenvectors = es.eigenvectors();
    });
    for (std::size_t i = 0; i < bad.size(); ++i)
        if (bad[i])
            throw Error(errc::eigensolve_failure,
                        "eigensolver failed in block '" + f.domain.algebra.block(i).label + "'");
    for (const auto& s : out.blocks)
        if (!s.eigenvalues.empty())
            out.laplacian_norm = std::max(out.laplacian_norm, s.eigenvalues.back());
    out.laplacian_norm = std::max(out.laplacian_norm, 0.0);
    return out;
}

inline SpectralData spectrum(const HilbertComplex& x, int p, int jobs = 1) {
    return decompose_selfadjoint(laplacian(x, p), jobs);
}

inline double default_eps_null(double laplacian_norm) {
    return 1e-8 * (1.0 + laplacian_norm);
}

struct BettiResult {
    double value = 0.0;       // sum_i nu_i * (# eigenvalues <= eps_null in block i)
    double eps_null = 0.0;
    long null_count = 0;      // unweighted eigenvalue count across blocks
    bool ambiguous = false;   // some eigenvalue fell in (eps_null, 10 eps_null]
    double smallest_positive = std::numeric_limits<double>::infinity();
};

/// L2 Betti number from a Laplacian spectrum: the nu-weighted count of
/// near-null eigenvalues. Eigenvalues in (eps_null, 10 eps_null] mark the
/// threshold choice as ambiguous.
inline BettiResult betti(const SpectralData& s, double eps_null = -1.0) {
    if (eps_null < 0.0) eps_null = default_eps_null(s.laplacian_norm);
    BettiResult r;
    r.eps_null = eps_null;
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        long count = 0;
        for (double ev : s.blocks[i].eigenvalues) {
            if (ev <= eps_null) {
                ++count;
            } else {
                if (ev <= 10.0 * eps_null) r.ambiguous = true;
                r.smallest_positive = std::min(r.smallest_positive, ev);
            }
        }
        r.null_count += count;
        r.value += s.module.algebra.nu(i) * static_cast<double>(count);
    }
    return r;
}

/// The spectral distribution function F(lambda) = sum_i nu_i * #{eigenvalues
/// of block i <= lambda}, a right-continuous staircase with F(inf) equal to
/// dim_tau of the module. Counting is closed at lambda, and evaluation sums
/// per-block products in block order so it reproduces dim_tau of a spectral
/// subspace bit for bit.
struct DensityFunction {
    std::vector<std::vector<double>> block_eigs;  // ascending per block
    std::vector<double> nu;
    double total = 0.0;

    double operator()(double lambda) const {
        double f = 0.0;
        for (std::size_t i = 0; i < block_eigs.size(); ++i) {
            const auto& e = block_eigs[i];
            auto it = std::upper_bound(e.begin(), e.end(), lambda);
            f += nu[i] * static_cast<double>(it - e.begin());
        }
        return f;
    }

    /// True when some eigenvalue lies within tol of lambda, i.e. the count at
    /// lambda is sensitive to perturbations of that size.
    bool near_tie(double lambda, double tol = kTieTol) const {
        for (const auto& e : block_eigs) {
            auto it = std::lower_bound(e.begin(), e.end(), lambda - tol);
            if (it != e.end() && *it <= lambda + tol) return true;
        }
        return false;
    }
};

inline DensityFunction spectral_density(const SpectralData& s) {
    DensityFunction f;
    f.block_eigs.reserve(s.blocks.size());
    f.nu.reserve(s.blocks.size());
    for (std::size_t i = 0; i < s.blocks.size(); ++i) {
        f.block_eigs.push_back(s.blocks[i].eigenvalues);
        f.nu.push_back(s.module.algebra.nu(i));
    }
    f.total = hmod::dim_tau(s.module);
    return f;
}

struct PowerFit {
    double exponent = 0.0;  // slope of log(F(lambda) - F(0)) against log(lambda)
    double log_c = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// Least-squares power-law fit of the near-zero density F(lambda) - F(0) over
/// log-spaced samples of [lo, hi]. Samples with no mass above the kernel are
/// skipped; the window must keep at least two.
inline PowerFit ns_exponent(const DensityFunction& f, double lo, double hi, int samples = 33) {
    if (!(lo > 0.0) || !(hi > lo)) throw Error(errc::empty_window, "need 0 < lo < hi");
    if (samples < 2) throw Error(errc::invalid_argument, "need at least two samples");
    double f0 = f(0.0);
    std::vector<double> xs, ys;
    for (int j = 0; j < samples; ++j) {
        double t = static_cast<double>(j) / (samples - 1);
        double lambda = lo * std::pow(hi / lo, t);
        double mass = f(lambda) - f0;
        if (mass > 0.0) {
            xs.push_back(std::log(lambda));
            ys.push_back(std::log(mass));
        }
    }
    if (xs.size() < 2)
        throw Error(errc::nonpositive_density, "window carries no spectral mass above the kernel");
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        sx += xs[j];
        sy += ys[j];
        sxx += xs[j] * xs[j];
        sxy += xs[j] * ys[j];
    }
    double det = n * sxx - sx * sx;
    if (det <= 0.0) throw Error(errc::empty_window, "degenerate sample placement");
    PowerFit fit;
    fit.points = static_cast<int>(xs.size());
    fit.exponent = (n * sxy - sx * sy) / det;
    fit.log_c = (sy - fit.exponent * sx) / n;
    double ss_res = 0, ss_tot = 0, ybar = sy / n;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        double pred = fit.log_c + fit.exponent * xs[j];
        ss_res += (ys[j] - pred) * (ys[j] - pred);
        ss_tot += (ys[j] - ybar) * (ys[j] - ybar);
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

/// A degreewise map of complexes f_p : X^p -> Y^p. Commutation with the
/// differentials is a property checked by chain_map_defect, not forced here.
struct ChainMap {
    HilbertComplex source;
    HilbertComplex target;
    std::vector<ModuleMorphism> components;

    static ChainMap make(HilbertComplex source, HilbertComplex target,
                         std::vector<ModuleMorphism> components) {
        if (source.modules.size() != target.modules.size() ||
            components.size() != source.modules.size())
            throw Error(errc::shape_mismatch, "chain map needs one component per degree");
        for (std::size_t p = 0; p < components.size(); ++p)
            if (!components[p].domain.same_as(source.modules[p]) ||
                !components[p].codomain.same_as(target.modules[p]))
                throw Error(errc::shape_mismatch,
                            "chain map component " + std::to_string(p) + " has wrong modules");
        return ChainMap{std::move(source), std::move(target), std::move(components)};
    }
};

/// max_p || d^Y_p f_p - f_{p+1} d^X_p ||.
inline double chain_map_defect(const ChainMap& f) {
    double defect = 0.0;
    int P = f.source.top_degree();
    for (int p = 0; p < P; ++p) {
        ModuleMorphism lhs = compose(f.target.differentials[p], f.components[p]);
        ModuleMorphism rhs = compose(f.components[p + 1], f.source.differentials[p]);
        defect = std::max(defect,
                          hmod::operator_norm(add_morphisms(lhs, scale_morphism(-1.0, rhs))));
    }
    return defect;
}

inline bool verify_chain_map(const ChainMap& f, double tol) { return chain_map_defect(f) <= tol; }

inline ChainMap identity_chain_map(const HilbertComplex& x) {
    std::vector<ModuleMorphism> comps;
    comps.reserve(x.modules.size());
    for (const auto& m : x.modules) comps.push_back(hmod::identity_morphism(m));
    return ChainMap{x, x, comps};
}

inline ChainMap compose_chain_maps(const ChainMap& g, const ChainMap& f) {
    std::vector<ModuleMorphism> comps;
    comps.reserve(f.components.size());
    for (std::size_t p = 0; p < f.components.size(); ++p)
        comps.push_back(compose(g.components[p], f.components[p]));
    return ChainMap{f.source, g.target, std::move(comps)};
}

/// A degree -1 family K_p : X^p -> Y^{p-1} (K_0 maps into the zero module).
struct ChainHomotopy {
    HilbertComplex source;
    HilbertComplex target;
    std::vector<ModuleMorphism> components;
};

/// max_p || (g_p - f_p) - (d^Y_{p-1} K_p + K_{p+1} d^X_p) || — the defect of K
/// as a homotopy between the chain maps f and g.
inline double homotopy_defect(const ChainMap& f, const ChainMap& g, const ChainHomotopy& k) {
    if (f.components.size() != g.components.size() || k.components.size() != f.components.size())
        throw Error(errc::shape_mismatch, "homotopy and chain maps disagree on degrees");
    double defect = 0.0;
    int P = f.source.top_degree();
    for (int p = 0; p <= P; ++p) {
        ModuleMorphism diff =
            hmod::add_morphisms(g.components[p], scale_morphism(-1.0, f.components[p]));
        ModuleMorphism down = compose(f.target.differential_or_zero(p - 1), k.components[p]);
        ModuleMorphism up = p < P ? compose(k.components[p + 1], f.source.differentials[p])
                                  : hmod::zero_morphism(f.source.modules[p], f.target.modules[p]);
        ModuleMorphism resid = hmod::add_morphisms(
            diff, scale_morphism(-1.0, hmod::add_morphisms(down, up)));
        defect = std::max(defect, hmod::operator_norm(resid));
    }
    return defect;
}

inline ModuleMorphism invert_morphism(const ModuleMorphism& f) {
    if (!f.domain.same_as(f.codomain))
        throw Error(errc::not_endomorphism, "only endomorphisms can be inverted");
    std::vector<Matrix> blocks;
    blocks.reserve(f.blocks.size());
    for (std::size_t i = 0; i < f.blocks.size(); ++i) {
        const Matrix& b = f.blocks[i];
        if (b.rows() == 0) {
            blocks.push_back(b);
            continue;
        }
        Eigen::FullPivLU<Matrix> lu(b);
        if (!lu.isInvertible())
            throw Error(errc::not_invertible,
                        "block '" + f.domain.algebra.block(i).label + "' is singular");
        blocks.push_back(lu.inverse());
    }
    return ModuleMorphism{f.domain, f.codomain, std::move(blocks)};
}

/// Conjugate the differentials by degreewise invertible maps S_p, giving the
/// isomorphic complex with d~_p = S_{p+1} d_p S_p^{-1}. Betti numbers are
/// invariants of this move; the spectra in general are not.
inline HilbertComplex conjugate_complex(const HilbertComplex& x,
                                        const std::vector<ModuleMorphism>& s,
                                        double eps_d2 = kDefaultEpsD2) {
    if (s.size() != x.modules.size())
        throw Error(errc::shape_mismatch, "need one conjugator per degree");
    for (std::size_t p = 0; p < s.size(); ++p)
        if (!s[p].domain.same_as(x.modules[p]) || !s[p].codomain.same_as(x.modules[p]))
            throw Error(errc::shape_mismatch, "conjugator " + std::to_string(p) +
                                                  " is not an endomorphism of C^" + std::to_string(p));
    std::vector<ModuleMorphism> diffs;
    diffs.reserve(x.differentials.size());
    for (std::size_t p = 0; p < x.differentials.size(); ++p)
        diffs.push_back(compose(s[p + 1], compose(x.differentials[p], invert_morphism(s[p]))));
    return HilbertComplex::make(x.modules, std::move(diffs), eps_d2);
}

/// Alternating sum of dim_tau over degrees; equals the alternating sum of the
/// L2 Betti numbers.
inline double euler_characteristic(const HilbertComplex& x) {
    double chi = 0.0;
    double sign = 1.0;
    for (const auto& m : x.modules) {
        chi += sign * hmod::dim_tau(m);
        sign = -sign;
    }
    return chi;
}

}  // namespace l2hodge::hcx
