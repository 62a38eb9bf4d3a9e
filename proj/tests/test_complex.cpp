#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "l2hodge/complex.hpp"

using namespace l2hodge;
using hcx::HilbertComplex;
using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;
using vna::VnAlgebra;
using Catch::Approx;

namespace {

Matrix m1(double v) {
    Matrix m(1, 1);
    m << v;
    return m;
}

// C --(-2)--> C over the trivial algebra.
HilbertComplex scalar_complex() {
    VnAlgebra a = VnAlgebra::scalar();
    HilbertModule m = hmod::regular_module(a);
    return HilbertComplex::make({m, m}, {ModuleMorphism::make(m, m, {m1(-2)})});
}

// The circle with deck group Z/2 in the character basis: two scalar blocks of
// weight 1/2, d = R(g) - 1 which is 0 on the trivial character and -2 on the
// sign character.
HilbertComplex z2_circle_complex() {
    VnAlgebra a = VnAlgebra::make({{"chi0", 1, 1.0, 0.5}, {"chi1", 1, 1.0, 0.5}});
    HilbertModule m = hmod::regular_module(a);
    return HilbertComplex::make({m, m}, {ModuleMorphism::make(m, m, {m1(0), m1(-2)})});
}

}  // namespace

TEST_CASE("complex construction enforces d d = 0", "[complex]") {
    VnAlgebra a = VnAlgebra::scalar();
    HilbertModule m = hmod::regular_module(a);
    ModuleMorphism d0 = ModuleMorphism::make(m, m, {m1(1)});
    ModuleMorphism d1 = ModuleMorphism::make(m, m, {m1(1)});
    try {
        HilbertComplex::make({m, m, m}, {d0, d1});
        FAIL("expected not_a_complex");
    } catch (const Error& e) {
        CHECK(e.code() == errc::not_a_complex);
    }
    // d1 d0 = 0 passes.
    CHECK_NOTHROW(HilbertComplex::make({m, m, m}, {d0, ModuleMorphism::make(m, m, {m1(0)})}));
    REQUIRE_THROWS_AS(HilbertComplex::make({}, {}), Error);
    REQUIRE_THROWS_AS(HilbertComplex::make({m, m}, {}), Error);
}

TEST_CASE("laplacians of the scalar complex", "[complex]") {
    HilbertComplex x = scalar_complex();
    CHECK(x.top_degree() == 1);
    // Delta^0 = d* d = 4, Delta^1 = d d* = 4.
    for (int p = 0; p <= 1; ++p) {
        ModuleMorphism lap = hcx::laplacian(x, p);
        CHECK(lap.blocks[0](0, 0).real() == Approx(4.0));
    }
    REQUIRE_THROWS_AS(hcx::laplacian(x, 2), Error);
    CHECK(hcx::euler_characteristic(x) == 0.0);

    auto s = hcx::spectrum(x, 0);
    CHECK(s.laplacian_norm == Approx(4.0));
    auto b = hcx::betti(s);
    CHECK(b.value == 0.0);
    CHECK(b.null_count == 0);
    CHECK(b.smallest_positive == Approx(4.0));
}

TEST_CASE("L2 Betti numbers of the Z/2 circle", "[complex]") {
    HilbertComplex x = z2_circle_complex();
    auto b0 = hcx::betti(hcx::spectrum(x, 0));
    auto b1 = hcx::betti(hcx::spectrum(x, 1));
    CHECK(b0.value == Approx(0.5).margin(1e-12));
    CHECK(b1.value == Approx(0.5).margin(1e-12));
    CHECK_FALSE(b0.ambiguous);
    CHECK(hcx::euler_characteristic(x) == 0.0);
}

TEST_CASE("betti flags ambiguous thresholds", "[complex]") {
    VnAlgebra a = VnAlgebra::scalar();
    HilbertModule m = HilbertModule::make(a, {3});
    Matrix d = Matrix::Zero(3, 3);
    d(0, 0) = 0.0;
    d(1, 1) = 5e-8;  // falls in (eps_null, 10 eps_null] for eps_null = 2e-8
    d(2, 2) = 1.0;
    auto s = hcx::decompose_selfadjoint(ModuleMorphism::make(m, m, {d}));
    auto b = hcx::betti(s);  // default eps_null = 1e-8 (1 + 1) = 2e-8
    CHECK(b.eps_null == Approx(2e-8));
    CHECK(b.null_count == 1);
    CHECK(b.ambiguous);
    CHECK(b.smallest_positive == Approx(5e-8));

    auto b2 = hcx::betti(s, 1e-7);
    CHECK(b2.null_count == 2);
    CHECK_FALSE(b2.ambiguous);
}

TEST_CASE("spectral density staircase", "[complex]") {
    VnAlgebra a = VnAlgebra::make({{"m2", 2, 0.5, 1.0}, {"s", 1, 0.5, 1.0}});
    HilbertModule m = HilbertModule::make(a, {2, 1});
    Matrix b0 = Matrix::Zero(2, 2), b1 = Matrix::Zero(1, 1);
    b0(0, 0) = 0.5;
    b0(1, 1) = 2.0;
    b1(0, 0) = 1.0;
    auto s = hcx::decompose_selfadjoint(ModuleMorphism::make(m, m, {b0, b1}));
    auto f = hcx::spectral_density(s);

    // eigenvalues 0.5 and 2 at weight 1/4 each, and 1 at weight 1/2; the
    // staircase is closed on the right.
    CHECK(f(0.0) == 0.0);
    CHECK(f(0.5) == 0.25);
    CHECK(f(0.75) == 0.25);
    CHECK(f(1.0) == 0.75);
    CHECK(f(2.0) == 1.0);
    CHECK(f.total == Approx(1.0));
    CHECK(f.near_tie(0.5));
    CHECK(f.near_tie(0.5 + 5e-11));
    CHECK_FALSE(f.near_tie(0.75));
}

TEST_CASE("power-law fit of a sqrt staircase", "[complex]") {
    // Eigenvalues (j/N)^2 at weight 1/N give F(lambda) = floor(N sqrt(lambda))/N,
    // a staircase hugging sqrt(lambda).
    const int N = 1024;
    hcx::DensityFunction f;
    f.nu = {1.0 / N};
    f.total = 1.0;
    std::vector<double> eigs;
    for (int j = 1; j <= N; ++j) eigs.push_back(std::pow(double(j) / N, 2));
    f.block_eigs = {eigs};
    auto fit = hcx::ns_exponent(f, 1e-3, 1e-1, 33);
    CHECK(fit.exponent == Approx(0.5).margin(0.05));
    CHECK(fit.r2 > 0.99);
    CHECK(fit.points == 33);

    REQUIRE_THROWS_AS(hcx::ns_exponent(f, 0.0, 1.0), Error);
    // a window below the lowest eigenvalue carries no mass
    try {
        hcx::ns_exponent(f, 1e-9, 1e-8);
        FAIL("expected nonpositive_density");
    } catch (const Error& e) {
        CHECK(e.code() == errc::nonpositive_density);
    }
}

TEST_CASE("chain maps and homotopies", "[complex]") {
    HilbertComplex x = scalar_complex();
    auto id = hcx::identity_chain_map(x);
    CHECK(hcx::chain_map_defect(id) == 0.0);
    CHECK(hcx::verify_chain_map(id, 0.0));

    // f_0 = 2, f_1 = 1 fails to commute with d = -2: d f_0 - f_1 d = -4 + 2.
    HilbertModule m = x.modules[0];
    auto f = hcx::ChainMap::make(
        x, x, {ModuleMorphism::make(m, m, {m1(2)}), ModuleMorphism::make(m, m, {m1(1)})});
    CHECK(hcx::chain_map_defect(f) == Approx(2.0));

    auto g = hcx::compose_chain_maps(id, f);
    CHECK(g.components[0].blocks[0](0, 0).real() == Approx(2.0));

    // K = 0 is a homotopy from the identity to itself.
    hcx::ChainHomotopy k{x, x,
                         {hmod::zero_morphism(m, hmod::zero_module(x.algebra())),
                          hmod::zero_morphism(m, m)}};
    CHECK(hcx::homotopy_defect(id, id, k) == 0.0);
}

TEST_CASE("conjugation preserves Betti numbers", "[complex]") {
    HilbertComplex x = z2_circle_complex();
    HilbertModule m = x.modules[0];
    std::vector<ModuleMorphism> s = {ModuleMorphism::make(m, m, {m1(1), m1(2)}),
                                     ModuleMorphism::make(m, m, {m1(3), m1(0.5)})};
    HilbertComplex y = hcx::conjugate_complex(x, s);
    // d~ on the sign character: 0.5 * (-2) / 2 = -0.5
    CHECK(y.differentials[0].blocks[1](0, 0).real() == Approx(-0.5));
    CHECK(hcx::betti(hcx::spectrum(y, 0)).value == Approx(0.5).margin(1e-12));
    CHECK(hcx::betti(hcx::spectrum(y, 1)).value == Approx(0.5).margin(1e-12));

    ModuleMorphism singular = ModuleMorphism::make(m, m, {m1(1), m1(0)});
    REQUIRE_THROWS_AS(hcx::conjugate_complex(x, {singular, s[1]}), Error);
    REQUIRE_THROWS_AS(hcx::invert_morphism(singular), Error);
}

TEST_CASE("spectra do not depend on the job count", "[complex]") {
    VnAlgebra a = VnAlgebra::make({{"b0", 2, 0.25, 1.0},
                                   {"b1", 1, 0.25, 1.0},
                                   {"b2", 3, 0.25, 1.0},
                                   {"b3", 1, 0.25, 1.0}});
    HilbertModule m = HilbertModule::make(a, {2, 3, 1, 4});
    std::vector<Matrix> blocks;
    for (std::size_t i = 0; i < a.size(); ++i) {
        int k = m.mult[i];
        Matrix b(k, k);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < k; ++c)
                b(r, c) = std::complex<double>(std::sin(1.0 + r + 2 * c + double(i)),
                                               std::cos(2.0 * r - c));
        blocks.push_back(0.5 * (b + b.adjoint().eval()));
    }
    ModuleMorphism f = ModuleMorphism::make(m, m, blocks);
    auto s1 = hcx::decompose_selfadjoint(f, 1);
    auto s4 = hcx::decompose_selfadjoint(f, 4);
    REQUIRE(s1.blocks.size() == s4.blocks.size());
    for (std::size_t i = 0; i < s1.blocks.size(); ++i) {
        CHECK(s1.blocks[i].eigenvalues == s4.blocks[i].eigenvalues);
        CHECK((s1.blocks[i].eigenvectors - s4.blocks[i].eigenvectors).norm() == 0.0);
    }
    CHECK(s1.laplacian_norm == s4.laplacian_norm);
}
