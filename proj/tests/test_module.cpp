#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "l2hodge/module.hpp"

using namespace l2hodge;
using hmod::HilbertModule;
using hmod::ModuleMorphism;
using vna::Matrix;
using vna::VnAlgebra;
using Catch::Approx;

namespace {

VnAlgebra two_block() {
    return VnAlgebra::make({{"m2", 2, 0.5, 1.0}, {"s", 1, 0.5, 1.0}});
}

}  // namespace

TEST_CASE("module dimensions", "[module]") {
    VnAlgebra a = two_block();
    // dim_tau(A acting on itself) = sum of block weights = 1.
    CHECK(hmod::dim_tau(hmod::regular_module(a)) == Approx(1.0));
    CHECK(hmod::dim_tau(hmod::zero_module(a)) == 0.0);
    CHECK(hmod::zero_module(a).is_zero());

    // mult (3, 2): 0.25 * 3 + 0.5 * 2 = 1.75, living on C^{2x3} + C^{1x2}.
    HilbertModule m = HilbertModule::make(a, {3, 2});
    CHECK(hmod::dim_tau(m) == Approx(1.75));
    CHECK(m.fiber_dim() == 8);
    CHECK_FALSE(m.is_zero());

    HilbertModule s = hmod::direct_sum(m, hmod::regular_module(a));
    CHECK(hmod::dim_tau(s) == Approx(2.75));

    REQUIRE_THROWS_AS(HilbertModule::make(a, {1}), Error);
    REQUIRE_THROWS_AS(HilbertModule::make(a, {1, -1}), Error);
}

TEST_CASE("finite generation report", "[module]") {
    VnAlgebra a = two_block();
    HilbertModule m = HilbertModule::make(a, {3, 2});
    auto g = hmod::check_finitely_generated(m);
    CHECK(g.finitely_generated);
    CHECK(g.sup_ratio == Approx(2.0));  // max(3/2, 2/1)
    CHECK(g.min_generators == 2);
}

TEST_CASE("staircase module", "[module]") {
    // dim = sum_{k<=K} k 2^-k = 2 - (K+2) 2^-K; the module needs K generators
    // although its dimension stays below 2.
    for (int K : {1, 3, 10}) {
        HilbertModule m = hmod::farber_example(K);
        double expected = 2.0 - (K + 2) * std::ldexp(1.0, -K);
        CHECK(hmod::dim_tau(m) == Approx(expected).margin(1e-12));
        auto g = hmod::check_finitely_generated(m);
        CHECK(g.sup_ratio == static_cast<double>(K));
        CHECK(g.min_generators == K);
    }
    CHECK(hmod::dim_tau(hmod::farber_example(1)) == Approx(0.5));
    CHECK(hmod::dim_tau(hmod::farber_example(3)) == Approx(1.375));
    REQUIRE_THROWS_AS(hmod::farber_example(0), Error);
}

TEST_CASE("morphism shape checking", "[module]") {
    VnAlgebra a = two_block();
    HilbertModule dom = HilbertModule::make(a, {2, 1});
    HilbertModule cod = HilbertModule::make(a, {1, 2});
    CHECK_NOTHROW(ModuleMorphism::make(dom, cod, {Matrix::Zero(1, 2), Matrix::Zero(2, 1)}));
    REQUIRE_THROWS_AS(ModuleMorphism::make(dom, cod, {Matrix::Zero(2, 1), Matrix::Zero(2, 1)}),
                      Error);
    REQUIRE_THROWS_AS(ModuleMorphism::make(dom, cod, {Matrix::Zero(1, 2)}), Error);
}

TEST_CASE("morphism calculus", "[module]") {
    VnAlgebra a = two_block();
    HilbertModule m = HilbertModule::make(a, {2, 1});
    ModuleMorphism id = hmod::identity_morphism(m);
    CHECK(hmod::operator_norm(id) == Approx(1.0));
    CHECK(hmod::trace_endomorphism(id).real() == Approx(hmod::dim_tau(m)));

    Matrix f0(2, 2), f1(1, 1);
    f0 << 1, std::complex<double>(0, 2), 0, -1;
    f1 << 3;
    ModuleMorphism f = ModuleMorphism::make(m, m, {f0, f1});

    // trace = 0.25 * (1 - 1) + 0.5 * 3 = 1.5
    CHECK(hmod::trace_endomorphism(f).real() == Approx(1.5));

    ModuleMorphism ff = compose(f, f);
    CHECK((ff.blocks[0] - f0 * f0).norm() == 0.0);

    // adjoint against composition: (g f)* = f* g*
    Matrix g0(2, 2), g1(1, 1);
    g0 << 0, 1, std::complex<double>(2, -1), 4;
    g1 << std::complex<double>(0, -2);
    ModuleMorphism g = ModuleMorphism::make(m, m, {g0, g1});
    ModuleMorphism lhs = adjoint_morphism(compose(g, f));
    ModuleMorphism rhs = compose(adjoint_morphism(f), adjoint_morphism(g));
    for (int i = 0; i < 2; ++i) CHECK((lhs.blocks[i] - rhs.blocks[i]).norm() < 1e-14);

    ModuleMorphism sum = add_morphisms(f, scale_morphism(-1.0, f));
    CHECK(hmod::operator_norm(sum) == 0.0);

    HilbertModule other = HilbertModule::make(a, {1, 1});
    ModuleMorphism z = hmod::zero_morphism(m, other);
    CHECK(hmod::operator_norm(z) == 0.0);
    REQUIRE_THROWS_AS(hmod::trace_endomorphism(z), Error);
    REQUIRE_THROWS_AS(compose(f, z), Error);
}
