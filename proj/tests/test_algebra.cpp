#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "l2hodge/algebra.hpp"

using namespace l2hodge;
using vna::AlgebraElement;
using vna::FactorBlock;
using vna::Matrix;
using vna::VnAlgebra;
using Catch::Approx;

namespace {

// M_2 with weight 1/2 plus a scalar factor with weight 1/2.
VnAlgebra two_block() {
    return VnAlgebra::make({{"m2", 2, 0.5, 1.0}, {"s", 1, 0.5, 1.0}});
}

AlgebraElement element(const VnAlgebra& a, const Matrix& m2, const Matrix& s) {
    return AlgebraElement{a, {m2, s}};
}

}  // namespace

TEST_CASE("algebra construction validates its blocks", "[algebra]") {
    REQUIRE_THROWS_AS(VnAlgebra::make({}), Error);
    REQUIRE_THROWS_AS(VnAlgebra::make({{"a", 1, 0.5, 1.0}, {"a", 1, 0.5, 1.0}}), Error);
    REQUIRE_THROWS_AS(VnAlgebra::make({{"a", 0, 1.0, 1.0}}), Error);
    REQUIRE_THROWS_AS(VnAlgebra::make({{"a", 1, -1.0, 1.0}}), Error);
    // weights 0.5 + 0.6 != 1
    try {
        VnAlgebra::make({{"a", 1, 0.5, 1.0}, {"b", 1, 0.6, 1.0}});
        FAIL("expected not_normalized");
    } catch (const Error& e) {
        CHECK(e.code() == errc::not_normalized);
        CHECK(e.kind() == error_kind::validation);
    }
    CHECK_NOTHROW(VnAlgebra::make({{"a", 1, 0.3, 1.0}, {"b", 2, 0.7, 1.0}}));
}

TEST_CASE("per-eigenvalue weights nu_i = w_i / n_i", "[algebra]") {
    VnAlgebra a = two_block();
    CHECK(a.size() == 2);
    CHECK(a.weight(0) == 0.5);
    CHECK(a.nu(0) == 0.25);
    CHECK(a.nu(1) == 0.5);
    CHECK(VnAlgebra::scalar().nu(0) == 1.0);
}

TEST_CASE("normalized trace", "[algebra]") {
    VnAlgebra a = two_block();
    CHECK(vna::trace(vna::identity_element(a)).real() == Approx(1.0));
    CHECK(vna::trace(vna::zero_element(a)) == std::complex<double>(0.0));

    // tau = 0.5 * tr(m2)/2 + 0.5 * tr(s): ((1+4)/2) * 0.5 + 7 * 0.5 = 4.75
    Matrix m2(2, 2);
    m2 << 1, 2, 3, 4;
    Matrix s(1, 1);
    s << 7;
    CHECK(vna::trace(element(a, m2, s)).real() == Approx(4.75));
}

TEST_CASE("trace is tracial and faithful", "[algebra]") {
    VnAlgebra a = two_block();
    Matrix x2(2, 2), y2(2, 2), x1(1, 1), y1(1, 1);
    x2 << std::complex<double>(1, 2), std::complex<double>(0, -1), 3, std::complex<double>(2, 2);
    y2 << 5, std::complex<double>(-1, 1), std::complex<double>(0, 4), -2;
    x1 << std::complex<double>(2, -3);
    y1 << std::complex<double>(-1, 1);
    AlgebraElement x = element(a, x2, x1), y = element(a, y2, y1);
    auto txy = vna::trace(vna::multiply(x, y));
    auto tyx = vna::trace(vna::multiply(y, x));
    CHECK(std::abs(txy - tyx) < 1e-14);

    // tau(x* x) > 0 for x != 0, and tau(x* x) = 0 forces x = 0.
    auto pos = vna::trace(vna::multiply(vna::adjoint(x), x));
    CHECK(pos.real() > 0.0);
    CHECK(std::abs(pos.imag()) < 1e-14);
    auto z = vna::zero_element(a);
    CHECK(vna::trace(vna::multiply(vna::adjoint(z), z)) == std::complex<double>(0.0));
}

TEST_CASE("element arithmetic", "[algebra]") {
    VnAlgebra a = two_block();
    Matrix m2(2, 2), s(1, 1);
    m2 << 1, 2, 3, 4;
    s << 7;
    AlgebraElement x = element(a, m2, s);
    AlgebraElement two_x = vna::add(x, x);
    CHECK(two_x.blocks[0](1, 0) == std::complex<double>(6.0));
    AlgebraElement sx = vna::scale(std::complex<double>(0, 1), x);
    CHECK(sx.blocks[1](0, 0) == std::complex<double>(0, 7));

    // (xy)* = y* x*
    Matrix y2(2, 2), y1(1, 1);
    y2 << 0, std::complex<double>(1, 1), -2, 5;
    y1 << std::complex<double>(3, -2);
    AlgebraElement y = element(a, y2, y1);
    AlgebraElement lhs = vna::adjoint(vna::multiply(x, y));
    AlgebraElement rhs = vna::multiply(vna::adjoint(y), vna::adjoint(x));
    for (int i = 0; i < 2; ++i) CHECK((lhs.blocks[i] - rhs.blocks[i]).norm() < 1e-14);

    AlgebraElement bad{a, {m2}};
    REQUIRE_THROWS_AS(vna::check_element(bad), Error);
}

TEST_CASE("C*-norm", "[algebra]") {
    VnAlgebra a = two_block();
    Matrix m2 = Matrix::Zero(2, 2), s(1, 1);
    m2(0, 0) = 3;
    m2(1, 1) = 4;
    s << -5;
    AlgebraElement x = element(a, m2, s);
    CHECK(vna::cstar_norm(x) == Approx(5.0));

    // ||x* x|| = ||x||^2
    CHECK(vna::cstar_norm(vna::multiply(vna::adjoint(x), x)) == Approx(25.0));

    // operator norm of a non-normal matrix: [[0, 3], [0, 0]] has norm 3.
    Matrix n(2, 2);
    n << 0, 3, 0, 0;
    CHECK(vna::matrix_operator_norm(n) == Approx(3.0));
    CHECK(vna::matrix_operator_norm(Matrix::Zero(0, 0)) == 0.0);
}
