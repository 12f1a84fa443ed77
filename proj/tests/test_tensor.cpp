#include "etd/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace etd;

namespace {

Matrix matrix_2x3() {
    Matrix m(2, 3);
    m(0, 0) = 1.0;
    m(0, 1) = 0.0;
    m(0, 2) = 2.0;
    m(1, 0) = -1.0;
    m(1, 1) = 3.0;
    m(1, 2) = 1.0;
    return m;
}

} // namespace

TEST_CASE("dot and matvec agree with hand-computed values") {
    const Vec a = {1.0, 2.0, 3.0};
    const Vec b = {4.0, -5.0, 6.0};
    CHECK(dot(a, b) == doctest::Approx(4.0 - 10.0 + 18.0));

    const Vec y = matvec(matrix_2x3(), a);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == doctest::Approx(1.0 + 6.0));
    CHECK(y[1] == doctest::Approx(-1.0 + 6.0 + 3.0));
}

TEST_CASE("matvec_transposed is matvec of the transpose") {
    const Vec x = {1.0, -1.0};
    const Vec y = matvec_transposed(matrix_2x3(), x);
    REQUIRE(y.size() == 3);
    CHECK(y[0] == doctest::Approx(1.0 + 1.0));
    CHECK(y[1] == doctest::Approx(0.0 - 3.0));
    CHECK(y[2] == doctest::Approx(2.0 - 1.0));
}

TEST_CASE("shape mismatches throw") {
    CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(matvec(matrix_2x3(), {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(matvec_transposed(matrix_2x3(), {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("sigmoid hits known fixed points") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(sigmoid(1e9) == doctest::Approx(1.0));
    CHECK(sigmoid(-1e9) == doctest::Approx(0.0));
    // sigma(ln 3) = 3/4.
    CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75));
}

TEST_CASE("softmax normalizes and preserves order") {
    const std::vector<double> p = softmax({1.0, 3.0, 2.0});
    REQUIRE(p.size() == 3);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(p[1] > p[2]);
    CHECK(p[2] > p[0]);
    // Invariant under a constant shift.
    const std::vector<double> q = softmax({101.0, 103.0, 102.0});
    for (size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(q[i]));
}

TEST_CASE("softmax is stable at extreme logits") {
    const std::vector<double> p = softmax({1000.0, 0.0, -1000.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(std::isfinite(p[1]));
    CHECK(std::isfinite(p[2]));
    CHECK(softmax({-745.0}).at(0) == 1.0);
}

TEST_CASE("hadamard, axpy and add_outer accumulate in place") {
    const Vec a = {1.0, 2.0};
    const Vec b = {3.0, -4.0};
    const Vec h = hadamard(a, b);
    CHECK(h[0] == doctest::Approx(3.0));
    CHECK(h[1] == doctest::Approx(-8.0));

    Vec acc = {1.0, 1.0};
    axpy(2.0, b, acc);
    CHECK(acc[0] == doctest::Approx(7.0));
    CHECK(acc[1] == doctest::Approx(-7.0));

    Matrix m(2, 2);
    add_outer(m, a, b); // m += a b^T
    CHECK(m(0, 0) == doctest::Approx(3.0));
    CHECK(m(0, 1) == doctest::Approx(-4.0));
    CHECK(m(1, 0) == doctest::Approx(6.0));
    CHECK(m(1, 1) == doctest::Approx(-8.0));
}

TEST_CASE("relu clamps negatives only") {
    const Vec r = relu({-2.0, 0.0, 3.0});
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 3.0);
}

TEST_CASE("concat joins in order") {
    const Vec c = concat({1.0, 2.0}, {3.0});
    REQUIRE(c.size() == 3);
    CHECK(c[0] == 1.0);
    CHECK(c[2] == 3.0);
}

TEST_CASE("l2_norm and all_finite") {
    CHECK(l2_norm({3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(all_finite({0.0, -1.0}));
    CHECK_FALSE(all_finite({1.0, std::numeric_limits<double>::infinity()}));
    CHECK_FALSE(all_finite({std::nan("")}));
}
