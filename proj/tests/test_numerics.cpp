#include <doctest.h>

#include "rissec/numerics.hpp"
#include "rissec/random.hpp"

using namespace rissec;

namespace {

CMat random_matrix(Rng &rng, int r, int c) {
  CMat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_normal(rng);
  return m;
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("matmul of identity, zero and j*j") {
    Rng rng = make_rng(7);
    const CMat A = random_matrix(rng, 2, 3);
    CHECK(matmul(CMat::Identity(2, 2), A) == A);
    CHECK(matmul(A, CMat::Zero(3, 4)).isZero(0.0));
    CMat j(1, 1);
    j(0, 0) = cdouble(0, 1);
    CHECK(matmul(j, j)(0, 0) == cdouble(-1, 0));
  }

  TEST_CASE("matmul rejects mismatched shapes") {
    CHECK_THROWS_AS(matmul(CMat::Zero(2, 3), CMat::Zero(2, 3)), ContractViolation);
  }

  TEST_CASE("hermitian conjugates and transposes") {
    CMat a(1, 1);
    a(0, 0) = cdouble(1, 1);
    CHECK(hermitian(a)(0, 0) == cdouble(1, -1));
    CMat d = CMat::Zero(3, 3);
    d.diagonal() << 1.0, -2.0, 3.5;
    CHECK(hermitian(d) == d);
  }

  TEST_CASE("hermitian of a product reverses the factors") {
    Rng rng = make_rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const CMat A = random_matrix(rng, 3, 3), B = random_matrix(rng, 3, 3);
      const CMat lhs = hermitian(matmul(A, B));
      const CMat rhs = matmul(hermitian(B), hermitian(A));
      CHECK((lhs - rhs).norm() <= 1e-12 * lhs.norm());
    }
  }

  TEST_CASE("hermitian is an involution bit-exactly") {
    Rng rng = make_rng(12);
    const CMat A = random_matrix(rng, 4, 5);
    CHECK(hermitian(hermitian(A)) == A);
  }

  TEST_CASE("frob_norm examples") {
    CHECK(frob_norm(CMat::Zero(3, 2)) == 0.0);
    CHECK(frob_norm(CMat::Identity(4, 4)) == doctest::Approx(2.0).epsilon(1e-15));
    CMat r(1, 2);
    r << cdouble(3, 0), cdouble(0, 4);
    CHECK(frob_norm(r) == doctest::Approx(5.0).epsilon(1e-15));
  }

  TEST_CASE("frob_norm equals sqrt trace of A A^H and scales with |c|") {
    Rng rng = make_rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const CMat A = random_matrix(rng, 3, 4);
      const double tr = matmul(A, hermitian(A)).trace().real();
      CHECK(frob_norm(A) == doctest::Approx(std::sqrt(tr)).epsilon(1e-12));
      const cdouble c = complex_normal(rng, 4.0);
      CHECK(frob_norm(CMat(c * A)) == doctest::Approx(std::abs(c) * frob_norm(A)).epsilon(1e-12));
    }
  }

  TEST_CASE("trace of AB equals trace of BA") {
    Rng rng = make_rng(14);
    for (int trial = 0; trial < 20; ++trial) {
      const CMat A = random_matrix(rng, 3, 5), B = random_matrix(rng, 5, 3);
      const cdouble d = matmul(A, B).trace() - matmul(B, A).trace();
      CHECK(std::abs(d) < 1e-10 * frob_norm(A) * frob_norm(B));
    }
  }

  TEST_CASE("power unit helpers") {
    CHECK(dbm_to_watts(20.0) == doctest::Approx(0.1));
    CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
    CHECK(watts_to_dbm(0.1) == doctest::Approx(20.0));
    CHECK(db_to_linear(-30.0) == doctest::Approx(1e-3));
  }
}
