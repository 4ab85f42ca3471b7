#include <doctest.h>

#include <cmath>

#include "fock_oracle.hpp"
#include "nmzi/circuit.hpp"
#include "nmzi/hybrid_state.hpp"
#include "test_support.hpp"

using namespace nmzi;
using nmzi::testing::Rng;

TEST_SUITE("hybrid_state") {
  TEST_CASE("coherent overlap of identical states is 1") {
    for (Complex a : {Complex{0, 0}, Complex{2, 0}, Complex{-1.3, 0.7}, Complex{0, 3}}) {
      const Complex ov = coherent_overlap(a, a);
      CHECK(ov.real() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(ov.imag()) < 1e-15);
    }
  }

  TEST_CASE("coherent overlap <0|1> matches the Fock-basis sum") {
    // Oracle: sum_n conj(c_n(0)) c_n(1), truncated at n = 40.
    const oracle::FockSpace one_mode(1, 1, 40);
    const auto c0 = one_mode.coherent({0, 0});
    const auto c1 = one_mode.coherent({1, 0});
    Complex fock{};
    for (std::size_t n = 0; n < c0.size(); ++n) fock += std::conj(c0[n]) * c1[n];
    CHECK(std::abs(fock - Complex{0.6065306597126334, 0}) < 1e-15);

    const Complex ov = coherent_overlap({0, 0}, {1, 0});
    CHECK(std::abs(ov - fock) < 1e-15);
  }

  TEST_CASE("coherent overlap magnitude is exp(-|a-b|^2/2)") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
      const Complex a = nmzi::testing::random_complex(rng, 3.0);
      const Complex b = nmzi::testing::random_complex(rng, 3.0);
      const double expected = std::exp(-0.5 * std::norm(a - b));
      CHECK(std::abs(std::abs(coherent_overlap(a, b)) - expected) < 1e-12);
      CHECK(std::abs(coherent_overlap(a, b)) <= 1.0 + 1e-15);
    }
  }

  TEST_CASE("inner product basics") {
    const HybridState s = HybridState::single(3, 0, {1, 0}, {{0.8, -0.2}});
    CHECK(std::abs(inner_product(as_bra(s), s) - Complex{1, 0}) < 1e-15);

    const HybridState other = HybridState::single(3, 2, {1, 0}, {{0.8, -0.2}});
    CHECK(inner_product(as_bra(s), other) == Complex{});
  }

  TEST_CASE("inner product rejects shape mismatch") {
    const HybridState a = HybridState::single(3, 0, {1, 0}, {{1, 0}});
    const HybridState b = HybridState::single(2, 0, {1, 0}, {{1, 0}});
    const HybridState c = HybridState::single(3, 0, {1, 0}, {{1, 0}, {0, 0}});
    CHECK_THROWS_AS(inner_product(as_bra(a), b), ShapeError);
    CHECK_THROWS_AS(inner_product(as_bra(a), c), ShapeError);
  }

  TEST_CASE("state at L3p has norm r^2 + t^2 = 1") {
    const Circuit c = build_nested_mzi(0.6, {2, 0}, 0.3, 0.0);
    const HybridState s = run_forward(c).ket("L3p");
    CHECK(s.size() == 2);
    CHECK(squared_norm(s) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("inner product is conjugate symmetric") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
      const HybridState x = nmzi::testing::random_state(rng, 3, 2, 4, 1.5);
      const HybridState y = nmzi::testing::random_state(rng, 3, 2, 4, 1.5);
      const Complex xy = inner_product(as_bra(x), y);
      const Complex yx = inner_product(as_bra(y), x);
      CHECK(std::abs(xy - std::conj(yx)) < 1e-14);
    }
  }

  TEST_CASE("inner product agrees with the truncated Fock oracle") {
    Rng rng(13);
    const oracle::FockSpace space(3, 2, 40);
    for (int i = 0; i < 20; ++i) {
      const HybridState x = nmzi::testing::random_state(rng, 3, 2, 3, 1.0);
      const HybridState y = nmzi::testing::random_state(rng, 3, 2, 3, 1.0);
      const Complex fock = space.embed(x).dot(space.embed(y));
      CHECK(std::abs(inner_product(as_bra(x), y) - fock) < 1e-8);
    }
  }

  TEST_CASE("merge sums identical branches") {
    const std::vector<Complex> probes{{1, 1}};
    const HybridState s(2, 1, {Branch{1, {0.3, 0}, probes}, Branch{1, {0.2, 0}, probes}});
    const HybridState m = merge_branches(s);
    REQUIRE(m.size() == 1);
    CHECK(m.branches()[0].amp.real() == doctest::Approx(0.5));
  }

  TEST_CASE("merge drops null branches and probes differing beyond tol stay separate") {
    const HybridState s(2, 1,
                        {Branch{0, {0, 0}, {{1, 0}}}, Branch{1, {0.5, 0}, {{1, 0}}},
                         Branch{1, {0.5, 0}, {{1 + 1e-9, 0}}}});
    const HybridState m = merge_branches(s);
    CHECK(m.size() == 2);
    CHECK(merge_branches(s, 1e-8).size() == 1);
  }

  TEST_CASE("merge of the inner interferometer output cancels the dark mode") {
    const Circuit c = build_nested_mzi(0.6, {2, 0}, 0.3, 0.0);
    const HybridState s = run_forward(c).ket("L3");
    CHECK(s.size() == 2);
    for (const Branch& b : s.branches()) CHECK(b.mode != 1);
  }

  TEST_CASE("merge rejects negative tolerance") {
    const HybridState s = HybridState::single(2, 0, {1, 0}, {});
    CHECK_THROWS_AS(merge_branches(s, -1.0), std::invalid_argument);
  }

  TEST_CASE("merge is idempotent and canonical") {
    Rng rng(17);
    for (int i = 0; i < 50; ++i) {
      HybridState s = nmzi::testing::random_state(rng, 3, 2, 6, 1.0);
      // Duplicate some branches to give merge something to do.
      std::vector<Branch> b(s.branches().begin(), s.branches().end());
      b.push_back(b.front());
      s = s.with_branches(b);
      const HybridState once = merge_branches(s);
      CHECK(merge_branches(once) == once);
      for (std::size_t j = 1; j < once.size(); ++j) {
        CHECK(once.branches()[j - 1].mode <= once.branches()[j].mode);
      }
      CHECK(std::abs(squared_norm(once) - squared_norm(s)) < 1e-12 * s.size());
    }
  }

  TEST_CASE("construction validates branches") {
    CHECK_THROWS_AS(HybridState(3, 1, {Branch{3, {1, 0}, {{0, 0}}}}), IndexError);
    CHECK_THROWS_AS(HybridState(3, 1, {Branch{0, {1, 0}, {}}}), ShapeError);
    CHECK_THROWS_AS(HybridState(3, 1, {Branch{0, {NAN, 0}, {{0, 0}}}}), std::domain_error);
    CHECK_THROWS_AS(HybridState(0, 1), ShapeError);
  }
}
