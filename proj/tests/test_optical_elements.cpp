#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fock_oracle.hpp"
#include "nmzi/circuit.hpp"
#include "nmzi/optical_elements.hpp"
#include "test_support.hpp"

using namespace nmzi;
using nmzi::testing::distance2;
using nmzi::testing::Rng;

namespace {

const Complex I{0, 1};

Complex mode_sum(const HybridState& s, int mode) {
  Complex acc{};
  for (const Branch& b : s.branches()) {
    if (b.mode == mode) acc += b.amp;
  }
  return acc;
}

}  // namespace

TEST_SUITE("optical_elements") {
  TEST_CASE("r^2 + t^2 = 1") {
    for (double r : {0.0, 0.1, 0.6, balanced_reflectivity(), 0.99, 1.0}) {
      const BeamSplitterSpec bs{0, 1, r};
      CHECK(std::abs(r * r + bs.transmissivity() * bs.transmissivity() - 1.0) < 1e-15);
    }
  }

  TEST_CASE("first splitter takes (1,0,0) to (-ir, t, 0)") {
    const HybridState in = HybridState::single(3, 0, {1, 0}, {});
    const HybridState out = merge_branches(apply_beam_splitter(in, {0, 1, 0.6}, Subsystem::system));
    CHECK(std::abs(mode_sum(out, 0) - Complex{0, -0.6}) < 1e-15);
    CHECK(std::abs(mode_sum(out, 1) - Complex{0.8, 0}) < 1e-15);
    CHECK(mode_sum(out, 2) == Complex{});
  }

  TEST_CASE("balanced splitter on (t, 0) over modes 1,2 gives (-it/sqrt2, t/sqrt2)") {
    const double t = 0.8;
    const HybridState in = HybridState::single(3, 1, {t, 0}, {});
    const HybridState out = merge_branches(
        apply_beam_splitter(in, {1, 2, balanced_reflectivity()}, Subsystem::system));
    CHECK(std::abs(mode_sum(out, 1) - (-I * t / std::numbers::sqrt2)) < 1e-15);
    CHECK(std::abs(mode_sum(out, 2) - Complex{t / std::numbers::sqrt2, 0}) < 1e-15);
  }

  TEST_CASE("r = 0 fully transmits: the two labelled paths swap") {
    // U(0) = [[0, 1], [1, 0]] in the fixed convention.
    const HybridState in(3, 1, {Branch{0, {0.6, 0}, {{1, 0}}}, Branch{1, {0, 0.8}, {{0, 1}}}});
    const HybridState out = merge_branches(apply_beam_splitter(in, {0, 1, 0.0}, Subsystem::system));
    const HybridState expected =
        merge_branches(HybridState(3, 1, {Branch{1, {0.6, 0}, {{1, 0}}}, Branch{0, {0, 0.8}, {{0, 1}}}}));
    CHECK(out == expected);
  }

  TEST_CASE("r = 1 is a pure -i phase on both modes") {
    const HybridState in(3, 0, {Branch{0, {0.6, 0}, {}}, Branch{1, {0.8, 0}, {}}});
    const HybridState out = merge_branches(apply_beam_splitter(in, {0, 1, 1.0}, Subsystem::system));
    CHECK(std::abs(mode_sum(out, 0) - Complex{0, -0.6}) < 1e-15);
    CHECK(std::abs(mode_sum(out, 1) - Complex{0, -0.8}) < 1e-15);
  }

  TEST_CASE("probe splitter transforms coherent amplitudes linearly") {
    const Complex a{1.2, -0.4};
    const Complex b{0.3, 0.9};
    const double r = 0.35;
    const double t = std::sqrt(1 - r * r);
    const HybridState in = HybridState::single(2, 0, {1, 0}, {a, b});
    const HybridState out = apply_beam_splitter(in, {0, 1, r}, Subsystem::probe);
    REQUIRE(out.size() == 1);
    CHECK(std::abs(out.branches()[0].probes[0] - (-I * r * a + t * b)) < 1e-15);
    CHECK(std::abs(out.branches()[0].probes[1] - (t * a - I * r * b)) < 1e-15);
  }

  TEST_CASE("Kerr rotates the probe only for photons inside the medium") {
    const Complex alpha{2, 0};
    const KerrSpec kerr{{1, 2}, 0, 0.4, 0.0};
    const HybridState inner = HybridState::single(3, 2, {0.5, 0}, {alpha, I * alpha});
    const HybridState out = apply_kerr(inner, kerr);
    CHECK(std::abs(out.branches()[0].probes[0] - alpha * std::exp(-I * 0.4)) < 1e-15);
    CHECK(out.branches()[0].probes[1] == I * alpha);
    CHECK(out.branches()[0].amp == Complex{0.5, 0});

    const HybridState arm_a = HybridState::single(3, 0, {0.5, 0}, {alpha, I * alpha});
    CHECK(apply_kerr(arm_a, kerr) == arm_a);

    const KerrSpec off{{1, 2}, 0, 0.0, 0.0};
    CHECK(apply_kerr(inner, off) == inner);
  }

  TEST_CASE("Kerr cross term is inert for one photon; inner phase knob is not") {
    const HybridState inner = HybridState::single(3, 1, {1, 0}, {{1, 0}});
    const KerrSpec eta_only{{1, 2}, 0, 0.0, 0.9};
    CHECK(apply_kerr(inner, eta_only) == inner);

    const KerrSpec prefactor{{1, 2}, 0, 0.0, 0.9, 0.9};
    CHECK(std::abs(apply_kerr(inner, prefactor).branches()[0].amp - std::exp(-I * 0.9)) < 1e-15);
  }

  TEST_CASE("phase elements") {
    const HybridState s = HybridState::single(3, 1, {0.3, 0.4}, {{1, 0}});
    CHECK(apply_phase(s, {Subsystem::system, 1, 0.0}) == s);
    const HybridState flipped = apply_phase(s, {Subsystem::system, 1, std::numbers::pi});
    CHECK(std::abs(flipped.branches()[0].amp + Complex{0.3, 0.4}) < 1e-15);
    CHECK(apply_phase(s, {Subsystem::system, 0, 1.0}) == s);
    const HybridState probe = apply_phase(s, {Subsystem::probe, 0, 0.5});
    CHECK(std::abs(probe.branches()[0].probes[0] - std::exp(I * 0.5)) < 1e-15);
  }

  TEST_CASE("small inner-arm phase leaks t*delta/2 through the dark port") {
    // Oracle: explicit 2x2 products U diag(e^{i delta}, 1) U (t, 0)^T.
    const double t = 0.8;
    const auto oracle_leak = [&](double delta) {
      const Eigen::Matrix2cd u = oracle::splitter(balanced_reflectivity(), false);
      Eigen::Matrix2cd phase = Eigen::Matrix2cd::Identity();
      phase(0, 0) = std::exp(I * delta);
      const Eigen::Vector2cd out = u * phase * u * Eigen::Vector2cd(t, 0);
      return out(0);
    };
    const auto engine_leak = [&](double delta) {
      HybridState s = HybridState::single(3, 1, {t, 0}, {});
      const BeamSplitterSpec bs2{1, 2, balanced_reflectivity()};
      s = apply_beam_splitter(s, bs2, Subsystem::system);
      s = apply_phase(s, {Subsystem::system, 1, delta});
      s = merge_branches(apply_beam_splitter(s, bs2, Subsystem::system));
      return mode_sum(s, 1);
    };
    for (double delta : {1e-4, 1e-3, 1e-2, 0.3}) {
      CHECK(std::abs(engine_leak(delta) - oracle_leak(delta)) < 1e-15);
    }
    // Finite-difference slope of |leak| at delta = 1e-4 approaches t/2.
    const double h = 1e-4;
    const double slope = std::abs(engine_leak(h)) / h;
    CHECK(slope == doctest::Approx(t / 2).epsilon(1e-4));
    CHECK(std::abs(std::abs(engine_leak(h)) - t * h / 2) < 1e-11);
  }

  TEST_CASE("index validation") {
    const HybridState s = HybridState::single(3, 0, {1, 0}, {{1, 0}});
    CHECK_THROWS_AS(apply_beam_splitter(s, {0, 3, 0.5}, Subsystem::system), IndexError);
    CHECK_THROWS_AS(apply_beam_splitter(s, {0, 1, 0.5}, Subsystem::probe), IndexError);
    CHECK_THROWS_AS(apply_beam_splitter(s, {1, 1, 0.5}, Subsystem::system), std::invalid_argument);
    CHECK_THROWS_AS(apply_beam_splitter(s, {0, 1, 1.5}, Subsystem::system), std::invalid_argument);
    CHECK_THROWS_AS(apply_kerr(s, KerrSpec{{1}, 1, 0.1, 0}), IndexError);
    CHECK_THROWS_AS(apply_kerr(s, KerrSpec{{1, 1}, 0, 0.1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(apply_phase(s, {Subsystem::probe, 2, 0.1}), IndexError);
  }

  TEST_CASE("every element preserves the norm") {
    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
      const HybridState s = nmzi::testing::random_state(rng, 3, 2, 4, 2.0);
      const Element e = nmzi::testing::random_element(rng, 3, 2);
      const HybridState out = apply_element(s, e);
      CHECK(std::abs(squared_norm(out) - squared_norm(s)) < 1e-12);
    }
  }

  TEST_CASE("an element followed by its adjoint restores the state") {
    Rng rng(29);
    for (int i = 0; i < 100; ++i) {
      const HybridState s = nmzi::testing::random_state(rng, 3, 2, 3, 2.0);
      const Element e = nmzi::testing::random_element(rng, 3, 2);
      const HybridState there = apply_element(s, e);
      const HybridState back = as_ket(apply_element(as_bra(there), e));
      CHECK(distance2(merge_branches(back), s) < 1e-12);
    }
  }

  TEST_CASE("Kerr commutes with system splitters on disjoint modes") {
    Rng rng(31);
    for (int i = 0; i < 50; ++i) {
      const HybridState s = nmzi::testing::random_state(rng, 4, 2, 4, 1.5);
      const KerrSpec kerr{{2, 3}, nmzi::testing::uniform_int(rng, 0, 1),
                          nmzi::testing::uniform(rng, -3, 3), nmzi::testing::uniform(rng, -3, 3)};
      const BeamSplitterSpec bs{0, 1, nmzi::testing::uniform(rng, 0, 1)};
      const HybridState ab = apply_kerr(apply_beam_splitter(s, bs, Subsystem::system), kerr);
      const HybridState ba = apply_beam_splitter(apply_kerr(s, kerr), bs, Subsystem::system);
      CHECK(distance2(ab, ba) < 1e-12);
    }
  }

  TEST_CASE("probe splitter matches the Fock oracle") {
    Rng rng(37);
    const oracle::FockSpace space(2, 2, 40);
    for (int i = 0; i < 10; ++i) {
      const HybridState s = nmzi::testing::random_state(rng, 2, 2, 2, 1.0);
      const double r = nmzi::testing::uniform(rng, 0, 1);
      const BeamSplitterElement e{Subsystem::probe, {0, 1, r}};
      const oracle::Vec expected = space.apply(space.embed(s), e);
      const oracle::Vec got = space.embed(apply_element(s, Element{e}));
      CHECK(1.0 - oracle::fidelity(expected, got) < 1e-8);
      CHECK((expected - got).norm() < 1e-8);
    }
  }
}
