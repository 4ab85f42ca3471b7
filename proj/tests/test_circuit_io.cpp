#include <doctest.h>

#include <string>

#include "nmzi/circuit_io.hpp"
#include "test_support.hpp"

using namespace nmzi;

namespace {

const char* kExample = R"(modes 3 probes 2
source mode=0 probe0=2.8284+0i probe1=0+0i
bs sys 0 1 r=0.6
snapshot L1
bs sys 1 2 r=0.70710678
bs probe 0 1 r=0.70710678
snapshot L2
kerr sys=1,2 probe=0 eps_tau=0.3 eta_tau=0.0
snapshot L2p
bs sys 1 2 r=0.70710678
snapshot L3
bs probe 0 1 r=0.70710678
snapshot L3p
bs sys 0 1 r=0.6
postselect mode=0
)";

ParseErrorKind kind_of(const std::string& text) {
  try {
    parse_circuit(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return ParseErrorKind::invalid_value;
}

}  // namespace

TEST_SUITE("circuit_io") {
  TEST_CASE("complex literals") {
    CHECK(parse_complex("2.8284+0i") == Complex{2.8284, 0});
    CHECK(parse_complex("1-2i") == Complex{1, -2});
    CHECK(parse_complex("-1.5e-3+2.5e+1i") == Complex{-1.5e-3, 25});
    CHECK(parse_complex("3") == Complex{3, 0});
    CHECK(parse_complex("-2i") == Complex{0, -2});
    CHECK(parse_complex("i") == Complex{0, 1});
    CHECK(parse_complex("1-i") == Complex{1, -1});
    CHECK_THROWS(parse_complex("1+2j"));
    CHECK_THROWS(parse_complex("abc"));
    CHECK_THROWS(parse_complex(""));
  }

  TEST_CASE("example file parses into a 3-mode, 2-probe circuit with 12 elements") {
    const Circuit c = parse_circuit(kExample);
    CHECK(c.m_modes() == 3);
    CHECK(c.k_probes() == 2);
    CHECK(c.elements().size() == 12);
    CHECK(c.source().mode == 0);
    CHECK(c.source().probes[0] == Complex{2.8284, 0});
    CHECK(c.postselect_mode() == 0);
    CHECK(c.readout_stage() == "final");
    const auto* kerr = std::get_if<KerrSpec>(&c.elements()[5]);
    REQUIRE(kerr != nullptr);
    CHECK(kerr->system_modes == std::vector<int>{1, 2});
    CHECK(kerr->epsilon_tau == 0.3);
  }

  TEST_CASE("comments and blank lines are ignored") {
    const std::string text = "# header comment\n\n" + std::string(kExample) + "   # trailing\n";
    CHECK(parse_circuit(text) == parse_circuit(kExample));
  }

  TEST_CASE("index out of range names the line") {
    const std::string text = "modes 3 probes 0\nsource mode=0\nbs sys 0 5 r=0.5\n";
    try {
      parse_circuit(text);
      FAIL("expected an error");
    } catch (const ParseError& e) {
      CHECK(e.kind() == ParseErrorKind::index_out_of_range);
      CHECK(e.line() == 3);
      CHECK(e.token() == "5");
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("each failure has its own diagnostic") {
    CHECK(kind_of("# only comments\n# nothing else\n") == ParseErrorKind::missing_source);
    CHECK(kind_of("modes 3 probes 0\nbs sys 0 1 r=0.5\n") == ParseErrorKind::missing_source);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nmirror 0\n") ==
          ParseErrorKind::unknown_keyword);
    CHECK(kind_of("frobnicate\n") == ParseErrorKind::unknown_keyword);
    CHECK(kind_of("source mode=0\nmodes 3 probes 0\n") == ParseErrorKind::missing_header);
    CHECK(kind_of("modes 3 probes 1\nsource mode=0 probe0=1+2j\n") ==
          ParseErrorKind::malformed_complex);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nsnapshot A\nsnapshot A\n") ==
          ParseErrorKind::duplicate_label);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nsnapshot final\n") ==
          ParseErrorKind::duplicate_label);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nbs sys 0 1 q=0.5\n") ==
          ParseErrorKind::unknown_key);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nbs sys 0 1 r=abc\n") ==
          ParseErrorKind::malformed_number);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\nbs sys 0 1 r=1.5\n") ==
          ParseErrorKind::invalid_value);
    CHECK(kind_of("modes 3 probes 0\nsource mode=7\n") == ParseErrorKind::index_out_of_range);
    CHECK(kind_of("modes 3 probes 0\nsource mode=0\npostselect mode=0 at=L9\n") ==
          ParseErrorKind::invalid_value);
  }

  TEST_CASE("serialize then parse reproduces the circuit") {
    CHECK(parse_circuit(serialize_circuit(parse_circuit(kExample))) == parse_circuit(kExample));

    NestedMziParams p{0.37, {1.1, -0.4}, 0.77, 0.21, true};
    const Circuit preset = build_nested_mzi(p);
    const Circuit back = parse_circuit(serialize_circuit(preset));
    CHECK(back == preset);
    CHECK(back.readout_stage() == "L3p");

    nmzi::testing::Rng rng(43);
    for (int i = 0; i < 30; ++i) {
      Circuit c(3, 2, Source{1, {nmzi::testing::random_complex(rng, 2), nmzi::testing::random_complex(rng, 2)}});
      for (int e = 0; e < 8; ++e) c.add(nmzi::testing::random_element(rng, 3, 2));
      c.snapshot("S");
      c.add(PhaseSpec{Subsystem::probe, 1, 0.25, true});
      c.set_postselect(2, "S");
      CHECK(parse_circuit(serialize_circuit(c)) == c);
    }
  }
}
