#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nmzi/circuit.hpp"

namespace nmzi {

enum class ParseErrorKind {
  missing_header,
  unknown_keyword,
  unknown_key,
  malformed_number,
  malformed_complex,
  index_out_of_range,
  duplicate_label,
  missing_source,
  invalid_value,
};

std::string_view to_string(ParseErrorKind kind);

/// Diagnostic carrying the 1-based line and the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t line, std::string token, const std::string& detail);

  ParseErrorKind kind() const { return kind_; }
  std::size_t line() const { return line_; }
  const std::string& token() const { return token_; }

 private:
  ParseErrorKind kind_;
  std::size_t line_;
  std::string token_;
};

/**
 * Parse the line-oriented circuit format:
 *
 *     modes 3 probes 2
 *     source mode=0 probe0=2.8284+0i probe1=0+0i
 *     bs sys 0 1 r=0.6
 *     bs probe 0 1 r=0.70710678
 *     phase sys 1 phi=0.01
 *     phase probe 1 phi=0 scan
 *     kerr sys=1,2 probe=0 eps_tau=0.3 eta_tau=0.0 [inner_phase=0]
 *     snapshot L1
 *     postselect mode=0 [at=L3p]
 *
 * `#` starts a comment. The header must come first and the source line is
 * mandatory.
 */
Circuit parse_circuit(std::string_view text);

/// Inverse of parse_circuit; doubles are written with 17 significant digits.
std::string serialize_circuit(const Circuit& circuit);

/// `a+bi`, `a-bi`, `a` or `bi`.
Complex parse_complex(std::string_view token);
std::string format_complex(Complex z, int precision = 17);

}  // namespace nmzi
