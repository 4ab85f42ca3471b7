#include "nmzi/circuit_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

namespace nmzi {

namespace {

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::optional<Complex> try_complex(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.back() != 'i') {
    const auto re = to_double(s);
    return re ? std::optional<Complex>(Complex{*re, 0.0}) : std::nullopt;
  }
  s.remove_suffix(1);
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos) {
    if (s.empty() || s == "+" || s == "-") {
      return Complex{0.0, s == "-" ? -1.0 : 1.0};
    }
    const auto im = to_double(s);
    return im ? std::optional<Complex>(Complex{0.0, *im}) : std::nullopt;
  }
  const auto re = to_double(s.substr(0, split));
  std::string_view im_text = s.substr(split);
  std::optional<double> im;
  if (im_text == "+" || im_text == "-") {
    im = im_text == "-" ? -1.0 : 1.0;
  } else {
    im = to_double(im_text);
  }
  if (!re || !im) return std::nullopt;
  return Complex{*re, *im};
}

struct Line {
  std::size_t number;
  std::vector<std::string> tokens;
};

class Parser {
 public:
  explicit Parser(std::string_view text) { split_lines(text); }

  Circuit parse();

 private:
  void split_lines(std::string_view text) {
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string_view raw = text.substr(start, end - start);
      ++number;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) {
        raw = raw.substr(0, hash);
      }
      std::istringstream in{std::string(raw)};
      Line line{number, {}};
      for (std::string tok; in >> tok;) line.tokens.push_back(tok);
      if (!line.tokens.empty()) lines_.push_back(std::move(line));
      start = end + 1;
    }
    last_line_ = number;
  }

  [[noreturn]] void fail(ParseErrorKind kind, std::size_t line, const std::string& token,
                         const std::string& detail) const {
    throw ParseError(kind, line, token, detail);
  }

  int parse_int(const Line& l, const std::string& tok) const {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      fail(ParseErrorKind::malformed_number, l.number, tok, "expected an integer");
    }
    return value;
  }

  double parse_real(const Line& l, const std::string& tok, std::string_view text) const {
    const auto v = to_double(text);
    if (!v) fail(ParseErrorKind::malformed_number, l.number, tok, "expected a real number");
    return *v;
  }

  Complex parse_cplx(const Line& l, const std::string& tok, std::string_view text) const {
    const auto v = try_complex(text);
    if (!v) fail(ParseErrorKind::malformed_complex, l.number, tok, "expected a+bi");
    return *v;
  }

  int checked_index(const Line& l, const std::string& tok, int value, int bound,
                    const char* what) const {
    if (value < 0 || value >= bound) {
      fail(ParseErrorKind::index_out_of_range, l.number, tok,
           fmt::format("{} index {} outside [0, {})", what, value, bound));
    }
    return value;
  }

  /// Split `key=value`; the key must be one of `allowed`.
  std::pair<std::string, std::string> key_value(const Line& l, const std::string& tok,
                                                std::initializer_list<std::string_view> allowed)
      const {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      fail(ParseErrorKind::invalid_value, l.number, tok, "expected key=value");
    }
    std::string key = tok.substr(0, eq);
    for (std::string_view a : allowed) {
      if (key == a) return {key, tok.substr(eq + 1)};
    }
    fail(ParseErrorKind::unknown_key, l.number, tok, fmt::format("unknown key '{}'", key));
  }

  Subsystem subsystem(const Line& l, const std::string& tok) const {
    if (tok == "sys") return Subsystem::system;
    if (tok == "probe") return Subsystem::probe;
    fail(ParseErrorKind::invalid_value, l.number, tok, "expected 'sys' or 'probe'");
  }

  void expect_arity(const Line& l, std::size_t lo, std::size_t hi) const {
    if (l.tokens.size() < lo || l.tokens.size() > hi) {
      fail(ParseErrorKind::invalid_value, l.number, l.tokens.front(),
           fmt::format("'{}' takes {} to {} fields, got {}", l.tokens.front(), lo - 1, hi - 1,
                       l.tokens.size() - 1));
    }
  }

  void parse_element(const Line& l, Circuit& c);

  const Line* postselect_line_ = nullptr;

  std::vector<Line> lines_;
  std::size_t last_line_ = 0;
};

Circuit Parser::parse() {
  if (lines_.empty() || lines_.front().tokens.front() != "modes") {
    const std::size_t n = lines_.empty() ? last_line_ : lines_.front().number;
    const std::string tok = lines_.empty() ? std::string() : lines_.front().tokens.front();
    // A file that is all comments is missing everything, the source included.
    if (lines_.empty()) fail(ParseErrorKind::missing_source, n, tok, "no source line");
    static constexpr std::string_view known[] = {"source", "bs",       "phase",
                                                 "kerr",   "snapshot", "postselect"};
    if (std::find(std::begin(known), std::end(known), tok) == std::end(known)) {
      fail(ParseErrorKind::unknown_keyword, n, tok, fmt::format("unknown keyword '{}'", tok));
    }
    fail(ParseErrorKind::missing_header, n, tok, "first line must be 'modes M probes K'");
  }
  const Line& header = lines_.front();
  if (header.tokens.size() != 4 || header.tokens[2] != "probes") {
    fail(ParseErrorKind::missing_header, header.number, header.tokens.back(),
         "expected 'modes M probes K'");
  }
  const int m = parse_int(header, header.tokens[1]);
  const int k = parse_int(header, header.tokens[3]);
  if (m < 1 || k < 0) {
    fail(ParseErrorKind::invalid_value, header.number, header.tokens[1], "invalid shape");
  }

  const Line* source_line = nullptr;
  for (std::size_t i = 1; i < lines_.size(); ++i) {
    const std::string& kw = lines_[i].tokens.front();
    if (kw == "source") {
      if (source_line != nullptr) {
        fail(ParseErrorKind::invalid_value, lines_[i].number, kw, "second source line");
      }
      source_line = &lines_[i];
    } else if (kw == "modes") {
      fail(ParseErrorKind::invalid_value, lines_[i].number, kw, "second header line");
    }
  }
  if (source_line == nullptr) {
    fail(ParseErrorKind::missing_source, last_line_, "", "no source line");
  }

  Source source{0, std::vector<Complex>(static_cast<std::size_t>(k))};
  {
    const Line& l = *source_line;
    std::vector<std::string> keys{"mode"};
    for (int p = 0; p < k; ++p) keys.push_back(fmt::format("probe{}", p));
    for (std::size_t i = 1; i < l.tokens.size(); ++i) {
      const std::string& tok = l.tokens[i];
      const auto eq = tok.find('=');
      const std::string key = tok.substr(0, eq);
      if (eq == std::string::npos || std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(ParseErrorKind::unknown_key, l.number, tok, "unknown source field");
      }
      const std::string value = tok.substr(eq + 1);
      if (key == "mode") {
        source.mode = checked_index(l, tok, parse_int(l, value), m, "system mode");
      } else {
        source.probes[static_cast<std::size_t>(std::stoi(key.substr(5)))] =
            parse_cplx(l, tok, value);
      }
    }
  }

  Circuit c(m, k, std::move(source));
  for (std::size_t i = 1; i < lines_.size(); ++i) {
    const Line& l = lines_[i];
    if (&l == source_line) continue;
    parse_element(l, c);
  }
  if (postselect_line_ != nullptr && !c.has_stage(c.readout_stage())) {
    fail(ParseErrorKind::invalid_value, postselect_line_->number, c.readout_stage(),
         "post-selection stage is not a snapshot label");
  }
  return c;
}

void Parser::parse_element(const Line& l, Circuit& c) {
  const std::string& kw = l.tokens.front();
  const int m = c.m_modes();
  const int k = c.k_probes();

  if (kw == "bs") {
    expect_arity(l, 5, 5);
    const Subsystem on = subsystem(l, l.tokens[1]);
    const int bound = on == Subsystem::system ? m : k;
    const char* what = on == Subsystem::system ? "system mode" : "probe";
    BeamSplitterSpec spec;
    spec.mode_a = checked_index(l, l.tokens[2], parse_int(l, l.tokens[2]), bound, what);
    spec.mode_b = checked_index(l, l.tokens[3], parse_int(l, l.tokens[3]), bound, what);
    const auto [key, value] = key_value(l, l.tokens[4], {"r"});
    spec.reflectivity = parse_real(l, l.tokens[4], value);
    if (spec.mode_a == spec.mode_b || !(spec.reflectivity >= 0 && spec.reflectivity <= 1)) {
      fail(ParseErrorKind::invalid_value, l.number, l.tokens[4],
           "need distinct modes and r in [0, 1]");
    }
    c.add(BeamSplitterElement{on, spec});
  } else if (kw == "phase") {
    expect_arity(l, 4, 5);
    PhaseSpec spec;
    spec.target = subsystem(l, l.tokens[1]);
    spec.index = checked_index(l, l.tokens[2], parse_int(l, l.tokens[2]),
                               spec.target == Subsystem::system ? m : k,
                               spec.target == Subsystem::system ? "system mode" : "probe");
    const auto [key, value] = key_value(l, l.tokens[3], {"phi"});
    spec.phi = parse_real(l, l.tokens[3], value);
    if (l.tokens.size() == 5) {
      if (l.tokens[4] != "scan") {
        fail(ParseErrorKind::unknown_keyword, l.number, l.tokens[4], "expected 'scan'");
      }
      spec.scanned = true;
    }
    c.add(spec);
  } else if (kw == "kerr") {
    expect_arity(l, 5, 6);
    KerrSpec spec;
    bool have_sys = false, have_probe = false, have_eps = false, have_eta = false;
    for (std::size_t i = 1; i < l.tokens.size(); ++i) {
      const std::string& tok = l.tokens[i];
      const auto [key, value] =
          key_value(l, tok, {"sys", "probe", "eps_tau", "eta_tau", "inner_phase"});
      if (key == "sys") {
        std::string_view rest = value;
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          const std::string item(rest.substr(0, comma));
          spec.system_modes.push_back(
              checked_index(l, tok, parse_int(l, item), m, "system mode"));
          rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        have_sys = true;
      } else if (key == "probe") {
        spec.probe_mode = checked_index(l, tok, parse_int(l, value), k, "probe");
        have_probe = true;
      } else if (key == "eps_tau") {
        spec.epsilon_tau = parse_real(l, tok, value);
        have_eps = true;
      } else if (key == "eta_tau") {
        spec.eta_tau = parse_real(l, tok, value);
        have_eta = true;
      } else {
        spec.inner_branch_phase = parse_real(l, tok, value);
      }
    }
    if (!(have_sys && have_probe && have_eps && have_eta)) {
      fail(ParseErrorKind::invalid_value, l.number, kw,
           "kerr needs sys=, probe=, eps_tau= and eta_tau=");
    }
    try {
      c.add(spec);
    } catch (const std::invalid_argument& e) {
      fail(ParseErrorKind::invalid_value, l.number, kw, e.what());
    }
  } else if (kw == "snapshot") {
    expect_arity(l, 2, 2);
    if (c.has_stage(l.tokens[1])) {
      fail(ParseErrorKind::duplicate_label, l.number, l.tokens[1],
           fmt::format("snapshot label '{}' already used", l.tokens[1]));
    }
    c.snapshot(l.tokens[1]);
  } else if (kw == "postselect") {
    expect_arity(l, 2, 3);
    int mode = 0;
    std::string at(kFinalLabel);
    for (std::size_t i = 1; i < l.tokens.size(); ++i) {
      const auto [key, value] = key_value(l, l.tokens[i], {"mode", "at"});
      if (key == "mode") {
        mode = checked_index(l, l.tokens[i], parse_int(l, value), m, "system mode");
      } else {
        at = value;
      }
    }
    c.set_postselect(mode, at);
    postselect_line_ = &l;
  } else {
    fail(ParseErrorKind::unknown_keyword, l.number, kw, fmt::format("unknown keyword '{}'", kw));
  }
}

std::string fmt_real(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::missing_header: return "missing header";
    case ParseErrorKind::unknown_keyword: return "unknown keyword";
    case ParseErrorKind::unknown_key: return "unknown key";
    case ParseErrorKind::malformed_number: return "malformed number";
    case ParseErrorKind::malformed_complex: return "malformed complex literal";
    case ParseErrorKind::index_out_of_range: return "index out of range";
    case ParseErrorKind::duplicate_label: return "duplicate snapshot label";
    case ParseErrorKind::missing_source: return "missing source line";
    case ParseErrorKind::invalid_value: return "invalid value";
  }
  return "parse error";
}

ParseError::ParseError(ParseErrorKind kind, std::size_t line, std::string token,
                       const std::string& detail)
    : std::runtime_error(fmt::format("line {}: {}: {} (at '{}')", line, to_string(kind), detail,
                                     token)),
      kind_(kind),
      line_(line),
      token_(std::move(token)) {}

Circuit parse_circuit(std::string_view text) {
  return Parser(text).parse();
}

Complex parse_complex(std::string_view token) {
  const auto v = try_complex(token);
  if (!v) throw std::invalid_argument(fmt::format("malformed complex literal '{}'", token));
  return *v;
}

std::string format_complex(Complex z, int precision) {
  return fmt::format("{:.{}g}{:+.{}g}i", z.real(), precision, z.imag(), precision);
}

std::string serialize_circuit(const Circuit& c) {
  std::string out = fmt::format("modes {} probes {}\n", c.m_modes(), c.k_probes());
  out += fmt::format("source mode={}", c.source().mode);
  for (std::size_t p = 0; p < c.source().probes.size(); ++p) {
    out += fmt::format(" probe{}={}", p, format_complex(c.source().probes[p]));
  }
  out += '\n';
  const auto sub = [](Subsystem s) { return s == Subsystem::system ? "sys" : "probe"; };
  for (const Element& e : c.elements()) {
    if (const auto* bs = std::get_if<BeamSplitterElement>(&e)) {
      out += fmt::format("bs {} {} {} r={}\n", sub(bs->on), bs->spec.mode_a, bs->spec.mode_b,
                         fmt_real(bs->spec.reflectivity));
    } else if (const auto* ph = std::get_if<PhaseSpec>(&e)) {
      out += fmt::format("phase {} {} phi={}{}\n", sub(ph->target), ph->index, fmt_real(ph->phi),
                         ph->scanned ? " scan" : "");
    } else if (const auto* kr = std::get_if<KerrSpec>(&e)) {
      out += fmt::format("kerr sys={} probe={} eps_tau={} eta_tau={}",
                         fmt::join(kr->system_modes, ","), kr->probe_mode,
                         fmt_real(kr->epsilon_tau), fmt_real(kr->eta_tau));
      if (kr->inner_branch_phase != 0.0) {
        out += fmt::format(" inner_phase={}", fmt_real(kr->inner_branch_phase));
      }
      out += '\n';
    } else if (const auto* sn = std::get_if<SnapshotMarker>(&e)) {
      out += fmt::format("snapshot {}\n", sn->label);
    }
  }
  out += fmt::format("postselect mode={}", c.postselect_mode());
  if (c.readout_stage() != kFinalLabel) out += fmt::format(" at={}", c.readout_stage());
  out += '\n';
  return out;
}

}  // namespace nmzi
