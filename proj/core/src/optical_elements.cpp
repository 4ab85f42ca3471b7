#include "nmzi/optical_elements.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <fmt/format.h>

namespace nmzi {

namespace {

constexpr Complex kI{0.0, 1.0};

template <class Tag>
constexpr bool is_bra() {
  return std::is_same_v<Tag, BraTag>;
}

/// Entries of the 2x2 matrix applied to (a, b); the adjoint for bras.
struct Mix2 {
  Complex aa, ab, ba, bb;
};

template <class Tag>
Mix2 splitter_matrix(const BeamSplitterSpec& spec) {
  const double r = spec.reflectivity;
  const double t = spec.transmissivity();
  // U is symmetric, so the adjoint only conjugates the diagonal.
  const Complex diag = is_bra<Tag>() ? kI * r : -kI * r;
  return {diag, t, t, diag};
}

void check_index(int index, int bound, const char* what) {
  if (index < 0 || index >= bound) {
    throw IndexError(fmt::format("{} index {} outside [0, {})", what, index, bound));
  }
}

}  // namespace

double BeamSplitterSpec::transmissivity() const {
  return std::sqrt(std::max(0.0, 1.0 - reflectivity * reflectivity));
}

double balanced_reflectivity() { return std::sqrt(0.5); }

void validate(const BeamSplitterSpec& spec, Subsystem on, int m_modes, int k_probes) {
  const int bound = on == Subsystem::system ? m_modes : k_probes;
  const char* what = on == Subsystem::system ? "system mode" : "probe";
  check_index(spec.mode_a, bound, what);
  check_index(spec.mode_b, bound, what);
  if (spec.mode_a == spec.mode_b) {
    throw std::invalid_argument("beam splitter needs two distinct modes");
  }
  if (!(spec.reflectivity >= 0.0 && spec.reflectivity <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("reflectivity {} outside [0, 1]", spec.reflectivity));
  }
}

void validate(const KerrSpec& spec, int m_modes, int k_probes) {
  for (int m : spec.system_modes) check_index(m, m_modes, "system mode");
  for (std::size_t i = 0; i < spec.system_modes.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.system_modes.size(); ++j) {
      if (spec.system_modes[i] == spec.system_modes[j]) {
        throw std::invalid_argument("Kerr system modes must be distinct");
      }
    }
  }
  check_index(spec.probe_mode, k_probes, "probe");
  if (!std::isfinite(spec.epsilon_tau) || !std::isfinite(spec.eta_tau) ||
      !std::isfinite(spec.inner_branch_phase)) {
    throw std::invalid_argument("Kerr phases must be finite");
  }
}

void validate(const PhaseSpec& spec, int m_modes, int k_probes) {
  if (spec.target == Subsystem::system) {
    check_index(spec.index, m_modes, "system mode");
  } else {
    check_index(spec.index, k_probes, "probe");
  }
  if (!std::isfinite(spec.phi)) throw std::invalid_argument("phase must be finite");
}

template <class Tag>
BranchState<Tag> apply_beam_splitter(const BranchState<Tag>& s, const BeamSplitterSpec& spec,
                                     Subsystem on) {
  validate(spec, on, s.m_modes(), s.k_probes());
  const Mix2 u = splitter_matrix<Tag>(spec);
  const int a = spec.mode_a;
  const int b = spec.mode_b;

  std::vector<Branch> out;
  out.reserve(2 * s.size());
  for (const Branch& br : s.branches()) {
    if (on == Subsystem::probe) {
      Branch next = br;
      next.probes[a] = u.aa * br.probes[a] + u.ab * br.probes[b];
      next.probes[b] = u.ba * br.probes[a] + u.bb * br.probes[b];
      out.push_back(std::move(next));
      continue;
    }
    if (br.mode == a) {
      out.push_back(Branch{a, u.aa * br.amp, br.probes});
      out.push_back(Branch{b, u.ba * br.amp, br.probes});
    } else if (br.mode == b) {
      out.push_back(Branch{a, u.ab * br.amp, br.probes});
      out.push_back(Branch{b, u.bb * br.amp, br.probes});
    } else {
      out.push_back(br);
    }
  }
  return s.with_branches(std::move(out));
}

template <class Tag>
BranchState<Tag> apply_kerr(const BranchState<Tag>& s, const KerrSpec& spec) {
  validate(spec, s.m_modes(), s.k_probes());
  const double sign = is_bra<Tag>() ? 1.0 : -1.0;

  std::vector<Branch> out(s.branches().begin(), s.branches().end());
  for (Branch& br : out) {
    const auto occupation = [&](int m) { return br.mode == m ? 1 : 0; };
    int photons = 0;
    for (int m : spec.system_modes) photons += occupation(m);
    int pair_products = 0;
    for (std::size_t i = 0; i < spec.system_modes.size(); ++i) {
      for (std::size_t j = i + 1; j < spec.system_modes.size(); ++j) {
        pair_products += occupation(spec.system_modes[i]) * occupation(spec.system_modes[j]);
      }
    }
    br.probes[spec.probe_mode] *= std::exp(sign * kI * (photons * spec.epsilon_tau));
    br.amp *= std::exp(sign * kI *
                       (pair_products * spec.eta_tau + photons * spec.inner_branch_phase));
  }
  return s.with_branches(std::move(out));
}

template <class Tag>
BranchState<Tag> apply_phase(const BranchState<Tag>& s, const PhaseSpec& spec) {
  validate(spec, s.m_modes(), s.k_probes());
  const Complex factor = std::exp((is_bra<Tag>() ? -1.0 : 1.0) * kI * spec.phi);

  std::vector<Branch> out(s.branches().begin(), s.branches().end());
  for (Branch& br : out) {
    if (spec.target == Subsystem::probe) {
      br.probes[spec.index] *= factor;
    } else if (br.mode == spec.index) {
      br.amp *= factor;
    }
  }
  return s.with_branches(std::move(out));
}

template HybridState apply_beam_splitter(const HybridState&, const BeamSplitterSpec&, Subsystem);
template BraState apply_beam_splitter(const BraState&, const BeamSplitterSpec&, Subsystem);
template HybridState apply_kerr(const HybridState&, const KerrSpec&);
template BraState apply_kerr(const BraState&, const KerrSpec&);
template HybridState apply_phase(const HybridState&, const PhaseSpec&);
template BraState apply_phase(const BraState&, const PhaseSpec&);

}  // namespace nmzi
