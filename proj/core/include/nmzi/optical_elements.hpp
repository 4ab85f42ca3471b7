#pragma once

#include <vector>

#include "nmzi/hybrid_state.hpp"

namespace nmzi {

/// Which index space an element addresses.
enum class Subsystem { system, probe };

/**
 * Two-port beam splitter with reflectivity r; transmissivity t = sqrt(1 - r^2).
 * Acts on the pair (a, b) with U(r) = [[-i r, t], [t, -i r]].
 */
struct BeamSplitterSpec {
  int mode_a = 0;
  int mode_b = 1;
  double reflectivity = 0.0;

  double transmissivity() const;

  friend bool operator==(const BeamSplitterSpec&, const BeamSplitterSpec&) = default;
};

/// Balanced beam splitter reflectivity, 1/sqrt(2).
double balanced_reflectivity();

/**
 * Cross-phase coupling between the photon in any of `system_modes` and the
 * coherent probe `probe_mode`, for a medium traversed with equal dwell time
 * by every listed mode.
 *
 * epsilon_tau rotates the probe by e^{-i n epsilon_tau}; eta_tau weighs the
 * pairwise occupation products of the listed system modes, which vanish for
 * a single photon. inner_branch_phase is an extra e^{-i inner_branch_phase}
 * on branches inside the medium, off by default.
 */
struct KerrSpec {
  std::vector<int> system_modes;
  int probe_mode = 0;
  double epsilon_tau = 0.0;
  double eta_tau = 0.0;
  double inner_branch_phase = 0.0;

  friend bool operator==(const KerrSpec&, const KerrSpec&) = default;
};

/// e^{i phi} on a system mode (branch amplitude) or a probe (coherent amplitude).
struct PhaseSpec {
  Subsystem target = Subsystem::system;
  int index = 0;
  double phi = 0.0;
  /// Marks the element a fringe scan overwrites.
  bool scanned = false;

  friend bool operator==(const PhaseSpec&, const PhaseSpec&) = default;
};

// Kets evolve with the element's unitary; bras are stored as kets and take
// the conjugate transpose, which is what backward evolution needs.
// Results are not merged.

template <class Tag>
BranchState<Tag> apply_beam_splitter(const BranchState<Tag>& s, const BeamSplitterSpec& spec,
                                     Subsystem on);

template <class Tag>
BranchState<Tag> apply_kerr(const BranchState<Tag>& s, const KerrSpec& spec);

template <class Tag>
BranchState<Tag> apply_phase(const BranchState<Tag>& s, const PhaseSpec& spec);

/// Throw IndexError / std::invalid_argument if the spec does not fit (M, K).
void validate(const BeamSplitterSpec& spec, Subsystem on, int m_modes, int k_probes);
void validate(const KerrSpec& spec, int m_modes, int k_probes);
void validate(const PhaseSpec& spec, int m_modes, int k_probes);

}  // namespace nmzi
