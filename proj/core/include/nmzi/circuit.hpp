#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nmzi/hybrid_state.hpp"
#include "nmzi/optical_elements.hpp"

namespace nmzi {

/// Stage label of the source state (and of the fully back-evolved bra).
inline constexpr std::string_view kInitialLabel = "initial";
/// Stage label after the last element.
inline constexpr std::string_view kFinalLabel = "final";

struct BeamSplitterElement {
  Subsystem on = Subsystem::system;
  BeamSplitterSpec spec;

  friend bool operator==(const BeamSplitterElement&, const BeamSplitterElement&) = default;
};

struct SnapshotMarker {
  std::string label;

  friend bool operator==(const SnapshotMarker&, const SnapshotMarker&) = default;
};

using Element = std::variant<BeamSplitterElement, PhaseSpec, KerrSpec, SnapshotMarker>;

/// Photon input mode plus the initial coherent amplitude of every probe.
struct Source {
  int mode = 0;
  std::vector<Complex> probes;

  friend bool operator==(const Source&, const Source&) = default;
};

/**
 * Ordered element sequence over M system modes and K probe modes.
 *
 * Every element is range-checked on insertion and snapshot labels are
 * unique; "initial" and "final" are reserved. The readout stage is where
 * post-selection on the detector mode is read off by default.
 */
class Circuit {
 public:
  Circuit(int m_modes, int k_probes, Source source);

  Circuit& add(Element element);
  Circuit& snapshot(std::string label) { return add(SnapshotMarker{std::move(label)}); }
  Circuit& set_postselect(int mode, std::string readout_stage = std::string(kFinalLabel));

  int m_modes() const { return m_modes_; }
  int k_probes() const { return k_probes_; }
  const Source& source() const { return source_; }
  std::span<const Element> elements() const { return elements_; }
  int postselect_mode() const { return postselect_mode_; }
  const std::string& readout_stage() const { return readout_stage_; }

  HybridState source_state() const;

  /// "initial", snapshot labels in order, "final".
  std::vector<std::string> stage_labels() const;
  bool has_stage(std::string_view label) const;

  /// Copy with every Kerr coupling switched off (probe decoupled).
  Circuit decoupled() const;
  /// Copy with the scanned probe phase set to `phi`. Throws if there is none.
  Circuit with_scan_phase(double phi) const;
  /// Copy with `element` inserted directly after snapshot `label`.
  Circuit with_inserted_after(std::string_view label, Element element) const;

  friend bool operator==(const Circuit&, const Circuit&) = default;

 private:
  int m_modes_;
  int k_probes_;
  Source source_;
  std::vector<Element> elements_;
  int postselect_mode_ = 0;
  std::string readout_stage_{kFinalLabel};
};

/// Parameters of the nested interferometer with the Kerr probe.
struct NestedMziParams {
  double r = 0.6;
  Complex alpha{2.0, 0.0};
  double epsilon_tau = 0.0;
  double eta_tau = 0.0;
  /// Put the global e^{-i eta tau} on the inner branches.
  bool eta_inner_phase = false;
};

/**
 * The nested interferometer of the QND proposal.
 *
 * System modes 0 (arm A), 1 and 2 (inner arms); probes 0 (through the Kerr
 * medium) and 1. The probe enters as sqrt(2) alpha in probe 0. Stages:
 * L1, L2, L2p (after the Kerr medium), L3, L3p (after the second probe
 * splitter). Detector D is system mode 0, read out at L3p where the
 * D-connected branch is the arm-A branch.
 */
Circuit build_nested_mzi(const NestedMziParams& params);
Circuit build_nested_mzi(double r, Complex alpha, double epsilon_tau, double eta_tau);

/// Forward kets and backward bras keyed by stage label.
struct StageTrace {
  std::vector<std::string> labels;
  std::map<std::string, HybridState, std::less<>> forward;
  std::map<std::string, BraState, std::less<>> backward;

  const HybridState& ket(std::string_view label) const;
  const BraState& bra(std::string_view label) const;
};

/// Apply the elements in order, merging after each one.
StageTrace run_forward(const Circuit& circuit);

/// Un-apply the elements in reverse order starting from `final_bra`.
StageTrace run_backward(const Circuit& circuit, const BraState& final_bra);
StageTrace run_backward(const Circuit& circuit);

/// Forward and backward traces of the default post-selection.
StageTrace run_both(const Circuit& circuit);

/// Probe amplitudes at `label` with every Kerr coupling off.
std::vector<Complex> reference_probes(const Circuit& circuit,
                                      std::string_view label = kFinalLabel);

/// Photon in the post-selection mode, probes in their no-interaction output.
BraState default_final_bra(const Circuit& circuit);

/// Apply a single non-snapshot element (snapshots are the identity).
template <class Tag>
BranchState<Tag> apply_element(const BranchState<Tag>& s, const Element& element);

}  // namespace nmzi
