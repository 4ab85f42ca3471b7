#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nmzi/circuit.hpp"
#include "nmzi/hybrid_state.hpp"

namespace nmzi {

/// Raised when an analysis is asked for something the state cannot give.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PostSelectionResult {
  int mode = 0;
  std::string stage;
  double probability = 0.0;
  /// Normalized branches with the photon in `mode`; empty if probability is 0.
  std::optional<HybridState> conditional;
  /// |<reference|conditional>|^2; empty if the projection is empty.
  std::optional<double> fidelity_vs_reference;

  bool defined() const { return conditional.has_value(); }
};

/// Probabilities below this are treated as an empty projection.
inline constexpr double kEmptyProjection = 1e-24;

/// Project the `stage` ket onto photon-in-`mode`.
PostSelectionResult postselect(const StageTrace& trace, int mode, std::string_view stage,
                               std::span<const Complex> reference_probes);

/// Same, with the reference taken as the circuit's no-interaction probe output.
PostSelectionResult postselect(const Circuit& circuit, const StageTrace& trace, int mode,
                               std::string_view stage);
/// At the circuit's readout stage.
PostSelectionResult postselect(const Circuit& circuit, const StageTrace& trace, int mode);

/// <psi| n_probe |psi> / <psi|psi>, using <b|n|g> = conj(b) g <b|g>.
double mean_photon_number(const HybridState& s, int probe);

/// Fidelity of `s` (normalized internally) with the product coherent state.
double fidelity_with_coherent(const HybridState& s, std::span<const Complex> probes);

/// Norm of the projection onto `mode`, i.e. the magnitude of the mode amplitude.
double mode_amplitude(const HybridState& s, int mode);

/// A cos(phi - phase) + offset, least-squares fitted.
struct CosineFit {
  double amplitude = 0.0;
  double phase = 0.0;
  double offset = 0.0;
};

CosineFit fit_cosine(std::span<const double> phis, std::span<const double> values);

/// Wrap to (-pi, pi].
double wrap_phase(double phi);

struct FringeScan {
  std::vector<double> phis;
  std::vector<double> intensity_dp1;
  std::vector<double> intensity_dp2;
  /// Phase lag of the dp1 fringe relative to the no-interaction reference.
  double extracted_shift = 0.0;
  double visibility = 0.0;
  CosineFit fit;
  CosineFit reference_fit;
};

/**
 * Scan the circuit's scanned probe phase over `phis`, post-select on `mode`
 * at `stage` for each point and record the mean photon numbers of probes 0
 * (dp1) and 1 (dp2). Needs at least 4 points and two probes.
 */
FringeScan fringe_scan(const Circuit& circuit, int mode, std::span<const double> phis,
                       std::string_view stage);
FringeScan fringe_scan(const Circuit& circuit, int mode, std::span<const double> phis);

/// `points` phases evenly spaced over [0, 2 pi).
std::vector<double> uniform_phases(std::size_t points);

struct TsvfModeEntry {
  int mode = 0;
  /// Sum of branch amplitudes in the mode (probe content ignored).
  Complex forward_amp{};
  Complex backward_amp{};
  /// ||Pi_m psi||^2 and ||Pi_m phi||^2.
  double forward_weight = 0.0;
  double backward_weight = 0.0;
  /// <phi| Pi_m |psi> / <phi|psi> with full probe overlaps.
  Complex weak_value{};
  bool overlap_nonzero = false;
};

struct TsvfStage {
  std::string label;
  Complex transition_amplitude{};
  std::vector<TsvfModeEntry> modes;
};

struct TsvfReport {
  double threshold = 1e-10;
  bool postselection_possible = true;
  std::vector<TsvfStage> stages;

  const TsvfStage& stage(std::string_view label) const;
  /// Modes flagged overlap_nonzero at `label`.
  std::vector<int> overlap_modes(std::string_view label) const;
};

inline constexpr double kDefaultOverlapThreshold = 1e-10;

TsvfReport tsvf_report(const Circuit& circuit, double threshold = kDefaultOverlapThreshold);
TsvfReport tsvf_report(const Circuit& circuit, const BraState& final_bra,
                       double threshold = kDefaultOverlapThreshold);

struct LeakageRow {
  double delta = 0.0;
  double leak_probability = 0.0;
  double fidelity_deficit = 0.0;
};

/// Where the arm perturbation goes and where leakage is read.
struct LeakageSetup {
  /// The phase delta is inserted on this system mode right after `after_stage`.
  int arm_mode = 1;
  std::string after_stage = "L2";
  int dark_mode = 1;
  std::string dark_stage = "L3";
  /// Detector-conditional probe fidelity is evaluated here.
  int detector_mode = 0;
  std::string detector_stage{kFinalLabel};
};

std::vector<LeakageRow> leakage_sweep(const Circuit& base, std::span<const double> deltas,
                                      const LeakageSetup& setup = {});

/// Least-squares c in p = c delta^2.
double fit_quadratic_coefficient(std::span<const LeakageRow> rows);
/// Least-squares slope of log p against log delta (rows with delta, p > 0).
double loglog_slope(std::span<const LeakageRow> rows);

}  // namespace nmzi
