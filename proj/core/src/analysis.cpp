#include "nmzi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace nmzi {

PostSelectionResult postselect(const StageTrace& trace, int mode, std::string_view stage,
                               std::span<const Complex> reference_probes) {
  const HybridState& s = trace.ket(stage);
  const HybridState projected = project_onto_mode(s, mode);

  PostSelectionResult result;
  result.mode = mode;
  result.stage = std::string(stage);
  result.probability = std::max(0.0, squared_norm(projected));
  if (result.probability < kEmptyProjection) {
    result.probability = 0.0;
    return result;
  }
  result.conditional = scaled(projected, Complex{1.0 / std::sqrt(result.probability), 0.0});
  if (!reference_probes.empty()) {
    if (static_cast<int>(reference_probes.size()) != s.k_probes()) {
      throw ShapeError("reference probe state has the wrong number of probes");
    }
    result.fidelity_vs_reference = fidelity_with_coherent(*result.conditional, reference_probes);
  }
  return result;
}

PostSelectionResult postselect(const Circuit& circuit, const StageTrace& trace, int mode,
                               std::string_view stage) {
  const std::vector<Complex> reference = reference_probes(circuit, stage);
  return postselect(trace, mode, stage, reference);
}

PostSelectionResult postselect(const Circuit& circuit, const StageTrace& trace, int mode) {
  return postselect(circuit, trace, mode, circuit.readout_stage());
}

double mean_photon_number(const HybridState& s, int probe) {
  if (probe < 0 || probe >= s.k_probes()) {
    throw IndexError(fmt::format("probe index {} outside [0, {})", probe, s.k_probes()));
  }
  const double norm = squared_norm(s);
  if (norm <= 0.0) throw AnalysisError("mean photon number of an empty state");
  Complex acc{};
  for (const Branch& b : s.branches()) {
    for (const Branch& k : s.branches()) {
      if (b.mode != k.mode) continue;
      acc += std::conj(b.amp) * k.amp * std::conj(b.probes[probe]) * k.probes[probe] *
             probe_overlap(b.probes, k.probes);
    }
  }
  return acc.real() / norm;
}

double fidelity_with_coherent(const HybridState& s, std::span<const Complex> probes) {
  const double norm = squared_norm(s);
  if (norm <= 0.0) throw AnalysisError("fidelity of an empty state");
  Complex overlap{};
  for (const Branch& b : s.branches()) overlap += b.amp * probe_overlap(probes, b.probes);
  return std::clamp(std::norm(overlap) / norm, 0.0, 1.0);
}

double mode_amplitude(const HybridState& s, int mode) {
  return std::sqrt(std::max(0.0, squared_norm(project_onto_mode(s, mode))));
}

CosineFit fit_cosine(std::span<const double> phis, std::span<const double> values) {
  if (phis.size() != values.size()) throw std::invalid_argument("fit: size mismatch");
  if (phis.size() < 4) throw std::invalid_argument("fit: need at least 4 points");
  const auto n = static_cast<Eigen::Index>(phis.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = std::cos(phis[i]);
    design(i, 1) = std::sin(phis[i]);
    design(i, 2) = 1.0;
    rhs(i) = values[i];
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(rhs);
  return CosineFit{std::hypot(coef(0), coef(1)), std::atan2(coef(1), coef(0)), coef(2)};
}

double wrap_phase(double phi) {
  constexpr double two_pi = 2 * std::numbers::pi;
  double w = std::remainder(phi, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

std::vector<double> uniform_phases(std::size_t points) {
  std::vector<double> phis(points);
  for (std::size_t i = 0; i < points; ++i) {
    phis[i] = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(points);
  }
  return phis;
}

FringeScan fringe_scan(const Circuit& circuit, int mode, std::span<const double> phis,
                       std::string_view stage) {
  if (phis.size() < 4) {
    throw std::invalid_argument(
        fmt::format("fringe scan needs at least 4 phases, got {}", phis.size()));
  }
  if (circuit.k_probes() < 2) throw std::invalid_argument("fringe scan needs two probes");
  if (!circuit.has_stage(stage)) {
    throw std::invalid_argument(fmt::format("no stage labelled '{}'", stage));
  }

  FringeScan scan;
  scan.phis.assign(phis.begin(), phis.end());
  std::vector<double> reference;
  const Circuit bare = circuit.decoupled();
  for (double phi : phis) {
    const Circuit point = circuit.with_scan_phase(phi);
    const PostSelectionResult r = postselect(run_forward(point), mode, stage, {});
    if (!r.defined()) {
      throw AnalysisError(
          fmt::format("post-selection on mode {} at {} has probability 0", mode, stage));
    }
    scan.intensity_dp1.push_back(mean_photon_number(*r.conditional, 0));
    scan.intensity_dp2.push_back(mean_photon_number(*r.conditional, 1));
    reference.push_back(std::norm(reference_probes(bare.with_scan_phase(phi), stage)[0]));
  }

  scan.fit = fit_cosine(scan.phis, scan.intensity_dp1);
  scan.reference_fit = fit_cosine(scan.phis, reference);
  const double scale = *std::max_element(reference.begin(), reference.end());
  if (scan.fit.amplitude <= 1e-12 * scale || scan.reference_fit.amplitude <= 1e-12 * scale) {
    throw AnalysisError("fringe has no contrast; shift is undefined");
  }
  scan.extracted_shift = wrap_phase(scan.reference_fit.phase - scan.fit.phase);

  const auto [lo, hi] = std::minmax_element(scan.intensity_dp1.begin(), scan.intensity_dp1.end());
  scan.visibility = (*hi + *lo) > 0.0 ? (*hi - *lo) / (*hi + *lo) : 0.0;
  return scan;
}

FringeScan fringe_scan(const Circuit& circuit, int mode, std::span<const double> phis) {
  return fringe_scan(circuit, mode, phis, circuit.readout_stage());
}

const TsvfStage& TsvfReport::stage(std::string_view label) const {
  const auto it = std::find_if(stages.begin(), stages.end(),
                               [&](const TsvfStage& s) { return s.label == label; });
  if (it == stages.end()) throw std::out_of_range(fmt::format("no stage '{}'", label));
  return *it;
}

std::vector<int> TsvfReport::overlap_modes(std::string_view label) const {
  std::vector<int> modes;
  for (const TsvfModeEntry& e : stage(label).modes) {
    if (e.overlap_nonzero) modes.push_back(e.mode);
  }
  return modes;
}

TsvfReport tsvf_report(const Circuit& circuit, const BraState& final_bra, double threshold) {
  const StageTrace forward = run_forward(circuit);
  const StageTrace backward = run_backward(circuit, final_bra);

  TsvfReport report;
  report.threshold = threshold;
  for (const std::string& label : forward.labels) {
    const HybridState& ket = forward.ket(label);
    const BraState& bra = backward.bra(label);
    TsvfStage stage{label, inner_product(bra, ket), {}};
    const bool possible = std::norm(stage.transition_amplitude) >= kEmptyProjection;
    report.postselection_possible = report.postselection_possible && possible;

    for (int m = 0; m < circuit.m_modes(); ++m) {
      const HybridState ket_m = project_onto_mode(ket, m);
      const BraState bra_m = project_onto_mode(bra, m);
      TsvfModeEntry entry;
      entry.mode = m;
      for (const Branch& b : ket_m.branches()) entry.forward_amp += b.amp;
      for (const Branch& b : bra_m.branches()) entry.backward_amp += b.amp;
      entry.forward_weight = squared_norm(ket_m);
      entry.backward_weight = squared_norm(bra_m);
      if (possible) {
        entry.weak_value = inner_product(bra, ket_m) / stage.transition_amplitude;
        entry.overlap_nonzero = std::abs(entry.weak_value) > threshold;
      }
      stage.modes.push_back(entry);
    }
    report.stages.push_back(std::move(stage));
  }
  return report;
}

TsvfReport tsvf_report(const Circuit& circuit, double threshold) {
  return tsvf_report(circuit, default_final_bra(circuit), threshold);
}

std::vector<LeakageRow> leakage_sweep(const Circuit& base, std::span<const double> deltas,
                                      const LeakageSetup& setup) {
  std::vector<LeakageRow> rows;
  rows.reserve(deltas.size());
  for (double delta : deltas) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
      throw std::invalid_argument(fmt::format("leakage perturbation {} must be >= 0", delta));
    }
    const Circuit perturbed = base.with_inserted_after(
        setup.after_stage, PhaseSpec{Subsystem::system, setup.arm_mode, delta});
    const StageTrace trace = run_forward(perturbed);

    LeakageRow row;
    row.delta = delta;
    row.leak_probability = postselect(trace, setup.dark_mode, setup.dark_stage, {}).probability;
    const PostSelectionResult det =
        postselect(perturbed, trace, setup.detector_mode, setup.detector_stage);
    row.fidelity_deficit = det.fidelity_vs_reference
                               ? std::max(0.0, 1.0 - *det.fidelity_vs_reference)
                               : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

double fit_quadratic_coefficient(std::span<const LeakageRow> rows) {
  double num = 0.0;
  double den = 0.0;
  for (const LeakageRow& r : rows) {
    const double d2 = r.delta * r.delta;
    num += r.leak_probability * d2;
    den += d2 * d2;
  }
  if (den <= 0.0) throw std::invalid_argument("quadratic fit needs a nonzero delta");
  return num / den;
}

double loglog_slope(std::span<const LeakageRow> rows) {
  std::vector<double> x;
  std::vector<double> y;
  for (const LeakageRow& r : rows) {
    if (r.delta > 0.0 && r.leak_probability > 0.0) {
      x.push_back(std::log(r.delta));
      y.push_back(std::log(r.leak_probability));
    }
  }
  if (x.size() < 2) throw std::invalid_argument("log-log slope needs two positive points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace nmzi
