#include "nmzi/circuit.hpp"

#include <algorithm>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace nmzi {

namespace {

bool reserved(std::string_view label) { return label == kInitialLabel || label == kFinalLabel; }

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

Circuit::Circuit(int m_modes, int k_probes, Source source)
    : m_modes_(m_modes), k_probes_(k_probes), source_(std::move(source)) {
  if (m_modes_ < 1 || k_probes_ < 0) {
    throw ShapeError("invalid circuit shape " + describe_shape(m_modes_, k_probes_));
  }
  if (source_.mode < 0 || source_.mode >= m_modes_) {
    throw IndexError(fmt::format("source mode {} outside [0, {})", source_.mode, m_modes_));
  }
  if (static_cast<int>(source_.probes.size()) != k_probes_) {
    throw ShapeError(fmt::format("source lists {} probe amplitudes, circuit declares K={}",
                                 source_.probes.size(), k_probes_));
  }
}

Circuit& Circuit::add(Element element) {
  std::visit(overloaded{
                 [&](const BeamSplitterElement& e) { validate(e.spec, e.on, m_modes_, k_probes_); },
                 [&](const PhaseSpec& e) { validate(e, m_modes_, k_probes_); },
                 [&](const KerrSpec& e) { validate(e, m_modes_, k_probes_); },
                 [&](const SnapshotMarker& e) {
                   if (e.label.empty()) throw std::invalid_argument("empty snapshot label");
                   if (reserved(e.label) || has_stage(e.label)) {
                     throw std::invalid_argument(
                         fmt::format("duplicate snapshot label '{}'", e.label));
                   }
                 },
             },
             element);
  elements_.push_back(std::move(element));
  return *this;
}

Circuit& Circuit::set_postselect(int mode, std::string readout_stage) {
  if (mode < 0 || mode >= m_modes_) {
    throw IndexError(fmt::format("post-selection mode {} outside [0, {})", mode, m_modes_));
  }
  postselect_mode_ = mode;
  readout_stage_ = std::move(readout_stage);
  return *this;
}

HybridState Circuit::source_state() const {
  return HybridState::single(m_modes_, source_.mode, Complex{1.0, 0.0}, source_.probes);
}

std::vector<std::string> Circuit::stage_labels() const {
  std::vector<std::string> labels{std::string(kInitialLabel)};
  for (const Element& e : elements_) {
    if (const auto* s = std::get_if<SnapshotMarker>(&e)) labels.push_back(s->label);
  }
  labels.emplace_back(kFinalLabel);
  return labels;
}

bool Circuit::has_stage(std::string_view label) const {
  if (reserved(label)) return true;
  return std::any_of(elements_.begin(), elements_.end(), [&](const Element& e) {
    const auto* s = std::get_if<SnapshotMarker>(&e);
    return s != nullptr && s->label == label;
  });
}

Circuit Circuit::decoupled() const {
  Circuit copy = *this;
  for (Element& e : copy.elements_) {
    if (auto* k = std::get_if<KerrSpec>(&e)) k->epsilon_tau = 0.0;
  }
  return copy;
}

Circuit Circuit::with_scan_phase(double phi) const {
  Circuit copy = *this;
  int found = 0;
  for (Element& e : copy.elements_) {
    if (auto* p = std::get_if<PhaseSpec>(&e); p != nullptr && p->scanned) {
      p->phi = phi;
      ++found;
    }
  }
  if (found == 0) throw std::invalid_argument("circuit has no scanned phase element");
  return copy;
}

Circuit Circuit::with_inserted_after(std::string_view label, Element element) const {
  Circuit copy(m_modes_, k_probes_, source_);
  copy.postselect_mode_ = postselect_mode_;
  copy.readout_stage_ = readout_stage_;
  bool inserted = false;
  if (label == kInitialLabel) {
    copy.add(element);
    inserted = true;
  }
  for (const Element& e : elements_) {
    copy.add(e);
    const auto* s = std::get_if<SnapshotMarker>(&e);
    if (!inserted && s != nullptr && s->label == label) {
      copy.add(element);
      inserted = true;
    }
  }
  if (!inserted && label == kFinalLabel) {
    copy.add(std::move(element));
    inserted = true;
  }
  if (!inserted) throw std::invalid_argument(fmt::format("no stage labelled '{}'", label));
  return copy;
}

Circuit build_nested_mzi(const NestedMziParams& p) {
  if (!(p.r >= 0.0 && p.r <= 1.0)) {
    throw std::invalid_argument(fmt::format("reflectivity r = {} outside [0, 1]", p.r));
  }
  const double half = balanced_reflectivity();
  const double quarter_turn = std::numbers::pi / 2;

  Circuit c(3, 2, Source{0, {std::numbers::sqrt2 * p.alpha, Complex{}}});
  c.add(BeamSplitterElement{Subsystem::system, {0, 1, p.r}});
  c.snapshot("L1");
  c.add(BeamSplitterElement{Subsystem::system, {1, 2, half}});
  c.add(BeamSplitterElement{Subsystem::probe, {0, 1, half}});
  // Probe-interferometer bias: with it the unperturbed probe leaves through
  // probe 0 as i sqrt(2) alpha.
  c.add(PhaseSpec{Subsystem::probe, 0, -quarter_turn});
  c.add(PhaseSpec{Subsystem::probe, 1, quarter_turn});
  c.snapshot("L2");
  c.add(KerrSpec{{1, 2}, 0, p.epsilon_tau, p.eta_tau,
                 p.eta_inner_phase ? p.eta_tau : 0.0});
  c.snapshot("L2p");
  c.add(BeamSplitterElement{Subsystem::system, {1, 2, half}});
  c.snapshot("L3");
  c.add(PhaseSpec{Subsystem::probe, 1, 0.0, /*scanned=*/true});
  c.add(BeamSplitterElement{Subsystem::probe, {0, 1, half}});
  c.snapshot("L3p");
  c.add(BeamSplitterElement{Subsystem::system, {0, 1, p.r}});
  c.set_postselect(0, "L3p");
  return c;
}

Circuit build_nested_mzi(double r, Complex alpha, double epsilon_tau, double eta_tau) {
  return build_nested_mzi(NestedMziParams{r, alpha, epsilon_tau, eta_tau, false});
}

const HybridState& StageTrace::ket(std::string_view label) const {
  const auto it = forward.find(label);
  if (it == forward.end()) {
    throw std::out_of_range(fmt::format("no forward snapshot '{}'", label));
  }
  return it->second;
}

const BraState& StageTrace::bra(std::string_view label) const {
  const auto it = backward.find(label);
  if (it == backward.end()) {
    throw std::out_of_range(fmt::format("no backward snapshot '{}'", label));
  }
  return it->second;
}

template <class Tag>
BranchState<Tag> apply_element(const BranchState<Tag>& s, const Element& element) {
  return std::visit(
      overloaded{
          [&](const BeamSplitterElement& e) { return apply_beam_splitter(s, e.spec, e.on); },
          [&](const PhaseSpec& e) { return apply_phase(s, e); },
          [&](const KerrSpec& e) { return apply_kerr(s, e); },
          [&](const SnapshotMarker&) { return s; },
      },
      element);
}

template HybridState apply_element(const HybridState&, const Element&);
template BraState apply_element(const BraState&, const Element&);

StageTrace run_forward(const Circuit& circuit) {
  StageTrace trace;
  trace.labels = circuit.stage_labels();
  HybridState state = circuit.source_state();
  trace.forward.insert_or_assign(std::string(kInitialLabel), state);
  for (const Element& e : circuit.elements()) {
    if (const auto* s = std::get_if<SnapshotMarker>(&e)) {
      trace.forward.insert_or_assign(s->label, state);
      continue;
    }
    state = merge_branches(apply_element(state, e));
  }
  trace.forward.insert_or_assign(std::string(kFinalLabel), state);
  return trace;
}

StageTrace run_backward(const Circuit& circuit, const BraState& final_bra) {
  if (final_bra.m_modes() != circuit.m_modes() || final_bra.k_probes() != circuit.k_probes()) {
    throw ShapeError("final bra " + describe_shape(final_bra.m_modes(), final_bra.k_probes()) +
                     " does not fit circuit " +
                     describe_shape(circuit.m_modes(), circuit.k_probes()));
  }
  StageTrace trace;
  trace.labels = circuit.stage_labels();
  BraState state = merge_branches(final_bra);
  trace.backward.insert_or_assign(std::string(kFinalLabel), state);
  const auto elements = circuit.elements();
  for (auto it = elements.rbegin(); it != elements.rend(); ++it) {
    if (const auto* s = std::get_if<SnapshotMarker>(&*it)) {
      trace.backward.insert_or_assign(s->label, state);
      continue;
    }
    state = merge_branches(apply_element(state, *it));
  }
  trace.backward.insert_or_assign(std::string(kInitialLabel), state);
  return trace;
}

StageTrace run_backward(const Circuit& circuit) {
  return run_backward(circuit, default_final_bra(circuit));
}

StageTrace run_both(const Circuit& circuit) {
  StageTrace trace = run_forward(circuit);
  trace.backward = run_backward(circuit).backward;
  return trace;
}

std::vector<Complex> reference_probes(const Circuit& circuit, std::string_view label) {
  const StageTrace trace = run_forward(circuit.decoupled());
  const HybridState& s = trace.ket(label);
  if (s.empty()) return circuit.source().probes;
  // Without Kerr coupling the probe evolution is branch independent.
  return s.branches().front().probes;
}

BraState default_final_bra(const Circuit& circuit) {
  return BraState::single(circuit.m_modes(), circuit.postselect_mode(), Complex{1.0, 0.0},
                          reference_probes(circuit, kFinalLabel));
}

}  // namespace nmzi
