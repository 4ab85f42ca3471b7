#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "nmzi/analysis.hpp"
#include "nmzi/circuit.hpp"
#include "nmzi/circuit_io.hpp"

namespace nmzi::cli {

namespace {

enum class Format { human, csv, record };
enum class Command { run, postselect, fringes, tsvf, leakage };

struct RunConfig {
  // Input: preset or circuit file.
  bool preset = false;
  NestedMziParams params;
  std::string alpha_text = "2";
  std::string circuit_path;

  Command command = Command::run;
  Format format = Format::human;

  std::optional<int> mode;
  std::optional<std::string> stage;
  std::string out_path;
  bool backward = false;

  std::size_t points = 64;
  double threshold = kDefaultOverlapThreshold;

  double delta_min = 1e-4;
  double delta_max = 1e-2;
  std::size_t delta_points = 9;
  std::vector<double> deltas;
};

std::string num(double x) { return fmt::format("{:.12g}", x); }

std::string rect_polar(Complex z) {
  return fmt::format("{:+.12f}{:+.12f}i  (|{:.12f}| arg {:+.9f})", z.real(), z.imag(),
                     std::abs(z), std::arg(z));
}

std::string probes_text(std::span<const Complex> probes) {
  std::string s;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    s += fmt::format("{}probe{}={}", k ? "  " : "", k, rect_polar(probes[k]));
  }
  return s;
}

/// Resolve --out against the output-directory environment variable.
std::filesystem::path output_path(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') {
      p = std::filesystem::path(dir) / p;
    }
  }
  return p;
}

class Emitter {
 public:
  Emitter(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {}

  /// Stream for CSV artifacts: the --out file if given, else stdout.
  std::ostream& artifact() {
    if (cfg_.out_path.empty()) return out_;
    const auto path = output_path(cfg_.out_path);
    file_.open(path, std::ios::binary | std::ios::trunc);
    if (!file_) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
    return file_;
  }
  void close() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw std::runtime_error("failed writing output file");
    }
  }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::ofstream file_;
};

template <class Tag>
void print_state(std::ostream& out, Format format, std::string_view prefix,
                 std::string_view label, const BranchState<Tag>& s) {
  if (format == Format::human) {
    fmt::print(out, "[{}] {}  ({} branch{})\n", prefix, label, s.size(),
               s.size() == 1 ? "" : "es");
    for (const Branch& b : s.branches()) {
      fmt::print(out, "  mode {}  amp {}\n    {}\n", b.mode, rect_polar(b.amp),
                 probes_text(b.probes));
    }
    return;
  }
  std::vector<int> counter(static_cast<std::size_t>(s.m_modes()), 0);
  for (const Branch& b : s.branches()) {
    const int idx = counter[static_cast<std::size_t>(b.mode)]++;
    if (format == Format::csv) {
      fmt::print(out, "{},{},{},{},{},{}", prefix, label, b.mode, idx, num(b.amp.real()),
                 num(b.amp.imag()));
      for (const Complex& p : b.probes) fmt::print(out, ",{},{}", num(p.real()), num(p.imag()));
      out << '\n';
      continue;
    }
    const std::string key = fmt::format("{}.{}.mode{}.branch{}", prefix, label, b.mode, idx);
    fmt::print(out, "{}.amp.re={}\n{}.amp.im={}\n", key, num(b.amp.real()), key,
               num(b.amp.imag()));
    for (std::size_t k = 0; k < b.probes.size(); ++k) {
      fmt::print(out, "{}.probe{}.re={}\n{}.probe{}.im={}\n", key, k, num(b.probes[k].real()),
                 key, k, num(b.probes[k].imag()));
    }
  }
}

void cmd_run(const RunConfig& cfg, const Circuit& c, std::ostream& out) {
  const StageTrace trace = cfg.backward ? run_both(c) : run_forward(c);
  if (cfg.format == Format::csv) {
    out << "direction,stage,mode,branch,amp_re,amp_im";
    for (int k = 0; k < c.k_probes(); ++k) fmt::print(out, ",probe{}_re,probe{}_im", k, k);
    out << '\n';
  }
  for (const std::string& label : trace.labels) print_state(out, cfg.format, "forward", label, trace.ket(label));
  if (!cfg.backward) return;
  for (const std::string& label : trace.labels) print_state(out, cfg.format, "backward", label, trace.bra(label));
}

void cmd_postselect(const RunConfig& cfg, const Circuit& c, std::ostream& out) {
  const int mode = cfg.mode.value_or(c.postselect_mode());
  const std::string stage = cfg.stage.value_or(c.readout_stage());
  if (!c.has_stage(stage)) throw std::invalid_argument(fmt::format("no stage labelled '{}'", stage));
  const StageTrace trace = run_forward(c);
  const PostSelectionResult r = postselect(c, trace, mode, stage);

  if (cfg.format == Format::human) {
    fmt::print(out, "stage        {}\nmode         {}\nprobability  {:.12f}\n", stage, mode,
               r.probability);
    if (!r.defined()) {
      out << "conditional  undefined (empty projection)\n";
      return;
    }
    fmt::print(out, "fidelity     {:.12f}\n", *r.fidelity_vs_reference);
    for (int k = 0; k < c.k_probes(); ++k) {
      fmt::print(out, "mean photons probe{} {:.12f}\n", k, mean_photon_number(*r.conditional, k));
    }
    out << "conditional probe state:\n";
    for (const Branch& b : r.conditional->branches()) {
      fmt::print(out, "  amp {}\n    {}\n", rect_polar(b.amp), probes_text(b.probes));
    }
    return;
  }
  if (cfg.format == Format::csv) {
    out << "stage,mode,probability,fidelity\n";
    fmt::print(out, "{},{},{},{}\n", stage, mode, num(r.probability),
               r.fidelity_vs_reference ? num(*r.fidelity_vs_reference) : "nan");
    return;
  }
  fmt::print(out, "postselect.stage={}\npostselect.mode={}\npostselect.probability={}\n", stage,
             mode, num(r.probability));
  fmt::print(out, "postselect.defined={}\n", r.defined() ? 1 : 0);
  if (!r.defined()) return;
  fmt::print(out, "postselect.fidelity={}\n", num(*r.fidelity_vs_reference));
  for (int k = 0; k < c.k_probes(); ++k) {
    fmt::print(out, "postselect.probe{}.mean_photons={}\n", k,
               num(mean_photon_number(*r.conditional, k)));
  }
  print_state(out, Format::record, "postselect", "conditional", *r.conditional);
}

void cmd_fringes(const RunConfig& cfg, const Circuit& c, std::ostream& out, std::ostream& err) {
  const int mode = cfg.mode.value_or(c.postselect_mode());
  const std::string stage = cfg.stage.value_or(c.readout_stage());
  const std::vector<double> phis = uniform_phases(cfg.points);
  const FringeScan scan = fringe_scan(c, mode, phis, stage);

  Emitter emit(cfg, out);
  std::ostream& csv = emit.artifact();
  csv << "phi,dp1,dp2\n";
  for (std::size_t i = 0; i < scan.phis.size(); ++i) {
    fmt::print(csv, "{},{},{}\n", num(scan.phis[i]), num(scan.intensity_dp1[i]),
               num(scan.intensity_dp2[i]));
  }
  emit.close();
  std::ostream& summary = cfg.out_path.empty() ? err : out;
  fmt::print(summary, "extracted_shift={}\nvisibility={}\n", num(scan.extracted_shift),
             num(scan.visibility));
}

std::vector<double> sweep_deltas(const RunConfig& cfg) {
  if (!cfg.deltas.empty()) return cfg.deltas;
  if (cfg.delta_points < 2 || !(cfg.delta_min > 0.0) || !(cfg.delta_max > cfg.delta_min)) {
    throw std::invalid_argument("leakage sweep needs 0 < delta-min < delta-max and >= 2 points");
  }
  std::vector<double> d(cfg.delta_points);
  const double lo = std::log(cfg.delta_min);
  const double hi = std::log(cfg.delta_max);
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d.size() - 1));
  }
  return d;
}

void cmd_leakage(const RunConfig& cfg, const Circuit& c, std::ostream& out, std::ostream& err) {
  const std::vector<double> deltas = sweep_deltas(cfg);
  const std::vector<LeakageRow> rows = leakage_sweep(c, deltas);

  Emitter emit(cfg, out);
  std::ostream& csv = emit.artifact();
  csv << "delta,leak_prob,fidelity_deficit\n";
  for (const LeakageRow& r : rows) {
    fmt::print(csv, "{},{},{}\n", num(r.delta), num(r.leak_probability), num(r.fidelity_deficit));
  }
  emit.close();
  std::ostream& summary = cfg.out_path.empty() ? err : out;
  if (std::any_of(rows.begin(), rows.end(), [](const LeakageRow& r) { return r.delta > 0; })) {
    fmt::print(summary, "quadratic_coefficient={}\n", num(fit_quadratic_coefficient(rows)));
  }
}

void print_tsvf(std::ostream& out, Format format, std::string_view name, const TsvfReport& rep) {
  if (format == Format::human) {
    fmt::print(out, "== TSVF weak values, {} ==\n", name);
    if (!rep.postselection_possible) {
      out << "post-selection impossible: <phi|psi> = 0\n";
    }
    fmt::print(out, "{:<8} {:>4} {:>34} {:>34} {:>34} {:>12}  {}\n", "stage", "mode", "forward amp",
               "backward amp", "weak value", "|weak value|", "verdict");
    for (const TsvfStage& s : rep.stages) {
      for (const TsvfModeEntry& e : s.modes) {
        const auto c = [](Complex z) { return fmt::format("{:+.9f}{:+.9f}i", z.real(), z.imag()); };
        fmt::print(out, "{:<8} {:>4} {:>34} {:>34} {:>34} {:>12.9f}  {}\n", s.label, e.mode,
                   c(e.forward_amp), c(e.backward_amp), c(e.weak_value), std::abs(e.weak_value),
                   e.overlap_nonzero ? "OVERLAP" : "NO-OVERLAP");
      }
    }
    return;
  }
  if (format == Format::csv) {
    for (const TsvfStage& s : rep.stages) {
      for (const TsvfModeEntry& e : s.modes) {
        fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{}\n", name, s.label, e.mode,
                   num(e.forward_amp.real()), num(e.forward_amp.imag()),
                   num(e.backward_amp.real()), num(e.backward_amp.imag()),
                   num(e.weak_value.real()), num(e.weak_value.imag()), num(std::abs(e.weak_value)),
                   e.overlap_nonzero ? "OVERLAP" : "NO-OVERLAP");
      }
    }
    return;
  }
  fmt::print(out, "{}.postselection_possible={}\n", name, rep.postselection_possible ? 1 : 0);
  for (const TsvfStage& s : rep.stages) {
    for (const TsvfModeEntry& e : s.modes) {
      const std::string key = fmt::format("{}.{}.mode{}", name, s.label, e.mode);
      fmt::print(out, "{0}.weak_value.re={1}\n{0}.weak_value.im={2}\n{0}.weak_value.abs={3}\n"
                      "{0}.overlap={4}\n",
                 key, num(e.weak_value.real()), num(e.weak_value.imag()),
                 num(std::abs(e.weak_value)), e.overlap_nonzero ? 1 : 0);
    }
  }
}

void cmd_tsvf(const RunConfig& cfg, const Circuit& c, std::ostream& out) {
  if (cfg.format == Format::csv) {
    out << "coupling,stage,mode,forward_re,forward_im,backward_re,backward_im,weak_re,weak_im,"
           "weak_abs,verdict\n";
  }
  print_tsvf(out, cfg.format, "coupled", tsvf_report(c, cfg.threshold));
  if (cfg.format == Format::human) out << '\n';
  print_tsvf(out, cfg.format, "decoupled", tsvf_report(c.decoupled(), cfg.threshold));
}

Circuit load_circuit(const RunConfig& cfg) {
  if (cfg.preset) {
    NestedMziParams p = cfg.params;
    p.alpha = parse_complex(cfg.alpha_text);
    return build_nested_mzi(p);
  }
  std::ifstream in(cfg.circuit_path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read '{}'", cfg.circuit_path));
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_circuit(text.str());
  } catch (const ParseError& e) {
    throw std::runtime_error(fmt::format("{}: {}", cfg.circuit_path, e.what()));
  }
}

void add_commands(CLI::App* input, RunConfig& cfg) {
  const std::map<std::string, Format> formats{
      {"human", Format::human}, {"csv", Format::csv}, {"record", Format::record}};
  input->require_subcommand(1);

  auto* run = input->add_subcommand("run", "Print every stage of the evolution");
  run->add_flag("--backward", cfg.backward, "Also print the backward-evolved bras");
  run->callback([&cfg] { cfg.command = Command::run; });

  auto* ps = input->add_subcommand("postselect", "Post-select on a photon mode");
  ps->add_option("--mode", cfg.mode, "System mode (default: the detector mode)");
  ps->add_option("--at", cfg.stage, "Stage label (default: the readout stage)");
  ps->callback([&cfg] { cfg.command = Command::postselect; });

  auto* fr = input->add_subcommand("fringes", "Scan the probe phase and write phi,dp1,dp2 CSV");
  fr->add_option("--mode", cfg.mode, "System mode to post-select on");
  fr->add_option("--at", cfg.stage, "Stage label (default: the readout stage)");
  fr->add_option("--points", cfg.points, "Number of scan phases over [0, 2pi)")
      ->check(CLI::Range(std::size_t{4}, std::size_t{1} << 20));
  fr->add_option("--out", cfg.out_path, "CSV path (default: stdout)");
  fr->callback([&cfg] { cfg.command = Command::fringes; });

  auto* ts = input->add_subcommand("tsvf", "Weak-value table with overlap verdicts");
  ts->add_option("--threshold", cfg.threshold, "|weak value| above which a mode counts")
      ->check(CLI::NonNegativeNumber);
  ts->callback([&cfg] { cfg.command = Command::tsvf; });

  auto* lk = input->add_subcommand("leakage", "Dark-port leakage under an inner-arm phase");
  lk->add_option("--delta-min", cfg.delta_min, "Smallest perturbation (log spacing)");
  lk->add_option("--delta-max", cfg.delta_max, "Largest perturbation");
  lk->add_option("--points", cfg.delta_points, "Number of perturbations");
  lk->add_option("--deltas", cfg.deltas, "Explicit perturbation list")->delimiter(',');
  lk->add_option("--out", cfg.out_path, "CSV path (default: stdout)");
  lk->callback([&cfg] { cfg.command = Command::leakage; });

  for (CLI::App* sub : {run, ps, fr, ts, lk}) {
    sub->add_option("--format", cfg.format, "human, csv or record")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Nested Mach-Zehnder interferometer with a Kerr QND probe", "nmzi"};
  app.require_subcommand(1);

  auto* preset = app.add_subcommand("nested-mzi", "Built-in nested interferometer with Kerr probe");
  preset->add_option("--r", cfg.params.r, "Reflectivity of the outer beam splitters")
      ->check(CLI::Range(0.0, 1.0));
  preset->add_option("--alpha", cfg.alpha_text, "Probe amplitude alpha, e.g. 2 or 1+0.5i");
  preset->add_option("--eps-tau", cfg.params.epsilon_tau, "Kerr phase per photon (rad)");
  preset->add_option("--eta-tau", cfg.params.eta_tau, "Inner-arm cross coupling (rad)");
  preset->add_flag("--eta-inner-phase", cfg.params.eta_inner_phase,
                   "Multiply inner branches by exp(-i eta tau)");
  preset->callback([&cfg] { cfg.preset = true; });
  preset->preparse_callback([&cfg](std::size_t) { cfg.preset = true; });
  add_commands(preset, cfg);

  auto* file = app.add_subcommand("file", "Circuit description file");
  file->add_option("path", cfg.circuit_path, "Circuit file")->required();
  add_commands(file, cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    const Circuit circuit = load_circuit(cfg);
    switch (cfg.command) {
      case Command::run: cmd_run(cfg, circuit, out); break;
      case Command::postselect: cmd_postselect(cfg, circuit, out); break;
      case Command::fringes: cmd_fringes(cfg, circuit, out, err); break;
      case Command::tsvf: cmd_tsvf(cfg, circuit, out); break;
      case Command::leakage: cmd_leakage(cfg, circuit, out, err); break;
    }
  } catch (const std::exception& e) {
    fmt::print(err, "nmzi: error: {}\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace nmzi::cli
