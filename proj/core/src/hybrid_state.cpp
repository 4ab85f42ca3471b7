#include "nmzi/hybrid_state.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

namespace nmzi {

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

bool probes_close(std::span<const Complex> a, std::span<const Complex> b, double tol) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].real() - b[k].real()) > tol) return false;
    if (std::abs(a[k].imag() - b[k].imag()) > tol) return false;
  }
  return true;
}

bool canonical_less(const Branch& a, const Branch& b) {
  if (a.mode != b.mode) return a.mode < b.mode;
  for (std::size_t k = 0; k < a.probes.size(); ++k) {
    const auto ka = std::make_tuple(a.probes[k].real(), a.probes[k].imag());
    const auto kb = std::make_tuple(b.probes[k].real(), b.probes[k].imag());
    if (ka != kb) return ka < kb;
  }
  return false;
}

}  // namespace

std::string describe_shape(int m_modes, int k_probes) {
  return fmt::format("(M={}, K={})", m_modes, k_probes);
}

template <class Tag>
BranchState<Tag>::BranchState(int m_modes, int k_probes, std::vector<Branch> branches)
    : m_modes_(m_modes), k_probes_(k_probes), branches_(std::move(branches)) {
  if (m_modes_ < 1 || k_probes_ < 0) {
    throw ShapeError("invalid state shape " + describe_shape(m_modes_, k_probes_));
  }
  for (const Branch& b : branches_) {
    if (b.mode < 0 || b.mode >= m_modes_) {
      throw IndexError(fmt::format("branch mode {} outside [0, {})", b.mode, m_modes_));
    }
    if (static_cast<int>(b.probes.size()) != k_probes_) {
      throw ShapeError(fmt::format("branch carries {} probe amplitudes, state declares K={}",
                                   b.probes.size(), k_probes_));
    }
    if (!finite(b.amp) || !std::all_of(b.probes.begin(), b.probes.end(), finite)) {
      throw std::domain_error("non-finite amplitude in branch");
    }
  }
}

template <class Tag>
BranchState<Tag> BranchState<Tag>::single(int m_modes, int mode, Complex amp,
                                          std::vector<Complex> probes) {
  const int k = static_cast<int>(probes.size());
  return BranchState(m_modes, k, {Branch{mode, amp, std::move(probes)}});
}

template class BranchState<KetTag>;
template class BranchState<BraTag>;

BraState as_bra(const HybridState& ket) {
  const auto b = ket.branches();
  return BraState(ket.m_modes(), ket.k_probes(), {b.begin(), b.end()});
}

HybridState as_ket(const BraState& bra) {
  const auto b = bra.branches();
  return HybridState(bra.m_modes(), bra.k_probes(), {b.begin(), b.end()});
}

Complex coherent_overlap(Complex a, Complex b) {
  return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

Complex probe_overlap(std::span<const Complex> bra_probes,
                      std::span<const Complex> ket_probes) {
  if (bra_probes.size() != ket_probes.size()) {
    throw ShapeError("probe count mismatch in overlap");
  }
  Complex acc{1.0, 0.0};
  for (std::size_t k = 0; k < bra_probes.size(); ++k) {
    acc *= coherent_overlap(bra_probes[k], ket_probes[k]);
  }
  return acc;
}

Complex inner_product(const BraState& bra, const HybridState& ket) {
  if (bra.m_modes() != ket.m_modes() || bra.k_probes() != ket.k_probes()) {
    throw ShapeError("inner product between " +
                     describe_shape(bra.m_modes(), bra.k_probes()) + " and " +
                     describe_shape(ket.m_modes(), ket.k_probes()));
  }
  Complex acc{};
  for (const Branch& b : bra.branches()) {
    for (const Branch& k : ket.branches()) {
      if (b.mode != k.mode) continue;
      acc += std::conj(b.amp) * k.amp * probe_overlap(b.probes, k.probes);
    }
  }
  return acc;
}

template <class Tag>
double squared_norm(const BranchState<Tag>& s) {
  const auto b = s.branches();
  const HybridState ket(s.m_modes(), s.k_probes(), {b.begin(), b.end()});
  return inner_product(as_bra(ket), ket).real();
}

template <class Tag>
BranchState<Tag> merge_branches(const BranchState<Tag>& s, double tol) {
  if (!(tol >= 0.0)) throw std::invalid_argument("merge tolerance must be >= 0");
  std::vector<Branch> groups;
  for (const Branch& b : s.branches()) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Branch& g) {
      return g.mode == b.mode && probes_close(g.probes, b.probes, tol);
    });
    if (it == groups.end()) {
      groups.push_back(b);
    } else {
      it->amp += b.amp;
    }
  }
  std::erase_if(groups, [tol](const Branch& g) { return std::abs(g.amp) < tol; });
  std::sort(groups.begin(), groups.end(), canonical_less);
  return s.with_branches(std::move(groups));
}

template <class Tag>
BranchState<Tag> project_onto_mode(const BranchState<Tag>& s, int mode) {
  if (mode < 0 || mode >= s.m_modes()) {
    throw IndexError(fmt::format("mode {} outside [0, {})", mode, s.m_modes()));
  }
  std::vector<Branch> kept;
  for (const Branch& b : s.branches()) {
    if (b.mode == mode) kept.push_back(b);
  }
  return s.with_branches(std::move(kept));
}

template <class Tag>
BranchState<Tag> scaled(const BranchState<Tag>& s, Complex factor) {
  std::vector<Branch> out(s.branches().begin(), s.branches().end());
  for (Branch& b : out) b.amp *= factor;
  return s.with_branches(std::move(out));
}

template double squared_norm(const HybridState&);
template double squared_norm(const BraState&);
template HybridState merge_branches(const HybridState&, double);
template BraState merge_branches(const BraState&, double);
template HybridState project_onto_mode(const HybridState&, int);
template BraState project_onto_mode(const BraState&, int);
template HybridState scaled(const HybridState&, Complex);
template BraState scaled(const BraState&, Complex);

}  // namespace nmzi
