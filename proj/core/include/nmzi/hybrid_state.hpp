#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmzi {

using Complex = std::complex<double>;

/// Absolute tolerance used when merging branches and dropping null ones.
inline constexpr double kMergeTolerance = 1e-12;

/// Raised when two states (or a state and an element) disagree on M or K.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for a system-mode or probe index outside the declared range.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/**
 * One term of the joint state: the single photon sits in system mode `mode`
 * with amplitude `amp`, and probe k is the coherent state |probes[k]>.
 */
struct Branch {
  int mode = 0;
  Complex amp{};
  std::vector<Complex> probes;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct KetTag {};
struct BraTag {};

/**
 * Superposition of branches over M system modes and K coherent probe modes.
 *
 * The tag separates kets (forward evolving) from bras (backward evolving).
 * A bra is stored as the ket it is the dual of; conjugation happens inside
 * inner_product, so both directions share the element code.
 */
template <class Tag>
class BranchState {
 public:
  BranchState(int m_modes, int k_probes, std::vector<Branch> branches = {});

  /// One branch with the photon in `mode`.
  static BranchState single(int m_modes, int mode, Complex amp,
                            std::vector<Complex> probes);

  int m_modes() const { return m_modes_; }
  int k_probes() const { return k_probes_; }
  std::span<const Branch> branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }
  bool empty() const { return branches_.empty(); }

  /// Same shape, new branch list (validated).
  BranchState with_branches(std::vector<Branch> branches) const {
    return BranchState(m_modes_, k_probes_, std::move(branches));
  }

  friend bool operator==(const BranchState&, const BranchState&) = default;

 private:
  int m_modes_;
  int k_probes_;
  std::vector<Branch> branches_;
};

using HybridState = BranchState<KetTag>;
using BraState = BranchState<BraTag>;

extern template class BranchState<KetTag>;
extern template class BranchState<BraTag>;

/// Reinterpret a ket as the bra dual to it (and back).
BraState as_bra(const HybridState& ket);
HybridState as_ket(const BraState& bra);

/// <a|b> for coherent states: exp(-|a|^2/2 - |b|^2/2 + conj(a) b).
Complex coherent_overlap(Complex a, Complex b);

/// Product of coherent overlaps over all probe modes.
Complex probe_overlap(std::span<const Complex> bra_probes,
                      std::span<const Complex> ket_probes);

/// Full inner product including coherent cross terms. Throws ShapeError.
Complex inner_product(const BraState& bra, const HybridState& ket);

/// <s|s>, real by construction.
template <class Tag>
double squared_norm(const BranchState<Tag>& s);

/**
 * Combine branches with equal mode and probe amplitudes equal within `tol`
 * (per component, absolute), drop branches with |amp| < tol, and sort into
 * canonical order (mode, then probe amplitudes lexicographically).
 */
template <class Tag>
BranchState<Tag> merge_branches(const BranchState<Tag>& s,
                                double tol = kMergeTolerance);

/// Keep only the branches with the photon in `mode` (unnormalized).
template <class Tag>
BranchState<Tag> project_onto_mode(const BranchState<Tag>& s, int mode);

/// Multiply every amplitude by `factor`.
template <class Tag>
BranchState<Tag> scaled(const BranchState<Tag>& s, Complex factor);

std::string describe_shape(int m_modes, int k_probes);

}  // namespace nmzi
