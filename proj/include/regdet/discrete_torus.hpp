#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "regdet/summation.hpp"

namespace regdet {

// The m-fold product of Z/nZ with the Laplacian scaled by n^2/(4 pi^2), so
// its eigenvalues (n^2/pi^2) sum_i sin^2(pi k_i/n) approach |k|^2.
class DiscreteTorus {
 public:
  DiscreteTorus(int m, std::int64_t n);

  int m() const { return m_; }
  std::int64_t n() const { return n_; }
  // n^m
  std::int64_t points() const { return points_; }

 private:
  int m_;
  std::int64_t n_;
  std::int64_t points_;
};

struct LatticeOptions {
  unsigned threads = 0;  // 0: REGDET_THREADS or 1
  Precision precision = Precision::Compensated;
  bool use_symmetry = true;  // fold k and n-k together
};

// Thread count from the REGDET_THREADS environment variable, default 1.
unsigned default_thread_count();

// s_k = (n^2/pi^2) sin^2(pi k/n) for k = 0..n-1, exactly symmetric in k <-> n-k.
std::vector<double> spectrum_1d(std::int64_t n);
// sin^2 evaluated at min(x, n-x) so the symmetry holds for real x in [0, n].
double omega_1d(std::int64_t n, double x);
double omega(const DiscreteTorus& t, std::span<const double> x);

// Sum of log of the nonzero eigenvalues.
double log_det(const DiscreteTorus& t, const LatticeOptions& opt = {});
// Same for the unnormalized graph Laplacian (eigenvalues sum_i 4 sin^2(pi k_i/n)).
double log_det_rescaled(const DiscreteTorus& t, const LatticeOptions& opt = {});
// Tr(Delta_n + z^2)^{-alpha}, zero mode included.
double resolvent_trace(const DiscreteTorus& t, double z, int alpha, const LatticeOptions& opt = {});

// Axes pinned to zero in an inclusion-exclusion term.
struct SublatticeMask {
  std::vector<int> axes;
  void validate(int m) const;
};

// Sum of (omega + z^2)^{-alpha} over the grid {0..n}^m with the masked axes set to 0.
double sublattice_sum(const DiscreteTorus& t, const SublatticeMask& mask, double z, int alpha,
                      const LatticeOptions& opt = {});
// Tr(Delta_n + z^2)^{-m} written as the alternating sum of sublattice sums over
// the closed grid [0, n]^m.
double trace_inclusion_exclusion(const DiscreteTorus& t, double z, const LatticeOptions& opt = {});

// All n^m eigenvalues in ascending order (only for n^m <= 2^22).
std::vector<double> sorted_spectrum(const DiscreteTorus& t);

}  // namespace regdet
