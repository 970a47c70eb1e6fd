#include "regdet/spanning_trees.hpp"

#include <mpfr.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "regdet/errors.hpp"

namespace regdet {

namespace {

constexpr std::int64_t kMaxVertices = 4096;
// A consistent reconstruction over this many extra primes ends the CRT loop.
constexpr int kStableRounds = 3;

// Largest prime size for which bandwidth + 1 unreduced updates of size p^2
// stay below 2^53, so elimination can defer reductions until a pivot step.
std::int64_t prime_ceiling(int bandwidth) {
  int bits = static_cast<int>((52.0 - std::log2(bandwidth + 2.0)) / 2.0);
  bits = std::clamp(bits, 16, 26);
  return std::int64_t(1) << bits;
}

bool is_prime(std::int64_t p) {
  if (p < 2) return false;
  for (std::int64_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

std::int64_t inverse_mod(std::int64_t a, std::int64_t p) {
  std::int64_t t = 0, nt = 1, r = p, nr = a % p;
  if (nr < 0) nr += p;
  while (nr != 0) {
    std::int64_t q = r / nr;
    std::int64_t tmp = t - q * nt;
    t = nt;
    nt = tmp;
    tmp = r - q * nr;
    r = nr;
    nr = tmp;
  }
  return t < 0 ? t + p : t;
}

// Position of coordinate x in the folded order 0, n-1, 1, n-2, 2, ...; cyclic
// neighbours end up at most two places apart.
std::vector<int> folded_positions(int n) {
  std::vector<int> seq{0};
  for (int i = 1; 2 * i <= n; ++i) {
    if (2 * i == n) {
      seq.push_back(i);
    } else {
      seq.push_back(n - i);
      seq.push_back(i);
    }
  }
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < seq.size(); ++j) pos[static_cast<std::size_t>(seq[j])] = static_cast<int>(j);
  return pos;
}

// Lower band of the reduced Laplacian in the folded order: for each row the
// off-diagonal entries as (column, multiplicity) pairs.
struct BandPattern {
  int size = 0;       // rows of the reduced matrix
  int bandwidth = 0;  // max |row - col| over nonzeros
  int diagonal = 0;
  std::vector<std::vector<std::pair<int, int>>> lower;
};

BandPattern build_pattern(int m, int n) {
  auto pos = folded_positions(n);
  int vertices = 1;
  for (int i = 0; i < m; ++i) vertices *= n;
  std::vector<int> stride(static_cast<std::size_t>(m));
  for (int i = m - 1, s = 1; i >= 0; --i, s *= n) stride[static_cast<std::size_t>(i)] = s;

  BandPattern b;
  b.size = vertices - 1;
  b.diagonal = 2 * m;
  b.lower.resize(static_cast<std::size_t>(b.size));
  std::vector<int> x(static_cast<std::size_t>(m), 0);
  for (int v = 0; v < vertices; ++v) {
    int rem = v;
    for (int i = m - 1; i >= 0; --i) {
      x[static_cast<std::size_t>(i)] = rem % n;
      rem /= n;
    }
    auto index_of = [&](const std::vector<int>& c) {
      int idx = 0;
      for (int i = 0; i < m; ++i) idx += pos[static_cast<std::size_t>(c[static_cast<std::size_t>(i)])] * stride[static_cast<std::size_t>(i)];
      return idx;
    };
    int u = index_of(x);
    if (u == 0) continue;  // grounded vertex
    for (int i = 0; i < m; ++i) {
      for (int step : {1, n - 1}) {
        auto y = x;
        y[static_cast<std::size_t>(i)] = (y[static_cast<std::size_t>(i)] + step) % n;
        int w = index_of(y);
        if (w == 0 || w >= u) continue;
        auto& row = b.lower[static_cast<std::size_t>(u - 1)];
        auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.first == w - 1; });
        if (it == row.end())
          row.push_back({w - 1, 1});
        else
          ++it->second;
        b.bandwidth = std::max(b.bandwidth, u - w);
      }
    }
  }
  return b;
}

// Determinants of the reduced Laplacian modulo kLanes primes at once by
// symmetric band elimination, one prime per vector lane. Pivots are taken in
// blocks of kBlock: a panel step factors the block columns, then each later
// row takes all of the block's updates while it sits in cache. Entries stay
// unreduced until their column becomes a pivot column. A lane whose pivot
// vanishes reports -1.
constexpr int kLanes = 8;
constexpr int kBlock = 16;  // multiple of 8
typedef double Lanes __attribute__((vector_size(kLanes * sizeof(double))));

bool all_zero(const Lanes& v) {
  for (int t = 0; t < kLanes; ++t)
    if (v[t] != 0.0) return false;
  return true;
}

struct BandWork {
  std::vector<Lanes> a;
  std::vector<Lanes> c;  // reduced pivot columns of the current block
  std::vector<Lanes> l;  // multipliers of the current block
};

std::array<std::int64_t, kLanes> band_det_mod(const BandPattern& b, const std::array<std::int64_t, kLanes>& primes, BandWork& work) {
  const int n = b.size, bw = b.bandwidth;
  const std::size_t w = static_cast<std::size_t>(bw) + 1;
  // Panel rows are zero padded so every pivot of a block can be applied over
  // the same column range.
  const std::size_t pw = w + kBlock;
  const Lanes zero{};
  Lanes p{}, pinv{};
  for (int t = 0; t < kLanes; ++t) {
    p[t] = static_cast<double>(primes[static_cast<std::size_t>(t)]);
    pinv[t] = 1.0 / p[t];
  }
  const double magic = 6755399441055744.0;  // 1.5 * 2^52, rounds to nearest integer
  auto reduce = [&](Lanes r) {
    r -= ((r * pinv + magic) - magic) * p;
    return r < zero ? r + p : r;
  };
  auto& a = work.a;
  a.assign(static_cast<std::size_t>(n) * w, zero);
  // at(i, j) = A(i, j) for i - bw <= j <= i
  auto at = [&](int i, int j) -> Lanes& { return a[static_cast<std::size_t>(i) * w + static_cast<std::size_t>(bw - (i - j))]; };
  for (int i = 0; i < n; ++i) {
    at(i, i) = zero + static_cast<double>(b.diagonal);
    for (auto [j, mult] : b.lower[static_cast<std::size_t>(i)]) at(i, j) = p - static_cast<double>(mult);
  }
  std::array<std::int64_t, kLanes> det;
  det.fill(1);
  for (int k0 = 0; k0 < n; k0 += kBlock) {
    const int k1 = std::min(n, k0 + kBlock);
    work.c.assign(kBlock * pw, zero);
    work.l.assign(kBlock * pw, zero);
    for (int k = k0; k < k1; ++k) {
      Lanes& pivot = at(k, k);
      pivot = reduce(pivot);
      Lanes dinv{};
      for (int t = 0; t < kLanes; ++t) {
        auto& dt = det[static_cast<std::size_t>(t)];
        const std::int64_t pt = primes[static_cast<std::size_t>(t)];
        auto d = static_cast<std::int64_t>(pivot[t]);
        if (d == 0) {
          // Keep the lane running on a dummy pivot; its result is discarded.
          dt = -1;
          d = 1;
          pivot[t] = 1.0;
        }
        if (dt >= 0) dt = static_cast<std::int64_t>((static_cast<unsigned __int128>(dt) * static_cast<std::uint64_t>(d)) % static_cast<std::uint64_t>(pt));
        dinv[t] = static_cast<double>(inverse_mod(d, pt));
      }
      const int last = std::min(n - 1, k + bw);
      Lanes* ck = &work.c[static_cast<std::size_t>(k - k0) * pw] - k;
      Lanes* lk = &work.l[static_cast<std::size_t>(k - k0) * pw] - k;
      for (int j = k + 1; j <= last; ++j) {
        ck[j] = reduce(at(j, k));
        lk[j] = reduce(ck[j] * dinv);
      }
      // Columns inside the block are needed by its later pivots.
      const int jend = std::min(k1 - 1, last);
      for (int i = k + 1; i <= last; ++i) {
        const Lanes l = lk[i];
        if (all_zero(l)) continue;
        Lanes* row = &at(i, i) - i;
        const int jmax = std::min(i, jend);
        for (int j = k + 1; j <= jmax; ++j) row[j] -= l * ck[j];
      }
    }
    const int last_row = std::min(n - 1, k1 - 1 + bw);
    for (int i = k1; i <= last_row; ++i) {
      Lanes* row = &at(i, i) - i;  // row[j] = A(i, j)
      const int jmax = std::min(i, k1 - 1 + bw);
      for (int g = 0; g < kBlock; g += 8) {
        const int k = k0 + g;
        auto lv = [&](int t) { return work.l[static_cast<std::size_t>(g + t) * pw + static_cast<std::size_t>(i - k - t)]; };
        const Lanes l0 = lv(0), l1 = lv(1), l2 = lv(2), l3 = lv(3), l4 = lv(4), l5 = lv(5), l6 = lv(6), l7 = lv(7);
        if (all_zero(l0) && all_zero(l1) && all_zero(l2) && all_zero(l3) && all_zero(l4) && all_zero(l5) && all_zero(l6) && all_zero(l7)) continue;
        const Lanes* c0 = &work.c[static_cast<std::size_t>(g) * pw] - k;
        const Lanes* c1 = c0 + pw - 1;
        const Lanes* c2 = c1 + pw - 1;
        const Lanes* c3 = c2 + pw - 1;
        const Lanes* c4 = c3 + pw - 1;
        const Lanes* c5 = c4 + pw - 1;
        const Lanes* c6 = c5 + pw - 1;
        const Lanes* c7 = c6 + pw - 1;
        for (int j = k1; j <= jmax; ++j)
          row[j] -= (l0 * c0[j] + l1 * c1[j] + l2 * c2[j] + l3 * c3[j]) + (l4 * c4[j] + l5 * c5[j] + l6 * c6[j] + l7 * c7[j]);
      }
    }
  }
  return det;
}

}  // namespace

mpz_class spanning_tree_count(const DiscreteTorus& t) {
  if (t.points() > kMaxVertices) throw InputError("spanning tree count is limited to n^m <= 4096");
  const int m = t.m(), n = static_cast<int>(t.n());
  auto pattern = build_pattern(m, n);
  if (pattern.size == 0) return 1;

  // The reduced Laplacian is positive definite, so its determinant is at most
  // the product of its diagonal entries. The loop usually ends earlier, once
  // the reconstruction agrees with several further primes.
  const double bound_bits = pattern.size * std::log2(2.0 * m) + 2.0;
  mpz_class residue = 0, modulus = 1;
  double bits = 0.0;
  int stable = 0;
  BandWork work;
  std::int64_t next = prime_ceiling(pattern.bandwidth) - 1;
  while (bits < bound_bits && stable < kStableRounds) {
    std::array<std::int64_t, kLanes> primes;
    for (auto& q : primes) {
      while (next >= 3 && !is_prime(next)) next -= 2;
      if (next < 3) throw NumericalError("ran out of primes for the modular determinant");
      q = next;
      next -= 2;
    }
    auto res = band_det_mod(pattern, primes, work);
    for (int t = 0; t < kLanes && bits < bound_bits && stable < kStableRounds; ++t) {
      const std::int64_t p = primes[static_cast<std::size_t>(t)], r = res[static_cast<std::size_t>(t)];
      if (r < 0) continue;
      // Garner step: residue += modulus * ((r - residue) / modulus mod p)
      std::int64_t cur = static_cast<std::int64_t>(mpz_fdiv_ui(residue.get_mpz_t(), static_cast<unsigned long>(p)));
      std::int64_t minv = inverse_mod(static_cast<std::int64_t>(mpz_fdiv_ui(modulus.get_mpz_t(), static_cast<unsigned long>(p))), p);
      std::int64_t diff = ((r - cur) % p + p) % p;
      stable = diff == 0 ? stable + 1 : 0;
      std::int64_t step = static_cast<std::int64_t>((static_cast<unsigned __int128>(diff) * minv) % p);
      residue += modulus * mpz_class(static_cast<unsigned long>(step));
      modulus *= static_cast<unsigned long>(p);
      bits += std::log2(static_cast<double>(p));
    }
  }
  return residue;
}

mpz_class eigenvalue_product_exact(const DiscreteTorus& t) {
  const int m = t.m();
  const std::int64_t n = t.n();
  const double terms = static_cast<double>(t.points() - 1);
  // Bits of the product from its double-precision log, plus room for the
  // rounding of every factor and a safety margin.
  const double product_bits = log_det_rescaled(t) / std::log(2.0);
  const mpfr_prec_t prec = static_cast<mpfr_prec_t>(product_bits * (1.0 + 1e-9) + 2.0 * std::log2(terms + 1.0) + 96.0);

  // Folded axis values 4 sin^2(pi k/n) for k = 0..n/2 with multiplicities.
  const std::int64_t top = n / 2;
  std::vector<__mpfr_struct> axis(static_cast<std::size_t>(top + 1));
  std::vector<int> weight(static_cast<std::size_t>(top + 1));
  mpfr_t pi, tmp, lambda, prod;
  mpfr_inits2(prec, pi, tmp, lambda, prod, static_cast<mpfr_ptr>(nullptr));
  mpfr_const_pi(pi, MPFR_RNDN);
  for (std::int64_t k = 0; k <= top; ++k) {
    mpfr_ptr v = &axis[static_cast<std::size_t>(k)];
    mpfr_init2(v, prec);
    mpfr_mul_si(tmp, pi, static_cast<long>(k), MPFR_RNDN);
    mpfr_div_si(tmp, tmp, static_cast<long>(n), MPFR_RNDN);
    mpfr_sin(tmp, tmp, MPFR_RNDN);
    mpfr_sqr(tmp, tmp, MPFR_RNDN);
    mpfr_mul_ui(v, tmp, 4, MPFR_RNDN);
    weight[static_cast<std::size_t>(k)] = (k == 0 || 2 * k == n) ? 1 : 2;
  }
  mpfr_set_ui(prod, 1, MPFR_RNDN);

  std::vector<std::int64_t> idx(static_cast<std::size_t>(m), 0);
  while (true) {
    long mult = 1;
    bool origin = true;
    mpfr_set_ui(lambda, 0, MPFR_RNDN);
    for (int i = 0; i < m; ++i) {
      auto k = static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]);
      mpfr_add(lambda, lambda, &axis[k], MPFR_RNDN);
      mult *= weight[k];
      origin = origin && k == 0;
    }
    if (!origin) {
      mpfr_pow_ui(tmp, lambda, static_cast<unsigned long>(mult), MPFR_RNDN);
      mpfr_mul(prod, prod, tmp, MPFR_RNDN);
    }
    int i = m - 1;
    while (i >= 0 && ++idx[static_cast<std::size_t>(i)] > top) idx[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
  }

  mpz_class rounded;
  mpfr_round(tmp, prod);
  mpfr_get_z(rounded.get_mpz_t(), tmp, MPFR_RNDN);
  mpfr_sub(tmp, prod, tmp, MPFR_RNDN);
  double frac = std::fabs(mpfr_get_d(tmp, MPFR_RNDN));
  for (auto& v : axis) mpfr_clear(&v);
  mpfr_clears(pi, tmp, lambda, prod, static_cast<mpfr_ptr>(nullptr));
  if (!(frac < 1e-6)) throw NumericalError("eigenvalue product is not close to an integer");
  return rounded;
}

double log_mpz(const mpz_class& v) {
  if (sgn(v) <= 0) throw InputError("log of a non-positive integer");
  long exp = 0;
  double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

MatrixTreeCheck matrix_tree_check(const DiscreteTorus& t, const LatticeOptions& opt) {
  MatrixTreeCheck c;
  c.trees = spanning_tree_count(t);
  c.eigen_product = eigenvalue_product_exact(t);
  mpz_class expected = c.trees * mpz_class(static_cast<unsigned long>(t.points()));
  c.integer_match = c.eigen_product == expected;
  c.log_rescaled = log_det_rescaled(t, opt);
  c.log_expected = log_mpz(expected);
  c.rel_diff = std::fabs(c.log_rescaled - c.log_expected) / std::max(1.0, std::fabs(c.log_expected));
  return c;
}

}  // namespace regdet
