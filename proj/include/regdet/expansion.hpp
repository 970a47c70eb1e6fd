#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace regdet {

enum class Direction { ToInfinity, ToZero };

// One term coeff * x^alpha * log(x)^k.
struct ExpTerm {
  double alpha = 0.0;
  int k = 0;
  double coeff = 0.0;
};

// Order of the o(x^alpha log^k x) remainder.
struct Remainder {
  double alpha = 0.0;
  int log_power = 0;
};

struct BasisPair {
  double alpha = 0.0;
  int k = 0;
  friend auto operator<=>(const BasisPair&, const BasisPair&) = default;
};

// x^alpha * log(x)^k
double basis_function(double alpha, int k, double x);

// Finite asymptotic expansion at infinity or at zero. Terms are kept sorted
// from dominant to subdominant; the constructor rejects duplicate (alpha, k)
// pairs and remainders that are not below every term.
class Expansion {
 public:
  Expansion() = default;
  Expansion(Direction dir, std::vector<ExpTerm> terms,
            std::optional<Remainder> remainder = std::nullopt);

  Direction direction() const { return dir_; }
  const std::vector<ExpTerm>& terms() const { return terms_; }
  const Remainder& remainder() const { return rem_; }

  double operator()(double x) const;
  // Coefficient of x^alpha log^k x, zero when absent.
  double coefficient(double alpha, int k) const;
  std::vector<BasisPair> pairs() const;

  Expansion scaled(double c) const;
  // Sum of two expansions in the same direction. The remainder is the weaker
  // of the two; terms swallowed by it are dropped.
  friend Expansion operator+(const Expansion& a, const Expansion& b);

 private:
  Direction dir_ = Direction::ToInfinity;
  std::vector<ExpTerm> terms_;
  Remainder rem_;
};

double eval_expansion(const Expansion& e, double x);
// Constant coefficient a_00.
double regularized_limit(const Expansion& e);

struct BasisSpec {
  std::vector<BasisPair> pairs;
  bool must_contain_constant = false;

  BasisSpec() = default;
  BasisSpec(std::vector<BasisPair> p, bool need_constant = false)
      : pairs(std::move(p)), must_contain_constant(need_constant) {}

  std::size_t size() const { return pairs.size(); }
  bool contains_constant() const;
  // Throws InputError for duplicates, negative log powers or a missing
  // constant when one is required.
  void validate() const;
};

// Parses "2:1,2:0,0:0" style lists of alpha:k pairs.
BasisSpec parse_basis(const std::string& text);
std::string format_basis(const BasisSpec& b);

struct Samples {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  void push_back(double xi, double yi) {
    x.push_back(xi);
    y.push_back(yi);
  }
  // x positive and strictly increasing, y finite.
  void validate() const;
};

// start * ratio^j for j = 0..count-1
std::vector<double> geometric_grid(double start, double ratio, int count);
Samples sample_function(const std::function<double(double)>& f, std::span<const double> xs);
// Two-column x,y CSV; lines starting with '#' and a non-numeric header are skipped.
Samples load_samples_csv(const std::string& path);

struct FitOptions {
  double condition_cap = 1e13;
};

struct FitReport {
  std::map<BasisPair, double> coefficients;
  double rms_residual = 0.0;
  double condition_estimate = 1.0;
  double stability_delta = 0.0;
  std::vector<double> residuals;

  double coefficient(double alpha, int k) const;
  double constant() const { return coefficient(0.0, 0); }
  Expansion to_expansion(Direction dir) const;
};

FitReport fit_expansion(const Samples& s, const BasisSpec& b, const FitOptions& opt = {});

struct RegLimit {
  double value = 0.0;
  double uncertainty = 0.0;
  FitReport report;
};

RegLimit extract_reglimit(const Samples& s, const BasisSpec& b, const FitOptions& opt = {});

}  // namespace regdet
