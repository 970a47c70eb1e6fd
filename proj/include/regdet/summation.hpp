#pragma once

#include <cmath>

namespace regdet {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Double-double accumulator (about 106 bits of significand).
class DoubleDoubleSum {
 public:
  void add(double x) {
    double s, e;
    two_sum(hi_, x, s, e);
    e += lo_;
    fast_two_sum(s, e, hi_, lo_);
  }
  void add(const DoubleDoubleSum& other) {
    double s, e;
    two_sum(hi_, other.hi_, s, e);
    e += lo_ + other.lo_;
    fast_two_sum(s, e, hi_, lo_);
  }
  double value() const { return hi_ + lo_; }
  double hi() const { return hi_; }
  double lo() const { return lo_; }

 private:
  static void two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    double bb = s - a;
    e = (a - (s - bb)) + (b - bb);
  }
  static void fast_two_sum(double a, double b, double& s, double& e) {
    s = a + b;
    e = b - (s - a);
  }
  double hi_ = 0.0;
  double lo_ = 0.0;
};

enum class Precision { Compensated, DoubleDouble };

}  // namespace regdet
