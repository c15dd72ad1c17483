#pragma once

#include <functional>
#include <vector>

namespace perco {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  bool converged = false;
  int evaluations = 0;
};

struct QuadOptions {
  double abs_tol = 0.0;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

// Globally adaptive Gauss-Kronrod (7/15) on [a, b].
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     const QuadOptions& opt = {});

// Integral over [a, inf) through r = a + u / (1 - u).
QuadResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                 const QuadOptions& opt = {});

// Integral over [breaks.front(), breaks.back()] (or to infinity), split at
// every interior breakpoint.
QuadResult integrate_piecewise(const std::function<double(double)>& f, std::vector<double> breaks,
                               bool to_infinity, const QuadOptions& opt = {});

}  // namespace perco
