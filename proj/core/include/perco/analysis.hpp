#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perco/models.hpp"
#include "perco/quadrature.hpp"
#include "perco/sampling.hpp"

namespace perco {

class DivergenceError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Radial profile r -> g(r) entering the moment and tail integrals.
struct RadialProfile {
  enum class Kind {
    indicator,      // 1{r <= r0}
    power_min,      // min(1, r^-c)
    exponential,    // exp(-mu r)
    iercm_mean,     // E[1 - exp(-eta W1 W2 / r^alpha)], Pareto(beta) weights
    iercm_deijfen   // deijfen_bound(r^alpha / eta, beta)
  };
  Kind kind = Kind::exponential;
  double r0 = 1.0;
  double c = 5.0;
  double mu = 1.0;
  double eta = 1.0;
  double alpha = 5.0;
  double beta = 2.0;

  static RadialProfile indicator(double r0);
  static RadialProfile power_min(double c);
  static RadialProfile exponential(double mu);
  static RadialProfile iercm_mean(double eta, double alpha, double beta);
  static RadialProfile iercm_deijfen(double eta, double alpha, double beta);
  // Profile of a model connection function; inhomogeneous kinds need beta.
  static RadialProfile from_connection(const ConnectionFunction& cf, double beta = 2.0);

  double operator()(double r) const;
  std::vector<double> kinks() const;
  // Polynomial decay exponent of the tail, if the tail is a power law.
  std::optional<double> tail_exponent() const;
  std::string describe() const;
};

struct MomentReport {
  int j = 1;
  double value = 0.0;
  double abs_error_bound = 0.0;
  bool finite = true;
  std::string integrand;
  std::string divergence;  // reason when !finite
};

MomentReport moment_integral(const RadialProfile& g, int j, double rel_tol = 1e-10);

// 2 pi int_radius^inf r g(r) dr
double tail_mass(const RadialProfile& g, double radius);

// Smallest R with lambda^2 * area * tail_mass(g, R) < budget.
double default_truncation_radius(const RadialProfile& g, double lambda, double window_area,
                                 double budget = 1e-3);

double deijfen_bound(double t, double beta);
double deijfen_constant(double beta);

double block_contribution(int m, const RadialProfile& g);
std::uint64_t binomial(int n, int k);
std::uint64_t block_structures_count(int n, int k);

// A block structure as the list of odd gaps 2m+1 (block sizes 2m+2) summing to n.
using BlockStructure = std::vector<int>;

struct BlockEnumeration {
  int n = 0;
  std::vector<std::uint64_t> compositions_by_k;  // all cut-point sets with k cuts
  std::vector<std::uint64_t> even_blocks_by_k;   // those whose parts are all odd
  std::vector<BlockStructure> even_structures;
};
BlockEnumeration enumerate_block_structures(int n);

struct BoundTerm {
  int n = 0;
  double value = 0.0;      // lambda^n sum_B prod (2^{m+1} pi)^{k_m} C1^{4n}
  double assembled = 0.0;  // lambda^n sum_B prod block_contribution(m)
  std::uint64_t structures = 0;
  bool enumerated = true;  // false: closed geometric bound (C lambda)^n
};

struct BoundSeries {
  double lambda = 0.0;
  int n_max = 0;
  double c1 = 0.0;
  double constant = 0.0;  // C with bound_n <= (C lambda)^n
  std::vector<BoundTerm> terms;
};

inline constexpr int kMaxEnumeratedBlocks = 12;

BoundTerm theta_upper_bound(double lambda, int n, const RadialProfile& g);
BoundSeries theta_bound_series(double lambda, int n_max, const RadialProfile& g);
double block_growth_constant(const RadialProfile& g);

struct RegionIntegralCheck {
  double mc_value = 0.0;
  double mc_sigma = 0.0;
  double analytic_value = 0.0;
  std::uint64_t samples = 0;
};
RegionIntegralCheck size4_region_integral_check(const RadialProfile& g, double ell,
                                                std::uint64_t samples, RngStream& rng);

struct ConnectionRow {
  double dist = 0.0;
  double value = 0.0;
  double abs_error = 0.0;
};

struct ConnectionTable {
  double eta = 0.0, alpha = 0.0, beta = 0.0;
  std::vector<ConnectionRow> rows;
  double ols_slope = 0.0;       // least-squares slope of log E against log d
  double fitted_exponent = 0.0; // kappa in E ~ d^-kappa (A + B log d)
  double expected_exponent = 0.0;  // min(alpha, alpha beta)
  double relative_error = 0.0;
  bool within_tolerance = false;   // 5% when alpha beta != alpha
};

double expected_connection(double eta, double alpha, double beta, double dist, double* abs_error = nullptr);
ConnectionTable expected_connection_vs_distance(double eta, double alpha, double beta,
                                                const std::vector<double>& dist_grid);

double square_root_trick_bound(double p_union, int kappa);

struct WilsonInterval {
  double low = 0.0;
  double high = 0.0;
};
WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z = 1.959963984540054);

}  // namespace perco
