#pragma once
/// @file physics.hpp
/// @brief Mixture constitutive laws, averaged nonlinearities and nondimensional groups.

#include <cmath>
#include <sstream>

#include "qnsch/errors.hpp"

namespace qnsch {

struct FluidPair {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double mu1 = 1.0;
  double mu2 = 1.0;

  void validate() const {
    if (!(rho1 > 0.0 && rho2 > 0.0 && mu1 > 0.0 && mu2 > 0.0))
      throw ConfigError("fluid densities and viscosities must be positive");
  }

  /// (rho2 - rho1) / (rho1 rho2), so that d rho / dc = -alpha rho^2.
  double alpha() const { return (rho2 - rho1) / (rho1 * rho2); }

  double density(double c) const {
    double den = (rho2 - rho1) * c + rho1;
    if (!(den > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "density undefined for c = " << c << " (denominator " << den << ")";
      throw DomainError(os.str());
    }
    return rho1 * rho2 / den;
  }

  double viscosity(double c) const {
    double den = (mu2 - mu1) * c + mu1;
    if (!(den > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "viscosity undefined for c = " << c << " (denominator " << den << ")";
      throw DomainError(os.str());
    }
    return mu1 * mu2 / den;
  }
};

struct NondimGroups {
  double Re = 1.0;
  double We = 1.0;
  double Fr = 1.0;
  double M = 1.0;
  double Pe = 1.0;
  double epsilon = 0.1;
  double eta = 1.0;

  void validate() const {
    if (!(Re > 0.0 && We > 0.0 && Fr > 0.0 && M > 0.0 && Pe > 0.0 && epsilon > 0.0 && eta > 0.0))
      throw ConfigError("Re, We, Fr, M, Pe, epsilon and eta must be positive");
  }
};

inline double mobility_reg(double c, double epsilon) {
  double q = c * (1.0 - c);
  return std::sqrt(q * q + epsilon);
}

struct DoubleWell {
  double F;
  double f;
};

inline DoubleWell double_well(double c) {
  double q = c * (c - 1.0);
  return {0.25 * q * q, q * (c - 0.5)};
}

inline double double_well_F(double c) {
  double q = c * (c - 1.0);
  return 0.25 * q * q;
}

/// a + b - 1 with a single rounding when a + b lies in [0.5, 2]: the two-sum error of
/// a + b is added back after the exact subtraction of 1. Near a ~ 0, b ~ 1 the naive
/// form loses most digits.
inline double sum_minus_one(double a, double b) {
  double s = a + b;
  double bb = s - a;
  double err = (a - (s - bb)) + (b - bb);
  return (s - 1.0) + err;
}

/// Secant of F: F(cn) - F(co) = g_avg(cn, co) (cn - co).
inline double g_avg(double c_new, double c_old) {
  return 0.25 * (c_new * (c_new - 1.0) + c_old * (c_old - 1.0)) * sum_minus_one(c_new, c_old);
}

/// Secant of rho: rho(cn) - rho(co) = r_avg(cn, co) (cn - co).
inline double r_avg(const FluidPair& fp, double c_new, double c_old) {
  return -fp.alpha() * fp.density(c_new) * fp.density(c_old);
}

inline double eta_capillary(double rho1, double rho2) {
  if (!(rho1 > 0.0 && rho2 > 0.0)) throw DomainError("eta needs positive densities");
  if (rho1 == rho2) throw DomainError("eta is undefined for matched densities; set it directly");
  double d = rho2 - rho1;
  double den = 2.0 * std::sqrt(2.0) * rho1 * rho2 *
               (rho2 * rho2 - rho1 * rho1 - 2.0 * rho1 * rho2 * std::log(rho2 / rho1));
  return d * d * d / den;
}

/// Characteristic scales of a dimensional problem.
struct DimensionalScales {
  double L = 1.0;       // length
  double U = 1.0;       // velocity
  double rho = 1.0;     // density
  double mu = 1.0;      // dynamic viscosity
  double mu_c = 1.0;    // chemical potential
  double sigma = 1.0;   // surface tension
  double g = 1.0;       // gravity
  double m = 1.0;       // mobility
  double eps = 0.1;     // interface thickness (length)
  double eta = 1.0;
};

inline NondimGroups nondimensionalize(const DimensionalScales& s) {
  if (!(s.L > 0 && s.U > 0 && s.rho > 0 && s.mu > 0 && s.mu_c > 0 && s.sigma > 0 && s.g > 0 &&
        s.m > 0 && s.eps > 0))
    throw ConfigError("characteristic scales must be positive");
  NondimGroups n;
  n.M = s.U * s.U / s.mu_c;
  n.We = s.rho * s.U * s.U * s.L / s.sigma;
  n.Re = s.rho * s.L * s.U / s.mu;
  n.Fr = s.U * s.U / (s.g * s.L);
  n.Pe = s.rho * s.U * s.L / (s.m * s.mu_c);
  n.epsilon = s.eps / s.L;
  n.eta = s.eta;
  return n;
}

}  // namespace qnsch
