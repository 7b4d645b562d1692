#pragma once

#include <cstddef>

#include "pencrit/model_zoo.hpp"
#include "pencrit/rng.hpp"
#include "pencrit/trajectory.hpp"

namespace pencrit {

/// Standardized innovation law for AC-X simulation.
struct Innovation {
  enum class Kind { Gaussian, StudentStd } kind = Kind::Gaussian;
  double nu = 0.0;  // degrees of freedom, > 4 for StudentStd

  [[nodiscard]] static Innovation gaussian() { return {}; }
  [[nodiscard]] static Innovation student(double nu) { return {Kind::StudentStd, nu}; }
};

/// Conditional count law with mean lambda.
struct Emission {
  enum class Kind { Poisson, NegBin } kind = Kind::Poisson;
  double r = 0.0;  // NegBin dispersion, p = r / (r + lambda)

  [[nodiscard]] static Emission poisson() { return {}; }
  [[nodiscard]] static Emission negbin(double r) { return {Kind::NegBin, r}; }
};

inline constexpr std::size_t kDefaultBurnIn = 1000;
inline constexpr double kOverflowGuard = 1e12;

/// Y_t = M(past) xi_t + f(past) for the ARX and ARCH families. ARX covariates follow
/// X_t = rho X_{t-1} + eta_t with standard normal eta and X_0 = 0.
[[nodiscard]] Trajectory simulate_acx(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n,
                                      std::size_t burn_in, Innovation innovation, const RngStream& rng,
                                      double covariate_rho = 0.5);

/// Count series with E[Y_t | past] = lambda_t(theta_true) for the INGARCH families.
[[nodiscard]] Trajectory simulate_mod(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n,
                                      std::size_t burn_in, Emission emission, const RngStream& rng);

/// Dispatches on the family: AC-X families use `innovation`, count families `emission`.
[[nodiscard]] Trajectory simulate(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n,
                                  std::size_t burn_in, Innovation innovation, Emission emission,
                                  const RngStream& rng);

}  // namespace pencrit
