#include "pencrit/simulate.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "moment_recursion.hpp"
#include "pencrit/error.hpp"

namespace pencrit {

std::mt19937_64 RngStream::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

namespace {

[[noreturn]] void overflow(const char* what, std::size_t t, std::size_t burn_in) {
  std::ostringstream os;
  os << "overflow guard " << what << " > " << kOverflowGuard << " triggered at generation step " << t
     << (t <= burn_in ? " (during burn-in)" : "") << "; parameterization looks explosive";
  throw ComputationError(os.str());
}

Trajectory drop_burn_in(SeriesKind kind, std::size_t obs_dim, const std::vector<double>& obs, std::size_t cov_dim,
                        const std::vector<double>& cov, std::size_t burn_in) {
  std::vector<double> y(obs.begin() + static_cast<std::ptrdiff_t>(burn_in * obs_dim), obs.end());
  std::vector<double> x;
  if (cov_dim > 0) x.assign(cov.begin() + static_cast<std::ptrdiff_t>(burn_in * cov_dim), cov.end());
  return {kind, obs_dim, std::move(y), cov_dim, std::move(x)};
}

void check_count_stationarity(const FamilySpec& spec, const ParamVector& theta) {
  double lag_mass = 0.0;
  switch (spec.kind()) {
    case FamilyKind::INGARCH_P:
      for (int i = 1; i <= spec.p(); ++i) lag_mass += theta[static_cast<std::size_t>(i)];
      break;
    case FamilyKind::INGARCH_11: lag_mass = theta[1] + theta[2]; break;
    case FamilyKind::BIV_INGARCH: {
      Eigen::Matrix2d a;
      a << theta[2], theta[3], theta[4], theta[5];
      lag_mass = a.eigenvalues().cwiseAbs().maxCoeff();
      break;
    }
    default: return;
  }
  if (!(lag_mass < 1.0)) {
    std::ostringstream os;
    os << "simulate_mod: lag coefficients sum/spectral radius " << lag_mass << " >= 1 (non-stationary intensity)";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

Trajectory simulate_acx(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n, std::size_t burn_in,
                        Innovation innovation, const RngStream& rng, double covariate_rho) {
  if (spec.kind() != FamilyKind::ARX && spec.kind() != FamilyKind::ARCH) {
    throw InvalidArgument("simulate_acx: family " + to_string(spec.kind()) + " is a count family");
  }
  require_in_box(spec, theta_true);
  if (innovation.kind == Innovation::Kind::StudentStd && !(innovation.nu > 4.0)) {
    throw InvalidArgument("simulate_acx: standardized Student innovations need nu > 4");
  }
  if (!(std::abs(covariate_rho) < 1.0)) throw InvalidArgument("simulate_acx: covariate AR(1) needs |rho| < 1");

  auto eng = rng.engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(innovation.kind == Innovation::Kind::StudentStd ? innovation.nu : 5.0);
  const double t_scale =
      innovation.kind == Innovation::Kind::StudentStd ? std::sqrt((innovation.nu - 2.0) / innovation.nu) : 1.0;

  const std::size_t total = burn_in + n;
  const auto dx = static_cast<std::size_t>(spec.kind() == FamilyKind::ARX ? spec.cov_dim() : 0);
  std::vector<double> cov(total * dx, 0.0);
  for (std::size_t k = 0; k < dx; ++k) {
    double prev = 0.0;
    for (std::size_t s = 0; s < total; ++s) {
      prev = covariate_rho * prev + normal(eng);
      cov[s * dx + k] = prev;
    }
  }

  std::vector<double> obs(total, 0.0);
  detail::MomentRecursion rec(spec, theta_true.values, obs.data(), dx > 0 ? cov.data() : nullptr, 0);
  for (std::size_t s = 0; s < total; ++s) {
    const auto& m = rec.next();
    const double xi = innovation.kind == Innovation::Kind::Gaussian ? normal(eng) : t_scale * student(eng);
    const double y = std::sqrt(m.scale) * xi + m.level[0];
    if (!(std::abs(y) <= kOverflowGuard)) overflow("|Y_t|", s + 1, burn_in);
    obs[s] = y;
  }
  return drop_burn_in(SeriesKind::Real, 1, obs, dx, cov, burn_in);
}

Trajectory simulate_mod(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n, std::size_t burn_in,
                        Emission emission, const RngStream& rng) {
  if (!spec.is_count_family()) {
    throw InvalidArgument("simulate_mod: family " + to_string(spec.kind()) + " is not a count family");
  }
  require_in_box(spec, theta_true);
  check_count_stationarity(spec, theta_true);
  if (emission.kind == Emission::Kind::NegBin && !(emission.r > 0.0)) {
    throw InvalidArgument("simulate_mod: negative binomial dispersion r must be positive");
  }

  auto eng = rng.engine();
  const std::size_t dy = static_cast<std::size_t>(spec.obs_dim());
  const std::size_t total = burn_in + n;
  std::vector<double> obs(total * dy, 0.0);
  detail::MomentRecursion rec(spec, theta_true.values, obs.data(), nullptr, 0);
  if (spec.kind() == FamilyKind::INGARCH_11) {
    rec.set_initial_intensity(theta_true[0] / (1.0 - theta_true[1] - theta_true[2]));
  }
  for (std::size_t s = 0; s < total; ++s) {
    const auto& m = rec.next();
    for (std::size_t k = 0; k < dy; ++k) {
      const double lam = m.level[k];
      if (!(lam <= kOverflowGuard)) overflow("lambda_t", s + 1, burn_in);
      double mean = lam;
      if (emission.kind == Emission::Kind::NegBin) {
        std::gamma_distribution<double> gamma(emission.r, lam / emission.r);
        mean = gamma(eng);
      }
      double y = 0.0;
      if (mean > 0.0) {
        std::poisson_distribution<long long> pois(mean);
        y = static_cast<double>(pois(eng));
      }
      if (!(y <= kOverflowGuard)) overflow("|Y_t|", s + 1, burn_in);
      obs[s * dy + k] = y;
    }
  }
  return drop_burn_in(SeriesKind::Count, dy, obs, 0, {}, burn_in);
}

Trajectory simulate(const FamilySpec& spec, const ParamVector& theta_true, std::size_t n, std::size_t burn_in,
                    Innovation innovation, Emission emission, const RngStream& rng) {
  if (spec.is_count_family()) return simulate_mod(spec, theta_true, n, burn_in, emission, rng);
  return simulate_acx(spec, theta_true, n, burn_in, innovation, rng);
}

}  // namespace pencrit
