#include "optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace pencrit::detail {

namespace {

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

DirectSearchResult nelder_mead_box(const Objective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi, int max_iterations) {
  const auto k = x0.size();
  DirectSearchResult out;
  if (k == 0) {
    out.x = x0;
    out.value = safe_eval(f, x0);
    return out;
  }
  const Eigen::VectorXd width = hi - lo;

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(k + 1), clamp(x0, lo, hi));
  std::vector<double> values(simplex.size());
  for (Eigen::Index i = 0; i < k; ++i) {
    auto& v = simplex[static_cast<std::size_t>(i + 1)];
    const double step = 0.1 * width(i);
    v(i) = v(i) + step <= hi(i) ? v(i) + step : v(i) - step;
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = safe_eval(f, simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  const double ftol = 1e-8;
  const double xtol = 1e-9 * std::max(1.0, width.maxCoeff());
  int it = 0;
  for (; it < max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    const double spread = values[worst] - values[best];
    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).cwiseAbs().maxCoeff());
    if (std::isfinite(spread) && (spread <= ftol * (1.0 + std::abs(values[best])) || diameter <= xtol)) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(k);

    const Eigen::VectorXd xr = clamp(centroid + (centroid - simplex[worst]), lo, hi);
    const double fr = safe_eval(f, xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = clamp(centroid + 2.0 * (centroid - simplex[worst]), lo, hi);
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? clamp(centroid + 0.5 * (xr - centroid), lo, hi)
                                       : clamp(centroid + 0.5 * (simplex[worst] - centroid), lo, hi);
    const double fc = safe_eval(f, xc);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = safe_eval(f, simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  out.x = simplex[best];
  out.value = values[best];
  out.iterations = it;
  return out;
}

Eigen::VectorXd halton_point(std::size_t index, int dim) {
  static constexpr std::array<unsigned, 24> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                       41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
  Eigen::VectorXd u(dim);
  for (int j = 0; j < dim; ++j) {
    const unsigned base = kPrimes[static_cast<std::size_t>(j) % kPrimes.size()];
    double f = 1.0;
    double r = 0.0;
    std::size_t i = index + static_cast<std::size_t>(j) / kPrimes.size();
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    u(j) = r;
  }
  return u;
}

}  // namespace pencrit::detail
