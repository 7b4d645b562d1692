#include "moment_recursion.hpp"

#include "pencrit/error.hpp"

namespace pencrit::detail {

MomentRecursion::MomentRecursion(const FamilySpec& spec, const Eigen::VectorXd& theta, const double* obs,
                                 const double* cov, int order)
    : spec_(spec), theta_(theta), obs_(obs), cov_(cov), order_(order), d_(spec.param_dim()) {
  if (theta.size() != d_) throw InvalidArgument("moment recursion: theta length mismatch");
  if (spec.kind() == FamilyKind::ARX && spec.q() > 0 && cov == nullptr) {
    throw InvalidArgument("family arx with q > 0 needs covariates");
  }
  m_.components = spec.obs_dim();
  if (order_ >= 1) {
    for (int k = 0; k < m_.components; ++k) m_.d_level[static_cast<std::size_t>(k)] = Eigen::VectorXd::Zero(d_);
    m_.d_scale = Eigen::VectorXd::Zero(d_);
  }
  if (order_ >= 2) {
    for (int k = 0; k < m_.components; ++k) m_.d2_level[static_cast<std::size_t>(k)] = Eigen::MatrixXd::Zero(d_, d_);
    m_.d2_scale = Eigen::MatrixXd::Zero(d_, d_);
  }
  if (spec.kind() == FamilyKind::INGARCH_11) {
    dlam_prev_ = Eigen::VectorXd::Zero(d_);
    d2lam_prev_ = Eigen::MatrixXd::Zero(d_, d_);
  }
}

void MomentRecursion::set_initial_intensity(double lambda1) {
  lambda1_override_ = true;
  lambda1_ = lambda1;
}

const Moments& MomentRecursion::next() {
  ++t_;
  switch (spec_.kind()) {
    case FamilyKind::ARX: next_arx(); break;
    case FamilyKind::ARCH: next_arch(); break;
    case FamilyKind::INGARCH_P: next_ingarch(); break;
    case FamilyKind::INGARCH_11: next_ingarch11(); break;
    case FamilyKind::BIV_INGARCH: next_biv(); break;
  }
  return m_;
}

void MomentRecursion::floor_level(int comp) {
  auto k = static_cast<std::size_t>(comp);
  if (m_.level[k] >= spec_.c_floor()) return;
  m_.level[k] = spec_.c_floor();
  if (order_ >= 1) m_.d_level[k].setZero();
  if (order_ >= 2) m_.d2_level[k].setZero();
}

// f = c + sum a_i Y_{t-i} + sum b_{j,k} X_{t-j,k},  H = sigma^2
void MomentRecursion::next_arx() {
  const int p = spec_.p();
  const int q = spec_.q();
  const int dx = spec_.cov_dim();
  const auto t = static_cast<long>(t_);
  double f = theta_(0);
  for (int i = 1; i <= p; ++i) {
    const long row = t - i - 1;
    if (row >= 0) f += theta_(i) * obs_[row];
  }
  for (int j = 1; j <= q; ++j) {
    const long row = t - j - 1;
    if (row < 0) continue;
    for (int k = 0; k < dx; ++k) f += theta_(p + (j - 1) * dx + k + 1) * cov_[row * dx + k];
  }
  const double sigma = theta_(d_ - 1);
  double h = sigma * sigma;
  const bool floored = h < spec_.h_floor();
  if (floored) h = spec_.h_floor();
  m_.level[0] = f;
  m_.scale = h;
  if (order_ >= 1) {
    auto& df = m_.d_level[0];
    df.setZero();
    df(0) = 1.0;
    for (int i = 1; i <= p; ++i) {
      const long row = t - i - 1;
      df(i) = row >= 0 ? obs_[row] : 0.0;
    }
    for (int j = 1; j <= q; ++j) {
      const long row = t - j - 1;
      for (int k = 0; k < dx; ++k) df(p + (j - 1) * dx + k + 1) = row >= 0 ? cov_[row * dx + k] : 0.0;
    }
    m_.d_scale.setZero();
    if (!floored) m_.d_scale(d_ - 1) = 2.0 * sigma;
  }
  if (order_ >= 2) {
    m_.d2_scale.setZero();
    if (!floored) {
      m_.d2_scale(d_ - 1, d_ - 1) = 2.0;
      m_.d2_scale_nonzero = true;
    } else {
      m_.d2_scale_nonzero = false;
    }
  }
}

// f = 0, H = a0 + sum a_i Y_{t-i}^2
void MomentRecursion::next_arch() {
  const int p = spec_.p();
  const auto t = static_cast<long>(t_);
  double h = theta_(0);
  for (int i = 1; i <= p; ++i) {
    const long row = t - i - 1;
    if (row >= 0) h += theta_(i) * obs_[row] * obs_[row];
  }
  const bool floored = h < spec_.h_floor();
  if (floored) h = spec_.h_floor();
  m_.level[0] = 0.0;
  m_.scale = h;
  if (order_ >= 1) {
    m_.d_level[0].setZero();
    auto& dh = m_.d_scale;
    dh.setZero();
    if (!floored) {
      dh(0) = 1.0;
      for (int i = 1; i <= p; ++i) {
        const long row = t - i - 1;
        dh(i) = row >= 0 ? obs_[row] * obs_[row] : 0.0;
      }
    }
  }
}

// lambda = a0 + sum a_i Y_{t-i}
void MomentRecursion::next_ingarch() {
  const int p = spec_.p();
  const auto t = static_cast<long>(t_);
  double lam = theta_(0);
  for (int i = 1; i <= p; ++i) {
    const long row = t - i - 1;
    if (row >= 0) lam += theta_(i) * obs_[row];
  }
  m_.level[0] = lam;
  if (order_ >= 1) {
    auto& dl = m_.d_level[0];
    dl.setZero();
    dl(0) = 1.0;
    for (int i = 1; i <= p; ++i) {
      const long row = t - i - 1;
      dl(i) = row >= 0 ? obs_[row] : 0.0;
    }
  }
  floor_level(0);
}

// lambda_1 = a0 / (1 - b1) (all pre-sample counts zero), then
// lambda_t = a0 + a1 Y_{t-1} + b1 lambda_{t-1}
void MomentRecursion::next_ingarch11() {
  const double a0 = theta_(0);
  const double a1 = theta_(1);
  const double b1 = theta_(2);
  double lam = 0.0;
  Eigen::VectorXd* dl = order_ >= 1 ? &m_.d_level[0] : nullptr;
  Eigen::MatrixXd* d2l = order_ >= 2 ? &m_.d2_level[0] : nullptr;
  if (t_ == 1) {
    const double inv = 1.0 / (1.0 - b1);
    lam = lambda1_override_ ? lambda1_ : a0 * inv;
    if (dl) {
      dl->setZero();
      if (!lambda1_override_) {
        (*dl)(0) = inv;
        (*dl)(2) = a0 * inv * inv;
      }
    }
    if (d2l) {
      d2l->setZero();
      if (!lambda1_override_) {
        (*d2l)(0, 2) = (*d2l)(2, 0) = inv * inv;
        (*d2l)(2, 2) = 2.0 * a0 * inv * inv * inv;
      }
    }
  } else {
    const double y_prev = obs_[t_ - 2];
    lam = a0 + a1 * y_prev + b1 * lam_prev_;
    if (dl) {
      *dl = b1 * dlam_prev_;
      (*dl)(0) += 1.0;
      (*dl)(1) += y_prev;
      (*dl)(2) += lam_prev_;
    }
    if (d2l) {
      *d2l = b1 * d2lam_prev_;
      d2l->row(2) += dlam_prev_.transpose();
      d2l->col(2) += dlam_prev_;
    }
  }
  m_.level[0] = lam;
  m_.d2_level_nonzero = true;
  floor_level(0);
  lam_prev_ = m_.level[0];
  if (dl) dlam_prev_ = *dl;
  if (d2l) d2lam_prev_ = *d2l;
}

// lambda = w + A Y_{t-1}
void MomentRecursion::next_biv() {
  const bool has_prev = t_ >= 2;
  const double y1 = has_prev ? obs_[(t_ - 2) * 2] : 0.0;
  const double y2 = has_prev ? obs_[(t_ - 2) * 2 + 1] : 0.0;
  m_.level[0] = theta_(0) + theta_(2) * y1 + theta_(3) * y2;
  m_.level[1] = theta_(1) + theta_(4) * y1 + theta_(5) * y2;
  if (order_ >= 1) {
    auto& d0 = m_.d_level[0];
    auto& d1 = m_.d_level[1];
    d0.setZero();
    d1.setZero();
    d0(0) = 1.0;
    d0(2) = y1;
    d0(3) = y2;
    d1(1) = 1.0;
    d1(4) = y1;
    d1(5) = y2;
  }
  floor_level(0);
  floor_level(1);
}

}  // namespace pencrit::detail
