#include "nmsgait/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nmsgait {
namespace {

const double kD = 1.0 / (2.0 + std::sqrt(2.0));
const double kE32 = 6.0 + std::sqrt(2.0);

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

IntegrationResult integrate(OdeSystem& system, double t0, const Eigen::VectorXd& y0,
                            double t_span, const IntegratorOptions& opt,
                            const SampleObserver& observer) {
  IntegrationResult result;
  result.t_end = t0;
  result.y_end = y0;
  if (!(t_span > 0.0)) return result;

  const int n = system.dimension();
  const double t_final = t0 + t_span;
  const double threshold = opt.abs_tol / opt.rel_tol;
  const bool reporting = static_cast<bool>(observer) && opt.report_interval > 0.0;

  Eigen::VectorXd y = y0;
  Eigen::VectorXd f0(n), f1(n), f2(n), y_new(n), k1(n), k2(n), k3(n), tmp(n), fp(n);
  Eigen::VectorXd dfdt = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd jac(n, n);
  Eigen::MatrixXd w(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;

  double t = t0;
  system.derivative(t, y, f0);
  ++result.stats.rhs_evaluations;

  long report_index = 0;
  const auto emit_until = [&](double t_hi, const Eigen::VectorXd* ka, const Eigen::VectorXd* kb,
                              double t_lo, double h) {
    if (!reporting) return;
    while (true) {
      const double ts = t0 + static_cast<double>(report_index) * opt.report_interval;
      if (ts > t_hi + 1e-12 * std::max(1.0, std::abs(t_hi))) break;
      if (ka == nullptr) {
        observer(ts, y);
      } else {
        const double s = std::clamp((ts - t_lo) / h, 0.0, 1.0);
        tmp = y + h * ((s * (1.0 - s) / (1.0 - 2.0 * kD)) * (*ka) +
                       (s * (s - 2.0 * kD) / (1.0 - 2.0 * kD)) * (*kb));
        observer(ts, tmp);
      }
      ++report_index;
    }
  };
  emit_until(t0, nullptr, nullptr, t0, 0.0);

  double h = opt.initial_step;
  const auto update_jacobian = [&]() {
    for (int j = 0; j < n; ++j) {
      const double yj = y[j];
      const double delta = std::sqrt(std::numeric_limits<double>::epsilon()) *
                           std::max(std::abs(yj), threshold);
      y[j] = yj + delta;
      system.derivative(t, y, fp);
      y[j] = yj;
      jac.col(j) = (fp - f0) / delta;
    }
    // Explicit time dependence of the right-hand side.
    const double dt = std::min(std::sqrt(std::numeric_limits<double>::epsilon()) *
                                   std::max({std::abs(t), std::abs(t + h), 1.0}),
                               h);
    system.derivative(t + dt, y, fp);
    dfdt = (fp - f0) / dt;
    result.stats.rhs_evaluations += static_cast<std::size_t>(n) + 1;
    ++result.stats.jacobians;
  };

  if (!(h > 0.0)) {
    const Eigen::VectorXd wt = y.cwiseAbs().cwiseMax(threshold);
    const double rh = (f0.cwiseQuotient(wt)).lpNorm<Eigen::Infinity>() /
                      (0.8 * std::cbrt(opt.rel_tol));
    h = rh > 0.0 ? 1.0 / rh : opt.max_step;
  }
  h = std::clamp(h, opt.min_step, opt.max_step);

  int jacobian_age = std::numeric_limits<int>::max();
  bool jacobian_fresh = false;
  bool just_rejected = false;

  while (t < t_final) {
    if (t + 1.1 * h >= t_final && t_final - t <= opt.max_step) h = t_final - t;
    if (jacobian_age >= std::max(1, opt.jacobian_reuse)) {
      update_jacobian();
      jacobian_age = 0;
      jacobian_fresh = true;
    }

    w = -h * kD * jac;
    w.diagonal().array() += 1.0;
    lu.compute(w);

    k1 = lu.solve(f0 + h * kD * dfdt);
    tmp = y + 0.5 * h * k1;
    system.derivative(t + 0.5 * h, tmp, f1);
    k2 = lu.solve(f1 - k1) + k1;
    y_new = y + h * k2;
    system.derivative(t + h, y_new, f2);
    k3 = lu.solve(f2 - kE32 * (k2 - f1) - 2.0 * (k1 - f0) + h * kD * dfdt);
    result.stats.rhs_evaluations += 2;

    double err = std::numeric_limits<double>::infinity();
    if (all_finite(y_new) && all_finite(f2) && all_finite(k3)) {
      const Eigen::VectorXd wt = y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).cwiseMax(threshold);
      err = h / 6.0 * ((k1 - 2.0 * k2 + k3).cwiseQuotient(wt)).lpNorm<Eigen::Infinity>();
    }

    if (!(err <= opt.rel_tol)) {
      ++result.stats.rejected;
      if (h <= opt.min_step) {
        result.status = std::isfinite(err) ? IntegrationStatus::kStepSizeUnderflow
                                           : IntegrationStatus::kNonFinite;
        break;
      }
      const double shrink =
          std::isfinite(err) ? std::max(0.1, 0.8 * std::cbrt(opt.rel_tol / err)) : 0.25;
      h = std::max(opt.min_step, h * shrink);
      // A stale Jacobian is the first suspect after a rejection.
      if (!jacobian_fresh) jacobian_age = std::numeric_limits<int>::max();
      just_rejected = true;
      continue;
    }

    const double t_new = t + h;
    emit_until(t_new, &k1, &k2, t, h);
    t = t_new;
    y = y_new;
    f0 = f2;
    ++result.stats.accepted;
    result.stats.largest_step = std::max(result.stats.largest_step, h);
    ++jacobian_age;
    jacobian_fresh = false;

    if (!system.accept_step(t, y)) {
      result.status = IntegrationStatus::kStopped;
      break;
    }
    // Discrete state may have changed the right-hand side.
    system.derivative(t, y, f0);
    ++result.stats.rhs_evaluations;

    const double grow = 1.25 * std::cbrt(err / opt.rel_tol);
    double h_next = h / std::max(grow, 0.2);
    if (just_rejected) h_next = std::min(h_next, h);
    just_rejected = false;
    h = std::clamp(h_next, opt.min_step, opt.max_step);
  }

  result.t_end = t;
  result.y_end = y;
  return result;
}

Trajectory integrate_samples(OdeSystem& system, double t0, const Eigen::VectorXd& y0,
                             double t_span, const IntegratorOptions& options) {
  Trajectory tr;
  tr.result = integrate(system, t0, y0, t_span, options, [&](double t, const Eigen::VectorXd& y) {
    tr.t.push_back(t);
    tr.y.push_back(y);
  });
  return tr;
}

}  // namespace nmsgait
