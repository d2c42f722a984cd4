#pragma once

// Linearly implicit, variable-step Rosenbrock 2(3) integrator (the modified
// Rosenbrock triple of Shampine & Reichelt). The second-order solution is a
// W-method, so Jacobians may be reused across steps; the embedded third-order
// formula drives the step-size control. Dense output is produced by the
// method's continuous extension.

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nmsgait {

class OdeSystem {
 public:
  virtual ~OdeSystem() = default;
  virtual int dimension() const = 0;
  virtual void derivative(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) = 0;
  /// Called once per accepted step, after dense samples up to t were emitted.
  /// Discrete state (controller phases, delay buffers) may change here.
  /// Returning false ends the integration with status kStopped.
  virtual bool accept_step(double /*t*/, const Eigen::VectorXd& /*y*/) { return true; }
};

struct IntegratorOptions {
  double rel_tol = 1e-3;
  double abs_tol = 1e-4;
  double max_step = 0.01;   // s
  double min_step = 1e-12;  // s
  double initial_step = 0.0;  // 0 selects automatically
  double report_interval = 1e-3;  // s, dense output spacing; <= 0 disables
  /// Accepted steps a finite-difference Jacobian may be reused for.
  int jacobian_reuse = 1;
};

enum class IntegrationStatus { kCompleted, kStopped, kStepSizeUnderflow, kNonFinite };

struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  std::size_t jacobians = 0;
  double largest_step = 0.0;
};

struct IntegrationResult {
  IntegrationStatus status = IntegrationStatus::kCompleted;
  double t_end = 0.0;
  Eigen::VectorXd y_end;
  IntegrationStats stats;
};

using SampleObserver = std::function<void(double t, const Eigen::VectorXd& y)>;

/// Integrates from t0 over t_span. `observer` receives dense samples at
/// t0 + k * report_interval for every k with sample time <= t_end; a
/// zero-length span returns y0 without emitting samples.
IntegrationResult integrate(OdeSystem& system, double t0, const Eigen::VectorXd& y0,
                            double t_span, const IntegratorOptions& options,
                            const SampleObserver& observer = {});

struct Trajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  IntegrationResult result;
};

Trajectory integrate_samples(OdeSystem& system, double t0, const Eigen::VectorXd& y0,
                             double t_span, const IntegratorOptions& options);

/// Adapts a plain right-hand side to OdeSystem.
class FunctionSystem final : public OdeSystem {
 public:
  using Rhs = std::function<void(double, const Eigen::VectorXd&, Eigen::VectorXd&)>;
  FunctionSystem(int n, Rhs rhs) : n_(n), rhs_(std::move(rhs)) {}
  int dimension() const override { return n_; }
  void derivative(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) override {
    rhs_(t, y, dy);
  }

 private:
  int n_;
  Rhs rhs_;
};

}  // namespace nmsgait
