#pragma once

// Covariance matrix adaptation evolution strategy with Hansen's default
// strategy parameters. ask() and tell() are strictly alternating; everything
// needed to resume a run lives in CmaesState.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nmsgait {

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct CmaesOptions {
  int population = 0;  // 0 selects 4 + floor(3 ln n)
  std::uint64_t seed = 1;
  std::optional<Box> bounds;
  int max_resamples = 10;
  double eigenvalue_floor = 1e-20;  // relative to the largest eigenvalue
};

/// Complete distribution state.
struct CmaesState {
  int dimension = 0;
  int population = 0;
  std::uint64_t seed = 1;
  std::uint64_t generation = 0;
  std::uint64_t evaluations = 0;
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_c;
  Eigen::VectorXd best_x;
  double best_f = 0.0;
  bool has_best = false;
};

/// Default population for dimension n.
int default_population(int n);

class Cmaes {
 public:
  Cmaes(const Eigen::VectorXd& mean, double sigma, CmaesOptions options = {});
  Cmaes(CmaesState state, CmaesOptions options);

  /// Candidates of the current generation. Draws come from an RNG seeded by
  /// (seed, generation), so a resumed run reproduces them exactly.
  std::vector<Eigen::VectorXd> ask() const;

  /// Updates the distribution. Non-finite costs rank last.
  void tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& costs);

  const CmaesState& state() const { return state_; }
  int dimension() const { return state_.dimension; }
  int population() const { return state_.population; }
  std::uint64_t generation() const { return state_.generation; }
  const Eigen::VectorXd& mean() const { return state_.mean; }
  double sigma() const { return state_.sigma; }

 private:
  void init_strategy();
  void decompose();

  CmaesOptions options_;
  CmaesState state_;
  // Strategy constants.
  Eigen::VectorXd weights_;
  double mu_eff_ = 0.0;
  double c_sigma_ = 0.0, d_sigma_ = 0.0, c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0, chi_n_ = 0.0;
  // Cached decomposition C = B diag(D^2) B^T.
  Eigen::MatrixXd basis_;
  Eigen::VectorXd scales_;
};

std::string cmaes_state_to_json(const CmaesState& s);
CmaesState cmaes_state_from_json(const std::string& text);

/// Writes via a temporary file and rename so a kill never leaves a torn file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace nmsgait
