#include "nmsgait/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <system_error>

#include <nlohmann/json.hpp>

namespace nmsgait {
namespace {

using json = nlohmann::json;

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

bool inside(const Eigen::VectorXd& x, const Box& b) {
  return (x.array() >= b.lower.array()).all() && (x.array() <= b.upper.array()).all();
}

}  // namespace

int default_population(int n) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

Cmaes::Cmaes(const Eigen::VectorXd& mean, double sigma, CmaesOptions options)
    : options_(std::move(options)) {
  const int n = static_cast<int>(mean.size());
  if (n < 1) throw std::invalid_argument("cma-es: dimension must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("cma-es: sigma <= 0");
  state_.dimension = n;
  state_.population = options_.population > 0 ? options_.population : default_population(n);
  state_.seed = options_.seed;
  state_.mean = mean;
  state_.sigma = sigma;
  state_.covariance = Eigen::MatrixXd::Identity(n, n);
  state_.path_sigma = Eigen::VectorXd::Zero(n);
  state_.path_c = Eigen::VectorXd::Zero(n);
  init_strategy();
}

Cmaes::Cmaes(CmaesState state, CmaesOptions options)
    : options_(std::move(options)), state_(std::move(state)) {
  const int n = state_.dimension;
  if (n < 1 || state_.mean.size() != n || state_.covariance.rows() != n ||
      state_.covariance.cols() != n || state_.path_sigma.size() != n ||
      state_.path_c.size() != n || !(state_.sigma > 0.0) || state_.population < 2) {
    throw std::invalid_argument("cma-es: inconsistent state");
  }
  init_strategy();
}

void Cmaes::init_strategy() {
  const int n = state_.dimension;
  const int lambda = state_.population;
  const int mu = lambda / 2;
  weights_.resize(mu);
  for (int i = 0; i < mu; ++i) {
    weights_[i] = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  }
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();
  const double nd = n;
  c_sigma_ = (mu_eff_ + 2.0) / (nd + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (nd + 1.0)) - 1.0) + c_sigma_;
  c_c_ = (4.0 + mu_eff_ / nd) / (nd + 4.0 + 2.0 * mu_eff_ / nd);
  c_1_ = 2.0 / ((nd + 1.3) * (nd + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((nd + 2.0) * (nd + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));
  decompose();
}

void Cmaes::decompose() {
  Eigen::MatrixXd c = 0.5 * (state_.covariance + state_.covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  Eigen::VectorXd ev = es.eigenvalues();
  const double floor = std::max(ev.maxCoeff(), 0.0) * options_.eigenvalue_floor +
                       std::numeric_limits<double>::min();
  bool floored = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < floor) {
      ev[i] = floor;
      floored = true;
    }
  }
  basis_ = es.eigenvectors();
  scales_ = ev.cwiseSqrt();
  if (floored) c = basis_ * ev.asDiagonal() * basis_.transpose();
  state_.covariance = c;
}

std::vector<Eigen::VectorXd> Cmaes::ask() const {
  std::seed_seq seq{static_cast<std::uint32_t>(state_.seed),
                    static_cast<std::uint32_t>(state_.seed >> 32),
                    static_cast<std::uint32_t>(state_.generation),
                    static_cast<std::uint32_t>(state_.generation >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = state_.dimension;
  const auto draw = [&] {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    return Eigen::VectorXd(state_.mean + state_.sigma * (basis_ * scales_.cwiseProduct(z)));
  };
  std::vector<Eigen::VectorXd> out;
  out.reserve(state_.population);
  for (int k = 0; k < state_.population; ++k) {
    Eigen::VectorXd x = draw();
    if (options_.bounds) {
      const Box& b = *options_.bounds;
      for (int r = 0; r < options_.max_resamples && !inside(x, b); ++r) x = draw();
      x = x.cwiseMax(b.lower).cwiseMin(b.upper);
    }
    out.push_back(std::move(x));
  }
  return out;
}

void Cmaes::tell(const std::vector<Eigen::VectorXd>& candidates, const std::vector<double>& costs) {
  const int n = state_.dimension;
  const int lambda = state_.population;
  if (static_cast<int>(candidates.size()) != lambda || costs.size() != candidates.size()) {
    throw std::invalid_argument("cma-es: tell expects one cost per candidate of the population");
  }
  std::vector<int> order(lambda);
  std::iota(order.begin(), order.end(), 0);
  const auto key = [&](int i) {
    return std::isfinite(costs[i]) ? costs[i] : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });

  for (int i = 0; i < lambda; ++i) {
    if (std::isfinite(costs[i]) && (!state_.has_best || costs[i] < state_.best_f)) {
      state_.best_f = costs[i];
      state_.best_x = candidates[i];
      state_.has_best = true;
    }
  }

  const int mu = static_cast<int>(weights_.size());
  const Eigen::VectorXd old_mean = state_.mean;
  Eigen::MatrixXd steps(n, mu);
  for (int i = 0; i < mu; ++i) {
    steps.col(i) = (candidates[order[i]] - old_mean) / state_.sigma;
  }
  const Eigen::VectorXd mean_step = steps * weights_;
  state_.mean = old_mean + state_.sigma * mean_step;

  // C^{-1/2} mean_step
  const Eigen::VectorXd whitened =
      basis_ * (basis_.transpose() * mean_step).cwiseQuotient(scales_);
  state_.path_sigma = (1.0 - c_sigma_) * state_.path_sigma +
                      std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * whitened;
  const double gen = static_cast<double>(state_.generation + 1);
  const double ps_norm = state_.path_sigma.norm();
  const bool h_sigma = ps_norm / std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * gen)) <
                       (1.4 + 2.0 / (n + 1.0)) * chi_n_;
  state_.path_c = (1.0 - c_c_) * state_.path_c +
                  (h_sigma ? std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) : 0.0) * mean_step;

  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
  Eigen::MatrixXd rank_mu = steps * weights_.asDiagonal() * steps.transpose();
  state_.covariance = (1.0 - c_1_ - c_mu_) * state_.covariance +
                      c_1_ * (state_.path_c * state_.path_c.transpose() +
                              delta_h * state_.covariance) +
                      c_mu_ * rank_mu;
  state_.sigma *= std::exp((c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
  if (!std::isfinite(state_.sigma) || state_.sigma <= 0.0) {
    state_.sigma = std::numeric_limits<double>::min();
  }
  state_.evaluations += static_cast<std::uint64_t>(lambda);
  ++state_.generation;
  decompose();
}

std::string cmaes_state_to_json(const CmaesState& s) {
  json j;
  j["dimension"] = s.dimension;
  j["population"] = s.population;
  j["seed"] = s.seed;
  j["generation"] = s.generation;
  j["evaluations"] = s.evaluations;
  j["mean"] = to_vec(s.mean);
  j["sigma"] = s.sigma;
  std::vector<std::vector<double>> c;
  for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) c.push_back(to_vec(s.covariance.row(r)));
  j["covariance"] = c;
  j["path_sigma"] = to_vec(s.path_sigma);
  j["path_c"] = to_vec(s.path_c);
  if (s.has_best) {
    j["best_x"] = to_vec(s.best_x);
    j["best_f"] = s.best_f;
  }
  return j.dump(1);
}

CmaesState cmaes_state_from_json(const std::string& text) {
  const json j = json::parse(text);
  CmaesState s;
  s.dimension = j.at("dimension").get<int>();
  s.population = j.at("population").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.generation = j.at("generation").get<std::uint64_t>();
  s.evaluations = j.at("evaluations").get<std::uint64_t>();
  s.mean = from_vec(j.at("mean").get<std::vector<double>>());
  s.sigma = j.at("sigma").get<double>();
  const auto c = j.at("covariance").get<std::vector<std::vector<double>>>();
  s.covariance.resize(static_cast<Eigen::Index>(c.size()), static_cast<Eigen::Index>(c.size()));
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c[r].size() != c.size()) throw std::invalid_argument("checkpoint: covariance not square");
    for (std::size_t k = 0; k < c.size(); ++k) s.covariance(r, k) = c[r][k];
  }
  s.path_sigma = from_vec(j.at("path_sigma").get<std::vector<double>>());
  s.path_c = from_vec(j.at("path_c").get<std::vector<double>>());
  if (j.contains("best_x")) {
    s.best_x = from_vec(j.at("best_x").get<std::vector<double>>());
    s.best_f = j.at("best_f").get<double>();
    s.has_best = true;
  }
  return s;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace nmsgait
