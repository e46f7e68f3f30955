#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace glmvi {

// splitmix64 mixing step; used to turn (master seed, tag...) tuples into
// well-separated generator seeds so that every replication / sampling purpose
// owns an independent stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <class... Tags>
std::uint64_t derive_seed(std::uint64_t master, Tags... tags) {
  std::uint64_t s = splitmix64(master);
  ((s = splitmix64(s ^ splitmix64(static_cast<std::uint64_t>(tags)))), ...);
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  template <class... Tags>
  static Rng stream(std::uint64_t master, Tags... tags) {
    return Rng(derive_seed(master, tags...));
  }

  double uniform() { return unif_(gen_); }
  double normal() { return norm_(gen_); }
  bool bernoulli(double p) { return unif_(gen_) < p; }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Eigen::VectorXd on_sphere(int n) {
    if (n < 1) throw std::invalid_argument("on_sphere: n must be positive");
    Eigen::VectorXd v = normal_vector(n);
    double nrm = v.norm();
    while (nrm < 1e-12) {  // astronomically unlikely; keep the draw well defined
      v = normal_vector(n);
      nrm = v.norm();
    }
    return v / nrm;
  }

  // Uniform in the centered ball: uniform direction scaled by R * U^(1/n).
  Eigen::VectorXd in_ball(int n, double radius = 1.0) {
    return on_sphere(n) * (radius * std::pow(uniform(), 1.0 / n));
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace glmvi
