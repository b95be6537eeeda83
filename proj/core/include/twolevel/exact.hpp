#pragma once

// Brute-force ground truth for small instances: the full state space, the
// generator, and stationary and transient distributions.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <utility>
#include <vector>

#include "twolevel/ctmc.hpp"
#include "twolevel/model.hpp"

namespace twolevel {

inline constexpr std::size_t kDefaultStateCap = 200'000;
inline constexpr std::size_t kDenseSolveCap = 6'000;

// Bijection between S_N (lexicographic order on (y*, y, z)) and 0..size-1.
class StateIndex {
 public:
  explicit StateIndex(std::vector<MicroState> states);

  std::size_t size() const { return states_.size(); }
  const MicroState& state(std::size_t i) const { return states_[i]; }
  const std::vector<MicroState>& states() const { return states_; }
  // Index of s; throws InvalidState when s is not in the space.
  std::size_t index(const MicroState& s) const;
  bool contains(const MicroState& s) const;

 private:
  static std::uint64_t key(const MicroState& s);
  std::vector<MicroState> states_;
  std::unordered_map<std::uint64_t, std::size_t> lookup_;
};

// { (y*, y, z) : y + y* <= n, z <= c2, y* z = 0 }. n = 0 is allowed here.
std::vector<MicroState> enumerate_states(int n, int c2, std::size_t cap = kDefaultStateCap);
std::vector<MicroState> enumerate_states(const ScalingParams& scaling,
                                         std::size_t cap = kDefaultStateCap);

// Closed-form |S_N|.
std::size_t state_count(int n, int c2);

struct Generator {
  StateIndex index;
  // Off-diagonal entries per row, (column, rate) with rate > 0.
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> diagonal;

  std::size_t size() const { return index.size(); }
  double entry(std::size_t i, std::size_t j) const;
  double max_exit_rate() const;
};

Generator build_generator(const ModelParams& params, const ScalingParams& scaling,
                          std::size_t cap = kDefaultStateCap);

enum class Irreducibility {
  Require,         // throw NotIrreducible unless the chain is irreducible
  AllowTransient,  // accept exactly one closed class; transient states get 0
};

// Strongly connected components with no outgoing edges.
std::vector<std::vector<std::size_t>> closed_classes(const Generator& g);
bool is_irreducible(const Generator& g);

// Solves pi G = 0, sum pi = 1 densely, the last balance equation replaced by
// the normalization row.
std::vector<double> stationary_distribution(const Generator& g,
                                            Irreducibility policy = Irreducibility::Require);

// Independent route: power iteration on the uniformized chain P = I + G / L.
std::vector<double> stationary_by_power_iteration(const Generator& g, double tol = 1e-14,
                                                  std::size_t max_iter = 10'000'000);

// max_j |(pi G)_j|
double balance_residual(const Generator& g, const std::vector<double>& pi);

struct StationaryMoments {
  double mean_y_star_frac = 0.0;
  double mean_y_frac = 0.0;
  double mean_z_frac = 0.0;
  double p_block = 0.0;  // P(y* > 0)
};

StationaryMoments stationary_moments(const std::vector<double>& pi, const StateIndex& index,
                                     const ScalingParams& scaling);

// Distribution at time t from the point mass at `init`, by uniformization with
// L = 1.01 max exit rate; the Poisson series stops once its tail is < tol.
std::vector<double> transient_distribution(const Generator& g, std::size_t init, double t,
                                           double tol = 1e-12);

// Header `y_star,y,z,prob`.
void write_stationary_csv(std::ostream& os, const StateIndex& index, const std::vector<double>& pi);

}  // namespace twolevel
