#include "twolevel/exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "twolevel/errors.hpp"

namespace twolevel {

StateIndex::StateIndex(std::vector<MicroState> states) : states_(std::move(states)) {
  lookup_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) lookup_.emplace(key(states_[i]), i);
}

std::uint64_t StateIndex::key(const MicroState& s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y_star)) << 42) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.y)) << 21) ^
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.z));
}

bool StateIndex::contains(const MicroState& s) const {
  if (s.y_star < 0 || s.y < 0 || s.z < 0) return false;
  return lookup_.contains(key(s));
}

std::size_t StateIndex::index(const MicroState& s) const {
  if (!contains(s)) {
    throw InvalidState("state (" + std::to_string(s.y_star) + "," + std::to_string(s.y) + "," +
                       std::to_string(s.z) + ") is not in the state space");
  }
  return lookup_.at(key(s));
}

std::size_t state_count(int n, int c2) {
  // y* = 0: (n + 1) choices of y times (c2 + 1) of z. y* > 0: z = 0 and
  // y + y* <= n gives n (n + 1) / 2 pairs.
  const auto nn = static_cast<std::size_t>(n);
  return (nn + 1) * (static_cast<std::size_t>(c2) + 1) + nn * (nn + 1) / 2;
}

std::vector<MicroState> enumerate_states(int n, int c2, std::size_t cap) {
  if (n < 0) throw DomainError("n", "must be >= 0");
  if (c2 < 0) throw DomainError("c2", "must be >= 0");
  const std::size_t size = state_count(n, c2);
  if (size > cap) throw TooLarge(size, cap);
  std::vector<MicroState> out;
  out.reserve(size);
  for (int ys = 0; ys <= n; ++ys) {
    for (int y = 0; y + ys <= n; ++y) {
      const int z_max = ys > 0 ? 0 : c2;
      for (int z = 0; z <= z_max; ++z) out.push_back({ys, y, z});
    }
  }
  return out;
}

std::vector<MicroState> enumerate_states(const ScalingParams& scaling, std::size_t cap) {
  return enumerate_states(scaling.n, scaling.c2, cap);
}

double Generator::entry(std::size_t i, std::size_t j) const {
  if (i == j) return diagonal[i];
  for (const auto& [col, rate] : rows[i]) {
    if (col == j) return rate;
  }
  return 0.0;
}

double Generator::max_exit_rate() const {
  double worst = 0.0;
  for (double d : diagonal) worst = std::max(worst, -d);
  return worst;
}

Generator build_generator(const ModelParams& params, const ScalingParams& scaling,
                          std::size_t cap) {
  validate(params, scaling);
  Generator g{StateIndex(enumerate_states(scaling, cap)), {}, {}};
  const std::size_t size = g.index.size();
  g.rows.resize(size);
  g.diagonal.assign(size, 0.0);

  const double p = params.p;
  const int n = scaling.n;
  const int c2 = scaling.c2;
  for (std::size_t i = 0; i < size; ++i) {
    const MicroState x = g.index.state(i);
    // The seven clauses of the rate table, written target-first.
    const struct {
      MicroState target;
      double rate;
    } clauses[] = {
        {{x.y_star + 1, x.y - 1, 0}, x.z == 0 ? params.mu01 * x.y : 0.0},
        {{0, x.y - 1, x.z - 1}, x.z > 0 ? params.mu01 * x.y * (1 - p) : 0.0},
        {{0, x.y, x.z - 1}, x.z > 0 ? params.mu01 * x.y * p : 0.0},
        {{x.y_star, x.y + 1, x.z}, params.mu11 * p * (n - x.y_star - x.y)},
        {{x.y_star - 1, x.y, x.z}, x.y_star > 0 ? (1 - p) * params.mu02 * c2 : 0.0},
        {{x.y_star - 1, x.y + 1, x.z}, x.y_star > 0 ? p * params.mu02 * c2 : 0.0},
        {{0, x.y, x.z + 1}, x.y_star == 0 ? params.mu02 * (c2 - x.z) : 0.0},
    };
    double exit = 0.0;
    for (const auto& clause : clauses) {
      if (clause.rate <= 0.0) continue;
      const std::size_t j = g.index.index(clause.target);
      auto& row = g.rows[i];
      auto it = std::find_if(row.begin(), row.end(), [j](const auto& e) { return e.first == j; });
      if (it == row.end()) {
        row.emplace_back(j, clause.rate);
      } else {
        it->second += clause.rate;
      }
      exit += clause.rate;
    }
    std::sort(g.rows[i].begin(), g.rows[i].end());
    g.diagonal[i] = -exit;
  }
  return g;
}

namespace {

// Kosaraju with explicit stacks; returns the component id of every state.
std::vector<std::size_t> strong_components(const Generator& g, std::size_t& count) {
  const std::size_t n = g.size();
  std::vector<std::vector<std::size_t>> reverse(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, rate] : g.rows[i]) reverse[j].push_back(i);
  }

  std::vector<char> seen(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t root = 0; root < n; ++root) {
    if (seen[root]) continue;
    seen[root] = 1;
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < g.rows[node].size()) {
        const std::size_t child = g.rows[node][next++].first;
        if (!seen[child]) {
          seen[child] = 1;
          stack.emplace_back(child, 0);
        }
      } else {
        order.push_back(node);
        stack.pop_back();
      }
    }
  }

  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  std::vector<std::size_t> component(n, kUnassigned);
  count = 0;
  std::vector<std::size_t> todo;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (component[*it] != kUnassigned) continue;
    todo.push_back(*it);
    component[*it] = count;
    while (!todo.empty()) {
      const std::size_t node = todo.back();
      todo.pop_back();
      for (std::size_t parent : reverse[node]) {
        if (component[parent] == kUnassigned) {
          component[parent] = count;
          todo.push_back(parent);
        }
      }
    }
    ++count;
  }
  return component;
}

std::vector<double> solve_dense(const Generator& g, const std::vector<std::size_t>& states) {
  const auto m = static_cast<Eigen::Index>(states.size());
  if (states.size() > kDenseSolveCap) throw TooLarge(states.size(), kDenseSolveCap);
  if (m == 1) return {1.0};

  std::vector<Eigen::Index> local(g.size(), -1);
  for (Eigen::Index a = 0; a < m; ++a) local[states[a]] = a;

  // Row a of A is the balance equation of state a: sum_i pi_i G(i, a) = 0.
  Eigen::MatrixXd a_mat = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index col = 0; col < m; ++col) {
    const std::size_t i = states[col];
    a_mat(col, col) += g.diagonal[i];
    for (const auto& [j, rate] : g.rows[i]) {
      if (local[j] >= 0) a_mat(local[j], col) += rate;
    }
  }
  a_mat.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a_mat);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) throw SingularSystem("balance system is numerically singular");
  const Eigen::VectorXd x = lu.solve(rhs);

  std::vector<double> out(states.size());
  for (Eigen::Index a = 0; a < m; ++a) {
    const double v = x(a);
    if (!std::isfinite(v) || v < -1e-9) throw SingularSystem("solution has negative mass");
    out[a] = std::max(v, 0.0);
  }
  double total = 0.0;
  for (double v : out) total += v;
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

std::vector<std::vector<std::size_t>> closed_classes(const Generator& g) {
  std::size_t count = 0;
  const std::vector<std::size_t> component = strong_components(g, count);
  std::vector<char> leaks(count, 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (const auto& [j, rate] : g.rows[i]) {
      if (component[j] != component[i]) leaks[component[i]] = 1;
    }
  }
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t i = 0; i < g.size(); ++i) members[component[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t c = 0; c < count; ++c) {
    if (!leaks[c]) out.push_back(std::move(members[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_irreducible(const Generator& g) {
  std::size_t count = 0;
  strong_components(g, count);
  return count == 1;
}

std::vector<double> stationary_distribution(const Generator& g, Irreducibility policy) {
  if (g.size() == 0) throw DomainError("generator", "empty state space");
  std::vector<std::size_t> support;
  if (is_irreducible(g)) {
    support.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) support[i] = i;
  } else {
    if (policy == Irreducibility::Require) {
      throw NotIrreducible("generator is not irreducible");
    }
    auto classes = closed_classes(g);
    if (classes.size() != 1) {
      throw NotIrreducible("chain has " + std::to_string(classes.size()) + " closed classes");
    }
    support = std::move(classes.front());
  }

  const std::vector<double> local = solve_dense(g, support);
  std::vector<double> pi(g.size(), 0.0);
  for (std::size_t a = 0; a < support.size(); ++a) pi[support[a]] = local[a];
  return pi;
}

namespace {

// v <- v P with P = I + G / lambda.
void uniformized_step(const Generator& g, double lambda, const std::vector<double>& v,
                      std::vector<double>& out) {
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * (1.0 + g.diagonal[i] / lambda);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    for (const auto& [j, rate] : g.rows[i]) out[j] += v[i] * rate / lambda;
  }
}

double uniformization_rate(const Generator& g) {
  const double max_rate = g.max_exit_rate();
  return max_rate > 0.0 ? 1.01 * max_rate : 1.0;
}

}  // namespace

std::vector<double> stationary_by_power_iteration(const Generator& g, double tol,
                                                  std::size_t max_iter) {
  const std::size_t n = g.size();
  if (n == 0) throw DomainError("generator", "empty state space");
  const double lambda = uniformization_rate(g);
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    uniformized_step(g, lambda, v, next);
    double change = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change += std::abs(next[i] - v[i]);
      total += next[i];
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / total;
    if (change < tol) return v;
  }
  throw NoConvergence(static_cast<int>(std::min<std::size_t>(max_iter, 2'000'000'000)), 0.0);
}

double balance_residual(const Generator& g, const std::vector<double>& pi) {
  std::vector<double> flow(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    flow[i] += pi[i] * g.diagonal[i];
    for (const auto& [j, rate] : g.rows[i]) flow[j] += pi[i] * rate;
  }
  double worst = 0.0;
  for (double f : flow) worst = std::max(worst, std::abs(f));
  return worst;
}

StationaryMoments stationary_moments(const std::vector<double>& pi, const StateIndex& index,
                                     const ScalingParams& scaling) {
  if (pi.size() != index.size()) throw GridMismatch("distribution size does not match index");
  if (scaling.n < 1) throw DomainError("n", "must be >= 1");
  const double n = scaling.n;
  StationaryMoments m;
  for (std::size_t i = 0; i < pi.size(); ++i) {
    const MicroState& s = index.state(i);
    m.mean_y_star_frac += pi[i] * s.y_star / n;
    m.mean_y_frac += pi[i] * s.y / n;
    m.mean_z_frac += pi[i] * s.z / n;
    if (s.y_star > 0) m.p_block += pi[i];
  }
  return m;
}

std::vector<double> transient_distribution(const Generator& g, std::size_t init, double t,
                                           double tol) {
  if (init >= g.size()) throw DomainError("init", "state index out of range");
  if (!(t >= 0.0)) throw DomainError("t", "time must be >= 0");
  if (!(tol > 0.0)) throw DomainError("tol", "tolerance must be > 0");
  std::vector<double> v(g.size(), 0.0);
  v[init] = 1.0;
  if (t == 0.0) return v;

  const double lambda = uniformization_rate(g);
  const double mean = lambda * t;
  std::vector<double> out(g.size(), 0.0);
  std::vector<double> next(g.size());
  double mass = 0.0;
  for (std::size_t k = 0;; ++k) {
    // Poisson weight in log space; e^{-mean} underflows for large mean.
    const double log_weight = -mean + static_cast<double>(k) * std::log(mean) -
                              std::lgamma(static_cast<double>(k) + 1.0);
    const double weight = std::exp(log_weight);
    if (weight > 0.0) {
      for (std::size_t i = 0; i < v.size(); ++i) out[i] += weight * v[i];
      mass += weight;
    }
    if (1.0 - mass < tol && static_cast<double>(k) > mean) break;
    // Rounding can leave the accumulated mass a hair short of 1 - tol.
    if (static_cast<double>(k) > mean + 40.0 * std::sqrt(mean) + 100.0) break;
    uniformized_step(g, lambda, v, next);
    v.swap(next);
  }
  return out;
}

void write_stationary_csv(std::ostream& os, const StateIndex& index,
                          const std::vector<double>& pi) {
  char buffer[128];
  os << "y_star,y,z,prob\n";
  for (std::size_t i = 0; i < index.size(); ++i) {
    const MicroState& s = index.state(i);
    std::snprintf(buffer, sizeof buffer, "%d,%d,%d,%.17g\n", s.y_star, s.y, s.z, pi[i]);
    os << buffer;
  }
}

}  // namespace twolevel
