#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace twolevel {

// Real-valued path on the uniform grid t0, t0 + dt, t0 + 2 dt, ...
struct SampledPath {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  double end_time() const { return time(values.empty() ? 0 : values.size() - 1); }

  // Grid index closest to t, clamped to the path.
  std::size_t index_at(double t) const;

  double operator[](std::size_t k) const { return values[k]; }
  double& operator[](std::size_t k) { return values[k]; }
};

// Throws DomainError unless dt > 0, the path is non-empty and every value is
// finite.
void validate(const SampledPath& path);

bool same_grid(const SampledPath& a, const SampledPath& b);

// Vector-valued path stored row-major: one row of `dim` coordinates per grid
// point.
class VectorPath {
 public:
  VectorPath() = default;
  VectorPath(double t0, double dt, std::size_t dim, std::size_t points = 0);

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  double time(std::size_t k) const { return t0_ + dt_ * static_cast<double>(k); }
  std::size_t index_at(double t) const;

  std::span<const double> row(std::size_t k) const { return {data_.data() + k * dim_, dim_}; }
  std::span<double> row(std::size_t k) { return {data_.data() + k * dim_, dim_}; }
  double at(std::size_t k, std::size_t c) const { return data_[k * dim_ + c]; }
  double& at(std::size_t k, std::size_t c) { return data_[k * dim_ + c]; }

  void push_back(std::span<const double> row);
  SampledPath column(std::size_t c) const;

  const std::vector<double>& data() const { return data_; }

 private:
  double t0_ = 0.0;
  double dt_ = 1.0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Number of grid intervals used to cover [0, horizon] with step dt.
std::size_t grid_steps(double horizon, double dt);

// max over grid indices k with time in [from, to] and coordinates in `coords`
// of |a(k, c) - b(k, c)|. Both paths must share t0 and dt.
double sup_distance(const VectorPath& a, const VectorPath& b, std::span<const std::size_t> coords,
                    double from, double to);

}  // namespace twolevel
