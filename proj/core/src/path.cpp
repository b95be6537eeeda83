#include "twolevel/path.hpp"

#include <algorithm>
#include <cmath>

#include "twolevel/errors.hpp"

namespace twolevel {

namespace {

std::size_t nearest_index(double t, double t0, double dt, std::size_t size) {
  if (size == 0) return 0;
  const double raw = std::round((t - t0) / dt);
  if (!(raw > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(raw), size - 1);
}

}  // namespace

std::size_t SampledPath::index_at(double t) const { return nearest_index(t, t0, dt, size()); }

void validate(const SampledPath& path) {
  if (!(path.dt > 0.0) || !std::isfinite(path.dt)) throw DomainError("dt", "grid step must be > 0");
  if (path.values.empty()) throw DomainError("values", "path must have at least one point");
  for (double v : path.values) {
    if (!std::isfinite(v)) throw DomainError("values", "path values must be finite");
  }
}

bool same_grid(const SampledPath& a, const SampledPath& b) {
  return a.size() == b.size() && a.t0 == b.t0 && a.dt == b.dt;
}

VectorPath::VectorPath(double t0, double dt, std::size_t dim, std::size_t points)
    : t0_(t0), dt_(dt), dim_(dim), data_(dim * points, 0.0) {
  if (!(dt > 0.0)) throw DomainError("dt", "grid step must be > 0");
  if (dim == 0) throw DomainError("dim", "path dimension must be >= 1");
}

std::size_t VectorPath::index_at(double t) const { return nearest_index(t, t0_, dt_, size()); }

void VectorPath::push_back(std::span<const double> values) {
  if (values.size() != dim_) throw GridMismatch("row dimension does not match path dimension");
  data_.insert(data_.end(), values.begin(), values.end());
}

SampledPath VectorPath::column(std::size_t c) const {
  SampledPath out{t0_, dt_, {}};
  out.values.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.values.push_back(at(k, c));
  return out;
}

std::size_t grid_steps(double horizon, double dt) {
  if (!(dt > 0.0)) throw DomainError("dt", "grid step must be > 0");
  if (!(horizon >= 0.0)) throw DomainError("horizon", "horizon must be >= 0");
  // Tolerate representation error so that horizon = k * dt gives exactly k.
  return static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
}

double sup_distance(const VectorPath& a, const VectorPath& b, std::span<const std::size_t> coords,
                    double from, double to) {
  if (a.t0() != b.t0() || a.dt() != b.dt()) throw GridMismatch("paths are on different grids");
  const std::size_t n = std::min(a.size(), b.size());
  const double eps = 1e-9 * a.dt();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = a.time(k);
    if (t < from - eps || t > to + eps) continue;
    for (std::size_t c : coords) {
      worst = std::max(worst, std::abs(a.at(k, c) - b.at(k, c)));
    }
  }
  return worst;
}

}  // namespace twolevel
