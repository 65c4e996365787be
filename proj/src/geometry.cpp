#include "sgdrf/geometry.hpp"

#include <cmath>
#include <string>

#include "sgdrf/error.hpp"

namespace sgdrf {

Location::Location(double x) : dim_(1) {
  require(std::isfinite(x), "location coordinate is not finite");
  coords_[0] = x;
}

Location::Location(double x, double y) : dim_(2) {
  require(std::isfinite(x) && std::isfinite(y), "location coordinate is not finite");
  coords_[0] = x;
  coords_[1] = y;
}

Location::Location(std::initializer_list<double> coords)
    : Location(std::span<const double>(coords.begin(), coords.size())) {}

Location::Location(std::span<const double> coords) : dim_(coords.size()) {
  require(dim_ >= 1 && dim_ <= kMaxDim,
          "location must have 1 or 2 coordinates, got " + std::to_string(dim_));
  for (std::size_t i = 0; i < dim_; ++i) {
    require(std::isfinite(coords[i]), "location coordinate is not finite");
    coords_[i] = coords[i];
  }
}

bool Location::operator==(const Location& other) const {
  if (dim_ != other.dim_) return false;
  for (std::size_t i = 0; i < dim_; ++i)
    if (coords_[i] != other.coords_[i]) return false;
  return true;
}

WorldBounds::WorldBounds(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  require(!lower.empty() && lower.size() <= Location::kMaxDim,
          "world bounds must be 1-D or 2-D");
  require(lower.size() == upper.size(),
          "world bounds: lower and upper have different dimensions");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    require(std::isfinite(lower[i]) && std::isfinite(upper[i]),
            "world bounds must be finite");
    require(lower[i] < upper[i], "world bounds inverted in dimension " +
                                     std::to_string(i) + ": lower " +
                                     std::to_string(lower[i]) + " >= upper " +
                                     std::to_string(upper[i]));
  }
}

bool WorldBounds::contains(const Location& x) const {
  if (x.dim() != dim()) return false;
  for (std::size_t i = 0; i < dim(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

std::size_t RegularGrid::index(std::span<const int> cell) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t d = 0; d < counts.size(); ++d) {
    idx += static_cast<std::size_t>(cell[d]) * stride;
    stride *= static_cast<std::size_t>(counts[d]);
  }
  return idx;
}

RegularGrid make_grid(const WorldBounds& bounds, std::span<const int> counts) {
  const WorldBounds checked(bounds.lower, bounds.upper);
  require(counts.size() == checked.dim(),
          "grid counts dimension " + std::to_string(counts.size()) +
              " does not match world dimension " +
              std::to_string(checked.dim()));
  std::size_t total = 1;
  std::vector<std::vector<double>> axes(counts.size());
  for (std::size_t d = 0; d < counts.size(); ++d) {
    require(counts[d] >= 1, "grid count must be positive, got " +
                                std::to_string(counts[d]));
    total *= static_cast<std::size_t>(counts[d]);
    const double lo = checked.lower[d];
    const double hi = checked.upper[d];
    if (counts[d] == 1) {
      axes[d].push_back(0.5 * (lo + hi));
    } else {
      const double step = (hi - lo) / (counts[d] - 1);
      for (int i = 0; i < counts[d]; ++i)
        axes[d].push_back(i == counts[d] - 1 ? hi : lo + step * i);
    }
  }

  RegularGrid grid;
  grid.bounds = checked;
  grid.counts.assign(counts.begin(), counts.end());
  grid.points.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::array<double, Location::kMaxDim> c{};
    std::size_t rest = flat;
    for (std::size_t d = 0; d < counts.size(); ++d) {
      c[d] = axes[d][rest % counts[d]];
      rest /= counts[d];
    }
    grid.points.emplace_back(std::span<const double>(c.data(), counts.size()));
  }
  return grid;
}

std::vector<Location> lawnmower_trajectory(const RegularGrid& grid) {
  require(grid.dim() == 2, "lawnmower trajectory requires a 2-D grid");
  const int nx = grid.counts[0];
  const int ny = grid.counts[1];
  std::vector<Location> path;
  path.reserve(grid.size());
  for (int row = 0; row < ny; ++row) {
    const bool forward = row % 2 == 0;
    for (int k = 0; k < nx; ++k) {
      const int col = forward ? k : nx - 1 - k;
      const int cell[2] = {col, row};
      path.push_back(grid.points[grid.index(cell)]);
    }
  }
  return path;
}

double scaled_distance(const Location& a, const Location& b,
                       std::span<const double> lengthscales) {
  require(a.dim() == b.dim() && a.dim() == lengthscales.size(),
          "scaled_distance: dimension mismatch");
  double sum = 0.0;
  for (std::size_t d = 0; d < a.dim(); ++d) {
    require(lengthscales[d] > 0.0, "lengthscales must be positive");
    const double z = (a[d] - b[d]) / lengthscales[d];
    sum += z * z;
  }
  return std::sqrt(sum);
}

}  // namespace sgdrf
