#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace sgdrf {

// A point in a 1-D (temporal) or 2-D (spatial) world.
class Location {
 public:
  static constexpr std::size_t kMaxDim = 2;

  Location() = default;
  explicit Location(double x);
  Location(double x, double y);
  Location(std::initializer_list<double> coords);
  explicit Location(std::span<const double> coords);

  std::size_t dim() const { return dim_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  double& operator[](std::size_t i) { return coords_[i]; }
  std::span<const double> coords() const { return {coords_.data(), dim_}; }

  bool operator==(const Location& other) const;

 private:
  std::array<double, kMaxDim> coords_{};
  std::size_t dim_ = 0;
};

struct WorldBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  WorldBounds() = default;
  WorldBounds(std::vector<double> lo, std::vector<double> hi);

  std::size_t dim() const { return lower.size(); }
  bool contains(const Location& x) const;
};

// Evenly spaced points in row-major order with dimension 0 fastest.
struct RegularGrid {
  WorldBounds bounds;
  std::vector<int> counts;
  std::vector<Location> points;

  std::size_t dim() const { return counts.size(); }
  std::size_t size() const { return points.size(); }
  std::size_t index(std::span<const int> cell) const;
};

RegularGrid make_grid(const WorldBounds& bounds, std::span<const int> counts);

// Boustrophedon sweep: dimension-0 rows traversed alternately forward and
// backward, advancing one step along dimension 1 between rows.
std::vector<Location> lawnmower_trajectory(const RegularGrid& grid);

double scaled_distance(const Location& a, const Location& b,
                       std::span<const double> lengthscales);

}  // namespace sgdrf
