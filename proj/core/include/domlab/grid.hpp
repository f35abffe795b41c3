#pragma once

#include <span>
#include <vector>

namespace domlab {

/**
 * Uniform grid of state values. Points are strictly increasing and evenly
 * spaced (within 1e-12 relative tolerance); lo/hi are the first/last points.
 */
class StateGrid {
  public:
    /// Default-constructed grids are empty placeholders; build real ones
    /// through uniform() or from_points().
    StateGrid() = default;

    static StateGrid uniform(double lo, double hi, int count);
    /// Validates uniform spacing; throws std::invalid_argument otherwise.
    static StateGrid from_points(std::vector<double> points);

    const std::vector<double>& points() const { return points_; }
    int size() const { return static_cast<int>(points_.size()); }
    double operator[](int i) const { return points_[i]; }
    double lo() const { return points_.front(); }
    double hi() const { return points_.back(); }
    double spacing() const { return spacing_; }

    double clamp(double x) const;
    /// Index of the grid point closest to x (x clamped to [lo, hi] first).
    /// Exact midpoints round away from zero.
    int nearest_index(double x) const;
    /// Piecewise-linear interpolation of per-point values at x (clamped).
    double interpolate(std::span<const double> values, double x) const;

  private:
    std::vector<double> points_;
    double spacing_ = 0.0;
};

/// Ordered action values. Strictly increasing, nonempty, not necessarily uniform.
class ActionGrid {
  public:
    ActionGrid() = default;

    static ActionGrid uniform(double lo, double hi, int count);
    static ActionGrid from_points(std::vector<double> points);

    const std::vector<double>& points() const { return points_; }
    int size() const { return static_cast<int>(points_.size()); }
    double operator[](int i) const { return points_[i]; }

  private:
    std::vector<double> points_;
};

} // namespace domlab
