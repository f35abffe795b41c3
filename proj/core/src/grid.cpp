#include "domlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace domlab {

StateGrid StateGrid::uniform(double lo, double hi, int count) {
    if (count < 2) throw std::invalid_argument("StateGrid: need at least 2 points");
    if (!(lo < hi)) throw std::invalid_argument("StateGrid: lo must be < hi");
    std::vector<double> pts(count);
    const double h = (hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i) pts[i] = lo + i * h;
    pts.back() = hi;
    return from_points(std::move(pts));
}

StateGrid StateGrid::from_points(std::vector<double> points) {
    if (points.size() < 2) throw std::invalid_argument("StateGrid: need at least 2 points");
    const double h = (points.back() - points.front()) / (points.size() - 1);
    if (!(h > 0.0)) throw std::invalid_argument("StateGrid: points must increase");
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double step = points[i] - points[i - 1];
        if (!(step > 0.0)) throw std::invalid_argument("StateGrid: points must be strictly increasing");
        if (std::abs(step - h) > 1e-12 * std::max(1.0, std::abs(h)))
            throw std::invalid_argument("StateGrid: points must be uniformly spaced");
    }
    StateGrid g;
    g.points_ = std::move(points);
    g.spacing_ = h;
    return g;
}

double StateGrid::clamp(double x) const {
    return std::min(std::max(x, lo()), hi());
}

int StateGrid::nearest_index(double x) const {
    const double c = clamp(x);
    const long i = std::lround((c - lo()) / spacing_);
    return static_cast<int>(std::min<long>(std::max<long>(i, 0), size() - 1));
}

double StateGrid::interpolate(std::span<const double> values, double x) const {
    if (static_cast<int>(values.size()) != size())
        throw std::invalid_argument("StateGrid::interpolate: value count mismatch");
    const double c = clamp(x);
    int cell = static_cast<int>(std::floor((c - lo()) / spacing_));
    cell = std::min(std::max(cell, 0), size() - 2);
    const double t = (c - points_[cell]) / (points_[cell + 1] - points_[cell]);
    return values[cell] + t * (values[cell + 1] - values[cell]);
}

ActionGrid ActionGrid::uniform(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("ActionGrid: need at least 1 point");
    std::vector<double> pts(count);
    if (count == 1) {
        pts[0] = lo;
    } else {
        if (!(lo < hi)) throw std::invalid_argument("ActionGrid: lo must be < hi");
        const double h = (hi - lo) / (count - 1);
        for (int i = 0; i < count; ++i) pts[i] = lo + i * h;
        pts.back() = hi;
    }
    return from_points(std::move(pts));
}

ActionGrid ActionGrid::from_points(std::vector<double> points) {
    if (points.empty()) throw std::invalid_argument("ActionGrid: empty");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1]))
            throw std::invalid_argument("ActionGrid: points must be strictly increasing");
    ActionGrid g;
    g.points_ = std::move(points);
    return g;
}

} // namespace domlab
