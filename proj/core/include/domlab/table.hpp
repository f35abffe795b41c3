#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace domlab {

/// Dense row-major [state, action] table of doubles.
class Table {
  public:
    Table() = default;
    Table(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Table: negative shape");
    }

    double& operator()(int r, int c) { return data_[index(r, c)]; }
    double operator()(int r, int c) const { return data_[index(r, c)]; }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Table& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

  private:
    std::size_t index(int r, int c) const {
        return static_cast<std::size_t>(r) * cols_ + c;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

} // namespace domlab
