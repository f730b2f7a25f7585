#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gcyt {

/// Row-major 2-D raster with a physical pixel pitch in micrometres.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, double pitch_um, double fill = 0.0);
    Grid(std::size_t rows, std::size_t cols, double pitch_um, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    double pitch_um() const noexcept { return pitch_um_; }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    const double* row_ptr(std::size_t r) const noexcept { return values_.data() + r * cols_; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }
    const std::vector<double>& storage() const noexcept { return values_; }

    double sum() const noexcept;
    double max() const noexcept;
    double min() const noexcept;

    bool operator==(const Grid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    double pitch_um_ = 1.0;
    std::vector<double> values_;
};

/// Fluorophore density of a scene object or a reconstruction.
class ObjectImage : public Grid {
public:
    using Grid::Grid;
    ObjectImage() = default;
    explicit ObjectImage(Grid g) : Grid(std::move(g)) {}
};

/// Static excitation intensity, values in [0, 1].
class IlluminationPattern : public Grid {
public:
    using Grid::Grid;
    IlluminationPattern() = default;
    explicit IlluminationPattern(Grid g) : Grid(std::move(g)) {}
};

/// Throws ParameterError unless values lie in [0, 1] with at least one positive entry.
void validate_pattern(const IlluminationPattern& pattern);

/// Throws ParameterError on negative values.
void validate_object(const ObjectImage& image);

/// Intensity centre of mass (row, col) in pixel-index coordinates.
struct Centroid {
    double row = 0.0;
    double col = 0.0;
};

/// Throws UndefinedCentroidError when the total intensity is not positive.
Centroid centroid(const Grid& g);

/// Rotate counter-clockwise by quarter_turns * 90 degrees.
ObjectImage rotate90(const ObjectImage& img, int quarter_turns);

}  // namespace gcyt
