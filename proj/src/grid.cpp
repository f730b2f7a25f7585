#include "gcyt/grid.hpp"

#include <algorithm>
#include <numeric>

#include "gcyt/error.hpp"

namespace gcyt {

Grid::Grid(std::size_t rows, std::size_t cols, double pitch_um, double fill)
    : rows_(rows), cols_(cols), pitch_um_(pitch_um), values_(rows * cols, fill) {
    require(rows >= 1 && cols >= 1, "grid dimensions must be >= 1");
    require(pitch_um > 0.0, "pixel pitch must be positive");
}

Grid::Grid(std::size_t rows, std::size_t cols, double pitch_um, std::vector<double> values)
    : rows_(rows), cols_(cols), pitch_um_(pitch_um), values_(std::move(values)) {
    require(rows >= 1 && cols >= 1, "grid dimensions must be >= 1");
    require(pitch_um > 0.0, "pixel pitch must be positive");
    require(values_.size() == rows * cols, "grid value count does not match rows*cols");
}

double Grid::sum() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double Grid::max() const noexcept {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double Grid::min() const noexcept {
    return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

void validate_pattern(const IlluminationPattern& pattern) {
    bool any_positive = false;
    for (double v : pattern.values()) {
        require(v >= 0.0 && v <= 1.0, "illumination values must lie in [0, 1]");
        any_positive = any_positive || v > 0.0;
    }
    require(any_positive, "illumination pattern is entirely dark");
}

void validate_object(const ObjectImage& image) {
    for (double v : image.values()) require(v >= 0.0, "object image has negative intensity");
}

Centroid centroid(const Grid& g) {
    double total = 0.0, sr = 0.0, sc = 0.0;
    for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) {
            const double v = g(r, c);
            total += v;
            sr += v * static_cast<double>(r);
            sc += v * static_cast<double>(c);
        }
    }
    if (!(total > 0.0)) throw UndefinedCentroidError("centroid undefined for zero-intensity image");
    return {sr / total, sc / total};
}

ObjectImage rotate90(const ObjectImage& img, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    if (k == 0) return img;
    const std::size_t R = img.rows(), C = img.cols();
    if (k == 2) {
        ObjectImage out(R, C, img.pitch_um());
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t c = 0; c < C; ++c) out(r, c) = img(R - 1 - r, C - 1 - c);
        return out;
    }
    ObjectImage out(C, R, img.pitch_um());
    for (std::size_t i = 0; i < C; ++i) {
        for (std::size_t j = 0; j < R; ++j) {
            out(i, j) = (k == 1) ? img(j, C - 1 - i) : img(R - 1 - j, i);
        }
    }
    return out;
}

}  // namespace gcyt
