#pragma once

// Image-domain measurements on reconstructed objects: Canny edges,
// equivalent-circle diameter, integrated intensity, and histogram peak
// analysis for population-level summaries.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gcyt/grid.hpp"

namespace gcyt {

struct EdgeMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> edges;  // 1 = edge pixel, row-major

    bool at(std::size_t r, std::size_t c) const { return edges[r * cols + c] != 0; }
    std::size_t count() const;
};

/// Separable Gaussian, kernel truncated at +-ceil(3 sigma), mirror-reflected borders.
ObjectImage gaussian_blur(const ObjectImage& img, double sigma_px);

/// Thresholds are fractions of the maximum gradient magnitude, 0 <= low <= high.
EdgeMap canny(const ObjectImage& img, double sigma_px, double low = 0.1, double high = 0.3);

/// Equivalent-circle diameter of the edge-bounded region. Background is
/// flood-filled from the border through non-edge pixels (4-connected); the
/// enclosed area counts interior pixels fully and edge pixels by half.
double estimate_diameter(const EdgeMap& edges, double pitch_um);

double total_intensity(const ObjectImage& img);

struct HistogramReport {
    std::vector<double> edges;  // bins + 1 bin boundaries
    std::vector<std::size_t> counts;
    std::vector<double> peaks;  // bin centres of detected peaks, ascending
    bool bimodal = false;

    std::vector<double> centers() const;
    std::size_t total() const;
};

/// Uniform bins over [min, max]. A peak is a bin strictly above both
/// neighbours (zero beyond the ends) whose prominence is at least
/// `min_prominence` of the tallest bin.
HistogramReport histogram(std::span<const double> values, std::size_t bins,
                          double min_prominence = 0.10);

/// CSV with header "bin_center,count".
void write_histogram_csv(std::ostream& os, const HistogramReport& h);

/// Peaks and bimodal verdict, one "key: value" per line.
std::string histogram_summary(const HistogramReport& h, const std::string& quantity);

}  // namespace gcyt
