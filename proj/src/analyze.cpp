#include "gcyt/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gcyt/error.hpp"
#include "gcyt/filters.hpp"

namespace gcyt {

std::size_t EdgeMap::count() const {
    return static_cast<std::size_t>(std::count(edges.begin(), edges.end(), std::uint8_t{1}));
}

ObjectImage gaussian_blur(const ObjectImage& img, double sigma_px) {
    return ObjectImage(convolve_separable(img, gaussian_kernel(sigma_px)));
}

EdgeMap canny(const ObjectImage& img, double sigma_px, double low, double high) {
    require(sigma_px > 0.0, "canny sigma must be positive");
    require(low >= 0.0 && low <= high, "canny thresholds must satisfy 0 <= low <= high");
    const std::size_t R = img.rows(), C = img.cols();
    EdgeMap out{R, C, std::vector<std::uint8_t>(R * C, 0)};

    // Work on a peak-normalised copy so a global intensity scale cannot change decisions.
    ObjectImage work = img;
    double peak = 0.0;
    for (double v : img.values()) peak = std::max(peak, std::abs(v));
    if (!(peak > 0.0)) return out;
    for (double& v : work.values()) v /= peak;
    const ObjectImage smooth = gaussian_blur(work, sigma_px);

    auto px = [&](long r, long c) {
        return smooth(reflect_index(r, R), reflect_index(c, C));
    };
    std::vector<double> mag(R * C), angle(R * C);
    double max_mag = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            const long ri = static_cast<long>(r), ci = static_cast<long>(c);
            const double gx = (px(ri - 1, ci + 1) + 2.0 * px(ri, ci + 1) + px(ri + 1, ci + 1)) -
                              (px(ri - 1, ci - 1) + 2.0 * px(ri, ci - 1) + px(ri + 1, ci - 1));
            const double gy = (px(ri + 1, ci - 1) + 2.0 * px(ri + 1, ci) + px(ri + 1, ci + 1)) -
                              (px(ri - 1, ci - 1) + 2.0 * px(ri - 1, ci) + px(ri - 1, ci + 1));
            mag[r * C + c] = std::hypot(gx, gy);
            angle[r * C + c] = std::atan2(gy, gx);
            max_mag = std::max(max_mag, mag[r * C + c]);
        }
    }
    if (max_mag <= 1e-12) return out;

    // Non-maximum suppression along the gradient, quantised to 0/45/90/135 degrees.
    // Comparisons carry a small tolerance so rounding noise cannot split ties.
    const double eps = 1e-9 * max_mag;
    auto mag_at = [&](long r, long c) {
        if (r < 0 || c < 0 || r >= static_cast<long>(R) || c >= static_cast<long>(C)) return 0.0;
        return mag[static_cast<std::size_t>(r) * C + static_cast<std::size_t>(c)];
    };
    std::vector<double> thin(R * C, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            const double m = mag[r * C + c];
            if (m <= eps) continue;
            double deg = angle[r * C + c] * 180.0 / std::numbers::pi;
            if (deg < 0.0) deg += 180.0;
            long dr = 0, dc = 0;
            if (deg < 22.5 || deg >= 157.5) {
                dc = 1;
            } else if (deg < 67.5) {
                dr = 1;
                dc = 1;
            } else if (deg < 112.5) {
                dr = 1;
            } else {
                dr = 1;
                dc = -1;
            }
            const long ri = static_cast<long>(r), ci = static_cast<long>(c);
            const double ahead = mag_at(ri + dr, ci + dc);
            const double behind = mag_at(ri - dr, ci - dc);
            if (m >= ahead - eps && m > behind + eps) thin[r * C + c] = m;
        }
    }

    // Double threshold with 8-connected hysteresis from strong pixels.
    const double hi = high * max_mag, lo = low * max_mag;
    std::deque<std::size_t> frontier;
    for (std::size_t i = 0; i < R * C; ++i) {
        if (thin[i] > 0.0 && thin[i] >= hi) {
            out.edges[i] = 1;
            frontier.push_back(i);
        }
    }
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop_front();
        const long r = static_cast<long>(i / C), c = static_cast<long>(i % C);
        for (long dr = -1; dr <= 1; ++dr) {
            for (long dc = -1; dc <= 1; ++dc) {
                const long nr = r + dr, nc = c + dc;
                if (nr < 0 || nc < 0 || nr >= static_cast<long>(R) || nc >= static_cast<long>(C)) continue;
                const std::size_t j = static_cast<std::size_t>(nr) * C + static_cast<std::size_t>(nc);
                if (out.edges[j] == 0 && thin[j] > 0.0 && thin[j] >= lo) {
                    out.edges[j] = 1;
                    frontier.push_back(j);
                }
            }
        }
    }
    return out;
}

double estimate_diameter(const EdgeMap& edges, double pitch_um) {
    require(pitch_um > 0.0, "pixel pitch must be positive");
    const std::size_t R = edges.rows, C = edges.cols;
    require(edges.edges.size() == R * C, "edge map size mismatch");
    std::vector<std::uint8_t> background(R * C, 0);
    std::deque<std::size_t> frontier;
    auto seed = [&](std::size_t r, std::size_t c) {
        const std::size_t i = r * C + c;
        if (!edges.edges[i] && !background[i]) {
            background[i] = 1;
            frontier.push_back(i);
        }
    };
    for (std::size_t c = 0; c < C; ++c) {
        seed(0, c);
        seed(R - 1, c);
    }
    for (std::size_t r = 0; r < R; ++r) {
        seed(r, 0);
        seed(r, C - 1);
    }
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop_front();
        const std::size_t r = i / C, c = i % C;
        if (r > 0) seed(r - 1, c);
        if (r + 1 < R) seed(r + 1, c);
        if (c > 0) seed(r, c - 1);
        if (c + 1 < C) seed(r, c + 1);
    }
    std::size_t interior = 0, boundary = 0;
    for (std::size_t i = 0; i < R * C; ++i) {
        if (background[i]) continue;
        if (edges.edges[i]) {
            ++boundary;
        } else {
            ++interior;
        }
    }
    if (interior == 0) throw NoObjectError("edge map encloses no region");
    const double area = static_cast<double>(interior) + 0.5 * static_cast<double>(boundary);
    return 2.0 * std::sqrt(area / std::numbers::pi) * pitch_um;
}

double total_intensity(const ObjectImage& img) {
    return img.sum();
}

std::vector<double> HistogramReport::centers() const {
    std::vector<double> out;
    out.reserve(counts.size());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) out.push_back(0.5 * (edges[i] + edges[i + 1]));
    return out;
}

std::size_t HistogramReport::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

HistogramReport histogram(std::span<const double> values, std::size_t bins, double min_prominence) {
    require(bins >= 2, "histogram needs at least 2 bins");
    require(!values.empty(), "histogram of an empty sample");
    for (double v : values) require(std::isfinite(v), "histogram values must be finite");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    const double width = (hi - lo) / static_cast<double>(bins);

    HistogramReport h;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + width * static_cast<double>(i);
    h.edges[bins] = hi;
    h.counts.assign(bins, 0);
    for (double v : values) {
        std::size_t b = 0;
        if (width > 0.0) {
            b = static_cast<std::size_t>(std::floor((v - lo) / width));
            b = std::min(b, bins - 1);
        }
        ++h.counts[b];
    }

    // zero-padded copy so end bins can be peaks
    std::vector<double> p(bins + 2, 0.0);
    for (std::size_t i = 0; i < bins; ++i) p[i + 1] = static_cast<double>(h.counts[i]);
    const double tallest = *std::max_element(p.begin(), p.end());
    const std::vector<double> centers = h.centers();
    for (std::size_t i = 1; i <= bins; ++i) {
        if (!(p[i] > p[i - 1] && p[i] > p[i + 1])) continue;
        double left_min = p[i];
        for (std::size_t j = i; j-- > 0;) {
            if (p[j] > p[i]) break;
            left_min = std::min(left_min, p[j]);
        }
        double right_min = p[i];
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            if (p[j] > p[i]) break;
            right_min = std::min(right_min, p[j]);
        }
        const double prominence = p[i] - std::max(left_min, right_min);
        if (prominence >= min_prominence * tallest) h.peaks.push_back(centers[i - 1]);
    }
    h.bimodal = h.peaks.size() == 2;
    return h;
}

void write_histogram_csv(std::ostream& os, const HistogramReport& h) {
    os << "bin_center,count\n";
    const std::vector<double> centers = h.centers();
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        os << std::setprecision(10) << centers[i] << ',' << h.counts[i] << '\n';
    }
}

std::string histogram_summary(const HistogramReport& h, const std::string& quantity) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << quantity << ".samples: " << h.total() << '\n';
    os << quantity << ".bins: " << h.counts.size() << '\n';
    os << quantity << ".peaks:";
    for (double p : h.peaks) os << ' ' << p;
    os << '\n';
    os << quantity << ".bimodal: " << (h.bimodal ? "true" : "false") << '\n';
    return os.str();
}

}  // namespace gcyt
