#include "gcyt/filters.hpp"

#include <cmath>

#include "gcyt/error.hpp"

namespace gcyt {

std::vector<double> gaussian_kernel(double sigma_px) {
    require(sigma_px > 0.0 && std::isfinite(sigma_px), "gaussian sigma must be positive");
    const long half = static_cast<long>(std::ceil(3.0 * sigma_px));
    std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (long i = -half; i <= half; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma_px * sigma_px));
        k[static_cast<std::size_t>(i + half)] = v;
        total += v;
    }
    for (double& v : k) v /= total;
    return k;
}

std::size_t reflect_index(long i, std::size_t n) noexcept {
    if (n == 1) return 0;
    const long period = 2 * static_cast<long>(n) - 2;
    long m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<long>(n)) m = period - m;
    return static_cast<std::size_t>(m);
}

Grid convolve_separable(const Grid& src, const std::vector<double>& kernel) {
    const long half = static_cast<long>(kernel.size() / 2);
    const std::size_t R = src.rows(), C = src.cols();
    Grid tmp(R, C, src.pitch_um());
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k) {
                acc += kernel[static_cast<std::size_t>(k + half)] *
                       src(r, reflect_index(static_cast<long>(c) + k, C));
            }
            tmp(r, c) = acc;
        }
    }
    Grid out(R, C, src.pitch_um());
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k) {
                acc += kernel[static_cast<std::size_t>(k + half)] *
                       tmp(reflect_index(static_cast<long>(r) + k, R), c);
            }
            out(r, c) = acc;
        }
    }
    return out;
}

}  // namespace gcyt
