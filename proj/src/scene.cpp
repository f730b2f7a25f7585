#include "gcyt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "gcyt/error.hpp"
#include "gcyt/filters.hpp"
#include "gcyt/rng.hpp"

namespace gcyt {
namespace {

constexpr int kSupersample = 4;

struct Ellipse {
    double semi_major_px;
    double semi_minor_px;
    double angle_rad;  // major axis measured from the column axis
};

void check_fits(const Ellipse& e, Canvas canvas, PixelOffset offset) {
    const double c = std::cos(e.angle_rad), s = std::sin(e.angle_rad);
    const double a2 = e.semi_major_px * e.semi_major_px;
    const double b2 = e.semi_minor_px * e.semi_minor_px;
    const double half_cols = std::sqrt(a2 * c * c + b2 * s * s);
    const double half_rows = std::sqrt(a2 * s * s + b2 * c * c);
    if (2.0 * (half_cols + std::abs(offset.cols)) > static_cast<double>(canvas.cols) ||
        2.0 * (half_rows + std::abs(offset.rows)) > static_cast<double>(canvas.rows)) {
        throw ParameterError("object does not fit in the canvas");
    }
}

// Coverage fraction of each pixel by an ellipse centred on the canvas.
Grid rasterize(const Ellipse& e, double pitch_um, Canvas canvas, PixelOffset offset = {}) {
    require(canvas.rows >= 1 && canvas.cols >= 1, "canvas dimensions must be >= 1");
    check_fits(e, canvas, offset);
    Grid cover(canvas.rows, canvas.cols, pitch_um);
    const double cy = 0.5 * static_cast<double>(canvas.rows) + offset.rows;
    const double cx = 0.5 * static_cast<double>(canvas.cols) + offset.cols;
    const double ca = std::cos(e.angle_rad), sa = std::sin(e.angle_rad);
    const double inv_a2 = 1.0 / (e.semi_major_px * e.semi_major_px);
    const double inv_b2 = 1.0 / (e.semi_minor_px * e.semi_minor_px);
    const double reach = e.semi_major_px + 1.0;
    for (std::size_t r = 0; r < canvas.rows; ++r) {
        if (std::abs(static_cast<double>(r) + 0.5 - cy) > reach) continue;
        for (std::size_t c = 0; c < canvas.cols; ++c) {
            if (std::abs(static_cast<double>(c) + 0.5 - cx) > reach) continue;
            int hits = 0;
            for (int i = 0; i < kSupersample; ++i) {
                const double dy = static_cast<double>(r) + (i + 0.5) / kSupersample - cy;
                for (int j = 0; j < kSupersample; ++j) {
                    const double dx = static_cast<double>(c) + (j + 0.5) / kSupersample - cx;
                    const double u = dx * ca + dy * sa;
                    const double v = -dx * sa + dy * ca;
                    if (u * u * inv_a2 + v * v * inv_b2 <= 1.0) ++hits;
                }
            }
            cover(r, c) = static_cast<double>(hits) / (kSupersample * kSupersample);
        }
    }
    return cover;
}

}  // namespace

void MorphClassSpec::validate() const {
    require(diameter_mean_um > 0.0, "diameter_mean_um must be positive");
    require(diameter_sd_um >= 0.0, "diameter_sd_um must be >= 0");
    require(intensity_mean > 0.0, "intensity_mean must be positive");
    require(intensity_sd >= 0.0, "intensity_sd must be >= 0");
    require(texture_granularity_px >= 1.0, "texture_granularity_px must be >= 1");
    require(eccentricity >= 0.0 && eccentricity < 1.0, "eccentricity must lie in [0, 1)");
    require(texture_contrast >= 0.0 && texture_contrast <= 1.0, "texture_contrast must lie in [0, 1]");
    require(orientation_sd_deg >= 0.0, "orientation_sd_deg must be >= 0");
}

IlluminationPattern make_pattern(std::size_t rows, std::size_t cols, double pitch_um,
                                 double fill_fraction, std::uint64_t seed) {
    require(rows >= 1 && cols >= 1, "pattern dimensions must be >= 1");
    require(fill_fraction > 0.0 && fill_fraction <= 1.0, "fill_fraction must lie in (0, 1]");
    IlluminationPattern pattern(rows, cols, pitch_um);
    Rng rng = make_rng(seed);
    for (double& v : pattern.values()) {
        const double u = std::generate_canonical<double, 53>(rng);
        v = u < fill_fraction ? 1.0 : 0.0;
    }
    return pattern;
}

IlluminationPattern pattern_from_values(std::size_t rows, std::size_t cols, double pitch_um,
                                        std::vector<double> values) {
    IlluminationPattern pattern(rows, cols, pitch_um, std::move(values));
    validate_pattern(pattern);
    return pattern;
}

IlluminationPattern perturb_pattern(const IlluminationPattern& pattern, double fraction,
                                    std::uint64_t seed) {
    require(fraction >= 0.0 && fraction <= 1.0, "flip fraction must lie in [0, 1]");
    IlluminationPattern out = pattern;
    const std::size_t n = pattern.size();
    const auto flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed);
    // partial Fisher-Yates: the first `flips` slots become a uniform sample
    for (std::size_t i = 0; i < flips; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        double& v = out.values()[idx[i]];
        v = 1.0 - v;
    }
    return out;
}

ObjectImage make_bead(double diameter_um, double peak_intensity, double pitch_um, Canvas canvas,
                      PixelOffset offset) {
    require(diameter_um > 0.0, "bead diameter must be positive");
    require(peak_intensity >= 0.0, "peak intensity must be >= 0");
    require(pitch_um > 0.0, "pixel pitch must be positive");
    const double radius_px = 0.5 * diameter_um / pitch_um;
    Grid cover = rasterize({radius_px, radius_px, 0.0}, pitch_um, canvas, offset);
    for (double& v : cover.values()) v *= peak_intensity;
    return ObjectImage(std::move(cover));
}

CellParams sample_cell_params(const MorphClassSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CellParams p;
    p.diameter_um = std::max(spec.diameter_mean_um + spec.diameter_sd_um * gauss(rng),
                             1e-3 * spec.diameter_mean_um);
    p.intensity = std::max(spec.intensity_mean + spec.intensity_sd * gauss(rng),
                           1e-3 * spec.intensity_mean);
    p.orientation_rad = spec.orientation_sd_deg * gauss(rng) * std::numbers::pi / 180.0;
    return p;
}

ObjectImage make_cell(const MorphClassSpec& spec, double pitch_um, Canvas canvas,
                      std::uint64_t seed) {
    require(pitch_um > 0.0, "pixel pitch must be positive");
    const CellParams p = sample_cell_params(spec, seed);
    // equal-area ellipse: a*b = r^2, b/a = sqrt(1 - e^2)
    const double r = 0.5 * p.diameter_um / pitch_um;
    const double aspect = std::sqrt(std::sqrt(1.0 - spec.eccentricity * spec.eccentricity));
    const Ellipse body{r / aspect, r * aspect, p.orientation_rad};
    Grid img = rasterize(body, pitch_um, canvas);

    if (spec.texture_contrast > 0.0) {
        Rng rng = make_rng(seed, 1);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Grid noise(canvas.rows, canvas.cols, pitch_um);
        for (double& v : noise.values()) v = gauss(rng);
        Grid smooth = convolve_separable(noise, gaussian_kernel(spec.texture_granularity_px));
        const double n = static_cast<double>(smooth.size());
        const double mean = smooth.sum() / n;
        double var = 0.0;
        for (double v : smooth.values()) var += (v - mean) * (v - mean);
        const double sd = std::sqrt(var / n);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double z = sd > 0.0 ? (smooth.values()[i] - mean) / sd : 0.0;
            img.values()[i] *= 1.0 + spec.texture_contrast * std::clamp(z, -1.0, 1.0);
        }
    }
    for (double& v : img.values()) v *= p.intensity;
    return ObjectImage(std::move(img));
}

}  // namespace gcyt
