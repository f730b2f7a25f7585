#pragma once

// Ghost-motion measurement model: an object translating along the column
// axis across a static illumination mask, integrated by a single-pixel
// detector. With one pixel of travel per sample the measurement is the full
// cross-correlation of object rows with their pattern rows, summed over rows.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gcyt/grid.hpp"

namespace gcyt {

struct NoiseSpec {
    double shot_scale = 0.0;  // expected photons per unit intensity per sample; 0 disables
    double read_sd = 0.0;     // additive Gaussian, intensity units
    std::uint64_t seed = 0;

    bool enabled() const noexcept { return shot_scale > 0.0 || read_sd > 0.0; }
    void validate() const;
};

struct FlowConfig {
    double velocity_um_s = 1.0e6;
    double sample_rate_hz = 1.0e6;
    NoiseSpec noise;
    double velocity_jitter_frac = 0.0;

    /// Pixels travelled per sample for a pattern of the given pitch.
    double advance_px(double pitch_um) const noexcept {
        return velocity_um_s / sample_rate_hz / pitch_um;
    }
    void validate() const;
};

struct Waveform {
    std::vector<double> samples;
    double dt_s = 1.0e-6;
    double velocity_factor = 1.0;  // per-object multiplier applied to the nominal velocity
    std::string source;
};

/// Object/pattern placement. Object row y sees pattern row y + top_row().
struct Geometry {
    std::size_t object_rows = 0;
    std::size_t object_cols = 0;
    std::size_t pattern_rows = 0;
    std::size_t pattern_cols = 0;
    long lateral_offset = 0;  // rows, relative to vertical centring

    std::size_t object_size() const noexcept { return object_rows * object_cols; }
    std::size_t samples() const noexcept { return pattern_cols + object_cols - 1; }
    std::size_t top_row() const noexcept;
    void validate() const;
};

/// Throws GeometryError on pitch mismatch, an object taller than the pattern,
/// or a lateral offset pushing the object outside the pattern rows.
Geometry make_geometry(const ObjectImage& obj, const IlluminationPattern& pat,
                       long lateral_offset = 0);
Geometry make_geometry(std::size_t object_rows, std::size_t object_cols,
                       const IlluminationPattern& pat, long lateral_offset = 0);

/// Noiseless measurement s = A x. `out` must hold geometry.samples() values.
void apply_forward(std::span<const double> x, const IlluminationPattern& pat,
                   const Geometry& geom, std::span<double> out);
std::vector<double> apply_forward(std::span<const double> x, const IlluminationPattern& pat,
                                  const Geometry& geom);

/// Exact transpose: x = A^T s. `out` must hold geometry.object_size() values.
void apply_adjoint(std::span<const double> s, const IlluminationPattern& pat,
                   const Geometry& geom, std::span<double> out);
std::vector<double> apply_adjoint(std::span<const double> s, const IlluminationPattern& pat,
                                  const Geometry& geom);

/// Measurement with a fractional advance per sample: the pattern is read with
/// linear interpolation (zero outside). An advance of 1 agrees with
/// apply_forward up to rounding.
std::vector<double> forward_fractional(std::span<const double> x, const IlluminationPattern& pat,
                                       const Geometry& geom, double advance_px);

/// Poisson shot noise on shot_scale*s (rescaled back), then Gaussian read noise.
void apply_noise(std::span<double> samples, const NoiseSpec& noise);

Waveform simulate_waveform(const ObjectImage& obj, const IlluminationPattern& pat,
                           const FlowConfig& flow, long lateral_offset = 0);

/// Noise seed used for object `index` of a batch.
std::uint64_t batch_noise_seed(std::uint64_t batch_seed, std::size_t index) noexcept;

/// Simulates each object with a per-object velocity factor drawn uniformly in
/// [1 - j, 1 + j]; output order matches input order.
std::vector<Waveform> simulate_batch(std::span<const ObjectImage> objects,
                                     const IlluminationPattern& pat, const FlowConfig& flow,
                                     std::uint64_t seed, unsigned threads = 1);

}  // namespace gcyt
