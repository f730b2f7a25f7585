#include "gcyt/forward.hpp"

#include <cmath>
#include <random>

#include "gcyt/error.hpp"
#include "gcyt/parallel.hpp"
#include "gcyt/rng.hpp"

namespace gcyt {
namespace {

bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

void check_sizes(const Geometry& g, const IlluminationPattern& pat, std::size_t x_len,
                 std::size_t s_len) {
    if (pat.rows() != g.pattern_rows || pat.cols() != g.pattern_cols)
        throw GeometryError("pattern dimensions do not match geometry");
    if (x_len != g.object_size()) throw GeometryError("object vector length does not match geometry");
    if (s_len != g.samples()) throw GeometryError("waveform length does not match geometry");
}

}  // namespace

void NoiseSpec::validate() const {
    require(shot_scale >= 0.0 && std::isfinite(shot_scale), "shot_scale must be >= 0");
    require(read_sd >= 0.0 && std::isfinite(read_sd), "read_sd must be >= 0");
}

void FlowConfig::validate() const {
    require(velocity_um_s > 0.0, "velocity must be positive");
    require(sample_rate_hz > 0.0, "sample rate must be positive");
    require(velocity_jitter_frac >= 0.0 && velocity_jitter_frac < 1.0,
            "velocity jitter fraction must lie in [0, 1)");
    noise.validate();
}

std::size_t Geometry::top_row() const noexcept {
    const long centred = static_cast<long>((pattern_rows - object_rows) / 2);
    return static_cast<std::size_t>(centred + lateral_offset);
}

void Geometry::validate() const {
    if (object_rows == 0 || object_cols == 0 || pattern_rows == 0 || pattern_cols == 0)
        throw GeometryError("geometry dimensions must be >= 1");
    if (object_rows > pattern_rows) throw GeometryError("object is taller than the pattern");
    const long centred = static_cast<long>((pattern_rows - object_rows) / 2);
    const long top = centred + lateral_offset;
    if (top < 0 || top + static_cast<long>(object_rows) > static_cast<long>(pattern_rows))
        throw GeometryError("lateral offset moves the object outside the pattern");
}

Geometry make_geometry(std::size_t object_rows, std::size_t object_cols,
                       const IlluminationPattern& pat, long lateral_offset) {
    Geometry g{object_rows, object_cols, pat.rows(), pat.cols(), lateral_offset};
    g.validate();
    return g;
}

Geometry make_geometry(const ObjectImage& obj, const IlluminationPattern& pat, long lateral_offset) {
    if (!nearly_equal(obj.pitch_um(), pat.pitch_um()))
        throw GeometryError("object and pattern pixel pitches differ");
    return make_geometry(obj.rows(), obj.cols(), pat, lateral_offset);
}

void apply_forward(std::span<const double> x, const IlluminationPattern& pat, const Geometry& g,
                   std::span<double> out) {
    check_sizes(g, pat, x.size(), out.size());
    std::fill(out.begin(), out.end(), 0.0);
    const std::size_t Wo = g.object_cols, Wp = g.pattern_cols, top = g.top_row();
    for (std::size_t y = 0; y < g.object_rows; ++y) {
        const double* prow = pat.row_ptr(top + y);
        for (std::size_t u = 0; u < Wo; ++u) {
            const double xv = x[y * Wo + u];
            if (xv == 0.0) continue;
            // sample k reads pattern column c = k - (Wo - 1) + u
            double* dst = out.data() + (Wo - 1 - u);
            for (std::size_t c = 0; c < Wp; ++c) dst[c] += xv * prow[c];
        }
    }
}

std::vector<double> apply_forward(std::span<const double> x, const IlluminationPattern& pat,
                                  const Geometry& g) {
    std::vector<double> out(g.samples());
    apply_forward(x, pat, g, out);
    return out;
}

void apply_adjoint(std::span<const double> s, const IlluminationPattern& pat, const Geometry& g,
                   std::span<double> out) {
    check_sizes(g, pat, out.size(), s.size());
    const std::size_t Wo = g.object_cols, Wp = g.pattern_cols, top = g.top_row();
    for (std::size_t y = 0; y < g.object_rows; ++y) {
        const double* prow = pat.row_ptr(top + y);
        for (std::size_t u = 0; u < Wo; ++u) {
            const double* src = s.data() + (Wo - 1 - u);
            double acc = 0.0;
            for (std::size_t c = 0; c < Wp; ++c) acc += prow[c] * src[c];
            out[y * Wo + u] = acc;
        }
    }
}

std::vector<double> apply_adjoint(std::span<const double> s, const IlluminationPattern& pat,
                                  const Geometry& g) {
    std::vector<double> out(g.object_size());
    apply_adjoint(s, pat, g, out);
    return out;
}

std::vector<double> forward_fractional(std::span<const double> x, const IlluminationPattern& pat,
                                       const Geometry& g, double advance_px) {
    require(advance_px > 0.0 && std::isfinite(advance_px), "advance per sample must be positive");
    if (pat.rows() != g.pattern_rows || pat.cols() != g.pattern_cols)
        throw GeometryError("pattern dimensions do not match geometry");
    if (x.size() != g.object_size()) throw GeometryError("object vector length does not match geometry");

    const std::size_t Wo = g.object_cols, Wp = g.pattern_cols, top = g.top_row();
    const double span = static_cast<double>(Wp + Wo - 1);
    const auto n = static_cast<std::size_t>(std::ceil(span / advance_px - 1e-12));
    std::vector<double> out(std::max<std::size_t>(n, 1), 0.0);
    const long last = static_cast<long>(Wp) - 1;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double t = advance_px * static_cast<double>(k) - static_cast<double>(Wo - 1);
        double acc = 0.0;
        for (std::size_t y = 0; y < g.object_rows; ++y) {
            const double* prow = pat.row_ptr(top + y);
            for (std::size_t u = 0; u < Wo; ++u) {
                const double xv = x[y * Wo + u];
                if (xv == 0.0) continue;
                const double c = t + static_cast<double>(u);
                const double fl = std::floor(c);
                const long j = static_cast<long>(fl);
                const double frac = c - fl;
                double p = 0.0;
                if (j >= 0 && j <= last) p += (1.0 - frac) * prow[j];
                if (j + 1 >= 0 && j + 1 <= last) p += frac * prow[j + 1];
                acc += xv * p;
            }
        }
        out[k] = acc;
    }
    return out;
}

void apply_noise(std::span<double> samples, const NoiseSpec& noise) {
    noise.validate();
    if (!noise.enabled()) return;
    Rng rng = make_rng(noise.seed);
    if (noise.shot_scale > 0.0) {
        for (double& v : samples) {
            const double mean = noise.shot_scale * std::max(v, 0.0);
            if (mean <= 0.0) {
                v = 0.0;
                continue;
            }
            std::poisson_distribution<long long> poisson(mean);
            v = static_cast<double>(poisson(rng)) / noise.shot_scale;
        }
    }
    if (noise.read_sd > 0.0) {
        std::normal_distribution<double> gauss(0.0, noise.read_sd);
        for (double& v : samples) v += gauss(rng);
    }
}

namespace {

Waveform simulate_with_advance(const ObjectImage& obj, const IlluminationPattern& pat,
                               const FlowConfig& flow, double advance, double factor,
                               long lateral_offset) {
    const Geometry g = make_geometry(obj, pat, lateral_offset);
    Waveform w;
    w.dt_s = 1.0 / flow.sample_rate_hz;
    w.velocity_factor = factor;
    if (advance == 1.0) {
        w.samples = apply_forward(obj.values(), pat, g);
    } else {
        w.samples = forward_fractional(obj.values(), pat, g, advance);
    }
    apply_noise(w.samples, flow.noise);
    return w;
}

}  // namespace

Waveform simulate_waveform(const ObjectImage& obj, const IlluminationPattern& pat,
                           const FlowConfig& flow, long lateral_offset) {
    flow.validate();
    double advance = flow.advance_px(pat.pitch_um());
    if (nearly_equal(advance, 1.0)) {
        advance = 1.0;
    } else if (flow.velocity_jitter_frac == 0.0) {
        throw GeometryError("velocity / sample_rate must equal the pattern pitch "
                            "(enable velocity jitter for fractional advance)");
    }
    return simulate_with_advance(obj, pat, flow, advance, 1.0, lateral_offset);
}

std::uint64_t batch_noise_seed(std::uint64_t batch_seed, std::size_t index) noexcept {
    return derive_seed(batch_seed, 2 * static_cast<std::uint64_t>(index) + 1);
}

std::vector<Waveform> simulate_batch(std::span<const ObjectImage> objects,
                                     const IlluminationPattern& pat, const FlowConfig& flow,
                                     std::uint64_t seed, unsigned threads) {
    flow.validate();
    double nominal = flow.advance_px(pat.pitch_um());
    const double j = flow.velocity_jitter_frac;
    if (nearly_equal(nominal, 1.0)) {
        nominal = 1.0;
    } else if (j == 0.0) {
        throw GeometryError("velocity / sample_rate must equal the pattern pitch "
                            "(enable velocity jitter for fractional advance)");
    }
    std::vector<Waveform> out(objects.size());
    parallel_for(objects.size(), threads, [&](std::size_t i) {
        double factor = 1.0;
        if (j > 0.0) {
            Rng rng = make_rng(seed, 2 * static_cast<std::uint64_t>(i));
            factor = std::uniform_real_distribution<double>(1.0 - j, 1.0 + j)(rng);
        }
        FlowConfig local = flow;
        local.noise.seed = batch_noise_seed(seed, i);
        out[i] = simulate_with_advance(objects[i], pat, local, nominal * factor, factor, 0);
    });
    return out;
}

}  // namespace gcyt
