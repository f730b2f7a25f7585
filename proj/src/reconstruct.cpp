#include "gcyt/reconstruct.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "gcyt/error.hpp"
#include "gcyt/rng.hpp"

namespace gcyt {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double l1_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += std::abs(v);
    return s;
}

}  // namespace

void SolverConfig::validate() const {
    require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
    require(max_iters >= 1, "max_iters must be >= 1");
    require(tol > 0.0, "tol must be positive");
    if (step) require(*step > 0.0 && std::isfinite(*step), "fixed step must be positive");
}

double soft_threshold(double x, double t) {
    require(t >= 0.0, "soft threshold must be >= 0");
    const double mag = std::abs(x) - t;
    if (mag <= 0.0) return 0.0;
    return x > 0.0 ? mag : -mag;
}

// --- operators -------------------------------------------------------------

MatrixFreeNormal::MatrixFreeNormal(const IlluminationPattern& pat, const Geometry& geom)
    : pat_(pat), geom_(geom), scratch_(geom.samples()) {
    geom_.validate();
    if (pat.rows() != geom.pattern_rows || pat.cols() != geom.pattern_cols)
        throw GeometryError("pattern dimensions do not match geometry");
}

void MatrixFreeNormal::apply(std::span<const double> x, std::span<double> out) const {
    apply_forward(x, pat_, geom_, scratch_);
    apply_adjoint(scratch_, pat_, geom_, out);
}

struct GramMatrix::Impl {
    Eigen::MatrixXd g;
};

GramMatrix::GramMatrix(const IlluminationPattern& pat, const Geometry& geom)
    : n_(geom.object_size()), impl_(std::make_unique<Impl>()) {
    geom.validate();
    if (pat.rows() != geom.pattern_rows || pat.cols() != geom.pattern_cols)
        throw GeometryError("pattern dimensions do not match geometry");
    const std::size_t Ho = geom.object_rows, Wo = geom.object_cols, Wp = geom.pattern_cols;
    const std::size_t top = geom.top_row();
    const long lag_span = static_cast<long>(Wo) - 1;
    impl_->g.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
    std::vector<double> corr(2 * Wo - 1);

    // G[(y,u),(y2,u2)] = sum_c pat[y,c] * pat[y2, c + u2 - u]
    for (std::size_t y = 0; y < Ho; ++y) {
        const double* pa = pat.row_ptr(top + y);
        for (std::size_t y2 = y; y2 < Ho; ++y2) {
            const double* pb = pat.row_ptr(top + y2);
            for (long d = -lag_span; d <= lag_span; ++d) {
                const long lo = std::max(0L, -d);
                const long hi = std::min(static_cast<long>(Wp), static_cast<long>(Wp) - d);
                double acc = 0.0;
                for (long c = lo; c < hi; ++c) acc += pa[c] * pb[c + d];
                corr[static_cast<std::size_t>(d + lag_span)] = acc;
            }
            for (std::size_t u = 0; u < Wo; ++u) {
                for (std::size_t u2 = 0; u2 < Wo; ++u2) {
                    const double v = corr[u2 + Wo - 1 - u];
                    const auto i = static_cast<Eigen::Index>(y * Wo + u);
                    const auto j = static_cast<Eigen::Index>(y2 * Wo + u2);
                    impl_->g(i, j) = v;
                    impl_->g(j, i) = v;
                }
            }
        }
    }
}

GramMatrix::~GramMatrix() = default;
GramMatrix::GramMatrix(GramMatrix&&) noexcept = default;
GramMatrix& GramMatrix::operator=(GramMatrix&&) noexcept = default;

void GramMatrix::apply(std::span<const double> x, std::span<double> out) const {
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::Map<Eigen::VectorXd> ov(out.data(), n);
    ov.noalias() = impl_->g * xv;
}

double GramMatrix::at(std::size_t i, std::size_t j) const {
    return impl_->g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

// --- step size ---------------------------------------------------------------

double estimate_lipschitz(const NormalOperator& op, std::size_t iters, std::uint64_t seed) {
    require(iters >= 1, "power iteration count must be >= 1");
    const std::size_t n = op.dim();
    std::vector<double> v(n), w(n);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& e : v) e = gauss(rng);
    double norm = std::sqrt(dot(v, v));
    if (!(norm > 0.0)) throw DegenerateOperatorError("power iteration start vector is zero");
    for (double& e : v) e /= norm;

    double estimate = 0.0;
    for (std::size_t k = 0; k < iters; ++k) {
        op.apply(v, w);
        estimate = dot(v, w);
        norm = std::sqrt(dot(w, w));
        if (!(norm > 0.0)) throw DegenerateOperatorError("measurement operator is zero");
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    return estimate;
}

double estimate_lipschitz(const IlluminationPattern& pat, const Geometry& geom, std::size_t iters,
                          std::uint64_t seed) {
    return estimate_lipschitz(MatrixFreeNormal(pat, geom), iters, seed);
}

double default_lambda(std::span<const double> atb, double fraction) {
    double m = 0.0;
    for (double v : atb) m = std::max(m, std::abs(v));
    return fraction * m;
}

// --- solver ------------------------------------------------------------------

std::vector<double> fista(const NormalOperator& op, std::span<const double> atb, double s_norm2,
                          const SolverConfig& cfg, double lipschitz, ReconReport& report) {
    cfg.validate();
    const std::size_t n = op.dim();
    if (atb.size() != n) throw GeometryError("A^T s length does not match operator dimension");

    double step = 0.0;
    if (cfg.step) {
        step = *cfg.step;
        if (lipschitz > 0.0 && step > (1.0 + 1e-9) / lipschitz)
            throw ParameterError("fixed step exceeds 1 / L");
    } else {
        if (!(lipschitz > 0.0)) throw DegenerateOperatorError("non-positive Lipschitz constant");
        step = 1.0 / lipschitz;
    }

    const double lambda = cfg.lambda;
    auto objective = [&](std::span<const double> v, std::span<const double> gv) {
        return 0.5 * dot(v, gv) - dot(atb, v) + 0.5 * s_norm2 + lambda * l1_norm(v);
    };

    std::vector<double> x(n, 0.0), gx(n, 0.0), x_prev(n, 0.0), gx_prev(n, 0.0);
    std::vector<double> y(n, 0.0), gy(n, 0.0), z(n), gz(n);
    double t = 1.0;
    double f_x = 0.5 * s_norm2;
    const double f_start = f_x;
    double f_best = f_x;
    bool at_restart_point = true;  // y == x, no momentum

    report = ReconReport{};
    report.objective.reserve(cfg.max_iters);

    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const double thresh = step * lambda;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = y[i] - step * (gy[i] - atb[i]);
            z[i] = cfg.nonneg ? std::max(0.0, v - thresh) : soft_threshold(v, thresh);
        }
        op.apply(z, gz);
        const double f_z = objective(z, gz);
        // monotone mode rejects the step and backtracks instead
        if (!std::isfinite(f_z) || (!cfg.monotone && f_z > 10.0 * f_best && f_z > f_start))
            throw StepSizeError("objective diverged; step size too large");

        const bool accepted = !cfg.monotone || f_z <= f_x;
        double f_before = f_x;
        if (accepted) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            x_prev.swap(x);
            gx_prev.swap(gx);
            x.swap(z);
            gx.swap(gz);
            for (std::size_t i = 0; i < n; ++i) {
                y[i] = x[i] + beta * (x[i] - x_prev[i]);
                gy[i] = gx[i] + beta * (gx[i] - gx_prev[i]);
            }
            f_x = f_z;
            t = t_next;
            at_restart_point = false;
        } else {
            ++report.restarts;
            // a rejected step taken from a momentum-free point means the step is too long
            if (at_restart_point) step *= 0.5;
            y = x;
            gy = gx;
            t = 1.0;
            at_restart_point = true;
        }
        f_best = std::min(f_best, f_x);
        report.objective.push_back(f_x);
        report.iterations = it + 1;
        if (accepted && std::abs(f_before - f_x) <= cfg.tol * std::max(std::abs(f_x), 1e-300)) {
            report.converged = true;
            break;
        }
    }
    report.step = step;
    report.residual_norm = std::sqrt(std::max(0.0, 2.0 * (f_x - lambda * l1_norm(x))));
    return x;
}

Reconstruction fista(const Waveform& waveform, const IlluminationPattern& pat, const Geometry& geom,
                     const SolverConfig& cfg, double pitch_um) {
    if (waveform.samples.size() != geom.samples())
        throw GeometryError("waveform length does not match geometry");
    MatrixFreeNormal op(pat, geom);
    const std::vector<double> atb = apply_adjoint(waveform.samples, pat, geom);
    const double s_norm2 = dot(waveform.samples, waveform.samples);
    const double lip = cfg.step ? 0.0 : estimate_lipschitz(op, 100, 0);

    Reconstruction result;
    std::vector<double> x = fista(op, atb, s_norm2, cfg, lip, result.report);
    std::vector<double> resid = apply_forward(x, pat, geom);
    for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= waveform.samples[k];
    result.report.residual_norm = std::sqrt(dot(resid, resid));
    result.image = ObjectImage(geom.object_rows, geom.object_cols, pitch_um, std::move(x));
    return result;
}

Reconstructor::Reconstructor(IlluminationPattern pat, Geometry geom, std::size_t power_iters,
                             std::uint64_t seed)
    : pat_(std::move(pat)), geom_(geom), gram_(pat_, geom_) {
    lipschitz_ = estimate_lipschitz(gram_, power_iters, seed);
}

Reconstruction Reconstructor::reconstruct(std::span<const double> samples, const SolverConfig& cfg,
                                          std::optional<double> lambda_fraction) const {
    std::vector<double> s(geom_.samples(), 0.0);
    std::copy_n(samples.begin(), std::min(samples.size(), s.size()), s.begin());
    const std::vector<double> atb = apply_adjoint(s, pat_, geom_);
    SolverConfig local = cfg;
    if (lambda_fraction) local.lambda = default_lambda(atb, *lambda_fraction);

    Reconstruction result;
    std::vector<double> x = fista(gram_, atb, dot(s, s), local, lipschitz_, result.report);
    std::vector<double> resid = apply_forward(x, pat_, geom_);
    for (std::size_t k = 0; k < resid.size(); ++k) resid[k] -= s[k];
    result.report.residual_norm = std::sqrt(dot(resid, resid));
    result.image = ObjectImage(geom_.object_rows, geom_.object_cols, pat_.pitch_um(), std::move(x));
    return result;
}

// --- scoring -----------------------------------------------------------------

double psnr(const ObjectImage& reference, const ObjectImage& candidate) {
    if (reference.rows() != candidate.rows() || reference.cols() != candidate.cols())
        throw GeometryError("psnr: image dimensions differ");
    const double ref_peak = reference.max();
    if (!(ref_peak > 0.0)) throw NormalizationError("psnr: reference has no positive intensity");
    const double cand_peak = candidate.max();
    const double cand_scale = cand_peak > 0.0 ? 1.0 / cand_peak : 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double d = reference.values()[i] / ref_peak - candidate.values()[i] * cand_scale;
        sse += d * d;
    }
    const double mse = sse / static_cast<double>(reference.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

ObjectImage crop_centered(const ObjectImage& img, std::size_t rows, std::size_t cols) {
    require(rows >= 1 && cols >= 1, "crop dimensions must be >= 1");
    const Centroid c = centroid(img);
    // small bias so exact half-pixel centroids of symmetric objects round consistently
    const long cr = static_cast<long>(std::floor(c.row + 0.5 + 1e-9));
    const long cc = static_cast<long>(std::floor(c.col + 0.5 + 1e-9));
    const long top = cr - static_cast<long>(rows / 2);
    const long left = cc - static_cast<long>(cols / 2);
    ObjectImage out(rows, cols, img.pitch_um());
    for (std::size_t r = 0; r < rows; ++r) {
        const long sr = top + static_cast<long>(r);
        if (sr < 0 || sr >= static_cast<long>(img.rows())) continue;
        for (std::size_t k = 0; k < cols; ++k) {
            const long sc = left + static_cast<long>(k);
            if (sc < 0 || sc >= static_cast<long>(img.cols())) continue;
            out(r, k) = img(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc));
        }
    }
    return out;
}

}  // namespace gcyt
