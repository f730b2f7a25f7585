#pragma once

// L1-regularised least-squares recovery of object images from waveforms:
//
//     minimise  1/2 ||A x - s||^2 + lambda ||x||_1   (optionally x >= 0)
//
// solved with FISTA. The smooth term is accessed only through the normal
// operator x -> A^T A x, so the same solver runs matrix-free or on a cached
// Gram matrix when many waveforms share one pattern.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gcyt/forward.hpp"
#include "gcyt/grid.hpp"

namespace gcyt {

struct SolverConfig {
    double lambda = 0.0;
    std::size_t max_iters = 500;
    double tol = 1e-6;  // relative objective change between accepted iterates
    bool nonneg = true;
    bool monotone = true;  // reject non-decreasing steps and restart momentum
    std::optional<double> step;  // empty: 1 / L estimated by power iteration

    void validate() const;
};

struct ReconReport {
    std::vector<double> objective;  // F(x_k) for k = 1..iterations
    std::size_t iterations = 0;
    double residual_norm = 0.0;  // ||A x - s||
    bool converged = false;
    double step = 0.0;
    std::size_t restarts = 0;
};

struct Reconstruction {
    ObjectImage image;
    ReconReport report;
};

/// sign(x) * max(|x| - t, 0)
double soft_threshold(double x, double t);

/// Symmetric positive semi-definite operator x -> A^T A x.
class NormalOperator {
public:
    virtual ~NormalOperator() = default;
    virtual std::size_t dim() const = 0;
    virtual void apply(std::span<const double> x, std::span<double> out) const = 0;
};

/// A^T (A x) through apply_forward / apply_adjoint.
class MatrixFreeNormal final : public NormalOperator {
public:
    MatrixFreeNormal(const IlluminationPattern& pat, const Geometry& geom);
    std::size_t dim() const override { return geom_.object_size(); }
    void apply(std::span<const double> x, std::span<double> out) const override;

private:
    const IlluminationPattern& pat_;
    Geometry geom_;
    mutable std::vector<double> scratch_;
};

/// Dense A^T A built from row cross-correlations of the pattern.
class GramMatrix final : public NormalOperator {
public:
    GramMatrix(const IlluminationPattern& pat, const Geometry& geom);
    ~GramMatrix() override;
    GramMatrix(GramMatrix&&) noexcept;
    GramMatrix& operator=(GramMatrix&&) noexcept;

    std::size_t dim() const override { return n_; }
    void apply(std::span<const double> x, std::span<double> out) const override;
    double at(std::size_t i, std::size_t j) const;

private:
    struct Impl;
    std::size_t n_ = 0;
    std::unique_ptr<Impl> impl_;
};

/// Largest eigenvalue of A^T A by power iteration from a seeded random start
/// (Rayleigh quotient of the last iterate; non-decreasing in `iters`).
double estimate_lipschitz(const NormalOperator& op, std::size_t iters, std::uint64_t seed);
double estimate_lipschitz(const IlluminationPattern& pat, const Geometry& geom, std::size_t iters,
                          std::uint64_t seed);

/// Core solver on the normal-equation data: atb = A^T s, s_norm2 = ||s||^2.
/// Returns the minimiser estimate; zero initialisation.
std::vector<double> fista(const NormalOperator& op, std::span<const double> atb, double s_norm2,
                          const SolverConfig& cfg, double lipschitz, ReconReport& report);

/// Reconstruct one waveform matrix-free. The waveform must have geom.samples() samples.
Reconstruction fista(const Waveform& waveform, const IlluminationPattern& pat, const Geometry& geom,
                     const SolverConfig& cfg, double pitch_um);

/// 0.01 * ||A^T s||_inf, the default L1 weight.
double default_lambda(std::span<const double> atb, double fraction = 0.01);

/// Reusable reconstructor for many waveforms measured with one pattern.
class Reconstructor {
public:
    Reconstructor(IlluminationPattern pat, Geometry geom, std::size_t power_iters = 100,
                  std::uint64_t seed = 0);

    const Geometry& geometry() const noexcept { return geom_; }
    double lipschitz() const noexcept { return lipschitz_; }

    /// Waveforms shorter or longer than geom.samples() are zero-padded or truncated.
    /// If lambda_fraction is set, cfg.lambda is replaced by lambda_fraction * ||A^T s||_inf.
    Reconstruction reconstruct(std::span<const double> samples, const SolverConfig& cfg,
                               std::optional<double> lambda_fraction = std::nullopt) const;

private:
    IlluminationPattern pat_;
    Geometry geom_;
    GramMatrix gram_;
    double lipschitz_ = 0.0;
};

/// PSNR in dB after normalising both images to peak 1; 200 dB for identical images.
double psnr(const ObjectImage& reference, const ObjectImage& candidate);

inline constexpr double kPsnrCapDb = 200.0;

/// rows x cols window centred on the rounded intensity centroid, zero-padded
/// where it overhangs the source.
ObjectImage crop_centered(const ObjectImage& img, std::size_t rows, std::size_t cols);

}  // namespace gcyt
