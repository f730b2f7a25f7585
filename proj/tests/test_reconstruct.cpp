#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "gcyt/error.hpp"
#include "gcyt/reconstruct.hpp"
#include "gcyt/rng.hpp"
#include "gcyt/scene.hpp"
#include "oracles.hpp"

using namespace gcyt;

namespace {

Eigen::MatrixXd dense_normal(const IlluminationPattern& pat, const Geometry& g) {
    const auto a = oracle::dense_forward_matrix(pat, g);
    Eigen::MatrixXd m(a.size(), g.object_size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < g.object_size(); ++j) m(i, j) = a[i][j];
    return m.transpose() * m;
}

bool non_increasing(const std::vector<double>& f) {
    for (std::size_t k = 1; k < f.size(); ++k)
        if (f[k] > f[k - 1]) return false;
    return true;
}

class ZeroOperator final : public NormalOperator {
public:
    std::size_t dim() const override { return 4; }
    void apply(std::span<const double>, std::span<double> out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
};

}  // namespace

TEST(SoftThreshold, AnalyticValues) {
    EXPECT_DOUBLE_EQ(soft_threshold(1.5, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(soft_threshold(-0.3, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(soft_threshold(-2.5, 1.0), -1.5);
    for (double x : {-3.0, -0.1, 0.0, 0.7, 12.0}) EXPECT_EQ(soft_threshold(x, 0.0), x);
}

TEST(Lipschitz, IdentityOperatorIsOne) {
    const auto pat = pattern_from_values(1, 1, 1.0, {1.0});
    EXPECT_NEAR(estimate_lipschitz(pat, make_geometry(1, 1, pat), 20, 0), 1.0, 1e-12);
}

TEST(Lipschitz, MatchesDenseEigenvalue) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto pat = make_pattern(6, 24, 1.0, 0.5, seed);
        const Geometry g = make_geometry(5, 6, pat);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_normal(pat, g));
        const double top = es.eigenvalues().maxCoeff();
        EXPECT_NEAR(estimate_lipschitz(pat, g, 200, seed), top, 0.01 * top);
    }
}

TEST(Lipschitz, QuadraticInPattern) {
    const auto pat = pattern_from_values(2, 5, 1.0, {1, 0, 0.5, 1, 0, 0, 1, 1, 0, 0.5});
    std::vector<double> half(pat.values().begin(), pat.values().end());
    for (double& v : half) v *= 0.5;
    const auto pat_half = pattern_from_values(2, 5, 1.0, half);
    const Geometry g = make_geometry(2, 3, pat);
    EXPECT_NEAR(estimate_lipschitz(pat, g, 100, 3), 4.0 * estimate_lipschitz(pat_half, g, 100, 3), 1e-9);
}

TEST(Lipschitz, NonDecreasingInIterations) {
    const auto pat = make_pattern(6, 24, 1.0, 0.5, 2);
    const Geometry g = make_geometry(5, 6, pat);
    double prev = 0.0;
    for (std::size_t it : {1, 2, 5, 10, 50}) {
        const double l = estimate_lipschitz(pat, g, it, 4);
        EXPECT_GE(l, prev - 1e-12);
        prev = l;
    }
}

TEST(Lipschitz, ZeroOperatorRejected) {
    EXPECT_THROW(estimate_lipschitz(ZeroOperator{}, 10, 0), DegenerateOperatorError);
}

TEST(GramMatrix, AgreesWithMatrixFree) {
    const auto pat = make_pattern(7, 40, 1.0, 0.5, 9);
    const Geometry g = make_geometry(5, 6, pat, 1);
    const GramMatrix gram(pat, g);
    const MatrixFreeNormal mf(pat, g);
    const Eigen::MatrixXd dense = dense_normal(pat, g);
    for (std::size_t i = 0; i < g.object_size(); ++i)
        for (std::size_t j = 0; j < g.object_size(); ++j) EXPECT_NEAR(gram.at(i, j), dense(i, j), 1e-12);
    Rng rng = make_rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(g.object_size()), a(x.size()), b(x.size());
    for (double& v : x) v = n(rng);
    gram.apply(x, a);
    mf.apply(x, b);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10);
}

TEST(Fista, IdentityWithoutRegularisationOneStep) {
    const auto pat = pattern_from_values(1, 1, 1.0, {1.0});
    const Geometry g = make_geometry(1, 1, pat);
    Waveform w;
    w.samples = {3.25};
    SolverConfig cfg;
    cfg.lambda = 0.0;
    cfg.max_iters = 1;
    const Reconstruction r = fista(w, pat, g, cfg, 1.0);
    EXPECT_NEAR(r.image(0, 0), 3.25, 1e-12);
    EXPECT_EQ(r.report.iterations, 1u);
}

TEST(Fista, RecoversSparseImage) {
    const auto pat = make_pattern(6, 64, 1.0, 0.5, 17);
    const Geometry g = make_geometry(6, 6, pat);
    std::vector<double> x(36, 0.0);
    x[4] = 1.0;
    x[17] = 0.6;
    x[29] = 1.7;  // K = 3, N = 69 >= 4K
    Waveform w;
    w.samples = apply_forward(x, pat, g);
    SolverConfig cfg;
    cfg.lambda = 1e-8;
    cfg.max_iters = 20000;
    cfg.tol = 1e-15;
    const Reconstruction r = fista(w, pat, g, cfg, 1.0);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < 36; ++i) {
        err += (r.image.values()[i] - x[i]) * (r.image.values()[i] - x[i]);
        norm += x[i] * x[i];
    }
    EXPECT_LE(std::sqrt(err / norm), 1e-3);
    EXPECT_TRUE(non_increasing(r.report.objective));
}

TEST(Fista, LargeLambdaGivesZero) {
    const auto pat = make_pattern(8, 64, 1.0, 0.5, 2);
    const auto bead = make_bead(5.0, 1.0, 1.0, {8, 8});
    const Geometry g = make_geometry(bead, pat);
    Waveform w;
    w.samples = apply_forward(bead.values(), pat, g);
    SolverConfig cfg;
    const auto atb = apply_adjoint(w.samples, pat, g);
    cfg.lambda = 2.0 * default_lambda(atb, 1.0);
    const Reconstruction r = fista(w, pat, g, cfg, 1.0);
    EXPECT_EQ(r.image.max(), 0.0);
    EXPECT_EQ(r.image.min(), 0.0);
}

TEST(Fista, ObjectiveMonotoneAcrossManySolves) {
    const auto pat = make_pattern(16, 256, 1.0, 0.5, 3);
    const Reconstructor rec(pat, make_geometry(16, 16, pat));
    Rng rng = make_rng(5);
    std::uniform_real_distribution<double> d(4.0, 12.0), off(-0.5, 0.5);
    for (int i = 0; i < 20; ++i) {
        const auto bead = make_bead(d(rng), 1.0, 1.0, {16, 16}, {off(rng), off(rng)});
        auto s = apply_forward(bead.values(), pat, rec.geometry());
        NoiseSpec n;
        n.shot_scale = 30.0;
        n.seed = static_cast<std::uint64_t>(i);
        apply_noise(s, n);
        SolverConfig cfg;
        cfg.max_iters = 200;
        cfg.nonneg = i % 2 == 0;
        const Reconstruction r = rec.reconstruct(s, cfg, 1e-3);
        EXPECT_TRUE(non_increasing(r.report.objective)) << "solve " << i;
    }
}

TEST(Fista, ReconstructorMatchesMatrixFree) {
    const auto pat = make_pattern(8, 96, 1.0, 0.5, 8);
    const auto bead = make_bead(6.0, 1.0, 1.0, {8, 8});
    const Geometry g = make_geometry(bead, pat);
    Waveform w;
    w.samples = apply_forward(bead.values(), pat, g);
    SolverConfig cfg;
    cfg.lambda = 1e-3;
    cfg.max_iters = 300;
    const Reconstruction a = fista(w, pat, g, cfg, 1.0);
    const Reconstruction b = Reconstructor(pat, g).reconstruct(w.samples, cfg);
    for (std::size_t i = 0; i < bead.size(); ++i) EXPECT_NEAR(a.image.values()[i], b.image.values()[i], 1e-6);
    EXPECT_NEAR(a.report.residual_norm, b.report.residual_norm, 1e-6);
}

TEST(Fista, StepErrors) {
    const auto pat = make_pattern(4, 32, 1.0, 0.5, 8);
    const Geometry g = make_geometry(4, 4, pat);
    const GramMatrix gram(pat, g);
    const double lip = estimate_lipschitz(gram, 100, 0);
    std::vector<double> x(16, 1.0), atb(16);
    gram.apply(x, atb);
    SolverConfig cfg;
    cfg.step = 2.0 / lip;
    ReconReport rep;
    EXPECT_THROW(fista(gram, atb, 16.0, cfg, lip, rep), ParameterError);
    // a step far beyond 1/L without the monotone safeguard diverges
    SolverConfig wild;
    wild.monotone = false;
    wild.nonneg = false;
    EXPECT_THROW(fista(gram, atb, 16.0, wild, lip / 50.0, rep), StepSizeError);
    // with the safeguard the step is halved until the objective decreases (below 2/L)
    SolverConfig safe;
    safe.max_iters = 20000;
    safe.tol = 1e-14;
    const auto sol = fista(gram, atb, 16.0, safe, lip / 50.0, rep);
    EXPECT_TRUE(non_increasing(rep.objective));
    EXPECT_LT(rep.step, 2.0 / lip);
    EXPECT_GT(rep.restarts, 0u);
    for (double v : sol) EXPECT_NEAR(v, 1.0, 1e-3);
}

TEST(Fista, WaveformLengthChecked) {
    const auto pat = make_pattern(4, 32, 1.0, 0.5, 8);
    const Geometry g = make_geometry(4, 4, pat);
    Waveform w;
    w.samples.assign(10, 1.0);
    EXPECT_THROW(fista(w, pat, g, SolverConfig{}, 1.0), GeometryError);
}

TEST(Psnr, IdenticalImagesCapped) {
    const auto b = make_bead(6.0, 2.0, 1.0, {12, 12});
    EXPECT_EQ(psnr(b, b), kPsnrCapDb);
}

TEST(Psnr, UniformErrorTwentyDecibels) {
    // both images have peak 1 and differ by exactly 0.1 at every pixel
    ObjectImage ref(10, 10, 1.0, 0.5), cand(10, 10, 1.0, 0.6);
    ref.values()[0] = 1.0;
    ref.values()[1] = 0.9;
    cand.values()[0] = 0.9;
    cand.values()[1] = 1.0;
    EXPECT_NEAR(psnr(ref, cand), 20.0, 1e-9);
}

TEST(Psnr, Errors) {
    EXPECT_THROW(psnr(ObjectImage(4, 4, 1.0), ObjectImage(4, 4, 1.0)), NormalizationError);
    EXPECT_THROW(psnr(make_bead(2.0, 1.0, 1.0, {4, 4}), ObjectImage(4, 5, 1.0)), GeometryError);
}

TEST(Crop, CenteredBeadGivesCentralWindow) {
    const auto b = make_bead(6.0, 1.0, 1.0, {16, 16});
    const auto c = crop_centered(b, 8, 8);
    for (std::size_t r = 0; r < 8; ++r)
        for (std::size_t col = 0; col < 8; ++col) EXPECT_EQ(c(r, col), b(r + 4, col + 4));
}

TEST(Crop, LargerCropZeroPads) {
    const auto b = make_bead(6.0, 1.0, 1.0, {16, 16});
    const auto c = crop_centered(b, 134, 134);
    EXPECT_EQ(c.rows(), 134u);
    EXPECT_DOUBLE_EQ(c.sum(), b.sum());
    EXPECT_EQ(c(0, 0), 0.0);
    EXPECT_EQ(c(67, 67), b(8, 8));
}

TEST(Crop, OffCentreDiskRecentred) {
    Rng rng = make_rng(4);
    std::uniform_real_distribution<double> off(-6.0, 6.0);
    for (int i = 0; i < 20; ++i) {
        const auto b = make_bead(7.0, 1.0, 1.0, {32, 32}, {off(rng), off(rng)});
        const auto c = crop_centered(b, 20, 20);
        const Centroid m = centroid(c);
        EXPECT_NEAR(m.row, 9.5, 1.0);
        EXPECT_NEAR(m.col, 9.5, 1.0);
    }
}

TEST(Crop, ZeroImageRejected) {
    EXPECT_THROW(crop_centered(ObjectImage(8, 8, 1.0), 4, 4), UndefinedCentroidError);
}
