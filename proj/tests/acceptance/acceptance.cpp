// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance E1 O-c ... run the named criteria
//
// Exit status is nonzero if any blocking criterion fails. The latency
// criterion is machine-dependent and reported without blocking.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gcyt/analyze.hpp"
#include "gcyt/classify.hpp"
#include "gcyt/experiments.hpp"
#include "gcyt/forward.hpp"
#include "gcyt/reconstruct.hpp"
#include "gcyt/rng.hpp"
#include "gcyt/scene.hpp"
#include "oracles.hpp"

using namespace gcyt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    bool blocking;
    std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gcyt_accept_" + name);
    fs::remove_all(p);
    return p;
}

bool non_increasing(const std::vector<double>& f) {
    for (std::size_t k = 1; k < f.size(); ++k)
        if (f[k] > f[k - 1]) return false;
    return true;
}

// --- experiments ------------------------------------------------------------

Outcome e1() {
    const ExperimentReport r = run_e1(Config{}, RunOptions{{}, 1});
    const auto& m = r.metrics;
    const bool two = m.at("diameter_peaks") == 2.0;
    const double p0 = two ? m.at("diameter_peak_0") : NAN;
    const double p1 = two ? m.at("diameter_peak_1") : NAN;
    const bool peaks_ok = two && std::abs(p0 - 7.4) <= 0.5 && std::abs(p1 - 10.2) <= 0.5;
    const bool ok = m.at("diameter_bimodal") == 1.0 && peaks_ok && m.at("intensity_bimodal") == 1.0 &&
                    r.elapsed_s < 300.0;
    return {ok, "beads " + fmt(m.at("beads")) + ", diameter peaks " + fmt(p0) + " / " + fmt(p1) +
                    " um (targets 7.4 / 10.2 +-0.5), diameter bimodal " + fmt(m.at("diameter_bimodal")) +
                    ", intensity bimodal " + fmt(m.at("intensity_bimodal")) + ", runtime " + fmt(r.elapsed_s, 3) +
                    " s single-threaded (budget 300 s)"};
}

Outcome e2() {
    const ExperimentReport r = run_e2(Config{}, RunOptions{{}, 1});
    const auto& m = r.metrics;
    const bool ok = m.at("psnr_matched_min_db") >= 35.0 && m.at("mismatch_lower_everywhere") == 1.0;
    return {ok, fmt(m.at("instances")) + " noiseless beads, matched PSNR min " + fmt(m.at("psnr_matched_min_db")) +
                    " dB (>= 35, 134x134 crop), 5% mismatched PSNR max " + fmt(m.at("psnr_mismatched_max_db")) +
                    " dB, lower on every instance: " + (m.at("mismatch_lower_everywhere") == 1.0 ? "yes" : "no")};
}

Outcome e3() {
    const ExperimentReport r = run_e3(Config{}, RunOptions{{}, 1});
    std::string per;
    for (const auto& row : r.rows) per += (per.empty() ? "" : " ") + fmt(row.at("auc_test"));
    const bool ok = r.metrics.at("runs") == 5.0 && r.metrics.at("auc_min") >= 0.95;
    return {ok, "waveform SVM test AUC per seed [" + per + "], min " + fmt(r.metrics.at("auc_min")) +
                    " (>= 0.95, 1000/class train, 100/class test)"};
}

Outcome e4() {
    const ExperimentReport r = run_e4(Config{}, RunOptions{{}, 1});
    std::string per;
    for (const auto& row : r.rows)
        per += (per.empty() ? "" : "; ") + fmt(row.at("auc_waveform")) + " vs " + fmt(row.at("auc_image"));
    const bool ok = r.metrics.at("auc_image_min") >= 0.90;
    return {ok, "AUC waveform vs image per seed [" + per + "], image min " + fmt(r.metrics.at("auc_image_min")) +
                    " (>= 0.90), mean |difference| " + fmt(std::abs(r.metrics.at("auc_difference_mean")))};
}

Outcome e5() {
    const ExperimentReport r = run_e5(Config{}, RunOptions{{}, 1});
    std::string per;
    std::size_t held = 0, runs = 0;
    for (const auto& row : r.rows) {
        if (row.at("jitter") != 0.1) continue;
        ++runs;
        held += row.at("auc_waveform") >= row.at("auc_image");
        per += (per.empty() ? "" : "; ") + fmt(row.at("auc_waveform")) + " vs " + fmt(row.at("auc_image"));
    }
    const bool ok = r.metrics.at("max_jitter") == 0.1 && runs == 5 && held == runs;
    return {ok, "jitter +-10%: waveform vs image AUC per seed [" + per + "], ordering held " + std::to_string(held) +
                    "/" + std::to_string(runs) + "; means at jitter 0 / 0.05 / 0.1: waveform " +
                    fmt(r.metrics.at("auc_waveform_mean_j0")) + " / " + fmt(r.metrics.at("auc_waveform_mean_j0.05")) +
                    " / " + fmt(r.metrics.at("auc_waveform_mean_j0.1")) + ", image " +
                    fmt(r.metrics.at("auc_image_mean_j0")) + " / " + fmt(r.metrics.at("auc_image_mean_j0.05")) +
                    " / " + fmt(r.metrics.at("auc_image_mean_j0.1"))};
}

// --- oracle suites ------------------------------------------------------------

Outcome adjoint_identity() {
    Rng rng = make_rng(2024);
    std::uniform_int_distribution<int> dim(1, 16);
    std::normal_distribution<double> n(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t ro = dim(rng), co = dim(rng), extra = dim(rng) % 4, cp = 8 * dim(rng);
        const auto pat = make_pattern(ro + extra, cp, 1.0, 0.5, rng());
        const long off = extra ? static_cast<long>(rng() % (extra + 1)) - static_cast<long>(extra / 2) : 0;
        const Geometry g = make_geometry(ro, co, pat, off);
        std::vector<double> x(g.object_size()), s(g.samples());
        for (double& v : x) v = n(rng);
        for (double& v : s) v = n(rng);
        const auto ax = apply_forward(x, pat, g);
        const auto ats = apply_adjoint(s, pat, g);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) lhs += ax[k] * s[k];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * ats[i];
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
    return {worst <= 1e-10, "100 random instances, worst relative gap " + fmt(worst, 3) + " (<= 1e-10)"};
}

Outcome dense_oracle() {
    Rng rng = make_rng(7);
    std::uniform_int_distribution<int> dim(1, 8), val(0, 15);
    std::size_t mismatches = 0, cases = 0;
    for (std::size_t ro = 1; ro <= 8; ++ro) {
        for (std::size_t co = 1; co <= 8; ++co) {
            const auto pat = make_pattern(ro + static_cast<std::size_t>(dim(rng)) - 1, dim(rng), 1.0, 0.5, rng());
            const Geometry g = make_geometry(ro, co, pat);
            std::vector<double> x(g.object_size());
            for (double& v : x) v = val(rng);  // integers: every sum is exact
            ++cases;
            if (apply_forward(x, pat, g) != oracle::matvec(oracle::dense_forward_matrix(pat, g), x)) ++mismatches;
        }
    }
    return {mismatches == 0,
            std::to_string(cases) + " geometries up to 8x8, exact mismatches " + std::to_string(mismatches)};
}

Outcome auc_oracle() {
    Rng rng = make_rng(99);
    std::uniform_int_distribution<int> size(2, 50), level(0, 9);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = size(rng);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial % 2 ? 0.1 * level(rng) : std::generate_canonical<double, 53>(rng);
            y[i] = i == 0 ? 1 : i == 1 ? -1 : ((rng() >> 7) & 1 ? 1 : -1);
        }
        if (roc_auc(s, y).auc != oracle::pair_counting_auc(s, y)) ++mismatches;
    }
    return {mismatches == 0, "100 random instances (n <= 50, half with ties), exact mismatches " +
                                 std::to_string(mismatches)};
}

Outcome fista_monotone() {
    std::size_t solves = 0, violations = 0;
    Rng rng = make_rng(31);
    std::uniform_real_distribution<double> diam(4.0, 12.0), off(-0.5, 0.5);
    // bead geometry used by the experiments, cached Gram operator
    const auto pat = make_pattern(32, 1024, 0.5, 0.5, 3);
    const Reconstructor rec(pat, make_geometry(32, 32, pat));
    for (int i = 0; i < 60; ++i) {
        const auto bead = make_bead(diam(rng), 1.0, 0.5, {32, 32}, {off(rng), off(rng)});
        auto s = apply_forward(bead.values(), pat, rec.geometry());
        NoiseSpec noise;
        noise.shot_scale = i % 3 == 0 ? 0.0 : 10.0 * (i % 7 + 1);
        noise.read_sd = i % 4 == 0 ? 0.5 : 0.0;
        noise.seed = static_cast<std::uint64_t>(i);
        apply_noise(s, noise);
        SolverConfig cfg;
        cfg.max_iters = 150;
        cfg.nonneg = i % 2 == 0;
        const double frac = i % 3 == 0 ? 1e-4 : i % 3 == 1 ? 1e-3 : 1e-2;
        ++solves;
        violations += !non_increasing(rec.reconstruct(s, cfg, frac).report.objective);
    }
    // matrix-free path, cell geometry
    const auto cpat = make_pattern(28, 256, 1.0, 0.5, 4);
    const Geometry cg = make_geometry(28, 28, cpat);
    MorphClassSpec spec;
    spec.diameter_mean_um = 14.0;
    spec.eccentricity = 0.7;
    spec.texture_contrast = 0.4;
    for (int i = 0; i < 20; ++i) {
        const auto cell = make_cell(spec, 1.0, {28, 28}, static_cast<std::uint64_t>(i));
        Waveform w;
        w.samples = apply_forward(cell.values(), cpat, cg);
        SolverConfig cfg;
        cfg.lambda = 0.01 * i;
        cfg.max_iters = 100;
        ++solves;
        violations += !non_increasing(fista(w, cpat, cg, cfg, 1.0).report.objective);
    }
    return {violations == 0,
            std::to_string(solves) + " solves, non-monotone objective traces " + std::to_string(violations)};
}

Outcome diameter_oracle() {
    Rng rng = make_rng(5);
    std::uniform_real_distribution<double> off(-0.5, 0.5);
    double worst = 0.0;
    std::string per;
    for (double d : {4.0, 6.0, 8.0, 10.0, 12.0}) {
        double worst_d = 0.0;
        for (int k = 0; k < 10; ++k) {
            const auto bead = make_bead(d, 1.0, 0.5, {32, 32}, {off(rng), off(rng)});
            const double oracle_d = 2.0 * std::sqrt(bead.sum() / std::numbers::pi) * 0.5;
            const double est = estimate_diameter(canny(bead, 1.0), 0.5);
            worst_d = std::max(worst_d, std::abs(est - oracle_d));
        }
        per += (per.empty() ? "" : ", ") + fmt(d, 3) + ":" + fmt(worst_d, 3);
        worst = std::max(worst, worst_d);
    }
    return {worst <= 0.5, "worst |estimate - area oracle| per diameter (um) [" + per + "] (<= 0.5)"};
}

Outcome determinism() {
    Config beads = Config::parse("seed = 3\ne1.counts = 20, 20\ne1.pattern_cols = 1024\n");
    Config cells = Config::parse("seed = 4\ne3.train_per_class = 200\ne3.test_per_class = 50\ne3.runs = 2\n");
    Config jitter = Config::parse(
        "seed = 6\ne5.train_per_class = 40\ne5.test_per_class = 20\ne5.runs = 1\ne5.jitter_levels = 0.1\n");
    std::size_t files = 0, differing = 0;
    auto compare_dirs = [&](const fs::path& a, const fs::path& b) {
        for (const auto& entry : fs::recursive_directory_iterator(a)) {
            if (!entry.is_regular_file()) continue;
            const auto rel = fs::relative(entry.path(), a);
            if (rel.filename().string().find("_timing") != std::string::npos) continue;
            ++files;
            if (slurp(entry.path()) != slurp(b / rel)) ++differing;
        }
    };
    for (int pass = 0; pass < 2; ++pass) {
        const fs::path a = scratch("det_a"), b = scratch("det_b");
        // different thread counts must not change any output
        const RunOptions oa{a, 1}, ob{b, 3};
        if (pass == 0) {
            generate_datasets("E1", beads, RunOptions{a / "gen1", 1});
            generate_datasets("E1", beads, RunOptions{b / "gen1", 3});
            generate_datasets("E3", cells, RunOptions{a / "gen3", 1});
            generate_datasets("E3", cells, RunOptions{b / "gen3", 3});
            run_e1(beads, oa);
            run_e1(beads, ob);
            run_e2(Config::parse("e2.counts = 1, 1\ne2.pattern_cols = 1024\ne2.solver.max_iters = 200\n"), oa);
            run_e2(Config::parse("e2.counts = 1, 1\ne2.pattern_cols = 1024\ne2.solver.max_iters = 200\n"), ob);
        } else {
            run_e3(cells, oa);
            run_e3(cells, ob);
            run_e4(cells, oa);
            run_e4(cells, ob);
            run_e5(jitter, oa);
            run_e5(jitter, ob);
        }
        compare_dirs(a, b);
        fs::remove_all(a);
        fs::remove_all(b);
    }
    return {differing == 0 && files > 0, std::to_string(files) + " output files (gen + E1..E5, 1 vs 3 threads), " +
                                             std::to_string(differing) + " differ"};
}

// --- latency --------------------------------------------------------------------

Outcome bench() {
    const Config cfg;
    const CellSetup s = cell_setup(cfg, "e3.");
    const WaveformFeatureSetup f = waveform_feature_setup(cfg, "e3.");
    const auto pat = make_setup_pattern(s);
    const CellSplit train = make_cells(s, 300, 11, 1);
    const CellSplit test = make_cells(s, 100, 12, 1);
    const auto wtrain = simulate_batch(train.images, pat, s.flow, 13);
    const auto wtest = simulate_batch(test.images, pat, s.flow, 14);
    LinearModel model = train_svm(waveform_dataset(wtrain, train.labels, f), 1e-3, 10, 15);
    model.preprocessing = waveform_preprocessing_id(f.target_len, f.align, f.norm);
    std::vector<WaveformRecord> recs;
    for (std::size_t i = 0; i < wtest.size(); ++i)
        recs.push_back(WaveformRecord{static_cast<std::uint32_t>(test.labels[i] > 0), wtest[i]});
    const BenchReport b = bench_scoring(model, recs, f, 100000);
    return {b.median_us < kLatencyTargetUs,
            "median " + fmt(b.median_us, 3) + " us (target < " + fmt(kLatencyTargetUs, 3) + " us), p99 " +
                fmt(b.p99_us, 3) + " us, throughput " + fmt(b.throughput_per_s, 3) + "/s over " +
                std::to_string(b.repetitions) + " repetitions of " + std::to_string(f.target_len) +
                "-sample waveforms; hardware: " + hardware_description()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"E1", "bead library: bimodal diameters near 7.4 / 10.2 um and bimodal intensities", true, e1},
        {"E2", "noiseless PSNR >= 35 dB; 5% pattern mismatch strictly lower", true, e2},
        {"E3", "waveform SVM AUC >= 0.95 on 5 seeds", true, e3},
        {"E4", "image SVM AUC >= 0.90, reported next to waveform AUC", true, e4},
        {"E5", "jitter 10%: waveform AUC >= image AUC on 5 seeds", true, e5},
        {"O-a", "adjoint identity", true, adjoint_identity},
        {"O-b", "forward operator equals dense matrix", true, dense_oracle},
        {"O-c", "AUC equals pair counting", true, auc_oracle},
        {"O-d", "FISTA objective monotone", true, fista_monotone},
        {"O-e", "diameter estimate vs rasterizer area", true, diameter_oracle},
        {"O-f", "byte-identical outputs for fixed seeds", true, determinism},
        {"BENCH", "per-waveform preprocess + score latency (machine-dependent, non-blocking)", false, bench},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    for (const auto& w : wanted) {
        if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == w; })) {
            std::cerr << "unknown criterion: " << w << "\n";
            return 2;
        }
    }
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << " :: " << o.detail
                  << (c.blocking ? "" : " (non-blocking)") << std::endl;
        if (!o.pass && c.blocking) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
