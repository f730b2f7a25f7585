#pragma once

// Deterministic synthetic scenes: random binary illumination masks, beads,
// and two-class textured "cells". Every generator is a pure function of its
// arguments.

#include <cstdint>
#include <string>

#include "gcyt/grid.hpp"

namespace gcyt {

struct Canvas {
    std::size_t rows = 0;
    std::size_t cols = 0;
};

/// Morphology class of synthetic cells. Classes meant to be compared should
/// share diameter and intensity statistics and differ in shape and texture.
struct MorphClassSpec {
    std::string label;
    double diameter_mean_um = 10.0;
    double diameter_sd_um = 0.0;
    double intensity_mean = 1.0;
    double intensity_sd = 0.0;
    double texture_granularity_px = 1.0;
    double eccentricity = 0.0;      // in [0, 1); major axis along the flow (column) axis
    double texture_contrast = 0.0;  // in [0, 1]
    double orientation_sd_deg = 0.0;  // Gaussian tilt of the major axis away from the flow axis

    void validate() const;
};

/// Per-cell draws; exposed so tests can rebuild a cell from its parameters.
struct CellParams {
    double diameter_um = 0.0;  // equivalent-circle diameter
    double intensity = 0.0;
    double orientation_rad = 0.0;
};

IlluminationPattern make_pattern(std::size_t rows, std::size_t cols, double pitch_um,
                                 double fill_fraction, std::uint64_t seed);

/// Wrap measured, continuous-valued excitation intensities as a pattern.
IlluminationPattern pattern_from_values(std::size_t rows, std::size_t cols, double pitch_um,
                                        std::vector<double> values);

/// Flip round(fraction * N) distinct pixels of a binary pattern (x -> 1 - x).
/// Models a miscalibrated pattern used at reconstruction time.
IlluminationPattern perturb_pattern(const IlluminationPattern& pattern, double fraction,
                                    std::uint64_t seed);

/// Sub-pixel displacement of an object from the canvas centre.
struct PixelOffset {
    double rows = 0.0;
    double cols = 0.0;
};

/// Filled disk centred on the canvas (optionally displaced), boundary pixels
/// weighted by 4x4 supersampled coverage.
ObjectImage make_bead(double diameter_um, double peak_intensity, double pitch_um,
                      Canvas canvas, PixelOffset offset = {});

CellParams sample_cell_params(const MorphClassSpec& spec, std::uint64_t seed);

ObjectImage make_cell(const MorphClassSpec& spec, double pitch_um, Canvas canvas,
                      std::uint64_t seed);

}  // namespace gcyt
