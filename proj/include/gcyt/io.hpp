#pragma once

// Binary file formats shared by all tools. All integers are unsigned 32-bit
// and all reals IEEE-754 64-bit, both little-endian.
//
//   GCYT-IMG:  "GCIM" | version | rows | cols | pitch_um (f64) | rows*cols f64, row-major
//   GCYT-WFM:  "GCWF" | version | count | count x { label | velocity factor (f64) |
//                                                   length | length x f64 }

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "gcyt/forward.hpp"
#include "gcyt/grid.hpp"

namespace gcyt {

inline constexpr std::uint32_t kImageFormatVersion = 1;
inline constexpr std::uint32_t kWaveformFormatVersion = 1;

struct WaveformRecord {
    std::uint32_t label = 0;
    Waveform waveform;
};

void write_grid(std::ostream& os, const Grid& grid);
Grid read_grid(std::istream& is);
void save_grid(const std::filesystem::path& path, const Grid& grid);
Grid load_grid(const std::filesystem::path& path);

/// The format carries no sample period; readers assign `dt_s`.
void write_waveforms(std::ostream& os, const std::vector<WaveformRecord>& records);
std::vector<WaveformRecord> read_waveforms(std::istream& is, double dt_s = 1.0e-6);
void save_waveforms(const std::filesystem::path& path, const std::vector<WaveformRecord>& records);
std::vector<WaveformRecord> load_waveforms(const std::filesystem::path& path, double dt_s = 1.0e-6);

}  // namespace gcyt
