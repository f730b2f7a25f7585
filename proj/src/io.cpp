#include "gcyt/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "gcyt/error.hpp"

namespace gcyt {
namespace {

constexpr std::array<char, 4> kImageMagic{'G', 'C', 'I', 'M'};
constexpr std::array<char, 4> kWaveMagic{'G', 'C', 'W', 'F'};

void put_u32(std::ostream& os, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(b.data(), 4);
}

void put_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
    os.write(b.data(), 8);
}

void read_exact(std::istream& is, char* dst, std::size_t n) {
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) throw IoError("unexpected end of file");
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    read_exact(is, reinterpret_cast<char*>(b.data()), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    read_exact(is, reinterpret_cast<char*>(b.data()), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void expect_magic(std::istream& is, const std::array<char, 4>& magic, const char* name) {
    std::array<char, 4> got{};
    read_exact(is, got.data(), 4);
    if (got != magic) throw IoError(std::string("bad magic: not a ") + name + " file");
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw IoError(std::string(what) + " exceeds u32");
    return static_cast<std::uint32_t>(v);
}

void check_stream(const std::ostream& os) {
    if (!os) throw IoError("write failed");
}

}  // namespace

void write_grid(std::ostream& os, const Grid& grid) {
    os.write(kImageMagic.data(), 4);
    put_u32(os, kImageFormatVersion);
    put_u32(os, checked_u32(grid.rows(), "rows"));
    put_u32(os, checked_u32(grid.cols(), "cols"));
    put_f64(os, grid.pitch_um());
    for (double v : grid.values()) put_f64(os, v);
    check_stream(os);
}

Grid read_grid(std::istream& is) {
    expect_magic(is, kImageMagic, "GCYT-IMG");
    const std::uint32_t version = get_u32(is);
    if (version != kImageFormatVersion) throw IoError("unsupported GCYT-IMG version " + std::to_string(version));
    const std::uint32_t rows = get_u32(is);
    const std::uint32_t cols = get_u32(is);
    const double pitch = get_f64(is);
    if (rows == 0 || cols == 0 || !(pitch > 0.0)) throw IoError("invalid GCYT-IMG header");
    std::vector<double> values(static_cast<std::size_t>(rows) * cols);
    for (double& v : values) v = get_f64(is);
    return Grid(rows, cols, pitch, std::move(values));
}

void save_grid(const std::filesystem::path& path, const Grid& grid) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_grid(os, grid);
}

Grid load_grid(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    return read_grid(is);
}

void write_waveforms(std::ostream& os, const std::vector<WaveformRecord>& records) {
    os.write(kWaveMagic.data(), 4);
    put_u32(os, kWaveformFormatVersion);
    put_u32(os, checked_u32(records.size(), "record count"));
    for (const auto& rec : records) {
        put_u32(os, rec.label);
        put_f64(os, rec.waveform.velocity_factor);
        put_u32(os, checked_u32(rec.waveform.samples.size(), "waveform length"));
        for (double v : rec.waveform.samples) put_f64(os, v);
    }
    check_stream(os);
}

std::vector<WaveformRecord> read_waveforms(std::istream& is, double dt_s) {
    expect_magic(is, kWaveMagic, "GCYT-WFM");
    const std::uint32_t version = get_u32(is);
    if (version != kWaveformFormatVersion) throw IoError("unsupported GCYT-WFM version " + std::to_string(version));
    const std::uint32_t count = get_u32(is);
    std::vector<WaveformRecord> out;
    out.reserve(std::min<std::uint32_t>(count, 1u << 20));
    for (std::uint32_t i = 0; i < count; ++i) {
        WaveformRecord rec;
        rec.label = get_u32(is);
        rec.waveform.velocity_factor = get_f64(is);
        rec.waveform.dt_s = dt_s;
        const std::uint32_t len = get_u32(is);
        rec.waveform.samples.resize(len);
        for (double& v : rec.waveform.samples) v = get_f64(is);
        out.push_back(std::move(rec));
    }
    return out;
}

void save_waveforms(const std::filesystem::path& path, const std::vector<WaveformRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    write_waveforms(os, records);
}

std::vector<WaveformRecord> load_waveforms(const std::filesystem::path& path, double dt_s) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path.string());
    return read_waveforms(is, dt_s);
}

}  // namespace gcyt
