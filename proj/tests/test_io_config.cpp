#include <gtest/gtest.h>

#include <sstream>

#include "gcyt/config.hpp"
#include "gcyt/error.hpp"
#include "gcyt/io.hpp"
#include "gcyt/scene.hpp"

using namespace gcyt;

TEST(GridIo, RoundTripExact) {
    const auto b = make_bead(7.4, 1.3, 0.5, {32, 32}, {0.21, -0.37});
    std::stringstream ss;
    write_grid(ss, b);
    const Grid r = read_grid(ss);
    EXPECT_EQ(r, b);
    EXPECT_EQ(r.pitch_um(), 0.5);
}

TEST(GridIo, LayoutIsLittleEndian) {
    std::stringstream ss;
    write_grid(ss, Grid(1, 2, 1.0, {1.0, -2.0}));
    const std::string bytes = ss.str();
    ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 4u + 8u + 16u);
    EXPECT_EQ(bytes.substr(0, 4), "GCIM");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);  // rows
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2u);  // cols
    // 1.0 = 0x3FF0000000000000, low byte first
    EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 7]), 0x3Fu);
    EXPECT_EQ(static_cast<unsigned char>(bytes[24 + 6]), 0xF0u);
}

TEST(GridIo, Errors) {
    std::stringstream bad("XXXX0000");
    EXPECT_THROW(read_grid(bad), IoError);
    std::stringstream full;
    write_grid(full, Grid(3, 3, 1.0, 1.0));
    std::stringstream cut(full.str().substr(0, full.str().size() - 5));
    EXPECT_THROW(read_grid(cut), IoError);
    EXPECT_THROW(load_grid("/nonexistent/dir/file.gcim"), IoError);
}

TEST(WaveformIo, RoundTrip) {
    std::vector<WaveformRecord> recs(3);
    for (std::uint32_t i = 0; i < 3; ++i) {
        recs[i].label = i % 2;
        recs[i].waveform.samples.assign(5 + i, 0.1 * i);
        recs[i].waveform.velocity_factor = 1.0 + 0.01 * i;
    }
    std::stringstream ss;
    write_waveforms(ss, recs);
    const auto back = read_waveforms(ss, 2.5e-7);
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(back[i].label, recs[i].label);
        EXPECT_EQ(back[i].waveform.samples, recs[i].waveform.samples);
        EXPECT_EQ(back[i].waveform.velocity_factor, recs[i].waveform.velocity_factor);
        EXPECT_EQ(back[i].waveform.dt_s, 2.5e-7);
    }
}

TEST(WaveformIo, Errors) {
    std::stringstream grid;
    write_grid(grid, Grid(1, 1, 1.0, 1.0));
    EXPECT_THROW(read_waveforms(grid), IoError);
    std::vector<WaveformRecord> recs(1);
    recs[0].waveform.samples = {1, 2, 3};
    std::stringstream ss;
    write_waveforms(ss, recs);
    std::stringstream cut(ss.str().substr(0, ss.str().size() - 1));
    EXPECT_THROW(read_waveforms(cut), IoError);
}

TEST(Config, ParseAndLookup) {
    const Config c = Config::parse(
        "# comment\n"
        "seed = 42\n"
        "e1.diameters_um = 7.4, 10.2   # trailing comment\n"
        "name = round\n"
        "flag = yes\n");
    EXPECT_EQ(c.get_u64("seed", 1), 42u);
    EXPECT_EQ(c.get_doubles("e1.diameters_um", {}), (std::vector<double>{7.4, 10.2}));
    EXPECT_EQ(c.get_string("name", "x"), "round");
    EXPECT_TRUE(c.get_bool("flag", false));
    EXPECT_EQ(c.get_double("missing", 0.25), 0.25);
    EXPECT_EQ(c.get_count("also_missing", 7), 7u);
}

TEST(Config, ResolvedRecordsDefaults) {
    const Config c = Config::parse("b = 2\n");
    c.get_int("b", 0);
    c.get_double("a", 0.1);
    EXPECT_EQ(c.resolved_text(), "a = 0.1\nb = 2\n");
}

TEST(Config, Errors) {
    EXPECT_THROW(Config::parse("novalue\n"), ParameterError);
    EXPECT_THROW(Config::parse(" = 3\n"), ParameterError);
    const Config c = Config::parse("x = abc\nn = -3\n");
    EXPECT_THROW(c.get_double("x", 0.0), ParameterError);
    EXPECT_THROW(c.get_bool("x", false), ParameterError);
    EXPECT_THROW(c.get_count("n", 0), ParameterError);
    EXPECT_THROW(Config::load("/nonexistent.cfg"), IoError);
}

TEST(Config, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 7.4, -2.5e6}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
}
