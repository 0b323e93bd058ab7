#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <string>

#include "crowdtex/errors.hpp"
#include "crowdtex/frame_io.hpp"
#include "crowdtex/rng.hpp"
#include "test_util.hpp"

using namespace crowdtex;
namespace fs = std::filesystem;

namespace {

std::string pgm_bytes(int width, int height, std::uint8_t value, int maxval = 255) {
    std::string s = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                    std::to_string(maxval) + "\n";
    s.append(static_cast<std::size_t>(width) * height, static_cast<char>(value));
    return s;
}

} // namespace

TEST_CASE("all-255 PGM directory loads as intensity 1.0") {
    const auto dir = testutil::make_temp_dir("pgm_ones");
    for (int i = 0; i < 3; ++i) {
        testutil::write_file(dir / ("frame_00000" + std::to_string(i) + ".pgm"),
                             pgm_bytes(4, 4, 255));
    }
    const FrameSequence seq = load_frame_sequence(dir);
    CHECK(seq.frame_count() == 3);
    CHECK(seq.width == 4);
    CHECK(seq.height == 4);
    for (const auto& frame : seq.frames) {
        for (const double v : frame) {
            CHECK(v == 1.0);
        }
    }
    fs::remove_all(dir);
}

TEST_CASE("single all-zero PGM loads as one zero frame") {
    const auto dir = testutil::make_temp_dir("pgm_zero");
    testutil::write_file(dir / "frame_000000.pgm", pgm_bytes(5, 3, 0));
    const FrameSequence seq = load_frame_sequence(dir);
    CHECK(seq.frame_count() == 1);
    for (const double v : seq.frames[0]) {
        CHECK(v == 0.0);
    }
    fs::remove_all(dir);
}

TEST_CASE("dimension mismatch error names the offending file") {
    const auto dir = testutil::make_temp_dir("pgm_mixed");
    testutil::write_file(dir / "frame_000000.pgm", pgm_bytes(8, 8, 10));
    testutil::write_file(dir / "frame_000001.pgm", pgm_bytes(8, 9, 10));
    CHECK_THROWS_WITH_AS(load_frame_sequence(dir),
                         doctest::Contains("frame_000001.pgm"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("non-PGM file is rejected by name") {
    const auto dir = testutil::make_temp_dir("pgm_alien");
    testutil::write_file(dir / "frame_000000.pgm", pgm_bytes(4, 4, 1));
    testutil::write_file(dir / "notes.txt", "not an image");
    CHECK_THROWS_WITH_AS(load_frame_sequence(dir), doctest::Contains("notes.txt"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("PGM with wrong magic or maxval is rejected") {
    const auto dir = testutil::make_temp_dir("pgm_bad");
    testutil::write_file(dir / "frame_000000.pgm", "P2\n2 2\n255\n0 0 0 0\n");
    CHECK_THROWS_AS(load_frame_sequence(dir), DataError);
    fs::remove_all(dir);

    const auto dir2 = testutil::make_temp_dir("pgm_maxval");
    testutil::write_file(dir2 / "frame_000000.pgm", pgm_bytes(2, 2, 1, 100));
    CHECK_THROWS_WITH_AS(load_frame_sequence(dir2), doctest::Contains("maxval"), DataError);
    fs::remove_all(dir2);
}

TEST_CASE("missing directory is an error") {
    CHECK_THROWS_AS(load_frame_sequence("/nonexistent/crowdtex_frames"), DataError);
}

TEST_CASE("frames are ordered numerically, not lexicographically") {
    const auto dir = testutil::make_temp_dir("pgm_order");
    testutil::write_file(dir / "frame_10.pgm", pgm_bytes(2, 2, 10));
    testutil::write_file(dir / "frame_2.pgm", pgm_bytes(2, 2, 2));
    const FrameSequence seq = load_frame_sequence(dir);
    REQUIRE(seq.frame_count() == 2);
    CHECK(seq.frames[0][0] == doctest::Approx(2 / 255.0));
    CHECK(seq.frames[1][0] == doctest::Approx(10 / 255.0));
    fs::remove_all(dir);
}

TEST_CASE("write/load round trip is exact for quantized intensities") {
    Rng rng(42);
    FrameSequence seq;
    seq.width = 7;
    seq.height = 5;
    for (int t = 0; t < 4; ++t) {
        std::vector<double> frame(35);
        for (double& v : frame) {
            v = static_cast<double>(rng.next_u64() % 256) / 255.0;
        }
        seq.frames.push_back(std::move(frame));
    }
    const auto dir = testutil::make_temp_dir("pgm_roundtrip");
    write_frame_sequence(seq, dir);
    const FrameSequence back = load_frame_sequence(dir);
    REQUIRE(back.frame_count() == seq.frame_count());
    for (int t = 0; t < 4; ++t) {
        CHECK(back.frames[t] == seq.frames[t]); // bitwise
    }
    fs::remove_all(dir);
}

TEST_CASE("manifest parses the well-formed two-interval entry") {
    const auto dir = testutil::make_temp_dir("manifest_ok");
    testutil::write_file(dir / "m.json", R"({"entries":[{"path":"frames","scene":"lawn",
        "intervals":[{"start":0,"end":100,"label":"normal"},
                     {"start":100,"end":150,"label":"abnormal"}]}]})");
    const DatasetManifest manifest = load_manifest(dir / "m.json");
    REQUIRE(manifest.entries.size() == 1);
    CHECK(manifest.entries[0].path == "frames");
    CHECK(manifest.entries[0].intervals.size() == 2);
    const LabelTrack track = labels_from_intervals(manifest.entries[0].intervals, 150);
    CHECK(track.size() == 150);
    CHECK(track[99] == FrameLabel::Normal);
    CHECK(track[100] == FrameLabel::Abnormal);
    fs::remove_all(dir);
}

TEST_CASE("overlapping intervals are rejected") {
    const auto dir = testutil::make_temp_dir("manifest_overlap");
    testutil::write_file(dir / "m.json", R"({"entries":[{"path":"frames","scene":"",
        "intervals":[{"start":0,"end":100,"label":"normal"},
                     {"start":50,"end":150,"label":"abnormal"}]}]})");
    CHECK_THROWS_WITH_AS(load_manifest(dir / "m.json"), doctest::Contains("overlap"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("empty manifest yields zero entries") {
    const auto dir = testutil::make_temp_dir("manifest_empty");
    testutil::write_file(dir / "m.json", R"({"entries":[]})");
    CHECK(load_manifest(dir / "m.json").entries.empty());
    fs::remove_all(dir);
}

TEST_CASE("malformed manifest JSON and bad labels are data errors") {
    const auto dir = testutil::make_temp_dir("manifest_bad");
    testutil::write_file(dir / "m.json", "{not json");
    CHECK_THROWS_AS(load_manifest(dir / "m.json"), DataError);
    testutil::write_file(dir / "m2.json", R"({"entries":[{"path":"f","scene":"",
        "intervals":[{"start":0,"end":5,"label":"odd"}]}]})");
    CHECK_THROWS_AS(load_manifest(dir / "m2.json"), DataError);
    testutil::write_file(dir / "m3.json", R"({"entries":[{"path":"f","scene":"",
        "intervals":[{"start":-2,"end":5,"label":"normal"}]}]})");
    CHECK_THROWS_AS(load_manifest(dir / "m3.json"), DataError);
    fs::remove_all(dir);
}

TEST_CASE("label track requires exact coverage") {
    const std::vector<LabelInterval> gap = {{0, 10, FrameLabel::Normal},
                                            {12, 20, FrameLabel::Abnormal}};
    CHECK_THROWS_WITH_AS(labels_from_intervals(gap, 20), doctest::Contains("uncovered"),
                         DataError);
    const std::vector<LabelInterval> past_end = {{0, 25, FrameLabel::Normal}};
    CHECK_THROWS_AS(labels_from_intervals(past_end, 20), DataError);
    const std::vector<LabelInterval> short_cover = {{0, 15, FrameLabel::Normal}};
    CHECK_THROWS_AS(labels_from_intervals(short_cover, 20), DataError);
}

TEST_CASE("manifest write/load round trip") {
    DatasetManifest manifest;
    manifest.entries.push_back(
        {"frames", "scene-1", {{0, 24, FrameLabel::Normal}, {24, 48, FrameLabel::Abnormal}}});
    const auto dir = testutil::make_temp_dir("manifest_rt");
    write_manifest(manifest, dir / "m.json");
    const DatasetManifest back = load_manifest(dir / "m.json");
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].path == "frames");
    CHECK(back.entries[0].scene == "scene-1");
    REQUIRE(back.entries[0].intervals.size() == 2);
    CHECK(back.entries[0].intervals[1].start == 24);
    CHECK(back.entries[0].intervals[1].label == FrameLabel::Abnormal);
    fs::remove_all(dir);
}

TEST_CASE("synthetic generator is a pure function of config and seed") {
    SynthConfig config;
    config.width = 32;
    config.height = 32;
    config.n_particles = 10;
    config.n_frames = 12;
    config.dispersal_frame = 6;
    const auto [seq1, labels1] = generate_synthetic_sequence(config, 123);
    const auto [seq2, labels2] = generate_synthetic_sequence(config, 123);
    CHECK(seq1.frames == seq2.frames); // bitwise
    CHECK(labels1 == labels2);
    const auto [seq3, labels3] = generate_synthetic_sequence(config, 124);
    CHECK(seq1.frames != seq3.frames);
}

TEST_CASE("zero particles give all-zero frames but labels still split at dispersal") {
    SynthConfig config;
    config.width = 16;
    config.height = 16;
    config.n_particles = 0;
    config.n_frames = 10;
    config.dispersal_frame = 4;
    const auto [seq, labels] = generate_synthetic_sequence(config, 9);
    for (const auto& frame : seq.frames) {
        for (const double v : frame) {
            CHECK(v == 0.0);
        }
    }
    for (int t = 0; t < 10; ++t) {
        CHECK(labels[static_cast<std::size_t>(t)] ==
              (t < 4 ? FrameLabel::Normal : FrameLabel::Abnormal));
    }
}

TEST_CASE("example config yields exactly 20 Normal then 20 Abnormal labels") {
    SynthConfig config;
    config.width = 64;
    config.height = 64;
    config.n_particles = 20;
    config.n_frames = 40;
    config.dispersal_frame = 20;
    const auto [seq, labels] = generate_synthetic_sequence(config, 7);
    REQUIRE(labels.size() == 40);
    for (int t = 0; t < 20; ++t) {
        CHECK(labels[static_cast<std::size_t>(t)] == FrameLabel::Normal);
    }
    for (int t = 20; t < 40; ++t) {
        CHECK(labels[static_cast<std::size_t>(t)] == FrameLabel::Abnormal);
    }
    CHECK(seq.frame_count() == 40);
}

TEST_CASE("synthetic intensities stay in [0,1] across random configs") {
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        SynthConfig config;
        config.width = 16 + static_cast<int>(rng.next_u64() % 32);
        config.height = 16 + static_cast<int>(rng.next_u64() % 32);
        config.n_particles = static_cast<int>(rng.next_u64() % 40);
        config.n_frames = 6 + static_cast<int>(rng.next_u64() % 20);
        config.dispersal_frame = config.n_frames / 2;
        config.speed_normal = rng.uniform(0.2, 2.0);
        config.speed_abnormal = rng.uniform(2.0, 8.0);
        const auto [seq, labels] = generate_synthetic_sequence(config, rng.next_u64());
        for (const auto& frame : seq.frames) {
            for (const double v : frame) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
        }
        // writing and reloading reproduces the generated data exactly
        const auto dir = testutil::make_temp_dir("synth_rt");
        write_frame_sequence(seq, dir);
        const FrameSequence back = load_frame_sequence(dir);
        CHECK(back.frames == seq.frames);
        fs::remove_all(dir);
    }
}

TEST_CASE("dispersal frame at or past the end is rejected") {
    SynthConfig config;
    config.n_frames = 10;
    config.dispersal_frame = 10;
    CHECK_THROWS_AS(generate_synthetic_sequence(config, 0), std::invalid_argument);
    config.dispersal_frame = 15;
    CHECK_THROWS_AS(generate_synthetic_sequence(config, 0), std::invalid_argument);
}
