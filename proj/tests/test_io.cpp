#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "avsid/io.hpp"

using namespace avsid;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::temp_directory_path() / "avsid_io_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("pgm images round trip pixel-exact") {
    GrayImage img(37, 21);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.at(x, y) = static_cast<std::uint8_t>((x * 7 + y * 13) % 256);

    const std::string path = (scratch_dir() / "roundtrip.pgm").string();
    write_pgm(path, img);
    const GrayImage back = read_pgm(path);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
    std::remove(path.c_str());
}

TEST_CASE("pgm reader tolerates header comments") {
    const std::string path = (scratch_dir() / "commented.pgm").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n# made by hand\n3 # width then height\n2\n# almost there\n255\n";
        const char pix[6] = {0, 1, 2, 3, 4, 5};
        out.write(pix, 6);
    }
    const GrayImage img = read_pgm(path);
    CHECK(img.width == 3);
    CHECK(img.height == 2);
    CHECK(img.at(2, 1) == 5);
    std::remove(path.c_str());
}

TEST_CASE("pgm reader rejects what it cannot parse") {
    const fs::path dir = scratch_dir();
    CHECK_THROWS_AS(read_pgm((dir / "missing.pgm").string()), IoError);

    const std::string ascii = (dir / "ascii.pgm").string();
    std::ofstream(ascii) << "P2\n2 2\n255\n0 0 0 0\n";
    CHECK_THROWS_AS(read_pgm(ascii), FormatError);

    const std::string cut = (dir / "cut.pgm").string();
    {
        std::ofstream out(cut, std::ios::binary);
        out << "P5\n4 4\n255\n";
        out.write("abc", 3);  // 13 bytes short
    }
    CHECK_THROWS_AS(read_pgm(cut), FormatError);

    const std::string deep = (dir / "deep.pgm").string();
    std::ofstream(deep) << "P5\n2 2\n65535\n";
    CHECK_THROWS_AS(read_pgm(deep), FormatError);

    std::remove(ascii.c_str());
    std::remove(cut.c_str());
    std::remove(deep.c_str());
}

TEST_CASE("heatmaps color the extremes blue and red") {
    const std::string path = (scratch_dir() / "map.ppm").string();
    write_heatmap_ppm(path, {0.0, 1.0}, 2, 1);
    const std::string bytes = slurp(path);
    REQUIRE(bytes.substr(0, 3) == "P6\n");
    const std::string body = bytes.substr(bytes.find("255\n") + 4);
    REQUIRE(body.size() == 6);
    // min value: pure blue; max value: pure red
    CHECK(static_cast<unsigned char>(body[0]) == 0);
    CHECK(static_cast<unsigned char>(body[2]) == 255);
    CHECK(static_cast<unsigned char>(body[3]) == 255);
    CHECK(static_cast<unsigned char>(body[5]) == 0);
    std::remove(path.c_str());
}

TEST_CASE("a constant heatmap renders mid-scale green") {
    const std::string path = (scratch_dir() / "flat.ppm").string();
    write_heatmap_ppm(path, {3.0, 3.0, 3.0, 3.0}, 2, 2);
    const std::string bytes = slurp(path);
    const std::string body = bytes.substr(bytes.find("255\n") + 4);
    REQUIRE(body.size() == 12);
    for (int p = 0; p < 4; ++p) {
        CHECK(static_cast<unsigned char>(body[p * 3 + 0]) == 0);
        CHECK(static_cast<unsigned char>(body[p * 3 + 1]) == 255);
        CHECK(static_cast<unsigned char>(body[p * 3 + 2]) == 0);
    }
    std::remove(path.c_str());

    CHECK_THROWS_AS(write_heatmap_ppm(path, {1.0, 2.0}, 3, 1), ShapeError);
}

TEST_CASE("float32 audio with sidecar round trips") {
    MultichannelSignal sig(48000.0, 3, 5);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 5; ++i)
            sig.channels[c][i] = static_cast<double>(c * 8 + i) / 16.0;  // float-exact values

    const std::string path = (scratch_dir() / "audio.f32").string();
    write_audio_f32(path, sig);
    CHECK(fs::exists(audio_sidecar_path(path)));

    const MultichannelSignal back = read_audio_f32(path);
    CHECK(back.sample_rate == 48000.0);
    REQUIRE(back.channels.size() == 3);
    REQUIRE(back.frame_count() == 5);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < 5; ++i) CHECK(back.channels[c][i] == sig.channels[c][i]);

    std::remove(path.c_str());
    std::remove(audio_sidecar_path(path).c_str());
}

TEST_CASE("audio reader insists on a coherent sidecar") {
    const fs::path dir = scratch_dir();
    const std::string orphan = (dir / "orphan.f32").string();
    std::ofstream(orphan, std::ios::binary) << "xxxx";
    CHECK_THROWS_AS(read_audio_f32(orphan), IoError);  // no sidecar at all

    std::ofstream(audio_sidecar_path(orphan)) << "not json";
    CHECK_THROWS_AS(read_audio_f32(orphan), FormatError);

    std::ofstream(audio_sidecar_path(orphan)) << "{\"sample_rate\": 8000, \"channels\": 3}";
    // 4 bytes is not a whole number of 3-channel float frames
    CHECK_THROWS_AS(read_audio_f32(orphan), FormatError);

    std::remove(orphan.c_str());
    std::remove(audio_sidecar_path(orphan).c_str());
}

TEST_CASE("text file helpers round trip and fail loudly") {
    const std::string path = (scratch_dir() / "note.txt").string();
    const std::string content = "line one\nline two\n";
    write_text_file(path, content);
    CHECK(read_text_file(path) == content);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_text_file(path), IoError);
}
