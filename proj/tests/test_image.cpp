#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "vad/image.hpp"

using namespace vad;

TEST_CASE("resize: identity at 32x32 and constants preserved") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(32, 32);
    for (auto& v : img.v) v = u(rng);
    const Image same = resize_grayscale(img);
    for (std::size_t i = 0; i < img.v.size(); ++i) CHECK(same.v[i] == img.v[i]);

    const Image flat(48, 40, 0.37f);
    const Image r = resize_grayscale(flat);
    CHECK(r.h == 32);
    CHECK(r.w == 32);
    for (float v : r.v) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("resize: 64x64 checkerboard downsample matches the per-pixel oracle") {
    Image board(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) board.at(y, x) = ((x / 4 + y / 4) % 2) ? 1.0f : 0.0f;
    const Image fast = resize_grayscale(board);
    const Image ref = oracle::bilinear_naive(board, 32, 32);
    for (std::size_t i = 0; i < fast.v.size(); ++i)
        CHECK(fast.v[i] == doctest::Approx(ref.v[i]).epsilon(1e-6));
}

TEST_CASE("gamma correction: identity, fixed points, brightening") {
    Image img(2, 2);
    img.v = {0.0f, 0.25f, 0.5f, 1.0f};
    const Image g1 = gamma_correct(img, 1.0f);
    for (std::size_t i = 0; i < img.v.size(); ++i) CHECK(g1.v[i] == doctest::Approx(img.v[i]));
    const Image g05 = gamma_correct(img, 0.5f);
    CHECK(g05.v[0] == 0.0f);
    CHECK(g05.v[1] == doctest::Approx(0.5f));
    CHECK(g05.v[3] == doctest::Approx(1.0f));
    for (float gamma : {0.3f, 0.8f, 2.2f}) {
        const Image g = gamma_correct(img, gamma);
        CHECK(g.v[0] == 0.0f);
        CHECK(g.v[3] == doctest::Approx(1.0f));
    }
    CHECK_THROWS_AS(gamma_correct(img, 0.0f), std::invalid_argument);
}

TEST_CASE("center crop drops 4 rows top and bottom of a 32-row image") {
    Image img(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(y, x) = static_cast<float>(y);
    const Image c = center_crop_rows(img, 24);
    CHECK(c.h == 24);
    CHECK(c.w == 32);
    CHECK(c.at(0, 0) == 4.0f);   // first kept row is source row 4
    CHECK(c.at(23, 0) == 27.0f); // last kept row is source row 27

    const Image flat(32, 32, 0.6f);
    const Image cf = center_crop_rows(flat, 24);
    for (float v : cf.v) CHECK(v == 0.6f);

    // crop then pad back with the dropped rows reproduces the original
    Image padded(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            padded.at(y, x) = (y >= 4 && y < 28) ? c.at(y - 4, x) : img.at(y, x);
    for (std::size_t i = 0; i < img.v.size(); ++i) CHECK(padded.v[i] == img.v[i]);

    CHECK_THROWS_AS(center_crop_rows(Image(10, 32), 24), std::invalid_argument);
}

TEST_CASE("hflip is an involution and mirrors columns") {
    Image img(4, 6);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x) img.at(y, x) = static_cast<float>(x < 3 ? 1.0 : 0.0);
    const Image f = hflip(img);
    CHECK(f.at(0, 0) == 0.0f);  // bright half moved right
    CHECK(f.at(0, 5) == 1.0f);
    const Image ff = hflip(f);
    for (std::size_t i = 0; i < img.v.size(); ++i) CHECK(ff.v[i] == img.v[i]);
}

TEST_CASE("pgm round trip and malformed input") {
    const std::string dir = std::filesystem::temp_directory_path() / "vad_pgm_test";
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Image img(17, 23);
    for (auto& v : img.v) v = u(rng);
    const std::string path = dir + "/img.pgm";
    write_pgm(path, img);
    const Image back = read_pgm(path);
    REQUIRE(back.h == img.h);
    REQUIRE(back.w == img.w);
    for (std::size_t i = 0; i < img.v.size(); ++i)
        CHECK(back.v[i] == doctest::Approx(img.v[i]).epsilon(0.5 / 255.0 + 1e-6));

    std::FILE* f = std::fopen((dir + "/bad.pgm").c_str(), "wb");
    std::fputs("P2\n4 4\n255\n", f);
    std::fclose(f);
    CHECK_THROWS_AS(read_pgm(dir + "/bad.pgm"), std::runtime_error);
    CHECK_THROWS_AS(read_pgm(dir + "/missing.pgm"), std::runtime_error);
    std::filesystem::remove_all(dir);
}
