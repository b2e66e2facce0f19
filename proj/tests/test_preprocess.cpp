#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "avsid/recognition.hpp"
#include "avsid/scene.hpp"

using namespace avsid;

namespace {

FrameRender sprite_frame(std::uint64_t seed) {
    SceneDescription scene;
    scene.seed = seed;
    FaceSprite sp;
    sp.identity = "person-1";
    sp.x = 320.0;
    sp.y = 240.0;
    sp.scale = 80.0;
    scene.face_sprites.push_back(sp);
    return render_synthetic_frame(scene, 640, 480);
}

}  // namespace

TEST_CASE("eye detector lands on the pupils") {
    const FrameRender fr = sprite_frame(13);
    const auto& t = fr.truths[0];
    const auto eyes = detect_eyes(fr.image, t.box);
    REQUIRE(eyes.has_value());
    CHECK(pixel_distance(eyes->left, t.eye_left) <= 3.0);
    CHECK(pixel_distance(eyes->right, t.eye_right) <= 3.0);
    CHECK(eyes->left.x < eyes->right.x);
}

TEST_CASE("eye detector refuses featureless boxes") {
    const GrayImage flat(200, 200, 128);
    CHECK_FALSE(detect_eyes(flat, Rect{40, 40, 100, 100}).has_value());
    // box too small or out of range
    CHECK_FALSE(detect_eyes(flat, Rect{0, 0, 8, 8}).has_value());
    CHECK_FALSE(detect_eyes(flat, Rect{150, 150, 100, 100}).has_value());
}

TEST_CASE("warp moves the eyes onto the canonical anchors") {
    const FrameRender fr = sprite_frame(29);
    const auto& t = fr.truths[0];
    const GrayImage warped = warp_to_canonical(fr.image, t.eye_left, t.eye_right);
    REQUIRE(warped.width == kCanonicalFaceSize);
    REQUIRE(warped.height == kCanonicalFaceSize);
    // find the pupils again in the warped square; they must sit at the anchors
    const auto eyes = detect_eyes(warped, Rect{0, 0, warped.width, warped.height});
    REQUIRE(eyes.has_value());
    CHECK(pixel_distance(eyes->left, canonical_left_eye()) <= 3.0);
    CHECK(pixel_distance(eyes->right, canonical_right_eye()) <= 3.0);
}

TEST_CASE("warp rejects coincident eyes") {
    const GrayImage img(64, 64, 10);
    CHECK_THROWS_AS(warp_to_canonical(img, Pixel{20.0, 20.0}, Pixel{20.0, 20.0}),
                    PreprocessingError);
}

TEST_CASE("ellipse mask keeps the face and drops the corners") {
    const auto mask = face_ellipse_mask(64);
    auto at = [&](int x, int y) { return mask[static_cast<std::size_t>(y) * 64 + x]; };
    CHECK(at(32, 35) == 1);  // center
    CHECK(at(19, 22) == 1);  // left eye anchor region
    CHECK(at(44, 22) == 1);
    CHECK(at(0, 0) == 0);
    CHECK(at(63, 0) == 0);
    CHECK(at(0, 63) == 0);
    CHECK(at(63, 63) == 0);
}

TEST_CASE("masked equalization ignores brightness shifts") {
    const FrameRender fr = sprite_frame(31);
    const auto& t = fr.truths[0];
    const GrayImage warped = warp_to_canonical(fr.image, t.eye_left, t.eye_right);

    // shift as far up as fits without clipping, so ranks are preserved
    std::uint8_t mx = 0;
    for (auto p : warped.pixels) mx = std::max(mx, p);
    const int shift = std::min(20, 255 - mx);
    REQUIRE(shift >= 1);
    GrayImage brighter = warped;
    for (auto& p : brighter.pixels) p = static_cast<std::uint8_t>(p + shift);

    const auto mask = face_ellipse_mask(kCanonicalFaceSize);
    const GrayImage a = equalize_masked(warped, mask);
    const GrayImage b = equalize_masked(brighter, mask);
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("equalization zeroes everything outside the mask") {
    const FrameRender fr = sprite_frame(37);
    const auto& t = fr.truths[0];
    const GrayImage face = preprocess_face(fr.image, t.eye_left, t.eye_right);
    const auto mask = face_ellipse_mask(kCanonicalFaceSize);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (!mask[i]) REQUIRE(face.pixels[i] == 0);
}

TEST_CASE("equalization spreads the masked histogram") {
    const FrameRender fr = sprite_frame(41);
    const auto& t = fr.truths[0];
    const GrayImage face = preprocess_face(fr.image, t.eye_left, t.eye_right);
    std::uint8_t lo = 255, hi = 0;
    const auto mask = face_ellipse_mask(kCanonicalFaceSize);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        lo = std::min(lo, face.pixels[i]);
        hi = std::max(hi, face.pixels[i]);
    }
    CHECK(lo == 0);
    CHECK(hi == 255);
}

TEST_CASE("box preprocessing throws without locatable eyes") {
    const GrayImage flat(200, 200, 90);
    CHECK_THROWS_AS(preprocess_face(flat, Rect{20, 20, 120, 120}), PreprocessingError);
}

TEST_CASE("preprocessing is deterministic") {
    const FrameRender fr = sprite_frame(43);
    const auto& t = fr.truths[0];
    const GrayImage a = preprocess_face(fr.image, t.box);
    const GrayImage b = preprocess_face(fr.image, t.box);
    CHECK(a.pixels == b.pixels);
}

TEST_CASE("equalize validates the mask size") {
    const GrayImage img(8, 8, 0);
    CHECK_THROWS_AS(equalize_masked(img, std::vector<std::uint8_t>(10, 1)), ShapeError);
}
