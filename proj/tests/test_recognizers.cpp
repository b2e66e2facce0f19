#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "avsid/pipeline.hpp"
#include "avsid/recognition.hpp"
#include "avsid/toy_models.hpp"

using namespace avsid;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<double>> points1d(std::initializer_list<double> xs) {
    std::vector<std::vector<double>> g;
    for (double x : xs) g.push_back({x});
    return g;
}

}  // namespace

TEST_CASE("knn votes, ties, and threshold edge") {
    const auto gallery = points1d({0.0, 1.0, 10.0, 11.0});
    const std::vector<int> labels{3, 3, 7, 7};

    SECTION("plain nearest neighbour") {
        const auto r = knn_classify(gallery, labels, {0.4}, 1, DistanceKind::kEuclidean, kInf);
        CHECK_FALSE(r.unknown);
        CHECK(r.label == 3);
        CHECK(r.nearest_distance == Catch::Approx(0.4));
    }
    SECTION("majority carries k=3") {
        // 10.4: neighbours at 10 (0.4), 11 (0.6), 1 (9.4) -> label 7 wins 2:1
        const auto r = knn_classify(gallery, labels, {10.4}, 3, DistanceKind::kEuclidean, kInf);
        CHECK(r.label == 7);
    }
    SECTION("vote tie breaks to the smaller mean distance") {
        // 5.2: k=2 picks one of each label; label 7 voter slightly nearer
        const auto a = knn_classify(gallery, labels, {5.6}, 2, DistanceKind::kEuclidean, kInf);
        CHECK(a.label == 7);
        const auto b = knn_classify(gallery, labels, {5.4}, 2, DistanceKind::kEuclidean, kInf);
        CHECK(b.label == 3);
    }
    SECTION("full tie breaks to the lower label") {
        const auto g = points1d({-1.0, 1.0});
        const auto r = knn_classify(g, {9, 2}, {0.0}, 2, DistanceKind::kEuclidean, kInf);
        CHECK(r.label == 2);
    }
    SECTION("threshold is exceeded strictly") {
        const auto at = knn_classify(gallery, labels, {2.0}, 1, DistanceKind::kEuclidean, 1.0);
        CHECK_FALSE(at.unknown);  // distance exactly 1.0 still accepted
        CHECK(at.label == 3);
        const auto past = knn_classify(gallery, labels, {2.001}, 1, DistanceKind::kEuclidean, 1.0);
        CHECK(past.unknown);
        CHECK(past.label == kUnknownLabel);
        CHECK(past.nearest_distance == Catch::Approx(1.001));
    }
    SECTION("k larger than the gallery clamps") {
        const auto r = knn_classify(gallery, labels, {0.0}, 99, DistanceKind::kEuclidean, kInf);
        CHECK_FALSE(r.unknown);
    }
    SECTION("bad inputs") {
        CHECK_THROWS_AS(knn_classify({}, {}, {0.0}, 1, DistanceKind::kEuclidean, kInf),
                        InvalidTrainingError);
        CHECK_THROWS_AS(knn_classify(gallery, {1, 2}, {0.0}, 1, DistanceKind::kEuclidean, kInf),
                        InvalidTrainingError);
        CHECK_THROWS_AS(knn_classify(gallery, labels, {0.0}, 0, DistanceKind::kEuclidean, kInf),
                        InvalidTrainingError);
    }
}

TEST_CASE("chi-square distance hand values") {
    CHECK(chi_square_distance({1.0, 0.0}, {0.0, 1.0}) == Catch::Approx(2.0));
    CHECK(chi_square_distance({0.0, 2.0}, {0.0, 4.0}) == Catch::Approx(4.0 / 6.0));  // empty bin skipped
    CHECK(chi_square_distance({3.0, 5.0}, {3.0, 5.0}) == 0.0);
    CHECK_THROWS_AS(chi_square_distance({1.0}, {1.0, 2.0}), ShapeError);
}

TEST_CASE("unknown threshold calibration is mean plus two sigma") {
    // 1-D gallery at 0, 1, 3: nearest distances 1, 1, 2
    const double got = calibrate_unknown_threshold(points1d({0.0, 1.0, 3.0}), DistanceKind::kEuclidean);
    const double mean = 4.0 / 3.0;
    const double var = (2.0 * (1.0 - mean) * (1.0 - mean) + (2.0 - mean) * (2.0 - mean)) / 3.0;
    CHECK(got == Catch::Approx(mean + 2.0 * std::sqrt(var)));
    CHECK_THROWS_AS(calibrate_unknown_threshold(points1d({1.0}), DistanceKind::kEuclidean),
                    InvalidTrainingError);
}

TEST_CASE("circular lbp on a constant patch sets every bit") {
    const GrayImage flat(10, 10, 50);
    CHECK(lbp_code_circular(flat, 5, 5, 8, 1.0) == 255u);
    CHECK(lbp_code_circular(flat, 5, 5, 4, 2.0) == 15u);
    CHECK(lbp_code_circular(flat, 5, 5, 12, 2.0) == (1u << 12) - 1u);
    CHECK_THROWS_AS(lbp_code_circular(flat, 5, 5, 0, 1.0), ShapeError);
    CHECK_THROWS_AS(lbp_code_circular(flat, 25, 5, 8, 1.0), BoundsError);
}

TEST_CASE("lbph descriptor pixel budget on a constant image") {
    const GrayImage flat(16, 16, 90);
    const auto desc = lbph_descriptor(flat, 2, 2, 8, 1.0);
    REQUIRE(desc.size() == 4u * 256u);
    // margin of 1 on every side leaves 14x14 contributing pixels, 49 per cell,
    // all landing in bin 255
    for (int cell = 0; cell < 4; ++cell) {
        double total = 0.0;
        for (int bin = 0; bin < 256; ++bin) total += desc[static_cast<std::size_t>(cell) * 256 + bin];
        CHECK(total == 49.0);
        CHECK(desc[static_cast<std::size_t>(cell) * 256 + 255] == 49.0);
    }
    CHECK_THROWS_AS(lbph_descriptor(GrayImage(8, 8, 1), 4, 4, 8, 1.0), InvalidGridError);
    CHECK_THROWS_AS(lbph_descriptor(flat, 0, 2, 8, 1.0), InvalidGridError);
}

TEST_CASE("fisher projection has exactly classes-minus-one directions") {
    for (int classes : {2, 3, 5}) {
        FaceDatasetOptions opt;
        opt.classes = classes;
        opt.samples_per_class = 4;
        opt.seed = 17;
        const FaceDataset ds = make_synthetic_face_dataset(opt);
        const FisherfacesModel model = train_fisherfaces(ds);
        REQUIRE(model.projection.cols == classes - 1);

        // numerical rank check: the gram of the projection columns must be
        // full rank, i.e. its smallest eigenvalue well above zero
        const Matrix gram = model.projection.transposed() * model.projection;
        const EigenDecomposition eg = jacobi_eigen(gram);
        CHECK(eg.values.back() > 1e-9 * eg.values.front());

        for (const auto& w : model.gallery)
            REQUIRE(static_cast<int>(w.size()) == classes - 1);
    }
}

TEST_CASE("fisher training guards its scatter matrices") {
    // one image per class: as many images as classes
    FaceDatasetOptions opt;
    opt.classes = 3;
    opt.samples_per_class = 1;
    CHECK_THROWS_AS(train_fisherfaces(make_synthetic_face_dataset(opt)), SingularScatterError);

    // identical copies within each class: zero within-class scatter
    FaceDataset copies;
    GrayImage a(6, 6, 40), b(6, 6, 200);
    a.at(2, 2) = 90;
    b.at(3, 3) = 10;
    copies.samples = {{0, a}, {0, a}, {1, b}, {1, b}, {0, a}};
    CHECK_THROWS_AS(train_fisherfaces(copies), SingularScatterError);

    // classes whose means coincide: nothing to separate
    FaceDataset mirrored;
    mirrored.samples = {{0, a}, {0, b}, {1, a}, {1, b}, {0, a}, {1, a}, {0, b}, {1, b}};
    CHECK_THROWS_AS(train_fisherfaces(mirrored), DegenerateModelError);

    FaceDataset single_class;
    single_class.samples = {{4, a}, {4, b}, {4, a}};
    CHECK_THROWS_AS(train_fisherfaces(single_class), InvalidTrainingError);
}

TEST_CASE("all three recognizers identify held-out sprite faces") {
    FaceDatasetOptions train_opt;
    train_opt.classes = 3;
    train_opt.samples_per_class = 5;
    train_opt.seed = 100;
    FaceDatasetOptions test_opt = train_opt;
    test_opt.samples_per_class = 3;
    test_opt.seed = 200;
    const FaceDataset train = make_synthetic_face_dataset(train_opt);
    const FaceDataset test = make_synthetic_face_dataset(test_opt);

    const double eigen_acc = evaluate_recognizer(train_eigenfaces(train, 12), test);
    const double fisher_acc = evaluate_recognizer(train_fisherfaces(train), test);
    const double lbph_acc = evaluate_recognizer(train_lbph(train), test);
    CHECK(eigen_acc >= 0.8);
    CHECK(fisher_acc >= 0.8);
    CHECK(lbph_acc >= 0.8);
}

TEST_CASE("recognize_face dispatches on the model variant") {
    FaceDatasetOptions opt;
    opt.classes = 2;
    opt.samples_per_class = 3;
    opt.seed = 31;
    const FaceDataset ds = make_synthetic_face_dataset(opt);
    const GrayImage& probe = ds.samples.front().image;

    const FaceRecognizer eigen = train_eigenfaces(ds, 5);
    const FaceRecognizer fisher = train_fisherfaces(ds);
    const FaceRecognizer lbph = train_lbph(ds);

    for (const FaceRecognizer* m : {&eigen, &fisher, &lbph}) {
        const RecognitionResult r = recognize_face(*m, probe);
        CHECK_FALSE(r.unknown);
        CHECK(r.label == 0);
        CHECK(r.nearest_distance == Catch::Approx(0.0).margin(1e-9));  // probe is in the gallery
        // a negative override forces everything past the threshold
        CHECK(recognize_face(*m, probe, 1, -1.0).unknown);
    }
    CHECK(recognizer_distance(lbph) == DistanceKind::kChiSquare);
    CHECK(recognizer_distance(eigen) == DistanceKind::kEuclidean);
}

TEST_CASE("component truncation keeps leading directions and gallery prefixes") {
    FaceDatasetOptions opt;
    opt.classes = 4;
    opt.samples_per_class = 4;
    opt.seed = 77;
    const FaceDataset ds = make_synthetic_face_dataset(opt);

    const EigenfacesModel full = train_eigenfaces(ds, 10);
    REQUIRE(full.basis.cols >= 4);
    const EigenfacesModel cut = truncate_eigenfaces(full, 3);
    CHECK(cut.basis.cols == 3);
    CHECK(cut.eigenvalues.size() == 3);
    for (int r = 0; r < full.basis.rows; ++r)
        for (int c = 0; c < 3; ++c) CHECK(cut.basis(r, c) == full.basis(r, c));
    for (std::size_t i = 0; i < cut.gallery.size(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(cut.gallery[i][static_cast<std::size_t>(c)] ==
                  Catch::Approx(full.gallery[i][static_cast<std::size_t>(c)]));
    CHECK_THROWS_AS(truncate_eigenfaces(full, 0), InvalidTrainingError);
    CHECK_THROWS_AS(truncate_eigenfaces(full, full.basis.cols + 1), InvalidTrainingError);

    const FisherfacesModel ffull = train_fisherfaces(ds);
    REQUIRE(ffull.projection.cols == 3);
    const FisherfacesModel fcut = truncate_fisherfaces(ffull, 2);
    CHECK(fcut.projection.cols == 2);
    // asking for more than exists keeps everything rather than failing
    CHECK(truncate_fisherfaces(ffull, 50).projection.cols == 3);

    // evaluating a model against itself with a closed set is perfect
    CHECK(evaluate_recognizer(full, ds) == 1.0);
}
