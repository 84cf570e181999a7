#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "stimap/embed.hpp"
#include "stimap/rng.hpp"

using namespace stimap;
using namespace stimap::embed;

namespace {

std::vector<std::vector<double>> square_corners() {
    return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
}

/// Three tight 10-point clusters around well-separated centers in 8-D.
std::vector<std::vector<double>> three_clusters(std::vector<int>* labels_out = nullptr) {
    Rng rng(404);
    std::vector<std::vector<double>> centers = {
        {8, 0, 0, 0, 0, 0, 0, 0}, {0, 8, 0, 0, 0, 0, 0, 0}, {0, 0, 8, 0, 0, 0, 0, 0}};
    std::vector<std::vector<double>> points;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 10; ++i) {
            std::vector<double> p = centers[static_cast<std::size_t>(c)];
            for (auto& coord : p) coord += rng.gaussian() * 0.3;
            points.push_back(std::move(p));
            if (labels_out) labels_out->push_back(c);
        }
    }
    return points;
}

double conditional_perplexity(const std::vector<std::vector<double>>& points, std::size_t i,
                              double sigma) {
    const std::size_t n = points.size();
    std::vector<double> p(n, 0.0);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double d2 = 0.0;
        for (std::size_t c = 0; c < points[i].size(); ++c) {
            double diff = points[i][c] - points[j][c];
            d2 += diff * diff;
        }
        p[j] = std::exp(-d2 / (2.0 * sigma * sigma));
        sum += p[j];
    }
    double entropy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i || p[j] <= 0.0) continue;
        double q = p[j] / sum;
        entropy -= q * std::log(q);
    }
    return std::exp(entropy);
}

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("square corners give symmetry-equal affinities") {
    auto p = compute_affinities(square_corners(), 2.5);
    CHECK(p.n == 4);
    // Diagonal zero, exact symmetry.
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(p.at(i, i) == 0.0);
        for (std::size_t j = 0; j < 4; ++j) CHECK(p.at(i, j) == p.at(j, i));
    }
    // Side pairs all equal, diagonal pairs all equal.
    double side = p.at(0, 1);
    CHECK(p.at(0, 2) == doctest::Approx(side).epsilon(1e-9));
    CHECK(p.at(3, 1) == doctest::Approx(side).epsilon(1e-9));
    CHECK(p.at(3, 2) == doctest::Approx(side).epsilon(1e-9));
    double diag = p.at(0, 3);
    CHECK(p.at(1, 2) == doctest::Approx(diag).epsilon(1e-9));
    CHECK(side > diag);
}

TEST_CASE("affinities sum to one") {
    auto points = three_clusters();
    auto p = compute_affinities(points, 9.0);
    double sum = 0.0;
    for (double v : p.p) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-6);
}

TEST_CASE("calibrated sigmas reproduce the target perplexity") {
    Rng rng(11);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 10; ++i)
        points.push_back({rng.gaussian(), rng.gaussian(), rng.gaussian()});
    const double target = 4.0;
    auto p = compute_affinities(points, target);
    REQUIRE(p.sigma.size() == 10);
    for (std::size_t i = 0; i < points.size(); ++i) {
        CAPTURE(i);
        CHECK(std::abs(conditional_perplexity(points, i, p.sigma[i]) - target) < 1e-5);
    }
}

TEST_CASE("duplicate points are reported by row") {
    std::vector<std::vector<double>> points = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK_THROWS_WITH_AS(compute_affinities(points, 2.0), doctest::Contains("row 0"), Error);
}

TEST_CASE("preconditions are enforced") {
    CHECK_THROWS_AS(compute_affinities({{1.0}, {2.0}, {3.0}}, 2.0), Error);  // fewer than 4
    CHECK_THROWS_AS(compute_affinities(square_corners(), 4.0), Error);      // perplexity >= n
}

TEST_CASE("affinities depend on distances only") {
    auto points = three_clusters();
    // Apply a rigid rotation in the (0,1) and (2,3) planes.
    auto rotated = points;
    const double angle = 0.83;
    for (auto& p : rotated) {
        double a = p[0] * std::cos(angle) - p[1] * std::sin(angle);
        double b = p[0] * std::sin(angle) + p[1] * std::cos(angle);
        double c = p[2] * std::cos(angle) - p[3] * std::sin(angle);
        double d = p[2] * std::sin(angle) + p[3] * std::cos(angle);
        p[0] = a;
        p[1] = b;
        p[2] = c;
        p[3] = d;
    }
    auto p0 = compute_affinities(points, 9.0);
    auto p1 = compute_affinities(rotated, 9.0);
    for (std::size_t i = 0; i < p0.p.size(); ++i) CHECK(std::abs(p0.p[i] - p1.p[i]) < 1e-9);
}

TEST_CASE("equal seeds give bit-identical layouts") {
    auto p = compute_affinities(three_clusters(), 8.0);
    auto a = tsne(p, 300, 100.0, 2024);
    auto b = tsne(p, 300, 100.0, 2024);
    CHECK(a.coordinates == b.coordinates);
    CHECK(a.final_kl == b.final_kl);
    auto c = tsne(p, 300, 100.0, 2025);
    CHECK(a.coordinates != c.coordinates);
}

TEST_CASE("layouts are recentered to zero mean") {
    auto p = compute_affinities(three_clusters(), 8.0);
    auto layout = tsne(p, 400, 100.0, 31);
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& point : layout.coordinates) {
        mean_x += point[0];
        mean_y += point[1];
    }
    mean_x /= static_cast<double>(layout.coordinates.size());
    mean_y /= static_cast<double>(layout.coordinates.size());
    CHECK(std::abs(mean_x) < 1e-6);
    CHECK(std::abs(mean_y) < 1e-6);
}

TEST_CASE("optimization lowers the KL and separates the clusters") {
    std::vector<int> labels;
    auto points = three_clusters(&labels);
    auto p = compute_affinities(points, 8.0);

    // The 250-iteration prefix is the state right after exaggeration ends.
    auto at_exaggeration_end = tsne(p, 250, 100.0, 77);
    auto final_layout = tsne(p, 900, 100.0, 77);
    CHECK(final_layout.final_kl < at_exaggeration_end.final_kl);
    CHECK(final_layout.final_kl == kl_divergence(p, final_layout));

    double silhouette = oracles::silhouette_2d(final_layout.coordinates, labels);
    CHECK(silhouette > 0.5);
}

TEST_CASE("kl divergence prefers layouts matching the affinities") {
    // Mass on a single symmetric pair: placing that pair closest wins.
    AffinityMatrix p;
    p.n = 4;
    p.perplexity = 0.0;
    p.p.assign(16, 0.0);
    auto set_pair = [&](std::size_t i, std::size_t j, double value) {
        p.p[i * 4 + j] = value;
        p.p[j * 4 + i] = value;
    };
    set_pair(0, 1, 0.45);
    set_pair(2, 3, 0.02);
    set_pair(0, 2, 0.02);
    set_pair(1, 3, 0.01);

    Layout2D close_pair;
    close_pair.coordinates = {{0.0, 0.0}, {0.1, 0.0}, {3.0, 0.0}, {5.0, 0.0}};
    Layout2D far_pair;
    far_pair.coordinates = {{0.0, 0.0}, {5.0, 0.0}, {3.0, 0.0}, {3.1, 0.0}};
    CHECK(kl_divergence(p, close_pair) < kl_divergence(p, far_pair));
}

TEST_CASE("kl divergence vanishes when q matches p and is otherwise positive") {
    // Build a layout, then adopt its own q as the affinity matrix.
    Layout2D layout;
    layout.coordinates = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.5}, {2.0, 2.0}};
    AffinityMatrix p;
    p.n = 4;
    p.p.assign(16, 0.0);
    double sum_q = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            double dx = layout.coordinates[i][0] - layout.coordinates[j][0];
            double dy = layout.coordinates[i][1] - layout.coordinates[j][1];
            p.p[i * 4 + j] = 1.0 / (1.0 + dx * dx + dy * dy);
            sum_q += p.p[i * 4 + j];
        }
    }
    for (double& v : p.p) v /= sum_q;
    CHECK(std::abs(kl_divergence(p, layout)) < 1e-9);

    std::mt19937_64 rng(5);
    for (int iter = 0; iter < 20; ++iter) {
        Layout2D other;
        for (int i = 0; i < 4; ++i)
            other.coordinates.push_back({static_cast<double>(rng() % 1000) / 100.0,
                                         static_cast<double>(rng() % 1000) / 100.0});
        CHECK(kl_divergence(p, other) >= -1e-12);
    }
}

TEST_CASE("layout csv round-trips") {
    Layout2D layout;
    layout.coordinates = {{0.125, -3.5}, {1e-9, 42.0}};
    auto dir = std::filesystem::temp_directory_path() / "stimap_embed_test";
    std::filesystem::create_directories(dir);
    auto path = dir / "layout.csv";
    write_layout_csv(path, layout, {"openalex:W1", "cordis:7"}, {3, 0});
    auto rows = read_layout_csv(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].record_id == "openalex:W1");
    CHECK(rows[0].x == 0.125);
    CHECK(rows[0].y == -3.5);
    CHECK(rows[0].dominant_topic == 3);
    CHECK(rows[1].x == 1e-9);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
