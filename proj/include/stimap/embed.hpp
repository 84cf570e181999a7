#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stimap/core.hpp"

namespace stimap::embed {

/// Symmetric joint affinities over input points.
struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> p;  // n x n row-major, zero diagonal, sums to 1
    double perplexity = 0.0;
    std::vector<double> sigma;  // calibrated Gaussian bandwidth per point

    double at(std::size_t i, std::size_t j) const { return p[i * n + j]; }
};

/// Conditional Gaussian affinities with per-point sigma chosen by binary
/// search so each row's perplexity matches the target (tolerance 1e-5,
/// at most 50 bisection steps), then symmetrized.
AffinityMatrix compute_affinities(const std::vector<std::vector<double>>& vectors,
                                  double perplexity);

struct Layout2D {
    std::vector<std::array<double, 2>> coordinates;
    double final_kl = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
};

/// Gradient descent on KL(P||Q) with a Student-t kernel: early exaggeration
/// factor 12 and momentum 0.5 for the first 250 iterations, momentum 0.8
/// after, recentered to zero mean every iteration.
Layout2D tsne(const AffinityMatrix& p, int iterations, double learning_rate, std::uint64_t seed);

/// KL(P||Q) for the layout's Student-t kernel; zero-P terms contribute 0.
double kl_divergence(const AffinityMatrix& p, const Layout2D& layout);

// Layout persistence: CSV with header record_id,x,y,dominant_topic.
void write_layout_csv(const std::filesystem::path& path, const Layout2D& layout,
                      const std::vector<std::string>& record_ids,
                      const std::vector<int>& dominant_topics);

struct LayoutRow {
    std::string record_id;
    double x = 0.0;
    double y = 0.0;
    int dominant_topic = 0;
};

std::vector<LayoutRow> read_layout_csv(const std::filesystem::path& path);

}  // namespace stimap::embed
