#include "stimap/embed.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "stimap/csv.hpp"
#include "stimap/rng.hpp"

namespace stimap::embed {

namespace {

std::vector<double> squared_distances(const std::vector<std::vector<double>>& vectors) {
    const std::size_t n = vectors.size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t c = 0; c < vectors[i].size(); ++c) {
                double diff = vectors[i][c] - vectors[j][c];
                sum += diff * diff;
            }
            d[i * n + j] = sum;
            d[j * n + i] = sum;
        }
    }
    return d;
}

// Row conditional distribution for precision beta_i = 1/(2 sigma_i^2);
// returns its perplexity exp(H) and fills probabilities.
double row_perplexity(const std::vector<double>& dist_sq, std::size_t n, std::size_t i,
                      double beta, std::vector<double>& prob) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        prob[j] = (j == i) ? 0.0 : std::exp(-beta * dist_sq[i * n + j]);
        sum += prob[j];
    }
    // Full underflow (beta overshot during bracketing) reads as perplexity 1.
    sum = std::max(sum, std::numeric_limits<double>::min());
    double entropy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        prob[j] /= sum;
        if (prob[j] > 0.0) entropy -= prob[j] * std::log(prob[j]);
    }
    return std::exp(entropy);
}

std::string double_to_string(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, ptr);
}

double double_from_string(const std::string& text) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("bad decimal value in layout file: '" + text + "'");
    return value;
}

}  // namespace

AffinityMatrix compute_affinities(const std::vector<std::vector<double>>& vectors,
                                  double perplexity) {
    const std::size_t n = vectors.size();
    if (n < 4) throw Error("compute_affinities: need at least 4 points");
    if (perplexity >= static_cast<double>(n))
        throw Error("compute_affinities: perplexity must be below the point count");
    for (const auto& v : vectors)
        if (v.size() != vectors.front().size())
            throw Error("compute_affinities: ragged input vectors");

    std::vector<double> dist_sq = squared_distances(vectors);
    std::vector<double> conditional(n * n, 0.0);
    AffinityMatrix out;
    out.n = n;
    out.perplexity = perplexity;
    out.sigma.resize(n);

    std::vector<double> prob(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double max_d = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) max_d = std::max(max_d, dist_sq[i * n + j]);
        if (max_d == 0.0)
            throw Error("compute_affinities: all distances are zero for row " + std::to_string(i) +
                        " (duplicate points)");

        // Binary search on precision; expand bounds first, then bisect.
        double beta = 1.0;
        double beta_min = 0.0;
        double beta_max = std::numeric_limits<double>::infinity();
        double perp = row_perplexity(dist_sq, n, i, beta, prob);
        for (int step = 0; step < 50 && std::abs(perp - perplexity) > 1e-5; ++step) {
            if (perp > perplexity) {
                beta_min = beta;
                beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
            } else {
                beta_max = beta;
                beta = beta_min == 0.0 ? beta / 2.0 : (beta + beta_min) / 2.0;
            }
            perp = row_perplexity(dist_sq, n, i, beta, prob);
        }
        out.sigma[i] = std::sqrt(1.0 / (2.0 * beta));
        for (std::size_t j = 0; j < n; ++j) conditional[i * n + j] = prob[j];
    }

    out.p.assign(n * n, 0.0);
    const double inv = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            out.p[i * n + j] = (conditional[i * n + j] + conditional[j * n + i]) * inv;
        }
    }
    return out;
}

namespace {

// KL(P||Q) against the Student-t kernel of the given coordinates.
double kl_against(const std::vector<double>& p, std::size_t n,
                  const std::vector<std::array<double, 2>>& y) {
    double sum_q = 0.0;
    std::vector<double> num(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = y[i][0] - y[j][0];
            double dy = y[i][1] - y[j][1];
            double q = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = q;
            num[j * n + i] = q;
            sum_q += 2.0 * q;
        }
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || p[i * n + j] <= 0.0) continue;
            kl += p[i * n + j] * std::log(p[i * n + j] / (num[i * n + j] / sum_q));
        }
    }
    return kl;
}

}  // namespace

Layout2D tsne(const AffinityMatrix& p, int iterations, double learning_rate, std::uint64_t seed) {
    if (p.n == 0 || p.p.size() != p.n * p.n) throw Error("tsne: invalid affinity matrix");
    if (iterations < 1) throw Error("tsne: iterations must be at least 1");
    const std::size_t n = p.n;
    constexpr int kExaggerationEnd = 250;
    constexpr double kExaggeration = 12.0;

    Rng rng(seed);
    std::vector<std::array<double, 2>> y(n);
    for (auto& point : y) {
        point[0] = rng.gaussian() * 1e-4;
        point[1] = rng.gaussian() * 1e-4;
    }
    std::vector<std::array<double, 2>> velocity(n, {0.0, 0.0});
    std::vector<double> q_num(n * n, 0.0);

    for (int iter = 0; iter < iterations; ++iter) {
        double exaggeration = iter < kExaggerationEnd ? kExaggeration : 1.0;
        double momentum = iter < kExaggerationEnd ? 0.5 : 0.8;

        double sum_q = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double dx = y[i][0] - y[j][0];
                double dy = y[i][1] - y[j][1];
                double q = 1.0 / (1.0 + dx * dx + dy * dy);
                q_num[i * n + j] = q;
                q_num[j * n + i] = q;
                sum_q += 2.0 * q;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            double grad_x = 0.0;
            double grad_y = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                double q = q_num[i * n + j];
                double mult = (exaggeration * p.p[i * n + j] - q / sum_q) * q;
                grad_x += 4.0 * mult * (y[i][0] - y[j][0]);
                grad_y += 4.0 * mult * (y[i][1] - y[j][1]);
            }
            velocity[i][0] = momentum * velocity[i][0] - learning_rate * grad_x;
            velocity[i][1] = momentum * velocity[i][1] - learning_rate * grad_y;
        }
        double mean_x = 0.0;
        double mean_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
            mean_x += y[i][0];
            mean_y += y[i][1];
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (auto& point : y) {
            point[0] -= mean_x;
            point[1] -= mean_y;
            if (!std::isfinite(point[0]) || !std::isfinite(point[1]))
                throw Error("tsne: layout diverged at iteration " + std::to_string(iter));
        }
    }

    Layout2D layout;
    layout.coordinates = std::move(y);
    layout.iterations = iterations;
    layout.seed = seed;
    layout.final_kl = kl_against(p.p, n, layout.coordinates);
    return layout;
}

double kl_divergence(const AffinityMatrix& p, const Layout2D& layout) {
    if (layout.coordinates.size() != p.n)
        throw Error("kl_divergence: layout and affinity sizes disagree");
    return kl_against(p.p, p.n, layout.coordinates);
}

void write_layout_csv(const std::filesystem::path& path, const Layout2D& layout,
                      const std::vector<std::string>& record_ids,
                      const std::vector<int>& dominant_topics) {
    if (record_ids.size() != layout.coordinates.size() ||
        dominant_topics.size() != layout.coordinates.size())
        throw Error("write_layout_csv: column lengths disagree");
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"record_id", "x", "y", "dominant_topic"});
    for (std::size_t i = 0; i < record_ids.size(); ++i)
        rows.push_back({record_ids[i], double_to_string(layout.coordinates[i][0]),
                        double_to_string(layout.coordinates[i][1]),
                        std::to_string(dominant_topics[i])});
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write layout file: " + path.string());
    out << csv::write(rows);
}

std::vector<LayoutRow> read_layout_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open layout file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto rows = csv::read(buffer.str());
    if (rows.empty() || rows.front() != std::vector<std::string>{"record_id", "x", "y", "dominant_topic"})
        throw ParseError("layout file has an unexpected header: " + path.string());
    std::vector<LayoutRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw ParseError("layout row " + std::to_string(i) + " is malformed");
        LayoutRow row;
        row.record_id = rows[i][0];
        row.x = double_from_string(rows[i][1]);
        row.y = double_from_string(rows[i][2]);
        row.dominant_topic = std::stoi(rows[i][3]);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace stimap::embed
