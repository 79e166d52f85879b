#pragma once

// Comparison classifiers: k-nearest neighbours, one-vs-rest linear SVM,
// multinomial logistic regression and uniform random guessing.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/layers.hpp"
#include "intent/numcore/matrix.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

struct KnnConfig {
    std::size_t k = 5;
};

struct LinearSvmConfig {
    double lambda = 0.01;
    std::size_t epochs = 200;
};

struct LogisticConfig {
    double lr = 0.1;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
};

struct RandomGuessConfig {};

using BaselineKind = std::variant<KnnConfig, LinearSvmConfig, LogisticConfig, RandomGuessConfig>;

struct KnnModel {
    KnnConfig config;
    std::size_t num_classes = 0;
    Matrix x;
    std::vector<int> y;
};

// Scores are w_k . [x; 1] per class.
struct LinearSvmModel {
    LinearSvmConfig config;
    std::size_t num_classes = 0;
    Matrix weight;  // K x (F + 1), last column is the bias
};

struct LogisticModel {
    LogisticConfig config;
    std::size_t num_classes = 0;
    DenseLayer linear;  // K x F
};

struct RandomGuessModel {
    std::size_t num_classes = 0;
    std::uint64_t seed = 0;
};

inline void check_labels(std::span<const int> y, std::size_t num_classes) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= num_classes) {
            throw Error(ErrorCode::BadTarget, "label " + std::to_string(y[i]) + " outside " + std::to_string(num_classes) +
                                                  " classes at row " + std::to_string(i));
        }
    }
}

// Vote shares among the k nearest training rows (squared Euclidean).
// Neighbours are ordered by (distance, label), which makes the result
// independent of training-row order.
inline Vector knn_votes(const KnnModel& m, std::span<const double> row) {
    if (row.size() != m.x.cols) {
        throw Error(ErrorCode::ShapeMismatch, "knn input width " + std::to_string(row.size()) + ", expected " +
                                                  std::to_string(m.x.cols));
    }
    std::vector<std::pair<double, int>> d(m.x.rows);
    for (std::size_t r = 0; r < m.x.rows; ++r) {
        const auto xr = m.x.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < xr.size(); ++c) {
            const double diff = xr[c] - row[c];
            s += diff * diff;
        }
        d[r] = {s, m.y[r]};
    }
    const std::size_t k = std::min(m.config.k, d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    Vector votes(m.num_classes, 0.0);
    for (std::size_t i = 0; i < k; ++i) votes[static_cast<std::size_t>(d[i].second)] += 1.0 / static_cast<double>(k);
    return votes;
}

inline KnnModel train_knn(const KnnConfig& cfg, const Matrix& x, std::span<const int> y, std::size_t num_classes) {
    if (cfg.k == 0) throw Error(ErrorCode::InvalidConfig, "knn k must be positive");
    if (x.rows < cfg.k) {
        throw Error(ErrorCode::NotEnoughNeighbors, "knn needs at least k=" + std::to_string(cfg.k) + " rows, got " +
                                                       std::to_string(x.rows));
    }
    return KnnModel{cfg, num_classes, x, std::vector<int>(y.begin(), y.end())};
}

inline Vector svm_scores(const LinearSvmModel& m, std::span<const double> row) {
    const std::size_t F = m.weight.cols - 1;
    if (row.size() != F) {
        throw Error(ErrorCode::ShapeMismatch, "svm input width " + std::to_string(row.size()) + ", expected " + std::to_string(F));
    }
    Vector s(m.num_classes);
    for (std::size_t k = 0; k < m.num_classes; ++k) {
        const auto w = m.weight.row(k);
        double v = w[F];
        for (std::size_t c = 0; c < F; ++c) v += w[c] * row[c];
        s[k] = v;
    }
    return s;
}

// One-vs-rest hinge loss with L2, Pegasos step size 1/(lambda t) on the
// bias-augmented input; samples visited in a freshly shuffled order each epoch.
inline LinearSvmModel train_linear_svm(const LinearSvmConfig& cfg, const Matrix& x, std::span<const int> y,
                                       std::size_t num_classes, std::uint64_t seed) {
    if (!(cfg.lambda > 0.0) || cfg.epochs == 0) throw Error(ErrorCode::InvalidConfig, "svm lambda and epochs must be positive");
    const std::size_t F = x.cols;
    LinearSvmModel m{cfg, num_classes, Matrix(num_classes, F + 1)};
    Rng rng(seed);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::uint64_t t = 0;
    Vector xt(F + 1, 1.0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t idx : order) {
            ++t;
            const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
            const auto xr = x.row(idx);
            std::copy(xr.begin(), xr.end(), xt.begin());
            for (std::size_t k = 0; k < num_classes; ++k) {
                auto w = m.weight.row(k);
                const double label = y[idx] == static_cast<int>(k) ? 1.0 : -1.0;
                double margin = 0.0;
                for (std::size_t c = 0; c <= F; ++c) margin += w[c] * xt[c];
                margin *= label;
                const double shrink = 1.0 - eta * cfg.lambda;
                for (double& v : w) v *= shrink;
                if (margin < 1.0) {
                    for (std::size_t c = 0; c <= F; ++c) w[c] += eta * label * xt[c];
                }
            }
        }
    }
    return m;
}

inline Vector logistic_proba(const LogisticModel& m, std::span<const double> row) {
    return softmax(dense_forward(m.linear, row));
}

// Multinomial cross-entropy, plain mini-batch gradient descent from zero
// weights with seeded per-epoch shuffling.
inline std::pair<LogisticModel, double> train_logistic(const LogisticConfig& cfg, const Matrix& x, std::span<const int> y,
                                                       std::size_t num_classes, std::uint64_t seed) {
    if (!(cfg.lr > 0.0) || cfg.epochs == 0 || cfg.batch_size == 0) {
        throw Error(ErrorCode::InvalidConfig, "logistic regression lr, epochs and batch size must be positive");
    }
    LogisticModel m{cfg, num_classes, DenseLayer(x.cols, num_classes)};
    Rng rng(seed);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto params = m.linear.params("linear");
    double epoch_loss = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            zero_grads(params);
            const double scale = 1.0 / static_cast<double>(end - start);
            for (std::size_t b = start; b < end; ++b) {
                const auto xr = x.row(order[b]);
                LossGrad lg = softmax_cross_entropy(dense_forward(m.linear, xr), static_cast<std::size_t>(y[order[b]]));
                epoch_loss += lg.loss;
                for (double& g : lg.grad) g *= scale;
                dense_backward(m.linear, xr, lg.grad);
            }
            for (const auto& p : params) {
                for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= cfg.lr * p.grad[i];
            }
        }
        epoch_loss /= static_cast<double>(order.size());
    }
    return {std::move(m), epoch_loss};
}

// Guess for the i-th row of a prediction batch: a pure function of
// (seed, i), so repeated calls agree.
inline int random_guess(const RandomGuessModel& m, std::size_t row_index) {
    return static_cast<int>(splitmix64(m.seed ^ splitmix64(row_index)) % m.num_classes);
}

// Empirical accuracy of uniform guessing over `draws` seeded draws, each
// against a label drawn from `labels`.
inline double random_guess_accuracy(std::span<const int> labels, std::size_t num_classes, std::size_t draws,
                                    std::uint64_t seed) {
    if (labels.empty() || num_classes == 0 || draws == 0) {
        throw Error(ErrorCode::EmptyTrainingSet, "random guess needs labels, classes and draws");
    }
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const int truth = labels[rng.index(labels.size())];
        const int guess = static_cast<int>(rng.index(num_classes));
        hits += truth == guess ? 1 : 0;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace intent
