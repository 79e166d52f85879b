#pragma once

#include <span>
#include <vector>

#include "intent/error.hpp"
#include "intent/numcore/matrix.hpp"

namespace intent {

struct Metrics {
    double accuracy = 0.0;  // percent
    double macro_f1 = 0.0;  // [0, 1]
    // confusion[truth][predicted]
    std::vector<std::vector<std::size_t>> confusion;

    bool operator==(const Metrics&) const = default;
};

// Accuracy in percent, unweighted mean of per-class F1 over all classes
// (classes with undefined F1 count as 0) and the confusion matrix.
inline Metrics evaluate(std::span<const int> predicted, std::span<const int> truth, std::size_t num_classes) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                                   std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) throw Error(ErrorCode::LengthMismatch, "nothing to evaluate");
    Metrics m;
    m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
            throw Error(ErrorCode::BadTarget, "class index outside 0.." + std::to_string(num_classes - 1), i);
        }
        ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
        correct += t == p ? 1 : 0;
    }
    m.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
    double f1_sum = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) {
        const double tp = static_cast<double>(m.confusion[k][k]);
        double support = 0.0;
        double predicted_k = 0.0;
        for (std::size_t j = 0; j < num_classes; ++j) {
            support += static_cast<double>(m.confusion[k][j]);
            predicted_k += static_cast<double>(m.confusion[j][k]);
        }
        const double denom = support + predicted_k;
        f1_sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    m.macro_f1 = f1_sum / static_cast<double>(num_classes);
    return m;
}

}  // namespace intent
