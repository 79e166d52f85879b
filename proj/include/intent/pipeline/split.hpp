#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "intent/error.hpp"
#include "intent/features.hpp"
#include "intent/numcore/rng.hpp"

namespace intent {

enum class Stratify { None, Segment, Direction };

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    Stratify stratify_by = Stratify::None;
};

struct SplitIndices {
    std::vector<std::size_t> train;  // ascending
    std::vector<std::size_t> test;   // ascending

    // 1 for training rows, 0 for test rows.
    std::vector<unsigned char> mask(std::size_t n) const {
        std::vector<unsigned char> m(n, 0);
        for (std::size_t i : train) m[i] = 1;
        return m;
    }
};

// floor(fraction * n) training rows after a seeded shuffle. With
// stratification each class contributes in proportion (largest remainder),
// keeping the training total at floor(fraction * n).
inline SplitIndices split_indices(std::span<const RowInfo> rows, const SplitSpec& spec) {
    const std::size_t n = rows.size();
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "train fraction must lie strictly between 0 and 1");
    }
    if (n < 5) throw Error(ErrorCode::TooFewRows, "need at least 5 rows to split, got " + std::to_string(n));
    const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
    Rng rng(spec.seed);
    SplitIndices out;

    if (spec.stratify_by == Stratify::None) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(idx));
        out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    } else {
        const auto labels = labels_for(rows, spec.stratify_by == Stratify::Segment ? Target::Segment : Target::Direction);
        std::map<int, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
        struct Quota {
            int label;
            std::size_t take;
            double remainder;
        };
        std::vector<Quota> quotas;
        std::size_t assigned = 0;
        for (auto& [label, members] : groups) {
            rng.shuffle(std::span<std::size_t>(members));
            const double exact = spec.train_fraction * static_cast<double>(members.size());
            const auto take = static_cast<std::size_t>(std::floor(exact));
            quotas.push_back({label, take, exact - static_cast<double>(take)});
            assigned += take;
        }
        std::vector<std::size_t> order(quotas.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
        for (std::size_t i = 0; assigned < n_train && i < order.size(); ++i, ++assigned) ++quotas[order[i]].take;
        for (const auto& q : quotas) {
            const auto& members = groups[q.label];
            out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q.take));
            out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(q.take), members.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline DataMatrix take_rows(const DataMatrix& d, std::span<const std::size_t> idx) {
    DataMatrix out;
    out.id = d.id;
    out.x = select_rows(d.x, idx);
    out.rows.reserve(idx.size());
    for (std::size_t i : idx) out.rows.push_back(d.rows[i]);
    return out;
}

struct SplitResult {
    DataMatrix train;
    DataMatrix test;
    SplitIndices indices;
};

inline SplitResult split_dataset(const DataMatrix& data, const SplitSpec& spec) {
    if (data.x.rows != data.rows.size()) throw Error(ErrorCode::RowCountMismatch, "matrix rows differ from labels");
    SplitResult r;
    r.indices = split_indices(data.rows, spec);
    r.train = take_rows(data, r.indices.train);
    r.test = take_rows(data, r.indices.test);
    return r;
}

}  // namespace intent
