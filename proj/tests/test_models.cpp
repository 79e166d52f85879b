#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "intent/models/model.hpp"

using namespace intent;

namespace {

struct Labeled {
    Matrix x;
    std::vector<int> y;
};

// Four Gaussian blobs centred on scaled unit vectors.
Labeled blobs(std::size_t n, std::size_t width, std::uint64_t seed, double spread = 4.0) {
    Rng rng(seed);
    Labeled d;
    d.x = Matrix(n, width);
    for (std::size_t r = 0; r < n; ++r) {
        const int k = static_cast<int>(r % 4);
        d.y.push_back(k);
        for (std::size_t c = 0; c < width; ++c) d.x(r, c) = rng.normal() + (c == static_cast<std::size_t>(k) ? spread : 0.0);
    }
    return d;
}

Labeled head(const Labeled& d, std::size_t from, std::size_t to) {
    Labeled out;
    std::vector<std::size_t> idx(to - from);
    std::iota(idx.begin(), idx.end(), from);
    out.x = select_rows(d.x, idx);
    out.y.assign(d.y.begin() + static_cast<std::ptrdiff_t>(from), d.y.begin() + static_cast<std::ptrdiff_t>(to));
    return out;
}

double accuracy(std::span<const int> p, std::span<const int> y) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < p.size(); ++i) hit += p[i] == y[i];
    return 100.0 * static_cast<double>(hit) / static_cast<double>(p.size());
}

void check_simplex(const Vector& p) {
    double s = 0.0;
    for (double v : p) {
        CHECK(v >= 0.0);
        s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
}

// A point turning around the unit circle, one way for class 0 and the other
// for class 1, from a random phase. Only temporal order separates the classes.
std::vector<LabeledSequence> rotations(std::size_t count, std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledSequence> out;
    for (std::size_t s = 0; s < count; ++s) {
        LabeledSequence q;
        const int label = static_cast<int>(s % 2);
        const double step = label == 0 ? 0.4 : -0.4;
        const double phase = rng.uniform(0.0, 6.283185307179586);
        q.steps = Matrix(length, 2);
        for (std::size_t t = 0; t < length; ++t) {
            const double a = phase + step * static_cast<double>(t);
            q.steps(t, 0) = std::cos(a) + rng.normal(0.0, 0.02);
            q.steps(t, 1) = std::sin(a) + rng.normal(0.0, 0.02);
            q.labels.push_back(label);
            q.in_train.push_back(rng.uniform() < 0.8 ? 1 : 0);
        }
        out.push_back(std::move(q));
    }
    return out;
}

LstmConfig small_lstm(std::size_t width) {
    LstmConfig c;
    c.input_width = width;
    c.hidden_size = 12;
    c.epochs = 25;
    c.seed = 3;
    return c;
}

std::string dump(const TrainedModel& m) { return to_json(to_container(m)).dump(); }

}  // namespace

TEST_CASE("mlp defaults and parameter count", "[models][mlp]") {
    MlpConfig c;
    CHECK(c.hidden == std::vector<std::size_t>{64, 32});
    CHECK(c.output == 4);
    CHECK(c.lr == 0.001);
    CHECK(c.epochs == 50);
    CHECK(c.batch_size == 32);

    MlpNetwork net(24, c.hidden, 4);
    CHECK(parameter_count(net.params()) == 24 * 64 + 64 + 64 * 32 + 32 + 32 * 4 + 4);
    CHECK(parameter_count(net.params()) == 3812);
}

TEST_CASE("mlp separates blobs", "[models][mlp]") {
    const auto all = blobs(500, 24, 11);
    const auto train = head(all, 0, 400);
    const auto test = head(all, 400, 500);
    MlpConfig c;
    c.seed = 7;
    const auto model = train_mlp(train.x, train.y, c);
    const auto pred = predict_classes(model, test.x);
    CHECK(accuracy(pred, test.y) >= 95.0);

    for (std::size_t r = 0; r < 20; ++r) {
        const Vector p = predict_mlp(model, train.x.row(r));
        check_simplex(p);
        CHECK(static_cast<int>(argmax(p)) == train.y[r]);
    }
    CHECK(std::isfinite(model.info.final_loss));
    CHECK(model.info.seed == 7);
}

TEST_CASE("mlp is near uniform at init and deterministic", "[models][mlp]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        MlpNetwork net(24, {64, 32}, 4);
        net.init(rng);
        const Vector p = softmax(net.logits(Vector(24, 0.0)));
        for (double v : p) CHECK(std::abs(v - 0.25) <= 0.1);
    }

    const auto d = blobs(96, 6, 2);
    MlpConfig c;
    c.epochs = 5;
    c.seed = 19;
    CHECK(dump(train_mlp(d.x, d.y, c)) == dump(train_mlp(d.x, d.y, c)));
    c.seed = 20;
    const auto other = train_mlp(d.x, d.y, c);
    c.seed = 19;
    CHECK(dump(other) != dump(train_mlp(d.x, d.y, c)));
}

TEST_CASE("mlp errors", "[models][mlp]") {
    const auto d = blobs(40, 6, 1);
    MlpConfig c;
    c.epochs = 1;
    const auto model = train_mlp(d.x, d.y, c);
    try {
        predict_mlp(model, Vector(5, 0.0));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    c.input_width = 7;
    try {
        train_mlp(d.x, d.y, c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    try {
        train_mlp(Matrix(0, 6), std::vector<int>{}, MlpConfig{});
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyTrainingSet);
    }
    auto bad = d.y;
    bad[3] = 4;
    try {
        train_mlp(d.x, bad, MlpConfig{});
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadTarget);
    }
}

TEST_CASE("lstm defaults and window enumeration", "[models][lstm]") {
    LstmConfig c;
    CHECK(c.hidden_layers == 2);
    CHECK(c.hidden_size == 50);
    CHECK(c.output == 2);
    CHECK(c.l2 == 0.01);
    CHECK(c.lr == 0.001);
    CHECK(c.epochs == 50);
    CHECK(c.batch_size == 32);
    CHECK(c.window_len == 5);
    CHECK(c.mode == SequenceMode::Windowed);

    LabeledSequence q;
    q.steps = Matrix(39, 3);
    q.labels.assign(39, 0);
    q.in_train.assign(39, 1);
    std::vector<LabeledSequence> one{q};
    CHECK(sliding_windows(one, 5, true).size() == 35);
    CHECK(sliding_windows(one, 5, false).empty());
    q.in_train.assign(39, 0);
    q.in_train[4] = 1;
    q.in_train[38] = 1;
    one = {q};
    const auto w = sliding_windows(one, 5, true);
    REQUIRE(w.size() == 2);
    CHECK(w[0].end == 4);
    CHECK(w[1].end == 38);
    CHECK(sliding_windows(one, 5, false).size() == 33);

    const auto ws = window_steps(q, 7, 5);
    CHECK(ws.rows == 5);
    CHECK(ws.cols == 3);
}

TEST_CASE("lstm sequence errors", "[models][lstm]") {
    auto seqs = rotations(4, 39, 1);
    auto c = small_lstm(2);
    c.window_len = 40;
    c.epochs = 1;
    try {
        train_lstm(seqs, c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SequenceTooShort);
        CHECK(e.index() == std::optional<std::size_t>(0));
    }
    c.window_len = 1;
    try {
        train_lstm(seqs, c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }
    c.window_len = 5;
    c.input_width = 3;
    try {
        train_lstm(seqs, c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    c.input_width = 2;
    const auto model = train_lstm(seqs, c);
    try {
        predict_lstm(model, Matrix(5, 3));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    try {
        predict_lstm(model, Matrix(4, 2));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    try {
        predict_classes(model, Matrix(3, 2));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("lstm learns temporal order", "[models][lstm]") {
    const auto seqs = rotations(24, 39, 5);
    const auto c = small_lstm(2);
    const auto model = train_lstm(seqs, c);
    const auto held = lstm_test_predictions(model, seqs);
    REQUIRE(!held.truth.empty());
    CHECK(accuracy(held.predicted, held.truth) >= 90.0);

    std::size_t flipped = 0;
    std::size_t total = 0;
    for (const auto& w : sliding_windows(seqs, c.window_len, false)) {
        const Matrix fwd = window_steps(seqs[w.sequence], w.end, c.window_len);
        Matrix rev(fwd.rows, fwd.cols);
        for (std::size_t t = 0; t < fwd.rows; ++t) {
            for (std::size_t c = 0; c < fwd.cols; ++c) rev(t, c) = fwd(fwd.rows - 1 - t, c);
        }
        const Vector pf = predict_lstm(model, fwd);
        const Vector pr = predict_lstm(model, rev);
        check_simplex(pf);
        check_simplex(pr);
        flipped += argmax(pf) != argmax(pr);
        ++total;
    }
    CHECK(static_cast<double>(flipped) >= 0.8 * static_cast<double>(total));

    CHECK(dump(model) == dump(train_lstm(seqs, c)));
}

TEST_CASE("lstm full-sequence mode", "[models][lstm]") {
    const auto seqs = rotations(16, 39, 9);
    auto c = small_lstm(2);
    c.mode = SequenceMode::FullSequence;
    c.batch_size = 4;
    c.epochs = 40;
    const auto model = train_lstm(seqs, c);
    const auto held = lstm_test_predictions(model, seqs);
    std::size_t expected = 0;
    for (const auto& q : seqs) expected += static_cast<std::size_t>(std::count(q.in_train.begin(), q.in_train.end(), 0));
    CHECK(held.truth.size() == expected);
    // early steps carry little order information, so the bar is lower than windowed
    CHECK(accuracy(held.predicted, held.truth) >= 75.0);
    const auto steps = predict_lstm_steps(model, seqs[0].steps);
    CHECK(steps.size() == 39);
    for (const auto& p : steps) check_simplex(p);
}

TEST_CASE("knn", "[models][baselines]") {
    const auto d = blobs(60, 5, 4);
    const auto model = train_baseline(KnnConfig{1}, d.x, d.y, 4);
    CHECK(accuracy(predict_classes(model, d.x), d.y) == 100.0);

    try {
        train_baseline(KnnConfig{5}, head(d, 0, 4).x, head(d, 0, 4).y, 4);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotEnoughNeighbors);
    }
    try {
        train_baseline(KnnConfig{0}, d.x, d.y, 4);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
    }

    // integer grid so distance ties are common
    Rng rng(8);
    Matrix x(80, 2);
    std::vector<int> y(80);
    for (std::size_t r = 0; r < 80; ++r) {
        x(r, 0) = static_cast<double>(rng.index(5));
        x(r, 1) = static_cast<double>(rng.index(5));
        y[r] = static_cast<int>(rng.index(3));
    }
    Matrix queries(25, 2);
    for (std::size_t r = 0; r < 25; ++r) {
        queries(r, 0) = static_cast<double>(r % 5);
        queries(r, 1) = static_cast<double>(r / 5);
    }
    for (std::size_t k : {1u, 4u, 5u}) {
        const auto base = predict_classes(train_baseline(KnnConfig{k}, x, y, 3), queries);
        std::vector<std::size_t> perm(80);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (int trial = 0; trial < 10; ++trial) {
            rng.shuffle(std::span<std::size_t>(perm));
            std::vector<int> yp;
            for (auto i : perm) yp.push_back(y[i]);
            CHECK(predict_classes(train_baseline(KnnConfig{k}, select_rows(x, perm), yp, 3), queries) == base);
        }
    }

    // equal distance to one point of each class: vote tie goes to the smaller label
    Matrix tie{{1.0, 0.0}, {-1.0, 0.0}};
    const auto m2 = train_baseline(KnnConfig{2}, tie, std::vector<int>{1, 0}, 2);
    CHECK(predict_classes(m2, Matrix{{0.0, 0.0}}) == std::vector<int>{0});
}

TEST_CASE("linear svm and logistic regression", "[models][baselines]") {
    Rng rng(12);
    Labeled d;
    d.x = Matrix(400, 2);
    for (std::size_t r = 0; r < 400; ++r) {
        double a = 0.0;
        double b = 0.0;
        do {
            a = rng.uniform(-1.0, 1.0);
            b = rng.uniform(-1.0, 1.0);
        } while (std::abs(a + b) < 0.2);
        d.x(r, 0) = a;
        d.x(r, 1) = b;
        d.y.push_back(a + b > 0.0 ? 1 : 0);
    }
    const auto train = head(d, 0, 300);
    const auto test = head(d, 300, 400);

    const auto svm = train_baseline(LinearSvmConfig{}, train.x, train.y, 2, 4);
    CHECK(accuracy(predict_classes(svm, test.x), test.y) >= 95.0);
    CHECK(predict_classes(svm, test.x) == predict_classes(svm, test.x));
    CHECK(dump(svm) == dump(train_baseline(LinearSvmConfig{}, train.x, train.y, 2, 4)));

    const auto lr = train_baseline(LogisticConfig{}, train.x, train.y, 2, 4);
    CHECK(accuracy(predict_classes(lr, test.x), test.y) >= 95.0);
    check_simplex(logistic_proba(std::get<LogisticModel>(lr.model), test.x.row(0)));

    const auto four = blobs(400, 8, 21);
    const auto lr4 = train_baseline(LogisticConfig{}, head(four, 0, 300).x, head(four, 0, 300).y, 4, 1);
    CHECK(accuracy(predict_classes(lr4, head(four, 300, 400).x), head(four, 300, 400).y) >= 95.0);
    const auto svm4 = train_baseline(LinearSvmConfig{}, head(four, 0, 300).x, head(four, 0, 300).y, 4, 1);
    CHECK(accuracy(predict_classes(svm4, head(four, 300, 400).x), head(four, 300, 400).y) >= 95.0);

    try {
        predict_classes(svm, Matrix(1, 3));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ShapeMismatch);
    }
    try {
        train_baseline(LogisticConfig{}, Matrix(0, 2), std::vector<int>{}, 2);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyTrainingSet);
    }
}

TEST_CASE("random guess", "[models][baselines]") {
    std::vector<int> four{0, 1, 2, 3, 0, 1, 2};
    std::vector<int> two{0, 1, 1};
    CHECK(std::abs(random_guess_accuracy(four, 4, 100000, 1) - 25.0) <= 1.0);
    CHECK(std::abs(random_guess_accuracy(two, 2, 100000, 1) - 50.0) <= 1.0);
    CHECK(random_guess_accuracy(four, 4, 1000, 9) == random_guess_accuracy(four, 4, 1000, 9));

    const auto m = train_baseline(RandomGuessConfig{}, Matrix(4, 3), std::vector<int>{0, 1, 2, 3}, 4, 77);
    CHECK(m.input_width() == 0);
    const Matrix q(2000, 3);
    const auto p = predict_classes(m, q);
    CHECK(p == predict_classes(m, q));
    std::vector<std::size_t> hist(4, 0);
    for (int v : p) ++hist[static_cast<std::size_t>(v)];
    for (auto h : hist) CHECK(std::abs(static_cast<double>(h) - 500.0) <= 80.0);
}

TEST_CASE("models round-trip through the container", "[models][serialize]") {
    const auto d = blobs(80, 6, 30);
    MlpConfig mc;
    mc.epochs = 3;
    mc.seed = 5;
    std::vector<TrainedModel> models{
        train_mlp(d.x, d.y, mc),
        train_baseline(KnnConfig{3}, d.x, d.y, 4),
        train_baseline(LinearSvmConfig{0.01, 5}, d.x, d.y, 4, 2),
        train_baseline(LogisticConfig{0.1, 5, 16}, d.x, d.y, 4, 2),
        train_baseline(RandomGuessConfig{}, d.x, d.y, 4, 2),
    };
    const auto dir = std::filesystem::temp_directory_path() / "intent_models_rt";
    std::filesystem::create_directories(dir);
    for (const auto& m : models) {
        INFO(m.kind());
        const auto back = from_container(container_from_json(to_json(to_container(m))));
        CHECK(back.kind() == m.kind());
        CHECK(back.info.seed == m.info.seed);
        CHECK(back.info.final_loss == m.info.final_loss);
        CHECK(predict_classes(back, d.x) == predict_classes(m, d.x));
        CHECK(dump(back) == dump(m));
        const auto path = dir / (m.kind() + ".json");
        save_model(path, m);
        CHECK(dump(load_model(path)) == dump(m));
    }

    const auto seqs = rotations(4, 12, 2);
    auto lc = small_lstm(2);
    lc.epochs = 2;
    const auto lstm = train_lstm(seqs, lc);
    const auto back = from_container(container_from_json(to_json(to_container(lstm))));
    CHECK(dump(back) == dump(lstm));
    CHECK(predict_lstm(back, window_steps(seqs[0], 6, 5)) == predict_lstm(lstm, window_steps(seqs[0], 6, 5)));
    CHECK(back.info.config_hash == config_hash(lc));

    auto c = to_container(models[0]);
    c.tensors.pop_back();
    try {
        from_container(c);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SerializationError);
    }
    auto j = to_json(to_container(models[1]));
    j["magic"] = "nope";
    try {
        container_from_json(j);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SerializationError);
    }
    std::filesystem::remove_all(dir);
}
