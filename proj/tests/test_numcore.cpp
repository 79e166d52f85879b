#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gradnets.hpp"
#include "intent/numcore/adam.hpp"
#include "intent/numcore/serialize.hpp"

using namespace intent;
using Catch::Approx;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an intent::Error");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("rng streams are fixed") {
    // First mt19937_64 output for the reference seed.
    CHECK(Rng(5489).next_u64() == 14514284786278117030ULL);
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
    CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
    CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(derive_seed(42, "x") == derive_seed(42, "x"));
    CHECK(derive_seed(42, "x") != derive_seed(42, "y"));
    CHECK(derive_seed(42, "x") != derive_seed(43, "x"));

    Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    Rng r(1);
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / 20000) < 0.05);
    CHECK(std::abs(sq / 20000 - 1.0) < 0.05);

    std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
    r.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("dense layer forward") {
    DenseLayer id(2, 2);
    id.weight = Matrix{{1, 0}, {0, 1}};
    CHECK(dense_forward(id, Vector{3.5, -2}) == Vector{3.5, -2});
    DenseLayer l(2, 1);
    l.weight = Matrix{{1, 2}};
    l.bias = {3};
    CHECK(dense_forward(l, Vector{1, 1}) == Vector{6});
    CHECK(code_of([&] { dense_forward(l, Vector{1, 1, 1}); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("relu") {
    CHECK(relu(Vector{-1, 0, 2}) == Vector{0, 0, 2});
    CHECK(relu(Vector{-3, -0.5}) == Vector{0, 0});
    CHECK(relu(Vector{0.1, 4}) == Vector{0.1, 4});
}

TEST_CASE("softmax cross-entropy") {
    const auto u = softmax_cross_entropy(Vector{0.3, 0.3, 0.3, 0.3}, 2);
    CHECK(u.loss == Approx(std::log(4.0)).epsilon(1e-14));
    const auto big = softmax_cross_entropy(Vector{1000, 0}, 0);
    CHECK(std::isfinite(big.loss));
    CHECK(big.loss == Approx(0.0).margin(1e-12));
    CHECK(code_of([] { softmax_cross_entropy(Vector{1, 2}, 2); }) == ErrorCode::BadTarget);

    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        Vector logits(5);
        for (double& v : logits) v = rng.uniform(-30, 30);
        const auto lg = softmax_cross_entropy(logits, rng.index(5));
        double s = 0.0;
        for (double g : lg.grad) s += g;
        CHECK(std::abs(s) <= 1e-12);
        const Vector p = softmax(logits);
        double ps = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            ps += v;
        }
        CHECK(std::abs(ps - 1.0) <= 1e-12);
    }
}

TEST_CASE("lstm cell step") {
    LstmCell zero(3, 4);
    const auto s = lstm_cell_step(zero, Vector{1, -2, 3}, Vector(4, 0.0), Vector(4, 0.0));
    CHECK(s.c == Vector(4, 0.0));
    CHECK(s.h == Vector(4, 0.0));

    LstmCell remember(2, 3);
    for (std::size_t j = 0; j < 3; ++j) remember.bias[3 + j] = 40.0;
    const Vector c0{0.7, -1.2, 2.5};
    const auto r = lstm_cell_step(remember, Vector{0.3, 0.1}, Vector(3, 0.0), c0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.c[j] == Approx(c0[j]).epsilon(1e-12));

    Rng rng(12);
    LstmCell cell(3, 6);
    cell.init(rng);
    for (double& v : cell.weight.data) v *= 20.0;
    Vector h(6, 0.0), c(6, 0.0);
    for (int t = 0; t < 50; ++t) {
        const auto n = lstm_cell_step(cell, Vector{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)}, h, c);
        for (double v : n.h) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
        h = n.h;
        c = n.c;
    }
    CHECK(code_of([&] { lstm_cell_step(cell, Vector{1, 2}, h, c); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("initialisation") {
    Rng rng(2);
    LstmCell cell(5, 7);
    cell.init(rng);
    const double a = std::sqrt(6.0 / (12.0 + 7.0));
    for (double v : cell.weight.data) CHECK(std::abs(v) <= a);
    for (std::size_t j = 0; j < 28; ++j) CHECK(cell.bias[j] == (j >= 7 && j < 14 ? 1.0 : 0.0));
    DenseLayer d(10, 3);
    d.init(rng);
    for (double v : d.weight.data) CHECK(std::abs(v) <= std::sqrt(6.0 / 13.0));
    CHECK(d.bias == Vector(3, 0.0));
}

TEST_CASE("adam step") {
    Vector theta{1.5, -2.0}, grad{0.0, 0.0};
    std::vector<ParamRef> params{{"w", theta, grad, true}};
    AdamState st;
    adam_step(st, params, 0.0);
    CHECK(theta == Vector{1.5, -2.0});
    CHECK(st.t == 1);

    grad = {0.3, -7.0};
    AdamState first;
    adam_step(first, params, 0.0);
    CHECK(theta[0] == Approx(1.5 - 0.001).epsilon(1e-7));
    CHECK(theta[1] == Approx(-2.0 + 0.001).epsilon(1e-7));

    // Same snapshot, same result.
    Vector t1{0.2}, g1{0.5}, t2{0.2}, g2{0.5};
    AdamState s1, s2;
    std::vector<ParamRef> p1{{"a", t1, g1, true}}, p2{{"a", t2, g2, true}};
    for (int i = 0; i < 5; ++i) {
        adam_step(s1, p1, 0.01);
        adam_step(s2, p2, 0.01);
    }
    CHECK(t1 == t2);

    // L2 acts through g + l2 * theta on weights only.
    Vector w{2.0}, gw{0.0}, b{2.0}, gb{0.0};
    std::vector<ParamRef> wb{{"w", w, gw, true}, {"b", b, gb, false}};
    AdamState s3;
    adam_step(s3, wb, 0.5);
    CHECK(w[0] == Approx(2.0 - 0.001).epsilon(1e-7));
    CHECK(b[0] == 2.0);

    Vector other{1.0, 2.0, 3.0}, og{0, 0, 0};
    std::vector<ParamRef> changed{{"w", other, og, true}};
    CHECK(code_of([&] { adam_step(first, changed, 0.0); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("gradient checks") {
    Vector w{0.3, -1.2, 2.5, 4.0}, g(4);
    std::vector<ParamRef> params{{"w", w, g, true}};
    auto quad = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            s += w[i] * w[i];
            g[i] = 2.0 * w[i];
        }
        return s;
    };
    CHECK(grad_check(quad, params, 1e-5) <= 1e-7);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(gradnets::dense_network(seed).max_relative_error <= 1e-4);
        CHECK(gradnets::lstm_unrolled(seed).max_relative_error <= 1e-4);
        // four steps through two layers: the larger step keeps roundoff below the tolerance
        CHECK(gradnets::lstm_stack(seed, {}, 1e-4).max_relative_error <= 1e-4);
    }

    // A wrong gradient is caught.
    auto wrong = [&] {
        const double s = quad();
        g[1] *= 1.01;
        return s;
    };
    const auto report = grad_check_report(wrong, params, 1e-5);
    CHECK(report.max_relative_error > 1e-3);
    CHECK(report.worst_index == 1);
}

TEST_CASE("model container round trip") {
    ModelContainer c;
    c.kind = "mlp";
    c.config = {{"epochs", 3}};
    c.add("w", Matrix{{1.0 / 3.0, -2e-300}, {5e300, 0.1}});
    c.add("b", Vector{0.25, -0.5});
    const auto path = std::filesystem::temp_directory_path() / "intent_container.json";
    save_container(path, c);
    const ModelContainer back = load_container(path);
    CHECK(back.kind == "mlp");
    CHECK(back.config["epochs"] == 3);
    CHECK(back.tensor("w") == c.tensor("w"));
    CHECK(back.tensor("b").data == Vector{0.25, -0.5});
    Vector dst(3);
    CHECK(code_of([&] { back.load_into("b", dst); }) == ErrorCode::SerializationError);
    CHECK(code_of([&] { back.tensor("nope"); }) == ErrorCode::SerializationError);

    auto j = to_json(c);
    j["magic"] = "something else";
    CHECK(code_of([&] { container_from_json(j); }) == ErrorCode::SerializationError);
    j = to_json(c);
    j["version"] = 99;
    CHECK(code_of([&] { container_from_json(j); }) == ErrorCode::SerializationError);
}
