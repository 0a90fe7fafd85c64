#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "synrec/gradcheck.hpp"
#include "synrec/layers.hpp"
#include "synrec/losses.hpp"
#include "synrec/optim.hpp"
#include "synrec/rng.hpp"
#include "synrec/tensor.hpp"

using namespace synrec;

TEST_CASE("Tensor2 layout and access") {
    Tensor2 t(2, 3, 1.5);
    CHECK(t.rows == 2);
    CHECK(t.cols == 3);
    CHECK(t.data.size() == 6);
    t(1, 2) = 4.0;
    CHECK(t.row(1)[2] == doctest::Approx(4.0));
    CHECK(t(0, 0) == doctest::Approx(1.5));
}

TEST_CASE("dot products") {
    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> b{4.0, 5.0, 6.0};
    CHECK(dot(a, b) == doctest::Approx(32.0));
    std::vector<double> c{1.0};
    CHECK_THROWS_AS(dot(a, c), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and derive is independent") {
    Rng a(7), b(7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng parent(3);
    Rng child1 = parent.derive(1);
    CHECK(parent.next_u64() == Rng(3).next_u64());  // derive did not advance parent
    Rng child1_again = Rng(3).derive(1);
    CHECK(child1.next_u64() == child1_again.next_u64());

    Rng u(11);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(u.below(13) < 13);
}

TEST_CASE("rng shuffle is a permutation") {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    Rng rng(5);
    rng.shuffle(v);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("dense_forward identity and hand product") {
    DenseLayer ident;
    ident.weights = Tensor2(2, 2);
    ident.weights(0, 0) = 1.0;
    ident.weights(1, 1) = 1.0;
    ident.bias = {0.0, 0.0};
    ident.activation = Activation::linear;
    auto out = dense_forward({1.0, 2.0}, ident);
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(2.0));

    DenseLayer col;
    col.weights = Tensor2(2, 1);
    col.weights(0, 0) = 2.0;
    col.weights(1, 0) = 3.0;
    col.bias = {1.0};
    col.activation = Activation::linear;
    CHECK(dense_forward({1.0, 1.0}, col)[0] == doctest::Approx(6.0));
}

TEST_CASE("rectifier clamps negatives") {
    DenseLayer layer;
    layer.weights = Tensor2(1, 1);
    layer.weights(0, 0) = 1.0;
    layer.bias = {0.0};
    layer.activation = Activation::rectifier;
    CHECK(dense_forward({-3.0}, layer)[0] == doctest::Approx(0.0));
}

TEST_CASE("dense_forward rejects dimension mismatch with both sizes named") {
    Rng rng(1);
    DenseLayer layer = make_dense(3, 2, Activation::linear, rng);
    try {
        dense_forward({1.0, 2.0}, layer);
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find('2') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
}

TEST_CASE("dense_backward simple derivatives") {
    DenseLayer layer;
    layer.weights = Tensor2(2, 1);
    layer.weights(0, 0) = 0.5;
    layer.weights(1, 0) = -0.25;
    layer.bias = {0.0};
    layer.activation = Activation::linear;
    DenseCache cache;
    dense_forward({3.0, 4.0}, layer, &cache);
    auto grads = dense_backward({1.0}, layer, cache);
    CHECK(grads.weight_grad(0, 0) == doctest::Approx(3.0));
    CHECK(grads.weight_grad(1, 0) == doctest::Approx(4.0));
    CHECK(grads.bias_grad[0] == doctest::Approx(1.0));

    DenseLayer dead = layer;
    dead.activation = Activation::rectifier;
    DenseCache dead_cache;
    dense_forward({-3.0, -4.0}, dead, &dead_cache);  // preact = -0.5 < 0
    auto dead_grads = dense_backward({1.0}, dead, dead_cache);
    CHECK(dead_grads.input_grad[0] == doctest::Approx(0.0));
    CHECK(dead_grads.input_grad[1] == doctest::Approx(0.0));
}

TEST_CASE("dense_backward requires a cached forward pass") {
    Rng rng(1);
    DenseLayer layer = make_dense(2, 2, Activation::linear, rng);
    DenseCache empty;
    CHECK_THROWS_AS(dense_backward({1.0, 1.0}, layer, empty), std::runtime_error);
}

namespace {

// Finite-difference check of one layer's full backward pass (weights, bias,
// input) against the analytic gradients, for a scalar loss sum(output * probe).
double layer_fd_max_error(DenseLayer& layer, std::vector<double> input, Rng& rng) {
    const auto probe = rng.normal_vector(layer.out_width());
    auto loss_of = [&]() {
        auto out = dense_forward(input, layer);
        return dot(out, probe);
    };
    DenseCache cache;
    dense_forward(input, layer, &cache);
    auto grads = dense_backward(probe, layer, cache);

    double worst = 0.0;
    auto probe_params = [&](std::span<double> params, std::span<const double> analytic) {
        const auto report = grad_check(loss_of, params, analytic);
        worst = std::max(worst, report.max_rel_error);
    };
    probe_params(layer.weights.data, grads.weight_grad.data);
    probe_params(layer.bias, grads.bias_grad);
    probe_params(input, grads.input_grad);
    return worst;
}

}  // namespace

TEST_CASE("every activation's backward matches finite differences") {
    Rng rng(31);
    for (Activation act : {Activation::linear, Activation::rectifier,
                           Activation::leaky_rectifier, Activation::sigmoid,
                           Activation::softmax}) {
        for (int trial = 0; trial < 4; ++trial) {
            const std::size_t in = 1 + rng.below(8);
            const std::size_t out = act == Activation::softmax ? 2 + rng.below(7)
                                                               : 1 + rng.below(8);
            DenseLayer layer = make_dense(in, out, act, rng);
            for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
            CHECK(layer_fd_max_error(layer, rng.normal_vector(in), rng) < 1e-4);
        }
    }
}

TEST_CASE("softmax values and stability") {
    auto uniform6 = softmax(std::vector<double>(6, 3.0));
    for (double p : uniform6) CHECK(p == doctest::Approx(1.0 / 6.0));
    CHECK(std::accumulate(uniform6.begin(), uniform6.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-9));

    auto dominant = softmax({1000.0, 0.0, 0.0});
    CHECK(dominant[0] == doctest::Approx(1.0));
    CHECK(dominant[1] == doctest::Approx(0.0));

    auto thirds = softmax({std::log(1.0), std::log(2.0), std::log(3.0)});
    CHECK(thirds[0] == doctest::Approx(1.0 / 6.0));
    CHECK(thirds[1] == doctest::Approx(2.0 / 6.0));
    CHECK(thirds[2] == doctest::Approx(3.0 / 6.0));

    auto base = softmax({0.3, -1.2, 2.0});
    auto shifted = softmax({100.3, 98.8, 102.0});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(base[i] - shifted[i]) < 1e-9);
    }

    CHECK_THROWS_AS(softmax({}), std::invalid_argument);
}

TEST_CASE("loss_eval values") {
    auto perfect = loss_eval(LossKind::squared, {1.0, 2.0}, {1.0, 2.0});
    CHECK(perfect.value == doctest::Approx(0.0));

    auto squared = loss_eval(LossKind::squared, {0.0, 0.0}, {1.0, 2.0});
    CHECK(squared.value == doctest::Approx(5.0));
    CHECK(squared.gradient[0] == doctest::Approx(-2.0));
    CHECK(squared.gradient[1] == doctest::Approx(-4.0));

    auto confident = loss_eval(LossKind::binary_cross_entropy, {1.0 - 1e-12}, {1.0});
    CHECK(confident.value == doctest::Approx(0.0).epsilon(1e-9));

    auto cce = loss_eval(LossKind::categorical_cross_entropy, {0.2, 0.5, 0.3}, {0.0, 1.0, 0.0});
    CHECK(cce.value == doctest::Approx(-std::log(0.5)));

    // log(0) stays finite through the clamp
    auto clamped = loss_eval(LossKind::categorical_cross_entropy, {0.0, 1.0}, {1.0, 0.0});
    CHECK(std::isfinite(clamped.value));

    CHECK_THROWS_AS(loss_eval(LossKind::squared, {1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("loss gradients match finite differences") {
    Rng rng(17);
    for (LossKind kind : {LossKind::squared, LossKind::categorical_cross_entropy,
                          LossKind::binary_cross_entropy}) {
        std::vector<double> pred(4), target(4);
        for (auto& p : pred) p = rng.uniform(0.05, 0.95);
        if (kind == LossKind::categorical_cross_entropy) {
            target.assign(4, 0.0);
            target[rng.below(4)] = 1.0;
        } else if (kind == LossKind::binary_cross_entropy) {
            for (auto& t : target) t = static_cast<double>(rng.below(2));
        } else {
            for (auto& t : target) t = rng.uniform(-1.0, 1.0);
        }
        auto loss_of = [&]() { return loss_eval(kind, pred, target).value; };
        auto analytic = loss_eval(kind, pred, target).gradient;
        CHECK(grad_check(loss_of, pred, analytic).max_rel_error < 1e-4);
    }
}

TEST_CASE("loss_eval is non-negative") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pred(3), target(3, 0.0);
        for (auto& p : pred) p = rng.uniform(0.01, 0.99);
        target[rng.below(3)] = 1.0;
        CHECK(loss_eval(LossKind::squared, pred, target).value >= 0.0);
        CHECK(loss_eval(LossKind::categorical_cross_entropy, pred, target).value >= 0.0);
        CHECK(loss_eval(LossKind::binary_cross_entropy, pred, target).value >= 0.0);
    }
}

TEST_CASE("adam_step behavior") {
    AdamState zero_state(2, 1e-3);
    std::vector<double> params{1.0, -2.0};
    adam_step(params, {0.0, 0.0}, zero_state);
    CHECK(params[0] == doctest::Approx(1.0));
    CHECK(params[1] == doctest::Approx(-2.0));

    AdamState state(1, 1e-3);
    std::vector<double> p{0.0};
    adam_step(p, {0.5}, state);
    // First-step bias correction makes the update magnitude ~= the learning rate.
    CHECK(std::abs(p[0] + 1e-3) < 1e-6);
    CHECK(state.step == 1);

    AdamState s1(3, 1e-2), s2(3, 1e-2);
    std::vector<double> a{1.0, 2.0, 3.0}, b{1.0, 2.0, 3.0};
    Rng r1(9), r2(9);
    for (int i = 0; i < 20; ++i) {
        auto g1 = r1.normal_vector(3);
        auto g2 = r2.normal_vector(3);
        adam_step(a, g1, s1);
        adam_step(b, g2, s2);
    }
    CHECK(a == b);  // bit-equal trajectories for equal seeds

    CHECK_THROWS_AS(adam_step(a, {1.0}, s1), std::invalid_argument);
}

TEST_CASE("gaussian reparameterization") {
    auto mean_only = reparameterize({1.0, -2.0}, {0.0, 0.0}, {5.0, 5.0});
    CHECK(mean_only[0] == doctest::Approx(1.0));
    CHECK(mean_only[1] == doctest::Approx(-2.0));

    auto zero_eps = reparameterize({0.5, 0.25}, {4.0, 9.0}, {0.0, 0.0});
    CHECK(zero_eps[0] == doctest::Approx(0.5));
    CHECK(zero_eps[1] == doctest::Approx(0.25));

    auto standardized = reparameterize({0.0}, {1.0}, {1.7});
    CHECK(standardized[0] == doctest::Approx(1.7));

    CHECK_THROWS_AS(reparameterize({0.0}, {-1.0}, {0.0}), std::invalid_argument);

    Rng rng(4);
    std::vector<double> eps_out;
    auto drawn = reparameterize({0.0, 0.0}, {1.0, 1.0}, rng, &eps_out);
    CHECK(drawn == eps_out);
}

TEST_CASE("reparameterize gradients match finite differences away from zero variance") {
    Rng rng(6);
    std::vector<double> mean = rng.normal_vector(3);
    std::vector<double> variance{0.5, 1.5, 2.0};
    std::vector<double> eps = rng.normal_vector(3);
    const auto probe = rng.normal_vector(3);
    auto loss_of = [&]() { return dot(reparameterize(mean, variance, eps), probe); };
    auto grads = reparameterize_backward(probe, variance, eps);
    CHECK(grad_check(loss_of, mean, grads.mean_grad).max_rel_error < 1e-4);
    CHECK(grad_check(loss_of, variance, grads.variance_grad).max_rel_error < 1e-4);
}

TEST_CASE("dropout_mask is inverted dropout") {
    Rng rng(2);
    auto mask = dropout_mask(1000, 0.4, rng);
    std::size_t zeros = 0;
    for (double m : mask) {
        if (m == 0.0) {
            ++zeros;
        } else {
            CHECK(m == doctest::Approx(1.0 / 0.6));
        }
    }
    CHECK(zeros > 300);
    CHECK(zeros < 500);

    auto keep_all = dropout_mask(10, 0.0, rng);
    for (double m : keep_all) CHECK(m == doctest::Approx(1.0));
}

TEST_CASE("grad_check on a linear least-squares model is tight") {
    Rng rng(12);
    std::vector<double> w = rng.normal_vector(5);
    const auto x = rng.normal_vector(5);
    const double y = 2.0;
    auto loss_of = [&]() {
        const double e = dot(w, x) - y;
        return e * e;
    };
    std::vector<double> analytic(5);
    const double e = dot(w, x) - y;
    for (std::size_t i = 0; i < 5; ++i) analytic[i] = 2.0 * e * x[i];
    CHECK(grad_check(loss_of, w, analytic).max_rel_error < 1e-6);
}

TEST_CASE("grad_check rejects non-finite losses and flags wrong gradients") {
    std::vector<double> w{1.0};
    auto bad_loss = [&]() { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(grad_check(bad_loss, w, std::vector<double>{0.0}), std::runtime_error);

    auto loss_of = [&]() { return w[0] * w[0]; };
    const auto report = grad_check(loss_of, w, std::vector<double>{7.0});  // truth: 2w = 2
    CHECK(report.max_rel_error > 0.5);
}
