#include <doctest.h>

#include <cmath>
#include <random>

#include "cabandit/errors.hpp"
#include "cabandit/glm.hpp"
#include "cabandit/kernel.hpp"

using namespace cabandit;

namespace {

Vector random_ball(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> n;
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = n(gen);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return v / v.norm() * u(gen);
}

Context ctx(double a, double b) {
    Vector v(2);
    v << a, b;
    return Context(v);
}

}  // namespace

TEST_CASE("rbf kernel") {
    const KernelSpec k{3.0};
    const Context x = ctx(0.6, 0.0);
    CHECK(kernel_eval(k, x, x) == 1.0);

    // distance 3 at sigma 3 is only reachable outside the unit ball, so evaluate on raw vectors
    Vector a(1), b(1);
    a << 0.0;
    b << 3.0;
    CHECK(k(a, b) == doctest::Approx(0.606531).epsilon(1e-6 / 0.606531));

    const Context y = ctx(-0.2, 0.5);
    CHECK(kernel_eval(k, x, y) == kernel_eval(k, y, x));
    CHECK(kernel_eval(k, x, y) < 1.0);
    CHECK_THROWS_AS(k(a, Vector::Zero(2)), ArgumentError);
}

TEST_CASE("exploration bonus worked values") {
    KlrState s(KernelSpec{3.0}, 1.0);
    const Context x = ctx(0.1, 0.2);
    CHECK(exploration_bonus(s, x) == doctest::Approx(1.0).epsilon(1e-12));
    s.add_point(x, 1);
    CHECK(std::abs(exploration_bonus(s, x) - 0.707107) <= 1e-6);
    s.add_point(x, 0);
    CHECK(std::abs(exploration_bonus(s, x) - 0.577350) <= 1e-6);
}

TEST_CASE("bonus never grows with the support and stays in range") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 1 + trial % 3;
        const double beta = 0.5 + trial % 3;
        KlrState s(KernelSpec{1.0 + trial % 4}, beta);
        const Context q(random_ball(gen, d));
        double prev = exploration_bonus(s, q);
        for (int i = 0; i < 15; ++i) {
            s.add_point(random_ball(gen, d), i % 2);
            const double b = exploration_bonus(s, q);
            CHECK(b <= prev + 1e-9);
            CHECK(b >= 0.0);
            CHECK(b <= 1.0 / std::sqrt(beta) + 1e-12);
            prev = b;
        }
    }
}

TEST_CASE("incremental Cholesky equals factorization from scratch") {
    std::mt19937_64 gen(2);
    KlrState s(KernelSpec{3.0}, 1.0);
    for (int i = 0; i < 200; ++i) {
        s.add_point(random_ball(gen, 4), i % 2);
        if (i % 40 == 39 || i == 199) {
            Matrix reg = s.gram();
            reg.diagonal().array() += 1.0;
            const Matrix L = reg.llt().matrixL();
            CHECK((s.chol() - L).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((s.chol() * s.chol().transpose() - reg).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((s.gram() - s.gram().transpose()).cwiseAbs().maxCoeff() == 0.0);
            CHECK(s.gram().diagonal().minCoeff() == 1.0);
            CHECK(s.gram().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("KLR fit") {
    SUBCASE("single success") {
        KlrState s(KernelSpec{3.0}, 1.0);
        s.add_point(ctx(0.3, 0.3), 1);
        const Vector w = fit_klr(s);
        // root of -(1 - mu(w)) + 2w = 0, computed independently by bracketing
        CHECK(std::abs(w[0] - 0.2223234712780952) <= 1e-6);
    }
    SUBCASE("label symmetry") {
        KlrState s(KernelSpec{3.0}, 1.0);
        const Context x = ctx(0.5, -0.1);
        s.add_point(x, 1);
        s.add_point(x, 0);
        s.fit();
        CHECK(std::abs(s.score(x.features())) <= 1e-9);
        CHECK(klr_predict(s, x, 0.0, 0.0) == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("gradient matches finite differences and the fit minimizes") {
        std::mt19937_64 gen(6);
        const double h = 1e-5;
        for (int trial = 0; trial < 10; ++trial) {
            KlrState s(KernelSpec{3.0}, 1.0);
            for (int i = 0; i < 3 + trial; ++i) s.add_point(random_ball(gen, 3), static_cast<int>(gen() % 2));
            Vector w(static_cast<Eigen::Index>(s.size()));
            std::normal_distribution<double> n;
            for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = n(gen);
            const Vector g = s.gradient(w);
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                Vector wp = w, wm = w;
                wp[i] += h;
                wm[i] -= h;
                const double fd = (s.objective(wp) - s.objective(wm)) / (2 * h);
                CHECK(std::abs(fd - g[i]) <= 1e-4 * std::max(1.0, std::abs(g[i])));
            }
            s.fit();
            CHECK(s.gradient(s.weights()).norm() <= 1e-6);
            CHECK(s.objective(s.weights()) <= s.objective(Vector::Zero(w.size())));
        }
    }
    SUBCASE("repeated support points") {
        KlrState s(KernelSpec{3.0}, 1.0);
        const Context x = ctx(0.0, 0.4);
        for (int i = 0; i < 30; ++i) s.add_point(x, i % 5 != 0);
        CHECK_NOTHROW(s.fit());
        CHECK(klr_predict(s, x, 0.0, 0.0) > 0.5);
    }
    SUBCASE("empty state") {
        KlrState s(KernelSpec{3.0}, 1.0);
        CHECK_THROWS_AS(fit_klr(s), StateError);
        CHECK(klr_predict(s, ctx(0.1, 0.1), 0.0, 0.0) == 0.5);
    }
}

TEST_CASE("klr_predict monotone in bonus and reduces to plug-in") {
    std::mt19937_64 gen(41);
    KlrState s(KernelSpec{3.0}, 1.0);
    for (int i = 0; i < 10; ++i) s.add_point(random_ball(gen, 2), i % 3 == 0);
    s.fit();
    const Context q(random_ball(gen, 2));
    CHECK(klr_predict(s, q, 0.0, 5.0) == sigmoid(s.score(q.features())));
    double prev = 0.0;
    for (double b : {0.0, 0.2, 0.5, 1.0}) {
        const double v = klr_predict(s, q, 2.0, b);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("removing support points refactors") {
    std::mt19937_64 gen(12);
    KlrState s(KernelSpec{3.0}, 1.0);
    for (int i = 0; i < 8; ++i) s.add_point(random_ball(gen, 2), i % 2);
    s.fit();
    s.remove_point(3);
    CHECK(s.size() == 7);
    Matrix reg = s.gram();
    reg.diagonal().array() += 1.0;
    CHECK((s.chol() * s.chol().transpose() - reg).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(s.weights().size() == 7);
    CHECK_THROWS_AS(s.remove_point(7), ArgumentError);
}
