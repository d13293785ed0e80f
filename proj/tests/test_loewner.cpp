#include "doctest.h"

#include <cmath>

#include "ll/loewner.hpp"
#include "ll/rng.hpp"

using namespace ll;

namespace {

DriverPath zero_driver(double horizon, int steps) {
    DriverPath d;
    for (int k = 0; k <= steps; ++k) {
        d.times.push_back(horizon * k / steps);
        d.values.push_back(0.0);
    }
    return d;
}

DriverPath brownian_driver(double horizon, double dt, double kappa, uint64_t seed) {
    Rng rng(seed);
    DriverPath d;
    d.times.push_back(0.0);
    d.values.push_back(0.0);
    double t = 0.0, w = 0.0;
    while (t < horizon - 1e-15) {
        double h = std::min(dt, horizon - t);
        w += std::sqrt(kappa * h) * rng.gauss();
        t += h;
        d.times.push_back(t);
        d.values.push_back(w);
    }
    return d;
}

}  // namespace

TEST_CASE("chordal closed form for the zero driver") {
    ChordalChain chain(zero_driver(1.0, 1000));
    // g_t(z) = sqrt(z^2 + 4t); before its swallow time for z = i (the slit
    // passes through i at t = 1/4)
    auto g = chain.evolve(Cpx(0, 1), 0.2);
    REQUIRE(g);
    CHECK(std::abs(*g - std::sqrt(Cpx(-1.0, 0) + Cpx(0.8, 0))) < 1e-9);
    auto g2 = chain.evolve(Cpx(2, 0), 1.0);
    REQUIRE(g2);
    CHECK(std::abs(*g2 - Cpx(std::sqrt(8.0), 0)) < 1e-9);
    // just off the slit the closed form holds through t = 1
    auto g3 = chain.evolve(Cpx(1e-3, 1), 1.0);
    REQUIRE(g3);
    Cpx zoff(1e-3, 1);
    Cpx exact = std::sqrt(zoff * zoff + Cpx(4.0, 0));
    if (exact.imag() < 0) exact = -exact;
    CHECK(std::abs(*g3 - exact) < 1e-9);
    // 20-point grid agreement below 1e-6
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        Cpx z(-2.0 + 0.21 * k, 0.3 + 0.12 * k);
        auto gz = chain.evolve(z, 1.0);
        REQUIRE(gz);
        Cpx exact = std::sqrt(z * z + Cpx(4.0, 0));
        if (exact.imag() < 0) exact = -exact;
        worst = std::max(worst, std::abs(*gz - exact));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("tip swallowing and swallow times") {
    ChordalChain chain(zero_driver(1.0, 1000));
    CHECK(chain.swallow_time(Cpx(0, 0)) == doctest::Approx(0.0));
    CHECK(chain.swallow_time(Cpx(0, 1)) == doctest::Approx(0.25));  // slit reaches i
    CHECK(std::isinf(chain.swallow_time(Cpx(0.5, 1))));  // off the slit
    // points on the slit are swallowed when it passes them: the closed form
    // g_t(iy) = sqrt(4t - y^2) meets W = 0 at T = y^2/4 (bisection on the
    // closed form gives the same value)
    for (double y : {1e-3, 2e-3, 0.5}) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (4.0 * mid - y * y < 0.0 ? lo : hi) = mid;
        }
        double oracle = hi;
        CHECK(chain.swallow_time(Cpx(0, y)) == doctest::Approx(oracle).epsilon(1e-6));
    }
    CHECK(chain.swallow_time(Cpx(0, 1e-3)) < chain.swallow_time(Cpx(0, 2e-3)));
    // real points off the origin escape along R
    CHECK(std::isinf(chain.swallow_time(Cpx(1e-3, 0))));
}

TEST_CASE("hcap equals twice the horizon and matches the expansion") {
    ChordalChain chain(zero_driver(0.7, 700));
    CHECK(chain.hcap() == doctest::Approx(1.4));
    // large-z expansion g(z) - z ~ 2t/z
    auto g = chain.evolve(Cpx(0, 50), 0.7);
    REQUIRE(g);
    double est = ((*g - Cpx(0, 50)) * Cpx(0, 50)).real();
    CHECK(est == doctest::Approx(1.4).epsilon(1e-3));
}

TEST_CASE("semigroup composition consistency") {
    auto d = brownian_driver(1.0, 1e-3, 4.0, 77);
    ChordalChain chain(d);
    // evolving to t then from t to the end equals evolving directly
    DriverPath head, tail;
    size_t cut = d.times.size() / 2;
    double tc = d.times[cut];
    for (size_t k = 0; k <= cut; ++k) {
        head.times.push_back(d.times[k]);
        head.values.push_back(d.values[k]);
    }
    for (size_t k = cut; k < d.times.size(); ++k) {
        tail.times.push_back(d.times[k] - tc);
        tail.values.push_back(d.values[k]);
    }
    ChordalChain chain_head(head), chain_tail(tail);
    for (Cpx z : {Cpx(0.4, 0.8), Cpx(-1.2, 0.5), Cpx(0.1, 2.0)}) {
        auto g1 = chain_head.evolve(z, tc);
        REQUIRE(g1);
        auto g2 = chain_tail.evolve(*g1, d.times.back() - tc);
        auto g = chain.evolve(z, d.times.back());
        REQUIRE(g2);
        REQUIRE(g);
        CHECK(std::abs(*g2 - *g) < 1e-8);
    }
}

TEST_CASE("trace of the zero driver is a vertical slit of length 2 sqrt(t)") {
    ChordalChain chain(zero_driver(1.0, 2000));
    auto tr = chain.trace();
    Cpx tip = tr.back();
    CHECK(std::abs(tip - Cpx(0, 2.0)) < 1e-6);  // hcap of [0, iL] is L^2/4
    for (auto& p : tr) CHECK(std::fabs(p.real()) < 1e-9);
}

TEST_CASE("trace translation covariance and Brownian scaling") {
    auto d = brownian_driver(0.5, 5e-4, 4.0, 31);
    ChordalChain chain(d);
    auto tr = chain.trace();

    DriverPath shifted = d;
    for (auto& w : shifted.values) w += 3.0;
    auto tr2 = ChordalChain(shifted).trace();
    for (size_t k = 0; k < tr.size(); k += 50)
        CHECK(std::abs(tr2[k] - tr[k] - Cpx(3.0, 0)) < 1e-10);

    // scaling: driver c W_{t/c^2} traces c gamma(t/c^2)
    const double c = 2.0;
    DriverPath scaled;
    for (size_t k = 0; k < d.times.size(); ++k) {
        scaled.times.push_back(c * c * d.times[k]);
        scaled.values.push_back(c * d.values[k]);
    }
    auto tr3 = ChordalChain(scaled).trace();
    for (size_t k = 0; k < tr.size(); k += 50)
        CHECK(std::abs(tr3[k] - c * tr[k]) < 1e-9);
}

TEST_CASE("trace refinement convergence") {
    // halving the step should at least halve the distance to a fine reference
    auto hausdorff = [](const std::vector<Cpx>& a, const std::vector<Cpx>& b) {
        double worst = 0.0;
        for (size_t i = 0; i < a.size(); i += 7) {
            double best = 1e300;
            for (const auto& q : b) best = std::min(best, std::abs(a[i] - q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    auto fine = ChordalChain(brownian_driver(0.25, 1.5625e-5, 4.0, 5)).trace();
    auto coarse = ChordalChain(brownian_driver(0.25, 4e-4, 4.0, 5)).trace();
    auto half = ChordalChain(brownian_driver(0.25, 1e-4, 4.0, 5)).trace();
    double dc = hausdorff(coarse, fine), dh = hausdorff(half, fine);
    CHECK(dh < dc);
}

TEST_CASE("malformed drivers are rejected") {
    DriverPath bad;
    bad.times = {0.0, 0.5, 0.4};
    bad.values = {0, 0, 0};
    CHECK_THROWS(ChordalChain(bad));
    DriverPath bad2;
    bad2.times = {0.1, 0.2};
    bad2.values = {0, 0};
    CHECK_THROWS(ChordalChain(bad2));
}

TEST_CASE("radial chain basics") {
    // constant driver at angle 0
    DriverPath d;
    const int n = 400;
    for (int k = 0; k <= n; ++k) {
        d.times.push_back(0.5 * k / n);
        d.values.push_back(0.0);
    }
    RadialChain chain(d);

    SUBCASE("origin is fixed") {
        auto g = chain.evolve(Cpx(0, 0), 0.5);
        REQUIRE(g);
        CHECK(std::abs(*g) < 1e-14);
    }
    SUBCASE("points on the far axis follow the radial ODE sign") {
        // dg = g (1+g)/(1-g): negative at g in (-1, 0), so interior points on
        // the axis opposite the driver flow outward toward the fixed point -1
        auto g = chain.evolve(Cpx(-0.999, 0), 0.3);
        REQUIRE(g);
        CHECK(std::fabs(g->imag()) < 1e-12);
        CHECK(g->real() > -1.0);
        CHECK(g->real() < -0.999);
        auto g2 = chain.evolve(Cpx(-0.999, 0), 0.5);
        REQUIRE(g2);
        CHECK(g2->real() < g->real());  // |g| increases with t
        // -1 itself is fixed by the constant-driver flow
        auto gf = chain.evolve(Cpx(-1.0, 0), 0.5);
        REQUIRE(gf);
        CHECK(std::abs(*gf - Cpx(-1.0, 0)) < 1e-9);
        // a point near the driver is swallowed quickly
        CHECK_FALSE(chain.evolve(Cpx(0.9999, 0.001), 0.5));
    }
    SUBCASE("normalization g'(0) = e^t and boundary trace plausibility") {
        CHECK(chain.derivative_at_origin(0.5) == doctest::Approx(std::exp(0.5)));
        // numeric derivative at 0 via small probe
        auto g = chain.evolve(Cpx(1e-6, 0), 0.5);
        REQUIRE(g);
        CHECK(std::abs(*g) / 1e-6 == doctest::Approx(std::exp(0.5)).epsilon(1e-4));
        auto b = chain.boundary_trace(256);
        for (auto& p : b) CHECK(std::abs(p) < 1.0 + 1e-9);
    }
}

TEST_CASE("radial normalization holds for a rough driver") {
    Rng rng(17);
    DriverPath d;
    d.times.push_back(0.0);
    d.values.push_back(0.0);
    double t = 0.0, w = 0.0;
    while (t < 1.0 - 1e-12) {
        double h = 1e-4;
        w += 2.0 * std::sqrt(h) * rng.gauss();
        t += h;
        d.times.push_back(t);
        d.values.push_back(w);
    }
    RadialChain chain(d);
    auto g = chain.evolve(Cpx(1e-7, 0), 1.0);
    REQUIRE(g);
    CHECK(std::abs(*g) / 1e-7 == doctest::Approx(std::exp(1.0)).epsilon(1e-5));
}

TEST_CASE("unzip recovers the driver of a vertical slit") {
    // slit at x = 0.5: driver should be constant 0.5, capacity L^2/4
    std::vector<Cpx> pts;
    const double L = 0.6;
    for (int k = 0; k <= 200; ++k) pts.emplace_back(0.5, L * k / 200.0);
    auto r = unzip_curve(pts);
    REQUIRE(r.ok);
    CHECK(r.driver.times.back() == doctest::Approx(L * L / 4.0).epsilon(1e-6));
    for (double w : r.driver.values) CHECK(w == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("unzip and chain are mutually inverse on a random trace") {
    auto d = brownian_driver(0.2, 1e-4, 4.0, 9);
    auto tr = ChordalChain(d).trace();
    auto r = unzip_curve(tr);
    REQUIRE(r.ok);
    CHECK(r.driver.times.back() == doctest::Approx(0.2).epsilon(0.02));
    // compare driver values at matching capacity times
    double worst = 0.0;
    for (size_t k = 0; k < r.driver.times.size(); k += 11) {
        double t = r.driver.times[k];
        size_t j = 0;
        while (j + 1 < d.times.size() && d.times[j + 1] <= t) ++j;
        worst = std::max(worst, std::fabs(r.driver.values[k] - d.values[j]));
    }
    CHECK(worst < 0.05);
}
