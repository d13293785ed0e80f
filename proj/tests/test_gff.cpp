#include "doctest.h"

#include <cmath>
#include <set>

#include "ll/gff.hpp"

using namespace ll;

namespace {

// independent conjugate-gradient solve of the interior Laplace system
std::vector<double> cg_solve(const Lattice& dom, const std::vector<double>& rhs) {
    const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int r = 0; r < dom.n_interior(); ++r) {
            int s = dom.interior_sites()[r];
            int i = s % dom.nx(), j = s / dom.nx();
            double acc = 4.0 * v[r];
            for (int d = 0; d < 4; ++d) {
                int t = dom.site(i + di[d], j + dj[d]);
                if (dom.kind(t) == Lattice::kInterior)
                    acc -= v[dom.interior_index(t)];
            }
            out[r] = acc;
        }
    };
    std::vector<double> x(rhs.size(), 0.0), res = rhs, p = rhs, ap(rhs.size());
    double rr = 0.0;
    for (double v : res) rr += v * v;
    for (int it = 0; it < 20000 && rr > 1e-26; ++it) {
        apply(p, ap);
        double pap = 0.0;
        for (size_t k = 0; k < p.size(); ++k) pap += p[k] * ap[k];
        double alpha = rr / pap;
        for (size_t k = 0; k < p.size(); ++k) {
            x[k] += alpha * p[k];
            res[k] -= alpha * ap[k];
        }
        double rr2 = 0.0;
        for (double v : res) rr2 += v * v;
        double beta = rr2 / rr;
        rr = rr2;
        for (size_t k = 0; k < p.size(); ++k) p[k] = res[k] + beta * p[k];
    }
    return x;
}

int center_index(const Lattice& dom) {
    double cx = 0, cy = 0;
    for (int s : dom.interior_sites()) {
        cx += dom.site_x(s);
        cy += dom.site_y(s);
    }
    cx /= dom.n_interior();
    cy /= dom.n_interior();
    int best = 0;
    double bd = 1e300;
    for (int r = 0; r < dom.n_interior(); ++r) {
        int s = dom.interior_sites()[r];
        double d = std::hypot(dom.site_x(s) - cx, dom.site_y(s) - cy);
        if (d < bd) {
            bd = d;
            best = r;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("lattice construction and validation") {
    auto disc = Lattice::disc(16);
    CHECK(disc.n_interior() > 700);
    for (int s : disc.interior_sites()) {
        int i = s % disc.nx(), j = s / disc.nx();
        CHECK(disc.kind(i + 1, j) != Lattice::kOutside);
        CHECK(disc.kind(i - 1, j) != Lattice::kOutside);
        CHECK(disc.kind(i, j + 1) != Lattice::kOutside);
        CHECK(disc.kind(i, j - 1) != Lattice::kOutside);
    }
    auto half = Lattice::half_disc(16, -kLambda, kLambda);
    CHECK(half.n_interior() > 350);
    CHECK_THROWS(Lattice(0.1, -1.0, 1.0, -1.0, 1.0,
                         [](double x, double) { return std::fabs(x) > 0.5; },
                         [](double, double) { return 0.0; }));
}

TEST_CASE("field variance matches the discrete Green diagonal") {
    auto sq = Lattice::rectangle(63, 63, 1.0 / 64.0);
    int c = center_index(sq);
    auto col = sq.laplacian_inverse_column(c);
    std::vector<double> e(sq.n_interior(), 0.0);
    e[c] = 1.0;
    auto col_cg = cg_solve(sq, e);
    CHECK(std::fabs(col[c] - col_cg[c]) < 1e-10);
    double var = 2.0 * kPi * col[c];
    CHECK(var > std::log(64.0) * 0.8);
    CHECK(var < std::log(64.0) * 1.6);
}

TEST_CASE("two-point covariance approximates the continuum Green function") {
    auto dom = Lattice::half_disc(48, 0.0, 0.0);
    Cpx z(-0.2, 0.45), w0(0.25, 0.5);
    int iz = -1, iw = -1;
    double bz = 1e300, bw = 1e300;
    for (int r = 0; r < dom.n_interior(); ++r) {
        int s = dom.interior_sites()[r];
        Cpx p(dom.site_x(s), dom.site_y(s));
        if (std::abs(p - z) < bz) { bz = std::abs(p - z); iz = r; }
        if (std::abs(p - w0) < bw) { bw = std::abs(p - w0); iw = r; }
    }
    auto col = dom.laplacian_inverse_column(iz);
    double cov = 2.0 * kPi * col[iw];
    int sz = dom.interior_sites()[iz], sw = dom.interior_sites()[iw];
    Cpx pz(dom.site_x(sz), dom.site_y(sz)), pw(dom.site_x(sw), dom.site_y(sw));
    double cont = green_domain(pz, pw, half_disc_to_halfplane);
    CHECK(std::abs(pz - pw) > 8.0 * dom.h());
    CHECK(std::fabs(cov - cont) / cont < 0.10);
}

TEST_CASE("field sampling: determinism, mean, boundary data") {
    auto dom = Lattice::disc(24, 0.75);
    auto f1 = sample_dgff(dom, 99);
    auto f2 = sample_dgff(dom, 99);
    bool same = true;
    for (size_t k = 0; k < f1.interior_value.size(); ++k)
        same = same && f1.interior_value[k] == f2.interior_value[k];
    CHECK(same);

    int c = center_index(dom);
    double acc = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
        auto f = sample_dgff(dom, Rng::child_seed(1, r));
        acc += f.interior_value[c];
    }
    acc /= reps;
    double sd = std::sqrt(2.0 * kPi * dom.laplacian_inverse_column(c)[c] / reps);
    CHECK(std::fabs(acc - 0.75) < 3.5 * sd);
}

TEST_CASE("circle averages") {
    auto dom = Lattice::disc(48);

    SUBCASE("constant field averages to the constant") {
        DiscreteField f;
        f.domain = &dom;
        f.interior_value.assign(dom.n_interior(), 3.14);
        CHECK(circle_average(f, Cpx(0, 0), 0.25) == doctest::Approx(3.14));
    }
    SUBCASE("harmonic field satisfies the mean value property") {
        DiscreteField f;
        f.domain = &dom;
        f.interior_value.resize(dom.n_interior());
        for (int r = 0; r < dom.n_interior(); ++r) {
            int s = dom.interior_sites()[r];
            f.interior_value[r] = 2.0 * dom.site_x(s) - 0.5 * dom.site_y(s) + 1.0;
        }
        double expect = f.interior_value[center_index(dom)];
        CHECK(circle_average(f, Cpx(0, 0), 0.3) == doctest::Approx(expect).epsilon(0.02));
    }
    SUBCASE("variance grows by log 2 per halving of the radius") {
        const int reps = 600;
        double s1 = 0, s2 = 0, q1 = 0, q2 = 0;
        for (int r = 0; r < reps; ++r) {
            auto f = sample_dgff(dom, Rng::child_seed(7, r));
            double a1 = circle_average(f, Cpx(0, 0), 0.125);
            double a2 = circle_average(f, Cpx(0, 0), 0.25);
            s1 += a1;
            q1 += a1 * a1;
            s2 += a2;
            q2 += a2 * a2;
        }
        double v1 = q1 / reps - (s1 / reps) * (s1 / reps);
        double v2 = q2 / reps - (s2 / reps) * (s2 / reps);
        CHECK(v1 - v2 == doctest::Approx(std::log(2.0)).epsilon(0.15));
    }
    SUBCASE("shell leaving the domain is a geometry error") {
        DiscreteField f;
        f.domain = &dom;
        f.interior_value.assign(dom.n_interior(), 0.0);
        CHECK_THROWS(circle_average(f, Cpx(0.8, 0), 0.5));
        CHECK_THROWS(circle_average(f, Cpx(0, 0), 2.0 * dom.h()));
    }
}

TEST_CASE("deterministic symmetric field has a straight interface") {
    auto dom = Lattice::half_disc(32, -kLambda, kLambda);
    DiscreteField f;
    f.domain = &dom;
    f.interior_value = dom.harmonic_mean();
    int start = dom.nearest_corner(0.0, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);
    auto line = extract_level_line(f, 0.0, start, target);
    CHECK(line.walk.reached_stop);
    for (const auto& p : line.points) CHECK(std::fabs(p.real()) < 1e-12);
}

TEST_CASE("level line determinism and interface sign invariant") {
    auto dom = Lattice::half_disc(32, -kLambda, kLambda);
    auto f = sample_dgff(dom, 4242);
    int start = dom.nearest_corner(0.0, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);
    auto a = extract_level_line(f, 0.0, start, target);
    auto b = extract_level_line(f, 0.0, start, target);
    CHECK(a.walk.corners == b.walk.corners);
    CHECK(a.walk.reached_stop);

    const int cnx = dom.corner_nx();
    for (size_t k = 0; k < a.walk.dirs.size(); ++k) {
        int c = a.walk.corners[k];
        int ci = c % cnx, cj = c / cnx;
        int d = a.walk.dirs[k];
        int li, lj, ri, rj;
        switch (d) {
            case 0: li = ci - 1; lj = cj; ri = ci; rj = cj; break;
            case 1: li = ci; lj = cj; ri = ci; rj = cj - 1; break;
            case 2: li = ci; lj = cj - 1; ri = ci - 1; rj = cj - 1; break;
            default: li = ci - 1; lj = cj - 1; ri = ci - 1; rj = cj; break;
        }
        auto sign_of = [&](int i, int j) -> int {
            if (!dom.in_grid(i, j)) return 0;
            int s = dom.site(i, j);
            if (dom.kind(s) == Lattice::kInterior)
                return f.interior_value[dom.interior_index(s)] >= 0.0 ? 1 : -1;
            if (dom.kind(s) == Lattice::kRing)
                return dom.boundary_value(s) >= 0.0 ? 1 : -1;
            return 0;
        };
        if (sign_of(li, lj) != 0) CHECK(sign_of(li, lj) == -1);
        if (sign_of(ri, rj) != 0) CHECK(sign_of(ri, rj) == +1);
    }
}

TEST_CASE("reversibility: the level line of -h from the far end retraces exactly") {
    auto dom = Lattice::half_disc(24, -kLambda, kLambda);
    auto domr = Lattice::half_disc(24, kLambda, -kLambda);  // boundary of -h
    int start = dom.nearest_corner(0.0, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);
    for (int r = 0; r < 25; ++r) {
        auto f = sample_dgff(dom, Rng::child_seed(17, r));
        DiscreteField g;
        g.domain = &domr;
        g.interior_value = f.interior_value;
        for (auto& v : g.interior_value) v = -v;
        auto fwd = extract_level_line(f, 0.0, start, target);
        auto rev = extract_level_line(g, 0.0, target, start);
        REQUIRE(fwd.walk.reached_stop);
        REQUIRE(rev.walk.reached_stop);
        auto ef = edge_set(dom, fwd.walk);
        auto er = edge_set(domr, rev.walk);
        REQUIRE(ef.size() == er.size());
        CHECK(ef == er);
    }
}

TEST_CASE("monotonicity: higher heights stay weakly left") {
    auto dom = Lattice::half_disc(24, -kLambda, kLambda);
    int start = dom.nearest_corner(0.0, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);
    const int cnx = dom.corner_nx();

    auto right_region = [&](const WalkResult& w) {
        std::set<uint64_t> blocked;
        for (size_t k = 0; k < w.dirs.size(); ++k)
            blocked.insert(edge_key(dom, w.corners[k], w.dirs[k]));
        std::vector<uint8_t> seen(dom.nx() * dom.ny(), 0);
        std::vector<int> stack;
        for (int s = 0; s < dom.nx() * dom.ny(); ++s) {
            if (dom.kind(s) != Lattice::kInterior) continue;
            if (dom.site_x(s) > 0.8) {
                seen[s] = 1;
                stack.push_back(s);
            }
        }
        const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
        auto dual_blocked = [&](int i, int j, int d) {
            int corner, dir;
            if (d == 0) { corner = (j + 1) * cnx + i; dir = 1; }
            else if (d == 1) { corner = j * cnx + (i + 1); dir = 0; }
            else if (d == 2) { corner = j * cnx + i; dir = 1; }
            else { corner = j * cnx + i; dir = 0; }
            return blocked.count(edge_key(dom, corner, static_cast<uint8_t>(dir))) > 0;
        };
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            int i = s % dom.nx(), j = s / dom.nx();
            for (int d = 0; d < 4; ++d) {
                int ii = i + di[d], jj = j + dj[d];
                if (!dom.in_grid(ii, jj)) continue;
                int t = dom.site(ii, jj);
                if (dom.kind(t) != Lattice::kInterior || seen[t]) continue;
                if (dual_blocked(i, j, d)) continue;
                seen[t] = 1;
                stack.push_back(t);
            }
        }
        return seen;
    };

    for (int r = 0; r < 25; ++r) {
        auto f = sample_dgff(dom, Rng::child_seed(23, r));
        auto lo = extract_level_line(f, -kLambda / 2, start, target);
        auto hi = extract_level_line(f, kLambda / 2, start, target);
        REQUIRE(lo.walk.reached_stop);
        REQUIRE(hi.walk.reached_stop);
        auto r_lo = right_region(lo.walk);
        auto r_hi = right_region(hi.walk);
        size_t viol = 0;
        for (size_t s = 0; s < r_lo.size(); ++s)
            if (r_lo[s] && !r_hi[s]) ++viol;
        CHECK(viol == 0);
    }
}

TEST_CASE("merging: same-height lines from two starts share their suffix") {
    auto dom = Lattice(1.0 / 24.0, (0.5 - 24) / 24.0, (24 - 0.5) / 24.0, 0.5 / 24.0, 1.0,
                       [](double x, double y) { return x * x + y * y < 1.0 && y > 0; },
                       [](double x, double y) {
                           if (y > 0.1) return x < 0 ? -kLambda : kLambda;  // arc
                           if (x < -0.3) return -kLambda;
                           if (x > 0.3) return kLambda;
                           return 0.0;
                       });
    int s1 = dom.nearest_corner(-0.3, 0.0);
    int s2 = dom.nearest_corner(0.3, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);
    int merged = 0;
    for (int r = 0; r < 25; ++r) {
        auto f = sample_dgff(dom, Rng::child_seed(29, r));
        auto a = extract_level_line(f, 0.0, s1, target);
        auto b = extract_level_line(f, 0.0, s2, target);
        REQUIRE(a.walk.reached_stop);
        REQUIRE(b.walk.reached_stop);
        auto dir_edges = [&](const WalkResult& w) {
            std::vector<std::pair<int, uint8_t>> out;
            for (size_t k = 0; k < w.dirs.size(); ++k)
                out.emplace_back(w.corners[k], w.dirs[k]);
            return out;
        };
        auto ea = dir_edges(a.walk), eb = dir_edges(b.walk);
        std::set<std::pair<int, uint8_t>> in_b(eb.begin(), eb.end());
        size_t ka = 0;
        while (ka < ea.size() && !in_b.count(ea[ka])) ++ka;
        if (ka == ea.size()) continue;
        ++merged;
        size_t kb = 0;
        while (kb < eb.size() && eb[kb] != ea[ka]) ++kb;
        REQUIRE(kb < eb.size());
        REQUIRE(ea.size() - ka == eb.size() - kb);
        bool same = true;
        for (size_t j = 0; ka + j < ea.size(); ++j) same = same && ea[ka + j] == eb[kb + j];
        CHECK(same);
    }
    CHECK(merged > 5);
}

TEST_CASE("height-varying level lines") {
    auto dom = Lattice::half_disc(24, -kLambda, kLambda);
    auto f = sample_dgff(dom, 555);
    int start = dom.nearest_corner(0.0, 0.0);
    int target = dom.nearest_corner(0.0, 1.0);

    SUBCASE("single height reduces to the plain level line") {
        auto plain = extract_level_line(f, 0.3, start, target);
        auto hv = extract_height_varying(f, {0.3}, {}, start, target);
        CHECK(plain.walk.corners == hv.walk.corners);
    }
    SUBCASE("immediate switch equals the single-height line") {
        auto hv = extract_height_varying(f, {0.0, 0.4}, {0}, start, target);
        auto single = extract_level_line(f, 0.4, start, target);
        CHECK(hv.walk.corners == single.walk.corners);
    }
    SUBCASE("height gap of 2 lambda or more is rejected") {
        CHECK_THROWS(extract_height_varying(f, {-kLambda, kLambda}, {5}, start, target));
    }
    SUBCASE("stages are spliced at the change step") {
        auto hv = extract_height_varying(f, {0.0, 0.2}, {10}, start, target);
        auto first = extract_level_line(f, 0.0, start, target);
        for (size_t k = 0; k < 10 && k < hv.walk.corners.size(); ++k)
            CHECK(hv.walk.corners[k] == first.walk.corners[k]);
    }
}

TEST_CASE("driving function of the deterministic interface is near zero") {
    auto dom = Lattice::half_disc(64, -kLambda, kLambda);
    DiscreteField f;
    f.domain = &dom;
    f.interior_value = dom.harmonic_mean();
    auto line = extract_level_line(f, 0.0, dom.nearest_corner(0, 0), dom.nearest_corner(0, 1));
    REQUIRE(line.walk.reached_stop);
    auto r = driving_function_of_interface(line.points, half_disc_to_halfplane, 0.0);
    REQUIRE(r.ok);
    double sup = 0.0;
    for (double w : r.driver.values) sup = std::max(sup, std::fabs(w));
    CHECK(sup < 0.05);
}

TEST_CASE("driving function translation covariance") {
    std::vector<Cpx> slit, slit2;
    for (int k = 0; k <= 100; ++k) {
        slit.emplace_back(0.0, 0.4 * k / 100.0);
        slit2.emplace_back(0.7, 0.4 * k / 100.0);
    }
    auto id = [](Cpx z) { return z; };
    auto a = driving_function_of_interface(slit, id, 0.0);
    auto b = driving_function_of_interface(slit2, id, 0.0);
    REQUIRE(a.ok);
    REQUIRE(b.ok);
    for (size_t k = 0; k < a.driver.values.size(); ++k)
        CHECK(b.driver.values[k] - a.driver.values[k] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("grid conformal radius oracle") {
    std::vector<Cpx> poly;
    for (int k = 0; k < 256; ++k) poly.push_back(std::polar(1.0, 2.0 * kPi * k / 256));
    double l0 = log_conformal_radius_polygon(poly, Cpx(0, 0), 128);
    CHECK(std::fabs(l0 - 0.0) < 5e-3);
    double lx = log_conformal_radius_polygon(poly, Cpx(0.4, 0), 128);
    CHECK(std::fabs(lx - std::log(1.0 - 0.16)) < 5e-3);

    std::vector<Cpx> hd;
    for (int k = 0; k <= 128; ++k) hd.push_back(std::polar(1.0, kPi * k / 128));
    hd.emplace_back(-1.0, 0.0);
    Cpx z(0.1, 0.5);
    Cpx p = half_disc_to_halfplane(z);
    Cpx dp = (half_disc_to_halfplane(z + Cpx(1e-6, 0)) -
              half_disc_to_halfplane(z - Cpx(1e-6, 0))) / Cpx(2e-6, 0);
    double exact = std::log(2.0 * p.imag() / std::abs(dp));
    double est = log_conformal_radius_polygon(hd, z, 128);
    CHECK(std::fabs(est - exact) < 5e-3);
}
