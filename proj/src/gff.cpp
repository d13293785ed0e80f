#include "ll/gff.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace ll {

// ---------------------------------------------------------------------------
// Lattice
// ---------------------------------------------------------------------------

struct Lattice::Factor {
    int n = 0, bw = 0;
    std::vector<double> band;  // row r, columns r-bw..r at band[r*(bw+1)+c-r+bw]

    double& at(int r, int c) { return band[static_cast<size_t>(r) * (bw + 1) + c - r + bw]; }
    double get(int r, int c) const {
        if (c < r - bw || c > r) return 0.0;
        return band[static_cast<size_t>(r) * (bw + 1) + c - r + bw];
    }

    void solve_lower(std::vector<double>& b) const {
        for (int r = 0; r < n; ++r) {
            double s = b[r];
            int c0 = std::max(0, r - bw);
            for (int c = c0; c < r; ++c) s -= get(r, c) * b[c];
            b[r] = s / get(r, r);
        }
    }
    void solve_upper(std::vector<double>& b) const {
        for (int r = n - 1; r >= 0; --r) {
            double s = b[r];
            int c1 = std::min(n - 1, r + bw);
            for (int c = r + 1; c <= c1; ++c) s -= get(c, r) * b[c];
            b[r] = s / get(r, r);
        }
    }
};

Lattice::Lattice(double h, double x_lo, double x_hi, double y_lo, double y_hi,
                 const std::function<bool(double, double)>& inside,
                 const std::function<double(double, double)>& boundary_value) {
    h_ = h;
    // two extra columns/rows of margin so that every interior site can carry
    // its ring neighbors inside the grid
    x0_ = x_lo - 2.0 * h;
    y0_ = y_lo - 2.0 * h;
    nx_ = static_cast<int>(std::floor((x_hi - x0_) / h)) + 3;
    ny_ = static_cast<int>(std::floor((y_hi - y0_) / h)) + 3;
    build(inside, boundary_value);
}

void Lattice::build(const std::function<bool(double, double)>& inside,
                    const std::function<double(double, double)>& boundary_value) {
    const int n = nx_ * ny_;
    kind_.assign(n, kOutside);
    bval_.assign(n, 0.0);
    iidx_.assign(n, -1);
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i)
            if (inside(x0_ + i * h_, y0_ + j * h_)) kind_[site(i, j)] = kInterior;
    // ring: outside sites 4-adjacent to the interior
    const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
    for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nx_; ++i) {
            if (kind_[site(i, j)] != kInterior) continue;
            for (int d = 0; d < 4; ++d) {
                int ii = i + di[d], jj = j + dj[d];
                if (!in_grid(ii, jj))
                    throw std::invalid_argument("lattice: interior touches the grid edge");
                if (kind_[site(ii, jj)] == kOutside) kind_[site(ii, jj)] = kRing;
            }
        }
    for (int s = 0; s < n; ++s)
        if (kind_[s] == kRing) bval_[s] = boundary_value(site_x(s), site_y(s));
    for (int s = 0; s < n; ++s)
        if (kind_[s] == kInterior) {
            iidx_[s] = static_cast<int>(interior_sites_.size());
            interior_sites_.push_back(s);
        }
    if (interior_sites_.empty()) throw std::invalid_argument("lattice: empty interior");
    // connectivity check
    std::vector<uint8_t> seen(n, 0);
    std::deque<int> q{interior_sites_[0]};
    seen[interior_sites_[0]] = 1;
    size_t cnt = 1;
    while (!q.empty()) {
        int s = q.front();
        q.pop_front();
        int i = s % nx_, j = s / nx_;
        for (int d = 0; d < 4; ++d) {
            int ii = i + di[d], jj = j + dj[d];
            if (!in_grid(ii, jj)) continue;
            int t = site(ii, jj);
            if (kind_[t] == kInterior && !seen[t]) {
                seen[t] = 1;
                ++cnt;
                q.push_back(t);
            }
        }
    }
    if (cnt != interior_sites_.size())
        throw std::invalid_argument("lattice: interior not connected");
}

Lattice Lattice::disc(int k, double boundary_value) {
    double h = 1.0 / k;
    double lo = (0.5 - k) * h;
    return Lattice(
        h, lo, -lo, lo, -lo, [](double x, double y) { return x * x + y * y < 1.0; },
        [boundary_value](double, double) { return boundary_value; });
}

Lattice Lattice::half_disc(int k, double left_value, double right_value) {
    double h = 1.0 / k;
    double xlo = (0.5 - k) * h;
    return Lattice(
        h, xlo, -xlo, 0.5 * h, 1.0,
        [](double x, double y) { return x * x + y * y < 1.0 && y > 0.0; },
        [left_value, right_value](double x, double) { return x < 0.0 ? left_value : right_value; });
}

Lattice Lattice::rectangle(int nxs, int nys, double h, double boundary_value) {
    return Lattice(
        h, h, nxs * h, h, nys * h, [=](double x, double y) {
            return x > 0.5 * h && x < (nxs + 0.5) * h && y > 0.5 * h && y < (nys + 0.5) * h;
        },
        [boundary_value](double, double) { return boundary_value; });
}

int Lattice::nearest_corner(double x, double y) const {
    int ci = static_cast<int>(std::lround((x - x0_) / h_ + 0.5));
    int cj = static_cast<int>(std::lround((y - y0_) / h_ + 0.5));
    ci = std::clamp(ci, 0, nx_);
    cj = std::clamp(cj, 0, ny_);
    return corner(ci, cj);
}

void Lattice::factorize() const {
    if (factor_) return;
    auto f = std::make_shared<Factor>();
    const int n = n_interior();
    int bw = 1;
    const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
    for (int s : interior_sites_) {
        int i = s % nx_, j = s / nx_;
        for (int d = 0; d < 4; ++d) {
            int t = site(i + di[d], j + dj[d]);
            if (kind_[t] == kInterior) bw = std::max(bw, std::abs(iidx_[t] - iidx_[s]));
        }
    }
    f->n = n;
    f->bw = bw;
    f->band.assign(static_cast<size_t>(n) * (bw + 1), 0.0);

    auto a_entry = [&](int r, int c) -> double {
        if (r == c) return 4.0;
        int s = interior_sites_[r], t = interior_sites_[c];
        int dx = std::abs(s % nx_ - t % nx_), dy = std::abs(s / nx_ - t / nx_);
        return (dx + dy == 1) ? -1.0 : 0.0;
    };
    for (int r = 0; r < n; ++r) {
        int c0 = std::max(0, r - bw);
        for (int c = c0; c <= r; ++c) {
            double s = a_entry(r, c);
            int k0 = std::max({0, r - bw, c - bw});
            for (int k = k0; k < c; ++k) s -= f->get(r, k) * f->get(c, k);
            if (c < r)
                f->at(r, c) = s / f->get(c, c);
            else
                f->at(r, r) = std::sqrt(s);
        }
    }
    factor_ = std::move(f);
}

std::vector<double> Lattice::harmonic_extension(
    const std::function<double(int)>& ring_value) const {
    factorize();
    const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
    std::vector<double> b(n_interior(), 0.0);
    for (int r = 0; r < n_interior(); ++r) {
        int s = interior_sites_[r];
        int i = s % nx_, j = s / nx_;
        for (int d = 0; d < 4; ++d) {
            int t = site(i + di[d], j + dj[d]);
            if (kind_[t] == kRing) b[r] += ring_value(t);
        }
    }
    factor_->solve_lower(b);
    factor_->solve_upper(b);
    return b;
}

std::vector<double> Lattice::harmonic_mean() const {
    return harmonic_extension([this](int s) { return bval_[s]; });
}

std::vector<double> Lattice::laplacian_inverse_column(int idx) const {
    factorize();
    std::vector<double> b(n_interior(), 0.0);
    b.at(idx) = 1.0;
    factor_->solve_lower(b);
    factor_->solve_upper(b);
    return b;
}

std::vector<double> Lattice::sample_inverse_laplacian(Rng& rng) const {
    factorize();
    std::vector<double> x(n_interior());
    for (auto& v : x) v = rng.gauss();
    factor_->solve_upper(x);  // L^T x = xi gives Cov(x) = (L L^T)^{-1}
    return x;
}

// ---------------------------------------------------------------------------
// Field sampling
// ---------------------------------------------------------------------------

DiscreteField sample_dgff(const Lattice& dom, uint64_t seed) {
    Rng rng(seed);
    DiscreteField f;
    f.domain = &dom;
    f.interior_value = dom.sample_inverse_laplacian(rng);
    const double scale = std::sqrt(2.0 * kPi);
    for (auto& v : f.interior_value) v *= scale;
    auto mean = dom.harmonic_mean();
    for (size_t i = 0; i < f.interior_value.size(); ++i) f.interior_value[i] += mean[i];
    return f;
}

DiscreteField DiscreteField::negated() const {
    DiscreteField g;
    g.domain = domain;
    g.interior_value = interior_value;
    for (auto& v : g.interior_value) v = -v;
    return g;
}

double circle_average(const DiscreteField& f, Cpx z, double eps) {
    const Lattice& dom = *f.domain;
    if (eps < 4.0 * dom.h())
        throw std::invalid_argument("circle_average: eps below 4 lattice spacings");
    double sum = 0.0;
    size_t cnt = 0;
    for (int s : dom.interior_sites()) {
        double dx = dom.site_x(s) - z.real(), dy = dom.site_y(s) - z.imag();
        double r = std::sqrt(dx * dx + dy * dy);
        if (std::fabs(r - eps) <= 0.5 * dom.h() * (1.0 + 1e-12)) {
            sum += f.interior_value[dom.interior_index(s)];
            ++cnt;
        }
    }
    if (cnt == 0) throw std::invalid_argument("circle_average: empty shell");
    // geometry check: the shell must not leak out of the domain
    for (double a = 0.0; a < 2.0 * kPi; a += 0.05) {
        double x = z.real() + eps * std::cos(a), y = z.imag() + eps * std::sin(a);
        int ci = static_cast<int>(std::lround((x - dom.site_x(0)) / dom.h()));
        int cj = static_cast<int>(std::lround((y - dom.site_y(0)) / dom.h()));
        if (!dom.in_grid(ci, cj) || dom.kind(ci, cj) == Lattice::kOutside)
            throw std::invalid_argument("circle_average: disc leaves the domain");
    }
    return sum / static_cast<double>(cnt);
}

// ---------------------------------------------------------------------------
// Interface walk
// ---------------------------------------------------------------------------

namespace {

constexpr int kDi[4] = {0, 1, 0, -1};
constexpr int kDj[4] = {1, 0, -1, 0};

// flanking sites of the edge leaving corner (ci, cj) in direction d,
// relative offsets (site coords)
inline void edge_flanks(int ci, int cj, int d, int& li, int& lj, int& ri, int& rj) {
    switch (d) {
        case 0: li = ci - 1; lj = cj; ri = ci; rj = cj; break;      // N
        case 1: li = ci; lj = cj; ri = ci; rj = cj - 1; break;      // E
        case 2: li = ci; lj = cj - 1; ri = ci - 1; rj = cj - 1; break;  // S
        default: li = ci - 1; lj = cj - 1; ri = ci - 1; rj = cj; break;  // W
    }
}

}  // namespace

WalkResult walk_interface(const Lattice& dom, const SiteView& view, int start_corner,
                          const std::function<bool(int)>& stop_corner, size_t max_steps) {
    const int cnx = dom.corner_nx();
    if (max_steps == 0)
        max_steps = static_cast<size_t>(8) * cnx * (dom.ny() + 1);

    auto sgn = [&](int i, int j) -> int {
        if (!dom.in_grid(i, j)) return 0;
        return view.sign(dom.site(i, j));
    };
    auto walkable = [&](int i, int j) -> bool {
        if (!dom.in_grid(i, j)) return false;
        return view.walkable(dom.site(i, j));
    };
    auto edge_valid = [&](int ci, int cj, int d) -> bool {
        int ni = ci + kDi[d], nj = cj + kDj[d];
        if (ni < 0 || ni > dom.nx() || nj < 0 || nj > dom.ny()) return false;
        int li, lj, ri, rj;
        edge_flanks(ci, cj, d, li, lj, ri, rj);
        if (sgn(li, lj) != -1 || sgn(ri, rj) != +1) return false;
        return walkable(li, lj) || walkable(ri, rj);
    };
    auto plaq_mean = [&](int ci, int cj) -> double {
        double m = 0.0;
        int cnt = 0;
        const int off[4][2] = {{0, 0}, {-1, 0}, {0, -1}, {-1, -1}};
        for (auto& o : off) {
            int i = ci + o[0], j = cj + o[1];
            if (dom.in_grid(i, j) && view.sign(dom.site(i, j)) != 0) {
                m += view.value(dom.site(i, j));
                ++cnt;
            }
        }
        return cnt ? m / cnt : 0.0;
    };

    WalkResult res;
    int ci = start_corner % cnx, cj = start_corner / cnx;
    res.corners.push_back(start_corner);

    // initial direction: first valid edge in N,E,S,W order
    int dir = -1;
    for (int d = 0; d < 4; ++d)
        if (edge_valid(ci, cj, d)) {
            dir = d;
            break;
        }
    if (dir < 0) {
        res.no_continuation = true;
        return res;
    }

    size_t steps = 0;
    for (;;) {
        if (++steps > max_steps) {
            res.budget_exceeded = true;
            return res;
        }
        res.dirs.push_back(static_cast<uint8_t>(dir));
        ci += kDi[dir];
        cj += kDj[dir];
        res.corners.push_back(cj * cnx + ci);
        if (stop_corner && stop_corner(cj * cnx + ci)) {
            res.reached_stop = true;
            return res;
        }
        // choose continuation
        int fli, flj, fri, frj;
        edge_flanks(ci, cj, dir, fli, flj, fri, frj);
        int sfl = sgn(fli, flj), sfr = sgn(fri, frj);
        int straight = dir, right = (dir + 1) % 4, left = (dir + 3) % 4;
        int chosen = -1;
        if (sfr == +1 && sfl == -1) {
            chosen = straight;
        } else if (sfr == -1 && sfl == -1) {
            chosen = right;
        } else if (sfr == +1 && sfl == +1) {
            chosen = left;
        } else if (sfr == -1 && sfl == +1) {
            chosen = plaq_mean(ci, cj) >= 0.0 ? left : right;
        } else {
            // an undefined flank: fall back to the first valid option
            for (int d : {straight, right, left})
                if (edge_valid(ci, cj, d)) {
                    chosen = d;
                    break;
                }
            if (chosen < 0) {
                res.no_continuation = true;
                return res;
            }
        }
        if (!edge_valid(ci, cj, chosen)) {
            res.no_continuation = true;
            return res;
        }
        dir = chosen;
    }
}

uint64_t edge_key(const Lattice& dom, int corner, uint8_t dir) {
    const int cnx = dom.corner_nx();
    int ci = corner % cnx, cj = corner / cnx;
    int ni = ci + kDi[dir], nj = cj + kDj[dir];
    int a = cj * cnx + ci, b = nj * cnx + ni;
    uint64_t lo = static_cast<uint64_t>(std::min(a, b));
    uint64_t axis = (dir == 0 || dir == 2) ? 1 : 0;
    return lo * 2 + axis;
}

std::vector<uint64_t> edge_set(const Lattice& dom, const WalkResult& w) {
    std::vector<uint64_t> keys;
    keys.reserve(w.dirs.size());
    for (size_t k = 0; k < w.dirs.size(); ++k)
        keys.push_back(edge_key(dom, w.corners[k], w.dirs[k]));
    std::sort(keys.begin(), keys.end());
    return keys;
}

// ---------------------------------------------------------------------------
// Level lines
// ---------------------------------------------------------------------------

namespace {

// arc side of a ring site relative to start/target corners, by centroid angle:
// returns +1 on the ccw arc from start to target, -1 otherwise
int arc_side(const Lattice& dom, double cx, double cy, double a_start, double a_target,
             int s) {
    double a = std::atan2(dom.site_y(s) - cy, dom.site_x(s) - cx);
    auto ccw_dist = [](double from, double to) {
        double d = to - from;
        while (d < 0.0) d += 2.0 * kPi;
        while (d >= 2.0 * kPi) d -= 2.0 * kPi;
        return d;
    };
    return ccw_dist(a_start, a) < ccw_dist(a_start, a_target) ? +1 : -1;
}

}  // namespace

LevelLineResult extract_level_line(const DiscreteField& f, double u, int start_corner,
                                   int target_corner) {
    const Lattice& dom = *f.domain;
    // domain centroid for the arc rule
    double cx = 0.0, cy = 0.0;
    for (int s : dom.interior_sites()) {
        cx += dom.site_x(s);
        cy += dom.site_y(s);
    }
    cx /= dom.n_interior();
    cy /= dom.n_interior();
    double a_start = std::atan2(dom.corner_y(start_corner) - cy, dom.corner_x(start_corner) - cx);
    double a_target =
        std::atan2(dom.corner_y(target_corner) - cy, dom.corner_x(target_corner) - cx);

    SiteView view;
    view.sign = [&, u, cx, cy, a_start, a_target](int s) -> int {
        auto k = dom.kind(s);
        if (k == Lattice::kOutside) return 0;
        if (k == Lattice::kInterior)
            return f.interior_value[dom.interior_index(s)] + u >= 0.0 ? +1 : -1;
        double b = dom.boundary_value(s) + u;
        if (b >= kLambda - 1e-12) return +1;
        if (b <= -kLambda + 1e-12) return -1;
        return arc_side(dom, cx, cy, a_start, a_target, s);
    };
    view.value = [&, u](int s) -> double {
        auto k = dom.kind(s);
        if (k == Lattice::kInterior) return f.interior_value[dom.interior_index(s)] + u;
        double b = dom.boundary_value(s) + u;
        if (std::fabs(b) < kLambda) return view.sign(s) * kLambda;
        return b;
    };
    view.walkable = [&](int s) { return dom.kind(s) == Lattice::kInterior; };

    LevelLineResult res;
    res.walk = walk_interface(dom, view, start_corner,
                              [&](int c) { return c == target_corner; });
    if (res.walk.corners.size() <= 1 && res.walk.no_continuation)
        res.threshold_at_start = true;
    res.points.reserve(res.walk.corners.size());
    for (int c : res.walk.corners)
        res.points.emplace_back(dom.corner_x(c), dom.corner_y(c));
    return res;
}

LevelLineResult extract_height_varying(const DiscreteField& f,
                                       const std::vector<double>& heights,
                                       const std::vector<size_t>& change_steps,
                                       int start_corner, int target_corner) {
    if (heights.empty()) throw std::invalid_argument("height-varying: no heights");
    if (change_steps.size() + 1 != heights.size())
        throw std::invalid_argument("height-varying: need one change step per height change");
    for (size_t i = 0; i < heights.size(); ++i)
        for (size_t j = i + 1; j < heights.size(); ++j)
            if (std::fabs(heights[i] - heights[j]) >= 2.0 * kLambda)
                throw std::invalid_argument("height-varying: height gap >= 2 lambda");

    const Lattice& dom = *f.domain;
    LevelLineResult acc;
    int cur = start_corner;
    for (size_t stage = 0; stage < heights.size(); ++stage) {
        LevelLineResult part = extract_level_line(f, heights[stage], cur, target_corner);
        size_t limit = (stage + 1 < heights.size())
                           ? std::min(change_steps[stage], part.walk.dirs.size())
                           : part.walk.dirs.size();
        if (stage == 0) acc.threshold_at_start = part.threshold_at_start;
        // splice [0, limit] of this stage
        size_t from = acc.walk.corners.empty() ? 0 : 1;
        for (size_t k = from; k <= limit && k < part.walk.corners.size(); ++k)
            acc.walk.corners.push_back(part.walk.corners[k]);
        for (size_t k = 0; k < limit && k < part.walk.dirs.size(); ++k)
            acc.walk.dirs.push_back(part.walk.dirs[k]);
        if (limit >= part.walk.dirs.size()) {
            acc.walk.reached_stop = part.walk.reached_stop;
            acc.walk.no_continuation = part.walk.no_continuation;
            if (stage + 1 < heights.size()) break;  // stage ended before its switch
        }
        cur = acc.walk.corners.empty() ? start_corner : acc.walk.corners.back();
    }
    acc.points.reserve(acc.walk.corners.size());
    for (int c : acc.walk.corners) acc.points.emplace_back(dom.corner_x(c), dom.corner_y(c));
    return acc;
}

UnzipResult driving_function_of_interface(const std::vector<Cpx>& path_points,
                                          const std::function<Cpx(Cpx)>& to_halfplane,
                                          double resample_spacing) {
    std::vector<Cpx> mapped;
    mapped.reserve(path_points.size());
    for (const auto& p : path_points) {
        Cpx w = to_halfplane(p);
        if (w.imag() < 0.0) w = Cpx(w.real(), 0.0);
        if (mapped.empty()) {
            mapped.push_back(Cpx(w.real(), 0.0));  // start on R
            continue;
        }
        if (resample_spacing > 0.0 && std::abs(w - mapped.back()) < resample_spacing &&
            mapped.size() > 1)
            continue;
        mapped.push_back(w);
    }
    return unzip_curve(std::move(mapped));
}

// ---------------------------------------------------------------------------
// Grid conformal-radius oracle
// ---------------------------------------------------------------------------

double log_conformal_radius_sites(const Lattice& dom, const std::vector<uint8_t>& in_set,
                                  Cpx z) {
    const int di[4] = {0, 1, 0, -1}, dj[4] = {1, 0, -1, 0};
    // active = in_set interior sites; ring = any neighbor outside the set
    std::vector<int> active;
    std::vector<int> aidx(dom.nx() * dom.ny(), -1);
    for (int s = 0; s < dom.nx() * dom.ny(); ++s)
        if (in_set[s] && dom.kind(s) == Lattice::kInterior) {
            aidx[s] = static_cast<int>(active.size());
            active.push_back(s);
        }
    if (active.empty()) throw std::invalid_argument("cr oracle: empty site set");

    auto ring_value = [&](int s) {
        double dx = dom.site_x(s) - z.real(), dy = dom.site_y(s) - z.imag();
        return -0.5 * std::log(dx * dx + dy * dy);
    };
    std::vector<double> rhs(active.size(), 0.0);
    for (size_t r = 0; r < active.size(); ++r) {
        int s = active[r];
        int i = s % dom.nx(), j = s / dom.nx();
        for (int d = 0; d < 4; ++d) {
            int ii = i + di[d], jj = j + dj[d];
            int t = dom.in_grid(ii, jj) ? dom.site(ii, jj) : -1;
            if (t < 0 || aidx[t] < 0) rhs[r] += ring_value(t < 0 ? s : t);
        }
    }
    // conjugate gradient on the subset Laplacian
    std::vector<double> x(active.size(), 0.0), res = rhs, p = rhs, ap(active.size());
    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (size_t r = 0; r < active.size(); ++r) {
            int s = active[r];
            int i = s % dom.nx(), j = s / dom.nx();
            double acc = 4.0 * v[r];
            for (int d = 0; d < 4; ++d) {
                int ii = i + di[d], jj = j + dj[d];
                if (!dom.in_grid(ii, jj)) continue;
                int t = dom.site(ii, jj);
                if (aidx[t] >= 0) acc -= v[aidx[t]];
            }
            out[r] = acc;
        }
    };
    double rr = 0.0;
    for (double v : res) rr += v * v;
    double rr0 = rr;
    for (int it = 0; it < 40000 && rr > 1e-22 * std::max(rr0, 1.0); ++it) {
        apply(p, ap);
        double pap = 0.0;
        for (size_t r = 0; r < p.size(); ++r) pap += p[r] * ap[r];
        double alpha = rr / pap;
        for (size_t r = 0; r < p.size(); ++r) {
            x[r] += alpha * p[r];
            res[r] -= alpha * ap[r];
        }
        double rr_new = 0.0;
        for (double v : res) rr_new += v * v;
        double beta = rr_new / rr;
        rr = rr_new;
        for (size_t r = 0; r < p.size(); ++r) p[r] = res[r] + beta * p[r];
    }
    // bilinear interpolation of the solution at z
    double fx = (z.real() - dom.site_x(0)) / dom.h();
    double fy = (z.imag() - dom.site_y(0)) / dom.h();
    int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
    double tx = fx - i0, ty = fy - j0;
    auto val = [&](int i, int j) -> double {
        if (!dom.in_grid(i, j)) return 0.0;
        int s = dom.site(i, j);
        if (aidx[s] >= 0) return x[aidx[s]];
        return ring_value(s);
    };
    double hz = (1 - tx) * (1 - ty) * val(i0, j0) + tx * (1 - ty) * val(i0 + 1, j0) +
                (1 - tx) * ty * val(i0, j0 + 1) + tx * ty * val(i0 + 1, j0 + 1);
    return -hz;  // log CR = -H(z)
}

namespace {

bool point_in_polygon(const std::vector<Cpx>& poly, double x, double y) {
    bool in = false;
    size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        double xi = poly[i].real(), yi = poly[i].imag();
        double xj = poly[j].real(), yj = poly[j].imag();
        if ((yi > y) != (yj > y)) {
            double xc = xj + (y - yj) / (yi - yj) * (xi - xj);
            if (x < xc) in = !in;
        }
    }
    return in;
}

double log_cr_polygon_once(const std::vector<Cpx>& poly, Cpx z, int resolution) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& p : poly) {
        xlo = std::min(xlo, p.real());
        xhi = std::max(xhi, p.real());
        ylo = std::min(ylo, p.imag());
        yhi = std::max(yhi, p.imag());
    }
    double span = std::max(xhi - xlo, yhi - ylo);
    double h = span / resolution;
    Lattice dom(
        h, xlo - 2 * h, xhi + 2 * h, ylo - 2 * h, yhi + 2 * h,
        [&](double x, double y) { return point_in_polygon(poly, x, y); },
        [](double, double) { return 0.0; });
    std::vector<uint8_t> all(dom.nx() * dom.ny(), 1);
    return log_conformal_radius_sites(dom, all, z);
}

}  // namespace

double log_conformal_radius_polygon(const std::vector<Cpx>& polygon, Cpx z, int resolution) {
    if (polygon.size() < 3) throw std::invalid_argument("cr oracle: degenerate polygon");
    double c1 = log_cr_polygon_once(polygon, z, resolution);
    double c2 = log_cr_polygon_once(polygon, z, 2 * resolution);
    return 2.0 * c2 - c1;  // first-order Richardson in h
}

}  // namespace ll
