#include "ll/sle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ll {

void ForceConfig::validate() const {
    for (const auto& f : left) {
        if (!std::isfinite(f.weight) || !std::isfinite(f.position))
            throw std::invalid_argument("force config: non-finite entry");
        if (f.position > 0.0) throw std::invalid_argument("force config: left position > 0");
    }
    for (const auto& f : right) {
        if (!std::isfinite(f.weight) || !std::isfinite(f.position))
            throw std::invalid_argument("force config: non-finite entry");
        if (f.position < 0.0) throw std::invalid_argument("force config: right position < 0");
    }
    for (size_t i = 1; i < left.size(); ++i)
        if (left[i].position > left[i - 1].position)
            throw std::invalid_argument("force config: left positions not decreasing");
    for (size_t i = 1; i < right.size(); ++i)
        if (right[i].position < right[i - 1].position)
            throw std::invalid_argument("force config: right positions not increasing");
}

std::vector<double> ForceConfig::left_cumulative() const {
    std::vector<double> out(left.size() + 1, 0.0);
    for (size_t i = 0; i < left.size(); ++i) out[i + 1] = out[i] + left[i].weight;
    return out;
}

std::vector<double> ForceConfig::right_cumulative() const {
    std::vector<double> out(right.size() + 1, 0.0);
    for (size_t i = 0; i < right.size(); ++i) out[i + 1] = out[i] + right[i].weight;
    return out;
}

namespace {

// gap = sqrt(kappa) * Bessel(d); exact squared-Bessel transition
// Z^2_{t+s} = s * chi'^2_d(Z^2_t / s).  Dimension <= 0 is absorbing at zero.

// E[sqrt(chi'^2_nu(delta))] via the confluent hypergeometric form
// sqrt(2) Gamma((nu+1)/2)/Gamma(nu/2) M(-1/2; nu/2; -delta/2):
// series for small delta, two-term asymptotic sqrt(delta)(1 + (nu-1)/(2 delta))
// for large delta.
double expected_sqrt_ncx2(double nu, double delta) {
    if (delta > 50.0) {
        double x = 0.5 * delta, b = 0.5 * nu;
        return std::sqrt(delta) *
               (1.0 + (0.5 * b - 0.25) / x -
                ((b / 2.0 - 0.25) * (b / 2.0 + 0.75) - 0.375 * (b - 0.5)) / (2.0 * x * x));
    }
    double b = 0.5 * nu, x = 0.5 * delta;
    double term = 1.0, sum = 1.0, a = -0.5;
    for (int k = 0; k < 400; ++k) {
        term *= (a + k) / ((b + k) * (k + 1.0)) * (-x);
        sum += term;
        if (std::fabs(term) < 1e-15 * std::fabs(sum) && k > 3) break;
    }
    return std::sqrt(2.0) * std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)) *
           sum;
}

// E[theta_h] for the gap theta = sqrt(kappa) Bes(d) started at theta0
double expected_bessel_gap(double dim, double theta0, double kappa, double h) {
    double delta = theta0 * theta0 / (kappa * h);
    return std::sqrt(kappa * h) * expected_sqrt_ncx2(dim, delta);
}

// E[ int_0^h ds / theta_s ] from the drift identity
// E[theta_h] - theta0 = (kappa (d-1)/2) E[int ds/theta]
double expected_inverse_gap_integral(double dim, double theta0, double kappa, double h) {
    dim = std::max(dim, 1.05);
    double egain = expected_bessel_gap(dim, theta0, kappa, h) - theta0;
    return std::max(2.0 * egain / (kappa * (dim - 1.0)), 0.0);
}

double besq_gap_step(double gap, double kappa, double dim, double dt, Rng& rng) {
    double z2 = gap * gap / kappa;
    if (dim <= 1e-12) {
        double drifted = z2 + (dim - 2.0) * dt;
        if (drifted <= 0.0) return 0.0;
        dim = 1e-12;
    }
    double z2n = dt * rng.noncentral_chi_squared(dim, z2 / dt);
    return std::sqrt(kappa * z2n);
}

}  // namespace

ChordalDriverSample sample_chordal_driver(const ForceConfig& cfg, double horizon,
                                          uint64_t seed, const ChordalSamplerOptions& opt) {
    cfg.validate();
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_chordal_driver: horizon <= 0");
    const double kappa = cfg.kappa;
    const double sqrt_kappa = std::sqrt(kappa);
    const double dt = std::min(opt.dt, rough_driver_dt(opt.step_cap, kappa));
    const double band =
        std::min(opt.bessel_band_factor * std::sqrt(kappa * dt), opt.step_cap);

    Rng rng(seed);

    const size_t nl = cfg.left.size(), nr = cfg.right.size();
    double w = 0.0;
    std::vector<double> vl(nl), vr(nr);
    for (size_t i = 0; i < nl; ++i) vl[i] = cfg.left[i].position;
    for (size_t i = 0; i < nr; ++i) vr[i] = cfg.right[i].position;

    ChordalDriverSample out;
    out.left_tracks.assign(nl, {});
    out.right_tracks.assign(nr, {});
    auto record = [&](double t) {
        out.driver.times.push_back(t);
        out.driver.values.push_back(w);
        for (size_t i = 0; i < nl; ++i) out.left_tracks[i].push_back(vl[i]);
        for (size_t i = 0; i < nr; ++i) out.right_tracks[i].push_back(vr[i]);
    };
    record(0.0);

    auto merged_weight = [&](bool left_side, double eps) {
        double sum = 0.0;
        if (left_side) {
            for (size_t i = 0; i < nl; ++i)
                if (w - vl[i] <= eps) sum += cfg.left[i].weight;
        } else {
            for (size_t i = 0; i < nr; ++i)
                if (vr[i] - w <= eps) sum += cfg.right[i].weight;
        }
        return sum;
    };

    double t = 0.0;
    size_t steps = 0;
    while (t < horizon && steps++ < opt.max_steps) {
        double h = std::min(dt, horizon - t);

        double gap_l = nl ? w - vl[0] : std::numeric_limits<double>::infinity();
        double gap_r = nr ? vr[0] - w : std::numeric_limits<double>::infinity();

        if (gap_l <= opt.swallow_eps && merged_weight(true, opt.swallow_eps) <= -2.0) {
            out.threshold_time = t;
            break;
        }
        if (gap_r <= opt.swallow_eps && merged_weight(false, opt.swallow_eps) <= -2.0) {
            out.threshold_time = t;
            break;
        }

        auto clamp_away = [&](double d) {
            double floor_gap = 0.25 * band;
            if (d >= 0.0) return std::max(d, floor_gap);
            return std::min(d, -floor_gap);
        };

        bool bessel_l = gap_l < band, bessel_r = gap_r < band;
        if (bessel_l && bessel_r) {
            // two-sided squeeze (e.g. the doubly-degenerate start): exact
            // squared-Bessel steps on both gaps, then reconcile the driver
            // position within the track span
            double rho_le = merged_weight(true, band), rho_re = merged_weight(false, band);
            double dim_le = 1.0 + 2.0 * (rho_le + 2.0) / kappa;
            double dim_re = 1.0 + 2.0 * (rho_re + 2.0) / kappa;
            double gl_new = besq_gap_step(gap_l, kappa, dim_le, h, rng);
            double gr_new = besq_gap_step(gap_r, kappa, dim_re, h, rng);
            double floor_gap = 0.25 * band;
            double push_l = 2.0 * expected_inverse_gap_integral(dim_le, gap_l, kappa, h);
            double push_r = 2.0 * expected_inverse_gap_integral(dim_re, gap_r, kappa, h);
            for (size_t i = 1; i < nl; ++i) vl[i] += 2.0 * h / std::min(vl[i] - w, -floor_gap);
            for (size_t i = 1; i < nr; ++i) vr[i] += 2.0 * h / std::max(vr[i] - w, floor_gap);
            vl[0] -= push_l;
            vr[0] += push_r;
            double span = vr[0] - vl[0];
            double scale = span / std::max(gl_new + gr_new, 1e-300);
            w = vl[0] + gl_new * scale;
            for (size_t i = 1; i < nl; ++i) vl[i] = std::min(vl[i], vl[i - 1]);
            for (size_t i = 1; i < nr; ++i) vr[i] = std::max(vr[i], vr[i - 1]);
            t += h;
            record(t);
            continue;
        }

        if (!bessel_l && !bessel_r) {
            double drift = 0.0;
            for (size_t i = 0; i < nl; ++i) drift += cfg.left[i].weight / (w - vl[i]);
            for (size_t i = 0; i < nr; ++i) drift += cfg.right[i].weight / (w - vr[i]);
            double w_new = w + sqrt_kappa * std::sqrt(h) * rng.gauss() + drift * h;
            for (size_t i = 0; i < nl; ++i) vl[i] += 2.0 * h / (vl[i] - w);
            for (size_t i = 0; i < nr; ++i) vr[i] += 2.0 * h / (vr[i] - w);
            w = w_new;
            if (nl && w < vl[0]) w = vl[0];  // Euler overshoot across a track
            if (nr && w > vr[0]) w = vr[0];
        } else if (bessel_l) {
            double rho_eff = merged_weight(true, band);
            double dim = 1.0 + 2.0 * (rho_eff + 2.0) / kappa;
            double far = 0.0;
            for (size_t i = 0; i < nl; ++i)
                if (w - vl[i] > band) far += cfg.left[i].weight / (w - vl[i]);
            for (size_t i = 0; i < nr; ++i)
                far += cfg.right[i].weight / clamp_away(w - vr[i]);
            double gap_new = besq_gap_step(gap_l, kappa, dim, h, rng);
            double push = 2.0 * expected_inverse_gap_integral(dim, gap_l, kappa, h);
            for (size_t i = 1; i < nl; ++i) vl[i] += 2.0 * h / (vl[i] - w);
            for (size_t i = 0; i < nr; ++i) vr[i] += 2.0 * h / (vr[i] - w);
            vl[0] -= push;
            w = vl[0] + gap_new + far * h;
            if (w < vl[0]) w = vl[0];
            if (nr && w > vr[0]) w = vr[0];
        } else {
            double rho_eff = merged_weight(false, band);
            double dim = 1.0 + 2.0 * (rho_eff + 2.0) / kappa;
            double far = 0.0;
            for (size_t i = 0; i < nr; ++i)
                if (vr[i] - w > band) far += cfg.right[i].weight / (w - vr[i]);
            for (size_t i = 0; i < nl; ++i)
                far += cfg.left[i].weight / clamp_away(w - vl[i]);
            double gap_new = besq_gap_step(gap_r, kappa, dim, h, rng);
            double push = 2.0 * expected_inverse_gap_integral(dim, gap_r, kappa, h);
            for (size_t i = 1; i < nr; ++i) vr[i] += 2.0 * h / (vr[i] - w);
            for (size_t i = 0; i < nl; ++i) vl[i] += 2.0 * h / (vl[i] - w);
            vr[0] += push;
            w = vr[0] - gap_new + far * h;
            if (w > vr[0]) w = vr[0];
            if (nl && w < vl[0]) w = vl[0];
        }

        for (size_t i = 1; i < nl; ++i) vl[i] = std::min(vl[i], vl[i - 1]);
        for (size_t i = 1; i < nr; ++i) vr[i] = std::max(vr[i], vr[i - 1]);

        t += h;
        record(t);
    }
    return out;
}

PiecewiseBoundaryData conditional_mean_boundary(const ForceConfig& cfg,
                                                const ChordalDriverSample& s, size_t k) {
    const double w = s.driver.values.at(k);
    auto cl = cfg.left_cumulative();
    auto cr = cfg.right_cumulative();

    // raw pieces, outermost-left to outermost-right; bps nondecreasing
    std::vector<double> bps;
    std::vector<double> vals;
    vals.push_back(-kLambda * (1.0 + cl.back()));
    for (size_t i = cfg.left.size(); i-- > 0;) {
        bps.push_back(s.left_tracks[i][k] - w);
        vals.push_back(-kLambda * (1.0 + cl[i]));
    }
    bps.push_back(0.0);
    vals.push_back(kLambda);
    for (size_t i = 0; i < cfg.right.size(); ++i) {
        bps.push_back(s.right_tracks[i][k] - w);
        vals.push_back(kLambda * (1.0 + cr[i + 1]));
    }

    // collapse zero-width pieces: value at x is vals[#{bps <= x}]
    PiecewiseBoundaryData data;
    for (size_t j = 0; j < bps.size(); ++j) {
        if (j + 1 < bps.size() && bps[j + 1] <= bps[j]) continue;  // squeezed piece
        data.breakpoints.push_back(bps[j]);
        if (data.values.empty()) {
            // first kept breakpoint: the piece to its left is the value before
            // the earliest bp equal to it
            size_t first_eq = j;
            while (first_eq > 0 && bps[first_eq - 1] >= bps[j]) --first_eq;
            data.values.push_back(vals[first_eq]);
        }
        data.values.push_back(vals[j + 1]);
    }
    if (data.breakpoints.empty()) {
        data.values.push_back(vals.back());
    }
    data.validate();
    return data;
}

std::optional<double> eta_conditional_mean(const ForceConfig& cfg,
                                           const ChordalDriverSample& s,
                                           const ChordalChain& chain, Cpx z, size_t k) {
    double t = s.driver.times.at(k);
    auto g = chain.evolve(z, t);
    if (!g) return std::nullopt;
    Cpx f = *g - Cpx(s.driver.values[k], 0.0);
    auto data = conditional_mean_boundary(cfg, s, k);
    return harmonic_extension_halfplane(data, f);
}

// ---------------------------------------------------------------------------
// Radial sampler.  State: gaps (tl, tr) plus the driver-angle lift w; the
// outer arc o = 2 pi - tl - tr obeys the deterministic ODE
// do = -(cotL + cotR) dt.  cot(theta/2) for theta near 2 pi is evaluated via
// cot(pi - x) = -cot(x) with x = (o + other)/2, which keeps the cancellation
// in cotL + cotR exact near the collapse.  A gap below the Bessel band is
// advanced by the exact squared-Bessel transition (cross-drift negligible at
// that scale); the outer arc then decays by its integrating-factor form with
// the same small-angle cotangent, do/o = -2 dt / (x (x + o)).
// ---------------------------------------------------------------------------

namespace {

inline double cot_half(double theta) { return 1.0 / std::tan(0.5 * theta); }

}  // namespace



RadialDriverSample sample_radial_driver(double rho_l, double rho_r, double start_w,
                                        double start_theta_l, double start_theta_r,
                                        double horizon, uint64_t seed,
                                        const RadialSamplerOptions& opt) {
    const double kappa = kKappa;
    Rng rng(seed);

    double tl = std::max(start_theta_l, opt.start_gap);
    double tr = std::max(start_theta_r, opt.start_gap);
    if (tl + tr > 2.0 * kPi)
        throw std::invalid_argument("radial sampler: gaps exceed the full circle");
    if (start_theta_l <= 0.0 && start_theta_r <= 0.0 && (rho_l <= -2.0 || rho_r <= -2.0))
        throw std::invalid_argument("radial sampler: degenerate start without reflection");
    double w = start_w;

    RadialDriverSample out;
    auto push_state = [&](double t) {
        out.driver.times.push_back(t);
        out.driver.values.push_back(w);
        out.theta_l.push_back(tl);
        out.theta_r.push_back(tr);
    };
    push_state(0.0);
    double last_rec_t = 0.0;

    const double dim_l = 1.0 + 2.0 * (rho_l + 2.0) / kappa;
    const double dim_r = 1.0 + 2.0 * (rho_r + 2.0) / kappa;
    const bool collapse_possible = rho_l > -2.0 && rho_r > -2.0 && rho_l + rho_r <= -2.0;

    auto finalize = [&](double t) {
        if (opt.record_path) {
            push_state(t);
        } else {
            out.driver.times = {0.0, std::max(t, 1e-12)};
            out.driver.values = {start_w, w};
            out.theta_l = {start_theta_l, tl};
            out.theta_r = {start_theta_r, tr};
        }
    };

    double t = 0.0;
    size_t steps = 0;
    while (t < horizon && steps++ < opt.max_steps) {
        double o = 2.0 * kPi - tl - tr;

        if (collapse_possible && o < opt.collapse_outer_eps) {
            out.threshold_time = t;
            out.clockwise = tl < tr;
            finalize(t);
            return out;
        }
        if (rho_l <= -2.0 && tl <= opt.collapse_outer_eps) {
            out.threshold_time = t;
            out.clockwise = true;
            finalize(t);
            return out;
        }
        if (rho_r <= -2.0 && tr <= opt.collapse_outer_eps) {
            out.threshold_time = t;
            out.clockwise = false;
            finalize(t);
            return out;
        }

        double small = std::min(tl, tr);
        bool left_small = tl <= tr;

        if (collapse_possible && o < 0.02 * small) {
            // merged regime: the two force images nearly coincide, the gap is a
            // driftless Brownian motion (weight sum at the collapse is -2) run
            // until it exits (0, 2pi); barrier hits are detected with exact
            // Brownian-bridge probabilities.  Exit side = loop orientation.
            double theta = small;
            double hi = tl + tr + o;  // ~ 2 pi
            while (t < horizon && steps++ < opt.max_steps) {
                double h = std::min({4.0 * opt.dt, horizon - t});
                double theta_new = theta + std::sqrt(kappa * h) * rng.gauss();
                double p_lo = (theta > 0 && theta_new > 0)
                                  ? std::exp(-2.0 * theta * theta_new / (kappa * h))
                                  : 1.0;
                double d1 = hi - theta, d2 = hi - theta_new;
                double p_hi = (d1 > 0 && d2 > 0)
                                  ? std::exp(-2.0 * d1 * d2 / (kappa * h))
                                  : 1.0;
                t += h;
                bool hit_lo = theta_new <= 0.0 || rng.bernoulli(p_lo);
                bool hit_hi = theta_new >= hi || rng.bernoulli(p_hi);
                if (hit_lo || hit_hi) {
                    bool small_side_closed = hit_lo && !(hit_hi && theta_new >= hi);
                    out.threshold_time = t;
                    out.clockwise = left_small == small_side_closed;
                    if (out.clockwise) {
                        tl = 0.0;
                        tr = 2.0 * kPi;
                    } else {
                        tl = 2.0 * kPi;
                        tr = 0.0;
                    }
                    finalize(t);
                    return out;
                }
                theta = theta_new;
            }
            finalize(t);
            return out;
        }

        if (tl < opt.bessel_band && tr < opt.bessel_band) {
            // doubly-degenerate start: independent exact reflections
            double h = std::min(opt.dt, horizon - t);
            tl = besq_gap_step(tl, kappa, dim_l, h, rng);
            tr = besq_gap_step(tr, kappa, dim_r, h, rng);
            double sum = tl + tr;
            if (sum > 2.0 * kPi) {
                tl *= 2.0 * kPi / sum;
                tr *= 2.0 * kPi / sum;
            }
            t += h;
        } else {
            // Unified step on the smaller gap s.  Its 1/s drift plus the far
            // force point's 1/(s+o) cross-drift form an exact squared-Bessel
            // transition of effective dimension; bounded remainders are added
            // in Euler form.  The outer arc and the driver lift consume
            // int ds/theta along the gap path, which no pathwise step resolves
            // across reflection excursions; it is replaced by its exact
            // expectation  E int ds/theta = 2 (E theta_h - theta_0)/(kappa(d-1)).
            double big = left_small ? tr : tl;
            double rho_near = left_small ? rho_l : rho_r;
            double rho_far = left_small ? rho_r : rho_l;
            double ratio = small / (small + o);
            double dim = 1.0 + 2.0 * ((rho_near + 2.0) + rho_far * ratio) / kappa;
            dim = std::max(dim, 1.05);

            double big_pole = std::max(std::min(big, 2.0 * kPi - big), 1e-9);
            double h = std::min({opt.dt, 0.02 * big_pole * big_pole / kappa,
                                 0.1 * (small + o) * (small + o) / kappa + 1e-12,
                                 horizon - t});
            h = std::max(h, 1e-14);

            double s_new = besq_gap_step(small, kappa, dim, h, rng);
            double inv_int = expected_inverse_gap_integral(dim, small, kappa, h);

            // bounded corrections: cot(x/2) - 2/x for the near gap, and the far
            // cotangent through cot(big/2) = -cot((o+small)/2)
            double sm = std::max(0.5 * (small + s_new), 1e-12);
            double corr = 0.0;
            if (sm > 1e-7)
                corr += 0.5 * (rho_near + 2.0) * (cot_half(sm) - 2.0 / sm);
            corr -= 0.5 * rho_far * (-cot_half(o + sm) + 2.0 / (o + sm));
            s_new = std::max(s_new + corr * h, 0.0);

            // outer arc: int (cotL + cotR) ds with the singular part replaced
            // by its expectation and the smooth parts frozen
            double cot_big = -cot_half(std::min(o + sm, 2.0 * kPi - 1e-12));
            double smooth_l = (sm > 1e-7) ? (cot_half(sm) - 2.0 / sm) : 0.0;
            double dec = 2.0 * inv_int + (smooth_l + cot_big) * h;
            double o_new = (dec > 0.1 * o) ? o * std::exp(-dec / std::max(o, 1e-300))
                                           : std::max(o - dec, 0.0);
            double big_new = std::clamp(2.0 * kPi - o_new - s_new, 0.0, 2.0 * kPi);

            // driver lift via the near track ODE dv = -+cot(theta/2) dt
            double track_shift = 2.0 * inv_int + smooth_l * h;
            if (left_small) {
                double vl_lift = (w - tl) - track_shift;
                tl = s_new;
                tr = big_new;
                w = vl_lift + tl;
            } else {
                double vr_lift = (w + tr) + track_shift;
                tr = s_new;
                tl = big_new;
                w = vr_lift - tr;
            }
            t += h;
        }

        if (opt.record_path && t - last_rec_t >= opt.dt) {
            push_state(t);
            last_rec_t = t;
        }
    }
    finalize(t);
    return out;
}

// ---------------------------------------------------------------------------
// Chordal with interior force point & the chordal-radial equivalence check
// ---------------------------------------------------------------------------

InteriorForceRunResult run_chordal_interior_force(double rho_l, double rho_r, double rho_i,
                                                  Cpx z, double horizon, uint64_t seed,
                                                  const ChordalSamplerOptions& opt,
                                                  double x_left, double x_right) {
    const double kappa = kKappa;
    const double sqrt_kappa = std::sqrt(kappa);
    const double dt = std::min(opt.dt, rough_driver_dt(opt.step_cap, kappa));
    const double band =
        std::min(opt.bessel_band_factor * std::sqrt(kappa * dt), opt.step_cap);
    Rng rng(seed);

    const double log_cr0 = std::log(2.0 * z.imag());
    double w = 0.0;
    double vl = x_left, vr = x_right;
    Cpx vi = z;
    Cpx dgi = 1.0;
    double last_log_cr = 0.0;

    InteriorForceRunResult res;
    double t = 0.0;
    size_t steps = 0;
    while (t < horizon && steps++ < opt.max_steps) {
        double gl = w - vl, gr = vr - w;
        // resolve the approach of the interior image to the driver (pinch)
        double pinch = std::abs(vi - Cpx(w, 0.0));
        double h = std::min({dt, horizon - t, 0.05 * pinch * pinch / kappa + 1e-12});

        double log_cr = std::log(2.0 * std::max(vi.imag(), 1e-300)) - std::log(std::abs(dgi));
        last_log_cr = log_cr;
        if (pinch <= 1e-4 || vi.imag() <= 1e-6) {
            res.disconnected = true;
            res.log_cr_at_disconnection = log_cr0 - log_cr;
            return res;
        }

        double drift_i = rho_i * (Cpx(1.0, 0.0) / (Cpx(w, 0.0) - vi)).real();
        bool bl = gl < band, br = gr < band;
        if (bl && br) (gl < gr ? br : bl) = false;
        double floor_gap = 0.25 * band;
        if (bl) {
            double dim = 1.0 + 2.0 * (rho_l + 2.0) / kappa;
            double g_new = besq_gap_step(gl, kappa, dim, h, rng);
            double push = 2.0 * expected_inverse_gap_integral(dim, gl, kappa, h);
            vr += 2.0 * h / std::max(vr - w, floor_gap);
            double far = rho_r / std::min(w - vr, -floor_gap) + drift_i;
            vl -= push;
            w = vl + g_new + far * h;
            if (w < vl) w = vl;
            if (w > vr) w = vr;
        } else if (br) {
            double dim = 1.0 + 2.0 * (rho_r + 2.0) / kappa;
            double g_new = besq_gap_step(gr, kappa, dim, h, rng);
            double push = 2.0 * expected_inverse_gap_integral(dim, gr, kappa, h);
            vl += 2.0 * h / std::min(vl - w, -floor_gap);
            double far = rho_l / std::max(w - vl, floor_gap) + drift_i;
            vr += push;
            w = vr - g_new + far * h;
            if (w > vr) w = vr;
            if (w < vl) w = vl;
        } else {
            double d2 = drift_i + rho_l / (w - vl) + rho_r / (w - vr);
            double w_new = w + sqrt_kappa * std::sqrt(h) * rng.gauss() + d2 * h;
            vl += 2.0 * h / (vl - w);
            vr += 2.0 * h / (vr - w);
            w = w_new;
            if (w < vl) w = vl;
            if (w > vr) w = vr;
        }
        Cpx denom = vi - Cpx(w, 0.0);
        vi += 2.0 * h / denom;
        dgi *= (1.0 - Cpx(2.0 * h, 0.0) / (denom * denom));
        t += h;
    }
    // curve escaped toward its target with z still attached: the CR ratio has
    // converged to the disconnection value of the mapped radial picture
    res.disconnected = true;
    res.escaped = true;
    res.log_cr_at_disconnection = log_cr0 - last_log_cr;
    return res;
}

RadialMarkedRunResult run_radial_marked_point(double rho_l, double rho_r,
                                              double start_theta_l, double start_theta_r,
                                              double marked_gap, double horizon,
                                              uint64_t seed,
                                              const RadialSamplerOptions& opt_in) {
    // Force points adjacent to W0 = angle pi; passive marked point at angle 0
    // (lift 2 pi).  The hull eats the boundary arc only through the force
    // images, so the marked point is disconnected from the origin when its
    // angular gap to the driver closes on either side or the chain collapses.
    const double kappa = kKappa;
    RadialSamplerOptions opt = opt_in;
    Rng rng(seed);

    double tl = std::max(start_theta_l, opt.start_gap);
    double tr = std::max(start_theta_r, opt.start_gap);
    double w = kPi;
    double gm = marked_gap;  // lift(vm) - lift(w)
    const double dim_l = 1.0 + 2.0 * (rho_l + 2.0) / kappa;
    const double dim_r = 1.0 + 2.0 * (rho_r + 2.0) / kappa;
    const bool collapse_possible = rho_l > -2.0 && rho_r > -2.0 && rho_l + rho_r <= -2.0;
    const double eps_m = 1e-3;

    RadialMarkedRunResult res;
    double t = 0.0;
    size_t steps = 0;
    while (t < horizon && steps++ < opt.max_steps) {
        double o = 2.0 * kPi - tl - tr;
        double gm_pole = std::min(gm, 2.0 * kPi - gm);
        if (gm_pole < eps_m || (collapse_possible && o < opt.collapse_outer_eps)) {
            res.disconnected = true;
            res.log_cr_at_disconnection = t;
            return res;
        }

        double small = std::min(tl, tr);
        bool left_small = tl <= tr;
        double dw = 0.0;
        double h;

        if (tl < opt.bessel_band && tr < opt.bessel_band) {
            h = std::min(opt.dt, horizon - t);
            tl = besq_gap_step(tl, kappa, dim_l, h, rng);
            tr = besq_gap_step(tr, kappa, dim_r, h, rng);
            double sum = tl + tr;
            if (sum > 2.0 * kPi) {
                tl *= 2.0 * kPi / sum;
                tr *= 2.0 * kPi / sum;
            }
        } else {
            double big = left_small ? tr : tl;
            double rho_near = left_small ? rho_l : rho_r;
            double rho_far = left_small ? rho_r : rho_l;
            double ratio = small / (small + o);
            double dim = 1.0 + 2.0 * ((rho_near + 2.0) + rho_far * ratio) / kappa;
            dim = std::max(dim, 1.05);
            double big_pole = std::max(std::min(big, 2.0 * kPi - big), 1e-9);
            h = std::min({opt.dt, 0.02 * big_pole * big_pole / kappa,
                          0.02 * gm_pole * gm_pole / kappa,
                          0.1 * (small + o) * (small + o) / kappa + 1e-12, horizon - t});
            h = std::max(h, 1e-12);
            double s_new = besq_gap_step(small, kappa, dim, h, rng);
            double inv_int = expected_inverse_gap_integral(dim, small, kappa, h);
            double sm = std::max(0.5 * (small + s_new), 1e-12);
            double corr = 0.0;
            if (sm > 1e-7) corr += 0.5 * (rho_near + 2.0) * (cot_half(sm) - 2.0 / sm);
            corr -= 0.5 * rho_far * (-cot_half(o + sm) + 2.0 / (o + sm));
            s_new = std::max(s_new + corr * h, 0.0);
            double cot_big = -cot_half(std::min(o + sm, 2.0 * kPi - 1e-12));
            double smooth_l = (sm > 1e-7) ? (cot_half(sm) - 2.0 / sm) : 0.0;
            double dec = 2.0 * inv_int + (smooth_l + cot_big) * h;
            double o_new = (dec > 0.1 * o) ? o * std::exp(-dec / std::max(o, 1e-300))
                                           : std::max(o - dec, 0.0);
            double big_new = std::clamp(2.0 * kPi - o_new - s_new, 0.0, 2.0 * kPi);
            double track_shift = 2.0 * inv_int + smooth_l * h;
            double w_old = w;
            if (left_small) {
                double vl_lift = (w - tl) - track_shift;
                tl = s_new;
                tr = big_new;
                w = vl_lift + tl;
            } else {
                double vr_lift = (w + tr) + track_shift;
                tr = s_new;
                tl = big_new;
                w = vr_lift - tr;
            }
            dw = w - w_old;
        }
        // marked point: dvm = cot(gm/2) dt in the lift
        double cot_m = (gm <= kPi) ? cot_half(std::max(gm, 1e-12))
                                   : -cot_half(2.0 * kPi - gm);
        gm += cot_m * h - dw;
        // vm sits inside the outer arc: theta_r <= gm <= theta_r + o
        gm = std::clamp(gm, tr, tr + (2.0 * kPi - tl - tr));
        t += h;
    }
    return res;
}

StatReport chordal_radial_equivalence_check(double rho_l, double rho_r, double rho_i,
                                            size_t n_samples, uint64_t seed,
                                            double p_threshold) {
    if (std::fabs(rho_l + rho_r + rho_i - (kKappa - 6.0)) > 1e-12)
        throw std::invalid_argument(
            "equivalence check: weights must satisfy rhoL + rhoR + rhoI = kappa - 6");
    if (n_samples == 0) {
        StatReport r;
        r.name = "chordal-radial-equivalence";
        r.rule = "p>tol";
        r.tolerance = p_threshold;
        r.skipped = true;
        r.detail = "degenerate horizon: empty statistics";
        r.pass = true;
        return r;
    }

    // chordal in H from 0 toward infinity, boundary force points at -+0.2 and a
    // marked interior point i; under z -> (z-i)/(z+i) this is the disc picture
    // with driver at angle pi, force gaps |arg phi(-+0.2) - pi|, marked point at
    // angle 0, and target i -> 0
    const double x_l = -0.2, x_r = 0.2;
    auto cayley = [](double x) {
        Cpx v = (Cpx(x, 0.0) - Cpx(0, 1)) / (Cpx(x, 0.0) + Cpx(0, 1));
        double a = std::arg(v);
        return a < 0 ? a + 2.0 * kPi : a;
    };
    const double theta_l0 = kPi - cayley(x_l);
    const double theta_r0 = cayley(x_r) - kPi;

    std::vector<double> chordal_stat, radial_stat;
    for (size_t k = 0; k < n_samples; ++k) {
        auto r = run_chordal_interior_force(rho_l, rho_r, rho_i, Cpx(0.0, 1.0), 60.0,
                                            Rng::child_seed(seed, 2 * k), {}, x_l, x_r);
        if (r.disconnected) chordal_stat.push_back(r.log_cr_at_disconnection);
    }
    for (size_t k = 0; k < n_samples; ++k) {
        auto r = run_radial_marked_point(rho_l, rho_r, theta_l0, theta_r0, kPi, 60.0,
                                         Rng::child_seed(seed, 2 * k + 1));
        if (r.disconnected) radial_stat.push_back(r.log_cr_at_disconnection);
    }
    return ks_two_sample("chordal-radial-equivalence", chordal_stat, radial_stat, p_threshold);
}

}  // namespace ll
