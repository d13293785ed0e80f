#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ll/conformal.hpp"

namespace ll {

inline constexpr double kSwallowEps = 1e-7;  // default swallow tolerance, capacity units

// Time-discretized driving function.  Chordal: values are W_t on R.
// Radial: values are a continuous real lift of arg W_t.
struct DriverPath {
    std::vector<double> times;   // increasing, times[0] == 0
    std::vector<double> values;  // same length

    void validate() const {
        if (times.size() != values.size() || times.size() < 2)
            throw std::invalid_argument("driver: need matched times/values, n >= 2");
        if (times.front() != 0.0) throw std::invalid_argument("driver: times[0] != 0");
        for (size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw std::invalid_argument("driver: times not increasing");
    }
    double horizon() const { return times.back(); }
    size_t steps() const { return times.size() - 1; }
};

// ---------------------------------------------------------------------------
// Chordal Loewner chain: g_t solves dg = 2 dt / (g - W_t), g_0 = id,
// normalized g_t(z) = z + 2t/z + o(1/z).  Discretized by per-step constant
// driver; each step is the closed-form vertical-slit map
//   phi(z) = w + sqrt((z - w)^2 + 4 dt),
// with the driver value taken at the step's right endpoint so the slit grows
// toward the current driver position.
// ---------------------------------------------------------------------------

namespace detail {

// sqrt branch mapping into the closed upper half plane.
inline Cpx sqrt_upper(Cpx z) {
    Cpx r = std::sqrt(z);
    if (r.imag() < 0.0) r = -r;
    return r;
}

}  // namespace detail

struct SwallowedAt {
    double time;
};

class ChordalChain {
public:
    explicit ChordalChain(DriverPath driver) : driver_(std::move(driver)) {
        driver_.validate();
    }

    const DriverPath& driver() const { return driver_; }
    double horizon() const { return driver_.horizon(); }

    // Half-plane capacity of the hull at the horizon: hcap = 2 * horizon by the
    // chain normalization.
    double hcap() const { return 2.0 * driver_.horizon(); }

    // g_t(z), or the swallow time if |g_s(z) - W_s| reaches eps before t.
    // Forward composition of the per-step slit maps.  Within a constant-driver
    // step, |g_s(z) - w|^2 traces the segment (z-w)^2 + 4s, s in [0, dt]; the
    // point is swallowed when that segment passes within eps of the origin.
    std::optional<Cpx> evolve(Cpx z, double t, double* swallow_time = nullptr,
                              double eps = kSwallowEps) const {
        if (t > driver_.horizon() * (1.0 + 1e-12))
            throw std::invalid_argument("evolve: t beyond driver horizon");
        Cpx y = z;
        for (size_t k = 0; k + 1 < driver_.times.size(); ++k) {
            double t0 = driver_.times[k], t1 = driver_.times[k + 1];
            if (t0 >= t) break;
            double dt = std::min(t1, t) - t0;
            double w = driver_.values[k + 1];  // right endpoint
            Cpx d = y - Cpx(w, 0.0);
            Cpx d2 = d * d;
            double s_min = std::clamp(-d2.real() / 4.0, 0.0, dt);
            double dist2 = std::norm(d2 + Cpx(4.0 * s_min, 0.0));
            if (dist2 <= eps * eps * eps * eps) {  // |g_s - w| = dist2^{1/4}
                if (swallow_time) *swallow_time = t0 + s_min;
                return std::nullopt;
            }
            y = Cpx(w, 0.0) + detail::sqrt_upper(d2 + Cpx(4.0 * dt, 0.0));
        }
        if (std::abs(y - Cpx(driver_w_at(t), 0.0)) <= eps) {
            if (swallow_time) *swallow_time = t;
            return std::nullopt;
        }
        return y;
    }

    // (g_t(z), g_t'(z)) jointly; derivative by the chain rule,
    // phi'(z) = (z - w)/sqrt((z - w)^2 + 4 dt).
    std::optional<std::pair<Cpx, Cpx>> evolve_with_derivative(Cpx z, double t,
                                                              double eps = kSwallowEps) const {
        Cpx y = z, dy = 1.0;
        for (size_t k = 0; k + 1 < driver_.times.size(); ++k) {
            double t0 = driver_.times[k], t1 = driver_.times[k + 1];
            if (t0 >= t) break;
            double dt = std::min(t1, t) - t0;
            double w = driver_.values[k + 1];
            Cpx d = y - Cpx(w, 0.0);
            if (std::abs(d) <= eps) return std::nullopt;
            Cpx s = detail::sqrt_upper(d * d + Cpx(4.0 * dt, 0.0));
            dy *= d / s;
            y = Cpx(w, 0.0) + s;
        }
        return std::make_pair(y, dy);
    }

    // First s with |g_s(z) - W_s| <= eps, or +inf if never swallowed.
    double swallow_time(Cpx z, double eps = kSwallowEps) const {
        double ts = 0.0;
        if (!evolve(z, driver_.horizon(), &ts, eps)) return ts;
        return std::numeric_limits<double>::infinity();
    }

    // log CR(H \ K_t; z) = log(2 Im g_t(z)) - log|g_t'(z)|.
    std::optional<double> log_conformal_radius(Cpx z, double t) const {
        auto gd = evolve_with_derivative(z, t);
        if (!gd) return std::nullopt;
        auto [g, dg] = *gd;
        if (g.imag() <= 0.0) return std::nullopt;
        return std::log(2.0 * g.imag()) - std::log(std::abs(dg));
    }

    // Trace point gamma(t_k) = (phi_0^{-1} o ... o phi_{k-1}^{-1})(w_{k-1}),
    // where phi^{-1}(u) = w + sqrt((u - w)^2 - 4 dt) with the branch into H.
    std::vector<Cpx> trace() const {
        const size_t n = driver_.steps();
        std::vector<Cpx> pts(n + 1);
        pts[0] = Cpx(driver_.values[0], 0.0);
        for (size_t k = 1; k <= n; ++k) {
            Cpx u(driver_.values[k], 0.0);
            for (size_t j = k; j-- > 0;) {
                double dt = driver_.times[j + 1] - driver_.times[j];
                double w = driver_.values[j + 1];
                Cpx d = u - Cpx(w, 0.0);
                u = Cpx(w, 0.0) + detail::sqrt_upper(d * d - Cpx(4.0 * dt, 0.0));
            }
            pts[k] = u;
        }
        return pts;
    }

    // f_t^{-1}(u) for u in H: pull back through all inverse slit maps up to the
    // horizon (u given relative to W_T, i.e. the map inverse to g_T - W_T).
    Cpx inverse_map(Cpx u_rel) const {
        Cpx u = u_rel + Cpx(driver_.values.back(), 0.0);
        for (size_t j = driver_.steps(); j-- > 0;) {
            double dt = driver_.times[j + 1] - driver_.times[j];
            double w = driver_.values[j + 1];
            Cpx d = u - Cpx(w, 0.0);
            u = Cpx(w, 0.0) + detail::sqrt_upper(d * d - Cpx(4.0 * dt, 0.0));
        }
        return u;
    }

private:
    double driver_w_at(double t) const {
        // linear interpolation, only used for the terminal swallow check
        const auto& ts = driver_.times;
        const auto& ws = driver_.values;
        if (t >= ts.back()) return ws.back();
        size_t lo = 0, hi = ts.size() - 1;
        while (hi - lo > 1) {
            size_t mid = (lo + hi) / 2;
            (ts[mid] <= t ? lo : hi) = mid;
        }
        double a = (t - ts[lo]) / (ts[hi] - ts[lo]);
        return ws[lo] + a * (ws[hi] - ws[lo]);
    }

    DriverPath driver_;
};

// ---------------------------------------------------------------------------
// Radial Loewner chain: dg = g (W + g)/(W - g), g_0 = id, g_t(0) = 0,
// g_t'(0) = e^t (time is minus the log conformal radius seen from 0).
// Per-step constant driver W = e^{i w}; the step map is
//   phi(z) = w k^{-1}(e^{dt} k(z / w)),   k(z) = z / (1+z)^2,
// with k^{-1}(y) = 2y / (1 - 2y + sqrt(1 - 4y)) on C minus the slit [1/4, inf).
// ---------------------------------------------------------------------------

namespace detail {

inline Cpx koebe_quarter(Cpx z) {
    Cpx d = 1.0 + z;
    return z / (d * d);
}

inline Cpx koebe_quarter_inv(Cpx y) {
    // branch with k^{-1}(y) ~ y near 0; cut along [1/4, inf)
    Cpx s = std::sqrt(1.0 - 4.0 * y);
    return 2.0 * y / (1.0 - 2.0 * y + s);
}

// forward radial slit step: driver angle w (radians), duration dt
inline Cpx radial_step(Cpx z, double w, double dt) {
    Cpx rot = std::polar(1.0, w);
    Cpx zr = z / rot;
    if (std::abs(zr + 1.0) < 1e-14) return z;  // the antipode is fixed
    return rot * koebe_quarter_inv(std::exp(dt) * koebe_quarter(zr));
}

// inverse step (adds the slit back): e^{-dt} inside
inline Cpx radial_step_inv(Cpx z, double w, double dt) {
    Cpx rot = std::polar(1.0, w);
    return rot * koebe_quarter_inv(std::exp(-dt) * koebe_quarter(z / rot));
}

}  // namespace detail

class RadialChain {
public:
    // driver.values are a continuous lift of arg W_t
    explicit RadialChain(DriverPath driver) : driver_(std::move(driver)) {
        driver_.validate();
    }

    const DriverPath& driver() const { return driver_; }
    double horizon() const { return driver_.horizon(); }

    // Within a constant-driver step the point is swallowed when e^s k(z/w)
    // crosses the cut [1/4, inf) for some s in (0, dt].
    std::optional<Cpx> evolve(Cpx z, double t, double eps = kSwallowEps) const {
        Cpx y = z;
        for (size_t k = 0; k + 1 < driver_.times.size(); ++k) {
            double t0 = driver_.times[k], t1 = driver_.times[k + 1];
            if (t0 >= t) break;
            double dt = std::min(t1, t) - t0;
            double w = driver_.values[k + 1];
            if (std::abs(y - std::polar(1.0, w)) <= eps) return std::nullopt;
            Cpx zr = y / std::polar(1.0, w);
            if (std::abs(zr + 1.0) >= 1e-14) {
                Cpx kz = detail::koebe_quarter(zr);
                if (kz.real() > 0.0 && std::fabs(kz.imag()) <= eps * kz.real() &&
                    std::exp(dt) * kz.real() >= 0.25 * (1.0 - eps))
                    return std::nullopt;
            }
            y = detail::radial_step(y, w, dt);
        }
        return y;
    }

    // |g_t'(0)| accumulated by the composition; equals e^t exactly for the
    // per-step closed forms, so this is a consistency probe of the numerics.
    double derivative_at_origin(double t) const {
        double acc = 0.0;
        for (size_t k = 0; k + 1 < driver_.times.size(); ++k) {
            double t0 = driver_.times[k], t1 = driver_.times[k + 1];
            if (t0 >= t) break;
            acc += std::min(t1, t) - t0;
        }
        return std::exp(acc);
    }

    // Boundary trace of the hull: image of the unit-circle mesh under the full
    // inverse composition (these are the points of cl(U_T) seen from inside).
    // max_block_dt > 0 coarsens the composition by merging consecutive steps
    // (capacity-weighted mean angle) for cheap rendering-grade traces.
    std::vector<Cpx> boundary_trace(size_t mesh_n, double max_block_dt = 0.0) const {
        std::vector<std::pair<double, double>> steps;  // (w, dt)
        for (size_t k = 0; k + 1 < driver_.times.size(); ++k) {
            double dt = driver_.times[k + 1] - driver_.times[k];
            double w = driver_.values[k + 1];
            if (max_block_dt > 0.0 && !steps.empty() && steps.back().second + dt <= max_block_dt) {
                auto& [bw, bdt] = steps.back();
                bw = (bw * bdt + w * dt) / (bdt + dt);
                bdt += dt;
            } else {
                steps.emplace_back(w, dt);
            }
        }
        std::vector<Cpx> out(mesh_n);
        for (size_t i = 0; i < mesh_n; ++i) {
            double a = 2.0 * kPi * (static_cast<double>(i) + 0.5) / mesh_n;
            Cpx u = std::polar(1.0, a);
            for (size_t j = steps.size(); j-- > 0;)
                u = detail::radial_step_inv(u, steps[j].first, steps[j].second);
            out[i] = u;
        }
        return out;
    }

    Cpx inverse_map(Cpx u) const {
        for (size_t j = driver_.steps(); j-- > 0;) {
            double dt = driver_.times[j + 1] - driver_.times[j];
            double w = driver_.values[j + 1];
            u = detail::radial_step_inv(u, w, dt);
        }
        return u;
    }

private:
    DriverPath driver_;
};

// Adaptive uniform grid: dt small enough that |dW| <= step_cap per step when
// the driver is kappa-rough, dt <= (step_cap^2 / kappa).
inline double rough_driver_dt(double step_cap, double kappa = kKappa) {
    return step_cap * step_cap / kappa;
}

// Incremental point evolution along a chordal chain: advances one slit step at
// a time, tracking g_t(z) and g_t'(z).  Used when many checkpoints of one
// trajectory are needed.
class ChordalEvolver {
public:
    ChordalEvolver(const ChordalChain& chain, Cpx z)
        : chain_(&chain), y_(z), dy_(1.0) {}

    // advance through steps while t_step_end <= t; returns false once swallowed
    bool advance_to(double t, double eps = kSwallowEps) {
        const auto& d = chain_->driver();
        while (k_ + 1 < d.times.size() && d.times[k_ + 1] <= t * (1.0 + 1e-15)) {
            double dt = d.times[k_ + 1] - d.times[k_];
            double w = d.values[k_ + 1];
            Cpx diff = y_ - Cpx(w, 0.0);
            if (std::abs(diff) <= eps || y_.imag() <= 1e-12 || swallowed_) {
                swallowed_ = true;
                return false;
            }
            Cpx s = detail::sqrt_upper(diff * diff + Cpx(4.0 * dt, 0.0));
            dy_ *= diff / s;
            y_ = Cpx(w, 0.0) + s;
            ++k_;
        }
        return !swallowed_;
    }

    Cpx value() const { return y_; }
    Cpx derivative() const { return dy_; }
    double time() const { return chain_->driver().times[k_]; }
    double driver_value() const { return chain_->driver().values[k_]; }
    bool swallowed() const { return swallowed_; }
    double log_conformal_radius() const {
        return std::log(2.0 * y_.imag()) - std::log(std::abs(dy_));
    }

private:
    const ChordalChain* chain_;
    Cpx y_, dy_;
    size_t k_ = 0;
    bool swallowed_ = false;
};

// Vertical-slit unzipper: turns a simple curve in cl(H) started on R into its
// approximate driving function in capacity time.  Each vertex is mapped by the
// composed maps; the step map u -> x + sqrt((u - x)^2 + y^2) removes the
// segment to the current image x + iy and adds capacity y^2/4.
struct UnzipResult {
    DriverPath driver;
    bool ok = true;
    std::string error;
};

inline UnzipResult unzip_curve(std::vector<Cpx> pts) {
    UnzipResult res;
    if (pts.size() < 2) {
        res.ok = false;
        res.error = "unzip: need at least two points";
        return res;
    }
    res.driver.times.push_back(0.0);
    res.driver.values.push_back(pts.front().real());
    double t = 0.0;
    for (size_t k = 1; k < pts.size(); ++k) {
        double x = pts[k].real(), y = pts[k].imag();
        if (y < 0.0) y = 0.0;
        t += y * y / 4.0;
        res.driver.times.push_back(t);
        res.driver.values.push_back(x);
        for (size_t j = k + 1; j < pts.size(); ++j) {
            Cpx d = pts[j] - Cpx(x, 0.0);
            pts[j] = Cpx(x, 0.0) + detail::sqrt_upper(d * d + Cpx(y * y, 0.0));
        }
    }
    // capacity times must strictly increase; merge stalled vertices
    DriverPath clean;
    clean.times.push_back(res.driver.times.front());
    clean.values.push_back(res.driver.values.front());
    for (size_t i = 1; i < res.driver.times.size(); ++i) {
        if (res.driver.times[i] > clean.times.back() + 1e-14) {
            clean.times.push_back(res.driver.times[i]);
            clean.values.push_back(res.driver.values[i]);
        } else {
            clean.values.back() = res.driver.values[i];
        }
    }
    res.driver = std::move(clean);
    if (res.driver.times.size() < 2) {
        res.ok = false;
        res.error = "unzip: degenerate capacity range";
    }
    return res;
}

}  // namespace ll
