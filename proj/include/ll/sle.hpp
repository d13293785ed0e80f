#pragma once

#include <optional>
#include <vector>

#include "ll/conformal.hpp"
#include "ll/loewner.hpp"
#include "ll/rng.hpp"
#include "ll/stats.hpp"

namespace ll {

// ---------------------------------------------------------------------------
// Chordal SLE_kappa(rho) driver sampling.
//
//   dW = sqrt(kappa) dB + sum_i rho_i dt / (W - V_i),   dV_i = 2 dt / (V_i - W),
//
// with instantaneous reflection of W off the force-point tracks.  Near a
// collision the gap |W - V| is sqrt(kappa) times a Bessel process of dimension
// d = 1 + 2(rho+2)/kappa; inside a band around zero the gap is advanced by an
// exact squared-Bessel transition instead of Euler steps.
// ---------------------------------------------------------------------------

struct ForcePoint {
    double weight = 0.0;
    double position = 0.0;
};

struct ForceConfig {
    std::vector<ForcePoint> left;   // positions <= 0, decreasing: x^{1,L} >= x^{2,L} >= ...
    std::vector<ForcePoint> right;  // positions >= 0, increasing
    double kappa = kKappa;

    void validate() const;
    // Partial sums 1 + sum_{i<=j} rho^{i,q} scaled by lambda give the boundary
    // values of the conditional-mean function.
    std::vector<double> left_cumulative() const;   // rho-bar^{j,L}, j = 0..l
    std::vector<double> right_cumulative() const;  // rho-bar^{j,R}, j = 0..r
};

struct ChordalDriverSample {
    DriverPath driver;                             // W on the step grid
    std::vector<std::vector<double>> left_tracks;  // left_tracks[i][k] = V^{i+1,L}(t_k)
    std::vector<std::vector<double>> right_tracks;
    std::optional<double> threshold_time;          // continuation threshold, if hit

    size_t grid_size() const { return driver.times.size(); }
};

struct ChordalSamplerOptions {
    double dt = 1e-4;
    double step_cap = 0.05;          // |dW| target per step; dt is capped by step_cap^2/kappa
    double bessel_band_factor = 10;  // band = factor * sqrt(kappa dt)
    double swallow_eps = kSwallowEps;
    size_t max_steps = 50'000'000;
};

ChordalDriverSample sample_chordal_driver(const ForceConfig& cfg, double horizon,
                                          uint64_t seed,
                                          const ChordalSamplerOptions& opt = {});

// Conditional-mean boundary data at grid index k: breakpoints V^{i,q} - W with
// values -lambda(1 + rhobar^{j,L}) / +lambda(1 + rhobar^{j,R}).
PiecewiseBoundaryData conditional_mean_boundary(const ForceConfig& cfg,
                                                const ChordalDriverSample& s, size_t k);

// Conditional mean eta_t(z) = eta_t^0(f_t(z)) evaluated through the chain's
// composed maps.  Returns nullopt once z is swallowed.
std::optional<double> eta_conditional_mean(const ForceConfig& cfg,
                                           const ChordalDriverSample& s,
                                           const ChordalChain& chain, Cpx z, size_t k);

// ---------------------------------------------------------------------------
// Radial SLE_kappa(rhoL; rhoR) with two boundary force points, in angle-gap
// coordinates.  thetaL = argW - argV^L and thetaR = argV^R - argW live in
// [0, 2pi] with outer arc o = 2pi - thetaL - thetaR >= 0:
//
//   d thetaL = [ (rhoL+2)/2 cot(thetaL/2) - rhoR/2 cot(thetaR/2) ] dt + sqrt(k) dB
//   d thetaR = [ (rhoR+2)/2 cot(thetaR/2) - rhoL/2 cot(thetaL/2) ] dt - sqrt(k) dB
//   d argW   = sqrt(k) dB + [ rhoL/2 cot(thetaL/2) - rhoR/2 cot(thetaR/2) ] dt
//
// For weights with rhoL, rhoR > -2 and rhoL + rhoR <= -2 the continuation
// threshold is the collapse V^L = W = V^R, i.e. the outer arc shrinks to zero
// while one gap closes.  The closing side determines the loop orientation:
// left gap -> clockwise, right gap -> counterclockwise.
// ---------------------------------------------------------------------------

struct RadialDriverSample {
    DriverPath driver;             // continuous lift of arg W
    std::vector<double> theta_l;   // gap to V^L at each grid time
    std::vector<double> theta_r;   // gap to V^R
    std::optional<double> threshold_time;
    bool clockwise = false;        // valid when threshold_time is set
};

struct RadialSamplerOptions {
    double dt = 2e-4;
    double bessel_band = 1e-3;       // both-gaps-tiny regime (degenerate starts)
    double collapse_outer_eps = 1e-6;
    double decide_outer_eps = 1e-4;  // exact-martingale orientation decision surface
    double start_gap = 1e-9;         // degenerate-start regularization
    bool record_path = true;         // false: keep only endpoints (statistics runs)
    size_t max_steps = 200'000'000;
};

// Run until the continuation threshold or the horizon, whichever first.
// start_theta_l/r give the initial gaps (0 for force points adjacent to W).
RadialDriverSample sample_radial_driver(double rho_l, double rho_r, double start_w,
                                        double start_theta_l, double start_theta_r,
                                        double horizon, uint64_t seed,
                                        const RadialSamplerOptions& opt = {});

// Weights of the radial level-line process for exterior boundary value a:
// rhoL = -a/lambda - 1, rhoR = a/lambda - 1.
inline std::pair<double, double> level_line_weights(double a) {
    return {-a / kLambda - 1.0, a / kLambda - 1.0};
}

// ---------------------------------------------------------------------------
// Chordal SLE with one interior force point, for the chordal-radial
// equivalence check (weights with rhoL + rhoR + rhoI = kappa - 6):
//   dW = sqrt(k) dB + rhoL dt/(W-V^L) + rhoR dt/(W-V^R) + Re[rhoI/(W-V^I)] dt,
//   dV^I = 2 dt/(V^I - W) with V^I complex.
// ---------------------------------------------------------------------------

struct InteriorForceRunResult {
    // log CR(H; z) - log CR(H \ K_t; z) at the disconnection of z from infinity;
    // when the curve instead escapes to its target with z still attached, the
    // ratio converges and the limiting value is reported with escaped = true.
    double log_cr_at_disconnection = 0.0;
    bool disconnected = false;
    bool escaped = false;
};

InteriorForceRunResult run_chordal_interior_force(double rho_l, double rho_r, double rho_i,
                                                  Cpx z, double horizon, uint64_t seed,
                                                  const ChordalSamplerOptions& opt = {},
                                                  double x_left = 0.0, double x_right = 0.0);

// Radial run with two force points and a passive marked boundary point; stops
// when the marked point is disconnected from the origin: either its angular
// gap to the driver closes (the hull eats the boundary arc past it) or the
// chain collapses around the origin.  The stop time is -log CR of the origin
// component at disconnection.
struct RadialMarkedRunResult {
    double log_cr_at_disconnection = 0.0;
    bool disconnected = false;
};

RadialMarkedRunResult run_radial_marked_point(double rho_l, double rho_r,
                                              double start_theta_l, double start_theta_r,
                                              double marked_gap, double horizon,
                                              uint64_t seed,
                                              const RadialSamplerOptions& opt = {});

// Two-sample comparison of -log CR at first disconnection between the chordal
// interior-force-point process and the radial process with matching weights.
StatReport chordal_radial_equivalence_check(double rho_l, double rho_r, double rho_i,
                                            size_t n_samples, uint64_t seed,
                                            double p_threshold = 0.01);

}  // namespace ll
