#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

namespace ll {

using Cpx = std::complex<double>;

inline constexpr double kKappa = 4.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLambda = kPi / 2.0;  // field unit: half the height gap

// Disc automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z).  Maps a to 0.
struct MobiusDisc {
    Cpx a;
    double theta = 0.0;

    MobiusDisc(Cpx a_, double theta_) : a(a_), theta(theta_) {
        if (std::abs(a) >= 1.0) throw std::domain_error("mobius_disc: |a| >= 1");
    }

    Cpx operator()(Cpx z) const {
        return std::polar(1.0, theta) * (z - a) / (1.0 - std::conj(a) * z);
    }
    Cpx derivative(Cpx z) const {
        Cpx d = 1.0 - std::conj(a) * z;
        return std::polar(1.0, theta) * (1.0 - std::norm(a)) / (d * d);
    }
    MobiusDisc inverse() const {
        // w = e^{it}(z-a)/(1-conj(a)z)  =>  z = e^{-it}(w + e^{it}a)/(1 + conj(a)e^{-it} w)
        return MobiusDisc(-std::polar(1.0, theta) * a, -theta);
    }
};

// Conformal radius of a domain seen from z, given |phi'(z)| for a
// uniformizer phi : D -> U with phi(z) = 0.  CR = 1/|phi'(z)|.
inline double conformal_radius_from_derivative(double uniformizer_abs_derivative) {
    if (uniformizer_abs_derivative <= 0.0 || !std::isfinite(uniformizer_abs_derivative))
        throw std::domain_error("conformal radius: singular uniformizer");
    return 1.0 / uniformizer_abs_derivative;
}

inline double conformal_radius_disc(Cpx z) {  // CR(U; z)
    double r2 = std::norm(z);
    if (r2 >= 1.0) throw std::domain_error("conformal_radius_disc: z outside U");
    return 1.0 - r2;
}

inline double conformal_radius_halfplane(Cpx z) {  // CR(H; z) = 2 Im z
    if (z.imag() <= 0.0) throw std::domain_error("conformal_radius_halfplane: z not in H");
    return 2.0 * z.imag();
}

// Green's function of the upper half plane, G(z,w) = log |(z - conj(w)) / (z - w)|.
inline double green_halfplane(Cpx z, Cpx w) {
    if (z.imag() < 0.0 || w.imag() < 0.0)
        throw std::domain_error("green_halfplane: point below R");
    Cpx num = z - std::conj(w), den = z - w;
    if (std::abs(den) == 0.0) throw std::domain_error("green_halfplane: z == w");
    return std::log(std::abs(num / den));
}

// Green's function of the unit disc, G(z,w) = log |(1 - z conj(w)) / (z - w)|.
inline double green_disc(Cpx z, Cpx w) {
    Cpx den = z - w;
    if (std::abs(den) == 0.0) throw std::domain_error("green_disc: z == w");
    return std::log(std::abs((1.0 - z * std::conj(w)) / den));
}

// Conformal invariance: G_D(z,w) = G_H(phi(z), phi(w)) for a uniformizer phi: D -> H.
template <class MapToH>
double green_domain(Cpx z, Cpx w, MapToH&& uniformizer_to_halfplane) {
    return green_halfplane(uniformizer_to_halfplane(z), uniformizer_to_halfplane(w));
}

// Piecewise-constant boundary data on dH.  breakpoints x_1 < ... < x_n are the
// finite jump locations; values has n+1 entries, values[j] on (x_j, x_{j+1})
// with x_0 = -inf and x_{n+1} = +inf.
struct PiecewiseBoundaryData {
    std::vector<double> breakpoints;
    std::vector<double> values;

    void validate() const {
        if (values.size() != breakpoints.size() + 1)
            throw std::invalid_argument("boundary data: need one more value than breakpoints");
        for (size_t i = 1; i < breakpoints.size(); ++i)
            if (!(breakpoints[i - 1] < breakpoints[i]))
                throw std::invalid_argument("boundary data: breakpoints not increasing");
    }
};

// Bounded harmonic extension to z in H of piecewise-constant boundary data,
// via the argument form of the Poisson formula:
//   u(z) = (1/pi) * sum_j v_j (A_{j+1} - A_j),  A_j = arg(z - x_j) in (0, pi),
// with A_0 = 0 and A_{n+1} = pi.
inline double harmonic_extension_halfplane(const PiecewiseBoundaryData& data, Cpx z) {
    data.validate();
    const size_t n = data.breakpoints.size();
    if (z.imag() == 0.0) {
        // Boundary evaluation: return the piece value; breakpoints are undefined.
        for (double x : data.breakpoints)
            if (z.real() == x)
                throw std::domain_error("harmonic_extension: z at a breakpoint");
        size_t j = 0;
        while (j < n && z.real() > data.breakpoints[j]) ++j;
        return data.values[j];
    }
    if (z.imag() < 0.0) throw std::domain_error("harmonic_extension: z below R");
    double acc = 0.0;
    double prev = 0.0;  // A_0
    for (size_t j = 0; j < n; ++j) {
        double aj = std::arg(z - Cpx(data.breakpoints[j], 0.0));  // in (0, pi)
        acc += data.values[j] * (aj - prev);
        prev = aj;
    }
    acc += data.values[n] * (kPi - prev);
    return acc / kPi;
}

// Harmonic measure from z in U of the counterclockwise boundary arc from angle
// alpha to angle beta.  Computed exactly by moving z to the origin.
inline double harmonic_measure_disc_arc(Cpx z, double alpha, double beta) {
    MobiusDisc m(z, 0.0);
    double a = std::arg(m(std::polar(1.0, alpha)));
    double b = std::arg(m(std::polar(1.0, beta)));
    double span = b - a;
    span = std::fmod(span, 2.0 * kPi);
    if (span < 0.0) span += 2.0 * kPi;
    return span / (2.0 * kPi);
}

// Harmonic extension in U of piecewise-constant data on arcs.  angles are the
// jump locations in increasing order within one period; values[j] sits on the
// ccw arc (angles[j], angles[j+1]), cyclically.
inline double harmonic_extension_disc(const std::vector<double>& angles,
                                      const std::vector<double>& values, Cpx z) {
    if (angles.size() != values.size() || angles.empty())
        throw std::invalid_argument("harmonic_extension_disc: need one value per arc");
    double acc = 0.0;
    for (size_t j = 0; j < angles.size(); ++j) {
        double a = angles[j];
        double b = angles[(j + 1) % angles.size()];
        acc += values[j] * harmonic_measure_disc_arc(z, a, b);
    }
    return acc;
}

}  // namespace ll
