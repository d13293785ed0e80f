#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ll {

// One row of verification currency: a named test with its statistic and the
// rule that decided pass/fail.
struct StatReport {
    std::string name;
    size_t n = 0;
    double statistic = 0.0;
    double p_value = std::nan("");   // distributional tests
    double z_score = std::nan("");   // mean tests
    double tolerance = 0.0;          // p threshold or |z| bound, per rule
    std::string rule;                // "p>tol", "|z|<tol", "exact", ...
    bool pass = false;
    bool skipped = false;            // under-powered input, never a silent pass
    std::string detail;
    std::string config_hash;
    uint64_t seed = 0;
};

namespace stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double exponential_cdf(double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x); }

// Survival function of the Kolmogorov distribution, Q(x) = 2 sum (-1)^{k-1} e^{-2 k^2 x^2}.
inline double kolmogorov_q(double x) {
    if (x < 1e-8) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
        s += term;
        if (std::fabs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, s));
}

// Regularized upper incomplete gamma Q(a, x) by series / continued fraction.
inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    auto series_p = [&] {  // P(a,x) by series, good for x < a+1
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    };
    auto contfrac_q = [&] {  // Q(a,x) by Lentz continued fraction, good for x >= a+1
        const double tiny = 1e-300;
        double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
        for (int i = 1; i <= 500; ++i) {
            double an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if (std::fabs(d) < tiny) d = tiny;
            c = b + an / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            double del = d * c;
            h *= del;
            if (std::fabs(del - 1.0) < 1e-15) break;
        }
        return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
    };
    if (x < a + 1.0) return 1.0 - series_p();
    return contfrac_q();
}

inline double chi_squared_sf(double statistic, double dof) {
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

// One-sided exact critical values D_crit(n, alpha) for the one-sample KS test,
// n < 35 (two-sided alpha).  Classical table; used for the pass decision at
// small n where the asymptotic p is unreliable.
inline double ks_critical_small_n(size_t n, double alpha) {
    static const double a05[] = {0.975, 0.842, 0.708, 0.624, 0.563, 0.521, 0.486, 0.457,
                                 0.432, 0.410, 0.391, 0.375, 0.361, 0.349, 0.338, 0.328,
                                 0.318, 0.309, 0.301, 0.294, 0.287, 0.281, 0.275, 0.269,
                                 0.264, 0.259, 0.254, 0.250, 0.246, 0.242, 0.238, 0.234,
                                 0.231, 0.227};
    static const double a01[] = {0.995, 0.929, 0.828, 0.733, 0.669, 0.618, 0.577, 0.543,
                                 0.514, 0.490, 0.468, 0.450, 0.433, 0.418, 0.404, 0.392,
                                 0.381, 0.371, 0.363, 0.356, 0.348, 0.340, 0.333, 0.327,
                                 0.321, 0.316, 0.311, 0.306, 0.302, 0.297, 0.293, 0.289,
                                 0.285, 0.281};
    if (n == 0 || n >= 35) throw std::invalid_argument("ks_critical_small_n: n out of range");
    if (alpha <= 0.011) return a01[n - 1];
    return a05[n - 1];
}

struct KsResult {
    double d = 0.0;
    double p = 1.0;
    size_t n = 0;
};

// One-sample KS against a reference cdf.  Asymptotic p with the Stephens
// finite-n correction; below n = 35 the p is still reported but the caller
// should gate on ks_critical_small_n.
inline KsResult ks_test_statistic(std::vector<double> samples,
                                  const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const size_t n = samples.size();
    if (n == 0) throw std::invalid_argument("ks: empty sample");
    double d = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double f = cdf(samples[i]);
        double lo = static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(f - lo, hi - f));
    }
    double sn = std::sqrt(static_cast<double>(n));
    double p = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return {d, p, n};
}

inline KsResult ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.empty() || b.empty()) throw std::invalid_argument("ks2: empty sample");
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        double fa = static_cast<double>(i) / a.size();
        double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::fabs(fa - fb));
    }
    double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    double sn = std::sqrt(ne);
    double p = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return {d, p, a.size() + b.size()};
}

}  // namespace stats

// KS test wrapped as a StatReport; pass rule p > threshold (default 0.01).
inline StatReport ks_test(const std::string& name, const std::vector<double>& samples,
                          const std::function<double(double)>& cdf,
                          double p_threshold = 0.01) {
    StatReport r;
    r.name = name;
    r.tolerance = p_threshold;
    r.rule = "p>tol";
    if (samples.size() < 30) {
        if (samples.empty()) {
            r.skipped = true;
            r.detail = "insufficient data: empty sample";
            return r;
        }
        auto ks = stats::ks_test_statistic(samples, cdf);
        r.n = ks.n;
        r.statistic = ks.d;
        r.p_value = ks.p;
        double alpha = p_threshold <= 0.011 ? 0.01 : 0.05;
        r.pass = ks.d < stats::ks_critical_small_n(ks.n, alpha);
        r.detail = "small-n critical value table";
        return r;
    }
    auto ks = stats::ks_test_statistic(samples, cdf);
    r.n = ks.n;
    r.statistic = ks.d;
    r.p_value = ks.p;
    r.pass = ks.p > p_threshold;
    return r;
}

inline StatReport ks_two_sample(const std::string& name, const std::vector<double>& a,
                                const std::vector<double>& b, double p_threshold = 0.01) {
    StatReport r;
    r.name = name;
    r.tolerance = p_threshold;
    r.rule = "p>tol";
    if (a.size() < 30 || b.size() < 30) {
        r.skipped = true;
        r.detail = "insufficient data: need 30 samples per side";
        return r;
    }
    auto ks = stats::ks_two_sample_statistic(a, b);
    r.n = ks.n;
    r.statistic = ks.d;
    r.p_value = ks.p;
    r.pass = ks.p > p_threshold;
    return r;
}

// Pearson chi-square against given cell probabilities.
inline StatReport chi_square(const std::string& name, const std::vector<uint64_t>& counts,
                             const std::vector<double>& probs, double p_threshold = 0.01) {
    StatReport r;
    r.name = name;
    r.tolerance = p_threshold;
    r.rule = "p>tol";
    if (counts.size() != probs.size() || counts.size() < 2)
        throw std::invalid_argument("chi_square: counts/probs mismatch");
    uint64_t total = 0;
    for (auto c : counts) total += c;
    r.n = total;
    for (double p : probs) {
        if (p * total < 5.0) {
            r.skipped = true;
            r.detail = "insufficient data: expected count below 5";
            return r;
        }
    }
    double stat = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        double e = probs[i] * total;
        double d = counts[i] - e;
        stat += d * d / e;
    }
    r.statistic = stat;
    r.p_value = stats::chi_squared_sf(stat, static_cast<double>(counts.size() - 1));
    r.pass = r.p_value > p_threshold;
    return r;
}

// Mean-zero test: |z| < bound where z = mean / (sd/sqrt(n)).
inline StatReport z_test(const std::string& name, const std::vector<double>& samples,
                         double expected_mean = 0.0, double z_bound = 3.0) {
    StatReport r;
    r.name = name;
    r.tolerance = z_bound;
    r.rule = "|z|<tol";
    if (samples.size() < 2) {
        r.skipped = true;
        r.detail = "insufficient data";
        return r;
    }
    double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    double se = std::sqrt(var / n);
    r.n = samples.size();
    r.statistic = mean - expected_mean;
    r.z_score = se > 0.0 ? (mean - expected_mean) / se : 0.0;
    r.pass = std::fabs(r.z_score) < z_bound;
    return r;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double residual_rms = 0.0;
};

inline SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys,
                          bool through_origin) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("slope_fit: need matched samples, n >= 2");
    const double n = static_cast<double>(xs.size());
    SlopeFit f;
    if (through_origin) {
        double sxy = 0.0, sxx = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxy += xs[i] * ys[i];
            sxx += xs[i] * xs[i];
        }
        f.slope = sxy / sxx;
        double ss = 0.0;
        for (size_t i = 0; i < xs.size(); ++i) {
            double e = ys[i] - f.slope * xs[i];
            ss += e * e;
        }
        f.residual_rms = std::sqrt(ss / n);
        if (xs.size() > 1) f.slope_se = std::sqrt(ss / (n - 1.0) / sxx);
        return f;
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - f.intercept - f.slope * xs[i];
        ss += e * e;
    }
    f.residual_rms = std::sqrt(ss / n);
    if (xs.size() > 2) f.slope_se = std::sqrt(ss / (n - 2.0) / sxx);
    return f;
}

}  // namespace ll
