#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ll/conformal.hpp"
#include "ll/loewner.hpp"
#include "ll/rng.hpp"

namespace ll {

// ---------------------------------------------------------------------------
// Square-lattice domain.  Interior sites satisfy a shape predicate; boundary
// (ring) sites are the outside sites 4-adjacent to the interior and carry
// Dirichlet values.  Site id = j * nx + i.
// ---------------------------------------------------------------------------

class Lattice {
public:
    // Build from a predicate over plane positions; the bounding box is
    // [x_lo, x_hi] x [y_lo, y_hi] and corners sit at half-integer offsets.
    Lattice(double h, double x_lo, double x_hi, double y_lo, double y_hi,
            const std::function<bool(double, double)>& inside,
            const std::function<double(double, double)>& boundary_value);

    static Lattice disc(int sites_per_radius, double boundary_value = 0.0);
    static Lattice half_disc(int sites_per_radius, double left_value, double right_value);
    static Lattice rectangle(int nx_sites, int ny_sites, double h, double boundary_value = 0.0);

    enum Kind : uint8_t { kOutside = 0, kInterior = 1, kRing = 2 };

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    int n_interior() const { return static_cast<int>(interior_sites_.size()); }

    int site(int i, int j) const { return j * nx_ + i; }
    bool in_grid(int i, int j) const { return i >= 0 && i < nx_ && j >= 0 && j < ny_; }
    Kind kind(int s) const { return static_cast<Kind>(kind_[s]); }
    Kind kind(int i, int j) const {
        return in_grid(i, j) ? static_cast<Kind>(kind_[site(i, j)]) : kOutside;
    }
    double boundary_value(int s) const { return bval_[s]; }
    int interior_index(int s) const { return iidx_[s]; }
    const std::vector<int>& interior_sites() const { return interior_sites_; }

    double site_x(int s) const { return x0_ + (s % nx_) * h_; }
    double site_y(int s) const { return y0_ + (s / nx_) * h_; }

    // Corners: corner (i,j) at (x0 + (i - 1/2) h, y0 + (j - 1/2) h); flanks
    // sites NE=(i,j), NW=(i-1,j), SW=(i-1,j-1), SE=(i,j-1).
    int corner_nx() const { return nx_ + 1; }
    int corner(int i, int j) const { return j * (nx_ + 1) + i; }
    double corner_x(int c) const { return x0_ + (c % (nx_ + 1) - 0.5) * h_; }
    double corner_y(int c) const { return y0_ + (c / (nx_ + 1) - 0.5) * h_; }
    int nearest_corner(double x, double y) const;

    // Dirichlet solve machinery (banded Cholesky over the interior).
    void factorize() const;
    // Discrete harmonic extension of the ring values (plus optional interior
    // source term): solves the 5-point Laplace system.
    std::vector<double> harmonic_mean() const;
    std::vector<double> harmonic_extension(
        const std::function<double(int)>& ring_value) const;
    // Column of the inverse interior Laplacian (graph normalization).
    std::vector<double> laplacian_inverse_column(int interior_idx) const;
    // Sample of N(0, A^{-1}) in the graph normalization.
    std::vector<double> sample_inverse_laplacian(Rng& rng) const;

private:
    void build(const std::function<bool(double, double)>& inside,
               const std::function<double(double, double)>& boundary_value);

    int nx_ = 0, ny_ = 0;
    double h_ = 0.0, x0_ = 0.0, y0_ = 0.0;
    std::vector<uint8_t> kind_;
    std::vector<double> bval_;
    std::vector<int> iidx_;
    std::vector<int> interior_sites_;

    struct Factor;
    mutable std::shared_ptr<Factor> factor_;
};

// ---------------------------------------------------------------------------
// Zero-mean-normalized discrete GFF sample.  Covariance is 2 pi times the
// inverse graph Laplacian, which converges to the Green's function normalized
// as G(z,w) ~ -log|z-w|; under it a radius-eps circle average has variance
// -log eps + log CR(D; z).  The mean is the harmonic extension of the ring
// values.
// ---------------------------------------------------------------------------

struct DiscreteField {
    const Lattice* domain = nullptr;
    std::vector<double> interior_value;  // indexed by interior_index

    double value(int s) const {
        if (domain->kind(s) == Lattice::kRing) return domain->boundary_value(s);
        return interior_value[domain->interior_index(s)];
    }
    DiscreteField negated() const;
};

DiscreteField sample_dgff(const Lattice& dom, uint64_t seed);

// Average of the field over the lattice shell ||p - z| - eps| <= h/2 + tiny.
double circle_average(const DiscreteField& f, Cpx z, double eps);

// ---------------------------------------------------------------------------
// Deterministic interface walk.  The walker traverses dual (corner-to-corner)
// edges keeping sites with sign >= 0 on its right.  Saddles (alternating signs
// around a corner) are resolved by the plaquette mean: the sign of the mean
// owns the diagonal, which makes the resolution invariant under field
// negation + direction reversal.
// ---------------------------------------------------------------------------

struct SiteView {
    // sign: +1, -1, or 0 when the site carries no sign (outside the walkable
    // region); value feeds the plaquette-mean saddle rule.
    std::function<int(int site)> sign;
    std::function<double(int site)> value;
    std::function<bool(int site)> walkable;  // edge valid iff a flank is walkable
};

struct WalkResult {
    std::vector<int> corners;       // visited corners, size = edges + 1
    std::vector<uint8_t> dirs;      // 0=N 1=E 2=S 3=W per edge
    bool reached_stop = false;      // stopped at a stop corner
    bool no_continuation = false;   // stopped because no valid edge remained
    bool budget_exceeded = false;
};

WalkResult walk_interface(const Lattice& dom, const SiteView& view, int start_corner,
                          const std::function<bool(int)>& stop_corner,
                          size_t max_steps = 0);

// Canonical undirected edge key for set comparisons.
uint64_t edge_key(const Lattice& dom, int corner, uint8_t dir);
std::vector<uint64_t> edge_set(const Lattice& dom, const WalkResult& w);

// ---------------------------------------------------------------------------
// Level lines of the discrete field
// ---------------------------------------------------------------------------

struct LevelLineResult {
    WalkResult walk;
    std::vector<Cpx> points;  // corner positions along the path
    bool threshold_at_start = false;
};

// Height-u level line from a boundary corner toward a boundary corner.  Ring
// sites with |bval + u| >= lambda keep their data sign; "touchable" stretches
// (|bval + u| < lambda) are signed virtually: + on the counterclockwise arc
// from start to target, - on the other, realizing the +/-lambda jump that the
// line imposes at its endpoints.
LevelLineResult extract_level_line(const DiscreteField& f, double u, int start_corner,
                                   int target_corner);

// Height-varying level line: heights u_1..u_k with capacity-style switching at
// the supplied fractions of the path (change rule: switch after a fixed number
// of steps of the previous stage, here given as step counts).
LevelLineResult extract_height_varying(const DiscreteField& f,
                                       const std::vector<double>& heights,
                                       const std::vector<size_t>& change_steps,
                                       int start_corner, int target_corner);

// Driving function of a boundary-to-boundary interface under a supplied
// conformal map from the lattice domain to H.
UnzipResult driving_function_of_interface(const std::vector<Cpx>& path_points,
                                          const std::function<Cpx(Cpx)>& to_halfplane,
                                          double resample_spacing = 0.0);

// Exact map from the upper unit half-disc onto H: z -> 2z / (1 + z^2),
// 0 -> 0, +-1 -> +-1, i -> infinity.
inline Cpx half_disc_to_halfplane(Cpx z) { return 2.0 * z / (1.0 + z * z); }

// ---------------------------------------------------------------------------
// Grid conformal-radius oracle: -log CR(D; z) equals the value at z of the
// harmonic extension of boundary data -log|w - z|.  Solved on the lattice;
// for polygon inputs the polygon is rasterized at two resolutions and
// Richardson-extrapolated.
// ---------------------------------------------------------------------------

double log_conformal_radius_sites(const Lattice& dom, const std::vector<uint8_t>& in_set,
                                  Cpx z);
double log_conformal_radius_polygon(const std::vector<Cpx>& polygon, Cpx z,
                                    int resolution = 192);

}  // namespace ll
