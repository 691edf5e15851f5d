#ifndef HITSTAT_EXPANDING_HPP
#define HITSTAT_EXPANDING_HPP

#include <optional>
#include <string>
#include <vector>

#include "hitstat/rational.hpp"
#include "hitstat/rng.hpp"
#include "hitstat/symbolic.hpp"
#include "hitstat/thermo.hpp"

namespace hitstat {

struct Interval {
    double lo = 0.0;
    double hi = 0.0; // right-open [lo, hi)
    double width() const { return hi - lo; }
    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x < hi; }
};

/// A Markov interval map on [0,1). Cells are the branch domains, right-open;
/// itineraries resolve right-continuously at endpoints. The Gauss map is the
/// countable-branch example and carries no uniform expansion constant.
class IntervalMap {
public:
    static IntervalMap doubling();
    static IntervalMap ternary();
    // piecewise-linear Markov map: branch b maps [cuts[b], cuts[b+1]) affinely
    // onto [image_lo[b], image_hi[b]), which must be a union of cells
    static IntervalMap piecewise_linear(std::vector<double> cuts, std::vector<double> image_lo,
                                        std::vector<double> image_hi, std::string name);
    static IntervalMap golden_markov(); // two-branch table with incidence [[1,1],[1,0]]
    static IntervalMap gauss();

    const std::string& name() const { return name_; }

    double apply(double x) const;
    // exact step for the integer-slope maps (x -> base*x mod 1) and Gauss
    std::optional<Rational> apply(const Rational& x) const;
    double derivative(double x) const;

    bool uniformly_expanding() const { return uniform_; }
    double expansion_lambda() const { return lambda_; }
    double expansion_delta() const { return delta_; }

    std::size_t cell_count() const { return cells_.size(); }
    Interval cell(std::size_t i) const { return cells_[i]; }
    int branch_index(double x) const;
    // inverse of the branch restricted map, affine for the linear families
    double inverse_in_branch(int branch, double y) const;
    double branch_slope(int branch) const { return slopes_[static_cast<std::size_t>(branch)]; }
    double branch_offset(int branch) const { return offsets_[static_cast<std::size_t>(branch)]; }

    // Markov incidence between cells: A_ij = 1 iff cell j subset T(cell i)
    IncidenceStructure cell_incidence() const;

    bool is_linear_mod_one() const { return base_ > 0; }
    int linear_base() const { return base_; }

private:
    std::string name_;
    std::vector<Interval> cells_;
    std::vector<double> slopes_, offsets_; // T(x) = slope*x + offset on the cell
    double lambda_ = 2.0;
    double delta_ = 0.5;
    bool uniform_ = true;
    bool gauss_ = false;
    int base_ = 0; // >0 for x -> base*x mod 1
};

double iterate(const IntervalMap& map, double x, long n);
std::optional<Rational> iterate(const IntervalMap& map, const Rational& x, long n);

struct DriftedPoint {
    double value = 0.0;
    double drift_bound = 0.0; // accumulated rounding, amplified by |T'| along the orbit
};

// double-precision orbit with its worst-case drift bound (capped at 1)
DriftedPoint iterate_with_drift(const IntervalMap& map, double x, long n);

/// Refinements R^n of the branch partition and their coding.
class MarkovPartition {
public:
    explicit MarkovPartition(const IntervalMap& map) : map_(&map) {}

    // itinerary word of depth n plus the cell of R^n containing x
    std::pair<Word, Interval> cell_of(double x, int n) const;
    Interval cell_interval(const Word& w) const;
    double depth_mesh(int n) const; // diam bound delta * lambda^{-(n-1)}

    const IntervalMap& map() const { return *map_; }

private:
    const IntervalMap* map_;
};

/// Measure on [0,1) evaluated through its CDF. PushedMarkov is the
/// pushforward of a symbolic Gibbs state through the itinerary coding; it
/// borrows the map, which must outlive the measure.
class IntervalMeasure {
public:
    static IntervalMeasure lebesgue();
    static IntervalMeasure pushed_markov(const IntervalMap& map, GibbsState state);
    static IntervalMeasure gauss(); // dmu = dx / ((1+x) ln 2)

    double cdf(double x) const;
    double interval_mass(double lo, double hi) const;
    double ball(double y, double r) const; // open ball intersected with [0,1)
    double sample(Rng& rng) const;

    bool is_lebesgue() const { return kind_ == Kind::Lebesgue; }
    const GibbsState* chain() const { return state_ ? &*state_ : nullptr; }
    const IntervalMap* coding_map() const { return map_; }

private:
    enum class Kind { Lebesgue, PushedMarkov, GaussClosedForm };
    Kind kind_ = Kind::Lebesgue;
    const IntervalMap* map_ = nullptr;
    std::optional<GibbsState> state_;
};

/// The union R_r of order-n(r) cells meeting B(y,r), kept as its interval
/// hull (the met cells are consecutive).
struct MarkovCover {
    double y = 0.0, r = 0.0;
    int n_of_r = 0;   // least n with delta * lambda^{-(n-1)} <= r^2
    int order = 0;    // ord(R_r) <= n(r)
    Interval hull;
    double mu_cover = 0.0;
    double mu_ball = 0.0;
    double ratio = 0.0;             // mu(R_r) / mu(B(y,r))
    bool ball_inside_cover = false; // B(y,r) subset R_r
    bool cover_inside_blowup = false; // R_r subset B(y, r + r^2)
};

MarkovCover markov_cover(const MarkovPartition& partition, const IntervalMeasure& measure,
                         double y, double r);

struct GoodRadiusProbe {
    std::vector<double> radii;
    std::vector<bool> flagged;      // doubling-type ratio <= 2
    double density = 0.0;           // flagged fraction overall
    std::vector<std::pair<double, double>> per_decade; // (decade upper r, density)
};

GoodRadiusProbe good_radius_density(const IntervalMeasure& measure, double y, double r_min,
                                    double r_max, std::size_t grid_size);

/// T_x^{-n}: the inverse branch of T^n through the orbit of x.
class InverseBranchHandle {
public:
    InverseBranchHandle(const IntervalMap& map, double x, int order);
    double apply(double z) const;        // defined near T^n(x)
    double contraction_bound() const;    // lambda^{-n} for the linear families
    int order() const { return static_cast<int>(branches_.size()); }
    double base_point() const { return x_; }
    double endpoint() const { return fx_; }

private:
    const IntervalMap* map_;
    double x_, fx_;
    std::vector<int> branches_;
};

} // namespace hitstat

#endif
