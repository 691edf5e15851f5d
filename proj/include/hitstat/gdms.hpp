#ifndef HITSTAT_GDMS_HPP
#define HITSTAT_GDMS_HPP

#include <optional>
#include <string>
#include <vector>

#include "hitstat/expanding.hpp"
#include "hitstat/rng.hpp"
#include "hitstat/symbolic.hpp"
#include "hitstat/thermo.hpp"

namespace hitstat {

/// One contraction of the system. Affine edges are phi(x) = a x + b; Moebius
/// edges are the continued-fraction maps phi(x) = 1/(digit + x).
struct GdmsEdge {
    enum class Family { Affine, Moebius };
    Family family = Family::Affine;
    int range_vertex = 0;  // i(e): phi_e maps into X_{i(e)}
    int domain_vertex = 0; // t(e): phi_e is defined on X_{t(e)}
    double a = 0.0, b = 0.0;
    int digit = 0;
};

struct ProjectionResult {
    double point = 0.0;  // midpoint of phi_{w}(X_{t(w_n)})
    double radius = 0.0; // rigorous half-width
    Interval box;
};

/// Graph directed Markov system over a finite vertex set. Words are edge
/// sequences; (a,b) is admissible when the composition phi_a . phi_b is
/// defined, i.e. the domain vertex of a equals the range vertex of b.
class Gdms {
public:
    Gdms(std::vector<Interval> vertex_sets, std::vector<GdmsEdge> edges, std::string name);

    static Gdms cantor3();                  // x/3 and x/3 + 2/3 on [0,1]
    static Gdms dyadic();                   // x/2 and x/2 + 1/2 on [0,1]
    static Gdms gauss_cf(int truncation);   // 1/(n+x), n = 1..N, truncated countable
    static Gdms affine_pair(double a1, double b1, double a2, double b2); // custom on [0,1]

    const std::string& name() const { return name_; }
    std::size_t edge_count() const { return edges_.size(); }
    const GdmsEdge& edge(std::size_t e) const { return edges_[e]; }
    std::size_t vertex_count() const { return vertices_.size(); }
    Interval vertex_set(std::size_t v) const { return vertices_[v]; }
    bool truncated() const { return truncated_; }

    bool admissible_pair(Symbol a, Symbol b) const {
        return edges_[static_cast<std::size_t>(a)].domain_vertex ==
               edges_[static_cast<std::size_t>(b)].range_vertex;
    }
    bool admissible(const Word& w) const;
    IncidenceStructure incidence() const;

    double contraction_ratio() const { return s_; }
    // rigorous bound on diam(phi_w(X)) over |w| = n
    double diameter_bound(int n) const;

    Interval image(const Word& w) const;          // phi_w(X_{t(w_n)})
    ProjectionResult project(const Word& w) const;
    // pi of the eventually periodic code head cycle cycle cycle ...
    double project_periodic(const Word& head, const Word& cycle) const;

    // |phi_w'(x)| by the chain rule along the word (log-space, exact families)
    double log_derivative(const Word& w, double x) const;
    double apply_edge(Symbol e, double x) const;
    double edge_log_derivative(Symbol e, double x) const;

    struct SoscReport {
        bool osc = false;
        bool sosc = false;
        std::string certificate;
    };
    SoscReport check_sosc() const;

private:
    std::string name_;
    std::vector<Interval> vertices_;
    std::vector<GdmsEdge> edges_;
    double s_ = 0.5;
    bool truncated_ = false;
    bool moebius_ = false;
};

/// A point of the limit set always travels with its code; pi^{-1} is never
/// inverted numerically.
struct CodedPoint {
    SymbolPath code;
    double value(const Gdms& system, int depth = 48) const;
};

// T_S(z) = pi(sigma(code)): the induced map acts by shifting the code
CodedPoint induced_map_apply(const Gdms& system, const CodedPoint& z);

/// Symbolic measure paired with the coding projection. Finite systems carry a
/// Gibbs chain; the truncated continued-fraction system uses the Gauss
/// closed form for cylinder masses and orbit-digit sampling. Borrows the
/// system, which must outlive the measure.
class GdmsMeasure {
public:
    static GdmsMeasure from_chain(const Gdms& system, GibbsState chain);
    static GdmsMeasure gauss_cf(const Gdms& system);

    double cylinder_mass(const Word& w) const;
    const Gdms& system() const { return *system_; }

    // next code symbol, given sampler state (orbit point for gauss-cf)
    Symbol sample_initial(Rng& rng, double& orbit_state) const;
    Symbol sample_step(Symbol prev, Rng& rng, double& orbit_state) const;
    Word sample_code(std::size_t length, Rng& rng) const;

    double entropy() const;
    // exact mean of -log|phi'| when available (affine); NaN otherwise
    double lyapunov_closed_form() const;

    const GibbsState* chain() const { return chain_ ? &*chain_ : nullptr; }
    bool is_gauss() const { return gauss_; }

private:
    const Gdms* system_ = nullptr;
    std::optional<GibbsState> chain_;
    bool gauss_ = false;
};

struct BallMeasure {
    double lower = 0.0;
    double upper = 0.0;
    double estimate = 0.0;
    double std_error = 0.0; // Monte Carlo only
    bool exact = false;
};

enum class BallMethod { CylinderCover, MonteCarlo };

BallMeasure ball_measure(const GdmsMeasure& measure, double y, double r, BallMethod method,
                         int depth_budget = 40, std::size_t samples = 100000, Rng* rng = nullptr);

struct PowerLawFit {
    double alpha = 0.0;
    double log_c = 0.0;
    double max_residual = 0.0;
    double alpha_theory = 0.0; // h / (2 chi)
    std::vector<double> radii, masses;
};

PowerLawFit power_law_fit(const GdmsMeasure& measure, double y, const std::vector<double>& radii,
                          double entropy, double lyapunov, int depth_budget = 48);

struct LyapunovEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

LyapunovEstimate lyapunov(const GdmsMeasure& measure, std::size_t length, std::uint64_t seed);

/// Cover by order-n(r) cylinder images meeting B(y,r); the GDMS analog of the
/// Markov-partition cover.
struct GdmsCover {
    int n_of_r = 0;
    std::vector<Word> cylinders;
    double mass = 0.0;
    double mu_ball_lower = 0.0;
    bool cover_inside_blowup = false; // every image box inside B(y, r + r^2)
};

GdmsCover gdms_cover(const GdmsMeasure& measure, double y, double r, int max_depth = 64);

/// Conditionally-invariant density of the truncated continued-fraction
/// system, from power iteration of the truncated transfer operator on a
/// grid. lambda is its leading eigenvalue (log lambda ~= pressure of the
/// truncation; 1 - lambda is on the order of the 1/N mass deficit).
struct CfTruncatedDensity {
    int truncation = 0;
    double lambda = 1.0;
    double tail_bound = 0.0;
    std::vector<double> node_values; // density at x_i = i/grid, trapezoid-normalized
    double interval_mass(double lo, double hi) const;
    double first_digit_mass(int digit) const; // measure of the cylinder [digit]
};

CfTruncatedDensity cf_truncated_density(int truncation, int grid = 4096, int iterations = 60);

} // namespace hitstat

#endif
