#ifndef HITSTAT_THERMO_HPP
#define HITSTAT_THERMO_HPP

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hitstat/rng.hpp"
#include "hitstat/symbolic.hpp"

namespace hitstat {

struct CylinderBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// A potential on the shift space. The built-ins are locally constant: the
/// value on a cylinder of depth >= `depth()` is exact. General evaluators
/// report (inf, sup) over the cylinder together with declared Hoelder data.
class Potential {
public:
    static Potential zero();
    // f(omega) = log p_{omega_1}
    static Potential bernoulli(std::vector<double> probabilities);
    // f(omega) = table[omega_1][omega_2], row-major
    static Potential markov_depth1(std::size_t alphabet_size, std::vector<double> table);
    // geometric potential of the truncated continued-fraction system:
    // f_t(omega) = -2t log(omega_1 + pi(sigma omega)), digits 1..truncation;
    // summable for t > 1/2, Hoelder but not locally constant
    static Potential gauss_t(double t, std::size_t truncation);

    // inf/sup of f over [w]; exact once |w| >= depth()
    CylinderBounds cylinder_bounds(const Word& w) const;
    // exact value for locally constant potentials, |w| >= depth()
    double value(const Word& w) const;

    bool locally_constant() const { return depth_ > 0; }
    int depth() const { return depth_; }
    double holder_exponent() const { return holder_exponent_; }
    double variation_constant() const { return variation_constant_; }

    struct SummabilityCertificate {
        double truncated_sum = 0.0; // sum_e exp(sup f|[e]) over the alphabet
        double tail_bound = 0.0;    // 0 for finite alphabets
    };
    SummabilityCertificate summability(const IncidenceStructure& A) const;

    const std::string& name() const { return name_; }

private:
    Potential() = default;
    std::string name_;
    int depth_ = 1; // 0: Hoelder but not locally constant
    double holder_exponent_ = 1.0;
    double variation_constant_ = 0.0;
    std::vector<double> values_;   // depth-1: per symbol; depth-2: row-major pairs
    std::size_t alphabet_hint_ = 0;
    double gauss_exponent_ = 0.0;
};

// bounds on S_n f over [w], n = |w|, by summing per-shift cylinder bounds
std::pair<double, double> birkhoff_sum_bounds(const Potential& f, const Word& w);

enum class PressureMethod { TruncatedLimit, Spectral };

struct PressureEstimate {
    double value = 0.0;
    int depth = 0;
    PressureMethod method = PressureMethod::TruncatedLimit;
    std::vector<double> partials;  // truncated-limit values for n = 1..depth
    bool spectral_fallback = false; // spectral request degraded to truncated-limit
    std::string note;
};

PressureEstimate pressure(const Potential& f, const IncidenceStructure& A, int depth,
                          PressureMethod method, std::size_t budget = 1u << 22);

struct EigenData {
    double lambda = 0.0;               // Perron eigenvalue of the weighted matrix
    std::vector<double> right;         // u: W u = lambda u, positive
    std::vector<double> left;          // v: v W = lambda v, positive, v.u = 1
};

/// Gibbs/equilibrium state of a locally constant potential, built from the
/// Perron eigendata of the weighted incidence matrix. Cylinder measures are
/// exact products; all reported constants derive from the same eigendata.
class GibbsState {
public:
    GibbsState(Potential f, IncidenceStructure A);

    double cylinder_measure(const Word& w) const;
    double pressure() const { return pressure_; }
    double gibbs_constant() const { return gibbs_q_; }
    // for potentials that are not locally constant the construction is a
    // depth-2 conditioning; the blocking error inflates Q per audited depth
    double gibbs_constant(int audit_depth) const {
        return gibbs_q_ * std::exp(q_depth_inflation_ * audit_depth);
    }
    double blocking_halfwidth() const { return q_depth_inflation_; }
    double entropy() const { return entropy_; }
    double mean_potential() const { return mean_potential_; }
    // largest beta with mu([w|_n]) <= exp(-beta n) for all n <= audit depth
    double decay_exponent(int audit_depth = 24) const;

    const EigenData& eigen() const { return eigen_; }
    const IncidenceStructure& incidence() const { return incidence_; }
    const Potential& potential() const { return potential_; }

    const std::vector<double>& initial_distribution() const { return initial_; }
    double kernel(Symbol a, Symbol b) const { return kernel_[static_cast<std::size_t>(a) * n_ + b]; }

    // exact mu([B] cap sigma^{-gap}[A]) for a Markov measure, gap >= |B|
    double joint_cylinder_measure(const Word& B, const Word& A, int gap) const;

private:
    Potential potential_;
    IncidenceStructure incidence_;
    std::size_t n_;
    EigenData eigen_;
    std::vector<double> initial_;   // p_a = v_a u_a
    std::vector<double> kernel_;    // P_ab = W_ab u_b / (lambda u_a)
    std::vector<double> weights_;   // W_ab
    double pressure_ = 0.0;
    double gibbs_q_ = 1.0;
    double q_depth_inflation_ = 0.0;
    double entropy_ = 0.0;
    double mean_potential_ = 0.0;
};

GibbsState gibbs_state(const Potential& f, const IncidenceStructure& A);

struct GibbsAuditReport {
    double worst_ratio_high = 1.0;  // max over cylinders of mu/exp(S_n f - nP)
    double worst_ratio_low = 1.0;   // min of the same
    Word attaining_high, attaining_low;
    double additivity_defect = 0.0;
    double normalization_defect = 0.0;
    bool pass = false;
};

GibbsAuditReport verify_gibbs_property(const GibbsState& state, int audit_depth,
                                       std::size_t budget = 1u << 22);

struct MixingEstimate {
    double ratio = 0.0;       // mu(sigma^{-n} A cap B) / (mu(A) mu(B))
    int gap = 0;
    bool exact = true;
};

MixingEstimate mixing_probe(const GibbsState& state, const Word& A, const Word& B, int gap);

struct MixingFit {
    double C = 1.0;      // sup over probed pairs/gaps of the joint/product ratio
    double D = 0.0;      // |ratio - 1| <= D gamma^(n-k) envelope
    double gamma = 0.5;
    bool correlation_detected = false;
};

// fits the psi-mixing envelope constants from exact kernel-power ratios
MixingFit fit_mixing_constants(const GibbsState& state, int max_gap = 64);

/// Stationary Markov-chain realization of the Gibbs state.
class MarkovSampler {
public:
    explicit MarkovSampler(const GibbsState& state);

    Symbol initial(Rng& rng) const;
    Symbol step(Symbol from, Rng& rng) const;
    std::vector<Symbol> sample_block(std::size_t length, Rng& rng) const;
    SymbolPath sample_typical(std::size_t length, std::uint64_t seed) const;

    double stationarity_defect() const; // max |p P - p|

private:
    std::size_t n_;
    std::vector<double> initial_cdf_;
    std::vector<double> kernel_cdf_;
    std::vector<double> initial_;
    std::vector<double> kernel_;
};

} // namespace hitstat

#endif
