#ifndef HITSTAT_INDUCTION_HPP
#define HITSTAT_INDUCTION_HPP

#include <functional>
#include <optional>
#include <vector>

#include "hitstat/expanding.hpp"
#include "hitstat/rng.hpp"
#include "hitstat/symbolic.hpp"

namespace hitstat {

/// First-return system over an interval-map base. The base set is an
/// interval that is a union of partition cells (checked on construction for
/// the exact branch machinery; sampling paths accept any interval).
struct InducedSystem {
    const IntervalMap* map = nullptr;
    const IntervalMeasure* measure = nullptr;
    Interval xhat;
    double mu_xhat = 0.0;

    InducedSystem(const IntervalMap& m, const IntervalMeasure& mu, Interval base);
    bool in_base(double x) const { return xhat.contains(x); }
};

struct ReturnTime {
    long t = 0;
    bool censored = false;
};

// least n >= 1 with T^n(x) in xhat, censored at the horizon
ReturnTime first_return_time(const IntervalMap& map, const Interval& xhat, double x, long horizon);

// T-hat(x) = T^{t(x)}(x) together with the return time
std::pair<double, ReturnTime> induced_apply(const IntervalMap& map, const Interval& xhat, double x,
                                            long horizon);

// A_l(x) = sum of the first l return times; checks That^l(x) = T^{A_l}(x)
std::vector<long> return_sum_sequence(const IntervalMap& map, const Interval& xhat, double x,
                                      std::size_t count, long horizon);

struct KacReport {
    double empirical_mean = 0.0;
    double target = 0.0; // 1 / mu(xhat)
    double std_error = 0.0;
    double z_score = 0.0;
    double censored_fraction = 0.0;
    std::size_t samples = 0;
    bool censoring_warning = false;
};

// Monte Carlo Kac check; mu-hat sampled by rejection from the base sampler
KacReport kac_check(const InducedSystem& induced, std::size_t n_samples, std::uint64_t seed,
                    long horizon = 100000);

struct ReturnSpectrum {
    std::vector<double> mass;   // mass[n-1] = mu-hat(t = n), exact
    double tail = 0.0;          // 1 - sum
    double partial_mean = 0.0;  // sum n * mass over the computed range
};

// exact return-time distribution for a base set given as a union of
// depth-m cylinder words of the coding chain
ReturnSpectrum return_time_spectrum(const GibbsState& chain, const std::vector<Word>& base_words,
                                    int max_n);

struct LocalIfsBranch {
    long return_time = 0;
    Word word;          // itinerary of the domain cylinder (length t + depth(Gamma))
    Interval domain;    // A
    double slope = 0.0; // of phi_A (contraction, = 1/(T^n)' on A)
    double offset = 0.0;
    double mass = 0.0;  // mu-hat(A) = mu(A)/mu(Gamma)
};

struct LocalIfsStructure {
    Word gamma_word;
    Interval gamma;
    std::vector<LocalIfsBranch> branches;
    double covered_mass = 0.0;   // sum of branch masses
    double uncovered_mass = 0.0; // mass deficit up to max_return
    double lipschitz_bound = 0.0;
};

// enumerates the first-return branches of a single-cylinder neighborhood
// Gamma = [gamma_word]; each branch is an affine inverse of T^n onto Gamma
LocalIfsStructure build_local_ifs(const IntervalMap& map, const IntervalMeasure& measure,
                                  const Word& gamma_word, long max_return,
                                  std::size_t branch_budget = 1u << 20);

struct HitComparisonRow {
    double r = 0.0;
    long tau = 0;       // base entry time
    long tau_hat = 0;   // induced entry time
    double mu_ball = 0.0;
    double mu_hat_ball = 0.0;
    double base_statistic = 0.0;    // tau * mu
    double induced_statistic = 0.0; // tau_hat * mu_hat
    double ratio = 0.0;
    bool sandwich_ok = false; // the per-sample A_l/l sandwich, exact bookkeeping
};

struct HitComparison {
    std::vector<HitComparisonRow> rows;
    long horizon = 0;
    bool censored = false;
};

// paired base/induced entry statistics at every record radius <= r_max with
// the ball inside xhat; the base orbit is the exact symbolic stream of mu
HitComparison compare_hitting_statistics(const InducedSystem& induced, double y, double r_max,
                                         long horizon, Rng& rng);

// g_F(x) = sum_{k < tau_F(x)} g(T^k x); censored when the return exceeds horizon
std::optional<double> induced_potential(const IntervalMap& map, const Interval& base_set,
                                        const std::function<double(double)>& g, double x,
                                        long horizon);

} // namespace hitstat

#endif
