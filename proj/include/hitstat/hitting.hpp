#ifndef HITSTAT_HITTING_HPP
#define HITSTAT_HITTING_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hitstat/expanding.hpp"
#include "hitstat/rational.hpp"
#include "hitstat/rng.hpp"
#include "hitstat/symbolic.hpp"
#include "hitstat/thermo.hpp"

namespace hitstat {

/// Exact base-2 symbolic orbit: the doubling map acts as a shift on the bit
/// stream, so stepping is O(1) and free of floating drift. The leading 64
/// bits give the current point to full double precision.
class BitOrbit {
public:
    explicit BitOrbit(Rng rng) : rng_(rng) {
        hi_ = rng_.next_u64();
        lo_ = rng_.next_u64();
    }
    void step() {
        hi_ = (hi_ << 1) | (lo_ >> 63);
        lo_ <<= 1;
        if (++used_ == 64) {
            lo_ = rng_.next_u64();
            used_ = 0;
        }
    }
    std::uint64_t window() const { return hi_; }
    double point() const { return static_cast<double>(hi_ >> 11) * 0x1.0p-53; }
    bool leading_bit() const { return (hi_ >> 63) != 0; }

private:
    Rng rng_;
    std::uint64_t hi_ = 0, lo_ = 0;
    int used_ = 0;
};

struct HitRecord {
    long n = 0;      // record time n_k
    double r = 0.0;  // record distance r_k = d(T^{n_k} x, y)
    int depth = -1;  // symbolic wedge length, when applicable
};

/// Closest-approach records: n_1 = 1, n_{k+1} = min{n : d(T^n x, y) < r_k}.
struct HittingRecordSequence {
    std::vector<HitRecord> records;
    long horizon = 0;
    bool terminal_hit = false; // a record with r = 0 (exact landing)

    // tau_{B(y,r)} = n_k for the first record with r_k < r; nullopt when the
    // orbit never entered the ball within the horizon
    std::optional<long> entry_time(double r) const;
};

HittingRecordSequence record_sequence(const IntervalMap& map, double x, double y, long horizon);
// Lebesgue-typical source for the doubling map, driven by the exact bit
// stream (double orbits of x -> 2x mod 1 lose one mantissa bit per step)
HittingRecordSequence record_sequence_stream(Rng rng, double y, long horizon);
// exact rational orbit for the integer-slope maps
HittingRecordSequence record_sequence(const IntervalMap& map, const Rational& x, const Rational& y,
                                      long horizon);
// shift space with the metric d_alpha; records carry the wedge depth
HittingRecordSequence record_sequence(const SymbolPath& omega, const SymbolPath& rho,
                                      const UltrametricSpec& spec, long horizon,
                                      std::size_t max_depth = 64);

struct EntryRow {
    double r = 0.0;
    long tau = 0;
    double mu_ball = 0.0;
    double e_value = 0.0;     // E_r = tau * mu(B(y,r))
    double running_max = 0.0;
    bool censored = false;
};

struct EntryStatisticTable {
    std::vector<EntryRow> rows; // in decreasing-r order
};

EntryStatisticTable entry_table(const HittingRecordSequence& records,
                                const std::function<double(double)>& mu_ball_of_r,
                                const std::vector<double>& radius_schedule);

struct CylinderEntryRow {
    int depth = 0;
    long tau = 0;
    double mu = 0.0;
    double e_value = 0.0;
    bool censored = false;
};

// cylinder-mode entry statistics: targets [rho|_m] with exact Gibbs masses
std::vector<CylinderEntryRow> cylinder_entry_table(const HittingRecordSequence& records,
                                                   const GibbsState& chain, const SymbolPath& rho,
                                                   int max_depth);

struct RateEstimates {
    double hit_lower = 0.0, hit_upper = 0.0;   // slope envelopes of log tau vs -log r
    double dim_lower = 0.0, dim_upper = 0.0;   // slope envelopes of log mu vs log r
    double hit_global = 0.0, dim_global = 0.0; // whole-range least squares
    std::size_t records_used = 0;
};

RateEstimates rate_estimates(const HittingRecordSequence& records,
                             const std::function<double(double)>& mu_ball_of_r,
                             std::size_t window = 8);

/// Divergence-trend scan across horizons. Each pair tracks the running
/// maximum of n_k * mu(B(y, r_k)) and the minimum over records k >= 3.
struct DivergencePair {
    int pair_id = 0;
    std::vector<double> running_max; // one entry per horizon
    double min_tail = 0.0;           // min over records k >= 3 of n_k mu(B_k)
    long record_count = 0;
    bool max_nondecreasing = true;
};

struct DivergenceScan {
    std::vector<DivergencePair> pairs;
    std::vector<double> median_running_max; // per horizon
    double median_min_tail = 0.0;
    bool trend_strictly_increasing = false;
};

enum class ScanSystem { ShiftBernoulliHalf, DoublingLebesgue };

DivergenceScan divergence_scan(ScanSystem system, std::size_t n_pairs,
                               const std::vector<long>& horizons, std::uint64_t seed, int workers);

// generic (slower) scan over an arbitrary chain; balls are cylinders in the
// d_alpha metrics, so the tracked statistic n_k mu([y|_{w+1}]) needs no alpha
DivergenceScan divergence_scan_chain(const GibbsState& chain, std::size_t n_pairs,
                                     const std::vector<long>& horizons, std::uint64_t seed,
                                     int workers);

struct WaitingTail {
    std::vector<long> k_grid;
    std::vector<double> a_hat, a_se; // mu(tau_B <= k) with binomial errors
    std::vector<double> q_hat, q_se; // mu(tau_R <= k)
    double mu_ball = 0.0;
    double mu_cover = 0.0;
    std::size_t samples = 0;
    bool bound_ok = true; // q_hat <= k mu(R) + 3 sigma on every grid point
    // invariance of mu on shifted windows: mu(exists k1 <= l <= k2: T^l x in R)
    // against mu(exists 0 <= l <= k2 - k1: T^l x in R)
    double window_shifted = 0.0;
    double window_based = 0.0;
    double window_se = 0.0;
    bool window_ok = true;
};

// cylinder target on the shift: in the ultrametric, the order-n(r) cover of a
// ball coincides with the ball itself (balls are cylinders)
WaitingTail waiting_tail(const GibbsState& chain, const Word& target,
                         const std::vector<long>& k_grid, std::size_t samples,
                         std::uint64_t seed);
// interval-map target with its Markov cover R_r
WaitingTail waiting_tail(const IntervalMap& map, const IntervalMeasure& measure, double y,
                         double r, const std::vector<long>& k_grid, std::size_t samples,
                         std::uint64_t seed);

/// Constructive schedule for the divergence certificate: mixing constants,
/// Gamma(M) = 1 - exp(-4MC), the gap s with Gamma (1 + D gamma^s) < 1,
/// W = 1 + D gamma^s, the stage count Omega with (W Gamma)^{Omega+1} <= delta/2,
/// and a radius ladder obeying k_{i+1} >= 2(s + k_i) and
/// mu(R_{i+1}) <= (delta / 2 Omega) / (k_i + s).
struct CertificateRung {
    int index = 0;
    int depth = 0;        // cylinder depth standing in for the radius
    double radius = 0.0;  // d_alpha radius of the cylinder ball
    double mu_cover = 0.0;
    double k = 0.0;             // 2M / mu(R_i)
    long deadline = 0;          // [M / mu(B_i)]
    double slack_spacing = 0.0; // k_{i+1} - 2(s + k_i) at the next rung
    double slack_mass = 0.0;    // (delta/2 Omega)/(k_i + s) - mu(R_{i+1})
};

struct DivergenceCertificate {
    double M = 0.0, delta = 0.0;
    MixingFit mixing;
    double gamma_of_m = 0.0; // Gamma(M)
    int s = 0;
    double w = 1.0;
    int omega = 0;
    std::vector<CertificateRung> rungs;
    bool feasible = false;
    std::string binding_constraint;
    // Monte Carlo verdict on mu(intersection of A_{r_i}^c)
    double p_hat = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    bool verdict = false; // p_hat <= delta within 3 sigma
};

DivergenceCertificate build_certificate(const GibbsState& chain, const SymbolPath& target,
                                        double M, double delta, std::size_t samples,
                                        std::uint64_t seed, int max_omega = 1000,
                                        int max_depth = 400);

// smallest stage count with (W Gamma)^{Omega+1} <= delta / 2
int certificate_stage_count(double w, double gamma_of_m, double delta);

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

} // namespace hitstat

#endif
