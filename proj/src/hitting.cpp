#include "hitstat/hitting.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace hitstat {

std::optional<long> HittingRecordSequence::entry_time(double r) const {
    for (const HitRecord& rec : records)
        if (rec.r < r) return rec.n;
    return std::nullopt;
}

HittingRecordSequence record_sequence(const IntervalMap& map, double x, double y, long horizon) {
    if (horizon < 1) throw std::invalid_argument("record_sequence: horizon must be >= 1");
    HittingRecordSequence out;
    out.horizon = horizon;
    double cur = x;
    double best = std::numeric_limits<double>::infinity();
    for (long n = 1; n <= horizon; ++n) {
        cur = map.apply(cur);
        const double d = std::abs(cur - y);
        if (n == 1 || d < best) {
            best = d;
            out.records.push_back({n, d, -1});
            if (d == 0.0) { out.terminal_hit = true; break; }
        }
    }
    return out;
}

HittingRecordSequence record_sequence_stream(Rng rng, double y, long horizon) {
    if (horizon < 1) throw std::invalid_argument("record_sequence_stream: horizon must be >= 1");
    HittingRecordSequence out;
    out.horizon = horizon;
    BitOrbit orbit(rng);
    double best = std::numeric_limits<double>::infinity();
    for (long n = 1; n <= horizon; ++n) {
        orbit.step();
        const double d = std::abs(orbit.point() - y);
        if (n == 1 || d < best) {
            best = d;
            out.records.push_back({n, d, -1});
            if (d < 0x1.0p-50) break; // below stream resolution
        }
    }
    return out;
}

HittingRecordSequence record_sequence(const IntervalMap& map, const Rational& x, const Rational& y,
                                      long horizon) {
    if (horizon < 1) throw std::invalid_argument("record_sequence: horizon must be >= 1");
    HittingRecordSequence out;
    out.horizon = horizon;
    Rational cur = x;
    Rational best(1, 1);
    bool have_best = false;
    for (long n = 1; n <= horizon; ++n) {
        auto next = map.apply(cur);
        if (!next) throw std::domain_error("record_sequence: map has no exact rational step");
        cur = *next;
        const Rational d = abs(cur - y); // exact comparison, no float drift
        if (!have_best || d < best) {
            best = d;
            have_best = true;
            out.records.push_back({n, d.value(), -1});
            if (d.num == 0) { out.terminal_hit = true; break; }
        }
    }
    return out;
}

HittingRecordSequence record_sequence(const SymbolPath& omega, const SymbolPath& rho,
                                      const UltrametricSpec& spec, long horizon,
                                      std::size_t max_depth) {
    if (horizon < 1) throw std::invalid_argument("record_sequence: horizon must be >= 1");
    HittingRecordSequence out;
    out.horizon = horizon;
    int best = -1;
    for (long n = 1; n <= horizon; ++n) {
        const SymbolPath shifted = omega.shifted(static_cast<std::size_t>(n));
        // distance strictly improves iff the wedge strictly deepens; probe
        // just past the standing record, resolve fully only on improvement
        const std::size_t cap = std::min(max_depth, static_cast<std::size_t>(best + 2));
        WedgeResult w = wedge_length(shifted, rho, std::max<std::size_t>(cap, 1));
        if (w.at_least_horizon && cap < max_depth) w = wedge_length(shifted, rho, max_depth);
        const int depth = w.at_least_horizon ? static_cast<int>(max_depth)
                                             : static_cast<int>(w.length);
        if (n == 1 || depth > best) {
            if (depth > best) best = depth;
            out.records.push_back({n, std::exp(-spec.alpha * static_cast<double>(depth)), depth});
            if (depth >= static_cast<int>(max_depth)) break; // resolution exhausted
        }
    }
    return out;
}

EntryStatisticTable entry_table(const HittingRecordSequence& records,
                                const std::function<double(double)>& mu_ball_of_r,
                                const std::vector<double>& radius_schedule) {
    EntryStatisticTable table;
    std::vector<double> schedule = radius_schedule;
    std::sort(schedule.begin(), schedule.end(), std::greater<double>());
    double running_max = 0.0;
    for (double r : schedule) {
        EntryRow row;
        row.r = r;
        const auto tau = records.entry_time(r);
        if (!tau) {
            row.censored = true;
            row.running_max = running_max;
            table.rows.push_back(row);
            continue;
        }
        row.tau = *tau;
        row.mu_ball = mu_ball_of_r(r);
        row.e_value = static_cast<double>(row.tau) * row.mu_ball;
        running_max = std::max(running_max, row.e_value);
        row.running_max = running_max;
        table.rows.push_back(row);
    }
    return table;
}

std::vector<CylinderEntryRow> cylinder_entry_table(const HittingRecordSequence& records,
                                                   const GibbsState& chain, const SymbolPath& rho,
                                                   int max_depth) {
    std::vector<CylinderEntryRow> rows;
    for (int m = 1; m <= max_depth; ++m) {
        CylinderEntryRow row;
        row.depth = m;
        row.mu = chain.cylinder_measure(rho.prefix(static_cast<std::size_t>(m)));
        row.censored = true;
        for (const HitRecord& rec : records.records) {
            if (rec.depth >= m) {
                row.tau = rec.n;
                row.e_value = static_cast<double>(rec.n) * row.mu;
                row.censored = false;
                break;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

RateEstimates rate_estimates(const HittingRecordSequence& records,
                             const std::function<double(double)>& mu_ball_of_r,
                             std::size_t window) {
    RateEstimates est;
    std::vector<double> log_tau, neg_log_r, log_mu;
    for (const HitRecord& rec : records.records) {
        if (rec.r <= 0.0 || rec.n < 1) continue;
        const double mu = mu_ball_of_r(rec.r);
        if (!(mu > 0.0)) continue;
        log_tau.push_back(std::log(static_cast<double>(rec.n)));
        neg_log_r.push_back(-std::log(rec.r));
        log_mu.push_back(std::log(mu));
    }
    est.records_used = log_tau.size();
    if (est.records_used < 10) throw std::domain_error("rate_estimates: need at least 10 records");
    auto slope = [](const std::vector<double>& xs, const std::vector<double>& ys, std::size_t lo,
                    std::size_t hi) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };
    const std::size_t n = log_tau.size();
    est.hit_global = slope(neg_log_r, log_tau, 0, n);
    std::vector<double> log_r(n);
    for (std::size_t i = 0; i < n; ++i) log_r[i] = -neg_log_r[i];
    est.dim_global = slope(log_r, log_mu, 0, n);
    est.hit_lower = est.hit_upper = est.hit_global;
    est.dim_lower = est.dim_upper = est.dim_global;
    if (n >= window + 2) {
        est.hit_lower = est.dim_lower = std::numeric_limits<double>::infinity();
        est.hit_upper = est.dim_upper = -std::numeric_limits<double>::infinity();
        for (std::size_t lo = 0; lo + window <= n; ++lo) {
            const double sh = slope(neg_log_r, log_tau, lo, lo + window);
            const double sd = slope(log_r, log_mu, lo, lo + window);
            est.hit_lower = std::min(est.hit_lower, sh);
            est.hit_upper = std::max(est.hit_upper, sh);
            est.dim_lower = std::min(est.dim_lower, sd);
            est.dim_upper = std::max(est.dim_upper, sd);
        }
    }
    return est;
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<int>(workers, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
}

namespace {

// one divergence pair on the fast exact streams; mu(B(y, r_k)) is a prefix
// mass of the target for the shift, and 2r (boundary-clipped) for Lebesgue
DivergencePair scan_pair_shift(int pair_id, Rng rng, const std::vector<long>& horizons) {
    DivergencePair pair;
    pair.pair_id = pair_id;
    const std::uint64_t target = rng.next_u64();
    BitOrbit orbit(rng);
    const long max_h = horizons.back();
    pair.running_max.assign(horizons.size(), 0.0);
    pair.min_tail = std::numeric_limits<double>::infinity();
    int best = -1;
    double run = 0.0;
    std::size_t h_index = 0;
    long records = 0;
    for (long n = 1; n <= max_h; ++n) {
        orbit.step();
        while (h_index < horizons.size() && n > horizons[h_index]) {
            pair.running_max[h_index] = run;
            ++h_index;
        }
        const std::uint64_t x = orbit.window();
        const int wedge = (x == target) ? 64 : std::countl_zero(x ^ target);
        if (n == 1 || wedge > best) {
            if (wedge > best) best = wedge;
            ++records;
            // ball of radius r_k = e^{-wedge}: the cylinder of depth wedge+1
            const double mu = std::pow(2.0, -static_cast<double>(best + 1));
            const double e = static_cast<double>(n) * mu;
            if (e > run) run = e;
            if (records >= 3) pair.min_tail = std::min(pair.min_tail, e);
            if (best >= 63) break; // resolution floor of the 64-bit window
        }
    }
    while (h_index < horizons.size()) {
        pair.running_max[h_index] = run;
        ++h_index;
    }
    pair.record_count = records;
    for (std::size_t i = 1; i < pair.running_max.size(); ++i)
        if (pair.running_max[i] < pair.running_max[i - 1]) pair.max_nondecreasing = false;
    return pair;
}

DivergencePair scan_pair_doubling(int pair_id, Rng rng, const std::vector<long>& horizons) {
    DivergencePair pair;
    pair.pair_id = pair_id;
    const double y = rng.next_unit();
    BitOrbit orbit(rng);
    const long max_h = horizons.back();
    pair.running_max.assign(horizons.size(), 0.0);
    pair.min_tail = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    double run = 0.0;
    std::size_t h_index = 0;
    long records = 0;
    for (long n = 1; n <= max_h; ++n) {
        orbit.step();
        while (h_index < horizons.size() && n > horizons[h_index]) {
            pair.running_max[h_index] = run;
            ++h_index;
        }
        const double d = std::abs(orbit.point() - y);
        if (n == 1 || d < best) {
            best = d;
            ++records;
            const double lo = std::max(0.0, y - d), hi = std::min(1.0, y + d);
            const double mu = hi - lo;
            const double e = static_cast<double>(n) * mu;
            if (e > run) run = e;
            if (records >= 3) pair.min_tail = std::min(pair.min_tail, e);
            if (d < 0x1.0p-50) break; // below stream resolution
        }
    }
    while (h_index < horizons.size()) {
        pair.running_max[h_index] = run;
        ++h_index;
    }
    pair.record_count = records;
    for (std::size_t i = 1; i < pair.running_max.size(); ++i)
        if (pair.running_max[i] < pair.running_max[i - 1]) pair.max_nondecreasing = false;
    return pair;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void finalize_scan(DivergenceScan& scan, std::size_t n_horizons) {
    scan.median_running_max.resize(n_horizons);
    for (std::size_t h = 0; h < n_horizons; ++h) {
        std::vector<double> vals;
        vals.reserve(scan.pairs.size());
        for (const DivergencePair& p : scan.pairs) vals.push_back(p.running_max[h]);
        scan.median_running_max[h] = median_of(std::move(vals));
    }
    std::vector<double> tails;
    for (const DivergencePair& p : scan.pairs)
        if (std::isfinite(p.min_tail)) tails.push_back(p.min_tail);
    scan.median_min_tail = median_of(std::move(tails));
    scan.trend_strictly_increasing = true;
    for (std::size_t h = 1; h < n_horizons; ++h)
        if (!(scan.median_running_max[h] > scan.median_running_max[h - 1]))
            scan.trend_strictly_increasing = false;
}

} // namespace

DivergenceScan divergence_scan(ScanSystem system, std::size_t n_pairs,
                               const std::vector<long>& horizons, std::uint64_t seed, int workers) {
    if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
        throw std::invalid_argument("divergence_scan: horizons must be increasing");
    DivergenceScan scan;
    scan.pairs.resize(n_pairs);
    parallel_for(n_pairs, workers, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        scan.pairs[i] = system == ScanSystem::ShiftBernoulliHalf
                            ? scan_pair_shift(static_cast<int>(i), rng, horizons)
                            : scan_pair_doubling(static_cast<int>(i), rng, horizons);
    });
    finalize_scan(scan, horizons.size());
    return scan;
}

DivergenceScan divergence_scan_chain(const GibbsState& chain, std::size_t n_pairs,
                                     const std::vector<long>& horizons, std::uint64_t seed,
                                     int workers) {
    if (horizons.empty() || !std::is_sorted(horizons.begin(), horizons.end()))
        throw std::invalid_argument("divergence_scan: horizons must be increasing");
    DivergenceScan scan;
    scan.pairs.resize(n_pairs);
    const MarkovSampler sampler(chain);
    parallel_for(n_pairs, workers, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        DivergencePair pair;
        pair.pair_id = static_cast<int>(i);
        constexpr std::size_t kDepthCap = 48;
        const std::vector<Symbol> target = sampler.sample_block(kDepthCap, rng);
        std::vector<double> target_mass(kDepthCap + 1, 1.0);
        for (std::size_t m = 1; m <= kDepthCap; ++m)
            target_mass[m] = chain.cylinder_measure(
                Word(std::vector<Symbol>(target.begin(), target.begin() + static_cast<long>(m))));
        // ring buffer of upcoming symbols of the source orbit
        std::vector<Symbol> ring(kDepthCap + 1);
        Symbol last = sampler.initial(rng);
        for (std::size_t j = 0; j < ring.size(); ++j) {
            ring[j] = last = (j == 0 ? last : sampler.step(last, rng));
        }
        std::size_t head = 0;
        const long max_h = horizons.back();
        pair.running_max.assign(horizons.size(), 0.0);
        pair.min_tail = std::numeric_limits<double>::infinity();
        int best = -1;
        double run = 0.0;
        std::size_t h_index = 0;
        long records = 0;
        for (long n = 1; n <= max_h; ++n) {
            // advance: drop ring[head], append a fresh symbol
            last = sampler.step(last, rng);
            ring[head] = last;
            head = (head + 1) % ring.size();
            // wedge of sigma^n omega against the target, capped at best+2
            int wedge = 0;
            const int cap = std::min<int>(static_cast<int>(kDepthCap), best + 2);
            while (wedge < cap && ring[(head + static_cast<std::size_t>(wedge)) % ring.size()] ==
                                      target[static_cast<std::size_t>(wedge)])
                ++wedge;
            if (n == 1 || wedge > best) {
                if (wedge > best) best = wedge;
                ++records;
                const double mu = target_mass[static_cast<std::size_t>(
                    std::min<int>(best + 1, static_cast<int>(kDepthCap)))];
                const double e = static_cast<double>(n) * mu;
                if (e > run) run = e;
                if (records >= 3) pair.min_tail = std::min(pair.min_tail, e);
                if (best + 2 >= static_cast<int>(kDepthCap)) break;
            }
            while (h_index < horizons.size() && n >= horizons[h_index]) {
                pair.running_max[h_index] = run;
                ++h_index;
            }
        }
        while (h_index < horizons.size()) {
            pair.running_max[h_index] = run;
            ++h_index;
        }
        pair.record_count = records;
        for (std::size_t h = 1; h < pair.running_max.size(); ++h)
            if (pair.running_max[h] < pair.running_max[h - 1]) pair.max_nondecreasing = false;
        scan.pairs[i] = std::move(pair);
    });
    finalize_scan(scan, horizons.size());
    return scan;
}

WaitingTail waiting_tail(const GibbsState& chain, const Word& target,
                         const std::vector<long>& k_grid, std::size_t samples,
                         std::uint64_t seed) {
    if (target.empty()) throw std::invalid_argument("waiting_tail: empty target");
    WaitingTail tail;
    tail.k_grid = k_grid;
    tail.samples = samples;
    tail.mu_ball = chain.cylinder_measure(target);
    tail.mu_cover = tail.mu_ball; // ultrametric: the cover coincides with the ball
    const long k_max = *std::max_element(k_grid.begin(), k_grid.end());
    const std::size_t m = target.length();
    std::vector<std::size_t> hits(k_grid.size(), 0);
    // shifted-window invariance probe: entry within [k1, k2] vs within
    // [0, k2 - k1]; both are window scans over the same sampled orbit
    const long k1 = std::max<long>(1, k_max / 4), k2 = k_max;
    std::size_t hits_shifted = 0, hits_based = 0;
    const MarkovSampler sampler(chain);
    Rng rng(seed);
    std::vector<Symbol> window(m + static_cast<std::size_t>(k_max));
    for (std::size_t s = 0; s < samples; ++s) {
        Symbol last = sampler.initial(rng);
        // tau looks at shifts 1..k: generate symbols omega_2 .. omega_{k+m}
        for (std::size_t j = 0; j < window.size(); ++j) window[j] = last = sampler.step(last, rng);
        long tau = k_max + 1;
        bool in_shifted = false, in_based = false;
        for (long l = 1; l <= k_max; ++l) {
            bool match = true;
            for (std::size_t j = 0; j < m; ++j)
                if (window[static_cast<std::size_t>(l - 1) + j] != target.symbols[j]) {
                    match = false;
                    break;
                }
            if (match) {
                if (tau > k_max) tau = l;
                if (l >= k1 && l <= k2) in_shifted = true;
                if (l <= k2 - k1 + 1) in_based = true; // window count of [0, k2-k1]
            }
        }
        for (std::size_t g = 0; g < k_grid.size(); ++g)
            if (tau <= k_grid[g]) ++hits[g];
        if (in_shifted) ++hits_shifted;
        if (in_based) ++hits_based;
    }
    tail.a_hat.resize(k_grid.size());
    tail.a_se.resize(k_grid.size());
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
        const double p = static_cast<double>(hits[g]) / static_cast<double>(samples);
        tail.a_hat[g] = p;
        tail.a_se[g] = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(samples));
    }
    tail.q_hat = tail.a_hat; // identical target set; see mu_cover note
    tail.q_se = tail.a_se;
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
        const double bound = static_cast<double>(k_grid[g]) * tail.mu_cover + 3.0 * tail.q_se[g];
        if (tail.q_hat[g] > bound) tail.bound_ok = false;
    }
    tail.window_shifted = static_cast<double>(hits_shifted) / static_cast<double>(samples);
    tail.window_based = static_cast<double>(hits_based) / static_cast<double>(samples);
    tail.window_se =
        std::sqrt(std::max(tail.window_shifted * (1 - tail.window_shifted), 1e-12) /
                  static_cast<double>(samples)) +
        std::sqrt(std::max(tail.window_based * (1 - tail.window_based), 1e-12) /
                  static_cast<double>(samples));
    tail.window_ok = std::abs(tail.window_shifted - tail.window_based) <= 3.0 * tail.window_se;
    return tail;
}

WaitingTail waiting_tail(const IntervalMap& map, const IntervalMeasure& measure, double y,
                         double r, const std::vector<long>& k_grid, std::size_t samples,
                         std::uint64_t seed) {
    WaitingTail tail;
    tail.k_grid = k_grid;
    tail.samples = samples;
    const MarkovPartition partition(map);
    const MarkovCover cover = markov_cover(partition, measure, y, r);
    tail.mu_ball = cover.mu_ball;
    tail.mu_cover = cover.mu_cover;
    const long k_max = *std::max_element(k_grid.begin(), k_grid.end());
    const long k1 = std::max<long>(1, k_max / 4), k2 = k_max;
    std::vector<std::size_t> hits_ball(k_grid.size(), 0), hits_cover(k_grid.size(), 0);
    std::size_t hits_shifted = 0, hits_based = 0;
    Rng rng(seed);
    const double lo = std::max(0.0, y - r), hi = std::min(1.0, y + r);
    // double orbits of x -> 2x mod 1 collapse within ~52 steps; use the
    // exact bit stream for that map so deep windows stay honest
    const bool exact_stream =
        map.is_linear_mod_one() && map.linear_base() == 2 && measure.is_lebesgue();
    for (std::size_t s = 0; s < samples; ++s) {
        double x = 0.0;
        std::optional<BitOrbit> orbit;
        if (exact_stream)
            orbit.emplace(Rng::stream(seed ^ Rng::kGolden, s));
        else
            x = measure.sample(rng);
        long tau_ball = k_max + 1, tau_cover = k_max + 1;
        bool in_shifted = false, in_based = false;
        for (long l = 1; l <= k_max; ++l) {
            if (orbit) {
                orbit->step();
                x = orbit->point();
            } else {
                x = map.apply(x);
            }
            if (x >= cover.hull.lo && x < cover.hull.hi) {
                if (tau_cover > k_max) tau_cover = l;
                if (l >= k1 && l <= k2) in_shifted = true;
                if (l <= k2 - k1 + 1) in_based = true;
            }
            if (tau_ball > k_max && x > lo && x < hi) tau_ball = l;
        }
        for (std::size_t g = 0; g < k_grid.size(); ++g) {
            if (tau_ball <= k_grid[g]) ++hits_ball[g];
            if (tau_cover <= k_grid[g]) ++hits_cover[g];
        }
        if (in_shifted) ++hits_shifted;
        if (in_based) ++hits_based;
    }
    tail.a_hat.resize(k_grid.size());
    tail.a_se.resize(k_grid.size());
    tail.q_hat.resize(k_grid.size());
    tail.q_se.resize(k_grid.size());
    for (std::size_t g = 0; g < k_grid.size(); ++g) {
        const double pa = static_cast<double>(hits_ball[g]) / static_cast<double>(samples);
        const double pq = static_cast<double>(hits_cover[g]) / static_cast<double>(samples);
        tail.a_hat[g] = pa;
        tail.q_hat[g] = pq;
        tail.a_se[g] = std::sqrt(std::max(pa * (1 - pa), 1e-12) / static_cast<double>(samples));
        tail.q_se[g] = std::sqrt(std::max(pq * (1 - pq), 1e-12) / static_cast<double>(samples));
        const double bound = static_cast<double>(k_grid[g]) * tail.mu_cover + 3.0 * tail.q_se[g];
        if (tail.q_hat[g] > bound) tail.bound_ok = false;
    }
    tail.window_shifted = static_cast<double>(hits_shifted) / static_cast<double>(samples);
    tail.window_based = static_cast<double>(hits_based) / static_cast<double>(samples);
    tail.window_se =
        std::sqrt(std::max(tail.window_shifted * (1 - tail.window_shifted), 1e-12) /
                  static_cast<double>(samples)) +
        std::sqrt(std::max(tail.window_based * (1 - tail.window_based), 1e-12) /
                  static_cast<double>(samples));
    tail.window_ok = std::abs(tail.window_shifted - tail.window_based) <= 3.0 * tail.window_se;
    return tail;
}

int certificate_stage_count(double w, double gamma_of_m, double delta) {
    const double wg = w * gamma_of_m;
    if (!(wg < 1.0)) return -1;
    int omega = 0;
    // smallest Omega with (W Gamma)^{Omega+1} <= delta/2
    while (std::pow(wg, omega + 1) > delta / 2.0) {
        ++omega;
        if (omega > 5'000'000) return -1;
    }
    return omega;
}

DivergenceCertificate build_certificate(const GibbsState& chain, const SymbolPath& target,
                                        double M, double delta, std::size_t samples,
                                        std::uint64_t seed, int max_omega, int max_depth) {
    DivergenceCertificate cert;
    cert.M = M;
    cert.delta = delta;
    cert.mixing = fit_mixing_constants(chain);
    cert.gamma_of_m = 1.0 - std::exp(-4.0 * M * cert.mixing.C);

    // gap s with Gamma (1 + D gamma^s) < 1
    int s = 0;
    while (cert.gamma_of_m * (1.0 + cert.mixing.D * std::pow(cert.mixing.gamma, s)) >= 1.0) {
        ++s;
        if (s > 4096) {
            cert.binding_constraint = "no gap s with Gamma(M) (1 + D gamma^s) < 1";
            return cert;
        }
    }
    cert.s = s;
    cert.w = 1.0 + cert.mixing.D * std::pow(cert.mixing.gamma, s);

    const int omega = certificate_stage_count(cert.w, cert.gamma_of_m, delta);
    if (omega < 0 || omega > max_omega) {
        cert.binding_constraint = "stage count Omega infeasible: (W Gamma)^(Omega+1) <= delta/2";
        return cert;
    }
    cert.omega = omega;

    // radius ladder: depths d_0 < d_1 < ... < d_Omega over target cylinders;
    // mu(R_i) = mu([target|_{d_i}]) since balls are cylinders here
    auto mass_at = [&](int depth) {
        return chain.cylinder_measure(target.prefix(static_cast<std::size_t>(depth)));
    };
    int depth = 1;
    // first rung: smallest depth with a meaningful deadline M/mu >= 1
    while (M / mass_at(depth) < 1.0 && depth < max_depth) ++depth;
    double prev_k = 0.0;
    for (int i = 0; i <= omega; ++i) {
        CertificateRung rung;
        rung.index = i;
        if (i > 0) {
            // advance depth until both the spacing and mass constraints hold
            const double need_k = 2.0 * (static_cast<double>(cert.s) + prev_k);
            const double mass_cap = omega > 0
                ? (delta / (2.0 * omega)) / (prev_k + static_cast<double>(cert.s))
                : 1.0;
            ++depth;
            while (depth <= max_depth) {
                const double mu = mass_at(depth);
                if (mu <= 0.0) break;
                const double k = 2.0 * M / mu;
                if (k >= need_k && mu <= mass_cap) break;
                ++depth;
            }
            if (depth > max_depth || mass_at(depth) <= 0.0 ||
                !(mass_at(depth) > std::numeric_limits<double>::min() * 1e3)) {
                cert.binding_constraint =
                    "radius ladder left double range at rung " + std::to_string(i);
                return cert;
            }
        }
        const double mu = mass_at(depth);
        rung.depth = depth;
        rung.radius = std::exp(-static_cast<double>(depth - 1)) * (1.0 - 1e-9); // d_1 ball radius
        rung.mu_cover = mu;
        rung.k = 2.0 * M / mu;
        rung.deadline = static_cast<long>(std::floor(M / mu));
        if (i > 0) {
            rung.slack_spacing = rung.k - 2.0 * (static_cast<double>(cert.s) + prev_k);
            rung.slack_mass =
                (delta / (2.0 * std::max(1, omega))) / (prev_k + static_cast<double>(cert.s)) - mu;
        }
        prev_k = rung.k;
        cert.rungs.push_back(rung);
    }
    cert.feasible = true;

    // Monte Carlo estimate of mu(cap_i A_{r_i}^c): all deadlines met
    const MarkovSampler sampler(chain);
    const long max_deadline = cert.rungs.back().deadline;
    const std::size_t max_d = static_cast<std::size_t>(cert.rungs.back().depth);
    std::vector<Symbol> target_syms;
    for (std::size_t j = 0; j < max_d; ++j) target_syms.push_back(target.at(j));
    Rng rng(seed);
    std::size_t in_intersection = 0;
    std::vector<Symbol> window(max_d + static_cast<std::size_t>(max_deadline));
    for (std::size_t smp = 0; smp < samples; ++smp) {
        Symbol last = sampler.initial(rng);
        for (std::size_t j = 0; j < window.size(); ++j) window[j] = last = sampler.step(last, rng);
        // first time the orbit enters each rung's cylinder
        bool all_met = true;
        for (const CertificateRung& rung : cert.rungs) {
            const std::size_t d = static_cast<std::size_t>(rung.depth);
            long tau = -1;
            for (long l = 1; l <= rung.deadline; ++l) {
                bool match = true;
                for (std::size_t j = 0; j < d; ++j)
                    if (window[static_cast<std::size_t>(l - 1) + j] != target_syms[j]) {
                        match = false;
                        break;
                    }
                if (match) { tau = l; break; }
            }
            if (tau < 0) { all_met = false; break; }
        }
        if (all_met) ++in_intersection;
    }
    cert.samples = samples;
    cert.p_hat = static_cast<double>(in_intersection) / static_cast<double>(samples);
    cert.std_error =
        std::sqrt(std::max(cert.p_hat * (1 - cert.p_hat), 1e-12) / static_cast<double>(samples));
    cert.verdict = cert.p_hat <= delta + 3.0 * cert.std_error;
    return cert;
}

} // namespace hitstat
