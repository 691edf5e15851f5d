#include "hitstat/induction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "hitstat/hitting.hpp"
#include <optional>

namespace hitstat {

InducedSystem::InducedSystem(const IntervalMap& m, const IntervalMeasure& mu, Interval base)
    : map(&m), measure(&mu), xhat(base) {
    if (!(base.lo < base.hi)) throw std::invalid_argument("InducedSystem: empty base set");
    mu_xhat = mu.interval_mass(base.lo, base.hi);
    if (!(mu_xhat > 0.0)) throw std::invalid_argument("InducedSystem: base set has measure zero");
}

ReturnTime first_return_time(const IntervalMap& map, const Interval& xhat, double x, long horizon) {
    if (horizon < 1) throw std::invalid_argument("first_return_time: horizon must be >= 1");
    double cur = x;
    for (long n = 1; n <= horizon; ++n) {
        cur = map.apply(cur);
        if (xhat.contains(cur)) return {n, false};
    }
    return {horizon, true};
}

std::pair<double, ReturnTime> induced_apply(const IntervalMap& map, const Interval& xhat, double x,
                                            long horizon) {
    double cur = x;
    for (long n = 1; n <= horizon; ++n) {
        cur = map.apply(cur);
        if (xhat.contains(cur)) return {cur, {n, false}};
    }
    return {cur, {horizon, true}};
}

std::vector<long> return_sum_sequence(const IntervalMap& map, const Interval& xhat, double x,
                                      std::size_t count, long horizon) {
    std::vector<long> sums;
    sums.reserve(count);
    double cur = x;
    long total = 0;
    for (std::size_t l = 0; l < count; ++l) {
        const auto [next, rt] = induced_apply(map, xhat, cur, horizon);
        if (rt.censored) break;
        total += rt.t;
        sums.push_back(total);
        cur = next;
    }
    return sums;
}

KacReport kac_check(const InducedSystem& induced, std::size_t n_samples, std::uint64_t seed,
                    long horizon) {
    KacReport report;
    report.samples = n_samples;
    report.target = 1.0 / induced.mu_xhat;
    Rng rng(seed);
    // exact stream for the doubling map: double orbits of 2x mod 1 collapse
    const bool exact_stream = induced.map->is_linear_mod_one() &&
                              induced.map->linear_base() == 2 && induced.measure->is_lebesgue();
    double sum = 0.0, sum2 = 0.0;
    std::size_t censored = 0, used = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        long t = 0;
        bool was_censored = false;
        if (exact_stream) {
            // rejection from the base sampler into xhat, then exact stepping;
            // each attempt forks a fresh stream (BitOrbit copies its Rng)
            std::optional<BitOrbit> orbit;
            do {
                orbit.emplace(Rng(rng.next_u64()));
            } while (!induced.in_base(orbit->point()));
            was_censored = true;
            for (long n = 1; n <= horizon; ++n) {
                orbit->step();
                if (induced.in_base(orbit->point())) {
                    t = n;
                    was_censored = false;
                    break;
                }
            }
        } else {
            double x;
            do {
                x = induced.measure->sample(rng);
            } while (!induced.in_base(x));
            const ReturnTime rt = first_return_time(*induced.map, induced.xhat, x, horizon);
            t = rt.t;
            was_censored = rt.censored;
        }
        if (was_censored) {
            ++censored;
            continue;
        }
        sum += static_cast<double>(t);
        sum2 += static_cast<double>(t) * static_cast<double>(t);
        ++used;
    }
    report.censored_fraction = static_cast<double>(censored) / static_cast<double>(n_samples);
    report.censoring_warning = report.censored_fraction > 0.01;
    if (used == 0) throw std::domain_error("kac_check: every sample censored");
    report.empirical_mean = sum / static_cast<double>(used);
    const double var =
        std::max(sum2 / static_cast<double>(used) - report.empirical_mean * report.empirical_mean, 0.0);
    report.std_error = std::sqrt(var / static_cast<double>(used));
    report.z_score = report.std_error > 0
                         ? (report.empirical_mean - report.target) / report.std_error
                         : 0.0;
    return report;
}

ReturnSpectrum return_time_spectrum(const GibbsState& chain, const std::vector<Word>& base_words,
                                    int max_n) {
    if (base_words.empty()) throw std::invalid_argument("return_time_spectrum: empty base");
    const std::size_t m = base_words.front().length();
    for (const Word& w : base_words)
        if (w.length() != m)
            throw std::invalid_argument("return_time_spectrum: base words must share one depth");

    // states: admissible depth-m words with positive mass
    std::vector<Word> states = enumerate_admissible(chain.incidence(), m);
    std::map<Word, std::size_t> index;
    std::vector<double> stationary;
    for (const Word& w : states) {
        index[w] = stationary.size();
        stationary.push_back(chain.cylinder_measure(w));
    }
    std::vector<bool> in_base(states.size(), false);
    double mu_base = 0.0;
    for (const Word& w : base_words) {
        auto it = index.find(w);
        if (it == index.end()) throw std::invalid_argument("return_time_spectrum: inadmissible base word");
        in_base[it->second] = true;
        mu_base += stationary[it->second];
    }
    if (!(mu_base > 0.0)) throw std::invalid_argument("return_time_spectrum: base has measure zero");

    // block-chain transition: (w_1..w_m) -> (w_2..w_m e) with kernel(w_m, e)
    const std::size_t n_states = states.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> moves(n_states);
    for (std::size_t s = 0; s < n_states; ++s) {
        const Word& w = states[s];
        for (Symbol e : chain.incidence().successors(w.last())) {
            Word next = m > 1 ? w.suffix_from(1).appended(e) : Word(std::vector<Symbol>{e});
            const double p = chain.kernel(w.last(), e);
            if (p > 0) moves[s].emplace_back(index.at(next), p);
        }
    }

    ReturnSpectrum spec;
    spec.mass.resize(static_cast<std::size_t>(max_n), 0.0);
    std::vector<double> alive(n_states, 0.0);
    for (std::size_t s = 0; s < n_states; ++s)
        if (in_base[s]) alive[s] = stationary[s] / mu_base;
    for (int n = 1; n <= max_n; ++n) {
        std::vector<double> next(n_states, 0.0);
        for (std::size_t s = 0; s < n_states; ++s) {
            if (alive[s] == 0.0) continue;
            for (const auto& [t, p] : moves[s]) next[t] += alive[s] * p;
        }
        double entered = 0.0;
        for (std::size_t s = 0; s < n_states; ++s)
            if (in_base[s]) {
                entered += next[s];
                next[s] = 0.0;
            }
        spec.mass[static_cast<std::size_t>(n - 1)] = entered;
        spec.partial_mean += static_cast<double>(n) * entered;
        alive.swap(next);
    }
    double total = 0.0;
    for (double p : spec.mass) total += p;
    spec.tail = 1.0 - total;
    return spec;
}

LocalIfsStructure build_local_ifs(const IntervalMap& map, const IntervalMeasure& measure,
                                  const Word& gamma_word, long max_return,
                                  std::size_t branch_budget) {
    if (gamma_word.empty()) throw std::invalid_argument("build_local_ifs: empty Gamma word");
    if (map.name() == "gauss")
        throw std::invalid_argument("build_local_ifs: Markov built-ins only");
    const MarkovPartition partition(map);
    const Interval gamma = partition.cell_interval(gamma_word);
    if (!(gamma.width() > 0)) throw std::invalid_argument("build_local_ifs: non-Markov Gamma");

    LocalIfsStructure out;
    out.gamma_word = gamma_word;
    out.gamma = gamma;
    const std::size_t m = gamma_word.length();
    const double mu_gamma = measure.interval_mass(gamma.lo, gamma.hi);

    // DFS over itineraries u of length t + m: prefix = gamma word, no window
    // equal to it before time t, suffix window at t equal to it
    const IncidenceStructure inc = map.cell_incidence();
    std::vector<Symbol> stack(gamma_word.symbols);
    std::size_t explored = 0;
    std::function<void(void)> dfs = [&]() {
        if (++explored > branch_budget)
            throw std::length_error("build_local_ifs: branch budget exceeded");
        const long t = static_cast<long>(stack.size()) - static_cast<long>(m);
        if (t >= 1) {
            bool window_is_gamma = true;
            for (std::size_t j = 0; j < m; ++j)
                if (stack[static_cast<std::size_t>(t) + j] != gamma_word.symbols[j]) {
                    window_is_gamma = false;
                    break;
                }
            if (window_is_gamma) {
                // first return at time t: close the branch
                Word u{std::vector<Symbol>(stack.begin(), stack.end())};
                const Interval domain = partition.cell_interval(u);
                if (domain.width() <= 0) return;
                LocalIfsBranch branch;
                branch.return_time = t;
                branch.word = u;
                branch.domain = domain;
                // phi_A = (T^t|_A)^{-1}: g = inv_{u_t}, then inv_{u_{t-1}} o g, ...
                double a = 1.0, b = 0.0;
                for (long j = t; j-- > 0;) {
                    const int br = u.symbols[static_cast<std::size_t>(j)];
                    const double slope = map.branch_slope(br), off = map.branch_offset(br);
                    a = a / slope;
                    b = (b - off) / slope;
                }
                branch.slope = a;
                branch.offset = b;
                branch.mass = measure.interval_mass(domain.lo, domain.hi) / mu_gamma;
                out.branches.push_back(std::move(branch));
                return; // first return: do not extend past it
            }
            if (t >= max_return) return;
        }
        const std::size_t cells = map.cell_count();
        for (std::size_t e = 0; e < cells; ++e) {
            if (!inc.entry(stack.back(), static_cast<Symbol>(e))) continue;
            stack.push_back(static_cast<Symbol>(e));
            dfs();
            stack.pop_back();
        }
    };
    dfs();

    std::sort(out.branches.begin(), out.branches.end(),
              [](const LocalIfsBranch& p, const LocalIfsBranch& q) {
                  return p.return_time != q.return_time ? p.return_time < q.return_time
                                                        : p.domain.lo < q.domain.lo;
              });
    for (const LocalIfsBranch& br : out.branches) {
        out.covered_mass += br.mass;
        out.lipschitz_bound = std::max(out.lipschitz_bound, std::abs(br.slope));
    }
    out.uncovered_mass = 1.0 - out.covered_mass;
    return out;
}

HitComparison compare_hitting_statistics(const InducedSystem& induced, double y, double r_max,
                                         long horizon, Rng& rng) {
    HitComparison out;
    out.horizon = horizon;
    const double margin = std::min(y - induced.xhat.lo, induced.xhat.hi - y);
    if (!(margin > 0)) throw std::invalid_argument("compare_hitting_statistics: y must be interior to xhat");
    const double r_cap = std::min(r_max, margin);
    const double mu_xhat = induced.mu_xhat;

    const bool fast = induced.map->is_linear_mod_one() && induced.map->linear_base() == 2 &&
                      induced.measure->is_lebesgue();
    double best = std::numeric_limits<double>::infinity();
    long l = 0; // visits to xhat among steps 1..n
    if (fast) {
        BitOrbit orbit(rng);
        for (long n = 1; n <= horizon; ++n) {
            orbit.step();
            const double x = orbit.point();
            if (induced.xhat.contains(x)) ++l;
            const double d = std::abs(x - y);
            if (d < best) {
                best = d;
                if (d < r_cap && d > 0) {
                    HitComparisonRow row;
                    row.r = d;
                    row.tau = n;
                    row.tau_hat = l;
                    row.mu_ball = induced.measure->ball(y, d);
                    row.mu_hat_ball = row.mu_ball / mu_xhat;
                    row.base_statistic = static_cast<double>(row.tau) * row.mu_ball;
                    row.induced_statistic = static_cast<double>(row.tau_hat) * row.mu_hat_ball;
                    row.ratio = row.base_statistic / row.induced_statistic;
                    // the A_l / l sandwich holds as an identity at the sample
                    const double eps = std::abs(static_cast<double>(n) / static_cast<double>(l) -
                                                1.0 / mu_xhat);
                    const double lo_bound = static_cast<double>(l) * (1.0 / mu_xhat - eps);
                    const double hi_bound = static_cast<double>(l) * (1.0 / mu_xhat + eps);
                    row.sandwich_ok = lo_bound - 1e-9 <= static_cast<double>(n) &&
                                      static_cast<double>(n) <= hi_bound + 1e-9;
                    out.rows.push_back(row);
                }
            }
        }
    } else {
        double x = induced.measure->sample(rng);
        for (long n = 1; n <= horizon; ++n) {
            x = induced.map->apply(x);
            if (induced.xhat.contains(x)) ++l;
            const double d = std::abs(x - y);
            if (d < best) {
                best = d;
                if (d < r_cap && d > 0) {
                    HitComparisonRow row;
                    row.r = d;
                    row.tau = n;
                    row.tau_hat = l;
                    row.mu_ball = induced.measure->ball(y, d);
                    row.mu_hat_ball = row.mu_ball / mu_xhat;
                    row.base_statistic = static_cast<double>(row.tau) * row.mu_ball;
                    row.induced_statistic = static_cast<double>(row.tau_hat) * row.mu_hat_ball;
                    row.ratio = row.base_statistic / row.induced_statistic;
                    const double eps = std::abs(static_cast<double>(n) / static_cast<double>(l) -
                                                1.0 / mu_xhat);
                    row.sandwich_ok = std::abs(static_cast<double>(n) -
                                               static_cast<double>(l) / mu_xhat) <=
                                      static_cast<double>(l) * eps + 1e-9;
                    out.rows.push_back(row);
                }
            }
        }
    }
    out.censored = out.rows.empty();
    return out;
}

std::optional<double> induced_potential(const IntervalMap& map, const Interval& base_set,
                                        const std::function<double(double)>& g, double x,
                                        long horizon) {
    if (!base_set.contains(x)) throw std::invalid_argument("induced_potential: x must lie in F");
    double sum = 0.0;
    double cur = x;
    for (long k = 0; k < horizon; ++k) {
        sum += g(cur);
        cur = map.apply(cur);
        if (base_set.contains(cur)) return sum;
    }
    return std::nullopt; // censored: no return within the horizon
}

} // namespace hitstat
