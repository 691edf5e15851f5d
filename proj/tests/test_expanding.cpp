#include <doctest.h>

#include <cmath>
#include <vector>

#include "hitstat/expanding.hpp"
#include "hitstat/rng.hpp"

using namespace hitstat;

TEST_CASE("iterate: exact rational orbits and fixed points") {
    const IntervalMap doubling = IntervalMap::doubling();
    // hand orbit 1/5 -> 2/5 -> 4/5 -> 3/5 -> 1/5
    const Rational x(1, 5);
    auto orbit = iterate(doubling, x, 4);
    REQUIRE(orbit.has_value());
    CHECK(*orbit == x);
    auto step1 = iterate(doubling, x, 1);
    CHECK(*step1 == Rational(2, 5));
    auto step3 = iterate(doubling, x, 3);
    CHECK(*step3 == Rational(3, 5));

    CHECK(iterate(doubling, 0.0, 17) == 0.0);

    // Gauss fixed point sqrt(2) - 1 = [0; 2, 2, 2, ...]
    const IntervalMap gauss = IntervalMap::gauss();
    const double fixed = std::sqrt(2.0) - 1.0;
    CHECK(iterate(gauss, fixed, 3) == doctest::Approx(fixed).epsilon(1e-12));
}

TEST_CASE("cell_of itineraries and intervals") {
    const IntervalMap doubling = IntervalMap::doubling();
    const MarkovPartition partition(doubling);

    auto [w, cell] = partition.cell_of(1.0 / 3.0, 2); // binary 0.0101...
    CHECK(w == Word{{0, 1}});
    CHECK(cell.lo == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(cell.hi == doctest::Approx(0.5).epsilon(1e-14));

    auto [w0, cell0] = partition.cell_of(0.0, 5);
    CHECK(w0 == Word{{0, 0, 0, 0, 0}});
    CHECK(cell0.lo == 0.0);
    CHECK(cell0.hi == doctest::Approx(std::pow(2.0, -5)).epsilon(1e-14));

    const IntervalMap ternary = IntervalMap::ternary();
    const MarkovPartition tpart(ternary);
    auto [wt, cellt] = tpart.cell_of(0.5, 1);
    CHECK(wt == Word{{1}});
    CHECK(cellt.lo == doctest::Approx(1.0 / 3.0));
    CHECK(cellt.hi == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("distance expansion on sampled same-cell pairs") {
    Rng rng(64);
    for (const IntervalMap& map :
         {IntervalMap::doubling(), IntervalMap::ternary(), IntervalMap::golden_markov()}) {
        CHECK(map.uniformly_expanding());
        const double lambda = map.expansion_lambda();
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t cell_index = rng.next_index(map.cell_count());
            const Interval cell = map.cell(cell_index);
            const double x = cell.lo + rng.next_unit() * cell.width();
            const double y = cell.lo + rng.next_unit() * cell.width();
            CHECK(std::abs(map.apply(x) - map.apply(y)) >= lambda * std::abs(x - y) - 1e-12);
        }
    }
    CHECK_FALSE(IntervalMap::gauss().uniformly_expanding()); // flagged, no uniform lambda
}

TEST_CASE("partition refinement telescopes") {
    const IntervalMap golden = IntervalMap::golden_markov();
    const MarkovPartition partition(golden);
    const IncidenceStructure inc = golden.cell_incidence();
    CHECK(inc == IncidenceStructure::golden_mean());
    for (const Word& w : enumerate_admissible(inc, 5)) {
        const Interval fine = partition.cell_interval(w);
        if (!(fine.width() > 0)) continue;
        const Interval coarse = partition.cell_interval(w.prefix(4));
        CHECK(coarse.lo <= fine.lo + 1e-12);
        CHECK(fine.hi <= coarse.hi + 1e-12);
    }
}

TEST_CASE("coding conjugacy: pushed measure of a cell equals its cylinder mass") {
    const IntervalMap doubling = IntervalMap::doubling();
    const MarkovPartition partition(doubling);
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.3, 0.7}), doubling.cell_incidence());
    const IntervalMeasure measure = IntervalMeasure::pushed_markov(doubling, chain);
    for (const Word& w : enumerate_admissible(doubling.cell_incidence(), 6)) {
        const Interval cell = partition.cell_interval(w);
        CHECK(measure.interval_mass(cell.lo, cell.hi) ==
              doctest::Approx(chain.cylinder_measure(w)).epsilon(1e-10));
    }
    // CDF sandwich against brute-force cylinder sums
    Rng rng(5);
    for (int trial = 0; trial < 24; ++trial) {
        const double x = rng.next_unit();
        double below = 0.0, straddle = 0.0;
        for (const Word& w : enumerate_admissible(doubling.cell_incidence(), 12)) {
            const Interval cell = partition.cell_interval(w);
            if (cell.hi <= x)
                below += chain.cylinder_measure(w);
            else if (cell.lo < x)
                straddle += chain.cylinder_measure(w);
        }
        CHECK(measure.cdf(x) >= below - 1e-10);
        CHECK(measure.cdf(x) <= below + straddle + 1e-10);
    }
}

TEST_CASE("inverse branches invert and contract") {
    const IntervalMap doubling = IntervalMap::doubling();
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const double x = rng.next_unit();
        const int n = 1 + static_cast<int>(rng.next_index(10));
        const InverseBranchHandle handle(doubling, x, n);
        const double fx = handle.endpoint();
        // T^n . T_x^{-n} = id near T^n(x), and the branch returns to x
        CHECK(handle.apply(fx) == doctest::Approx(x).epsilon(1e-12));
        const double z = std::min(fx + 0.01, 1.0 - 1e-9);
        CHECK(iterate(doubling, handle.apply(z), n) == doctest::Approx(z).epsilon(1e-9));
        const double w = std::max(fx - 0.01, 0.0);
        CHECK(std::abs(handle.apply(z) - handle.apply(w)) <=
              handle.contraction_bound() * std::abs(z - w) + 1e-15);
    }
}

TEST_CASE("markov cover on the doubling map against direct enumeration") {
    const IntervalMap doubling = IntervalMap::doubling();
    const MarkovPartition partition(doubling);
    const IntervalMeasure lebesgue = IntervalMeasure::lebesgue();
    const double y = 0.5, r = std::pow(2.0, -4);
    const MarkovCover cover = markov_cover(partition, lebesgue, y, r);
    // n(r): least n with (1/2) 2^{-(n-1)} <= r^2 = 2^{-8}
    CHECK(cover.n_of_r == 8);
    // oracle: enumerate all depth-8 dyadic cells meeting the open ball
    double lo = 2.0, hi = -1.0;
    for (int j = 0; j < 256; ++j) {
        const double a = j / 256.0, b = (j + 1) / 256.0;
        if (b > y - r && a < y + r) {
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        }
    }
    CHECK(cover.hull.lo == doctest::Approx(lo).epsilon(1e-14));
    CHECK(cover.hull.hi == doctest::Approx(hi).epsilon(1e-14));
    CHECK(cover.ball_inside_cover);
    CHECK(cover.cover_inside_blowup);
    CHECK(cover.order <= cover.n_of_r);
    // hull ends on 7/16 and 9/16, both depth-4 dyadics
    CHECK(cover.order == 4);
    CHECK(cover.mu_cover == doctest::Approx(hi - lo).epsilon(1e-14));
    CHECK(cover.ratio >= 1.0);
}

TEST_CASE("markov cover containments over a y/r grid") {
    const IntervalMap doubling = IntervalMap::doubling();
    const MarkovPartition partition(doubling);
    const IntervalMeasure lebesgue = IntervalMeasure::lebesgue();
    for (int i = 0; i < 20; ++i) {
        const double y = (i + 0.5) / 20.0;
        double prev_product = -1.0;
        for (int k = 3; k <= 12; ++k) {
            const double r = std::pow(2.0, -k);
            const MarkovCover cover = markov_cover(partition, lebesgue, y, r);
            CHECK(cover.ball_inside_cover);
            CHECK(cover.cover_inside_blowup);
            const double product = cover.order * cover.mu_ball;
            if (k >= 8 && prev_product >= 0) CHECK(product < prev_product);
            if (k >= 7) prev_product = product;
        }
    }
}

TEST_CASE("markov cover refusals") {
    const IntervalMap doubling = IntervalMap::doubling();
    const MarkovPartition partition(doubling);
    const IntervalMeasure lebesgue = IntervalMeasure::lebesgue();
    CHECK_THROWS_AS(markov_cover(partition, lebesgue, 0.5, 1e-9), std::domain_error);
    const IntervalMap gauss = IntervalMap::gauss();
    const MarkovPartition gpart(gauss);
    CHECK_THROWS_AS(markov_cover(gpart, lebesgue, 0.5, 0.01), std::domain_error);
}

TEST_CASE("good radius density") {
    const IntervalMeasure lebesgue = IntervalMeasure::lebesgue();
    // interior point: mu(B(y, r + r^2))/mu(B(y, r)) = 1 + r <= 2 always
    const GoodRadiusProbe interior = good_radius_density(lebesgue, 0.5, 1e-4, 0.05, 200);
    CHECK(interior.density == doctest::Approx(1.0));
    // boundary point: one-sided balls, same ratio
    const GoodRadiusProbe boundary = good_radius_density(lebesgue, 0.0, 1e-4, 0.05, 200);
    CHECK(boundary.density == doctest::Approx(1.0));

    const IntervalMap doubling = IntervalMap::doubling();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.3, 0.7}), doubling.cell_incidence());
    const IntervalMeasure pushed = IntervalMeasure::pushed_markov(doubling, chain);
    const GoodRadiusProbe skew_small = good_radius_density(pushed, 1.0 / 3.0, 1e-6, 1e-3, 300);
    const GoodRadiusProbe skew_large = good_radius_density(pushed, 1.0 / 3.0, 1e-2, 0.2, 300);
    CHECK(skew_small.density >= skew_large.density - 0.05); // density improves toward 0
    CHECK(skew_small.density > 0.9);
}

TEST_CASE("gauss closed-form measure") {
    const IntervalMeasure gauss = IntervalMeasure::gauss();
    CHECK(gauss.cdf(1.0) == doctest::Approx(1.0));
    CHECK(gauss.cdf(0.0) == doctest::Approx(0.0));
    CHECK(gauss.interval_mass(0.5, 1.0) == doctest::Approx(std::log2(4.0 / 3.0)).epsilon(1e-14));
    Rng rng(8);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) mean += gauss.sample(rng);
    mean /= n;
    CHECK(mean == doctest::Approx(1.0 / std::log(2.0) - 1.0).epsilon(0.01));
}

TEST_CASE("double orbits report their drift bound") {
    const IntervalMap doubling = IntervalMap::doubling();
    const DriftedPoint short_orbit = iterate_with_drift(doubling, 0.3, 4);
    CHECK(short_orbit.value == doctest::Approx(iterate(doubling, 0.3, 4)));
    CHECK(short_orbit.drift_bound <= 16 * 2.3e-16 * 2);
    // after ~52 doublings the bound saturates: the orbit is untrustworthy
    const DriftedPoint long_orbit = iterate_with_drift(doubling, 0.3, 80);
    CHECK(long_orbit.drift_bound == 1.0);
}

TEST_CASE("pushed sampler matches the chain marginals") {
    const IntervalMap golden = IntervalMap::golden_markov();
    const GibbsState chain = gibbs_state(Potential::zero(), golden.cell_incidence());
    const IntervalMeasure measure = IntervalMeasure::pushed_markov(golden, chain);
    Rng rng(21);
    const int n = 50000;
    int in_first = 0;
    for (int i = 0; i < n; ++i)
        if (measure.sample(rng) < 2.0 / 3.0) ++in_first;
    const double mu0 = chain.cylinder_measure(Word{{0}});
    const double se = std::sqrt(mu0 * (1 - mu0) / n);
    CHECK(std::abs(static_cast<double>(in_first) / n - mu0) <= 4 * se);
}
