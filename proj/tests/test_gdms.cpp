#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "hitstat/gdms.hpp"
#include "hitstat/rng.hpp"

using namespace hitstat;

TEST_CASE("projection of periodic codes") {
    const Gdms cantor = Gdms::cantor3();
    // pi(1,1,1,...) = 0, the fixed point of x/3
    CHECK(cantor.project_periodic(Word{}, Word{{0}}) == doctest::Approx(0.0));
    // pi(2,1,2,1,...): fixed point of phi_2 . phi_1: x = (x/3)/3 + 2/3 = x/9 + 2/3
    CHECK(cantor.project_periodic(Word{}, Word{{1, 0}}) == doctest::Approx(0.75).epsilon(1e-14));
    // finite-depth projection brackets the fixed point
    Word prefix;
    for (int i = 0; i < 20; ++i) prefix.symbols.push_back(i % 2 == 0 ? 1 : 0);
    const ProjectionResult proj = cantor.project(prefix);
    CHECK(std::abs(proj.point - 0.75) <= proj.radius + 1e-15);
    CHECK(proj.radius <= std::pow(3.0, -19));

    // continued fractions: pi(2,2,2,...) = sqrt(2) - 1
    const Gdms cf = Gdms::gauss_cf(50);
    CHECK(cf.project_periodic(Word{}, Word{{1}}) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-13));
}

TEST_CASE("projection boxes are nested") {
    const Gdms cf = Gdms::gauss_cf(30);
    Word w;
    Rng rng(17);
    Interval prev{0.0, 1.0};
    for (int depth = 1; depth <= 12; ++depth) {
        w.symbols.push_back(static_cast<Symbol>(rng.next_index(8)));
        const Interval box = cf.image(w);
        CHECK(box.lo >= prev.lo - 1e-14);
        CHECK(box.hi <= prev.hi + 1e-14);
        prev = box;
    }
    CHECK(prev.width() <= cf.diameter_bound(12));
}

TEST_CASE("open set condition checks") {
    const auto cantor = Gdms::cantor3().check_sosc();
    CHECK(cantor.osc);
    CHECK(cantor.sosc);

    // overlapping pair: images [0, 0.6] and [0.4, 1.0]
    const auto overlap = Gdms::affine_pair(0.6, 0.0, 0.6, 0.4).check_sosc();
    CHECK_FALSE(overlap.osc);

    // truncated continued fractions: images (1/(n+1), 1/n] touch at endpoints
    const auto cf = Gdms::gauss_cf(50).check_sosc();
    CHECK(cf.osc);
    CHECK(cf.sosc);
}

TEST_CASE("induced map acts by shifting the code") {
    const Gdms cantor = Gdms::cantor3();
    std::vector<Symbol> alternating;
    for (int i = 0; i < 40; ++i) alternating.push_back(i % 2 == 0 ? 0 : 1);
    CodedPoint z{SymbolPath::periodic({0, 1})};
    const CodedPoint tz = induced_map_apply(cantor, z);
    // T_S(pi(1,2,1,2,...)) = pi(2,1,2,1,...)
    CHECK(tz.value(cantor, 40) ==
          doctest::Approx(cantor.project_periodic(Word{}, Word{{1, 0}})).epsilon(1e-12));
    CodedPoint fixed{SymbolPath::constant(0)};
    CHECK(induced_map_apply(cantor, fixed).value(cantor, 40) == doctest::Approx(0.0));

    // conjugacy pi . sigma = T_S . pi along a sampled code
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    Rng rng(3);
    const Word code = measure.sample_code(50, rng);
    CodedPoint point{SymbolPath::eventually_periodic(code.symbols, {code.symbols.back()})};
    for (int k = 0; k < 8; ++k) {
        const double direct = cantor.project(point.code.shifted(1).prefix(30)).point;
        const double via_map = induced_map_apply(cantor, point).value(cantor, 30);
        CHECK(direct == doctest::Approx(via_map).epsilon(1e-12));
        point = induced_map_apply(cantor, point);
    }

    // gauss-cf: T_S on [0; 2, 2, ...] is the Gauss-map action, a fixed point
    const Gdms cf = Gdms::gauss_cf(30);
    CodedPoint cf_point{SymbolPath::constant(1)};
    const double before = cf_point.value(cf, 40);
    const double after = induced_map_apply(cf, cf_point).value(cf, 40);
    CHECK(before == doctest::Approx(after).epsilon(1e-12));
    const double gauss_step = 1.0 / before - std::floor(1.0 / before);
    CHECK(gauss_step == doctest::Approx(after).epsilon(1e-9));
}

TEST_CASE("ball measures by cylinder cover") {
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    // ball at y = 0 of radius 3^{-k} meets exactly the leftmost depth-k cylinder
    for (int k = 2; k <= 8; ++k) {
        const BallMeasure ball =
            ball_measure(measure, 0.0, std::pow(3.0, -k), BallMethod::CylinderCover, 30);
        CHECK(ball.lower <= std::pow(2.0, -k) + 1e-12);
        CHECK(ball.upper == doctest::Approx(std::pow(2.0, -k)).epsilon(1e-10));
    }
    // whole space
    const BallMeasure all = ball_measure(measure, 0.5, 2.0, BallMethod::CylinderCover, 10);
    CHECK(all.lower == doctest::Approx(1.0).epsilon(1e-12));

    // full interval system with Lebesgue: interior balls have mass 2r
    const Gdms dyadic = Gdms::dyadic();
    const GibbsState half = gibbs_state(Potential::bernoulli({0.5, 0.5}), dyadic.incidence());
    const GdmsMeasure lebesgue = GdmsMeasure::from_chain(dyadic, half);
    const BallMeasure interior =
        ball_measure(lebesgue, 0.5, 0.03125, BallMethod::CylinderCover, 24);
    CHECK(interior.lower == doctest::Approx(0.0625).epsilon(1e-4));
    CHECK(interior.upper == doctest::Approx(0.0625).epsilon(1e-4));

    // Monte Carlo agrees within its own error bars
    Rng rng(11);
    const BallMeasure mc =
        ball_measure(measure, 0.0, std::pow(3.0, -4), BallMethod::MonteCarlo, 0, 200000, &rng);
    CHECK(std::abs(mc.estimate - std::pow(2.0, -4)) <= 4 * mc.std_error);
}

TEST_CASE("power law fit on the Cantor system") {
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    const double chi = std::log(3.0);
    const double entropy = chain.entropy();
    std::vector<double> radii;
    for (int i = 0; i <= 15; ++i) radii.push_back(0.05 * std::pow(10.0, -i / 5.0));
    const PowerLawFit fit = power_law_fit(measure, 0.0, radii, entropy, chi, 40);
    const double expected = std::log(2.0) / std::log(3.0);
    CHECK(fit.alpha == doctest::Approx(expected).epsilon(0.05));
    CHECK(fit.alpha_theory == doctest::Approx(0.5 * expected).epsilon(1e-12));
    CHECK(fit.alpha >= fit.alpha_theory);
    CHECK_THROWS_AS(power_law_fit(measure, 0.0, {0.1, 0.01}, entropy, chi, 40),
                    std::invalid_argument);
}

TEST_CASE("lyapunov exponents") {
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    const LyapunovEstimate chi = lyapunov(measure, 20000, 321);
    CHECK(chi.value == doctest::Approx(std::log(3.0)).epsilon(1e-12)); // constant derivative
    CHECK(measure.lyapunov_closed_form() == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    const Gdms dyadic = Gdms::dyadic();
    const GibbsState half = gibbs_state(Potential::bernoulli({0.5, 0.5}), dyadic.incidence());
    const GdmsMeasure leb = GdmsMeasure::from_chain(dyadic, half);
    CHECK(lyapunov(leb, 10000, 5).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const Gdms cf = Gdms::gauss_cf(100000);
    const GdmsMeasure gauss = GdmsMeasure::gauss_cf(cf);
    const LyapunovEstimate cf_chi = lyapunov(gauss, 200000, 9);
    const double khinchin_levy = M_PI * M_PI / (6.0 * std::log(2.0));
    CHECK(std::abs(cf_chi.value - khinchin_levy) <= 4 * cf_chi.std_error);
    CHECK(std::abs(cf_chi.value - khinchin_levy) / khinchin_levy <= 0.02);
}

TEST_CASE("distinct sampled codes project to distinct points under SOSC") {
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    Rng rng(13);
    std::set<long long> seen;
    for (int i = 0; i < 200; ++i) {
        const Word code = measure.sample_code(40, rng);
        const double x = cantor.project(code).point;
        const long long key = static_cast<long long>(x * (1LL << 40));
        CHECK(seen.insert(key).second); // no collision at numeric tolerance
    }
}

TEST_CASE("measure invariance of the projected measure under T_S") {
    // empirical pushforward under T_S matches the measure on test balls
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    Rng rng(77);
    const int n = 100000;
    const double y = cantor.project_periodic(Word{}, Word{{1, 0}}); // 0.75
    const double r = 0.05;
    int hits_direct = 0, hits_shifted = 0;
    for (int i = 0; i < n; ++i) {
        const Word code = measure.sample_code(40, rng);
        const double x = cantor.project(code).point;
        const double tx = cantor.project(Word(std::vector<Symbol>(code.symbols.begin() + 1,
                                                                  code.symbols.end()))).point;
        if (std::abs(x - y) < r) ++hits_direct;
        if (std::abs(tx - y) < r) ++hits_shifted;
    }
    const double p1 = static_cast<double>(hits_direct) / n;
    const double p2 = static_cast<double>(hits_shifted) / n;
    const double se = std::sqrt(p1 * (1 - p1) / n) + std::sqrt(p2 * (1 - p2) / n);
    CHECK(std::abs(p1 - p2) <= 4 * se + 1e-9);
}

TEST_CASE("gdms cover analog of the Markov-partition cover") {
    const Gdms cantor = Gdms::cantor3();
    const GibbsState chain =
        gibbs_state(Potential::bernoulli({0.5, 0.5}), cantor.incidence());
    const GdmsMeasure measure = GdmsMeasure::from_chain(cantor, chain);
    const double y = cantor.project_periodic(Word{}, Word{{1, 0}});
    for (double r : {0.1, 0.03, 0.01}) {
        const GdmsCover cover = gdms_cover(measure, y, r);
        CHECK(cover.cover_inside_blowup);          // R_r subset B(y, r + r^2)
        CHECK(cover.mass >= cover.mu_ball_lower - 1e-12); // B cap J subset R_r
        CHECK(cantor.diameter_bound(cover.n_of_r) <= r * r);
    }
}

TEST_CASE("truncated continued-fraction density reproduces the Gauss measure") {
    const CfTruncatedDensity density = cf_truncated_density(2000, 1024, 40);
    CHECK(density.lambda == doctest::Approx(1.0).epsilon(0.01));
    CHECK(density.tail_bound == doctest::Approx(1.0 / 2000.0));
    const double target = std::log2(4.0 / 3.0);
    CHECK(std::abs(density.first_digit_mass(1) - target) <= 1e-3);
    // density values track 1/((1+x) ln 2)
    const double mid = density.node_values[512];
    CHECK(mid == doctest::Approx(1.0 / (1.5 * std::log(2.0))).epsilon(0.01));
}

TEST_CASE("word derivatives compose by the chain rule") {
    const Gdms cantor = Gdms::cantor3();
    Word w{{0, 1, 1, 0, 1}};
    CHECK(cantor.log_derivative(w, 0.4) == doctest::Approx(5.0 * std::log(1.0 / 3.0)).epsilon(1e-13));

    const Gdms cf = Gdms::gauss_cf(20);
    // |phi_1'(x)| = 1/(1+x)^2 at x = 0.5
    CHECK(cf.log_derivative(Word{{0}}, 0.5) == doctest::Approx(-2.0 * std::log(1.5)).epsilon(1e-13));
    // two digits: |phi_12'(x)| = |phi_1'(phi_2(x))| |phi_2'(x)|
    const double inner = 1.0 / (2.0 + 0.5);
    const double expected = -2.0 * std::log(1.0 + inner) - 2.0 * std::log(2.0 + 0.5);
    CHECK(cf.log_derivative(Word{{0, 1}}, 0.5) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("multi-vertex GDMS wires admissibility through the vertex maps") {
    // e0: loop at vertex 0; e1: X_1 -> X_0; e2: X_0 -> X_1
    std::vector<GdmsEdge> edges(3);
    edges[0] = {GdmsEdge::Family::Affine, 0, 0, 0.25, 0.0, 0};
    edges[1] = {GdmsEdge::Family::Affine, 0, 1, 0.25, 0.5, 0};
    edges[2] = {GdmsEdge::Family::Affine, 1, 0, 0.25, 0.375, 0};
    const Gdms system({{0.0, 1.0}, {0.0, 1.0}}, std::move(edges), "two-vertex");
    const IncidenceStructure inc = system.incidence();
    // A_ab = 1 iff t(a) = i(b): rows {e0,e1,e2} -> successors {e0,e1}/{e2}/{e0,e1}
    CHECK(inc.entry(0, 0));
    CHECK(inc.entry(0, 1));
    CHECK_FALSE(inc.entry(0, 2));
    CHECK_FALSE(inc.entry(1, 0));
    CHECK(inc.entry(1, 2));
    CHECK(inc.entry(2, 0));
    CHECK(inc.entry(2, 1));
    CHECK_FALSE(inc.entry(2, 2));
    CHECK(system.admissible(Word{{1, 2, 0}}));      // X_1 -> X_0 after X_0 -> X_1
    CHECK_FALSE(system.admissible(Word{{1, 0}}));
    const auto sosc = system.check_sosc();
    CHECK(sosc.osc);
    CHECK(sosc.sosc);
    // fixed point of phi_{e1} . phi_{e2}: x = x/16 + 19/32
    CHECK(system.project_periodic(Word{}, Word{{1, 2}}) ==
          doctest::Approx(19.0 / 30.0).epsilon(1e-12));
    // Gibbs state over the edge incidence drives the projected measure
    const GibbsState chain = gibbs_state(Potential::zero(), inc);
    const GdmsMeasure measure = GdmsMeasure::from_chain(system, chain);
    const BallMeasure ball = ball_measure(measure, 19.0 / 30.0, 0.01, BallMethod::CylinderCover, 24);
    CHECK(ball.upper > 0.0);
    CHECK(ball.lower <= ball.upper);
}

TEST_CASE("gdms rejects inconsistent systems") {
    CHECK_THROWS_AS(Gdms::affine_pair(1.2, 0.0, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(Gdms::gauss_cf(1), std::invalid_argument);
    const Gdms cantor = Gdms::cantor3();
    CHECK_THROWS_AS(GdmsMeasure::from_chain(
                        cantor, gibbs_state(Potential::zero(), IncidenceStructure::full_shift(3))),
                    std::invalid_argument);
}
