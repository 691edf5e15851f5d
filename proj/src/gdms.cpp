#include "hitstat/gdms.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace hitstat {

namespace {

// Moebius composition for continued-fraction words via continuant matrices:
// phi_n(x) = 1/(n+x) = (0x+1)/(1x+n). Entries are renormalized to dodge
// overflow; only ratios are ever used.
struct Moebius2x2 {
    double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    void compose_digit(int n) {
        // right-multiply by [[0,1],[1,n]]
        const double a = m01, b = m00 + m01 * n;
        const double c = m11, d = m10 + m11 * n;
        m00 = a; m01 = b; m10 = c; m11 = d;
        const double scale = std::max(std::max(std::abs(m00), std::abs(m01)),
                                      std::max(std::abs(m10), std::abs(m11)));
        if (scale > 1e200) { m00 /= scale; m01 /= scale; m10 /= scale; m11 /= scale; }
    }
    double eval(double x) const { return (m00 * x + m01) / (m10 * x + m11); }
};

} // namespace

Gdms::Gdms(std::vector<Interval> vertex_sets, std::vector<GdmsEdge> edges, std::string name)
    : name_(std::move(name)), vertices_(std::move(vertex_sets)), edges_(std::move(edges)) {
    if (vertices_.empty() || edges_.empty())
        throw std::invalid_argument("Gdms: need at least one vertex and one edge");
    double s = 0.0;
    for (const GdmsEdge& e : edges_) {
        if (e.range_vertex < 0 || static_cast<std::size_t>(e.range_vertex) >= vertices_.size() ||
            e.domain_vertex < 0 || static_cast<std::size_t>(e.domain_vertex) >= vertices_.size())
            throw std::invalid_argument("Gdms: edge vertex out of range");
        if (e.family == GdmsEdge::Family::Affine) {
            if (!(std::abs(e.a) < 1.0)) throw std::invalid_argument("Gdms: affine edge must contract");
            s = std::max(s, std::abs(e.a));
        } else {
            moebius_ = true;
            if (e.digit < 1) throw std::invalid_argument("Gdms: Moebius digit must be >= 1");
            // |phi_n'| on [0,1] attains 1/n^2; the n = 1 edge is not a strict
            // contraction by itself, pairs of edges are (ratio <= 1/2)
            s = std::max(s, 1.0 / (static_cast<double>(e.digit) * e.digit));
        }
    }
    s_ = std::min(s, moebius_ ? std::sqrt(0.5) : s);
}

Gdms Gdms::cantor3() {
    std::vector<GdmsEdge> edges(2);
    edges[0] = {GdmsEdge::Family::Affine, 0, 0, 1.0 / 3.0, 0.0, 0};
    edges[1] = {GdmsEdge::Family::Affine, 0, 0, 1.0 / 3.0, 2.0 / 3.0, 0};
    return Gdms({{0.0, 1.0}}, std::move(edges), "cantor3");
}

Gdms Gdms::dyadic() {
    std::vector<GdmsEdge> edges(2);
    edges[0] = {GdmsEdge::Family::Affine, 0, 0, 0.5, 0.0, 0};
    edges[1] = {GdmsEdge::Family::Affine, 0, 0, 0.5, 0.5, 0};
    return Gdms({{0.0, 1.0}}, std::move(edges), "dyadic");
}

Gdms Gdms::gauss_cf(int truncation) {
    if (truncation < 2) throw std::invalid_argument("gauss_cf: truncation must be >= 2");
    std::vector<GdmsEdge> edges(static_cast<std::size_t>(truncation));
    for (int n = 1; n <= truncation; ++n)
        edges[static_cast<std::size_t>(n - 1)] = {GdmsEdge::Family::Moebius, 0, 0, 0.0, 0.0, n};
    Gdms g({{0.0, 1.0}}, std::move(edges), "gauss-cf");
    g.truncated_ = true;
    return g;
}

Gdms Gdms::affine_pair(double a1, double b1, double a2, double b2) {
    std::vector<GdmsEdge> edges(2);
    edges[0] = {GdmsEdge::Family::Affine, 0, 0, a1, b1, 0};
    edges[1] = {GdmsEdge::Family::Affine, 0, 0, a2, b2, 0};
    return Gdms({{0.0, 1.0}}, std::move(edges), "affine-pair");
}

bool Gdms::admissible(const Word& w) const {
    for (Symbol s : w.symbols)
        if (s < 0 || static_cast<std::size_t>(s) >= edges_.size()) return false;
    for (std::size_t i = 0; i + 1 < w.length(); ++i)
        if (!admissible_pair(w.symbols[i], w.symbols[i + 1])) return false;
    return true;
}

IncidenceStructure Gdms::incidence() const {
    const std::size_t n = edges_.size();
    std::vector<std::uint8_t> m(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            m[a * n + b] = admissible_pair(static_cast<Symbol>(a), static_cast<Symbol>(b)) ? 1 : 0;
    return IncidenceStructure(n, std::move(m), truncated_);
}

double Gdms::diameter_bound(int n) const {
    double max_diam = 0.0;
    for (const Interval& v : vertices_) max_diam = std::max(max_diam, v.width());
    if (moebius_) {
        // continued-fraction cylinders: diam <= 2^{-(n-1)} from continuant growth
        return std::min(max_diam, std::pow(2.0, -(n - 1)));
    }
    return max_diam * std::pow(s_, n);
}

double Gdms::apply_edge(Symbol e, double x) const {
    const GdmsEdge& edge = edges_[static_cast<std::size_t>(e)];
    if (edge.family == GdmsEdge::Family::Affine) return edge.a * x + edge.b;
    return 1.0 / (static_cast<double>(edge.digit) + x);
}

double Gdms::edge_log_derivative(Symbol e, double x) const {
    const GdmsEdge& edge = edges_[static_cast<std::size_t>(e)];
    if (edge.family == GdmsEdge::Family::Affine) return std::log(std::abs(edge.a));
    return -2.0 * std::log(static_cast<double>(edge.digit) + x);
}

Interval Gdms::image(const Word& w) const {
    if (w.empty()) {
        // convention: the whole seed set of the (unique) starting vertex
        return vertices_[0];
    }
    if (!admissible(w)) throw std::invalid_argument("Gdms::image: inadmissible word");
    const Interval dom = vertices_[static_cast<std::size_t>(edges_[static_cast<std::size_t>(w.last())].domain_vertex)];
    if (moebius_) {
        Moebius2x2 m;
        for (Symbol s : w.symbols) m.compose_digit(edges_[static_cast<std::size_t>(s)].digit);
        const double p = m.eval(dom.lo), q = m.eval(dom.hi);
        return {std::min(p, q), std::max(p, q)};
    }
    double a = 1.0, b = 0.0; // composed map a x + b
    for (Symbol s : w.symbols) {
        const GdmsEdge& e = edges_[static_cast<std::size_t>(s)];
        // compose: previous . phi_e applied after accumulating from the left
        b = a * e.b + b;
        a = a * e.a;
    }
    const double p = a * dom.lo + b, q = a * dom.hi + b;
    return {std::min(p, q), std::max(p, q)};
}

ProjectionResult Gdms::project(const Word& w) const {
    const Interval box = image(w);
    return {box.midpoint(), 0.5 * box.width(), box};
}

double Gdms::project_periodic(const Word& head, const Word& cycle) const {
    if (cycle.empty()) throw std::invalid_argument("project_periodic: empty cycle");
    double fixed;
    if (moebius_) {
        Moebius2x2 m;
        for (Symbol s : cycle.symbols) m.compose_digit(edges_[static_cast<std::size_t>(s)].digit);
        // fixed point of (m00 x + m01)/(m10 x + m11) in the seed interval
        const double A = m.m10, B = m.m11 - m.m00, C = -m.m01;
        if (std::abs(A) < 1e-300) {
            fixed = -C / B;
        } else {
            const double disc = std::sqrt(B * B - 4 * A * C);
            const double r1 = (-B + disc) / (2 * A), r2 = (-B - disc) / (2 * A);
            const Interval seed = vertices_[0];
            fixed = (r1 >= seed.lo - 1e-12 && r1 <= seed.hi + 1e-12) ? r1 : r2;
        }
    } else {
        double a = 1.0, b = 0.0;
        for (Symbol s : cycle.symbols) {
            const GdmsEdge& e = edges_[static_cast<std::size_t>(s)];
            b = a * e.b + b;
            a = a * e.a;
        }
        fixed = b / (1.0 - a);
    }
    for (std::size_t k = head.length(); k-- > 0;) fixed = apply_edge(head.symbols[k], fixed);
    return fixed;
}

double Gdms::log_derivative(const Word& w, double x) const {
    // chain rule right to left: phi_w' (x) = prod phi'_{w_i}(phi_{w_{i+1..n}}(x))
    double log_sum = 0.0;
    double cur = x;
    std::vector<double> stack(w.length());
    for (std::size_t k = w.length(); k-- > 0;) {
        stack[k] = cur;
        cur = apply_edge(w.symbols[k], cur);
    }
    // stack[k] holds the argument seen by edge w_k
    for (std::size_t k = 0; k < w.length(); ++k) log_sum += edge_log_derivative(w.symbols[k], stack[k]);
    return log_sum;
}

Gdms::SoscReport Gdms::check_sosc() const {
    SoscReport report;
    // first-level images grouped per range vertex; interiors must be
    // pairwise disjoint within each X_v
    report.osc = true;
    for (std::size_t v = 0; v < vertices_.size() && report.osc; ++v) {
        std::vector<Interval> images;
        for (std::size_t e = 0; e < edges_.size(); ++e)
            if (edges_[e].range_vertex == static_cast<int>(v))
                images.push_back(image(Word(std::vector<Symbol>{static_cast<Symbol>(e)})));
        std::sort(images.begin(), images.end(),
                  [](const Interval& p, const Interval& q) { return p.lo < q.lo; });
        for (std::size_t i = 0; i + 1 < images.size(); ++i)
            if (images[i].hi > images[i + 1].lo + 1e-14) {
                report.osc = false;
                report.certificate = "overlap between first-level images in vertex set " +
                                     std::to_string(v);
                break;
            }
    }
    if (!report.osc) return report;
    // SOSC witness: an interior limit point from a loop-admissible cycle
    std::vector<Word> candidates;
    const std::size_t probe = std::min<std::size_t>(edges_.size(), 8);
    for (std::size_t a = 0; a < probe; ++a)
        for (std::size_t b = 0; b < probe; ++b)
            if (a != b && admissible_pair(static_cast<Symbol>(a), static_cast<Symbol>(b)) &&
                admissible_pair(static_cast<Symbol>(b), static_cast<Symbol>(a)))
                candidates.push_back(Word{{static_cast<Symbol>(a), static_cast<Symbol>(b)}});
    for (std::size_t a = 0; a < probe; ++a)
        if (admissible_pair(static_cast<Symbol>(a), static_cast<Symbol>(a)))
            candidates.push_back(Word{{static_cast<Symbol>(a)}});
    for (const Word& cycle : candidates) {
        const double witness = project_periodic(Word{}, cycle);
        const Interval home =
            vertices_[static_cast<std::size_t>(edges_[static_cast<std::size_t>(cycle.first())].range_vertex)];
        if (witness > home.lo && witness < home.hi) {
            report.sosc = true;
            report.certificate = "interior limit point pi((" + cycle.serialize() + ")^inf) = " +
                                 std::to_string(witness);
            return report;
        }
    }
    report.sosc = false;
    report.certificate = "no interior periodic witness found among short cycles";
    return report;
}

double CodedPoint::value(const Gdms& system, int depth) const {
    return system.project(code.prefix(static_cast<std::size_t>(depth))).point;
}

CodedPoint induced_map_apply(const Gdms& system, const CodedPoint& z) {
    (void)system;
    return CodedPoint{z.code.shifted(1)};
}

GdmsMeasure GdmsMeasure::from_chain(const Gdms& system, GibbsState chain) {
    if (chain.incidence().alphabet_size() != system.edge_count())
        throw std::invalid_argument("GdmsMeasure: chain alphabet must match the edge count");
    GdmsMeasure m;
    m.system_ = &system;
    m.chain_.emplace(std::move(chain));
    return m;
}

GdmsMeasure GdmsMeasure::gauss_cf(const Gdms& system) {
    GdmsMeasure m;
    m.system_ = &system;
    m.gauss_ = true;
    return m;
}

double GdmsMeasure::cylinder_mass(const Word& w) const {
    if (gauss_) {
        if (!system_->admissible(w)) return 0.0;
        const Interval box = system_->image(w);
        // Gauss measure of the projected cylinder interval
        return std::log2(1.0 + box.hi) - std::log2(1.0 + box.lo);
    }
    return chain_->cylinder_measure(w);
}

Symbol GdmsMeasure::sample_initial(Rng& rng, double& orbit_state) const {
    if (gauss_) {
        orbit_state = std::exp2(rng.next_unit()) - 1.0; // inverse Gauss CDF
        int digit = static_cast<int>(std::floor(1.0 / orbit_state));
        digit = std::min<int>(digit, static_cast<int>(system_->edge_count()));
        return digit - 1;
    }
    MarkovSampler sampler(*chain_);
    return sampler.initial(rng);
}

Symbol GdmsMeasure::sample_step(Symbol prev, Rng& rng, double& orbit_state) const {
    if (gauss_) {
        (void)prev;
        const double inv = 1.0 / orbit_state;
        orbit_state = inv - std::floor(inv);
        if (orbit_state <= 1e-300) orbit_state = rng.next_unit(); // re-randomize at a defect
        int digit = static_cast<int>(std::floor(1.0 / orbit_state));
        digit = std::min<int>(digit, static_cast<int>(system_->edge_count()));
        return digit - 1;
    }
    MarkovSampler sampler(*chain_);
    return sampler.step(prev, rng);
}

Word GdmsMeasure::sample_code(std::size_t length, Rng& rng) const {
    Word w;
    w.symbols.reserve(length);
    if (gauss_) {
        double x = 0.0;
        w.symbols.push_back(sample_initial(rng, x));
        for (std::size_t i = 1; i < length; ++i) w.symbols.push_back(sample_step(0, rng, x));
        return w;
    }
    MarkovSampler sampler(*chain_);
    auto block = sampler.sample_block(length, rng);
    w.symbols = std::move(block);
    return w;
}

double GdmsMeasure::entropy() const {
    if (gauss_) {
        // Gauss measure: h = chi = pi^2 / (6 ln 2) (pressure zero, dimension one)
        return M_PI * M_PI / (6.0 * std::log(2.0));
    }
    return chain_->entropy();
}

double GdmsMeasure::lyapunov_closed_form() const {
    if (gauss_) return M_PI * M_PI / (6.0 * std::log(2.0));
    // affine: chi = -sum_e mu([e]) log|a_e| exactly only when the system is
    // Bernoulli over constant-derivative edges; use the chain marginal
    double chi = 0.0;
    for (std::size_t e = 0; e < system_->edge_count(); ++e) {
        const GdmsEdge& edge = system_->edge(e);
        if (edge.family != GdmsEdge::Family::Affine) return std::numeric_limits<double>::quiet_NaN();
        Word w(std::vector<Symbol>{static_cast<Symbol>(e)});
        chi -= chain_->cylinder_measure(w) * std::log(std::abs(edge.a));
    }
    return chi;
}

BallMeasure ball_measure(const GdmsMeasure& measure, double y, double r, BallMethod method,
                         int depth_budget, std::size_t samples, Rng* rng) {
    const Gdms& sys = measure.system();
    BallMeasure out;
    if (method == BallMethod::CylinderCover) {
        // frontier refinement: cylinders fully inside the open ball count into
        // the lower bound, cylinders meeting it into the upper bound
        double lower = 0.0, upper = 0.0;
        std::deque<Word> frontier;
        for (std::size_t e = 0; e < sys.edge_count(); ++e)
            frontier.emplace_back(std::vector<Symbol>{static_cast<Symbol>(e)});
        const double lo = y - r, hi = y + r;
        while (!frontier.empty()) {
            Word w = std::move(frontier.front());
            frontier.pop_front();
            const Interval box = sys.image(w);
            if (box.hi <= lo || box.lo >= hi) continue; // misses the open ball
            const double mass = measure.cylinder_mass(w);
            if (mass == 0.0) continue;
            if (box.lo > lo && box.hi < hi) {
                lower += mass;
                upper += mass;
                continue;
            }
            if (static_cast<int>(w.length()) >= depth_budget) {
                upper += mass;
                continue;
            }
            for (std::size_t e = 0; e < sys.edge_count(); ++e) {
                if (!sys.admissible_pair(w.last(), static_cast<Symbol>(e))) continue;
                frontier.push_back(w.appended(static_cast<Symbol>(e)));
            }
        }
        out.lower = lower;
        out.upper = upper;
        out.estimate = 0.5 * (lower + upper);
        out.exact = true;
        return out;
    }
    if (rng == nullptr) throw std::invalid_argument("ball_measure: Monte Carlo needs an Rng");
    // depth at which projection error is negligible vs r
    int depth = 1;
    while (sys.diameter_bound(depth) > r * 1e-3 && depth < 200) ++depth;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const Word code = measure.sample_code(static_cast<std::size_t>(depth), *rng);
        const double x = sys.project(code).point;
        if (std::abs(x - y) < r) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    out.estimate = p;
    out.std_error = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(samples));
    out.lower = std::max(0.0, p - 3 * out.std_error);
    out.upper = std::min(1.0, p + 3 * out.std_error);
    out.exact = false;
    return out;
}

PowerLawFit power_law_fit(const GdmsMeasure& measure, double y, const std::vector<double>& radii,
                          double entropy, double lyapunov, int depth_budget) {
    if (radii.size() < 10)
        throw std::invalid_argument("power_law_fit: need at least 10 radii");
    double span = *std::max_element(radii.begin(), radii.end()) /
                  *std::min_element(radii.begin(), radii.end());
    if (span < 1000.0 - 1e-9)
        throw std::invalid_argument("power_law_fit: radii must span at least 3 decades");
    PowerLawFit fit;
    fit.alpha_theory = 0.5 * entropy / lyapunov;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (double r : radii) {
        const BallMeasure b = ball_measure(measure, y, r, BallMethod::CylinderCover, depth_budget);
        if (!(b.estimate > 0.0)) continue;
        const double lx = std::log(r), ly = std::log(b.estimate);
        fit.radii.push_back(r);
        fit.masses.push_back(b.estimate);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m < 2) throw std::domain_error("power_law_fit: degenerate ball masses");
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    fit.alpha = (static_cast<double>(m) * sxy - sx * sy) / denom;
    fit.log_c = (sy - fit.alpha * sx) / static_cast<double>(m);
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        const double pred = fit.log_c + fit.alpha * std::log(fit.radii[i]);
        fit.max_residual = std::max(fit.max_residual, std::abs(pred - std::log(fit.masses[i])));
    }
    return fit;
}

LyapunovEstimate lyapunov(const GdmsMeasure& measure, std::size_t length, std::uint64_t seed) {
    Rng rng(seed);
    const Gdms& sys = measure.system();
    LyapunovEstimate est;
    est.samples = length;
    double sum = 0.0, sum2 = 0.0;
    if (measure.is_gauss()) {
        // Birkhoff average along the Gauss-map orbit: -log|phi_a'(x_{k+1})| = -2 log x_k
        double x = 0.0;
        (void)measure.sample_initial(rng, x);
        // sample_initial already drew x from the Gauss law; reuse the state
        for (std::size_t k = 0; k < length; ++k) {
            const double term = -2.0 * std::log(x);
            sum += term;
            sum2 += term * term;
            const double inv = 1.0 / x;
            x = inv - std::floor(inv);
            if (x <= 1e-300) {
                x = std::exp2(rng.next_unit()) - 1.0;
            }
        }
    } else {
        const MarkovSampler sampler(*measure.chain());
        Symbol cur = sampler.initial(rng);
        Symbol next = sampler.step(cur, rng);
        // for affine edges the derivative is constant; the projection argument
        // is irrelevant, but evaluate at the shifted projection for generality
        for (std::size_t k = 0; k < length; ++k) {
            Word wn(std::vector<Symbol>{next});
            const double x_next = sys.image(wn).midpoint();
            const double term = -sys.edge_log_derivative(cur, x_next);
            sum += term;
            sum2 += term * term;
            cur = next;
            next = sampler.step(cur, rng);
        }
    }
    est.value = sum / static_cast<double>(length);
    const double var = sum2 / static_cast<double>(length) - est.value * est.value;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(length));
    return est;
}

GdmsCover gdms_cover(const GdmsMeasure& measure, double y, double r, int max_depth) {
    const Gdms& sys = measure.system();
    GdmsCover cover;
    int n = 1;
    while (sys.diameter_bound(n) > r * r) {
        ++n;
        if (n > max_depth) throw std::domain_error("gdms_cover: depth budget exceeded");
    }
    cover.n_of_r = n;
    // collect order-n cylinders meeting the ball by frontier refinement
    std::deque<Word> frontier;
    for (std::size_t e = 0; e < sys.edge_count(); ++e)
        frontier.emplace_back(std::vector<Symbol>{static_cast<Symbol>(e)});
    const double lo = y - r, hi = y + r;
    cover.cover_inside_blowup = true;
    while (!frontier.empty()) {
        Word w = std::move(frontier.front());
        frontier.pop_front();
        const Interval box = sys.image(w);
        if (box.hi <= lo || box.lo >= hi) continue;
        if (static_cast<int>(w.length()) == n) {
            cover.mass += measure.cylinder_mass(w);
            if (box.lo < y - r - r * r - 1e-15 || box.hi > y + r + r * r + 1e-15)
                cover.cover_inside_blowup = false;
            cover.cylinders.push_back(std::move(w));
            continue;
        }
        for (std::size_t e = 0; e < sys.edge_count(); ++e)
            if (sys.admissible_pair(w.last(), static_cast<Symbol>(e)))
                frontier.push_back(w.appended(static_cast<Symbol>(e)));
    }
    const BallMeasure ball = ball_measure(measure, y, r, BallMethod::CylinderCover, n + 8);
    cover.mu_ball_lower = ball.lower;
    return cover;
}

double CfTruncatedDensity::interval_mass(double lo, double hi) const {
    const int grid = static_cast<int>(node_values.size()) - 1;
    lo = std::max(0.0, lo);
    hi = std::min(1.0, hi);
    if (hi <= lo) return 0.0;
    // trapezoid over the grid with linear interpolation at the cut points
    auto value_at = [&](double x) {
        const double t = x * grid;
        int j = static_cast<int>(t);
        if (j >= grid) j = grid - 1;
        const double frac = t - j;
        return node_values[static_cast<std::size_t>(j)] * (1 - frac) +
               node_values[static_cast<std::size_t>(j) + 1] * frac;
    };
    const int j_lo = static_cast<int>(std::ceil(lo * grid));
    const int j_hi = static_cast<int>(std::floor(hi * grid));
    double mass = 0.0;
    if (j_lo > j_hi) return 0.5 * (value_at(lo) + value_at(hi)) * (hi - lo);
    mass += 0.5 * (value_at(lo) + node_values[static_cast<std::size_t>(j_lo)]) *
            (static_cast<double>(j_lo) / grid - lo);
    for (int j = j_lo; j < j_hi; ++j)
        mass += 0.5 * (node_values[static_cast<std::size_t>(j)] + node_values[static_cast<std::size_t>(j) + 1]) / grid;
    mass += 0.5 * (node_values[static_cast<std::size_t>(j_hi)] + value_at(hi)) *
            (hi - static_cast<double>(j_hi) / grid);
    return mass;
}

double CfTruncatedDensity::first_digit_mass(int digit) const {
    return interval_mass(1.0 / (digit + 1.0), 1.0 / digit);
}

CfTruncatedDensity cf_truncated_density(int truncation, int grid, int iterations) {
    if (truncation < 2 || grid < 64) throw std::invalid_argument("cf_truncated_density: bad sizes");
    CfTruncatedDensity out;
    out.truncation = truncation;
    out.tail_bound = 1.0 / static_cast<double>(truncation);
    std::vector<double> h(static_cast<std::size_t>(grid) + 1, 1.0), next(h.size());
    double lambda = 1.0;
    for (int it = 0; it < iterations; ++it) {
        for (int i = 0; i <= grid; ++i) {
            const double x = static_cast<double>(i) / grid;
            double s = 0.0;
            for (int n = 1; n <= truncation; ++n) {
                const double y = 1.0 / (n + x);
                const double t = y * grid;
                int j = static_cast<int>(t);
                if (j >= grid) j = grid - 1;
                const double frac = t - j;
                s += y * y * (h[static_cast<std::size_t>(j)] * (1 - frac) +
                              h[static_cast<std::size_t>(j) + 1] * frac);
            }
            next[static_cast<std::size_t>(i)] = s;
        }
        double mass = 0.0;
        for (int i = 0; i < grid; ++i)
            mass += 0.5 * (next[static_cast<std::size_t>(i)] + next[static_cast<std::size_t>(i) + 1]) / grid;
        lambda = mass;
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = next[i] / mass;
    }
    out.lambda = lambda;
    out.node_values = std::move(h);
    return out;
}

} // namespace hitstat
