#include "hitstat/expanding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hitstat {

IntervalMap IntervalMap::doubling() {
    IntervalMap m;
    m.name_ = "doubling";
    m.cells_ = {{0.0, 0.5}, {0.5, 1.0}};
    m.slopes_ = {2.0, 2.0};
    m.offsets_ = {0.0, -1.0};
    m.lambda_ = 2.0;
    m.delta_ = 0.5;
    m.base_ = 2;
    return m;
}

IntervalMap IntervalMap::ternary() {
    IntervalMap m;
    m.name_ = "ternary";
    m.cells_ = {{0.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}, {2.0 / 3.0, 1.0}};
    m.slopes_ = {3.0, 3.0, 3.0};
    m.offsets_ = {0.0, -1.0, -2.0};
    m.lambda_ = 3.0;
    m.delta_ = 1.0 / 3.0;
    m.base_ = 3;
    return m;
}

IntervalMap IntervalMap::piecewise_linear(std::vector<double> cuts, std::vector<double> image_lo,
                                          std::vector<double> image_hi, std::string name) {
    if (cuts.size() < 2 || image_lo.size() + 1 != cuts.size() || image_hi.size() != image_lo.size())
        throw std::invalid_argument("piecewise_linear: inconsistent branch table");
    if (cuts.front() != 0.0 || cuts.back() != 1.0)
        throw std::invalid_argument("piecewise_linear: cuts must span [0,1]");
    IntervalMap m;
    m.name_ = std::move(name);
    double lambda = std::numeric_limits<double>::infinity();
    double mesh = 0.0;
    for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
        const Interval cell{cuts[b], cuts[b + 1]};
        const double slope = (image_hi[b] - image_lo[b]) / cell.width();
        if (!(slope > 1.0)) throw std::invalid_argument("piecewise_linear: branches must expand");
        m.cells_.push_back(cell);
        m.slopes_.push_back(slope);
        m.offsets_.push_back(image_lo[b] - slope * cell.lo);
        lambda = std::min(lambda, slope);
        mesh = std::max(mesh, cell.width());
    }
    // Markov check: every branch image must align with cell boundaries
    for (std::size_t b = 0; b + 1 < cuts.size(); ++b) {
        auto is_boundary = [&](double v) {
            if (std::abs(v - 1.0) < 1e-12) return true;
            for (double c : cuts)
                if (std::abs(v - c) < 1e-12) return true;
            return false;
        };
        if (!is_boundary(image_lo[b]) || !is_boundary(image_hi[b]))
            throw std::invalid_argument("piecewise_linear: branch image is not a union of cells");
    }
    m.lambda_ = lambda;
    m.delta_ = mesh;
    return m;
}

IntervalMap IntervalMap::golden_markov() {
    return piecewise_linear({0.0, 2.0 / 3.0, 1.0}, {0.0, 0.0}, {1.0, 2.0 / 3.0}, "golden-markov");
}

IntervalMap IntervalMap::gauss() {
    IntervalMap m;
    m.name_ = "gauss";
    m.uniform_ = false; // |T'| = 1/x^2 is not uniformly bounded below by lambda > 1 near 1
    m.lambda_ = 4.0;    // valid on [0,1/2] only; flagged via uniform_
    m.delta_ = 0.5;
    m.gauss_ = true;
    return m;
}

double IntervalMap::apply(double x) const {
    if (gauss_) {
        if (x <= 0.0) return 0.0;
        const double inv = 1.0 / x;
        return inv - std::floor(inv);
    }
    const int b = branch_index(x);
    double y = slopes_[static_cast<std::size_t>(b)] * x + offsets_[static_cast<std::size_t>(b)];
    if (y < 0.0) y = 0.0;
    if (y >= 1.0) y = std::nextafter(1.0, 0.0);
    return y;
}

std::optional<Rational> IntervalMap::apply(const Rational& x) const {
    if (gauss_) {
        if (x.num == 0) return Rational(0, 1);
        // {den/num} by Euclid
        const std::int64_t a = x.num, b = x.den;
        return Rational(b % a, a);
    }
    if (base_ > 0) return scale_mod_one(x, base_);
    return std::nullopt;
}

double IntervalMap::derivative(double x) const {
    if (gauss_) {
        if (x <= 0.0) return std::numeric_limits<double>::infinity();
        return 1.0 / (x * x);
    }
    return slopes_[static_cast<std::size_t>(branch_index(x))];
}

int IntervalMap::branch_index(double x) const {
    if (gauss_) {
        if (x <= 0.0) return 0; // convention: digit "infinity" collapsed
        return static_cast<int>(std::floor(1.0 / x));
    }
    if (x < 0.0 || x >= 1.0) throw std::domain_error("branch_index: point outside [0,1)");
    // cells are few; linear scan
    for (std::size_t b = 0; b < cells_.size(); ++b)
        if (cells_[b].contains(x)) return static_cast<int>(b);
    return static_cast<int>(cells_.size()) - 1;
}

double IntervalMap::inverse_in_branch(int branch, double y) const {
    if (gauss_) return 1.0 / (static_cast<double>(branch) + y);
    return (y - offsets_[static_cast<std::size_t>(branch)]) / slopes_[static_cast<std::size_t>(branch)];
}

IncidenceStructure IntervalMap::cell_incidence() const {
    if (gauss_) throw std::domain_error("cell_incidence: countable-branch map; use the gauss-cf GDMS");
    const std::size_t n = cells_.size();
    std::vector<std::uint8_t> a(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = slopes_[i] * cells_[i].lo + offsets_[i];
        const double hi = slopes_[i] * cells_[i].hi + offsets_[i];
        for (std::size_t j = 0; j < n; ++j)
            if (cells_[j].lo >= lo - 1e-12 && cells_[j].hi <= hi + 1e-12) a[i * n + j] = 1;
    }
    return IncidenceStructure(n, std::move(a));
}

double iterate(const IntervalMap& map, double x, long n) {
    for (long i = 0; i < n; ++i) x = map.apply(x);
    return x;
}

std::optional<Rational> iterate(const IntervalMap& map, const Rational& x, long n) {
    Rational cur = x;
    for (long i = 0; i < n; ++i) {
        auto next = map.apply(cur);
        if (!next) return std::nullopt;
        cur = *next;
    }
    return cur;
}

DriftedPoint iterate_with_drift(const IntervalMap& map, double x, long n) {
    DriftedPoint out{x, 0.0};
    constexpr double kEps = 2.3e-16;
    for (long i = 0; i < n; ++i) {
        const double amplify = std::abs(map.derivative(out.value));
        out.drift_bound = std::min(1.0, out.drift_bound * amplify + kEps);
        out.value = map.apply(out.value);
    }
    return out;
}

std::pair<Word, Interval> MarkovPartition::cell_of(double x, int n) const {
    if (n < 0) throw std::invalid_argument("cell_of: negative depth");
    Word w;
    w.symbols.reserve(static_cast<std::size_t>(n));
    double cur = x;
    for (int k = 0; k < n; ++k) {
        w.symbols.push_back(map_->branch_index(cur));
        cur = map_->apply(cur);
    }
    return {w, cell_interval(w)};
}

Interval MarkovPartition::cell_interval(const Word& w) const {
    // pull [0,1) back through the branches: C(w) = I_{w_1} cap T^{-1} C(sigma w)
    Interval j{0.0, 1.0};
    for (std::size_t k = w.length(); k-- > 0;) {
        const int b = w.symbols[k];
        const Interval cell = map_->cell(static_cast<std::size_t>(b));
        const double slope = map_->branch_slope(b);
        const double offset = map_->branch_offset(b);
        const double img_lo = slope * cell.lo + offset;
        const double img_hi = slope * cell.hi + offset;
        const double a = std::max(j.lo, img_lo);
        const double c = std::min(j.hi, img_hi);
        if (!(a < c)) return {cell.lo, cell.lo}; // inadmissible word: empty cell
        j.lo = (a - offset) / slope;
        j.hi = (c - offset) / slope;
    }
    return j;
}

double MarkovPartition::depth_mesh(int n) const {
    return map_->expansion_delta() * std::pow(map_->expansion_lambda(), -(n - 1));
}

IntervalMeasure IntervalMeasure::lebesgue() {
    IntervalMeasure m;
    m.kind_ = Kind::Lebesgue;
    return m;
}

IntervalMeasure IntervalMeasure::pushed_markov(const IntervalMap& map, GibbsState state) {
    IntervalMeasure m;
    m.kind_ = Kind::PushedMarkov;
    m.map_ = &map;
    if (state.incidence().alphabet_size() != map.cell_count())
        throw std::invalid_argument("pushed_markov: chain alphabet must match the cell count");
    m.state_.emplace(std::move(state));
    return m;
}

IntervalMeasure IntervalMeasure::gauss() {
    IntervalMeasure m;
    m.kind_ = Kind::GaussClosedForm;
    return m;
}

double IntervalMeasure::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    switch (kind_) {
    case Kind::Lebesgue:
        return x;
    case Kind::GaussClosedForm:
        return std::log2(1.0 + x);
    case Kind::PushedMarkov: {
        // descend the coding tree, accumulating the mass of cells strictly left
        double acc = 0.0;
        double cur = x;
        Word prefix;
        double prefix_mass = 1.0;
        for (int depth = 0; depth < 64 && prefix_mass > 1e-19; ++depth) {
            const int b = map_->branch_index(cur);
            for (std::size_t c = 0; c < static_cast<std::size_t>(b); ++c)
                acc += state_->cylinder_measure(prefix.appended(static_cast<Symbol>(c)));
            prefix = prefix.appended(b);
            prefix_mass = state_->cylinder_measure(prefix);
            cur = map_->apply(cur);
        }
        return std::min(acc, 1.0);
    }
    }
    return 0.0;
}

double IntervalMeasure::interval_mass(double lo, double hi) const {
    if (hi <= lo) return 0.0;
    return cdf(hi) - cdf(lo);
}

double IntervalMeasure::ball(double y, double r) const {
    return interval_mass(std::max(0.0, y - r), std::min(1.0, y + r));
}

double IntervalMeasure::sample(Rng& rng) const {
    switch (kind_) {
    case Kind::Lebesgue:
        return rng.next_unit();
    case Kind::GaussClosedForm:
        return std::exp2(rng.next_unit()) - 1.0;
    case Kind::PushedMarkov: {
        // sample a deep itinerary from the chain, return its cell midpoint
        const std::size_t n = map_->cell_count();
        std::vector<Symbol> word;
        word.reserve(56);
        Symbol s = -1;
        for (int depth = 0; depth < 56; ++depth) {
            const double u = rng.next_unit();
            double acc = 0.0;
            Symbol chosen = static_cast<Symbol>(n - 1);
            for (std::size_t b = 0; b < n; ++b) {
                const double p = depth == 0 ? state_->initial_distribution()[b]
                                            : state_->kernel(s, static_cast<Symbol>(b));
                acc += p;
                if (u < acc) { chosen = static_cast<Symbol>(b); break; }
            }
            word.push_back(chosen);
            s = chosen;
        }
        MarkovPartition partition(*map_);
        return partition.cell_interval(Word(std::move(word))).midpoint();
    }
    }
    return 0.0;
}

MarkovCover markov_cover(const MarkovPartition& partition, const IntervalMeasure& measure,
                         double y, double r) {
    const IntervalMap& map = partition.map();
    if (!map.uniformly_expanding())
        throw std::domain_error("markov_cover: map carries no uniform expansion constant");
    if (!(r > 0.0) || r >= 1.0) throw std::invalid_argument("markov_cover: radius must lie in (0,1)");

    MarkovCover cover;
    cover.y = y;
    cover.r = r;
    const double delta = map.expansion_delta();
    const double lambda = map.expansion_lambda();
    int n = 1;
    while (delta * std::pow(lambda, -(n - 1)) > r * r) {
        ++n;
        if (n > 256) throw std::domain_error("markov_cover: radius below float-resolved cells");
    }
    // refuse when cells can no longer be resolved in double precision
    const double mesh = delta * std::pow(lambda, -(n - 1));
    if (mesh < 1e-15) {
        const int n_max = 1 + static_cast<int>(std::floor(std::log(delta / 1e-15) / std::log(lambda)));
        const double r_min = std::sqrt(delta * std::pow(lambda, -(n_max - 1)));
        throw std::domain_error("markov_cover: radius below float-resolved cells; minimum r ~= " +
                                std::to_string(r_min));
    }
    cover.n_of_r = n;

    const double lo_point = std::max(0.0, y - r);
    const double hi_point = std::min(1.0, y + r);
    const auto [wl, cell_lo] = partition.cell_of(lo_point, n);
    double hull_lo = cell_lo.lo;
    double hull_hi;
    if (hi_point >= 1.0) {
        hull_hi = 1.0;
    } else {
        const auto [wr, cell_hi] = partition.cell_of(hi_point, n);
        // the cell containing y+r meets the open ball only if its left end is inside
        hull_hi = (cell_hi.lo < hi_point) ? cell_hi.hi : cell_hi.lo;
    }
    cover.hull = {hull_lo, hull_hi};

    // ord(R_r): least depth m whose cell boundaries contain both hull endpoints
    int ord = n;
    for (int m = 0; m <= n; ++m) {
        const bool left_ok = (hull_lo == 0.0) || partition.cell_of(hull_lo, m).second.lo == hull_lo;
        const bool right_ok = (hull_hi == 1.0) || partition.cell_of(hull_hi, m).second.lo == hull_hi;
        if (left_ok && right_ok) { ord = m; break; }
    }
    cover.order = ord;

    cover.mu_cover = measure.interval_mass(hull_lo, hull_hi);
    cover.mu_ball = measure.ball(y, r);
    cover.ratio = cover.mu_ball > 0 ? cover.mu_cover / cover.mu_ball
                                    : std::numeric_limits<double>::infinity();
    cover.ball_inside_cover = hull_lo <= std::max(0.0, y - r) && hull_hi >= std::min(1.0, y + r);
    cover.cover_inside_blowup = hull_lo >= y - r - r * r - 1e-15 && hull_hi <= y + r + r * r + 1e-15;
    return cover;
}

GoodRadiusProbe good_radius_density(const IntervalMeasure& measure, double y, double r_min,
                                    double r_max, std::size_t grid_size) {
    if (grid_size < 100) throw std::invalid_argument("good_radius_density: grid_size >= 100");
    if (!(0 < r_min && r_min < r_max && r_max < 1))
        throw std::invalid_argument("good_radius_density: need 0 < r_min < r_max < 1");
    GoodRadiusProbe probe;
    probe.radii.reserve(grid_size);
    probe.flagged.reserve(grid_size);
    const double log_lo = std::log(r_min), log_hi = std::log(r_max);
    std::size_t good = 0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(grid_size - 1);
        const double r = std::exp(log_lo + t * (log_hi - log_lo));
        const double mb = measure.ball(y, r);
        const double mb2 = measure.ball(y, r + r * r);
        const bool flag = mb > 0 && mb2 / mb <= 2.0;
        probe.radii.push_back(r);
        probe.flagged.push_back(flag);
        if (flag) ++good;
    }
    probe.density = static_cast<double>(good) / static_cast<double>(grid_size);
    // per decade of r
    double decade_hi = r_max;
    while (decade_hi > r_min) {
        const double decade_lo = decade_hi / 10.0;
        std::size_t count = 0, flagged = 0;
        for (std::size_t i = 0; i < grid_size; ++i)
            if (probe.radii[i] > decade_lo && probe.radii[i] <= decade_hi) {
                ++count;
                if (probe.flagged[i]) ++flagged;
            }
        if (count > 0)
            probe.per_decade.emplace_back(decade_hi,
                                          static_cast<double>(flagged) / static_cast<double>(count));
        decade_hi = decade_lo;
    }
    return probe;
}

InverseBranchHandle::InverseBranchHandle(const IntervalMap& map, double x, int order)
    : map_(&map), x_(x) {
    double cur = x;
    branches_.reserve(static_cast<std::size_t>(order));
    for (int k = 0; k < order; ++k) {
        branches_.push_back(map.branch_index(cur));
        cur = map.apply(cur);
    }
    fx_ = cur;
}

double InverseBranchHandle::apply(double z) const {
    double cur = z;
    for (std::size_t k = branches_.size(); k-- > 0;) cur = map_->inverse_in_branch(branches_[k], cur);
    return cur;
}

double InverseBranchHandle::contraction_bound() const {
    return std::pow(map_->expansion_lambda(), -static_cast<double>(branches_.size()));
}

} // namespace hitstat
