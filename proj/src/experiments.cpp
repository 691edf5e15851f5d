#include "hitstat/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "hitstat/csv.hpp"
#include "hitstat/gdms.hpp"
#include "hitstat/hitting.hpp"
#include "hitstat/induction.hpp"
#include "hitstat/symbolic.hpp"
#include "hitstat/thermo.hpp"

namespace hitstat {

namespace {

using nlohmann::json;

void require_keys(const json& block, const std::string& where,
                  const std::vector<std::string>& allowed,
                  const std::vector<std::string>& required = {}) {
    if (!block.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = block.begin(); it != block.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
    for (const std::string& key : required)
        if (!block.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
}

IncidenceStructure build_incidence(const json& system) {
    require_keys(system, "system", {"name", "alphabet", "text", "path"}, {"name"});
    const std::string name = system.at("name");
    if (name == "full-shift") {
        const std::size_t n = system.value("alphabet", 2);
        return IncidenceStructure::full_shift(n);
    }
    if (name == "golden-shift") return IncidenceStructure::golden_mean();
    if (name == "incidence") {
        if (system.contains("text")) return IncidenceStructure::parse(system.at("text"));
        std::ifstream in(system.at("path").get<std::string>());
        if (!in) throw ConfigError("system: cannot open incidence file");
        std::stringstream buf;
        buf << in.rdbuf();
        return IncidenceStructure::parse(buf.str());
    }
    throw ConfigError("system: unknown shift system '" + name + "'");
}

Potential build_potential(const json& measure, std::size_t alphabet) {
    require_keys(measure, "measure", {"name", "p", "table", "t"}, {"name"});
    const std::string name = measure.at("name");
    if (name == "zero") return Potential::zero();
    if (name == "gauss_t") return Potential::gauss_t(measure.value("t", 1.0), alphabet);
    if (name == "bernoulli") {
        std::vector<double> p = measure.at("p").get<std::vector<double>>();
        if (p.size() != alphabet) throw ConfigError("measure: bernoulli p size mismatch");
        return Potential::bernoulli(std::move(p));
    }
    if (name == "markov1") {
        const auto rows = measure.at("table").get<std::vector<std::vector<double>>>();
        if (rows.size() != alphabet) throw ConfigError("measure: markov1 table size mismatch");
        std::vector<double> flat;
        for (const auto& row : rows) {
            if (row.size() != alphabet) throw ConfigError("measure: markov1 table not square");
            for (double v : row) flat.push_back(v);
        }
        return Potential::markov_depth1(alphabet, std::move(flat));
    }
    throw ConfigError("measure: unknown potential '" + name + "'");
}

IntervalMap build_interval_map(const json& system) {
    require_keys(system, "system", {"name"}, {"name"});
    const std::string name = system.at("name");
    if (name == "doubling") return IntervalMap::doubling();
    if (name == "ternary") return IntervalMap::ternary();
    if (name == "golden-markov") return IntervalMap::golden_markov();
    if (name == "gauss") return IntervalMap::gauss();
    throw ConfigError("system: unknown interval map '" + name + "'");
}

IntervalMeasure build_interval_measure(const json& measure, const IntervalMap& map) {
    require_keys(measure, "measure", {"name", "p", "table"}, {"name"});
    const std::string name = measure.at("name");
    if (name == "lebesgue") return IntervalMeasure::lebesgue();
    if (name == "gauss") return IntervalMeasure::gauss();
    const Potential f = build_potential(measure, map.cell_count());
    return IntervalMeasure::pushed_markov(map, gibbs_state(f, map.cell_incidence()));
}

Gdms build_gdms(const json& system, const json& params) {
    require_keys(system, "system", {"name", "vertices", "edges", "truncation"}, {"name"});
    const std::string name = system.at("name");
    if (name == "cantor3") return Gdms::cantor3();
    if (name == "dyadic") return Gdms::dyadic();
    if (name == "gauss-cf") {
        const int truncation =
            system.value("truncation", params.value("truncation", 10000));
        return Gdms::gauss_cf(truncation);
    }
    if (name == "custom") {
        if (!system.contains("vertices") || !system.contains("edges"))
            throw ConfigError("system: custom GDMS needs vertices and edges");
        std::vector<Interval> vertices;
        for (const auto& pair : system.at("vertices")) {
            const auto v = pair.get<std::vector<double>>();
            if (v.size() != 2) throw ConfigError("system: vertex sets are [lo, hi]");
            vertices.push_back({v[0], v[1]});
        }
        std::vector<GdmsEdge> edges;
        for (const auto& spec : system.at("edges")) {
            require_keys(spec, "system.edges[]", {"i", "t", "family", "a", "b", "digit"},
                         {"i", "t", "family"});
            GdmsEdge edge;
            edge.range_vertex = spec.at("i");
            edge.domain_vertex = spec.at("t");
            const std::string family = spec.at("family");
            if (family == "affine") {
                edge.family = GdmsEdge::Family::Affine;
                edge.a = spec.at("a");
                edge.b = spec.at("b");
            } else if (family == "moebius") {
                edge.family = GdmsEdge::Family::Moebius;
                edge.digit = spec.at("digit");
            } else {
                throw ConfigError("system.edges[]: unknown family '" + family + "'");
            }
            edges.push_back(edge);
        }
        return Gdms(std::move(vertices), std::move(edges), "custom");
    }
    throw ConfigError("system: unknown GDMS '" + name + "'");
}

// decompose an interval into depth-m coding cells, if it aligns with them
std::optional<std::vector<Word>> cells_covering(const IntervalMap& map, Interval target, int m) {
    MarkovPartition partition(map);
    std::vector<Word> words;
    double cursor = target.lo;
    for (int guard = 0; guard < 4096; ++guard) {
        if (std::abs(cursor - target.hi) < 1e-12) return words;
        if (cursor > target.hi + 1e-12) return std::nullopt;
        auto [w, cell] = partition.cell_of(cursor + 1e-13, m);
        if (std::abs(cell.lo - cursor) > 1e-12) return std::nullopt;
        words.push_back(std::move(w));
        cursor = cell.hi;
    }
    return std::nullopt;
}

struct Runner {
    ReportBuilder report;
    std::vector<std::pair<std::string, std::string>> artifacts;

    void add_csv(const std::string& name, const CsvBuilder& csv) {
        artifacts.emplace_back(name, csv.str());
    }
    ExperimentResult finish(const ExperimentConfig& config) {
        report.section("run");
        report.kv("experiment", config.experiment);
        report.kv("seed", static_cast<long>(config.seed));
        report.kv("workers", config.workers);
        ExperimentResult result;
        result.all_pass = report.all_pass();
        result.artifacts = std::move(artifacts);
        result.artifacts.emplace_back("report.txt", report.str());
        return result;
    }
};

ExperimentResult run_pressure(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"depth"});
    const int depth = config.params.value("depth", 12);
    const IncidenceStructure inc = build_incidence(config.system);
    const Potential f = build_potential(config.measure, inc.alphabet_size());

    Runner r;
    const PressureEstimate spec = pressure(f, inc, depth, PressureMethod::Spectral);
    const PressureEstimate trunc = pressure(f, inc, depth, PressureMethod::TruncatedLimit);

    CsvBuilder csv({"n", "truncated_value", "spectral_value"});
    for (int n = 1; n <= depth; ++n) {
        csv.cell(static_cast<long>(n))
            .cell(trunc.partials[static_cast<std::size_t>(n - 1)])
            .cell(spec.value);
        csv.end_row();
    }
    r.report.column_doc("pressure.csv", "n", "truncation depth of the partial pressure");
    r.report.column_doc("pressure.csv", "truncated_value", "(1/n) log sum of cylinder sup weights");
    r.report.column_doc("pressure.csv", "spectral_value", "log Perron eigenvalue of weighted matrix");
    r.add_csv("pressure.csv", csv);

    r.report.section("pressure");
    r.report.kv("spectral", spec.value);
    r.report.kv("truncated_at_depth", trunc.value);
    r.report.kv("spectral_fallback", spec.spectral_fallback ? "yes" : "no");
    if (!spec.note.empty()) r.report.kv("note", spec.note);
    for (int n : {4, 8, 12}) {
        if (n > depth) continue;
        const double diff = std::abs(trunc.partials[static_cast<std::size_t>(n - 1)] - spec.value);
        r.report.check("pressure consistency n=" + std::to_string(n), diff <= 3.0 / n,
                       "diff " + format_double(diff));
    }
    return r.finish(config);
}

ExperimentResult run_gibbs_audit(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"audit_depth"});
    const int audit_depth = config.params.value("audit_depth", 10);
    const IncidenceStructure inc = build_incidence(config.system);
    const Potential f = build_potential(config.measure, inc.alphabet_size());
    const GibbsState state = gibbs_state(f, inc);

    Runner r;
    CsvBuilder csv({"symbol", "initial", "right_eigen", "left_eigen"});
    for (std::size_t a = 0; a < inc.alphabet_size(); ++a) {
        csv.cell(static_cast<long>(a + 1))
            .cell(state.initial_distribution()[a])
            .cell(state.eigen().right[a])
            .cell(state.eigen().left[a]);
        csv.end_row();
    }
    r.report.column_doc("gibbs.csv", "symbol", "1-based alphabet symbol");
    r.report.column_doc("gibbs.csv", "initial", "stationary mass of the depth-1 cylinder");
    r.report.column_doc("gibbs.csv", "right_eigen", "right Perron eigenvector entry");
    r.report.column_doc("gibbs.csv", "left_eigen", "left Perron eigenvector entry");
    r.add_csv("gibbs.csv", csv);

    const GibbsAuditReport audit = verify_gibbs_property(state, audit_depth);
    const double q_at_depth = state.gibbs_constant(audit_depth);
    r.report.section("gibbs");
    r.report.kv("pressure", state.pressure());
    r.report.kv("gibbs_Q", state.gibbs_constant());
    if (state.blocking_halfwidth() > 0) r.report.kv("gibbs_Q_at_audit_depth", q_at_depth);
    r.report.kv("entropy", state.entropy());
    r.report.kv("mean_potential", state.mean_potential());
    r.report.kv("decay_beta", state.decay_exponent(audit_depth));
    r.report.kv("worst_ratio_high", audit.worst_ratio_high);
    r.report.kv("worst_ratio_low", audit.worst_ratio_low);
    r.report.kv("attaining_high", audit.attaining_high.serialize());
    r.report.check("gibbs ratios within [1/Q, Q]",
                   audit.worst_ratio_high <= q_at_depth * (1 + 1e-9) &&
                       audit.worst_ratio_low >= (1 - 1e-9) / q_at_depth);
    r.report.check("additivity <= 1e-12", audit.additivity_defect <= 1e-12,
                   format_double(audit.additivity_defect));
    r.report.check("normalization <= 1e-12", audit.normalization_defect <= 1e-12,
                   format_double(audit.normalization_defect));
    const double equil = std::abs(state.entropy() + state.mean_potential() - state.pressure());
    r.report.check("equilibrium identity h + int f = P within 1e-9", equil <= 1e-9,
                   format_double(equil));
    r.report.check("decay exponent beta > 0", state.decay_exponent(audit_depth) > 0);
    const MarkovSampler sampler(state);
    r.report.check("sampler stationarity within 1e-12", sampler.stationarity_defect() <= 1e-12,
                   format_double(sampler.stationarity_defect()));
    return r.finish(config);
}

struct PairTask {
    HittingRecordSequence records;
    std::vector<double> mu_at_records;
};

// sampled (x, y) record sequences for either system family
std::vector<PairTask> sample_pairs(const ExperimentConfig& config, std::size_t pairs, long horizon) {
    std::vector<PairTask> out(pairs);
    const std::string sys_name = config.system.at("name");
    const bool symbolic = sys_name == "full-shift" || sys_name == "golden-shift" || sys_name == "incidence";
    if (symbolic) {
        const IncidenceStructure inc = build_incidence(config.system);
        const Potential f = build_potential(config.measure, inc.alphabet_size());
        const GibbsState state = gibbs_state(f, inc);
        const MarkovSampler sampler(state);
        const UltrametricSpec spec;
        parallel_for(pairs, config.workers, [&](std::size_t i) {
            Rng rng = Rng::stream(config.seed, i);
            auto target = sampler.sample_block(64, rng);
            SymbolPath rho = SymbolPath::from_rule([t = std::move(target)](std::size_t idx) -> Symbol {
                return idx < 64 ? t[idx] : t[63]; // beyond resolution; unreachable in scans
            });
            SymbolPath omega = sampler.sample_typical(0, rng.next_u64());
            out[i].records = record_sequence(omega, rho, spec, horizon, 48);
            for (const HitRecord& rec : out[i].records.records)
                out[i].mu_at_records.push_back(state.cylinder_measure(
                    rho.prefix(static_cast<std::size_t>(rec.depth + 1))));
        });
    } else {
        const IntervalMap map = build_interval_map(config.system);
        const IntervalMeasure measure = build_interval_measure(config.measure, map);
        const bool exact_stream = map.is_linear_mod_one() && map.linear_base() == 2 &&
                                  measure.is_lebesgue();
        parallel_for(pairs, config.workers, [&](std::size_t i) {
            Rng rng = Rng::stream(config.seed, i);
            const double y = measure.sample(rng);
            if (exact_stream) {
                // double orbits of x -> 2x mod 1 shed one mantissa bit per
                // step; the bit-stream source is the drift-free sampler
                out[i].records = record_sequence_stream(rng, y, horizon);
            } else {
                const double x = measure.sample(rng);
                out[i].records = record_sequence(map, x, y, horizon);
            }
            for (const HitRecord& rec : out[i].records.records)
                out[i].mu_at_records.push_back(measure.ball(y, rec.r));
        });
    }
    return out;
}

ExperimentResult run_records(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"pairs", "horizon", "dump_orbit_steps"});
    const std::size_t pairs = config.params.value("pairs", 16);
    const long horizon = config.params.value("horizon", 100000L);
    Runner r;
    auto tasks = sample_pairs(config, pairs, horizon);

    CsvBuilder csv({"pair_id", "k", "n_k", "r_k"});
    bool monotone = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& recs = tasks[i].records.records;
        for (std::size_t k = 0; k < recs.size(); ++k) {
            csv.cell(static_cast<long>(i)).cell(static_cast<long>(k + 1)).cell(recs[k].n).cell(recs[k].r);
            csv.end_row();
            if (k > 0 && !(recs[k].r < recs[k - 1].r && recs[k].n > recs[k - 1].n)) monotone = false;
        }
    }
    r.report.column_doc("records.csv", "pair_id", "index of the sampled (x, y) pair");
    r.report.column_doc("records.csv", "k", "record index");
    r.report.column_doc("records.csv", "n_k", "record time");
    r.report.column_doc("records.csv", "r_k", "record distance d(T^{n_k} x, y)");
    r.add_csv("records.csv", csv);

    const long dump = config.params.value("dump_orbit_steps", 0L);
    if (dump > 0) {
        const IntervalMap map = build_interval_map(config.system);
        const IntervalMeasure measure = build_interval_measure(config.measure, map);
        Rng rng = Rng::stream(config.seed, 0);
        CsvBuilder orbit({"n", "x_n"});
        if (map.is_linear_mod_one() && map.linear_base() == 2 && measure.is_lebesgue()) {
            BitOrbit stream(rng); // exact orbit values at any length
            orbit.cell(0L).cell(stream.point());
            orbit.end_row();
            for (long n = 1; n <= dump; ++n) {
                stream.step();
                orbit.cell(n).cell(stream.point());
                orbit.end_row();
            }
        } else {
            double x = measure.sample(rng);
            double drift = 0.0;
            for (long n = 0; n <= dump; ++n) {
                orbit.cell(n).cell(x);
                orbit.end_row();
                drift = std::min(1.0, drift * std::abs(map.derivative(x)) + 2.3e-16);
                x = map.apply(x);
            }
            r.report.kv("orbit_drift_bound", drift);
        }
        r.report.column_doc("orbit.csv", "n", "iterate index");
        r.report.column_doc("orbit.csv", "x_n", "orbit point T^n(x)");
        r.add_csv("orbit.csv", orbit);
    }

    r.report.section("records");
    r.report.kv("pairs", static_cast<long>(pairs));
    r.report.kv("horizon", horizon);
    r.report.check("records strictly monotone (r down, n up)", monotone);
    return r.finish(config);
}

ExperimentResult run_entry(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"pairs", "horizon"});
    const std::size_t pairs = config.params.value("pairs", 16);
    const long horizon = config.params.value("horizon", 100000L);
    Runner r;
    auto tasks = sample_pairs(config, pairs, horizon);

    CsvBuilder csv({"pair_id", "r", "tau", "mu_ball", "E_r", "running_max"});
    bool running_ok = true;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto& recs = tasks[i].records.records;
        double running = 0.0;
        for (std::size_t k = 0; k < recs.size(); ++k) {
            const double mu = tasks[i].mu_at_records[k];
            const double e = static_cast<double>(recs[k].n) * mu;
            const double prev = running;
            running = std::max(running, e);
            if (running < prev) running_ok = false;
            csv.cell(static_cast<long>(i)).cell(recs[k].r).cell(recs[k].n).cell(mu).cell(e).cell(running);
            csv.end_row();
        }
    }
    r.report.column_doc("entry.csv", "pair_id", "index of the sampled (x, y) pair");
    r.report.column_doc("entry.csv", "r", "record radius");
    r.report.column_doc("entry.csv", "tau", "entry time at that radius");
    r.report.column_doc("entry.csv", "mu_ball", "measure of B(y, r)");
    r.report.column_doc("entry.csv", "E_r", "tau * mu_ball");
    r.report.column_doc("entry.csv", "running_max", "running maximum of E_r down the radii");
    r.add_csv("entry.csv", csv);
    r.report.section("entry");
    r.report.kv("pairs", static_cast<long>(pairs));
    r.report.check("running max nondecreasing", running_ok);
    return r.finish(config);
}

ExperimentResult run_rates(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"pairs", "horizon", "window", "expected_dimension"});
    const std::size_t pairs = config.params.value("pairs", 16);
    const long horizon = config.params.value("horizon", 100000L);
    const std::size_t window = config.params.value("window", 8);
    Runner r;
    auto tasks = sample_pairs(config, pairs, horizon);

    CsvBuilder csv({"pair_id", "hit_lower", "hit_upper", "dim_lower", "dim_upper", "hit_global",
                    "dim_global"});
    bool envelopes_ok = true;
    std::vector<double> dims;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        // radius -> measure interpolation from the recorded values
        const auto& recs = tasks[i].records.records;
        std::map<double, double> mu_of_r;
        for (std::size_t k = 0; k < recs.size(); ++k) mu_of_r[recs[k].r] = tasks[i].mu_at_records[k];
        auto mu_fn = [&](double rr) {
            auto it = mu_of_r.find(rr);
            return it == mu_of_r.end() ? 0.0 : it->second;
        };
        RateEstimates est;
        try {
            est = rate_estimates(tasks[i].records, mu_fn, window);
        } catch (const std::domain_error&) {
            ++skipped;
            continue;
        }
        if (!(est.hit_lower <= est.hit_upper && est.dim_lower <= est.dim_upper))
            envelopes_ok = false;
        dims.push_back(est.dim_global);
        csv.cell(static_cast<long>(i)).cell(est.hit_lower).cell(est.hit_upper).cell(est.dim_lower)
            .cell(est.dim_upper).cell(est.hit_global).cell(est.dim_global);
        csv.end_row();
    }
    r.report.column_doc("rates.csv", "pair_id", "index of the sampled (x, y) pair");
    r.report.column_doc("rates.csv", "hit_lower", "min windowed slope of log tau vs -log r");
    r.report.column_doc("rates.csv", "hit_upper", "max windowed slope of log tau vs -log r");
    r.report.column_doc("rates.csv", "dim_lower", "min windowed slope of log mu vs log r");
    r.report.column_doc("rates.csv", "dim_upper", "max windowed slope of log mu vs log r");
    r.report.column_doc("rates.csv", "hit_global", "whole-range hitting-rate slope");
    r.report.column_doc("rates.csv", "dim_global", "whole-range pointwise-dimension slope");
    r.add_csv("rates.csv", csv);

    std::sort(dims.begin(), dims.end());
    const double median_dim = dims.empty() ? 0.0 : dims[dims.size() / 2];
    r.report.section("rates");
    r.report.kv("pairs_used", static_cast<long>(dims.size()));
    r.report.kv("pairs_skipped_too_few_records", static_cast<long>(skipped));
    r.report.kv("median_dimension", median_dim);
    r.report.check("slope envelopes ordered", envelopes_ok);
    if (config.params.contains("expected_dimension")) {
        const double expected = config.params.at("expected_dimension");
        r.report.check("median dimension within 10% of expected",
                       std::abs(median_dim - expected) <= 0.1 * expected,
                       format_double(median_dim) + " vs " + format_double(expected));
    }
    return r.finish(config);
}

ExperimentResult run_waiting_tail(const ExperimentConfig& config) {
    require_keys(config.params, "params",
                 {"target", "target_depth", "k_grid", "samples", "y", "r"});
    const std::size_t samples = config.params.value("samples", 100000);
    std::vector<long> k_grid = config.params.value("k_grid", std::vector<long>{0, 8, 16, 24, 32, 40, 48, 56, 64});
    Runner r;
    WaitingTail tail;
    const std::string sys_name = config.system.at("name");
    const bool symbolic = sys_name == "full-shift" || sys_name == "golden-shift" || sys_name == "incidence";
    if (symbolic) {
        const IncidenceStructure inc = build_incidence(config.system);
        const Potential f = build_potential(config.measure, inc.alphabet_size());
        const GibbsState state = gibbs_state(f, inc);
        Word target;
        if (config.params.contains("target")) {
            target = Word::deserialize(config.params.at("target"));
        } else {
            const int depth = config.params.value("target_depth", 5);
            Rng rng = Rng::stream(config.seed, 1u << 20);
            target = Word(MarkovSampler(state).sample_block(static_cast<std::size_t>(depth), rng));
        }
        tail = waiting_tail(state, target, k_grid, samples, config.seed);
        r.report.section("target");
        r.report.kv("word", target.serialize());
    } else {
        const IntervalMap map = build_interval_map(config.system);
        const IntervalMeasure measure = build_interval_measure(config.measure, map);
        const double y = config.params.at("y");
        const double radius = config.params.at("r");
        tail = waiting_tail(map, measure, y, radius, k_grid, samples, config.seed);
    }

    CsvBuilder csv({"k", "a_hat", "a_se", "q_hat", "q_se", "k_mu_R"});
    bool ordered = true;
    for (std::size_t g = 0; g < tail.k_grid.size(); ++g) {
        csv.cell(tail.k_grid[g]).cell(tail.a_hat[g]).cell(tail.a_se[g]).cell(tail.q_hat[g])
            .cell(tail.q_se[g]).cell(static_cast<double>(tail.k_grid[g]) * tail.mu_cover);
        csv.end_row();
        if (tail.a_hat[g] > tail.q_hat[g] + 2 * (tail.a_se[g] + tail.q_se[g])) ordered = false;
    }
    r.report.column_doc("tail.csv", "k", "window count");
    r.report.column_doc("tail.csv", "a_hat", "estimate of mu(tau_B <= k)");
    r.report.column_doc("tail.csv", "a_se", "binomial standard error of a_hat");
    r.report.column_doc("tail.csv", "q_hat", "estimate of mu(tau_R <= k)");
    r.report.column_doc("tail.csv", "q_se", "binomial standard error of q_hat");
    r.report.column_doc("tail.csv", "k_mu_R", "invariance bound k mu(R_r)");
    r.add_csv("tail.csv", csv);

    r.report.section("waiting-tail");
    r.report.kv("mu_ball", tail.mu_ball);
    r.report.kv("mu_cover", tail.mu_cover);
    r.report.kv("samples", static_cast<long>(tail.samples));
    r.report.kv("window_shifted", tail.window_shifted);
    r.report.kv("window_based", tail.window_based);
    r.report.check("q_hat <= k mu(R) + 3 sigma on every grid point", tail.bound_ok);
    r.report.check("a_hat <= q_hat + 2 (joint se)", ordered);
    r.report.check("shifted-window invariance within 3 sigma", tail.window_ok,
                   format_double(tail.window_shifted) + " vs " + format_double(tail.window_based));
    return r.finish(config);
}

ExperimentResult run_certificate(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"M", "delta", "samples", "target", "max_omega"});
    const double M = config.params.value("M", 0.05);
    const double delta = config.params.value("delta", 0.2);
    const std::size_t samples = config.params.value("samples", 100000);
    const int max_omega = config.params.value("max_omega", 1000);
    const IncidenceStructure inc = build_incidence(config.system);
    const Potential f = build_potential(config.measure, inc.alphabet_size());
    const GibbsState state = gibbs_state(f, inc);

    SymbolPath target = [&]() {
        if (config.params.contains("target")) {
            Word head = Word::deserialize(config.params.at("target"));
            std::vector<Symbol> cycle{head.last()};
            // extend the explicit prefix periodically past its end
            return SymbolPath::eventually_periodic(head.symbols, cycle);
        }
        return MarkovSampler(state).sample_typical(0, config.seed ^ Rng::kGolden);
    }();

    Runner r;
    const DivergenceCertificate cert =
        build_certificate(state, target, M, delta, samples, config.seed, max_omega);

    CsvBuilder csv({"i", "depth", "r_i", "k_i", "mu_R_i", "deadline", "slack_spacing", "slack_mass"});
    bool slacks_ok = true;
    for (const CertificateRung& rung : cert.rungs) {
        csv.cell(static_cast<long>(rung.index)).cell(static_cast<long>(rung.depth)).cell(rung.radius)
            .cell(rung.k).cell(rung.mu_cover).cell(rung.deadline).cell(rung.slack_spacing)
            .cell(rung.slack_mass);
        csv.end_row();
        if (rung.index > 0 && (rung.slack_spacing < 0 || rung.slack_mass < 0)) slacks_ok = false;
    }
    r.report.column_doc("certificate.csv", "i", "ladder rung index");
    r.report.column_doc("certificate.csv", "depth", "cylinder depth of the rung target ball");
    r.report.column_doc("certificate.csv", "r_i", "rung radius in the d_1 metric");
    r.report.column_doc("certificate.csv", "k_i", "2M / mu(R_i)");
    r.report.column_doc("certificate.csv", "mu_R_i", "measure of the rung cover");
    r.report.column_doc("certificate.csv", "deadline", "[M / mu(B_i)], the A_r threshold");
    r.report.column_doc("certificate.csv", "slack_spacing", "k_i - 2(s + k_{i-1})");
    r.report.column_doc("certificate.csv", "slack_mass", "(delta/2 Omega)/(k_{i-1}+s) - mu(R_i)");
    r.add_csv("certificate.csv", csv);

    r.report.section("certificate");
    r.report.kv("M", M);
    r.report.kv("delta", delta);
    r.report.kv("fitted_C", cert.mixing.C);
    r.report.kv("fitted_D", cert.mixing.D);
    r.report.kv("fitted_gamma", cert.mixing.gamma);
    r.report.kv("Gamma_of_M", cert.gamma_of_m);
    r.report.kv("s", cert.s);
    r.report.kv("W", cert.w);
    r.report.kv("Omega", cert.omega);
    r.report.kv("p_hat", cert.p_hat);
    r.report.kv("std_error", cert.std_error);
    r.report.kv("caveat",
                "verdict is conditional on the empirically fitted mixing constants C, D, gamma");
    if (!cert.feasible) r.report.kv("binding_constraint", cert.binding_constraint);
    r.report.check("ladder feasible", cert.feasible, cert.binding_constraint);
    r.report.check("ladder slacks nonnegative", slacks_ok);
    r.report.check("mu(cap A_r^c) <= delta within 3 sigma", cert.verdict,
                   format_double(cert.p_hat) + " vs " + format_double(delta));
    return r.finish(config);
}

ExperimentResult run_kac(const ExperimentConfig& config) {
    require_keys(config.params, "params",
                 {"xhat", "xhat_cells", "samples", "horizon", "spectrum_max_n"});
    const std::size_t samples = config.params.value("samples", 1000000);
    const long horizon = config.params.value("horizon", 100000L);
    const IntervalMap map = build_interval_map(config.system);
    const IntervalMeasure measure = build_interval_measure(config.measure, map);
    // base set: explicit interval or a contiguous union of partition cells
    Interval base;
    if (config.params.contains("xhat")) {
        const auto bounds = config.params.at("xhat").get<std::vector<double>>();
        if (bounds.size() != 2) throw ConfigError("params: xhat must be [lo, hi]");
        base = {bounds[0], bounds[1]};
    } else if (config.params.contains("xhat_cells")) {
        const MarkovPartition partition(map);
        std::vector<Interval> cells;
        for (const auto& text : config.params.at("xhat_cells")) {
            const Interval cell = partition.cell_interval(Word::deserialize(text));
            if (!(cell.width() > 0)) throw ConfigError("params: inadmissible cell word in xhat_cells");
            cells.push_back(cell);
        }
        std::sort(cells.begin(), cells.end(),
                  [](const Interval& p, const Interval& q) { return p.lo < q.lo; });
        for (std::size_t i = 0; i + 1 < cells.size(); ++i)
            if (std::abs(cells[i].hi - cells[i + 1].lo) > 1e-12)
                throw ConfigError("params: xhat_cells must form one contiguous interval");
        base = {cells.front().lo, cells.back().hi};
    } else {
        throw ConfigError("params: kac needs xhat or xhat_cells");
    }
    const InducedSystem induced(map, measure, base);

    Runner r;
    const KacReport kac = kac_check(induced, samples, config.seed, horizon);
    r.report.section("kac");
    r.report.kv("mu_xhat", induced.mu_xhat);
    r.report.kv("target_mean", kac.target);
    r.report.kv("empirical_mean", kac.empirical_mean);
    r.report.kv("std_error", kac.std_error);
    r.report.kv("z_score", kac.z_score);
    r.report.kv("censored_fraction", kac.censored_fraction);
    r.report.check("|z| <= 4", std::abs(kac.z_score) <= 4.0, format_double(kac.z_score));
    r.report.check("censoring below 1%", !kac.censoring_warning,
                   format_double(kac.censored_fraction));

    // exact spectrum when xhat aligns with coding cells
    const int max_n = config.params.value("spectrum_max_n", 40);
    if (!measure.is_lebesgue() && measure.chain() == nullptr) return r.finish(config);
    for (int m = 1; m <= 8; ++m) {
        auto words = cells_covering(map, induced.xhat, m);
        if (!words) continue;
        const GibbsState* chain = measure.chain();
        std::optional<GibbsState> acim_chain;
        if (chain == nullptr) {
            // the invariant density of a piecewise-linear Markov map is the
            // chain of the geometric potential -log|T'|
            std::vector<double> table(map.cell_count() * map.cell_count(), 0.0);
            for (std::size_t a = 0; a < map.cell_count(); ++a)
                for (std::size_t b = 0; b < map.cell_count(); ++b)
                    table[a * map.cell_count() + b] = -std::log(map.branch_slope(static_cast<int>(a)));
            acim_chain.emplace(gibbs_state(Potential::markov_depth1(map.cell_count(), table),
                                           map.cell_incidence()));
            chain = &*acim_chain;
        }
        const ReturnSpectrum spectrum = return_time_spectrum(*chain, *words, max_n);
        double chain_base_mass = 0.0;
        for (const Word& w : *words) chain_base_mass += chain->cylinder_measure(w);
        const double chain_target = 1.0 / chain_base_mass;
        CsvBuilder csv({"n", "mass"});
        for (int n = 1; n <= max_n; ++n) {
            csv.cell(static_cast<long>(n)).cell(spectrum.mass[static_cast<std::size_t>(n - 1)]);
            csv.end_row();
        }
        r.report.column_doc("spectrum.csv", "n", "return time");
        r.report.column_doc("spectrum.csv", "mass", "exact mu-hat(t = n) under the invariant chain");
        r.add_csv("spectrum.csv", csv);
        r.report.section("spectrum");
        r.report.kv("cell_depth", m);
        r.report.kv("tail_mass", spectrum.tail);
        r.report.kv("partial_mean", spectrum.partial_mean);
        r.report.kv("chain_target_mean", chain_target);
        r.report.check("spectrum sums to 1 up to tail", spectrum.tail >= -1e-12 && spectrum.tail < 0.05,
                       format_double(spectrum.tail));
        r.report.check("Kac consistency of the partial mean",
                       std::abs(spectrum.partial_mean + spectrum.tail * max_n - chain_target) <=
                           std::max(0.05 * chain_target, spectrum.tail * max_n * 2 + 1e-9),
                       format_double(spectrum.partial_mean));
        break;
    }
    return r.finish(config);
}

ExperimentResult run_induce_compare(const ExperimentConfig& config) {
    require_keys(config.params, "params", {"xhat", "y", "samples", "horizon", "r_max"});
    const auto bounds = config.params.at("xhat").get<std::vector<double>>();
    if (bounds.size() != 2) throw ConfigError("params: xhat must be [lo, hi]");
    const double y = config.params.at("y");
    const std::size_t samples = config.params.value("samples", 50);
    const long horizon = config.params.value("horizon", 1000000L);
    const double r_max = config.params.value("r_max", 1.0 / 256.0);
    const IntervalMap map = build_interval_map(config.system);
    const IntervalMeasure measure = build_interval_measure(config.measure, map);
    const InducedSystem induced(map, measure, {bounds[0], bounds[1]});

    Runner r;
    std::vector<HitComparison> comparisons(samples);
    parallel_for(samples, config.workers, [&](std::size_t i) {
        Rng rng = Rng::stream(config.seed, i);
        comparisons[i] = compare_hitting_statistics(induced, y, r_max, horizon, rng);
    });

    CsvBuilder csv({"sample_id", "r", "tau", "tau_hat", "base_stat", "induced_stat", "ratio"});
    bool sandwich_all = true;
    bool conditional_exact = true;
    std::size_t rows_within_5pct = 0, rows_total = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        for (const HitComparisonRow& row : comparisons[i].rows) {
            csv.cell(static_cast<long>(i)).cell(row.r).cell(row.tau).cell(row.tau_hat)
                .cell(row.base_statistic).cell(row.induced_statistic).cell(row.ratio);
            csv.end_row();
            sandwich_all = sandwich_all && row.sandwich_ok;
            if (std::abs(row.mu_hat_ball - row.mu_ball / induced.mu_xhat) > 1e-15)
                conditional_exact = false;
            ++rows_total;
            if (std::abs(row.ratio - 1.0) <= 0.05) ++rows_within_5pct;
        }
    }
    r.report.column_doc("compare.csv", "sample_id", "index of the sampled x");
    r.report.column_doc("compare.csv", "r", "record radius (ball inside xhat)");
    r.report.column_doc("compare.csv", "tau", "base entry time into B(y,r)");
    r.report.column_doc("compare.csv", "tau_hat", "induced entry time into B(y,r)");
    r.report.column_doc("compare.csv", "base_stat", "tau * mu(B)");
    r.report.column_doc("compare.csv", "induced_stat", "tau_hat * mu_hat(B)");
    r.report.column_doc("compare.csv", "ratio", "base_stat / induced_stat");
    r.add_csv("compare.csv", csv);

    r.report.section("induce-compare");
    r.report.kv("rows", static_cast<long>(rows_total));
    r.report.kv("rows_within_5pct",
                rows_total ? static_cast<double>(rows_within_5pct) / static_cast<double>(rows_total)
                           : 0.0);
    r.report.check("A_l/l sandwich identity per sample", sandwich_all);
    r.report.check("mu_hat(B) = mu(B)/mu(xhat) rows exact", conditional_exact);
    return r.finish(config);
}

ExperimentResult run_gdms_powerlaw(const ExperimentConfig& config) {
    require_keys(config.params, "params",
                 {"y_code", "radii_max", "radii_per_decade", "decades", "depth_budget",
                  "lyapunov_samples", "truncation"});
    const std::string sys_name = config.system.at("name");
    Runner r;

    std::optional<Gdms> system;
    std::optional<GdmsMeasure> gmeasure;
    std::optional<GibbsState> chain;
    system.emplace(build_gdms(config.system, config.params));
    if (sys_name == "gauss-cf") {
        gmeasure.emplace(GdmsMeasure::gauss_cf(*system));
    } else {
        const Potential f = build_potential(config.measure, system->edge_count());
        chain.emplace(gibbs_state(f, system->incidence()));
        gmeasure.emplace(GdmsMeasure::from_chain(*system, *chain));
    }

    const auto sosc = system->check_sosc();
    r.report.section("gdms");
    r.report.kv("system", system->name());
    r.report.kv("osc", sosc.osc ? "true" : "false");
    r.report.kv("sosc", sosc.sosc ? "true" : "false");
    r.report.kv("sosc_certificate", sosc.certificate);
    if (system->truncated()) {
        // Gauss mass of first digits beyond the truncation: mu((0, 1/(N+1)))
        const double deficit =
            std::log2(1.0 + 1.0 / (static_cast<double>(system->edge_count()) + 1.0));
        r.report.kv("truncation", static_cast<long>(system->edge_count()));
        r.report.kv("truncation_mass_deficit", deficit);
    }
    r.report.check("SOSC holds", sosc.sosc);

    const std::size_t lyap_samples = config.params.value("lyapunov_samples", 200000);
    const LyapunovEstimate chi = lyapunov(*gmeasure, lyap_samples, config.seed);
    const double entropy = gmeasure->entropy();
    r.report.kv("lyapunov", chi.value);
    r.report.kv("lyapunov_se", chi.std_error);
    r.report.kv("entropy", entropy);
    r.report.check("lyapunov positive", chi.value > 0);

    // target point: the projection of an explicit or sampled code
    Word y_code;
    if (config.params.contains("y_code")) {
        y_code = Word::deserialize(config.params.at("y_code"));
    } else {
        Rng rng = Rng::stream(config.seed, 7);
        y_code = gmeasure->sample_code(48, rng);
    }
    const double y = system->project(y_code).point;

    const double r_max = config.params.value("radii_max", 0.05);
    const int per_decade = config.params.value("radii_per_decade", 5);
    const int decades = config.params.value("decades", 3);
    std::vector<double> radii;
    for (int i = 0; i <= per_decade * decades; ++i)
        radii.push_back(r_max * std::pow(10.0, -static_cast<double>(i) / per_decade));
    const int depth_budget = config.params.value("depth_budget", 48);
    const PowerLawFit fit = power_law_fit(*gmeasure, y, radii, entropy, chi.value, depth_budget);

    CsvBuilder csv({"r", "mu_ball", "log_residual"});
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        const double pred = fit.log_c + fit.alpha * std::log(fit.radii[i]);
        csv.cell(fit.radii[i]).cell(fit.masses[i]).cell(std::log(fit.masses[i]) - pred);
        csv.end_row();
    }
    r.report.column_doc("powerlaw.csv", "r", "ball radius");
    r.report.column_doc("powerlaw.csv", "mu_ball", "projected measure of B(y, r)");
    r.report.column_doc("powerlaw.csv", "log_residual", "log mu - fitted line");
    r.add_csv("powerlaw.csv", csv);

    r.report.section("powerlaw");
    r.report.kv("y", y);
    r.report.kv("alpha_fit", fit.alpha);
    r.report.kv("alpha_theory_floor", fit.alpha_theory);
    r.report.kv("max_residual", fit.max_residual);
    r.report.check("fitted exponent at or above the theory floor",
                   fit.alpha >= fit.alpha_theory - 0.05,
                   format_double(fit.alpha) + " vs floor " + format_double(fit.alpha_theory));
    return r.finish(config);
}

} // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("config parse error: ") + err.what());
    }
    require_keys(root, "config", {"experiment", "seed", "out", "workers", "system", "measure", "params"},
                 {"experiment", "seed"});
    ExperimentConfig config;
    config.experiment = root.at("experiment");
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer())
        throw ConfigError("config: seed must be an integer");
    config.seed = root.at("seed").get<std::uint64_t>();
    config.out_dir = root.value("out", "");
    config.workers = root.value("workers", 0); // 0: unset, resolved by the caller
    if (root.contains("workers") && config.workers < 1)
        throw ConfigError("config: workers must be >= 1");
    config.system = root.value("system", json::object());
    config.measure = root.value("measure", json::object());
    config.params = root.value("params", json::object());
    return config;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

ExperimentResult run_experiment(const ExperimentConfig& config_in) {
    ExperimentConfig config = config_in;
    if (config.workers < 1) config.workers = 1;
    using RunnerFn = ExperimentResult (*)(const ExperimentConfig&);
    static const std::map<std::string, RunnerFn> registry = {
        {"pressure", run_pressure},
        {"gibbs-audit", run_gibbs_audit},
        {"records", run_records},
        {"entry", run_entry},
        {"rates", run_rates},
        {"waiting-tail", run_waiting_tail},
        {"certificate", run_certificate},
        {"kac", run_kac},
        {"induce-compare", run_induce_compare},
        {"gdms-powerlaw", run_gdms_powerlaw},
    };
    auto it = registry.find(config.experiment);
    if (it == registry.end()) throw ConfigError("unknown experiment '" + config.experiment + "'");
    return it->second(config);
}

void write_artifacts(const ExperimentResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, bytes] : result.artifacts) {
        std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write artifact " + name);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
}

std::string list_builtins() {
    std::string out;
    out += "systems:\n";
    out += "  doubling            interval map x -> 2x mod 1\n";
    out += "  ternary             interval map x -> 3x mod 1\n";
    out += "  golden-markov       two-branch Markov interval map, incidence [[1,1],[1,0]]\n";
    out += "  gauss               interval map x -> {1/x} (countable branches)\n";
    out += "  full-shift          {\"alphabet\": n} full shift on n symbols\n";
    out += "  golden-shift        subshift with incidence [[1,1],[1,0]]\n";
    out += "  incidence           {\"text\"|\"path\"}: explicit 0/1 incidence matrix\n";
    out += "  cantor3             IFS {x/3, x/3 + 2/3} (GDMS experiments)\n";
    out += "  dyadic              IFS {x/2, x/2 + 1/2} (GDMS experiments)\n";
    out += "  gauss-cf            continued-fraction IFS {1/(n+x)}, {\"truncation\": N}\n";
    out += "measures:\n";
    out += "  lebesgue            Lebesgue on [0,1)\n";
    out += "  gauss               dx / ((1+x) ln 2)\n";
    out += "  zero                maximal-entropy potential f = 0\n";
    out += "  bernoulli           {\"p\": [...]} potential log p_{w_1}\n";
    out += "  markov1             {\"table\": [[...]]} depth-2 potential f(w) = t[w_1][w_2]\n";
    out += "experiments:\n";
    out += "  pressure            {\"depth\"}\n";
    out += "  gibbs-audit         {\"audit_depth\"}\n";
    out += "  records             {\"pairs\", \"horizon\", \"dump_orbit_steps\"}\n";
    out += "  entry               {\"pairs\", \"horizon\"}\n";
    out += "  rates               {\"pairs\", \"horizon\", \"window\", \"expected_dimension\"}\n";
    out += "  waiting-tail        {\"target\"|\"target_depth\", \"k_grid\", \"samples\"} or {\"y\", \"r\", ...}\n";
    out += "  certificate         {\"M\", \"delta\", \"samples\", \"target\", \"max_omega\"}\n";
    out += "  kac                 {\"xhat\": [lo,hi], \"samples\", \"horizon\", \"spectrum_max_n\"}\n";
    out += "  induce-compare      {\"xhat\", \"y\", \"samples\", \"horizon\", \"r_max\"}\n";
    out += "  gdms-powerlaw       {\"y_code\", \"radii_max\", \"radii_per_decade\", \"decades\", ...}\n";
    return out;
}

} // namespace hitstat
