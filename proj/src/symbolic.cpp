#include "hitstat/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hitstat {

std::string Word::serialize() const {
    std::string out;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(symbols[i] + 1);
    }
    return out;
}

Word Word::deserialize(const std::string& text) {
    Word w;
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        if (tok.empty()) continue;
        const int label = std::stoi(tok);
        if (label < 1) throw std::invalid_argument("Word: symbols are 1-based positive integers");
        w.symbols.push_back(label - 1);
    }
    return w;
}

IncidenceStructure::IncidenceStructure(std::size_t alphabet_size,
                                       std::vector<std::uint8_t> matrix, bool truncated)
    : size_(alphabet_size), matrix_(std::move(matrix)), truncated_(truncated) {
    if (size_ == 0) throw std::invalid_argument("IncidenceStructure: empty alphabet");
    if (matrix_.size() != size_ * size_)
        throw std::invalid_argument("IncidenceStructure: matrix size mismatch");
    labels_.resize(size_);
    std::iota(labels_.begin(), labels_.end(), 1);
    successors_.resize(size_);
    for (std::size_t a = 0; a < size_; ++a)
        for (std::size_t b = 0; b < size_; ++b)
            if (matrix_[a * size_ + b]) successors_[a].push_back(static_cast<Symbol>(b));
}

IncidenceStructure IncidenceStructure::full_shift(std::size_t n) {
    return IncidenceStructure(n, std::vector<std::uint8_t>(n * n, 1));
}

IncidenceStructure IncidenceStructure::golden_mean() {
    return IncidenceStructure(2, {1, 1, 1, 0});
}

IncidenceStructure IncidenceStructure::parse(const std::string& text) {
    std::stringstream in(text);
    std::size_t n = 0;
    if (!(in >> n) || n == 0) throw std::invalid_argument("incidence file: bad size line");
    std::vector<std::uint8_t> m(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        int v;
        if (!(in >> v) || (v != 0 && v != 1))
            throw std::invalid_argument("incidence file: entries must be 0/1");
        m[i] = static_cast<std::uint8_t>(v);
    }
    return IncidenceStructure(n, std::move(m));
}

std::string IncidenceStructure::format() const {
    std::string out = std::to_string(size_) + "\n";
    for (std::size_t a = 0; a < size_; ++a) {
        for (std::size_t b = 0; b < size_; ++b) {
            if (b) out += ' ';
            out += matrix_[a * size_ + b] ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

bool IncidenceStructure::admissible(const Word& w) const {
    for (Symbol s : w.symbols)
        if (s < 0 || static_cast<std::size_t>(s) >= size_) return false;
    for (std::size_t i = 0; i + 1 < w.symbols.size(); ++i)
        if (!entry(w.symbols[i], w.symbols[i + 1])) return false;
    return true;
}

IncidenceStructure IncidenceStructure::pruned() const {
    std::vector<bool> alive(size_, true);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t a = 0; a < size_; ++a) {
            if (!alive[a]) continue;
            bool has_successor = false;
            for (std::size_t b = 0; b < size_; ++b)
                if (alive[b] && matrix_[a * size_ + b]) { has_successor = true; break; }
            if (!has_successor) { alive[a] = false; changed = true; }
        }
    }
    std::vector<Symbol> keep;
    for (std::size_t a = 0; a < size_; ++a)
        if (alive[a]) keep.push_back(static_cast<Symbol>(a));
    if (keep.empty()) throw std::invalid_argument("pruned: no symbol admits an infinite continuation");
    std::vector<std::uint8_t> m(keep.size() * keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t j = 0; j < keep.size(); ++j)
            m[i * keep.size() + j] = matrix_[static_cast<std::size_t>(keep[i]) * size_ + keep[j]];
    IncidenceStructure out(keep.size(), std::move(m), truncated_);
    for (std::size_t i = 0; i < keep.size(); ++i) out.labels_[i] = labels_[keep[i]];
    return out;
}

SymbolPath SymbolPath::from_rule(std::function<Symbol(std::size_t)> rule) {
    SymbolPath p;
    p.impl_ = std::make_shared<Impl>();
    p.impl_->rule = std::move(rule);
    return p;
}

SymbolPath SymbolPath::constant(Symbol s) {
    return from_rule([s](std::size_t) { return s; });
}

SymbolPath SymbolPath::periodic(std::vector<Symbol> cycle) {
    if (cycle.empty()) throw std::invalid_argument("SymbolPath: empty cycle");
    return from_rule([c = std::move(cycle)](std::size_t i) { return c[i % c.size()]; });
}

SymbolPath SymbolPath::eventually_periodic(std::vector<Symbol> head, std::vector<Symbol> cycle) {
    if (cycle.empty()) throw std::invalid_argument("SymbolPath: empty cycle");
    return from_rule([h = std::move(head), c = std::move(cycle)](std::size_t i) {
        return i < h.size() ? h[i] : c[(i - h.size()) % c.size()];
    });
}

void SymbolPath::materialize(std::size_t count) const {
    const std::size_t need = count + offset_;
    if (impl_->ready.load(std::memory_order_acquire) >= need) return;
    if (need > Impl::kChunkSize * Impl::kMaxChunks)
        throw std::length_error("SymbolPath: prefix exceeds the materialization cap");
    std::lock_guard<std::mutex> lock(impl_->grow);
    std::size_t have = impl_->ready.load(std::memory_order_relaxed);
    while (have < need) {
        const std::size_t chunk = have >> Impl::kChunkBits;
        Symbol* block = impl_->chunks[chunk].load(std::memory_order_relaxed);
        if (block == nullptr) {
            block = new Symbol[Impl::kChunkSize];
            impl_->chunks[chunk].store(block, std::memory_order_release);
        }
        block[have & (Impl::kChunkSize - 1)] = impl_->rule(have);
        ++have;
        impl_->ready.store(have, std::memory_order_release);
    }
}

Symbol SymbolPath::at(std::size_t index) const {
    const std::size_t i = index + offset_;
    if (impl_->ready.load(std::memory_order_acquire) <= i) materialize(index + 1);
    const Symbol* block = impl_->chunks[i >> Impl::kChunkBits].load(std::memory_order_acquire);
    return block[i & (Impl::kChunkSize - 1)];
}

std::size_t SymbolPath::horizon() const {
    const std::size_t r = impl_->ready.load(std::memory_order_acquire);
    return r > offset_ ? r - offset_ : 0;
}

Word SymbolPath::prefix(std::size_t n) const {
    materialize(n);
    Word w;
    w.symbols.reserve(n);
    for (std::size_t i = 0; i < n; ++i) w.symbols.push_back(at(i));
    return w;
}

SymbolPath SymbolPath::shifted(std::size_t k) const {
    SymbolPath p = *this;
    p.offset_ += k;
    return p;
}

bool Cylinder::contains(const SymbolPath& tau) const {
    for (std::size_t i = 0; i < base.length(); ++i)
        if (tau.at(i) != base.symbols[i]) return false;
    return true;
}

WedgeResult wedge_length(const SymbolPath& omega, const SymbolPath& tau, std::size_t horizon) {
    if (omega.same_generator(tau)) return {true, horizon};
    for (std::size_t i = 0; i < horizon; ++i)
        if (omega.at(i) != tau.at(i)) return {false, i};
    return {true, horizon};
}

double d_alpha(const SymbolPath& omega, const SymbolPath& tau, const UltrametricSpec& spec,
               std::size_t horizon, bool floor_to_zero) {
    const WedgeResult w = wedge_length(omega, tau, horizon);
    if (w.at_least_horizon)
        return floor_to_zero ? 0.0 : std::exp(-spec.alpha * static_cast<double>(horizon));
    return std::exp(-spec.alpha * static_cast<double>(w.length));
}

std::size_t ball_cylinder_depth(double r, const UltrametricSpec& spec) {
    if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("ball radius must lie in (0,1]");
    if (!(spec.alpha > 0.0)) throw std::invalid_argument("metric exponent must be positive");
    // least n with exp(-alpha n) < r; computed from the logarithm then nudged
    // so boundary cases exp(-alpha n) == r resolve exactly as exclusions
    double guess = std::floor(-std::log(r) / spec.alpha) + 1.0;
    std::size_t n = guess < 1.0 ? 1 : static_cast<std::size_t>(guess);
    while (n > 1 && std::exp(-spec.alpha * static_cast<double>(n - 1)) < r) --n;
    while (std::exp(-spec.alpha * static_cast<double>(n)) >= r) ++n;
    return n;
}

Cylinder ball_to_cylinder(const SymbolPath& rho, double r, const UltrametricSpec& spec) {
    const std::size_t n = ball_cylinder_depth(r, spec);
    return Cylinder{rho.prefix(n)};
}

std::vector<Word> enumerate_admissible(const IncidenceStructure& A, std::size_t n,
                                       std::size_t budget) {
    if (n == 0) return {Word{}};
    double candidates = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        candidates *= static_cast<double>(A.alphabet_size());
        if (candidates > static_cast<double>(budget))
            throw std::length_error("enumerate_admissible: enumeration budget exceeded");
    }
    std::vector<Word> out;
    std::vector<Symbol> cur(n, 0);
    // iterative lexicographic DFS
    std::size_t depth = 0;
    cur.assign(n, -1);
    while (true) {
        Symbol next = cur[depth] + 1;
        bool found = false;
        for (Symbol s = next; static_cast<std::size_t>(s) < A.alphabet_size(); ++s) {
            if (depth == 0 || A.entry(cur[depth - 1], s)) {
                cur[depth] = s;
                found = true;
                break;
            }
        }
        if (!found) {
            if (depth == 0) break;
            cur[depth] = -1;
            --depth;
            continue;
        }
        if (depth + 1 == n) {
            out.emplace_back(cur);
        } else {
            ++depth;
            cur[depth] = -1;
        }
    }
    return out;
}

IrreducibilityWitness find_irreducibility_witness(const IncidenceStructure& A, int max_len) {
    IrreducibilityWitness result;
    result.searched_max_len = max_len;
    const std::size_t n = A.alphabet_size();
    std::vector<Word> lambda;
    auto connects = [&](Symbol i, Symbol j, const Word& w) {
        Word probe;
        probe.symbols.push_back(i);
        probe.symbols.insert(probe.symbols.end(), w.symbols.begin(), w.symbols.end());
        probe.symbols.push_back(j);
        return A.admissible(probe);
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            bool witnessed = false;
            for (const Word& w : lambda)
                if (connects(static_cast<Symbol>(i), static_cast<Symbol>(j), w)) { witnessed = true; break; }
            if (witnessed) continue;
            for (int len = 0; len <= max_len && !witnessed; ++len) {
                std::vector<Word> words;
                try {
                    words = enumerate_admissible(A, static_cast<std::size_t>(len));
                } catch (const std::length_error&) {
                    break;
                }
                for (const Word& w : words) {
                    if (connects(static_cast<Symbol>(i), static_cast<Symbol>(j), w)) {
                        lambda.push_back(w);
                        witnessed = true;
                        break;
                    }
                }
            }
            if (!witnessed) return result; // found = false
        }
    }
    result.found = true;
    result.lambda = std::move(lambda);
    return result;
}

} // namespace hitstat
