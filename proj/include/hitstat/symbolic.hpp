#ifndef HITSTAT_SYMBOLIC_HPP
#define HITSTAT_SYMBOLIC_HPP

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hitstat {

// Symbols are 0-based indices into the alphabet. External formats (word
// serialization, incidence files) use 1-based labels.
using Symbol = int;

/// A finite word over the alphabet.
struct Word {
    std::vector<Symbol> symbols;

    Word() = default;
    explicit Word(std::vector<Symbol> s) : symbols(std::move(s)) {}

    std::size_t length() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }
    Symbol first() const { return symbols.front(); }
    Symbol last() const { return symbols.back(); }

    Word prefix(std::size_t n) const {
        return Word(std::vector<Symbol>(symbols.begin(), symbols.begin() + n));
    }
    Word suffix_from(std::size_t k) const {
        return Word(std::vector<Symbol>(symbols.begin() + k, symbols.end()));
    }
    Word concat(const Word& tail) const {
        Word out = *this;
        out.symbols.insert(out.symbols.end(), tail.symbols.begin(), tail.symbols.end());
        return out;
    }
    Word appended(Symbol e) const {
        Word out = *this;
        out.symbols.push_back(e);
        return out;
    }

    // comma-separated 1-based labels; empty word serializes to ""
    std::string serialize() const;
    static Word deserialize(const std::string& text);

    friend bool operator==(const Word& a, const Word& b) { return a.symbols == b.symbols; }
    friend bool operator<(const Word& a, const Word& b) { return a.symbols < b.symbols; }
};

/// 0/1 incidence matrix on a finite (or truncated countable) alphabet.
class IncidenceStructure {
public:
    IncidenceStructure(std::size_t alphabet_size, std::vector<std::uint8_t> matrix,
                       bool truncated = false);

    static IncidenceStructure full_shift(std::size_t alphabet_size);
    static IncidenceStructure golden_mean(); // [[1,1],[1,0]]

    // plain text format: first line "n", then n rows of 0/1 separated by spaces
    static IncidenceStructure parse(const std::string& text);
    std::string format() const;

    std::size_t alphabet_size() const { return size_; }
    bool truncated() const { return truncated_; }
    bool entry(Symbol a, Symbol b) const { return matrix_[static_cast<std::size_t>(a) * size_ + b] != 0; }
    const std::vector<Symbol>& successors(Symbol a) const { return successors_[a]; }

    bool admissible(const Word& w) const;

    // Removes symbols with all-zero rows (and the columns pointing at them),
    // iterating to a fixed point. Labels of surviving symbols are preserved.
    IncidenceStructure pruned() const;
    // 1-based original label of internal symbol s (identity unless pruned)
    int label(Symbol s) const { return labels_[s]; }

    bool operator==(const IncidenceStructure& other) const {
        return size_ == other.size_ && matrix_ == other.matrix_ && labels_ == other.labels_;
    }

private:
    std::size_t size_;
    std::vector<std::uint8_t> matrix_;
    bool truncated_;
    std::vector<int> labels_;
    std::vector<std::vector<Symbol>> successors_;
};

/// Deterministic generator of an infinite admissible sequence. Prefixes are
/// memoized in an append-only buffer; concurrent readers of already
/// materialized symbols do not block each other, writers extend under a lock.
/// Equality of infinite paths is declared (same generator object), never
/// inferred from finitely many symbols.
class SymbolPath {
public:
    static SymbolPath constant(Symbol s);
    static SymbolPath periodic(std::vector<Symbol> cycle);
    static SymbolPath eventually_periodic(std::vector<Symbol> head, std::vector<Symbol> cycle);
    static SymbolPath from_rule(std::function<Symbol(std::size_t)> rule);

    Symbol at(std::size_t index) const;          // 0-based
    void materialize(std::size_t count) const;
    std::size_t horizon() const;                 // longest prefix produced so far
    Word prefix(std::size_t n) const;

    // shifted view sharing the same generator: (sigma^k omega)_i = omega_{i+k}
    SymbolPath shifted(std::size_t k) const;
    std::size_t shift_offset() const { return offset_; }

    bool same_generator(const SymbolPath& other) const {
        return impl_ == other.impl_ && offset_ == other.offset_;
    }

private:
    // append-only chunk table: readers of materialized symbols take no lock,
    // the writer extends under the mutex and publishes via the atomic count
    struct Impl {
        static constexpr std::size_t kChunkBits = 12;
        static constexpr std::size_t kChunkSize = 1u << kChunkBits;
        static constexpr std::size_t kMaxChunks = 1u << 12; // 16M symbols per path

        std::function<Symbol(std::size_t)> rule;
        mutable std::array<std::atomic<Symbol*>, kMaxChunks> chunks{};
        mutable std::atomic<std::size_t> ready{0};
        mutable std::mutex grow;
        ~Impl() {
            for (auto& slot : chunks) delete[] slot.load(std::memory_order_relaxed);
        }
    };
    std::shared_ptr<Impl> impl_;
    std::size_t offset_ = 0;
};

struct UltrametricSpec {
    double alpha = 1.0;
};

/// The cylinder [omega]: all sequences extending the base word.
struct Cylinder {
    Word base;
    std::size_t depth() const { return base.length(); }
    bool contains(const SymbolPath& tau) const;
};

struct WedgeResult {
    bool at_least_horizon = false;
    std::size_t length = 0; // valid when !at_least_horizon
};

// |omega ^ tau|: length of the longest common initial block, capped at horizon
WedgeResult wedge_length(const SymbolPath& omega, const SymbolPath& tau, std::size_t horizon);

// d_alpha(omega, tau) = exp(-alpha |omega ^ tau|). When the wedge reaches the
// horizon the distance is only known to be <= exp(-alpha*horizon); with
// floor_to_zero the caller opts into reporting 0 in that case.
double d_alpha(const SymbolPath& omega, const SymbolPath& tau, const UltrametricSpec& spec,
               std::size_t horizon, bool floor_to_zero = false);

// least n >= 1 with exp(-alpha n) < r (open balls: d < r, boundary excluded)
std::size_t ball_cylinder_depth(double r, const UltrametricSpec& spec);

// B_alpha(rho, r) = [rho|_{n_r}]
Cylinder ball_to_cylinder(const SymbolPath& rho, double r, const UltrametricSpec& spec);

// all admissible words of length n, lexicographically sorted; refuses when the
// candidate count would exceed the budget
std::vector<Word> enumerate_admissible(const IncidenceStructure& A, std::size_t n,
                                       std::size_t budget = 1u << 22);

struct IrreducibilityWitness {
    bool found = false;
    std::vector<Word> lambda;     // connecting words, breadth-first minimal per pair
    int searched_max_len = 0;
};

// finite set Lambda such that every pair (i,j) connects as i w j for some w in
// Lambda with |w| <= max_len; each pair uses its breadth-first-first witness
IrreducibilityWitness find_irreducibility_witness(const IncidenceStructure& A, int max_len);

} // namespace hitstat

#endif
