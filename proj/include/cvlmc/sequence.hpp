#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

// Alphabet, symbol strings and pattern counting. Everything else in the
// library is built on these types: samples are SymbolSequence, contexts
// and histories are ContextString (stored oldest symbol first, so the
// most recent symbol is the last element).

namespace cvlmc {

using Symbol = std::uint8_t;

struct Alphabet {
    int size = 2;

    Alphabet() = default;
    explicit Alphabet(int n);

    bool operator==(const Alphabet&) const = default;
};

// Finite string over an alphabet, oldest symbol first.
class ContextString {
public:
    ContextString() = default;
    ContextString(Alphabet alphabet, std::vector<Symbol> symbols);

    // Parses single-digit symbols, e.g. "010". Empty text is the empty string.
    static ContextString parse(Alphabet alphabet, std::string_view text);

    const Alphabet& alphabet() const { return alphabet_; }
    const std::vector<Symbol>& symbols() const { return symbols_; }
    int length() const { return static_cast<int>(symbols_.size()); }
    bool empty() const { return symbols_.empty(); }

    Symbol newest() const { return symbols_.back(); }

    // Trailing n symbols (the length-n suffix).
    ContextString suffix(int n) const;
    // One symbol prepended on the old end: a followed by *this.
    ContextString extend_older(Symbol a) const;

    std::string str() const;

    bool operator==(const ContextString& o) const { return symbols_ == o.symbols_; }
    bool operator<(const ContextString& o) const;

private:
    Alphabet alphabet_{2};
    std::vector<Symbol> symbols_;
};

// Radix-N code of a string, oldest symbol in the most significant digit.
// (length, code) identifies a string uniquely; suffixes are code % N^j.
std::uint64_t encode_word(const std::vector<Symbol>& symbols, int alphabet_size);
std::vector<Symbol> decode_word(std::uint64_t code, int length, int alphabet_size);

struct SymbolSequence {
    Alphabet alphabet{2};
    std::vector<Symbol> symbols;

    SymbolSequence() = default;
    SymbolSequence(Alphabet a, std::vector<Symbol> syms);

    long size() const { return static_cast<long>(symbols.size()); }
};

// True iff target = eta . candidate for some (possibly empty) eta.
// With proper=true, eta must be nonempty (strict suffix).
bool is_suffix(const ContextString& candidate, const ContextString& target,
               bool proper = false);

// Number of positions i (1-based) with offset < i <= T such that the
// pattern occupies i-l(pattern)..i-1 and sample[i] == next. The companion
// overload without `next` counts pattern occurrences at positions that
// still have a successor inside the window, so that summing the first
// form over all next symbols reproduces it exactly.
long count_pattern(const SymbolSequence& sample, const ContextString& pattern,
                   Symbol next, long offset);
long count_pattern(const SymbolSequence& sample, const ContextString& pattern,
                   long offset);

// Plain-text sequence format: whitespace-separated symbol tokens with an
// optional leading "alphabet=N" header. Without the header the alphabet
// is inferred as max(symbol)+1, at least 2.
SymbolSequence read_sequence(std::istream& in);
SymbolSequence read_sequence_file(const std::string& path);
void write_sequence(std::ostream& out, const SymbolSequence& seq, bool header = true);
void write_sequence_file(const std::string& path, const SymbolSequence& seq, bool header = true);

}  // namespace cvlmc
