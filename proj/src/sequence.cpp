#include "cvlmc/sequence.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cvlmc {

Alphabet::Alphabet(int n) : size(n) {
    if (n < 2) throw std::invalid_argument("alphabet size must be >= 2, got " + std::to_string(n));
}

ContextString::ContextString(Alphabet alphabet, std::vector<Symbol> symbols)
    : alphabet_(alphabet), symbols_(std::move(symbols)) {
    for (Symbol s : symbols_) {
        if (s >= alphabet_.size)
            throw std::invalid_argument("symbol " + std::to_string(int(s)) +
                                        " outside alphabet of size " + std::to_string(alphabet_.size));
    }
}

ContextString ContextString::parse(Alphabet alphabet, std::string_view text) {
    std::vector<Symbol> syms;
    syms.reserve(text.size());
    for (char c : text) {
        if (c < '0' || c > '9') throw std::invalid_argument(std::string("bad symbol character '") + c + "'");
        syms.push_back(static_cast<Symbol>(c - '0'));
    }
    return ContextString(alphabet, std::move(syms));
}

ContextString ContextString::suffix(int n) const {
    if (n < 0 || n > length()) throw std::invalid_argument("suffix length out of range");
    return ContextString(alphabet_, std::vector<Symbol>(symbols_.end() - n, symbols_.end()));
}

ContextString ContextString::extend_older(Symbol a) const {
    std::vector<Symbol> syms;
    syms.reserve(symbols_.size() + 1);
    syms.push_back(a);
    syms.insert(syms.end(), symbols_.begin(), symbols_.end());
    return ContextString(alphabet_, std::move(syms));
}

std::string ContextString::str() const {
    std::string out;
    out.reserve(symbols_.size());
    for (Symbol s : symbols_) out += static_cast<char>('0' + s);
    return out;
}

bool ContextString::operator<(const ContextString& o) const {
    if (symbols_.size() != o.symbols_.size()) return symbols_.size() < o.symbols_.size();
    return symbols_ < o.symbols_;
}

std::uint64_t encode_word(const std::vector<Symbol>& symbols, int alphabet_size) {
    std::uint64_t code = 0;
    for (Symbol s : symbols) code = code * static_cast<std::uint64_t>(alphabet_size) + s;
    return code;
}

std::vector<Symbol> decode_word(std::uint64_t code, int length, int alphabet_size) {
    std::vector<Symbol> syms(length);
    for (int i = length - 1; i >= 0; --i) {
        syms[i] = static_cast<Symbol>(code % alphabet_size);
        code /= alphabet_size;
    }
    return syms;
}

SymbolSequence::SymbolSequence(Alphabet a, std::vector<Symbol> syms)
    : alphabet(a), symbols(std::move(syms)) {
    for (Symbol s : symbols) {
        if (s >= alphabet.size)
            throw std::invalid_argument("symbol " + std::to_string(int(s)) +
                                        " outside alphabet of size " + std::to_string(alphabet.size));
    }
}

bool is_suffix(const ContextString& candidate, const ContextString& target, bool proper) {
    if (candidate.alphabet() != target.alphabet())
        throw std::invalid_argument("is_suffix: alphabet mismatch");
    const int lc = candidate.length();
    const int lt = target.length();
    if (lc > lt) return false;
    if (proper && lc == lt) return false;
    return std::equal(candidate.symbols().begin(), candidate.symbols().end(),
                      target.symbols().end() - lc);
}

long count_pattern(const SymbolSequence& sample, const ContextString& pattern,
                   Symbol next, long offset) {
    if (pattern.alphabet() != sample.alphabet)
        throw std::invalid_argument("count_pattern: alphabet mismatch");
    const long T = sample.size();
    const long l = pattern.length();
    if (offset < 0) throw std::invalid_argument("count_pattern: negative offset");
    if (offset + l > T) throw std::invalid_argument("count_pattern: pattern longer than sample window");
    const auto& pat = pattern.symbols();
    const auto& x = sample.symbols;
    long count = 0;
    // 1-based position i of the successor symbol; pattern ends at i-1.
    for (long i = std::max(offset + 1, l + 1); i <= T; ++i) {
        if (x[i - 1] != next) continue;
        bool match = true;
        for (long j = 0; j < l; ++j) {
            if (x[i - 1 - l + j] != pat[j]) { match = false; break; }
        }
        if (match) ++count;
    }
    return count;
}

long count_pattern(const SymbolSequence& sample, const ContextString& pattern, long offset) {
    if (pattern.alphabet() != sample.alphabet)
        throw std::invalid_argument("count_pattern: alphabet mismatch");
    const long T = sample.size();
    const long l = pattern.length();
    if (offset < 0) throw std::invalid_argument("count_pattern: negative offset");
    if (offset + l > T) throw std::invalid_argument("count_pattern: pattern longer than sample window");
    const auto& pat = pattern.symbols();
    const auto& x = sample.symbols;
    long count = 0;
    for (long i = std::max(offset + 1, l + 1); i <= T; ++i) {
        bool match = true;
        for (long j = 0; j < l; ++j) {
            if (x[i - 1 - l + j] != pat[j]) { match = false; break; }
        }
        if (match) ++count;
    }
    return count;
}

SymbolSequence read_sequence(std::istream& in) {
    std::vector<Symbol> syms;
    int alphabet_size = 0;
    bool have_header = false;
    std::string tok;
    while (in >> tok) {
        if (!have_header && syms.empty() && tok.rfind("alphabet=", 0) == 0) {
            alphabet_size = std::stoi(tok.substr(9));
            have_header = true;
            continue;
        }
        int v = std::stoi(tok);
        if (v < 0 || v > 255) throw std::invalid_argument("sequence symbol out of range: " + tok);
        syms.push_back(static_cast<Symbol>(v));
    }
    if (!have_header) {
        int mx = 1;
        for (Symbol s : syms) mx = std::max(mx, int(s));
        alphabet_size = mx + 1;
    }
    return SymbolSequence(Alphabet(std::max(alphabet_size, 2)), std::move(syms));
}

SymbolSequence read_sequence_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sequence file: " + path);
    return read_sequence(in);
}

void write_sequence(std::ostream& out, const SymbolSequence& seq, bool header) {
    if (header) out << "alphabet=" << seq.alphabet.size << "\n";
    for (long i = 0; i < seq.size(); ++i) {
        out << int(seq.symbols[i]);
        out << ((i + 1) % 40 == 0 ? '\n' : ' ');
    }
    if (seq.size() % 40 != 0) out << '\n';
}

void write_sequence_file(const std::string& path, const SymbolSequence& seq, bool header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open sequence file for writing: " + path);
    write_sequence(out, seq, header);
}

}  // namespace cvlmc
