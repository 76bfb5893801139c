#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvlmc/sequence.hpp"

// The context tree T of a variable length Markov chain: a suffix-free set
// of contexts, each optionally carrying its next-symbol distribution
// p(.|w). Internally a trie rooted at the present; children are indexed
// by the next-older symbol, so looking up the context of a history is a
// walk backward through it.

namespace cvlmc {

struct TreeDiagnostics {
    bool suffix_free = true;
    bool complete = true;
    bool rows_stochastic = true;        // over contexts that have a row set
    bool all_rows_set = true;
    std::vector<std::string> errors;    // suffix-free / stochasticity violations
    std::vector<std::string> warnings;  // reducibility (equal sibling rows)

    bool valid() const { return suffix_free && rows_stochastic; }
};

class ContextTree {
public:
    // A tree with no contexts (incomplete); placeholder state.
    ContextTree() : ContextTree(Alphabet(2), {}) {}
    ContextTree(Alphabet alphabet, std::vector<ContextString> contexts);

    const Alphabet& alphabet() const { return alphabet_; }
    // Canonical order: by (length, radix code).
    const std::vector<ContextString>& contexts() const { return contexts_; }
    int depth() const { return depth_; }
    int num_contexts() const { return static_cast<int>(contexts_.size()); }

    bool contains(const ContextString& w) const { return index_of(w) >= 0; }
    int index_of(const ContextString& w) const;

    bool has_row(const ContextString& w) const;
    const std::vector<double>& row(const ContextString& w) const;
    void set_row(const ContextString& w, std::vector<double> probs);
    bool all_rows_set() const;

    // p(a|w) for a context w with a set row.
    double prob(Symbol a, const ContextString& w) const;

    // The unique context that is a suffix of the history (newest symbol
    // last). Throws if no context matches, which signals an incomplete
    // tree or a too-short history.
    const ContextString& lookup_context(std::span<const Symbol> history) const;
    const ContextString& lookup_context(const ContextString& history) const;

private:
    struct Node {
        std::vector<int> children;  // alphabet.size entries, -1 = absent
        int context_index = -1;
    };

    Alphabet alphabet_;
    std::vector<ContextString> contexts_;
    std::vector<std::optional<std::vector<double>>> rows_;
    std::vector<Node> nodes_;  // nodes_[0] is the root (empty string)
    int depth_ = 0;

    friend TreeDiagnostics validate(const ContextTree&);
};

TreeDiagnostics validate(const ContextTree& tree);

// All |E|^L contexts of length L; rows unset.
ContextTree full_tree(Alphabet alphabet, int L);

// Definition of the truncated tree at order k: contexts of length <= k are
// kept (with their rows), longer ones are replaced by their length-k
// suffix with the row left unset for re-estimation.
ContextTree truncate(const ContextTree& tree, int k);

// Context sets identical (rows are compared separately where needed).
bool tree_equal(const ContextTree& a, const ContextTree& b);

// Max-abs difference between rows on the shared context set; infinity if
// the context sets differ or a row is unset on one side only.
double tree_row_distance(const ContextTree& a, const ContextTree& b);

// Probability law over fixed-length symbol strings, used both for the
// initial distribution over contexts and for block laws over E^k.
class InitialLaw {
public:
    InitialLaw(Alphabet alphabet, std::map<ContextString, double> probs);

    const Alphabet& alphabet() const { return alphabet_; }
    const std::map<ContextString, double>& probs() const { return probs_; }
    double prob(const ContextString& w) const;
    double total() const;

private:
    Alphabet alphabet_;
    std::map<ContextString, double> probs_;
};

InitialLaw uniform_block_law(Alphabet alphabet, int k);

// JSON serialization. Contexts are arrays of symbols, oldest first;
// transitions is a parallel array of probability rows (null when unset).
std::string tree_to_json(const ContextTree& tree, int indent = 2);
ContextTree tree_from_json(const std::string& text);
void save_tree(const std::string& path, const ContextTree& tree);
ContextTree load_tree(const std::string& path);

}  // namespace cvlmc
