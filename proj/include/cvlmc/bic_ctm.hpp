#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "cvlmc/context_tree.hpp"
#include "cvlmc/markov.hpp"

// Bootstrap BIC tree selection. Counts are taken over the index window
// D < i <= m so every candidate depth shares one window, which makes
// N(w) = sum_a N(w,a) exact and the per-node scores comparable across
// depths. The selected tree is computed by the bottom-up
// context-tree-maximizing recursion over per-node values V and flags chi;
// an exhaustive enumeration of feasible trees serves as its oracle.

namespace cvlmc {

// One-pass suffix counts of every string of length <= max_depth, windowed.
class WindowCounts {
public:
    WindowCounts(const SymbolSequence& sample, int max_depth, long m);

    const Alphabet& alphabet() const { return alphabet_; }
    int max_depth() const { return max_depth_; }
    long m() const { return m_; }

    long count(const ContextString& w) const;                 // N(w)
    long count(const ContextString& w, Symbol next) const;    // N(w,a)

    // trie traversal (node 0 is the empty string; -1 = unobserved)
    int root() const { return 0; }
    int child(int node, Symbol older) const;
    int num_nodes() const;
    long node_total(int node) const;
    long node_next(int node, Symbol a) const;

private:
    struct Node {
        std::vector<long> next;
        std::vector<int> children;
    };
    Alphabet alphabet_;
    int max_depth_;
    long m_;
    std::vector<Node> nodes_;

    int find(const ContextString& w) const;
};

// log of the maximum-likelihood term of a node: sum_a N(w,a) log(N(w,a)/N(w)),
// with 0 log 0 = 0, and log 1 = 0 for unseen strings.
double ml_term(const WindowCounts& counts, const ContextString& w);

// ml_term minus the BIC penalty (|E|-1)/2 * log m.
double penalized_term(const WindowCounts& counts, const ContextString& w);

struct BootstrapConfig {
    long m = 0;       // bootstrap sample length
    int D = 1;        // candidate depth bound
    std::uint64_t seed = 0;

    void check() const;
};

// Symbol sequence of length m from the estimated k-full chain: the start
// block is a pi draw, each block is projected to its newest symbol.
SymbolSequence bootstrap_sample(const MarkovTransitions& a_star,
                                const std::vector<double>& pi_star, long m,
                                std::uint64_t seed);

struct PrunedTreeResult {
    ContextTree tree;  // rows set to windowed empirical frequencies
    std::map<ContextString, double> node_values;  // log V per observed node
    std::map<ContextString, int> node_flags;      // chi per observed node
    double bic_score = 0.0;  // -log ML + (|E|-1)|T|/2 log m of the returned tree
};

// Bottom-up CTM over the observed candidate trie of depth D, using the
// first m symbols of the sample. chi is 1 only on a strict improvement,
// so ties keep the shorter context.
PrunedTreeResult ctm_prune(const SymbolSequence& sample, int D, long m);

struct ExhaustiveBicResult {
    ContextTree tree;
    double bic_score = 0.0;
    long trees_checked = 0;
};

// Enumerates every feasible tree (depth <= D, every context observed,
// nodes split into all observed children) and minimizes the BIC score
// directly; ties prefer the coarser tree. Oracle, guarded to binary
// alphabets and D <= 4.
ExhaustiveBicResult exhaustive_bic(const SymbolSequence& sample, int D, long m);

// Candidate depth default: max(1, floor(log m / (2 log |E|))).
int default_depth(long m, Alphabet alphabet);

}  // namespace cvlmc
