#pragma once

#include <cstdint>
#include <vector>

#include "cvlmc/sequence.hpp"

// Transition structure of an order-k chain over block states E^k, stored
// by next symbol: row(state)[a] is the probability of moving from the
// block w to its shift successor (w_2..w_k, a). Entries for any other
// target block are structurally zero, which is exactly the sparsity of
// the embedded k-full chain.

namespace cvlmc {

using BlockState = std::uint32_t;

// Number of block states N^k (guards against overflow for practical k).
std::uint32_t block_count(Alphabet alphabet, int k);

// Successor block of `state` after emitting symbol a: drop the oldest
// symbol, append a.
BlockState block_successor(BlockState state, Symbol a, Alphabet alphabet, int k);
Symbol block_newest(BlockState state, Alphabet alphabet);
Symbol block_symbol(BlockState state, int position, Alphabet alphabet, int k);  // position 0 = oldest
ContextString block_to_string(BlockState state, Alphabet alphabet, int k);

class MarkovTransitions {
public:
    MarkovTransitions(Alphabet alphabet, int k);

    const Alphabet& alphabet() const { return alphabet_; }
    int k() const { return k_; }
    std::uint32_t num_states() const { return states_; }

    double* row(BlockState w) { return data_.data() + static_cast<std::size_t>(w) * alphabet_.size; }
    const double* row(BlockState w) const { return data_.data() + static_cast<std::size_t>(w) * alphabet_.size; }

    double prob_next(BlockState w, Symbol a) const { return row(w)[a]; }
    void set_prob_next(BlockState w, Symbol a, double p) { row(w)[a] = p; }

    // Dense view p*(to|from); zero unless `to` is a shift successor of `from`.
    double prob_block(BlockState from, BlockState to) const;

    // Max abs deviation of any row sum from 1.
    double max_row_sum_error() const;
    void normalize_rows();

    bool operator==(const MarkovTransitions&) const = default;

private:
    Alphabet alphabet_;
    int k_;
    std::uint32_t states_;
    std::vector<double> data_;  // states x alphabet, row-major
};

// Left fixed vector of the k-full chain by damped power iteration
// (average of successive iterates, which also settles periodic chains).
// Throws on non-convergence or when the fixed vector is not unique.
std::vector<double> stationary_distribution(const MarkovTransitions& transitions,
                                            double residual_tol = 1e-12,
                                            long max_iterations = 100000);

}  // namespace cvlmc
