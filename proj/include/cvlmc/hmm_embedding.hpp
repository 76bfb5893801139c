#pragma once

#include <string>
#include <vector>

#include "cvlmc/contamination.hpp"
#include "cvlmc/context_tree.hpp"
#include "cvlmc/markov.hpp"

// Re-parameterization of an order-k hidden VLMC as an HMM over block
// states E^k: block observation sequences, the embedded transition matrix
// A* (next-symbol sparse form) and the emission block B*.
//
// Two observation modes. BLOCK follows the written recursions: the
// observation at step r is the whole k-block z*_r, with emission
// prod_i b_{w_i}(z*_i). Consecutive observed blocks share k-1 symbols, so
// that likelihood double-counts overlaps. SYMBOL emits one fresh symbol
// per step (the newest), plus the k-1 older symbols of the first block at
// step one, which makes the forward likelihood equal the exact likelihood
// of the contaminated model. SYMBOL is the estimation default; BLOCK is
// kept for replication.

namespace cvlmc {

enum class EmbedMode { Block, Symbol };

std::string to_string(EmbedMode mode);
EmbedMode embed_mode_from_string(const std::string& name);

// BLOCK: radix codes of the overlapping k-blocks, r = 1..T-k+1.
// SYMBOL: the newest symbol per step, z_k..z_T (same length).
std::vector<std::uint32_t> embed_observations(const SymbolSequence& z, int k, EmbedMode mode);

// p*(v|w) = p(newest(v) | context of w) when v is the shift successor of
// w, else 0. Requires k >= depth and a complete tree with all rows set.
MarkovTransitions embed_tree(const ContextTree& tree, int k);

// Emission block: SYMBOL mode is the per-symbol matrix itself; BLOCK mode
// is the N^k x N^k product-form matrix.
EmissionMatrix embed_emissions_symbol(const NoiseSpec& noise, Alphabet alphabet);
std::vector<double> embed_emissions_block(const NoiseSpec& noise, Alphabet alphabet, int k);

struct HmmParams {
    EmbedMode mode = EmbedMode::Symbol;
    int k = 1;
    Alphabet alphabet{2};
    MarkovTransitions a_star;        // p*(shift(w,a)|w) stored by next symbol a
    std::vector<double> pi_star;     // over E^k
    EmissionMatrix b_symbol;         // SYMBOL mode: N x N, shared across block states
    std::vector<double> b_block;     // BLOCK mode: N^k x N^k row-major

    HmmParams(EmbedMode m, int k_, Alphabet alphabet_);

    std::uint32_t num_states() const { return a_star.num_states(); }
    double p_star(BlockState from, BlockState to) const { return a_star.prob_block(from, to); }
    double emission(BlockState state, std::uint32_t obs) const;

    // Max deviation of the row-sum invariants (A*, B*, pi*).
    double max_invariant_error() const;
};

// Initial law over E^k blocks: the stationary law of the embedded chain.
InitialLaw stationary_block_law(const ContextTree& tree, int k);

std::string hmm_params_to_json(const HmmParams& params, int indent = 2);
HmmParams hmm_params_from_json(const std::string& text);
void save_hmm_params(const std::string& path, const HmmParams& params);
HmmParams load_hmm_params(const std::string& path);

}  // namespace cvlmc
