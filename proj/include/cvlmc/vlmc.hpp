#pragma once

#include <cstdint>

#include "cvlmc/context_tree.hpp"
#include "cvlmc/markov.hpp"

// Sampling from a VLMC and empirical estimation from fully observed data.

namespace cvlmc {

struct VlmcModel {
    ContextTree tree;
    long burn_in = 1000;

    VlmcModel(ContextTree t, long burn = 1000);
};

// x_1..x_T from the model: a uniform prefix of depth symbols, burn_in
// discarded steps, then next ~ p(.|context of the history). Deterministic
// per seed.
SymbolSequence sample_vlmc(const VlmcModel& model, long T, std::uint64_t seed);

// Empirical next-symbol frequencies given the last k symbols; rows of
// unseen histories are uniform.
MarkovTransitions empirical_transitions(const SymbolSequence& sample, int k);

// Log-likelihood of a sample under a VLMC, conditional on its first
// `depth` symbols (sum of log p(x_t | context) for t > depth).
double vlmc_conditional_loglik(const ContextTree& tree, const SymbolSequence& sample);

}  // namespace cvlmc
