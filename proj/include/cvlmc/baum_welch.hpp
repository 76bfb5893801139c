#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvlmc/hmm_embedding.hpp"

// Scaled forward-backward, EM updates and multi-restart fitting over a
// grid of noise levels. All likelihoods are natural logs; the per-step
// normalizers of the scaled recursion give the log-likelihood exactly and
// keep the gamma/delta formulas in linear space.

namespace cvlmc {

struct ForwardResult {
    long steps = 0;                // R = T - k + 1
    std::uint32_t num_states = 0;
    std::vector<double> alpha;     // R x S, normalized per step
    std::vector<double> scaling;   // per-step normalizers c_r
    double log_likelihood = 0.0;   // sum of log c_r

    double at(long r, BlockState w) const { return alpha[std::size_t(r) * num_states + w]; }
};

ForwardResult forward(const HmmParams& params, const SymbolSequence& z);

// Backward variables scaled with the normalizers of the matching forward
// pass; beta at the last step is 1.
std::vector<double> backward(const HmmParams& params, const SymbolSequence& z,
                             const std::vector<double>& scaling);

struct PosteriorTables {
    long steps = 0;
    std::uint32_t num_states = 0;
    int alphabet_size = 0;
    std::vector<double> gamma;    // R x S
    std::vector<double> delta;    // (R-1) x S x N, delta_r(w, shift(w,a))
    std::vector<double> scaling;  // per-step normalizers

    double gamma_at(long r, BlockState w) const { return gamma[std::size_t(r) * num_states + w]; }
    double delta_at(long r, BlockState w, Symbol a) const {
        return delta[(std::size_t(r) * num_states + w) * alphabet_size + a];
    }
};

struct EmStepResult {
    HmmParams params;                      // updated parameters
    double log_likelihood = 0.0;           // of the *input* parameters
    PosteriorTables tables;
    std::vector<BlockState> frozen_rows;   // rows skipped for zero expected count
};

// One full E+M update: pi from gamma_1, A* from delta/gamma sums, B from
// expected emission counts. Structural zeros of A* are invariant.
EmStepResult em_step(const HmmParams& params, const SymbolSequence& z);

std::vector<double> default_noise_grid();  // 0.01, 0.02, ..., 0.99

struct FitConfig {
    std::vector<double> noise_grid = default_noise_grid();
    int max_iter = 500;
    double rel_tol = 1e-6;
    int k = 1;
    EmbedMode mode = EmbedMode::Symbol;
    NoiseRegime regime = NoiseRegime::Sum;
    int threads = 1;

    void check() const;
};

struct RestartRecord {
    double eps = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string error;  // nonempty when the run failed
};

struct FitResult {
    HmmParams params;
    double eps_hat = 0.0;
    double loglik = 0.0;
    std::vector<double> trace;                 // winning run, nondecreasing
    std::vector<RestartRecord> restart_table;  // one entry per grid value
    std::vector<double> implied_noise_weights; // read back from fitted B (diagnostic)
    long frozen_row_events = 0;
};

// Multi-restart estimation: one EM run per grid value, initialized from
// the empirical transitions of z, a uniform pi and the regime emission at
// that grid value; the winner is the run with the largest final
// log-likelihood (ties toward the smaller eps), whose grid value is the
// noise estimate.
FitResult fit(const SymbolSequence& z, const FitConfig& cfg);

std::string fit_result_to_json(const FitResult& result, int indent = 2);
void save_fit_result(const std::string& path, const FitResult& result);

struct ViterbiResult {
    std::vector<BlockState> states;  // most probable block path
    std::vector<Symbol> symbols;     // spelled out, length T
    double log_joint = 0.0;
};

// Most probable hidden path in log space; ties break toward the lower
// state index.
ViterbiResult viterbi(const HmmParams& params, const SymbolSequence& z);

}  // namespace cvlmc
