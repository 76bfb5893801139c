#include "cvlmc/markov.hpp"

#include <cmath>
#include <stdexcept>

namespace cvlmc {

std::uint32_t block_count(Alphabet alphabet, int k) {
    if (k < 0) throw std::invalid_argument("block length must be >= 0");
    std::uint64_t count = 1;
    for (int i = 0; i < k; ++i) {
        count *= alphabet.size;
        if (count > (1u << 24)) throw std::invalid_argument("block state space |E|^k too large");
    }
    return static_cast<std::uint32_t>(count);
}

BlockState block_successor(BlockState state, Symbol a, Alphabet alphabet, int k) {
    const std::uint64_t drop = block_count(alphabet, k) / alphabet.size;
    return static_cast<BlockState>((state % drop) * alphabet.size + a);
}

Symbol block_newest(BlockState state, Alphabet alphabet) {
    return static_cast<Symbol>(state % alphabet.size);
}

Symbol block_symbol(BlockState state, int position, Alphabet alphabet, int k) {
    if (position < 0 || position >= k) throw std::invalid_argument("block position out of range");
    std::uint64_t div = 1;
    for (int i = 0; i < k - 1 - position; ++i) div *= alphabet.size;
    return static_cast<Symbol>((state / div) % alphabet.size);
}

ContextString block_to_string(BlockState state, Alphabet alphabet, int k) {
    return ContextString(alphabet, decode_word(state, k, alphabet.size));
}

MarkovTransitions::MarkovTransitions(Alphabet alphabet, int k)
    : alphabet_(alphabet), k_(k), states_(block_count(alphabet, k)) {
    if (k < 1) throw std::invalid_argument("markov transitions need k >= 1");
    data_.assign(static_cast<std::size_t>(states_) * alphabet_.size, 0.0);
}

double MarkovTransitions::prob_block(BlockState from, BlockState to) const {
    for (int a = 0; a < alphabet_.size; ++a) {
        if (block_successor(from, static_cast<Symbol>(a), alphabet_, k_) == to)
            return row(from)[a];
    }
    return 0.0;
}

double MarkovTransitions::max_row_sum_error() const {
    double worst = 0.0;
    for (std::uint32_t w = 0; w < states_; ++w) {
        double sum = 0.0;
        for (int a = 0; a < alphabet_.size; ++a) sum += row(w)[a];
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

void MarkovTransitions::normalize_rows() {
    for (std::uint32_t w = 0; w < states_; ++w) {
        double sum = 0.0;
        for (int a = 0; a < alphabet_.size; ++a) sum += row(w)[a];
        if (sum <= 0.0) throw std::runtime_error("cannot normalize all-zero transition row");
        for (int a = 0; a < alphabet_.size; ++a) row(w)[a] /= sum;
    }
}

namespace {

std::vector<double> damped_fixed_point(const MarkovTransitions& t, std::vector<double> v,
                                       double residual_tol, long max_iterations, bool& converged) {
    const std::uint32_t S = t.num_states();
    const int N = t.alphabet().size;
    std::vector<double> next(S);
    converged = false;
    for (long it = 0; it < max_iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::uint32_t w = 0; w < S; ++w) {
            const double* r = t.row(w);
            for (int a = 0; a < N; ++a) {
                next[block_successor(w, static_cast<Symbol>(a), t.alphabet(), t.k())] += v[w] * r[a];
            }
        }
        double change = 0.0;
        for (std::uint32_t w = 0; w < S; ++w) {
            double mixed = 0.5 * (v[w] + next[w]);
            change += std::abs(mixed - v[w]);
            v[w] = mixed;
        }
        if (change < residual_tol * 0.5) {
            converged = true;
            break;
        }
    }
    return v;
}

double residual(const MarkovTransitions& t, const std::vector<double>& v) {
    const std::uint32_t S = t.num_states();
    const int N = t.alphabet().size;
    std::vector<double> next(S, 0.0);
    for (std::uint32_t w = 0; w < S; ++w) {
        const double* r = t.row(w);
        for (int a = 0; a < N; ++a)
            next[block_successor(w, static_cast<Symbol>(a), t.alphabet(), t.k())] += v[w] * r[a];
    }
    double res = 0.0;
    for (std::uint32_t w = 0; w < S; ++w) res += std::abs(next[w] - v[w]);
    return res;
}

}  // namespace

std::vector<double> stationary_distribution(const MarkovTransitions& transitions,
                                            double residual_tol, long max_iterations) {
    if (transitions.max_row_sum_error() > 1e-10)
        throw std::invalid_argument("stationary_distribution: rows are not stochastic");
    const std::uint32_t S = transitions.num_states();

    bool converged = false;
    std::vector<double> v(S, 1.0 / S);
    v = damped_fixed_point(transitions, std::move(v), residual_tol, max_iterations, converged);
    if (!converged || residual(transitions, v) > residual_tol * 10)
        throw std::runtime_error("stationary_distribution: power iteration did not converge");

    // A second start detects chains with more than one fixed vector
    // (reducible chains), where the limit depends on the start.
    std::vector<double> u(S);
    double norm = 0.0;
    for (std::uint32_t w = 0; w < S; ++w) norm += (u[w] = 1.0 + static_cast<double>(w % 7));
    for (auto& x : u) x /= norm;
    bool converged2 = false;
    u = damped_fixed_point(transitions, std::move(u), residual_tol, max_iterations, converged2);
    if (!converged2)
        throw std::runtime_error("stationary_distribution: power iteration did not converge");
    for (std::uint32_t w = 0; w < S; ++w) {
        if (std::abs(u[w] - v[w]) > 1e-8)
            throw std::runtime_error("stationary_distribution: fixed vector not unique (reducible chain)");
    }
    return v;
}

}  // namespace cvlmc
