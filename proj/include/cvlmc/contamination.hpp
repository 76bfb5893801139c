#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cvlmc/context_tree.hpp"
#include "cvlmc/sequence.hpp"

// The two contamination regimes. Under SUM the observed symbol is
// z_t = x_t + xi_t mod |E|; under PRODUCT it is z_t = x_t * xi_t, with
// xi i.i.d. and independent of the hidden chain. The per-symbol emission
// law and the exact (exponential-cost) likelihood both follow from the
// noise weights alone.

namespace cvlmc {

enum class NoiseRegime { Sum, Product };

struct NoiseSpec {
    NoiseRegime regime = NoiseRegime::Sum;
    std::vector<double> weights;  // P(xi = i), sums to 1
    // Closed operation table for PRODUCT over alphabets larger than the
    // binary one, where the plain integer product leaves E. table[a*N+b]
    // is the result of a.b.
    std::optional<std::vector<Symbol>> product_table;

    static NoiseSpec sum(Alphabet alphabet, double eps);
    static NoiseSpec sum_weights(std::vector<double> w);
    static NoiseSpec product(Alphabet alphabet, double eps);
    static NoiseSpec product_weights(std::vector<double> w);

    int alphabet_size() const { return static_cast<int>(weights.size()); }
    void check() const;
    Symbol apply(Symbol x, Symbol xi) const;  // the contamination operation
};

// Per-symbol emission matrix b_a(z) = P(Z=z | X=a); rows indexed by the
// hidden symbol.
struct EmissionMatrix {
    Alphabet alphabet{2};
    std::vector<double> data;  // N x N row-major

    double operator()(Symbol a, Symbol z) const { return data[std::size_t(a) * alphabet.size + z]; }
    double& at(Symbol a, Symbol z) { return data[std::size_t(a) * alphabet.size + z]; }
};

EmissionMatrix emission_matrix(const NoiseSpec& noise, Alphabet alphabet);

SymbolSequence contaminate(const SymbolSequence& x, const NoiseSpec& noise, std::uint64_t seed);

// Which time steps carry an emission factor in the exact likelihood. The
// displayed TSCM formula starts the indicator product after the initial
// block while the TPCM one runs over every step; AllSteps treats both
// uniformly (the first k emissions belong to the initial block) and is
// the default.
enum class EmissionWindow { AllSteps, SkipInitialBlock };

// Exact log-likelihood of z by full enumeration of hidden paths:
// sum over a_1..a_T of P(X_1^k = a_1^k) * prod p(a_t|context) * prod
// b_{a_t}(z_t). Test oracle; guarded to T <= 12.
double brute_force_log_likelihood(const SymbolSequence& z, const ContextTree& tree,
                                  const InitialLaw& initial, const NoiseSpec& noise,
                                  EmissionWindow window = EmissionWindow::AllSteps);

}  // namespace cvlmc
