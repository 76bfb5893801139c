#include "cvlmc/contamination.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cvlmc/rng.hpp"

namespace cvlmc {

NoiseSpec NoiseSpec::sum(Alphabet alphabet, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("noise level outside [0,1]");
    std::vector<double> w(alphabet.size, alphabet.size > 1 ? eps / (alphabet.size - 1) : 0.0);
    w[0] = 1.0 - eps;
    return NoiseSpec{NoiseRegime::Sum, std::move(w), std::nullopt};
}

NoiseSpec NoiseSpec::sum_weights(std::vector<double> w) {
    NoiseSpec n{NoiseRegime::Sum, std::move(w), std::nullopt};
    n.check();
    return n;
}

NoiseSpec NoiseSpec::product(Alphabet alphabet, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("noise level outside [0,1]");
    std::vector<double> w(alphabet.size, alphabet.size > 1 ? eps / (alphabet.size - 1) : 0.0);
    w[0] = 1.0 - eps;
    return NoiseSpec{NoiseRegime::Product, std::move(w), std::nullopt};
}

NoiseSpec NoiseSpec::product_weights(std::vector<double> w) {
    NoiseSpec n{NoiseRegime::Product, std::move(w), std::nullopt};
    n.check();
    return n;
}

void NoiseSpec::check() const {
    if (weights.size() < 2) throw std::invalid_argument("noise weights need >= 2 entries");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("negative noise weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("noise weights do not sum to 1");
    if (regime == NoiseRegime::Product && weights.size() > 2 && !product_table)
        throw std::invalid_argument(
            "product contamination over alphabets larger than binary needs an explicit "
            "closed operation table");
    if (product_table) {
        const std::size_t N = weights.size();
        if (product_table->size() != N * N)
            throw std::invalid_argument("product table has wrong size");
        for (Symbol s : *product_table)
            if (s >= N) throw std::invalid_argument("product table entry outside alphabet");
    }
}

Symbol NoiseSpec::apply(Symbol x, Symbol xi) const {
    const int N = alphabet_size();
    if (regime == NoiseRegime::Sum) return static_cast<Symbol>((x + xi) % N);
    if (product_table) return (*product_table)[std::size_t(x) * N + xi];
    return static_cast<Symbol>(x * xi);  // closed for the binary alphabet
}

EmissionMatrix emission_matrix(const NoiseSpec& noise, Alphabet alphabet) {
    noise.check();
    if (noise.alphabet_size() != alphabet.size)
        throw std::invalid_argument("emission_matrix: noise weights sized for a different alphabet");
    const int N = alphabet.size;
    EmissionMatrix b{alphabet, std::vector<double>(std::size_t(N) * N, 0.0)};
    for (int a = 0; a < N; ++a)
        for (int xi = 0; xi < N; ++xi)
            b.at(static_cast<Symbol>(a), noise.apply(static_cast<Symbol>(a), static_cast<Symbol>(xi))) +=
                noise.weights[xi];
    return b;
}

SymbolSequence contaminate(const SymbolSequence& x, const NoiseSpec& noise, std::uint64_t seed) {
    noise.check();
    if (noise.alphabet_size() != x.alphabet.size)
        throw std::invalid_argument("contaminate: noise weights sized for a different alphabet");
    Rng rng(seed);
    std::vector<Symbol> z(x.symbols.size());
    for (std::size_t t = 0; t < z.size(); ++t) {
        Symbol xi = static_cast<Symbol>(rng.categorical(noise.weights));
        z[t] = noise.apply(x.symbols[t], xi);
    }
    return SymbolSequence(x.alphabet, std::move(z));
}

double brute_force_log_likelihood(const SymbolSequence& z, const ContextTree& tree,
                                  const InitialLaw& initial, const NoiseSpec& noise,
                                  EmissionWindow window) {
    const long T = z.size();
    if (T > 12) throw std::invalid_argument("brute force likelihood is guarded to T <= 12");
    const int k = tree.depth();
    if (T < k) throw std::invalid_argument("sample shorter than tree depth");
    const int N = tree.alphabet().size;
    if (z.alphabet != tree.alphabet())
        throw std::invalid_argument("brute force likelihood: alphabet mismatch");
    const EmissionMatrix b = emission_matrix(noise, tree.alphabet());

    std::uint64_t paths = 1;
    for (long t = 0; t < T; ++t) paths *= N;

    double total = 0.0;
    std::vector<Symbol> a(T);
    for (std::uint64_t code = 0; code < paths; ++code) {
        std::uint64_t c = code;
        for (long t = T - 1; t >= 0; --t) {
            a[t] = static_cast<Symbol>(c % N);
            c /= N;
        }
        double p = initial.prob(ContextString(tree.alphabet(), std::vector<Symbol>(a.begin(), a.begin() + k)));
        if (p == 0.0) continue;
        std::span<const Symbol> path(a);
        for (long t = k; t < T && p > 0.0; ++t) {
            const ContextString& ctx = tree.lookup_context(path.subspan(0, t).last(k));
            p *= tree.row(ctx)[a[t]];
        }
        if (p == 0.0) continue;
        const long first_emit = window == EmissionWindow::AllSteps ? 0 : k;
        for (long t = first_emit; t < T; ++t) p *= b(a[t], z.symbols[t]);
        total += p;
    }
    if (total <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(total);
}

}  // namespace cvlmc
