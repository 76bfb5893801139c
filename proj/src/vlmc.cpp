#include "cvlmc/vlmc.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "cvlmc/rng.hpp"

namespace cvlmc {

VlmcModel::VlmcModel(ContextTree t, long burn) : tree(std::move(t)), burn_in(burn) {
    if (burn_in < 0) throw std::invalid_argument("negative burn-in");
    TreeDiagnostics d = validate(tree);
    if (!d.valid() || !d.complete)
        throw std::invalid_argument("VLMC model needs a valid, complete context tree");
    if (!tree.all_rows_set())
        throw std::invalid_argument("VLMC model has unset transition rows");
}

SymbolSequence sample_vlmc(const VlmcModel& model, long T, std::uint64_t seed) {
    const int depth = model.tree.depth();
    if (T < depth) throw std::invalid_argument("sample length below tree depth");
    const int N = model.tree.alphabet().size;
    Rng rng(seed);

    std::vector<Symbol> history;
    history.reserve(depth + model.burn_in + T);
    const std::vector<double> uniform_weights(N, 1.0);
    for (int i = 0; i < depth; ++i)
        history.push_back(static_cast<Symbol>(rng.categorical(uniform_weights)));

    auto step = [&]() {
        std::span<const Symbol> h(history);
        const ContextString& ctx = model.tree.lookup_context(h.last(std::min<std::size_t>(h.size(), depth)));
        const auto& row = model.tree.row(ctx);
        history.push_back(static_cast<Symbol>(rng.categorical(row)));
    };

    for (long i = 0; i < model.burn_in; ++i) step();
    // keep the last `depth` pre-sample symbols plus T fresh draws
    const std::size_t start = history.size() - depth;
    for (long i = 0; i < T - depth; ++i) step();
    std::vector<Symbol> out(history.begin() + start, history.end());
    return SymbolSequence(model.tree.alphabet(), std::move(out));
}

MarkovTransitions empirical_transitions(const SymbolSequence& sample, int k) {
    if (k < 1) throw std::invalid_argument("empirical_transitions: k must be >= 1");
    if (sample.size() <= k) throw std::invalid_argument("sample shorter than k+1");
    const Alphabet alphabet = sample.alphabet;
    const int N = alphabet.size;
    MarkovTransitions t(alphabet, k);
    const std::uint32_t S = t.num_states();

    std::vector<long> counts(static_cast<std::size_t>(S) * N, 0);
    const std::uint64_t drop = S / N;
    std::uint32_t state = 0;
    for (long i = 0; i < k; ++i) state = static_cast<std::uint32_t>(state * N + sample.symbols[i]);
    for (long i = k; i < sample.size(); ++i) {
        counts[static_cast<std::size_t>(state) * N + sample.symbols[i]]++;
        state = static_cast<std::uint32_t>((state % drop) * N + sample.symbols[i]);
    }

    for (std::uint32_t w = 0; w < S; ++w) {
        long total = 0;
        for (int a = 0; a < N; ++a) total += counts[static_cast<std::size_t>(w) * N + a];
        for (int a = 0; a < N; ++a) {
            t.row(w)[a] = total > 0
                              ? static_cast<double>(counts[static_cast<std::size_t>(w) * N + a]) / total
                              : 1.0 / N;
        }
    }
    return t;
}

double vlmc_conditional_loglik(const ContextTree& tree, const SymbolSequence& sample) {
    const int depth = tree.depth();
    if (sample.size() < depth) throw std::invalid_argument("sample shorter than tree depth");
    double ll = 0.0;
    std::span<const Symbol> x(sample.symbols);
    for (long t = depth; t < sample.size(); ++t) {
        const ContextString& ctx = tree.lookup_context(x.subspan(0, t).last(depth));
        double p = tree.row(ctx)[x[t]];
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        ll += std::log(p);
    }
    return ll;
}

}  // namespace cvlmc
