#include "cvlmc/bic_ctm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "cvlmc/rng.hpp"

namespace cvlmc {

WindowCounts::WindowCounts(const SymbolSequence& sample, int max_depth, long m)
    : alphabet_(sample.alphabet), max_depth_(max_depth), m_(m) {
    if (max_depth < 0) throw std::invalid_argument("window counts: negative depth");
    if (m > sample.size()) throw std::invalid_argument("window counts: m exceeds the sample length");
    if (m <= max_depth) throw std::invalid_argument("window counts: m must exceed the depth bound");
    const int N = alphabet_.size;
    nodes_.push_back(Node{std::vector<long>(N, 0), std::vector<int>(N, -1)});
    const auto& x = sample.symbols;
    // 1-based successor positions i with D < i <= m
    for (long i = max_depth + 1; i <= m; ++i) {
        const Symbol a = x[i - 1];
        int node = 0;
        nodes_[0].next[a]++;
        for (int j = 1; j <= max_depth; ++j) {
            const Symbol older = x[i - 1 - j];
            int& c = nodes_[node].children[older];
            if (c < 0) {
                c = static_cast<int>(nodes_.size());
                nodes_.push_back(Node{std::vector<long>(N, 0), std::vector<int>(N, -1)});
            }
            node = c;
            nodes_[node].next[a]++;
        }
    }
}

int WindowCounts::find(const ContextString& w) const {
    if (w.length() > max_depth_) return -1;
    int node = 0;
    const auto& syms = w.symbols();
    for (auto it = syms.rbegin(); it != syms.rend(); ++it) {
        node = nodes_[node].children[*it];
        if (node < 0) return -1;
    }
    return node;
}

long WindowCounts::count(const ContextString& w) const {
    const int node = find(w);
    return node < 0 ? 0 : node_total(node);
}

long WindowCounts::count(const ContextString& w, Symbol next) const {
    const int node = find(w);
    return node < 0 ? 0 : nodes_[node].next[next];
}

int WindowCounts::child(int node, Symbol older) const { return nodes_[node].children[older]; }

int WindowCounts::num_nodes() const { return static_cast<int>(nodes_.size()); }

long WindowCounts::node_total(int node) const {
    long total = 0;
    for (long c : nodes_[node].next) total += c;
    return total;
}

long WindowCounts::node_next(int node, Symbol a) const { return nodes_[node].next[a]; }

namespace {

double node_ml(const WindowCounts& counts, int node) {
    if (node < 0) return 0.0;
    const long total = counts.node_total(node);
    if (total == 0) return 0.0;
    double ml = 0.0;
    for (int a = 0; a < counts.alphabet().size; ++a) {
        const long n = counts.node_next(node, static_cast<Symbol>(a));
        if (n > 0) ml += n * std::log(static_cast<double>(n) / total);
    }
    return ml;
}

double penalty(const WindowCounts& counts) {
    return 0.5 * (counts.alphabet().size - 1) * std::log(static_cast<double>(counts.m()));
}

}  // namespace

double ml_term(const WindowCounts& counts, const ContextString& w) {
    if (w.length() > counts.max_depth())
        throw std::invalid_argument("ml_term: string longer than the counted depth");
    int node = 0;
    const auto& syms = w.symbols();
    for (auto it = syms.rbegin(); it != syms.rend(); ++it) {
        node = counts.child(node, *it);
        if (node < 0) return 0.0;  // unseen string: the term is 1
    }
    return node_ml(counts, node);
}

double penalized_term(const WindowCounts& counts, const ContextString& w) {
    return ml_term(counts, w) - penalty(counts);
}

void BootstrapConfig::check() const {
    if (D < 1) throw std::invalid_argument("bootstrap config: depth bound must be >= 1");
    if (m <= D) throw std::invalid_argument("bootstrap config: m must exceed the depth bound");
}

SymbolSequence bootstrap_sample(const MarkovTransitions& a_star,
                                const std::vector<double>& pi_star, long m,
                                std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("bootstrap sample length must be >= 1");
    if (a_star.max_row_sum_error() > 1e-8)
        throw std::invalid_argument("bootstrap: transition rows are not stochastic");
    if (pi_star.size() != a_star.num_states())
        throw std::invalid_argument("bootstrap: pi has the wrong size");
    const Alphabet alphabet = a_star.alphabet();
    const int N = alphabet.size;
    Rng rng(seed);
    std::vector<Symbol> out;
    out.reserve(m);
    BlockState state = static_cast<BlockState>(rng.categorical(pi_star));
    out.push_back(block_newest(state, alphabet));
    for (long i = 1; i < m; ++i) {
        std::span<const double> row(a_star.row(state), static_cast<std::size_t>(N));
        const Symbol a = static_cast<Symbol>(rng.categorical(row));
        state = block_successor(state, a, alphabet, a_star.k());
        out.push_back(a);
    }
    return SymbolSequence(alphabet, std::move(out));
}

namespace {

struct CtmNode {
    double value = 0.0;  // log V
    int flag = 0;        // chi
};

// Post-order CTM pass over the observed trie.
void ctm_visit(const WindowCounts& wc, int node, int depth, double pen,
               std::vector<CtmNode>& out) {
    const int N = wc.alphabet().size;
    const double p_tilde = node_ml(wc, node) - pen;
    if (depth == wc.max_depth()) {
        out[node] = CtmNode{p_tilde, 0};
        return;
    }
    double child_sum = 0.0;
    bool has_child = false;
    for (int a = 0; a < N; ++a) {
        const int c = wc.child(node, static_cast<Symbol>(a));
        if (c < 0) continue;
        ctm_visit(wc, c, depth + 1, pen, out);
        child_sum += out[c].value;
        has_child = true;
    }
    if (has_child && child_sum > p_tilde) out[node] = CtmNode{child_sum, 1};
    else out[node] = CtmNode{p_tilde, 0};
}

void collect_contexts(const WindowCounts& wc, const std::vector<CtmNode>& nodes, int node,
                      const ContextString& word, std::vector<ContextString>& out) {
    if (nodes[node].flag == 0) {
        out.push_back(word);
        return;
    }
    for (int a = 0; a < wc.alphabet().size; ++a) {
        const int c = wc.child(node, static_cast<Symbol>(a));
        if (c < 0) continue;
        collect_contexts(wc, nodes, c, word.extend_older(static_cast<Symbol>(a)), out);
    }
}

void collect_node_maps(const WindowCounts& wc, const std::vector<CtmNode>& nodes, int node,
                       const ContextString& word, std::map<ContextString, double>& values,
                       std::map<ContextString, int>& flags) {
    values.emplace(word, nodes[node].value);
    flags.emplace(word, nodes[node].flag);
    for (int a = 0; a < wc.alphabet().size; ++a) {
        const int c = wc.child(node, static_cast<Symbol>(a));
        if (c < 0) continue;
        collect_node_maps(wc, nodes, c, word.extend_older(static_cast<Symbol>(a)), values, flags);
    }
}

ContextTree tree_with_empirical_rows(const WindowCounts& wc, std::vector<ContextString> contexts) {
    ContextTree tree(wc.alphabet(), std::move(contexts));
    for (const auto& w : tree.contexts()) {
        const long total = wc.count(w);
        if (total <= 0) continue;
        std::vector<double> row(wc.alphabet().size, 0.0);
        for (int a = 0; a < wc.alphabet().size; ++a)
            row[a] = static_cast<double>(wc.count(w, static_cast<Symbol>(a))) / total;
        tree.set_row(w, std::move(row));
    }
    return tree;
}

}  // namespace

PrunedTreeResult ctm_prune(const SymbolSequence& sample, int D, long m) {
    if (D < 1) throw std::invalid_argument("ctm_prune: depth bound must be >= 1");
    WindowCounts wc(sample, D, m);
    std::vector<CtmNode> nodes(wc.num_nodes());
    ctm_visit(wc, 0, 0, penalty(wc), nodes);

    const ContextString root(wc.alphabet(), {});
    std::vector<ContextString> contexts;
    collect_contexts(wc, nodes, 0, root, contexts);

    PrunedTreeResult out{tree_with_empirical_rows(wc, std::move(contexts)), {}, {}, -nodes[0].value};
    collect_node_maps(wc, nodes, 0, root, out.node_values, out.node_flags);
    return out;
}

namespace {

using TreeSet = std::vector<ContextString>;

// candidate strictly coarser: every context of `fine` extends one of `coarse`
bool strictly_coarser(const TreeSet& coarse, const TreeSet& fine) {
    if (coarse == fine) return false;
    for (const auto& wf : fine) {
        bool covered = false;
        for (const auto& wc : coarse) {
            if (is_suffix(wc, wf)) { covered = true; break; }
        }
        if (!covered) return false;
    }
    return true;
}

}  // namespace

ExhaustiveBicResult exhaustive_bic(const SymbolSequence& sample, int D, long m) {
    if (sample.alphabet.size != 2)
        throw std::invalid_argument("exhaustive_bic: oracle guarded to binary alphabets");
    if (D < 1 || D > 4)
        throw std::invalid_argument("exhaustive_bic: oracle guarded to D <= 4");
    WindowCounts wc(sample, D, m);
    const int N = wc.alphabet().size;

    // Every feasible tree: at each observed node either stop (context) or
    // split into all observed children, down to depth D. Leaf options come
    // first so equal scores resolve toward the coarser tree.
    std::function<std::vector<TreeSet>(int, const ContextString&)> enumerate =
        [&](int node, const ContextString& word) {
            std::vector<TreeSet> options;
            options.push_back(TreeSet{word});
            if (word.length() == D) return options;
            std::vector<std::vector<TreeSet>> child_options;
            for (int a = 0; a < N; ++a) {
                const int c = wc.child(node, static_cast<Symbol>(a));
                if (c < 0) continue;
                child_options.push_back(enumerate(c, word.extend_older(static_cast<Symbol>(a))));
            }
            if (child_options.empty()) return options;
            std::vector<TreeSet> combos{TreeSet{}};
            for (const auto& opts : child_options) {
                std::vector<TreeSet> grown;
                grown.reserve(combos.size() * opts.size());
                for (const auto& base : combos) {
                    for (const auto& sub : opts) {
                        TreeSet merged = base;
                        merged.insert(merged.end(), sub.begin(), sub.end());
                        grown.push_back(std::move(merged));
                    }
                }
                combos = std::move(grown);
            }
            options.insert(options.end(), combos.begin(), combos.end());
            return options;
        };

    std::vector<TreeSet> all = enumerate(0, ContextString(wc.alphabet(), {}));
    const double logm = std::log(static_cast<double>(m));

    double best_bic = 0.0;
    const TreeSet* best = nullptr;
    for (const auto& tree : all) {
        double ml = 0.0;
        for (const auto& w : tree) ml += ml_term(wc, w);
        const double bic = -ml + 0.5 * (N - 1) * static_cast<double>(tree.size()) * logm;
        if (!best || bic < best_bic - 1e-12) {
            best = &tree;
            best_bic = bic;
        } else if (bic <= best_bic + 1e-12 && strictly_coarser(tree, *best)) {
            best = &tree;
            best_bic = std::min(best_bic, bic);
        }
    }

    TreeSet sorted = *best;
    std::sort(sorted.begin(), sorted.end());
    return ExhaustiveBicResult{tree_with_empirical_rows(wc, std::move(sorted)), best_bic,
                               static_cast<long>(all.size())};
}

int default_depth(long m, Alphabet alphabet) {
    if (m < static_cast<long>(alphabet.size) * alphabet.size)
        throw std::invalid_argument("default_depth: m below |E|^2");
    const int d = static_cast<int>(std::log(static_cast<double>(m)) /
                                   (2.0 * std::log(static_cast<double>(alphabet.size))));
    return std::max(1, d);
}

}  // namespace cvlmc
