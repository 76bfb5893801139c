#include "cvlmc/context_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cvlmc {

namespace {
constexpr double kRowSumTol = 1e-12;
}

ContextTree::ContextTree(Alphabet alphabet, std::vector<ContextString> contexts)
    : alphabet_(alphabet), contexts_(std::move(contexts)) {
    for (const auto& w : contexts_) {
        if (w.alphabet() != alphabet_)
            throw std::invalid_argument("context tree: context over a different alphabet");
    }
    std::sort(contexts_.begin(), contexts_.end());
    contexts_.erase(std::unique(contexts_.begin(), contexts_.end()), contexts_.end());
    rows_.assign(contexts_.size(), std::nullopt);

    nodes_.push_back(Node{std::vector<int>(alphabet_.size, -1), -1});
    depth_ = 0;
    for (int ci = 0; ci < static_cast<int>(contexts_.size()); ++ci) {
        const auto& syms = contexts_[ci].symbols();
        depth_ = std::max(depth_, static_cast<int>(syms.size()));
        int node = 0;
        // walk from the newest symbol toward the oldest
        for (auto it = syms.rbegin(); it != syms.rend(); ++it) {
            int& child = nodes_[node].children[*it];
            if (child < 0) {
                child = static_cast<int>(nodes_.size());
                nodes_.push_back(Node{std::vector<int>(alphabet_.size, -1), -1});
            }
            node = child;
        }
        nodes_[node].context_index = ci;
    }
}

int ContextTree::index_of(const ContextString& w) const {
    auto it = std::lower_bound(contexts_.begin(), contexts_.end(), w);
    if (it == contexts_.end() || !(*it == w)) return -1;
    return static_cast<int>(it - contexts_.begin());
}

bool ContextTree::has_row(const ContextString& w) const {
    int i = index_of(w);
    return i >= 0 && rows_[i].has_value();
}

const std::vector<double>& ContextTree::row(const ContextString& w) const {
    int i = index_of(w);
    if (i < 0) throw std::invalid_argument("not a context of this tree: \"" + w.str() + "\"");
    if (!rows_[i]) throw std::runtime_error("transition row unset for context \"" + w.str() + "\"");
    return *rows_[i];
}

void ContextTree::set_row(const ContextString& w, std::vector<double> probs) {
    int i = index_of(w);
    if (i < 0) throw std::invalid_argument("not a context of this tree: \"" + w.str() + "\"");
    if (static_cast<int>(probs.size()) != alphabet_.size)
        throw std::invalid_argument("transition row has wrong size");
    double sum = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::invalid_argument("negative transition probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
        throw std::invalid_argument("transition row does not sum to 1 (sum=" + std::to_string(sum) + ")");
    rows_[i] = std::move(probs);
}

bool ContextTree::all_rows_set() const {
    return std::all_of(rows_.begin(), rows_.end(), [](const auto& r) { return r.has_value(); });
}

double ContextTree::prob(Symbol a, const ContextString& w) const {
    return row(w)[a];
}

const ContextString& ContextTree::lookup_context(std::span<const Symbol> history) const {
    int node = 0;
    if (nodes_[0].context_index >= 0) return contexts_[nodes_[0].context_index];
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        if (*it >= alphabet_.size)
            throw std::invalid_argument("history symbol outside alphabet");
        int child = nodes_[node].children[*it];
        if (child < 0)
            throw std::runtime_error("no context matches history (incomplete tree or short history)");
        node = child;
        if (nodes_[node].context_index >= 0) return contexts_[nodes_[node].context_index];
    }
    throw std::runtime_error("no context matches history (history shorter than any matching context)");
}

const ContextString& ContextTree::lookup_context(const ContextString& history) const {
    if (history.alphabet() != alphabet_)
        throw std::invalid_argument("lookup_context: alphabet mismatch");
    return lookup_context(std::span<const Symbol>(history.symbols()));
}

TreeDiagnostics validate(const ContextTree& tree) {
    TreeDiagnostics d;
    const int N = tree.alphabet().size;
    const auto& contexts = tree.contexts();

    // suffix-freeness: a trie node holding a context must have no context below it
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        for (std::size_t j = 0; j < contexts.size(); ++j) {
            if (i != j && is_suffix(contexts[i], contexts[j], /*proper=*/true)) {
                d.suffix_free = false;
                d.errors.push_back("context \"" + contexts[i].str() +
                                   "\" is a proper suffix of \"" + contexts[j].str() + "\"");
            }
        }
    }

    for (const auto& w : contexts) {
        if (!tree.has_row(w)) {
            d.all_rows_set = false;
            continue;
        }
        const auto& r = tree.row(w);
        double sum = 0.0;
        bool nonneg = true;
        for (double p : r) {
            sum += p;
            nonneg = nonneg && p >= 0.0;
        }
        if (!nonneg || std::abs(sum - 1.0) > kRowSumTol) {
            d.rows_stochastic = false;
            d.errors.push_back("non-stochastic row for context \"" + w.str() + "\"");
        }
    }

    // completeness: every semi-infinite history must reach a context.
    // Walk the trie; a subtree covers iff it holds a context or all
    // children exist and cover.
    struct Walker {
        const ContextTree& t;
        int N;
        bool covers(int node) {
            if (t.nodes_[node].context_index >= 0) return true;
            for (int a = 0; a < N; ++a) {
                int c = t.nodes_[node].children[a];
                if (c < 0 || !covers(c)) return false;
            }
            return true;
        }
    };
    d.complete = Walker{tree, N}.covers(0);

    // reducibility warning: |E| sibling contexts with equal rows could be
    // merged into their parent (Definition of a context, condition (ii))
    for (std::size_t n = 0; n < tree.nodes_.size(); ++n) {
        bool all_ctx = true;
        std::vector<int> kids;
        for (int a = 0; a < N; ++a) {
            int c = tree.nodes_[n].children[a];
            if (c < 0 || tree.nodes_[c].context_index < 0) { all_ctx = false; break; }
            kids.push_back(tree.nodes_[c].context_index);
        }
        if (!all_ctx || kids.empty()) continue;
        bool all_rows = true, equal = true;
        for (std::size_t i = 0; i < kids.size() && all_rows; ++i)
            all_rows = tree.rows_[kids[i]].has_value();
        if (!all_rows) continue;
        const auto& first = *tree.rows_[kids[0]];
        for (std::size_t i = 1; i < kids.size() && equal; ++i) {
            const auto& r = *tree.rows_[kids[i]];
            for (int a = 0; a < N; ++a)
                if (std::abs(r[a] - first[a]) > 1e-9) { equal = false; break; }
        }
        if (equal) {
            d.warnings.push_back("sibling contexts under \"" +
                                 contexts[kids[0]].suffix(contexts[kids[0]].length() - 1).str() +
                                 "\" have equal rows (tree not irreducible)");
        }
    }
    return d;
}

ContextTree full_tree(Alphabet alphabet, int L) {
    if (L < 1) throw std::invalid_argument("full_tree: order must be >= 1");
    std::uint64_t count = 1;
    for (int i = 0; i < L; ++i) {
        count *= alphabet.size;
        if (count > (1u << 22)) throw std::invalid_argument("full_tree: |E|^L too large");
    }
    std::vector<ContextString> ctxs;
    ctxs.reserve(count);
    for (std::uint64_t code = 0; code < count; ++code)
        ctxs.emplace_back(alphabet, decode_word(code, L, alphabet.size));
    return ContextTree(alphabet, std::move(ctxs));
}

ContextTree truncate(const ContextTree& tree, int k) {
    if (k < 1) throw std::invalid_argument("truncate: order must be >= 1");
    std::vector<ContextString> kept;
    std::vector<ContextString> merged;
    for (const auto& w : tree.contexts()) {
        if (w.length() <= k) kept.push_back(w);
        else merged.push_back(w.suffix(k));
    }
    std::vector<ContextString> all = kept;
    all.insert(all.end(), merged.begin(), merged.end());
    ContextTree out(tree.alphabet(), std::move(all));
    for (const auto& w : kept) {
        if (tree.has_row(w)) out.set_row(w, tree.row(w));
    }
    return out;
}

bool tree_equal(const ContextTree& a, const ContextTree& b) {
    if (a.alphabet() != b.alphabet())
        throw std::invalid_argument("tree_equal: alphabet mismatch");
    return a.contexts() == b.contexts();
}

double tree_row_distance(const ContextTree& a, const ContextTree& b) {
    if (!tree_equal(a, b)) return std::numeric_limits<double>::infinity();
    double dist = 0.0;
    for (const auto& w : a.contexts()) {
        if (a.has_row(w) != b.has_row(w)) return std::numeric_limits<double>::infinity();
        if (!a.has_row(w)) continue;
        const auto& ra = a.row(w);
        const auto& rb = b.row(w);
        for (int s = 0; s < a.alphabet().size; ++s)
            dist = std::max(dist, std::abs(ra[s] - rb[s]));
    }
    return dist;
}

InitialLaw::InitialLaw(Alphabet alphabet, std::map<ContextString, double> probs)
    : alphabet_(alphabet), probs_(std::move(probs)) {
    double sum = 0.0;
    for (const auto& [w, p] : probs_) {
        if (w.alphabet() != alphabet_)
            throw std::invalid_argument("initial law: string over a different alphabet");
        if (p < 0.0) throw std::invalid_argument("initial law: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("initial law does not sum to 1 (sum=" + std::to_string(sum) + ")");
}

double InitialLaw::prob(const ContextString& w) const {
    auto it = probs_.find(w);
    return it == probs_.end() ? 0.0 : it->second;
}

double InitialLaw::total() const {
    double sum = 0.0;
    for (const auto& [w, p] : probs_) sum += p;
    return sum;
}

InitialLaw uniform_block_law(Alphabet alphabet, int k) {
    if (k < 0) throw std::invalid_argument("uniform_block_law: negative length");
    std::uint64_t count = 1;
    for (int i = 0; i < k; ++i) count *= alphabet.size;
    std::map<ContextString, double> probs;
    const double p = 1.0 / static_cast<double>(count);
    for (std::uint64_t code = 0; code < count; ++code)
        probs.emplace(ContextString(alphabet, decode_word(code, k, alphabet.size)), p);
    return InitialLaw(alphabet, std::move(probs));
}

std::string tree_to_json(const ContextTree& tree, int indent) {
    nlohmann::json j;
    j["alphabet"] = tree.alphabet().size;
    auto& ctxs = j["contexts"] = nlohmann::json::array();
    auto& rows = j["transitions"] = nlohmann::json::array();
    for (const auto& w : tree.contexts()) {
        nlohmann::json c = nlohmann::json::array();
        for (Symbol s : w.symbols()) c.push_back(int(s));
        ctxs.push_back(std::move(c));
        if (tree.has_row(w)) rows.push_back(tree.row(w));
        else rows.push_back(nullptr);
    }
    return j.dump(indent);
}

ContextTree tree_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Alphabet alphabet(j.at("alphabet").get<int>());
    std::vector<ContextString> ctxs;
    for (const auto& c : j.at("contexts")) {
        std::vector<Symbol> syms;
        for (const auto& s : c) syms.push_back(static_cast<Symbol>(s.get<int>()));
        ctxs.emplace_back(alphabet, std::move(syms));
    }
    ContextTree tree(alphabet, ctxs);
    if (j.contains("transitions") && !j["transitions"].is_null()) {
        const auto& rows = j["transitions"];
        if (rows.size() != ctxs.size())
            throw std::invalid_argument("tree json: transitions array size mismatch");
        for (std::size_t i = 0; i < ctxs.size(); ++i) {
            if (rows[i].is_null()) continue;
            tree.set_row(ctxs[i], rows[i].get<std::vector<double>>());
        }
    }
    return tree;
}

void save_tree(const std::string& path, const ContextTree& tree) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open tree file for writing: " + path);
    out << tree_to_json(tree) << "\n";
}

ContextTree load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tree file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return tree_from_json(ss.str());
}

}  // namespace cvlmc
