#include "cvlmc/hmm_embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cvlmc {

std::string to_string(EmbedMode mode) {
    return mode == EmbedMode::Block ? "block" : "symbol";
}

EmbedMode embed_mode_from_string(const std::string& name) {
    if (name == "block") return EmbedMode::Block;
    if (name == "symbol") return EmbedMode::Symbol;
    throw std::invalid_argument("unknown embed mode: " + name);
}

std::vector<std::uint32_t> embed_observations(const SymbolSequence& z, int k, EmbedMode mode) {
    if (k < 1) throw std::invalid_argument("embed_observations: k must be >= 1");
    const long T = z.size();
    if (T < k) throw std::invalid_argument("embed_observations: sequence shorter than k");
    const int N = z.alphabet.size;
    const std::uint32_t S = block_count(z.alphabet, k);
    const std::uint64_t drop = S / N;

    std::vector<std::uint32_t> obs;
    obs.reserve(T - k + 1);
    std::uint32_t code = 0;
    for (long i = 0; i < k; ++i) code = static_cast<std::uint32_t>(code * N + z.symbols[i]);
    obs.push_back(mode == EmbedMode::Block ? code : z.symbols[k - 1]);
    for (long i = k; i < T; ++i) {
        code = static_cast<std::uint32_t>((code % drop) * N + z.symbols[i]);
        obs.push_back(mode == EmbedMode::Block ? code : z.symbols[i]);
    }
    return obs;
}

MarkovTransitions embed_tree(const ContextTree& tree, int k) {
    if (k < tree.depth()) throw std::invalid_argument("embed_tree: k below tree depth");
    if (!tree.all_rows_set()) throw std::invalid_argument("embed_tree: tree has unset rows");
    const Alphabet alphabet = tree.alphabet();
    MarkovTransitions t(alphabet, k);
    for (std::uint32_t w = 0; w < t.num_states(); ++w) {
        const ContextString block = block_to_string(w, alphabet, k);
        const ContextString& ctx = tree.lookup_context(block);
        const auto& row = tree.row(ctx);
        for (int a = 0; a < alphabet.size; ++a) t.row(w)[a] = row[a];
    }
    return t;
}

EmissionMatrix embed_emissions_symbol(const NoiseSpec& noise, Alphabet alphabet) {
    return emission_matrix(noise, alphabet);
}

std::vector<double> embed_emissions_block(const NoiseSpec& noise, Alphabet alphabet, int k) {
    if (k > 10) throw std::invalid_argument("block emissions limited to k <= 10");
    const EmissionMatrix b = emission_matrix(noise, alphabet);
    const std::uint32_t S = block_count(alphabet, k);
    std::vector<double> out(static_cast<std::size_t>(S) * S);
    for (std::uint32_t w = 0; w < S; ++w) {
        for (std::uint32_t z = 0; z < S; ++z) {
            double p = 1.0;
            for (int i = 0; i < k; ++i)
                p *= b(block_symbol(w, i, alphabet, k), block_symbol(z, i, alphabet, k));
            out[static_cast<std::size_t>(w) * S + z] = p;
        }
    }
    return out;
}

HmmParams::HmmParams(EmbedMode m, int k_, Alphabet alphabet_)
    : mode(m), k(k_), alphabet(alphabet_), a_star(alphabet_, k_) {
    pi_star.assign(a_star.num_states(), 1.0 / a_star.num_states());
}

double HmmParams::emission(BlockState state, std::uint32_t obs) const {
    if (mode == EmbedMode::Symbol)
        return b_symbol(block_newest(state, alphabet), static_cast<Symbol>(obs));
    return b_block[static_cast<std::size_t>(state) * num_states() + obs];
}

double HmmParams::max_invariant_error() const {
    double err = a_star.max_row_sum_error();
    double pisum = 0.0;
    for (double p : pi_star) pisum += p;
    err = std::max(err, std::abs(pisum - 1.0));
    const std::uint32_t S = num_states();
    if (mode == EmbedMode::Symbol) {
        for (int a = 0; a < alphabet.size; ++a) {
            double sum = 0.0;
            for (int z = 0; z < alphabet.size; ++z) sum += b_symbol(Symbol(a), Symbol(z));
            err = std::max(err, std::abs(sum - 1.0));
        }
    } else {
        for (std::uint32_t w = 0; w < S; ++w) {
            double sum = 0.0;
            for (std::uint32_t z = 0; z < S; ++z) sum += b_block[static_cast<std::size_t>(w) * S + z];
            err = std::max(err, std::abs(sum - 1.0));
        }
    }
    return err;
}

InitialLaw stationary_block_law(const ContextTree& tree, int k) {
    MarkovTransitions t = embed_tree(tree, k);
    std::vector<double> pi = stationary_distribution(t);
    std::map<ContextString, double> probs;
    for (std::uint32_t w = 0; w < t.num_states(); ++w)
        probs.emplace(block_to_string(w, tree.alphabet(), k), pi[w]);
    // renormalize away the power iteration residual so the law invariant holds
    double sum = 0.0;
    for (auto& [_, p] : probs) sum += p;
    for (auto& [_, p] : probs) p /= sum;
    return InitialLaw(tree.alphabet(), std::move(probs));
}

std::string hmm_params_to_json(const HmmParams& params, int indent) {
    nlohmann::json j;
    j["mode"] = to_string(params.mode);
    j["k"] = params.k;
    j["alphabet"] = params.alphabet.size;
    j["pi_star"] = params.pi_star;
    auto& rows = j["a_star"] = nlohmann::json::array();
    const std::uint32_t S = params.num_states();
    for (std::uint32_t w = 0; w < S; ++w) {
        nlohmann::json row = nlohmann::json::array();
        for (int a = 0; a < params.alphabet.size; ++a) {
            BlockState to = block_successor(w, static_cast<Symbol>(a), params.alphabet, params.k);
            row.push_back({to, params.a_star.row(w)[a]});
        }
        rows.push_back(std::move(row));
    }
    if (params.mode == EmbedMode::Symbol) j["b_symbol"] = params.b_symbol.data;
    else j["b_block"] = params.b_block;
    return j.dump(indent);
}

HmmParams hmm_params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Alphabet alphabet(j.at("alphabet").get<int>());
    HmmParams params(embed_mode_from_string(j.at("mode").get<std::string>()),
                     j.at("k").get<int>(), alphabet);
    params.pi_star = j.at("pi_star").get<std::vector<double>>();
    if (params.pi_star.size() != params.num_states())
        throw std::invalid_argument("hmm params json: pi_star size mismatch");
    const auto& rows = j.at("a_star");
    if (rows.size() != params.num_states())
        throw std::invalid_argument("hmm params json: a_star size mismatch");
    for (std::uint32_t w = 0; w < params.num_states(); ++w) {
        for (const auto& entry : rows[w]) {
            BlockState to = entry.at(0).get<BlockState>();
            double p = entry.at(1).get<double>();
            for (int a = 0; a < alphabet.size; ++a) {
                if (block_successor(w, static_cast<Symbol>(a), alphabet, params.k) == to)
                    params.a_star.row(w)[a] = p;
            }
        }
    }
    if (params.mode == EmbedMode::Symbol) {
        params.b_symbol = EmissionMatrix{alphabet, j.at("b_symbol").get<std::vector<double>>()};
        if (params.b_symbol.data.size() != std::size_t(alphabet.size) * alphabet.size)
            throw std::invalid_argument("hmm params json: b_symbol size mismatch");
    } else {
        params.b_block = j.at("b_block").get<std::vector<double>>();
        if (params.b_block.size() != std::size_t(params.num_states()) * params.num_states())
            throw std::invalid_argument("hmm params json: b_block size mismatch");
    }
    return params;
}

void save_hmm_params(const std::string& path, const HmmParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open params file for writing: " + path);
    out << hmm_params_to_json(params) << "\n";
}

HmmParams load_hmm_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open params file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return hmm_params_from_json(ss.str());
}

}  // namespace cvlmc
