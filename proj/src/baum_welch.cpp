#include "cvlmc/baum_welch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>

#include "cvlmc/parallel.hpp"
#include "cvlmc/vlmc.hpp"
#include "json.hpp"

namespace cvlmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_params(const HmmParams& p, const SymbolSequence& z) {
    if (p.alphabet != z.alphabet)
        throw std::invalid_argument("hmm params and sequence use different alphabets");
    if (z.size() < p.k) throw std::invalid_argument("sequence shorter than the block length k");
    if (p.max_invariant_error() > 1e-8)
        throw std::invalid_argument("hmm params violate stochasticity invariants");
}

// Emission vector for one step: e[w] = P(observation at step r | state w).
// In SYMBOL mode the first step carries the whole first block, which is
// what makes the forward likelihood exact for the contaminated model.
void step_emissions(const HmmParams& p, const std::vector<std::uint32_t>& obs,
                    const SymbolSequence& z, long r, std::vector<double>& e) {
    const std::uint32_t S = p.num_states();
    if (p.mode == EmbedMode::Block) {
        const std::uint32_t o = obs[r];
        for (std::uint32_t w = 0; w < S; ++w)
            e[w] = p.b_block[std::size_t(w) * S + o];
        return;
    }
    if (r == 0) {
        for (std::uint32_t w = 0; w < S; ++w) {
            double prod = 1.0;
            for (int i = 0; i < p.k; ++i)
                prod *= p.b_symbol(block_symbol(w, i, p.alphabet, p.k), z.symbols[i]);
            e[w] = prod;
        }
        return;
    }
    const Symbol o = static_cast<Symbol>(obs[r]);
    for (std::uint32_t w = 0; w < S; ++w)
        e[w] = p.b_symbol(block_newest(w, p.alphabet), o);
}

}  // namespace

ForwardResult forward(const HmmParams& params, const SymbolSequence& z) {
    check_params(params, z);
    const std::vector<std::uint32_t> obs = embed_observations(z, params.k, params.mode);
    const long R = static_cast<long>(obs.size());
    const std::uint32_t S = params.num_states();
    const int N = params.alphabet.size;
    const std::uint32_t drop = S / N;

    ForwardResult out;
    out.steps = R;
    out.num_states = S;
    out.alpha.assign(std::size_t(R) * S, 0.0);
    out.scaling.assign(R, 0.0);

    std::vector<double> e(S);
    step_emissions(params, obs, z, 0, e);
    double c = 0.0;
    for (std::uint32_t w = 0; w < S; ++w) {
        double v = params.pi_star[w] * e[w];
        out.alpha[w] = v;
        c += v;
    }
    if (c <= 0.0) throw std::runtime_error("observation impossible under parameters at step 1");
    for (std::uint32_t w = 0; w < S; ++w) out.alpha[w] /= c;
    out.scaling[0] = c;
    out.log_likelihood = std::log(c);

    for (long r = 1; r < R; ++r) {
        step_emissions(params, obs, z, r, e);
        double* cur = out.alpha.data() + std::size_t(r) * S;
        const double* prev = out.alpha.data() + std::size_t(r - 1) * S;
        for (std::uint32_t w = 0; w < S; ++w) {
            const double* arow = params.a_star.row(w);
            const std::uint32_t base = (w % drop) * N;
            const double aw = prev[w];
            for (int a = 0; a < N; ++a) cur[base + a] += aw * arow[a];
        }
        c = 0.0;
        for (std::uint32_t w = 0; w < S; ++w) {
            cur[w] *= e[w];
            c += cur[w];
        }
        if (c <= 0.0)
            throw std::runtime_error("observation impossible under parameters at step " +
                                     std::to_string(r + 1));
        for (std::uint32_t w = 0; w < S; ++w) cur[w] /= c;
        out.scaling[r] = c;
        out.log_likelihood += std::log(c);
    }
    return out;
}

std::vector<double> backward(const HmmParams& params, const SymbolSequence& z,
                             const std::vector<double>& scaling) {
    check_params(params, z);
    const std::vector<std::uint32_t> obs = embed_observations(z, params.k, params.mode);
    const long R = static_cast<long>(obs.size());
    if (static_cast<long>(scaling.size()) != R)
        throw std::invalid_argument("backward: scaling vector does not match the observation length");
    const std::uint32_t S = params.num_states();
    const int N = params.alphabet.size;
    const std::uint32_t drop = S / N;

    std::vector<double> beta(std::size_t(R) * S, 0.0);
    for (std::uint32_t w = 0; w < S; ++w) beta[std::size_t(R - 1) * S + w] = 1.0;
    std::vector<double> e(S);
    for (long r = R - 2; r >= 0; --r) {
        step_emissions(params, obs, z, r + 1, e);
        const double* next = beta.data() + std::size_t(r + 1) * S;
        double* cur = beta.data() + std::size_t(r) * S;
        const double invc = 1.0 / scaling[r + 1];
        for (std::uint32_t w = 0; w < S; ++w) {
            const double* arow = params.a_star.row(w);
            const std::uint32_t base = (w % drop) * N;
            double s = 0.0;
            for (int a = 0; a < N; ++a) {
                const std::uint32_t v = base + a;
                s += arow[a] * e[v] * next[v];
            }
            cur[w] = s * invc;
        }
    }
    return beta;
}

namespace {

struct EmAccumulators {
    std::vector<double> pi;
    std::vector<double> a_num;   // S x N
    std::vector<double> a_den;   // S
    std::vector<double> b_num;   // N x N (symbol) or S x S (block)
    std::vector<double> b_den;   // N (symbol) or S (block)
};

// One fused E+M pass. Computes the log-likelihood of `params`, the
// updated parameters, and optionally the full posterior tables.
EmStepResult em_pass(const HmmParams& params, const SymbolSequence& z, bool want_tables) {
    const std::vector<std::uint32_t> obs = embed_observations(z, params.k, params.mode);
    const long R = static_cast<long>(obs.size());
    const std::uint32_t S = params.num_states();
    const int N = params.alphabet.size;
    const std::uint32_t drop = S / N;

    ForwardResult fw = forward(params, z);

    EmAccumulators acc;
    acc.pi.assign(S, 0.0);
    acc.a_num.assign(std::size_t(S) * N, 0.0);
    acc.a_den.assign(S, 0.0);
    if (params.mode == EmbedMode::Symbol) {
        acc.b_num.assign(std::size_t(N) * N, 0.0);
        acc.b_den.assign(N, 0.0);
    } else {
        acc.b_num.assign(std::size_t(S) * S, 0.0);
        acc.b_den.assign(S, 0.0);
    }

    EmStepResult out{params, fw.log_likelihood, {}, {}};
    PosteriorTables& tables = out.tables;
    if (want_tables) {
        tables.steps = R;
        tables.num_states = S;
        tables.alphabet_size = N;
        tables.gamma.assign(std::size_t(R) * S, 0.0);
        tables.delta.assign(std::size_t(std::max<long>(R - 1, 0)) * S * N, 0.0);
        tables.scaling = fw.scaling;
    }

    std::vector<double> gamma(S);
    auto add_emission_counts = [&](long r, const std::vector<double>& g) {
        if (params.mode == EmbedMode::Block) {
            const std::uint32_t o = obs[r];
            for (std::uint32_t w = 0; w < S; ++w) {
                acc.b_num[std::size_t(w) * S + o] += g[w];
                acc.b_den[w] += g[w];
            }
            return;
        }
        if (r == 0) {
            // the first block emits all of z_1..z_k
            for (std::uint32_t w = 0; w < S; ++w) {
                for (int i = 0; i < params.k; ++i) {
                    const Symbol a = block_symbol(w, i, params.alphabet, params.k);
                    acc.b_num[std::size_t(a) * N + z.symbols[i]] += g[w];
                    acc.b_den[a] += g[w];
                }
            }
            return;
        }
        const Symbol o = static_cast<Symbol>(obs[r]);
        for (std::uint32_t w = 0; w < S; ++w) {
            const Symbol a = block_newest(w, params.alphabet);
            acc.b_num[std::size_t(a) * N + o] += g[w];
            acc.b_den[a] += g[w];
        }
    };

    // last step: beta = 1, gamma = alpha
    std::vector<double> beta_next(S, 1.0), beta_cur(S, 0.0), e(S);
    for (std::uint32_t w = 0; w < S; ++w) gamma[w] = fw.at(R - 1, w);
    add_emission_counts(R - 1, gamma);
    if (want_tables)
        std::copy(gamma.begin(), gamma.end(), tables.gamma.begin() + std::size_t(R - 1) * S);
    if (R == 1) acc.pi = gamma;

    for (long r = R - 2; r >= 0; --r) {
        step_emissions(params, obs, z, r + 1, e);
        const double invc = 1.0 / fw.scaling[r + 1];
        const double* alphar = fw.alpha.data() + std::size_t(r) * S;
        for (std::uint32_t w = 0; w < S; ++w) {
            const double* arow = params.a_star.row(w);
            const std::uint32_t base = (w % drop) * N;
            const double aw = alphar[w];
            double s = 0.0;
            for (int a = 0; a < N; ++a) {
                const std::uint32_t v = base + a;
                const double term = arow[a] * e[v] * beta_next[v];
                s += term;
                const double d = aw * term * invc;  // delta_r(w, shift(w,a))
                acc.a_num[std::size_t(w) * N + a] += d;
                if (want_tables)
                    tables.delta[(std::size_t(r) * S + w) * N + a] = d;
            }
            beta_cur[w] = s * invc;
            const double g = aw * beta_cur[w];
            gamma[w] = g;
            acc.a_den[w] += g;
        }
        add_emission_counts(r, gamma);
        if (want_tables)
            std::copy(gamma.begin(), gamma.end(), tables.gamma.begin() + std::size_t(r) * S);
        if (r == 0) acc.pi = gamma;
        std::swap(beta_next, beta_cur);
    }

    // M step
    HmmParams& upd = out.params;
    upd.pi_star = acc.pi;
    for (std::uint32_t w = 0; w < S; ++w) {
        if (acc.a_den[w] <= 0.0) {
            out.frozen_rows.push_back(w);
            continue;
        }
        for (int a = 0; a < N; ++a)
            upd.a_star.row(w)[a] = acc.a_num[std::size_t(w) * N + a] / acc.a_den[w];
    }
    if (params.mode == EmbedMode::Symbol) {
        for (int a = 0; a < N; ++a) {
            if (acc.b_den[a] <= 0.0) continue;
            for (int o = 0; o < N; ++o)
                upd.b_symbol.at(Symbol(a), Symbol(o)) = acc.b_num[std::size_t(a) * N + o] / acc.b_den[a];
        }
    } else {
        for (std::uint32_t w = 0; w < S; ++w) {
            if (acc.b_den[w] <= 0.0) continue;
            for (std::uint32_t o = 0; o < S; ++o)
                upd.b_block[std::size_t(w) * S + o] = acc.b_num[std::size_t(w) * S + o] / acc.b_den[w];
        }
    }
    return out;
}

}  // namespace

EmStepResult em_step(const HmmParams& params, const SymbolSequence& z) {
    return em_pass(params, z, /*want_tables=*/true);
}

std::vector<double> default_noise_grid() {
    std::vector<double> grid;
    grid.reserve(99);
    for (int j = 1; j <= 99; ++j) grid.push_back(j / 100.0);
    return grid;
}

void FitConfig::check() const {
    if (noise_grid.empty()) throw std::invalid_argument("fit: empty noise grid");
    for (double eps : noise_grid)
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("fit: grid values must lie in the open interval (0,1)");
    if (max_iter < 1) throw std::invalid_argument("fit: max_iter must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("fit: rel_tol must be positive");
    if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
}

namespace {

NoiseSpec grid_noise(NoiseRegime regime, Alphabet alphabet, double eps) {
    return regime == NoiseRegime::Sum ? NoiseSpec::sum(alphabet, eps)
                                      : NoiseSpec::product(alphabet, eps);
}

HmmParams initial_params(const MarkovTransitions& a0, const FitConfig& cfg, Alphabet alphabet,
                         double eps) {
    HmmParams p(cfg.mode, cfg.k, alphabet);
    p.a_star = a0;
    const NoiseSpec noise = grid_noise(cfg.regime, alphabet, eps);
    if (cfg.mode == EmbedMode::Symbol) p.b_symbol = embed_emissions_symbol(noise, alphabet);
    else p.b_block = embed_emissions_block(noise, alphabet, cfg.k);
    return p;
}

struct RunOutcome {
    RestartRecord record;
    std::optional<HmmParams> params;
    std::vector<double> trace;
    long frozen_events = 0;
};

std::vector<double> implied_noise(const HmmParams& params, NoiseRegime regime) {
    const int N = params.alphabet.size;
    // effective per-symbol emission matrix
    std::vector<double> b(std::size_t(N) * N, 0.0);
    if (params.mode == EmbedMode::Symbol) {
        b = params.b_symbol.data;
    } else {
        const std::uint32_t S = params.num_states();
        std::vector<double> counts(N, 0.0);
        for (std::uint32_t w = 0; w < S; ++w) {
            const int a = block_newest(w, params.alphabet);
            counts[a] += 1.0;
            for (std::uint32_t o = 0; o < S; ++o)
                b[std::size_t(a) * N + block_newest(o, params.alphabet)] +=
                    params.b_block[std::size_t(w) * S + o];
        }
        for (int a = 0; a < N; ++a)
            for (int z = 0; z < N; ++z) b[std::size_t(a) * N + z] /= counts[a];
    }
    std::vector<double> implied(N, 0.0);
    if (regime == NoiseRegime::Sum) {
        for (int i = 0; i < N; ++i) {
            for (int a = 0; a < N; ++a) implied[i] += b[std::size_t(a) * N + (a + i) % N];
            implied[i] /= N;
        }
    } else if (N == 2) {
        implied[0] = b[std::size_t(1) * N + 0];
        implied[1] = b[std::size_t(1) * N + 1];
    }
    return implied;
}

}  // namespace

FitResult fit(const SymbolSequence& z, const FitConfig& cfg) {
    cfg.check();
    if (z.size() <= cfg.k) throw std::invalid_argument("fit: sequence shorter than k+1");
    const Alphabet alphabet = z.alphabet;
    const MarkovTransitions a0 = empirical_transitions(z, cfg.k);

    std::vector<RunOutcome> runs(cfg.noise_grid.size());
    parallel_for(cfg.noise_grid.size(), cfg.threads, [&](std::size_t i) {
        const double eps = cfg.noise_grid[i];
        RunOutcome& run = runs[i];
        run.record.eps = eps;
        try {
            HmmParams params = initial_params(a0, cfg, alphabet, eps);
            double prev_ll = kNegInf;
            int it = 0;
            bool converged = false;
            while (it < cfg.max_iter) {
                EmStepResult step = em_pass(params, z, /*want_tables=*/false);
                ++it;
                run.trace.push_back(step.log_likelihood);
                run.frozen_events += static_cast<long>(step.frozen_rows.size());
                params = std::move(step.params);
                if (prev_ll != kNegInf &&
                    std::abs(step.log_likelihood - prev_ll) <
                        cfg.rel_tol * std::abs(step.log_likelihood)) {
                    converged = true;
                    break;
                }
                prev_ll = step.log_likelihood;
            }
            const double final_ll = forward(params, z).log_likelihood;
            run.trace.push_back(final_ll);
            run.record.loglik = final_ll;
            run.record.iterations = it;
            run.record.converged = converged;
            run.params = std::move(params);
        } catch (const std::exception& err) {
            run.record.error = err.what();
            run.record.loglik = kNegInf;
        }
    });

    int best = -1;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (runs[i].record.error.empty() &&
            (best < 0 || runs[i].record.loglik > runs[best].record.loglik))
            best = static_cast<int>(i);
    }
    if (best < 0) throw std::runtime_error("fit: every restart failed");

    FitResult result{std::move(*runs[best].params)};
    result.eps_hat = cfg.noise_grid[best];
    result.loglik = runs[best].record.loglik;
    result.trace = std::move(runs[best].trace);
    for (auto& run : runs) {
        result.frozen_row_events += run.frozen_events;
        result.restart_table.push_back(std::move(run.record));
    }
    result.implied_noise_weights = implied_noise(result.params, cfg.regime);
    return result;
}

std::string fit_result_to_json(const FitResult& result, int indent) {
    nlohmann::json j;
    j["eps_hat"] = result.eps_hat;
    j["loglik"] = result.loglik;
    j["trace"] = result.trace;
    j["implied_noise_weights"] = result.implied_noise_weights;
    j["frozen_row_events"] = result.frozen_row_events;
    auto& table = j["restart_table"] = nlohmann::json::array();
    for (const auto& r : result.restart_table) {
        table.push_back({{"eps", r.eps},
                         {"loglik", std::isfinite(r.loglik) ? nlohmann::json(r.loglik) : nlohmann::json()},
                         {"iterations", r.iterations},
                         {"converged", r.converged},
                         {"error", r.error}});
    }
    j["params"] = nlohmann::json::parse(hmm_params_to_json(result.params, 0));
    return j.dump(indent);
}

void save_fit_result(const std::string& path, const FitResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open fit result file for writing: " + path);
    out << fit_result_to_json(result) << "\n";
}

ViterbiResult viterbi(const HmmParams& params, const SymbolSequence& z) {
    check_params(params, z);
    const std::vector<std::uint32_t> obs = embed_observations(z, params.k, params.mode);
    const long R = static_cast<long>(obs.size());
    const std::uint32_t S = params.num_states();
    const int N = params.alphabet.size;
    const std::uint32_t drop = S / N;

    std::vector<double> score(S), next(S), e(S);
    std::vector<std::int32_t> back(std::size_t(std::max<long>(R - 1, 0)) * S, -1);

    step_emissions(params, obs, z, 0, e);
    bool any = false;
    for (std::uint32_t w = 0; w < S; ++w) {
        score[w] = (params.pi_star[w] > 0.0 && e[w] > 0.0)
                       ? std::log(params.pi_star[w]) + std::log(e[w])
                       : kNegInf;
        any = any || score[w] != kNegInf;
    }
    if (!any) throw std::runtime_error("viterbi: observation impossible at step 1");

    for (long r = 1; r < R; ++r) {
        step_emissions(params, obs, z, r, e);
        std::fill(next.begin(), next.end(), kNegInf);
        std::int32_t* backr = back.data() + std::size_t(r - 1) * S;
        for (std::uint32_t w = 0; w < S; ++w) {
            if (score[w] == kNegInf) continue;
            const double* arow = params.a_star.row(w);
            const std::uint32_t base = (w % drop) * N;
            for (int a = 0; a < N; ++a) {
                if (arow[a] <= 0.0) continue;
                const std::uint32_t v = base + a;
                const double cand = score[w] + std::log(arow[a]);
                if (cand > next[v]) {  // strict: earlier (lower) w wins ties
                    next[v] = cand;
                    backr[v] = static_cast<std::int32_t>(w);
                }
            }
        }
        any = false;
        for (std::uint32_t v = 0; v < S; ++v) {
            if (next[v] != kNegInf && e[v] > 0.0) {
                next[v] += std::log(e[v]);
                any = true;
            } else {
                next[v] = kNegInf;
            }
        }
        if (!any)
            throw std::runtime_error("viterbi: observation impossible at step " + std::to_string(r + 1));
        score.swap(next);
    }

    std::uint32_t best = 0;
    for (std::uint32_t v = 1; v < S; ++v)
        if (score[v] > score[best]) best = v;

    ViterbiResult out;
    out.log_joint = score[best];
    out.states.assign(R, 0);
    out.states[R - 1] = best;
    for (long r = R - 2; r >= 0; --r)
        out.states[r] = static_cast<std::uint32_t>(back[std::size_t(r) * S + out.states[r + 1]]);

    out.symbols.reserve(z.size());
    for (int i = 0; i < params.k; ++i)
        out.symbols.push_back(block_symbol(out.states[0], i, params.alphabet, params.k));
    for (long r = 1; r < R; ++r)
        out.symbols.push_back(block_newest(out.states[r], params.alphabet));
    return out;
}

}  // namespace cvlmc
