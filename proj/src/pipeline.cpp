#include "cvlmc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvlmc/parallel.hpp"
#include "cvlmc/rng.hpp"
#include "json.hpp"

namespace cvlmc {

std::vector<long> block_occupancy(const SymbolSequence& sample, int k) {
    const int N = sample.alphabet.size;
    const std::uint32_t S = block_count(sample.alphabet, k);
    std::vector<long> counts(S, 0);
    if (sample.size() <= k) return counts;
    const std::uint64_t drop = S / N;
    std::uint32_t state = 0;
    for (long i = 0; i < k; ++i) state = static_cast<std::uint32_t>(state * N + sample.symbols[i]);
    for (long i = k; i < sample.size(); ++i) {
        counts[state]++;
        state = static_cast<std::uint32_t>((state % drop) * N + sample.symbols[i]);
    }
    return counts;
}

std::vector<double> aggregate_row(const MarkovTransitions& a_star,
                                  const std::vector<long>& block_counts,
                                  const ContextString& w) {
    const Alphabet alphabet = a_star.alphabet();
    const int N = alphabet.size;
    const int k = a_star.k();
    if (w.length() > k) throw std::invalid_argument("aggregate_row: context longer than k");
    const std::uint32_t S = a_star.num_states();
    if (block_counts.size() != S) throw std::invalid_argument("aggregate_row: count vector size mismatch");

    const std::uint64_t suffix_code = encode_word(w.symbols(), N);
    std::uint64_t modulus = 1;
    for (int i = 0; i < w.length(); ++i) modulus *= N;

    std::vector<double> row(N, 0.0);
    double weight = 0.0;
    for (std::uint32_t s = 0; s < S; ++s) {
        if (s % modulus != suffix_code) continue;
        const double c = static_cast<double>(block_counts[s]);
        if (c <= 0.0) continue;
        weight += c;
        for (int a = 0; a < N; ++a) row[a] += c * a_star.row(s)[a];
    }
    if (weight <= 0.0) return {};
    for (int a = 0; a < N; ++a) row[a] /= weight;
    return row;
}

TwoStepResult two_step_estimate(const SymbolSequence& z, const TwoStepConfig& cfg) {
    FitResult fitted = fit(z, cfg.fit);

    const long T = z.size();
    const long m = std::max<long>(std::lround(cfg.m_multiplier * static_cast<double>(T)), cfg.fit.k + 1);
    int depth = cfg.depth;
    if (depth <= 0) depth = std::min(default_depth(m, z.alphabet), cfg.fit.k);
    BootstrapConfig boot{m, depth, cfg.seed};
    boot.check();

    SymbolSequence sample = bootstrap_sample(fitted.params.a_star, fitted.params.pi_star, m, cfg.seed);
    PrunedTreeResult pruned = ctm_prune(sample, depth, m);

    // read the final per-context rows off the fitted A*
    std::vector<long> occupancy = block_occupancy(sample, cfg.fit.k);
    ContextTree tree(z.alphabet, pruned.tree.contexts());
    for (const auto& w : tree.contexts()) {
        std::vector<double> row = aggregate_row(fitted.params.a_star, occupancy, w);
        if (row.empty()) {
            if (pruned.tree.has_row(w)) row = pruned.tree.row(w);
            else continue;
        }
        tree.set_row(w, std::move(row));
    }

    TwoStepResult out{std::move(tree), fitted.eps_hat, std::move(fitted), std::move(pruned),
                      m,               depth,          std::move(occupancy)};
    return out;
}

void ScenarioSpec::check() const {
    if (sweep.empty()) throw std::invalid_argument("scenario: empty noise sweep");
    for (double eps : sweep)
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("scenario: sweep values must lie in (0,1)");
    if (replications < 1) throw std::invalid_argument("scenario: replications must be >= 1");
    if (T < 10) throw std::invalid_argument("scenario: T too small");
    TreeDiagnostics d = validate(tree);
    if (!d.valid() || !d.complete || !tree.all_rows_set())
        throw std::invalid_argument("scenario: tree must be valid, complete and fully specified");
}

namespace {

ContextTree make_tree(Alphabet alphabet,
                      const std::vector<std::pair<std::string, double>>& rows_p0) {
    std::vector<ContextString> ctxs;
    ctxs.reserve(rows_p0.size());
    for (const auto& [label, _] : rows_p0) ctxs.push_back(ContextString::parse(alphabet, label));
    ContextTree tree(alphabet, ctxs);
    for (const auto& [label, p0] : rows_p0)
        tree.set_row(ContextString::parse(alphabet, label), {p0, 1.0 - p0});
    return tree;
}

}  // namespace

ScenarioSpec scenario1(bool full) {
    ScenarioSpec spec;
    spec.name = full ? "scenario1-full" : "scenario1";
    spec.tree = make_tree(Alphabet(2), {{"010", 0.05}, {"110", 0.87}, {"00", 0.27}, {"1", 0.38}});
    spec.regime = NoiseRegime::Sum;
    spec.k = 3;
    spec.base_seed = 20240601;
    if (full) {
        spec.sweep = default_noise_grid();
        spec.T = 30000;
        spec.replications = 100;
    } else {
        spec.sweep = {0.01, 0.05, 0.10, 0.25, 0.45};
        spec.T = 10000;
        spec.replications = 20;
    }
    spec.fit.k = spec.k;
    return spec;
}

ScenarioSpec scenario2(bool full) {
    ScenarioSpec spec;
    spec.name = full ? "scenario2-full" : "scenario2";
    spec.tree = make_tree(Alphabet(2), {{"0000", 0.10},
                                        {"1000", 0.50},
                                        {"100", 0.83},
                                        {"10", 0.25},
                                        {"1", 0.25}});
    spec.regime = NoiseRegime::Sum;
    spec.k = 4;
    spec.base_seed = 20240602;
    if (full) {
        spec.sweep = default_noise_grid();
        spec.T = 30000;
        spec.replications = 100;
    } else {
        spec.sweep = {0.01, 0.05, 0.10, 0.25, 0.45};
        spec.T = 10000;
        spec.replications = 20;
    }
    spec.fit.k = spec.k;
    return spec;
}

bool EstimationReport::any_failed() const {
    return std::any_of(records.begin(), records.end(),
                       [](const ReplicationRecord& r) { return r.failed; });
}

namespace {

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double quantile_of(std::vector<double> xs, double q) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace

EstimationReport run_scenario(const ScenarioSpec& spec, int threads) {
    spec.check();
    const auto t_start = std::chrono::steady_clock::now();
    const int k = spec.k > 0 ? spec.k : spec.tree.depth();
    const VlmcModel model(spec.tree, spec.burn_in);
    const ContextTree& true_tree = spec.tree;

    EstimationReport report;
    report.scenario_name = spec.name;
    for (const auto& w : true_tree.contexts()) {
        report.context_labels.push_back(w.str());
        report.p0_true.push_back(true_tree.row(w)[0]);
    }

    const std::size_t total = spec.sweep.size() * static_cast<std::size_t>(spec.replications);
    report.records.assign(total, ReplicationRecord{});

    parallel_for(total, threads, [&](std::size_t idx) {
        const std::size_t ei = idx / spec.replications;
        const int rep = static_cast<int>(idx % spec.replications);
        const double eps = spec.sweep[ei];
        ReplicationRecord& rec = report.records[idx];
        rec.eps_true = eps;
        rec.replication = rep;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const std::uint64_t sim_seed = derive_seed(spec.base_seed, 3 * idx);
            const std::uint64_t noise_seed = derive_seed(spec.base_seed, 3 * idx + 1);
            const std::uint64_t boot_seed = derive_seed(spec.base_seed, 3 * idx + 2);

            SymbolSequence x = sample_vlmc(model, spec.T, sim_seed);
            const NoiseSpec noise = spec.regime == NoiseRegime::Sum
                                        ? NoiseSpec::sum(x.alphabet, eps)
                                        : NoiseSpec::product(x.alphabet, eps);
            SymbolSequence z = contaminate(x, noise, noise_seed);

            TwoStepConfig cfg;
            cfg.fit = spec.fit;
            cfg.fit.k = k;
            cfg.fit.regime = spec.regime;
            cfg.fit.threads = 1;  // replications own the parallelism
            cfg.m_multiplier = spec.m_multiplier;
            cfg.depth = spec.depth;
            cfg.seed = boot_seed;
            TwoStepResult result = two_step_estimate(z, cfg);

            rec.eps_hat = result.eps_hat;
            rec.loglik = result.fit.loglik;
            rec.recovered = tree_equal(result.tree, true_tree);
            rec.root_only = result.tree.num_contexts() == 1 && result.tree.contexts()[0].empty();
            for (const auto& w : true_tree.contexts()) {
                std::vector<double> row = aggregate_row(result.fit.params.a_star, result.occupancy, w);
                rec.p0.push_back(row.empty() ? std::numeric_limits<double>::quiet_NaN() : row[0]);
            }
        } catch (const std::exception& err) {
            rec.failed = true;
            rec.error = err.what();
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    for (std::size_t ei = 0; ei < spec.sweep.size(); ++ei) {
        SweepAggregate agg;
        agg.eps_true = spec.sweep[ei];
        std::vector<double> eps_hats;
        std::vector<std::vector<double>> p0(report.context_labels.size());
        int recovered = 0, root_only = 0;
        for (int rep = 0; rep < spec.replications; ++rep) {
            const ReplicationRecord& rec = report.records[ei * spec.replications + rep];
            if (rec.failed) continue;
            agg.completed++;
            eps_hats.push_back(rec.eps_hat);
            recovered += rec.recovered ? 1 : 0;
            root_only += rec.root_only ? 1 : 0;
            for (std::size_t c = 0; c < p0.size(); ++c)
                if (c < rec.p0.size() && std::isfinite(rec.p0[c])) p0[c].push_back(rec.p0[c]);
        }
        agg.eps_mean = mean_of(eps_hats);
        agg.eps_sd = sd_of(eps_hats, agg.eps_mean);
        agg.eps_q025 = quantile_of(eps_hats, 0.025);
        agg.eps_q975 = quantile_of(eps_hats, 0.975);
        for (auto& xs : p0) {
            const double m = mean_of(xs);
            agg.p0_mean.push_back(m);
            agg.p0_sd.push_back(sd_of(xs, m));
        }
        if (agg.completed > 0) {
            agg.recovery_rate = static_cast<double>(recovered) / agg.completed;
            agg.root_only_rate = static_cast<double>(root_only) / agg.completed;
        }
        report.aggregates.push_back(std::move(agg));
    }
    report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::string> emit_report(const EstimationReport& report, ReportFormat format,
                                     const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> written;
    if (format == ReportFormat::Csv) {
        const std::string report_path = out_dir + "/report.csv";
        std::ofstream rep(report_path);
        if (!rep) throw std::runtime_error("cannot write " + report_path);
        rep << "eps_true,context,statistic,value\n";
        for (const auto& agg : report.aggregates) {
            for (std::size_t c = 0; c < report.context_labels.size(); ++c) {
                rep << fmt(agg.eps_true) << "," << report.context_labels[c] << ",p0_mean,"
                    << fmt(agg.p0_mean[c]) << "\n";
                rep << fmt(agg.eps_true) << "," << report.context_labels[c] << ",p0_sd,"
                    << fmt(agg.p0_sd[c]) << "\n";
            }
            rep << fmt(agg.eps_true) << ",,eps_hat_mean," << fmt(agg.eps_mean) << "\n";
            rep << fmt(agg.eps_true) << ",,eps_hat_sd," << fmt(agg.eps_sd) << "\n";
        }
        written.push_back(report_path);

        const std::string sweep_path = out_dir + "/sweep.csv";
        std::ofstream sw(sweep_path);
        if (!sw) throw std::runtime_error("cannot write " + sweep_path);
        sw << "eps_true,eps_hat_mean,eps_hat_sd,recovery_rate,root_only_rate,completed";
        for (const auto& label : report.context_labels) sw << ",p0_mean_" << label;
        for (const auto& label : report.context_labels) sw << ",p0_sd_" << label;
        sw << "\n";
        for (const auto& agg : report.aggregates) {
            sw << fmt(agg.eps_true) << "," << fmt(agg.eps_mean) << "," << fmt(agg.eps_sd) << ","
               << fmt(agg.recovery_rate) << "," << fmt(agg.root_only_rate) << "," << agg.completed;
            for (double v : agg.p0_mean) sw << "," << fmt(v);
            for (double v : agg.p0_sd) sw << "," << fmt(v);
            sw << "\n";
        }
        written.push_back(sweep_path);
        return written;
    }

    nlohmann::json j;
    j["scenario"] = report.scenario_name;
    j["contexts"] = report.context_labels;
    j["p0_true"] = report.p0_true;
    j["total_seconds"] = report.total_seconds;
    auto& aggs = j["aggregates"] = nlohmann::json::array();
    for (const auto& agg : report.aggregates) {
        aggs.push_back({{"eps_true", agg.eps_true},
                        {"completed", agg.completed},
                        {"eps_hat_mean", agg.eps_mean},
                        {"eps_hat_sd", agg.eps_sd},
                        {"eps_hat_q025", agg.eps_q025},
                        {"eps_hat_q975", agg.eps_q975},
                        {"p0_mean", agg.p0_mean},
                        {"p0_sd", agg.p0_sd},
                        {"recovery_rate", agg.recovery_rate},
                        {"root_only_rate", agg.root_only_rate}});
    }
    auto& recs = j["replications"] = nlohmann::json::array();
    for (const auto& rec : report.records) {
        nlohmann::json r = {{"eps_true", rec.eps_true},
                            {"replication", rec.replication},
                            {"failed", rec.failed},
                            {"seconds", rec.seconds}};
        if (rec.failed) {
            r["error"] = rec.error;
        } else {
            r["eps_hat"] = rec.eps_hat;
            r["loglik"] = rec.loglik;
            r["recovered"] = rec.recovered;
            r["root_only"] = rec.root_only;
            nlohmann::json p0 = nlohmann::json::array();
            for (double v : rec.p0)
                p0.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
            r["p0"] = std::move(p0);
        }
        recs.push_back(std::move(r));
    }
    const std::string json_path = out_dir + "/report.json";
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write " + json_path);
    out << j.dump(2) << "\n";
    written.push_back(json_path);
    return written;
}

std::string scenario_to_json(const ScenarioSpec& spec, int indent) {
    nlohmann::json j;
    j["name"] = spec.name;
    j["tree"] = nlohmann::json::parse(tree_to_json(spec.tree, 0));
    j["regime"] = spec.regime == NoiseRegime::Sum ? "sum" : "product";
    j["sweep"] = spec.sweep;
    j["T"] = spec.T;
    j["replications"] = spec.replications;
    j["k"] = spec.k;
    j["base_seed"] = spec.base_seed;
    j["burn_in"] = spec.burn_in;
    j["m_multiplier"] = spec.m_multiplier;
    j["depth"] = spec.depth;
    j["fit"] = {{"noise_grid", spec.fit.noise_grid},
                {"max_iter", spec.fit.max_iter},
                {"rel_tol", spec.fit.rel_tol},
                {"mode", to_string(spec.fit.mode)}};
    return j.dump(indent);
}

ScenarioSpec scenario_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ScenarioSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.tree = tree_from_json(j.at("tree").dump());
    const std::string regime = j.value("regime", "sum");
    if (regime == "sum") spec.regime = NoiseRegime::Sum;
    else if (regime == "product") spec.regime = NoiseRegime::Product;
    else throw std::invalid_argument("scenario json: unknown regime " + regime);
    spec.sweep = j.at("sweep").get<std::vector<double>>();
    spec.T = j.at("T").get<long>();
    spec.replications = j.at("replications").get<int>();
    spec.k = j.value("k", 0);
    spec.base_seed = j.value("base_seed", std::uint64_t{1});
    spec.burn_in = j.value("burn_in", 1000L);
    spec.m_multiplier = j.value("m_multiplier", 1.0);
    spec.depth = j.value("depth", 0);
    if (j.contains("fit")) {
        const auto& f = j["fit"];
        if (f.contains("noise_grid")) spec.fit.noise_grid = f["noise_grid"].get<std::vector<double>>();
        spec.fit.max_iter = f.value("max_iter", spec.fit.max_iter);
        spec.fit.rel_tol = f.value("rel_tol", spec.fit.rel_tol);
        if (f.contains("mode")) spec.fit.mode = embed_mode_from_string(f["mode"].get<std::string>());
    }
    spec.fit.k = spec.k > 0 ? spec.k : spec.tree.depth();
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

}  // namespace cvlmc
