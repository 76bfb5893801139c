#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvlmc/baum_welch.hpp"
#include "cvlmc/bic_ctm.hpp"
#include "cvlmc/contamination.hpp"
#include "cvlmc/vlmc.hpp"

// The end-to-end two-step estimator (EM over the k-full embedding, then
// bootstrap BIC pruning) and the Monte Carlo harness that sweeps noise
// levels over seeded replications and aggregates the estimates.

namespace cvlmc {

struct TwoStepConfig {
    FitConfig fit;
    double m_multiplier = 1.0;  // bootstrap length m = round(multiplier * T)
    int depth = 0;              // candidate depth; 0 = min(default_depth(m), k)
    std::uint64_t seed = 0;     // bootstrap draw
};

struct TwoStepResult {
    ContextTree tree;  // pruned tree; rows aggregated from the fitted A*
    double eps_hat = 0.0;
    FitResult fit;
    PrunedTreeResult prune;
    long m = 0;
    int depth = 0;
    std::vector<long> occupancy;  // k-block counts of the bootstrap sample
};

// Next-symbol row for a context, read from the fitted block transitions:
// the block states ending in w are averaged with their bootstrap
// occupancy counts as weights.
std::vector<double> aggregate_row(const MarkovTransitions& a_star,
                                  const std::vector<long>& block_counts,
                                  const ContextString& w);

// Occupancy counts of every k-block in a sample (positions with a successor).
std::vector<long> block_occupancy(const SymbolSequence& sample, int k);

TwoStepResult two_step_estimate(const SymbolSequence& z, const TwoStepConfig& cfg);

struct ScenarioSpec {
    std::string name;
    ContextTree tree;  // true tree with rows
    NoiseRegime regime = NoiseRegime::Sum;
    std::vector<double> sweep;
    long T = 10000;
    int replications = 20;
    int k = 0;  // 0 = tree depth
    std::uint64_t base_seed = 1;
    long burn_in = 1000;
    double m_multiplier = 1.0;
    int depth = 0;
    FitConfig fit;  // k is overridden per spec; grid/tol/iters/mode honored

    void check() const;
};

// Desk-scale presets for the two simulation scenarios; `full` switches to
// the 99-point sweep with 100 replications at T=30000 (hours, not CI).
ScenarioSpec scenario1(bool full = false);
ScenarioSpec scenario2(bool full = false);

struct ReplicationRecord {
    double eps_true = 0.0;
    int replication = 0;
    bool failed = false;
    std::string error;
    double eps_hat = 0.0;
    double loglik = 0.0;
    bool recovered = false;   // pruned tree equals the true tree
    bool root_only = false;
    std::vector<double> p0;   // P(0|w) aggregated onto the true contexts
    double seconds = 0.0;
};

struct SweepAggregate {
    double eps_true = 0.0;
    int completed = 0;
    double eps_mean = 0.0, eps_sd = 0.0, eps_q025 = 0.0, eps_q975 = 0.0;
    std::vector<double> p0_mean, p0_sd;
    double recovery_rate = 0.0;
    double root_only_rate = 0.0;
};

struct EstimationReport {
    std::string scenario_name;
    std::vector<std::string> context_labels;  // true contexts, canonical order
    std::vector<double> p0_true;
    std::vector<SweepAggregate> aggregates;
    std::vector<ReplicationRecord> records;
    double total_seconds = 0.0;

    bool any_failed() const;
};

EstimationReport run_scenario(const ScenarioSpec& spec, int threads = 1);

enum class ReportFormat { Csv, Json };

// CSV: report.csv in long form, one row per (eps, context, statistic),
// plus sweep.csv with one row per noise level for the sweep figures.
// JSON: report.json with full records. Returns the written paths.
// Runtime columns live only in the JSON; the CSVs are byte-deterministic.
std::vector<std::string> emit_report(const EstimationReport& report, ReportFormat format,
                                     const std::string& out_dir);

std::string scenario_to_json(const ScenarioSpec& spec, int indent = 2);
ScenarioSpec scenario_from_json(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);

}  // namespace cvlmc
