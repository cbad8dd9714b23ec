#pragma once

// Two-stage GSVD-NMF pipeline and the random-restart comparison harness.

#include <gsvdnmf/nmf.hpp>
#include <gsvdnmf/recovery.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsvdnmf {

enum class InitKind { random, nndsvd, nndsvda, nndsvdar };

std::string to_string(InitKind kind);
InitKind parse_init_kind(const std::string& name);

struct InitSpec {
  InitKind kind = InitKind::random;
  std::uint64_t seed = 0;
};

NmfFactors<double> make_init(const MatrixXd& x, Index r, const InitSpec& init);

struct PipelineConfig {
  Index r0 = 2;
  Index k = 1;
  double epsilon0 = 1e-4;
  double epsilon = 1e-4;
  Index svd_rank = 0;  // 0 means r0; otherwise r0 or r0 + k
  InitSpec init;
  long max_iters = 10000;

  Index effective_svd_rank() const { return svd_rank == 0 ? r0 : svd_rank; }
  void validate(Index m, Index n) const;
};

struct TrialResult {
  long trial_id = 0;
  std::uint64_t seed = 0;
  double fit_standard = 0;
  double fit_gsvd = 0;
  long iters_standard = 0;
  long iters_gsvd_stage1 = 0;
  long iters_gsvd_stage2 = 0;
  double seconds_standard = 0;
  double seconds_gsvd = 0;
};

struct PipelineOutcome {
  NmfFactors<double> factors;           // after stage 2
  AugmentedFactors<double> recovery;    // W_g, H_g and the spectrum
  NmfFactors<double> stage1;
  double fit_stage1 = 0;
  double fit_recovered = 0;
  double fit_final = 0;
  double objective_recovered = 0;
  double objective_final = 0;
  long iters_stage1 = 0;
  long iters_stage2 = 0;
  double seconds = 0;
};

/// Stage 1 (HALS at rank r0, eps0) -> recover -> stage 2 (HALS, eps).
PipelineOutcome run_pipeline(const MatrixXd& x, const PipelineConfig& cfg);

/// Same, with an explicit stage-1 initialization (rank r0).
PipelineOutcome run_pipeline(const MatrixXd& x, const PipelineConfig& cfg, const NmfFactors<double>& stage1_init);

struct StandardOutcome {
  NmfFactors<double> factors;
  double fit = 0;
  double objective = 0;
  long iterations = 0;
  double seconds = 0;
};

StandardOutcome run_standard(const MatrixXd& x, Index r, const InitSpec& init, const SolverSettings& settings);
StandardOutcome run_standard(const MatrixXd& x, const NmfFactors<double>& init, const SolverSettings& settings);

/// Shared-initialization comparison: for seed s the standard run starts from
/// init_random(x, r, s) and GSVD-NMF from its first r - k components.
/// Seeds are seed_base, seed_base + 1, ... Results are ordered by trial id.
std::vector<TrialResult> run_comparison(const MatrixXd& x, Index r, long n_trials, std::uint64_t seed_base,
                                        const PipelineConfig& cfg, unsigned threads = 1);

struct DiagonalHistogram {
  std::vector<double> distances;  // per trial, (fit_standard - fit_gsvd)/sqrt(2)
  std::vector<double> edges;      // bins + 1
  std::vector<long> counts;
};

DiagonalHistogram diagonal_histogram(const std::vector<TrialResult>& results, int bins = 40);

struct SyntheticData {
  MatrixXd x;
  MatrixXd w;  // ground truth, m x features
  MatrixXd h;  // features x n
};

/// Gaussian-bump ground truth with two deliberately overlapping pairs;
/// x = W H + noise_level * max(W H) * |N(0, 1)|.
SyntheticData gen_synthetic(Index n_features = 10, Index m = 200, Index n = 300, double noise_level = 0.0,
                            std::uint64_t seed = 0);

struct ComponentMatch {
  std::vector<Index> assignment;  // truth component i -> recovered component
  std::vector<double> similarity;  // per truth component
  double min_similarity = 0;
  double mean_similarity = 0;
};

/// Cosine similarity of rank-1 terms vec(w_i h_i^T), i.e. cos(w) * cos(h).
MatrixXd component_similarity(const NmfFactors<double>& truth, const NmfFactors<double>& found);

/// Best one-to-one matching of truth components to found components
/// (maximum total similarity, Hungarian algorithm).
ComponentMatch match_components(const NmfFactors<double>& truth, const NmfFactors<double>& found);

/// Rectangular assignment maximizing total score; rows <= cols.
std::vector<Index> max_weight_assignment(const MatrixXd& score);

}  // namespace gsvdnmf
