#include <gsvdnmf/pipeline.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace gsvdnmf {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string to_string(InitKind kind) {
  switch (kind) {
    case InitKind::random: return "random";
    case InitKind::nndsvd: return "nndsvd";
    case InitKind::nndsvda: return "nndsvda";
    case InitKind::nndsvdar: return "nndsvdar";
  }
  return "unknown";
}

InitKind parse_init_kind(const std::string& name) {
  if (name == "random") return InitKind::random;
  if (name == "nndsvd") return InitKind::nndsvd;
  if (name == "nndsvda") return InitKind::nndsvda;
  if (name == "nndsvdar") return InitKind::nndsvdar;
  throw std::invalid_argument("unknown init '" + name + "' (expected random|nndsvd|nndsvda|nndsvdar)");
}

NmfFactors<double> make_init(const MatrixXd& x, Index r, const InitSpec& init) {
  switch (init.kind) {
    case InitKind::random: return init_random(x, r, init.seed);
    case InitKind::nndsvd: return init_nndsvd(x, r, NndsvdVariant::plain, init.seed);
    case InitKind::nndsvda: return init_nndsvd(x, r, NndsvdVariant::a, init.seed);
    case InitKind::nndsvdar: return init_nndsvd(x, r, NndsvdVariant::ar, init.seed);
  }
  throw std::invalid_argument("make_init: bad init kind");
}

void PipelineConfig::validate(Index m, Index n) const {
  if (r0 < 2) throw std::invalid_argument("pipeline: r0 must be at least 2");
  if (k < 1) throw std::invalid_argument("pipeline: k must be at least 1");
  if (!(epsilon0 > 0) || !(epsilon > 0)) throw std::invalid_argument("pipeline: tolerances must be positive");
  if (max_iters < 1) throw std::invalid_argument("pipeline: max_iters must be positive");
  const Index rs = effective_svd_rank();
  if (rs != r0 && rs != r0 + k) throw std::invalid_argument("pipeline: svd rank must be r0 or r0 + k");
  if (r0 + k > std::min(m, n)) {
    throw std::invalid_argument("pipeline: r0 + k = " + std::to_string(r0 + k) + " exceeds min(m, n) = " +
                                std::to_string(std::min(m, n)));
  }
}

PipelineOutcome run_pipeline(const MatrixXd& x, const PipelineConfig& cfg) {
  cfg.validate(x.rows(), x.cols());
  return run_pipeline(x, cfg, make_init(x, cfg.r0, cfg.init));
}

PipelineOutcome run_pipeline(const MatrixXd& x, const PipelineConfig& cfg, const NmfFactors<double>& stage1_init) {
  cfg.validate(x.rows(), x.cols());
  if (stage1_init.rank() != cfg.r0) throw std::invalid_argument("run_pipeline: stage-1 init rank differs from r0");
  const auto t0 = std::chrono::steady_clock::now();

  PipelineOutcome out;
  const HalsResult<double> s1 = run_hals(x, stage1_init, {cfg.epsilon0, cfg.max_iters, cfg.init.seed});
  out.stage1 = s1.factors;
  out.iters_stage1 = s1.iterations;
  out.fit_stage1 = relative_fitting_error(x, s1.factors);

  const TruncatedSvd<double> svd = truncated_svd(x, cfg.effective_svd_rank());
  out.recovery = recover(x, s1.factors, svd, cfg.k);
  const NmfFactors<double> g = out.recovery.factors();
  out.fit_recovered = relative_fitting_error(x, g);
  out.objective_recovered = objective(x, g);

  HalsResult<double> s2 = run_hals(x, g, {cfg.epsilon, cfg.max_iters, cfg.init.seed});
  out.iters_stage2 = s2.iterations;
  out.objective_final = s2.objective;
  out.factors = std::move(s2.factors);
  out.fit_final = relative_fitting_error(x, out.factors);
  out.seconds = seconds_since(t0);
  return out;
}

StandardOutcome run_standard(const MatrixXd& x, const NmfFactors<double>& init, const SolverSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  HalsResult<double> res = run_hals(x, init, settings);
  StandardOutcome out;
  out.iterations = res.iterations;
  out.objective = res.objective;
  out.factors = std::move(res.factors);
  out.fit = relative_fitting_error(x, out.factors);
  out.seconds = seconds_since(t0);
  return out;
}

StandardOutcome run_standard(const MatrixXd& x, Index r, const InitSpec& init, const SolverSettings& settings) {
  if (r < 1 || r > std::min(x.rows(), x.cols())) {
    throw std::invalid_argument("run_standard: rank " + std::to_string(r) + " out of range");
  }
  return run_standard(x, make_init(x, r, init), settings);
}

std::vector<TrialResult> run_comparison(const MatrixXd& x, Index r, long n_trials, std::uint64_t seed_base,
                                        const PipelineConfig& cfg_in, unsigned threads) {
  if (n_trials < 1) throw std::invalid_argument("run_comparison: n_trials must be at least 1");
  PipelineConfig cfg = cfg_in;
  cfg.r0 = r - cfg.k;
  cfg.init.kind = InitKind::random;
  cfg.validate(x.rows(), x.cols());
  require_nonnegative(x, "run_comparison");

  std::vector<TrialResult> results(static_cast<std::size_t>(n_trials));
  auto run_trial = [&](long t) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(t);
    const NmfFactors<double> full = init_random(x, r, seed);
    const NmfFactors<double> prefix{full.w.leftCols(cfg.r0), full.h.topRows(cfg.r0)};

    TrialResult tr;
    tr.trial_id = t;
    tr.seed = seed;
    const StandardOutcome std_run = run_standard(x, full, {cfg.epsilon, cfg.max_iters, seed});
    tr.fit_standard = std_run.fit;
    tr.iters_standard = std_run.iterations;
    tr.seconds_standard = std_run.seconds;

    PipelineConfig trial_cfg = cfg;
    trial_cfg.init.seed = seed;
    const PipelineOutcome g = run_pipeline(x, trial_cfg, prefix);
    tr.fit_gsvd = g.fit_final;
    tr.iters_gsvd_stage1 = g.iters_stage1;
    tr.iters_gsvd_stage2 = g.iters_stage2;
    tr.seconds_gsvd = g.seconds;
    results[static_cast<std::size_t>(t)] = tr;
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_trials)));
  if (threads == 1) {
    for (long t = 0; t < n_trials; ++t) run_trial(t);
    return results;
  }

  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < threads; ++i) {
    pool.emplace_back([&] {
      for (long t = next++; t < n_trials; t = next++) {
        try {
          run_trial(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

DiagonalHistogram diagonal_histogram(const std::vector<TrialResult>& results, int bins) {
  if (results.empty()) throw std::invalid_argument("diagonal_histogram: no results");
  if (bins < 1) throw std::invalid_argument("diagonal_histogram: bins must be positive");
  DiagonalHistogram hist;
  hist.distances.reserve(results.size());
  for (const auto& r : results) hist.distances.push_back((r.fit_standard - r.fit_gsvd) / std::sqrt(2.0));

  const auto [lo_it, hi_it] = std::minmax_element(hist.distances.begin(), hist.distances.end());
  const double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    hist.edges = {lo, hi};
    hist.counts = {static_cast<long>(results.size())};
    return hist;
  }
  const double width = (hi - lo) / bins;
  hist.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) hist.edges[static_cast<std::size_t>(b)] = lo + width * b;
  hist.edges.back() = hi;
  hist.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double d : hist.distances) {
    int b = static_cast<int>((d - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    ++hist.counts[static_cast<std::size_t>(b)];
  }
  return hist;
}

MatrixXd component_similarity(const NmfFactors<double>& truth, const NmfFactors<double>& found) {
  if (truth.w.rows() != found.w.rows() || truth.h.cols() != found.h.cols()) {
    throw std::invalid_argument("component_similarity: factor shapes differ");
  }
  auto unit_cols = [](const MatrixXd& m) {
    MatrixXd out = m;
    for (Index j = 0; j < m.cols(); ++j) {
      const double nrm = m.col(j).norm();
      if (nrm > 0) out.col(j) /= nrm;
    }
    return out;
  };
  const MatrixXd tw = unit_cols(truth.w), fw = unit_cols(found.w);
  const MatrixXd th = unit_cols(truth.h.transpose()), fh = unit_cols(found.h.transpose());
  return (tw.transpose() * fw).cwiseProduct(th.transpose() * fh);
}

std::vector<Index> max_weight_assignment(const MatrixXd& score) {
  // Hungarian algorithm (potentials form) on cost = -score.
  const Index n = score.rows(), m = score.cols();
  if (n > m) throw std::invalid_argument("max_weight_assignment: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(m + 1, 0);
  std::vector<Index> p(m + 1, 0), way(m + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -score(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> assignment(n, -1);
  for (Index j = 1; j <= m; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

ComponentMatch match_components(const NmfFactors<double>& truth, const NmfFactors<double>& found) {
  const MatrixXd sim = component_similarity(truth, found);
  ComponentMatch out;
  out.assignment = max_weight_assignment(sim);
  out.similarity.resize(out.assignment.size());
  double total = 0;
  out.min_similarity = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.assignment.size(); ++i) {
    out.similarity[i] = sim(static_cast<Index>(i), out.assignment[i]);
    total += out.similarity[i];
    out.min_similarity = std::min(out.min_similarity, out.similarity[i]);
  }
  out.mean_similarity = total / static_cast<double>(out.assignment.size());
  return out;
}

}  // namespace gsvdnmf
