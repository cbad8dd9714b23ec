#include <gsvdnmf/cli.hpp>
#include <gsvdnmf/io.hpp>
#include <gsvdnmf/pipeline.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <thread>

#ifndef GSVDNMF_VERSION
#define GSVDNMF_VERSION "dev"
#endif

namespace gsvdnmf {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string join_args(const std::vector<std::string>& args) {
  std::string out;
  for (const auto& a : args) {
    if (!out.empty()) out += ' ';
    out += a;
  }
  return out;
}

io::RunManifest base_manifest(const std::vector<std::string>& args) {
  io::RunManifest m;
  m.version = GSVDNMF_VERSION;
  m.command = join_args(args);
  return m;
}

void describe_dataset(io::RunManifest& m, const fs::path& path, const MatrixXd& x) {
  m.dataset_path = path.string();
  m.dataset_checksum = io::hex64(io::file_checksum(path));
  m.dataset_rows = x.rows();
  m.dataset_cols = x.cols();
}

MatrixXd load_input(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("input file '" + path + "' does not exist");
  return io::load_matrix(path, {.require_nonnegative = true});
}

void check_rank(Index r, const MatrixXd& x, const char* what) {
  if (r < 1 || r > std::min(x.rows(), x.cols())) {
    throw UsageError(std::string(what) + " " + std::to_string(r) + " is outside [1, min(m, n) = " +
                     std::to_string(std::min(x.rows(), x.cols())) + "] for a " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + " input");
  }
}

Index parse_svd_rank(const std::string& mode, Index r0, Index k) {
  if (mode == "r0") return r0;
  if (mode == "r0+k") return r0 + k;
  throw UsageError("--svd-rank must be 'r0' or 'r0+k'");
}

std::string format_lambda(double v) { return std::isinf(v) ? std::string("inf") : io::format_double(v); }

std::string spectrum_table(const LambdaSpectrum<double>& spec) {
  std::string out = "rank,direction,lambda\n";
  for (std::size_t p = 0; p < spec.order.size(); ++p) {
    const Index i = spec.order[p];
    out += std::to_string(p + 1) + ',' + std::to_string(i) + ',' + format_lambda(spec.values(i)) + '\n';
  }
  return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GSVD-NMF: recover missing components of under-complete NMF", "gsvdnmf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(GSVDNMF_VERSION));

  // nmf
  std::string nmf_input, nmf_out, nmf_init = "random";
  long nmf_rank = 0, nmf_max_iters = 10000;
  std::uint64_t nmf_seed = 0;
  double nmf_eps = 1e-4;
  auto* nmf = app.add_subcommand("nmf", "standard HALS NMF");
  nmf->add_option("--input", nmf_input, "input matrix (CSV or MatrixMarket)")->required();
  nmf->add_option("--rank", nmf_rank, "factorization rank")->required();
  nmf->add_option("--init", nmf_init, "random|nndsvd|nndsvda|nndsvdar")
      ->check(CLI::IsMember({"random", "nndsvd", "nndsvda", "nndsvdar"}));
  nmf->add_option("--seed", nmf_seed, "seed for randomized initializers");
  nmf->add_option("--eps", nmf_eps, "relative-change stopping tolerance");
  nmf->add_option("--max-iters", nmf_max_iters, "sweep cap");
  nmf->add_option("--out", nmf_out, "output directory")->required();

  // gsvd-nmf
  std::string g_input, g_out, g_init = "random", g_svd_rank = "r0";
  long g_rank = 0, g_k = 1, g_max_iters = 10000;
  std::uint64_t g_seed = 0;
  double g_eps0 = 1e-4, g_eps = 1e-4;
  auto* gsvd = app.add_subcommand("gsvd-nmf", "two-stage GSVD-NMF; --rank is the under-complete rank r0");
  gsvd->add_option("--input", g_input, "input matrix")->required();
  gsvd->add_option("--rank", g_rank, "under-complete rank r0")->required();
  gsvd->add_option("--k", g_k, "components to add");
  gsvd->add_option("--eps0", g_eps0, "stage-1 tolerance");
  gsvd->add_option("--eps", g_eps, "final tolerance");
  gsvd->add_option("--svd-rank", g_svd_rank, "r0|r0+k")->check(CLI::IsMember({"r0", "r0+k"}));
  gsvd->add_option("--init", g_init, "random|nndsvd|nndsvda|nndsvdar")
      ->check(CLI::IsMember({"random", "nndsvd", "nndsvda", "nndsvdar"}));
  gsvd->add_option("--seed", g_seed, "seed for randomized initializers");
  gsvd->add_option("--max-iters", g_max_iters, "sweep cap per stage");
  gsvd->add_option("--out", g_out, "output directory")->required();

  // spectrum
  std::string s_input, s_out, s_init = "random", s_svd_rank = "r0";
  long s_rank = 0, s_max_iters = 10000;
  std::uint64_t s_seed = 0;
  double s_eps0 = 1e-4;
  auto* spectrum = app.add_subcommand("spectrum", "print the generalized singular value spectrum of a rank-R NMF");
  spectrum->add_option("--input", s_input, "input matrix")->required();
  spectrum->add_option("--rank", s_rank, "NMF rank r0")->required();
  spectrum->add_option("--seed", s_seed, "seed for randomized initializers");
  spectrum->add_option("--init", s_init, "random|nndsvd|nndsvda|nndsvdar")
      ->check(CLI::IsMember({"random", "nndsvd", "nndsvda", "nndsvdar"}));
  spectrum->add_option("--eps0", s_eps0, "NMF tolerance");
  spectrum->add_option("--svd-rank", s_svd_rank, "r0|r0+1")->check(CLI::IsMember({"r0", "r0+1"}));
  spectrum->add_option("--max-iters", s_max_iters, "sweep cap");
  spectrum->add_option("--out", s_out, "optional directory for spectrum.csv and manifest.json");

  // bench
  std::string b_input, b_out;
  long b_rank = 0, b_k = 1, b_trials = 1, b_max_iters = 10000;
  std::uint64_t b_seed_base = 0;
  double b_eps0 = 1e-4, b_eps = 1e-4;
  unsigned b_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* bench = app.add_subcommand("bench", "random-restart comparison of standard NMF and GSVD-NMF");
  bench->add_option("--input", b_input, "input matrix")->required();
  bench->add_option("--rank", b_rank, "final rank r (GSVD-NMF starts from r - k)")->required();
  bench->add_option("--k", b_k, "components added by GSVD-NMF");
  bench->add_option("--trials", b_trials, "number of seeded trials");
  bench->add_option("--seed-base", b_seed_base, "seed of trial 0; trial t uses seed-base + t");
  bench->add_option("--eps0", b_eps0, "stage-1 tolerance");
  bench->add_option("--eps", b_eps, "final tolerance (standard NMF and stage 2)");
  bench->add_option("--max-iters", b_max_iters, "sweep cap per run");
  bench->add_option("--threads", b_threads, "worker threads; results do not depend on this");
  bench->add_option("--out", b_out, "output directory")->required();

  // synth
  std::string y_out;
  long y_features = 10, y_rows = 200, y_cols = 300;
  double y_noise = 0;
  std::uint64_t y_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate the Gaussian-bump synthetic dataset");
  synth->add_option("--features", y_features, "number of ground-truth features");
  synth->add_option("--noise", y_noise, "noise level relative to max(WH)");
  synth->add_option("--seed", y_seed, "noise seed");
  synth->add_option("--rows", y_rows, "rows m");
  synth->add_option("--cols", y_cols, "columns n");
  synth->add_option("--out", y_out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << GSVDNMF_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*nmf) {
      const MatrixXd x = load_input(nmf_input);
      check_rank(nmf_rank, x, "--rank");
      const InitSpec init{parse_init_kind(nmf_init), nmf_seed};
      const SolverSettings settings{nmf_eps, nmf_max_iters, nmf_seed};
      const StandardOutcome res = run_standard(x, nmf_rank, init, settings);

      io::RunManifest m = base_manifest(args);
      m.config = {{"rank", nmf_rank}, {"init", nmf_init}, {"seed", nmf_seed}, {"epsilon", nmf_eps},
                  {"max_iters", nmf_max_iters}};
      m.seeds = {nmf_seed};
      describe_dataset(m, nmf_input, x);
      io::save_factors(res.factors, nmf_out, m);
      out << "fit_percent " << io::format_double(res.fit) << "\niterations " << res.iterations << '\n';
      return 0;
    }

    if (*gsvd) {
      const MatrixXd x = load_input(g_input);
      PipelineConfig cfg;
      cfg.r0 = g_rank;
      cfg.k = g_k;
      cfg.epsilon0 = g_eps0;
      cfg.epsilon = g_eps;
      cfg.svd_rank = parse_svd_rank(g_svd_rank, g_rank, g_k);
      cfg.init = {parse_init_kind(g_init), g_seed};
      cfg.max_iters = g_max_iters;
      check_rank(g_rank + g_k, x, "--rank + --k");
      try {
        cfg.validate(x.rows(), x.cols());
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const PipelineOutcome res = run_pipeline(x, cfg);
      if (res.recovery.dropped > 0) {
        err << "warning: " << res.recovery.dropped
            << " proposed component(s) had no sign-consistent part and were dropped\n";
      }

      io::RunManifest m = base_manifest(args);
      m.config = io::config_to_json(cfg);
      m.seeds = {g_seed};
      describe_dataset(m, g_input, x);
      const fs::path dir(g_out);
      fs::create_directories(dir);
      io::write_text(dir / "spectrum.csv", spectrum_table(res.recovery.spectrum));
      m.outputs.push_back((dir / "spectrum.csv").string());
      io::save_factors(res.factors, dir, m);
      out << "fit_stage1_percent " << io::format_double(res.fit_stage1) << "\nfit_recovered_percent "
          << io::format_double(res.fit_recovered) << "\nfit_final_percent " << io::format_double(res.fit_final)
          << "\niterations " << res.iters_stage1 << ' ' << res.iters_stage2 << '\n';
      return 0;
    }

    if (*spectrum) {
      const MatrixXd x = load_input(s_input);
      check_rank(s_rank, x, "--rank");
      if (s_rank < 2) throw UsageError("--rank must be at least 2 for a spectrum");
      const Index svd_rank = s_svd_rank == "r0" ? s_rank : s_rank + 1;
      check_rank(svd_rank, x, "--svd-rank");
      const InitSpec init{parse_init_kind(s_init), s_seed};
      const HalsResult<double> nmf_res = run_hals(x, make_init(x, s_rank, init), {s_eps0, s_max_iters, s_seed});
      const SpectrumAndDirections<double> sd = lambda_spectrum(truncated_svd(x, svd_rank), nmf_res.factors);
      const std::string table = spectrum_table(sd.spectrum);
      out << table;
      if (!s_out.empty()) {
        const fs::path dir(s_out);
        io::RunManifest m = base_manifest(args);
        m.config = {{"rank", s_rank}, {"init", s_init}, {"seed", s_seed}, {"epsilon0", s_eps0},
                    {"svd_rank", svd_rank}, {"max_iters", s_max_iters}};
        m.seeds = {s_seed};
        describe_dataset(m, s_input, x);
        io::write_text(dir / "spectrum.csv", table);
        m.outputs = {(dir / "spectrum.csv").string(), (dir / "manifest.json").string()};
        io::write_manifest(m, dir / "manifest.json");
      }
      return 0;
    }

    if (*bench) {
      const MatrixXd x = load_input(b_input);
      check_rank(b_rank, x, "--rank");
      if (b_trials < 1) throw UsageError("--trials must be at least 1");
      PipelineConfig cfg;
      cfg.k = b_k;
      cfg.r0 = b_rank - b_k;
      cfg.epsilon0 = b_eps0;
      cfg.epsilon = b_eps;
      cfg.max_iters = b_max_iters;
      try {
        cfg.validate(x.rows(), x.cols());
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const std::vector<TrialResult> results = run_comparison(x, b_rank, b_trials, b_seed_base, cfg, b_threads);
      const DiagonalHistogram hist = diagonal_histogram(results);

      const fs::path dir(b_out);
      const fs::path trials = dir / "trials.csv", histogram = dir / "histogram.csv",
                     timings = dir / "timings.csv", manifest = dir / "manifest.json";
      io::write_text(trials, io::format_trials_csv(results));
      io::write_text(histogram, io::format_histogram_csv(hist));
      io::write_text(timings, io::format_timings_csv(results));

      io::RunManifest m = base_manifest(args);
      m.config = io::config_to_json(cfg);
      m.config["rank"] = b_rank;
      m.config["trials"] = b_trials;
      m.config["seed_base"] = b_seed_base;
      m.config.erase("seed");
      for (const auto& r : results) m.seeds.push_back(r.seed);
      describe_dataset(m, b_input, x);
      m.outputs = {trials.string(), histogram.string(), timings.string(), manifest.string()};
      io::write_manifest(m, manifest);

      long wins = 0;
      for (const auto& r : results) wins += r.fit_gsvd < r.fit_standard ? 1 : 0;
      out << "trials " << results.size() << "\ngsvd_better " << wins << '\n';
      return 0;
    }

    if (*synth) {
      const SyntheticData d = gen_synthetic(y_features, y_rows, y_cols, y_noise, y_seed);
      const fs::path dir(y_out);
      const fs::path xp = dir / "X.csv", wp = dir / "W_true.csv", hp = dir / "H_true.csv", mp = dir / "manifest.json";
      io::save_matrix_csv(d.x, xp);
      io::save_matrix_csv(d.w, wp);
      io::save_matrix_csv(d.h, hp);
      io::RunManifest m = base_manifest(args);
      m.config = {{"features", y_features}, {"noise", y_noise}, {"seed", y_seed}, {"rows", y_rows},
                  {"cols", y_cols}};
      m.seeds = {y_seed};
      describe_dataset(m, xp, d.x);
      m.outputs = {xp.string(), wp.string(), hp.string(), mp.string()};
      io::write_manifest(m, mp);
      out << "wrote " << xp.string() << '\n';
      return 0;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace gsvdnmf
