// Command-line driver for sampling stratified spaces, training the
// diffusion and mixture-of-VAE models, estimating local intrinsic
// dimensions, and evaluating sliced Wasserstein distances.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stratlearn/baselines.hpp"
#include "stratlearn/diffusion.hpp"
#include "stratlearn/experiment.hpp"
#include "stratlearn/io.hpp"
#include "stratlearn/lid.hpp"
#include "stratlearn/metrics.hpp"
#include "stratlearn/movae.hpp"
#include "stratlearn/rng.hpp"
#include "stratlearn/serialize.hpp"
#include "stratlearn/strata.hpp"

namespace {

using namespace stratlearn;

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string token =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    out.push_back(std::stoi(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("expected a comma-separated integer list");
  return out;
}

strata::StratifiedSpaceSpec load_space(const std::string& preset_name,
                                       const std::string& space_path) {
  if (!preset_name.empty()) return strata::preset(preset_name);
  if (!space_path.empty())
    return strata::spec_from_json(
        nlohmann::json::parse(io::read_text_file(space_path)));
  throw ConfigError("need --preset or --space");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"stratlearn: learning distributions and dimensions on stratified spaces"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  bool quiet = false;
  app.add_option("--seed", seed, "root RNG seed");
  app.add_option("--out", out, "output path or directory");
  app.add_option("--threads", threads, "worker threads for parallel stages");
  app.add_flag("--quiet", quiet, "suppress progress output");

  const auto note = [&](const char* fmt, auto... args) {
    if (!quiet) std::fprintf(stderr, fmt, args...);
  };

  // --- sample ---
  auto* sample = app.add_subcommand("sample", "sample a stratified space preset");
  std::string preset_name, space_path;
  Eigen::Index n = 1000;
  double noise_sigma = -1.0;
  int ambient_dim = -1;
  sample->add_option("--preset", preset_name, "preset name");
  sample->add_option("--space", space_path, "JSON space spec file");
  sample->add_option("--n", n, "number of points");
  sample->add_option("--noise-sigma", noise_sigma, "override noise level");
  sample->add_option("--ambient-dim", ambient_dim, "override embedding dim");
  sample->callback([&] {
    auto spec = load_space(preset_name, space_path);
    if (noise_sigma >= 0.0) spec.noise_sigma = noise_sigma;
    if (ambient_dim >= 0) spec.ambient_dim = ambient_dim;
    if (out.empty()) throw ConfigError("sample needs --out");
    const auto ds = strata::make_dataset(spec, n, seed);
    strata::save_bundle(ds, out);
    note("wrote %lld points to %s\n", (long long)ds.size(), out.c_str());
  });

  // --- noise ---
  auto* noise = app.add_subcommand("noise", "add isotropic Gaussian noise");
  std::string in_path;
  double sigma = 0.0;
  noise->add_option("--in", in_path, "input bundle directory")->required();
  noise->add_option("--sigma", sigma, "noise level")->required();
  noise->callback([&] {
    if (out.empty()) throw ConfigError("noise needs --out");
    auto ds = strata::load_bundle(in_path);
    ds.points = strata::add_noise(ds.points, sigma, seed);
    strata::save_bundle(ds, out);
  });

  // --- embed ---
  auto* embed_cmd = app.add_subcommand("embed", "isometric random embedding");
  int embed_dim = 0;
  embed_cmd->add_option("--in", in_path, "input bundle directory")->required();
  embed_cmd->add_option("--ambient-dim", embed_dim, "target dimension")->required();
  embed_cmd->callback([&] {
    if (out.empty()) throw ConfigError("embed needs --out");
    auto ds = strata::load_bundle(in_path);
    ds.points = strata::embed(ds.points, embed_dim, seed);
    strata::save_bundle(ds, out);
  });

  // --- train-diffusion ---
  auto* train = app.add_subcommand("train-diffusion", "train the eps-prediction model");
  diffusion::TrainConfig train_cfg;
  std::string data_path, hidden_text, te_text, trace_path;
  train->add_option("--data", data_path, "dataset bundle")->required();
  train->add_option("--steps", train_cfg.steps, "Adam steps");
  train->add_option("--batch", train_cfg.batch, "minibatch size");
  train->add_option("--lr", train_cfg.lr, "learning rate");
  train->add_option("--t-floor", train_cfg.t_floor, "smallest training time");
  train->add_option("--hidden", hidden_text, "hidden widths, e.g. 512,512,512");
  train->add_option("--time-embed", te_text, "time embedding widths, e.g. 64,64");
  train->add_option("--loss-trace", trace_path, "loss trace CSV path");
  train->callback([&] {
    if (out.empty()) throw ConfigError("train-diffusion needs --out");
    const auto ds = strata::load_bundle(data_path);
    if (!hidden_text.empty()) train_cfg.hidden_widths = parse_int_list(hidden_text);
    if (!te_text.empty()) train_cfg.time_embed_widths = parse_int_list(te_text);
    train_cfg.seed = seed;
    const auto result = diffusion::train_diffusion(ds.points, train_cfg);
    diffusion::save_diffusion(result.model, out);
    if (!trace_path.empty()) diffusion::save_loss_trace(result.loss_trace, trace_path);
    note("final loss %.6f over %d steps\n",
         result.loss_trace.empty() ? 0.0 : result.loss_trace.back(),
         train_cfg.steps);
  });

  // --- estimate-lid ---
  auto* lid_cmd = app.add_subcommand("estimate-lid", "per-point dimension estimates");
  std::string model_path, oracle_preset;
  bool oracle_from_data = false;
  lid::LidConfig lid_cfg;
  std::string rule_text = "ratio";
  lid_cmd->add_option("--data", data_path, "dataset bundle")->required();
  lid_cmd->add_option("--model", model_path, "diffusion checkpoint");
  lid_cmd->add_option("--oracle-preset", oracle_preset,
                      "use the analytic oracle for this preset");
  lid_cmd->add_flag("--oracle", oracle_from_data,
                    "use the analytic oracle from the bundle's spec");
  lid_cmd->add_option("--t-start", lid_cfg.t_start, "window start");
  lid_cmd->add_option("--t-end", lid_cfg.t_end, "window end");
  lid_cmd->add_option("--n-scores", lid_cfg.n_scores, "score vectors per point");
  lid_cmd->add_option("--rule", rule_text, "gap or ratio");
  lid_cmd->add_option("--floor-eps", lid_cfg.floor_eps, "ratio floor");
  lid_cmd->add_option("--alpha", lid_cfg.alpha, "mass threshold");
  lid_cmd->callback([&] {
    if (out.empty()) throw ConfigError("estimate-lid needs --out");
    const auto ds = strata::load_bundle(data_path);
    std::optional<diffusion::ScoreSource> source;
    if (!model_path.empty()) {
      if (!std::filesystem::exists(model_path))
        throw ConfigError("missing dependency: checkpoint not found: " + model_path);
      source.emplace(diffusion::load_diffusion(model_path));
    } else if (!oracle_preset.empty()) {
      source.emplace(diffusion::GaussianStrataMixture::from_spec(
          strata::preset(oracle_preset)));
    } else if (oracle_from_data) {
      if (!ds.spec) throw ConfigError("bundle has no spec for the oracle");
      source.emplace(diffusion::GaussianStrataMixture::from_spec(*ds.spec));
    } else {
      throw ConfigError("need --model, --oracle-preset, or --oracle");
    }
    if (rule_text == "gap") lid_cfg.rule = lid::Rule::Gap;
    else if (rule_text == "ratio") lid_cfg.rule = lid::Rule::Ratio;
    else throw ConfigError("--rule must be gap or ratio");
    lid_cfg.seed = seed;
    std::filesystem::create_directories(out);
    const IntVector dims = lid::estimate_dims(*source, ds.points, lid_cfg, threads);
    const auto report = lid::strata_report(dims, lid_cfg.alpha, ds.true_dims);
    lid::save_report(report, lid_cfg, out + "/lid_report.json",
                     out + "/lid_points.csv", ds.true_dims);
    note("K_hat=%d accuracy=%.4f\n", report.strata_count, report.accuracy);
  });

  // --- baselines ---
  auto* base = app.add_subcommand("baselines", "Levina-Bickel MLE and Local PCA");
  int k = 20;
  double var_threshold = 0.95;
  base->add_option("--data", data_path, "dataset bundle")->required();
  base->add_option("--k", k, "neighbor count");
  base->add_option("--var-threshold", var_threshold, "Local PCA variance cut");
  base->callback([&] {
    if (out.empty()) throw ConfigError("baselines needs --out");
    const auto ds = strata::load_bundle(data_path);
    const auto lb = baselines::levina_bickel(ds.points, k, threads);
    const auto lpca = baselines::local_pca(ds.points, k, var_threshold, threads);
    std::filesystem::create_directories(out);
    baselines::save_baselines(lb, lpca, k, var_threshold, out + "/baselines.csv",
                              out + "/baselines.json");
  });

  // --- train-movae ---
  auto* movae_cmd = app.add_subcommand("train-movae", "train the mixture of VAEs");
  movae::MoVaeTrainConfig movae_cfg;
  std::string dims_text, routing_path;
  movae_cmd->add_option("--data", data_path, "dataset bundle")->required();
  movae_cmd->add_option("--expert-dims", dims_text, "target dims, e.g. 1,2")->required();
  movae_cmd->add_option("--latent-dim", movae_cfg.latent_dim, "latent dimension");
  movae_cmd->add_option("--epochs-phase1", movae_cfg.hyper.epochs_phase1, "");
  movae_cmd->add_option("--epochs-phase2", movae_cfg.hyper.epochs_phase2, "");
  movae_cmd->add_option("--batch", movae_cfg.hyper.batch, "");
  movae_cmd->add_option("--beta", movae_cfg.hyper.beta, "phase-1 KL weight");
  movae_cmd->add_option("--beta-end", movae_cfg.hyper.beta_end, "phase-2 KL target");
  movae_cmd->add_option("--beta-g", movae_cfg.hyper.beta_g, "gate KL weight");
  movae_cmd->add_option("--gamma", movae_cfg.hyper.gamma, "penalty weight");
  movae_cmd->add_option("--lr", movae_cfg.lr, "learning rate");
  movae_cmd->add_option("--routing", routing_path, "routing CSV path");
  movae_cmd->callback([&] {
    if (out.empty()) throw ConfigError("train-movae needs --out");
    const auto ds = strata::load_bundle(data_path);
    movae_cfg.expert_dims = parse_int_list(dims_text);
    movae_cfg.seed = seed;
    movae_cfg.quiet = quiet;
    const auto result = movae::train_movae(ds.points, movae_cfg);
    movae::save_movae(result.model, out);
    if (!routing_path.empty())
      movae::save_routing(result.routing, result.soft_probs, routing_path);
    if (ds.has_labels()) {
      const auto acc = metrics::label_accuracy(result.routing, ds.labels);
      note("routing accuracy (best permutation): %.4f\n", acc.accuracy);
    }
  });

  // --- generate ---
  auto* gen = app.add_subcommand("generate", "draw samples from a checkpoint");
  Eigen::Index gen_n = 5000;
  int gen_steps = 500;
  double tau = 0.01, trunc = 0.0;
  gen->add_option("--model", model_path, "diffusion or movae checkpoint")->required();
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--steps", gen_steps, "reverse SDE steps (diffusion)");
  gen->add_option("--tau", tau, "early stopping time (diffusion)");
  gen->add_option("--trunc", trunc, "truncation bound (diffusion; 0 = 10x)");
  gen->callback([&] {
    if (out.empty()) throw ConfigError("generate needs --out");
    const auto j = nlohmann::json::parse(io::read_text_file(model_path));
    const std::string kind = j.value("kind", std::string("diffusion"));
    if (kind == "movae") {
      const auto model = movae::load_movae(model_path);
      const auto samples = movae::movae_generate(model, gen_n, seed);
      strata::write_csv_matrix(out, samples.samples);
    } else {
      const auto model = diffusion::load_diffusion(model_path);
      const diffusion::ScoreSource source(model);
      if (trunc <= 0.0) trunc = 10.0;
      const auto samples =
          diffusion::sample_reverse(source, gen_n, gen_steps, tau, trunc, seed, threads);
      strata::write_csv_matrix(out, samples.samples);
      note("%lld of %lld chains truncated\n", (long long)samples.n_truncated(),
           (long long)gen_n);
    }
  });

  // --- eval-w1 ---
  auto* eval = app.add_subcommand("eval-w1", "sliced Wasserstein-1 between CSVs");
  std::string a_path, b_path;
  int n_projections = 128;
  eval->add_option("--a", a_path, "first point CSV")->required();
  eval->add_option("--b", b_path, "second point CSV")->required();
  eval->add_option("--projections", n_projections, "projection count");
  eval->callback([&] {
    const Matrix a = strata::read_csv_matrix(a_path);
    const Matrix b = strata::read_csv_matrix(b_path);
    const double w1 = metrics::sliced_w1(a, b, n_projections, seed, threads);
    nlohmann::json report;
    report["metric"] = "sliced_w1";
    report["value"] = w1;
    report["n_projections"] = n_projections;
    report["seed"] = seed;
    if (out.empty())
      std::printf("%.17g\n", w1);
    else
      io::write_text_file(out, report.dump(2) + "\n");
  });

  // --- run ---
  auto* run = app.add_subcommand("run", "execute a full experiment config");
  std::string config_path;
  run->add_option("config", config_path, "experiment JSON")->required();
  run->callback([&] {
    auto config = nlohmann::json::parse(io::read_text_file(config_path));
    if (!out.empty()) config["out"] = out;
    if (threads > 1) config["threads"] = threads;
    if (quiet) config["quiet"] = true;
    const auto result = experiment::run_experiment_json(std::move(config));
    if (result.exit_code != 0) {
      std::fprintf(stderr, "run failed (%d): %s\n", result.exit_code,
                   result.error.c_str());
      std::exit(result.exit_code);
    }
    note("artifacts in %s\n", result.out_dir.c_str());
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const stratlearn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const stratlearn::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
