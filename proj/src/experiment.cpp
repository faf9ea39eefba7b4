#include "stratlearn/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>

#include "stratlearn/baselines.hpp"
#include "stratlearn/diffusion.hpp"
#include "stratlearn/io.hpp"
#include "stratlearn/lid.hpp"
#include "stratlearn/metrics.hpp"
#include "stratlearn/movae.hpp"
#include "stratlearn/rng.hpp"
#include "stratlearn/serialize.hpp"
#include "stratlearn/strata.hpp"

namespace stratlearn::experiment {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

strata::StratifiedSpaceSpec resolve_spec(const json& config) {
  strata::StratifiedSpaceSpec spec;
  if (config.contains("preset"))
    spec = strata::preset(config.at("preset").get<std::string>());
  else if (config.contains("space"))
    spec = strata::spec_from_json(config.at("space"));
  else
    throw ConfigError("config needs either \"preset\" or \"space\"");
  if (config.contains("ambient_dim"))
    spec.ambient_dim = config.at("ambient_dim").get<int>();
  if (config.contains("noise_sigma"))
    spec.noise_sigma = config.at("noise_sigma").get<double>();
  if (config.contains("embed_seed"))
    spec.embed_seed = config.at("embed_seed").get<std::uint64_t>();
  spec.validate();
  return spec;
}

diffusion::TrainConfig diffusion_config_from_json(const json& j,
                                                  std::uint64_t seed) {
  diffusion::TrainConfig cfg;
  cfg.steps = j.value("steps", cfg.steps);
  cfg.batch = j.value("batch", cfg.batch);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.t_floor = j.value("t_floor", cfg.t_floor);
  if (j.contains("hidden")) cfg.hidden_widths = j.at("hidden").get<std::vector<int>>();
  if (j.contains("time_embed"))
    cfg.time_embed_widths = j.at("time_embed").get<std::vector<int>>();
  cfg.seed = j.value("seed", seed);
  return cfg;
}

movae::MoVaeTrainConfig movae_config_from_json(const json& j,
                                               std::uint64_t seed, bool quiet) {
  movae::MoVaeTrainConfig cfg;
  cfg.expert_dims = j.at("expert_dims").get<std::vector<int>>();
  cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
  if (j.contains("enc_hidden")) cfg.enc_hidden = j.at("enc_hidden").get<std::vector<int>>();
  if (j.contains("dec_hidden")) cfg.dec_hidden = j.at("dec_hidden").get<std::vector<int>>();
  if (j.contains("gate_hidden")) cfg.gate_hidden = j.at("gate_hidden").get<std::vector<int>>();
  auto& h = cfg.hyper;
  h.beta = j.value("beta", h.beta);
  h.beta_end = j.value("beta_end", h.beta_end);
  h.beta_g = j.value("beta_g", h.beta_g);
  h.gamma = j.value("gamma", h.gamma);
  h.tau_start = j.value("tau_start", h.tau_start);
  h.tau_end = j.value("tau_end", h.tau_end);
  h.epochs_phase1 = j.value("epochs_phase1", h.epochs_phase1);
  h.epochs_phase2 = j.value("epochs_phase2", h.epochs_phase2);
  h.batch = j.value("batch", h.batch);
  h.recon_sigma = j.value("recon_sigma", h.recon_sigma);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.seed = j.value("seed", seed);
  cfg.quiet = quiet;
  return cfg;
}

lid::LidConfig lid_config_from_json(const json& j, double t_start, double t_end,
                                    std::uint64_t seed) {
  lid::LidConfig cfg;
  cfg.t_start = t_start;
  cfg.t_end = t_end;
  cfg.n_scores = j.value("n_scores", cfg.n_scores);
  const std::string rule = j.value("rule", std::string("ratio"));
  if (rule == "gap") cfg.rule = lid::Rule::Gap;
  else if (rule == "ratio") cfg.rule = lid::Rule::Ratio;
  else throw ConfigError("lid rule must be \"gap\" or \"ratio\"");
  cfg.floor_eps = j.value("floor_eps", cfg.floor_eps);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.seed = j.value("seed", seed);
  return cfg;
}

double default_trunc(const Matrix& points) {
  // 2x the largest data norm.
  double m = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    m = std::max(m, points.row(i).cwiseAbs().maxCoeff());
  return 2.0 * std::max(m, 1.0);
}

struct StageTimer {
  json& times;
  std::string name;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  ~StageTimer() {
    times[name] = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  }
};

}  // namespace

RunResult run_experiment(const std::string& config_path) {
  json config;
  try {
    config = json::parse(io::read_text_file(config_path));
  } catch (const std::exception& e) {
    RunResult r;
    r.exit_code = 2;
    r.error = std::string("config parse error: ") + e.what();
    return r;
  }
  return run_experiment_json(std::move(config));
}

RunResult run_experiment_json(json config) {
  RunResult result;

  strata::StratifiedSpaceSpec spec;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false;
  json stages;
  try {
    if (!config.contains("out"))
      throw ConfigError("config field \"out\" is required");
    result.out_dir = config.at("out").get<std::string>();
    seed = config.value("seed", std::uint64_t(0));
    threads = config.value("threads", 1);
    quiet = config.value("quiet", false);
    spec = resolve_spec(config);
    if (!config.contains("stages") || !config.at("stages").is_object())
      throw ConfigError("config field \"stages\" must be an object");
    stages = config.at("stages");
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.error = e.what();
    return result;
  }

  fs::create_directories(result.out_dir);
  const std::string hash = io::config_hash_hex(config);
  json wall_times = json::object();

  strata::Dataset ds;
  bool have_dataset = false;
  std::optional<diffusion::DiffusionModel> trained;
  std::optional<movae::MoVaeModel> movae_model;
  std::vector<std::pair<std::string, std::string>> generated;  // (method, csv)

  const auto out_path = [&](const std::string& name) {
    return result.out_dir + "/" + name;
  };
  const auto require_dataset = [&] {
    if (!have_dataset)
      throw ConfigError("missing dependency: no dataset (add a sample stage)");
  };

  try {
    if (stages.contains("sample")) {
      StageTimer timer{wall_times, "sample"};
      const auto n = config.at("n").get<Eigen::Index>();
      ds = strata::make_dataset(spec, n, seed);
      have_dataset = true;
      strata::save_bundle(ds, out_path("dataset"));
    }

    if (stages.contains("train_diffusion")) {
      StageTimer timer{wall_times, "train_diffusion"};
      require_dataset();
      const auto cfg = diffusion_config_from_json(stages.at("train_diffusion"),
                                                  derive_stream(seed, "train", 0));
      auto trained_result = diffusion::train_diffusion(ds.points, cfg);
      diffusion::save_diffusion(trained_result.model, out_path("diffusion.json"));
      diffusion::save_loss_trace(trained_result.loss_trace,
                                 out_path("loss_trace.csv"));
      trained = std::move(trained_result.model);
    }

    if (stages.contains("lid")) {
      StageTimer timer{wall_times, "lid"};
      require_dataset();
      const json& cfg_json = stages.at("lid");
      const std::string source_kind = cfg_json.value("source", std::string("trained"));
      std::optional<diffusion::ScoreSource> source;
      if (source_kind == "oracle") {
        source.emplace(diffusion::GaussianStrataMixture::from_spec(spec));
      } else if (source_kind == "checkpoint") {
        const std::string path = cfg_json.value("checkpoint", std::string());
        if (!fs::exists(path))
          throw ConfigError("missing dependency: checkpoint not found: " + path);
        source.emplace(diffusion::load_diffusion(path));
      } else if (source_kind == "trained") {
        if (!trained)
          throw ConfigError(
              "missing dependency: lid source \"trained\" needs a "
              "train_diffusion stage or a checkpoint");
        source.emplace(*trained);
      } else {
        throw ConfigError("lid source must be trained|checkpoint|oracle");
      }

      std::vector<std::pair<double, double>> windows;
      if (cfg_json.contains("windows")) {
        for (const auto& wj : cfg_json.at("windows"))
          windows.emplace_back(wj.at(0).get<double>(), wj.at(1).get<double>());
      } else {
        windows.emplace_back(cfg_json.value("t_start", 0.03),
                             cfg_json.value("t_end", 0.031));
      }
      if (windows.empty()) throw ConfigError("lid stage needs a time window");

      std::ofstream table(out_path("table1.csv"));
      table << "# config-hash: " << hash << "\n";
      table << "window,dim1_pct,dim2_pct,dim3_pct,dim4plus_pct,accuracy\n";
      for (std::size_t widx = 0; widx < windows.size(); ++widx) {
        const auto cfg = lid_config_from_json(
            cfg_json, windows[widx].first, windows[widx].second,
            derive_stream(seed, "lid", widx));
        const IntVector dims = lid::estimate_dims(*source, ds.points, cfg, threads);
        const lid::LidReport report =
            lid::strata_report(dims, cfg.alpha, ds.true_dims);
        const std::string suffix =
            windows.size() == 1 ? "" : "_w" + std::to_string(widx);
        lid::save_report(report, cfg, out_path("lid_report" + suffix + ".json"),
                         out_path("lid_points" + suffix + ".csv"), ds.true_dims);

        const double n = double(std::max<Eigen::Index>(1, dims.size()));
        double pct[5] = {0, 0, 0, 0, 0};  // slots 1..3 and 4+
        for (const auto& [dim, count] : report.dim_counts) {
          const int slot = dim >= 4 ? 4 : dim;
          pct[slot] += 100.0 * double(count) / n;
        }
        char window_text[64];
        std::snprintf(window_text, sizeof(window_text), "[%g;%g]",
                      windows[widx].first, windows[widx].second);
        table << window_text << "," << pct[1] << "," << pct[2] << "," << pct[3]
              << "," << pct[4] << ","
              << (report.accuracy >= 0 ? report.accuracy * 100.0 : -1.0)
              << "\n";
      }
    }

    if (stages.contains("baselines")) {
      StageTimer timer{wall_times, "baselines"};
      require_dataset();
      const json& cfg = stages.at("baselines");
      const int k = cfg.value("k", 20);
      const double var_threshold = cfg.value("var_threshold", 0.95);
      const auto lb = baselines::levina_bickel(ds.points, k, threads);
      const auto lpca = baselines::local_pca(ds.points, k, var_threshold, threads);
      baselines::save_baselines(lb, lpca, k, var_threshold,
                                out_path("baselines.csv"),
                                out_path("baselines.json"));
    }

    if (stages.contains("movae")) {
      StageTimer timer{wall_times, "movae"};
      require_dataset();
      const auto cfg = movae_config_from_json(stages.at("movae"),
                                              derive_stream(seed, "movae", 0),
                                              quiet);
      auto trained_movae = movae::train_movae(ds.points, cfg);
      movae::save_movae(trained_movae.model, out_path("movae.json"));
      movae::save_routing(trained_movae.routing, trained_movae.soft_probs,
                          out_path("routing.csv"));
      movae_model = std::move(trained_movae.model);
    }

    if (stages.contains("generate")) {
      StageTimer timer{wall_times, "generate"};
      const json& cfg = stages.at("generate");
      const auto n = cfg.value("n", Eigen::Index(5000));
      const std::string sampler = cfg.value("sampler", std::string("diffusion"));
      const std::uint64_t gen_seed = cfg.value("seed", derive_stream(seed, "generate", 0));
      if (sampler == "diffusion") {
        if (!trained)
          throw ConfigError("missing dependency: generate needs a diffusion model");
        require_dataset();
        const diffusion::ScoreSource source(*trained);
        const auto samples = diffusion::sample_reverse(
            source, n, cfg.value("steps", 500), cfg.value("tau", 0.01),
            cfg.value("trunc_L", default_trunc(ds.points)), gen_seed, threads);
        strata::write_csv_matrix(out_path("samples_diffusion.csv"),
                                 samples.samples, "config-hash: " + hash);
        generated.emplace_back("diffusion", out_path("samples_diffusion.csv"));
      } else if (sampler == "movae") {
        if (!movae_model)
          throw ConfigError("missing dependency: generate needs a movae model");
        const auto samples = movae::movae_generate(*movae_model, n, gen_seed);
        strata::write_csv_matrix(out_path("samples_movae.csv"), samples.samples,
                                 "config-hash: " + hash);
        generated.emplace_back("movae", out_path("samples_movae.csv"));
      } else {
        throw ConfigError("generate sampler must be diffusion|movae");
      }
    }

    if (stages.contains("eval")) {
      StageTimer timer{wall_times, "eval"};
      if (generated.empty())
        throw ConfigError("missing dependency: eval needs a generate stage");
      const json& cfg = stages.at("eval");
      const int n_projections = cfg.value("n_projections", 128);
      const auto n_ref = cfg.value("n_samples", Eigen::Index(5000));
      // Reference: clean intrinsic sample through the same embedding.
      strata::StratifiedSpaceSpec clean = spec;
      clean.noise_sigma = 0.0;
      const strata::Dataset reference =
          strata::make_dataset(clean, n_ref, derive_stream(seed, "eval_ref", 0));

      json metrics = json::object();
      std::ofstream sweep(out_path("w1_sweep.csv"));
      sweep << "# config-hash: " << hash << "\n";
      sweep << "sigma,method,w1\n";
      for (const auto& [method, path] : generated) {
        const Matrix samples = strata::read_csv_matrix(path);
        const double w1 = metrics::sliced_w1(samples, reference.points,
                                             n_projections,
                                             derive_stream(seed, "eval_w1", 0),
                                             threads);
        metrics[method] = {{"metric", "sliced_w1"},
                           {"value", w1},
                           {"n_projections", n_projections},
                           {"seed", seed}};
        sweep << spec.noise_sigma << "," << method << "," << w1 << "\n";
      }
      io::write_text_file(out_path("metrics.json"), metrics.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    result.exit_code = 3;
    result.error = e.what();
    io::write_text_file(out_path("FAILED"), std::string(e.what()) + "\n");
    return result;
  }

  json meta;
  meta["config"] = config;
  meta["config_hash"] = hash;
  meta["version"] = "0.1.0";
  meta["wall_times"] = wall_times;
  io::write_text_file(out_path("meta.json"), meta.dump(2) + "\n");
  return result;
}

}  // namespace stratlearn::experiment
