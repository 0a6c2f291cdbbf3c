// Command-line front end: dataset generation, training, sampling,
// evaluation, kernel validation, and ablation runs over the soft-rank
// diffusion library. All artifacts are line-delimited JSON with a one-line
// schema header carrying the effective configuration.
//
// Exit codes: 0 success, 1 usage/config error, 2 validation failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "softrank/experiment.hpp"
#include "softrank/io.hpp"

using namespace softrank;
using io::json;

namespace {

struct Options {
  std::string task = "sorting";
  std::size_t n = 5;
  std::string model = "mlp";
  double eta = 0.3;
  std::size_t steps = 20;
  std::string reference = "cube";
  std::string forward = "softrank";
  std::string param = "sigma0";
  std::uint64_t seed = 0;
  std::string out;
  std::size_t count = 1000;
  std::size_t threads = 1;
  bool trajectories = false;
  std::string data_path;
  std::string samples_path;
  std::string checkpoint_path;
  double lr = 0.05;
  std::size_t batch = 32;
  std::size_t epochs = 80;
  std::size_t hidden = 48;
  std::size_t emb = 12;
  std::string forwards_list = "softrank,riffle";
  std::string params_list = "sigma0,sigmaprev";
  std::string models_list = "mlp";
};

std::string default_out_root() {
  const char* env = std::getenv("SOFTRANK_OUT");
  return env && *env ? env : ".";
}

std::string out_file(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out);
  return (std::filesystem::path(o.out) / name).string();
}

BridgeParams bridge_of(const Options& o) {
  return BridgeParams::uniform(o.eta, o.steps,
                               io::reference_from_string(o.reference));
}

CorruptionSpec spec_of(const Options& o) {
  return CorruptionSpec{bridge_of(o), io::forward_from_string(o.forward),
                        io::param_from_string(o.param)};
}

TrainBudget budget_of(const Options& o) {
  return TrainBudget{o.lr, o.batch, o.epochs, o.hidden, o.emb};
}

/// Effective configuration echoed into every output header. The output
/// directory is deliberately omitted: it is where the file already lives.
json config_json(const Options& o, const std::string& command) {
  json c;
  c["command"] = command;
  c["task"] = o.task;
  c["n"] = o.n;
  c["model"] = o.model;
  c["eta"] = o.eta;
  c["steps"] = o.steps;
  c["reference"] = o.reference;
  c["forward"] = o.forward;
  c["param"] = o.param;
  c["seed"] = o.seed;
  c["count"] = o.count;
  c["lr"] = o.lr;
  c["batch"] = o.batch;
  c["epochs"] = o.epochs;
  c["hidden"] = o.hidden;
  c["emb"] = o.emb;
  return c;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Dataset load_training_examples(const Options& o) {
  Dataset data;
  if (io::task_from_string(o.task) == TaskKind::Sorting) {
    const auto insts = o.data_path.empty()
                           ? generate_sorting_dataset(o.n, o.count, o.seed)
                           : io::read_sorting_dataset(o.data_path);
    for (const auto& inst : insts) data.push_back(sorting_example(inst));
  } else {
    const auto insts = o.data_path.empty()
                           ? generate_tsp_dataset(o.n, o.count, o.seed, true)
                           : io::read_tsp_dataset(o.data_path);
    for (const auto& inst : insts) data.push_back(tsp_example(inst));
  }
  return data;
}

int cmd_gen_data(const Options& o) {
  const json cfg = config_json(o, "gen-data");
  if (io::task_from_string(o.task) == TaskKind::Sorting) {
    io::write_sorting_dataset(out_file(o, "dataset.jsonl"),
                              generate_sorting_dataset(o.n, o.count, o.seed), cfg);
  } else {
    io::write_tsp_dataset(out_file(o, "dataset.jsonl"),
                          generate_tsp_dataset(o.n, o.count, o.seed, o.n <= 9),
                          cfg);
  }
  std::cout << "wrote " << out_file(o, "dataset.jsonl") << " (" << o.count
            << " instances)\n";
  return 0;
}

int cmd_train(Options o) {
  const Dataset data = load_training_examples(o);
  if (data.empty()) {
    std::cerr << "train: empty dataset\n";
    return 1;
  }
  o.n = data.front().items.n;
  const auto feat_dim = data.front().items.dim;
  DenoiserModel model =
      build_model(io::variant_from_string(o.model), o.n, feat_dim, budget_of(o),
                  o.steps, o.seed + 1);
  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.corruption = spec_of(o);
  cfg.seed = o.seed;
  const auto trace = train(model, data, cfg);
  const json jcfg = config_json(o, "train");
  io::save_checkpoint(out_file(o, "checkpoint.json"), model);
  io::write_loss_trace(out_file(o, "loss_trace.jsonl"), trace, jcfg);
  std::cout << "final epoch loss " << trace.epoch_loss.back() << "\n"
            << "wrote " << out_file(o, "checkpoint.json") << "\n";
  return 0;
}

int cmd_sample(const Options& o) {
  const DenoiserModel model = io::load_checkpoint(o.checkpoint_path);
  std::vector<ItemMatrix> instances;
  if (io::task_from_string(o.task) == TaskKind::Sorting) {
    for (const auto& inst : io::read_sorting_dataset(o.data_path))
      instances.push_back(sorting_items(inst));
  } else {
    for (const auto& inst : io::read_tsp_dataset(o.data_path))
      instances.push_back(tsp_items(inst));
  }
  if (instances.empty()) {
    std::cerr << "sample: empty dataset\n";
    return 1;
  }
  if (o.count < instances.size()) instances.resize(o.count);
  const CorruptionSpec spec = spec_of(o);
  const json cfg = config_json(o, "sample");

  if (o.trajectories) {
    if (spec.forward != ForwardProcess::SoftRank ||
        spec.param != Parametrization::PredictSigma0) {
      std::cerr << "sample: --trajectories requires --forward softrank "
                   "--param sigma0\n";
      return 1;
    }
    std::vector<Permutation> rankings(instances.size(),
                                      Permutation::identity(2));
    std::vector<Trajectory> trajectories(instances.size());
    parallel_for(instances.size(), o.threads, [&](std::size_t i) {
      Rng rng = make_stream(o.seed, i);
      SamplerConfig scfg{spec.bridge, true};
      auto res = reverse_sample(model, instances[i], scfg, rng);
      rankings[i] = std::move(res.ranking);
      trajectories[i] = std::move(res.trajectory);
    });
    io::write_samples(out_file(o, "samples.jsonl"), rankings, cfg);
    io::write_trajectories(out_file(o, "trajectories.jsonl"), trajectories, cfg);
  } else {
    const auto rankings =
        sample_rankings(model, instances, spec, o.seed, o.threads);
    io::write_samples(out_file(o, "samples.jsonl"), rankings, cfg);
  }
  std::cout << "wrote " << out_file(o, "samples.jsonl") << " ("
            << instances.size() << " rankings)\n";
  return 0;
}

int cmd_eval(const Options& o) {
  const auto rankings = io::read_samples(o.samples_path);
  const json cfg = config_json(o, "eval");
  if (io::task_from_string(o.task) == TaskKind::Sorting) {
    auto data = io::read_sorting_dataset(o.data_path);
    if (rankings.size() > data.size()) {
      std::cerr << "eval: more samples than dataset instances\n";
      return 1;
    }
    data.erase(data.begin() + static_cast<std::ptrdiff_t>(rankings.size()),
               data.end());
    const auto m = score_sorting(rankings, data);
    io::write_metrics(out_file(o, "metrics.jsonl"), cfg,
                      {io::sorting_metrics_json(m)});
    std::cout << "kendall_tau " << m.kendall_tau << "\naccuracy " << m.accuracy
              << "\ncorrectness " << m.correctness << "\ncount " << m.count
              << "\n";
  } else {
    auto data = io::read_tsp_dataset(o.data_path);
    if (rankings.size() > data.size()) {
      std::cerr << "eval: more samples than dataset instances\n";
      return 1;
    }
    data.erase(data.begin() + static_cast<std::ptrdiff_t>(rankings.size()),
               data.end());
    TspMetrics m;
    m.count = data.size();
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!data[i].optimal_length) {
        std::cerr << "eval: tsp instance " << i << " lacks an exact label\n";
        return 1;
      }
      const double len = tour_length(data[i], rankings[i].inverse());
      m.mean_length += len;
      m.mean_gap += optimality_gap(len, *data[i].optimal_length);
    }
    m.mean_length /= static_cast<double>(m.count);
    m.mean_gap /= static_cast<double>(m.count);
    io::write_metrics(out_file(o, "metrics.jsonl"), cfg,
                      {io::tsp_metrics_json(m)});
    std::cout << "mean_length " << m.mean_length << "\nmean_gap " << m.mean_gap
              << "\ncount " << m.count << "\n";
  }
  return 0;
}

struct Check {
  std::string name;
  bool pass;
  double stat;
  double bound;
};

int cmd_validate_kernels(const Options& o) {
  std::vector<Check> checks;
  Rng rng = make_rng(o.seed);

  // Analytic identities of the joint covariance.
  double worst_ratio = 0.0, worst_var = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double t = 0.05 + 0.9 * uniform01(rng);
    const double s = t * (0.05 + 0.9 * uniform01(rng));
    const double eta = 0.1 + 2.0 * uniform01(rng);
    const auto jc = joint_covariance(s, t, eta);
    worst_ratio = std::max(worst_ratio, std::abs(jc.c_st / jc.v_t - s / t));
    worst_var = std::max(worst_var, std::abs(jc.v_s - jc.c_st * jc.c_st / jc.v_t -
                                             eta * eta * s * (t - s) / t));
  }
  checks.push_back({"covariance_ratio_identity", worst_ratio < 1e-12, worst_ratio, 1e-12});
  checks.push_back({"conditional_variance_identity", worst_var < 1e-12, worst_var, 1e-12});

  // Closed form equals generic bivariate-Gaussian conditioning.
  double worst_cond = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double t = 0.05 + 0.9 * uniform01(rng);
    const double s = t * (0.05 + 0.9 * uniform01(rng));
    const double eta = 0.1 + 2.0 * uniform01(rng);
    const SoftRankVector z0({uniform01(rng), uniform01(rng)});
    const SoftRankVector z1({uniform01(rng), uniform01(rng)});
    const SoftRankVector zt({uniform01(rng), uniform01(rng)});
    const auto m = bridge_mean_var(ReverseKernelQuery(s, t, eta, zt, z0, z1));
    const auto jc = joint_covariance(s, t, eta);
    for (std::size_t c = 0; c < 2; ++c) {
      const double mu_s = (1.0 - s) * z0[c] + s * z1[c];
      const double mu_t = (1.0 - t) * z0[c] + t * z1[c];
      worst_cond = std::max(
          worst_cond, std::abs(m.mean[c] - (mu_s + jc.c_st / jc.v_t * (zt[c] - mu_t))));
    }
    worst_cond =
        std::max(worst_cond, std::abs(m.var - (jc.v_s - jc.c_st * jc.c_st / jc.v_t)));
  }
  checks.push_back({"generic_conditioning_agreement", worst_cond < 1e-12, worst_cond, 1e-12});

  // Reflection against the iterative bounce oracle.
  double worst_reflect = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double x = -10.0 + 20.0 * uniform01(rng);
    double y = x;
    while (y < 0.0 || y > 1.0) {
      if (y < 0.0) y = -y;
      if (y > 1.0) y = 2.0 - y;
    }
    worst_reflect = std::max(worst_reflect, std::abs(reflect(x) - y));
  }
  checks.push_back({"reflection_bounce_agreement", worst_reflect < 1e-12, worst_reflect, 1e-12});

  // Monte-Carlo reverse-kernel variance at the configured eta.
  {
    const double s = 0.25, t = 0.5;
    const SoftRankVector mid({0.5, 0.5});
    const ReverseKernelQuery q(s, t, o.eta, mid, mid, mid);
    const int draws = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double v = sample_reverse_step(q, rng)[0];
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / draws;
    const double var = (sum2 - draws * mean * mean) / (draws - 1);
    const double var_th = o.eta * o.eta * s * (t - s) / t;
    const double ratio = std::abs(var / var_th - 1.0);
    checks.push_back({"reverse_kernel_variance_ratio", ratio < 0.1, ratio, 0.1});
    const double se = std::sqrt(var_th / draws);
    checks.push_back({"reverse_kernel_mean", std::abs(mean - 0.5) < 3.0 * se,
                      std::abs(mean - 0.5), 3.0 * se});
  }

  // Chapman-Kolmogorov: two-step vs one-step moments.
  {
    const double t = 0.8, s = 0.5, r = 0.25;
    const SoftRankVector z0({0.45, 0.45}), z1({0.55, 0.55}), zt({0.5, 0.5});
    const int draws = 100000;
    double one = 0.0, one2 = 0.0, two = 0.0, two2 = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double a =
          sample_reverse_step(ReverseKernelQuery(r, t, o.eta, zt, z0, z1), rng)[0];
      one += a;
      one2 += a * a;
      const auto zs =
          sample_reverse_step(ReverseKernelQuery(s, t, o.eta, zt, z0, z1), rng);
      const double b =
          sample_reverse_step(ReverseKernelQuery(r, s, o.eta, zs, z0, z1), rng)[0];
      two += b;
      two2 += b * b;
    }
    const double mean1 = one / draws, mean2 = two / draws;
    const double var_th =
        bridge_mean_var(ReverseKernelQuery(r, t, o.eta, zt, z0, z1)).var;
    const double se = std::sqrt(2.0 * var_th / draws);
    checks.push_back({"chapman_kolmogorov_mean", std::abs(mean1 - mean2) < 3.0 * se,
                      std::abs(mean1 - mean2), 3.0 * se});
    const double v1 = (one2 - draws * mean1 * mean1) / (draws - 1);
    const double v2 = (two2 - draws * mean2 * mean2) / (draws - 1);
    const double se_v = var_th * std::sqrt(2.0 * 2.0 / (draws - 1));
    checks.push_back({"chapman_kolmogorov_variance", std::abs(v1 - v2) < 3.0 * se_v,
                      std::abs(v1 - v2), 3.0 * se_v});
  }

  std::vector<json> rows;
  bool all_pass = true;
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << " stat=" << c.stat
              << " bound=" << c.bound << "\n";
    json row;
    row["name"] = c.name;
    row["pass"] = c.pass;
    row["stat"] = c.stat;
    row["bound"] = c.bound;
    rows.push_back(std::move(row));
  }
  io::write_metrics(out_file(o, "validation.jsonl"),
                    config_json(o, "validate-kernels"), rows);
  return all_pass ? 0 : 2;
}

int cmd_ablate(const Options& o) {
  std::vector<ForwardProcess> forwards;
  for (const auto& s : split_list(o.forwards_list))
    forwards.push_back(io::forward_from_string(s));
  std::vector<Parametrization> params;
  for (const auto& s : split_list(o.params_list))
    params.push_back(io::param_from_string(s));
  std::vector<DenoiserVariant> variants;
  for (const auto& s : split_list(o.models_list))
    variants.push_back(io::variant_from_string(s));
  if (forwards.empty() || params.empty() || variants.empty()) {
    std::cerr << "ablate: empty grid\n";
    return 1;
  }

  const auto rows = run_ablation(forwards, params, variants, o.n, o.count,
                                 std::max<std::size_t>(o.count / 5, 50),
                                 bridge_of(o), budget_of(o), o.seed, o.threads);
  std::vector<json> jrows;
  std::cout << "forward_process  reverse_model  parametrization  kendall_tau  "
               "accuracy  correctness\n";
  for (const auto& r : rows) {
    json jr;
    jr["forward_process"] = io::to_string(r.forward);
    jr["reverse_model"] = io::to_string(r.model);
    jr["parametrization"] = io::to_string(r.param);
    jr["kendall_tau"] = r.metrics.kendall_tau;
    jr["accuracy"] = r.metrics.accuracy;
    jr["correctness"] = r.metrics.correctness;
    jr["final_loss"] = r.final_loss;
    jrows.push_back(jr);
    std::cout << io::to_string(r.forward) << "  " << io::to_string(r.model)
              << "  " << io::to_string(r.param) << "  " << r.metrics.kendall_tau
              << "  " << r.metrics.accuracy << "  " << r.metrics.correctness
              << "\n";
  }
  io::write_metrics(out_file(o, "ablation.jsonl"), config_json(o, "ablate"),
                    jrows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft-rank permutation diffusion: data, training, sampling, "
               "evaluation, and validation"};
  app.set_config("--config", "", "read defaults from a config file");
  Options o;
  o.out = default_out_root();

  const auto add_common = [&](CLI::App* cmd, bool needs_seed) {
    cmd->add_option("--out", o.out, "output directory (default: $SOFTRANK_OUT or .)")
        ->capture_default_str();
    if (needs_seed)
      cmd->add_option("--seed", o.seed, "deterministic seed")->required();
    cmd->add_option("--threads", o.threads, "worker thread cap")
        ->capture_default_str();
  };
  const auto add_process = [&](CLI::App* cmd) {
    cmd->add_option("--eta", o.eta, "bridge noise scale")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--steps", o.steps, "time-grid step count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--reference", o.reference, "reference distribution")
        ->check(CLI::IsMember({"cube", "grid"}))
        ->capture_default_str();
    cmd->add_option("--forward", o.forward, "forward corruption process")
        ->check(CLI::IsMember({"softrank", "riffle"}))
        ->capture_default_str();
    cmd->add_option("--param", o.param, "reverse parametrization")
        ->check(CLI::IsMember({"sigma0", "sigmaprev"}))
        ->capture_default_str();
  };
  const auto add_train_hypers = [&](CLI::App* cmd) {
    cmd->add_option("--lr", o.lr, "learning rate")->capture_default_str();
    cmd->add_option("--batch", o.batch, "minibatch size")->capture_default_str();
    cmd->add_option("--epochs", o.epochs, "training epochs")
        ->capture_default_str();
    cmd->add_option("--hidden", o.hidden, "MLP hidden width")
        ->capture_default_str();
    cmd->add_option("--emb", o.emb, "pointer embedding width")
        ->capture_default_str();
  };

  auto* gen = app.add_subcommand("gen-data", "generate a benchmark dataset");
  gen->add_option("--task", o.task, "task kind")
      ->check(CLI::IsMember({"sorting", "tsp"}))
      ->capture_default_str();
  gen->add_option("--n", o.n, "items per instance")->capture_default_str();
  gen->add_option("--count", o.count, "instance count")->capture_default_str();
  add_common(gen, true);

  auto* tr = app.add_subcommand("train", "train a denoiser");
  tr->add_option("--task", o.task)->check(CLI::IsMember({"sorting", "tsp"}))
      ->capture_default_str();
  tr->add_option("--n", o.n)->capture_default_str();
  tr->add_option("--model", o.model, "denoiser variant")
      ->check(CLI::IsMember({"tabular", "mlp", "pointer"}))
      ->capture_default_str();
  tr->add_option("--count", o.count, "generated dataset size")
      ->capture_default_str();
  tr->add_option("--data", o.data_path, "dataset file (else generated)");
  add_process(tr);
  add_train_hypers(tr);
  add_common(tr, true);

  auto* sa = app.add_subcommand("sample", "generate permutations");
  sa->add_option("--task", o.task)->check(CLI::IsMember({"sorting", "tsp"}))
      ->capture_default_str();
  sa->add_option("--checkpoint", o.checkpoint_path, "model checkpoint")
      ->required();
  sa->add_option("--data", o.data_path, "dataset file")->required();
  sa->add_option("--count", o.count, "instances to sample")
      ->capture_default_str();
  sa->add_flag("--trajectories", o.trajectories, "record reverse trajectories");
  add_process(sa);
  add_common(sa, true);

  auto* ev = app.add_subcommand("eval", "score a samples file");
  ev->add_option("--task", o.task)->check(CLI::IsMember({"sorting", "tsp"}))
      ->capture_default_str();
  ev->add_option("--data", o.data_path, "dataset file")->required();
  ev->add_option("--samples", o.samples_path, "samples file")->required();
  add_common(ev, false);

  auto* va = app.add_subcommand("validate-kernels",
                                "analytic and Monte-Carlo kernel checks");
  va->add_option("--eta", o.eta)->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_common(va, true);

  auto* ab = app.add_subcommand("ablate", "train and score a config grid");
  ab->add_option("--n", o.n)->capture_default_str();
  ab->add_option("--count", o.count, "training set size")->capture_default_str();
  ab->add_option("--forwards", o.forwards_list, "comma list of forwards")
      ->capture_default_str();
  ab->add_option("--params", o.params_list, "comma list of parametrizations")
      ->capture_default_str();
  ab->add_option("--models", o.models_list, "comma list of model variants")
      ->capture_default_str();
  ab->add_option("--eta", o.eta)->check(CLI::PositiveNumber)
      ->capture_default_str();
  ab->add_option("--steps", o.steps)->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_train_hypers(ab);
  add_common(ab, true);

  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(o);
    if (tr->parsed()) return cmd_train(o);
    if (sa->parsed()) return cmd_sample(o);
    if (ev->parsed()) return cmd_eval(o);
    if (va->parsed()) return cmd_validate_kernels(o);
    if (ab->parsed()) return cmd_ablate(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
