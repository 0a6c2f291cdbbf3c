#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "softrank/denoiser.hpp"
#include "softrank/experiment.hpp"
#include "softrank/sampler.hpp"
#include "softrank/tasks.hpp"

namespace softrank::io {

using nlohmann::json;

inline constexpr const char* kVersion = "v0.1.0-desk";

// --- enum <-> string ---

inline std::string to_string(DenoiserVariant v) {
  switch (v) {
    case DenoiserVariant::Oracle: return "oracle";
    case DenoiserVariant::TabularCgpl: return "tabular";
    case DenoiserVariant::MlpCgpl: return "mlp";
    case DenoiserVariant::MlpPointerCgpl: return "pointer";
  }
  throw std::logic_error("unknown variant");
}

inline DenoiserVariant variant_from_string(const std::string& s) {
  if (s == "oracle") return DenoiserVariant::Oracle;
  if (s == "tabular") return DenoiserVariant::TabularCgpl;
  if (s == "mlp") return DenoiserVariant::MlpCgpl;
  if (s == "pointer") return DenoiserVariant::MlpPointerCgpl;
  throw std::invalid_argument("unknown model variant: " + s);
}

inline std::string to_string(Reference r) {
  return r == Reference::UniformUnitCube ? "cube" : "grid";
}

inline Reference reference_from_string(const std::string& s) {
  if (s == "cube") return Reference::UniformUnitCube;
  if (s == "grid") return Reference::GridOfRandomPermutation;
  throw std::invalid_argument("unknown reference: " + s);
}

inline std::string to_string(ForwardProcess f) {
  return f == ForwardProcess::SoftRank ? "softrank" : "riffle";
}

inline ForwardProcess forward_from_string(const std::string& s) {
  if (s == "softrank") return ForwardProcess::SoftRank;
  if (s == "riffle") return ForwardProcess::RiffleShuffle;
  throw std::invalid_argument("unknown forward process: " + s);
}

inline std::string to_string(Parametrization p) {
  return p == Parametrization::PredictSigma0 ? "sigma0" : "sigmaprev";
}

inline Parametrization param_from_string(const std::string& s) {
  if (s == "sigma0") return Parametrization::PredictSigma0;
  if (s == "sigmaprev") return Parametrization::PredictSigmaPrev;
  throw std::invalid_argument("unknown parametrization: " + s);
}

inline std::string to_string(TaskKind t) {
  return t == TaskKind::Sorting ? "sorting" : "tsp";
}

inline TaskKind task_from_string(const std::string& s) {
  if (s == "sorting") return TaskKind::Sorting;
  if (s == "tsp") return TaskKind::Tsp;
  throw std::invalid_argument("unknown task: " + s);
}

// --- small helpers ---

/// FNV-1a over the canonical config text; echoed into output headers so
/// runs can be matched to their configuration.
inline std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

inline void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& l : lines) out << l.dump() << "\n";
}

inline std::vector<json> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    lines.push_back(json::parse(line));
  }
  return lines;
}

inline json header(const std::string& schema, const json& config) {
  json h;
  h["schema"] = schema;
  h["version"] = kVersion;
  h["config"] = config;
  h["config_hash"] = config_hash(config.dump());
  return h;
}

// --- datasets ---

inline void write_sorting_dataset(const std::string& path,
                                  const std::vector<SortingInstance>& data,
                                  const json& config) {
  std::vector<json> lines{header("softrank.dataset.sorting.v1", config)};
  for (const auto& inst : data) {
    json row;
    row["values"] = inst.values;
    row["truth"] = inst.ground_truth.ranks();
    lines.push_back(std::move(row));
  }
  write_lines(path, lines);
}

inline std::vector<SortingInstance> read_sorting_dataset(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0].value("schema", "") != "softrank.dataset.sorting.v1")
    throw std::runtime_error("not a sorting dataset: " + path);
  std::vector<SortingInstance> data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    SortingInstance inst{lines[i].at("values").get<std::vector<double>>(),
                         Permutation(lines[i].at("truth").get<std::vector<int>>())};
    data.push_back(std::move(inst));
  }
  return data;
}

inline void write_tsp_dataset(const std::string& path,
                              const std::vector<TspInstance>& data,
                              const json& config) {
  std::vector<json> lines{header("softrank.dataset.tsp.v1", config)};
  for (const auto& inst : data) {
    json row;
    auto& pts = row["points"] = json::array();
    for (const auto& p : inst.points) pts.push_back({p[0], p[1]});
    if (inst.optimal_tour) {
      row["opt_tour"] = inst.optimal_tour->ranks();
      row["opt_len"] = *inst.optimal_length;
    }
    lines.push_back(std::move(row));
  }
  write_lines(path, lines);
}

inline std::vector<TspInstance> read_tsp_dataset(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0].value("schema", "") != "softrank.dataset.tsp.v1")
    throw std::runtime_error("not a tsp dataset: " + path);
  std::vector<TspInstance> data;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    TspInstance inst;
    for (const auto& p : lines[i].at("points"))
      inst.points.push_back({p[0].get<double>(), p[1].get<double>()});
    if (lines[i].contains("opt_tour")) {
      inst.optimal_tour = Permutation(lines[i]["opt_tour"].get<std::vector<int>>());
      inst.optimal_length = lines[i]["opt_len"].get<double>();
    }
    data.push_back(std::move(inst));
  }
  return data;
}

// --- checkpoints ---

inline void save_checkpoint(const std::string& path, const DenoiserModel& model) {
  json c;
  c["schema"] = "softrank.checkpoint.v1";
  c["version"] = kVersion;
  c["variant"] = to_string(model.variant());
  c["n"] = model.arch().n;
  c["feat_dim"] = model.arch().feat_dim;
  c["hidden"] = model.arch().hidden;
  c["emb"] = model.arch().emb;
  c["time_buckets"] = model.arch().time_buckets;
  c["params"] = model.params();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << c.dump() << "\n";
}

inline DenoiserModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing checkpoint: " + path);
  json c = json::parse(in);
  if (c.value("schema", "") != "softrank.checkpoint.v1")
    throw std::runtime_error("not a checkpoint: " + path);
  ModelArch arch;
  arch.variant = variant_from_string(c.at("variant").get<std::string>());
  arch.n = c.at("n").get<std::size_t>();
  arch.feat_dim = c.at("feat_dim").get<std::size_t>();
  arch.hidden = c.at("hidden").get<std::size_t>();
  arch.emb = c.at("emb").get<std::size_t>();
  arch.time_buckets = c.at("time_buckets").get<std::size_t>();
  return DenoiserModel::restore(arch, c.at("params").get<std::vector<double>>());
}

// --- samples, trajectories, metrics ---

inline void write_samples(const std::string& path,
                          const std::vector<Permutation>& rankings,
                          const json& config) {
  std::vector<json> lines{header("softrank.samples.v1", config)};
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    json row;
    row["index"] = i;
    row["ranking"] = rankings[i].ranks();
    lines.push_back(std::move(row));
  }
  write_lines(path, lines);
}

inline std::vector<Permutation> read_samples(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0].value("schema", "") != "softrank.samples.v1")
    throw std::runtime_error("not a samples file: " + path);
  std::vector<Permutation> out;
  for (std::size_t i = 1; i < lines.size(); ++i)
    out.push_back(Permutation(lines[i].at("ranking").get<std::vector<int>>()));
  return out;
}

inline void write_trajectories(const std::string& path,
                               const std::vector<Trajectory>& trajectories,
                               const json& config) {
  std::vector<json> lines{header("softrank.trajectories.v1", config)};
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    for (const auto& step : trajectories[i]) {
      json row;
      row["run"] = i;
      row["k"] = step.k;
      row["t"] = step.t;
      row["z"] = step.z;
      row["induced"] = step.induced.ranks();
      if (step.sigma0_hat)
        row["sigma0_hat"] = step.sigma0_hat->ranks();
      else
        row["sigma0_hat"] = nullptr;
      lines.push_back(std::move(row));
    }
  write_lines(path, lines);
}

inline json sorting_metrics_json(const SortingMetrics& m) {
  json row;
  row["kendall_tau"] = m.kendall_tau;
  row["accuracy"] = m.accuracy;
  row["correctness"] = m.correctness;
  row["count"] = m.count;
  return row;
}

inline json tsp_metrics_json(const TspMetrics& m) {
  json row;
  row["mean_length"] = m.mean_length;
  row["mean_gap"] = m.mean_gap;
  row["count"] = m.count;
  return row;
}

inline void write_metrics(const std::string& path, const json& config,
                          const std::vector<json>& rows) {
  std::vector<json> lines{header("softrank.metrics.v1", config)};
  lines.insert(lines.end(), rows.begin(), rows.end());
  write_lines(path, lines);
}

inline void write_loss_trace(const std::string& path, const TrainResult& trace,
                             const json& config) {
  std::vector<json> lines{header("softrank.loss_trace.v1", config)};
  for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
    json row;
    row["epoch"] = e;
    row["loss"] = trace.epoch_loss[e];
    lines.push_back(std::move(row));
  }
  write_lines(path, lines);
}

}  // namespace softrank::io
