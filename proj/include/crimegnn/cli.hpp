#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crimegnn/bench.hpp"
#include "crimegnn/error.hpp"
#include "crimegnn/io.hpp"
#include "crimegnn/model.hpp"

namespace crimegnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "n,k,p_in,p_out"
inline PlantedSpec parse_planted(const std::string& text, std::uint64_t seed) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 4) throw UsageError("--planted expects n,k,p_in,p_out");
  PlantedSpec spec;
  spec.seed = seed;
  auto whole = [&](const std::string& s, std::size_t& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw UsageError("--planted: bad integer '" + s + "'");
    }
  };
  auto real = [&](const std::string& s, double& out) {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw UsageError("--planted: bad probability '" + s + "'");
    }
  };
  whole(parts[0], spec.n);
  whole(parts[1], spec.k);
  real(parts[2], spec.p_in);
  real(parts[3], spec.p_out);
  return spec;
}

namespace detail {

struct DatasetFlags {
  std::optional<std::string> input;
  std::optional<std::string> labels;
  std::optional<std::string> planted;
};

struct GnnFlags {
  TrainConfig cfg;
};

inline void add_gnn_flags(CLI::App* cmd, GnnFlags& flags) {
  cmd->add_option("--epochs", flags.cfg.epochs, "GNN training epochs")->capture_default_str();
  cmd->add_option("--lr", flags.cfg.lr, "GNN Adam learning rate")->capture_default_str();
  cmd->add_option("--hidden", flags.cfg.hidden, "GNN hidden width")->capture_default_str();
  cmd->add_option("--feature-dim", flags.cfg.feature_dim, "GNN input feature columns")
      ->capture_default_str();
  cmd->add_option("--depth", flags.cfg.depth, "GNN propagation layers")->capture_default_str();
  cmd->add_option("--lambda", flags.cfg.lambda, "collapse-penalty weight")->capture_default_str();
}

inline DatasetSpec dataset_from(const DatasetFlags& flags, std::uint64_t seed,
                                std::ostream& err) {
  if (flags.input && flags.planted) throw UsageError("give either --input or --planted, not both");
  if (!flags.input && !flags.planted) throw UsageError("a dataset is required: --input or --planted");
  if (flags.planted) {
    if (flags.labels) throw UsageError("--labels only applies to --input");
    auto spec = parse_planted(*flags.planted, seed);
    if (!spec.assortative()) err << "warning: p_out > p_in, planted groups are anti-communities\n";
    return spec;
  }
  return FileDataset{*flags.input, flags.labels};
}

class Output {
 public:
  Output(const std::optional<std::string>& path, std::ostream& fallback) : stream_(&fallback) {
    if (path) {
      file_.open(*path, std::ios::binary);
      if (!file_) throw Error("cannot write '" + *path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

}  // namespace detail

// Entry point for the command-line tool. Exit codes: 0 success, 1 usage
// error, 2 data error.
inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Community detection: modularity-trained GNN and classical baselines"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "run one method and write its partition");
  detail::DatasetFlags detect_data;
  std::optional<std::string> detect_truth;
  std::string detect_method = "gnn";
  std::optional<std::size_t> detect_k;
  std::uint64_t detect_seed = 0;
  std::optional<std::string> detect_output;
  std::string detect_format = "json";
  std::optional<std::string> save_model_path;
  detail::GnnFlags detect_gnn;
  detect->add_option("--input", detect_data.input, "edge-list file");
  detect->add_option("--planted", detect_data.planted, "planted partition n,k,p_in,p_out");
  detect->add_option("--truth", detect_truth, "ground-truth label file (with --input)");
  detect->add_option("--method", detect_method, "gnn, louvain, spectral or infomap")
      ->capture_default_str();
  detect->add_option("--k", detect_k, "number of communities (gnn, spectral)");
  detect->add_option("--seed", detect_seed, "random seed")->capture_default_str();
  detect->add_option("--output", detect_output, "output file (default stdout)");
  detect->add_option("--format", detect_format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  detect->add_option("--save-model", save_model_path, "write the trained GNN model here");
  detail::add_gnn_flags(detect, detect_gnn);

  // bench
  auto* bench = app.add_subcommand("bench", "run several methods and write a report");
  detail::DatasetFlags bench_data;
  std::string bench_methods = "gnn,louvain,spectral,infomap";
  std::optional<std::size_t> bench_k;
  std::uint64_t bench_seed = 0;
  std::optional<std::string> bench_report;
  std::string bench_format = "csv";
  bool bench_timing = false;
  detail::GnnFlags bench_gnn;
  bench->add_option("--input", bench_data.input, "edge-list file");
  bench->add_option("--labels", bench_data.labels, "ground-truth label file (with --input)");
  bench->add_option("--planted", bench_data.planted, "planted partition n,k,p_in,p_out");
  bench->add_option("--methods", bench_methods, "comma-separated method list")
      ->capture_default_str();
  bench->add_option("--k", bench_k, "number of communities (gnn, spectral)");
  bench->add_option("--seed", bench_seed, "random seed")->capture_default_str();
  bench->add_option("--report", bench_report, "report file (default stdout)");
  bench->add_option("--format", bench_format, "csv or json")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  bench->add_flag("--timing", bench_timing, "fill the seconds column (output no longer reproducible)");
  detail::add_gnn_flags(bench, bench_gnn);

  // generate
  auto* generate = app.add_subcommand("generate", "write a planted-partition graph");
  std::string gen_planted;
  std::uint64_t gen_seed = 0;
  std::string gen_output;
  std::optional<std::string> gen_labels;
  generate->add_option("--planted", gen_planted, "n,k,p_in,p_out")->required();
  generate->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  generate->add_option("--output", gen_output, "edge-list file")->required();
  generate->add_option("--labels", gen_labels, "planted label file");

  // eval
  auto* eval = app.add_subcommand("eval", "score a partition file against a graph");
  std::string eval_partition;
  std::string eval_input;
  std::optional<std::string> eval_truth;
  eval->add_option("--partition", eval_partition, "partition file (JSON or CSV)")->required();
  eval->add_option("--input", eval_input, "edge-list file")->required();
  eval->add_option("--truth", eval_truth, "ground-truth label file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*detect) {
      const Method method = [&] {
        try {
          return parse_method(detect_method);
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
      }();
      const auto spec = detail::dataset_from(detect_data, detect_seed, err);
      if (detect_truth && !detect_data.input) throw UsageError("--truth only applies to --input");
      Dataset data = load_dataset(
          detect_truth ? DatasetSpec(FileDataset{*detect_data.input, detect_truth}) : spec);
      if (detect_data.planted) data.truth.reset();  // detect scores only against --truth

      RunOptions run;
      run.k = detect_k;
      run.seed = detect_seed;
      run.truth = data.truth ? &*data.truth : nullptr;
      run.gnn = detect_gnn.cfg;
      const RunResult result = run_method(data.graph, method, run);

      detail::Output sink(detect_output, out);
      if (detect_format == "json") {
        sink.get() << partition_json(result, data.original_ids).dump(2) << '\n';
      } else {
        write_partition_csv(sink.get(), result.partition, data.original_ids);
      }
      if (save_model_path) {
        if (!result.model) throw UsageError("--save-model requires --method gnn");
        detail::Output model_sink(save_model_path, out);
        save_model(model_sink.get(), *result.model_config, *result.model);
      }
      return kExitOk;
    }

    if (*bench) {
      std::vector<Method> methods;
      std::stringstream ss(bench_methods);
      for (std::string name; std::getline(ss, name, ',');) {
        try {
          methods.push_back(parse_method(name));
        } catch (const Error& e) {
          throw UsageError(e.what());
        }
      }
      if (methods.empty()) throw UsageError("--methods is empty");
      const Dataset data = load_dataset(detail::dataset_from(bench_data, bench_seed, err));
      BenchOptions opt;
      opt.seed = bench_seed;
      opt.k = bench_k;
      opt.gnn = bench_gnn.cfg;
      opt.record_time = bench_timing;
      const auto rows = run_benchmark(data, methods, opt);
      detail::Output sink(bench_report, out);
      if (bench_format == "csv") {
        write_report_csv(sink.get(), rows);
      } else {
        sink.get() << report_json(rows).dump(2) << '\n';
      }
      return kExitOk;
    }

    if (*generate) {
      const auto spec = parse_planted(gen_planted, gen_seed);
      if (!spec.assortative()) err << "warning: p_out > p_in, planted groups are anti-communities\n";
      const auto pg = planted_partition(spec);
      detail::Output edges(gen_output, out);
      write_edge_list(edges.get(), pg.graph);
      if (gen_labels) {
        detail::Output labels(gen_labels, out);
        write_labels(labels.get(), pg.truth);
      }
      return kExitOk;
    }

    if (*eval) {
      const auto doc = parse_edge_list(read_text_file(eval_input));
      if (doc.node_count() == 0) throw Error("'" + eval_input + "' contains no edges");
      const Graph g = doc.to_graph();
      const Partition p = read_partition(read_text_file(eval_partition), doc.id_map);
      std::optional<Partition> truth;
      if (eval_truth) truth = parse_labels(read_text_file(*eval_truth), doc.id_map);
      const Metrics m = evaluate(g, p, truth ? &*truth : nullptr);
      nlohmann::ordered_json j;
      j["k"] = p.community_count();
      j["metrics"] = metrics_json(m);
      out << j.dump(2) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace crimegnn::cli
