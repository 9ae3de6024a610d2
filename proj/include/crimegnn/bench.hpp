#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <iterator>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/infomap.hpp"
#include "crimegnn/io.hpp"
#include "crimegnn/louvain.hpp"
#include "crimegnn/model.hpp"
#include "crimegnn/objectives.hpp"
#include "crimegnn/rng.hpp"
#include "crimegnn/spectral.hpp"

namespace crimegnn {

enum class Method { gnn, louvain, spectral, infomap };

inline constexpr Method kAllMethods[] = {Method::gnn, Method::louvain, Method::spectral,
                                         Method::infomap};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::gnn: return "gnn";
    case Method::louvain: return "louvain";
    case Method::spectral: return "spectral";
    case Method::infomap: return "infomap";
  }
  return "?";
}

inline Method parse_method(std::string_view name) {
  for (const Method m : kAllMethods) {
    if (method_name(m) == name) return m;
  }
  throw Error("unknown method '" + std::string(name) +
              "' (expected gnn, louvain, spectral or infomap)");
}

struct Metrics {
  double modularity = 0.0;
  double coverage = 0.0;
  std::optional<double> f1;
};

inline Metrics evaluate(const Graph& g, const Partition& p, const Partition* truth) {
  Metrics m{modularity(g, p), coverage(g, p), std::nullopt};
  if (truth != nullptr) m.f1 = pairwise_f1(p, *truth);
  return m;
}

struct RunOptions {
  std::optional<std::size_t> k;  // required by gnn/spectral; Louvain's count when absent
  std::uint64_t seed = 0;
  const Partition* truth = nullptr;
  TrainConfig gnn;  // k and seed are overridden per run
};

struct RunResult {
  Method method = Method::louvain;
  Partition partition;
  Metrics metrics;
  std::optional<std::size_t> k_requested;  // k handed to gnn/spectral
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::optional<ModelParams> model;  // gnn only
  std::optional<TrainConfig> model_config;
};

inline RunResult run_method(const Graph& g, Method method, const RunOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.method = method;
  r.seed = opt.seed;

  auto resolve_k = [&] {
    // No k given: use the number of communities Louvain finds on g.
    return opt.k ? *opt.k : louvain(g, opt.seed).partition.community_count();
  };

  switch (method) {
    case Method::louvain:
      r.partition = louvain(g, opt.seed).partition;
      break;
    case Method::infomap:
      r.partition = infomap(g, opt.seed).partition;
      break;
    case Method::spectral: {
      r.k_requested = resolve_k();
      r.partition = spectral_clustering(g, *r.k_requested, opt.seed).partition;
      break;
    }
    case Method::gnn: {
      r.k_requested = resolve_k();
      TrainConfig cfg = opt.gnn;
      cfg.k = *r.k_requested;
      cfg.seed = opt.seed;
      auto trained = train(g, cfg);
      r.partition = predict_partition(g, trained.params, cfg).partition;
      r.model = std::move(trained.params);
      r.model_config = cfg;
      break;
    }
  }
  r.metrics = evaluate(g, r.partition, opt.truth);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// ---------------------------------------------------------------------------
// Datasets and benchmark reports
// ---------------------------------------------------------------------------

struct FileDataset {
  std::string edges_path;
  std::optional<std::string> labels_path;
};

using DatasetSpec = std::variant<FileDataset, PlantedSpec>;

struct Dataset {
  Graph graph;
  std::optional<Partition> truth;
  std::vector<OriginalId> original_ids;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Dataset load_dataset(const DatasetSpec& spec) {
  if (const auto* planted = std::get_if<PlantedSpec>(&spec)) {
    auto pg = planted_partition(*planted);
    Dataset d{std::move(pg.graph), std::move(pg.truth), {}};
    d.original_ids.resize(d.graph.size());
    std::iota(d.original_ids.begin(), d.original_ids.end(), OriginalId{0});
    return d;
  }
  const auto& files = std::get<FileDataset>(spec);
  const auto doc = parse_edge_list(read_text_file(files.edges_path));
  if (doc.node_count() == 0) throw Error("'" + files.edges_path + "' contains no edges");
  Dataset d{doc.to_graph(), std::nullopt, doc.original_ids};
  if (files.labels_path) d.truth = parse_labels(read_text_file(*files.labels_path), doc.id_map);
  return d;
}

struct ReportRow {
  std::string method;
  double modularity = 0.0;
  double coverage = 0.0;
  std::optional<double> f1;
  std::size_t k = 0;  // communities found
  std::optional<double> seconds;
  std::uint64_t seed = 0;
};

struct BenchOptions {
  std::uint64_t seed = 0;
  std::optional<std::size_t> k;
  TrainConfig gnn;
  bool record_time = false;  // wall time makes reports non-reproducible
};

// Per-method seed: seed XOR FNV-1a(method name).
inline std::uint64_t method_seed(std::uint64_t seed, Method m) {
  return seed ^ stable_hash(method_name(m));
}

// One row per requested method, in request order. Methods run concurrently
// over the shared graph.
inline std::vector<ReportRow> run_benchmark(const Dataset& data, const std::vector<Method>& methods,
                                            const BenchOptions& opt) {
  std::vector<std::future<RunResult>> pending;
  pending.reserve(methods.size());
  for (const Method m : methods) {
    RunOptions run;
    run.k = opt.k;
    run.seed = method_seed(opt.seed, m);
    run.truth = data.truth ? &*data.truth : nullptr;
    run.gnn = opt.gnn;
    pending.push_back(std::async(std::launch::async, [&data, m, run] {
      return run_method(data.graph, m, run);
    }));
  }
  std::vector<ReportRow> rows;
  rows.reserve(methods.size());
  for (auto& f : pending) {
    const RunResult r = f.get();
    ReportRow row;
    row.method = std::string(method_name(r.method));
    row.modularity = r.metrics.modularity;
    row.coverage = r.metrics.coverage;
    row.f1 = r.metrics.f1;
    row.k = r.partition.community_count();
    if (opt.record_time) row.seconds = r.seconds;
    row.seed = r.seed;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline constexpr std::string_view kReportHeader = "method,modularity,coverage,f1_score,k,seconds";

namespace detail {

inline std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

}  // namespace detail

// Absent f1 or seconds leave the field empty.
inline void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << detail::fixed6(r.modularity) << ',' << detail::fixed6(r.coverage)
        << ',' << (r.f1 ? detail::fixed6(*r.f1) : "") << ',' << r.k << ','
        << (r.seconds ? detail::fixed6(*r.seconds) : "") << '\n';
  }
}

inline nlohmann::ordered_json report_json(const std::vector<ReportRow>& rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["method"] = r.method;
    j["modularity"] = r.modularity;
    j["coverage"] = r.coverage;
    if (r.f1) j["f1_score"] = *r.f1;
    j["k"] = r.k;
    if (r.seconds) j["seconds"] = *r.seconds;
    j["seed"] = r.seed;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---------------------------------------------------------------------------
// Partition files
//
// JSON (canonical):
//   {"method": "...", "k": K, "seed": S, "nodes": [original ids...],
//    "labels": [community per node...], "metrics": {"modularity": ...,
//    "coverage": ..., "f1_score": ...}}
// CSV:
//   node,community
//   <original id>,<community>
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["modularity"] = m.modularity;
  j["coverage"] = m.coverage;
  if (m.f1) j["f1_score"] = *m.f1;
  return j;
}

inline nlohmann::ordered_json partition_json(const RunResult& r,
                                             const std::vector<OriginalId>& original_ids) {
  nlohmann::ordered_json j;
  j["method"] = method_name(r.method);
  j["k"] = r.partition.community_count();
  j["seed"] = r.seed;
  auto nodes = nlohmann::ordered_json::array();
  auto labels = nlohmann::ordered_json::array();
  for (NodeId v = 0; v < r.partition.size(); ++v) {
    nodes.push_back(original_ids.empty() ? v : original_ids[v]);
    labels.push_back(r.partition[v]);
  }
  j["nodes"] = std::move(nodes);
  j["labels"] = std::move(labels);
  j["metrics"] = metrics_json(r.metrics);
  return j;
}

inline void write_partition_csv(std::ostream& out, const Partition& p,
                                const std::vector<OriginalId>& original_ids) {
  out << "node,community\n";
  for (NodeId v = 0; v < p.size(); ++v) {
    out << (original_ids.empty() ? v : original_ids[v]) << ',' << p[v] << '\n';
  }
}

// Reads either partition format, aligning entries to the graph's dense ids.
inline Partition read_partition(std::string_view text,
                                const std::unordered_map<OriginalId, NodeId>& id_map) {
  constexpr auto unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> raw(id_map.size(), unset);
  auto assign = [&](OriginalId node, std::size_t community) {
    const auto it = id_map.find(node);
    if (it == id_map.end()) throw Error("partition names node " + std::to_string(node) +
                                        " which is not in the graph");
    if (raw[it->second] != unset) throw Error("partition lists node " + std::to_string(node) +
                                              " twice");
    raw[it->second] = community;
  };

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      const auto& labels = j.at("labels");
      if (j.contains("nodes")) {
        const auto& nodes = j.at("nodes");
        if (nodes.size() != labels.size()) throw Error("partition nodes/labels length differ");
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          assign(nodes[i].get<OriginalId>(), labels[i].get<std::size_t>());
        }
      } else {
        if (labels.size() != raw.size()) throw Error("partition labels length differs from graph");
        for (std::size_t i = 0; i < labels.size(); ++i) raw[i] = labels[i].get<std::size_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("malformed partition JSON: ") + e.what());
    }
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line == "node,community") continue;
      const auto comma = line.find(',');
      const auto node = comma == std::string::npos
                            ? std::nullopt
                            : detail::parse_id(std::string_view(line).substr(0, comma));
      const auto community = comma == std::string::npos
                                 ? std::nullopt
                                 : detail::parse_id(std::string_view(line).substr(comma + 1));
      if (!node || !community) throw ParseError(line_no, "expected 'node,community'");
      assign(*node, static_cast<std::size_t>(*community));
    }
  }
  for (const auto& [original, dense] : id_map) {
    if (raw[dense] == unset) throw Error("partition is missing node " + std::to_string(original));
  }
  return Partition(raw);
}

}  // namespace crimegnn
