#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crimegnn/error.hpp"
#include "crimegnn/graph.hpp"
#include "crimegnn/rng.hpp"

namespace crimegnn {

using OriginalId = std::uint64_t;

struct RawEdge {
  OriginalId u = 0;
  OriginalId v = 0;
  std::optional<double> weight;
};

// Edges as read from a file plus the densification of their node ids.
struct EdgeListDocument {
  std::vector<RawEdge> edges;
  std::unordered_map<OriginalId, NodeId> id_map;
  std::vector<OriginalId> original_ids;  // inverse of id_map

  std::size_t node_count() const noexcept { return original_ids.size(); }

  Graph to_graph() const {
    std::vector<Edge> dense;
    dense.reserve(edges.size());
    for (const auto& e : edges) {
      dense.push_back({id_map.at(e.u), id_map.at(e.v), e.weight.value_or(1.0)});
    }
    return build_graph(node_count(), dense);
  }
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline bool is_comment_or_blank(const std::vector<std::string_view>& fields) {
  return fields.empty() || fields.front().front() == '#' || fields.front().front() == '%';
}

inline std::optional<OriginalId> parse_id(std::string_view token) {
  OriginalId value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

inline std::optional<double> parse_double(std::string_view token) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

template <typename Fn>
void for_each_data_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (is_comment_or_blank(fields)) continue;
    fn(line_no, fields);
  }
}

}  // namespace detail

// Reads "u v" / "u v w" lines. Ids are densified in first-appearance order;
// merging of repeated edges is left to build_graph.
inline EdgeListDocument parse_edge_list(std::istream& in) {
  EdgeListDocument doc;
  auto intern = [&doc](OriginalId id) {
    auto [it, inserted] = doc.id_map.try_emplace(id, doc.original_ids.size());
    if (inserted) doc.original_ids.push_back(id);
  };
  detail::for_each_data_line(in, [&](std::size_t line_no, const auto& fields) {
    if (fields.size() != 2 && fields.size() != 3) {
      throw ParseError(line_no, "expected 'u v' or 'u v w', got " +
                                    std::to_string(fields.size()) + " fields");
    }
    const auto u = detail::parse_id(fields[0]);
    const auto v = detail::parse_id(fields[1]);
    if (!u || !v) throw ParseError(line_no, "node ids must be non-negative integers");
    RawEdge edge{*u, *v, std::nullopt};
    if (fields.size() == 3) {
      edge.weight = detail::parse_double(fields[2]);
      if (!edge.weight) throw ParseError(line_no, "weight is not a number");
      if (!(*edge.weight > 0.0) || !std::isfinite(*edge.weight)) {
        throw ParseError(line_no, "weight must be positive and finite");
      }
    }
    intern(edge.u);
    intern(edge.v);
    doc.edges.push_back(edge);
  });
  return doc;
}

inline EdgeListDocument parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_edge_list(in);
}

// Reads "node community" lines; every node of id_map must appear once.
inline Partition parse_labels(std::istream& in,
                              const std::unordered_map<OriginalId, NodeId>& id_map) {
  constexpr auto unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> raw(id_map.size(), unset);
  detail::for_each_data_line(in, [&](std::size_t line_no, const auto& fields) {
    if (fields.size() != 2) throw ParseError(line_no, "expected 'node community'");
    const auto node = detail::parse_id(fields[0]);
    const auto community = detail::parse_id(fields[1]);
    if (!node || !community) throw ParseError(line_no, "ids must be non-negative integers");
    const auto it = id_map.find(*node);
    if (it == id_map.end()) {
      throw ParseError(line_no, "unknown node id " + std::to_string(*node));
    }
    if (raw[it->second] != unset) {
      throw ParseError(line_no, "duplicate node id " + std::to_string(*node));
    }
    raw[it->second] = static_cast<std::size_t>(*community);
  });
  for (const auto& [original, dense] : id_map) {
    if (raw[dense] == unset) {
      throw Error("label file is missing node id " + std::to_string(original));
    }
  }
  return Partition(raw);
}

inline Partition parse_labels(std::string_view text,
                              const std::unordered_map<OriginalId, NodeId>& id_map) {
  std::istringstream in{std::string(text)};
  return parse_labels(in, id_map);
}

namespace detail {

inline std::string format_weight(double w) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), w);
  return std::string(buf, ptr);
}

}  // namespace detail

// Writes each undirected edge once as "u v" (unit weight) or "u v w", using
// the original ids when given. Weights use the shortest round-trip decimal.
inline void write_edge_list(std::ostream& out, const Graph& g,
                            const std::vector<OriginalId>& original_ids = {}) {
  auto id = [&](NodeId v) -> OriginalId {
    return original_ids.empty() ? v : original_ids[v];
  };
  for (const auto& e : g.edges()) {
    out << id(e.u) << ' ' << id(e.v);
    if (e.weight != 1.0) out << ' ' << detail::format_weight(e.weight);
    out << '\n';
  }
}

inline void write_labels(std::ostream& out, const Partition& p,
                         const std::vector<OriginalId>& original_ids = {}) {
  for (NodeId v = 0; v < p.size(); ++v) {
    out << (original_ids.empty() ? v : original_ids[v]) << ' ' << p[v] << '\n';
  }
}

// Planted-partition model: k groups, edge probability p_in inside a group
// and p_out across groups.
struct PlantedSpec {
  std::size_t n = 0;
  std::size_t k = 1;
  double p_in = 0.0;
  double p_out = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (k < 1 || n < k) throw Error("planted spec needs n >= k >= 1");
    if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0)) {
      throw Error("planted probabilities must lie in [0, 1]");
    }
  }

  // p_out > p_in is legal but produces anti-community structure.
  bool assortative() const noexcept { return p_out <= p_in; }
};

struct PlantedGraph {
  Graph graph;
  Partition truth;
};

// Groups are as even as possible, the first n mod k getting one extra node.
// Pairs u < v are visited in lexicographic order with exactly one
// Rng::uniform() draw each; the edge exists when the draw is below the pair's
// probability. Rng is std::mt19937_64 seeded with spec.seed.
inline PlantedGraph planted_partition(const PlantedSpec& spec) {
  spec.validate();
  std::vector<std::size_t> group(spec.n);
  const std::size_t base = spec.n / spec.k;
  const std::size_t extra = spec.n % spec.k;
  NodeId v = 0;
  for (std::size_t c = 0; c < spec.k; ++c) {
    const std::size_t size = base + (c < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) group[v++] = c;
  }

  Rng rng(spec.seed);
  std::vector<Edge> edges;
  for (NodeId a = 0; a < spec.n; ++a) {
    for (NodeId b = a + 1; b < spec.n; ++b) {
      const double p = group[a] == group[b] ? spec.p_in : spec.p_out;
      if (rng.uniform() < p) edges.push_back({a, b, 1.0});
    }
  }
  return {build_graph(spec.n, edges), Partition(group)};
}

struct Fixture {
  Graph graph;
  std::optional<Partition> truth;
};

// Small hard-coded graphs:
//   triangle       K3
//   barbell6       triangles 0-1-2 and 3-4-5 joined by edge 2-3
//   two_triangles  the same two triangles, disconnected
//   path4          0-1-2-3
//   k3_3cliques    three triangles joined in a ring by edges 2-3, 5-6, 8-0
inline Fixture fixture(std::string_view name) {
  auto triangles = [](std::size_t count) {
    std::vector<Edge> e;
    for (std::size_t t = 0; t < count; ++t) {
      const NodeId b = 3 * t;
      e.push_back({b, b + 1});
      e.push_back({b + 1, b + 2});
      e.push_back({b, b + 2});
    }
    return e;
  };
  const std::vector<std::size_t> halves{0, 0, 0, 1, 1, 1};

  if (name == "triangle") return {build_graph(3, triangles(1)), std::nullopt};
  if (name == "barbell6") {
    auto e = triangles(2);
    e.push_back({2, 3});
    return {build_graph(6, e), Partition(halves)};
  }
  if (name == "two_triangles") return {build_graph(6, triangles(2)), Partition(halves)};
  if (name == "path4") return {build_graph(4, {{0, 1}, {1, 2}, {2, 3}}), std::nullopt};
  if (name == "k3_3cliques") {
    auto e = triangles(3);
    e.push_back({2, 3});
    e.push_back({5, 6});
    e.push_back({8, 0});
    return {build_graph(9, e), Partition(std::vector<std::size_t>{0, 0, 0, 1, 1, 1, 2, 2, 2})};
  }
  throw Error("unknown fixture '" + std::string(name) + "'");
}

inline constexpr std::string_view kFixtureNames[] = {"triangle", "barbell6", "two_triangles",
                                                     "path4", "k3_3cliques"};

}  // namespace crimegnn
