// src/graph.cc
//
// Copyright 2026  The audkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "graph.h"

#include <algorithm>
#include <deque>
#include <sstream>

#include "json.hpp"

namespace audkit {

NeighborGraph build_mutual_knn_graph(const DistanceMatrix &d, int64_t k) {
  require(k >= 0, Status::kInvalidArgument, "k must be >= 0, got ", k);
  NeighborGraph g;
  g.n = d.n;
  if (k == 0 || d.n < 2) return g;

  // k nearest of each node, ties toward the lower index.
  std::vector<std::vector<int64_t>> knn(static_cast<size_t>(d.n));
  std::vector<int64_t> order(static_cast<size_t>(d.n));
  for (int64_t i = 0; i < d.n; ++i) {
    order.clear();
    for (int64_t j = 0; j < d.n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int64_t x, int64_t y) {
      double dx = d.at(i, x), dy = d.at(i, y);
      return dx < dy || (dx == dy && x < y);
    });
    int64_t take = std::min<int64_t>(k, static_cast<int64_t>(order.size()));
    knn[static_cast<size_t>(i)].assign(order.begin(), order.begin() + take);
    std::sort(knn[static_cast<size_t>(i)].begin(), knn[static_cast<size_t>(i)].end());
  }

  auto in_knn = [&](int64_t of, int64_t who) {
    const auto &v = knn[static_cast<size_t>(of)];
    return std::binary_search(v.begin(), v.end(), who);
  };
  for (int64_t i = 0; i < d.n; ++i)
    for (int64_t j : knn[static_cast<size_t>(i)])
      if (j > i && in_knn(j, i)) g.edges.emplace_back(i, j);
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

Clustering connected_components(const NeighborGraph &g) {
  std::vector<std::vector<int64_t>> adj(static_cast<size_t>(g.n));
  for (auto [a, b] : g.edges) {
    require(a >= 0 && b >= 0 && a < g.n && b < g.n && a != b, Status::kInvalidArgument,
            "edge (", a, ",", b, ") invalid for ", g.n, " nodes");
    adj[static_cast<size_t>(a)].push_back(b);
    adj[static_cast<size_t>(b)].push_back(a);
  }

  Clustering c;
  c.assignment.assign(static_cast<size_t>(g.n), -1);
  for (int64_t start = 0; start < g.n; ++start) {
    if (c.assignment[static_cast<size_t>(start)] >= 0) continue;
    int64_t id = c.size();
    c.clusters.emplace_back();
    std::deque<int64_t> queue{start};
    c.assignment[static_cast<size_t>(start)] = id;
    while (!queue.empty()) {
      int64_t u = queue.front();
      queue.pop_front();
      c.clusters[static_cast<size_t>(id)].push_back(u);
      for (int64_t v : adj[static_cast<size_t>(u)]) {
        if (c.assignment[static_cast<size_t>(v)] >= 0) continue;
        c.assignment[static_cast<size_t>(v)] = id;
        queue.push_back(v);
      }
    }
    std::sort(c.clusters[static_cast<size_t>(id)].begin(), c.clusters[static_cast<size_t>(id)].end());
  }
  return c;
}

int64_t cluster_medoid(const Clustering &c, const DistanceMatrix &d, int64_t cluster_id) {
  require(cluster_id >= 0 && cluster_id < c.size() &&
              !c.clusters[static_cast<size_t>(cluster_id)].empty(),
          Status::kUnknownCluster, "no cluster ", cluster_id);
  const auto &members = c.clusters[static_cast<size_t>(cluster_id)];
  int64_t best = members[0];
  double best_sum = 0.0;
  for (size_t i = 0; i < members.size(); ++i) {
    double sum = 0.0;
    for (int64_t other : members) sum += d.at(members[i], other);
    if (i == 0 || sum < best_sum) {
      best_sum = sum;
      best = members[i];
    }
  }
  return best;
}

std::string clustering_to_json(const Clustering &c) {
  nlohmann::ordered_json j;
  j["n"] = c.assignment.size();
  auto &clusters = j["clusters"] = nlohmann::ordered_json::object();
  for (int64_t id = 0; id < c.size(); ++id)
    clusters[std::to_string(id)] = c.clusters[static_cast<size_t>(id)];
  return j.dump(2) + "\n";
}

std::string graph_to_dot(const NeighborGraph &g, const Clustering &c,
                         const std::vector<std::string> &labels) {
  require(labels.empty() || static_cast<int64_t>(labels.size()) == g.n, Status::kInvalidArgument,
          "need one label per node or none");
  // A small qualitative palette, reused cyclically across clusters.
  static const char *kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr int kPaletteSize = 10;
  std::ostringstream out;
  out << "graph segments {\n  node [style=filled];\n";
  for (int64_t i = 0; i < g.n; ++i) {
    int64_t cl = i < static_cast<int64_t>(c.assignment.size()) ? c.assignment[static_cast<size_t>(i)] : 0;
    out << "  n" << i << " [label=\"" << (labels.empty() ? std::to_string(i) : labels[static_cast<size_t>(i)])
        << "\", fillcolor=\"" << kPalette[cl % kPaletteSize] << "\"];\n";
  }
  for (auto [a, b] : g.edges) out << "  n" << a << " -- n" << b << ";\n";
  out << "}\n";
  return out.str();
}

}  // namespace audkit
