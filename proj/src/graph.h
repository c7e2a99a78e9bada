// src/graph.h
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

#ifndef AUDKIT_GRAPH_H_
#define AUDKIT_GRAPH_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtw.h"

namespace audkit {

/// Undirected graph over segment indices; no self-loops, each pair stored
/// once as (lo, hi) and kept sorted.
struct NeighborGraph {
  int64_t n = 0;
  std::vector<std::pair<int64_t, int64_t>> edges;
};

/// Total partition of the nodes.  Cluster ids are dense, assigned in order
/// of each component's smallest member index.
struct Clustering {
  std::vector<int64_t> assignment;           // node -> cluster id
  std::vector<std::vector<int64_t>> clusters;  // cluster id -> sorted members

  int64_t size() const { return static_cast<int64_t>(clusters.size()); }
};

/// Edge (i,j) exists iff each node is among the other's k nearest neighbors
/// (distance ties broken toward the lower node index).
NeighborGraph build_mutual_knn_graph(const DistanceMatrix &d, int64_t k);

Clustering connected_components(const NeighborGraph &g);

/// Member with the smallest summed distance to the rest of its cluster;
/// ties go to the lower index.  Throws UnknownCluster for a bad id.
int64_t cluster_medoid(const Clustering &c, const DistanceMatrix &d, int64_t cluster_id);

/// {"n": ..., "clusters": {"<id>": [members...]}}
std::string clustering_to_json(const Clustering &c);

/// GraphViz rendering of the mutual-kNN graph with one color class per
/// cluster; `labels` (optional, size n) annotates the nodes.
std::string graph_to_dot(const NeighborGraph &g, const Clustering &c,
                         const std::vector<std::string> &labels = {});

}  // namespace audkit

#endif  // AUDKIT_GRAPH_H_
