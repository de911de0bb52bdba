#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmplan/errors.hpp"

namespace mmplan {

// One matrix-multiply workload shape: `count` identical M x K x N layers,
// each a batch of `batch` independent multiplies (batch == 1 for a plain MM).
struct LayerShape {
  int id = 0;
  std::int64_t m = 1;
  std::int64_t k = 1;
  std::int64_t n = 1;
  std::int64_t batch = 1;
  std::int64_t count = 1;

  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

inline void validate(const LayerShape& l) {
  if (l.m < 1 || l.k < 1 || l.n < 1)
    throw ValidationError("layer " + std::to_string(l.id) + ": m,k,n must be >= 1");
  if (l.batch < 1) throw ValidationError("layer " + std::to_string(l.id) + ": batch must be >= 1");
  if (l.count < 1) throw ValidationError("layer " + std::to_string(l.id) + ": count must be >= 1");
}

// Total floating-point operations: 2*m*k*n per multiply, times batch and count.
// Accumulated in 128-bit so large dims cannot overflow before the conversion.
inline double layer_ops(const LayerShape& l) {
  unsigned __int128 ops = 2;
  ops *= static_cast<unsigned __int128>(l.m);
  ops *= static_cast<unsigned __int128>(l.k);
  ops *= static_cast<unsigned __int128>(l.n);
  ops *= static_cast<unsigned __int128>(l.batch);
  ops *= static_cast<unsigned __int128>(l.count);
  return static_cast<double>(ops);
}

// Constant-time kernel (layernorm, softmax, transpose, ...) charged per task.
struct FixedKernel {
  std::string name;
  double time_s = 0.0;

  friend bool operator==(const FixedKernel&, const FixedKernel&) = default;
};

// Precedence edges (pred, succ) over kernel ids.
struct DependencyGraph {
  std::vector<std::pair<int, int>> edges;

  friend bool operator==(const DependencyGraph&, const DependencyGraph&) = default;
};

// Checks that ids are in [0, num_kernels) and the graph is acyclic;
// on a cycle the error message lists one offending cycle.
inline void validate_graph(const DependencyGraph& deps, int num_kernels) {
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(num_kernels));
  for (const auto& [p, s] : deps.edges) {
    if (p < 0 || p >= num_kernels || s < 0 || s >= num_kernels)
      throw ValidationError("deps: edge (" + std::to_string(p) + "," + std::to_string(s) +
                            ") references a kernel id outside [0," + std::to_string(num_kernels) + ")");
    if (p == s) throw ValidationError("deps: self-edge on kernel " + std::to_string(p));
    succ[static_cast<std::size_t>(p)].push_back(s);
  }
  // Iterative DFS, colors: 0 = white, 1 = on stack, 2 = done.
  std::vector<int> color(static_cast<std::size_t>(num_kernels), 0);
  std::vector<int> parent(static_cast<std::size_t>(num_kernels), -1);
  for (int root = 0; root < num_kernels; ++root) {
    if (color[static_cast<std::size_t>(root)] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    color[static_cast<std::size_t>(root)] = 1;
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < succ[static_cast<std::size_t>(v)].size()) {
        int w = succ[static_cast<std::size_t>(v)][i++];
        if (color[static_cast<std::size_t>(w)] == 1) {
          std::string cycle = std::to_string(w);
          for (int u = v; u != w && u != -1; u = parent[static_cast<std::size_t>(u)])
            cycle = std::to_string(u) + "->" + cycle;
          throw ValidationError("deps: cycle " + std::to_string(w) + "->" + cycle);
        }
        if (color[static_cast<std::size_t>(w)] == 0) {
          color[static_cast<std::size_t>(w)] = 1;
          parent[static_cast<std::size_t>(w)] = v;
          stack.emplace_back(w, 0);
        }
      } else {
        color[static_cast<std::size_t>(v)] = 2;
        stack.pop_back();
      }
    }
  }
}

// An application: MM layers plus fixed-cost kernels and a dependency graph.
//
// Kernel ids enumerate individual layer instances: a shape row with count = c
// contributes c consecutive kernel ids, in row order. The dependency graph and
// the runtime scheduler work in kernel-id space; search and partitioning work
// on the shape rows.
struct ModelSpec {
  std::string name;
  std::vector<LayerShape> layers;
  std::vector<FixedKernel> fixed_kernels;
  DependencyGraph deps;

  int kernel_count() const {
    std::int64_t total = 0;
    for (const auto& l : layers) total += l.count;
    return static_cast<int>(total);
  }

  // Shape row owning the given kernel id.
  int kernel_layer(int kernel_id) const {
    std::int64_t acc = 0;
    for (const auto& l : layers) {
      acc += l.count;
      if (kernel_id < acc) return l.id;
    }
    throw ValidationError(name + ": kernel id " + std::to_string(kernel_id) + " out of range");
  }

  // Shape of one kernel instance (count folded out).
  LayerShape kernel_shape(int kernel_id) const {
    LayerShape s = layers[static_cast<std::size_t>(kernel_layer(kernel_id))];
    s.count = 1;
    return s;
  }

  double fixed_time_s() const {
    double t = 0.0;
    for (const auto& f : fixed_kernels) t += f.time_s;
    return t;
  }

  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].id != static_cast<int>(i))
        throw ValidationError(name + ": layer ids must be dense from 0");
      mmplan::validate(layers[i]);
    }
    for (const auto& f : fixed_kernels)
      if (f.time_s < 0) throw ValidationError(name + ": fixed kernel " + f.name + " has negative time");
    validate_graph(deps, kernel_count());
  }
};

inline double total_ops(const ModelSpec& model) {
  double ops = 0.0;
  for (const auto& l : model.layers) ops += layer_ops(l);
  return ops;
}

namespace detail {

inline DependencyGraph chain_deps(int num_kernels) {
  DependencyGraph g;
  for (int i = 0; i + 1 < num_kernels; ++i) g.edges.emplace_back(i, i + 1);
  return g;
}

}  // namespace detail

// Built-in workloads. BERT carries its attention dependency graph; the MLP-like
// stacks default to a linear chain in table order.
inline ModelSpec builtin_model(std::string_view name) {
  ModelSpec m;
  auto add = [&m](std::int64_t M, std::int64_t K, std::int64_t N, std::int64_t batch, std::int64_t count) {
    m.layers.push_back({static_cast<int>(m.layers.size()), M, K, N, batch, count});
  };
  if (name == "bert") {
    m.name = "bert";
    add(3072, 1024, 1024, 1, 4);
    add(3072, 4096, 1024, 1, 1);
    add(3072, 1024, 4096, 1, 1);
    add(512, 64, 512, 96, 1);
    add(512, 512, 64, 96, 1);
    // Kernels 0-3 are the four projection MMs, 4-5 the FFN MMs,
    // 6-7 the attention batch dots.
    m.deps.edges = {{0, 6}, {1, 6}, {6, 7}, {2, 7}, {7, 3}, {3, 4}, {4, 5}};
    m.fixed_kernels = {{"layernorm", 4.5e-3}, {"softmax", 18.7e-3}, {"transpose", 5.2e-3}};
  } else if (name == "vit") {
    m.name = "vit";
    add(3072, 3024, 1024, 1, 1);
    add(3072, 1024, 1024, 1, 1);
    add(3072, 1024, 4096, 1, 1);
    add(3072, 4096, 1024, 1, 1);
    add(3072, 1024, 3048, 1, 1);
    add(64, 64, 64, 768, 2);
    m.deps = detail::chain_deps(m.kernel_count());
    m.fixed_kernels = {{"layernorm", 4.5e-3}, {"softmax", 2.3e-3}, {"transpose", 5.2e-3}};
  } else if (name == "ncf") {
    m.name = "ncf";
    add(3072, 4096, 2048, 1, 1);
    add(3072, 2048, 1024, 1, 1);
    add(3072, 1024, 512, 1, 1);
    add(3072, 512, 256, 1, 1);
    add(3072, 256, 128, 1, 1);
    add(3072, 128, 64, 1, 1);
    add(3072, 64, 32, 1, 1);
    add(3072, 32, 16, 1, 1);
    add(3072, 32, 1, 1, 1);
    m.deps = detail::chain_deps(m.kernel_count());
  } else if (name == "mlp") {
    m.name = "mlp";
    add(3072, 2048, 4096, 1, 1);
    add(3072, 4096, 4096, 1, 2);
    add(3072, 4096, 1024, 1, 1);
    m.deps = detail::chain_deps(m.kernel_count());
  } else {
    throw ValidationError("unknown built-in model: " + std::string(name));
  }
  m.validate();
  return m;
}

}  // namespace mmplan
