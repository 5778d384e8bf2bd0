#include "cavity/ordering.hpp"

#include <Eigen/OrderingMethods>
#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "cavity/error.hpp"

namespace cavity {

namespace {

constexpr int kLeafSize = 64;

// Exact weighted minimum degree on the subgraph induced by `verts`; appends to `order`.
void minimum_degree(const Graph& g, const std::vector<int>& verts, std::vector<int>& order) {
  const int n = static_cast<int>(verts.size());
  std::unordered_map<int, int> local;
  local.reserve(2 * n);
  for (int a = 0; a < n; ++a) local[verts[a]] = a;
  std::vector<std::vector<int>> adj(n);
  for (int a = 0; a < n; ++a) {
    const int v = verts[a];
    for (int k = g.offsets[v]; k < g.offsets[v + 1]; ++k) {
      auto it = local.find(g.adj[k]);
      if (it != local.end()) adj[a].push_back(it->second);
    }
    std::sort(adj[a].begin(), adj[a].end());
  }
  std::vector<char> done(n, 0);
  auto wdeg = [&](int a) {
    long long d = 0;
    for (int b : adj[a]) d += g.weight[verts[b]];
    return d;
  };
  for (int step = 0; step < n; ++step) {
    int best = -1;
    long long best_d = 0;
    for (int a = 0; a < n; ++a) {
      if (done[a]) continue;
      const long long d = wdeg(a);
      if (best < 0 || d < best_d) {
        best = a;
        best_d = d;
      }
    }
    done[best] = 1;
    order.push_back(verts[best]);
    const std::vector<int> nb = adj[best];
    for (int a : nb) {
      auto& l = adj[a];
      l.erase(std::remove(l.begin(), l.end(), best), l.end());
      std::vector<int> merged;
      merged.reserve(l.size() + nb.size());
      std::set_union(l.begin(), l.end(), nb.begin(), nb.end(), std::back_inserter(merged));
      merged.erase(std::remove(merged.begin(), merged.end(), a), merged.end());
      l.swap(merged);
    }
    adj[best].clear();
  }
}

class NestedDissection {
 public:
  explicit NestedDissection(const Graph& g) : g_(g), stamp_(g.size(), -1), level_(g.size(), -1) {}

  std::vector<int> run() {
    std::vector<int> all(g_.size());
    std::iota(all.begin(), all.end(), 0);
    dissect(all);
    return std::move(order_);
  }

 private:
  const Graph& g_;
  std::vector<int> stamp_;
  std::vector<int> level_;
  std::vector<int> order_;
  int next_stamp_ = 0;

  // BFS inside the stamped set; returns vertices grouped by level.
  std::vector<std::vector<int>> bfs(int root, int stamp) {
    std::vector<std::vector<int>> levels{{root}};
    level_[root] = 0;
    std::vector<int> seen{root};
    const int bfs_stamp = ~stamp;  // visited marker distinct from set membership
    stamp_[root] = bfs_stamp;
    while (true) {
      std::vector<int> next;
      for (int v : levels.back())
        for (int k = g_.offsets[v]; k < g_.offsets[v + 1]; ++k) {
          const int w = g_.adj[k];
          if (stamp_[w] == stamp) {
            stamp_[w] = bfs_stamp;
            level_[w] = static_cast<int>(levels.size());
            next.push_back(w);
            seen.push_back(w);
          }
        }
      if (next.empty()) break;
      levels.push_back(std::move(next));
    }
    for (int v : seen) stamp_[v] = stamp;
    return levels;
  }

  void dissect(const std::vector<int>& verts) {
    if (static_cast<int>(verts.size()) <= kLeafSize) {
      minimum_degree(g_, verts, order_);
      return;
    }
    const int stamp = next_stamp_++;
    for (int v : verts) stamp_[v] = stamp;

    auto levels = bfs(verts.front(), stamp);
    std::size_t reached = 0;
    for (const auto& l : levels) reached += l.size();
    if (reached < verts.size()) {
      // Disconnected: dissect each component on its own.
      std::vector<std::vector<int>> comps;
      const int comp_stamp = next_stamp_++;
      for (int v : verts) {
        if (stamp_[v] != stamp) continue;
        auto lv = bfs(v, stamp);
        std::vector<int> c;
        for (auto& l : lv)
          for (int w : l) {
            c.push_back(w);
            stamp_[w] = comp_stamp;
          }
        comps.push_back(std::move(c));
      }
      for (const auto& c : comps) dissect(c);
      return;
    }

    // Pseudo-peripheral root.
    int root = verts.front();
    for (int it = 0; it < 8; ++it) {
      const auto& last = levels.back();
      int cand = last.front();
      for (int v : last)
        if (g_.degree(v) < g_.degree(cand)) cand = v;
      auto lv = bfs(cand, stamp);
      if (lv.size() <= levels.size()) break;
      root = cand;
      levels = std::move(lv);
    }
    (void)root;
    const int h = static_cast<int>(levels.size());
    for (int l = 0; l < h; ++l)
      for (int v : levels[l]) level_[v] = l;
    if (h < 3) {
      minimum_degree(g_, verts, order_);
      return;
    }

    std::vector<long long> lw(h, 0);
    long long total = 0;
    for (int l = 0; l < h; ++l) {
      for (int v : levels[l]) lw[l] += g_.weight[v];
      total += lw[l];
    }
    int sep = -1;
    long long below = lw[0];
    long long best_score = 0;
    for (int l = 1; l < h - 1; ++l) {
      const long long above = total - below - lw[l];
      const long long small = std::min(below, above);
      if (4 * small >= total - lw[l]) {
        // Balanced enough: prefer the lightest separator.
        if (sep < 0 || lw[l] < best_score) {
          sep = l;
          best_score = lw[l];
        }
      }
      below += lw[l];
    }
    if (sep < 0) {
      // Fall back to the level that splits the weight most evenly.
      below = 0;
      long long best = -1;
      for (int l = 1; l < h - 1; ++l) {
        below += lw[l - 1];
        const long long imb = std::abs((total - below - lw[l]) - below);
        if (best < 0 || imb < best) {
          best = imb;
          sep = l;
        }
      }
    }

    std::vector<int> part_a, part_b, separator;
    for (int l = 0; l < sep; ++l) part_a.insert(part_a.end(), levels[l].begin(), levels[l].end());
    for (int l = sep + 1; l < h; ++l) part_b.insert(part_b.end(), levels[l].begin(), levels[l].end());
    // Thin the separator: vertices not touching the far side join the near side.
    std::vector<int> kept;
    for (int v : levels[sep]) {
      bool touches_b = false;
      for (int k = g_.offsets[v]; k < g_.offsets[v + 1] && !touches_b; ++k) {
        const int w = g_.adj[k];
        touches_b = stamp_[w] == stamp && level_[w] == sep + 1;
      }
      if (touches_b) {
        kept.push_back(v);
      } else {
        part_a.push_back(v);
        level_[v] = sep - 1;
      }
    }
    for (int v : kept) {
      bool touches_a = false;
      for (int k = g_.offsets[v]; k < g_.offsets[v + 1] && !touches_a; ++k) {
        const int w = g_.adj[k];
        touches_a = stamp_[w] == stamp && level_[w] < sep;
      }
      if (touches_a) {
        separator.push_back(v);
      } else {
        part_b.push_back(v);
        level_[v] = sep + 1;
      }
    }
    for (int v : verts) stamp_[v] = -1;
    if (part_a.empty() || part_b.empty()) {
      minimum_degree(g_, verts, order_);
      return;
    }
    dissect(part_a);
    dissect(part_b);
    order_.insert(order_.end(), separator.begin(), separator.end());
  }
};

std::vector<int> expand(const Compression& c, const std::vector<int>& order) {
  std::vector<int> perm;
  for (int s : order) perm.insert(perm.end(), c.members[s].begin(), c.members[s].end());
  return perm;
}

}  // namespace

Graph adjacency_graph(const SparseSymOp& A) {
  Graph g;
  const auto rp = A.row_offsets();
  const auto ci = A.col_indices();
  g.offsets.assign(A.dim() + 1, 0);
  g.adj.reserve(ci.size());
  for (int i = 0; i < A.dim(); ++i) {
    for (int k = rp[i]; k < rp[i + 1]; ++k)
      if (ci[k] != i) g.adj.push_back(ci[k]);
    g.offsets[i + 1] = static_cast<int>(g.adj.size());
  }
  g.weight.assign(A.dim(), 1);
  return g;
}

Compression compress_graph(const Graph& g) {
  const int n = g.size();
  Compression c;
  c.group.assign(n, -1);
  std::vector<std::vector<int>> closed(n);
  std::unordered_map<unsigned long long, std::vector<int>> buckets;
  for (int v = 0; v < n; ++v) {
    auto& l = closed[v];
    l.assign(g.adj.begin() + g.offsets[v], g.adj.begin() + g.offsets[v + 1]);
    l.push_back(v);
    std::sort(l.begin(), l.end());
    unsigned long long h = l.size();
    for (int w : l) h = h * 1000003ULL + static_cast<unsigned long long>(w);
    buckets[h].push_back(v);
  }
  for (int v = 0; v < n; ++v) {
    if (c.group[v] >= 0) continue;
    const int id = static_cast<int>(c.members.size());
    c.members.push_back({v});
    c.group[v] = id;
    unsigned long long h = closed[v].size();
    for (int w : closed[v]) h = h * 1000003ULL + static_cast<unsigned long long>(w);
    for (int w : buckets[h])
      if (w > v && c.group[w] < 0 && closed[w] == closed[v]) {
        c.group[w] = id;
        c.members[id].push_back(w);
      }
  }
  const int m = static_cast<int>(c.members.size());
  c.graph.offsets.assign(m + 1, 0);
  c.graph.weight.assign(m, 0);
  for (int s = 0; s < m; ++s) {
    for (int v : c.members[s]) c.graph.weight[s] += g.weight[v];
    const int rep = c.members[s].front();
    std::vector<int> nb;
    for (int k = g.offsets[rep]; k < g.offsets[rep + 1]; ++k) {
      const int t = c.group[g.adj[k]];
      if (t != s) nb.push_back(t);
    }
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    c.graph.adj.insert(c.graph.adj.end(), nb.begin(), nb.end());
    c.graph.offsets[s + 1] = static_cast<int>(c.graph.adj.size());
  }
  return c;
}

std::vector<int> order_graph(const Graph& g, OrderingMethod method) {
  std::vector<int> order;
  switch (method) {
    case OrderingMethod::natural:
      order.resize(g.size());
      std::iota(order.begin(), order.end(), 0);
      break;
    case OrderingMethod::nested_dissection:
      order = NestedDissection(g).run();
      break;
    case OrderingMethod::minimum_degree: {
      std::vector<int> all(g.size());
      std::iota(all.begin(), all.end(), 0);
      minimum_degree(g, all, order);
      break;
    }
    case OrderingMethod::amd: {
      Eigen::SparseMatrix<double, Eigen::ColMajor, int> pat(g.size(), g.size());
      std::vector<Eigen::Triplet<double, int>> t;
      for (int v = 0; v < g.size(); ++v) {
        t.emplace_back(v, v, 1.0);
        for (int k = g.offsets[v]; k < g.offsets[v + 1]; ++k) t.emplace_back(v, g.adj[k], 1.0);
      }
      pat.setFromTriplets(t.begin(), t.end());
      Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
      Eigen::AMDOrdering<int>()(pat.selfadjointView<Eigen::Lower>(), P);
      // Eigen's ordering functors return the inverse permutation: P.indices()[new] = old.
      order.assign(P.indices().data(), P.indices().data() + g.size());
      break;
    }
  }
  if (static_cast<int>(order.size()) != g.size()) fail(Errc::range_error, "ordering lost vertices");
  return order;
}

std::vector<int> fill_reducing_ordering(const SparseSymOp& A, OrderingMethod method) {
  const Graph g = adjacency_graph(A);
  if (method == OrderingMethod::natural) return order_graph(g, method);
  const Compression c = compress_graph(g);
  return expand(c, order_graph(c.graph, method));
}

EliminationTree elimination_tree(const SparseSymOp& A, const std::vector<int>& perm) {
  const int n = A.dim();
  std::vector<int> iperm(n);
  for (int k = 0; k < n; ++k) iperm[perm[k]] = k;
  const auto rp = A.row_offsets();
  const auto ci = A.col_indices();

  EliminationTree t;
  t.parent.assign(n, -1);
  std::vector<int> ancestor(n, -1);
  for (int j = 0; j < n; ++j) {
    const int old = perm[j];
    for (int k = rp[old]; k < rp[old + 1]; ++k) {
      int i = iperm[ci[k]];
      if (i >= j) continue;
      // Walk from i to the root of its current subtree, compressing the path onto j.
      while (i != -1 && i < j) {
        const int next = ancestor[i];
        ancestor[i] = j;
        if (next == -1) t.parent[i] = j;
        i = next;
      }
    }
  }

  // Column counts by row-subtree traversal.
  t.col_count.assign(n, 1);
  std::vector<int> mark(n, -1);
  for (int i = 0; i < n; ++i) {
    mark[i] = i;
    const int old = perm[i];
    for (int k = rp[old]; k < rp[old + 1]; ++k) {
      int j = iperm[ci[k]];
      while (j < i && mark[j] != i) {
        mark[j] = i;
        ++t.col_count[j];
        j = t.parent[j];
      }
    }
  }
  return t;
}

std::vector<int> tree_postorder(const std::vector<int>& parent) {
  const int n = static_cast<int>(parent.size());
  std::vector<int> head(n, -1), next(n, -1), post;
  post.reserve(n);
  for (int j = n - 1; j >= 0; --j) {
    if (parent[j] < 0) continue;
    next[j] = head[parent[j]];
    head[parent[j]] = j;
  }
  std::vector<int> stack;
  for (int r = 0; r < n; ++r) {
    if (parent[r] >= 0) continue;
    stack.push_back(r);
    while (!stack.empty()) {
      const int v = stack.back();
      if (head[v] >= 0) {
        const int c = head[v];
        head[v] = next[c];
        stack.push_back(c);
      } else {
        stack.pop_back();
        post.push_back(v);
      }
    }
  }
  return post;
}

long long factor_nonzeros(const SparseSymOp& A, const std::vector<int>& perm) {
  const auto t = elimination_tree(A, perm);
  return std::accumulate(t.col_count.begin(), t.col_count.end(), 0LL);
}

}  // namespace cavity
