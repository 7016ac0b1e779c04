/*
 * (C) Copyright 2026 spherecast authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "spherecast/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spherecast/binio.hpp"

namespace spherecast {

namespace {

// Candidate neighbor offsets in canonical relative order: dr ascending,
// then |dc| ascending with the negative side first. The kernel of a pair
// depends only on (row, dr, dc), so every node in a row accumulates its
// degree and aggregation sums over bit-identical value sequences; zonal
// rotations therefore commute with aggregation exactly.
struct Offset {
  int dr;
  int dc;
};

std::vector<Offset> canonical_offsets(int window) {
  std::vector<Offset> out;
  for (int dr = -window; dr <= window; ++dr)
    for (int adc = 0; adc <= window; ++adc) {
      if (adc == 0) {
        out.push_back({dr, 0});
      } else {
        out.push_back({dr, -adc});
        out.push_back({dr, adc});
      }
    }
  return out;
}

}  // namespace

SphericalGraph build_graph(const GridPtr& grid, const GraphBuildOptions& options) {
  const int R = grid->n_lat(), C = grid->n_lon();
  const int N = R * C;
  const int W = options.window;
  if (W < 1) throw ConfigError("build_graph: window must be >= 1");

  SphericalGraph g;
  g.grid = grid;
  g.options = options;
  g.theta.resize(N);
  g.phi.resize(N);
  g.xyz.resize(N);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      const int k = grid->node(r, c);
      g.theta[k] = grid->lat(r);
      g.phi[k] = grid->lon(c);
      g.xyz[k] = lat_lon_to_cartesian(g.theta[k], g.phi[k]);
    }

  const auto offsets = canonical_offsets(W);

  // Kernel of the pair ((r, c), (r+dr, c+dc)); independent of c.
  auto kernel = [&](int r, int dr, int dc) -> double {
    double d2;
    if (options.planar) {
      const double dth = dr * grid->d_theta();
      const double dph = dc * grid->d_phi();
      d2 = dth * dth + dph * dph;
    } else {
      const int adc = std::abs(dc) % C;
      const int wrapped = std::min(adc, C - adc);
      const double d = haversine_dlon(grid->lat(r), grid->lat(r + dr), wrapped * grid->d_phi());
      d2 = d * d;
    }
    return std::exp(-options.kernel_gain * d2);
  };

  // Pruned unnormalized structure, per node in canonical order.
  // Self-loops (kernel 1) are kept in the matrix but not in the edge list.
  struct Entry {
    int col;
    double kern;
  };
  std::vector<std::vector<Entry>> rows(N);
  std::vector<double> degree(N);
  for (int r = 0; r < R; ++r) {
    // Neighbor pattern for this grid row, shared by all its nodes.
    std::vector<Offset> kept;
    std::vector<double> kept_kern;
    for (const Offset& o : offsets) {
      if (o.dr == 0 && o.dc == 0) continue;
      const int rr = r + o.dr;
      if (rr < 0 || rr >= R) continue;
      if (options.planar && std::abs(o.dc) >= C) continue;
      const double k = kernel(r, o.dr, o.dc);
      if (k >= options.prune_threshold) {
        kept.push_back(o);
        kept_kern.push_back(k);
      }
    }
    for (int c = 0; c < C; ++c) {
      const int i = grid->node(r, c);
      auto& row = rows[i];
      row.push_back({i, 1.0});  // self
      double deg = 1.0;
      std::vector<int> seen;
      for (size_t m = 0; m < kept.size(); ++m) {
        int cc;
        if (options.planar) {
          cc = c + kept[m].dc;  // no longitude wrap on the planar chart
          if (cc < 0 || cc >= C) continue;
        } else {
          cc = ((c + kept[m].dc) % C + C) % C;
        }
        const int j = grid->node(r + kept[m].dr, cc);
        if (j == i) continue;  // tiny grids: window wraps onto the node itself
        if (std::find(seen.begin(), seen.end(), j) != seen.end()) continue;
        seen.push_back(j);
        row.push_back({j, kept_kern[m]});
        deg += kept_kern[m];
      }
      degree[i] = deg;
    }
  }

  g.min_row_nonzeros = N > 0 ? static_cast<int>(rows[0].size()) : 0;
  g.max_row_nonzeros = 0;
  for (int i = 0; i < N; ++i) {
    const int nz = static_cast<int>(rows[i].size());
    g.min_row_nonzeros = std::min(g.min_row_nonzeros, nz);
    g.max_row_nonzeros = std::max(g.max_row_nonzeros, nz);
  }
  if (g.min_row_nonzeros < 2)
    throw ConfigError("build_graph: threshold disconnects the graph (a row has < 2 nonzeros)");

  // Symmetric normalization D^{-1/2} A D^{-1/2}.
  g.adjacency.n = N;
  g.adjacency.row_ptr.assign(N + 1, 0);
  for (int i = 0; i < N; ++i) g.adjacency.row_ptr[i + 1] = g.adjacency.row_ptr[i] + static_cast<uint32_t>(rows[i].size());
  g.adjacency.col.reserve(g.adjacency.row_ptr[N]);
  g.adjacency.val.reserve(g.adjacency.row_ptr[N]);
  std::vector<double> inv_sqrt_deg(N);
  for (int i = 0; i < N; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(degree[i]);
  for (int i = 0; i < N; ++i)
    for (const Entry& e : rows[i]) {
      g.adjacency.col.push_back(static_cast<uint32_t>(e.col));
      // Symmetric association order so A_ij == A_ji bit-exactly.
      g.adjacency.val.push_back(e.kern * (inv_sqrt_deg[i] * inv_sqrt_deg[e.col]));
    }

  // Undirected edge list (src < dst) with geometric features from the
  // pruned, unnormalized structure. The distance feature matches the
  // kernel's metric: great-circle for the spherical graph, Euclidean on
  // the (theta, phi) chart for the planar variant.
  for (int i = 0; i < N; ++i)
    for (const Entry& e : rows[i]) {
      if (e.col <= i) continue;
      g.edge_src.push_back(i);
      g.edge_dst.push_back(e.col);
    }
  const int E = static_cast<int>(g.edge_src.size());
  g.edge_features = Tensor(E, 3);
  for (int e = 0; e < E; ++e) {
    const int i = g.edge_src[e], j = g.edge_dst[e];
    const double dth = std::abs(g.theta[j] - g.theta[i]);
    double dph = std::abs(g.phi[j] - g.phi[i]);
    double dist;
    if (options.planar) {
      dist = std::sqrt(dth * dth + dph * dph);
    } else {
      if (dph > std::numbers::pi) dph = 2.0 * std::numbers::pi - dph;  // wrap across the date line
      dist = haversine(g.theta[i], g.phi[i], g.theta[j], g.phi[j]);
    }
    g.edge_features.at(e, 0) = dth;
    g.edge_features.at(e, 1) = dph;
    g.edge_features.at(e, 2) = dist;
  }
  return g;
}

Tensor aggregate(const SphericalGraph& graph, const Tensor& node_states) {
  if (node_states.rows != graph.n_nodes()) throw DimensionError("aggregate: node_states row count != node count");
  Tensor out;
  graph.adjacency.multiply(node_states, out);
  return out;
}

double spectral_radius(const CsrMatrix& m, int iterations) {
  Tensor v(m.n, 1, 1.0 / std::sqrt(static_cast<double>(m.n)));
  Tensor av;
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    m.multiply(v, av);
    double nrm = 0.0;
    for (double x : av.data) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    for (size_t i = 0; i < av.size(); ++i) v.data[i] = av.data[i] / nrm;
    lambda = nrm;
  }
  return lambda;
}

namespace {
constexpr char kGraphMagic[9] = "SCGRF01\0";
}

void save_graph(const SphericalGraph& g, const std::string& path) {
  binio::Writer w(path);
  w.magic(kGraphMagic);
  w.u32(static_cast<uint32_t>(g.grid->n_lat()));
  w.u32(static_cast<uint32_t>(g.grid->n_lon()));
  w.u8(g.options.planar ? 1 : 0);
  w.u32(static_cast<uint32_t>(g.options.window));
  w.f64(g.options.kernel_gain);
  w.f64(g.options.prune_threshold);
  w.u32(static_cast<uint32_t>(g.n_nodes()));
  w.u32(static_cast<uint32_t>(g.n_edges()));
  w.u64(g.adjacency.nnz());
  w.u32(static_cast<uint32_t>(g.min_row_nonzeros));
  w.u32(static_cast<uint32_t>(g.max_row_nonzeros));
  for (uint32_t p : g.adjacency.row_ptr) w.u32(p);
  for (uint32_t c : g.adjacency.col) w.u32(c);
  for (double v : g.adjacency.val) w.f64(v);
  for (int s : g.edge_src) w.u32(static_cast<uint32_t>(s));
  for (int d : g.edge_dst) w.u32(static_cast<uint32_t>(d));
  for (double v : g.edge_features.data) w.f64(v);
  if (!w.good()) throw DataError("save_graph: write failed: " + path);
}

SphericalGraph load_graph(const std::string& path) {
  binio::Reader r(path);
  r.expect_magic(kGraphMagic);
  const int n_lat = static_cast<int>(r.u32());
  const int n_lon = static_cast<int>(r.u32());
  GraphBuildOptions opt;
  opt.planar = r.u8() != 0;
  opt.window = static_cast<int>(r.u32());
  opt.kernel_gain = r.f64();
  opt.prune_threshold = r.f64();
  const int n_nodes = static_cast<int>(r.u32());
  const int n_edges = static_cast<int>(r.u32());
  const uint64_t nnz = r.u64();
  if (n_nodes != n_lat * n_lon) throw DataError("load_graph: node count inconsistent with grid dims");

  SphericalGraph g;
  g.grid = Grid::regular(n_lat, n_lon);
  g.options = opt;
  g.min_row_nonzeros = static_cast<int>(r.u32());
  g.max_row_nonzeros = static_cast<int>(r.u32());
  g.theta.resize(n_nodes);
  g.phi.resize(n_nodes);
  g.xyz.resize(n_nodes);
  for (int rr = 0; rr < n_lat; ++rr)
    for (int cc = 0; cc < n_lon; ++cc) {
      const int k = g.grid->node(rr, cc);
      g.theta[k] = g.grid->lat(rr);
      g.phi[k] = g.grid->lon(cc);
      g.xyz[k] = lat_lon_to_cartesian(g.theta[k], g.phi[k]);
    }
  g.adjacency.n = n_nodes;
  g.adjacency.row_ptr.resize(n_nodes + 1);
  for (auto& p : g.adjacency.row_ptr) p = r.u32();
  if (g.adjacency.row_ptr.back() != nnz) throw DataError("load_graph: nnz mismatch");
  g.adjacency.col.resize(nnz);
  for (auto& c : g.adjacency.col) c = r.u32();
  g.adjacency.val.resize(nnz);
  for (auto& v : g.adjacency.val) v = r.f64();
  g.edge_src.resize(n_edges);
  for (auto& s : g.edge_src) s = static_cast<int>(r.u32());
  g.edge_dst.resize(n_edges);
  for (auto& d : g.edge_dst) d = static_cast<int>(r.u32());
  g.edge_features = Tensor(n_edges, 3);
  for (auto& v : g.edge_features.data) v = r.f64();
  return g;
}

}  // namespace spherecast
