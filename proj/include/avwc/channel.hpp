#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "avwc/linprog.hpp"
#include "avwc/prob.hpp"

// State-indexed channel pairs, their convex and row-convex closures, and
// degradedness decisions via linear feasibility.
//
// Degradedness is operationalized as post-processing: V is degraded with
// respect to W iff a row-stochastic D exists with V = W * D (the finite-
// alphabet equivalent of the Markov chain X -> Y -> Z).

namespace avwc {

using ChannelFamily = std::vector<StochasticMatrix>;

// The AVWC tuple (X, S, W, V, Y, Z): W_s: X->Y to the legitimate receiver,
// V_s: X->Z to the eavesdropper, one matrix per state s.
struct AvwcPair {
  ChannelFamily W;
  ChannelFamily V;

  AvwcPair(ChannelFamily w, ChannelFamily v) : W(std::move(w)), V(std::move(v)) {
    if (W.empty() || V.empty() || W.size() != V.size())
      throw std::invalid_argument("AvwcPair: W and V need one matrix per state");
    for (const auto& m : W)
      if (m.n_in() != W[0].n_in() || m.n_out() != W[0].n_out())
        throw std::invalid_argument("AvwcPair: inconsistent W dimensions");
    for (const auto& m : V)
      if (m.n_in() != W[0].n_in() || m.n_out() != V[0].n_out())
        throw std::invalid_argument("AvwcPair: inconsistent V dimensions");
  }

  std::size_t nx() const { return W[0].n_in(); }
  std::size_t ny() const { return W[0].n_out(); }
  std::size_t nz() const { return V[0].n_out(); }
  std::size_t ns() const { return W.size(); }
};

enum class ClosureKind { Convex, RowConvex };

// One element of a closure: the mixing weights theta(s|x) (constant rows in
// the Convex case) together with the mixed channel they produce.
struct ClosureElement {
  ClosureKind kind;
  StochasticMatrix weights;    // |X| x |S|
  StochasticMatrix effective;  // |X| x n_out

  // Convex-case accessor: the state law shared by all rows.
  Distribution state_weights() const { return weights.row_distribution(0); }
};

namespace detail {

inline StochasticMatrix constant_rows(const Distribution& p, std::size_t nx) {
  std::vector<double> a;
  a.reserve(nx * p.size());
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t s = 0; s < p.size(); ++s) a.push_back(p[s]);
  return StochasticMatrix(nx, p.size(), std::move(a));
}

inline StochasticMatrix mix_family(const ChannelFamily& family,
                                   const StochasticMatrix& theta) {
  std::size_t nx = family[0].n_in(), no = family[0].n_out();
  std::vector<double> a(nx * no, 0.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t s = 0; s < family.size(); ++s) {
      double w = theta(x, s);
      if (w == 0.0) continue;
      for (std::size_t y = 0; y < no; ++y) a[x * no + y] += w * family[s](x, y);
    }
  return StochasticMatrix(nx, no, std::move(a), 1e-9);
}

// All compositions of `resolution` into `dim` parts, lexicographically,
// emitted as weight vectors k_i / resolution.
inline void for_each_simplex_grid(std::size_t dim, int resolution,
                                  const std::function<void(const std::vector<double>&)>& fn) {
  std::vector<int> k(dim, 0);
  std::vector<double> w(dim, 0.0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == dim) {
      k[i] = left;
      for (std::size_t j = 0; j < dim; ++j)
        w[j] = static_cast<double>(k[j]) / resolution;
      fn(w);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, resolution);
}

// Row-wise grid over theta in P(S|X): each row ranges over the simplex grid
// independently, row x = 0 varying slowest.
inline void for_each_row_grid_theta(std::size_t nx, std::size_t ns, int resolution,
                                    const std::function<void(const StochasticMatrix&)>& fn) {
  std::vector<std::vector<double>> grid;
  for_each_simplex_grid(ns, resolution,
                        [&](const std::vector<double>& w) { grid.push_back(w); });
  std::vector<std::size_t> idx(nx, 0);
  for (;;) {
    std::vector<double> a;
    a.reserve(nx * ns);
    for (std::size_t x = 0; x < nx; ++x)
      a.insert(a.end(), grid[idx[x]].begin(), grid[idx[x]].end());
    fn(StochasticMatrix(nx, ns, std::move(a)));
    std::size_t x = nx;
    while (x > 0) {
      --x;
      if (++idx[x] < grid.size()) break;
      idx[x] = 0;
      if (x == 0) return;
    }
  }
}

}  // namespace detail

// State-averaged channel sum_s p(s) W_s, an element of the convex closure.
inline ClosureElement mix_convex(const ChannelFamily& family, const Distribution& p) {
  if (p.size() != family.size())
    throw std::invalid_argument("mix_convex: weight dimension mismatch");
  StochasticMatrix theta = detail::constant_rows(p, family[0].n_in());
  return ClosureElement{ClosureKind::Convex, theta, detail::mix_family(family, theta)};
}

// Row-wise mixture: row x of the result is sum_s theta(s|x) W_s(.|x).
inline ClosureElement mix_row_convex(const ChannelFamily& family,
                                     const StochasticMatrix& theta) {
  if (theta.n_in() != family[0].n_in() || theta.n_out() != family.size())
    throw std::invalid_argument("mix_row_convex: theta dimension mismatch");
  return ClosureElement{ClosureKind::RowConvex, theta, detail::mix_family(family, theta)};
}

inline std::size_t row_convex_vertex_count(const ChannelFamily& family) {
  std::size_t count = 1;
  for (std::size_t x = 0; x < family[0].n_in(); ++x) {
    if (count > (std::size_t{1} << 52) / family.size())
      return std::size_t{0} - 1;  // saturate well past any sane cap
    count *= family.size();
  }
  return count;
}

// Vertices of the row-convex closure: one element per row selection
// g: X -> S, enumerated lexicographically with g(0) varying slowest.
inline std::vector<ClosureElement> row_convex_vertices(const ChannelFamily& family,
                                                       std::size_t cap = 1000000) {
  std::size_t nx = family[0].n_in(), ns = family.size();
  std::size_t count = row_convex_vertex_count(family);
  if (count > cap)
    throw std::length_error("row_convex_vertices: |S|^|X| exceeds enumeration cap; "
                            "use the iterative optimizer instead");
  std::vector<ClosureElement> out;
  out.reserve(count);
  std::vector<std::size_t> g(nx, 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t v = i;
    for (std::size_t x = nx; x > 0; --x) {
      g[x - 1] = v % ns;
      v /= ns;
    }
    std::vector<double> a(nx * ns, 0.0);
    for (std::size_t x = 0; x < nx; ++x) a[x * ns + g[x]] = 1.0;
    StochasticMatrix theta(nx, ns, std::move(a));
    out.push_back(mix_row_convex(family, theta));
  }
  return out;
}

struct DegradednessCertificate {
  bool feasible = false;
  std::optional<StochasticMatrix> degrading_map;  // D with Vc = Wc * D
  double residual = 0.0;                          // max-abs constraint violation
};

// Decides existence of a row-stochastic D with Vc = Wc * D by minimizing the
// Chebyshev residual t over { |(Wc D - Vc)(x,z)| <= t, D row-stochastic }.
inline DegradednessCertificate is_degraded(const StochasticMatrix& wc,
                                           const StochasticMatrix& vc,
                                           double tol = 1e-9) {
  if (wc.n_in() != vc.n_in())
    throw std::invalid_argument("is_degraded: input alphabet mismatch");
  const std::size_t nx = wc.n_in(), ny = wc.n_out(), nz = vc.n_out();
  const std::size_t nd = ny * nz;  // D entries, then t
  LinearProgram lp(nd + 1);
  lp.set_objective(nd, 1.0);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t z = 0; z < nz; ++z) {
      std::vector<double> row(nd + 1, 0.0);
      for (std::size_t y = 0; y < ny; ++y) row[y * nz + z] = wc(x, y);
      row[nd] = -1.0;
      lp.add_le_row(row, vc(x, z));  //  (Wc D)(x,z) - t <= Vc(x,z)
      for (double& v : row) v = -v;
      row[nd] = -1.0;
      lp.add_le_row(row, -vc(x, z));  // -(Wc D)(x,z) - t <= -Vc(x,z)
    }
  for (std::size_t y = 0; y < ny; ++y) {
    std::vector<double> row(nd + 1, 0.0);
    for (std::size_t z = 0; z < nz; ++z) row[y * nz + z] = 1.0;
    lp.add_eq_row(row, 1.0);
  }
  LpResult sol = lp.solve();
  if (!sol.feasible)
    throw std::runtime_error("is_degraded: residual LP unexpectedly infeasible");
  DegradednessCertificate cert;
  cert.residual = sol.x[nd];
  cert.feasible = cert.residual <= tol;
  if (cert.feasible) {
    std::vector<double> d(sol.x.begin(), sol.x.begin() + static_cast<long>(nd));
    cert.degrading_map = StochasticMatrix(ny, nz, std::move(d), 1e-7);
  }
  return cert;
}

struct StrongDegradednessFailure {
  StochasticMatrix theta_w;  // strategy against the legitimate channel
  StochasticMatrix theta_v;  // strategy against the eavesdropper channel
  double residual;
};

struct StrongDegradednessReport {
  // True only if every sampled (theta, theta') pair passed the feasibility
  // test. Sampling covers all vertex pairs plus a row-wise grid, so this is
  // a grid-verified statement, not a proof over all mixtures.
  bool grid_verified = false;
  int grid_resolution = 0;
  std::size_t pairs_checked = 0;
  std::vector<StrongDegradednessFailure> failures;  // capped at kMaxFailures
  bool failures_truncated = false;

  static constexpr std::size_t kMaxFailures = 8;
};

inline StrongDegradednessReport is_strongly_degraded(const AvwcPair& pair,
                                                     int grid_resolution = 8,
                                                     double tol = 1e-9) {
  StrongDegradednessReport report;
  report.grid_resolution = grid_resolution;
  report.grid_verified = true;

  auto check = [&](const ClosureElement& w_el, const ClosureElement& v_el) {
    if (report.failures_truncated) return;
    DegradednessCertificate cert = is_degraded(w_el.effective, v_el.effective, tol);
    ++report.pairs_checked;
    if (!cert.feasible) {
      report.grid_verified = false;
      if (report.failures.size() < StrongDegradednessReport::kMaxFailures)
        report.failures.push_back({w_el.weights, v_el.weights, cert.residual});
      else
        report.failures_truncated = true;
    }
  };

  std::vector<ClosureElement> wv = row_convex_vertices(pair.W);
  std::vector<ClosureElement> vv = row_convex_vertices(pair.V);
  for (const auto& w_el : wv)
    for (const auto& v_el : vv) check(w_el, v_el);

  if (!report.failures.empty()) return report;  // already falsified at vertices

  std::vector<ClosureElement> w_grid, v_grid;
  detail::for_each_row_grid_theta(pair.nx(), pair.ns(), grid_resolution,
                                  [&](const StochasticMatrix& theta) {
                                    w_grid.push_back(mix_row_convex(pair.W, theta));
                                    v_grid.push_back(mix_row_convex(pair.V, theta));
                                  });
  for (const auto& w_el : w_grid) {
    for (const auto& v_el : v_grid) {
      check(w_el, v_el);
      if (report.failures_truncated) return report;
    }
  }
  return report;
}

struct BestEavesdropperResult {
  std::optional<ClosureElement> best;  // first candidate passing all checks
  std::size_t candidates_checked = 0;
  // Diagnostics: the candidate minimizing its worst vertex residual, useful
  // when no exact best channel exists.
  double closest_worst_residual = 0.0;
  std::optional<StochasticMatrix> closest_weights;
};

// Searches for theta* such that every row-convex vertex of the V family is a
// degraded version of V_theta* (single-letter sufficient check). Candidate
// order: vertices first, then the row-wise grid, both lexicographic; the
// first passing candidate is returned.
inline BestEavesdropperResult find_best_eavesdropper_channel(const AvwcPair& pair,
                                                             int grid_resolution = 8,
                                                             double tol = 1e-9) {
  BestEavesdropperResult result;
  result.closest_worst_residual = std::numeric_limits<double>::infinity();
  std::vector<ClosureElement> verts = row_convex_vertices(pair.V);

  auto try_candidate = [&](const ClosureElement& cand) -> bool {
    ++result.candidates_checked;
    double worst = 0.0;
    for (const auto& g : verts) {
      DegradednessCertificate cert = is_degraded(cand.effective, g.effective, tol);
      worst = std::max(worst, cert.residual);
      if (worst > result.closest_worst_residual) break;
    }
    if (worst < result.closest_worst_residual) {
      result.closest_worst_residual = worst;
      result.closest_weights = cand.weights;
    }
    if (worst <= tol) {
      result.best = cand;
      return true;
    }
    return false;
  };

  for (const auto& cand : verts)
    if (try_candidate(cand)) return result;
  bool found = false;
  detail::for_each_row_grid_theta(pair.nx(), pair.ns(), grid_resolution,
                                  [&](const StochasticMatrix& theta) {
                                    if (found) return;
                                    if (try_candidate(mix_row_convex(pair.V, theta)))
                                      found = true;
                                  });
  return result;
}

}  // namespace avwc
