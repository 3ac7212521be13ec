#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avwc/channel.hpp"
#include "avwc/prob.hpp"
#include "avwc/rng.hpp"

// Secrecy-capacity engine.
//
// The single-letter value is max over input laws P of
//   min_{W in closure(W-family)} I(P;W) - max_{V in closure(V-family)} I(P;V),
// with the closure picked by the jammer-knowledge mode: row-convex when the
// jammer sees the channel input, convex otherwise. I(P;.) is convex in the
// channel, so the inner minimum may sit in the interior (projected gradient
// descent, multi-start) while the inner maximum is attained at a closure
// vertex (enumeration). The outer problem has no exploitable structure; it
// is handled by an exhaustive simplex grid followed by local ascent from the
// best grid points, and the best grid value is kept as a certified
// achievable lower bracket.

namespace avwc {

enum class JammerMode { NoSideInfo, MessagesOnly, InputKnown };

inline const char* jammer_mode_name(JammerMode m) {
  switch (m) {
    case JammerMode::NoSideInfo: return "none";
    case JammerMode::MessagesOnly: return "messages";
    case JammerMode::InputKnown: return "input-known";
  }
  return "?";
}

inline ClosureKind closure_for_mode(JammerMode m) {
  return m == JammerMode::InputKnown ? ClosureKind::RowConvex : ClosureKind::Convex;
}

struct EngineOptions {
  int outer_grid = 100;      // input-law grid resolution (|X| <= 4)
  int polish_top = 10;       // grid points refined by projected ascent
  int bracket_grid = 64;     // closure grid for the final inner bracket
  double inner_tol = 1e-9;   // improvement threshold for inner descent
  int inner_max_iters = 10000;
  double outer_tol = 1e-9;
  int outer_max_iters = 120;
  std::size_t vertex_cap = 1000000;
  int hypothesis_grid = 8;   // strong-degradedness falsification grid
  double hypothesis_tol = 1e-9;
  bool check_hypotheses = true;
  int multi_starts = 5;      // random restarts for the prefix search
  std::uint64_t seed = 0x5ecc4b5ull;
};

struct InnerResult {
  double value;
  ClosureElement element;
  bool converged = true;
  bool used_fallback = false;  // vertex cap exceeded, gradient ascent instead
  long iterations = 0;
};

namespace detail {

// Euclidean projection onto the probability simplex (sorting algorithm).
inline void project_simplex(std::span<double> v) {
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  double s = 0.0;
  for (double& x : v) {
    x = std::max(0.0, x - theta);
    s += x;
  }
  for (double& x : v) x /= s;
}

// theta laid out as `blocks` rows of width `block_dim`; Convex closures use
// one shared block, RowConvex one block per input symbol.
struct ThetaLayout {
  std::size_t blocks;
  std::size_t block_dim;
  std::size_t size() const { return blocks * block_dim; }
};

inline StochasticMatrix theta_matrix(std::size_t nx, const ThetaLayout& lay,
                                     const std::vector<double>& t) {
  std::vector<double> a(nx * lay.block_dim);
  for (std::size_t x = 0; x < nx; ++x) {
    const double* src = t.data() + (lay.blocks == 1 ? 0 : x * lay.block_dim);
    for (std::size_t s = 0; s < lay.block_dim; ++s) a[x * lay.block_dim + s] = src[s];
  }
  return StochasticMatrix(nx, lay.block_dim, std::move(a), 1e-7);
}

// I(P; rho * sum_s theta(s|x) F_s) and its gradient in theta. Without rho
// the identity embedding is used and P lives directly on X.
class MixedMiObjective {
 public:
  MixedMiObjective(const Distribution& p, const ChannelFamily& family,
                   ThetaLayout lay, const StochasticMatrix* rho = nullptr)
      : p_(p), fam_(family), lay_(lay), rho_(rho) {
    nx_ = fam_[0].n_in();
    no_ = fam_[0].n_out();
    ns_ = fam_.size();
    npsi_ = rho_ ? rho_->n_in() : nx_;
  }

  ThetaLayout layout() const { return lay_; }

  std::vector<double> effective(const std::vector<double>& t) const {
    std::vector<double> k(nx_ * no_, 0.0);
    for (std::size_t x = 0; x < nx_; ++x) {
      const double* tx = t.data() + (lay_.blocks == 1 ? 0 : x * ns_);
      for (std::size_t s = 0; s < ns_; ++s) {
        double w = tx[s];
        if (w == 0.0) continue;
        for (std::size_t y = 0; y < no_; ++y) k[x * no_ + y] += w * fam_[s](x, y);
      }
    }
    if (!rho_) return k;
    std::vector<double> m(npsi_ * no_, 0.0);
    for (std::size_t psi = 0; psi < npsi_; ++psi)
      for (std::size_t x = 0; x < nx_; ++x) {
        double r = (*rho_)(psi, x);
        if (r == 0.0) continue;
        for (std::size_t y = 0; y < no_; ++y) m[psi * no_ + y] += r * k[x * no_ + y];
      }
    return m;
  }

  double value(const std::vector<double>& t) const { return mi_of(effective(t)); }

  // dI/dtheta(x,s) = sum_psi P(psi) rho(x|psi) sum_y F_s(y|x)
  // log2(M(y|psi)/q(y)); the x-sum collapses into one block for Convex.
  void gradient(const std::vector<double>& t, std::vector<double>& g) const {
    std::vector<double> m = effective(t);
    std::vector<double> q(no_, 0.0);
    for (std::size_t i = 0; i < npsi_; ++i)
      for (std::size_t y = 0; y < no_; ++y) q[y] += p_[i] * m[i * no_ + y];
    g.assign(lay_.size(), 0.0);
    for (std::size_t psi = 0; psi < npsi_; ++psi) {
      if (p_[psi] == 0.0) continue;
      for (std::size_t x = 0; x < nx_; ++x) {
        double r = rho_ ? (*rho_)(psi, x) : (psi == x ? 1.0 : 0.0);
        if (r == 0.0) continue;
        double scale = p_[psi] * r;
        std::size_t base = lay_.blocks == 1 ? 0 : x * ns_;
        for (std::size_t y = 0; y < no_; ++y) {
          double mv = std::max(m[psi * no_ + y], 1e-300);
          double lg = std::log2(mv / std::max(q[y], 1e-300));
          for (std::size_t s = 0; s < ns_; ++s) {
            double f = fam_[s](x, y);
            if (f != 0.0) g[base + s] += scale * f * lg;
          }
        }
      }
    }
  }

 private:
  double mi_of(const std::vector<double>& m) const {
    std::vector<double> q(no_, 0.0);
    double hc = 0.0;
    for (std::size_t i = 0; i < npsi_; ++i) {
      if (p_[i] == 0.0) continue;
      for (std::size_t y = 0; y < no_; ++y) {
        double v = m[i * no_ + y];
        q[y] += p_[i] * v;
        if (v > 0.0) hc -= p_[i] * v * std::log2(v);
      }
    }
    double hq = 0.0;
    for (double v : q)
      if (v > 0.0) hq -= v * std::log2(v);
    return hq - hc;
  }

  const Distribution& p_;
  const ChannelFamily& fam_;
  ThetaLayout lay_;
  const StochasticMatrix* rho_;
  std::size_t nx_, no_, ns_, npsi_;
};

inline void project_blocks(std::vector<double>& t, const ThetaLayout& lay) {
  for (std::size_t b = 0; b < lay.blocks; ++b)
    project_simplex(std::span<double>(t.data() + b * lay.block_dim, lay.block_dim));
}

// Projected-gradient extremization over a product of simplices;
// sign = +1 minimizes, -1 maximizes. Returns iterations used.
inline long projected_gradient(const MixedMiObjective& obj, std::vector<double>& t,
                               double& ft, double sign, double tol, int max_iters) {
  ThetaLayout lay = obj.layout();
  ft = obj.value(t);
  std::vector<double> g, trial(t.size());
  long iters = 0;
  for (int it = 0; it < max_iters; ++it) {
    obj.gradient(t, g);
    double eta = 0.5;
    bool improved = false;
    double fn = ft;
    while (eta > 1e-14) {
      for (std::size_t i = 0; i < t.size(); ++i) trial[i] = t[i] - sign * eta * g[i];
      project_blocks(trial, lay);
      fn = obj.value(trial);
      if (sign * (ft - fn) > 0.0) {
        improved = true;
        break;
      }
      eta *= 0.5;
    }
    ++iters;
    if (!improved) break;
    double gain = sign * (ft - fn);
    t = trial;
    ft = fn;
    if (gain < tol * std::max(1.0, std::abs(ft))) break;
  }
  return iters;
}

inline bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    if (a[i] < b[i] - 1e-12) return true;
    if (a[i] > b[i] + 1e-12) return false;
  }
  return false;
}

// Descent starts: all vertices when few, otherwise the best vertices by
// objective value plus seeded random interior points; the barycenter always.
inline std::vector<std::vector<double>> descent_starts(const MixedMiObjective& obj,
                                                       double sign,
                                                       std::size_t vertex_cap,
                                                       std::uint64_t seed) {
  ThetaLayout lay = obj.layout();
  std::size_t ns = lay.block_dim;
  std::vector<std::vector<double>> starts;

  std::size_t vertex_count = 1;
  bool overflow = false;
  for (std::size_t b = 0; b < lay.blocks && !overflow; ++b) {
    if (vertex_count > vertex_cap / std::max<std::size_t>(ns, 1) + 1) overflow = true;
    vertex_count *= ns;
  }

  auto vertex = [&](std::size_t i) {
    std::vector<double> t(lay.size(), 0.0);
    std::size_t v = i;
    for (std::size_t b = lay.blocks; b > 0; --b) {
      t[(b - 1) * ns + (v % ns)] = 1.0;
      v /= ns;
    }
    return t;
  };

  if (!overflow && vertex_count <= 64) {
    for (std::size_t i = 0; i < vertex_count; ++i) starts.push_back(vertex(i));
  } else if (!overflow && vertex_count <= vertex_cap) {
    // score all vertices, descend from the 8 best only
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i)
      scored.emplace_back(sign * obj.value(vertex(i)), i);
    std::stable_sort(scored.begin(), scored.end());
    for (std::size_t i = 0; i < std::min<std::size_t>(8, scored.size()); ++i)
      starts.push_back(vertex(scored[i].second));
  } else {
    Rng rng(seed, 0xb10cULL);
    for (int r = 0; r < 16; ++r) {
      std::vector<double> t(lay.size());
      for (double& v : t) v = -std::log(1.0 - rng.next_double());
      for (std::size_t b = 0; b < lay.blocks; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < ns; ++j) s += t[b * ns + j];
        for (std::size_t j = 0; j < ns; ++j) t[b * ns + j] /= s;
      }
      starts.push_back(std::move(t));
    }
  }
  starts.push_back(std::vector<double>(lay.size(), 1.0 / static_cast<double>(ns)));
  return starts;
}

struct ThetaOpt {
  double value = 0.0;
  std::vector<double> theta;
  long iterations = 0;
  bool used_fallback = false;
};

inline ThetaOpt minimize_theta(const MixedMiObjective& obj, const EngineOptions& opts) {
  ThetaOpt best;
  best.value = std::numeric_limits<double>::infinity();
  for (auto& t : descent_starts(obj, +1.0, opts.vertex_cap, opts.seed)) {
    double ft = 0.0;
    best.iterations += projected_gradient(obj, t, ft, +1.0, opts.inner_tol,
                                          opts.inner_max_iters);
    if (ft < best.value - 1e-12 ||
        (ft < best.value + 1e-12 && (best.theta.empty() || lex_less(t, best.theta)))) {
      best.value = std::min(ft, best.value);
      best.theta = t;
    }
  }
  return best;
}

inline ThetaOpt maximize_theta_vertices(const MixedMiObjective& obj,
                                        const EngineOptions& opts) {
  ThetaLayout lay = obj.layout();
  std::size_t ns = lay.block_dim;
  std::size_t vertex_count = 1;
  bool overflow = false;
  for (std::size_t b = 0; b < lay.blocks && !overflow; ++b) {
    if (vertex_count > opts.vertex_cap / std::max<std::size_t>(ns, 1) + 1)
      overflow = true;
    vertex_count *= ns;
  }
  ThetaOpt best;
  best.value = -std::numeric_limits<double>::infinity();
  if (!overflow && vertex_count <= opts.vertex_cap) {
    std::vector<double> t(lay.size());
    for (std::size_t i = 0; i < vertex_count; ++i) {
      std::fill(t.begin(), t.end(), 0.0);
      std::size_t v = i;
      for (std::size_t b = lay.blocks; b > 0; --b) {
        t[(b - 1) * ns + (v % ns)] = 1.0;
        v /= ns;
      }
      double ft = obj.value(t);
      if (ft > best.value + 1e-15) {
        best.value = ft;
        best.theta = t;
      }
    }
    return best;
  }
  // Fallback beyond the cap: multi-start projected gradient ascent.
  best.used_fallback = true;
  for (auto& t : descent_starts(obj, -1.0, 0 /* force random starts */, opts.seed)) {
    double ft = 0.0;
    best.iterations += projected_gradient(obj, t, ft, -1.0, opts.inner_tol,
                                          opts.inner_max_iters);
    if (ft > best.value + 1e-12) {
      best.value = ft;
      best.theta = t;
    }
  }
  return best;
}

}  // namespace detail

// min over the chosen closure of I(P; channel). Convex objective over the
// weight polytope, so the minimum can be interior: multi-start projected
// gradient descent; ties resolved toward lexicographically smaller weights.
inline InnerResult inner_min_legit(const Distribution& p, const ChannelFamily& family,
                                   ClosureKind kind,
                                   const EngineOptions& opts = EngineOptions{}) {
  if (p.size() != family[0].n_in())
    throw std::invalid_argument("inner_min_legit: input dimension mismatch");
  detail::ThetaLayout lay{kind == ClosureKind::Convex ? 1 : family[0].n_in(),
                          family.size()};
  detail::MixedMiObjective obj(p, family, lay);
  detail::ThetaOpt opt = detail::minimize_theta(obj, opts);
  StochasticMatrix theta = detail::theta_matrix(family[0].n_in(), lay, opt.theta);
  ClosureElement el = kind == ClosureKind::Convex
                          ? mix_convex(family, theta.row_distribution(0))
                          : mix_row_convex(family, theta);
  return InnerResult{mutual_information(p, el.effective), std::move(el), true, false,
                     opt.iterations};
}

// max over the chosen closure of I(P; channel). The objective is convex in
// the channel, so the maximum is attained at a vertex: the |S| pure states
// (Convex) or the |S|^|X| row selections (RowConvex). Beyond the vertex cap
// it falls back to multi-start gradient ascent and flags the result.
inline InnerResult inner_max_eve(const Distribution& p, const ChannelFamily& family,
                                 ClosureKind kind,
                                 const EngineOptions& opts = EngineOptions{}) {
  if (p.size() != family[0].n_in())
    throw std::invalid_argument("inner_max_eve: input dimension mismatch");
  if (kind == ClosureKind::Convex) {
    double best_v = -std::numeric_limits<double>::infinity();
    std::size_t best_s = 0;
    for (std::size_t s = 0; s < family.size(); ++s) {
      double v = mutual_information(
          p, mix_convex(family, Distribution::point_mass(family.size(), s)).effective);
      if (v > best_v + 1e-15) {
        best_v = v;
        best_s = s;
      }
    }
    ClosureElement el = mix_convex(family, Distribution::point_mass(family.size(), best_s));
    return InnerResult{best_v, std::move(el), true, false, 0};
  }
  detail::ThetaLayout lay{family[0].n_in(), family.size()};
  detail::MixedMiObjective obj(p, family, lay);
  detail::ThetaOpt opt = detail::maximize_theta_vertices(obj, opts);
  ClosureElement el =
      mix_row_convex(family, detail::theta_matrix(family[0].n_in(), lay, opt.theta));
  return InnerResult{mutual_information(p, el.effective), std::move(el), true,
                     opt.used_fallback, opt.iterations};
}

struct CapacityDiagnostics {
  std::size_t outer_grid_points = 0;
  int outer_grid_resolution = 0;
  long inner_iterations = 0;
  long ascent_iterations = 0;
  double bracket_lo = 0.0;  // best outer-grid value (certified achievable)
  double bracket_hi = 0.0;  // value after local ascent
  double inner_bracket_min = 0.0;  // closure-grid check of the inner min at P*
  double inner_bracket_max = 0.0;  // closure-grid check of the inner max at P*
  bool eve_fallback = false;
};

struct CapacityResult {
  double value;           // clipped at 0
  double raw_difference;  // unclipped optimum, kept for diagnostics
  Distribution opt_input;
  ClosureElement worst_legit;
  ClosureElement best_eve;
  JammerMode mode;
  bool hypotheses_verified;
  std::string hypothesis_note;
  int k;  // letter-extension order (1 = single letter)
  std::optional<StochasticMatrix> prefix_rho;
  CapacityDiagnostics diagnostics;
};

namespace detail {

inline Distribution normalized(std::vector<double> v) {
  double s = 0.0;
  for (double& x : v) {
    x = std::max(x, 0.0);
    s += x;
  }
  for (double& x : v) x /= s;
  return Distribution(std::move(v));
}

// Local ascent on the input simplex with central finite differences
// (one-sided at the boundary) and step halving.
inline long ascend_input(std::vector<double>& p, double& fp,
                         const std::function<double(const Distribution&)>& f,
                         const EngineOptions& opts) {
  const double h = 1e-5;
  long iters = 0;
  std::vector<double> g(p.size()), trial(p.size());
  for (int it = 0; it < opts.outer_max_iters; ++it) {
    for (std::size_t x = 0; x < p.size(); ++x) {
      std::vector<double> up = p;
      up[x] += h;
      double fu = f(normalized(std::move(up)));
      if (p[x] >= h) {
        std::vector<double> dn = p;
        dn[x] -= h;
        g[x] = (fu - f(normalized(std::move(dn)))) / (2 * h);
      } else {
        g[x] = (fu - fp) / h;
      }
    }
    double eta = 0.25;
    bool improved = false;
    double fn = fp;
    while (eta > 1e-12) {
      for (std::size_t i = 0; i < p.size(); ++i) trial[i] = p[i] + eta * g[i];
      project_simplex(std::span<double>(trial.data(), trial.size()));
      fn = f(Distribution(trial));
      if (fn > fp) {
        improved = true;
        break;
      }
      eta *= 0.5;
    }
    ++iters;
    if (!improved) break;
    double gain = fn - fp;
    p = trial;
    fp = fn;
    if (gain < opts.outer_tol * std::max(1.0, std::abs(fp))) break;
  }
  return iters;
}

struct OuterOpt {
  double value = 0.0;
  std::vector<double> p;
  double grid_best = 0.0;
  std::size_t grid_points = 0;
  long ascent_iterations = 0;
};

// Shared outer optimizer: exhaustive simplex grid, then ascent from the
// strongest points. Both the single-letter engine and the fixed-prefix path
// go through here so that degenerate prefixes reduce exactly.
inline OuterOpt optimize_over_simplex(std::size_t dim,
                                      const std::function<double(const Distribution&)>& f,
                                      int grid, const EngineOptions& opts) {
  OuterOpt out;
  std::vector<std::pair<double, std::vector<double>>> scored;
  for_each_simplex_grid(dim, grid, [&](const std::vector<double>& w) {
    ++out.grid_points;
    scored.emplace_back(f(Distribution(w)), w);
  });
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  out.grid_best = scored.front().first;

  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<double> best_p;
  int tops = std::min<int>(opts.polish_top, static_cast<int>(scored.size()));
  for (int i = 0; i < tops; ++i) {
    std::vector<double> p = scored[static_cast<std::size_t>(i)].second;
    double fp = scored[static_cast<std::size_t>(i)].first;
    out.ascent_iterations += ascend_input(p, fp, f, opts);
    if (fp > best_val + 1e-15 ||
        (fp > best_val - 1e-15 && (best_p.empty() || lex_less(p, best_p)))) {
      best_val = std::max(fp, best_val);
      best_p = p;
    }
  }
  out.value = best_val;
  out.p = best_p;
  return out;
}

// Extremes of I(P;.) over the closure grid; diagnostic bracket for the
// inner optimizers at the final input law.
inline std::pair<double, double> closure_grid_extrema(const Distribution& p,
                                                      const ChannelFamily& family,
                                                      ClosureKind kind, int resolution) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto visit = [&](const StochasticMatrix& theta) {
    double v = mutual_information(p, mix_family(family, theta));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  if (kind == ClosureKind::Convex) {
    for_each_simplex_grid(family.size(), resolution, [&](const std::vector<double>& w) {
      visit(constant_rows(Distribution(w), family[0].n_in()));
    });
  } else {
    double points = 1.0;
    int res = resolution;
    for (std::size_t b = 0; b < family[0].n_in(); ++b) points *= res + 1;
    while (points > 2e6 && res > 4) {
      res /= 2;
      points = 1.0;
      for (std::size_t b = 0; b < family[0].n_in(); ++b) points *= res + 1;
    }
    for_each_row_grid_theta(family[0].n_in(), family.size(), res, visit);
  }
  return {lo, hi};
}

}  // namespace detail

// Single-letter secrecy capacity for the requested jammer mode. Theorem
// hypotheses (strong degradedness, best channel to the eavesdropper) are
// checked and reported, never silently assumed; when they fail the value is
// still computed and labeled a formula value.
inline CapacityResult secrecy_capacity_single_letter(const AvwcPair& pair,
                                                     JammerMode mode,
                                                     const EngineOptions& opts = EngineOptions{}) {
  ClosureKind kind = closure_for_mode(mode);

  bool hyp = false;
  std::string note;
  if (opts.check_hypotheses) {
    StrongDegradednessReport sd =
        is_strongly_degraded(pair, opts.hypothesis_grid, opts.hypothesis_tol);
    BestEavesdropperResult be =
        find_best_eavesdropper_channel(pair, opts.hypothesis_grid, opts.hypothesis_tol);
    hyp = sd.grid_verified && be.best.has_value();
    if (hyp) {
      note = "hypotheses grid-verified (strongly degraded, best eavesdropper found)";
    } else {
      note = "formula value, hypotheses unverified:";
      if (!sd.grid_verified) note += " not strongly degraded;";
      if (!be.best.has_value()) note += " no best eavesdropper channel found;";
    }
  } else {
    note = "hypothesis check skipped";
  }

  long inner_iters = 0;
  auto diff_at = [&](const Distribution& p) {
    InnerResult lo = inner_min_legit(p, pair.W, kind, opts);
    InnerResult hi = inner_max_eve(p, pair.V, kind, opts);
    inner_iters += lo.iterations + hi.iterations;
    return lo.value - hi.value;
  };

  detail::OuterOpt outer =
      detail::optimize_over_simplex(pair.nx(), diff_at, opts.outer_grid, opts);

  Distribution opt_input(outer.p);
  InnerResult fin_lo = inner_min_legit(opt_input, pair.W, kind, opts);
  InnerResult fin_hi = inner_max_eve(opt_input, pair.V, kind, opts);
  double raw = fin_lo.value - fin_hi.value;

  CapacityDiagnostics diag;
  diag.outer_grid_points = outer.grid_points;
  diag.outer_grid_resolution = opts.outer_grid;
  diag.inner_iterations = inner_iters;
  diag.ascent_iterations = outer.ascent_iterations;
  diag.bracket_lo = outer.grid_best;
  diag.bracket_hi = raw;
  diag.eve_fallback = fin_hi.used_fallback;
  auto [wlo, whi] = detail::closure_grid_extrema(opt_input, pair.W, kind, opts.bracket_grid);
  auto [vlo, vhi] = detail::closure_grid_extrema(opt_input, pair.V, kind, opts.bracket_grid);
  (void)whi;
  (void)vlo;
  diag.inner_bracket_min = wlo;
  diag.inner_bracket_max = vhi;

  return CapacityResult{std::max(0.0, raw),
                        raw,
                        opt_input,
                        fin_lo.element,
                        fin_hi.element,
                        mode,
                        hyp,
                        note,
                        1,
                        std::nullopt,
                        diag};
}

// Prefix specification for the finite-k lower bound: auxiliary variable Psi
// with |Psi| = psi_card feeding X^k through the prefix channel rho.
struct PrefixSpec {
  int k = 1;
  std::size_t psi_card = 0;                 // 0 -> default |X|^k + 1
  std::optional<StochasticMatrix> rho;      // fixed prefix; optimized if absent
};

namespace detail {

inline ChannelFamily k_extension(const ChannelFamily& fam, int k) {
  std::size_t nx = fam[0].n_in(), no = fam[0].n_out(), ns = fam.size();
  std::size_t nxk = 1, nok = 1, nsk = 1;
  for (int i = 0; i < k; ++i) {
    nxk *= nx;
    nok *= no;
    nsk *= ns;
  }
  ChannelFamily out;
  out.reserve(nsk);
  std::vector<std::size_t> sdig(static_cast<std::size_t>(k));
  std::vector<std::size_t> xdig(static_cast<std::size_t>(k));
  for (std::size_t si = 0; si < nsk; ++si) {
    std::size_t v = si;
    for (int i = k; i > 0; --i) {
      sdig[static_cast<std::size_t>(i - 1)] = v % ns;
      v /= ns;
    }
    std::vector<double> a(nxk * nok);
    for (std::size_t xi = 0; xi < nxk; ++xi) {
      std::size_t xv = xi;
      for (int i = k; i > 0; --i) {
        xdig[static_cast<std::size_t>(i - 1)] = xv % nx;
        xv /= nx;
      }
      for (std::size_t yi = 0; yi < nok; ++yi) {
        std::size_t yv = yi;
        double prod = 1.0;
        for (int i = k; i > 0; --i) {
          std::size_t yd = yv % no;
          yv /= no;
          prod *= fam[sdig[static_cast<std::size_t>(i - 1)]](
              xdig[static_cast<std::size_t>(i - 1)], yd);
        }
        a[xi * nok + yi] = prod;
      }
    }
    out.push_back(StochasticMatrix(nxk, nok, std::move(a), 1e-7));
  }
  return out;
}

struct PrefixedInner {
  double diff;
  std::vector<double> theta_w, theta_v;
  bool eve_fallback;
};

inline PrefixedInner prefixed_inner(const Distribution& p_psi, const StochasticMatrix& rho,
                                    const ChannelFamily& wk, const ChannelFamily& vk,
                                    ClosureKind kind, const EngineOptions& opts) {
  ThetaLayout lay{kind == ClosureKind::Convex ? 1 : wk[0].n_in(), wk.size()};
  MixedMiObjective w_obj(p_psi, wk, lay, &rho);
  MixedMiObjective v_obj(p_psi, vk, lay, &rho);
  ThetaOpt lo = minimize_theta(w_obj, opts);
  ThetaOpt hi = maximize_theta_vertices(v_obj, opts);
  return PrefixedInner{lo.value - hi.value, lo.theta, hi.theta, hi.used_fallback};
}

inline int grid_for_dim(std::size_t dim, int wanted) {
  // keep the simplex grid below ~30k points
  auto points = [&](int g) {
    double c = 1.0;
    for (std::size_t i = 1; i < dim; ++i) c = c * (g + i) / i;
    return c;
  };
  int g = wanted;
  while (g > 8 && points(g) > 30000.0) g /= 2;
  return g;
}

}  // namespace detail

// Finite-k lower bound on the multi-letter secrecy capacity. For a fixed
// prefix the outer optimization runs exactly as in the single-letter engine,
// so the degenerate identity prefix reproduces that value bit for bit. When
// rho is free, alternation (input law vs prefix rows) runs from the identity
// embedding plus seeded random prefixes, and the single-letter optimum is
// always kept as an embedded candidate so prefixing can never appear to hurt.
inline CapacityResult secrecy_capacity_multi_letter_bound(const AvwcPair& pair,
                                                          const PrefixSpec& spec,
                                                          JammerMode mode,
                                                          const EngineOptions& opts = EngineOptions{}) {
  if (spec.k < 1) throw std::invalid_argument("multi_letter: k must be >= 1");
  std::size_t nxk = 1;
  for (int i = 0; i < spec.k; ++i) nxk *= pair.nx();
  if (nxk > 4096) throw std::length_error("multi_letter: |X|^k exceeds the 4096 cap");
  std::size_t psi_card = spec.psi_card ? spec.psi_card : nxk + 1;
  if (spec.rho && (spec.rho->n_in() != psi_card || spec.rho->n_out() != nxk))
    throw std::invalid_argument("multi_letter: rho must be psi_card x |X|^k");

  ClosureKind kind = closure_for_mode(mode);
  ChannelFamily wk = spec.k == 1 ? pair.W : detail::k_extension(pair.W, spec.k);
  ChannelFamily vk = spec.k == 1 ? pair.V : detail::k_extension(pair.V, spec.k);

  EngineOptions iopts = opts;
  iopts.check_hypotheses = false;

  auto value_for = [&](const Distribution& p_psi, const StochasticMatrix& rho) {
    return detail::prefixed_inner(p_psi, rho, wk, vk, kind, iopts).diff;
  };

  auto identity_rho = [&]() {
    std::vector<double> a(psi_card * nxk, 0.0);
    for (std::size_t i = 0; i < psi_card; ++i) a[i * nxk + (i % nxk)] = 1.0;
    return StochasticMatrix(psi_card, nxk, std::move(a));
  };

  double best_val;
  std::vector<double> best_p;
  StochasticMatrix best_rho = spec.rho ? *spec.rho : identity_rho();

  if (spec.rho) {
    int grid = detail::grid_for_dim(psi_card, opts.outer_grid);
    detail::OuterOpt outer = detail::optimize_over_simplex(
        psi_card, [&](const Distribution& p) { return value_for(p, *spec.rho); }, grid,
        opts);
    best_val = outer.value;
    best_p = outer.p;
  } else {
    // Embedded single-letter candidate: product law through the identity
    // prefix reproduces k times the single-letter optimum.
    CapacityResult base = secrecy_capacity_single_letter(pair, mode, iopts);
    std::vector<double> lifted(psi_card, 0.0);
    for (std::size_t xi = 0; xi < nxk; ++xi) {
      double prod = 1.0;
      std::size_t v = xi;
      for (int i = 0; i < spec.k; ++i) {
        prod *= base.opt_input[v % pair.nx()];
        v /= pair.nx();
      }
      lifted[xi] = prod;
    }
    StochasticMatrix id_rho = identity_rho();
    Distribution lifted_law = detail::normalized(std::move(lifted));
    best_val = value_for(lifted_law, id_rho);
    best_p.assign(lifted_law.probs().begin(), lifted_law.probs().end());
    best_rho = id_rho;

    int coarse = detail::grid_for_dim(psi_card, std::min(16, opts.outer_grid));
    EngineOptions copts = opts;
    copts.polish_top = 3;

    std::vector<StochasticMatrix> rho_starts{id_rho};
    Rng rng(opts.seed, 0x9f17ULL);
    for (int r = 1; r < opts.multi_starts; ++r) {
      std::vector<double> a(psi_card * nxk);
      for (double& v : a) v = -std::log(1.0 - rng.next_double());
      for (std::size_t b = 0; b < psi_card; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < nxk; ++j) s += a[b * nxk + j];
        for (std::size_t j = 0; j < nxk; ++j) a[b * nxk + j] /= s;
      }
      rho_starts.push_back(StochasticMatrix(psi_card, nxk, std::move(a)));
    }

    for (auto& rho0 : rho_starts) {
      StochasticMatrix rho = rho0;
      detail::OuterOpt outer = detail::optimize_over_simplex(
          psi_card, [&](const Distribution& p) { return value_for(p, rho); }, coarse,
          copts);
      std::vector<double> p = outer.p;
      double val = outer.value;
      for (int round = 0; round < 12; ++round) {
        // prefix rows: projected ascent with forward differences
        const double h = 1e-4;
        std::vector<double> flat(rho.data().begin(), rho.data().end());
        Distribution pd(p);
        double f0 = value_for(pd, rho);
        bool rho_moved = false;
        for (int sub = 0; sub < 8; ++sub) {
          std::vector<double> g(flat.size(), 0.0);
          for (std::size_t i = 0; i < flat.size(); ++i) {
            std::vector<double> pert = flat;
            pert[i] += h;
            for (std::size_t b = 0; b < psi_card; ++b)
              detail::project_simplex(std::span<double>(pert.data() + b * nxk, nxk));
            g[i] = (value_for(pd, StochasticMatrix(psi_card, nxk, pert, 1e-6)) - f0) / h;
          }
          double eta = 0.25;
          bool improved = false;
          std::vector<double> trial;
          double fn = f0;
          while (eta > 1e-10) {
            trial = flat;
            for (std::size_t i = 0; i < flat.size(); ++i) trial[i] += eta * g[i];
            for (std::size_t b = 0; b < psi_card; ++b)
              detail::project_simplex(std::span<double>(trial.data() + b * nxk, nxk));
            fn = value_for(pd, StochasticMatrix(psi_card, nxk, trial, 1e-6));
            if (fn > f0 + 1e-15) {
              improved = true;
              break;
            }
            eta *= 0.5;
          }
          if (!improved) break;
          flat = trial;
          rho_moved = true;
          double gain = fn - f0;
          f0 = fn;
          if (gain < 1e-7) break;
        }
        rho = StochasticMatrix(psi_card, nxk, flat, 1e-6);
        detail::OuterOpt re = detail::optimize_over_simplex(
            psi_card, [&](const Distribution& q) { return value_for(q, rho); }, coarse,
            copts);
        double gain = std::max(f0, re.value) - val;
        if (re.value >= f0) {
          p = re.p;
          val = re.value;
        } else {
          val = f0;
        }
        if (!rho_moved || gain < 1e-6) break;
      }
      if (val > best_val) {
        best_val = val;
        best_p = p;
        best_rho = rho;
      }
    }
  }

  Distribution p_psi(best_p);
  detail::PrefixedInner fin = detail::prefixed_inner(p_psi, best_rho, wk, vk, kind, iopts);
  detail::ThetaLayout lay{kind == ClosureKind::Convex ? 1 : wk[0].n_in(), wk.size()};
  StochasticMatrix tw = detail::theta_matrix(wk[0].n_in(), lay, fin.theta_w);
  StochasticMatrix tv = detail::theta_matrix(vk[0].n_in(), lay, fin.theta_v);
  ClosureElement worst = kind == ClosureKind::Convex
                             ? mix_convex(wk, tw.row_distribution(0))
                             : mix_row_convex(wk, tw);
  ClosureElement best_eve = kind == ClosureKind::Convex
                                ? mix_convex(vk, tv.row_distribution(0))
                                : mix_row_convex(vk, tv);

  CapacityDiagnostics diag;
  diag.bracket_lo = best_val / spec.k;
  diag.bracket_hi = fin.diff / spec.k;
  diag.eve_fallback = fin.eve_fallback;
  return CapacityResult{std::max(0.0, fin.diff / spec.k),
                        fin.diff / spec.k,
                        p_psi,
                        worst,
                        best_eve,
                        mode,
                        false,
                        "finite-k lower bound (k=" + std::to_string(spec.k) +
                            ", |Psi|=" + std::to_string(psi_card) + ")",
                        spec.k,
                        best_rho,
                        diag};
}

struct OrderingReport {
  CapacityResult no_side_info;
  CapacityResult input_known;
  double gap = 0.0;          // C(NoSideInfo) - C(InputKnown)
  bool ordering_ok = false;  // gap >= -tolerance; violations flag the optimizer
  double tolerance = 1e-6;
};

// Computes both single-letter variants and checks the corollary ordering
// C_S^ran >= C-hat_S^ran (convex closure dominates row-convex closure).
inline OrderingReport capacity_ordering_report(const AvwcPair& pair,
                                               const EngineOptions& opts = EngineOptions{}) {
  OrderingReport rep{secrecy_capacity_single_letter(pair, JammerMode::NoSideInfo, opts),
                     secrecy_capacity_single_letter(pair, JammerMode::InputKnown, opts),
                     0.0, false, 1e-6};
  rep.gap = rep.no_side_info.value - rep.input_known.value;
  rep.ordering_ok = rep.gap >= -rep.tolerance;
  return rep;
}

// Analytic gradient of P -> I(P;W) in ambient coordinates:
// dI/dp_x = D(W(.|x) || pW) - log2(e). Matches central finite differences at
// interior points; exposed for the gradient sanity checks.
inline std::vector<double> mi_input_gradient(const Distribution& p,
                                             const StochasticMatrix& w) {
  Distribution q = output_distribution(p, w);
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    double kl = 0.0;
    for (std::size_t y = 0; y < w.n_out(); ++y) {
      double v = w(x, y);
      if (v > 0.0) kl += v * std::log2(v / q[y]);
    }
    g[x] = kl - std::log2(std::exp(1.0));
  }
  return g;
}

}  // namespace avwc
