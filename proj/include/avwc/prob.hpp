#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Exact finite-alphabet probability primitives. All entropies and mutual
// informations are in bits (log base 2); 0*log 0 terms are dropped.
// Summation order is fixed (ascending index) so results are reproducible
// across runs and platforms.

namespace avwc {

using Sequence = std::vector<int>;

inline double log2_safe(double x) { return std::log2(x); }

// Probability vector on a finite alphabet. Construction rejects negative
// entries and sums farther than 1e-12 from one; a sum within tolerance is
// scaled out so downstream code can rely on an exact unit mass.
class Distribution {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit Distribution(std::vector<double> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw std::invalid_argument("Distribution: empty support");
    double sum = 0.0;
    for (double v : p_) {
      if (v < 0.0 || !std::isfinite(v))
        throw std::invalid_argument("Distribution: negative or non-finite entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
      throw std::invalid_argument("Distribution: entries sum to " +
                                  std::to_string(sum) + ", not 1");
    if (sum != 1.0) {
      for (double& v : p_) v /= sum;
    }
  }

  Distribution(std::initializer_list<double> probs)
      : Distribution(std::vector<double>(probs)) {}

  static Distribution uniform(std::size_t n) {
    return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Distribution point_mass(std::size_t n, std::size_t at) {
    std::vector<double> p(n, 0.0);
    p.at(at) = 1.0;
    return Distribution(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probs() const { return p_; }

  bool operator==(const Distribution& o) const { return p_ == o.p_; }

 private:
  std::vector<double> p_;
};

// Row-stochastic matrix W(out|in), stored row-major. Doubles as a channel
// W(y|x), a jammer strategy theta(s|x), a degrading map D(z|y) and a prefix
// channel rho(x^k|psi).
class StochasticMatrix {
 public:
  StochasticMatrix(std::size_t n_in, std::size_t n_out,
                   std::vector<double> row_major,
                   double row_tolerance = Distribution::kSumTolerance)
      : n_in_(n_in), n_out_(n_out), a_(std::move(row_major)) {
    if (n_in_ == 0 || n_out_ == 0 || a_.size() != n_in_ * n_out_)
      throw std::invalid_argument("StochasticMatrix: bad dimensions");
    for (std::size_t x = 0; x < n_in_; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < n_out_; ++y) {
        double v = a_[x * n_out_ + y];
        if (v < 0.0 || !std::isfinite(v))
          throw std::invalid_argument("StochasticMatrix: negative entry in row " +
                                      std::to_string(x));
        sum += v;
      }
      if (std::abs(sum - 1.0) > row_tolerance)
        throw std::invalid_argument("StochasticMatrix: row " + std::to_string(x) +
                                    " sums to " + std::to_string(sum));
      if (sum != 1.0) {
        for (std::size_t y = 0; y < n_out_; ++y) a_[x * n_out_ + y] /= sum;
      }
    }
  }

  static StochasticMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                    double row_tolerance = Distribution::kSumTolerance) {
    if (rows.empty()) throw std::invalid_argument("StochasticMatrix: no rows");
    std::vector<double> flat;
    flat.reserve(rows.size() * rows[0].size());
    for (const auto& r : rows) {
      if (r.size() != rows[0].size())
        throw std::invalid_argument("StochasticMatrix: ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return StochasticMatrix(rows.size(), rows[0].size(), std::move(flat),
                            row_tolerance);
  }

  static StochasticMatrix identity(std::size_t n) {
    std::vector<double> a(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] = 1.0;
    return StochasticMatrix(n, n, std::move(a));
  }

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  double operator()(std::size_t x, std::size_t y) const { return a_[x * n_out_ + y]; }
  std::span<const double> row(std::size_t x) const {
    return std::span<const double>(a_.data() + x * n_out_, n_out_);
  }
  std::span<const double> data() const { return a_; }

  Distribution row_distribution(std::size_t x) const {
    return Distribution(std::vector<double>(row(x).begin(), row(x).end()));
  }

  // Matrix product: (this * d)(z|x) = sum_y this(y|x) d(z|y).
  StochasticMatrix compose(const StochasticMatrix& d) const {
    if (d.n_in() != n_out_)
      throw std::invalid_argument("compose: dimension mismatch");
    std::vector<double> out(n_in_ * d.n_out(), 0.0);
    for (std::size_t x = 0; x < n_in_; ++x)
      for (std::size_t y = 0; y < n_out_; ++y) {
        double w = a_[x * n_out_ + y];
        if (w == 0.0) continue;
        for (std::size_t z = 0; z < d.n_out(); ++z)
          out[x * d.n_out() + z] += w * d(y, z);
      }
    return StochasticMatrix(n_in_, d.n_out(), std::move(out), 1e-9);
  }

  bool operator==(const StochasticMatrix& o) const {
    return n_in_ == o.n_in_ && n_out_ == o.n_out_ && a_ == o.a_;
  }

 private:
  std::size_t n_in_, n_out_;
  std::vector<double> a_;
};

// Occurrence counts N(a|s^n) of each symbol in a sequence.
struct SequenceType {
  std::vector<int> counts;
  int length = 0;

  Distribution empirical() const {
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      p[i] = static_cast<double>(counts[i]) / length;
    return Distribution(std::move(p));
  }
};

struct TypicalityParams {
  double delta;  // > 0
  int n;         // >= 1

  TypicalityParams(double delta_, int n_) : delta(delta_), n(n_) {
    if (!(delta > 0.0)) throw std::invalid_argument("TypicalityParams: delta <= 0");
    if (n < 1) throw std::invalid_argument("TypicalityParams: n < 1");
  }
};

inline double entropy(const Distribution& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * log2_safe(p[i]);
  return h;
}

inline Distribution output_distribution(const Distribution& p,
                                        const StochasticMatrix& w) {
  if (p.size() != w.n_in())
    throw std::invalid_argument("output_distribution: dimension mismatch");
  std::vector<double> q(w.n_out(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    for (std::size_t y = 0; y < w.n_out(); ++y) q[y] += p[x] * w(x, y);
  }
  return Distribution(std::move(q));
}

// H(W|p) = -sum_{x,y} p(x) W(y|x) log W(y|x).
inline double conditional_entropy(const Distribution& p,
                                  const StochasticMatrix& w) {
  if (p.size() != w.n_in())
    throw std::invalid_argument("conditional_entropy: dimension mismatch");
  double h = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    for (std::size_t y = 0; y < w.n_out(); ++y) {
      double v = w(x, y);
      if (v > 0.0) h -= p[x] * v * log2_safe(v);
    }
  }
  return h;
}

// I(p;W) = H(pW) - H(W|p).
inline double mutual_information(const Distribution& p,
                                 const StochasticMatrix& w) {
  return entropy(output_distribution(p, w)) - conditional_entropy(p, w);
}

inline double variation_distance(const Distribution& p1,
                                 const Distribution& p2) {
  if (p1.size() != p2.size())
    throw std::invalid_argument("variation_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) d += std::abs(p1[i] - p2[i]);
  return d;
}

// Entropy-continuity bound -tau log2(tau/|alphabet|) for
// tau = ||p1-p2||_V <= 1/2; dominates |H(p1)-H(p2)|.
inline double entropy_continuity_bound(const Distribution& p1,
                                       const Distribution& p2) {
  double tau = variation_distance(p1, p2);
  if (tau > 0.5)
    throw std::invalid_argument("entropy_continuity_bound: ||p1-p2||_V > 1/2");
  if (tau == 0.0) return 0.0;
  return -tau * log2_safe(tau / static_cast<double>(p1.size()));
}

inline SequenceType sequence_type(const Sequence& seq, std::size_t alphabet) {
  if (seq.empty()) throw std::invalid_argument("sequence_type: empty sequence");
  SequenceType t;
  t.counts.assign(alphabet, 0);
  t.length = static_cast<int>(seq.size());
  for (int s : seq) {
    if (s < 0 || static_cast<std::size_t>(s) >= alphabet)
      throw std::invalid_argument("sequence_type: symbol outside alphabet");
    ++t.counts[static_cast<std::size_t>(s)];
  }
  return t;
}

// |N(a|x^n)/n - p(a)| < delta for all a, and N(a|x^n) = 0 where p(a) = 0.
inline bool is_typical(const Sequence& seq, const Distribution& p,
                       const TypicalityParams& params) {
  if (static_cast<int>(seq.size()) != params.n)
    throw std::invalid_argument("is_typical: length mismatch");
  SequenceType t = sequence_type(seq, p.size());
  for (std::size_t a = 0; a < p.size(); ++a) {
    double freq = static_cast<double>(t.counts[a]) / params.n;
    if (p[a] == 0.0) {
      if (t.counts[a] != 0) return false;
    } else if (std::abs(freq - p[a]) >= params.delta) {
      return false;
    }
  }
  return true;
}

// |N(a,b)/n - W(b|a) N(a)/n| < delta for all (a,b), with N(a,b) = 0 where
// W(b|a) = 0.
inline bool is_cond_typical(const Sequence& y_seq, const Sequence& x_seq,
                            const StochasticMatrix& w,
                            const TypicalityParams& params) {
  if (static_cast<int>(x_seq.size()) != params.n ||
      static_cast<int>(y_seq.size()) != params.n)
    throw std::invalid_argument("is_cond_typical: length mismatch");
  std::vector<int> joint(w.n_in() * w.n_out(), 0);
  std::vector<int> nx(w.n_in(), 0);
  for (int i = 0; i < params.n; ++i) {
    int a = x_seq[static_cast<std::size_t>(i)];
    int b = y_seq[static_cast<std::size_t>(i)];
    if (a < 0 || static_cast<std::size_t>(a) >= w.n_in() || b < 0 ||
        static_cast<std::size_t>(b) >= w.n_out())
      throw std::invalid_argument("is_cond_typical: symbol outside alphabet");
    ++joint[static_cast<std::size_t>(a) * w.n_out() + static_cast<std::size_t>(b)];
    ++nx[static_cast<std::size_t>(a)];
  }
  for (std::size_t a = 0; a < w.n_in(); ++a)
    for (std::size_t b = 0; b < w.n_out(); ++b) {
      int nab = joint[a * w.n_out() + b];
      if (w(a, b) == 0.0) {
        if (nab != 0) return false;
      } else {
        double lhs = static_cast<double>(nab) / params.n;
        double rhs = w(a, b) * static_cast<double>(nx[a]) / params.n;
        if (std::abs(lhs - rhs) >= params.delta) return false;
      }
    }
  return true;
}

}  // namespace avwc
