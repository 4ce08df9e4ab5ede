#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A jet in m seed variables truncated at total order K stores one coefficient
// per multi-index of degree <= K. Coefficients are Taylor-normalized
// (partial derivative divided by the multi-index factorial). Multi-indices are
// enumerated in graded lexicographic order, so the layout of order K' < K is a
// prefix of the layout of order K; truncation is a resize.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace accr {

inline constexpr int kMaxJetOrder = 3;
inline constexpr int kMaxJetVars = 16;

/// Thrown when an elementary function is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

struct JetSpace {
  int vars = 0;
  int order = 0;
  friend bool operator==(const JetSpace&, const JetSpace&) = default;
};

using MultiIndex = std::vector<int>;

namespace detail {

inline std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

// Layout of all multi-indices of degree <= kMaxJetOrder in m variables.
class JetLayout {
public:
  explicit JetLayout(int m) : m_(m) {
    // graded lex: degree 0, 1, 2, 3; within a degree, lexicographically descending
    for (int deg = 0; deg <= kMaxJetOrder; ++deg) {
      MultiIndex cur(static_cast<std::size_t>(m), 0);
      enumerate(deg, 0, cur);
      prefix_[static_cast<std::size_t>(deg)] = indices_.size();
    }
    for (std::size_t i = 0; i < indices_.size(); ++i) lookup_.emplace(encode(indices_[i]), static_cast<int>(i));

    // product terms sorted by degree of the result
    std::vector<std::tuple<int, int, int, int>> terms;  // deg, a, b, c
    for (std::size_t a = 0; a < indices_.size(); ++a) {
      for (std::size_t b = 0; b < indices_.size(); ++b) {
        const int deg = degree_[a] + degree_[b];
        if (deg > kMaxJetOrder) continue;
        MultiIndex sum(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) sum[static_cast<std::size_t>(k)] = indices_[a][static_cast<std::size_t>(k)] + indices_[b][static_cast<std::size_t>(k)];
        terms.emplace_back(deg, static_cast<int>(a), static_cast<int>(b), find(sum));
      }
    }
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto& x, const auto& y) { return std::get<0>(x) < std::get<0>(y); });
    for (const auto& [deg, a, b, c] : terms) mul_terms_.push_back({a, b, c});
    for (int deg = 0; deg <= kMaxJetOrder; ++deg) {
      std::size_t cnt = 0;
      for (const auto& t : terms)
        if (std::get<0>(t) <= deg) ++cnt;
      mul_prefix_[static_cast<std::size_t>(deg)] = cnt;
    }

    // derivative maps: coefficient of (alpha + e_i) times (alpha_i + 1) lands on alpha
    deriv_.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      for (std::size_t a = 0; a < indices_.size(); ++a) {
        if (degree_[a] >= kMaxJetOrder) continue;
        MultiIndex up = indices_[a];
        up[static_cast<std::size_t>(i)] += 1;
        deriv_[static_cast<std::size_t>(i)].push_back(
            {static_cast<int>(a), find(up), static_cast<double>(indices_[a][static_cast<std::size_t>(i)] + 1)});
      }
    }
  }

  int vars() const { return m_; }
  std::size_t size(int order) const { return prefix_[static_cast<std::size_t>(order)]; }
  const MultiIndex& index(std::size_t pos) const { return indices_[pos]; }
  int degree(std::size_t pos) const { return degree_[pos]; }

  int find(const MultiIndex& alpha) const {
    auto it = lookup_.find(encode(alpha));
    return it == lookup_.end() ? -1 : it->second;
  }

  struct MulTerm {
    int a, b, c;
  };
  std::span<const MulTerm> mul_terms(int order) const {
    return {mul_terms_.data(), mul_prefix_[static_cast<std::size_t>(order)]};
  }

  struct DerivTerm {
    int dst, src;
    double factor;
  };
  const std::vector<DerivTerm>& deriv_terms(int i) const { return deriv_[static_cast<std::size_t>(i)]; }

private:
  void enumerate(int remaining, int pos, MultiIndex& cur) {
    if (pos == m_ - 1 || m_ == 0) {
      if (m_ > 0) cur[static_cast<std::size_t>(pos)] = remaining;
      if (m_ == 0 && remaining != 0) return;
      indices_.push_back(cur);
      int deg = 0;
      for (int v : cur) deg += v;
      degree_.push_back(deg);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      cur[static_cast<std::size_t>(pos)] = k;
      enumerate(remaining - k, pos + 1, cur);
    }
    cur[static_cast<std::size_t>(pos)] = 0;
  }

  static std::uint64_t encode(const MultiIndex& alpha) {
    std::uint64_t code = 0;
    for (int v : alpha) {
      if (v < 0 || v > kMaxJetOrder) return ~std::uint64_t{0};
      code = code * (kMaxJetOrder + 1) + static_cast<std::uint64_t>(v);
    }
    return code;
  }

  int m_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degree_;
  std::array<std::size_t, kMaxJetOrder + 1> prefix_{};
  std::map<std::uint64_t, int> lookup_;
  std::vector<MulTerm> mul_terms_;
  std::array<std::size_t, kMaxJetOrder + 1> mul_prefix_{};
  std::vector<std::vector<DerivTerm>> deriv_;
};

inline const JetLayout& layout_for(int m) {
  static std::mutex mu;
  static std::array<std::unique_ptr<JetLayout>, kMaxJetVars + 1> cache;
  if (m < 0 || m > kMaxJetVars) throw std::out_of_range("jet: seed dimension out of range");
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[static_cast<std::size_t>(m)];
  if (!slot) slot = std::make_unique<JetLayout>(m);
  return *slot;
}

}  // namespace detail

/// Truncated Taylor expansion in `vars` seed variables up to total order `order`.
class Jet {
public:
  Jet() : Jet(JetSpace{0, 0}, 0.0) {}

  Jet(JetSpace space, double value)
      : layout_(&detail::layout_for(space.vars)), order_(space.order) {
    if (order_ < 0 || order_ > kMaxJetOrder) throw std::out_of_range("jet: order must be in [0, 3]");
    c_.assign(layout_->size(order_), 0.0);
    c_[0] = value;
  }

  /// Seed variable `i`: value `value`, unit first derivative in direction i.
  static Jet variable(int i, double value, JetSpace space) {
    if (i < 0 || i >= space.vars) throw std::out_of_range("jet: seed index out of range");
    Jet j(space, value);
    if (space.order >= 1) j.c_[1 + static_cast<std::size_t>(i)] = 1.0;
    return j;
  }

  static Jet lift_var(int i, double value, int vars, int order) { return variable(i, value, {vars, order}); }

  JetSpace space() const { return {layout_->vars(), order_}; }
  int vars() const { return layout_->vars(); }
  int order() const { return order_; }
  std::size_t size() const { return c_.size(); }

  double value() const { return c_[0]; }
  std::span<const double> coefficients() const { return c_; }
  double coefficient(std::size_t pos) const { return c_[pos]; }
  double& coefficient(std::size_t pos) { return c_[pos]; }
  const MultiIndex& multi_index(std::size_t pos) const { return layout_->index(pos); }

  /// Taylor coefficient of a multi-index, 0 if beyond the truncation order.
  double taylor(const MultiIndex& alpha) const {
    const int pos = layout_->find(alpha);
    if (pos < 0 || static_cast<std::size_t>(pos) >= c_.size()) return 0.0;
    return c_[static_cast<std::size_t>(pos)];
  }

  /// Raw partial derivative d^alpha f.
  double partial(const MultiIndex& alpha) const {
    double fact = 1.0;
    for (int a : alpha)
      for (int k = 2; k <= a; ++k) fact *= k;
    return taylor(alpha) * fact;
  }

  double d(int i) const {
    MultiIndex a(static_cast<std::size_t>(vars()), 0);
    a[static_cast<std::size_t>(i)] = 1;
    return partial(a);
  }

  double d(int i, int j) const {
    MultiIndex a(static_cast<std::size_t>(vars()), 0);
    a[static_cast<std::size_t>(i)] += 1;
    a[static_cast<std::size_t>(j)] += 1;
    return partial(a);
  }

  /// Partial derivative in direction i as a jet of order K-1.
  Jet derivative(int i) const {
    if (order_ < 1) throw std::logic_error("jet: cannot differentiate an order-0 jet");
    if (i < 0 || i >= vars()) throw std::out_of_range("jet: derivative direction out of range");
    Jet r(JetSpace{vars(), order_ - 1}, 0.0);
    for (const auto& t : layout_->deriv_terms(i)) {
      if (static_cast<std::size_t>(t.dst) >= r.c_.size()) continue;
      r.c_[static_cast<std::size_t>(t.dst)] = t.factor * c_[static_cast<std::size_t>(t.src)];
    }
    return r;
  }

  Jet truncated(int order) const {
    if (order > order_) throw std::logic_error("jet: cannot raise truncation order");
    Jet r = *this;
    r.order_ = order;
    r.c_.resize(layout_->size(order));
    return r;
  }

  /// Compose a univariate Taylor series sum_k series[k] * (x - x0)^k with this jet.
  Jet compose(std::span<const double> series) const {
    Jet delta = *this;
    delta.c_[0] = 0.0;
    const int top = std::min<int>(order_, static_cast<int>(series.size()) - 1);
    Jet r(space(), top >= 0 ? series[static_cast<std::size_t>(top)] : 0.0);
    for (int k = top - 1; k >= 0; --k) {
      r = r * delta;
      r.c_[0] += series[static_cast<std::size_t>(k)];
    }
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    check_same(o);
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  Jet& operator/=(const Jet& o) { return *this = *this / o; }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (auto& v : c_) v /= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    a.check_same(b);
    Jet r(a.space(), 0.0);
    for (const auto& t : a.layout_->mul_terms(a.order_))
      r.c_[static_cast<std::size_t>(t.c)] += a.c_[static_cast<std::size_t>(t.a)] * b.c_[static_cast<std::size_t>(t.b)];
    return r;
  }

  friend Jet reciprocal(const Jet& a) {
    const double x = a.value();
    if (x == 0.0) throw DomainError("division by zero");
    const double r = 1.0 / x;
    const std::array<double, 4> s{r, -r * r, r * r * r, -r * r * r * r};
    return a.compose(s);
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }

private:
  void check_same(const Jet& o) const {
    if (o.layout_ != layout_ || o.order_ != order_) throw std::logic_error("jet: mismatched seed dimension or order");
  }

  const detail::JetLayout* layout_;
  int order_;
  std::vector<double> c_;
};

// Elementary functions. Each builds the univariate Taylor series f(x0) .. f'''(x0)/3!
// and composes it with the jet.

namespace detail {
inline Jet apply(const Jet& x, double f0, double f1, double f2, double f3) {
  const std::array<double, 4> s{f0, f1, f2 / 2.0, f3 / 6.0};
  return x.compose(s);
}
}  // namespace detail

inline Jet sin(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return detail::apply(x, s, c, -s, -c);
}
inline Jet cos(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return detail::apply(x, c, -s, -c, s);
}
inline Jet tan(const Jet& x) {
  if (std::cos(x.value()) == 0.0) throw DomainError("tan: pole");
  const double t = std::tan(x.value()), p = 1.0 + t * t;
  return detail::apply(x, t, p, 2.0 * t * p, p * (2.0 + 6.0 * t * t));
}
inline Jet sinh(const Jet& x) {
  const double s = std::sinh(x.value()), c = std::cosh(x.value());
  return detail::apply(x, s, c, s, c);
}
inline Jet cosh(const Jet& x) {
  const double s = std::sinh(x.value()), c = std::cosh(x.value());
  return detail::apply(x, c, s, c, s);
}
inline Jet tanh(const Jet& x) {
  const double t = std::tanh(x.value()), p = 1.0 - t * t;
  return detail::apply(x, t, p, -2.0 * t * p, p * (6.0 * t * t - 2.0));
}
inline Jet exp(const Jet& x) {
  const double e = std::exp(x.value());
  return detail::apply(x, e, e, e, e);
}
inline Jet log(const Jet& x) {
  const double v = x.value();
  if (!(v > 0.0)) throw DomainError("ln: nonpositive argument");
  const double r = 1.0 / v;
  return detail::apply(x, std::log(v), r, -r * r, 2.0 * r * r * r);
}
inline Jet sqrt(const Jet& x) {
  const double v = x.value();
  if (!(v > 0.0)) throw DomainError("sqrt: nonpositive argument");
  const double s = std::sqrt(v);
  return detail::apply(x, s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v));
}
inline Jet atan(const Jet& x) {
  const double v = x.value(), p = 1.0 / (1.0 + v * v);
  return detail::apply(x, std::atan(v), p, -2.0 * v * p * p, (6.0 * v * v - 2.0) * p * p * p);
}
inline Jet asin(const Jet& x) {
  const double v = x.value();
  if (!(v > -1.0 && v < 1.0)) throw DomainError("arcsin: argument outside (-1, 1)");
  const double q = 1.0 - v * v, r = 1.0 / std::sqrt(q);
  return detail::apply(x, std::asin(v), r, v * r / q, (1.0 + 2.0 * v * v) * r / (q * q));
}

/// Integer power by repeated multiplication; any base for p >= 0.
inline Jet pow(const Jet& x, int p) {
  if (p < 0) return reciprocal(pow(x, -p));
  Jet result(x.space(), 1.0), base = x;
  for (unsigned e = static_cast<unsigned>(p); e != 0; e >>= 1) {
    if (e & 1u) result = result * base;
    if (e > 1) base = base * base;
  }
  return result;
}

/// Real power exp(p ln x), requires x > 0.
inline Jet pow(const Jet& x, double p) {
  const double v = x.value();
  if (!(v > 0.0)) throw DomainError("pow: non-integer exponent requires a positive base");
  const double f0 = std::pow(v, p);
  return detail::apply(x, f0, p * f0 / v, p * (p - 1.0) * f0 / (v * v), p * (p - 1.0) * (p - 2.0) * f0 / (v * v * v));
}

}  // namespace accr
