#pragma once

// Dense coordinate tensors at a point. Slots are ordered as written; each slot
// carries its own variance, e.g. the Christoffel symbols are (up, down, down).

#include "accr/jet.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace accr {

enum class Slot : char { Up, Down };

template <class T>
class Tensor {
public:
  Tensor() = default;

  Tensor(int dim, std::vector<Slot> slots, T fill = T{}) : dim_(dim), slots_(std::move(slots)) {
    std::size_t n = 1;
    for (std::size_t i = 0; i < slots_.size(); ++i) n *= static_cast<std::size_t>(dim_);
    data_.assign(n, fill);
  }

  static Tensor covector(int dim, T fill = T{}) { return Tensor(dim, {Slot::Down}, fill); }
  static Tensor vector(int dim, T fill = T{}) { return Tensor(dim, {Slot::Up}, fill); }
  static Tensor bilinear(int dim, T fill = T{}) { return Tensor(dim, {Slot::Down, Slot::Down}, fill); }
  static Tensor endomorphism(int dim, T fill = T{}) { return Tensor(dim, {Slot::Up, Slot::Down}, fill); }
  static Tensor trilinear(int dim, T fill = T{}) { return Tensor(dim, {Slot::Down, Slot::Down, Slot::Down}, fill); }

  int dim() const { return dim_; }
  int rank() const { return static_cast<int>(slots_.size()); }
  const std::vector<Slot>& slots() const { return slots_; }
  int contravariant() const { return static_cast<int>(std::count(slots_.begin(), slots_.end(), Slot::Up)); }
  int covariant() const { return rank() - contravariant(); }
  std::size_t size() const { return data_.size(); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <class... I>
  T& operator()(I... idx) {
    return data_[offset({static_cast<int>(idx)...})];
  }
  template <class... I>
  const T& operator()(I... idx) const {
    return data_[offset({static_cast<int>(idx)...})];
  }

  std::size_t offset(std::initializer_list<int> idx) const {
    if (idx.size() != slots_.size()) throw std::out_of_range("tensor: wrong number of indices");
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return off;
  }

  /// Multi-index of a flat position.
  std::vector<int> unflatten(std::size_t flat) const {
    std::vector<int> idx(slots_.size());
    for (std::size_t s = slots_.size(); s-- > 0;) {
      idx[s] = static_cast<int>(flat % static_cast<std::size_t>(dim_));
      flat /= static_cast<std::size_t>(dim_);
    }
    return idx;
  }

  std::size_t flatten(const std::vector<int>& idx) const {
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return off;
  }

  Tensor& operator+=(const Tensor& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

private:
  void check(const Tensor& o) const {
    if (o.dim_ != dim_ || o.slots_ != slots_) throw std::invalid_argument("tensor: shape mismatch");
  }

  int dim_ = 0;
  std::vector<Slot> slots_;
  std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using JetTensor = Tensor<Jet>;

inline RealTensor values(const JetTensor& t) {
  RealTensor r(t.dim(), t.slots(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) r[i] = t[i].value();
  return r;
}

/// Largest absolute component.
inline double max_abs(const RealTensor& t) {
  double m = 0.0;
  for (double v : t.data()) m = std::max(m, std::fabs(v));
  return m;
}

/// Euclidean norm of the component array.
inline double euclidean_norm(const RealTensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return std::sqrt(s);
}

/// sqrt|T_ijk T^ijk| with all indices raised by `ginv`; only for all-covariant tensors.
inline double metric_norm(const RealTensor& t, const RealTensor& ginv) {
  const int d = t.dim();
  RealTensor raised = t;
  for (int slot = 0; slot < t.rank(); ++slot) {
    RealTensor next(d, t.slots(), 0.0);
    for (std::size_t f = 0; f < next.size(); ++f) {
      auto idx = next.unflatten(f);
      const int a = idx[static_cast<std::size_t>(slot)];
      double s = 0.0;
      for (int b = 0; b < d; ++b) {
        idx[static_cast<std::size_t>(slot)] = b;
        s += ginv(a, b) * raised[raised.flatten(idx)];
      }
      next[f] = s;
    }
    raised = std::move(next);
  }
  double s = 0.0;
  for (std::size_t f = 0; f < t.size(); ++f) s += t[f] * raised[f];
  return std::sqrt(std::fabs(s));
}

// Small dense helpers on 2-slot tensors (matrices) and 1-slot tensors.

/// (A B)_ij = A_ik B^k_j regardless of slot labels; result slots are (A.first, B.second).
inline RealTensor matmul(const RealTensor& a, const RealTensor& b) {
  const int d = a.dim();
  RealTensor r(d, {a.slots()[0], b.slots()[1]}, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

/// Covector composed with an endomorphism: (w o A)_j = w_a A^a_j.
inline RealTensor compose(const RealTensor& w, const RealTensor& endo) {
  const int d = w.dim();
  RealTensor r = RealTensor::covector(d);
  for (int j = 0; j < d; ++j) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += w(a) * endo(a, j);
    r(j) = s;
  }
  return r;
}

/// Endomorphism applied to a vector: (A v)^a = A^a_j v^j.
inline RealTensor apply(const RealTensor& endo, const RealTensor& v) {
  const int d = v.dim();
  RealTensor r = RealTensor::vector(d);
  for (int a = 0; a < d; ++a) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += endo(a, j) * v(j);
    r(a) = s;
  }
  return r;
}

inline double pairing(const RealTensor& w, const RealTensor& v) {
  double s = 0.0;
  for (int i = 0; i < w.dim(); ++i) s += w(i) * v(i);
  return s;
}

inline RealTensor outer(const RealTensor& a, const RealTensor& b) {
  const int d = a.dim();
  RealTensor r(d, {a.slots()[0], b.slots()[0]}, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r(i, j) = a(i) * b(j);
  return r;
}

/// Contracts an upper slot with a lower slot.
inline RealTensor contract(const RealTensor& t, int a, int b) {
  const auto& sl = t.slots();
  if (a == b || a < 0 || b < 0 || a >= t.rank() || b >= t.rank()) throw std::out_of_range("contract: bad slot pair");
  if (sl[static_cast<std::size_t>(a)] == sl[static_cast<std::size_t>(b)]) throw std::invalid_argument("contract: slots must have opposite variance");
  std::vector<Slot> rest;
  for (int s = 0; s < t.rank(); ++s)
    if (s != a && s != b) rest.push_back(sl[static_cast<std::size_t>(s)]);
  RealTensor r(t.dim(), rest, 0.0);
  for (std::size_t f = 0; f < t.size(); ++f) {
    const auto idx = t.unflatten(f);
    if (idx[static_cast<std::size_t>(a)] != idx[static_cast<std::size_t>(b)]) continue;
    std::vector<int> keep;
    for (int s = 0; s < t.rank(); ++s)
      if (s != a && s != b) keep.push_back(idx[static_cast<std::size_t>(s)]);
    r[r.flatten(keep)] += t[f];
  }
  return r;
}

inline RealTensor identity_endomorphism(int d) {
  RealTensor r = RealTensor::endomorphism(d);
  for (int i = 0; i < d; ++i) r(i, i) = 1.0;
  return r;
}

}  // namespace accr
