#include "msl/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "msl/errors.hpp"

namespace msl {

namespace {

constexpr double kMaskSlack = 1e-12;

}  // namespace

GridMap::GridMap(Dims dims, int points_per_axis) : dims_(dims), N_(points_per_axis) {
  dims_.validate();
  if (N_ < 5) throw InvalidArgument("GridMap: need at least 5 points per axis");
  h_ = 2.0 / (N_ - 1);
  size_ = 1;
  for (int i = 0; i < dims_.n; ++i) size_ *= static_cast<std::size_t>(N_);
  strides_.assign(dims_.n, 1);
  for (int i = dims_.n - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * N_;
  values_.assign(size_ * dims_.m, 0.0);
  unit_ = region(1.0);
}

int GridMap::axis_index(std::size_t idx, int axis) const {
  return static_cast<int>((idx / static_cast<std::size_t>(strides_[axis])) % static_cast<std::size_t>(N_));
}

void GridMap::coords(std::size_t idx, std::span<double> x) const {
  for (int i = 0; i < dims_.n; ++i) x[i] = -1.0 + axis_index(idx, i) * h_;
}

Vec GridMap::coords(std::size_t idx) const {
  Vec x(dims_.n);
  coords(idx, x);
  return x;
}

Region GridMap::region(double radius) const {
  const int n = dims_.n;
  Region r;
  r.radius = radius;
  r.kind.assign(size_, NodeKind::Outside);
  const double lim = radius * radius * (1.0 + kMaskSlack) + kMaskSlack;

  auto inside = [&](std::span<const int> mi) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (mi[i] < 0 || mi[i] >= N_) return false;
      const double x = -1.0 + mi[i] * h_;
      s += x * x;
    }
    return s <= lim;
  };

  std::array<int, 4> mi{};
  for (std::size_t idx = 0; idx < size_; ++idx) {
    for (int i = 0; i < n; ++i) mi[i] = axis_index(idx, i);
    if (!inside(std::span<const int>(mi.data(), n))) continue;
    bool full = true;
    for (int i = 0; i < n && full; ++i) {
      for (int j = i; j < n && full; ++j) {
        for (int a = -1; a <= 1 && full; ++a) {
          for (int b = -1; b <= 1 && full; ++b) {
            std::array<int, 4> q = mi;
            q[i] += a;
            q[j] += b;
            full = inside(std::span<const int>(q.data(), n));
          }
        }
      }
    }
    r.kind[idx] = full ? NodeKind::Interior : NodeKind::Boundary;
    (full ? r.interior : r.boundary).push_back(idx);
    r.members.push_back(idx);
  }
  return r;
}

void GridMap::fill(const std::function<void(std::span<const double>, std::span<double>)>& f) {
  Vec x(dims_.n);
  for (std::size_t idx : unit_.members) {
    coords(idx, x);
    f(x, at(idx));
  }
}

void GridMap::fill_boundary(const std::function<void(std::span<const double>, std::span<double>)>& f) {
  Vec x(dims_.n);
  for (std::size_t idx : unit_.boundary) {
    coords(idx, x);
    f(x, at(idx));
  }
}

std::vector<std::size_t> GridMap::nodes_in_ball(double r) const {
  std::vector<std::size_t> out;
  const double lim = r * r * (1.0 + kMaskSlack) + kMaskSlack;
  Vec x(dims_.n);
  for (std::size_t idx : unit_.members) {
    coords(idx, x);
    if (dot(x, x) <= lim) out.push_back(idx);
  }
  return out;
}

double sup_distance(const GridMap& u, const GridMap& v) {
  if (!(u.dims() == v.dims()) || u.N() != v.N()) throw InvalidArgument("sup_distance: grid mismatch");
  double s = 0.0;
  for (std::size_t idx : u.unit_region().members) {
    double d = 0.0;
    for (int a = 0; a < u.dims().m; ++a) {
      const double e = u.value(idx, a) - v.value(idx, a);
      d += e * e;
    }
    s = std::max(s, std::sqrt(d));
  }
  return s;
}

}  // namespace msl
