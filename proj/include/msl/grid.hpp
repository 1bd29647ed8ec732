#pragma once

// Lattice maps u : B_1^n -> R^m sampled on the uniform grid over [-1,1]^n,
// masked to the closed unit ball.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "msl/geometry.hpp"

namespace msl {

enum class NodeKind : std::uint8_t { Outside = 0, Boundary = 1, Interior = 2 };

// Classification of lattice nodes against a ball |x| <= radius. A node is
// interior when every neighbour p + a e_i + b e_j (a, b in {-1,0,1}) lies in
// the ball, i.e. the full central-difference stencil for Du and D^2u exists.
struct Region {
  double radius = 1.0;
  std::vector<NodeKind> kind;
  std::vector<std::size_t> interior;
  std::vector<std::size_t> boundary;
  std::vector<std::size_t> members;  // interior and boundary, lattice order
};

class GridMap {
 public:
  static constexpr int kBallMaskId = 0;

  GridMap() = default;
  GridMap(Dims dims, int points_per_axis);

  const Dims& dims() const { return dims_; }
  int N() const { return N_; }
  double h() const { return h_; }
  std::size_t size() const { return size_; }
  std::ptrdiff_t stride(int axis) const { return strides_[axis]; }

  // Default lattice size for a domain dimension: 41 for n <= 3, 21 for n = 4.
  static int default_points(int n) { return n <= 3 ? 41 : 21; }

  void coords(std::size_t idx, std::span<double> x) const;
  Vec coords(std::size_t idx) const;
  int axis_index(std::size_t idx, int axis) const;

  NodeKind kind(std::size_t idx) const { return unit_.kind[idx]; }
  bool in_mask(std::size_t idx) const { return unit_.kind[idx] != NodeKind::Outside; }
  const Region& unit_region() const { return unit_; }
  // Same classification rule against |x| <= radius.
  Region region(double radius) const;

  std::span<double> at(std::size_t idx) { return {values_.data() + idx * dims_.m, static_cast<std::size_t>(dims_.m)}; }
  std::span<const double> at(std::size_t idx) const {
    return {values_.data() + idx * dims_.m, static_cast<std::size_t>(dims_.m)};
  }
  double& value(std::size_t idx, int alpha) { return values_[idx * dims_.m + alpha]; }
  double value(std::size_t idx, int alpha) const { return values_[idx * dims_.m + alpha]; }

  std::span<double> raw() { return values_; }
  std::span<const double> raw() const { return values_; }

  // Evaluates f at every node of the mask.
  void fill(const std::function<void(std::span<const double> x, std::span<double> out)>& f);
  void fill_boundary(const std::function<void(std::span<const double> x, std::span<double> out)>& f);

  // Nodes within |x| <= r of the mask, in lattice order.
  std::vector<std::size_t> nodes_in_ball(double r) const;

 private:
  Dims dims_{};
  int N_ = 0;
  double h_ = 0.0;
  std::size_t size_ = 0;
  std::vector<std::ptrdiff_t> strides_;
  Region unit_;
  std::vector<double> values_;
};

// Sup over mask nodes of |u(x) - v(x)| (Euclidean norm in R^m). Both maps
// must share dims and N.
double sup_distance(const GridMap& u, const GridMap& v);

}  // namespace msl
