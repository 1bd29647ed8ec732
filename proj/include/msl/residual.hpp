#pragma once

// Discrete residuals of the minimal surface system on a GridMap, in the
// non-divergence form F_{alpha i, beta j}(Du) u^beta_{ij} and the
// conservative form div(DF(Du)).

#include <cstddef>
#include <span>

#include "msl/grid.hpp"

namespace msl {

// Second-order central difference slope matrix at a node; requires both axis
// neighbours in the mask (throws BoundaryProximity otherwise).
Gradient central_gradient(const GridMap& u, std::size_t idx);

// Throws BoundaryProximity unless the node is interior.
Vec residual_nondivergence(const GridMap& u, std::size_t idx);
Vec residual_divergence(const GridMap& u, std::size_t idx);

// Same as residual_nondivergence without bounds checks; writes m values.
void residual_nondivergence_unchecked(const GridMap& u, std::size_t idx, std::span<double> out);
// Non-divergence residuals at the given nodes into R (m per node); returns
// the sup of their norms.
double residual_sweep(const GridMap& u, std::span<const std::size_t> nodes, std::span<double> R);

// Largest eigenvalue of F_{alpha i, beta j}(Du) at an interior node.
double coefficient_max_eigenvalue(const GridMap& u, std::size_t idx);

enum class ResidualForm { NonDivergence, Divergence };

// Sup over the given nodes of the Euclidean norm of the residual.
double sup_residual(const GridMap& u, std::span<const std::size_t> nodes,
                    ResidualForm form = ResidualForm::NonDivergence);

// Discrete area sum over nodes whose forward neighbours are in the mask:
// sum F(D^+ u) h^n.
double discrete_area(const GridMap& u);

}  // namespace msl
