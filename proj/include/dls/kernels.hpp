#pragma once

// Data-parallel batch kernels. Every kernel has a serial reference in
// dls::kernels::serial and an OpenMP version in dls::kernels::parallel; the two
// return identical results (reductions break ties by lowest index).

#include <Eigen/Core>
#include <functional>
#include <span>
#include <vector>

#include "dls/frames.hpp"
#include "dls/limit_surface.hpp"

namespace dls::kernels {

struct MarginRow {
  double wrench = 0.0;  // wrench-space margin at w_a = twist_to_wrench(A, v)
  double twist = 0.0;   // full twist-space margin
};

struct GridMin {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double value = 0.0;
  double spacing = 0.0;  // largest cell size of the final grid
};

using GridObjective = std::function<double(const Eigen::Vector3d&)>;

namespace serial {

std::vector<Wrench> twist_to_wrench_batch(const EllipsoidMatrix& A,
                                          std::span<const Twist> twists);

/// max_i (-w_i^T v)
double max_dissipation(std::span<const Wrench> candidates, const Twist& v);

std::vector<MarginRow> slip_margins_batch(std::span<const Twist> twists,
                                          const EllipsoidMatrix& A,
                                          const EllipsoidMatrix& B,
                                          const GravityLoad& gl);

/// Exhaustive n x n x n grid over the box [lo, hi].
GridMin grid_argmin(const GridObjective& f, const Eigen::Vector3d& lo,
                    const Eigen::Vector3d& hi, int n);

}  // namespace serial

namespace parallel {

std::vector<Wrench> twist_to_wrench_batch(const EllipsoidMatrix& A,
                                          std::span<const Twist> twists);
double max_dissipation(std::span<const Wrench> candidates, const Twist& v);
std::vector<MarginRow> slip_margins_batch(std::span<const Twist> twists,
                                          const EllipsoidMatrix& A,
                                          const EllipsoidMatrix& B,
                                          const GravityLoad& gl);
GridMin grid_argmin(const GridObjective& f, const Eigen::Vector3d& lo,
                    const Eigen::Vector3d& hi, int n);

}  // namespace parallel

/// Grid search refined `refinements` times: each pass re-centres a box of
/// +-2 cells around the current best point.
GridMin refined_grid_argmin(const GridObjective& f, Eigen::Vector3d lo,
                            Eigen::Vector3d hi, int n, int refinements);

int max_threads();

}  // namespace dls::kernels
