#include "dls/kernels.hpp"

#include <omp.h>

#include <cstdint>
#include <limits>
#include <stdexcept>

namespace dls::kernels {
namespace {

MarginRow margins_for(const Twist& v, const EllipsoidMatrix& A,
                      const EllipsoidMatrix& B, const GravityLoad& gl) {
  MarginRow row;
  row.wrench = slip_free_wrench_margin(twist_to_wrench(A, v), A, B, gl).value;
  row.twist = slip_free_twist_margin(v, A, B, gl).value;
  return row;
}

Eigen::Vector3d grid_point(const Eigen::Vector3d& lo, const Eigen::Vector3d& step,
                           std::int64_t index, int n) {
  const std::int64_t i = index / (std::int64_t{n} * n);
  const std::int64_t j = (index / n) % n;
  const std::int64_t k = index % n;
  return {lo.x() + step.x() * static_cast<double>(i),
          lo.y() + step.y() * static_cast<double>(j),
          lo.z() + step.z() * static_cast<double>(k)};
}

Eigen::Vector3d grid_step(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int n) {
  if (n < 2) throw std::invalid_argument("grid_argmin: need at least 2 points per axis");
  return (hi - lo) / static_cast<double>(n - 1);
}

}  // namespace

namespace serial {

std::vector<Wrench> twist_to_wrench_batch(const EllipsoidMatrix& A,
                                          std::span<const Twist> twists) {
  std::vector<Wrench> out(twists.size());
  for (std::size_t i = 0; i < twists.size(); ++i) out[i] = twist_to_wrench(A, twists[i]);
  return out;
}

double max_dissipation(std::span<const Wrench> candidates, const Twist& v) {
  const Eigen::Vector3d x = v.vec();
  double best = -std::numeric_limits<double>::infinity();
  for (const Wrench& w : candidates) best = std::max(best, -w.vec().dot(x));
  return best;
}

std::vector<MarginRow> slip_margins_batch(std::span<const Twist> twists,
                                          const EllipsoidMatrix& A,
                                          const EllipsoidMatrix& B,
                                          const GravityLoad& gl) {
  std::vector<MarginRow> out(twists.size());
  for (std::size_t i = 0; i < twists.size(); ++i) out[i] = margins_for(twists[i], A, B, gl);
  return out;
}

GridMin grid_argmin(const GridObjective& f, const Eigen::Vector3d& lo,
                    const Eigen::Vector3d& hi, int n) {
  const Eigen::Vector3d step = grid_step(lo, hi, n);
  const std::int64_t total = std::int64_t{n} * n * n;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_index = 0;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const double value = f(grid_point(lo, step, idx, n));
    if (value < best) {
      best = value;
      best_index = idx;
    }
  }
  return {grid_point(lo, step, best_index, n), best, step.maxCoeff()};
}

}  // namespace serial

namespace parallel {

std::vector<Wrench> twist_to_wrench_batch(const EllipsoidMatrix& A,
                                          std::span<const Twist> twists) {
  std::vector<Wrench> out(twists.size());
  const auto count = static_cast<std::int64_t>(twists.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) out[i] = twist_to_wrench(A, twists[i]);
  return out;
}

double max_dissipation(std::span<const Wrench> candidates, const Twist& v) {
  const Eigen::Vector3d x = v.vec();
  const auto count = static_cast<std::int64_t>(candidates.size());
  double best = -std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : best)
  for (std::int64_t i = 0; i < count; ++i) {
    best = std::max(best, -candidates[i].vec().dot(x));
  }
  return best;
}

std::vector<MarginRow> slip_margins_batch(std::span<const Twist> twists,
                                          const EllipsoidMatrix& A,
                                          const EllipsoidMatrix& B,
                                          const GravityLoad& gl) {
  std::vector<MarginRow> out(twists.size());
  const auto count = static_cast<std::int64_t>(twists.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) out[i] = margins_for(twists[i], A, B, gl);
  return out;
}

GridMin grid_argmin(const GridObjective& f, const Eigen::Vector3d& lo,
                    const Eigen::Vector3d& hi, int n) {
  const Eigen::Vector3d step = grid_step(lo, hi, n);
  const std::int64_t total = std::int64_t{n} * n * n;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t best_index = 0;
#pragma omp parallel
  {
    double local_best = std::numeric_limits<double>::infinity();
    std::int64_t local_index = 0;
#pragma omp for schedule(static) nowait
    for (std::int64_t idx = 0; idx < total; ++idx) {
      const double value = f(grid_point(lo, step, idx, n));
      if (value < local_best) {
        local_best = value;
        local_index = idx;
      }
    }
#pragma omp critical(dls_grid_argmin)
    {
      if (local_best < best || (local_best == best && local_index < best_index)) {
        best = local_best;
        best_index = local_index;
      }
    }
  }
  return {grid_point(lo, step, best_index, n), best, step.maxCoeff()};
}

}  // namespace parallel

GridMin refined_grid_argmin(const GridObjective& f, Eigen::Vector3d lo,
                            Eigen::Vector3d hi, int n, int refinements) {
  GridMin best = parallel::grid_argmin(f, lo, hi, n);
  for (int pass = 0; pass < refinements; ++pass) {
    const Eigen::Vector3d cell = (hi - lo) / static_cast<double>(n - 1);
    lo = best.point - 2.0 * cell;
    hi = best.point + 2.0 * cell;
    best = parallel::grid_argmin(f, lo, hi, n);
  }
  return best;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace dls::kernels
