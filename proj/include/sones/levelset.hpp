#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "sones/csv.hpp"
#include "sones/error.hpp"
#include "sones/polynomial.hpp"

namespace sones {

struct Box2 {
  double x_lo = -1.0, x_hi = 3.0;
  double y_lo = 0.0, y_hi = 4.0;
};

/// values(i, j) sampled at (xs[i], ys[j]).
struct LevelSetGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  Eigen::MatrixXd values;
};

/// Grid of h (order 0) or G_m = dh/dtheta_m (order 1) over a box, `resolution` nodes per side.
inline LevelSetGrid level_set_grid(const PolynomialMap& map, int order, std::size_t axis, const Box2& box,
                                   std::size_t resolution) {
  if (map.dim() != 2) throw InvalidArgument("level-set grids need a 2-D map");
  if (order != 0 && order != 1) throw InvalidArgument("level-set order must be 0 or 1");
  if (axis >= 2) throw InvalidArgument("axis out of range");
  if (resolution < 2) throw InvalidArgument("level-set resolution must be at least 2");
  if (!(box.x_hi > box.x_lo) || !(box.y_hi > box.y_lo)) throw InvalidArgument("empty level-set box");
  const PolynomialMap f = order == 0 ? map : partial(map, unit_index(2, {axis}));
  LevelSetGrid g;
  const auto n = static_cast<Eigen::Index>(resolution);
  g.values.resize(n, n);
  for (std::size_t k = 0; k < resolution; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(resolution - 1);
    g.xs.push_back(box.x_lo + s * (box.x_hi - box.x_lo));
    g.ys.push_back(box.y_lo + s * (box.y_hi - box.y_lo));
  }
  for (std::size_t i = 0; i < resolution; ++i)
    for (std::size_t j = 0; j < resolution; ++j) {
      const std::array<double, 2> th{g.xs[i], g.ys[j]};
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(th);
    }
  return g;
}

/// Long format: theta_1,theta_2,value.
inline void write_level_set_csv(std::ostream& os, const LevelSetGrid& g) {
  CsvWriter w(os);
  w.header({"theta_1", "theta_2", "value"});
  for (std::size_t i = 0; i < g.xs.size(); ++i)
    for (std::size_t j = 0; j < g.ys.size(); ++j)
      w.row(std::array<double, 3>{g.xs[i], g.ys[j],
                                  g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
}

}  // namespace sones
