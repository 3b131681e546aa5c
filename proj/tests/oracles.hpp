#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bldg/geometry.hpp"
#include "bldg/neuralnet.hpp"

namespace bldg::oracle {

// Mean clipped BCE from a separate forward pass in extended precision, so
// that finite differences at h = 1e-5 are not swamped by rounding.
inline long double loss_of(const Mlp& mlp, const Matrix& x, const Vector& y) {
  using ld = long double;
  long double total = 0.0L;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<ld> a(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) a[static_cast<std::size_t>(c)] = x(r, c);
    for (std::size_t k = 0; k < mlp.num_layers(); ++k) {
      const Matrix& w = mlp.weights[k];
      std::vector<ld> z(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        ld acc = mlp.biases[k](j);
        for (Eigen::Index i = 0; i < w.rows(); ++i) acc += a[static_cast<std::size_t>(i)] * static_cast<ld>(w(i, j));
        switch (mlp.activations[k]) {
          case Activation::leaky_relu: acc = acc > 0 ? acc : static_cast<ld>(mlp.alpha) * acc; break;
          case Activation::relu: acc = acc > 0 ? acc : 0.0L; break;
          case Activation::sigmoid: acc = 1.0L / (1.0L + std::exp(-acc)); break;
        }
        z[static_cast<std::size_t>(j)] = acc;
      }
      a = std::move(z);
    }
    const ld p = std::clamp<ld>(a[0], kBceClip, 1.0L - kBceClip);
    const ld t = y(r);
    total += -(t * std::log(p) + (1.0L - t) * std::log(1.0L - p));
  }
  return total / static_cast<ld>(x.rows());
}

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Central differences on every weight and bias. The relative error uses the
// larger magnitude of the two estimates, floored so that parameters with a
// vanishing gradient are judged on absolute error.
inline GradCheck check_gradients(Mlp mlp, const Matrix& x, const Vector& y, double h = 1e-5,
                                 double floor = 1e-7) {
  const Gradients g = backward(mlp, forward(mlp, x), y);
  GradCheck out;
  auto visit = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const long double up = loss_of(mlp, x, y);
    p = saved - h;
    const long double down = loss_of(mlp, x, y);
    p = saved;
    const double numeric = static_cast<double>((up - down) / (2.0L * h));
    const double abs_err = std::abs(analytic - numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    out.max_abs_error = std::max(out.max_abs_error, abs_err);
    out.max_rel_error = std::max(out.max_rel_error, abs_err / denom);
    ++out.checked;
  };
  for (std::size_t k = 0; k < mlp.num_layers(); ++k) {
    for (Eigen::Index i = 0; i < mlp.weights[k].size(); ++i) visit(mlp.weights[k].data()[i], g.w[k].data()[i]);
    for (Eigen::Index i = 0; i < mlp.biases[k].size(); ++i) visit(mlp.biases[k].data()[i], g.b[k].data()[i]);
  }
  return out;
}

// Textbook even-odd crossing test with an explicit intercept division.
inline bool inside(const Geometry& g, Point p) {
  for (const auto& part : g.parts) {
    bool in = false;
    for (const auto& ring : part) {
      for (std::size_t i = 0, j = ring.size() - 2; i + 1 < ring.size(); j = i++) {
        const Point a = ring[i], b = ring[j];
        if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
      }
    }
    if (in) return true;
  }
  return false;
}

// Every cell of the grid, tested with the library's containment rule.
inline ZonalAccumulator brute_force_zonal(const DemGrid& grid, const Geometry& geom) {
  ZonalAccumulator acc;
  for (int r = 0; r < grid.nrows; ++r) {
    for (int c = 0; c < grid.ncols; ++c) {
      const double v = grid.at(r, c);
      if (!grid.is_nodata(v) && point_in_polygon(cell_center(grid, r, c), geom)) acc.push(v);
    }
  }
  return acc;
}

}  // namespace bldg::oracle
