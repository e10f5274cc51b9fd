#include "bergman/finite_difference.hpp"

#include <stdexcept>

namespace bergman {

double default_fd_step(int order) {
  switch (order) {
    case 0:
    case 1:
    case 2: return 1e-4;
    case 3: return 4e-3;
    default: return 1e-2;
  }
}

namespace {

// d/dz = (d/dx - i d/dy) / 2,  d/dzbar = (d/dx + i d/dy) / 2.
cplx nested(const ComplexFunction& f, ComplexPoint& z, std::span<const WirtingerOp> ops, double h) {
  if (ops.empty()) return f(z);
  const WirtingerOp op = ops.front();
  const auto rest = ops.subspan(1);
  const cplx base = z[op.index];

  z[op.index] = base + h;
  const cplx xp = nested(f, z, rest, h);
  z[op.index] = base - h;
  const cplx xm = nested(f, z, rest, h);
  z[op.index] = base + cplx(0.0, h);
  const cplx yp = nested(f, z, rest, h);
  z[op.index] = base - cplx(0.0, h);
  const cplx ym = nested(f, z, rest, h);
  z[op.index] = base;

  const cplx ddx = (xp - xm) / (2.0 * h);
  const cplx ddy = (yp - ym) / (2.0 * h);
  const cplx sign = op.conjugate ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
  return 0.5 * (ddx + sign * ddy);
}

}  // namespace

cplx wirtinger_fd(const ComplexFunction& f, const ComplexPoint& z, std::span<const WirtingerOp> ops,
                  double h) {
  if (h <= 0.0) throw std::invalid_argument("finite-difference step must be positive");
  for (const auto& op : ops)
    if (op.index < 0 || op.index >= z.size())
      throw std::invalid_argument("Wirtinger index out of range");
  ComplexPoint work = z;
  const cplx coarse = nested(f, work, ops, h);
  const cplx fine = nested(f, work, ops, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace bergman
