#pragma once

#include <functional>
#include <span>

#include "bergman/types.hpp"

namespace bergman {

/// One Wirtinger factor: d/dz_index, or d/dzbar_index when conjugate is set.
struct WirtingerOp {
  int index = 0;
  bool conjugate = false;
};

using ComplexFunction = std::function<cplx(const ComplexPoint&)>;

/// Default central-difference step for a derivative of the given order.
/// Orders 1-2 use 1e-4; higher orders use larger steps so that roundoff
/// (which grows like eps / h^order) stays below the truncation error.
double default_fd_step(int order);

/// Mixed Wirtinger derivative of f at z by nested central differences in the
/// 2n real coordinates, with one Richardson extrapolation level (steps h and
/// h/2). Operators are applied right to left; the result is order independent
/// for smooth f.
cplx wirtinger_fd(const ComplexFunction& f, const ComplexPoint& z, std::span<const WirtingerOp> ops,
                  double h);

inline cplx wirtinger_fd(const ComplexFunction& f, const ComplexPoint& z,
                         std::initializer_list<WirtingerOp> ops) {
  return wirtinger_fd(f, z, std::span<const WirtingerOp>(ops.begin(), ops.size()),
                      default_fd_step(static_cast<int>(ops.size())));
}

inline cplx wirtinger_fd(const ComplexFunction& f, const ComplexPoint& z,
                         std::initializer_list<WirtingerOp> ops, double h) {
  return wirtinger_fd(f, z, std::span<const WirtingerOp>(ops.begin(), ops.size()), h);
}

constexpr WirtingerOp dz(int index) { return {index, false}; }
constexpr WirtingerOp dzbar(int index) { return {index, true}; }

}  // namespace bergman
