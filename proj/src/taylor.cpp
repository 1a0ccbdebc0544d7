#include "pinnopt/taylor.hpp"

namespace pinnopt {

namespace {

TaylorLayout build_layout(int nvars, int order) {
  TaylorLayout lay;
  lay.nvars = nvars;
  lay.order = order;
  // Graded-lex enumeration: by total degree, then lexicographically
  // descending in the leading exponents.
  for (int deg = 0; deg <= order; ++deg) {
    for (int e0 = deg; e0 >= 0; --e0) {
      if (nvars == 1) {
        if (e0 == deg) lay.exps.push_back({deg, 0, 0});
        continue;
      }
      for (int e1 = deg - e0; e1 >= 0; --e1) {
        int e2 = deg - e0 - e1;
        if (nvars == 2) {
          if (e2 == 0) lay.exps.push_back({e0, e1, 0});
        } else {
          lay.exps.push_back({e0, e1, e2});
        }
      }
    }
  }
  lay.ncoeff = static_cast<int>(lay.exps.size());

  auto degree = [&](int i) { return lay.exps[static_cast<std::size_t>(i)][0] + lay.exps[static_cast<std::size_t>(i)][1] + lay.exps[static_cast<std::size_t>(i)][2]; };
  for (int a = 0; a < lay.ncoeff; ++a) {
    for (int b = 0; b < lay.ncoeff; ++b) {
      if (degree(a) + degree(b) > order) continue;
      std::array<int, 3> e{lay.exps[static_cast<std::size_t>(a)][0] + lay.exps[static_cast<std::size_t>(b)][0],
                           lay.exps[static_cast<std::size_t>(a)][1] + lay.exps[static_cast<std::size_t>(b)][1],
                           lay.exps[static_cast<std::size_t>(a)][2] + lay.exps[static_cast<std::size_t>(b)][2]};
      lay.mul.push_back({a, b, lay.index(e)});
    }
  }
  return lay;
}

struct LayoutRegistry {
  // nvars 1..3, order 0..3
  TaylorLayout table[3][4];
  LayoutRegistry() {
    for (int v = 1; v <= 3; ++v)
      for (int o = 0; o <= 3; ++o) table[v - 1][o] = build_layout(v, o);
  }
};

}  // namespace

const TaylorLayout& TaylorLayout::get(int nvars, int order) {
  if (nvars < 1 || nvars > 3 || order < 0 || order > 3)
    throw std::invalid_argument("TaylorLayout: nvars must be 1..3, order 0..3");
  static const LayoutRegistry reg;
  return reg.table[nvars - 1][order];
}

}  // namespace pinnopt
