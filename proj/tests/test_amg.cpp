#include <sstream>

#include "doctest.h"
#include "mhdtrace/amg.hpp"
#include "support.hpp"

using namespace mhdtrace;
using namespace mhdtrace::amg;

namespace {

std::vector<std::vector<Index>> path_graph(Index n) {
  std::vector<std::vector<Index>> g(n);
  for (Index i = 0; i + 1 < n; ++i) {
    g[i].push_back(i + 1);
    g[i + 1].push_back(i);
  }
  return g;
}

std::vector<Index> natural(Index n) {
  std::vector<Index> s(n);
  for (Index i = 0; i < n; ++i) s[i] = i;
  return s;
}

double galerkin_defect(const AmgHierarchy &h, Index l) {
  const auto &fine = h.level(l);
  const auto pt = oracle::trans(oracle::from_csr(fine.p));
  const auto expect = oracle::mul(pt, oracle::mul(oracle::from_csr(fine.a), oracle::from_csr(fine.p)));
  return oracle::max_abs_diff(oracle::from_csr(h.level(l + 1).a), expect);
}

} // namespace

TEST_CASE("aggregation hand traces") {
  const auto path = aggregate(path_graph(6), natural(6));
  CHECK(path.count == 3);
  CHECK(path.node_to_aggregate == std::vector<Index>{0, 0, 1, 1, 2, 2});

  const auto single = aggregate({{}}, natural(1));
  CHECK(single.count == 1);
  CHECK(single.node_to_aggregate == std::vector<Index>{0});

  std::vector<std::vector<Index>> star{{1, 2, 3, 4}, {0}, {0}, {0}, {0}};
  const auto s = aggregate(star, natural(5));
  CHECK(s.count == 1);
  CHECK(s.node_to_aggregate == std::vector<Index>(5, 0));

  // Path of 3 visited from the middle leaves no singleton; path of 5 from the
  // ends makes node 4 a lone root that must merge into {2,3}.
  const auto p5 = aggregate(path_graph(5), natural(5));
  CHECK(p5.count == 2);
  CHECK(p5.node_to_aggregate == std::vector<Index>{0, 0, 1, 1, 1});

  CHECK_THROWS(aggregate({}, {}));
}

TEST_CASE("aggregates are connected and cover every node") {
  const auto a = oracle::laplacian_2d(9);
  const auto layout = NodalBlockLayout::uniform(81, 1);
  const auto g = node_graph(a, layout);
  const auto agg = aggregate(g, natural(81));
  std::vector<Index> sizes(agg.count, 0);
  for (Index v : agg.node_to_aggregate) {
    REQUIRE(v >= 0);
    REQUIRE(v < agg.count);
    ++sizes[v];
  }
  for (Index s : sizes) CHECK(s > 0);
  for (Index id = 0; id < agg.count; ++id) {
    std::vector<Index> members;
    for (Index n = 0; n < 81; ++n)
      if (agg.node_to_aggregate[n] == id) members.push_back(n);
    std::vector<char> seen(81, 0);
    std::vector<Index> stack{members[0]};
    seen[members[0]] = 1;
    Index reached = 0;
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      ++reached;
      for (Index w : g[v])
        if (!seen[w] && agg.node_to_aggregate[w] == id) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    CHECK(reached == static_cast<Index>(members.size()));
  }
}

TEST_CASE("layout validation") {
  NodalBlockLayout l = NodalBlockLayout::uniform(2, 4);
  CHECK_NOTHROW(l.validate());
  l.components[1] = 0;
  CHECK_THROWS_AS(l.validate(), DimensionError);
}

TEST_CASE("smoother closed forms") {
  const auto id = SparseMatrixCsr::identity(3);
  const Vector b{1, -2, 0.5}, x0(3, 0.0);
  for (auto kind : {SmootherKind::gauss_seidel, SmootherKind::ilu0, SmootherKind::gmres_ilu0}) {
    SmootherConfig cfg;
    cfg.kind = kind;
    cfg.steps = 1;
    CHECK(oracle::max_abs_diff(smooth(cfg, id, x0, b), b) <= 1e-15);
  }
  SmootherConfig jac;
  jac.kind = SmootherKind::jacobi;
  jac.steps = 1;
  const auto d = SparseMatrixCsr::from_triplets(2, 2, {{0, 0, 2}, {1, 1, 4}});
  CHECK(oracle::max_abs_diff(smooth(jac, d, Vector(2, 0.0), Vector{2, 4}), Vector{2.0 / 3, 2.0 / 3}) <= 1e-15);

  SmootherConfig zero_steps;
  zero_steps.steps = 0;
  CHECK_THROWS(Smoother(id, zero_steps));
  const auto nodiag = SparseMatrixCsr::from_triplets(2, 2, {{0, 1, 1}, {1, 0, 1}});
  CHECK_THROWS_AS(Smoother(nodiag, jac), SingularMatrixError);
}

TEST_CASE("gmres-ilu0 smoothing beats richardson-ilu0 for the same steps") {
  const auto a = oracle::laplacian_1d(8);
  std::mt19937_64 rng(3);
  const auto b = oracle::random_vector(rng, 8);
  const Vector x0(8, 0.0);
  SmootherConfig g, r;
  g.kind = SmootherKind::gmres_ilu0;
  r.kind = SmootherKind::ilu0;
  g.steps = r.steps = 3;
  Vector res(8);
  residual(a, smooth(g, a, x0, b), b, res);
  const double rg = norm2(res);
  residual(a, smooth(r, a, x0, b), b, res);
  CHECK(rg <= norm2(res) + 1e-15);
}

TEST_CASE("every smoother reduces the error on a laplacian") {
  const auto a = oracle::laplacian_2d(10);
  std::mt19937_64 rng(5);
  const auto xs = oracle::random_vector(rng, 100);
  const auto b = spmv(a, xs);
  for (auto kind : {SmootherKind::jacobi, SmootherKind::gauss_seidel, SmootherKind::chebyshev,
                    SmootherKind::ilu0, SmootherKind::gmres_ilu0}) {
    SmootherConfig cfg;
    cfg.kind = kind;
    const auto x = smooth(cfg, a, Vector(100, 0.0), b);
    Vector r(100);
    residual(a, x, b, r);
    CHECK_MESSAGE(norm2(r) < norm2(b), to_string(kind));
  }
  CHECK(parse_smoother_kind("gauss-seidel") == SmootherKind::gauss_seidel);
  CHECK_THROWS(parse_smoother_kind("sor"));
}

TEST_CASE("block identity preserved by coarsening") {
  // 8 nodes in a chain, each a 4x4 identity block, coupled by zero-valued
  // entries so the node graph is a path.
  std::vector<Triplet> t;
  for (Index n = 0; n < 8; ++n)
    for (Index c = 0; c < 4; ++c) {
      t.push_back({4 * n + c, 4 * n + c, 1.0});
      if (n + 1 < 8) {
        t.push_back({4 * n + c, 4 * (n + 1) + c, 0.0});
        t.push_back({4 * (n + 1) + c, 4 * n + c, 0.0});
      }
    }
  const auto f = SparseMatrixCsr::from_triplets(32, 32, std::move(t));
  AmgConfig cfg;
  cfg.coarse_threshold = 4;
  const auto h = build_hierarchy(f, NodalBlockLayout::uniform(8, 4), cfg);
  REQUIRE(h.level_count() == 2);
  const auto &p = h.level(0).p;
  CHECK(p.ncols() == 16);
  for (Index i = 0; i < 32; ++i) {
    CHECK(p.row_offsets()[i + 1] - p.row_offsets()[i] == 1);
    CHECK(p.col_indices()[p.row_offsets()[i]] % 4 == i % 4);
  }
  const auto coarse = oracle::from_csr(h.level(1).a);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) CHECK(coarse[i][j] == (i == j ? 2.0 : 0.0));
  const auto ptp = oracle::mul(oracle::trans(oracle::from_csr(p)), oracle::from_csr(p));
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 16; ++j) CHECK(ptp[i][j] == (i == j ? 2.0 : 0.0));
}

TEST_CASE("galerkin coarse operator on a 1d laplacian") {
  AmgConfig cfg;
  cfg.coarse_threshold = 8;
  const auto a = oracle::laplacian_1d(16);
  const auto h = build_hierarchy(a, NodalBlockLayout::uniform(16, 1), cfg);
  REQUIRE(h.level_count() == 2);
  CHECK(h.level(1).a.nrows() == 8);
  CHECK(galerkin_defect(h, 0) <= 1e-12 * h.level(0).a.max_abs());
}

TEST_CASE("galerkin consistency and strictly decreasing sizes on every level") {
  AmgConfig cfg;
  cfg.coarse_threshold = 4;
  const auto a = oracle::laplacian_2d(12);
  const auto h = build_hierarchy(a, NodalBlockLayout::uniform(144, 1), cfg);
  CHECK(h.level_count() >= 3);
  for (Index l = 0; l + 1 < h.level_count(); ++l) {
    CHECK(h.level(l + 1).a.nrows() < h.level(l).a.nrows());
    CHECK(galerkin_defect(h, l) <= 1e-12 * h.level(l).a.max_abs());
  }
  std::ostringstream os;
  h.print_summary(os);
  CHECK(os.str().find("operator complexity") != std::string::npos);
}

TEST_CASE("single level hierarchy is an exact solve") {
  const auto a = oracle::laplacian_1d(10);
  const auto h = build_hierarchy(a, NodalBlockLayout::uniform(10, 1), AmgConfig{});
  CHECK(h.level_count() == 1);
  std::mt19937_64 rng(6);
  const auto r = oracle::random_vector(rng, 10);
  CHECK(oracle::max_abs_diff(h.vcycle(r), oracle::solve(oracle::from_csr(a), r)) <= 1e-10);
  CHECK(h.vcycle(Vector(10, 0.0)) == Vector(10, 0.0));
}

TEST_CASE("vcycle contraction on a 32x32 laplacian with ilu0 smoothing") {
  const auto a = oracle::laplacian_2d(32);
  AmgConfig cfg;
  cfg.smoother.kind = SmootherKind::ilu0;
  const auto h = build_hierarchy(a, NodalBlockLayout::uniform(1024, 1), cfg);
  CHECK(h.level_count() >= 2);
  // Stationary iteration e <- (I - M^{-1} A) e from a random error.
  std::mt19937_64 rng(12);
  Vector e = oracle::random_vector(rng, 1024);
  double prev = norm2(e), factor = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Vector ae = spmv(a, e);
    const Vector c = h.vcycle(ae);
    axpy(-1.0, c, e);
    const double now = norm2(e);
    factor = now / prev;
    prev = now;
  }
  CHECK(factor < 0.5);
}

TEST_CASE("linear smoothers give a linear vcycle; gmres-ilu0 is variable") {
  const auto a = oracle::laplacian_2d(12);
  std::mt19937_64 rng(13);
  const auto r1 = oracle::random_vector(rng, 144);
  const auto r2 = oracle::random_vector(rng, 144);
  for (auto kind : {SmootherKind::jacobi, SmootherKind::gauss_seidel, SmootherKind::chebyshev,
                    SmootherKind::ilu0}) {
    AmgConfig cfg;
    cfg.coarse_threshold = 10;
    cfg.smoother.kind = kind;
    const auto h = build_hierarchy(a, NodalBlockLayout::uniform(144, 1), cfg);
    CHECK_FALSE(h.is_variable());
    Vector comb(144);
    for (int i = 0; i < 144; ++i) comb[i] = 0.7 * r1[i] - 1.3 * r2[i];
    const auto z = h.vcycle(comb);
    const auto z1 = h.vcycle(r1), z2 = h.vcycle(r2);
    Vector lin(144);
    for (int i = 0; i < 144; ++i) lin[i] = 0.7 * z1[i] - 1.3 * z2[i];
    CHECK(oracle::max_abs_diff(z, lin) <= 1e-11);
    // Determinism.
    CHECK(h.vcycle(r1) == z1);
  }
  AmgConfig g;
  g.coarse_threshold = 10;
  const auto hg = build_hierarchy(a, NodalBlockLayout::uniform(144, 1), g);
  CHECK(hg.is_variable());
}

TEST_CASE("coarse nodes carry the union of present components") {
  // Two nodes: node 0 has components {0,1}, node 1 has {1,2}; coupled.
  NodalBlockLayout l;
  l.dofs_per_node = 3;
  l.node_offsets = {0, 2, 4};
  l.components = {0, 1, 1, 2};
  std::vector<Triplet> t;
  for (Index i = 0; i < 4; ++i) t.push_back({i, i, 3.0});
  t.push_back({1, 2, -1.0});
  t.push_back({2, 1, -1.0});
  const auto f = SparseMatrixCsr::from_triplets(4, 4, std::move(t));
  AmgConfig cfg;
  cfg.coarse_threshold = 1;
  const auto h = build_hierarchy(f, l, cfg);
  REQUIRE(h.level_count() == 2);
  CHECK(h.level(1).layout.components == std::vector<int>{0, 1, 2});
  CHECK(h.level(1).a.at(1, 1) == 4.0);
}
