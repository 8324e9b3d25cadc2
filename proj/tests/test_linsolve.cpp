#include <atomic>

#include <Eigen/Dense>

#include "blochfem/forward.hpp"
#include "blochfem/linsolve.hpp"
#include "support.hpp"

using namespace blochfem;

namespace {

using Vec = CVector;
using Op = std::function<Vec(const Vec&)>;

ProblemConfig tiny(int M, int N, int J) {
  ProblemConfig c = example_config(2);
  c.M = M;
  c.N = N;
  c.J = J;
  return c;
}

std::vector<CVector> random_rhs(const BlockSystem& sys, std::mt19937_64& rng) {
  std::vector<CVector> F;
  for (int n = 0; n < sys.blocks(); ++n) F.push_back(testing::random_vector(sys.mesh->dof_count(), rng));
  return F;
}

// Bordered matrix [A_n, B_n; C_n, I] built from the assembly routines.
CMatrix bordered_oracle(const ProblemConfig& cfg) {
  auto mesh = cfg.mesh();
  const auto mat = cfg.material();
  const BlochGrid g = cfg.grid();
  const CellQuadrature rule(*mesh, 2);
  const CMatrix qs = sample_at_quadrature(*mesh, rule, [&](const Point& x) { return mat->k2q(x); });
  const Eigen::Index m = mesh->dof_count();
  const int nb = g.size();
  CMatrix K = CMatrix::Zero(m * (nb + 1), m * (nb + 1));
  for (int n = 0; n < nb; ++n) {
    K.block(n * m, n * m, m, m) =
        CMatrix(assemble_A(mesh, [&](const Point& x) { return mat->k2np2(x); }, cfg.k, g.points[n], cfg.J));
    K.block(n * m, nb * m, m, m) = CMatrix(assemble_B(*mesh, qs, g.points[n]));
    K.block(nb * m, n * m, m, m) = assemble_C(g, *mesh, n).asDiagonal();
  }
  K.block(nb * m, nb * m, m, m).setIdentity();
  return K;
}

}  // namespace

TEST_SUITE("linsolve") {

TEST_CASE("ILU(0) of identity and diagonal matrices") {
  CSparse I(6, 6);
  I.setIdentity();
  Ilu0<Complex> id(I);
  std::mt19937_64 rng(1);
  const Vec b = testing::random_vector(6, rng);
  CHECK((id.solve(b) - b).norm() == 0.0);

  CSparse D(6, 6);
  for (int i = 0; i < 6; ++i) D.insert(i, i) = Complex(1.0 + i, 0.5 * i);
  Ilu0<Complex> dp(D);
  const Op op = [&](const Vec& x) { return Vec(D * x); };
  const Op pre = [&](const Vec& x) { return dp.solve(x); };
  const auto r = gmres<Complex>(op, b, pre, 1e-12, 10, 10);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK((D * dp.solve(b) - b).norm() < 1e-14);
  CHECK((CMatrix(D).adjoint() * dp.solve_adjoint(b) - b).norm() < 1e-14);
}

TEST_CASE("ILU(0) zero pivot falls back to Jacobi") {
  CSparse A(2, 2);
  A.insert(0, 1) = 1.0;
  A.insert(1, 0) = 1.0;
  A.insert(1, 1) = 2.0;
  Ilu0<Complex> p(A);
  CHECK(p.fallback());
  CHECK_FALSE(p.warning().empty());
}

TEST_CASE("ILU(0) reduces GMRES iterations on an example block") {
  const ProblemConfig c = tiny(3, 1, 50);
  auto mesh = c.mesh();
  const auto mat = c.material();
  const CSparse A = assemble_A(mesh, [&](const Point& x) { return mat->k2np2(x); }, c.k, Alpha::Zero(), c.J);
  Ilu0<Complex> p(A);
  std::mt19937_64 rng(2);
  const Vec b = testing::random_vector(A.rows(), rng);
  const Op op = [&](const Vec& x) { return Vec(A * x); };
  const auto with = gmres<Complex>(op, b, [&](const Vec& x) { return p.solve(x); }, 1e-10, 100, 5000);
  const auto without = gmres<Complex>(op, b, [](const Vec& x) { return x; }, 1e-10, 100, 5000);
  CHECK(with.converged);
  CHECK(with.iterations < without.iterations);
  CHECK((b - A * with.x).norm() / b.norm() <= 1e-10);
}

TEST_CASE("GMRES against dense oracles") {
  std::mt19937_64 rng(3);
  const Op id = [](const Vec& x) { return x; };
  const Vec b = testing::random_vector(5, rng);
  const auto r = gmres<Complex>(id, b, id, 1e-12, 10, 10);
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() < 1e-15);

  Eigen::Matrix2cd H;
  H << 4.0, Complex(1.0, -1.0), Complex(1.0, 1.0), 3.0;
  const Complex det = 4.0 * 3.0 - Complex(1.0, -1.0) * Complex(1.0, 1.0);
  Eigen::Matrix2cd Hinv;
  Hinv << 3.0 / det, -Complex(1.0, -1.0) / det, -Complex(1.0, 1.0) / det, 4.0 / det;
  const Vec b2 = testing::random_vector(2, rng);
  const auto r2 = gmres<Complex>([&](const Vec& x) { return Vec(H * x); }, b2, id, 1e-14, 10, 10);
  CHECK((r2.x - Hinv * b2).norm() < 1e-12);

  CMatrix A = CMatrix::Random(50, 50) + 10.0 * CMatrix::Identity(50, 50);
  const Vec b3 = testing::random_vector(50, rng);
  const auto r3 = gmres<Complex>([&](const Vec& x) { return Vec(A * x); }, b3, id, 1e-12, 50, 500);
  CHECK(testing::rel_diff(r3.x, A.partialPivLu().solve(b3)) <= 1e-9);
}

TEST_CASE("factorisations and transposed views") {
  const ProblemConfig c = tiny(2, 8, 20);
  ForwardSolver s(c);
  const BlockSystem& sys = s.system();
  std::mt19937_64 rng(4);
  int views = 0;
  for (int n = 0; n < sys.blocks(); ++n) {
    const auto& f = *sys.A[n];
    views += f.is_transposed_view();
    const CMatrix A = CMatrix(f.matrix());
    const Vec b = testing::random_vector(A.rows(), rng);
    CHECK((A * f.solve(b) - b).norm() < 1e-12 * b.norm());
    CHECK((A.adjoint() * f.solve_adjoint(b) - b).norm() < 1e-12 * b.norm());
    const CMatrix Bm = CMatrix::Random(A.rows(), 3);
    CHECK((A * f.solve(Bm) - Bm).norm() < 1e-12 * Bm.norm());
  }
  CHECK(views == sys.blocks() / 2);
  CHECK_THROWS_AS(BlockFactorization::transposed(nullptr), ConfigError);
}

TEST_CASE("q = 0 Schur path equals decoupled block solves") {
  ProblemConfig c = tiny(2, 4, 20);
  c.perturbation = RegionSpec{};
  ForwardSolver s(c);
  const BlockSystem& sys = s.system();
  REQUIRE_FALSE(sys.coupled());
  std::mt19937_64 rng(5);
  const auto F = random_rhs(sys, rng);
  const BlockSolution sol = solve_block_system(sys, F, c.solver);
  CVector U = CVector::Zero(sys.mesh->dof_count());
  for (int n = 0; n < sys.blocks(); ++n) {
    const CMatrix A = CMatrix(sys.A[n]->matrix());
    const CVector w = A.partialPivLu().solve(F[n]);
    CHECK(testing::rel_diff(sol.W[n], w) <= 1e-10);
    U -= sys.C[n].cwiseProduct(w);
  }
  CHECK(testing::rel_diff(sol.U, U) <= 1e-10);
}

TEST_CASE("coupled system against a dense bordered oracle") {
  for (int N : {1, 4}) {
    const ProblemConfig c = tiny(2, N, 20);
    ForwardSolver s(c);
    const BlockSystem& sys = s.system();
    const Eigen::Index m = sys.mesh->dof_count();
    CHECK(m * (N + 1) <= 500);
    std::mt19937_64 rng(6 + N);
    const auto F = random_rhs(sys, rng);
    const BlockSolution sol = solve_block_system(sys, F, c.solver);

    const CMatrix K = bordered_oracle(c);
    CHECK((K - dense_bordered_matrix(sys)).norm() < 1e-12 * K.norm());
    CVector rhs = CVector::Zero(m * (N + 1));
    for (int n = 0; n < N; ++n) rhs.segment(n * m, m) = F[n];
    const CVector x = K.partialPivLu().solve(rhs);
    CVector mine(m * (N + 1));
    for (int n = 0; n < N; ++n) mine.segment(n * m, m) = sol.W[n];
    mine.tail(m) = sol.U;
    CHECK(testing::rel_diff(mine, x) <= 1e-9);
    CHECK(bordered_residual(sys, F, sol) <= 1e-10);
  }
}

TEST_CASE("adjoint block solve") {
  const ProblemConfig c = tiny(2, 4, 20);
  ForwardSolver s(c);
  const BlockSystem& sys = s.system();
  const Eigen::Index m = sys.mesh->dof_count();
  std::mt19937_64 rng(9);
  const auto G = random_rhs(sys, rng);
  const CVector z = testing::random_vector(m, rng);
  const BlockSolution adj = solve_block_adjoint(sys, G, z, c.solver);
  const CMatrix K = bordered_oracle(c);
  CVector rhs(m * 5);
  for (int n = 0; n < 4; ++n) rhs.segment(n * m, m) = G[n];
  rhs.tail(m) = z;
  const CVector x = K.adjoint().partialPivLu().solve(rhs);
  CVector mine(m * 5);
  for (int n = 0; n < 4; ++n) mine.segment(n * m, m) = adj.W[n];
  mine.tail(m) = adj.U;
  CHECK(testing::rel_diff(mine, x) <= 1e-9);
}

TEST_CASE("ILU-preconditioned GMRES path reaches the configured tolerance") {
  ProblemConfig c = tiny(3, 4, 30);
  c.solver.block_solver = BlockSolverKind::IluGmres;
  ForwardSolver s(c);
  std::mt19937_64 rng(10);
  const auto F = random_rhs(s.system(), rng);
  const BlockSolution sol = solve_block_system(s.system(), F, c.solver);
  CHECK(sol.outer_residual <= 1e-10);
  CHECK(bordered_residual(s.system(), F, sol) <= 1e-8);

  ProblemConfig d = c;
  d.solver.block_solver = BlockSolverKind::Direct;
  ForwardSolver sd(d);
  const BlockSolution ref = solve_block_system(sd.system(), F, d.solver);
  CHECK(testing::rel_diff(sol.U, ref.U) <= 1e-8);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(97, 4, [&](int i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("worker count does not change results") {
  ProblemConfig c = tiny(2, 8, 20);
  std::mt19937_64 rng(11);
  ForwardSolver s1(c);
  const auto F = random_rhs(s1.system(), rng);
  c.solver.workers = 3;
  ForwardSolver s3(c);
  const BlockSolution a = solve_block_system(s1.system(), F, s1.config().solver);
  const BlockSolution b = solve_block_system(s3.system(), F, s3.config().solver);
  CHECK((a.U - b.U).norm() == 0.0);
}

}  // TEST_SUITE
