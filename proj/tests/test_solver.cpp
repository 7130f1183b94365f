#include "fastl1/solver.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include "helpers.hpp"

using namespace fastl1;

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(2.0, 1.0) == 1.0);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  CHECK(soft_threshold(0.0, 0.0) == 0.0);
}

namespace {

struct Setup {
  LinearOp op;
  LassoProblem problem;
  Setup(DenseDictionary d, Vector y, double lambda)
      : op(std::move(d)), problem{&op, std::move(y), lambda} {}
};

}  // namespace

TEST_CASE("ista step: identity one-step closed form") {
  Setup s(DenseDictionary(Matrix::Identity(2, 2)), Vector(2), 0.5);
  s.problem.y << 1, 0;
  SolverAux aux{1.0, {}, 1.0, false};
  StepResult r = ista_step(Vector::Zero(2), s.problem, aux);
  CHECK(r.x_next(0) == doctest::Approx(0.5));
  CHECK(r.x_next(1) == 0.0);
  CHECK(r.residual(0) == 1.0);
  CHECK(r.correlations(0) == 1.0);
}

TEST_CASE("ista step: above lambda_max the zero vector is a fixed point") {
  testkit::Instance inst = testkit::random_instance(8, 16, 1.0, 3);
  const double lmax = inst.dict.apply_adjoint(inst.y).lpNorm<Eigen::Infinity>();
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, 1.1 * lmax};
  SolverAux aux{0.25, {}, 1.0, false};
  StepResult r = ista_step(Vector::Zero(16), p, aux);
  CHECK(r.x_next.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ista fixed point satisfies the optimality conditions") {
  testkit::Instance inst = testkit::random_instance(8, 16, 0.3, 11);
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, inst.lambda};
  SolverAux aux;
  aux.step_size = 1.0 / lipschitz_bound(op);
  Vector x = Vector::Zero(16);
  for (int it = 0; it < 100000; ++it) x = ista_step(x, p, aux).x_next;

  const Vector theta = (inst.y - op.apply(x)) / inst.lambda;
  const Vector corr = op.apply_adjoint(theta);
  for (Index j = 0; j < 16; ++j) {
    CHECK(std::abs(corr(j)) <= 1.0 + 1e-8);
    if (x(j) != 0.0) {
      CHECK(corr(j) == doctest::Approx(x(j) > 0 ? 1.0 : -1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("fista first step equals ista") {
  testkit::Instance inst = testkit::random_instance(8, 16, 0.4, 17);
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, inst.lambda};
  SolverAux a{0.2, {}, 1.0, false}, b{0.2, {}, 1.0, false};
  const Vector x0 = testkit::random_vector(16, 2);
  CHECK((ista_step(x0, p, a).x_next - fista_step(x0, p, b).x_next).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fista stays at zero above lambda_max") {
  testkit::Instance inst = testkit::random_instance(8, 16, 1.0, 19);
  const double lmax = inst.dict.apply_adjoint(inst.y).lpNorm<Eigen::Infinity>();
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, 1.5 * lmax};
  SolverAux aux{0.3, {}, 1.0, false};
  Vector x = Vector::Zero(16);
  for (int i = 0; i < 5; ++i) x = fista_step(x, p, aux).x_next;
  CHECK(x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fista beats ista at the same budget") {
  testkit::Instance inst = testkit::random_instance(8, 16, 0.1, 23);
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, inst.lambda};
  const double inv_l = 1.0 / lipschitz_bound(op);
  SolverAux ia{inv_l, {}, 1.0, false}, fa{inv_l, {}, 1.0, false};
  Vector xi = Vector::Zero(16), xf = Vector::Zero(16);
  for (int i = 0; i < 200; ++i) {
    xi = ista_step(xi, p, ia).x_next;
    xf = fista_step(xf, p, fa).x_next;
  }
  CHECK(primal_value(xf, p) <= primal_value(xi, p) + 1e-12);
}

TEST_CASE("ista descends monotonically with a valid step") {
  testkit::Instance inst = testkit::random_instance(10, 24, 0.2, 29);
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, inst.lambda};
  SolverAux aux;
  aux.step_size = 1.0 / lipschitz_bound(op);
  Vector x = Vector::Zero(24);
  double prev = primal_value(x, p);
  for (int it = 0; it < 200; ++it) {
    x = ista_step(x, p, aux).x_next;
    const double cur = primal_value(x, p);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("objective values") {
  Setup s(DenseDictionary(Matrix::Identity(2, 2)), Vector(2), 1.0);
  s.problem.y << 1, 0;
  Vector e1(2);
  e1 << 1, 0;

  CHECK(primal_value(Vector::Zero(2), s.problem) == doctest::Approx(0.5));  // 0.5 ||y||^2
  CHECK(primal_value(e1, s.problem) == doctest::Approx(1.0));

  CHECK(dual_value(Vector::Zero(2), s.problem) == doctest::Approx(0.0));
  CHECK(dual_value(Vector(s.problem.y / s.problem.lambda), s.problem) == doctest::Approx(0.5));

  // random recomputation cross-check
  testkit::Instance inst = testkit::random_instance(9, 20, 0.5, 31);
  LinearOp op(inst.dict);
  LassoProblem p{&op, inst.y, inst.lambda};
  const Vector x = testkit::random_vector(20, 4);
  const Vector theta = testkit::random_vector(9, 5);
  const double pref = 0.5 * (inst.dict.entries() * x - inst.y).squaredNorm() +
                      inst.lambda * x.lpNorm<1>();
  const double dref = 0.5 * inst.y.squaredNorm() -
                      0.5 * inst.lambda * inst.lambda *
                          (theta - inst.y / inst.lambda).squaredNorm();
  CHECK(primal_value(x, p) == doctest::Approx(pref).epsilon(1e-12));
  CHECK(dual_value(theta, p) == doctest::Approx(dref).epsilon(1e-12));
}

TEST_CASE("duality gap basics") {
  Setup s(DenseDictionary(Matrix::Identity(2, 2)), Vector(2), 1.0);
  s.problem.y << 1, 0;
  CHECK(duality_gap(Vector::Zero(2), Vector::Zero(2), s.problem) == doctest::Approx(0.5));

  // optimum of the identity problem: x* = ST_1(y) = 0 at lambda=1=lambda_max
  bool warn = false;
  const Vector theta_star = s.problem.y / s.problem.lambda;
  CHECK(duality_gap(Vector::Zero(2), theta_star, s.problem, &warn) <= 1e-10);
  CHECK_FALSE(warn);
}

TEST_CASE("lipschitz bound brackets the squared spectral norm") {
  {
    LinearOp op(DenseDictionary(Matrix::Identity(4, 4)));
    const double l = lipschitz_bound(op);
    CHECK(l >= 1.0);
    CHECK(l <= 1.05);
  }
  {
    LinearOp op(DenseDictionary(Matrix(2.0 * Matrix::Identity(4, 4))));
    const double l = lipschitz_bound(op);
    CHECK(l >= 4.0);
    CHECK(l <= 4.2);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = testkit::random_matrix(12, 20, 100 + trial);
    LinearOp op{DenseDictionary(m)};
    const double smax = Eigen::BDCSVD<Matrix>(m).singularValues()(0);
    const double l = lipschitz_bound(op);
    CHECK(l >= smax * smax);
    CHECK(l <= 1.05 * smax * smax * (1 + 1e-9));
  }
}

TEST_CASE("restricted solve zero-padded equals full solve") {
  testkit::Instance inst = testkit::random_instance(12, 30, 0.4, 41);
  testkit::OracleSolution oracle = testkit::solve_oracle(inst.dict, inst.y, inst.lambda);
  auto supp = testkit::support_of(oracle.x);
  REQUIRE(!supp.empty());

  // restrict to support plus a few extras
  std::vector<Index> active = supp;
  for (Index j = 0; j < 30 && active.size() < supp.size() + 4; ++j) {
    if (std::find(active.begin(), active.end(), j) == active.end()) active.push_back(j);
  }
  Matrix sub(12, static_cast<Index>(active.size()));
  for (size_t i = 0; i < active.size(); ++i) sub.col(static_cast<Index>(i)) = inst.dict.entries().col(active[i]);
  DenseDictionary restricted(sub);
  testkit::OracleSolution sub_sol = testkit::solve_oracle(restricted, inst.y, inst.lambda);

  Vector padded = Vector::Zero(30);
  for (size_t i = 0; i < active.size(); ++i) padded(active[i]) = sub_sol.x(static_cast<Index>(i));
  CHECK((padded - oracle.x).cwiseAbs().maxCoeff() <= 1e-8);
}
