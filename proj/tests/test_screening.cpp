#include "fastl1/screening.hpp"

#include <doctest.h>

#include <random>

#include "helpers.hpp"

using namespace fastl1;

namespace {

// Uniform sample from the l2 ball around center with the given radius.
Vector sample_ball(std::mt19937_64& rng, const Vector& center, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector dir(center.size());
  for (Index i = 0; i < dir.size(); ++i) dir(i) = gauss(rng);
  dir /= dir.norm();
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(center.size()));
  return center + r * dir;
}

ApproxDictionary perturbed_approx(const DenseDictionary& exact, double noise,
                                  std::uint64_t seed) {
  Matrix approx = exact.entries() + noise * testkit::random_matrix(exact.rows(), exact.cols(), seed);
  ApproxDictionary d;
  d.atom_error_bounds.resize(exact.cols());
  d.approx_atom_norms2.resize(exact.cols());
  for (Index j = 0; j < exact.cols(); ++j) {
    d.atom_error_bounds(j) = (approx.col(j) - exact.entries().col(j)).norm();
    d.approx_atom_norms2(j) = approx.col(j).norm();
  }
  d.operator_error_bound = d.atom_error_bounds.maxCoeff();
  d.exact_atom_norms2 = exact.atom_norms2();
  d.relative_complexity = 0.5;  // nominal; irrelevant to these tests
  d.op = std::make_shared<const LinearOp>(DenseDictionary(std::move(approx)));
  return d;
}

}  // namespace

TEST_CASE("lambda_max basics") {
  LinearOp id(DenseDictionary(Matrix::Identity(2, 2)));
  Vector y(2);
  y << 3, -1;
  CHECK(lambda_max(id, y) == 3.0);
  CHECK(lambda_max(id, Vector::Zero(2)) == 0.0);

  const DenseDictionary d = testkit::random_dictionary(10, 25, 7);
  LinearOp op(d);
  const Vector z = testkit::random_vector(10, 8);
  double brute = 0.0;
  for (Index j = 0; j < 25; ++j) brute = std::max(brute, std::abs(d.entries().col(j).dot(z)));
  CHECK(lambda_max(op, z) == doctest::Approx(brute).epsilon(1e-14));
}

TEST_CASE("stable lambda_max dominates lambda_max") {
  const DenseDictionary exact = testkit::random_dictionary(12, 30, 11);
  const Vector y = testkit::random_vector(12, 12).normalized();

  // eps = 0: both coincide
  ApproxDictionary exact_approx = make_exact_approx(exact);
  LinearOp op(exact);
  CHECK(stable_lambda_max(exact_approx, y) == doctest::Approx(lambda_max(op, y)).epsilon(1e-15));

  // zeroed approximation with eps_j = ||a_j||: bound becomes ||y|| max_j ||a_j||
  ApproxDictionary zeroed;
  zeroed.op = std::make_shared<const LinearOp>(
      DenseDictionary(Matrix(Matrix::Zero(12, 30) + 0.0 * exact.entries())));
  zeroed.atom_error_bounds = exact.atom_norms2();
  zeroed.operator_error_bound = exact.atom_norms2().maxCoeff();
  zeroed.approx_atom_norms2 = Vector::Zero(30);
  zeroed.exact_atom_norms2 = exact.atom_norms2();
  zeroed.relative_complexity = 0.5;
  CHECK(stable_lambda_max(zeroed, y) ==
        doctest::Approx(y.norm() * exact.atom_norms2().maxCoeff()).epsilon(1e-14));

  for (int trial = 0; trial < 20; ++trial) {
    ApproxDictionary approx = perturbed_approx(exact, 0.05 * (trial + 1), 100 + trial);
    CHECK(stable_lambda_max(approx, y) >= lambda_max(op, y) - 1e-14);
  }
}

TEST_CASE("sphere test closed form") {
  Vector e1 = Vector::Zero(3);
  e1(0) = 1;
  Vector e2 = Vector::Zero(3);
  e2(1) = 1;
  CHECK(sphere_test(e2, SafeSphere{e1, 0.0}) == 0.0);          // R=0, orthogonal
  CHECK(sphere_test(e1, SafeSphere{e1, 0.5}) == 1.5);          // aligned unit atom
}

TEST_CASE("sphere test upper-bounds the Monte-Carlo supremum") {
  std::mt19937_64 rng(2024);
  const Index n = 6;
  for (int trial = 0; trial < 5; ++trial) {
    const Vector atom = testkit::random_vector(n, 300 + trial);
    SafeSphere sphere{testkit::random_vector(n, 400 + trial), 0.3 + 0.2 * trial};
    const double bound = sphere_test(atom, sphere);
    double best = 0.0;
    for (int s = 0; s < 100000; ++s) {
      best = std::max(best, std::abs(atom.dot(sample_ball(rng, sphere.center, sphere.radius))));
    }
    CHECK(best <= bound + 1e-12);
    CHECK(best >= 0.95 * bound);  // the bound is tight for l2 spheres
  }
}

TEST_CASE("stable zone test reduces to the sphere test at eps=0") {
  const Vector atom = testkit::random_vector(5, 50);
  SafeSphere sphere{testkit::random_vector(5, 51), 0.7};
  CHECK(stable_zone_test(atom, 0.0, atom.norm(), sphere) ==
        doctest::Approx(sphere_test(atom, sphere)).epsilon(1e-15));
  CHECK(stable_ball_test(atom, 0.0, sphere) ==
        doctest::Approx(sphere_test(atom, sphere)).epsilon(1e-15));
  SafeSphere degenerate{Vector::Zero(5), 0.0};
  CHECK(stable_zone_test(Vector(Vector::Zero(5)), 0.3, 1.0, degenerate) == 0.0);
}

TEST_CASE("stable ball test: R=0 leaves only the center terms") {
  const Vector atom = testkit::random_vector(4, 60);
  SafeSphere sphere{testkit::random_vector(4, 61), 0.0};
  CHECK(stable_ball_test(atom, 0.25, sphere) ==
        doctest::Approx(std::abs(atom.dot(sphere.center)) + 0.25 * sphere.center.norm()));
}

TEST_CASE("conservativeness: zone test dominates the true-atom sphere test") {
  std::mt19937_64 rng(777);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const Index n = 4 + static_cast<Index>(rng() % 5);
    Vector exact_atom(n), center(n), noise(n);
    for (Index i = 0; i < n; ++i) {
      exact_atom(i) = gauss(rng);
      center(i) = gauss(rng);
      noise(i) = gauss(rng);
    }
    const double eps = std::abs(gauss(rng)) * 0.5;
    noise *= eps / noise.norm() * std::uniform_real_distribution<double>(0, 1)(rng);
    const Vector approx_atom = exact_atom + noise;  // ||approx - exact|| <= eps
    SafeSphere sphere{center, std::abs(gauss(rng))};
    const double stable = stable_zone_test(approx_atom, eps, exact_atom.norm(), sphere);
    const double plain = sphere_test(exact_atom, sphere);
    CHECK(stable >= plain - 1e-12);
  }
}

TEST_CASE("stable ball test upper-bounds a zone-and-sphere double supremum") {
  std::mt19937_64 rng(31337);
  const Index n = 5;
  for (int trial = 0; trial < 3; ++trial) {
    const Vector approx_atom = testkit::random_vector(n, 500 + trial);
    const double eps = 0.2 + 0.1 * trial;
    SafeSphere sphere{testkit::random_vector(n, 600 + trial), 0.4};
    const double bound = stable_ball_test(approx_atom, eps, sphere);
    double best = 0.0;
    for (int s = 0; s < 30000; ++s) {
      const Vector atom = sample_ball(rng, approx_atom, eps);
      const Vector theta = sample_ball(rng, sphere.center, sphere.radius);
      best = std::max(best, std::abs(atom.dot(theta)));
    }
    CHECK(best <= bound + 1e-12);
  }
}

TEST_CASE("dual scaling") {
  LinearOp id(DenseDictionary(Matrix::Identity(2, 2)));
  Vector z(2);
  z << 0.5, 0.2;
  CHECK((dual_scale(z, id) - z).cwiseAbs().maxCoeff() == 0.0);  // already feasible
  z << 2, 0;
  Vector scaled = dual_scale(z, id);
  CHECK(scaled(0) == 1.0);
  CHECK(scaled(1) == 0.0);

  const DenseDictionary d = testkit::random_dictionary(8, 20, 70);
  LinearOp op(d);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector v = 5.0 * testkit::random_vector(8, 700 + trial);
    CHECK(op.apply_adjoint(dual_scale(v, op)).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("stable dual scaling is feasible for both dictionaries") {
  // eps = 0 reduces to plain scaling
  const DenseDictionary exact = testkit::random_dictionary(8, 18, 81);
  LinearOp op(exact);
  ApproxDictionary exact_approx = make_exact_approx(exact);
  const Vector z = 3.0 * testkit::random_vector(8, 82);
  CHECK((stable_dual_scale(z, exact_approx) - dual_scale(z, op)).cwiseAbs().maxCoeff() == 0.0);

  // worked example: identity approximation, eps = 1 per atom
  ApproxDictionary idapprox;
  idapprox.op = std::make_shared<const LinearOp>(DenseDictionary(Matrix::Identity(2, 2)));
  idapprox.atom_error_bounds = Vector::Ones(2);
  idapprox.operator_error_bound = 1.0;
  idapprox.approx_atom_norms2 = Vector::Ones(2);
  idapprox.exact_atom_norms2 = Vector::Ones(2);
  idapprox.relative_complexity = 0.5;
  Vector z2(2);
  z2 << 2, 0;
  const Vector scaled = stable_dual_scale(z2, idapprox);
  CHECK(scaled(0) == doctest::Approx(0.5));  // denominator max(1, 2 + 1*2) = 4
  CHECK(scaled(1) == 0.0);

  for (int trial = 0; trial < 30; ++trial) {
    ApproxDictionary approx = perturbed_approx(exact, 0.1, 900 + trial);
    const Vector v = 4.0 * testkit::random_vector(8, 950 + trial);
    const Vector theta = stable_dual_scale(v, approx);
    CHECK(op.apply_adjoint(theta).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
    CHECK(approx.op->apply_adjoint(theta).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("dynamic dual points") {
  const DenseDictionary exact = testkit::random_dictionary(10, 22, 91);
  LinearOp op(exact);
  const Vector y = testkit::random_vector(10, 92).normalized();
  const double lambda = 0.3 * lambda_max(op, y);

  SUBCASE("eps = 0 makes both points coincide") {
    const Vector x = testkit::random_vector(22, 93) * 0.1;
    const Vector rho = y - op.apply(x);
    const Vector corr = op.apply_adjoint(rho);
    DualPoints pts = dual_point_dynamic(rho, corr, Vector::Zero(22), y, lambda);
    CHECK((pts.theta_prime - pts.theta_tilde).cwiseAbs().maxCoeff() == 0.0);
    CHECK(op.apply_adjoint(pts.theta_prime).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }

  SUBCASE("at the approximate optimum the tilde gap vanishes") {
    ApproxDictionary approx = perturbed_approx(exact, 0.08, 94);
    const DenseDictionary& atilde = *approx.op->dense();
    testkit::OracleSolution sol = testkit::solve_oracle(atilde, y, lambda, 1e-12);
    const Vector rho = y - atilde.apply(sol.x);
    const Vector corr = atilde.apply_adjoint(rho);
    DualPoints pts = dual_point_dynamic(rho, corr, approx.atom_error_bounds, y, lambda);

    LinearOp tilde_op(atilde);
    LassoProblem tilde_problem{&tilde_op, y, lambda};
    CHECK(duality_gap(sol.x, pts.theta_tilde, tilde_problem) <= 1e-10);
    // theta_prime stays feasible for the exact problem
    CHECK(op.apply_adjoint(pts.theta_prime).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }

  SUBCASE("clamp inactive for large lambda") {
    const Vector x = Vector::Zero(22);
    const Vector rho = y;  // residual at zero
    const Vector corr = op.apply_adjoint(rho);
    const double big_lambda = 10.0 * lambda_max(op, y);
    DualPoints pts = dual_point_dynamic(rho, corr, Vector::Zero(22), y, big_lambda);
    const double unclamped = y.dot(rho) / (big_lambda * rho.squaredNorm());
    CHECK(pts.scale_prime == doctest::Approx(unclamped).epsilon(1e-15));
  }

  SUBCASE("zero residual falls back to scaled y/lambda") {
    const Vector rho = Vector::Zero(10);
    const Vector corr = Vector::Zero(22);
    DualPoints pts = dual_point_dynamic(rho, corr, Vector::Zero(22), y, lambda, &op);
    CHECK(op.apply_adjoint(pts.theta_prime).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
    CHECK(op.apply_adjoint(pts.theta_tilde).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("sphere construction per rule") {
  const DenseDictionary dict = testkit::random_dictionary(10, 24, 101);
  LinearOp op(dict);
  const Vector y = testkit::random_vector(10, 102).normalized();
  const double lmax = lambda_max(op, y);

  SUBCASE("static at lambda = lambda_max collapses to a point") {
    SphereInputs in;
    in.y = &y;
    in.lambda = lmax;
    in.lambda_max = lmax;
    SafeSphere s = build_sphere(Rule::static_safe, in);
    CHECK(s.radius == 0.0);
    CHECK((s.center - y / lmax).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("stable GAP at x=0 has no delta margin") {
    const double lambda = 0.4 * lmax;
    const Vector rho = y;
    const Vector corr = op.apply_adjoint(rho);
    DualPoints pts = dual_point_dynamic(rho, corr, Vector::Zero(24), y, lambda);
    LassoProblem problem{&op, y, lambda};
    const double gap = duality_gap(Vector::Zero(24), pts.theta_prime, problem);
    SphereInputs in;
    in.y = &y;
    in.lambda = lambda;
    in.theta = &pts.theta_prime;
    in.gap = gap;
    in.delta = stable_gap_delta(rho.norm(), 0.25, /*x_l1=*/0.0);
    CHECK(in.delta == 0.0);
    SafeSphere s = build_sphere(Rule::stable_gap, in);
    CHECK(s.radius == doctest::Approx(std::sqrt(2.0 * gap) / lambda));
  }

  SUBCASE("GAP radius shrinks with the gap") {
    // radius formula inverted on a converged run
    const double lambda = 0.5 * lmax;
    testkit::OracleSolution sol = testkit::solve_oracle(dict, y, lambda, 1e-12);
    LassoProblem problem{&op, y, lambda};
    const Vector theta = dual_scale(sol.theta, op);
    const double gap = duality_gap(sol.x, theta, problem);
    REQUIRE(gap <= lambda * lambda * 1e-8 / 2.0);
    SphereInputs in;
    in.y = &y;
    in.lambda = lambda;
    in.theta = &theta;
    in.gap = gap;
    SafeSphere s = build_sphere(Rule::gap_safe, in);
    CHECK(s.radius <= 1e-4);
  }
}

TEST_CASE("eps=0 collapse: stable spheres equal conventional spheres") {
  const DenseDictionary dict = testkit::random_dictionary(12, 28, 111);
  LinearOp op(dict);
  ApproxDictionary exact_approx = make_exact_approx(dict);
  const Vector y = testkit::random_vector(12, 112).normalized();
  const double lmax = lambda_max(op, y);
  const double lambda = 0.35 * lmax;
  const Vector x = testkit::random_vector(28, 113) * 0.05;
  const Vector rho = y - op.apply(x);
  const Vector corr = op.apply_adjoint(rho);
  DualPoints pts = dual_point_dynamic(rho, corr, Vector::Zero(28), y, lambda);
  LassoProblem problem{&op, y, lambda};
  const double gap = duality_gap(x, pts.theta_prime, problem);

  SphereInputs in;
  in.y = &y;
  in.lambda = lambda;
  in.lambda_max = lmax;
  in.stable_lambda_max = stable_lambda_max(exact_approx, y);
  in.theta = &pts.theta_prime;
  in.gap = gap;
  in.delta = stable_gap_delta(rho.norm(), exact_approx.operator_error_bound, x.lpNorm<1>());

  const std::pair<Rule, Rule> pairs[] = {
      {Rule::static_safe, Rule::stable_static},
      {Rule::dynamic_safe, Rule::stable_dynamic},
      {Rule::gap_safe, Rule::stable_gap},
  };
  for (auto [conventional, stable] : pairs) {
    SafeSphere a = build_sphere(conventional, in);
    SafeSphere b = build_sphere(stable, in);
    CHECK((a.center - b.center).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(a.radius == doctest::Approx(b.radius).epsilon(1e-12));
  }

  // test values collapse too
  for (Index j = 0; j < 5; ++j) {
    const Vector atom = dict.entries().col(j);
    SafeSphere sphere = build_sphere(Rule::gap_safe, in);
    CHECK(stable_zone_test(atom, 0.0, atom.norm(), sphere) ==
          doctest::Approx(sphere_test(atom, sphere)).epsilon(1e-12));
  }
}

TEST_CASE("screen keeps everything under a huge radius") {
  const DenseDictionary dict = testkit::random_dictionary(9, 21, 121);
  ApproxDictionary approx = make_exact_approx(dict);
  const Vector center = testkit::random_vector(9, 122);
  const double huge = 1.0 / dict.atom_norms2().minCoeff() +
                      center.norm() * dict.atom_norms2().maxCoeff() + 1.0;
  std::vector<int> active(21);
  for (int j = 0; j < 21; ++j) active[static_cast<size_t>(j)] = j;
  const std::vector<int> kept = screen(active, SafeSphere{center, huge}, approx, true);
  CHECK(kept.size() == active.size());
}

TEST_CASE("static screening at lambda_max screens every sub-maximal atom") {
  const DenseDictionary dict = testkit::random_dictionary(10, 25, 131);
  LinearOp op(dict);
  ApproxDictionary approx = make_exact_approx(dict);
  const Vector y = testkit::random_vector(10, 132).normalized();
  const double lmax = lambda_max(op, y);
  SphereInputs in;
  in.y = &y;
  in.lambda = lmax;
  in.lambda_max = lmax;
  SafeSphere sphere = build_sphere(Rule::static_safe, in);

  std::vector<int> active(25);
  for (int j = 0; j < 25; ++j) active[static_cast<size_t>(j)] = j;
  const std::vector<int> kept = screen(active, sphere, approx, false);
  const Vector corr = op.apply_adjoint(y);
  for (int j = 0; j < 25; ++j) {
    const bool is_kept = std::find(kept.begin(), kept.end(), j) != kept.end();
    const bool maximal = std::abs(corr(j)) >= lmax * (1.0 - 1e-14);
    CHECK(is_kept == maximal);
  }
}

TEST_CASE("screened sets never touch the oracle support") {
  // Small-scale version of the safety property; the acceptance suite runs
  // the large one.
  for (int trial = 0; trial < 10; ++trial) {
    testkit::Instance inst = testkit::random_instance(15, 40, 0.3 + 0.05 * trial, 200 + trial);
    testkit::OracleSolution sol = testkit::solve_oracle(inst.dict, inst.y, inst.lambda);
    LinearOp op(inst.dict);
    ApproxDictionary approx = perturbed_approx(inst.dict, 0.05, 300 + trial);

    // stable GAP sphere at a crude iterate
    const Vector x = Vector::Zero(40);
    const Vector rho = inst.y;
    const Vector corr = approx.op->apply_adjoint(rho);
    DualPoints pts = dual_point_dynamic(rho, corr, approx.atom_error_bounds, inst.y, inst.lambda);
    LinearOp tilde_op(*approx.op->dense());
    LassoProblem tilde_problem{&tilde_op, inst.y, inst.lambda};
    const double gap = duality_gap(x, pts.theta_prime, tilde_problem);
    SphereInputs in;
    in.y = &inst.y;
    in.lambda = inst.lambda;
    in.theta = &pts.theta_prime;
    in.gap = gap;
    in.delta = stable_gap_delta(rho.norm(), approx.operator_error_bound, 0.0);
    SafeSphere sphere = build_sphere(Rule::stable_gap, in);

    std::vector<int> active(40);
    for (int j = 0; j < 40; ++j) active[static_cast<size_t>(j)] = j;
    const std::vector<int> kept = screen(active, sphere, approx, true);
    for (Index j : testkit::support_of(sol.x)) {
      CHECK(std::find(kept.begin(), kept.end(), static_cast<int>(j)) != kept.end());
    }
  }
}
