#include <doctest.h>

#include <cmath>
#include <thread>

#include "gpassivity/linalg.hpp"
#include "oracles.hpp"

using namespace gpassivity;

namespace {
double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("build_pauli_operator basics") {
    auto z0 = build_pauli_operator({{1.0, {{0, Axis::Z}}}}, 1);
    CHECK(max_abs(z0.matrix() - pauli_matrix(Axis::Z)) < 1e-15);

    auto empty = build_pauli_operator({}, 2);
    CHECK(max_abs(empty.matrix()) == 0.0);
    CHECK(empty.dim() == 4);

    PauliTerm term{0.7, {{0, Axis::Z}, {3, Axis::Z}}};
    auto op = build_pauli_operator({term}, 4);
    CHECK(max_abs(op.matrix() - oracles::pauli_term_matrix(term, 4)) < 1e-14);

    CHECK_THROWS_AS(build_pauli_operator({{1.0, {{9, Axis::Z}}}}, 4), Error);
    CHECK_THROWS_AS(build_pauli_operator({{1.0, {{1, Axis::Z}, {1, Axis::X}}}}, 4), Error);
}

TEST_CASE("build_pauli_operator mixed axes against the index oracle") {
    std::mt19937_64 rng(11);
    std::vector<PauliTerm> terms = {{0.3, {{0, Axis::X}, {2, Axis::Y}}},
                                    {-1.1, {{1, Axis::Z}}},
                                    {0.25, {}}};
    Mat expect = Mat::Zero(8, 8);
    for (const auto& t : terms) expect += oracles::pauli_term_matrix(t, 3);
    auto op = build_pauli_operator(terms, 3);
    CHECK(max_abs(op.matrix() - expect) < 1e-14);
}

TEST_CASE("embed_local") {
    auto sx = HermitianOperator(pauli_matrix(Axis::X), {2});
    CHECK(max_abs(embed_local(sx, 0, {2}).matrix() - pauli_matrix(Axis::X)) < 1e-15);

    auto id = HermitianOperator(Mat::Identity(2, 2), {2});
    CHECK(max_abs(embed_local(id, 1, {2, 2}).matrix() - Mat::Identity(4, 4)) < 1e-15);

    auto z1 = embed_local(HermitianOperator(pauli_matrix(Axis::Z), {2}), 1, {2, 2});
    PauliTerm term{1.0, {{1, Axis::Z}}};
    CHECK(max_abs(z1.matrix() - oracles::pauli_term_matrix(term, 2)) < 1e-15);

    CHECK_THROWS_AS(embed_local(HermitianOperator(Mat::Identity(3, 3), {3}), 0, {2, 2}), Error);
}

TEST_CASE("eig_hermitian") {
    auto sx = HermitianOperator(pauli_matrix(Axis::X), {2});
    auto es = eig_hermitian(sx);
    CHECK(es.eigenvalues[0] == doctest::Approx(-1.0));
    CHECK(es.eigenvalues[1] == doctest::Approx(1.0));
    CHECK(max_abs(es.eigenvectors * es.eigenvectors.adjoint() - Mat::Identity(2, 2)) < 1e-10);
    // eigenvectors are (|0> -+ |1>)/sqrt(2) up to phase
    Eigen::Vector2cd minus(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
    Eigen::Vector2cd plus(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
    CHECK(std::abs(minus.dot(es.eigenvectors.col(0))) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(plus.dot(es.eigenvectors.col(1))) == doctest::Approx(1.0).epsilon(1e-10));

    std::mt19937_64 rng(7);
    auto a = HermitianOperator(oracles::random_hermitian(rng, 8), {8});
    auto ea = a.eig();
    Mat rebuilt = ea.eigenvectors * ea.eigenvalues.asDiagonal() * ea.eigenvectors.adjoint();
    CHECK(max_abs(rebuilt - a.matrix()) < 1e-10);
    for (int i = 1; i < 8; ++i) CHECK(ea.eigenvalues[i] >= ea.eigenvalues[i - 1]);
}

TEST_CASE("eig cache is shared and stable across threads") {
    std::mt19937_64 rng(3);
    auto a = HermitianOperator(oracles::random_hermitian(rng, 6), {6});
    auto copy = a;
    std::vector<std::thread> workers;
    std::vector<double> first(4);
    for (int k = 0; k < 4; ++k)
        workers.emplace_back([&, k] { first[k] = copy.eig().eigenvalues[0]; });
    for (auto& w : workers) w.join();
    for (int k = 1; k < 4; ++k) CHECK(first[k] == first[0]);
    CHECK(a.eig().eigenvalues[0] == first[0]);
}

TEST_CASE("matrix_function") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 4;
    auto a = HermitianOperator(d, {2});
    auto root = matrix_function(a, [](double x) { return std::sqrt(x); });
    CHECK(root.matrix()(0, 0).real() == doctest::Approx(1.0));
    CHECK(root.matrix()(1, 1).real() == doctest::Approx(2.0));

    std::mt19937_64 rng(5);
    auto h = HermitianOperator(oracles::random_hermitian(rng, 5), {5});
    auto same = matrix_function(h, [](double x) { return x; });
    CHECK(max_abs(same.matrix() - h.matrix()) < 1e-12);

    // Gibbs log closed form: -ln(e^{-sz}/Z) = sz + ln(Z) I with Z = 2 cosh 1.
    const double z = 2.0 * std::cosh(1.0);
    Mat rho = Mat::Zero(2, 2);
    rho(0, 0) = std::exp(-1.0) / z;
    rho(1, 1) = std::exp(1.0) / z;
    auto log_rho = matrix_function(HermitianOperator(rho, {2}),
                                   [](double x) { return -std::log(x); }, FunctionDomain{0, true});
    Mat expect = pauli_matrix(Axis::Z) + std::log(z) * Mat::Identity(2, 2);
    CHECK(max_abs(log_rho.matrix() - expect) < 1e-12);

    // ln of a singular operator reports the offending eigenvalue.
    Mat sing = Mat::Zero(2, 2);
    sing(0, 0) = 1.0;
    CHECK_THROWS_AS(matrix_function(HermitianOperator(sing, {2}),
                                    [](double x) { return std::log(x); }, FunctionDomain{0, true}),
                    SingularStateError);
}

TEST_CASE("matrix_function exp/ln composition") {
    std::mt19937_64 rng(19);
    Mat h = oracles::random_hermitian(rng, 6, 6.0);
    // clamp spectrum into [-20, 20]
    HermitianOperator a(h, {6});
    const double norm = operator_norm(a);
    if (norm > 20.0) a = matrix_function(a, [&](double x) { return 20.0 * x / norm; });
    auto exp_a = matrix_function(a, [](double x) { return std::exp(x); });
    auto back = matrix_function(exp_a, [](double x) { return std::log(x); }, FunctionDomain{0, true});
    CHECK(max_abs(back.matrix() - a.matrix()) < 1e-9 * std::max(1.0, max_abs(a.matrix())));
}

TEST_CASE("unitary_from_hamiltonian") {
    std::mt19937_64 rng(23);
    auto h = HermitianOperator(oracles::random_hermitian(rng, 4), {4});
    CHECK(max_abs(unitary_from_hamiltonian(h, 0.0) - Mat::Identity(4, 4)) < 1e-12);

    auto uz = unitary_from_hamiltonian(HermitianOperator(pauli_matrix(Axis::Z), {2}), M_PI / 2);
    CHECK(std::abs(uz(0, 0) - std::exp(Cplx(0, -M_PI / 2))) < 1e-12);
    CHECK(std::abs(uz(1, 1) - std::exp(Cplx(0, M_PI / 2))) < 1e-12);

    auto sx = HermitianOperator(pauli_matrix(Axis::X), {2});
    auto ux = unitary_from_hamiltonian(sx, M_PI / 2);
    CHECK(is_unitary(ux, 1e-10));
    CHECK(max_abs(ux * sx.matrix() * ux.adjoint() - sx.matrix()) < 1e-10);
    // -i sigma_x up to global phase
    CHECK(std::abs(std::abs(ux(0, 1)) - 1.0) < 1e-12);
}

TEST_CASE("partial_trace") {
    std::mt19937_64 rng(31);
    Mat rho_a = oracles::random_density(rng, 2);
    Mat rho_b = oracles::random_density(rng, 2);
    auto joint = HermitianOperator(kron(rho_a, rho_b), {2, 2});
    CHECK(max_abs(partial_trace(joint, {0}).matrix() - rho_a) < 1e-12);

    Mat bell = Mat::Zero(4, 4);
    bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
    auto reduced = partial_trace(HermitianOperator(bell, {2, 2}), {0});
    CHECK(max_abs(reduced.matrix() - 0.5 * Mat::Identity(2, 2)) < 1e-12);

    Mat rho3 = oracles::random_density(rng, 8);
    auto kept = partial_trace(HermitianOperator(rho3, {2, 2, 2}), {0, 2});
    CHECK(max_abs(kept.matrix() - oracles::partial_trace_qubits(rho3, {0, 2}, 3)) < 1e-12);

    CHECK_THROWS_AS(partial_trace(joint, {}), Error);
    CHECK_THROWS_AS(partial_trace(joint, {5}), Error);
}

TEST_CASE("partial_trace linearity, trace preservation, embed adjointness") {
    std::mt19937_64 rng(37);
    Mat m = oracles::random_hermitian(rng, 8);
    Mat n = oracles::random_hermitian(rng, 8);
    const std::vector<int> dims = {2, 2, 2};
    Mat lin = partial_trace(Mat(2.0 * m - 0.5 * n), {1}, dims);
    Mat expect = 2.0 * partial_trace(m, {1}, dims) - 0.5 * partial_trace(n, {1}, dims);
    CHECK(max_abs(lin - expect) < 1e-12);

    CHECK(partial_trace(m, {0, 1}, dims).trace().real() ==
          doctest::Approx(m.trace().real()).epsilon(1e-12));

    Mat local = oracles::random_hermitian(rng, 2);
    Mat embedded = embed_local(local, 1, dims);
    const double lhs = (embedded * m).trace().real();
    const double rhs = (local * partial_trace(m, {1}, dims)).trace().real();
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("qudit factor lists work throughout") {
    std::mt19937_64 rng(43);
    const std::vector<int> dims = {2, 3};  // a qubit and a qutrit
    Mat m = oracles::random_hermitian(rng, 6);
    HermitianOperator op(m, dims);

    CHECK(partial_trace(op, {0}).dim() == 2);
    CHECK(partial_trace(op, {1}).dim() == 3);
    CHECK(partial_trace(op, {0, 1}).trace() == doctest::Approx(op.trace()).epsilon(1e-12));

    // embed/trace adjointness on the qutrit factor
    Mat local = oracles::random_hermitian(rng, 3);
    Mat embedded = embed_local(local, 1, dims);
    CHECK((embedded * m).trace().real() ==
          doctest::Approx((local * partial_trace(m, {1}, dims)).trace().real()).epsilon(1e-12));

    // product state reduces exactly
    Mat rho_a = oracles::random_density(rng, 2);
    Mat rho_b = oracles::random_density(rng, 3);
    DensityMatrix joint(kron(rho_a, rho_b), dims);
    CHECK((partial_trace(joint, {1}).matrix() - rho_b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("embed_on_factors places multi-factor operators") {
    std::mt19937_64 rng(41);
    Mat op = oracles::random_hermitian(rng, 4);
    const std::vector<int> dims = {2, 2, 2};
    // Embedding on (2, 0) permutes the operator's factors.
    Mat direct = embed_on_factors(op, {2, 0}, dims);
    Mat traced = partial_trace(direct, {0, 2}, dims) / 2.0;
    Mat swapped = embed_on_factors(op, {1, 0}, {2, 2});
    CHECK(max_abs(traced - swapped) < 1e-12);
}

TEST_CASE("operator_norm") {
    CHECK(operator_norm(HermitianOperator(pauli_matrix(Axis::Z), {2})) == doctest::Approx(1.0));
    CHECK(operator_norm(HermitianOperator(Mat::Zero(4, 4), {4})) == doctest::Approx(0.0));

    // B of a 2-qubit Gibbs product at betas (1, 0.5): eigenvalues are
    // +-1 +-0.5 + ln Z0, enumerated directly.
    const double b1 = 1.0, b2 = 0.5;
    const double logz = std::log(4.0 * std::cosh(b1) * std::cosh(b2));
    Mat b = b1 * kron(pauli_matrix(Axis::Z), Mat::Identity(2, 2)) +
            b2 * kron(Mat::Identity(2, 2), pauli_matrix(Axis::Z)) +
            logz * Mat::Identity(4, 4);
    double expect = 0.0;
    for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0})
            expect = std::max(expect, std::abs(b1 * s1 + b2 * s2 + logz));
    CHECK(operator_norm(HermitianOperator(b, {2, 2})) == doctest::Approx(expect));
}

TEST_CASE("validation errors") {
    Mat bad = Mat::Zero(2, 2);
    bad(0, 1) = 1.0;  // not Hermitian
    CHECK_THROWS_AS(HermitianOperator(bad, {2}), Error);
    CHECK_THROWS_AS(HermitianOperator(Mat::Identity(3, 3), {2}), Error);

    Mat not_normalized = 2.0 * Mat::Identity(2, 2);
    CHECK_THROWS_AS(DensityMatrix(not_normalized, {2}), Error);
    Mat negative = Mat::Zero(2, 2);
    negative(0, 0) = 1.5;
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(negative, {2}), Error);
}
