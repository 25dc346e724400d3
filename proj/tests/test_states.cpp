#include <doctest.h>

#include <cmath>

#include "gpassivity/passivity.hpp"
#include "gpassivity/states.hpp"
#include "oracles.hpp"

using namespace gpassivity;

namespace {
double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

SetupDescriptor microbath_chain(const std::vector<double>& betas) {
    SetupDescriptor setup;
    for (size_t i = 0; i < betas.size(); ++i)
        setup.subsystems.push_back(
            {"b" + std::to_string(i), 2, pauli_matrix(Axis::Z), Role::Microbath, betas[i]});
    for (size_t i = 0; i < betas.size(); ++i)
        setup.partition.environment.push_back(static_cast<int>(i));
    return setup;
}
}  // namespace

TEST_CASE("gibbs_state") {
    auto sz = HermitianOperator(pauli_matrix(Axis::Z), {2});
    CHECK(max_abs(gibbs_state(sz, 0.0).matrix() - 0.5 * Mat::Identity(2, 2)) < 1e-14);

    auto g = gibbs_state(sz, 1.0);
    const double z = 2.0 * std::cosh(1.0);
    CHECK(g.matrix()(0, 0).real() == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-12));
    CHECK(g.matrix()(1, 1).real() == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));

    // Spectral oracle: eigenvalues are softmax(-beta * spectrum).
    std::mt19937_64 rng(51);
    auto h = HermitianOperator(oracles::random_hermitian(rng, 4), {4});
    const double beta = 0.7;
    auto state = gibbs_state(h, beta);
    Eigen::VectorXd expect = (-beta * h.eig().eigenvalues.array()).exp();
    expect /= expect.sum();
    Eigen::VectorXd got = state.eig().eigenvalues;
    std::sort(expect.data(), expect.data() + expect.size());
    for (int i = 0; i < 4; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));

    // Overflow guard: large beta and a shifted spectrum stay finite.
    auto big = gibbs_state(HermitianOperator(Mat(1000.0 * pauli_matrix(Axis::Z)), {2}), 5.0);
    CHECK(std::isfinite(big.matrix()(1, 1).real()));
    CHECK(big.matrix()(1, 1).real() == doctest::Approx(1.0));
}

TEST_CASE("product_initial_state") {
    auto setup0 = microbath_chain({0.0, 0.0});
    auto rho = product_initial_state(setup0, std::nullopt);
    CHECK(max_abs(rho.matrix() - 0.25 * Mat::Identity(4, 4)) < 1e-14);

    // Three microbaths at the heat-leak betas: diagonal e^{-sum beta_i s_i}/Z.
    auto setup = microbath_chain({1.0, 0.5, 0.1});
    auto rho3 = product_initial_state(setup, std::nullopt);
    double z = 0.0;
    for (int k = 0; k < 8; ++k) {
        double e = 0.0;
        const double betas[3] = {1.0, 0.5, 0.1};
        for (int q = 0; q < 3; ++q) e += betas[q] * (((k >> (2 - q)) & 1) ? -1.0 : 1.0);
        z += std::exp(-e);
    }
    for (int k = 0; k < 8; ++k) {
        double e = 0.0;
        const double betas[3] = {1.0, 0.5, 0.1};
        for (int q = 0; q < 3; ++q) e += betas[q] * (((k >> (2 - q)) & 1) ? -1.0 : 1.0);
        CHECK(rho3.matrix()(k, k).real() == doctest::Approx(std::exp(-e) / z).epsilon(1e-12));
    }

    // System factor + three-spin bath, checked against the closed-form product.
    SetupDescriptor with_sys;
    with_sys.subsystems.push_back({"s", 2, pauli_matrix(Axis::Z), Role::System, std::nullopt});
    for (int i = 0; i < 3; ++i)
        with_sys.subsystems.push_back(
            {"b" + std::to_string(i), 2, pauli_matrix(Axis::Z), Role::Microbath, 0.8});
    with_sys.partition = {{0}, {1, 2, 3}};
    auto sys_state = gibbs_state(HermitianOperator(pauli_matrix(Axis::X), {2}), 0.5);
    auto full = product_initial_state(with_sys, sys_state);
    Mat expect = sys_state.matrix();
    auto bath = gibbs_state(HermitianOperator(pauli_matrix(Axis::Z), {2}), 0.8);
    for (int i = 0; i < 3; ++i) expect = kron(expect, bath.matrix()).eval();
    CHECK(max_abs(full.matrix() - expect) < 1e-13);

    // Rank-deficient system states are rejected: B would be undefined.
    Mat pure = Mat::Zero(2, 2);
    pure(0, 0) = 1.0;
    CHECK_THROWS_AS(product_initial_state(with_sys, DensityMatrix(pure, {2})),
                    SingularStateError);
}

TEST_CASE("coupled_thermal_state") {
    const Mat sz = pauli_matrix(Axis::Z);
    SetupDescriptor setup;
    setup.subsystems.push_back({"s", 2, sz, Role::System, std::nullopt});
    setup.subsystems.push_back({"h", 2, sz, Role::Microbath, 1.0});
    setup.subsystems.push_back({"c", 2, sz, Role::Microbath, 2.0});
    setup.partition = {{0}, {1, 2}};
    const std::vector<int> dims = {2, 2, 2};

    SUBCASE("zero coupling reduces to the product state") {
        setup.initial_coupling = HermitianOperator(Mat::Zero(8, 8), dims);
        auto coupled = coupled_thermal_state(setup);
        SetupDescriptor plain = setup;
        plain.initial_coupling.reset();
        auto product = product_initial_state(
            plain, gibbs_state(HermitianOperator(sz, {2}), 1.0));
        CHECK(max_abs(coupled.matrix() - product.matrix()) < 1e-12);
    }

    SUBCASE("reduced system state matches the effective Hamiltonian") {
        Mat cross = kron(kron(sigma_plus(), sigma_minus()) + kron(sigma_minus(), sigma_plus()),
                         Mat::Identity(2, 2));
        setup.initial_coupling = HermitianOperator(Mat(0.3 * cross), dims);
        auto rho = coupled_thermal_state(setup);
        CHECK(rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rho.eig().eigenvalues.minCoeff() > 1e-12);

        auto h_eff = effective_system_hamiltonian(
            HermitianOperator(sz, {2}),
            HermitianOperator(Mat(0.3 * (kron(sigma_plus(), sigma_minus()) +
                                         kron(sigma_minus(), sigma_plus()))),
                              {2, 2}),
            HermitianOperator(sz, {2}), 1.0);
        auto reduced = partial_trace(rho, {0});
        auto expect = gibbs_state(h_eff, 1.0);
        CHECK(max_abs(reduced.matrix() - expect.matrix()) < 1e-10);
    }

    SUBCASE("coupling outside the system+bath block is rejected") {
        // acts on the two baths, not on the system
        Mat bad = kron(Mat::Identity(2, 2),
                       kron(pauli_matrix(Axis::X), pauli_matrix(Axis::X)));
        setup.initial_coupling = HermitianOperator(bad, dims);
        CHECK_THROWS_AS(coupled_thermal_state(setup), Error);
    }
}

TEST_CASE("correlated_pair_state") {
    auto product = correlated_pair_state(0.4, 0.2, 0.0);
    auto rc = gibbs_state(HermitianOperator(pauli_matrix(Axis::Z), {2}), 0.4);
    auto rh = gibbs_state(HermitianOperator(pauli_matrix(Axis::Z), {2}), 0.2);
    CHECK(max_abs(product.matrix() - kron(rc.matrix(), rh.matrix())) < 1e-14);

    // Marginals are independent of C.
    const double bound = correlated_pair_feasible_bound(0.4, 0.2);
    auto tilted = correlated_pair_state(0.4, 0.2, 0.8 * bound);
    CHECK(max_abs(partial_trace(tilted, {0}).matrix() - partial_trace(product, {0}).matrix()) <
          1e-12);
    CHECK(max_abs(partial_trace(tilted, {1}).matrix() - partial_trace(product, {1}).matrix()) <
          1e-12);

    // The default pair: C = -0.19 is feasible at the demon temperatures and
    // carries genuine correlation.
    auto tilted2 = correlated_pair_state(1.0 / 3.0, 1.0 / 5.0, -0.19);
    auto marg = kron(partial_trace(tilted2, {0}).matrix(), partial_trace(tilted2, {1}).matrix());
    CHECK(relative_entropy(tilted2, DensityMatrix(marg, {2, 2})) > 1e-3);

    CHECK_THROWS_AS(correlated_pair_state(1.0, 0.5, 0.5), InfeasibleCorrelationError);
    try {
        correlated_pair_state(1.0, 0.5, 0.5);
    } catch (const InfeasibleCorrelationError& err) {
        CHECK(err.feasible_bound ==
              doctest::Approx(correlated_pair_feasible_bound(1.0, 0.5)));
    }
}

TEST_CASE("gibbs and b_operator on a qubit-qutrit space") {
    std::mt19937_64 rng(53);
    HermitianOperator op(oracles::random_hermitian(rng, 6), {2, 3});
    auto g = gibbs_state(op, 0.4);
    auto b = b_operator(g);
    auto back = matrix_function(b, [](double x) { return std::exp(-x); });
    CHECK((back.matrix() - g.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(partial_trace(b, {1}).dim() == 3);
}

TEST_CASE("b_operator") {
    const int d = 4;
    auto mixed = DensityMatrix(Mat(Mat::Identity(d, d) / d), {4});
    auto b = b_operator(mixed);
    CHECK(max_abs(b.matrix() - std::log(double(d)) * Mat::Identity(d, d)) < 1e-12);

    auto sz = HermitianOperator(pauli_matrix(Axis::Z), {2});
    auto g = gibbs_state(sz, 0.7);
    auto bg = b_operator(g);
    const double logz = std::log(2.0 * std::cosh(0.7));
    CHECK(max_abs(bg.matrix() - (0.7 * pauli_matrix(Axis::Z) + logz * Mat::Identity(2, 2))) <
          1e-10);

    // e^{-B} reconstructs rho.
    auto back = matrix_function(bg, [](double x) { return std::exp(-x); });
    CHECK(max_abs(back.matrix() - g.matrix()) < 1e-9);

    Mat pure = Mat::Zero(2, 2);
    pure(1, 1) = 1.0;
    CHECK_THROWS_AS(b_operator(DensityMatrix(pure, {2})), SingularStateError);
}

TEST_CASE("b_correlation_split") {
    std::mt19937_64 rng(61);
    SUBCASE("product states have vanishing correlation operator") {
        Mat rho = kron(oracles::random_density(rng, 2), oracles::random_density(rng, 4));
        auto split = b_correlation_split(DensityMatrix(rho, {2, 4}), {{0}, {1}});
        CHECK(operator_norm(split.b_corr) < 1e-10);
    }
    SUBCASE("correlated pairs have a nonzero correlation operator") {
        auto rho = correlated_pair_state(1.0 / 3.0, 1.0 / 5.0, -0.15);
        auto split = b_correlation_split(rho, {{0}, {1}});
        CHECK(operator_norm(split.b_corr) > 1e-3);
    }
    SUBCASE("reconstruction identity") {
        Mat rho = oracles::random_density(rng, 8);
        auto dm = DensityMatrix(rho, {2, 2, 2});
        auto split = b_correlation_split(dm, {{0}, {1, 2}});
        Mat rebuilt = split.b_corr.matrix() +
                      embed_on_factors(split.b_sys.matrix(), {0}, {2, 2, 2}) +
                      embed_on_factors(split.b_env.matrix(), {1, 2}, {2, 2, 2});
        CHECK(max_abs(rebuilt - split.b_tot.matrix()) < 1e-10);
    }
    SUBCASE("log partition of a Gibbs product") {
        auto setup_like = kron(gibbs_state(HermitianOperator(pauli_matrix(Axis::Z), {2}), 1.0).matrix(),
                               gibbs_state(HermitianOperator(pauli_matrix(Axis::Z), {2}), 0.5).matrix());
        auto split = b_correlation_split(DensityMatrix(setup_like, {2, 2}), {{0}, {1}});
        const double logz = std::log(4.0 * std::cosh(1.0) * std::cosh(0.5));
        CHECK(split.log_partition == doctest::Approx(logz).epsilon(1e-10));
    }
}

TEST_CASE("gell_mann_basis is orthonormal and traceless") {
    for (int dim : {2, 3, 4}) {
        auto basis = gell_mann_basis(dim);
        CHECK(static_cast<int>(basis.size()) == dim * dim - 1);
        for (size_t i = 0; i < basis.size(); ++i) {
            CHECK(std::abs(basis[i].trace()) < 1e-14);
            CHECK(max_abs(basis[i] - basis[i].adjoint()) < 1e-14);
            for (size_t j = 0; j <= i; ++j) {
                const double inner = (basis[i] * basis[j]).trace().real();
                CHECK(inner == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("b_general_decomposition") {
    SUBCASE("local sums have no interaction part") {
        Mat b = kron(pauli_matrix(Axis::Z), Mat::Identity(2, 2)) +
                kron(Mat::Identity(2, 2), pauli_matrix(Axis::Z));
        auto dec = b_general_decomposition(HermitianOperator(b, {2, 2}), 2, 2);
        CHECK(max_abs(dec.b_int.matrix()) < 1e-12);
        CHECK(dec.t.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("pure interaction term against the projection oracle") {
        Mat b = kron(pauli_matrix(Axis::Z), pauli_matrix(Axis::Z));
        auto dec = b_general_decomposition(HermitianOperator(b, {2, 2}), 2, 2);
        CHECK(max_abs(dec.b_a.matrix()) < 1e-12);
        CHECK(max_abs(dec.b_b.matrix()) < 1e-12);
        // Projection oracle: tr[(sz x sz)(Z_i x Z_j)] with Z = sz/sqrt(2)
        // gives a single coefficient tr[sz^2]/2 x tr[sz^2]/2 = 2.
        int nonzero = 0;
        double value = 0.0;
        for (int i = 0; i < dec.t.rows(); ++i)
            for (int j = 0; j < dec.t.cols(); ++j)
                if (std::abs(dec.t(i, j)) > 1e-12) {
                    ++nonzero;
                    value = dec.t(i, j);
                }
        CHECK(nonzero == 1);
        CHECK(value == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("reconstruction and the correlation split agree up to locals") {
        auto rho = correlated_pair_state(0.5, 0.25, -0.15);
        auto b = b_operator(rho);
        auto dec = b_general_decomposition(b, 2, 2);
        Mat rebuilt = dec.b_a.matrix() + dec.b_b.matrix() + dec.b_int.matrix() +
                      dec.identity_coefficient / 4.0 * Mat::Identity(4, 4);
        CHECK(max_abs(rebuilt - b.matrix()) < 1e-10);

        // tr_B consistency: tr_B b_tot = (collapsed b_a) + const * I.
        Mat traced = partial_trace(b.matrix(), {0}, {2, 2});
        Mat ba_local = partial_trace(dec.b_a.matrix(), {0}, {2, 2});
        Mat diff = traced - ba_local;
        CHECK(max_abs(diff - diff(0, 0) * Mat::Identity(2, 2)) < 1e-10);
    }
    SUBCASE("random reconstruction residual") {
        std::mt19937_64 rng(71);
        auto b = HermitianOperator(oracles::random_hermitian(rng, 8), {2, 4});
        auto dec = b_general_decomposition(b, 2, 4);
        Mat rebuilt = dec.b_a.matrix() + dec.b_b.matrix() + dec.b_int.matrix() +
                      dec.identity_coefficient / 8.0 * Mat::Identity(8, 8);
        CHECK(max_abs(rebuilt - b.matrix()) < 1e-10);
    }
}

TEST_CASE("effective_system_hamiltonian") {
    const Mat sz = pauli_matrix(Axis::Z);
    SUBCASE("decoupled limit is the bare Hamiltonian plus a constant") {
        auto h_eff = effective_system_hamiltonian(
            HermitianOperator(sz, {2}), HermitianOperator(Mat::Zero(4, 4), {2, 2}),
            HermitianOperator(sz, {2}), 1.0);
        const double c = -std::log(2.0 * std::cosh(1.0));
        CHECK(max_abs(h_eff.matrix() - (sz + c * Mat::Identity(2, 2))) < 1e-10);
    }
    SUBCASE("dephasing coupling: first order matches the bath mean") {
        // H_I = eps sz x sz: the traceless part of beta (H_eff - H_s) is
        // beta eps <sz>_0 sz + O((beta eps)^2).
        const double beta = 0.8;
        const double mean = -std::tanh(beta);  // <sz> in the bath Gibbs state
        for (double eps : {1e-3, 3e-3, 1e-2}) {
            auto h_eff = effective_system_hamiltonian(
                HermitianOperator(sz, {2}),
                HermitianOperator(Mat(eps * kron(sz, sz)), {2, 2}),
                HermitianOperator(sz, {2}), beta);
            Mat dressing = beta * (h_eff.matrix() - sz);
            dressing -= 0.5 * dressing.trace() * Mat::Identity(2, 2);
            Mat expect = beta * eps * mean * sz;
            CHECK(max_abs(dressing - expect) < 5.0 * beta * beta * eps * eps);
        }
    }
    SUBCASE("swap coupling scales quadratically") {
        const double beta = 0.6;
        Mat swap = kron(sigma_plus(), sigma_minus()) + kron(sigma_minus(), sigma_plus());
        auto base = effective_system_hamiltonian(
            HermitianOperator(sz, {2}), HermitianOperator(Mat::Zero(4, 4), {2, 2}),
            HermitianOperator(sz, {2}), beta);
        std::vector<double> log_eps, log_dev;
        for (double eps : {1e-3, 2e-3, 4e-3, 8e-3}) {
            auto h_eff = effective_system_hamiltonian(
                HermitianOperator(sz, {2}), HermitianOperator(Mat(eps * swap), {2, 2}),
                HermitianOperator(sz, {2}), beta);
            const double dev = max_abs(h_eff.matrix() - base.matrix());
            log_eps.push_back(std::log(eps));
            log_dev.push_back(std::log(dev));
        }
        // least-squares slope
        double mx = 0, my = 0;
        for (size_t i = 0; i < log_eps.size(); ++i) {
            mx += log_eps[i];
            my += log_dev[i];
        }
        mx /= log_eps.size();
        my /= log_dev.size();
        double num = 0, den = 0;
        for (size_t i = 0; i < log_eps.size(); ++i) {
            num += (log_eps[i] - mx) * (log_dev[i] - my);
            den += (log_eps[i] - mx) * (log_eps[i] - mx);
        }
        CHECK(num / den == doctest::Approx(2.0).epsilon(0.025));
    }
}
