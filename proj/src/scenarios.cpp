#include "gpassivity/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gpassivity {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) return {a};
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
    return out;
}

const double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

CorrelatedHeatFlowResult correlated_heat_flow(const CorrelatedHeatFlowParams& params) {
    const Mat sz = pauli_matrix(Axis::Z);
    const Mat sp = sigma_plus();
    const Mat sm = sigma_minus();
    const std::vector<int> dims = {2, 2};

    DensityMatrix rho0 = correlated_pair_state(params.beta_c, params.beta_h, params.c);

    Mat exchange;
    if (params.exchange_form == "rotation") {
        exchange = Cplx(0, 1) * (kron(sp, sm) - kron(sm, sp));
    } else if (params.exchange_form == "hopping") {
        exchange = kron(sp, sm) + kron(sm, sp);
    } else {
        throw Error("correlated_heat_flow: unknown exchange_form '" + params.exchange_form + "'");
    }
    const Mat h_c = embed_local(sz, 0, dims);
    const Mat h_h = embed_local(sz, 1, dims);
    Mat h_total = h_c + h_h + params.coupling * exchange;
    const Mat energy_comm = h_total * (h_c + h_h) - (h_c + h_h) * h_total;
    if (energy_comm.cwiseAbs().maxCoeff() > 1e-12)
        throw Error("correlated_heat_flow: exchange interaction is not energy conserving");

    SetupDescriptor setup;
    setup.subsystems.push_back({"cold", 2, sz, Role::System, std::nullopt});
    setup.subsystems.push_back({"hot", 2, sz, Role::Microbath, params.beta_h});
    setup.partition = {{0}, {1}};
    setup.explicit_initial_state = rho0;

    const std::vector<double> grid = linspace(0.0, params.t_max, params.n_samples);
    Trajectory traj = run_protocol(
        rho0, {UnitarySegment{HermitianOperator(h_total, dims), params.t_max}}, grid);

    CorrelatedHeatFlowResult out;
    out.params = params;
    out.times = traj.times;
    out.reports = ci_cci_report(setup, rho0, traj);

    const double e_c0 = expectation(rho0.matrix(), h_c);
    const double e_h0 = expectation(rho0.matrix(), h_h);
    out.min_ci = std::numeric_limits<double>::infinity();
    out.min_cci = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < traj.states.size(); ++i) {
        out.q_c.push_back(expectation(traj.states[i].matrix(), h_c) - e_c0);
        out.q_h.push_back(expectation(traj.states[i].matrix(), h_h) - e_h0);
        out.min_ci = std::min(out.min_ci, out.reports[i].ci_lhs);
        out.min_cci = std::min(out.min_cci, out.reports[i].cci_lhs);
        out.ci_violated = out.ci_violated || out.reports[i].ci_violated;
        out.cci_violated = out.cci_violated || out.reports[i].cci_violated;
    }
    return out;
}

HeatLeakResult heat_leak_detection(const HeatLeakParams& params) {
    const int n = 3;
    const std::vector<int> dims(n, 2);
    const Mat sz = pauli_matrix(Axis::Z);
    const Mat sx = pauli_matrix(Axis::X);
    const Mat id = Mat::Identity(2, 2);
    if (params.betas.size() != 3) throw Error("heat_leak_detection expects three betas");
    if (params.cnot_control_state != 0 && params.cnot_control_state != 1)
        throw Error("heat_leak_detection: cnot_control_state must be 0 or 1");

    SetupDescriptor setup;
    for (int q = 0; q < n; ++q)
        setup.subsystems.push_back(
            {"qubit" + std::to_string(q + 1), 2, sz, Role::Microbath, params.betas[q]});
    setup.partition = {{}, {0, 1, 2}};
    DensityMatrix rho0 = product_initial_state(setup, std::nullopt);

    // One CNOT generator per pair (control, target), both running at once.
    Mat ctrl = Mat::Zero(2, 2);
    ctrl(params.cnot_control_state, params.cnot_control_state) = 1.0;
    const Mat flip = id - sx;
    Mat h_cnot = params.epsilon * (M_PI / 2.0) *
                 (embed_on_factors(kron(ctrl, flip), {0, 1}, dims) +
                  embed_on_factors(kron(ctrl, flip), {1, 2}, dims));
    HermitianOperator hamiltonian(h_cnot, dims);

    HermitianOperator b = b_operator(rho0);
    std::optional<double> shift;
    if (params.b_shift == "min0")
        shift = -b.eig().eigenvalues.minCoeff();
    else if (params.b_shift != "none")
        throw Error("heat_leak_detection: b_shift must be 'none' or 'min0'");

    std::vector<JumpOperator> jumps;
    for (int q = 0; q < n; ++q)
        jumps.push_back({embed_local(sigma_minus(), q, dims), params.gamma});

    const std::vector<double> grid = linspace(0.0, params.t_max, params.n_samples);
    Trajectory traj = lindblad_evolve(rho0, hamiltonian, jumps, params.t_max, params.dt, grid);
    Trajectory control = lindblad_evolve(rho0, hamiltonian, {}, params.t_max, params.dt, grid);

    HermitianOperator b_used = shift ? alpha_power(b, 1.0, shift) : b;
    HeatLeakResult out;
    out.params = params;
    out.times = traj.times;
    out.alpha_series = alpha_gpi_series(b_used, traj, params.alphas);
    const auto control_series = alpha_gpi_series(b_used, control, params.alphas);

    out.control_clean = true;
    for (const auto& [alpha, series] : control_series)
        for (double v : series)
            if (v < -1e-8) out.control_clean = false;

    for (const auto& [alpha, series] : out.alpha_series) {
        std::optional<double> first;
        for (size_t i = 0; i < series.size(); ++i) {
            if (series[i] < -1e-8) {
                first = traj.times[i];
                break;
            }
        }
        if (first) out.any_violation = true;
        out.first_violation[alpha] = first;
    }

    out.polarization.resize(n);
    for (int q = 0; q < n; ++q) {
        const Mat sz_q = embed_local(sz, q, dims);
        for (size_t i = 0; i < traj.states.size(); ++i) {
            out.polarization[q].push_back(expectation(traj.states[i].matrix(), sz_q));
            if (traj.times[i] <= 3.0 + 1e-12) {
                const double dev = std::abs(out.polarization[q].back() -
                                            expectation(control.states[i].matrix(), sz_q));
                out.max_polarization_deviation = std::max(out.max_polarization_deviation, dev);
            }
        }
    }
    return out;
}

DephasingResult dephasing_bounds(const DephasingParams& params) {
    const int n = 4;  // env1, env2, env3, sys
    const std::vector<int> dims(n, 2);
    const Mat sz = pauli_matrix(Axis::Z);
    const Mat sx = pauli_matrix(Axis::X);
    if (params.xis.size() != 3) throw Error("dephasing_bounds expects three coupling strengths");

    SetupDescriptor setup;
    for (int q = 0; q < 3; ++q)
        setup.subsystems.push_back(
            {"env" + std::to_string(q + 1), 2, sz, Role::Microbath, params.beta});
    setup.subsystems.push_back({"sys", 2, sz, Role::System, std::nullopt});
    setup.partition = {{3}, {0, 1, 2}};

    DensityMatrix sys_state = gibbs_state(HermitianOperator(sx, {2}), params.beta_x);
    DensityMatrix rho0 = product_initial_state(setup, sys_state);

    Mat h_env = Mat::Zero(16, 16);
    for (int q = 0; q < 3; ++q) h_env += embed_local(sz, q, dims);
    const Mat h_sys = embed_local(sz, 3, dims);
    const Mat sx_sys = embed_local(sx, 3, dims);
    Mat h_int = Mat::Zero(16, 16);
    for (int q = 0; q < 3; ++q)
        h_int += params.xis[q] * embed_local(sz, q, dims) * h_sys;
    const Mat h_total = h_env + h_sys + h_int;

    const std::vector<double> grid = linspace(0.0, params.t_max, params.n_samples);
    Trajectory traj = run_protocol(
        rho0, {UnitarySegment{HermitianOperator(h_total, dims), params.t_max}}, grid);

    DephasingOperators ops;
    ops.h_env = HermitianOperator(h_env, dims);
    ops.h_sys = HermitianOperator(h_sys, dims);
    ops.sigma_x_sys = HermitianOperator(sx_sys, dims);
    ops.h_interaction = HermitianOperator(h_int, dims);
    ops.beta = params.beta;
    ops.beta_x = params.beta_x;

    DephasingResult out;
    out.params = params;
    out.bounds = dephasing_covariance_bounds(ops, traj);
    return out;
}

namespace {

struct DemonSetup {
    DensityMatrix rho0;
    DensityMatrix rho_t;       // after the unitary stage
    DensityMatrix rho_awake;   // after the chi = 1 feedback
    HermitianOperator b_used;  // shifted when requested
    std::vector<Mat> projectors;
    std::vector<Mat> unitaries;
};

DemonSetup build_demon(const LazyDemonParams& params) {
    const int n = 4;
    const std::vector<int> dims(n, 2);
    const Mat sz = pauli_matrix(Axis::Z);
    const Mat sp = sigma_plus();
    const Mat sm = sigma_minus();
    const double beta_c = 1.0 / params.t_c;
    const double beta_h = 1.0 / params.t_h;

    SetupDescriptor setup;
    for (int q = 0; q < n; ++q) {
        const bool cold = q < 2;
        setup.subsystems.push_back({std::string(cold ? "cold" : "hot") + std::to_string(q % 2 + 1),
                                    2, params.field_scale * sz, Role::Microbath,
                                    cold ? beta_c : beta_h});
    }
    setup.partition = {{}, {0, 1, 2, 3}};
    DensityMatrix rho0 = product_initial_state(setup, std::nullopt);

    Mat h = Mat::Zero(16, 16);
    for (int q = 0; q < n; ++q) h += params.field_scale * embed_local(sz, q, dims);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            h += embed_local(sp, i, dims) * embed_local(sm, j, dims) +
                 embed_local(sm, i, dims) * embed_local(sp, j, dims);

    const Mat u = unitary_from_hamiltonian(HermitianOperator(h, dims), params.t_evolve);
    DensityMatrix rho_t(Mat(u * rho0.matrix() * u.adjoint()), dims);

    // Flagged state: cold spins up, hot spins down -> flipped counterpart.
    const long flag = 0b0011;    // (up, up, down, down) with up = index 0
    const long target = 0b1100;  // (down, down, up, up)
    Mat swap = Mat::Identity(16, 16);
    swap(flag, flag) = 0;
    swap(target, target) = 0;
    swap(flag, target) = 1;
    swap(target, flag) = 1;

    std::vector<Mat> projectors;
    std::vector<Mat> unitaries;
    if (params.measurement == "two-projector") {
        Mat p0 = Mat::Zero(16, 16);
        p0(flag, flag) = 1.0;
        projectors = {p0, Mat(Mat::Identity(16, 16) - p0)};
        unitaries = {swap, Mat::Identity(16, 16)};
    } else if (params.measurement == "full-basis") {
        for (long k = 0; k < 16; ++k) {
            Mat pk = Mat::Zero(16, 16);
            pk(k, k) = 1.0;
            projectors.push_back(pk);
            unitaries.push_back(k == flag ? swap : Mat::Identity(16, 16));
        }
    } else {
        throw Error("lazy_demon: measurement must be 'two-projector' or 'full-basis'");
    }

    DemonSetup out{rho0, rho_t, lazy_feedback_channel(rho_t, projectors, unitaries, 1.0),
                   HermitianOperator(), projectors, unitaries};
    HermitianOperator b = b_operator(rho0);
    if (params.b_shift == "min0")
        out.b_used = alpha_power(b, 1.0, -b.eig().eigenvalues.minCoeff());
    else if (params.b_shift == "none")
        out.b_used = b;
    else
        throw Error("lazy_demon: b_shift must be 'none' or 'min0'");
    return out;
}

std::vector<double> alpha_grid(const LazyDemonParams& params) {
    std::vector<double> alphas;
    for (double a = params.alpha_min; a <= params.alpha_max + 1e-9; a += params.alpha_step)
        alphas.push_back(a);
    return alphas;
}

}  // namespace

LazyDemonResult lazy_demon_sweep(const LazyDemonParams& params) {
    const DemonSetup demon = build_demon(params);
    const std::vector<double> alphas = alpha_grid(params);
    const double thr = params.threshold;

    LazyDemonResult out;
    out.params = params;
    out.curve.alphas = alphas;
    out.curve.chi_crit = kNaN;
    out.chi_star_min = std::numeric_limits<double>::infinity();
    out.alpha_opt = kNaN;

    for (double alpha : alphas) {
        const Mat ba = alpha_power(demon.b_used, alpha).matrix();
        const double base = expectation(demon.rho0.matrix(), ba);
        const double d0 = expectation(demon.rho_t.matrix(), ba) - base;
        const double d1 = expectation(demon.rho_awake.matrix(), ba) - base;
        out.delta_chi0.push_back(d0);
        out.delta_chi1.push_back(d1);

        if (params.chi) {
            const double chi = *params.chi;
            if (chi < 0 || chi > 1) throw Error("lazy_demon: chi must lie in [0, 1]");
            const double d = (1.0 - chi) * d0 + chi * d1;
            out.delta_at_chi.push_back(d);
            if (d < -thr) out.any_violation = true;
        }

        // Delta(chi) is affine, so the first violating chi solves
        // (1 - chi) d0 + chi d1 = -thr exactly.
        double star = kNaN;
        if (d0 < -thr) {
            star = 0.0;
        } else if (d1 < -thr) {
            star = (d0 + thr) / (d0 - d1);
        }
        out.curve.chi_star.push_back(star);
        if (std::abs(alpha - 1.0) < 1e-9) out.curve.chi_crit = star;
        if (std::isfinite(star) && star < out.chi_star_min) {
            out.chi_star_min = star;
            out.alpha_opt = alpha;
        }
    }
    if (!params.chi) {
        for (double star : out.curve.chi_star)
            if (std::isfinite(star) && star <= 1.0) out.any_violation = true;
    }
    return out;
}

double lazy_demon_chi_scan(const LazyDemonParams& params, double alpha, double chi_resolution) {
    const DemonSetup demon = build_demon(params);
    const Mat ba = alpha_power(demon.b_used, alpha).matrix();
    const double base = expectation(demon.rho0.matrix(), ba);
    for (double chi = 0.0; chi <= 1.0 + 1e-12; chi += chi_resolution) {
        const double bounded = std::min(chi, 1.0);
        const DensityMatrix rho_f =
            lazy_feedback_channel(demon.rho_t, demon.projectors, demon.unitaries, bounded);
        const double d = expectation(rho_f.matrix(), ba) - base;
        if (d < -params.threshold) return bounded;
    }
    return kNaN;
}

}  // namespace gpassivity
