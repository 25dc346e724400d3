#include "gpassivity/passivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace gpassivity {

namespace {

// Probabilities of rho in the eigenbasis of A, with A-degenerate blocks
// resolved by diagonalizing rho inside each block. Returns (a_eigenvalue,
// rho_probability) pairs sorted by ascending a.
std::vector<std::pair<double, double>> joint_spectrum(const HermitianOperator& a,
                                                      const DensityMatrix& rho) {
    const EigenSystem& ea = a.eig();
    const Mat rho_in_a = ea.eigenvectors.adjoint() * rho.matrix() * ea.eigenvectors;
    const int d = a.dim();
    const double gap_tol = 1e-9 * std::max(1.0, ea.eigenvalues.cwiseAbs().maxCoeff());

    std::vector<std::pair<double, double>> out;
    int start = 0;
    while (start < d) {
        int stop = start + 1;
        while (stop < d && ea.eigenvalues[stop] - ea.eigenvalues[stop - 1] <= gap_tol) ++stop;
        const int len = stop - start;
        Eigen::SelfAdjointEigenSolver<Mat> block(rho_in_a.block(start, start, len, len));
        RVec p = block.eigenvalues();
        std::vector<double> probs(p.data(), p.data() + p.size());
        std::sort(probs.begin(), probs.end(), std::greater<>());  // descending within ties
        for (int k = 0; k < len; ++k) out.emplace_back(ea.eigenvalues[start + k], probs[k]);
        start = stop;
    }
    return out;
}

}  // namespace

PassivityCheck is_passive(const HermitianOperator& a, const DensityMatrix& rho, double tol) {
    if (a.dim() != rho.dim()) throw Error("is_passive: dimension mismatch");
    const Mat comm = a.matrix() * rho.matrix() - rho.matrix() * a.matrix();
    const double scale = operator_norm(a) * operator_norm(rho);
    if (comm.cwiseAbs().maxCoeff() > tol * std::max(scale, 1e-300))
        return {false, {-1, -1}};

    const auto pairs = joint_spectrum(a, rho);
    for (size_t i = 0; i + 1 < pairs.size(); ++i) {
        if (pairs[i + 1].second > pairs[i].second + tol)
            return {false, {static_cast<int>(i), static_cast<int>(i + 1)}};
    }
    return {true, {-1, -1}};
}

PassiveFloor passive_floor(const DensityMatrix& rho, const HermitianOperator& a) {
    if (a.dim() != rho.dim()) throw Error("passive_floor: dimension mismatch");
    const EigenSystem& ea = a.eig();  // ascending
    RVec p = rho.eig().eigenvalues;
    std::vector<double> probs(p.data(), p.data() + p.size());
    std::sort(probs.begin(), probs.end(), std::greater<>());

    Mat pass = Mat::Zero(a.dim(), a.dim());
    double floor = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        pass += probs[i] * (ea.eigenvectors.col(i) * ea.eigenvectors.col(i).adjoint());
        floor += probs[i] * ea.eigenvalues[i];
    }
    return {DensityMatrix(pass, rho.dims()), floor};
}

double ergotropy(const DensityMatrix& rho, const HermitianOperator& a) {
    return expectation(rho.matrix(), a.matrix()) - passive_floor(rho, a).floor;
}

double shifted_reference_bound(const DensityMatrix& rho0, const HermitianOperator& a) {
    return passive_floor(rho0, a).floor - expectation(rho0.matrix(), a.matrix());
}

double von_neumann_entropy(const DensityMatrix& rho) {
    const RVec& p = rho.eig().eigenvalues;
    double s = 0.0;
    for (int i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) s -= p[i] * std::log(p[i]);
    return s;
}

double relative_entropy(const DensityMatrix& rho2, const DensityMatrix& rho1) {
    if (rho2.dim() != rho1.dim()) throw Error("relative_entropy: dimension mismatch");
    const EigenSystem& e1 = rho1.eig();
    constexpr double support_tol = 1e-12;

    // Weight of rho2 outside the support of rho1 must vanish.
    double outside = 0.0;
    for (int i = 0; i < e1.eigenvalues.size(); ++i) {
        if (e1.eigenvalues[i] > support_tol) continue;
        const Eigen::VectorXcd v = e1.eigenvectors.col(i);
        outside += (v.adjoint() * rho2.matrix() * v).real()(0, 0);
    }
    if (outside > 1e-10)
        throw InfiniteDivergenceError("relative entropy diverges: support violation");

    double cross = 0.0;  // tr[rho2 ln rho1] over the support of rho1
    for (int i = 0; i < e1.eigenvalues.size(); ++i) {
        if (e1.eigenvalues[i] <= support_tol) continue;
        const Eigen::VectorXcd v = e1.eigenvectors.col(i);
        const double weight = (v.adjoint() * rho2.matrix() * v).real()(0, 0);
        cross += weight * std::log(e1.eigenvalues[i]);
    }
    return -von_neumann_entropy(rho2) - cross;
}

HermitianOperator alpha_power(const HermitianOperator& b, double alpha,
                              std::optional<double> shift) {
    if (alpha <= 0) throw Error("alpha_power: alpha must be positive");
    HermitianOperator base = b;
    if (shift && *shift != 0.0) {
        Mat shifted = b.matrix() + *shift * Mat::Identity(b.dim(), b.dim());
        base = HermitianOperator(shifted, b.dims());
    }
    const double min_eig = base.eig().eigenvalues.minCoeff();
    if (min_eig < -1e-10) {
        std::ostringstream msg;
        msg << "alpha_power: eigenvalue " << min_eig
            << " is negative; shift the operator so its spectrum is nonnegative";
        throw DomainError(msg.str(), min_eig);
    }
    return matrix_function(base, [alpha](double x) { return std::pow(x, alpha); },
                           FunctionDomain{0.0, false});
}

std::map<double, std::vector<double>> alpha_gpi_series(const HermitianOperator& b,
                                                       const Trajectory& trajectory,
                                                       const std::vector<double>& alphas) {
    if (trajectory.states.empty()) throw Error("alpha_gpi_series: empty trajectory");
    std::map<double, std::vector<double>> out;
    const Mat& rho0 = trajectory.initial().matrix();
    for (double alpha : alphas) {
        const Mat ba = alpha_power(b, alpha).matrix();
        std::vector<double> series;
        series.reserve(trajectory.states.size());
        const double base = expectation(rho0, ba);
        for (const auto& state : trajectory.states)
            series.push_back(expectation(state.matrix(), ba) - base);
        out[alpha] = std::move(series);
    }
    return out;
}

std::vector<double> hierarchy_chain(const HermitianOperator& b, const DensityMatrix& rho0,
                                    const DensityMatrix& rhof, int n_max) {
    const double norm = operator_norm(b);
    if (norm <= 0) throw Error("hierarchy_chain: zero operator");
    std::vector<double> chain;
    for (int n = 1; n <= n_max; ++n) {
        const Mat bn = alpha_power(b, static_cast<double>(n)).matrix();
        const double delta = expectation(rhof.matrix(), bn) - expectation(rho0.matrix(), bn);
        chain.push_back(delta / (n * std::pow(norm, n)));
    }
    return chain;
}

HierarchyCheck hierarchy_check(const HermitianOperator& b, const DensityMatrix& rho0,
                               const DensityMatrix& rhof, double p, double q, double tol) {
    if (!(p > q && q > 0)) throw Error("hierarchy_check requires p > q > 0");
    const double norm = operator_norm(b);
    auto normalized = [&](double expo) {
        const Mat be = alpha_power(b, expo).matrix();
        const double delta = expectation(rhof.matrix(), be) - expectation(rho0.matrix(), be);
        return delta / (expo * std::pow(norm, expo));
    };
    HierarchyCheck out;
    out.lhs = normalized(q);
    out.rhs = normalized(p);
    out.holds = out.lhs >= out.rhs - tol;
    return out;
}

bool flags_violation(double lhs, double running_scale) {
    return lhs < -1e-8 * std::max(1.0, running_scale);
}

std::vector<InequalityReport> ci_cci_report(const SetupDescriptor& setup,
                                            const DensityMatrix& rho0,
                                            const Trajectory& trajectory,
                                            const std::vector<double>& alphas) {
    setup.validate();
    const auto dims = setup.dims();
    const int n = static_cast<int>(dims.size());
    std::vector<int> sys = setup.partition.system;
    std::sort(sys.begin(), sys.end());
    const bool has_system = !sys.empty();

    const HermitianOperator b_tot = b_operator(rho0);
    std::optional<HermitianOperator> b_sys_emb;
    std::optional<DensityMatrix> rho0_sys;
    double s_sys_0 = 0.0;
    bool product_initial = false;
    if (has_system) {
        rho0_sys = DensityMatrix(partial_trace(rho0, sys));
        b_sys_emb = HermitianOperator(
            embed_on_factors(b_operator(*rho0_sys).matrix(), sys, dims), dims);
        s_sys_0 = von_neumann_entropy(*rho0_sys);
        std::vector<int> env = setup.partition.environment;
        std::sort(env.begin(), env.end());
        const Mat env_marginal = partial_trace(rho0, env).matrix();
        const Mat marginal_product = embed_on_factors(rho0_sys->matrix(), sys, dims) *
                                     embed_on_factors(env_marginal, env, dims);
        product_initial = (rho0.matrix() - marginal_product).cwiseAbs().maxCoeff() < 1e-12;
        // The CI == CCI degeneracy additionally needs thermal microbaths.
        if (product_initial) {
            Mat gibbs_env = Mat::Identity(1, 1);
            for (int q : env) {
                if (setup.subsystems[q].role != Role::Microbath) {
                    product_initial = false;
                    break;
                }
                HermitianOperator local(setup.subsystems[q].local_hamiltonian, {dims[q]});
                gibbs_env = kron(gibbs_env, gibbs_state(local, *setup.subsystems[q].beta).matrix());
            }
            if (product_initial &&
                (env_marginal - gibbs_env).cwiseAbs().maxCoeff() > 1e-12)
                product_initial = false;
        }
    }
    const double s_tot_0 = von_neumann_entropy(rho0);

    // Embedded microbath Hamiltonians and their betas.
    std::vector<Mat> bath_h;
    std::vector<double> bath_beta;
    for (int q = 0; q < n; ++q) {
        if (setup.subsystems[q].role != Role::Microbath) continue;
        bath_h.push_back(embed_on_factors(setup.subsystems[q].local_hamiltonian, {q}, dims));
        bath_beta.push_back(*setup.subsystems[q].beta);
    }
    std::vector<double> bath_e0;
    for (const auto& h : bath_h) bath_e0.push_back(expectation(rho0.matrix(), h));

    // Coupled-thermal bookkeeping (only when the setup declares a coupling).
    std::optional<HermitianOperator> h_s_eff_emb;
    std::optional<Mat> h_s_emb;
    double beta_h_coupled = 0.0;
    if (setup.initial_coupling && has_system && sys.size() == 1) {
        const int s = sys.front();
        // Identify the coupled bath from the coupling's environment support.
        for (int q = 0; q < n && !h_s_eff_emb; ++q) {
            if (setup.subsystems[q].role != Role::Microbath) continue;
            std::vector<int> others;
            for (int p = 0; p < n; ++p)
                if (p != s && p != q) others.push_back(p);
            Mat restricted =
                others.empty()
                    ? setup.initial_coupling->matrix()
                    : partial_trace(setup.initial_coupling->matrix(), {std::min(s, q), std::max(s, q)},
                                    dims) /
                          static_cast<double>(setup.total_dim() / (dims[s] * dims[q]));
            if (restricted.cwiseAbs().maxCoeff() < 1e-14) continue;
            // partial_trace keeps original factor order; reorder to
            // (system, bath) when the bath factor comes first.
            Mat coupling_sb = restricted;
            if (q < s) coupling_sb = embed_on_factors(restricted, {1, 0}, {dims[s], dims[q]});
            beta_h_coupled = *setup.subsystems[q].beta;
            HermitianOperator h_eff = effective_system_hamiltonian(
                HermitianOperator(setup.subsystems[s].local_hamiltonian, {dims[s]}),
                HermitianOperator(coupling_sb, {dims[s], dims[q]}),
                HermitianOperator(setup.subsystems[q].local_hamiltonian, {dims[q]}), beta_h_coupled);
            h_s_eff_emb = HermitianOperator(embed_on_factors(h_eff.matrix(), {s}, dims), dims);
            h_s_emb = embed_on_factors(setup.subsystems[s].local_hamiltonian, {s}, dims);
        }
    }

    std::vector<InequalityReport> reports;
    double scale_ci = 0.0, scale_cci = 0.0, scale_obs = 0.0;
    const double b_tot_0 = expectation(rho0.matrix(), b_tot.matrix());
    const double b_sys_0 = b_sys_emb ? expectation(rho0.matrix(), b_sys_emb->matrix()) : 0.0;

    std::map<double, Mat> alpha_ops;
    for (double alpha : alphas) alpha_ops[alpha] = alpha_power(b_tot, alpha).matrix();

    for (size_t idx = 0; idx < trajectory.states.size(); ++idx) {
        const DensityMatrix& rho_t = trajectory.states[idx];
        InequalityReport rep;
        rep.time = trajectory.times[idx];

        rep.delta_b_tot = expectation(rho_t.matrix(), b_tot.matrix()) - b_tot_0;
        rep.delta_s_tot = von_neumann_entropy(rho_t) - s_tot_0;
        rep.relative_entropy_tot = relative_entropy(rho_t, rho0);

        // Relative-entropy identity for the full setup.
        const double identity_residual =
            rep.delta_b_tot - rep.delta_s_tot - rep.relative_entropy_tot;
        if (std::abs(identity_residual) > 1e-9)
            throw Error("ci_cci_report: Delta<B> = dS + D identity violated beyond 1e-9");

        if (has_system) {
            DensityMatrix rho_t_sys(partial_trace(rho_t, sys));
            rep.delta_s_sys = von_neumann_entropy(rho_t_sys) - s_sys_0;
            rep.delta_b_sys = expectation(rho_t.matrix(), b_sys_emb->matrix()) - b_sys_0;
            rep.relative_entropy_sys = relative_entropy(rho_t_sys, *rho0_sys);
        }

        double beta_q_sum = 0.0;
        for (size_t k = 0; k < bath_h.size(); ++k) {
            const double q_k = expectation(rho_t.matrix(), bath_h[k]) - bath_e0[k];
            rep.beta_q.push_back(bath_beta[k] * q_k);
            beta_q_sum += bath_beta[k] * q_k;
        }

        rep.ci_lhs = rep.delta_s_sys + beta_q_sum;
        rep.obs_only_lhs = rep.delta_b_sys + beta_q_sum;
        rep.cci_lhs = rep.delta_s_sys + rep.delta_b_tot - rep.delta_b_sys;
        if (product_initial && std::abs(rep.ci_lhs - rep.cci_lhs) > 1e-9)
            throw Error("ci_cci_report: CI and CCI must coincide for product initial states");

        if (h_s_eff_emb) {
            CoupledTerms terms;
            terms.bare_beta_q = beta_q_sum;
            terms.coupling_energy =
                beta_h_coupled * (expectation(rho_t.matrix(), setup.initial_coupling->matrix()) -
                                  expectation(rho0.matrix(), setup.initial_coupling->matrix()));
            const Mat dressing_op = *h_s_emb - h_s_eff_emb->matrix();
            terms.dressing = beta_h_coupled * (expectation(rho_t.matrix(), dressing_op) -
                                               expectation(rho0.matrix(), dressing_op));
            rep.coupled_terms = terms;
        }

        for (const auto& [alpha, op] : alpha_ops)
            rep.alpha_deltas[alpha] =
                expectation(rho_t.matrix(), op) - expectation(rho0.matrix(), op);

        scale_ci = std::max(scale_ci, std::abs(rep.ci_lhs));
        scale_cci = std::max(scale_cci, std::abs(rep.cci_lhs));
        scale_obs = std::max(scale_obs, std::abs(rep.obs_only_lhs));
        rep.ci_violated = flags_violation(rep.ci_lhs, scale_ci);
        rep.cci_violated = flags_violation(rep.cci_lhs, scale_cci);
        rep.obs_only_violated = flags_violation(rep.obs_only_lhs, scale_obs);

        reports.push_back(std::move(rep));
    }
    return reports;
}

DephasingBounds dephasing_covariance_bounds(const DephasingOperators& ops,
                                            const Trajectory& trajectory) {
    const double beta = ops.beta;
    const double beta_x = ops.beta_x;
    if (beta <= 0 || beta_x <= 0)
        throw Error("dephasing_covariance_bounds: beta and beta_x must be positive");

    auto commutes = [](const Mat& a, const Mat& b) {
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());
        return (a * b - b * a).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    };
    if (!commutes(ops.h_interaction.matrix(), ops.h_sys.matrix()) ||
        !commutes(ops.h_interaction.matrix(), ops.h_env.matrix()))
        throw Error("dephasing_covariance_bounds: interaction is not dephasing "
                    "([H_I, H_sys] and [H_I, H_env] must vanish)");

    const long d = ops.h_env.dim();
    const Mat id = Mat::Identity(d, d);
    const double e0 = ops.h_env.eig().eigenvalues.minCoeff();
    const Mat h_shift = ops.h_env.matrix() - e0 * id;         // >= 0
    const Mat sx = ops.sigma_x_sys.matrix();
    const Mat s_hat = sx + id;                                 // s_hat^2 = 2 s_hat
    if ((s_hat * s_hat - 2.0 * s_hat).cwiseAbs().maxCoeff() > 1e-10)
        throw Error("dephasing_covariance_bounds: sigma_x + I is not idempotent up to scale");

    const DensityMatrix& rho0 = trajectory.initial();
    const double e_bar = expectation(rho0.matrix(), ops.h_env.matrix());
    const double h_bar = e_bar - e0;
    const Mat p_op = beta * beta * (h_shift * h_shift) + 2.0 * beta * beta_x * h_shift;
    const double p_bar = expectation(rho0.matrix(), p_op);
    const double sx_0 = expectation(rho0.matrix(), sx);
    const double c0 = -((4.0 / 3.0) * beta_x * beta_x + p_bar);

    // Pi-pulse reference: same operator with sigma_x -> -sigma_x.
    const Mat s_hat_flip = 2.0 * id - s_hat;
    const Mat b_flip = beta * h_shift + beta_x * s_hat_flip;
    HermitianOperator b_flip_op(b_flip, ops.h_env.dims());
    const Mat b_flip_2 = alpha_power(b_flip_op, 2.0).matrix();
    const Mat b_flip_3 = alpha_power(b_flip_op, 3.0).matrix();
    const double r2 = shifted_reference_bound(rho0, HermitianOperator(b_flip_2, ops.h_env.dims()));
    const double r3 = shifted_reference_bound(rho0, HermitianOperator(b_flip_3, ops.h_env.dims()));

    DephasingBounds out;
    out.c0 = c0;
    out.var_h_env = expectation(rho0.matrix(), Mat(ops.h_env.matrix() * ops.h_env.matrix())) -
                    e_bar * e_bar;
    out.var_p = expectation(rho0.matrix(), Mat(p_op * p_op)) - p_bar * p_bar;

    for (size_t idx = 0; idx < trajectory.states.size(); ++idx) {
        const Mat& rho_t = trajectory.states[idx].matrix();
        const double e_t = expectation(rho_t, ops.h_env.matrix());
        if (std::abs(e_t - e_bar) > 1e-10)
            throw Error("dephasing_covariance_bounds: <H_env> is not conserved");
        const double sx_t = expectation(rho_t, sx);
        const double d_sx = sx_t - sx_0;

        const double cov_1 = expectation(rho_t, Mat(ops.h_env.matrix() * sx)) - e_bar * sx_t;
        const double lower_1 = -(h_bar + beta_x / beta) * d_sx;
        const double upper_1 = lower_1 - r2 / (2.0 * beta * beta_x);

        const double cov_2 = expectation(rho_t, Mat(p_op * sx)) - p_bar * sx_t;
        const double lower_2 = c0 * d_sx;
        const double upper_2 = lower_2 - r3 / (3.0 * beta_x);

        out.times.push_back(trajectory.times[idx]);
        out.corr_1.push_back(cov_1);
        out.lower_1.push_back(lower_1);
        out.upper_1.push_back(upper_1);
        out.corr_2.push_back(cov_2);
        out.lower_2.push_back(lower_2);
        out.upper_2.push_back(upper_2);
        out.var_sigma_x.push_back(expectation(rho_t, Mat(sx * sx)) - sx_t * sx_t);

        if (cov_1 < lower_1 - 1e-9 || cov_1 > upper_1 + 1e-9 || cov_2 < lower_2 - 1e-9 ||
            cov_2 > upper_2 + 1e-9)
            throw Error("dephasing_covariance_bounds: sandwich violated (theorem failure)");
    }
    return out;
}

DressingTerms dephasing_dressing_term(const HermitianOperator& hs_factor,
                                      const HermitianOperator& hb_factor,
                                      const HermitianOperator& h_b, double beta, double epsilon) {
    if (hb_factor.dim() != h_b.dim())
        throw Error("dephasing_dressing_term: bath operator dimensions differ");
    const Mat comm = hb_factor.matrix() * h_b.matrix() - h_b.matrix() * hb_factor.matrix();
    if (comm.cwiseAbs().maxCoeff() > 1e-10)
        throw Error("dephasing_dressing_term: [Hb, h_b] must vanish");

    // Gibbs weight of the bath, unnormalized: W = exp(-beta h_b).
    const EigenSystem& eb = h_b.eig();
    RVec w(eb.eigenvalues.size());
    for (int i = 0; i < w.size(); ++i) w[i] = std::exp(-beta * eb.eigenvalues[i]);
    const Mat weight = eb.eigenvectors * w.asDiagonal() * eb.eigenvectors.adjoint();
    const double z_b0 = w.sum();

    // f(x) = tr[W exp(x Hb)]; either as the moment series or directly.
    const double hb_norm = operator_norm(hb_factor);
    const double hs_norm = operator_norm(hs_factor);
    const double arg_scale = std::abs(beta * epsilon) * hs_norm * hb_norm;
    const bool series_ok = arg_scale < 1.0;

    std::vector<double> moments;  // tr[W Hb^n]
    if (series_ok) {
        Mat power = Mat::Identity(h_b.dim(), h_b.dim());
        double term_scale = 1.0;
        for (int n = 0; n <= 200; ++n) {
            moments.push_back((weight * power).trace().real());
            power = (power * hb_factor.matrix()).eval();
            term_scale *= arg_scale / std::max(1, n + 1);
            if (n > 2 && term_scale * z_b0 < 1e-18) break;
        }
    }
    auto f_of = [&](double x) {
        if (series_ok) {
            double acc = 0.0, xn = 1.0, fact = 1.0;
            for (size_t n = 0; n < moments.size(); ++n) {
                acc += moments[n] * xn / fact;
                xn *= x;
                fact *= static_cast<double>(n + 1);
            }
            return acc;
        }
        Mat expm = Mat::Zero(h_b.dim(), h_b.dim());
        const EigenSystem& eh = hb_factor.eig();
        RVec e(eh.eigenvalues.size());
        for (int i = 0; i < e.size(); ++i) e[i] = std::exp(x * eh.eigenvalues[i]);
        expm = eh.eigenvectors * e.asDiagonal() * eh.eigenvectors.adjoint();
        return (weight * expm).trace().real();
    };

    HermitianOperator exact = matrix_function(
        hs_factor, [&](double lambda) { return std::log(f_of(-beta * epsilon * lambda)); });

    const double hb_mean = moments.empty() ? (weight * hb_factor.matrix()).trace().real() / z_b0
                                           : moments[1] / z_b0;
    Mat first = std::log(z_b0) * Mat::Identity(hs_factor.dim(), hs_factor.dim()) -
                beta * epsilon * hb_mean * hs_factor.matrix();

    DressingTerms out;
    out.exact = exact;
    out.first_order = HermitianOperator(first, hs_factor.dims());
    out.used_series = series_ok;
    return out;
}

}  // namespace gpassivity
