#include "gpassivity/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gpassivity {

UnitaryMixture UnitaryMixture::from_hamiltonians(
    const std::vector<std::tuple<double, HermitianOperator, double>>& branches) {
    UnitaryMixture mix;
    for (const auto& [p, h, t] : branches)
        mix.branches.emplace_back(p, unitary_from_hamiltonian(h, t));
    return mix;
}

DensityMatrix apply_unitary_mixture(const DensityMatrix& rho,
                                    const std::vector<std::pair<double, Mat>>& branches) {
    if (branches.empty()) throw Error("unitary mixture needs at least one branch");
    double total_p = 0.0;
    for (const auto& [p, u] : branches) {
        if (p < 0) throw Error("mixture probabilities must be nonnegative");
        if (!is_unitary(u, 1e-10)) throw Error("mixture branch is not unitary");
        total_p += p;
    }
    if (std::abs(total_p - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "mixture probabilities sum to " << total_p << ", expected 1";
        throw Error(msg.str());
    }
    Mat out = Mat::Zero(rho.dim(), rho.dim());
    for (const auto& [p, u] : branches) out += p * u * rho.matrix() * u.adjoint();
    return DensityMatrix(out, rho.dims());
}

namespace {

struct LindbladRhs {
    const Mat& h;
    std::vector<Mat> ls;       // sqrt(rate) * L
    std::vector<Mat> ldl_half; // (L^dag L) * rate / 2

    explicit LindbladRhs(const Mat& hamiltonian, const std::vector<JumpOperator>& jumps)
        : h(hamiltonian) {
        for (const auto& j : jumps) {
            if (j.rate < 0) throw Error("jump rates must be >= 0");
            if (j.rate == 0) continue;
            ls.push_back(std::sqrt(j.rate) * j.op);
            ldl_half.push_back(0.5 * j.rate * (j.op.adjoint() * j.op));
        }
    }

    Mat operator()(const Mat& rho) const {
        Mat out = Cplx(0, -1) * (h * rho - rho * h);
        for (size_t k = 0; k < ls.size(); ++k)
            out += ls[k] * rho * ls[k].adjoint() - ldl_half[k] * rho - rho * ldl_half[k];
        return out;
    }
};

Mat rk4_step(const LindbladRhs& rhs, const Mat& rho, double dt) {
    const Mat k1 = rhs(rho);
    const Mat k2 = rhs(rho + 0.5 * dt * k1);
    const Mat k3 = rhs(rho + 0.5 * dt * k2);
    const Mat k4 = rhs(rho + dt * k3);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory lindblad_evolve(const DensityMatrix& rho, const HermitianOperator& h,
                           const std::vector<JumpOperator>& jumps, double t_final, double dt,
                           std::vector<double> sample_times) {
    if (dt <= 0) throw Error("lindblad_evolve: dt must be positive");
    if (t_final < 0) throw Error("lindblad_evolve: negative duration");

    double scale = operator_norm(h);
    for (const auto& j : jumps) {
        HermitianOperator ldl(Mat(j.op.adjoint() * j.op), h.dims());
        scale += j.rate * operator_norm(ldl);
    }
    if (dt * scale > 0.1) {
        std::ostringstream msg;
        msg << "lindblad_evolve stability guard: dt * (|H| + sum gamma |L^dag L|) = "
            << dt * scale << " exceeds 0.1";
        throw IntegratorError(msg.str());
    }

    if (sample_times.empty()) {
        sample_times = {0.0, t_final};
    } else {
        std::sort(sample_times.begin(), sample_times.end());
        sample_times.erase(std::unique(sample_times.begin(), sample_times.end()),
                           sample_times.end());
        if (sample_times.front() < -1e-15 || sample_times.back() > t_final + 1e-12)
            throw Error("lindblad_evolve: sample time outside [0, T]");
    }

    LindbladRhs rhs(h.matrix(), jumps);
    Trajectory traj;
    Mat state = rho.matrix();
    double t = 0.0;
    size_t next = 0;
    auto record = [&](double at) {
        traj.times.push_back(at);
        traj.states.emplace_back(state, rho.dims());
    };
    while (next < sample_times.size() && sample_times[next] <= 1e-15) {
        record(0.0);
        ++next;
    }
    while (next < sample_times.size()) {
        const double target = sample_times[next];
        while (t < target - 1e-12) {
            const double step = std::min(dt, target - t);
            state = rk4_step(rhs, state, step);
            t += step;
        }
        record(target);
        ++next;
    }
    const double drift = std::abs(state.trace().real() - 1.0);
    if (drift > 1e-8) {
        std::ostringstream msg;
        msg << "lindblad_evolve: trace drifted by " << drift << " (limit 1e-8)";
        throw IntegratorError(msg.str());
    }
    return traj;
}

DensityMatrix lazy_feedback_channel(const DensityMatrix& rho, const std::vector<Mat>& projectors,
                                    const std::vector<Mat>& unitaries, double chi) {
    if (chi < 0 || chi > 1) throw Error("lazy_feedback_channel: chi must lie in [0, 1]");
    if (projectors.empty() || projectors.size() != unitaries.size())
        throw Error("lazy_feedback_channel: one conditional unitary per projector");
    Mat proj_sum = Mat::Zero(rho.dim(), rho.dim());
    for (size_t k = 0; k < projectors.size(); ++k) {
        const Mat& p = projectors[k];
        if (p.rows() != rho.dim()) throw Error("projector dimension mismatch");
        if ((p - p.adjoint()).cwiseAbs().maxCoeff() > 1e-10 ||
            (p * p - p).cwiseAbs().maxCoeff() > 1e-10)
            throw Error("projectors must be Hermitian and idempotent");
        if (!is_unitary(unitaries[k], 1e-10)) throw Error("conditional operation is not unitary");
        proj_sum += p;
    }
    if ((proj_sum - Mat::Identity(rho.dim(), rho.dim())).cwiseAbs().maxCoeff() > 1e-10)
        throw Error("projectors must sum to identity");

    Mat awake = Mat::Zero(rho.dim(), rho.dim());
    for (size_t k = 0; k < projectors.size(); ++k) {
        const Mat projected = projectors[k] * rho.matrix() * projectors[k];
        awake += unitaries[k] * projected * unitaries[k].adjoint();
    }
    Mat out = (1.0 - chi) * rho.matrix() + chi * awake;
    return DensityMatrix(out, rho.dims());
}

Trajectory run_protocol(const DensityMatrix& rho0, const std::vector<ProtocolStep>& steps,
                        const std::vector<double>& sample_grid) {
    std::vector<double> grid = sample_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    Trajectory traj;
    DensityMatrix state = rho0;
    double t = 0.0;
    size_t next = 0;
    auto record = [&](double at) {
        traj.times.push_back(at);
        traj.states.push_back(state);
    };
    // Grid points at the current time sample the state after every step that
    // completes there, so instantaneous channels settle before recording.
    auto settle = [&] {
        while (next < grid.size() && grid[next] <= t + 1e-12) {
            record(grid[next]);
            ++next;
        }
    };

    for (const auto& step : steps) {
        if (const auto* seg = std::get_if<UnitarySegment>(&step)) {
            settle();
            const double end = t + seg->duration;
            const DensityMatrix at_start = state;
            while (next < grid.size() && grid[next] < end - 1e-12) {
                Mat u = unitary_from_hamiltonian(seg->hamiltonian, grid[next] - t);
                state = DensityMatrix(Mat(u * at_start.matrix() * u.adjoint()), state.dims());
                record(grid[next]);
                ++next;
            }
            Mat u = unitary_from_hamiltonian(seg->hamiltonian, seg->duration);
            state = DensityMatrix(Mat(u * at_start.matrix() * u.adjoint()), at_start.dims());
            t = end;
        } else if (const auto* mix = std::get_if<UnitaryMixture>(&step)) {
            state = apply_unitary_mixture(state, mix->branches);
        } else if (const auto* lind = std::get_if<LindbladSegment>(&step)) {
            settle();
            std::vector<double> local;
            while (next < grid.size() && grid[next] < t + lind->duration - 1e-12) {
                local.push_back(grid[next] - t);
                ++next;
            }
            local.push_back(lind->duration);
            Trajectory sub =
                lindblad_evolve(state, lind->hamiltonian, lind->jumps, lind->duration, lind->dt, local);
            for (size_t k = 0; k + 1 < sub.times.size(); ++k) {
                state = sub.states[k];
                record(t + sub.times[k]);
            }
            state = sub.states.back();
            t += lind->duration;
        } else if (const auto* fb = std::get_if<LazyFeedback>(&step)) {
            state = lazy_feedback_channel(state, fb->projectors, fb->unitaries, fb->chi);
        }
    }
    settle();
    if (traj.times.empty() || traj.times.back() < t - 1e-12) record(t);
    return traj;
}

DensityMatrix pi_pulse(const DensityMatrix& rho, int site, Axis axis) {
    // exp(-i pi sigma/2) = -i sigma; the global phase cancels in conjugation.
    Mat u = embed_local(pauli_matrix(axis), site, rho.dims());
    return DensityMatrix(Mat(u * rho.matrix() * u.adjoint()), rho.dims());
}

}  // namespace gpassivity
