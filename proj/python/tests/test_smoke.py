"""Smoke tests for the python bindings; run via ctest."""

import math
import sys

import numpy as np

import gpassivity as gp


def check(name, ok):
    print(("PASS" if ok else "FAIL") + "  " + name)
    return ok


def main():
    ok = True
    sz = np.diag([1.0, -1.0]).astype(complex)

    rho = gp.gibbs_state(sz, 1.0)
    z = 2.0 * math.cosh(1.0)
    ok &= check("gibbs_state", abs(rho[1, 1].real - math.exp(1.0) / z) < 1e-12)

    mixed = np.eye(2, dtype=complex) / 2.0
    ok &= check("entropy", abs(gp.von_neumann_entropy(mixed) - math.log(2.0)) < 1e-12)

    b = gp.b_operator(rho)
    expect = sz + math.log(z) * np.eye(2)
    ok &= check("b_operator", np.abs(b - expect).max() < 1e-10)

    passive, _ = gp.is_passive(b, rho)
    ok &= check("is_passive", passive)

    d = gp.relative_entropy(mixed, rho)
    ok &= check("relative_entropy", d > 0.0)

    joint = np.kron(rho, mixed)
    reduced = gp.partial_trace(joint, [0], [2, 2])
    ok &= check("partial_trace", np.abs(reduced - rho).max() < 1e-12)

    times, states = gp.lindblad_evolve(
        rho, 0.0 * sz, [(np.array([[0, 0], [1, 0]], dtype=complex), 0.5)], 2.0, 0.01, [0.0, 2.0]
    )
    decay = states[-1][0, 0].real / rho[0, 0].real
    ok &= check("lindblad_decay", abs(decay - math.exp(-0.5 * 2.0)) < 1e-6)

    result = gp.run_scenario("lazy-demon", alpha_step=0.5)
    chi_crit = result["report"]["detection"]["chi_crit"]
    ok &= check("lazy_demon_chi_crit", abs(chi_crit - 0.56) < 0.05)

    csv = gp.scenario_csv("correlated-heat-flow", n_samples=11, t_max=1.0)
    ok &= check("scenario_csv", csv.startswith("time,") and len(csv.splitlines()) == 12)

    try:
        gp.b_operator(np.diag([1.0, 0.0]).astype(complex))
        ok &= check("singular_state_error", False)
    except gp.GpassivityError:
        ok &= check("singular_state_error", True)

    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
