"""Acceptance criteria, one test each.

Every test prints a single ``[PASS]`` / ``[FAIL]`` line with the measured
numbers and the tolerance.  Run as a script (``python tests/test_acceptance.py``)
to get just the ten lines.
"""
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_state  # noqa: E402
from latentqde.arith import (  # noqa: E402
    apply_multiplier, build_adder, build_mod, build_subtractor, multiplier_layout, multiply_oracle,
)
from latentqde.encodings import gram_matrix, make_encoding  # noqa: E402
from latentqde.lse import solve_problem  # noqa: E402
from latentqde.model import DETermSpec, model_eval  # noqa: E402
from latentqde.presets import PRESETS, preset, shifted_linear  # noqa: E402
from latentqde.problem import Condition, FunctionRef, ProblemSpec  # noqa: E402
from latentqde.sim import (  # noqa: E402
    Circuit, Statevector, basis_state, inner_product, qft_circuit, state_preparation,
)
from latentqde.training import (  # noqa: E402
    Objective, TrainConfig, finite_difference_gradient, gradient, hadamard_test, train_seeds,
)

SEEDS = [0, 1, 2, 3, 4]


def report(criterion: int, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    print(line, file=sys.__stdout__, flush=True)
    return ok


def _runs(problem, **overrides):
    cfg = TrainConfig.from_overrides(problem.train_overrides, **overrides)
    return train_seeds(problem, cfg, SEEDS)


# ---------------------------------------------------------------------------
# 1-4: training experiments
# ---------------------------------------------------------------------------


def criterion_1():
    problem = preset("linear_damped")
    start = time.perf_counter()
    runs = _runs(problem)
    elapsed = time.perf_counter() - start
    best = min(runs, key=lambda r: r.metrics["rmse"])
    rmse, drmse = best.metrics["rmse"], best.metrics["derivative_rmse"]
    ok = rmse <= 5e-2 and drmse <= 2e-1 and elapsed <= 600
    return report(1, ok, f"linear damped best-of-5 RMSE={rmse:.3e} (<=5e-2), derivative "
                         f"RMSE={drmse:.3e} (<=2e-1), runtime={elapsed:.1f}s (<=600s)")


BUDGET = 30000  # epochs granted to both models


def criterion_2():
    """Epochs to total loss 0.1, shifted vs regular, censored at ``BUDGET``.

    A regular run that has not reached 0.1 within the budget counts as
    BUDGET + 1 epochs, which only overstates its speed; the per-pair ratio
    shifted / regular is then an upper bound on the true ratio.
    """
    shifted = _runs(shifted_linear(True), epochs=BUDGET, early_stop=0.1)
    regular = _runs(shifted_linear(False), epochs=BUDGET, early_stop=0.1)
    ratios, pairs = [], []
    for s, r in zip(shifted, regular):
        es, er = s.epochs_to(0.1), r.epochs_to(0.1)
        es_v = BUDGET + 1 if es is None else es
        er_v = BUDGET + 1 if er is None else er
        ratios.append(es_v / er_v)
        pairs.append(f"{'>' if es is None else ''}{es_v}/{'>' if er is None else ''}{er_v}")
    med = float(np.median(ratios))
    return report(2, med <= 1 / 3, f"epochs to loss 0.1 shifted/regular per seed "
                                   f"[{', '.join(pairs)}], median ratio={med:.3f} (<=1/3)")


def criterion_3():
    runs = _runs(preset("nonlinear_riccati"))
    best = min(runs, key=lambda r: r.metrics["rmse"])
    rmse = best.metrics["rmse"]
    below = best.epochs_to(1.0)
    ok = rmse <= 5e-2 and below is not None
    return report(3, ok, f"Riccati best-of-5 RMSE={rmse:.3e} (<=5e-2), total loss < 1 "
                         f"from epoch {below}")


def criterion_4():
    problem = preset("multidim_2d")
    runs = _runs(problem)
    g = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(g, g, indexing="ij")
    devs = [float(np.mean(np.abs(np.real(model_eval(r.model, X, Y)) - problem.analytic(X, Y))))
            for r in runs]
    best = min(devs)
    return report(4, best <= 1e-2, f"2D best-of-5 mean abs deviation={best:.3e} on 21x21 "
                                    f"(<=1e-2; stretch 1e-3 {'met' if best <= 1e-3 else 'missed'})")


# ---------------------------------------------------------------------------
# 5-10: property checks
# ---------------------------------------------------------------------------


def _register_value(state, qubits):
    idx = int(np.argmax(np.abs(state.amplitudes)))
    if abs(abs(state.amplitudes[idx]) - 1) > 1e-10:
        return None
    return sum(((idx >> q) & 1) << i for i, q in enumerate(qubits))


def criterion_5():
    worst = 0.0
    for family in ("chebyshev", "fourier"):
        for n in (1, 2, 3):
            rng = np.random.default_rng(100 * n + len(family))
            for _ in range(100):
                g = random_state(rng, n, real=family == "chebyshev")
                h = random_state(rng, n, real=family == "chebyshev")
                res = apply_multiplier(family, Statevector.from_vector(g),
                                       Statevector.from_vector(h))
                worst = max(worst, float(np.max(np.abs(res.coefficients()
                                                       - multiply_oracle(family, n, g, h)))))
    arith_ok, cases = True, 0
    for n in (1, 2, 3):
        lay = multiplier_layout(n)
        add, sub = build_adder(n), build_subtractor(n)
        mod = build_subtractor(n) + build_mod(n, 3 * n + 1)
        for j in range(1 << n):
            for k in range(1 << n):
                s = basis_state(3 * n + 1, (j << lay["g"][0]) | (k << lay["h"][0]))
                cases += 1
                arith_ok &= _register_value(add.run(s)[0], lay["result"]) == j + k
                arith_ok &= _register_value(sub.run(s)[0], lay["result"]) == (j - k) % (1 << (n + 1))
                r = mod.run(s)[0]
                arith_ok &= _register_value(r, lay["result"][:-1]) == abs(j - k)
                arith_ok &= _register_value(r, lay["result"][-1:]) == int(j < k)
    ok = worst <= 1e-10 and arith_ok
    return report(5, ok, f"gate-level multiplier vs oracle max diff={worst:.2e} (<=1e-10) over "
                         f"600 pairs; adder/subtractor/MOD exhaustive over {cases} inputs "
                         f"{'ok' if arith_ok else 'MISMATCH'}")


def criterion_6():
    worst1 = worst2 = 0.0
    for family in ("chebyshev", "fourier"):
        for n in (2, 3, 4):
            enc = make_encoding(family, n)
            G = enc.generator()
            lo, hi = enc.domain
            rng = np.random.default_rng(7 * n + len(family))
            for x in rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 50):
                h = 1e-5
                fd = (enc.amplitudes(x + h) - enc.amplitudes(x - h)) / (2 * h)
                worst1 = max(worst1, np.linalg.norm(G @ enc.amplitudes(x) - fd) / np.linalg.norm(fd))
                h = 1e-4
                fd2 = (enc.amplitudes(x + h) - 2 * enc.amplitudes(x) + enc.amplitudes(x - h)) / h**2
                worst2 = max(worst2, np.linalg.norm(G @ G @ enc.amplitudes(x) - fd2)
                             / np.linalg.norm(fd2))
                # second order acting on coefficients, (G^dagger)^2, decoded
                v = rng.normal(size=enc.dim) + (0j if family == "chebyshev" else 1j * rng.normal(size=enc.dim))
                d2 = enc.evaluate(np.linalg.matrix_power(G.conj().T, 2) @ v, np.array([x]))[0]
                f = lambda t: enc.evaluate(v, np.array([t]))[0]
                fd2v = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
                worst2 = max(worst2, abs(d2 - fd2v) / max(abs(fd2v), 1.0))
    ok = worst1 <= 1e-5 and worst2 <= 1e-4
    return report(6, ok, f"generator first-order rel err={worst1:.2e} (<=1e-5), second-order "
                         f"rel err={worst2:.2e} (<=1e-4), both families, N=2..4, 50 points")


def criterion_7():
    unit = gram = 0.0
    for n in (1, 2, 3, 4):
        q = qft_circuit(n).matrix()
        unit = max(unit, float(np.max(np.abs(q.conj().T @ q - np.eye(1 << n)))))
        for family in ("chebyshev", "fourier"):
            enc = make_encoding(family, n)
            U = enc.transform()
            unit = max(unit, float(np.max(np.abs(U.conj().T @ U - np.eye(enc.dim)))))
            gram = max(gram, float(np.max(np.abs(gram_matrix(enc) - np.eye(enc.dim)))))
    ok = unit <= 1e-12 and gram <= 1e-10
    return report(7, ok, f"transform/QFT unitarity residual={unit:.2e} (<=1e-12), "
                         f"Gram residual={gram:.2e} (<=1e-10), N<=4")


def criterion_8():
    rng = np.random.default_rng(8)
    prep = lambda v: Circuit(int(np.log2(v.size)), [state_preparation(v)])
    exact_err = 0.0
    for _ in range(20):
        a, b = random_state(rng, 3), random_state(rng, 3)
        ov = inner_product(Statevector.from_vector(a), Statevector.from_vector(b))
        exact_err = max(exact_err, abs(hadamard_test(prep(a), prep(b), "real") - ov.real),
                        abs(hadamard_test(prep(a), prep(b), "imaginary") - ov.imag))
    shots, gen, worst_sigma = 10**5, np.random.default_rng(88), 0.0
    for _ in range(20):
        a, b = random_state(rng, 2), random_state(rng, 2)
        for part in ("real", "imaginary"):
            ex = hadamard_test(prep(a), prep(b), part)
            est = hadamard_test(prep(a), prep(b), part, shots=shots, seed=gen)
            sigma = math.sqrt((1 - ex**2) / shots)
            worst_sigma = max(worst_sigma, abs(est - ex) / sigma if sigma > 0 else 0.0)
    ok = exact_err <= 1e-12 and worst_sigma <= 5
    return report(8, ok, f"Hadamard test exact err={exact_err:.1e} (<=1e-12); 1e5 shots worst "
                         f"deviation={worst_sigma:.2f} sigma (<=5) over 20 pairs")


def _lse_problem(terms, f0):
    return ProblemSpec("lse", ("chebyshev",), (4,), terms, initial=(Condition((0.0,), f0),),
                       mode="lse")


def criterion_9():
    x = np.linspace(-1, 1, 201)
    lin = _lse_problem((DETermSpec(1.0, 1, 1),
                        DETermSpec(-2.0, 0, 0, FunctionRef("constant", {"value": 1.0}))), 0.0)
    expo = _lse_problem((DETermSpec(1.0, 1, 1), DETermSpec(-1.0, 0, 1)), 1.0)
    s_lin, s_exp = solve_problem(lin), solve_problem(expo)
    e_lin = float(np.max(np.abs(s_lin(x) - 2 * x)))
    e_exp = float(np.max(np.abs(s_exp(x) - np.exp(x))))
    plug = max(sum(getattr(Objective(replace(p, mode="variational"), TrainConfig())
                           .breakdown_for(s.coefficients), k) for k in ("l_de", "l_init"))
               for p, s in ((lin, s_lin), (expo, s_exp)))
    ok = e_lin <= 1e-10 and e_exp <= 1e-8 and plug <= 1e-6
    return report(9, ok, f"LSE 2x sup err={e_lin:.1e} (<=1e-10), e^x sup err={e_exp:.1e} "
                         f"(<=1e-8), plugged l_de+l_init={plug:.1e} (<=1e-6)")


def criterion_10():
    worst, parts = 0.0, []
    for name in PRESETS:
        obj = Objective(preset(name), TrainConfig())
        rng = np.random.default_rng(10)
        w = 0.0
        for _ in range(10):
            params = obj.initial_params(int(rng.integers(1 << 30)))
            params[obj.n_theta:] += rng.normal(size=obj.num_params - obj.n_theta)
            g = gradient(obj, params)
            fd = finite_difference_gradient(obj, params)
            w = max(w, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
        parts.append(f"{name}={w:.1e}")
        worst = max(worst, w)
    return report(10, worst <= 1e-4, f"parameter shift vs finite differences max rel err "
                                      f"{', '.join(parts)} (<=1e-4)")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.slow
@pytest.mark.parametrize("check", CRITERIA[:4], ids=[f"criterion_{i}" for i in range(1, 5)])
def test_training_criterion(check):
    assert check()


@pytest.mark.parametrize("check", CRITERIA[4:], ids=[f"criterion_{i}" for i in range(5, 11)])
def test_property_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
