"""Losses, overlap estimation, gradients, Adam and the training loop."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .arith import evaluate_coefficients
from .errors import ConfigurationError, NumericalError, UsageError
from .mixture import MixtureState
from .model import Ansatz, DETermState, Model, model_coefficients, model_eval, unity_coefficients
from .problem import Condition, ProblemSpec
from .program import TermProgram, evaluation_rows
from .sim import Circuit, H, Sdg, Statevector, state_preparation

__all__ = [
    "LossBreakdown", "TrainConfig", "TrainingReport", "AdamState",
    "loss_de", "loss_init", "loss_data", "loss_boundary", "total_loss",
    "hadamard_test", "estimate_overlap", "Objective", "gradient", "finite_difference_gradient",
    "adam_step", "train", "train_seeds", "parse_overlap_mode", "solution_metrics",
]

SHIFT = math.pi / 2
_SHIFT_NORM = 1.0 / (2.0 * math.sqrt(2.0))  # dpsi = (psi(+pi/2) - psi(-pi/2)) / (2 sqrt 2)


# ---------------------------------------------------------------------------
# configuration and records
# ---------------------------------------------------------------------------


def parse_overlap_mode(mode) -> int | None:
    """'exact' -> None; 'shots:N' or an int -> N shots."""
    if mode is None or mode == "exact":
        return None
    if isinstance(mode, (int, np.integer)):
        shots = int(mode)
    else:
        text = str(mode)
        if not text.startswith("shots:"):
            raise ConfigurationError(f"overlap mode must be 'exact' or 'shots:N', got {mode!r}",
                                     field="overlap_mode")
        try:
            shots = int(text.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad shot count in {mode!r}", field="overlap_mode") from None
    if shots < 1:
        raise ConfigurationError("shot count must be positive", field="overlap_mode")
    return shots


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    epochs: int = 5000
    p: float = 0.5
    eta: float = 10.0
    zeta: float = 1.0
    seed: int = 0
    overlap_mode: str = "exact"
    early_stop: float = 1e-4

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be > 0", field="learning_rate")
        if not 0 < self.p <= 1:
            raise ConfigurationError("p must be in (0, 1]", field="p")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be >= 0", field="epochs")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ConfigurationError("Adam betas must be in [0, 1)", field="adam_beta1")
        parse_overlap_mode(self.overlap_mode)

    @property
    def shots(self) -> int | None:
        return parse_overlap_mode(self.overlap_mode)

    @classmethod
    def from_overrides(cls, overrides: dict, **kw) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        bad = set(overrides) - names
        if bad:
            raise ConfigurationError(f"unknown training keys {sorted(bad)}", field=f"train.{sorted(bad)[0]}")
        return cls(**{**overrides, **{k: v for k, v in kw.items() if v is not None}})


@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted loss parts; ``total`` applies p, eta and zeta."""

    l_de: float
    l_init: float
    l_data: float
    l_bc: float
    total: float
    epoch: int = 0


@dataclass
class TrainingReport:
    history: list
    best_params: np.ndarray
    best_loss: float
    model: Model
    wall_clock: float
    seed: int
    epochs_run: int
    metrics: dict = field(default_factory=dict)
    aborted: str | None = None

    def totals(self) -> np.ndarray:
        return np.array([h.total for h in self.history])

    def epochs_to(self, threshold: float) -> int | None:
        """First epoch whose total loss is below ``threshold`` (None if never)."""
        for h in self.history:
            if h.total < threshold:
                return h.epoch
        return None


# ---------------------------------------------------------------------------
# overlap estimation
# ---------------------------------------------------------------------------


def hadamard_test(prep_U: Circuit, prep_V: Circuit, part: str = "real",
                  shots: int | None = None, seed=None) -> float:
    """Estimate Re or Im of <0|U^dagger V|0> with one ancilla (the top qubit).

    The ancilla is put in |+>, controls V then U^dagger, gets S^dagger for
    the imaginary part, and is read out in the X basis.  ``shots=None``
    returns the exact expectation <X>.
    """
    if prep_U.num_qubits != prep_V.num_qubits:
        raise UsageError("hadamard test needs circuits on equal registers")
    if part not in ("real", "imaginary", "imag"):
        raise UsageError("part must be 'real' or 'imaginary'")
    n = prep_U.num_qubits
    anc = n
    c = Circuit(n + 1)
    c.append(H(anc))
    c.extend(prep_V.widened(n + 1).controlled(anc).elements)
    c.extend(prep_U.inverse().widened(n + 1).controlled(anc).elements)
    if part != "real":
        c.append(Sdg(anc))
    c.append(H(anc))
    out, _ = c.run(Statevector.from_vector(np.eye(1, 1 << (n + 1), 0).ravel()))
    probs = out.probabilities().reshape(2, -1).sum(axis=1)
    p0 = float(np.clip(probs[0], 0.0, 1.0))
    if shots is None:
        return 2.0 * p0 - 1.0
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    k = rng.binomial(int(shots), p0)
    return 2.0 * k / shots - 1.0


def _prep(vec: np.ndarray) -> Circuit:
    n = int(round(math.log2(vec.size)))
    return Circuit(n, [state_preparation(vec)])


def estimate_overlap(a: np.ndarray, b: np.ndarray, shots: int | None = None, rng=None,
                     need_imag: bool = True) -> complex:
    """<a|b> for unit vectors, exactly or from Hadamard tests."""
    if shots is None:
        return complex(np.vdot(a, b))
    ua, ub = _prep(a), _prep(b)
    re = hadamard_test(ua, ub, "real", shots, rng)
    im = hadamard_test(ua, ub, "imaginary", shots, rng) if need_imag else 0.0
    return complex(re, im)


def _split(vectors) -> list:
    """(coefficient, unit vector) pairs, dropping zero vectors."""
    out = []
    for v in vectors:
        nrm = float(np.linalg.norm(v))
        if nrm > 0.0:
            out.append((nrm, v / nrm))
    return out


def _pairwise(left: list, right: list, shots, rng, hermitian: bool) -> complex:
    """sum_ab conj(c_a) c_b <a|b> with overlaps exact or estimated."""
    total = 0j
    for i, (ca, a) in enumerate(left):
        for j, (cb, b) in enumerate(right):
            if hermitian and j < i:
                continue
            if hermitian and i == j:
                total += abs(ca) ** 2
                continue
            ov = estimate_overlap(a, b, shots, rng)
            val = np.conj(ca) * cb * ov
            total += 2.0 * val.real if hermitian else val
    return total


# ---------------------------------------------------------------------------
# loss functions
# ---------------------------------------------------------------------------


def _term_pieces(terms) -> list:
    pieces = []
    for t in terms:
        ms = t.state if isinstance(t, DETermState) else t
        if isinstance(ms, MixtureState):
            for c, s in ms.terms:
                pieces.append((c, s))
        else:
            raise UsageError("loss_de takes DETermState or MixtureState terms")
    return pieces


def loss_de(terms: Sequence, shots: int | None = None, seed=None) -> float:
    """|| sum_k |DE_k>> ||^2 from the pairwise overlaps of all term pieces."""
    pieces = _term_pieces(terms)
    widths = {s.num_qubits for _, s in pieces}
    if len(widths) > 1:
        raise UsageError(f"DE terms live on different registers: {sorted(widths)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = 0.0
    for i, (ca, a) in enumerate(pieces):
        total += abs(ca) ** 2 * a.norm() ** 2
        for cb, b in pieces[i + 1:]:
            if shots is None:
                ov = complex(np.vdot(a.amplitudes, b.amplitudes))
            else:
                ov = estimate_overlap(a.amplitudes, b.amplitudes, shots, rng)
            total += 2.0 * (np.conj(ca) * cb * ov).real
    return float(total)


def _model_values(m: Model, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.asarray(model_eval(m, *[pts[:, i] for i in range(pts.shape[1])]))


def loss_init(m: Model, x0, f0: float, eta: float = 1.0) -> float:
    """eta * |f(x0) - f0|^2."""
    v = _model_values(m, [np.atleast_1d(x0)])[0]
    return float(eta * abs(v - f0) ** 2)


def loss_data(m: Model, points: Sequence, zeta: float = 1.0) -> float:
    """zeta * sum_i |f(x_i) - f_i|^2 over (x_i, f_i) pairs or Condition objects."""
    if len(points) == 0:
        return 0.0
    conds = [c if isinstance(c, Condition) else Condition(c[0], c[1]) for c in points]
    vals = _model_values(m, [c.point for c in conds])
    return float(zeta * np.sum(np.abs(vals - np.array([c.value for c in conds])) ** 2))


def loss_boundary(m: Model, boundary: Sequence) -> float:
    """Sum of squared boundary residuals at the condition points."""
    return loss_data(m, boundary, 1.0)


def total_loss(parts: LossBreakdown | float, l_init: float = 0.0, l_data: float = 0.0,
               l_bc: float = 0.0, p: float = 0.5, eta: float = 10.0, zeta: float = 1.0) -> float:
    """(l_de)^p + eta (l_init + l_bc) + zeta l_data, with l_de clamped at 0."""
    if isinstance(parts, LossBreakdown):
        l_de, l_init, l_data, l_bc = parts.l_de, parts.l_init, parts.l_data, parts.l_bc
    else:
        l_de = float(parts)
    return max(l_de, 0.0) ** p + eta * (l_init + l_bc) + zeta * l_data


# ---------------------------------------------------------------------------
# objective: losses and parameter-shift gradients for one problem
# ---------------------------------------------------------------------------


class Objective:
    """Total loss of a problem as a function of [theta..., theta_s(, theta_sh)].

    DE-loss gradients for the RY angles come from states at theta +- pi/2
    (two-point shift rule) entering the overlaps with the residual; the
    scale and shift enter polynomially and are differentiated directly.
    """

    def __init__(self, problem: ProblemSpec, config: TrainConfig | None = None):
        self.problem = problem
        self.config = config or TrainConfig()
        self.encodings = problem.encodings()
        self.num_qubits = sum(problem.qubits)
        self.layers = problem.layers
        self.program = TermProgram(self.encodings, problem.terms)
        self.shifted = problem.shifted
        self.unity = unity_coefficients(self.encodings) if self.shifted else None
        self.n_theta = self.num_qubits * self.layers
        self.num_params = self.n_theta + 1 + (1 if self.shifted else 0)
        self._cond = {}
        for name, conds in (("init", problem.initial), ("bc", problem.boundary), ("data", problem.data)):
            if conds:
                rows = evaluation_rows(self.encodings, [c.point for c in conds])
                self._cond[name] = (rows, np.array([c.value for c in conds], dtype=complex))
        self.shots = self.config.shots

    # -- parameters ---------------------------------------------------------

    def initial_params(self, seed=None) -> np.ndarray:
        a = Ansatz.random(self.num_qubits, self.layers, seed)
        extra = [self.problem.init_scale] + ([self.problem.init_shift] if self.shifted else [])
        return np.concatenate([a.parameters, extra])

    def unpack(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape != (self.num_params,):
            raise UsageError(f"expected {self.num_params} parameters, got {params.shape}")
        theta = params[: self.n_theta]
        scale = params[self.n_theta]
        shift = params[self.n_theta + 1] if self.shifted else 0.0
        return theta, scale, shift

    def model(self, params) -> Model:
        theta, scale, shift = self.unpack(params)
        return Model(self.encodings, Ansatz(self.num_qubits, self.layers, theta), scale, shift,
                     self.shifted)

    def coefficients(self, params) -> tuple:
        theta, scale, shift = self.unpack(params)
        psi = kernels.ansatz_states(theta[None, :], self.num_qubits, self.layers)[0]
        f = scale * psi.astype(complex)
        if self.shifted:
            f = f + shift * self.unity
        return f, psi

    # -- losses ---------------------------------------------------------------

    def _cond_losses(self, f):
        out = {}
        for name in ("init", "bc", "data"):
            if name in self._cond:
                rows, tgt = self._cond[name]
                out[name] = float(np.sum(np.abs(rows @ f - tgt) ** 2))
            else:
                out[name] = 0.0
        return out

    def _l_de(self, f, rng) -> float:
        if self.shots is None:
            r = self.program.residual(f)
            return float(np.vdot(r, r).real)
        pieces = _split(self.program.term_vectors(f))
        return float(_pairwise(pieces, pieces, self.shots, rng, hermitian=True).real)

    def breakdown(self, params, epoch: int = 0, rng=None) -> LossBreakdown:
        f, _ = self.coefficients(params)
        return self._breakdown(f, self._l_de(f, rng), epoch)

    def _breakdown(self, f, l_de, epoch) -> LossBreakdown:
        c = self._cond_losses(f)
        cfg = self.config
        tot = total_loss(l_de, c["init"], c["data"], c["bc"], cfg.p, cfg.eta, cfg.zeta)
        return LossBreakdown(float(l_de), c["init"], c["data"], c["bc"], float(tot), epoch)

    def breakdown_for(self, f, epoch: int = 0, rng=None) -> LossBreakdown:
        """Loss parts for a fixed coefficient vector (e.g. a solved LSE)."""
        f = np.asarray(f, dtype=complex)
        return self._breakdown(f, self._l_de(f, rng), epoch)

    def __call__(self, params) -> float:
        return self.breakdown(params).total

    # -- gradients ----------------------------------------------------------

    def directions(self, params):
        """(B, d) derivative directions of the coefficient vector, one per parameter."""
        theta, scale, _ = self.unpack(params)
        f, psi = self.coefficients(params)
        plus, minus = self._shifted_states(theta)
        dirs = [scale * _SHIFT_NORM * (plus - minus), psi[None, :]]
        if self.shifted:
            dirs.append(self.unity[None, :])
        return f, np.concatenate(dirs).astype(complex), (plus, minus, psi)

    def _shifted_states(self, theta):
        P = self.n_theta
        batch = np.repeat(theta[None, :], 2 * P, axis=0)
        idx = np.arange(P)
        batch[idx, idx] += SHIFT
        batch[P + idx, idx] -= SHIFT
        states = kernels.ansatz_states(batch, self.num_qubits, self.layers)
        return states[:P], states[P:]

    def value_and_grad(self, params, epoch: int = 0, rng=None):
        cfg = self.config
        f, D, (plus, minus, psi) = self.directions(params)
        if self.shots is None:
            r = self.program.residual(f)
            l_de = float(np.vdot(r, r).real)
            dl_de = 2.0 * (self.program.jvp(f, D) @ r.conj()).real
        else:
            l_de, dl_de = self._shot_de_grad(params, f, plus, minus, psi, rng)
        parts = self._breakdown(f, l_de, epoch)
        # d(l_de^p) = p l_de^(p-1) dl_de; the floor only matters at an exact zero
        grad = cfg.p * max(l_de, 1e-30) ** (cfg.p - 1.0) * dl_de
        for name, w in (("init", cfg.eta), ("bc", cfg.eta), ("data", cfg.zeta)):
            if name in self._cond:
                rows, tgt = self._cond[name]
                res = rows @ f - tgt
                grad = grad + w * 2.0 * ((rows @ D.T).T @ res.conj()).real
        return parts, np.asarray(grad, dtype=float)

    def _shot_de_grad(self, params, f, plus, minus, psi, rng):
        """DE loss and gradient from estimated overlaps between the current
        term states and term states with one model factor replaced by a
        shifted ansatz state (or by psi / unity for the classical parameters)."""
        _, scale, _ = self.unpack(params)
        prog = self.program
        left = _split(prog.term_vectors(f))
        l_de = float(_pairwise(left, left, self.shots, rng, hermitian=True).real)
        groups = [(plus, scale * _SHIFT_NORM), (minus, -scale * _SHIFT_NORM), (psi[None, :], 1.0)]
        if self.shifted:
            groups.append((self.unity[None, :], 1.0))
        grads = np.zeros(self.num_params)
        offsets = [0, 0, self.n_theta, self.n_theta + 1]
        for gi, (V, w) in enumerate(groups):
            for k in range(len(prog.terms)):
                for batch in prog.term_substitutions(k, f, V):
                    for b, vec in enumerate(batch):
                        right = _split([w * vec])
                        val = _pairwise(left, right, self.shots, rng, hermitian=False)
                        grads[offsets[gi] + b] += 2.0 * val.real
        return l_de, grads

    def gradient(self, params, rng=None) -> np.ndarray:
        return self.value_and_grad(params, rng=rng)[1]


def gradient(objective: Objective | Callable, params, rng=None) -> np.ndarray:
    """Gradient of an :class:`Objective` (parameter shift), or of any plain
    callable (central finite differences)."""
    if isinstance(objective, Objective):
        return objective.gradient(params, rng)
    return finite_difference_gradient(objective, params)


def finite_difference_gradient(fn: Callable, params, h: float = 1e-6) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    g = np.empty_like(params)
    for i in range(params.size):
        e = np.zeros_like(params)
        e[i] = h
        g[i] = (fn(params + e) - fn(params - e)) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# optimizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def init(cls, params) -> "AdamState":
        p = np.asarray(params, dtype=float).copy()
        return cls(p, np.zeros_like(p), np.zeros_like(p), 0)


def adam_step(state: AdamState, grads, config: TrainConfig) -> tuple:
    grads = np.asarray(grads, dtype=float)
    if grads.shape != state.params.shape:
        raise UsageError("gradient and parameter shapes differ")
    t = state.t + 1
    m = config.adam_beta1 * state.m + (1 - config.adam_beta1) * grads
    v = config.adam_beta2 * state.v + (1 - config.adam_beta2) * grads * grads
    m_hat = m / (1 - config.adam_beta1 ** t)
    v_hat = v / (1 - config.adam_beta2 ** t)
    params = state.params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)
    return params, AdamState(params, m, v, t)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


def solution_metrics(problem: ProblemSpec, m: Model, points: int = 101) -> dict:
    """Error metrics of a model against the problem's analytic solution."""
    if problem.analytic is None:
        return {}
    grids = [np.linspace(*_plot_domain(e), points) for e in m.encodings]
    mesh = np.meshgrid(*grids, indexing="ij")
    pred = np.asarray(model_eval(m, *mesh))
    truth = problem.analytic(*mesh)
    err = np.abs(pred - truth)
    out = {"rmse": float(np.sqrt(np.mean(err ** 2))), "max_abs_error": float(err.max()),
           "mean_abs_error": float(err.mean())}
    dim = problem.ndim - 1
    try:
        dtruth = problem.analytic.derivative(dim)(*mesh)
    except ConfigurationError:
        return out
    from .model import derivative_state, model_state
    dpred = np.asarray(model_eval(derivative_state(model_state(m), m.encodings, 1, dim), *mesh,
                                  encodings=m.encodings))
    out["derivative_rmse"] = float(np.sqrt(np.mean(np.abs(dpred - dtruth) ** 2)))
    return out


def _plot_domain(enc):
    lo, hi = enc.domain
    return (lo, hi)


def train(problem: ProblemSpec, config: TrainConfig | None = None, params=None,
          callback: Callable | None = None) -> TrainingReport:
    """Adam on the total loss; deterministic for a given seed in exact mode."""
    if problem.mode != "variational":
        raise ConfigurationError("train() runs variational problems; use lse.solve_problem", field="mode")
    config = config or TrainConfig.from_overrides(problem.train_overrides)
    obj = Objective(problem, config)
    rng = np.random.default_rng([config.seed, 1])
    params = obj.initial_params(config.seed) if params is None else np.asarray(params, float)
    state = AdamState.init(params)
    history, best, best_params, aborted = [], math.inf, params.copy(), None
    start = time.perf_counter()
    epoch = 0
    for epoch in range(config.epochs + 1):
        # non-finite values are detected explicitly below
        with np.errstate(invalid="ignore", over="ignore"):
            parts, grad = obj.value_and_grad(state.params, epoch, rng)
        if not (math.isfinite(parts.total) and np.all(np.isfinite(grad))):
            aborted = f"non-finite loss or gradient at epoch {epoch}: {parts}"
            break
        history.append(parts)
        if parts.total < best:
            best, best_params = parts.total, state.params.copy()
        if callback is not None:
            callback(parts)
        if parts.total < config.early_stop or epoch == config.epochs:
            break
        _, state = adam_step(state, grad, config)
    elapsed = time.perf_counter() - start
    model = obj.model(best_params)
    with np.errstate(invalid="ignore", over="ignore"):
        metrics = solution_metrics(problem, model)
    report = TrainingReport(history, best_params, best, model, elapsed, config.seed,
                            len(history) - 1, metrics, aborted)
    if aborted is not None:
        raise NumericalError(aborted, report=report)
    return report


def _train_one(args):
    problem, config = args
    return train(problem, config)


def train_seeds(problem: ProblemSpec, config: TrainConfig, seeds: Sequence[int],
                processes: int | None = None) -> list:
    """Independent runs for several seeds, in parallel worker processes."""
    jobs = [(problem, replace(config, seed=int(s))) for s in seeds]
    workers = processes if processes is not None else min(len(jobs), os.cpu_count() or 1)
    if workers <= 1:
        return [_train_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_train_one, jobs))
