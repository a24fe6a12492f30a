"""Problem descriptions: DE terms, conditions, named functions, TOML round-trip."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .encodings import CHEBYSHEV, FOURIER, make_encoding
from .errors import ConfigurationError
from .model import DETermSpec
from .sim import MAX_QUBITS

FORMAT_VERSION = 1
MODES = ("variational", "lse")

__all__ = [
    "FORMAT_VERSION", "FunctionRef", "register_function", "FUNCTIONS", "Condition",
    "ProblemSpec", "load_problem", "dump_problem", "problem_from_dict", "problem_to_dict",
]


# ---------------------------------------------------------------------------
# named functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _FunctionDef:
    build: Callable          # params -> f(*xs)
    gradient: Callable | None = None  # params -> (dim -> df/dx_dim(*xs))
    ndim: int | None = None  # None: any


FUNCTIONS: dict[str, _FunctionDef] = {}


def register_function(name: str, build: Callable, gradient: Callable | None = None,
                      ndim: int | None = None):
    FUNCTIONS[name] = _FunctionDef(build, gradient, ndim)


def _const(p):
    v = float(p.get("value", 1.0))
    return lambda *xs: v * np.ones(np.broadcast(*xs).shape) if xs else v


def _const_grad(p):
    return lambda dim: (lambda *xs: np.zeros(np.broadcast(*xs).shape))


def _poly(p):
    c = [float(v) for v in p["coefficients"]]
    return lambda x: np.polynomial.polynomial.polyval(x, c)


def _poly_grad(p):
    c = np.polynomial.polynomial.polyder([float(v) for v in p["coefficients"]])
    return lambda dim: (lambda x: np.polynomial.polynomial.polyval(x, c))


def _poly2d(p):
    c = np.array(p["coefficients"], dtype=float)
    return lambda x, y: np.polynomial.polynomial.polyval2d(x, y, c)


def _poly2d_grad(p):
    c = np.array(p["coefficients"], dtype=float)

    def grad(dim):
        d = np.polynomial.polynomial.polyder(c, axis=dim)
        return lambda x, y: np.polynomial.polynomial.polyval2d(x, y, d)
    return grad


def _damped_cos(p):
    k, lam = float(p.get("kappa", 1.0)), float(p.get("lam", 2 * math.pi))
    return lambda x: np.exp(-k * x) * np.cos(lam * x)


def _damped_cos_grad(p):
    k, lam = float(p.get("kappa", 1.0)), float(p.get("lam", 2 * math.pi))
    return lambda dim: (lambda x: -np.exp(-k * x) * (k * np.cos(lam * x) + lam * np.sin(lam * x)))


def _damped_forcing(p):
    # minus the derivative of exp(-kx) cos(lx)
    k, lam = float(p.get("kappa", 1.0)), float(p.get("lam", 2 * math.pi))
    return lambda x: np.exp(-k * x) * (k * np.cos(lam * x) + lam * np.sin(lam * x))


def _damped_forcing_grad(p):
    k, lam = float(p.get("kappa", 1.0)), float(p.get("lam", 2 * math.pi))
    return lambda dim: (lambda x: np.exp(-k * x) * ((lam * lam - k * k) * np.cos(lam * x)
                                                    - 2 * k * lam * np.sin(lam * x)))


def _exp_offset(p):
    a, r, o = float(p.get("amplitude", 1.0)), float(p.get("rate", 1.0)), float(p.get("offset", 0.0))
    return lambda x: o + a * np.exp(r * x)


def _exp_offset_grad(p):
    a, r = float(p.get("amplitude", 1.0)), float(p.get("rate", 1.0))
    return lambda dim: (lambda x: a * r * np.exp(r * x))


def _reciprocal(p):
    a, s = float(p.get("pole", 2.0)), float(p.get("scale", 1.0))
    return lambda x: s / (a - x)


def _reciprocal_grad(p):
    a, s = float(p.get("pole", 2.0)), float(p.get("scale", 1.0))
    return lambda dim: (lambda x: s / (a - x) ** 2)


register_function("constant", _const, _const_grad)
register_function("polynomial", _poly, _poly_grad, ndim=1)
register_function("polynomial2d", _poly2d, _poly2d_grad, ndim=2)
register_function("damped_cosine", _damped_cos, _damped_cos_grad, ndim=1)
register_function("damped_forcing", _damped_forcing, _damped_forcing_grad, ndim=1)
register_function("exp_offset", _exp_offset, _exp_offset_grad, ndim=1)
register_function("reciprocal", _reciprocal, _reciprocal_grad, ndim=1)


@dataclass(frozen=True)
class FunctionRef:
    """A registered function by name, with its parameters (callable)."""

    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ConfigurationError(f"unknown function {self.name!r}", field="function")
        p = self.params
        if isinstance(p, dict):
            p = tuple(sorted((k, _freeze(v)) for k, v in p.items()))
        object.__setattr__(self, "params", p)
        try:
            object.__setattr__(self, "_fn", FUNCTIONS[self.name].build(self.param_dict))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad parameters for {self.name!r}: {exc}", field="function") from exc

    def __reduce__(self):
        return (FunctionRef, (self.name, self.param_dict))

    @property
    def param_dict(self) -> dict:
        return {k: _thaw(v) for k, v in self.params}

    @property
    def ndim(self):
        return FUNCTIONS[self.name].ndim

    def __call__(self, *xs):
        return self._fn(*xs)

    def derivative(self, dim: int = 0) -> Callable:
        g = FUNCTIONS[self.name].gradient
        if g is None:
            raise ConfigurationError(f"{self.name!r} has no registered derivative", field="function")
        return g(self.param_dict)(dim)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.param_dict}

    @classmethod
    def from_dict(cls, d) -> "FunctionRef":
        if isinstance(d, str):
            return cls(d)
        d = dict(d)
        try:
            name = d.pop("name")
        except KeyError:
            raise ConfigurationError("function entry needs a name", field="function") from None
        return cls(name, d)


def _freeze(v):
    return tuple(_freeze(x) for x in v) if isinstance(v, (list, tuple)) else v


def _thaw(v):
    return [_thaw(x) for x in v] if isinstance(v, tuple) else v


# ---------------------------------------------------------------------------
# problem spec
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Condition:
    """f(point) = value (used for initial and boundary conditions)."""

    point: tuple
    value: float

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(v) for v in np.atleast_1d(self.point)))
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class ProblemSpec:
    """A DE  sum_k term_k = 0  with conditions and a model/training setup."""

    name: str
    families: tuple
    qubits: tuple
    terms: tuple
    initial: tuple = ()
    boundary: tuple = ()
    data: tuple = ()
    analytic: FunctionRef | None = None
    layers: int = 7
    shifted: bool = False
    init_scale: float = 1.0
    init_shift: float = 0.0
    mode: str = "variational"
    lse_weight: float = 1.0
    train: tuple = ()   # TrainConfig overrides as (key, value) pairs
    description: str = ""

    def __post_init__(self):
        fams = tuple(str(f).lower() for f in np.atleast_1d(self.families))
        qbs = tuple(int(q) for q in np.atleast_1d(self.qubits))
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "qubits", qbs)
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "initial", tuple(self.initial))
        object.__setattr__(self, "boundary", tuple(self.boundary))
        object.__setattr__(self, "data", tuple(self.data))
        tr = self.train
        if isinstance(tr, dict):
            tr = tuple(sorted(tr.items()))
        object.__setattr__(self, "train", tuple(tr))
        self.validate()

    @property
    def ndim(self) -> int:
        return len(self.families)

    @property
    def train_overrides(self) -> dict:
        return dict(self.train)

    def encodings(self):
        return tuple(make_encoding(f, q) for f, q in zip(self.families, self.qubits))

    @property
    def is_linear(self) -> bool:
        return all(t.power <= 1 for t in self.terms)

    def validate(self):
        if len(self.families) != len(self.qubits) or not self.families:
            raise ConfigurationError("one family and qubit count per dimension", field="qubits")
        for f in self.families:
            if f not in (CHEBYSHEV, FOURIER):
                raise ConfigurationError(f"unknown family {f!r}", field="families")
        for q in self.qubits:
            if not 1 <= q <= MAX_QUBITS:
                raise ConfigurationError(f"qubit count {q} outside [1, {MAX_QUBITS}]", field="qubits")
        if sum(self.qubits) > MAX_QUBITS:
            raise ConfigurationError("total qubits exceed the cap", field="qubits")
        if not self.terms:
            raise ConfigurationError("at least one DE term is required", field="terms")
        for t in self.terms:
            if not isinstance(t, DETermSpec):
                raise ConfigurationError("terms must be DETermSpec", field="terms")
            t.orders(self.ndim)
            if isinstance(t.function, FunctionRef) and t.function.ndim not in (None, self.ndim):
                raise ConfigurationError(f"function {t.function.name!r} has the wrong dimension",
                                         field="terms.function")
        for c in self.initial + self.boundary + self.data:
            if len(c.point) != self.ndim:
                raise ConfigurationError("condition point has the wrong dimension", field="initial")
        if self.layers < 1:
            raise ConfigurationError("layers must be >= 1", field="layers")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}", field="mode")
        if self.analytic is not None and self.analytic.ndim not in (None, self.ndim):
            raise ConfigurationError("analytic solution has the wrong dimension", field="analytic")

    def with_overrides(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)

    def symbolic_residual(self, f: Callable, derivs: dict, *xs):
        """sum_k term_k evaluated from callables (``derivs`` keyed by order tuples)."""
        return sum(t.symbolic(f, derivs, *xs) for t in self.terms)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _term_to_dict(t: DETermSpec) -> dict:
    w = complex(t.weight)
    d = {"weight": w.real} if w.imag == 0 else {"weight": [w.real, w.imag]}
    d["derivative"] = list(t.derivative)
    d["power"] = t.power
    if t.function is not None:
        if not isinstance(t.function, FunctionRef):
            raise ConfigurationError("only named functions can be serialized", field="terms.function")
        d["function"] = t.function.to_dict()
    return d


def _term_from_dict(d: dict) -> DETermSpec:
    w = d.get("weight", 1.0)
    w = complex(w[0], w[1]) if isinstance(w, list) else float(w)
    fn = d.get("function")
    return DETermSpec(w, tuple(d.get("derivative", [0])), int(d.get("power", 1)),
                      None if fn is None else FunctionRef.from_dict(fn))


def _cond_list(items):
    return [{"point": list(c.point), "value": c.value} for c in items]


def _conds(items, field_name):
    out = []
    for c in items or []:
        try:
            out.append(Condition(tuple(c["point"]), float(c["value"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad condition entry: {exc}", field=field_name) from exc
    return tuple(out)


def problem_to_dict(p: ProblemSpec) -> dict:
    d = {
        "version": FORMAT_VERSION,
        "name": p.name,
        "description": p.description,
        "mode": p.mode,
        "model": {
            "families": list(p.families),
            "qubits": list(p.qubits),
            "layers": p.layers,
            "shifted": p.shifted,
            "init_scale": p.init_scale,
            "init_shift": p.init_shift,
        },
        "terms": [_term_to_dict(t) for t in p.terms],
        "initial": _cond_list(p.initial),
        "boundary": _cond_list(p.boundary),
        "data": _cond_list(p.data),
        "lse": {"initial_weight": p.lse_weight},
        "train": dict(p.train),
    }
    if p.analytic is not None:
        d["analytic"] = p.analytic.to_dict()
    return d


def problem_from_dict(d: dict) -> ProblemSpec:
    version = d.get("version")
    if version != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported config version {version!r} (expected {FORMAT_VERSION})",
                                 field="version")
    model = d.get("model", {})
    known = {"version", "name", "description", "mode", "model", "terms", "initial", "boundary",
             "data", "lse", "train", "analytic"}
    extra = set(d) - known
    if extra:
        raise ConfigurationError(f"unknown keys {sorted(extra)}", field=sorted(extra)[0])
    try:
        terms = tuple(_term_from_dict(t) for t in d.get("terms", []))
        an = d.get("analytic")
        return ProblemSpec(
            name=str(d.get("name", "problem")),
            description=str(d.get("description", "")),
            families=tuple(model.get("families", ["chebyshev"])),
            qubits=tuple(model.get("qubits", [4])),
            layers=int(model.get("layers", 7)),
            shifted=bool(model.get("shifted", False)),
            init_scale=float(model.get("init_scale", 1.0)),
            init_shift=float(model.get("init_shift", 0.0)),
            terms=terms,
            initial=_conds(d.get("initial"), "initial"),
            boundary=_conds(d.get("boundary"), "boundary"),
            data=_conds(d.get("data"), "data"),
            analytic=None if an is None else FunctionRef.from_dict(an),
            mode=str(d.get("mode", "variational")),
            lse_weight=float(d.get("lse", {}).get("initial_weight", 1.0)),
            train=dict(d.get("train", {})),
        )
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), field="config") from exc


def dump_problem(p: ProblemSpec) -> str:
    return tomli_w.dumps(problem_to_dict(p))


def load_problem(text_or_path) -> ProblemSpec:
    """Parse a problem from TOML text or a file path."""
    text = text_or_path
    if not isinstance(text_or_path, str) or "\n" not in text_or_path and "=" not in text_or_path:
        try:
            with open(text_or_path, "rb") as fh:
                text = fh.read().decode("utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}", field="config") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"config does not parse: {exc}", field="config") from exc
    return problem_from_dict(data)
