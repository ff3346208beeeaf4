"""Matrix paths: sampled data, trigonometric polynomials and builtin curves.

Every path can be evaluated at single times or on a whole grid.  Paths with
closed forms (trigonometric polynomials, builtins) also evaluate in
arbitrary precision through mpmath, which the finite-difference oracles use.
"""
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OutOfDomain, UnknownName
from .families import FamilyDescriptor, check_shape, parse_family, real_sym_evd
from .serialize import matrix_from_json, matrix_to_json

KINDS = ("samples", "trigpoly", "builtin")


# --------------------------------------------------------------------------
# builtin curves
# --------------------------------------------------------------------------

def _reflection(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2)


def _reflection_rate(theta):
    # d/dtheta of _reflection
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([-s, c], -1), np.stack([c, s], -1)], -2)


def _rellich(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe = np.where(t == 0.0, 1.0, t)
        env = np.where(t == 0.0, 0.0, np.exp(-1.0 / safe**2))
        theta = 2.0 / safe
    return env[..., None, None] * _reflection(theta)


def _rellich_rate(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe = np.where(t == 0.0, 1.0, t)
        env = np.where(t == 0.0, 0.0, np.exp(-1.0 / safe**2))
        theta = 2.0 / safe
        d_env = np.where(env == 0.0, 0.0, 2.0 / safe**3 * env)
        d_theta_env = np.where(env == 0.0, 0.0, -2.0 / safe**2 * env)
    return d_env[..., None, None] * _reflection(theta) + d_theta_env[..., None, None] * _reflection_rate(theta)


def _kriegl(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe = np.where(t == 0.0, 1.0, t)
        amp = np.where(t == 0.0, 0.0, np.exp(-1.0 / safe**2) * np.sin(1.0 / safe))
    return amp[..., None, None] * _reflection(1.0 / safe)


def _kriegl_rate(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe = np.where(t == 0.0, 1.0, t)
        env = np.where(t == 0.0, 0.0, np.exp(-1.0 / safe**2))
        s, c = np.sin(1.0 / safe), np.cos(1.0 / safe)
        amp = env * s
        d_amp = np.where(env == 0.0, 0.0, env * (2.0 / safe**3 * s - c / safe**2))
        d_theta_amp = np.where(env == 0.0, 0.0, -amp / safe**2)
    return d_amp[..., None, None] * _reflection(1.0 / safe) + d_theta_amp[..., None, None] * _reflection_rate(1.0 / safe)


def _cross(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = t
    out[..., 1, 1] = -t
    return out


def _cross_rate(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = -1.0
    return out


def _rotation(t):
    return 2.0 * _reflection(2.0 * np.asarray(t, dtype=float))


def _rotation_rate(t):
    return 4.0 * _reflection_rate(2.0 * np.asarray(t, dtype=float))


def _mp_reflection(theta):
    c, s = mpmath.cos(theta), mpmath.sin(theta)
    return mpmath.matrix([[c, s], [s, -c]])


def _rellich_mp(t):
    t = mpmath.mpf(t)
    if t == 0:
        return mpmath.zeros(2, 2)
    return mpmath.exp(-1 / t**2) * _mp_reflection(2 / t)


def _kriegl_mp(t):
    t = mpmath.mpf(t)
    if t == 0:
        return mpmath.zeros(2, 2)
    return mpmath.exp(-1 / t**2) * mpmath.sin(1 / t) * _mp_reflection(1 / t)


def _cross_mp(t):
    t = mpmath.mpf(t)
    return mpmath.matrix([[t, 0], [0, -t]])


def _rotation_mp(t):
    return 2 * _mp_reflection(2 * mpmath.mpf(t))


@dataclass(frozen=True)
class Builtin:
    name: str
    family: FamilyDescriptor
    domain: tuple
    value: object
    rate: object
    value_mp: object
    description: str


BUILTINS = {
    "rellich": Builtin(
        "rellich", real_sym_evd(2), (-1.0, 1.0), _rellich, _rellich_rate, _rellich_mp,
        "exp(-1/t^2) [[cos(2/t), sin(2/t)], [sin(2/t), -cos(2/t)]], value 0 at t = 0",
    ),
    "kriegl-like": Builtin(
        "kriegl-like", real_sym_evd(2), (-1.0, 1.0), _kriegl, _kriegl_rate, _kriegl_mp,
        "exp(-1/t^2) sin(1/t) [[cos(1/t), sin(1/t)], [sin(1/t), -cos(1/t)]]: eigenvalues meet "
        "at every zero of sin(1/t), accumulating at t = 0",
    ),
    "chamber-cross": Builtin(
        "chamber-cross", real_sym_evd(2), (-1.0, 1.0), _cross, _cross_rate, _cross_mp,
        "diag(t, -t)",
    ),
    "rotation-flow": Builtin(
        "rotation-flow", real_sym_evd(2), (0.0, 2.0 * np.pi), _rotation, _rotation_rate, _rotation_mp,
        "R(t) diag(2, -2) R(t)^T with R(t) the rotation by angle t",
    ),
}


# --------------------------------------------------------------------------
# path specification
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathSpec:
    """A path ``t -> rho(t)`` of elements of ``p`` on a closed interval.

    ``data`` depends on ``kind``:

    * ``"samples"``: ``{"times": (N,), "matrices": (N, p, q)}``; values and
      derivatives come from a cubic spline through the samples.
    * ``"trigpoly"``: ``{"constant": C, "cos": [A_1..A_J], "sin": [B_1..B_J]}``
      for ``C + sum_j A_j cos(j t) + B_j sin(j t)``.
    * ``"builtin"``: ``{"name": name}``, see :data:`BUILTINS`.
    """

    family: FamilyDescriptor
    kind: str
    domain: tuple
    data: dict
    has_derivative: bool = True
    _eval: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown path kind {self.kind!r}")
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise ValueError(f"empty domain [{a}, {b}]")
        object.__setattr__(self, "domain", (a, b))
        object.__setattr__(self, "_eval", _build_evaluator(self))

    @property
    def supports_mp(self):
        return self.kind in ("trigpoly", "builtin")

    def contains(self, t, slack=1e-12):
        a, b = self.domain
        pad = slack * (b - a)
        return a - pad <= t <= b + pad

    def _check(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = self.domain
        pad = 1e-12 * (b - a)
        if np.any(ts < a - pad) or np.any(ts > b + pad) or np.any(~np.isfinite(ts)):
            raise OutOfDomain(f"t outside the domain [{a}, {b}]")

    def value(self, t):
        self._check(t)
        return self._eval.value(np.asarray(t, dtype=float))

    def derivative(self, t):
        if not self.has_derivative:
            return None
        self._check(t)
        return self._eval.rate(np.asarray(t, dtype=float))

    def value_mp(self, t):
        """Value as an mpmath matrix at the current mpmath precision."""
        if not self.supports_mp:
            raise NotImplementedError("sampled paths have no high-precision evaluation")
        self._check(float(t))
        return self._eval.value_mp(t)

    def values(self, ts):
        """Values on a grid, shape ``(N, p, q)``."""
        ts = np.asarray(ts, dtype=float)
        self._check(ts)
        return self._eval.value(ts)

    def derivatives(self, ts):
        if not self.has_derivative:
            return None
        ts = np.asarray(ts, dtype=float)
        self._check(ts)
        return self._eval.rate(ts)


def eval_path(spec, t):
    """``(rho(t), rho'(t))``; the derivative is ``None`` when unavailable."""
    return spec.value(t), spec.derivative(t)


class _TrigEval:
    def __init__(self, fam, data):
        c = np.asarray(data["constant"])
        cos = [np.asarray(m) for m in data.get("cos", [])]
        sin = [np.asarray(m) for m in data.get("sin", [])]
        J = max(len(cos), len(sin))
        zero = np.zeros_like(c)
        cos += [zero] * (J - len(cos))
        sin += [zero] * (J - len(sin))
        for m in [c] + cos + sin:
            check_shape(fam, m)
        dt = np.result_type(c, *cos, *sin, np.float64)
        self.c = c.astype(dt)
        self.a = np.array(cos, dtype=dt).reshape((J,) + c.shape)
        self.b = np.array(sin, dtype=dt).reshape((J,) + c.shape)
        self.freq = np.arange(1, J + 1, dtype=float)

    def value(self, t):
        ph = np.multiply.outer(t, self.freq)
        return self.c + np.einsum("...j,jab->...ab", np.cos(ph), self.a) + np.einsum("...j,jab->...ab", np.sin(ph), self.b)

    def rate(self, t):
        ph = np.multiply.outer(t, self.freq)
        return (np.einsum("...j,jab->...ab", -self.freq * np.sin(ph), self.a)
                + np.einsum("...j,jab->...ab", self.freq * np.cos(ph), self.b))

    def value_mp(self, t):
        t = mpmath.mpf(t)
        rows, cols = self.c.shape
        out = mpmath.matrix(rows, cols)
        cs = [mpmath.cos(j * t) for j in range(1, len(self.freq) + 1)]
        ss = [mpmath.sin(j * t) for j in range(1, len(self.freq) + 1)]
        for i in range(rows):
            for k in range(cols):
                acc = _mp_scalar(self.c[i, k])
                for j in range(len(cs)):
                    acc += _mp_scalar(self.a[j, i, k]) * cs[j] + _mp_scalar(self.b[j, i, k]) * ss[j]
                out[i, k] = acc
        return out


def _mp_scalar(z):
    if np.iscomplexobj(z):
        return mpmath.mpc(float(z.real), float(z.imag))
    return mpmath.mpf(float(z))


class _SampleEval:
    def __init__(self, fam, data):
        times = np.asarray(data["times"], dtype=float)
        mats = np.asarray(data["matrices"])
        if times.ndim != 1 or times.size < 2:
            raise ValueError("sampled paths need at least two sample times")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if mats.shape != (times.size,) + fam.ambient_shape:
            raise ValueError(f"expected {times.size} matrices of shape {fam.ambient_shape}, got {mats.shape}")
        bc = "not-a-knot" if times.size >= 4 else "natural"
        self.spline = CubicSpline(times, mats, axis=0, bc_type=bc)
        self.rate_spline = self.spline.derivative()
        self.times, self.mats = times, mats

    def value(self, t):
        out = self.spline(t)
        # reproduce samples exactly at the nodes
        idx = np.searchsorted(self.times, t)
        hit = (idx < self.times.size) & (self.times[np.minimum(idx, self.times.size - 1)] == t)
        if np.ndim(t) == 0:
            return self.mats[idx].copy() if hit else out
        out = np.array(out)
        out[hit] = self.mats[idx[hit]]
        return out

    def rate(self, t):
        return self.rate_spline(t)


class _BuiltinEval:
    def __init__(self, b):
        self.b = b

    def value(self, t):
        return self.b.value(t)

    def rate(self, t):
        return self.b.rate(t)

    def value_mp(self, t):
        return self.b.value_mp(t)


def _build_evaluator(spec):
    if spec.kind == "trigpoly":
        return _TrigEval(spec.family, spec.data)
    if spec.kind == "samples":
        return _SampleEval(spec.family, spec.data)
    name = spec.data.get("name")
    if name not in BUILTINS:
        raise UnknownName(f"unknown builtin path {name!r}; known: {sorted(BUILTINS)}")
    b = BUILTINS[name]
    if spec.family != b.family:
        raise ValueError(f"builtin {name!r} lives in {b.family.name}, not {spec.family.name}")
    return _BuiltinEval(b)


def builtin(name, domain=None):
    if name not in BUILTINS:
        raise UnknownName(f"unknown builtin path {name!r}; known: {sorted(BUILTINS)}")
    b = BUILTINS[name]
    return PathSpec(b.family, "builtin", domain if domain is not None else b.domain, {"name": name})


def trigpoly(fam, constant, cos=(), sin=(), domain=(0.0, 1.0)):
    return PathSpec(fam, "trigpoly", domain, {"constant": np.asarray(constant), "cos": list(cos), "sin": list(sin)})


def samples(fam, times, matrices):
    times = np.asarray(times, dtype=float)
    return PathSpec(fam, "samples", (times[0], times[-1]), {"times": times, "matrices": np.asarray(matrices)})


def constant_path(fam, c, domain=(0.0, 1.0)):
    return trigpoly(fam, c, domain=domain)


def restrict(spec, domain):
    """The same path on a sub-interval."""
    return PathSpec(spec.family, spec.kind, domain, spec.data, spec.has_derivative)


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def path_from_json(obj):
    """Build a :class:`PathSpec` from its JSON object form."""
    if not isinstance(obj, dict):
        raise ValueError("path specification must be a JSON object")
    for key in ("family", "kind"):
        if key not in obj:
            raise ValueError(f"path specification lacks {key!r}")
    kind = obj["kind"]
    data = obj.get("data")
    if kind == "builtin":
        name = data.get("name") if isinstance(data, dict) else data
        if name is None:
            name = obj.get("name")
        b = BUILTINS.get(name)
        if b is None:
            raise UnknownName(f"unknown builtin path {name!r}")
        fam = parse_family(obj["family"]) if obj.get("family") else b.family
        return PathSpec(fam, "builtin", tuple(obj.get("domain", b.domain)), {"name": name})
    fam = parse_family(obj["family"])
    if "domain" not in obj and kind != "samples":
        raise ValueError("path specification lacks 'domain'")
    if not isinstance(data, dict):
        raise ValueError("'data' must be an object")
    if kind == "trigpoly":
        if "constant" not in data:
            raise ValueError("trigpoly data needs 'constant'")
        d = {
            "constant": matrix_from_json(data["constant"]),
            "cos": [matrix_from_json(m) for m in data.get("cos", [])],
            "sin": [matrix_from_json(m) for m in data.get("sin", [])],
        }
        return PathSpec(fam, "trigpoly", tuple(obj["domain"]), d, bool(obj.get("derivative", True)))
    if kind == "samples":
        times = np.asarray(data["times"], dtype=float)
        mats = np.array([matrix_from_json(m) for m in data["matrices"]])
        domain = tuple(obj.get("domain", (times[0], times[-1])))
        return PathSpec(fam, "samples", domain, {"times": times, "matrices": mats}, bool(obj.get("derivative", True)))
    raise ValueError(f"unknown path kind {kind!r}")


def path_to_json(spec):
    out = {"family": spec.family.name, "kind": spec.kind, "domain": [float(v) for v in spec.domain]}
    cplx = spec.family.is_complex
    if spec.kind == "builtin":
        out["data"] = {"name": spec.data["name"]}
    elif spec.kind == "trigpoly":
        ev = spec._eval
        out["data"] = {
            "constant": matrix_to_json(ev.c, cplx),
            "cos": [matrix_to_json(m, cplx) for m in ev.a],
            "sin": [matrix_to_json(m, cplx) for m in ev.b],
        }
    else:
        out["data"] = {
            "times": [float(t) for t in spec.data["times"]],
            "matrices": [matrix_to_json(m, cplx) for m in spec.data["matrices"]],
        }
    return out
