"""Fifteen realizable control elements H_1..H_15 and their conditioning.

Every H_j is a field pulse generator (b . field + K_U) * duration, possibly
conjugated by one or two further pulses:

    H_1..H_3    field along x, y, z
    H_4         pure coupling
    H_5, H_6    H_4 conjugated by an x pulse (H_8, H_9: y; H_11, H_12: z)
    H_7         H_1 conjugated by idle coupling (H_10: H_2)
    H_13..H_15  H_4 conjugated by two pulses (x then y, y then z, z then x)
"""
import json
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .closure import AlgebraElement, Pulse, RealizableElement
from .errors import DegenerateBasisError, NotInSpanError, ValidationError
from .matrix_core import Ad, condition_number, mat_exp, real_parameters, vectorize
from .spin import GeneratorSet, PhysicalConstants


@dataclass(frozen=True)
class ControlParams:
    """Field amplitudes (b, c) in field units and durations (tau, s) in time units."""

    b1: float = 2.003
    tau1: float = 0.151
    b2: float = 1.5155
    tau2: float = 0.176
    b3: float = 1.958
    tau3: float = 0.118
    tau4: float = 1.109
    b5: float = 0.3015
    tau5: float = 1.021
    b6: float = 0.5195
    tau6: float = 0.910
    tau7: float = 0.215
    b8: float = 0.1925
    tau8: float = 0.931
    b9: float = 0.222
    tau9: float = 0.926
    tau10: float = 0.2005
    b11: float = -0.167
    tau11: float = 0.9825
    b12: float = 0.394
    tau12: float = 0.9255
    b13: float = 0.198
    tau13: float = 1.017
    c13: float = 0.178
    s13: float = 0.9855
    b14: float = 0.344
    tau14: float = 1.000
    c14: float = 0.166
    s14: float = 0.9845
    b15: float = 0.257
    tau15: float = 0.900
    c15: float = 0.190
    s15: float = 1.377

    def __post_init__(self):
        for name, val in self.items():
            if not np.isfinite(val):
                raise ValidationError(f"{name} must be finite")
            if name[0] in "ts" and val <= 0:
                raise ValidationError(f"duration {name} must be positive")

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def items(self):
        return list(asdict(self).items())

    def as_array(self):
        return np.array([v for _, v in self.items()])

    @classmethod
    def from_array(cls, arr):
        return cls(**dict(zip(cls.names(), map(float, arr))))

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - set(cls.names())
        if unknown:
            raise ValidationError(f"unknown parameter names {sorted(unknown)}")
        try:
            return replace(cls(), **{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad parameter file {path}: {exc}") from exc

    def field_amplitudes(self):
        return {k: v for k, v in self.items() if k[0] in "bc"}

    def cap_violations(self, cap=1.0):
        return sorted(k for k, v in self.field_amplitudes().items() if abs(v) > cap)


@dataclass
class ControlBasis:
    elements: list
    stacked_coords: np.ndarray  # rows are tensor-basis coordinates
    stacked_params: np.ndarray  # rows are the 16 real matrix parameters
    sigma_max: float
    sigma_min: float
    cond: float
    params: ControlParams
    constants: PhysicalConstants

    @property
    def matrices(self):
        return [e.matrix for e in self.elements]

    @property
    def cap_violations(self):
        return self.params.cap_violations(self.constants.field_cap_units)


def _pulse(gens, fields, duration):
    bx, by, bz = fields
    g = bx * gens.XU + by * gens.YU + bz * gens.ZU + gens.KU
    return Pulse(g, float(duration), -1, tuple(float(f) for f in fields))


def _family(p, gens):
    """(conjugators, core) for each of the fifteen elements."""
    ax = {"x": lambda b: (b, 0.0, 0.0), "y": lambda b: (0.0, b, 0.0), "z": lambda b: (0.0, 0.0, b)}
    zero = (0.0, 0.0, 0.0)
    h1 = _pulse(gens, ax["x"](p.b1), p.tau1)
    h2 = _pulse(gens, ax["y"](p.b2), p.tau2)
    h3 = _pulse(gens, ax["z"](p.b3), p.tau3)
    h4 = _pulse(gens, zero, p.tau4)

    def conj(d, b, t):
        return _pulse(gens, ax[d](b), t)

    return [
        ((), h1),
        ((), h2),
        ((), h3),
        ((), h4),
        ((conj("x", p.b5, p.tau5),), h4),
        ((conj("x", p.b6, p.tau6),), h4),
        ((_pulse(gens, zero, p.tau7),), h1),
        ((conj("y", p.b8, p.tau8),), h4),
        ((conj("y", p.b9, p.tau9),), h4),
        ((_pulse(gens, zero, p.tau10),), h2),
        ((conj("z", p.b11, p.tau11),), h4),
        ((conj("z", p.b12, p.tau12),), h4),
        ((conj("x", p.b13, p.tau13), conj("y", p.c13, p.s13)), h4),
        ((conj("y", p.b14, p.tau14), conj("z", p.c14, p.s14)), h4),
        ((conj("z", p.b15, p.tau15), conj("x", p.c15, p.s15)), h4),
    ]


def _conjugate(conjugators, core):
    m = core.matrix
    for c in reversed(conjugators):
        m = Ad(mat_exp(c.matrix), m)
    return 0.5 * (m - m.conj().T)


def control_matrices(params=None, constants=None):
    """The fifteen matrices only (no recipes or singular values)."""
    gens = GeneratorSet(constants or PhysicalConstants())
    return [_conjugate(c, core) for c, core in _family(params or ControlParams(), gens)]


def conditioning(params=None, constants=None):
    """(sigma_max, sigma_min, cond) of the stacked real-parameter rows."""
    mats = control_matrices(params, constants)
    return condition_number([real_parameters(m) for m in mats])


def build_control_basis(params=None, constants=None, rank_tol=1e-9):
    params = params or ControlParams()
    constants = constants or PhysicalConstants()
    gens = GeneratorSet(constants)
    elements = []
    for j, (conjs, core) in enumerate(_family(params, gens), 1):
        m = _conjugate(conjs, core)
        el = AlgebraElement(m, f"H{j}")
        elements.append(RealizableElement(el, conjs, core, f"control family member {j}"))
    coords = np.array([vectorize(e.matrix) for e in elements])
    prm = np.array([real_parameters(e.matrix) for e in elements])
    smax, smin, cond = condition_number(prm)
    if smin <= rank_tol * smax:
        raise DegenerateBasisError(f"control basis has rank < 15 (sigma_min = {smin:.3g})", sigma_min=smin)
    return ControlBasis(elements, coords, prm, smax, smin, cond, params, constants)


def components_in_basis(x, basis, tol=1e-10, return_residual=False):
    """Real x_j with sum x_j H_j = X, by least squares over the tensor coordinates."""
    x = np.asarray(getattr(x, "matrix", x), dtype=complex)
    target, proj = vectorize(x, return_residual=True)
    sol, *_ = np.linalg.lstsq(basis.stacked_coords.T, target, rcond=None)
    recon = sum(c * m for c, m in zip(sol, basis.matrices))
    resid = float(np.linalg.norm(recon - x))
    if resid > tol * max(1.0, float(np.linalg.norm(x))):
        raise NotInSpanError(f"target lies {resid:.2e} outside the span of the control basis")
    return (sol, resid) if return_residual else sol


def _objective(arr, constants):
    try:
        p = ControlParams.from_array(arr)
    except ValidationError:
        return np.inf
    smax, smin, cond = conditioning(p, constants)
    return cond if smin > 1e-9 * smax else np.inf


def random_params(rng, field_range=1.0, duration_range=(0.1, 1.5)):
    vals = {}
    for name in ControlParams.names():
        if name[0] in "bc":
            vals[name] = float(rng.uniform(-field_range, field_range))
        else:
            vals[name] = float(rng.uniform(*duration_range))
    return ControlParams(**vals)


@dataclass
class OptimizeResult:
    params: ControlParams
    cond: float
    initial_cond: float
    passes: int
    evaluations: int
    history: list
    converged: bool = False
    steps: np.ndarray = None  # per-coordinate step after the last pass


def optimize_params(
    initial=None,
    constants=None,
    max_passes=200,
    step=0.05,
    min_step=1e-3,
    improve_tol=1e-6,
    seed=0,
    restarts=50,
):
    """Coordinate-wise hill climbing on the condition number.

    Each coordinate tries +step then -step; an accepted move must lower the
    objective by more than ``improve_tol``, a rejected coordinate halves its
    step. Stops once a full pass accepts nothing and every step is below
    ``min_step``, or after ``max_passes``.
    """
    constants = constants or PhysicalConstants()
    rng = np.random.default_rng(seed)
    p = initial or ControlParams()
    arr = p.as_array()
    cur = _objective(arr, constants)
    tries = 0
    while not np.isfinite(cur):
        if tries >= restarts:
            raise DegenerateBasisError("no rank-15 starting point found", sigma_min=0.0)
        arr = random_params(rng).as_array()
        cur = _objective(arr, constants)
        tries += 1
    start = cur
    steps = np.full(arr.size, float(step))
    history = [cur]
    evals = 0
    passes = 0
    converged = False
    for passes in range(1, max_passes + 1):
        accepted = False
        for i in range(arr.size):
            moved = False
            for sign in (1.0, -1.0):
                trial = arr.copy()
                trial[i] += sign * steps[i]
                val = _objective(trial, constants)
                evals += 1
                if val < cur - improve_tol:
                    arr, cur, moved = trial, val, True
                    break
            if moved:
                accepted = True
                history.append(cur)
            else:
                steps[i] /= 2
        if not accepted and steps.max() < min_step:
            converged = True
            break
    return OptimizeResult(ControlParams.from_array(arr), cur, start, passes, evals, history, converged, steps)
