"""Target unitary -> pulse schedule, and schedule replay.

Stages are listed in the order they are applied. A schedule multiplies out
as U = S_last ... S_2 S_1. The product exp(h_1 H_1) ... exp(h_15 H_15) is
therefore emitted starting from H_15, and each conjugated element
Ad(g_1) Ad(g_2) H expands to g_1^-1, g_2^-1, core, g_2, g_1.
"""
import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .control import build_control_basis, components_in_basis
from .errors import DomainError, UnrealizableStageError, ValidationError
from .matrix_core import is_unitary, mat_exp, mat_log_unitary, rms_distance
from .spin import GeneratorSet, PhysicalConstants, entanglement_degree
from .wei_norman import WeiNormanProblem, find_coordinates

SCHEDULE_VERSION = 1


@dataclass(frozen=True)
class PulseStage:
    """Rectangular pulse: fields in mT, duration in ns (negative only if flagged signed)."""

    Bx: float
    By: float
    Bz: float
    duration: float
    kind: str = "field"
    flags: tuple = ()

    @classmethod
    def from_units(cls, fields, duration, constants, flags=()):
        b = tuple(float(f) * constants.B_unit for f in fields)
        kind = "idle" if not any(b) else "field"
        return cls(*b, float(duration) * constants.tau_unit, kind, tuple(flags))

    @property
    def fields_mT(self):
        return (self.Bx, self.By, self.Bz)

    @property
    def signed(self):
        return self.duration < 0

    def units(self, constants):
        return (
            tuple(b / constants.B_unit for b in self.fields_mT),
            self.duration / constants.tau_unit,
        )

    def generator(self, gens):
        """Unit-time generator b . field + K_U of this stage."""
        (bx, by, bz), _ = self.units(gens.constants)
        return bx * gens.XU + by * gens.YU + bz * gens.ZU + gens.KU

    def exponent(self, gens):
        return self.generator(gens) * (self.duration / gens.constants.tau_unit)

    def with_duration(self, duration, flag=None):
        flags = self.flags + ((flag,) if flag else ())
        return PulseStage(self.Bx, self.By, self.Bz, duration, self.kind, flags)

    def to_dict(self):
        d = {
            "Bx_mT": self.Bx,
            "By_mT": self.By,
            "Bz_mT": self.Bz,
            "duration_ns": self.duration,
            "kind": self.kind,
        }
        if self.flags:
            d["flags"] = list(self.flags)
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            kind = d.get("kind", "field")
            if kind not in ("field", "idle"):
                raise ValidationError(f"unknown stage kind {kind!r}")
            return cls(
                float(d["Bx_mT"]),
                float(d["By_mT"]),
                float(d["Bz_mT"]),
                float(d["duration_ns"]),
                kind,
                tuple(d.get("flags", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed stage {d!r}") from exc


@dataclass
class PulseSchedule:
    stages: list
    cycle: list
    n: int
    target: np.ndarray
    constants: PhysicalConstants
    global_phase: float = 0.0
    rms_error: float = 0.0
    h: np.ndarray = None
    x: np.ndarray = None
    breakdown_time: float = None
    cap_violations: list = field(default_factory=list)

    @property
    def cycles(self):
        return self.n

    @property
    def total_time_ns(self):
        return float(sum(s.duration for s in self.stages))

    @property
    def total_abs_time_ns(self):
        return float(sum(abs(s.duration) for s in self.stages))

    @property
    def signed_stages(self):
        return [i for i, s in enumerate(self.stages) if s.signed]

    def to_dict(self, timestamp=True):
        c = self.constants
        d = {
            "version": SCHEDULE_VERSION,
            "n": self.n,
            "stages": [s.to_dict() for s in self.stages],
            "per_cycle": len(self.cycle),
            "rms_error": self.rms_error,
            "total_time_ns": self.total_time_ns,
            "total_abs_time_ns": self.total_abs_time_ns,
            "cap_violations": self.cap_violations,
            "signed_stages": self.signed_stages,
            "global_phase": self.global_phase,
            "target": {
                "re": np.real(self.target).tolist(),
                "im": np.imag(self.target).tolist(),
            },
            "constants": {
                "gamma_n_MHz_per_T": c.gamma_n,
                "gamma_e_MHz_per_T": c.gamma_e,
                "kappa_MHz": c.kappa,
                "B_unit_mT": c.B_unit,
                "tau_unit_ns": c.tau_unit,
            },
        }
        if self.h is not None:
            d["h"] = [float(v) for v in self.h]
        if timestamp:
            d["created"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return d

    def to_json(self, path=None, timestamp=True):
        text = json.dumps(self.to_dict(timestamp), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def load_schedule(path):
    """(stages, constants, target or None) from a schedule JSON file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read schedule {path}: {exc}") from exc
    if not isinstance(data, dict) or "stages" not in data:
        raise ValidationError(f"{path}: not a schedule file")
    stages = [PulseStage.from_dict(s) for s in data["stages"]]
    c = data.get("constants")
    if c:
        constants = PhysicalConstants(
            gamma_n=c["gamma_n_MHz_per_T"],
            gamma_e=c["gamma_e_MHz_per_T"],
            kappa=c["kappa_MHz"],
            B_unit=c["B_unit_mT"],
            tau_unit=c["tau_unit_ns"],
        )
    else:
        constants = PhysicalConstants()
    target = None
    if "target" in data:
        t = data["target"]
        target = np.array(t["re"]) + 1j * np.array(t["im"])
    return stages, constants, target


def expand_recipe(h, element, constants=None):
    """Stages (in application order) whose product is exp(h * element)."""
    constants = constants or PhysicalConstants()
    conj = element.conjugators
    stages = [PulseStage.from_units(c.fields, -c.duration, constants) for c in conj]
    core = element.core
    stages.append(PulseStage.from_units(core.fields, h * core.duration, constants))
    stages += [PulseStage.from_units(c.fields, c.duration, constants) for c in reversed(conj)]
    return stages


def merge_stages(stages):
    """Join neighbours with identical fields (they commute); drop zero-length results."""
    out = []
    for s in stages:
        if out and out[-1].fields_mT == s.fields_mT:
            prev = out.pop()
            s = PulseStage(s.Bx, s.By, s.Bz, prev.duration + s.duration, s.kind, prev.flags + s.flags)
        out.append(s)
    return [s for s in out if s.duration != 0.0]


def forward_inverse_time(a, t, tol=1e-6, horizon=None, oversample=20):
    """A forward time T > 0 with rms(exp(a T) - exp(a t)) <= tol, or None.

    Windows of the scan are searched in increasing T, so the first window that
    holds a solution decides.

    ``a`` is skew-Hermitian. The error only depends on the eigenphases, so the
    scan runs on the spectrum and candidates are polished by a bounded 1-d
    minimization.
    """
    w = np.linalg.eigvalsh(1j * np.asarray(a))  # eigenvalues of a are -i w
    n = w.size
    wmax = np.abs(w).max()
    if wmax == 0.0:
        return 0.0

    def err(T):
        d = np.exp(-1j * np.multiply.outer(np.atleast_1d(T), w)) - np.exp(-1j * w * t)
        return np.sqrt((np.abs(d) ** 2).sum(axis=-1) / n**2)

    horizon = horizon or 2000.0 * 2 * np.pi / wmax
    step = 2 * np.pi / (oversample * wmax)
    # a solution within step/2 of a grid point shows at most this error there
    bound = 0.5 * step * np.sqrt((w**2).sum()) / n + tol
    chunk = 200_000
    start = 0.0
    while start < horizon:
        grid = start + step * np.arange(1, chunk + 1)
        grid = grid[grid <= horizon]
        if grid.size == 0:
            break
        e = err(grid)
        for i in np.flatnonzero(e <= bound):
            lo, hi = max(grid[i] - step, 0.0), grid[i] + step
            r = minimize_scalar(lambda T: err(T)[0] ** 2, bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-13})
            if r.x > 0 and err(r.x)[0] <= tol:
                return float(r.x)
        start = grid[-1]
    return None


def realizability_pass(stages, constants=None, forward_search=False, allow_signed=True, tol=1e-6, horizon=None):
    """Make durations non-negative where it can be done.

    Idle stages of length -t become m * period - t exactly (smallest m >= 1
    giving a non-negative length). A negative field stage is replaced by a
    searched forward time when ``forward_search`` is set and one exists within
    ``tol``; otherwise it stays signed and flagged. Without ``allow_signed``
    any remaining signed stage raises UnrealizableStageError carrying the
    flagged stage list.
    """
    constants = constants or PhysicalConstants()
    gens = GeneratorSet(constants)
    period = constants.period_ns
    out, failed = [], []
    for i, s in enumerate(stages):
        if s.duration >= 0:
            out.append(s)
            continue
        if s.kind == "idle" or not any(s.fields_mT):
            m = max(1, int(np.ceil(-s.duration / period)))
            out.append(s.with_duration(max(m * period + s.duration, 0.0), "idle-rewrite"))
            continue
        if forward_search:
            _, t_units = s.units(constants)
            T = forward_inverse_time(s.generator(gens), t_units, tol, horizon)
            if T is not None:
                out.append(s.with_duration(T * constants.tau_unit, "forward-inverse"))
                continue
        failed.append(i)
        out.append(s.with_duration(s.duration, "signed"))
    if failed and not allow_signed:
        raise UnrealizableStageError(
            f"{len(failed)} field stages have no forward-time equivalent within tolerance",
            schedule=out,
        )
    return out


def simulate(stages, constants=None, psi0=None):
    """(U, trace): U = S_last ... S_1, and D_e after each stage when psi0 is given."""
    if isinstance(stages, PulseSchedule):
        constants = constants or stages.constants
        stages = stages.stages
    constants = constants or PhysicalConstants()
    gens = GeneratorSet(constants)
    u = np.eye(4, dtype=complex)
    cache = {}
    trace = None
    psi = None
    if psi0 is not None:
        psi = np.asarray(psi0, dtype=complex)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValidationError("initial state must be normalized")
        trace = [entanglement_degree(psi)]
    for s in stages:
        key = (s.fields_mT, s.duration)
        e = cache.get(key)
        if e is None:
            e = cache[key] = mat_exp(s.exponent(gens))
        u = e @ u
        if psi is not None:
            psi = e @ psi
            trace.append(entanglement_degree(psi))
    return u, (None if trace is None else np.array(trace))


def write_entanglement_csv(path, stages, trace):
    t = np.concatenate([[0.0], np.cumsum([s.duration for s in stages])])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "time_ns", "degree"])
        for i, (ti, d) in enumerate(zip(t, trace)):
            w.writerow([i, repr(float(ti)), repr(float(d))])


def project_special_unitary(u):
    """(U / det^(1/4), phase) with phase = arg(det)/4."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValidationError(f"target must be 4x4, got {u.shape}")
    if not is_unitary(u, 1e-9):
        raise DomainError("target is not unitary")
    phase = float(np.angle(np.linalg.det(u)) / 4)
    return u * np.exp(-1j * phase), phase


def cap_violations(stages, constants):
    cap = constants.field_cap_units * constants.B_unit * (1 + 1e-12)
    return [
        {"stage": i, "fields_mT": list(s.fields_mT)}
        for i, s in enumerate(stages)
        if max(abs(b) for b in s.fields_mT) > cap
    ]


def synthesize(
    target,
    basis=None,
    dt=0.001,
    eps=0.1,
    merge=True,
    forward_search=False,
    allow_signed=True,
    realizability_tol=1e-6,
    drop_tol=1e-14,
):
    """Pulse schedule realizing ``target`` up to a global phase."""
    basis = basis or build_control_basis()
    constants = basis.constants
    su, phase = project_special_unitary(target)
    sched = PulseSchedule([], [], 1, su, constants, phase)
    if rms_distance(su, np.eye(4)) <= 1e-15:
        return sched
    log = mat_log_unitary(su)
    x = components_in_basis(log, basis)
    problem = WeiNormanProblem.from_basis(basis.matrices, x)
    h, n, trace = find_coordinates(problem, dt=dt, eps=eps)

    cycle = []
    for hj, el in reversed(list(zip(h, basis.elements))):
        if abs(hj) <= drop_tol:
            continue
        cycle += expand_recipe(hj, el, constants)
    if merge:
        cycle = merge_stages(cycle)
    cycle = realizability_pass(cycle, constants, forward_search, allow_signed, realizability_tol)
    sched.cycle = cycle
    sched.stages = cycle * n
    sched.n = n
    sched.h, sched.x = h, x
    sched.breakdown_time = trace.first_breakdown_time
    sched.cap_violations = cap_violations(sched.stages, constants)
    u, _ = simulate(sched.stages, constants)
    sched.rms_error = rms_distance(u, su)
    return sched


def verify(stages, target, constants=None, tol=1e-8):
    """(ok, rms) comparing the replayed schedule with the target's SU(4) projection."""
    su, _ = project_special_unitary(target)
    u, _ = simulate(stages, constants)
    err = rms_distance(u, su)
    return err <= tol, err
