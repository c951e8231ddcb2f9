"""Smallest Lie algebra containing a set of generators, with optional recipes.

Two engines:

``abstract``
    grows the set with ad-orbits {Y, ad(X)Y, ad(X)^2 Y, ...} of every pair of
    current elements. Fast, used for dimension queries.
``realizable``
    only adds conjugates exp(s G) Y exp(-s G) with G one of the original
    generators, so every element carries a flat recipe of generator pulses.
    Right-nested brackets of generators span the generated algebra, which makes
    the generator-only orbits sufficient.
"""
import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, SamplePointError, ValidationError
from .matrix_core import Ad, ad, condition_number, independent_subset, mat_exp, vectorize


def _flat(m):
    m = np.asarray(m)
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"element {self.label!r} is not square")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m + m.conj().T).max(initial=0.0) > 1e-10 * scale:
            raise ValidationError(f"element {self.label!r} is not skew-Hermitian")
        if abs(np.trace(m)) > 1e-10 * scale * m.shape[0]:
            raise ValidationError(f"element {self.label!r} is not traceless")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def coords(self):
        return vectorize(self.matrix)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Pulse:
    """exp(duration * generator). ``fields`` are (bx, by, bz) in field units when physical."""

    generator: np.ndarray
    duration: float
    index: int = -1
    fields: tuple = None

    @property
    def matrix(self):
        return self.duration * self.generator

    def to_dict(self):
        d = {"generator": self.index, "duration": self.duration}
        if self.fields is not None:
            d["fields"] = list(self.fields)
        return d


@dataclass(frozen=True, eq=False)
class RealizableElement:
    """element = Ad(e^{c_1}) ... Ad(e^{c_m}) core.matrix for conjugators c_1..c_m."""

    element: AlgebraElement
    conjugators: tuple
    core: Pulse
    provenance: str = ""

    @property
    def label(self):
        return self.element.label

    @property
    def matrix(self):
        return self.element.matrix

    def reconstruct(self):
        m = self.core.matrix
        for c in reversed(self.conjugators):
            m = Ad(mat_exp(c.matrix), m)
        return m

    def to_dict(self):
        return {
            "conjugators": [c.to_dict() for c in self.conjugators],
            "core": self.core.to_dict(),
            "provenance": self.provenance,
        }


@dataclass
class ClosureResult:
    basis: list
    iterations: int
    realizable: list = None
    engine: str = "abstract"

    @property
    def dim(self):
        return len(self.basis)

    def to_json(self, path=None):
        elems = []
        for i, b in enumerate(self.basis):
            d = {"label": b.label}
            if b.dim == 4:
                d["coords"] = [float(c) for c in b.coords]
            if self.realizable is not None:
                d["recipe"] = self.realizable[i].to_dict()
            elems.append(d)
        text = json.dumps(
            {"dim": self.dim, "iterations": self.iterations, "engine": self.engine, "elements": elems},
            indent=2,
        )
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _as_element(g, i):
    if isinstance(g, AlgebraElement):
        return g
    if isinstance(g, RealizableElement):
        return g.element
    return AlgebraElement(np.asarray(g), f"G{i}")


def ad_orbit(x, y, tol=1e-9):
    """Maximal independent prefix of {Y, ad(X)Y, ad(X)^2 Y, ...}, each term normalized."""
    x, y = _as_element(x, 0), _as_element(y, 1)
    cap = x.dim**2 - 1
    out = []
    v = y.matrix
    rows = []
    # a bracket below tol * |X| * |v| is rounding noise, not a new direction
    floor = tol * max(np.linalg.norm(x.matrix), 1e-300)
    while len(out) < cap:
        nv = np.linalg.norm(v)
        if nv == 0.0 or (out and nv <= floor):
            break
        v = v / nv
        rows.append(_flat(v))
        if len(independent_subset(rows, tol)) < len(rows):
            break
        out.append(AlgebraElement(v, f"ad({x.label})^{len(out)} {y.label}"))
        v = ad(x.matrix, v)
    return out


class _Conjugator:
    """Fast s -> exp(sX) Y exp(-sX) through the eigenbasis of the skew-Hermitian X."""

    def __init__(self, x, y):
        w, v = np.linalg.eigh(1j * x)  # x = -i v diag(w) v^dag
        self.v = v
        self.phase = -1j * (w[:, None] - w[None, :])
        self.yt = v.conj().T @ y @ v

    def __call__(self, s):
        return self.v @ (np.exp(s * self.phase) * self.yt) @ self.v.conj().T

    def rows(self, points):
        return np.array([_flat(self(s)) for s in points])

    def window(self, rel=1e-9):
        """Half-width of a sampling interval that resolves the slowest beat in the orbit."""
        amp = np.abs(self.yt)
        present = self.phase.imag[amp > rel * amp.max(initial=0.0)]
        freqs = np.unique(np.round(present, 12))
        if freqs.size < 2:
            return 1.0
        gaps = np.diff(freqs)
        gaps = gaps[gaps > rel * np.abs(freqs).max()]
        if gaps.size == 0:
            return 1.0
        return float(min(max(1.0, np.pi / gaps.min()), 1e9))


def _sigma_min(conj, points, scale):
    return condition_number(conj.rows(points) / scale)[1]


def select_sample_points(x, y, n, seed=0, tol=1e-7, restarts=8, min_step=1e-3, window=None):
    """n distinct points s with {exp(s ad X) Y} linearly independent.

    Points lie in [-w, w]. The default window is 1 unless two frequencies of
    ad(X) present in Y are closer than pi, in which case w = pi / (smallest
    gap) so the slow beat can be resolved. Random start followed by coordinate
    ascent on the smallest singular value of the stacked (normalized)
    conjugates.
    """
    if n < 1:
        raise DomainError("need at least one sample point")
    if n == 1:
        return [0.0]
    x, y = _as_element(x, 0), _as_element(y, 1)
    conj = _Conjugator(x.matrix, y.matrix)
    w = conj.window() if window is None else float(window)
    scale = np.linalg.norm(y.matrix) * np.sqrt(2.0)
    rng = np.random.default_rng(seed)
    best_pts, best_val = None, -1.0
    for _ in range(restarts):
        pts = list(np.sort(rng.uniform(-w, w, n)))
        val = _sigma_min(conj, pts, scale)
        step = 0.25 * w
        while step >= min_step * w:
            moved = False
            for i in range(n):
                for cand in (pts[i] + step, pts[i] - step):
                    if not -w <= cand <= w:
                        continue
                    trial = pts[:i] + [cand] + pts[i + 1 :]
                    tv = _sigma_min(conj, trial, scale)
                    if tv > val:
                        pts, val, moved = trial, tv, True
                        break
            if not moved:
                step /= 2
        if val > best_val:
            best_pts, best_val = pts, val
        if best_val > tol:
            break
    if best_val <= tol or len(set(best_pts)) < n:
        raise SamplePointError(
            f"no {n} independent conjugates found (sigma_min {best_val:.3g}); orbit length overestimated?"
        )
    return [float(s) for s in best_pts]


def _append_independent(accepted_rows, candidates, tol):
    """Indices of candidates that extend span(accepted_rows), checked against the whole set."""
    start = len(accepted_rows)
    rows = list(accepted_rows) + [_flat(c) for c in candidates]
    keep = independent_subset(rows, tol)
    return [k - start for k in keep if k >= start]


def closure(generators, tol=1e-9, track_recipes=False, engine=None, seed=0, fields=None, max_passes=None):
    """Basis of the smallest Lie algebra containing ``generators``.

    ``engine`` defaults to 'realizable' when recipes are tracked and 'abstract'
    otherwise. ``fields`` optionally tags each generator with its physical
    field vector for recipe export.
    """
    gens = [_as_element(g, i) for i, g in enumerate(generators)]
    if not gens:
        raise ValidationError("closure needs at least one generator")
    dims = {g.dim for g in gens}
    if len(dims) != 1:
        raise DimensionError(f"generators have mixed dimensions {sorted(dims)}")
    n = dims.pop()
    engine = engine or ("realizable" if track_recipes else "abstract")
    if engine not in ("abstract", "realizable"):
        raise ValidationError(f"unknown closure engine {engine!r}")
    if fields is not None and len(fields) != len(gens):
        raise ValidationError("fields must match the generators one to one")
    max_passes = max_passes or n * n

    basis, rows, recipes = [], [], []
    for i in _append_independent([], [g.matrix for g in gens], tol):
        g = gens[i]
        basis.append(g)
        rows.append(_flat(g.matrix))
        core = Pulse(g.matrix, 1.0, i, None if fields is None else tuple(fields[i]))
        recipes.append(RealizableElement(g, (), core, f"generator {i}"))

    iterations = 0
    while iterations < max_passes:
        iterations += 1
        grew = False
        if engine == "abstract":
            pairs = [(j, k) for j in range(len(basis)) for k in range(j + 1, len(basis))]
        else:
            pairs = [(j, k) for j in range(len(gens)) for k in range(len(basis))]
        for j, k in pairs:
            if len(basis) == n * n - 1:
                break
            x = basis[j] if engine == "abstract" else gens[j]
            y = basis[k]
            orbit = ad_orbit(x, y, tol)
            if engine == "abstract":
                cands = [e.matrix for e in orbit[1:]]
                for i in _append_independent(rows, cands, tol):
                    e = AlgebraElement(cands[i], f"[{x.label}^{i + 1}, {y.label}]")
                    basis.append(e)
                    rows.append(_flat(e.matrix))
                    grew = True
                continue
            if len(orbit) < 2:
                continue
            pts = select_sample_points(x, y, len(orbit), seed=seed + 7919 * j + k)
            conj = _Conjugator(x.matrix, y.matrix)
            cands = [conj(s) for s in pts]
            for i in _append_independent(rows, cands, tol):
                s = pts[i]
                m = cands[i]
                m = 0.5 * (m - m.conj().T)
                e = AlgebraElement(m, f"Ad(e^({s:.4g} {x.label})) {y.label}")
                pulse = Pulse(x.matrix, s, j, None if fields is None else tuple(fields[j]))
                parent = recipes[k]
                recipes.append(
                    RealizableElement(e, (pulse,) + parent.conjugators, parent.core, f"pair ({j}, {k})")
                )
                basis.append(e)
                rows.append(_flat(m))
                grew = True
        if not grew:
            break
    return ClosureResult(
        basis=basis,
        iterations=iterations,
        realizable=recipes if engine == "realizable" else None,
        engine=engine,
    )


def span_residual(x, basis):
    """Distance from x to span(basis), in the Frobenius norm."""
    a = np.column_stack([_flat(_as_element(b, i).matrix) for i, b in enumerate(basis)])
    t = _flat(x)
    sol, *_ = np.linalg.lstsq(a, t, rcond=None)
    return float(np.linalg.norm(a @ sol - t))
