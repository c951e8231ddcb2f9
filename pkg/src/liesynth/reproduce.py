"""Reference checks for the coupled-spin example, shared by the CLI report.

Each check returns a ``Check`` with the measured values. Nothing here is
tuned to pass: thresholds are the published figures and their tolerances.
"""
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .closure import AlgebraElement, closure
from .control import build_control_basis, components_in_basis
from .matrix_core import (
    BranchAmbiguityWarning,
    QI,
    QJ,
    ad,
    gram_determinant_16,
    mat_exp,
    mat_log_unitary,
)
from .spin import (
    PRESERVER_SPAN,
    GeneratorSet,
    NamedBasis,
    PhysicalConstants,
    control_generators,
    entanglement_degree,
    equal_gamma_constants,
    gell_mann_basis,
    k_spectrum,
    killing_form,
    verify_bracket_table,
)
from .synth import synthesize
from .wei_norman import WeiNormanProblem, find_coordinates, integrate, reconstruction_error

PAPER_X = np.array([
    -0.287893, -0.41226, 0.178931, -0.846392, 0.248348, 0.215918, 0.163212, 0.77681,
    0.143116, 0.204211, 0.19128, 0.219224, 0.517963, -0.363032, -0.269563,
])
PAPER_H = np.array([
    -0.0724497, -0.0480297, 0.0459191, -0.0680989, 0.0333669, 0.0469188, 0.0328527,
    -0.1253844, 0.2032888, 0.0477131, 0.019957, 0.0193781, 0.0793817, -0.0672283,
    -0.0156309,
])
PAPER_GAMMA_7 = {(0, 0): 0.950484 + 0.216942j, (0, 3): -0.216942 - 0.049516j}


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:>2}. {self.name}: {self.detail} ({self.seconds:.2f} s)"


def jxi():
    return np.kron(QJ, QI)


def closure_dim(dirs, equal):
    c = equal_gamma_constants() if equal else PhysicalConstants()
    labels, mats, fields = control_generators(dirs, c)
    gens = [AlgebraElement(m, lab) for m, lab in zip(mats, labels)]
    return closure(gens, fields=fields).dim


def check_closure():
    cases = [("xyz", False, 15), ("x", False, 5), ("x", True, 4), ("xy", False, 15), ("xy", True, 9)]
    got, slow = [], 0.0
    for dirs, equal, want in cases:
        t = time.perf_counter()
        got.append(closure_dim(dirs, equal))
        slow = max(slow, time.perf_counter() - t)
    got.append(closure_dim("xyz", True))
    ok = got[:5] == [c[2] for c in cases] and got[5] == 15 and slow < 5.0
    return ok, f"dims {got} (xyz/x/x=/xy/xy=/xyz=), slowest {slow:.2f} s"


def random_gamma_pairs(k, rng):
    out = []
    while len(out) < k:
        gn, ge = rng.uniform(0.0, 50_000, 2)
        if gn + ge > 1.0:
            out.append((float(gn), float(ge)))
    return out


def check_determinants(seed=0):
    rng = np.random.default_rng(seed)
    worst_l, worst_kk, worst_flip = 0.0, 0.0, 0.0
    for gn, ge in random_gamma_pairs(20, rng):
        nb = NamedBasis(PhysicalConstants(gamma_n=gn, gamma_e=ge))
        worst_l = max(worst_l, abs(gram_determinant_16(nb.fifteen("L")) + 1 / 16))
        r = (ge - gn) / (ge + gn)
        d = gram_determinant_16(nb.fifteen("KK"))
        worst_kk = max(worst_kk, abs(d + 0.5 * r**3))
        worst_flip = max(worst_flip, abs(d - 0.5 * r**3))
    eq = gram_determinant_16(NamedBasis(equal_gamma_constants()).fifteen("KK"))
    ok = worst_l <= 1e-9 and worst_kk <= 1e-9 and abs(eq) <= 1e-9
    return ok, (
        f"L-variant max dev {worst_l:.1e}; KK-variant max dev {worst_kk:.3g} "
        f"(from +r^3/2: {worst_flip:.1e}); KK at equal gammas {eq:.1e}"
    )


def check_brackets():
    rep = verify_bracket_table()
    return rep.max_residual <= 1e-12 and len(rep.residuals) == 15, (
        f"{len(rep.residuals)} identities, max residual {rep.max_residual:.1e}"
    )


def check_killing():
    lam = gell_mann_basis()
    kf = killing_form(lam)
    dev = float(np.abs(kf + 12 * np.eye(8)).max())
    comm = max(float(np.abs(ad(lam[7], lam[i])).max()) for i in range(3))
    return dev <= 1e-8 and comm <= 1e-12, f"max |K + 12 I| = {dev:.1e}; [l8, l1..3] = {comm:.1e}"


def check_conditioning():
    b = build_control_basis()
    ok = abs(b.sigma_max - 15.82) <= 0.05 and abs(b.sigma_min - 1.70) <= 0.05 and abs(b.cond - 9.3) <= 0.1
    return ok, f"sigma_max {b.sigma_max:.4f}, sigma_min {b.sigma_min:.4f}, cond {b.cond:.4f}"


def check_worked_example():
    basis = build_control_basis()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        log = mat_log_unitary(jxi())
    x = components_in_basis(log, basis)
    problem = WeiNormanProblem.from_basis(basis.matrices, x)
    h, n, trace = find_coordinates(problem, dt=0.001, eps=0.1)
    t_star = trace.first_breakdown_time
    rms = reconstruction_error(problem, h, n)
    g7 = mat_exp(log / n)
    gdev = max(abs(g7[k] - v) for k, v in PAPER_GAMMA_7.items())
    xdev = float(np.abs(x - PAPER_X).max())
    hdev = float(np.abs(h - PAPER_H).max())
    ok = (
        xdev <= 1e-3
        and t_star is not None
        and 0.12 <= t_star <= 0.20
        and n == 7
        and hdev <= 5e-3
        and rms <= 1e-8
        and gdev <= 1e-3
    )
    return ok, (
        f"|x - x_ref| {xdev:.1e}, t* {t_star}, n {n}, |h - h_ref| {hdev:.1e}, "
        f"rms {rms:.1e}, gamma_1/n dev {gdev:.1e}"
    )


def rk4_ratio(problem, dt=0.02):
    """Residual ratio r(dt) / r(dt/2) for a breakdown-free target (16 for fourth order)."""
    res = []
    for d in (dt, dt / 2):
        tr = integrate(problem, d, eps=1e-9)
        res.append(reconstruction_error(problem, tr.tau[-1]))
    return res[0] / res[1]


def check_wei_norman(samples=100, seed=1, order_samples=10):
    basis = build_control_basis()
    rng = np.random.default_rng(seed)
    base = WeiNormanProblem.from_basis(basis.matrices, np.zeros(15))
    worst = 0.0
    ratios = []
    for i in range(samples):
        x = rng.uniform(-0.1, 0.1, 15)
        p = base.with_target(x)
        tau, n, _ = find_coordinates(p)
        worst = max(worst, reconstruction_error(p, tau, n))
        if i < order_samples:
            ratios.append(rk4_ratio(base.with_target(x / n)))
    ratio = float(np.median(ratios))
    ok = worst <= 1e-9 and abs(ratio - 16) <= 4
    return ok, f"{samples} targets, worst rms {worst:.1e}; median step-halving ratio {ratio:.2f}"


def random_state(rng):
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return z / np.linalg.norm(z)


def check_entanglement(samples=100, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        h = sum(c * b for c, b in zip(rng.normal(size=7), PRESERVER_SPAN))
        u = mat_exp(h)
        psi = random_state(rng)
        worst = max(worst, abs(entanglement_degree(u @ psi) - entanglement_degree(psi)))
    k = GeneratorSet().K
    psi0 = np.array([1, 0, 0, 0], dtype=complex)
    ts = np.linspace(0, 4 * np.pi, 2001)
    peak = max(entanglement_degree(mat_exp(t * k) @ psi0) for t in ts)
    back = entanglement_degree(mat_exp(4 * np.pi * k) @ psi0)
    ok = worst <= 1e-12 and peak >= 0.99 and back <= 1e-9
    return ok, f"invariance dev {worst:.1e}; control peak D_e {peak:.3g}, at 4 pi {back:.1e}"


def check_spectrum():
    w = k_spectrum()
    want = np.array([1.5j, -0.5j, -0.5j, -0.5j])
    dev = float(np.abs(w - want).max())
    per = float(np.abs(mat_exp(4 * np.pi * GeneratorSet().K) - np.eye(4)).max())
    tp = PhysicalConstants().period_units
    ok = dev <= 1e-12 and per <= 1e-10 and abs(tp - 2.14) <= 0.01
    return ok, f"spectrum dev {dev:.1e}; |exp(4 pi K) - I| {per:.1e}; period {tp:.4f} units"


def check_accounting():
    s = synthesize(jxi(), build_control_basis(), merge=False)
    per, total = len(s.cycle), len(s.stages)
    t_us = s.total_time_ns / 1000
    ok = 43 <= per <= 46 and total == 7 * per and s.n == 7 and 1 <= t_us <= 10
    return ok, (
        f"{per} stages per cycle, {total} total, time {t_us:.2f} us "
        f"(absolute {s.total_abs_time_ns / 1000:.2f} us)"
    )


CHECKS = [
    (1, "closure dimensions", check_closure),
    (2, "16x16 determinants", check_determinants),
    (3, "bracket table", check_brackets),
    (4, "Gell-Mann Killing form", check_killing),
    (5, "control-basis conditioning", check_conditioning),
    (6, "j x i worked example", check_worked_example),
    (7, "Wei-Norman properties", check_wei_norman),
    (8, "entanglement invariance", check_entanglement),
    (9, "K spectrum and period", check_spectrum),
    (10, "schedule accounting", check_accounting),
]


def run_all(only=None):
    out = []
    for number, name, fn in CHECKS:
        if only and number not in only:
            continue
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed row, not a dead report
            ok, detail = False, f"error: {type(exc).__name__}: {exc}"
        out.append(Check(number, name, bool(ok), detail, time.perf_counter() - t))
    return out
