"""Coupled nucleus-electron spin pair: constants, generators, and algebra checks.

Generators are dimensionless. A field of ``b`` units (``b * B_unit`` mT) held
for ``t`` units (``t * tau_unit`` ns) gives exp((b . field_gens + K_U) t) with
the unit-scaled generators of ``GeneratorSet``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, ValidationError
from .matrix_core import (
    ONE,
    QI,
    QJ,
    QK,
    ad,
    mat_exp,
    real_parameters,
)

kron = np.kron

# entanglement-preserving algebra: i 1x1 and the local quaternion terms
PRESERVER_SPAN = (
    1j * kron(ONE, ONE),
    kron(QI, ONE),
    kron(QJ, ONE),
    kron(QK, ONE),
    kron(ONE, QI),
    kron(ONE, QJ),
    kron(ONE, QK),
)
Q_ENTANGLE = kron(QJ, QJ)

CONFIG_KEYS = {
    "gamma_n_MHz_per_T": "gamma_n",
    "gamma_e_MHz_per_T": "gamma_e",
    "kappa_MHz": "kappa",
    "B_unit_mT": "B_unit",
    "tau_unit_ns": "tau_unit",
}


@dataclass(frozen=True)
class PhysicalConstants:
    gamma_n: float = 17.23  # MHz/T
    gamma_e: float = 27970.0  # MHz/T
    kappa: float = 58.765  # MHz
    B_unit: float = 10.0  # mT
    tau_unit: float = 100.0  # ns
    field_cap_units: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValidationError("kappa must be positive")
        if self.B_unit <= 0 or self.tau_unit <= 0:
            raise ValidationError("unit scales must be positive")
        if self.gamma_n + self.gamma_e == 0:
            raise ValidationError("gamma_n + gamma_e must be nonzero")

    @property
    def field_scale(self):
        """Multiplier turning X0 into X_U: B_unit (gamma_n + gamma_e) tau_unit."""
        return self.B_unit * 1e-3 * (self.gamma_n + self.gamma_e) * 1e6 * self.tau_unit * 1e-9

    @property
    def coupling_scale(self):
        return self.kappa * 1e6 * self.tau_unit * 1e-9

    @property
    def period_units(self):
        """Period of exp(K_U t), in time units."""
        return 4 * np.pi / self.coupling_scale

    @property
    def period_ns(self):
        return self.period_units * self.tau_unit

    @property
    def equal_gammas(self):
        return np.isclose(self.gamma_n, self.gamma_e, rtol=1e-12, atol=0.0)

    @classmethod
    def from_file(cls, path):
        """Read ``key = value`` lines; keys as in CONFIG_KEYS, '#' starts a comment."""
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValidationError(f"{path}:{lineno}: expected key=value")
                key, val = (s.strip() for s in line.split("=", 1))
                if key not in CONFIG_KEYS:
                    raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[CONFIG_KEYS[key]] = float(val)
                except ValueError as exc:
                    raise ValidationError(f"{path}:{lineno}: bad number {val!r}") from exc
        return cls(**values)


def equal_gamma_constants(gamma=17.23, **kw):
    return PhysicalConstants(gamma_n=gamma, gamma_e=gamma, **kw)


@dataclass(frozen=True)
class GeneratorSet:
    """The four physical directions X0, Y0, Z0, K and their unit-scaled versions."""

    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    @cached_property
    def X0(self):
        c = self.constants
        return (-c.gamma_n * kron(QI, ONE) + c.gamma_e * kron(ONE, QI)) / (c.gamma_n + c.gamma_e)

    @cached_property
    def Y0(self):
        c = self.constants
        return (c.gamma_n * kron(QJ, ONE) - c.gamma_e * kron(ONE, QJ)) / (c.gamma_n + c.gamma_e)

    @cached_property
    def Z0(self):
        c = self.constants
        return (-c.gamma_n * kron(QK, ONE) + c.gamma_e * kron(ONE, QK)) / (c.gamma_n + c.gamma_e)

    @cached_property
    def K(self):
        return 0.5j * (kron(QI, QI) + kron(QJ, QJ) + kron(QK, QK))

    @property
    def XU(self):
        return self.constants.field_scale * self.X0

    @property
    def YU(self):
        return self.constants.field_scale * self.Y0

    @property
    def ZU(self):
        return self.constants.field_scale * self.Z0

    @property
    def KU(self):
        return self.constants.coupling_scale * self.K

    def field_directions(self):
        return (self.XU, self.YU, self.ZU)

    def field_generator(self, bx, by, bz, duration, allow_over_cap=False):
        """(bx X_U + by Y_U + bz Z_U + K_U) * duration, fields and time in units."""
        cap = self.constants.field_cap_units
        if not allow_over_cap and max(abs(bx), abs(by), abs(bz)) > cap:
            raise ValidationError(
                f"field ({bx}, {by}, {bz}) units exceeds the +/-{cap} unit hardware cap"
            )
        if duration < 0:
            raise ValidationError("pulse duration must be non-negative")
        return (bx * self.XU + by * self.YU + bz * self.ZU + self.KU) * duration


def k_spectrum():
    """Eigenvalues of K sorted by imaginary part (descending)."""
    w = np.linalg.eigvals(GeneratorSet().K)
    w = np.where(np.abs(w.real) < 1e-14, 1j * w.imag, w)
    return w[np.argsort(-w.imag)]


NAMED_ORDER = (
    "X", "Y", "Z", "KX", "KY", "KZ", "KXX", "KYY", "KZZ",
    "LX", "LY", "LZ", "KXY", "KYZ", "KZX",
)
KK_NAMES = ("XKK", "YKK", "ZKK")


class NamedBasis:
    """The fifteen named su(4) elements built from X, Y, Z and K, plus the KK alternates.

    ``kappa`` defaults to the coupling constant in MHz; the bracket table holds
    for any positive value.
    """

    def __init__(self, constants=None, kappa=None):
        self.constants = constants or PhysicalConstants()
        self.kappa = self.constants.kappa if kappa is None else float(kappa)
        gens = GeneratorSet(self.constants)
        gn, ge, kap = self.constants.gamma_n, self.constants.gamma_e, self.kappa
        s = gn + ge
        K = gens.K
        m = {"K": K}
        m["X"] = gens.X0 + kap * K
        m["Y"] = gens.Y0 + kap * K
        m["Z"] = gens.Z0 + kap * K
        m["KX"] = 0.5j * (-kron(QJ, QK) + kron(QK, QJ))
        m["KY"] = 0.5j * (kron(QK, QI) - kron(QI, QK))
        m["KZ"] = 0.5j * (-kron(QI, QJ) + kron(QJ, QI))
        m["KXX"] = -0.5j * (kron(QJ, QJ) + kron(QK, QK))
        m["KYY"] = -0.5j * (kron(QI, QI) + kron(QK, QK))
        m["KZZ"] = -0.5j * (kron(QI, QI) + kron(QJ, QJ))
        m["LX"] = -0.25 * (kron(QI, ONE) + kron(ONE, QI))
        m["LY"] = 0.25 * (kron(QJ, ONE) + kron(ONE, QJ))
        m["LZ"] = -0.25 * (kron(QK, ONE) + kron(ONE, QK))
        m["KXY"] = -0.5j / s * (gn * kron(QI, QJ) + ge * kron(QJ, QI)) - kap / 2 * (
            kron(QI, ONE) - kron(ONE, QI)
        )
        m["KYZ"] = -0.5j / s * (gn * kron(QJ, QK) + ge * kron(QK, QJ)) - kap / 2 * (
            -kron(QJ, ONE) + kron(ONE, QJ)
        )
        # printed a second time under the name K_ZZ; the bracket table fixes it as K_ZX
        m["KZX"] = 0.5j / s * (gn * kron(QK, QI) + ge * kron(QI, QK)) - kap / 2 * (
            kron(QK, ONE) - kron(ONE, QK)
        )
        m["XKK"] = 0.5 * (kron(QI, ONE) - kron(ONE, QI))
        m["YKK"] = 0.5 * (-kron(QJ, ONE) + kron(ONE, QJ))
        m["ZKK"] = 0.5 * (kron(QK, ONE) - kron(ONE, QK))
        self.matrices = m

    def __getitem__(self, name):
        return self.matrices[name]

    def fifteen(self, variant="L"):
        """The fifteen in canonical order; variant 'KK' swaps L_* for the *_KK."""
        names = list(NAMED_ORDER)
        if variant == "KK":
            names[9:12] = KK_NAMES
        elif variant != "L":
            raise ValidationError(f"unknown variant {variant!r}")
        return [self.matrices[n] for n in names]

    def bracket_identities(self):
        """(label, lhs, rhs) for each row of the bracket table."""
        m, kap = self.matrices, self.kappa

        def half(a, b):
            return 0.5 * ad(m[a], m[b])

        rows = []
        for d in "XYZ":
            rows.append((f"K{d} = 1/2 [K, {d}]", m[f"K{d}"], half("K", d)))
            rows.append((f"{d}KK = 1/2 [K, K{d}]", m[f"{d}KK"], half("K", f"K{d}")))
            rows.append(
                (
                    f"K{d}{d} = 1/2 [K{d}, {d}] + kappa {d}KK",
                    m[f"K{d}{d}"],
                    half(f"K{d}", d) + kap * m[f"{d}KK"],
                )
            )
        rows.append(("KXY = 1/2 [KX, Y]", m["KXY"], half("KX", "Y")))
        rows.append(("KYZ = 1/2 [KY, Z]", m["KYZ"], half("KY", "Z")))
        rows.append(("KZX = 1/2 [KZ, X]", m["KZX"], half("KZ", "X")))
        rows.append(("LZ = 1/2 [KX, KY]", m["LZ"], half("KX", "KY")))
        rows.append(("LX = 1/2 [KY, KZ]", m["LX"], half("KY", "KZ")))
        rows.append(("LY = 1/2 [KZ, KX]", m["LY"], half("KZ", "KX")))
        return rows


@dataclass
class BracketReport:
    residuals: dict
    tol: float

    @property
    def max_residual(self):
        return max(self.residuals.values())

    @property
    def violations(self):
        return [k for k, v in self.residuals.items() if v > self.tol]

    @property
    def ok(self):
        return not self.violations


def verify_bracket_table(basis=None, tol=1e-12):
    basis = basis or NamedBasis()
    res = {label: float(np.abs(lhs - rhs).max()) for label, lhs, rhs in basis.bracket_identities()}
    return BracketReport(res, tol)


def _two_generator_terms(basis):
    m, c = basis.matrices, basis.constants
    gn, ge, kap = c.gamma_n, c.gamma_e, basis.kappa
    r = (gn - ge) / (gn + ge)
    terms = {
        "[KXY, X]": ad(m["KXY"], m["X"]),
        "[KX, KY]": ad(m["KX"], m["KY"]),
        "K": m["K"],
        "KX": m["KX"],
        "KY": m["KY"],
    }
    printed = {
        "[KXY, X]": 1.0,
        "[KX, KY]": kap * r**2,
        "K": kap**2 * r,
        "KX": 2 * kap**2,
        "KY": 2 * gn * ge / (gn + ge) ** 2,
    }
    return terms, printed, kap * r * m["Z"]


def two_generator_identity_residual(basis=None):
    """Norm of (printed left side) - kappa (gn-ge)/(gn+ge) Z for the two-direction identity."""
    basis = basis or NamedBasis()
    terms, coeffs, rhs = _two_generator_terms(basis)
    lhs = sum(coeffs[k] * terms[k] for k in terms)
    return float(np.linalg.norm(lhs - rhs))


def two_generator_identity_fit(basis=None):
    """Least-squares coefficients for the same terms that best reproduce the right side.

    Returns (coefficients, residual_norm, rhs_norm). The coefficient of
    [KXY, X] is pinned to 1 as in the printed form.
    """
    basis = basis or NamedBasis()
    terms, _, rhs = _two_generator_terms(basis)
    names = [k for k in terms if k != "[KXY, X]"]
    target = real_parameters(rhs - terms["[KXY, X]"])
    a = np.column_stack([real_parameters(terms[k]) for k in names])
    sol, *_ = np.linalg.lstsq(a, target, rcond=None)
    coeffs = {"[KXY, X]": 1.0, **dict(zip(names, sol))}
    lhs = sum(coeffs[k] * terms[k] for k in terms)
    return coeffs, float(np.linalg.norm(lhs - rhs)), float(np.linalg.norm(rhs))


def gell_mann_basis(basis=None):
    """The eight su(3) elements spanning the ideal of the equal-gamma two-direction algebra."""
    basis = basis or NamedBasis(equal_gamma_constants())
    if not basis.constants.equal_gammas or basis.constants.gamma_n == 0:
        raise DomainError("the Gell-Mann basis needs gamma_n == gamma_e != 0")
    m, kap = basis.matrices, basis.kappa
    X, Y, K = m["X"], m["Y"], m["K"]
    r2, r3 = np.sqrt(2.0), np.sqrt(3.0)
    return [
        m["KXX"] - m["KYY"],
        2 * (m["KXY"] - kap * X + kap**2 * K),
        2 * m["LZ"],
        (X - kap * K + m["KY"]) / r2,
        (Y - kap * K - m["KX"]) / r2,
        (X - kap * K - m["KY"]) / r2,
        -(Y - kap * K + m["KX"]) / r2,
        (m["KXX"] + m["KYY"]) / r3,
    ]


def adjoint_matrix(x, basis_mats):
    """Matrix of ad(x) restricted to span(basis_mats), in basis coordinates."""
    v = np.column_stack([real_parameters(b) for b in basis_mats])
    cols = [real_parameters(ad(x, b)) for b in basis_mats]
    sol, *_ = np.linalg.lstsq(v, np.column_stack(cols), rcond=None)
    return sol


def killing_form(elements=None):
    """Tr(ad(l_j) ad(l_k)) over the span of the given elements (Gell-Mann by default)."""
    elements = gell_mann_basis() if elements is None else elements
    ads = [adjoint_matrix(e, elements) for e in elements]
    n = len(elements)
    return np.array([[np.trace(ads[j] @ ads[k]) for k in range(n)] for j in range(n)])


def entanglement_degree(psi):
    """2 |z1 z4 - z2 z3| for a normalized two-spin state."""
    z = np.asarray(psi, dtype=complex).ravel()
    if z.shape != (4,):
        raise ValidationError("state must have four amplitudes")
    return float(2 * abs(z[0] * z[3] - z[1] * z[2]))


def is_entanglement_preserver(h, tol=1e-10):
    """Test h^T Q + Q h = i phi0 Q with Q = j x j.

    Returns (flag, phi0). ``preserver_projection_residual`` is the
    cross-check through the explicit spanning set.
    """
    h = np.asarray(h, dtype=complex)
    r = h.T @ Q_ENTANGLE + Q_ENTANGLE @ h
    iq = 1j * Q_ENTANGLE
    phi0 = float(np.real(np.vdot(iq, r)) / np.real(np.vdot(iq, iq)))
    residual = float(np.linalg.norm(r - phi0 * iq))
    return residual <= tol, phi0


def preserver_projection_residual(h):
    """Distance from h to the real span of PRESERVER_SPAN."""
    h = np.asarray(h, dtype=complex)
    a = np.column_stack([real_parameters_full(b) for b in PRESERVER_SPAN])
    target = real_parameters_full(h)
    sol, *_ = np.linalg.lstsq(a, target, rcond=None)
    return float(np.linalg.norm(a @ sol - target))


def real_parameters_full(x):
    """All 32 real numbers of a complex 4x4 matrix (for non-skew inputs)."""
    x = np.asarray(x, dtype=complex)
    return np.concatenate([x.real.ravel(), x.imag.ravel()])


def evolve(h, psi):
    return mat_exp(np.asarray(h, dtype=complex)) @ np.asarray(psi, dtype=complex)


_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


def direction_fields(theta, phi):
    """Unit field vector at polar angle theta, azimuth phi."""
    return (np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))


def control_generators(dirs="xyz", constants=None, angles=()):
    """Pure coupling K_U plus one unit-field generator per direction.

    Returns (labels, matrices, fields). ``angles`` adds (theta, phi) directions.
    """
    gens = GeneratorSet(constants or PhysicalConstants())
    vecs = []
    for d in dirs:
        if d not in _AXES:
            raise ValidationError(f"unknown direction {d!r}; use x, y or z")
        vecs.append((d.upper(), _AXES[d]))
    for theta, phi in angles:
        vecs.append((f"B({theta:.4g},{phi:.4g})", tuple(direction_fields(theta, phi))))
    labels, mats, fields = ["K"], [gens.KU], [(0.0, 0.0, 0.0)]
    for label, f in vecs:
        labels.append(label)
        mats.append(f[0] * gens.XU + f[1] * gens.YU + f[2] * gens.ZU + gens.KU)
        fields.append(f)
    return labels, mats, fields
