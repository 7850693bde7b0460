"""Constitutive models: shear-thinning rheology, hyperelastic wall, Hooke law.

Pointwise material laws plus the history-dependent viscosity model that
stiffens the fluid over time.  Functions are unit-agnostic unless noted;
the history model is bound to Pa*s internally (its aging term is not
dimensionally homogeneous) and converts to/from CGS poise at its boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fem, units


# ---------------------------------------------------------------------------
# shear-thinning viscosity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CarreauParams:
    """Parameters of the Carreau viscosity law.

    ``mu0`` (zero-shear) and ``mu_inf`` (infinite-shear) carry the caller's
    viscosity unit; ``relaxation`` is in seconds, ``exponent`` dimensionless.
    """

    mu0: float = 0.56          # poise (= 0.056 Pa s)
    mu_inf: float = 0.0345     # poise (= 0.00345 Pa s)
    relaxation: float = 3.313  # s
    exponent: float = 0.3568

    def __post_init__(self):
        if not self.mu0 > self.mu_inf > 0:
            raise ValueError(
                f"CarreauParams requires mu0 > mu_inf > 0 "
                f"(got mu0={self.mu0}, mu_inf={self.mu_inf})")
        if self.relaxation <= 0:
            raise ValueError(f"CarreauParams relaxation must be positive "
                             f"(got {self.relaxation})")
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"CarreauParams exponent must lie in (0, 1) "
                             f"(got {self.exponent})")


def carreau_viscosity(gamma_dot, params: CarreauParams,
                      mu0=None, mu_inf=None):
    """Carreau viscosity at shear rate ``gamma_dot`` (scalar or array).

    ``mu0``/``mu_inf`` override the plateau viscosities (used by the
    history model, which shifts them over time).
    """
    g = np.asarray(gamma_dot, dtype=float)
    lo = params.mu_inf if mu_inf is None else mu_inf
    hi = params.mu0 if mu0 is None else mu0
    b = (1.0 + (params.relaxation * g) ** 2) ** ((params.exponent - 1.0) / 2.0)
    # Convex-combination form: returns exactly mu0 at zero shear (b = 1).
    out = lo * (1.0 - b) + hi * b
    return out if out.ndim else float(out)


def shear_rate(grad_v):
    """Shear rate from velocity gradients H[i, j] = dv_i/dx_j.

    sqrt(2 tr(D^2)) with D the symmetric gradient; accepts (..., 2, 2).
    """
    h = np.asarray(grad_v, dtype=float)
    return np.sqrt(2.0 * h[..., 0, 0] ** 2 + 2.0 * h[..., 1, 1] ** 2
                   + (h[..., 0, 1] + h[..., 1, 0]) ** 2)


def shear_rate_field(v: fem.Field) -> fem.Field:
    """Nodal (degree-1) shear-rate field recovered from a velocity field."""
    grads = fem.recover_gradient(v)
    p1 = fem.FeSpace(v.space.mesh, degree=1, arity=1)
    return fem.Field(p1, shear_rate(grads))


# ---------------------------------------------------------------------------
# history-modified viscosity
# ---------------------------------------------------------------------------

#: Floor applied when aging would drive the high-shear viscosity
#: non-positive (Pa s).
MU_INF_FLOOR_PA_S = 1e-4


@dataclass
class ViscosityHistory:
    """Ring buffer of recent viscosity fields for the aging model.

    Stores at most the five most recent fields (in Pa*s) plus the step
    counter ``k``; ``clamped`` records whether the positivity floor was
    ever applied.
    """

    depth: int = 5
    k: int = 0
    fields_pa_s: list = field(default_factory=list)
    clamped: bool = False

    def push(self, values_pa_s: np.ndarray) -> None:
        self.fields_pa_s.append(np.asarray(values_pa_s, dtype=float).copy())
        if len(self.fields_pa_s) > self.depth:
            self.fields_pa_s.pop(0)
        self.k += 1

    def reference_viscosity(self, base_mu0_pa_s: float) -> np.ndarray | float:
        """The history viscosity driving the aging term (Pa*s).

        Constant 0.056 before any history exists, constant 0.035 for the
        first four steps, then the pointwise mean of the five most recent
        viscosity fields.
        """
        if self.k == 0:
            return base_mu0_pa_s
        if self.k <= 4:
            return 0.035
        return np.mean(np.stack(self.fields_pa_s[-5:], axis=0), axis=0)


def modified_carreau_step(hist: ViscosityHistory, gamma_dot: fem.Field,
                          t: float, params: CarreauParams) -> fem.Field:
    """Advance the history-modified viscosity model one step.

    Parameters
    ----------
    hist : ViscosityHistory
        Mutated: the resulting field is pushed and ``k`` incremented.
    gamma_dot : Field
        Degree-1 shear-rate field from the previous velocity (1/s).
    t : float
        Physical time k*dt of the step (must satisfy t = hist.k * dt).
    params : CarreauParams
        Plateau viscosities in poise (CGS); converted internally.

    Returns
    -------
    Field
        Degree-1 viscosity field in poise.
    """
    mu0 = params.mu0 / units.PA_S
    mu_inf = params.mu_inf / units.PA_S
    ref = hist.reference_viscosity(mu0)
    shift = t * 1e-3 * np.asarray(ref, dtype=float) ** 0.2
    mu_inf_t = mu_inf - shift
    floor_hit = mu_inf_t <= 0
    if np.any(floor_hit):
        hist.clamped = True
        mu_inf_t = np.where(floor_hit, MU_INF_FLOOR_PA_S, mu_inf_t)
    mu0_t = mu0 - shift
    bracket = (1.0 + (params.relaxation * gamma_dot.values) ** 2) ** (
        (params.exponent - 1.0) / 2.0)
    mu_pa_s = np.broadcast_to(mu_inf_t + (mu0_t - mu_inf_t) * bracket,
                              gamma_dot.values.shape)
    hist.push(mu_pa_s)
    return fem.Field(gamma_dot.space, mu_pa_s * units.PA_S)


class PlainCarreauModel:
    """Stateless Carreau viscosity field builder (CGS in/out)."""

    def __init__(self, params: CarreauParams):
        self.params = params

    def step(self, gamma_dot: fem.Field, t: float) -> fem.Field:
        return fem.Field(gamma_dot.space,
                         carreau_viscosity(gamma_dot.values, self.params))


class ModifiedCarreauModel:
    """History-modified Carreau viscosity field builder (CGS in/out)."""

    def __init__(self, params: CarreauParams):
        self.params = params
        self.history = ViscosityHistory()

    def step(self, gamma_dot: fem.Field, t: float) -> fem.Field:
        return modified_carreau_step(self.history, gamma_dot, t, self.params)


# ---------------------------------------------------------------------------
# hyperelastic wall
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperelasticParams:
    """Stored-energy constants (stress units of the caller's choosing)."""

    c0: float = 110.0 * units.N_PER_CM2
    c1: float = 100.0 * units.N_PER_CM2
    c2: float = 110.0 * units.N_PER_CM2

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError(f"HyperelasticParams requires c1, c2 > 0 "
                             f"(got c1={self.c1}, c2={self.c2})")

    @property
    def rest_pressure(self) -> float:
        """Hydrostatic pressure that makes the undeformed state stress-free."""
        return 4.0 * self.c2 - 2.0 * self.c1


def strain_energy(f, params: HyperelasticParams):
    """Stored energy density W(F) from I1 = tr(F^T F) and I2 = det(F^T F)."""
    f = np.asarray(f, dtype=float)
    i1 = np.einsum("...ij,...ij->...", f, f)
    det = f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]
    i2 = det ** 2
    return params.c0 + params.c1 * (i1 - 2.0) + params.c2 * (i2 - 2.0) ** 2


def cofactor(f):
    """Cofactor matrix of 2x2 tensors: cof(F) = det(F) F^{-T}."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[..., 0, 0] = f[..., 1, 1]
    out[..., 0, 1] = -f[..., 1, 0]
    out[..., 1, 0] = -f[..., 0, 1]
    out[..., 1, 1] = f[..., 0, 0]
    return out


def cof_tangent(h):
    """Directional derivative of cofactor: d cof(F)[H] (constant in F)."""
    return cofactor(h)


def first_piola(f, params: HyperelasticParams):
    """First Piola-Kirchhoff stress of the stored energy.

    P = 2 c1 F + 4 c2 (J^3 - 2J) cof(F) with J = det F — the polynomial
    form of 2 c1 F + 4 c2 (I2 - 2) I2 F^{-T}.
    """
    f = np.asarray(f, dtype=float)
    j = f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]
    if np.any(j <= 0):
        raise ValueError("deformation gradient has non-positive determinant")
    coef = 4.0 * params.c2 * (j ** 3 - 2.0 * j)
    return 2.0 * params.c1 * f + coef[..., None, None] * cofactor(f)


def piola_tangent(f, h, params: HyperelasticParams):
    """Directional derivative dP(F)[H].

    dP[H] = 2 c1 H + 4 c2 (3J^2 - 2)(cof F : H) cof F + 4 c2 (J^3 - 2J) cof(H).
    """
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    j = f[..., 0, 0] * f[..., 1, 1] - f[..., 0, 1] * f[..., 1, 0]
    if np.any(j <= 0):
        raise ValueError("deformation gradient has non-positive determinant")
    cof = cofactor(f)
    trace_term = np.einsum("...ij,...ij->...", cof, h)
    out = 2.0 * params.c1 * h
    out = out + (4.0 * params.c2 * (3.0 * j ** 2 - 2.0)
                 * trace_term)[..., None, None] * cof
    out = out + (4.0 * params.c2 * (j ** 3 - 2.0 * j))[..., None, None] * cofactor(h)
    return out


# ---------------------------------------------------------------------------
# linear elasticity (rupture stage)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric 2x2 tensor (s11, s22, s12)."""

    s11: float
    s22: float
    s12: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])


@dataclass(frozen=True)
class LameParams:
    """Plane-strain Lame parameters derived from (E, nu)."""

    youngs_modulus: float
    poisson: float

    def __post_init__(self):
        if self.youngs_modulus <= 0:
            raise ValueError(f"youngs_modulus must be positive "
                             f"(got {self.youngs_modulus})")
        if not 0 <= self.poisson < 0.5:
            raise ValueError(f"poisson must lie in [0, 0.5) (got {self.poisson})")

    @property
    def lam(self) -> float:
        e, nu = self.youngs_modulus, self.poisson
        return nu * e / ((1.0 - 2.0 * nu) * (1.0 + nu))

    @property
    def mu(self) -> float:
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson))


def hooke_stress(strain, params: LameParams):
    """Hooke stress sigma = 2 mu eps + lam tr(eps) I for (..., 2, 2) strains."""
    eps = np.asarray(strain, dtype=float)
    tr = eps[..., 0, 0] + eps[..., 1, 1]
    out = 2.0 * params.mu * eps
    out[..., 0, 0] += params.lam * tr
    out[..., 1, 1] += params.lam * tr
    return out


def max_shear(sigma):
    """Maximum shear stress sqrt(((s11-s22)/2)^2 + s12^2).

    Accepts a SymTensor2, a (..., 2, 2) array, or component arrays stacked
    as (..., 3) = (s11, s22, s12).  Equals half the eigenvalue gap of the
    symmetric part.
    """
    if isinstance(sigma, SymTensor2):
        return float(np.hypot((sigma.s11 - sigma.s22) / 2.0, sigma.s12))
    arr = np.asarray(sigma, dtype=float)
    if arr.shape[-2:] == (2, 2):
        s11, s22 = arr[..., 0, 0], arr[..., 1, 1]
        s12 = 0.5 * (arr[..., 0, 1] + arr[..., 1, 0])
    else:
        s11, s22, s12 = arr[..., 0], arr[..., 1], arr[..., 2]
    out = np.hypot((s11 - s22) / 2.0, s12)
    return out if out.ndim else float(out)
