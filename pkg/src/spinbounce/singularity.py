"""Location and normal-form classification of the two-fold singularity.

At a two-fold both slip fields are tangent to ``H = 0``: the boundaries
``alpha = 0`` and ``alpha = 1`` of the rolling region meet. On the lift-off
set ``Lambda_N = 0`` this is where a rolling ball can leave the surface still
rolling. The local phase portrait is read off the second directional
derivatives of ``H`` along ``F1`` and ``F2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from spinbounce.core import BallState
from spinbounce.exceptions import ModelError, NoSingularityError
from spinbounce.filippov import SLIP_GAIN, mixed_slip_derivative
from spinbounce.surface import GRAD_H, GenericModel, KelvinVoigtModel, SurfaceModel, X, XD, Y, YD, W, as_vector

LOCATE_TOL = 1e-10
DIABOLO_TOL = 1e-6


class TwoFoldClass(str, enum.Enum):
    VISIBLE_SADDLE_LIKE = "VisibleSaddleLike"
    VISIBLE_OUTWARD_NODE = "VisibleOutwardNode"
    DEGENERATE_DIABOLO = "DegenerateDiabolo"
    OTHER = "Other"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class NormalFormFrame:
    """Scalings of the local coordinates, frozen at the singularity."""

    theta: float
    phi: float
    l11: float
    l22: float

    @classmethod
    def at(cls, model: SurfaceModel, s) -> NormalFormFrame:
        l11 = mixed_slip_derivative(model, s, 1, 1)
        l22 = mixed_slip_derivative(model, s, 2, 2)
        if l11 == 0.0 or l22 == 0.0:
            raise ModelError("normal-form frame undefined: a second directional derivative vanishes")
        return cls(
            theta=abs(l11 * l22) ** -0.5,
            phi=abs(l22 / l11) ** 0.25,
            l11=l11,
            l22=l22,
        )

    def coordinates(self, model: SurfaceModel, state) -> np.ndarray:
        """``(z1, z2, z3)``: scaled ``H``, ``-F1 . grad H`` and ``F2 . grad H``."""
        p = as_vector(state)
        g1 = model.tangential_load(p) - SLIP_GAIN * model.mu * model.normal_force(p)
        g2 = model.tangential_load(p) + SLIP_GAIN * model.mu * model.normal_force(p)
        h = p[XD] + p[W]
        return np.array([self.theta * h, -self.phi * self.theta * g1, self.theta * g2 / self.phi])


@dataclass(frozen=True)
class TwoFoldReport:
    s: BallState
    sigma1: int
    sigma2: int
    nu1: float
    nu2: float
    nu_product: float
    gamma_minus: complex
    gamma_plus: complex
    classification: TwoFoldClass
    second_derivatives: tuple  # (L11, L12, L21, L22), Lij = (Fi . grad)(Fj . grad) H

    def as_dict(self) -> dict:
        def num(z):
            z = complex(z)
            return z.real if z.imag == 0.0 else [z.real, z.imag]

        return {
            "s": dict(zip(("x", "x_dot", "y", "y_dot", "omega"), self.s.as_array().tolist())),
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "nu_product": self.nu_product,
            "gamma_minus": num(self.gamma_minus),
            "gamma_plus": num(self.gamma_plus),
            "classification": self.classification.value,
            "second_derivatives": list(self.second_derivatives),
        }


def _residual(model, p):
    a = model.tangential_load(p)
    lam = model.normal_force(p)
    k = SLIP_GAIN * model.mu
    return np.array([p[XD] + p[W], a - k * lam, a + k * lam])


def _jacobian(model, p):
    ga = model.grad_tangential_load(p)
    gl = model.grad_normal_force(p)
    k = SLIP_GAIN * model.mu
    return np.vstack([GRAD_H, ga - k * gl, ga + k * gl])


def two_fold_residual(model: SurfaceModel, state) -> float:
    """Largest of ``|H|``, ``|F1 . grad H|`` and ``|F2 . grad H|``."""
    return float(np.max(np.abs(_residual(model, as_vector(state)))))


def locate_two_fold(model: SurfaceModel, seed_state, *, tol: float = LOCATE_TOL, max_iter: int = 60) -> BallState:
    """Damped minimum-norm Newton iteration onto ``{H = 0, F1.grad H = 0, F2.grad H = 0}``.

    The set is a manifold of codimension three, so the step is the smallest
    correction that cancels the linearised residual; the root found is the
    one closest to ``seed_state`` to first order.
    """
    p = as_vector(seed_state).astype(float).copy()
    r = _residual(model, p)
    for _ in range(max_iter):
        norm = float(np.max(np.abs(r)))
        if norm < tol:
            return BallState.from_array(p)
        jac = _jacobian(model, p)
        sv = np.linalg.svd(jac, compute_uv=False)
        if sv[-1] <= 1e-12 * max(sv[0], 1.0):
            raise NoSingularityError(
                "slip fields do not fold here (tangency conditions are dependent, e.g. mu = 0)"
            )
        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            trial = p + lam * step
            r_trial = _residual(model, trial)
            if np.all(np.isfinite(r_trial)) and np.max(np.abs(r_trial)) < norm:
                break
            lam *= 0.5
        else:
            raise NoSingularityError(f"Newton iteration stalled at residual {norm:.3e}")
        p, r = trial, r_trial
    if float(np.max(np.abs(r))) < tol:
        return BallState.from_array(p)
    raise NoSingularityError(f"no two-fold within {max_iter} iterations (residual {np.max(np.abs(r)):.3e})")


def _sign(v: float) -> int:
    return 1 if v > 0 else (-1 if v < 0 else 0)


def two_fold_report(model: SurfaceModel, s, *, diabolo_tol: float = DIABOLO_TOL) -> TwoFoldReport:
    p = as_vector(s)
    res = two_fold_residual(model, p)
    if res > 1e3 * LOCATE_TOL:
        raise NoSingularityError(f"state is not a two-fold (residual {res:.3e})")
    l11 = mixed_slip_derivative(model, p, 1, 1)
    l12 = mixed_slip_derivative(model, p, 1, 2)
    l21 = mixed_slip_derivative(model, p, 2, 1)
    l22 = mixed_slip_derivative(model, p, 2, 2)
    sigma1, sigma2 = _sign(l11), _sign(l22)
    scale = math.sqrt(abs(l11 * l22))
    if scale == 0.0:
        nu1 = nu2 = nu_product = math.nan
        gamma_minus = gamma_plus = complex(math.nan)
        cls = TwoFoldClass.DEGENERATE_DIABOLO
    else:
        nu1 = l12 / scale
        nu2 = -l21 / scale
        nu_product = nu1 * nu2
        eig = np.linalg.eigvals(np.array([[nu2, -sigma1], [sigma2, nu1]], dtype=float))
        eig = sorted(eig, key=lambda z: (z.real, z.imag))
        gamma_minus, gamma_plus = complex(eig[0]), complex(eig[1])
        cls = classify(sigma1, sigma2, nu1, nu2, diabolo_tol=diabolo_tol)
    return TwoFoldReport(
        s=BallState.from_array(p),
        sigma1=sigma1,
        sigma2=sigma2,
        nu1=nu1,
        nu2=nu2,
        nu_product=nu_product,
        gamma_minus=gamma_minus,
        gamma_plus=gamma_plus,
        classification=cls,
        second_derivatives=(l11, l12, l21, l22),
    )


def classify(sigma1: int, sigma2: int, nu1: float, nu2: float, *, diabolo_tol: float = DIABOLO_TOL) -> TwoFoldClass:
    """Phase-portrait class of the reduced sliding flow near the two-fold.

    With visible folds (``sigma1 = +1``, ``sigma2 = -1``): ``nu1 nu2 < 1`` is a
    saddle with one trajectory through the singularity, ``nu1, nu2 > 0`` with
    ``nu1 nu2 > 1`` an outward node, and ``nu1 nu2 = 1`` the degenerate diabolo
    with a singular normal-form matrix.
    """
    product = nu1 * nu2
    if abs(product - 1.0) <= diabolo_tol:
        return TwoFoldClass.DEGENERATE_DIABOLO
    if sigma1 != 1 or sigma2 != -1:
        return TwoFoldClass.OTHER
    if product < 1.0:
        return TwoFoldClass.VISIBLE_SADDLE_LIKE
    if nu1 > 0 and nu2 > 0:
        return TwoFoldClass.VISIBLE_OUTWARD_NODE
    return TwoFoldClass.OTHER


def _generic_view(model: SurfaceModel) -> GenericModel:
    if isinstance(model, GenericModel):
        return model
    if isinstance(model, KelvinVoigtModel):
        return model.as_generic()
    raise ModelError(f"{type(model).__name__} has no generic coefficient form")


def nu_product_asymptotic(model: SurfaceModel, s) -> float:
    """Small-``eps`` expansion ``1 + (20/7) (dgamma_u/dX' X') / (dLambda_N/dY' Y') g eps^3``."""
    gen = _generic_view(model)
    p = as_vector(s)
    if p[YD] == 0.0:
        raise ModelError("the expansion needs Y' != 0 at the two-fold (restitution phase)")
    du = gen.coefficient_partial("u", XD, p)
    dn = gen.normal_force_partial(YD, p)
    if dn == 0.0:
        raise ModelError("dLambda_N/dY' vanishes at the two-fold")
    return 1.0 + (20.0 / 7.0) * (du * p[XD]) / (dn * p[YD]) * gen.g * gen.eps**3


def vertical_lift_off_point(model: KelvinVoigtModel, y_dot0: float = -1.0) -> tuple:
    """``(tau, Y, Y')`` where the free vertical contact of a KV surface reaches ``Lambda_N = 0``.

    Closed-form solution of ``Y'' + 2 d2 Y' + Y = -G`` from ``Y = 0``,
    ``Y' = y_dot0``; used to construct two-fold points independently of the
    Newton locator.
    """
    d2, grav = model.d2, model.gravity_load
    w = math.sqrt(1.0 - d2 * d2)
    # Y = -G + e^{-d2 t} (c1 cos wt + c2 sin wt)
    c1 = grav
    c2 = (y_dot0 + d2 * c1) / w

    def y_and_v(t):
        e = math.exp(-d2 * t)
        c, sn = math.cos(w * t), math.sin(w * t)
        y = -grav + e * (c1 * c + c2 * sn)
        v = e * ((-d2 * c1 + w * c2) * c + (-d2 * c2 - w * c1) * sn)
        return y, v

    def lam(t):
        y, v = y_and_v(t)
        return -(2.0 * d2 * v + y + grav)

    # coarse scan for the first sign change after the normal force has been positive
    t, dt = 0.0, 1e-3
    prev = lam(t)
    seen_positive = prev > 0
    while t < 4.0 * math.pi / w:
        t_next = t + dt
        cur = lam(t_next)
        if cur > 0:
            seen_positive = True
        if seen_positive and prev > 0 >= cur:
            lo, hi = t, t_next
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if lam(mid) > 0:
                    lo = mid
                else:
                    hi = mid
            y, v = y_and_v(hi)
            return hi, y, v
        t, prev = t_next, cur
    raise NoSingularityError("vertical contact never releases")
