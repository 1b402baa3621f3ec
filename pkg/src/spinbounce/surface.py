"""Contact force laws and the two slip vector fields of the compliant bounce.

Every model is written in contact time ``tau`` as

    X''    = A(p) + Lambda_T
    Y''    = Lambda_N(p)
    Omega' = 5/2 Lambda_T

where ``A`` is the tangential spring/damper load and ``Lambda_N`` the net
normal force (gravity included). Slip fields use the Coulomb limit
``Lambda_T = -sign(H) mu Lambda_N``: ``F1`` for ``H > 0``, ``F2`` for ``H < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from spinbounce.core import BallState, PhaseTag
from spinbounce.exceptions import ConfigurationError, ModelError

STATE_NAMES = ("x", "x_dot", "y", "y_dot", "omega")
X, XD, Y, YD, W = range(5)

# gradient of the slip function H = X' + Omega
GRAD_H = np.array([0.0, 1.0, 0.0, 0.0, 1.0])


def as_vector(state) -> np.ndarray:
    if isinstance(state, BallState):
        return state.as_array()
    return np.asarray(state, dtype=float)


def richardson_derivative(fun: Callable[[float], float], h: float) -> float:
    """Central difference at 0 with one Richardson step (error O(h**4))."""
    d1 = (fun(h) - fun(-h)) / (2.0 * h)
    d2 = (fun(0.5 * h) - fun(-0.5 * h)) / h
    return (4.0 * d2 - d1) / 3.0


class SurfaceModel:
    """Interface shared by the linear and generalized models."""

    mu: float
    name: str = "surface"

    def normal_force(self, p) -> float:
        raise NotImplementedError

    def tangential_load(self, p) -> float:
        raise NotImplementedError

    def grad_normal_force(self, p) -> np.ndarray:
        return self._fd_gradient(self.normal_force, as_vector(p))

    def grad_tangential_load(self, p) -> np.ndarray:
        return self._fd_gradient(self.tangential_load, as_vector(p))

    @staticmethod
    def _fd_gradient(fun, p):
        grad = np.empty(5)
        for i in range(5):
            h = 1e-4 * (1.0 + abs(p[i]))
            e = np.zeros(5)
            e[i] = 1.0
            grad[i] = richardson_derivative(lambda s: fun(p + s * e), h)
        return grad

    def field(self, p, h_sign: float) -> np.ndarray:
        """Vector field with the friction force saturated against ``h_sign``."""
        p = as_vector(p)
        lam_n = self.normal_force(p)
        lam_t = -h_sign * self.mu * lam_n
        return np.array(
            [p[XD], self.tangential_load(p) + lam_t, p[YD], lam_n, 2.5 * lam_t]
        )

    def fields(self, p):
        return self.field(p, 1.0), self.field(p, -1.0)

    def energy(self, p) -> float:
        raise NotImplementedError(f"{type(self).__name__} defines no energy functional")


@dataclass(frozen=True)
class KelvinVoigtModel(SurfaceModel):
    """Linear spring-dashpot surface in both directions.

    ``d1``, ``d2`` are the tangential and normal damping ratios, ``eta`` the
    ratio of normal to tangential compliance scale and ``eps2`` the normal
    compliance scale (only enters through the gravity load ``eps2**2 g``).
    """

    d1: float = 0.2
    d2: float = 0.2
    eta: float = 0.1
    eps2: float = 1e-3
    mu: float = 0.3
    g: float = 0.0
    name: str = field(default="kv", compare=False)

    def __post_init__(self):
        if not 0 <= self.d2 < 1:
            raise ConfigurationError(f"d2 must satisfy 0 <= d2 < 1 (underdamped), got {self.d2}")
        if self.d1 < 0:
            raise ConfigurationError(f"d1 must be non-negative, got {self.d1}")
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if not self.eps2 > 0:
            raise ConfigurationError(f"eps2 must be positive, got {self.eps2}")
        if self.mu < 0:
            raise ConfigurationError(f"mu must be non-negative, got {self.mu}")

    @property
    def gravity_load(self) -> float:
        return self.eps2**2 * self.g

    def normal_force(self, p) -> float:
        p = as_vector(p)
        return -2.0 * self.d2 * p[YD] - p[Y] - self.gravity_load

    def tangential_load(self, p) -> float:
        p = as_vector(p)
        return -2.0 * self.d1 * self.eta * p[XD] - self.eta**2 * p[X]

    def grad_normal_force(self, p) -> np.ndarray:
        return np.array([0.0, 0.0, -1.0, -2.0 * self.d2, 0.0])

    def grad_tangential_load(self, p) -> np.ndarray:
        return np.array([-self.eta**2, -2.0 * self.d1 * self.eta, 0.0, 0.0, 0.0])

    def energy(self, p) -> float:
        p = as_vector(p)
        return (
            0.5 * (p[XD] ** 2 + p[YD] ** 2)
            + 0.2 * p[W] ** 2
            + 0.5 * self.eta**2 * p[X] ** 2
            + 0.5 * p[Y] ** 2
            + self.gravity_load * p[Y]
        )

    def as_generic(self) -> GenericModel:
        """Same dynamics expressed with the generalized model's scalings (``eps = eta``)."""
        d1, d2 = self.d1, self.d2
        return GenericModel(
            gamma_u=lambda *q: 2.0 * d1,
            gamma_z=lambda *q: 1.0,
            gamma_d=lambda y, y_dot: 2.0 * d2,
            gamma_k=lambda y, y_dot: 1.0,
            mu=self.mu,
            g=self.gravity_load / self.eta**2,
            eps=self.eta,
            partials={
                ("u", i): (lambda *q: 0.0) for i in range(5)
            } | {("z", i): (lambda *q: 0.0) for i in range(5)}
            | {("d", i): (lambda *q: 0.0) for i in (Y, YD)}
            | {("k", i): (lambda *q: 0.0) for i in (Y, YD)},
            name="kv-generic",
        )


TangentialCoefficient = Callable[[float, float, float, float, float], float]
NormalCoefficient = Callable[[float, float], float]


class GenericModel(SurfaceModel):
    """Nonlinear spring-dashpot surface given by four scalar coefficient fields.

    ``gamma_u``, ``gamma_z`` are tangential damping and stiffness as functions
    of the full state; ``gamma_d``, ``gamma_k`` normal damping and stiffness as
    functions of ``(Y, Y')``. The tangential terms carry the small factors
    ``eps`` and ``eps**2``. ``partials`` optionally maps ``(letter, index)``
    (letter in ``"uzdk"``, index into the state) to an analytic partial
    derivative with the same signature as the coefficient itself.
    """

    def __init__(
        self,
        gamma_u: TangentialCoefficient,
        gamma_z: TangentialCoefficient,
        gamma_d: NormalCoefficient,
        gamma_k: NormalCoefficient,
        mu: float,
        g: float = 0.0,
        eps: float = 0.1,
        partials: Optional[Mapping] = None,
        name: str = "generic",
    ):
        if mu < 0:
            raise ConfigurationError(f"mu must be non-negative, got {mu}")
        if not eps > 0:
            raise ConfigurationError(f"eps must be positive, got {eps}")
        self.gamma_u = gamma_u
        self.gamma_z = gamma_z
        self.gamma_d = gamma_d
        self.gamma_k = gamma_k
        self.mu = float(mu)
        self.g = float(g)
        self.eps = float(eps)
        self.partials = dict(partials or {})
        self.name = name

    def __repr__(self):
        return f"GenericModel(name={self.name!r}, mu={self.mu}, g={self.g}, eps={self.eps})"

    def coefficient(self, letter: str, p) -> float:
        p = as_vector(p)
        try:
            if letter == "u":
                value = self.gamma_u(*p)
            elif letter == "z":
                value = self.gamma_z(*p)
            elif letter == "d":
                value = self.gamma_d(p[Y], p[YD])
            elif letter == "k":
                value = self.gamma_k(p[Y], p[YD])
            else:
                raise KeyError(letter)
            value = float(value)
        except KeyError:
            raise
        except Exception as exc:
            raise ModelError(f"gamma_{letter} could not be evaluated at {p.tolist()}: {exc}") from exc
        if not math.isfinite(value):
            raise ModelError(f"gamma_{letter} is not finite at {p.tolist()}")
        return value

    def coefficient_partial(self, letter: str, index: int, p, step: Optional[float] = None) -> float:
        """Partial derivative of a coefficient field, analytic when supplied.

        ``step`` selects a plain central difference with that relative step;
        the default is a Richardson-extrapolated central difference.
        """
        p = as_vector(p)
        if letter in "dk" and index not in (Y, YD):
            return 0.0
        analytic = self.partials.get((letter, index))
        if analytic is not None:
            args = p if letter in "uz" else (p[Y], p[YD])
            return float(analytic(*args))
        e = np.zeros(5)
        e[index] = 1.0
        fun = lambda s: self.coefficient(letter, p + s * e)
        if step is not None:
            h = step * (1.0 + abs(p[index]))
            return (fun(h) - fun(-h)) / (2.0 * h)
        return richardson_derivative(fun, 1e-4 * (1.0 + abs(p[index])))

    @property
    def gravity_load(self) -> float:
        return self.eps**2 * self.g

    def normal_force(self, p) -> float:
        p = as_vector(p)
        return -(
            self.coefficient("d", p) * p[YD] + self.coefficient("k", p) * p[Y] + self.gravity_load
        )

    def tangential_load(self, p) -> float:
        p = as_vector(p)
        return -self.eps * self.coefficient("u", p) * p[XD] - self.eps**2 * self.coefficient("z", p) * p[X]

    def grad_normal_force(self, p) -> np.ndarray:
        p = as_vector(p)
        grad = np.zeros(5)
        for i in (Y, YD):
            grad[i] = -(
                self.coefficient_partial("d", i, p) * p[YD]
                + self.coefficient_partial("k", i, p) * p[Y]
            )
        grad[YD] -= self.coefficient("d", p)
        grad[Y] -= self.coefficient("k", p)
        return grad

    def grad_tangential_load(self, p) -> np.ndarray:
        p = as_vector(p)
        grad = np.empty(5)
        for i in range(5):
            grad[i] = -self.eps * self.coefficient_partial("u", i, p) * p[XD] - self.eps**2 * (
                self.coefficient_partial("z", i, p) * p[X]
            )
        grad[XD] -= self.eps * self.coefficient("u", p)
        grad[X] -= self.eps**2 * self.coefficient("z", p)
        return grad

    def normal_force_partial(self, index: int, p) -> float:
        return float(self.grad_normal_force(p)[index])


class DepthStiffeningModel(GenericModel):
    """Kelvin-Voigt surface whose coefficients grow with depth ``-Y``.

    The tangential damping also hardens with sliding speed,
    ``gamma_u = 2 d1 (1 - a Y + b X'^2)``, which gives it the required
    ``sign(d gamma_u / dX') = sign(X')``. Stiffnesses scale with ``1 - a Y``.
    """

    def __init__(self, d1=0.2, d2=0.2, eps=0.1, mu=0.3, g=1.0, a=1.0, b=0.5, name="kv-depth-stiffening"):
        if not 0 <= d2 < 1:
            raise ConfigurationError(f"d2 must satisfy 0 <= d2 < 1 (underdamped), got {d2}")
        if a <= 0 or b <= 0 or d1 <= 0 or d2 <= 0:
            raise ConfigurationError("d1, d2, a and b must be positive")
        self.d1, self.d2, self.a, self.b = d1, d2, a, b
        zero = lambda *q: 0.0
        partials = {(letter, i): zero for letter in "uz" for i in (X, W)}
        partials.update(
            {
                ("u", XD): lambda x, xd, y, yd, w: 4.0 * d1 * b * xd,
                ("u", Y): lambda x, xd, y, yd, w: -2.0 * d1 * a,
                ("u", YD): zero,
                ("z", XD): zero,
                ("z", Y): lambda x, xd, y, yd, w: -a,
                ("z", YD): zero,
                ("d", Y): lambda y, yd: -2.0 * d2 * a,
                ("d", YD): lambda y, yd: 0.0,
                ("k", Y): lambda y, yd: -a,
                ("k", YD): lambda y, yd: 0.0,
            }
        )
        super().__init__(
            gamma_u=lambda x, xd, y, yd, w: 2.0 * d1 * (1.0 - a * y + b * xd * xd),
            gamma_z=lambda x, xd, y, yd, w: 1.0 - a * y,
            gamma_d=lambda y, yd: 2.0 * d2 * (1.0 - a * y),
            gamma_k=lambda y, yd: 1.0 - a * y,
            mu=mu,
            g=g,
            eps=eps,
            partials=partials,
            name=name,
        )

    def __reduce__(self):
        return (DepthStiffeningModel, (self.d1, self.d2, self.eps, self.mu, self.g, self.a, self.b, self.name))


@dataclass(frozen=True)
class ContactForces:
    lambda_n: float
    lambda_t: float
    regime: PhaseTag


def normal_force(model: SurfaceModel, state) -> float:
    """Net normal force; a negative value means the ball has lifted off."""
    return model.normal_force(as_vector(state))


def friction_bound(model: SurfaceModel, state, h_sign: float) -> float:
    """Saturated Coulomb force ``-sign(H) mu Lambda_N`` for the given slip sign."""
    lam_n = model.normal_force(as_vector(state))
    return -float(np.sign(h_sign)) * model.mu * lam_n


def eval_fields(model: SurfaceModel, state):
    """``(F1, F2)``: derivatives of ``[X, X', Y, Y', Omega]`` for forward and backward slip."""
    return model.fields(as_vector(state))


def contact_forces(model: SurfaceModel, state, regime: PhaseTag) -> ContactForces:
    p = as_vector(state)
    lam_n = model.normal_force(p)
    if regime is PhaseTag.SLIP_POSITIVE:
        lam_t = -model.mu * lam_n
    elif regime is PhaseTag.SLIP_NEGATIVE:
        lam_t = model.mu * lam_n
    else:
        # rolling: the force that keeps H' = 0
        lam_t = -model.tangential_load(p) / 3.5
    return ContactForces(lam_n, lam_t, regime)


# --- structural constraints on generalized models ----------------------------


@dataclass(frozen=True)
class Violation:
    constraint: str
    state: tuple
    value: float


@dataclass(frozen=True)
class ConstraintReport:
    n_samples: int
    violations: tuple
    strict: bool
    derivative_bound: float

    @property
    def passed(self) -> bool:
        return not self.violations

    def failed_constraints(self) -> set:
        return {v.constraint for v in self.violations}


FD_STEP = 1e-6


def _box_bounds(sample_box) -> np.ndarray:
    if isinstance(sample_box, Mapping):
        try:
            rows = [sample_box[name] for name in STATE_NAMES]
        except KeyError as exc:
            raise ConfigurationError(f"sample_box is missing {exc.args[0]!r}") from None
    else:
        rows = list(sample_box)
    bounds = np.asarray(rows, dtype=float)
    if bounds.shape != (5, 2) or np.any(bounds[:, 0] > bounds[:, 1]):
        raise ConfigurationError("sample_box needs five (low, high) pairs with low <= high")
    return bounds


def validate_generic_model(
    model: GenericModel,
    sample_box,
    n_samples: int = 200,
    *,
    derivative_bound: float = 10.0,
    strict: bool = True,
    seed: int = 0,
) -> ConstraintReport:
    """Check the structural sign and smoothness constraints at random box points.

    Partial derivatives come from central differences with relative step
    ``1e-6 (1 + |q|)`` unless the model supplies analytic ones. With
    ``strict=False`` the sign conditions only need to hold weakly, which
    admits constant coefficients such as the linear model.
    """
    bounds = _box_bounds(sample_box)
    rng = np.random.default_rng(seed)
    points = rng.uniform(bounds[:, 0], bounds[:, 1], size=(n_samples, 5))
    violations = []
    zero = 1e-9

    def bad(ok_strict, ok_weak):
        return not (ok_strict if strict else ok_weak)

    for p in points:
        where = tuple(float(v) for v in p)
        partial = {
            (letter, i): model.coefficient_partial(letter, i, p, step=FD_STEP)
            for letter in "uzdk"
            for i in range(5)
        }
        du_dy = partial["u", Y]
        dd_dy = partial["d", Y]
        e = np.zeros(5)
        e[Y] = 1.0
        h = FD_STEP * (1.0 + abs(p[Y]))
        dln_dy = (model.normal_force(p + h * e) - model.normal_force(p - h * e)) / (2.0 * h)
        if bad(du_dy < 0, du_dy <= zero):
            violations.append(Violation("du/dY<0", where, du_dy))
        if bad(dd_dy < 0, dd_dy <= zero):
            violations.append(Violation("dd/dY<0", where, dd_dy))
        if bad(dln_dy < 0, dln_dy <= zero):
            violations.append(Violation("dLambdaN/dY<0", where, dln_dy))
        du_dxd = partial["u", XD]
        if abs(p[XD]) > zero:
            same = np.sign(du_dxd) == np.sign(p[XD])
            if bad(same and abs(du_dxd) > zero, same or abs(du_dxd) <= zero):
                violations.append(Violation("sign(du/dX')=sign(X')", where, du_dxd))
        worst = max(abs(v) for v in partial.values())
        if not worst <= derivative_bound:
            violations.append(Violation("bounded-derivatives", where, worst))
    return ConstraintReport(n_samples, tuple(violations), strict, derivative_bound)


# --- catalog -----------------------------------------------------------------

CATALOG = {
    "kv": KelvinVoigtModel,
    "kv-depth-stiffening": DepthStiffeningModel,
}


def make_model(name: str, **params) -> SurfaceModel:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown model {name!r}; choose from {', '.join(sorted(CATALOG))}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for model {name!r}: {exc}") from None


def restitution_asymptotic(damping: float) -> float:
    """Small-damping restitution ``exp(-pi/2 c + c**2/2)`` of a compliant normal bounce.

    ``c`` multiplies the velocity in ``Y'' + c Y' + Y = 0``; for the
    Kelvin-Voigt model use :func:`kv_restitution_asymptotic`.
    """
    return math.exp(-0.5 * math.pi * damping + 0.5 * damping**2)


def kv_restitution_asymptotic(d2: float) -> float:
    """Asymptotic restitution of the Kelvin-Voigt normal law ``Y'' + 2 d2 Y' + Y``."""
    return restitution_asymptotic(2.0 * d2)
