"""Linear isotropic media: permittivity/permeability, or refractive index/impedance.

A :class:`MediumSpec` describes the medium; :func:`sample` evaluates it on a
grid at one instant and returns a :class:`MediumFrame` carrying every derived
quantity the operators need (``v``, ``n``, ``eta``, the half-logs
``eps_bar = ln(eps)/2`` etc., their gradients and time derivatives).

Analytic media are sympy expressions in ``x, y, z, t``.  Their gradients and
time derivatives are differentiated symbolically, never by differencing.
Sampled media are fixed in time and differentiated spectrally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy

from .grid import Grid

C_SI = 299_792_458.0
MU0_SI = 4e-7 * np.pi


@dataclass(frozen=True)
class Constants:
    mode: str
    c: float
    eps0: float
    mu0: float


def units(mode: str = "natural") -> Constants:
    """Physical constants for ``'natural'`` (c = eps0 = mu0 = 1) or ``'SI'``."""
    if mode == "natural":
        return Constants("natural", 1.0, 1.0, 1.0)
    if mode in ("SI", "si"):
        return Constants("SI", C_SI, 1.0 / (MU0_SI * C_SI**2), MU0_SI)
    raise ValueError(f"unknown unit mode {mode!r}; use 'natural' or 'SI'")


class MediumError(ValueError):
    pass


_X, _Y, _Z, _T = sympy.symbols("x y z t", real=True)
_SYMBOLS = (_X, _Y, _Z, _T)
_ALLOWED_FUNCS = {sympy.sin, sympy.cos, sympy.exp}
_NAMESPACE = {"x": _X, "y": _Y, "z": _Z, "t": _T, "pi": sympy.pi,
              "sin": sympy.sin, "cos": sympy.cos, "exp": sympy.exp, "sqrt": sympy.sqrt}


def parse_expression(expr) -> sympy.Expr:
    """Parse a medium expression and check it stays inside the supported vocabulary.

    Allowed: numbers, ``pi``, the symbols ``x y z t``, ``+ - * /``, powers
    (``sqrt`` is one), and ``sin``, ``cos``, ``exp``.
    """
    if isinstance(expr, sympy.Expr):
        e = expr
    elif isinstance(expr, (int, float)):
        e = sympy.Float(expr) if isinstance(expr, float) else sympy.Integer(expr)
    else:
        try:
            e = sympy.sympify(str(expr), locals=_NAMESPACE)
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise MediumError(f"cannot parse medium expression {expr!r}: {exc}") from None
    extra = e.free_symbols - set(_SYMBOLS)
    if extra:
        raise MediumError(f"expression {expr!r} uses unknown symbols {sorted(map(str, extra))}")
    for f in e.atoms(sympy.Function):
        if f.func not in _ALLOWED_FUNCS:
            raise MediumError(f"function {f.func} is outside the medium vocabulary (sin, cos, exp)")
    return e


def compile_expression(expr):
    """Numpy callable ``f(x, y, z, t)`` for a medium-vocabulary expression."""
    return sympy.lambdify(_SYMBOLS, parse_expression(expr), modules="numpy")


@dataclass(frozen=True, eq=False)
class MediumSpec:
    """Description of a medium.

    ``kind`` is ``'constant'`` (``eps``/``mu`` numbers), ``'analytic'``
    (sympy expressions) or ``'sampled'`` (arrays on ``grid``).  Use the
    classmethod constructors rather than building one directly.
    """

    kind: str
    eps: object
    mu: object
    unit_mode: str = "natural"
    grid: Optional[Grid] = None
    _compiled: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def constant(cls, eps: float = 1.0, mu: float = 1.0, unit_mode: str = "natural"):
        if not (eps > 0 and mu > 0):
            raise MediumError(f"permittivity and permeability must be positive (eps={eps}, mu={mu})")
        return cls("constant", float(eps), float(mu), unit_mode)

    @classmethod
    def constant_n_eta(cls, n: float, eta: float, unit_mode: str = "natural"):
        c = units(unit_mode).c
        return cls.constant(n / (c * eta), n * eta / c, unit_mode)

    @classmethod
    def analytic(cls, eps, mu, unit_mode: str = "natural"):
        return cls("analytic", parse_expression(eps), parse_expression(mu), unit_mode)

    @classmethod
    def analytic_n_eta(cls, n, eta, unit_mode: str = "natural"):
        """Analytic medium from index and impedance, via ``eps = n/(c eta)``, ``mu = n eta / c``."""
        c = sympy.Float(units(unit_mode).c) if unit_mode != "natural" else sympy.Integer(1)
        n_e, eta_e = parse_expression(n), parse_expression(eta)
        return cls("analytic", n_e / (c * eta_e), n_e * eta_e / c, unit_mode)

    @classmethod
    def sampled(cls, eps, mu, grid: Grid, unit_mode: str = "natural"):
        eps = np.asarray(eps, dtype=float)
        mu = np.asarray(mu, dtype=float)
        grid.check(eps)
        grid.check(mu)
        _check_positive(eps, "permittivity", grid)
        _check_positive(mu, "permeability", grid)
        return cls("sampled", eps, mu, unit_mode, grid)

    @classmethod
    def sampled_n_eta(cls, n, eta, grid: Grid, unit_mode: str = "natural"):
        c = units(unit_mode).c
        n = np.asarray(n, dtype=float)
        eta = np.asarray(eta, dtype=float)
        return cls.sampled(n / (c * eta), n * eta / c, grid, unit_mode)

    @property
    def constants(self) -> Constants:
        return units(self.unit_mode)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def time_dependent(self) -> bool:
        if self.kind != "analytic":
            return False
        return _T in (self.eps.free_symbols | self.mu.free_symbols)

    def speed(self) -> float:
        """Wave speed of a constant medium."""
        if not self.is_constant:
            raise MediumError("speed() is only defined for a constant medium")
        return 1.0 / np.sqrt(self.eps * self.mu)

    def max_speed(self, grid: Grid, t: float = 0.0) -> float:
        eps, mu = sample_eps_mu(self, grid, t)
        return float(np.max(1.0 / np.sqrt(eps * mu)))

    def _lambdas(self):
        if not self._compiled:
            self._compiled.update(_compile(self.eps, self.mu, self.constants.c))
        return self._compiled


def _check_positive(a: np.ndarray, what: str, grid: Optional[Grid] = None):
    bad = ~(np.isfinite(a) & (a > 0))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        where = f"sample {idx}"
        if grid is not None and len(idx) == 3:
            pos = tuple(round(i * d, 12) for i, d in zip(idx, grid.spacing))
            where += f" (position {pos})"
        raise MediumError(f"nonpositive or non-finite {what} {a[idx]!r} at {where}")


def _compile(eps_e, mu_e, c):
    """Lambdify every quantity the frame needs.  Derived quantities are
    differentiated from their own expressions so the frame invariants are
    genuine cross-checks rather than identities by construction."""
    n_e = c * sympy.sqrt(eps_e * mu_e)
    eta_e = sympy.sqrt(mu_e / eps_e)
    out = {}

    def lam(e):
        return sympy.lambdify(_SYMBOLS, e, modules="numpy")

    for name, e in (("eps", eps_e), ("mu", mu_e), ("n", n_e), ("eta", eta_e)):
        out[name] = lam(e)
        out["grad_" + name + "_bar"] = [lam(sympy.diff(e, s) / (2 * e)) for s in _SYMBOLS[:3]]
    out["dot_eps_bar"] = lam(sympy.diff(eps_e, _T) / (2 * eps_e))
    out["dot_mu_bar"] = lam(sympy.diff(mu_e, _T) / (2 * mu_e))
    out["dot_n"] = lam(sympy.diff(n_e, _T))
    out["dot_eta"] = lam(sympy.diff(eta_e, _T))
    return out


def _eval(fn, grid: Grid, t: float) -> np.ndarray:
    x, y, z = grid.coords
    val = fn(x, y, z, t)
    return np.array(np.broadcast_to(np.asarray(val, dtype=float), grid.shape))


def sample_eps_mu(spec: MediumSpec, grid: Grid, t: float = 0.0):
    """Just ``(eps, mu)`` on the grid, without any derived quantity."""
    if spec.kind == "constant":
        return np.full(grid.shape, spec.eps), np.full(grid.shape, spec.mu)
    if spec.kind == "sampled":
        if spec.grid.shape != grid.shape:
            raise MediumError(f"sampled medium is on a {spec.grid.shape} grid, not {grid.shape}")
        return spec.eps, spec.mu
    lam = spec._lambdas()
    eps, mu = _eval(lam["eps"], grid, t), _eval(lam["mu"], grid, t)
    _check_positive(eps, "permittivity", grid)
    _check_positive(mu, "permeability", grid)
    return eps, mu


@dataclass(frozen=True, eq=False)
class MediumFrame:
    """A medium evaluated on a grid at time ``t``.

    Scalar fields have the grid shape; gradient fields have a leading axis
    of length 3.  ``dot_*`` are time derivatives at ``t``.
    """

    grid: Grid
    t: float
    kind: str
    constants: Constants
    time_dependent: bool
    eps: np.ndarray
    mu: np.ndarray
    v: np.ndarray
    n: np.ndarray
    eta: np.ndarray
    eps_bar: np.ndarray
    mu_bar: np.ndarray
    n_bar: np.ndarray
    eta_bar: np.ndarray
    grad_eps_bar: np.ndarray
    grad_mu_bar: np.ndarray
    grad_n_bar: np.ndarray
    grad_eta_bar: np.ndarray
    dot_eps_bar: np.ndarray
    dot_mu_bar: np.ndarray
    dot_n: np.ndarray
    dot_eta: np.ndarray

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def c(self) -> float:
        return self.constants.c

    def speed(self) -> float:
        """The single wave speed of a constant medium."""
        if not self.is_constant:
            raise MediumError("medium is not constant")
        return float(self.v.flat[0])

    @property
    def grad_n(self) -> np.ndarray:
        return 2 * self.n * self.grad_n_bar

    def invariant_residuals(self) -> dict[str, float]:
        """Relative residuals of the identities tying the two parameterisations together."""
        c = self.c
        inv_len = 1.0 / min(self.grid.lengths)

        def rel(a, b, floor=0.0):
            scale = max(np.abs(a).max(), np.abs(b).max(), floor)
            return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)

        return {
            "n = c sqrt(eps mu)": rel(self.n, c * np.sqrt(self.eps * self.mu)),
            "n = c / v": rel(self.n, c / self.v),
            "eta = sqrt(mu / eps)": rel(self.eta, np.sqrt(self.mu / self.eps)),
            "dot(eps_bar + mu_bar) = 2 dot(n_bar)": rel(self.dot_eps_bar + self.dot_mu_bar, self.dot_n / self.n),
            "dot(eps_bar - mu_bar) = -2 dot(eta_bar)": rel(self.dot_eps_bar - self.dot_mu_bar, -self.dot_eta / self.eta),
            "grad(eps_bar + mu_bar) = 2 grad(n_bar)": rel(self.grad_eps_bar + self.grad_mu_bar, 2 * self.grad_n_bar, inv_len),
            "grad(eps_bar - mu_bar) = -2 grad(eta_bar)": rel(self.grad_eps_bar - self.grad_mu_bar, -2 * self.grad_eta_bar, inv_len),
        }


FRAME_TOL = 1e-12


def sample(spec: MediumSpec, grid: Grid, t: float = 0.0, check: bool = True) -> MediumFrame:
    """Evaluate ``spec`` on ``grid`` at time ``t``.

    Raises :class:`MediumError` on nonpositive permittivity or permeability
    (naming the offending sample) and, when ``check`` is set, if any frame
    invariant fails at :data:`FRAME_TOL`.
    """
    const = spec.constants
    c = const.c
    zeros = np.zeros(grid.shape)
    zeros3 = np.zeros((3,) + grid.shape)
    if spec.kind == "analytic":
        lam = spec._lambdas()
        eps, mu = sample_eps_mu(spec, grid, t)
        n = _eval(lam["n"], grid, t)
        eta = _eval(lam["eta"], grid, t)
        grads = {name: np.stack([_eval(f, grid, t) for f in lam["grad_" + name + "_bar"]])
                 for name in ("eps", "mu", "n", "eta")}
        dots = {name: _eval(lam[name], grid, t)
                for name in ("dot_eps_bar", "dot_mu_bar", "dot_n", "dot_eta")}
    else:
        eps, mu = sample_eps_mu(spec, grid, t)
        eps = np.array(eps, dtype=float)
        mu = np.array(mu, dtype=float)
        n = c * np.sqrt(eps * mu)
        eta = np.sqrt(mu / eps)
        if spec.kind == "constant":
            grads = {name: zeros3 for name in ("eps", "mu", "n", "eta")}
        else:
            grads = {name: grid.grad(0.5 * np.log(arr)).real
                     for name, arr in (("eps", eps), ("mu", mu), ("n", n), ("eta", eta))}
        dots = {name: zeros for name in ("dot_eps_bar", "dot_mu_bar", "dot_n", "dot_eta")}

    frame = MediumFrame(
        grid=grid, t=float(t), kind=spec.kind, constants=const,
        time_dependent=spec.time_dependent,
        eps=eps, mu=mu, v=1.0 / np.sqrt(eps * mu), n=n, eta=eta,
        eps_bar=0.5 * np.log(eps), mu_bar=0.5 * np.log(mu),
        n_bar=0.5 * np.log(n), eta_bar=0.5 * np.log(eta),
        grad_eps_bar=grads["eps"], grad_mu_bar=grads["mu"],
        grad_n_bar=grads["n"], grad_eta_bar=grads["eta"],
        **dots,
    )
    if check:
        bad = {k: r for k, r in frame.invariant_residuals().items() if r > FRAME_TOL}
        if bad:
            raise MediumError(f"medium frame invariants violated: {bad}")
    return frame
