"""Matrix-free differential operators on grid states.

Each ``apply_*`` function returns the time derivative of a state (the
operator applied to it), built from pointwise coefficient fields and the
spectral derivatives of :class:`~rswmaxwell.grid.Grid`.  Nothing is ever
assembled into a global matrix.  Variable coefficients always multiply
*after* differentiation: ``v * d(psi)``, never ``d(v * psi)``.

Representations:

* ``F``   the real-basis 8-vector, operator blocks in eps_bar / mu_bar
* ``psi`` the RSW basis, ``M = M0 + M'`` with ``M0 = -v (Sigma.grad (+) Sigma*.grad)``
* ``phi`` the beam basis, ``Sphi M Sphi^T``
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algebra
from .fields import SourceState, apply_matrix, sources_to_calJ, sources_to_frak
from .grid import Grid
from .medium import MediumFrame


class OperatorError(ValueError):
    pass


def _derivs(grid: Grid, state: np.ndarray):
    """``[d_x state, d_y state, d_z state]`` for every component with one forward FFT."""
    sk = grid.fft(state)
    out = []
    for j, kj in enumerate(grid.k):
        if grid.shape[j] == 1:
            out.append(np.zeros(state.shape, dtype=complex))
        else:
            out.append(grid.ifft(1j * kj * sk))
    return out


def _apply_terms(terms, state):
    """Sum of ``coef * (matrix @ state)`` over ``(coef, matrix)`` pairs."""
    out = np.zeros(state.shape, dtype=complex)
    for coef, m in terms:
        out += coef * apply_matrix(m, state)
    return out


def _apply_entries(entries, state):
    """Apply an 8x8 table of coefficient fields (``None`` meaning zero) pointwise."""
    out = np.zeros(state.shape, dtype=complex)
    for i, row in enumerate(entries):
        for j, c in enumerate(row):
            if c is not None:
                out[i] += c * state[j]
    return out


def _block(a, b, c, d):
    return np.block([[a, b], [c, d]])


# --- F representation ----------------------------------------------------------

def apply_M0_F(f: np.ndarray, v: float, grid: Grid, consts: algebra.ConstantSet | None = None) -> np.ndarray:
    """Constant-medium operator ``(M0x d_x + M0y d_y + M0z d_z) f``."""
    consts = consts or algebra.ConstantSet()
    d = _derivs(grid, f)
    return sum(v * apply_matrix(consts.m0[j], d[j]) for j in range(3))


def apply_M_F(f: np.ndarray, med: MediumFrame, src: SourceState | None = None) -> np.ndarray:
    """Inhomogeneous operator in the F representation, minus the source term if given.

    Upper (electric) rows: ``-dot(eps_bar) e + v (curl-like block in b with grad mu_bar)``;
    lower (magnetic) rows: ``v (curl-like block in e with grad eps_bar) - dot(mu_bar) b``.
    """
    grid = med.grid
    grid.check(f)
    dx, dy, dz = _derivs(grid, f)
    e, b = f[0:4], f[4:8]
    de = [dx[0:4], dy[0:4], dz[0:4]]
    db = [dx[4:8], dy[4:8], dz[4:8]]
    gx, gy, gz = med.grad_mu_bar
    up = np.stack([
        -db[2][1] + gz * b[1] + db[1][2] - gy * b[2] - db[0][3] - gx * b[3],
        db[2][0] - gz * b[0] - db[0][2] + gx * b[2] - db[1][3] - gy * b[3],
        -db[1][0] + gy * b[0] + db[0][1] - gx * b[1] - db[2][3] - gz * b[3],
        db[0][0] + gx * b[0] + db[1][1] + gy * b[1] + db[2][2] + gz * b[2],
    ])
    gx, gy, gz = med.grad_eps_bar
    lo = np.stack([
        de[2][1] - gz * e[1] - de[1][2] + gy * e[2] + de[0][3] + gx * e[3],
        -de[2][0] + gz * e[0] + de[0][2] - gx * e[2] + de[1][3] + gy * e[3],
        de[1][0] - gy * e[0] - de[0][1] + gx * e[1] + de[2][3] + gz * e[3],
        -(de[0][0] + gx * e[0] + de[1][1] + gy * e[1] + de[2][2] + gz * e[2]),
    ])
    out = np.concatenate([-med.dot_eps_bar * e + med.v * up, med.v * lo - med.dot_mu_bar * b])
    if src is not None:
        out -= sources_to_calJ(src, med)
    return out


def helmholtz_rhs(E: np.ndarray, med: MediumFrame, form: str = "grad") -> np.ndarray:
    """Right side of the generalized Helmholtz equation for a time-independent medium.

    ``form='grad'``:  ``lap E + 2 grad(grad(eps_bar).E) + 2 grad(mu_bar) x curl E``
    ``form='log'``:   ``lap E + (grad ln eps . grad) E + (E . grad) grad ln eps
    + grad(ln eps + ln mu) x curl E``
    """
    grid = med.grid
    lapE = np.stack([grid.laplacian(c) for c in E])
    curlE = grid.curl(E)
    if form == "grad":
        ge, gm = med.grad_eps_bar, med.grad_mu_bar
        return lapE + 2 * grid.grad(np.einsum("i...,i...->...", ge, E)) + 2 * np.cross(gm, curlE, axis=0)
    if form == "log":
        gle = 2 * med.grad_eps_bar
        glm = 2 * med.grad_mu_bar
        dE = _derivs(grid, E)
        dg = _derivs(grid, gle.astype(complex))
        adv = sum(gle[j] * dE[j] for j in range(3))
        strain = sum(E[j] * dg[j] for j in range(3))
        return lapE + adv + strain + np.cross(gle + glm, curlE, axis=0)
    raise ValueError(f"unknown Helmholtz form {form!r}")


def helmholtz_lhs(E: np.ndarray, med: MediumFrame) -> np.ndarray:
    """Electric part of the F operator applied twice, scaled back to E."""
    from .fields import EMState, em_to_F
    f = em_to_F(EMState(E, np.zeros_like(E)), med)
    g = apply_M_F(apply_M_F(f, med), med)
    return np.sqrt(2) * g[0:3] / (med.v**2 * np.sqrt(med.eps))


# --- Psi representation --------------------------------------------------------

def apply_M0_psi(psi: np.ndarray, v, grid: Grid) -> np.ndarray:
    """``-v (Sigma.grad psi+, Sigma*.grad psi-)`` written out per 2-spinor.

    The derivative combinations are formed in Fourier space (one forward and
    one inverse transform); ``v`` multiplies afterwards in real space.
    """
    ph = grid.fft(psi)
    kx, ky, kz = grid.k
    dz = 1j * kz
    dp = 1j * (kx + 1j * ky)
    dm = 1j * (kx - 1j * ky)
    out = np.empty(psi.shape, dtype=complex)
    for a in (0, 2):        # sigma blocks of psi+
        out[a] = dz * ph[a] + dm * ph[a + 1]
        out[a + 1] = dp * ph[a] - dz * ph[a + 1]
    for a in (4, 6):        # sigma* blocks of psi-
        out[a] = dz * ph[a] + dp * ph[a + 1]
        out[a + 1] = dm * ph[a] - dz * ph[a + 1]
    return -v * grid.ifft(out)


def mprime_entries_eps_mu(med: MediumFrame):
    """8x8 table of the perturbation coefficients in terms of eps_bar and mu_bar."""
    v = med.v
    s = med.grad_eps_bar + med.grad_mu_bar
    a = med.grad_eps_bar - med.grad_mu_bar
    sd = med.dot_eps_bar + med.dot_mu_bar
    ad = (med.dot_eps_bar - med.dot_mu_bar) / v
    sp, sm = s[0] + 1j * s[1], s[0] - 1j * s[1]
    ap, am = a[0] + 1j * a[1], a[0] - 1j * a[1]
    h = v / 2
    d1 = h * s[2] - sd / 2
    d2 = -h * s[2] - sd / 2
    z = None
    p, q = h * (a[2] - ad), h * (a[2] + ad)
    return [
        [d1, z, h * sm, z, z, h * am, z, -p],
        [z, d1, z, h * sm, -h * am, z, p, z],
        [h * sp, z, d2, z, z, -q, z, -h * ap],
        [z, h * sp, z, d2, q, z, h * ap, z],
        [z, h * ap, z, -p, d1, z, h * sp, z],
        [-h * ap, z, p, z, z, d1, z, h * sp],
        [z, -q, z, -h * am, h * sm, z, d2, z],
        [q, z, h * am, z, z, h * sm, z, d2],
    ]


def _sigma_blocks():
    I2 = algebra.identity(2)
    sig = [algebra.pauli(j) for j in range(3)]
    sy = sig[1]
    Z4 = np.zeros((4, 4), dtype=complex)
    diag_n = [_block(algebra.kron(s, I2), Z4, Z4, algebra.kron(s.conj(), I2)) for s in sig]
    off_eta = [_block(Z4, -algebra.kron(s @ sy, sy), -algebra.kron(s.conj() @ sy, sy), Z4) for s in sig]
    yy = algebra.kron(sy, sy)
    return diag_n, off_eta, _block(Z4, yy, yy, Z4)


_DIAG_N, _OFF_ETA, _OFF_DOT = _sigma_blocks()


def mprime_terms_n_eta(med: MediumFrame, time_terms: bool = True):
    """Perturbation as ``(coefficient field, constant 8x8)`` pairs in terms of n_bar and eta_bar.

    ``(c/n) [[ (sigma.grad n_bar)(x)1,  -((sigma.grad eta_bar) sy)(x)sy ],
             [ -((sigma*.grad eta_bar) sy)(x)sy, (sigma*.grad n_bar)(x)1 ]]``
    plus, for time-dependent media, ``-dot(n)/(2n)`` on the diagonal and
    ``dot(eta)/(2 eta) sy(x)sy`` off it.
    """
    cn = med.c / med.n
    terms = [(cn * med.grad_n_bar[j], _DIAG_N[j]) for j in range(3)]
    terms += [(cn * med.grad_eta_bar[j], _OFF_ETA[j]) for j in range(3)]
    if time_terms and med.time_dependent:
        terms.append((-med.dot_n / (2 * med.n), algebra.identity(8)))
        terms.append((med.dot_eta / (2 * med.eta), _OFF_DOT))
    return terms


def apply_Mprime_psi(psi: np.ndarray, med: MediumFrame, form: str = "eps_mu") -> np.ndarray:
    if form == "eps_mu":
        return _apply_entries(mprime_entries_eps_mu(med), psi)
    if form == "n_eta":
        return _apply_terms(mprime_terms_n_eta(med), psi)
    raise ValueError(f"unknown form {form!r}; use 'eps_mu' or 'n_eta'")


def apply_M_psi(psi: np.ndarray, med: MediumFrame, form: str = "eps_mu",
                src: SourceState | None = None) -> np.ndarray:
    """``M psi`` (minus the Psi-representation source if given)."""
    med.grid.check(psi)
    out = apply_M0_psi(psi, med.v, med.grid)
    if not med.is_constant:
        out += apply_Mprime_psi(psi, med, form)
    if src is not None:
        out -= sources_to_frak(src, med)
    return out


# --- Schrodinger-like split --------------------------------------------------------

def _require_static(med: MediumFrame, what: str):
    if med.time_dependent:
        raise OperatorError(f"{what} needs a time-independent medium")


def hamiltonian(psi: np.ndarray, med: MediumFrame, part: str = "full") -> np.ndarray:
    """``H0`` (the (c/n)-scaled derivative part), ``Hprime`` (the grad n_bar / grad eta_bar part) or both."""
    _require_static(med, "the H0 + H' split")
    if part not in ("H0", "Hprime", "full"):
        raise ValueError(f"unknown part {part!r}")
    out = np.zeros(psi.shape, dtype=complex)
    if part in ("H0", "full"):
        out += apply_M0_psi(psi, med.c / med.n, med.grid)
    if part in ("Hprime", "full"):
        out += _apply_terms(mprime_terms_n_eta(med, time_terms=False), psi)
    return out


# --- Phi representation ------------------------------------------------------------

def apply_M_phi(phi: np.ndarray, med: MediumFrame) -> np.ndarray:
    """Beam-basis operator, with 2-spinor blocks written out explicitly."""
    _require_static(med, "the Phi-representation operator")
    grid = med.grid
    grid.check(phi)
    cn = med.c / med.n
    dx, dy, dz = _derivs(grid, phi)
    dp = dx + 1j * dy
    dm = dx - 1j * dy
    out = np.empty(phi.shape, dtype=complex)
    # M0: -(c/n) [[dz, 0, d-, 0], [0, dz, 0, d+], [d+, 0, -dz, 0], [0, d-, 0, -dz]] on 2-spinor blocks
    for i in range(2):
        out[i] = dz[i] + dm[4 + i]
        out[2 + i] = dz[2 + i] + dp[6 + i]
        out[4 + i] = dp[i] - dz[4 + i]
        out[6 + i] = dm[2 + i] - dz[6 + i]
    out *= -cn
    gn, ge = med.grad_n_bar, med.grad_eta_bar
    A = sum(gn[j][..., None, None] * algebra.pauli(j) for j in range(3))
    Ac = sum(gn[j][..., None, None] * algebra.pauli(j).conj() for j in range(3))
    Eb = sum(ge[j][..., None, None] * algebra.pauli(j) for j in range(3))
    Ebc = sum(ge[j][..., None, None] * algebra.pauli(j).conj() for j in range(3))
    isy = 1j * algebra.pauli("y")
    blocks = [
        [(0, A), (3, -isy @ Ebc)],
        [(1, Ac), (2, -isy @ Eb)],
        [(1, isy @ Ebc), (2, A)],
        [(0, isy @ Eb), (3, Ac)],
    ]
    for r, row in enumerate(blocks):
        acc = 0
        for col, m in row:
            acc = acc + _spinor_mul(m, phi[2 * col:2 * col + 2])
        out[2 * r:2 * r + 2] += cn * acc
    return out


def _spinor_mul(m, u):
    """Pointwise 2x2 (field of matrices, trailing axes) times 2-spinor (leading axis)."""
    if m.ndim == 2:
        return np.einsum("ij,j...->i...", m, u)
    return np.einsum("...ij,j...->i...", m, u)


# --- similarity to the older representation ----------------------------------------

def to_khan(psi):
    return 2 * apply_matrix(algebra.transform_SK(), psi)


def from_khan(psi_k):
    return apply_matrix(algebra.transform_SK().T, psi_k) / 2


def apply_M_K(psi_k: np.ndarray, med: MediumFrame, form: str = "eps_mu") -> np.ndarray:
    """Operator of the older representation, ``(2 S_K) M (2 S_K)^-1``, as an action."""
    return to_khan(apply_M_psi(from_khan(psi_k), med, form))


# --- scalar-optics m-blocks -------------------------------------------------------

class MBlocks:
    """The 2x2 operator ``(1/n)(sigma.grad)(1/n)(sigma.grad)`` and its closed form.

    ``conjugate=True`` uses ``sigma*`` (the psi- blocks).
    """

    def __init__(self, med: MediumFrame):
        _require_static(med, "the m-blocks")
        self.med = med
        self.grid = med.grid
        self.n = med.n
        self.gn = med.grad_n

    def _sigma_grad(self, u, conjugate):
        dx, dy, dz = _derivs(self.grid, u)
        dp, dm = dx + 1j * dy, dx - 1j * dy
        if conjugate:
            dp, dm = dm, dp
        return np.stack([dz[0] + dm[1], dp[0] - dz[1]])

    def compose(self, u, conjugate: bool = False):
        w = self._sigma_grad(u, conjugate) / self.n
        return self._sigma_grad(w, conjugate) / self.n

    def _parts(self, f):
        g = self.grid
        dx, dy, dz = g.ddx(f, 0), g.ddx(f, 1), g.ddx(f, 2)
        gx, gy, gz = self.gn
        n = self.n
        lap = g.laplacian(f) / n**2
        adv = (gx * dx + gy * dy + gz * dz) / n**3
        cross = (gx * dy - gy * dx) / n**3
        return lap, adv, cross, (dx, dy, dz)

    def m11(self, f):
        lap, adv, cross, _ = self._parts(f)
        return lap - adv - 1j * cross

    def m22(self, f):
        lap, adv, cross, _ = self._parts(f)
        return lap - adv + 1j * cross

    def m12(self, f):
        _, _, _, (dx, dy, dz) = self._parts(f)
        gx, gy, gz = self.gn
        return (-gz * (dx - 1j * dy) + (gx - 1j * gy) * dz) / self.n**3

    def m21(self, f):
        _, _, _, (dx, dy, dz) = self._parts(f)
        gx, gy, gz = self.gn
        return (gz * (dx + 1j * dy) - (gx + 1j * gy) * dz) / self.n**3

    def formula(self, u, conjugate: bool = False):
        if conjugate:
            return np.stack([self.m22(u[0]) - self.m21(u[1]), -self.m12(u[0]) + self.m11(u[1])])
        return np.stack([self.m11(u[0]) + self.m12(u[1]), self.m21(u[0]) + self.m22(u[1])])

    def scalar_part(self, u):
        """The ``lap / n^2`` part kept when the ``1/n^3`` terms are dropped."""
        return np.stack([self.grid.laplacian(c) for c in u]) / self.n**2


def m_blocks(med: MediumFrame) -> MBlocks:
    return MBlocks(med)


# --- beam optics -----------------------------------------------------------------

@dataclass(frozen=True)
class BeamContext:
    wavelength: float
    n0: float
    c: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise OperatorError(f"wavelength must be positive, got {self.wavelength}")
        if not self.n0 > 0:
            raise OperatorError(f"n0 must be positive, got {self.n0}")

    @property
    def omega(self) -> float:
        return 2 * np.pi * self.c / self.wavelength

    @property
    def lambda_bar(self) -> float:
        """``lambda / (2 pi)``."""
        return self.wavelength / (2 * np.pi)


class BeamHamiltonian:
    """``H = -n0 B + E + O`` acting on the z-dependent beam amplitude ``Phi_bar``."""

    def __init__(self, ctx: BeamContext, med: MediumFrame):
        _require_static(med, "the beam Hamiltonian")
        if abs(ctx.c - med.c) > 1e-12 * med.c:
            raise OperatorError("beam context and medium use different units")
        self.ctx = ctx
        self.med = med
        self.B = algebra.beta()
        gn, ge = med.grad_n_bar, med.grad_eta_bar
        self._A = sum(gn[j][..., None, None] * algebra.pauli(j) for j in range(3))
        self._Ac = sum(gn[j][..., None, None] * algebra.pauli(j).conj() for j in range(3))
        self._Eb = sum(ge[j][..., None, None] * algebra.pauli(j) for j in range(3))
        self._Ebc = sum(ge[j][..., None, None] * algebra.pauli(j).conj() for j in range(3))

    def refractive_part(self, phi):
        """``-(n - n0) B phi``."""
        return -(self.med.n - self.ctx.n0) * apply_matrix(self.B, phi)

    def E_op(self, phi):
        """B-even part: refractive term plus ``(i lambda/2pi) diag(s.gn, s*.gn, -s.gn, -s*.gn)``."""
        blocks = (self._A, self._Ac, -self._A, -self._Ac)
        grad = np.concatenate([_spinor_mul(m, phi[2 * r:2 * r + 2]) for r, m in enumerate(blocks)])
        return self.refractive_part(phi) + 1j * self.ctx.lambda_bar * grad

    def O_op(self, phi):
        """B-odd part: transverse derivatives and impedance-gradient couplings."""
        g = self.med.grid
        dp = g.dplus(phi)
        dm = g.dminus(phi)
        isy = 1j * algebra.pauli("y")
        s = [phi[2 * r:2 * r + 2] for r in range(4)]
        rows = [
            -dm[4:6] + _spinor_mul(-isy @ self._Ebc, s[3]),
            _spinor_mul(-isy @ self._Eb, s[2]) - dp[6:8],
            dp[0:2] + _spinor_mul(-isy @ self._Ebc, s[1]),
            _spinor_mul(-isy @ self._Eb, s[0]) + dm[2:4],
        ]
        return 1j * self.ctx.lambda_bar * np.concatenate(rows)

    def H(self, phi):
        return -self.ctx.n0 * apply_matrix(self.B, phi) + self.E_op(phi) + self.O_op(phi)

    def commutators(self, phi):
        """``(B E - E B) phi`` and ``(B O + O B) phi``."""
        B = self.B
        be = apply_matrix(B, self.E_op(phi)) - self.E_op(apply_matrix(B, phi))
        bo = apply_matrix(B, self.O_op(phi)) + self.O_op(apply_matrix(B, phi))
        return be, bo

    def z_form_residual(self, phibar):
        """``(i lambda/2pi) d_z Phi_bar - H Phi_bar``."""
        g = self.med.grid
        return 1j * self.ctx.lambda_bar * g.ddx(phibar, 2) - self.H(phibar)

    def time_form_residual(self, phibar):
        """The same quantity computed from the time-domain operator:
        ``-i (n/omega) B (M_phi Phi_bar + i omega Phi_bar)``."""
        w = self.ctx.omega
        inner = apply_M_phi(phibar, self.med) + 1j * w * phibar
        return -1j * (self.med.n / w) * apply_matrix(self.B, inner)

    def monochromatic_residual(self, phibar) -> float:
        """Relative difference of the two forms above; zero for any Phi_bar."""
        a = self.z_form_residual(phibar)
        b = self.time_form_residual(phibar)
        scale = max(np.abs(a).max(), np.abs(b).max(), np.abs(self.H(phibar)).max())
        return float(np.abs(a - b).max() / scale)


def beam_hamiltonian(ctx: BeamContext, med: MediumFrame) -> BeamHamiltonian:
    return BeamHamiltonian(ctx, med)
