"""Constant matrices of the eight-dimensional representation.

Every matrix here is a dense complex ``ndarray`` (2x2, 4x4 or 8x8).  The
8-component index order is that of the field vector

    ==========  =========  ================
    code index  doc index  component
    ==========  =========  ================
    0           1          sqrt(eps) E_x
    1           2          sqrt(eps) E_y
    2           3          sqrt(eps) E_z
    3           4          null slot
    4           5          B_x / sqrt(mu)
    5           6          B_y / sqrt(mu)
    6           7          B_z / sqrt(mu)
    7           8          null slot
    ==========  =========  ================

The literal tables in :data:`PRINTED` are the matrices as printed entry by
entry; the constructors build the same objects from Kronecker products so
the two can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

AXES = ("x", "y", "z")

EXACT_TOL = 1e-14

_SQRT2 = np.sqrt(2.0)


def _axis_index(axis) -> int:
    if isinstance(axis, (int, np.integer)):
        if 0 <= axis < 3:
            return int(axis)
    elif axis in AXES:
        return AXES.index(axis)
    raise ValueError(f"axis must be one of {AXES} or 0..2, got {axis!r}")


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)


def pauli(axis) -> np.ndarray:
    """Standard Pauli matrix for ``axis`` in {'x', 'y', 'z'} (or 0, 1, 2)."""
    j = _axis_index(axis)
    if j == 0:
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if j == 1:
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    return np.array([[1, 0], [0, -1]], dtype=complex)


def kron(a, b, *rest) -> np.ndarray:
    """Direct product ``a (x) b (x) ...``; block (j, k) of ``a (x) b`` is ``a[j, k] * b``."""
    out = np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
    for m in rest:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def sigma_dot(vec, conjugate: bool = False) -> np.ndarray:
    """``sigma . vec`` for a constant 3-vector (``sigma* . vec`` if ``conjugate``)."""
    sig = [pauli(j) for j in range(3)]
    if conjugate:
        sig = [s.conj() for s in sig]
    return sum(complex(c) * s for c, s in zip(vec, sig))


def m0_direction(axis, v: float = 1.0) -> np.ndarray:
    """Coefficient matrix of the derivative along ``axis`` in the constant-medium operator.

    x: ``v sy(x)sy(x)sx``, y: ``-v sy(x)sy(x)sz``, z: ``v sy(x)1(x)sy``.
    """
    if not v > 0:
        raise ValueError(f"speed must be positive, got {v!r}")
    j = _axis_index(axis)
    sx, sy, sz = pauli(0), pauli(1), pauli(2)
    if j == 0:
        m = kron(sy, sy, sx)
    elif j == 1:
        m = -kron(sy, sy, sz)
    else:
        m = kron(sy, identity(2), sy)
    # the products are real; drop the +0j noise so the result is exactly real
    return v * m.real.astype(complex)


def transform_tau() -> np.ndarray:
    return (identity(2) + 1j * pauli("x")) / _SQRT2


def transform_T8() -> np.ndarray:
    """The 8x8 map from the field vector to the block-diagonal (RSW) basis, ``tau (x) 1_4``."""
    return kron(transform_tau(), identity(4))


def transform_T() -> np.ndarray:
    """Unitary bringing the block-diagonal operator to 2x2 Pauli blocks."""
    return PRINTED["T"].copy()


def transform_TT() -> np.ndarray:
    """Composite transform ``T @ T8``, mapping the field vector straight to Psi."""
    return transform_T() @ transform_T8()


def transform_SK() -> np.ndarray:
    """Permutation relating Psi to the older eight-component representation."""
    return PRINTED["SK"].copy()


def transform_SphiK() -> np.ndarray:
    return PRINTED["SphiK"].copy()


def transform_Sphi() -> np.ndarray:
    """Permutation to the beam (Phi) representation, ``SphiK @ SK``."""
    return transform_SphiK() @ transform_SK()


def beta() -> np.ndarray:
    """Eight-dimensional analogue of Dirac's beta, ``sz (x) 1_4``."""
    return kron(pauli("z"), identity(4))


def big_sigma(axis, conjugate: bool = False) -> np.ndarray:
    """``Sigma_j = 1_2 (x) sigma_j`` (or its complex conjugate)."""
    s = pauli(axis)
    return kron(identity(2), s.conj() if conjugate else s)


def is_unitary(u, tol: float = EXACT_TOL) -> bool:
    u = np.asarray(u)
    return unitarity_error(u) <= tol


def unitarity_error(u) -> float:
    u = np.asarray(u)
    n = u.shape[0]
    return float(max(np.abs(u.conj().T @ u - np.eye(n)).max(),
                     np.abs(u @ u.conj().T - np.eye(n)).max()))


def is_permutation(p) -> bool:
    p = np.asarray(p)
    if not np.all((p == 0) | (p == 1)):
        return False
    return bool(np.all(p.sum(axis=0) == 1) and np.all(p.sum(axis=1) == 1))


def max_norm(a) -> float:
    return float(np.abs(np.asarray(a)).max())


def _from_rows(rows, scale=1.0) -> np.ndarray:
    return scale * np.array(rows, dtype=complex)


def _perm(cols) -> np.ndarray:
    """Permutation matrix with row ``r`` holding its single 1 at column ``cols[r]``."""
    p = np.zeros((len(cols), len(cols)), dtype=complex)
    p[np.arange(len(cols)), cols] = 1
    return p


i_ = 1j

PRINTED: dict[str, np.ndarray] = {
    "M0x": _from_rows([
        [0, 0, 0, 0, 0, 0, 0, -1],
        [0, 0, 0, 0, 0, 0, -1, 0],
        [0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 0],
        [0, -1, 0, 0, 0, 0, 0, 0],
        [-1, 0, 0, 0, 0, 0, 0, 0],
    ]),
    "M0y": _from_rows([
        [0, 0, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 0, 0, -1],
        [0, 0, 0, 0, -1, 0, 0, 0],
        [0, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, -1, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0, 0, 0],
        [0, -1, 0, 0, 0, 0, 0, 0],
    ]),
    "M0z": _from_rows([
        [0, 0, 0, 0, 0, -1, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, -1],
        [0, 0, 0, 0, 0, 0, 1, 0],
        [0, 1, 0, 0, 0, 0, 0, 0],
        [-1, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, -1, 0, 0, 0, 0, 0],
    ]),
    "T8": _from_rows([
        [1, 0, 0, 0, i_, 0, 0, 0],
        [0, 1, 0, 0, 0, i_, 0, 0],
        [0, 0, 1, 0, 0, 0, i_, 0],
        [0, 0, 0, 1, 0, 0, 0, i_],
        [i_, 0, 0, 0, 1, 0, 0, 0],
        [0, i_, 0, 0, 0, 1, 0, 0],
        [0, 0, i_, 0, 0, 0, 1, 0],
        [0, 0, 0, i_, 0, 0, 0, 1],
    ], 1 / _SQRT2),
    "T": _from_rows([
        [-1, i_, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, i_, 0, 0, 0, 0],
        [0, 0, 1, -i_, 0, 0, 0, 0],
        [1, i_, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, i_, -1, 0, 0],
        [0, 0, 0, 0, 0, 0, -i_, -1],
        [0, 0, 0, 0, 0, 0, -i_, 1],
        [0, 0, 0, 0, -i_, -1, 0, 0],
    ], 1 / _SQRT2),
    "TT": _from_rows([
        [-1, i_, 0, 0, -i_, -1, 0, 0],
        [0, 0, 1, i_, 0, 0, i_, -1],
        [0, 0, 1, -i_, 0, 0, i_, 1],
        [1, i_, 0, 0, i_, -1, 0, 0],
        [-1, -i_, 0, 0, i_, -1, 0, 0],
        [0, 0, 1, -i_, 0, 0, -i_, -1],
        [0, 0, 1, i_, 0, 0, -i_, 1],
        [1, -i_, 0, 0, -i_, -1, 0, 0],
    ], 0.5),
    "SK": _perm([0, 2, 1, 3, 4, 6, 5, 7]),
    "SphiK": _perm([0, 1, 4, 5, 2, 3, 6, 7]),
    "Sphi": _perm([0, 2, 4, 6, 1, 3, 5, 7]),
}
del i_

for _m in PRINTED.values():
    _m.setflags(write=False)


@dataclass(frozen=True)
class ConstantSet:
    """Every constant matrix, built from the constructors (``v = 1``).

    The verification suite runs against one of these so that a deliberately
    corrupted copy (see :meth:`mutated`) can be checked for detection.
    """

    sigma: tuple = field(default_factory=lambda: tuple(pauli(j) for j in range(3)))
    m0: tuple = field(default_factory=lambda: tuple(m0_direction(j, 1.0) for j in range(3)))
    tau: np.ndarray = field(default_factory=transform_tau)
    T8: np.ndarray = field(default_factory=transform_T8)
    T: np.ndarray = field(default_factory=transform_T)
    TT: np.ndarray = field(default_factory=transform_TT)
    SK: np.ndarray = field(default_factory=transform_SK)
    SphiK: np.ndarray = field(default_factory=transform_SphiK)
    Sphi: np.ndarray = field(default_factory=transform_Sphi)
    beta: np.ndarray = field(default_factory=beta)

    NAMES = ("sigma_x", "sigma_y", "sigma_z", "M0x", "M0y", "M0z",
             "tau", "T8", "T", "TT", "SK", "SphiK", "Sphi", "beta")

    def get(self, name: str) -> np.ndarray:
        if name.startswith("sigma_"):
            return self.sigma[_axis_index(name[-1])]
        if name in ("M0x", "M0y", "M0z"):
            return self.m0[_axis_index(name[-1])]
        if name in self.NAMES:
            return getattr(self, name)
        raise KeyError(f"unknown constant matrix {name!r}; known: {', '.join(self.NAMES)}")

    def mutated(self, name: str, row: int, col: int, value=None) -> "ConstantSet":
        """Copy with entry ``(row, col)`` of ``name`` replaced (sign-flipped when ``value`` is None)."""
        m = np.array(self.get(name), dtype=complex)
        m[row, col] = -m[row, col] if value is None else complex(value)
        if name.startswith("sigma_"):
            sig = list(self.sigma)
            sig[_axis_index(name[-1])] = m
            return replace(self, sigma=tuple(sig))
        if name.startswith("M0"):
            m0 = list(self.m0)
            m0[_axis_index(name[-1])] = m
            return replace(self, m0=tuple(m0))
        return replace(self, **{name: m})
