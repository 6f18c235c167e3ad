"""Truncated atom (x) mode-a (x) mode-b Hilbert space.

Basis ordering is atom-major and mode-b-minor: the flat index of
``|i, j, k>`` is ``(i * (na_max + 1) + j) * (nb_max + 1) + k``. Atomic level
indices are fixed: ``g = 0``, ``e = 1`` and, for three-level atoms, ``i = 2``.

All operators are returned as ``scipy.sparse.csr_matrix`` with complex dtype.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from .errors import InvalidEmbeddingError, InvalidSpaceError, UnsupportedError

ATOM_G = 0
ATOM_E = 1
ATOM_I = 2

SLOTS = ("atom", "mode_a", "mode_b")


@dataclass(frozen=True)
class SpaceSpec:
    """Truncation of the composite space.

    ``na_max`` / ``nb_max`` are the highest Fock states kept for the
    omega0 and omega0/2 modes. ``nb_max >= 2`` because the two-photon term
    needs ``|2>`` on mode b.
    """

    atom_levels: int = 2
    na_max: int = 3
    nb_max: int = 6

    def __post_init__(self):
        if self.atom_levels not in (2, 3):
            raise InvalidSpaceError(f"atom_levels must be 2 or 3, got {self.atom_levels}")
        if int(self.na_max) != self.na_max or self.na_max < 1:
            raise InvalidSpaceError(f"na_max must be an integer >= 1, got {self.na_max}")
        if int(self.nb_max) != self.nb_max or self.nb_max < 2:
            raise InvalidSpaceError(f"nb_max must be an integer >= 2, got {self.nb_max}")

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.atom_levels, self.na_max + 1, self.nb_max + 1)

    @property
    def dim(self) -> int:
        n1, n2, n3 = self.dims
        return n1 * n2 * n3

    def index(self, i: int, j: int, k: int) -> int:
        n1, n2, n3 = self.dims
        if not (0 <= i < n1 and 0 <= j < n2 and 0 <= k < n3):
            raise InvalidSpaceError(f"label ({i}, {j}, {k}) outside {self.dims}")
        return (i * n2 + j) * n3 + k

    def label(self, index: int) -> Tuple[int, int, int]:
        if not 0 <= index < self.dim:
            raise InvalidSpaceError(f"index {index} outside dimension {self.dim}")
        i, j, k = np.unravel_index(index, self.dims)
        return int(i), int(j), int(k)

    def labels(self) -> np.ndarray:
        """(D, 3) integer array of ``(i, j, k)`` for every flat index."""
        return np.array(np.unravel_index(np.arange(self.dim), self.dims)).T

    def basis(self, i: int, j: int, k: int) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(i, j, k)] = 1.0
        return psi

    def grown(self, da: int = 0, db: int = 0) -> "SpaceSpec":
        return SpaceSpec(self.atom_levels, self.na_max + da, self.nb_max + db)

    def as_dict(self) -> dict:
        return {"atom_levels": self.atom_levels, "na_max": self.na_max, "nb_max": self.nb_max}


def mode_annihilator(dim: int) -> sp.csr_matrix:
    """Truncated ladder operator with <n-1|a|n> = sqrt(n)."""
    if int(dim) != dim or dim < 2:
        raise InvalidSpaceError(f"mode dimension must be >= 2, got {dim}")
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr", dtype=complex)


def atom_transition(to: int, frm: int, levels: int) -> sp.csr_matrix:
    """``|to><frm|`` on an atom with ``levels`` levels."""
    if not (0 <= to < levels and 0 <= frm < levels):
        raise InvalidSpaceError(f"atomic level out of range for a {levels}-level atom")
    return sp.csr_matrix(([1.0 + 0j], ([to], [frm])), shape=(levels, levels))


def embed(op, slot: str, spec: SpaceSpec) -> sp.csr_matrix:
    """Lift a single-subsystem operator to the full space."""
    if slot not in SLOTS:
        raise InvalidEmbeddingError(f"unknown slot {slot!r}; expected one of {SLOTS}")
    op = sp.csr_matrix(op, dtype=complex)
    n = spec.dims[SLOTS.index(slot)]
    if op.shape != (n, n):
        raise InvalidEmbeddingError(f"operator shape {op.shape} does not match slot {slot!r} of size {n}")
    factors = [sp.identity(d, dtype=complex, format="csr") for d in spec.dims]
    factors[SLOTS.index(slot)] = op
    return sp.kron(sp.kron(factors[0], factors[1]), factors[2], format="csr")


def dag(op):
    return op.conj().T.tocsr() if sp.issparse(op) else op.conj().T


def commutator(x, y):
    return x @ y - y @ x


def max_abs(op) -> float:
    if sp.issparse(op):
        return float(abs(op).max()) if op.nnz else 0.0
    return float(np.max(np.abs(op))) if np.size(op) else 0.0


def is_hermitian(op, tol: float = 1e-12) -> bool:
    return max_abs(op - dag(op)) < tol


@dataclass(frozen=True)
class SpaceOperators:
    """Elementary operators on one ``SpaceSpec``.

    ``sigmam`` and ``sigmap`` are ``|g><e|`` and ``|e><g|``; ``proj[l]`` is the
    projector onto atomic level ``l``.
    """

    spec: SpaceSpec
    identity: sp.csr_matrix
    a: sp.csr_matrix
    b: sp.csr_matrix
    sigmam: sp.csr_matrix
    sigmap: sp.csr_matrix
    proj: tuple
    num_a: sp.csr_matrix
    num_b: sp.csr_matrix

    @property
    def ad(self):
        return dag(self.a)

    @property
    def bd(self):
        return dag(self.b)

    def transition(self, to: int, frm: int) -> sp.csr_matrix:
        return embed(atom_transition(to, frm, self.spec.atom_levels), "atom", self.spec)


@lru_cache(maxsize=64)
def space_operators(spec: SpaceSpec) -> SpaceOperators:
    _, na, nb = spec.dims
    levels = spec.atom_levels
    a = embed(mode_annihilator(na), "mode_a", spec)
    b = embed(mode_annihilator(nb), "mode_b", spec)
    sm = embed(atom_transition(ATOM_G, ATOM_E, levels), "atom", spec)
    sp_ = embed(atom_transition(ATOM_E, ATOM_G, levels), "atom", spec)
    proj = tuple(embed(atom_transition(l, l, levels), "atom", spec) for l in range(levels))
    return SpaceOperators(
        spec=spec,
        identity=sp.identity(spec.dim, dtype=complex, format="csr"),
        a=a,
        b=b,
        sigmam=sm,
        sigmap=sp_,
        proj=proj,
        num_a=(dag(a) @ a).tocsr(),
        num_b=(dag(b) @ b).tocsr(),
    )


def excitation_labels(spec: SpaceSpec) -> np.ndarray:
    """Twice the excitation number of every basis state, as integers.

    Two levels: N = |e><e| + a'a + b'b/2. Three levels use the conserved
    generalisation N3 = |e><e| + |i><i|/2 + a'a + b'b/2.
    """
    lab = spec.labels()
    atom = np.select([lab[:, 0] == ATOM_E, lab[:, 0] == ATOM_I], [2, 1], 0)
    return atom + 2 * lab[:, 1] + lab[:, 2]


def excitation_number(spec: SpaceSpec) -> sp.csr_matrix:
    """N = |e><e| + a'a + b'b/2 (two-level atoms only)."""
    if spec.atom_levels != 2:
        raise UnsupportedError("the excitation number operator is defined for the two-level model")
    return sp.diags(excitation_labels(spec) / 2.0, 0, format="csr", dtype=complex)


def expectation(op, rho: np.ndarray) -> complex:
    """Tr[op rho]."""
    rho = np.asarray(rho)
    if op.shape != rho.shape:
        raise InvalidEmbeddingError(f"dimension mismatch: operator {op.shape} vs state {rho.shape}")
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.einsum("ij,ji->", op, rho))


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
