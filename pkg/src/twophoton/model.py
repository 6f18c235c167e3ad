"""Hamiltonians, jump channels and the Liouvillian.

All frequencies and rates are in units of the one-photon coupling g1 for the
two-level model and in units of g' (= g3 = g4 by convention) for the
three-level model. Hamiltonians default to the frame rotating with
omega0 * (a'a + b'b/2 + sigma_z/2); in that frame the omega0 terms drop out
and, for three levels, only the detuning ``delta |i><i|`` survives.

Dissipators use the convention where a channel ``c`` with rate ``r``
contributes ``r (c rho c' - {c'c, rho}/2)``; collapse operators returned by
`build_collapse_ops` are already scaled by ``sqrt(r)``.
"""
from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, InvalidSpaceError, UnsupportedError
from .hilbert import (
    ATOM_E,
    ATOM_G,
    ATOM_I,
    SpaceSpec,
    dag,
    excitation_labels,
    space_operators,
)


class Channel(str, enum.Enum):
    A_PHOTON = "A_PHOTON"
    B_PHOTON = "B_PHOTON"
    DECAY = "DECAY"
    PUMP = "PUMP"


def _check_rates(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not math.isfinite(value):
            raise ConfigError(f"{name} must be finite, got {value}")
        if value < 0:
            raise ConfigError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class TwoLevelParams:
    """Effective two-level model. Defaults are the high-efficiency baseline.

    ``g2`` may be negative (the effective coupling from the three-level atom
    is); only ``|g2|`` enters steady-state observables.
    """

    g1: float = 1.0
    g2: float = 0.1
    kappa1: float = 0.02
    kappa2: float = 1.0
    pump: float = 0.005
    gamma: float = 0.016
    omega0: Optional[float] = None

    def __post_init__(self):
        _check_rates(self, ("g1", "kappa1", "kappa2", "pump", "gamma"))
        if self.g1 <= 0:
            raise ConfigError(f"g1 must be > 0, got {self.g1}")
        if not math.isfinite(self.g2):
            raise ConfigError(f"g2 must be finite, got {self.g2}")

    def replace(self, **changes) -> "TwoLevelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class ThreeLevelParams:
    """Three-level atom with intermediate level ``|i>`` detuned by ``delta``.

    Defaults are the validation operating point in units of g':
    g1 = 0.1, delta = 100, and the two-level baseline rates scaled by g1.
    """

    g1: float = 0.1
    g3: float = 1.0
    g4: float = 1.0
    delta: float = 100.0
    kappa1: float = 0.002
    kappa2: float = 0.1
    pump: float = 0.0005
    gamma: float = 0.0016
    omega0: Optional[float] = 400.0

    def __post_init__(self):
        _check_rates(self, ("g1", "g3", "g4", "kappa1", "kappa2", "pump", "gamma"))
        if not math.isfinite(self.delta):
            raise ConfigError(f"delta must be finite, got {self.delta}")
        coupling = max(self.g1, self.g3, self.g4)
        if abs(self.delta) < 10 * coupling:
            warnings.warn(
                f"|delta| = {abs(self.delta):g} is below 10x the largest coupling ({coupling:g}); "
                "the effective two-level description is unreliable",
                stacklevel=3,
            )

    @property
    def g2_effective(self) -> float:
        return effective_g2(self.g3, self.g4, self.delta)

    def effective_two_level(self) -> TwoLevelParams:
        """Two-level model with the same rates (same units) and g2 from the transform."""
        return TwoLevelParams(
            g1=self.g1,
            g2=self.g2_effective,
            kappa1=self.kappa1,
            kappa2=self.kappa2,
            pump=self.pump,
            gamma=self.gamma,
            omega0=self.omega0,
        )

    def replace(self, **changes) -> "ThreeLevelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


class Collapse(NamedTuple):
    channel: Channel
    rate: float
    op: sp.csr_matrix


def _lab_frame_terms(omega0, spec: SpaceSpec):
    if omega0 is None:
        raise ConfigError("omega0 is required for lab-frame Hamiltonians")
    o = space_operators(spec)
    sigma_z = o.proj[ATOM_E] - o.proj[ATOM_G]
    return 0.5 * omega0 * sigma_z + omega0 * o.num_a + 0.5 * omega0 * o.num_b


def build_h_two_level(params: TwoLevelParams, spec: SpaceSpec, rotating: bool = True) -> sp.csr_matrix:
    """g1 (a' s- + a s+) + g2 (b'^2 s- + b^2 s+), plus H0 when ``rotating`` is False."""
    if spec.atom_levels != 2:
        raise UnsupportedError("build_h_two_level needs a two-level SpaceSpec")
    if spec.nb_max < 2:
        raise InvalidSpaceError("nb_max must be >= 2 for the two-photon coupling")
    o = space_operators(spec)
    b2 = o.b @ o.b
    h = params.g1 * (o.ad @ o.sigmam + o.a @ o.sigmap) + params.g2 * (dag(b2) @ o.sigmam + b2 @ o.sigmap)
    if not rotating:
        h = h + _lab_frame_terms(params.omega0, spec)
    return sp.csr_matrix(h)


def build_h_three_level(params: ThreeLevelParams, spec: SpaceSpec, rotating: bool = True) -> sp.csr_matrix:
    if spec.atom_levels != 3:
        raise UnsupportedError("build_h_three_level needs a three-level SpaceSpec")
    o = space_operators(spec)
    g_e = o.transition(ATOM_G, ATOM_E)
    g_i = o.transition(ATOM_G, ATOM_I)
    i_e = o.transition(ATOM_I, ATOM_E)
    h = (
        params.delta * o.proj[ATOM_I]
        + params.g1 * (o.ad @ g_e + dag(o.ad @ g_e))
        + params.g3 * (o.bd @ g_i + dag(o.bd @ g_i))
        + params.g4 * (o.bd @ i_e + dag(o.bd @ i_e))
    )
    if not rotating:
        h = h + _lab_frame_terms(params.omega0, spec)
    return sp.csr_matrix(h)


def build_hamiltonian(params, spec: SpaceSpec, rotating: bool = True) -> sp.csr_matrix:
    if isinstance(params, ThreeLevelParams):
        return build_h_three_level(params, spec, rotating)
    return build_h_two_level(params, spec, rotating)


def build_collapse_ops(params, spec: SpaceSpec) -> list:
    """Jump channels sqrt(k1) a, sqrt(k2) b, sqrt(gamma) |g><e|, sqrt(P) |e><g|.

    Zero-rate channels are left out. The three-level atom has no decay
    channels touching ``|i>``.
    """
    o = space_operators(spec)
    channels = [
        (Channel.A_PHOTON, params.kappa1, o.a),
        (Channel.B_PHOTON, params.kappa2, o.b),
        (Channel.DECAY, params.gamma, o.sigmam),
        (Channel.PUMP, params.pump, o.sigmap),
    ]
    return [Collapse(ch, rate, sp.csr_matrix(math.sqrt(rate) * op)) for ch, rate, op in channels if rate > 0]


def jump_rate_operator(params, spec: SpaceSpec) -> sp.csr_matrix:
    """Sum of c'c over all channels (diagonal in the product basis)."""
    o = space_operators(spec)
    return sp.csr_matrix(
        params.kappa1 * o.num_a
        + params.kappa2 * o.num_b
        + params.gamma * o.proj[ATOM_E]
        + params.pump * o.proj[ATOM_G]
    )


def build_h_effective(params, spec: SpaceSpec, rotating: bool = True) -> sp.csr_matrix:
    """H - (i/2) sum_c c'c; conserves the excitation number."""
    h = build_hamiltonian(params, spec, rotating)
    return sp.csr_matrix(h - 0.5j * jump_rate_operator(params, spec))


@dataclass(frozen=True)
class Liouvillian:
    """Generator of d vec(rho)/dt with column-stacked vec.

    ``labels`` (twice the excitation number of each basis state), when
    present, certifies that L only couples elements with equal
    ``labels[m] - labels[n]``; solvers use it to work in one sector.
    """

    spec: Optional[SpaceSpec]
    matrix: sp.csr_matrix
    labels: Optional[np.ndarray] = None
    convention: str = "column-stacking"

    @property
    def dim(self) -> int:
        return int(round(math.sqrt(self.matrix.shape[0])))

    def sector(self, shift: int = 0) -> np.ndarray:
        """vec indices of elements (m, n) with labels[m] - labels[n] == shift."""
        d = self.dim
        if self.labels is None:
            if shift:
                raise UnsupportedError("sector decomposition needs excitation labels")
            return np.arange(d * d)
        lab = np.asarray(self.labels)
        diff = lab[:, None] - lab[None, :]
        # column stacking: vec index of (m, n) is m + n * d
        return np.flatnonzero(diff.T.ravel() == shift)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.matrix @ np.asarray(rho).reshape(-1, order="F")).reshape(d, d, order="F")


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def build_liouvillian(h, collapse: Sequence, spec: Optional[SpaceSpec] = None, labels=None) -> Liouvillian:
    """-i[H, .] + sum_c (c . c' - {c'c, .}/2) as a sparse D^2 x D^2 matrix.

    ``collapse`` holds `Collapse` tuples or bare (already scaled) operators.
    """
    h = sp.csr_matrix(h)
    d = h.shape[0]
    eye = sp.identity(d, dtype=complex, format="csr")
    mat = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for c in collapse:
        c = sp.csr_matrix(c.op if isinstance(c, Collapse) else c)
        if c.shape != h.shape:
            raise InvalidSpaceError(f"collapse operator shape {c.shape} does not match H {h.shape}")
        cdc = dag(c) @ c
        mat = mat + sp.kron(c.conj(), c) - 0.5 * sp.kron(eye, cdc) - 0.5 * sp.kron(cdc.T, eye)
    return Liouvillian(spec=spec, matrix=sp.csr_matrix(mat), labels=labels)


def liouvillian(params, spec: SpaceSpec, rotating: bool = True) -> Liouvillian:
    """Liouvillian of the two- or three-level model, with excitation labels."""
    h = build_hamiltonian(params, spec, rotating)
    return build_liouvillian(h, build_collapse_ops(params, spec), spec=spec, labels=excitation_labels(spec))


def transform_generator_S(params: ThreeLevelParams, spec: SpaceSpec) -> sp.csr_matrix:
    """Anti-Hermitian generator eliminating ``|i>`` to first order in g/delta."""
    if spec.atom_levels != 3:
        raise UnsupportedError("the transform generator acts on the three-level space")
    if params.delta == 0:
        raise ConfigError("delta must be nonzero")
    o = space_operators(spec)
    x = (params.g4 / params.delta) * (o.bd @ o.transition(ATOM_I, ATOM_E)) - (params.g3 / params.delta) * (
        o.bd @ o.transition(ATOM_G, ATOM_I)
    )
    return sp.csr_matrix(x - dag(x))


def effective_g2(g3: float, g4: float, delta: float) -> float:
    """(g3^2 + g4^2 - 4 g3 g4) / (2 delta)."""
    if delta == 0:
        raise ConfigError("delta must be nonzero")
    return (g3 * g3 + g4 * g4 - 4.0 * g3 * g4) / (2.0 * delta)
