"""Exact unitary propagation via per-block Hermitian eigendecomposition.

One eigendecomposition per excitation block turns time evolution into a
single matrix application per requested time, which is what the protocol
needs (one long evolution, not a trajectory integrator).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .hilbert import (
    AtomFieldBasis,
    PureState,
    subradiant_atomic_vectors,
    symmetric_atomic_vector,
    atom_code,
)
from .model import (
    BlockDiagonalOperator,
    BlockShiftOperator,
    SystemParams,
    build_hamiltonian,
    collective_operator,
    h0_diagonal,
)

RECONSTRUCTION_TOL = 1e-10


class EigensolverError(RuntimeError):
    """Per-block diagonalization failed or did not reproduce the block."""


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Make each eigenvector's largest-magnitude component real positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        ph = col[i]
        if ph != 0:
            out[:, j] = col * (abs(ph) / ph)
    return out


@dataclass
class Propagator:
    """Compiled spectral data of H on a set of excitation blocks."""

    params: SystemParams
    basis: AtomFieldBasis
    eigenvalues: dict[int, np.ndarray] = field(default_factory=dict)
    eigenvectors: dict[int, np.ndarray] = field(default_factory=dict)
    compile_seconds: float = 0.0

    @property
    def compiled_blocks(self) -> list[int]:
        return sorted(self.eigenvalues)


def compile_propagator(
    params: SystemParams,
    basis: AtomFieldBasis,
    block_ids=None,
    hamiltonian: BlockDiagonalOperator | None = None,
) -> Propagator:
    """Diagonalize H block by block with a deterministic phase convention."""
    wanted = basis.block_ids if block_ids is None else sorted(block_ids)
    h = hamiltonian if hamiltonian is not None else build_hamiltonian(params, basis, wanted)
    t0 = time.perf_counter()
    vals: dict[int, np.ndarray] = {}
    vecs: dict[int, np.ndarray] = {}
    for m in wanted:
        a = h.block(m)
        try:
            w, v = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:
            raise EigensolverError(f"eigendecomposition failed on block {m}") from exc
        v = _fix_phases(v)
        resid = np.linalg.norm((v * w) @ v.conj().T - a)
        scale = np.linalg.norm(a)
        if resid > RECONSTRUCTION_TOL * max(scale, 1.0):
            raise EigensolverError(
                f"block {m}: reconstruction error {resid:.3e} above "
                f"{RECONSTRUCTION_TOL:.0e} * {scale:.3e}"
            )
        vals[m] = w
        vecs[m] = v
    return Propagator(
        params=params,
        basis=basis,
        eigenvalues=vals,
        eigenvectors=vecs,
        compile_seconds=time.perf_counter() - t0,
    )


def evolve(
    prop: Propagator,
    state: PureState,
    t: float,
    interaction_picture: bool = False,
) -> PureState:
    """Propagate |psi> by exp(-iHt) block by block; t may be negative.

    With interaction_picture=True the free phases exp(+i H0 t) are applied
    afterwards, which strips the fast rotation and leaves only the slow
    interaction-induced motion.
    """
    out: dict[int, np.ndarray] = {}
    for m, v in state.block_amps.items():
        if m not in prop.eigenvalues:
            raise KeyError(f"propagator not compiled for excitation block {m}")
        vec = prop.eigenvectors[m]
        phases = np.exp(-1j * prop.eigenvalues[m] * t)
        w = vec @ (phases * (vec.conj().T @ v))
        if interaction_picture:
            w = np.exp(1j * h0_diagonal(prop.params, prop.basis, m) * t) * w
        out[m] = w
    result = PureState(state.basis, out)
    result.check_normalized()
    return result


def expectation(state: PureState, op) -> float | complex:
    """<psi|O|psi>; real (checked) for Hermitian block-diagonal operators."""
    if isinstance(op, BlockDiagonalOperator):
        return op.expectation(state)
    if isinstance(op, BlockShiftOperator):
        return state.inner(op.apply(state))
    raise TypeError(f"unsupported operator type {type(op).__name__}")


# ---------------------------------------------------------------------------
# Reduced atomic state
# ---------------------------------------------------------------------------

REDUCE_ATOMIC_MAX_CONFIGS = 4096  # 12 atoms; the Gram matrix is dense


@dataclass
class AtomicDensity:
    """Reduced atomic density matrix over the 2^N product configurations."""

    matrix: np.ndarray
    n_atoms: int

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.linalg.norm(self.matrix) ** 2)

    def hermiticity_error(self) -> float:
        nrm = np.linalg.norm(self.matrix)
        if nrm == 0.0:
            return 0.0
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T) / nrm)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def projected_weight(self, atomic_vector: np.ndarray) -> float:
        """<v| rho |v> for a dense vector over the 2^N configurations."""
        v = np.asarray(atomic_vector, dtype=complex)
        return float(np.vdot(v, self.matrix @ v).real)


def reduce_atomic(state: PureState) -> AtomicDensity:
    """Partial trace over the field mode."""
    basis = state.basis
    n_configs = 1 << basis.n_atoms
    if n_configs > REDUCE_ATOMIC_MAX_CONFIGS:
        raise ValueError(
            f"refusing to build a {n_configs}x{n_configs} atomic density "
            f"(N={basis.n_atoms}); use sector-resolved overlaps instead"
        )
    # Columns indexed by photon number: rho = A A' marginalizes the field.
    a = np.zeros((n_configs, basis.n_max + 1), dtype=complex)
    for m, v in state.block_amps.items():
        for local, (code, n) in enumerate(basis.block(m).states):
            a[code, n] += v[local]
    return AtomicDensity(matrix=a @ a.conj().T, n_atoms=basis.n_atoms)


# ---------------------------------------------------------------------------
# Field-marginalized sector overlaps (cheap fidelity path)
# ---------------------------------------------------------------------------


def single_excitation_amplitudes(state: PureState, n_photons: int) -> np.ndarray:
    """Amplitudes on the N single-excitation configs at one Fock level."""
    basis = state.basis
    return np.array(
        [
            state.amplitude(atom_code(k, basis.n_atoms), n_photons)
            for k in range(basis.n_atoms)
        ]
    )


def marginal_projected_weight(
    state: PureState, atomic_vector: np.ndarray, n_photons: int | None = None
) -> float:
    """Sum over Fock levels of |<v (x) n | psi>|^2 for a single-excitation v.

    Equals <v| rho_atoms |v> with the field traced out; restricting
    n_photons conditions on one Fock level instead.
    """
    basis = state.basis
    levels = range(basis.n_max + 1) if n_photons is None else (n_photons,)
    total = 0.0
    for n in levels:
        amp = np.vdot(atomic_vector, single_excitation_amplitudes(state, n))
        total += abs(amp) ** 2
    return total


def sector_weights(state: PureState) -> dict[str, float]:
    """Field-marginalized weights used by the trajectory report."""
    basis = state.basis
    n_atoms = basis.n_atoms
    control = 0.0
    off_control = 0.0
    for m, v in state.block_amps.items():
        for local, (code, n) in enumerate(basis.block(m).states):
            if bin(code).count("1") != 1:
                continue
            w = abs(v[local]) ** 2
            if code == atom_code(0, n_atoms):
                control += w
            else:
                off_control += w
    sym = marginal_projected_weight(state, symmetric_atomic_vector(n_atoms))
    sub = 0.0
    if n_atoms >= 2:
        for row in subradiant_atomic_vectors(n_atoms):
            sub += marginal_projected_weight(state, row)
    return {
        "p_control": control,
        "p_single_offcontrol": off_control,
        "p_symmetric": sym,
        "p_subradiant": sub,
    }


TRAJECTORY_COLUMNS = (
    "t_seconds",
    "p_control",
    "p_single_offcontrol",
    "p_symmetric",
    "p_subradiant",
    "jpjm",
    "norm_error",
)


def trajectory_rows(
    prop: Propagator, state0: PureState, times: np.ndarray
) -> list[dict[str, float]]:
    """Sample populations, dark-sector weight and <J+J-> along exp(-iHt)."""
    jpjm = collective_operator(prop.basis, "J+J-", block_ids=list(state0.block_amps))
    rows = []
    for t in np.asarray(times, dtype=float):
        st = evolve(prop, state0, float(t))
        row = {"t_seconds": float(t)}
        row.update(sector_weights(st))
        row["jpjm"] = jpjm.expectation(st)
        row["norm_error"] = abs(st.norm() - 1.0)
        rows.append(row)
    return rows


def default_trajectory_times(params: SystemParams, points: int = 400) -> np.ndarray:
    """Uniform grid over one slow period [0, 2 pi / alpha]."""
    return np.linspace(0.0, 2.0 * np.pi / abs(params.alpha), points)
