"""Constructors for the initial cavity-field state.

Pure fields (Fock, coherent) become amplitude vectors over the retained
Fock levels; thermal fields become classical mixtures of Fock components,
truncated at a 1e-8 tail and renormalized, so a run on a thermal field is
just a weighted family of pure runs.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TAIL_MASS = 1e-8

FIELD_KINDS = ("fock", "coherent", "thermal")


class TruncationError(ValueError):
    """The requested Fock cutoff cannot hold the field's tail."""


@dataclass(frozen=True)
class FieldSpec:
    """Initial cavity field: a Fock level, a coherent state, or a thermal mix."""

    kind: str
    n: int = 0
    amplitude: complex = 0j
    mean_occupation: float = 0.0

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "fock" and self.n < 0:
            raise ValueError(f"Fock level must be >= 0, got {self.n}")
        if self.kind == "thermal" and self.mean_occupation < 0:
            raise ValueError(f"mean occupation must be >= 0, got {self.mean_occupation}")

    # -- constructors --------------------------------------------------------

    @classmethod
    def fock(cls, n: int) -> "FieldSpec":
        return cls(kind="fock", n=n)

    @classmethod
    def coherent(cls, amplitude: complex) -> "FieldSpec":
        return cls(kind="coherent", amplitude=complex(amplitude))

    @classmethod
    def thermal(cls, mean_n: float) -> "FieldSpec":
        return cls(kind="thermal", mean_occupation=float(mean_n))

    # -- bookkeeping ---------------------------------------------------------

    @property
    def mean_n(self) -> float:
        if self.kind == "fock":
            return float(self.n)
        if self.kind == "coherent":
            return abs(self.amplitude) ** 2
        return self.mean_occupation

    @property
    def is_mixture(self) -> bool:
        return self.kind == "thermal"

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "fock":
            out["n"] = self.n
        elif self.kind == "coherent":
            out["amplitude_re"] = self.amplitude.real
            out["amplitude_im"] = self.amplitude.imag
        else:
            out["mean_n"] = self.mean_occupation
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "FieldSpec":
        kind = obj.get("kind")
        if kind == "fock":
            return cls.fock(int(obj["n"]))
        if kind == "coherent":
            return cls.coherent(
                complex(float(obj.get("amplitude_re", 0.0)), float(obj.get("amplitude_im", 0.0)))
            )
        if kind == "thermal":
            return cls.thermal(float(obj["mean_n"]))
        raise ValueError(f"field config needs kind in {FIELD_KINDS}, got {kind!r}")

    # -- realizations ---------------------------------------------------------

    def required_n_max(self, n_atoms: int) -> int:
        """Fock cutoff for protocol runs: field scale + N + tail headroom.

        Excitation conservation bounds photon growth by the atom count, and
        ceil(6 sqrt(<n>) + 4) dominates a Poisson tail down to < 1e-8.
        """
        mean = self.mean_n
        if self.kind == "fock":
            scale = self.n
        elif self.kind == "coherent":
            scale = math.ceil(mean)
        else:
            scale = max((n for _, n in self.components()), default=0)
        return scale + n_atoms + math.ceil(6.0 * math.sqrt(mean) + 4.0)

    def amplitudes(self, n_max: int) -> np.ndarray:
        """Normalized amplitude vector over Fock levels 0..n_max (pure kinds)."""
        if self.kind == "fock":
            if self.n > n_max:
                raise TruncationError(
                    f"Fock level {self.n} above the truncation {n_max}"
                )
            c = np.zeros(n_max + 1, dtype=complex)
            c[self.n] = 1.0
            return c
        if self.kind == "coherent":
            mean = abs(self.amplitude) ** 2
            needed = mean + 6.0 * abs(self.amplitude) + 4.0
            if n_max < needed:
                raise TruncationError(
                    f"coherent field with |amp|^2={mean:.3g} needs n_max >= "
                    f"{math.ceil(needed)}, got {n_max}"
                )
            c = np.zeros(n_max + 1, dtype=complex)
            c[0] = cmath.exp(-mean / 2.0)
            for k in range(1, n_max + 1):
                c[k] = c[k - 1] * self.amplitude / math.sqrt(k)
            tail = 1.0 - float(np.vdot(c, c).real)
            if tail > TAIL_MASS:
                raise TruncationError(
                    f"truncated coherent tail carries {tail:.2e} > {TAIL_MASS:.0e}; "
                    f"raise n_max"
                )
            return c / np.linalg.norm(c)
        raise ValueError("a thermal field is a mixture; use components()")

    def components(self) -> list[tuple[float, int]]:
        """Classical (weight, Fock level) decomposition.

        Fock fields are a single component; thermal fields are geometric
        weights p_n = nbar^n / (1+nbar)^(n+1) cut at a 1e-8 tail and
        renormalized.  Coherent fields are pure superpositions and have no
        classical decomposition.
        """
        if self.kind == "fock":
            return [(1.0, self.n)]
        if self.kind == "coherent":
            raise ValueError("a coherent field is pure; use amplitudes()")
        nbar = self.mean_occupation
        if nbar == 0.0:
            return [(1.0, 0)]
        r = nbar / (1.0 + nbar)
        weights = []
        p = 1.0 / (1.0 + nbar)
        n = 0
        while True:
            weights.append((p, n))
            tail = r ** (n + 1)  # exact remaining mass of the geometric law
            if tail < TAIL_MASS:
                break
            p *= r
            n += 1
        total = sum(w for w, _ in weights)
        return [(w / total, n) for w, n in weights]
