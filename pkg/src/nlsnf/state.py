"""Finite spectral states on the lattice box ``|k| <= N``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

__all__ = ["SpectralState", "gaussian_profile"]


@dataclass(frozen=True)
class SpectralState:
    """Complex amplitudes on the numerators ``-N..N`` with K = k / L.

    ``amplitudes[k + N]`` is the value at numerator ``k``.
    """

    L: int
    N: int
    amplitudes: np.ndarray
    t: float = 0.0
    eps: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2 * self.N + 1,):
            raise ValueError(f"expected {2 * self.N + 1} amplitudes, got shape {amps.shape}")
        if self.L < 1 or self.N < 0:
            raise ValueError("need L >= 1 and N >= 0")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, L: int, N: int, **kw) -> "SpectralState":
        return cls(L, N, np.zeros(2 * N + 1, dtype=np.complex128), **kw)

    @classmethod
    def from_modes(cls, L: int, N: int, modes: Mapping[int, complex], **kw) -> "SpectralState":
        amps = np.zeros(2 * N + 1, dtype=np.complex128)
        for k, v in modes.items():
            if abs(k) > N:
                raise ValueError(f"mode {k} outside box |k| <= {N}")
            amps[k + N] = v
        return cls(L, N, amps, **kw)

    @classmethod
    def from_function(cls, L: int, N: int, f0: Callable[[np.ndarray], np.ndarray], **kw) -> "SpectralState":
        K = np.arange(-N, N + 1) / L
        return cls(L, N, np.asarray(f0(K), dtype=np.complex128), **kw)

    def numerators(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def frequencies(self) -> np.ndarray:
        return self.numerators() / self.L

    def amplitude(self, k: int) -> complex:
        if abs(k) > self.N:
            return 0j
        return complex(self.amplitudes[k + self.N])

    def support(self) -> list[int]:
        return [int(k) for k, v in zip(self.numerators(), self.amplitudes) if v != 0]

    def as_dict(self) -> dict[int, complex]:
        return {int(k): complex(v) for k, v in zip(self.numerators(), self.amplitudes)}

    def mass(self) -> float:
        """(1/L) sum |u_K|^2, the L^2 norm squared under the 1/L Plancherel weight."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) / self.L)

    def with_amplitudes(self, amps: np.ndarray, t: float | None = None) -> "SpectralState":
        return replace(self, amplitudes=np.asarray(amps, dtype=np.complex128),
                       t=self.t if t is None else t)


def gaussian_profile(A: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """f0(K) = A exp(-pi K^2)."""

    def f0(K: np.ndarray) -> np.ndarray:
        return A * np.exp(-np.pi * np.square(K))

    return f0
