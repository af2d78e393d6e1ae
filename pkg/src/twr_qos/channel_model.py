"""Channel states for a relay on the line between two sources.

Link power gains follow independent exponential laws (Rayleigh fading on top of
log-distance path loss).  Sources sit at distance 2 from each other and the
relay at distance ``d`` from source A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox

__all__ = [
    "FadingSpec",
    "NetworkCsi",
    "make_fading_spec",
    "sample_csi",
    "classify_three_phase_region",
    "three_phase_region_codes",
    "REGION_TAGS",
]

REGION_TAGS = ("R1", "R2", "R3", "R4")

# Philox4x64 emits four 64-bit words per counter block; one block per sample.
_WORDS_PER_SAMPLE = 4


@dataclass(frozen=True)
class FadingSpec:
    relay_distance: float
    path_loss_exponent: float

    @property
    def rate_params(self) -> tuple[float, float, float]:
        """Exponential rate parameters (lambda1, lambda2, lambda3)."""
        d, nu = self.relay_distance, self.path_loss_exponent
        return (d**nu, (2.0 - d) ** nu, 2.0**nu)

    @property
    def mean_gains(self) -> tuple[float, float, float]:
        return tuple(1.0 / lam for lam in self.rate_params)


def make_fading_spec(d: float, nu: float) -> FadingSpec:
    d = float(d)
    nu = float(nu)
    if not (0.0 < d < 2.0) or not np.isfinite(d):
        raise ValueError(f"relay_distance must lie in (0, 2), got {d}")
    if not (nu > 0.0) or not np.isfinite(nu):
        raise ValueError(f"path_loss_exponent must be positive, got {nu}")
    return FadingSpec(d, nu)


@dataclass(frozen=True)
class NetworkCsi:
    """Link power gains (A-R, B-R, A-B), noise-normalised and linear.

    Fields may be scalars or equally shaped arrays; an array-valued instance
    behaves as a sequence of scalar states.
    """

    g1: float | np.ndarray
    g2: float | np.ndarray
    g3: float | np.ndarray

    def __post_init__(self) -> None:
        for name in ("g1", "g2", "g3"):
            v = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"{name} must be finite and nonnegative")

    def __len__(self) -> int:
        return int(np.size(self.g1))

    def __getitem__(self, k: int) -> "NetworkCsi":
        return NetworkCsi(
            float(np.asarray(self.g1).reshape(-1)[k]),
            float(np.asarray(self.g2).reshape(-1)[k]),
            float(np.asarray(self.g3).reshape(-1)[k]),
        )

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def take(self, idx) -> "NetworkCsi":
        return NetworkCsi(
            np.asarray(self.g1)[idx], np.asarray(self.g2)[idx], np.asarray(self.g3)[idx]
        )

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.atleast_1d(np.asarray(self.g1, dtype=float)),
            np.atleast_1d(np.asarray(self.g2, dtype=float)),
            np.atleast_1d(np.asarray(self.g3, dtype=float)),
        )

    def swapped(self) -> "NetworkCsi":
        """Exchange the roles of the two sources."""
        return NetworkCsi(self.g2, self.g1, self.g3)


def _uniforms(seed: int, start: int, n: int) -> np.ndarray:
    # Counter block k holds sample k, so any slice of the sequence can be
    # regenerated on its own.
    gen = Philox(key=int(seed), counter=[int(start), 0, 0, 0])
    raw = gen.random_raw(_WORDS_PER_SAMPLE * n).reshape(n, _WORDS_PER_SAMPLE)[:, :3]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def sample_csi(spec: FadingSpec, n: int, seed: int, start: int = 0) -> NetworkCsi:
    """Draw ``n`` i.i.d. channel states, indices ``start .. start+n-1``.

    Sample ``k`` depends only on ``(seed, k)``: generating a sub-range yields
    bit-identical values to slicing a larger batch.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    u = _uniforms(seed, start, n)
    lam = np.asarray(spec.rate_params)
    gains = -np.log1p(-u) / lam
    return NetworkCsi(gains[:, 0].copy(), gains[:, 1].copy(), gains[:, 2].copy())


def three_phase_region_codes(csi: NetworkCsi) -> np.ndarray:
    """Region index 1..4 per state; ties go to the direct-transmission side."""
    g1, g2, g3 = csi.as_arrays()
    return 1 + (g1 > g3).astype(np.int8) + 2 * (g2 > g3).astype(np.int8)


def classify_three_phase_region(csi: NetworkCsi) -> str:
    code = int(three_phase_region_codes(csi)[0])
    return REGION_TAGS[code - 1]
