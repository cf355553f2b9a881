"""Quasi-static i.i.d. Rayleigh channels for the Tx-Rx, Tx-relay and relay-Rx links."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import RngStream, db_to_linear, sample_complex_gaussian_matrix


@dataclass(frozen=True)
class SystemDims:
    m: int  # Tx antennas
    n: int  # relay antennas
    l: int  # Rx antennas

    def __post_init__(self):
        if min(self.m, self.n, self.l) < 1:
            raise ValueError(f"antenna counts must be >= 1, got {self}")


@dataclass(frozen=True)
class LinkGains:
    """Linear link SNRs. ``P0`` is the direct link, ``P1`` Tx-relay, ``P2`` relay-Rx.

    Zero is accepted and means the link carries no signal.
    """

    P0: float
    P1: float
    P2: float

    def __post_init__(self):
        vals = (self.P0, self.P1, self.P2)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"link gains must be finite and nonnegative, got {self}")

    @classmethod
    def from_db(cls, P0_db: float, P1_db: float, P2_db: float) -> "LinkGains":
        return cls(float(db_to_linear(P0_db)), float(db_to_linear(P1_db)), float(db_to_linear(P2_db)))


@dataclass(frozen=True, eq=False)
class ChannelSet:
    H0: np.ndarray | None  # l x m, None without a direct link
    H1: np.ndarray  # n x m
    H2: np.ndarray  # l x n
    gains: LinkGains
    dims: SystemDims

    def __post_init__(self):
        d = self.dims
        if self.H1.shape != (d.n, d.m):
            raise ValueError(f"H1 must be {d.n}x{d.m}, got {self.H1.shape}")
        if self.H2.shape != (d.l, d.n):
            raise ValueError(f"H2 must be {d.l}x{d.n}, got {self.H2.shape}")
        if self.H0 is not None and self.H0.shape != (d.l, d.m):
            raise ValueError(f"H0 must be {d.l}x{d.m}, got {self.H0.shape}")

    @property
    def has_direct(self) -> bool:
        return self.H0 is not None

    def with_gains(self, gains: LinkGains) -> "ChannelSet":
        return ChannelSet(self.H0, self.H1, self.H2, gains, self.dims)


def draw_channel_matrices(gen: np.random.Generator, dims: SystemDims):
    """Draw (H0, H1, H2) from an open generator in a fixed order."""
    H0 = sample_complex_gaussian_matrix(gen, dims.l, dims.m)
    H1 = sample_complex_gaussian_matrix(gen, dims.n, dims.m)
    H2 = sample_complex_gaussian_matrix(gen, dims.l, dims.n)
    return H0, H1, H2


def sample_channel_set(rng, dims: SystemDims, gains: LinkGains, include_direct: bool = True) -> ChannelSet:
    """One channel realization. H0 is always drawn so that turning the direct link
    on or off does not shift the draws of H1 and H2."""
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    H0, H1, H2 = draw_channel_matrices(gen, dims)
    return ChannelSet(H0 if include_direct else None, H1, H2, gains, dims)


@dataclass(frozen=True)
class CoherenceSchedule:
    intervals: int
    symbols_per_interval: int

    def __post_init__(self):
        if self.intervals < 1 or self.symbols_per_interval < 1:
            raise ValueError("intervals and symbols_per_interval must be >= 1")

    @property
    def total_symbols(self) -> int:
        return self.intervals * self.symbols_per_interval

    def stream(self, master: RngStream, interval: int) -> RngStream:
        if not 0 <= interval < self.intervals:
            raise IndexError(interval)
        return master.spawn(0, interval)

    def __iter__(self):
        return iter(range(self.intervals))


def coherence_schedule(intervals: int, symbols_per_interval: int) -> CoherenceSchedule:
    return CoherenceSchedule(intervals, symbols_per_interval)
