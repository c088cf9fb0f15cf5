"""Domains, coarse grids, microstates and macrostates.

The domain is the axis-aligned square ``[0, side]^2``.  A coarse grid splits
it into ``nx * ny`` equal boxes indexed row-major (``index = iy * nx + ix``),
so box 0 sits at the origin corner.  The usual case is ``nx == ny``; a
rectangular split is kept for box counts that are not perfect squares
(``M = 2`` or ``M = 128``), in which case ``h`` is the side of the square of
equal area, ``h**2 = A / M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import DomainViolationError, ValidationError


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Domain:
    side: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.side) and self.side > 0):
            raise ValidationError(f"domain side must be positive, got {self.side!r}")

    @property
    def area(self) -> float:
        return self.side * self.side

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.all((p >= 0.0) & (p <= self.side), axis=1)


@dataclass(frozen=True, eq=False)
class CoarseGrid:
    """Partition of a domain into ``M = nx * ny`` equal boxes."""

    domain: Domain
    nx: int
    ny: int | None = None

    def __post_init__(self):
        if self.ny is None:
            object.__setattr__(self, "ny", self.nx)
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValidationError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @classmethod
    def square(cls, domain: Domain, boxes_per_side: int) -> "CoarseGrid":
        return cls(domain, boxes_per_side, boxes_per_side)

    @classmethod
    def with_box_count(cls, domain: Domain, M: int) -> "CoarseGrid":
        """Closest-to-square ``nx * ny == M`` split (``nx >= ny``)."""
        if M < 1:
            raise ValidationError(f"box count must be positive, got {M}")
        ny = max(d for d in range(1, math.isqrt(M) + 1) if M % d == 0)
        return cls(domain, M // ny, ny)

    def __eq__(self, other):
        return (
            isinstance(other, CoarseGrid)
            and self.domain == other.domain
            and (self.nx, self.ny) == (other.nx, other.ny)
        )

    def __hash__(self):
        return hash((self.domain, self.nx, self.ny))

    @property
    def M(self) -> int:
        return self.nx * self.ny

    @property
    def boxes_per_side(self) -> int:
        if self.nx != self.ny:
            raise AttributeError("rectangular grid has no single boxes_per_side")
        return self.nx

    @property
    def hx(self) -> float:
        return self.domain.side / self.nx

    @property
    def hy(self) -> float:
        return self.domain.side / self.ny

    @property
    def box_area(self) -> float:
        return self.hx * self.hy

    @property
    def h(self) -> float:
        return math.sqrt(self.box_area)

    @cached_property
    def centers(self) -> np.ndarray:
        cx = (np.arange(self.nx) + 0.5) * self.hx
        cy = (np.arange(self.ny) + 0.5) * self.hy
        X, Y = np.meshgrid(cx, cy)  # row-major: iy outer, ix inner
        return _frozen(np.column_stack([X.ravel(), Y.ravel()]))

    @cached_property
    def log_distance_matrix(self) -> np.ndarray:
        """``log|x_i^0 - x_j^0|`` between box centers, zero on the diagonal."""
        c = self.centers
        d = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
        np.fill_diagonal(d, 1.0)
        return _frozen(np.log(d))

    def box_index(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(self.domain.contains(p)):
            bad = np.flatnonzero(~self.domain.contains(p))
            raise DomainViolationError(
                f"{bad.size} position(s) outside [0, {self.domain.side}]^2, "
                f"first at index {bad[0]}: {p[bad[0]].tolist()}"
            )
        # edge points go to the lower-indexed neighbour
        ix = np.clip(np.ceil(p[:, 0] / self.hx).astype(np.int64) - 1, 0, self.nx - 1)
        iy = np.clip(np.ceil(p[:, 1] / self.hy).astype(np.int64) - 1, 0, self.ny - 1)
        return iy * self.nx + ix


@dataclass(frozen=True, eq=False)
class VortexConfiguration:
    positions: np.ndarray
    lam: float = 1.0
    domain: Domain = field(default_factory=Domain)

    def __post_init__(self):
        p = np.array(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise ValidationError(f"positions must have shape (N, 2) with N >= 1, got {p.shape}")
        if not (math.isfinite(self.lam) and self.lam != 0):
            raise ValidationError(f"vortex strength must be finite and non-zero, got {self.lam!r}")
        inside = self.domain.contains(p)
        if not np.all(inside):
            k = int(np.flatnonzero(~inside)[0])
            raise DomainViolationError(f"vortex {k} at {p[k].tolist()} lies outside the domain")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, VortexConfiguration)
            and self.lam == other.lam
            and self.domain == other.domain
            and np.array_equal(self.positions, other.positions)
        )

    def to_dict(self) -> dict:
        return {
            "side": self.domain.side,
            "lambda": self.lam,
            "positions": self.positions.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VortexConfiguration":
        return cls(np.asarray(d["positions"], dtype=float), float(d["lambda"]), Domain(float(d["side"])))


@dataclass(frozen=True)
class Macrostate:
    occupations: tuple

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if len(occ) == 0 or any(n < 0 for n in occ):
            raise ValidationError(f"occupations must be non-negative integers, got {self.occupations!r}")
        object.__setattr__(self, "occupations", occ)

    @property
    def N(self) -> int:
        return sum(self.occupations)

    @property
    def M(self) -> int:
        return len(self.occupations)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.occupations, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"N": self.N, "occupations": list(self.occupations)}

    @classmethod
    def from_dict(cls, d: dict) -> "Macrostate":
        s = cls(tuple(d["occupations"]))
        if "N" in d and int(d["N"]) != s.N:
            raise ValidationError(f"occupations sum to {s.N}, header says N={d['N']}")
        return s


def assign_boxes(config: VortexConfiguration, grid: CoarseGrid) -> Macrostate:
    """Coarse-grain a microstate into per-box vortex counts."""
    idx = grid.box_index(config.positions)
    return Macrostate(tuple(np.bincount(idx, minlength=grid.M).tolist()))


def box_relative_offsets(config: VortexConfiguration, grid: CoarseGrid) -> np.ndarray:
    """Vector from the assigned box center to each vortex, shape ``(N, 2)``."""
    idx = grid.box_index(config.positions)
    return config.positions - grid.centers[idx]


def random_configuration(N: int, rng, lam: float = 1.0, domain: Domain | None = None) -> VortexConfiguration:
    domain = domain or Domain()
    return VortexConfiguration(rng.random((N, 2)) * domain.side, lam, domain)
