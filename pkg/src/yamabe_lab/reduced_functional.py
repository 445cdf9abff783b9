"""Leading-order reduced energy over a sampled curvature field, grid critical
points, and the topological lower bounds on the number of solutions."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatch

__all__ = [
    "ScalarField2D",
    "Topology",
    "SurfaceTopology",
    "CritType",
    "CriticalPoint",
    "CriticalPointList",
    "predict_F",
    "critical_points",
    "multiplicity_bounds",
    "random_trig_field",
]


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    """Samples on a periodic ``nx`` by ``ny`` grid of periods ``L1``, ``L2``.

    ``values[iy, ix]`` is the sample at ``(ix L1/nx, iy L2/ny)``, so the x
    index runs fastest in memory.
    """

    nx: int
    ny: int
    L1: float
    L2: float
    values: np.ndarray

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ConfigError("grid must be at least 8 x 8")
        if self.L1 <= 0 or self.L2 <= 0:
            raise ConfigError("periods must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.ny, self.nx):
            raise ShapeMismatch(f"values shape {vals.shape} != ({self.ny}, {self.nx})")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, fn, nx, ny, L1=1.0, L2=1.0):
        x, y = cls.coords(nx, ny, L1, L2)
        return cls(nx, ny, L1, L2, np.broadcast_to(fn(x, y), (ny, nx)).copy())

    @staticmethod
    def coords(nx, ny, L1=1.0, L2=1.0):
        x = np.arange(nx) * (L1 / nx)
        y = np.arange(ny) * (L2 / ny)
        return np.meshgrid(x, y, indexing="xy")

    def with_values(self, values):
        return ScalarField2D(self.nx, self.ny, self.L1, self.L2, values)

    def argmax(self):
        iy, ix = np.unravel_index(np.argmax(self.values), self.values.shape)
        return int(ix), int(iy)

    def argmin(self):
        iy, ix = np.unravel_index(np.argmin(self.values), self.values.shape)
        return int(ix), int(iy)


class Topology(str, enum.Enum):
    SPHERE = "SPHERE"
    TORUS = "TORUS"
    GENUS_G = "GENUS_G"


@dataclass(frozen=True)
class SurfaceTopology:
    kind: Topology
    genus: int = -1

    def __post_init__(self):
        kind = Topology(self.kind)
        object.__setattr__(self, "kind", kind)
        default = {Topology.SPHERE: 0, Topology.TORUS: 1}
        genus = self.genus
        if genus == -1 and kind in default:
            genus = default[kind]
            object.__setattr__(self, "genus", genus)
        if kind in default and genus != default[kind]:
            raise ConfigError(f"{kind.value} has genus {default[kind]}, got {genus}")
        if kind is Topology.GENUS_G and genus < 2:
            raise ConfigError("GENUS_G requires genus >= 2")

    @classmethod
    def of_genus(cls, g: int) -> "SurfaceTopology":
        if g < 0:
            raise ConfigError("genus must be >= 0")
        if g == 0:
            return cls(Topology.SPHERE)
        if g == 1:
            return cls(Topology.TORUS)
        return cls(Topology.GENUS_G, g)


class CritType(str, enum.Enum):
    MIN = "MIN"
    MAX = "MAX"
    SADDLE = "SADDLE"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class CriticalPoint:
    ix: int
    iy: int
    value: float
    type: CritType


@dataclass(frozen=True)
class CriticalPointList:
    entries: tuple

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def of_type(self, t: CritType | str):
        t = CritType(t)
        return [e for e in self.entries if e.type is t]

    def counts(self) -> dict:
        return {t.value: len(self.of_type(t)) for t in CritType}

    @property
    def nondegenerate(self):
        return [e for e in self.entries if e.type is not CritType.DEGENERATE]


def predict_F(s_field: ScalarField2D, eps: float, alpha: float, beta_mn: float) -> ScalarField2D:
    """``α + (β_{m,n}/2) ε² s_g`` pointwise, without higher-order terms."""
    if not eps > 0:
        raise ConfigError("eps must be positive")
    return s_field.with_values(alpha + 0.5 * beta_mn * eps**2 * s_field.values)


# ring order: E, NE, N, NW, W, SW, S, SE as (dx, dy)
_RING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _ring_changes(sgn):
    """Cyclic sign changes around the ring, skipping zero entries."""
    k = sgn.shape[0]
    out = np.zeros(sgn.shape[1:], dtype=int)
    # carry the last nonzero sign so zeros do not break a run
    last = np.zeros(sgn.shape[1:])
    for j in range(2 * k):
        cur = sgn[j % k]
        flip = (cur != 0) & (last != 0) & (cur != last)
        if j >= k:
            out += flip
        last = np.where(cur != 0, cur, last)
    return out


def _merge_clusters(mask, score):
    """Keep the lowest-score point of every 8-connected periodic cluster."""
    keep = np.zeros_like(mask)
    seen = np.zeros_like(mask)
    ny, nx = mask.shape
    for iy, ix in zip(*np.nonzero(mask)):
        if seen[iy, ix]:
            continue
        stack, members = [(iy, ix)], []
        seen[iy, ix] = True
        while stack:
            cy, cx = stack.pop()
            members.append((cy, cx))
            for dx, dy in _RING:
                qy, qx = (cy + dy) % ny, (cx + dx) % nx
                if mask[qy, qx] and not seen[qy, qx]:
                    seen[qy, qx] = True
                    stack.append((qy, qx))
        best = min(members, key=lambda m: (score[m], m))
        keep[best] = True
    return keep


def critical_points(field: ScalarField2D, merge_saddles: bool = True) -> CriticalPointList:
    """Classify grid points by comparison with their 8 periodic neighbours.

    A point strictly above (below) every neighbour is a MAX (MIN).  A point
    whose nonzero neighbour differences change sign at least four times
    around the ring is a SADDLE; zero differences along level lines through
    a saddle are allowed.  Any other point with an exact tie is DEGENERATE,
    unless its nonzero differences show a plain slope (both signs, two
    changes), which is a regular point.

    Near a nondegenerate saddle several adjacent points pass the ring test.
    With ``merge_saddles`` each 8-connected cluster of such points is
    represented by its member with the smallest central-difference gradient.
    """
    v = field.values
    if not np.all(np.isfinite(v)):
        raise ConfigError("field has non-finite samples")
    diffs = np.stack([np.roll(v, (-dy, -dx), axis=(0, 1)) - v for dx, dy in _RING])
    sgn = np.sign(diffs)
    tie = np.any(sgn == 0, axis=0)
    changes = _ring_changes(sgn)
    is_max = np.all(sgn < 0, axis=0)
    is_min = np.all(sgn > 0, axis=0)
    is_saddle = changes >= 4
    regular = (changes == 2) & np.any(sgn > 0, axis=0) & np.any(sgn < 0, axis=0)
    degenerate = tie & ~is_saddle & ~regular
    if merge_saddles and np.any(is_saddle):
        gx = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / 2.0
        gy = (np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)) / 2.0
        is_saddle = _merge_clusters(is_saddle, gx * gx + gy * gy)
    entries = []
    for iy, ix in zip(*np.nonzero(degenerate | is_max | is_min | is_saddle)):
        if degenerate[iy, ix]:
            t = CritType.DEGENERATE
        elif is_max[iy, ix]:
            t = CritType.MAX
        elif is_min[iy, ix]:
            t = CritType.MIN
        else:
            t = CritType.SADDLE
        entries.append(CriticalPoint(int(ix), int(iy), float(v[iy, ix]), t))
    entries.sort(key=lambda e: (e.iy, e.ix))
    return CriticalPointList(tuple(entries))


def multiplicity_bounds(topo: SurfaceTopology) -> tuple[int, int]:
    """Lusternik-Schnirelmann category and total Betti number of a closed surface.

    The Betti sum includes ``b_0``, which gives ``2 + 2g`` for genus ``g``.
    """
    if topo.kind is Topology.SPHERE:
        return 2, 2
    return 3, 2 + 2 * topo.genus


def random_trig_field(rng: np.random.Generator, nx=32, ny=32, modes=3, L1=1.0, L2=1.0) -> ScalarField2D:
    """Random band-limited trigonometric field, used for Morse-count checks."""
    x, y = ScalarField2D.coords(nx, ny, L1, L2)
    val = np.zeros((ny, nx))
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            if ky == 0 and kx <= 0:
                continue
            a, b = rng.standard_normal(2)
            ph = 2 * np.pi * (kx * x / L1 + ky * y / L2)
            val += a * np.cos(ph) + b * np.sin(ph)
    return ScalarField2D(nx, ny, L1, L2, val)
