"""Grid world: buildings, launch zone, passability masks and goal-cell geometry."""

from __future__ import annotations

from collections import deque
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ScenarioError


@dataclass(frozen=True)
class Rect:
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ScenarioError(f"degenerate rectangle {self}")

    @classmethod
    def parse(cls, seq: Sequence[int]) -> Rect:
        if len(seq) != 4:
            raise ScenarioError(f"rectangle needs [x0, y0, x1, y1], got {seq!r}")
        return cls(*(int(v) for v in seq))

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1

    def cells(self, width: int) -> np.ndarray:
        xs, ys = np.meshgrid(np.arange(self.x0, self.x1 + 1), np.arange(self.y0, self.y1 + 1))
        return (ys * width + xs).ravel()

    def to_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class Building:
    id: str
    rect: Rect


@dataclass
class World:
    width: int
    height: int
    buildings: tuple[Building, ...]
    launch: Rect
    # derived
    building_of: np.ndarray = field(init=False, repr=False)
    ground: np.ndarray = field(init=False, repr=False)
    air_low: np.ndarray = field(init=False, repr=False)
    air_high: np.ndarray = field(init=False, repr=False)
    shared: np.ndarray = field(init=False, repr=False)
    launch_cells: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ScenarioError("world must be at least 2x2")
        if self.width * self.height >= 1 << 22:
            raise ScenarioError("world too large")
        n = self.width * self.height
        self.building_of = np.full(n, -1, dtype=np.int64)
        for i, b in enumerate(self.buildings):
            self._check_inside(b.rect, f"building {b.id}")
            cells = b.rect.cells(self.width)
            if np.any(self.building_of[cells] >= 0):
                raise ScenarioError(f"building {b.id} overlaps another building")
            self.building_of[cells] = i
        self._check_inside(self.launch, "launch zone")
        self.launch_cells = self.launch.cells(self.width)
        if np.any(self.building_of[self.launch_cells] >= 0):
            raise ScenarioError("launch zone overlaps a building")
        self.ground = self.building_of < 0
        self.air_low = self.ground.copy()
        self.air_high = np.ones(n, dtype=bool)
        self.shared = np.zeros(n, dtype=bool)
        self.shared[self.launch_cells] = True
        self._bindex = {b.id: i for i, b in enumerate(self.buildings)}

    def _check_inside(self, r: Rect, what: str):
        if r.x0 < 0 or r.y0 < 0 or r.x1 >= self.width or r.y1 >= self.height:
            raise ScenarioError(f"{what} lies outside the {self.width}x{self.height} map")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def cell(self, x: int, y: int) -> int:
        return int(y) * self.width + int(x)

    def xy(self, cell: int) -> tuple[int, int]:
        return int(cell) % self.width, int(cell) // self.width

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def building(self, bid: str) -> Building:
        try:
            return self.buildings[self._bindex[bid]]
        except KeyError:
            raise ScenarioError(f"unknown building {bid!r}") from None

    def building_cells(self, bid: str) -> np.ndarray:
        return self.building(bid).rect.cells(self.width)

    def indoor(self, cells: np.ndarray) -> np.ndarray:
        return self.building_of[cells] >= 0

    def ring(self, rect: Rect, dist: int, passable: np.ndarray) -> list[int]:
        """Passable cells on the square ring ``dist`` cells outside ``rect``, clockwise."""
        x0, y0, x1, y1 = rect.x0 - dist, rect.y0 - dist, rect.x1 + dist, rect.y1 + dist
        coords = [(x, y0) for x in range(x0, x1 + 1)]
        coords += [(x1, y) for y in range(y0 + 1, y1 + 1)]
        coords += [(x, y1) for x in range(x1 - 1, x0 - 1, -1)]
        coords += [(x0, y) for y in range(y1 - 1, y0, -1)]
        out = []
        for x, y in coords:
            if self.in_bounds(x, y):
                c = self.cell(x, y)
                if passable[c]:
                    out.append(c)
        return out

    def nearest_cells(self, origin: int, n: int, passable: np.ndarray, exclude=frozenset()) -> list[int]:
        """First ``n`` passable cells in BFS order from ``origin`` (origin included if passable)."""
        seen = {origin}
        q = deque([origin])
        out: list[int] = []
        while q and len(out) < n:
            c = q.popleft()
            if passable[c] and c not in exclude:
                out.append(c)
            x, y = self.xy(c)
            for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                if self.in_bounds(nx, ny):
                    nc = self.cell(nx, ny)
                    if nc not in seen:
                        seen.add(nc)
                        q.append(nc)
        return out


def spread(cells: Sequence[int], n: int) -> list[int]:
    """``n`` evenly spaced picks from ``cells`` (all of them when fewer)."""
    if n >= len(cells):
        return list(cells)
    idx = np.linspace(0, len(cells), n, endpoint=False).astype(int)
    return [cells[i] for i in idx]


def polygon_cells(world: World, vertices: Sequence[Sequence[float]]) -> list[int]:
    """Cells whose centres fall inside the polygon (even-odd rule)."""
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 2:
        raise ScenarioError("polygon needs at least three [x, y] vertices")
    xs = np.arange(world.width) + 0.0
    ys = np.arange(world.height) + 0.0
    gx, gy = np.meshgrid(xs, ys)
    px, py = gx.ravel(), gy.ravel()
    inside = np.zeros(px.shape, dtype=bool)
    j = len(pts) - 1
    for i in range(len(pts)):
        xi, yi = pts[i]
        xj, yj = pts[j]
        crosses = (yi > py) != (yj > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = (xj - xi) * (py - yi) / (yj - yi) + xi
        inside ^= crosses & (px < xint)
        j = i
    return np.flatnonzero(inside).tolist()
