"""Problem-instance generators.

The worst-case families use unit-weight coverage. Within each agent's row the
"blue" trap elements get the smallest ids, the forwarded "orange" duplicates
come next and the "green" elements last, so the fixed lexicographic tie rule
makes the greedy policies pick and forward exactly the adversarial elements.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidSpec
from .objectives import CoverageFunction, LogDetFunction
from .policies import ProblemInstance


@dataclass(frozen=True)
class WorstCaseSpec:
    variant: str
    n: int
    k: int
    m: int

    def validate(self) -> None:
        n, k, m = self.n, self.k, self.m
        if self.variant not in ("A", "B"):
            raise InvalidSpec(f"variant must be 'A' or 'B', got {self.variant!r}")
        if n < 2 or k < 1 or m < 0:
            raise InvalidSpec("need n >= 2, k >= 1, m >= 0")
        if self.variant == "A" and m * (n - 1) + 1 > k:
            raise InvalidSpec(f"variant A needs m(n-1)+1 <= k, got m(n-1)+1={m * (n - 1) + 1}, k={k}")
        if self.variant == "B" and (m * (n - 1) < k or m < 1):
            raise InvalidSpec(f"variant B needs m(n-1) >= k and m >= 1, got m(n-1)={m * (n - 1)}, k={k}")


def _row_blocks(n: int, k: int, m: int):
    """Ids for the blue / orange / green elements of agents ``0 .. n-2``."""
    r = n - 1
    blue = [[i * k + j for j in range(k)] for i in range(r)]
    orange = [[k * r + i * m + j for j in range(m)] for i in range(r)]
    green = [[k * r + m * r + i * k + j for j in range(k)] for i in range(r)]
    return blue, orange, green


def gen_worst_case_a(spec: WorstCaseSpec):
    """Instance where the last agent already holds everything the messages carry.

    Returns ``(instance, expected_ratio)``.
    """
    spec = WorstCaseSpec("A", spec.n, spec.k, spec.m) if spec.variant != "A" else spec
    spec.validate()
    n, k, m = spec.n, spec.k, spec.m
    r = n - 1
    a_cells = list(range(k * r))
    b_cells = list(range(k * r, 2 * k * r))
    c_cells = list(range(2 * k * r, 2 * k * r + m * r))
    blue, orange, green = _row_blocks(n, k, m)
    element_cells = [None] * (2 * k * r + m * r)
    for i in range(r):
        for j in range(k):
            element_cells[blue[i][j]] = [a_cells[i * k + j]]
            element_cells[green[i][j]] = [b_cells[i * k + j]]
        for j in range(m):
            element_cells[orange[i][j]] = [c_cells[i * m + j]]
    big = len(element_cells)
    element_cells.append(list(a_cells))
    tail = list(range(big + 1, big + 1 + len(c_cells)))
    element_cells.extend([c] for c in c_cells)
    agents = [blue[i] + orange[i] + green[i] for i in range(r)] + [[big] + tail]
    f = CoverageFunction.unit(element_cells)
    roles = {"blue": blue, "orange": orange, "green": green, "big": big, "tail": tail}
    inst = ProblemInstance(f, agents, k, m, meta={"family": "worst_case", "spec": asdict(spec), "roles": roles})
    expected = Fraction(k * r + m * r, 2 * k * r + m * r)
    return inst, expected


def gen_worst_case_b(spec: WorstCaseSpec):
    """Instance where the last agent holds exactly ``k`` elements.

    Returns ``(instance, expected_ratio)``.
    """
    spec = WorstCaseSpec("B", spec.n, spec.k, spec.m) if spec.variant != "B" else spec
    spec.validate()
    n, k, m = spec.n, spec.k, spec.m
    r = n - 1
    a_cells = list(range(k * r))
    b_cells = list(range(k * r, 2 * k * r))
    d_cells = list(range(2 * k * r, 2 * k * r + k))
    blue, orange, green = _row_blocks(n, k, m)
    element_cells = [None] * (2 * k * r + m * r)
    for i in range(r):
        for j in range(k):
            element_cells[blue[i][j]] = [a_cells[i * k + j]]
            element_cells[green[i][j]] = [b_cells[i * k + j]]
        for j in range(m):
            element_cells[orange[i][j]] = [d_cells[j % k]]
    big = len(element_cells)
    element_cells.append(a_cells + [d_cells[0]])
    tail = list(range(big + 1, big + k))
    element_cells.extend([c] for c in d_cells[1:])
    agents = [blue[i] + orange[i] + green[i] for i in range(r)] + [[big] + tail]
    f = CoverageFunction.unit(element_cells)
    roles = {"blue": blue, "orange": orange, "green": green, "big": big, "tail": tail}
    inst = ProblemInstance(f, agents, k, m, meta={"family": "worst_case", "spec": asdict(spec), "roles": roles})
    return inst, Fraction(n, 2 * r + 1)


def gen_worst_case(variant: str, n: int, k: int, m: int):
    variant = variant.upper()
    spec = WorstCaseSpec(variant, n, k, m)
    spec.validate()
    return gen_worst_case_a(spec) if variant == "A" else gen_worst_case_b(spec)


def gen_random_coverage(n: int, max_elems_per_agent: int, n_cells: int, weight_range=(1, 1),
                        k: int = 1, m: int = 0, seed: int = 0, overlap: float = 0.2) -> ProblemInstance:
    """Random weighted coverage instance.

    Every agent holds between 1 and ``max_elems_per_agent`` elements; each
    element covers a random nonempty set of cells. With probability
    ``overlap`` a slot reuses an element already held by an earlier agent.
    """
    lo, hi = weight_range
    if n < 1 or max_elems_per_agent < 1 or n_cells < 1 or lo < 1 or hi < lo or k < 1 or m < 0:
        raise InvalidSpec("invalid random coverage parameters")
    rng = np.random.default_rng(seed)
    weights = rng.integers(lo, hi + 1, size=n_cells)
    element_cells = []
    agents = []
    for _ in range(n):
        count = int(rng.integers(1, max_elems_per_agent + 1))
        mine = []
        for _ in range(count):
            reusable = [e for e in range(len(element_cells)) if e not in mine]
            if reusable and rng.random() < overlap:
                mine.append(int(reusable[rng.integers(len(reusable))]))
                continue
            p = rng.uniform(0.1, 0.4)
            cells = np.flatnonzero(rng.random(n_cells) < p)
            if cells.size == 0:
                cells = np.array([rng.integers(n_cells)])
            element_cells.append(cells.tolist())
            mine.append(len(element_cells) - 1)
        agents.append(mine)
    f = CoverageFunction([(c, int(w)) for c, w in enumerate(weights)], element_cells)
    meta = {"family": "random_coverage", "seed": seed, "n_cells": n_cells,
            "max_elems_per_agent": max_elems_per_agent, "weight_range": [lo, hi]}
    return ProblemInstance(f, agents, k, m, meta=meta)


@dataclass(frozen=True)
class CameraScenarioSpec:
    n_vehicles: int = 3
    images_per_vehicle: int = 10
    n_targets: int = 3
    focal_px: float = 50.0
    noise_px: float = 1.0
    fov_deg: float = 90.0
    k: int = 2
    m: int = 2
    world: tuple = (0.0, 100.0)
    prior: float = 1e-2
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_vehicles, self.images_per_vehicle, self.n_targets, self.k) < 1 or self.m < 0:
            raise InvalidSpec("counts must be positive")
        if min(self.focal_px, self.noise_px, self.fov_deg, self.prior) <= 0:
            raise InvalidSpec("focal length, noise, field of view and prior must be positive")
        if not self.world[1] > self.world[0]:
            raise InvalidSpec("world bounds must be increasing")


@dataclass
class CameraScenario:
    targets: np.ndarray
    control_points: np.ndarray  # (n_vehicles, 3, 2): start, control, stop
    positions: np.ndarray  # (n_vehicles, images, 2)
    headings: np.ndarray  # (n_vehicles, images), radians
    element_target: list = field(default_factory=list)  # target index or -1 per element

    def to_json(self) -> dict:
        return {
            "targets": self.targets.tolist(),
            "control_points": self.control_points.tolist(),
            "positions": self.positions.tolist(),
            "headings": self.headings.tolist(),
            "element_target": list(self.element_target),
        }


def bearing_information(camera, target, focal_px: float, noise_px: float) -> np.ndarray:
    """2x2 Fisher information of one pinhole bearing measurement of ``target``."""
    los = np.asarray(target, dtype=float) - np.asarray(camera, dtype=float)
    rng2 = float(los @ los)
    if rng2 <= 1e-12:
        return np.zeros((2, 2))
    v = np.array([-los[1], los[0]]) / np.sqrt(rng2)
    return (focal_px**2 / noise_px**2) / rng2 * np.outer(v, v)


def _bezier(ctrl: np.ndarray, t: np.ndarray):
    p0, p1, p2 = ctrl
    u = 1.0 - t
    pos = (u**2)[:, None] * p0 + (2 * u * t)[:, None] * p1 + (t**2)[:, None] * p2
    vel = (2 * u)[:, None] * (p1 - p0) + (2 * t)[:, None] * (p2 - p1)
    return pos, vel


def gen_camera_scenario(spec: CameraScenarioSpec = CameraScenarioSpec(), rng: np.random.Generator | None = None):
    """Random vehicle-camera scenario with a log-det objective.

    Each vehicle flies a quadratic Bezier path and takes equally spaced
    images with a left-looking camera. An image yields one measurement of
    the nearest target inside its field of view (zero information when none
    is visible), stacked into the joint 2 * n_targets parameter space.

    Returns ``(instance, scenario)``.
    """
    spec.validate()
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    lo, hi = spec.world
    targets = rng.uniform(lo, hi, size=(spec.n_targets, 2))
    ctrl = rng.uniform(lo, hi, size=(spec.n_vehicles, 3, 2))
    t = np.linspace(0.0, 1.0, spec.images_per_vehicle)
    half_fov = np.deg2rad(spec.fov_deg) / 2.0
    dim = 2 * spec.n_targets
    infos, element_target, agents = [], [], []
    positions = np.zeros((spec.n_vehicles, spec.images_per_vehicle, 2))
    headings = np.zeros((spec.n_vehicles, spec.images_per_vehicle))
    for v in range(spec.n_vehicles):
        pos, vel = _bezier(ctrl[v], t)
        chord = ctrl[v, 2] - ctrl[v, 0]
        mine = []
        for j in range(spec.images_per_vehicle):
            d = vel[j] if np.hypot(*vel[j]) > 1e-12 else chord
            heading = float(np.arctan2(d[1], d[0])) if np.hypot(*d) > 1e-12 else 0.0
            positions[v, j] = pos[j]
            headings[v, j] = heading
            axis = heading + np.pi / 2.0
            best, best_r = -1, np.inf
            for tgt in range(spec.n_targets):
                los = targets[tgt] - pos[j]
                r = float(np.hypot(*los))
                if r <= 1e-9:
                    continue
                off = np.angle(np.exp(1j * (np.arctan2(los[1], los[0]) - axis)))
                if abs(off) <= half_fov and r < best_r:
                    best, best_r = tgt, r
            q = np.zeros((dim, dim))
            if best >= 0:
                q[2 * best:2 * best + 2, 2 * best:2 * best + 2] = bearing_information(
                    pos[j], targets[best], spec.focal_px, spec.noise_px)
            mine.append(len(infos))
            infos.append(q)
            element_target.append(best)
        agents.append(mine)
    f = LogDetFunction(spec.prior * np.eye(dim), infos)
    scenario = CameraScenario(targets, ctrl, positions, headings, element_target)
    inst = ProblemInstance(f, agents, spec.k, spec.m, meta={"family": "camera"})
    return inst, scenario


def example_instance() -> ProblemInstance:
    """Small three-agent box-covering instance (n=3, k=2, m=1).

    Hand-built in the style of the introductory illustration; element ``j``
    here is box ``s_{j+1}`` there. Only the two quoted values
    ``f({s6, s8}) = 2`` and ``f({s5, s6, s8}) = 3`` are matched, not the
    full box layout.
    """
    boxes = [(0, 1), (1, 2), (2, 3), (3, 5), (5, 6), (6, 7), (0, 3), (7, 8), (8, 9)]
    f = CoverageFunction.from_intervals(boxes)
    return ProblemInstance(f, [[0, 1, 2, 3], [4, 5], [6, 7, 8]], k=2, m=1, meta={"family": "example"})
