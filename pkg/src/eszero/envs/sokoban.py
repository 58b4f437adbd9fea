"""Sokoban on Boxoban-format levels with dihedral data augmentation.

Levels come from text files in the Boxoban layout: a ``; <id>`` line
followed by 10 rows of 10 characters ('#' wall, ' ' floor, '@' agent,
'$' box, '.' goal).  Episodes run for a fixed number of steps; the reward
arrives on the terminal step and equals the number of goals covered by
boxes.  Each reset samples a level uniformly and applies one of the eight
symmetries of the square, also uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..episode import ActionMode, ConfigurationError, Observation, StepResult
from ..rng import make_rng
from .navigation import DIRECTIONS

_CHARS = {"#", " ", "@", "$", "."}


@dataclass(frozen=True, eq=False)
class Level:
    name: str
    walls: np.ndarray  # (size, size) bool
    goals: np.ndarray
    boxes: np.ndarray
    agent: tuple[int, int]

    @property
    def size(self) -> int:
        return self.walls.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Level):
            return NotImplemented
        return (self.name == other.name and self.agent == other.agent
                and np.array_equal(self.walls, other.walls)
                and np.array_equal(self.goals, other.goals)
                and np.array_equal(self.boxes, other.boxes))


@dataclass(frozen=True)
class SokobanState:
    walls: np.ndarray
    goals: np.ndarray
    boxes: np.ndarray
    agent: tuple[int, int]
    steps_remaining: int

    def covered(self) -> int:
        return int((self.boxes & self.goals).sum())


class BoxobanParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_boxoban(text: str, size: int = 10) -> tuple[Level, ...]:
    """Parse Boxoban-format text into levels.

    Tolerates LF or CRLF endings and blank lines between levels.  Raises
    BoxobanParseError (with a line number) on malformed rows.
    """
    levels: list[Level] = []
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        line = lines[i].rstrip("\r")
        if line == "":
            i += 1
            continue
        if not line.startswith(";"):
            raise BoxobanParseError(i + 1, f"expected a '; <id>' header, got {line!r}")
        name = line[1:].strip()
        rows = []
        for r in range(size):
            j = i + 1 + r
            if j >= len(lines):
                raise BoxobanParseError(j + 1, f"level {name!r} truncated at row {r}")
            row = lines[j].rstrip("\r")
            if len(row) != size:
                raise BoxobanParseError(j + 1, f"expected {size} characters, got {len(row)}")
            bad = set(row) - _CHARS
            if bad:
                raise BoxobanParseError(j + 1, f"unknown character {bad.pop()!r}")
            rows.append(row)
        grid = np.array([list(r) for r in rows])
        agents = np.argwhere(grid == "@")
        if len(agents) != 1:
            raise BoxobanParseError(i + 1, f"level {name!r} has {len(agents)} agents")
        boxes = grid == "$"
        goals = grid == "."
        if boxes.sum() != goals.sum():
            raise BoxobanParseError(
                i + 1, f"level {name!r} has {boxes.sum()} boxes but {goals.sum()} goals")
        levels.append(Level(name, grid == "#", goals, boxes,
                            (int(agents[0][0]), int(agents[0][1]))))
        i += size + 1
    return tuple(levels)


def render_boxoban(levels) -> str:
    """Inverse of parse_boxoban; canonical LF output, byte-identical round trip."""
    out = []
    for lv in levels:
        out.append(f"; {lv.name}")
        for r in range(lv.size):
            row = []
            for c in range(lv.size):
                if lv.walls[r, c]:
                    ch = "#"
                elif lv.boxes[r, c]:
                    if lv.goals[r, c]:
                        raise ValueError("box on goal is not representable")
                    ch = "$"
                elif (r, c) == lv.agent:
                    if lv.goals[r, c]:
                        raise ValueError("agent on goal is not representable")
                    ch = "@"
                elif lv.goals[r, c]:
                    ch = "."
                else:
                    ch = " "
                row.append(ch)
            out.append("".join(row))
    return "\n".join(out) + "\n"


def load_boxoban(path, size: int = 10) -> tuple[Level, ...]:
    with open(path, encoding="ascii") as fh:
        return parse_boxoban(fh.read(), size=size)


def bundled_levels() -> tuple[Level, ...]:
    """The small level set shipped with the package."""
    text = resources.files("eszero.data").joinpath("boxoban_levels.txt").read_text("ascii")
    return parse_boxoban(text)


# --- the eight symmetries of the square -----------------------------------
#
# Symmetry s in 0..7 decodes as (rotations, flip) = (s % 4, s >= 4):
# rotate the grid 90 degrees counterclockwise `rotations` times, then
# mirror left-right if `flip`.


def apply_symmetry(grid: np.ndarray, sym: int) -> np.ndarray:
    g = np.rot90(grid, k=sym % 4)
    if sym >= 4:
        g = np.fliplr(g)
    return np.ascontiguousarray(g)


def transform_position(pos: tuple[int, int], sym: int, size: int) -> tuple[int, int]:
    r, c = pos
    for _ in range(sym % 4):
        r, c = size - 1 - c, r
    if sym >= 4:
        c = size - 1 - c
    return (r, c)


def transform_direction(d: tuple[int, int], sym: int) -> tuple[int, int]:
    dr, dc = d
    for _ in range(sym % 4):
        dr, dc = -dc, dr
    if sym >= 4:
        dc = -dc
    return (dr, dc)


def transform_action(action: int, sym: int) -> int:
    return DIRECTIONS.index(transform_direction(DIRECTIONS[action], sym))


def symmetrize_level(level: Level, sym: int) -> Level:
    return Level(
        level.name,
        apply_symmetry(level.walls, sym),
        apply_symmetry(level.goals, sym),
        apply_symmetry(level.boxes, sym),
        transform_position(level.agent, sym, level.size),
    )


def sample_level(levels, rng: np.random.Generator) -> Level:
    """Uniform level choice followed by a uniform symmetry of the square."""
    level = levels[int(rng.integers(len(levels)))]
    return symmetrize_level(level, int(rng.integers(8)))


@dataclass(frozen=True)
class Sokoban:
    levels: tuple[Level, ...] = ()
    horizon: int = 50
    incremental_reward: bool = False  # score-equivalent +-1 on goal pushes

    def __post_init__(self):
        if not self.levels:
            raise ConfigurationError("sokoban needs a non-empty level set")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be positive")

    @property
    def size(self) -> int:
        return self.levels[0].size

    def reset(self, seed: int) -> SokobanState:
        level = sample_level(self.levels, make_rng(seed, "sokoban-reset"))
        return self.from_level(level)

    def from_level(self, level: Level) -> SokobanState:
        return SokobanState(level.walls, level.goals, level.boxes, level.agent, self.horizon)

    def is_terminal(self, state: SokobanState) -> bool:
        return state.steps_remaining == 0

    def step(self, state: SokobanState, action: int) -> StepResult:
        if state.steps_remaining <= 0:
            raise ValueError("step on a terminated sokoban state")
        size = state.walls.shape[0]
        dr, dc = DIRECTIONS[action]
        r, c = state.agent[0] + dr, state.agent[1] + dc
        agent = state.agent
        boxes = state.boxes
        if 0 <= r < size and 0 <= c < size and not state.walls[r, c]:
            if boxes[r, c]:
                br, bc = r + dr, c + dc
                if (0 <= br < size and 0 <= bc < size
                        and not state.walls[br, bc] and not boxes[br, bc]):
                    boxes = boxes.copy()
                    boxes[r, c] = False
                    boxes[br, bc] = True
                    agent = (r, c)
                # blocked push: everything stays put
            else:
                agent = (r, c)
        remaining = state.steps_remaining - 1
        next_state = SokobanState(state.walls, state.goals, boxes, agent, remaining)
        terminal = remaining == 0
        if self.incremental_reward:
            reward = float(next_state.covered() - state.covered())
        else:
            reward = float(next_state.covered()) if terminal else 0.0
        return StepResult(reward, 0.0 if terminal else 1.0, next_state)

    def observe(self, state: SokobanState) -> Observation:
        size = state.walls.shape[0]
        span = max(size - 1, 1)
        rows, cols = np.divmod(np.arange(size * size), size)
        feats = np.empty((size * size, 7), dtype=np.float64)
        feats[:, 0] = rows / span
        feats[:, 1] = cols / span
        feats[:, 2] = state.walls.ravel()
        feats[:, 3] = state.goals.ravel()
        feats[:, 4] = state.boxes.ravel()
        feats[:, 5] = 0.0
        feats[state.agent[0] * size + state.agent[1], 5] = 1.0
        feats[:, 6] = state.steps_remaining / self.horizon
        return Observation(feats, ActionMode.FIXED, 4, np.ones(4, dtype=bool))
