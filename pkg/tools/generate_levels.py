"""Regenerate src/eszero/data/boxoban_levels.txt.

Produces 50 deterministic 10x10 levels in the Boxoban text format: border
walls, a few interior walls, 4 boxes, 4 goals, one agent.  Rejection
sampling keeps only levels whose floor is fully connected and whose boxes
each have at least one unblocked push axis.  Boxes and the agent never
start on goals, so render/parse round-trips are byte-identical.

Usage: PYTHONPATH=src python tools/generate_levels.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from eszero.envs.sokoban import Level, render_boxoban
from eszero.rng import make_rng

SIZE = 10
N_LEVELS = 50
N_BOXES = 4


def connected(walls: np.ndarray, start: tuple[int, int]) -> bool:
    seen = np.zeros_like(walls)
    stack = [start]
    seen[start] = True
    while stack:
        r, c = stack.pop()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < SIZE and 0 <= nc < SIZE and not walls[nr, nc] and not seen[nr, nc]:
                seen[nr, nc] = True
                stack.append((nr, nc))
    return bool((seen | walls).all())


def pushable(walls: np.ndarray, r: int, c: int) -> bool:
    open_ = lambda a, b: 0 <= a < SIZE and 0 <= b < SIZE and not walls[a, b]
    vertical = open_(r - 1, c) and open_(r + 1, c)
    horizontal = open_(r, c - 1) and open_(r, c + 1)
    return vertical or horizontal


def try_level(rng: np.random.Generator) -> Level | None:
    walls = np.zeros((SIZE, SIZE), dtype=bool)
    walls[0, :] = walls[-1, :] = walls[:, 0] = walls[:, -1] = True
    interior = [(r, c) for r in range(1, SIZE - 1) for c in range(1, SIZE - 1)]
    n_extra = int(rng.integers(6, 11))
    picks = rng.choice(len(interior), size=n_extra + 2 * N_BOXES + 1, replace=False)
    for i in picks[:n_extra]:
        walls[interior[i]] = True
    rest = [interior[i] for i in picks[n_extra:]]
    boxes_at = rest[:N_BOXES]
    goals_at = rest[N_BOXES:2 * N_BOXES]
    agent = rest[2 * N_BOXES]
    if not connected(walls, agent):
        return None
    if not all(pushable(walls, r, c) for r, c in boxes_at):
        return None
    boxes = np.zeros_like(walls)
    goals = np.zeros_like(walls)
    for r, c in boxes_at:
        boxes[r, c] = True
    for r, c in goals_at:
        goals[r, c] = True
    return Level("pending", walls, goals, boxes, agent)


def main() -> int:
    rng = make_rng(20250515, "boxoban-levels")
    levels = []
    while len(levels) < N_LEVELS:
        lv = try_level(rng)
        if lv is not None:
            levels.append(Level(str(len(levels)), lv.walls, lv.goals, lv.boxes, lv.agent))
    out = Path(__file__).resolve().parent.parent / "src" / "eszero" / "data" / "boxoban_levels.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_boxoban(levels), encoding="ascii")
    print(f"wrote {len(levels)} levels to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
