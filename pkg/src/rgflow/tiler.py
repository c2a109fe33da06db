"""Finite Robinson tilings: reference pattern, CSP solver, squares, blocking.

The reference pattern reconstructs the aligned hierarchy on the quarter
plane (cells x, y >= 1): generation-n crosses sit where both coordinates
have 2-adic order n-1 and face their parent, arms carry the feed lines
between crosses, and square borders run between the four crosses facing a
common center.  Finite windows of it are valid tilings and serve as the
independent oracle for the solver, the square detector and the blocking
map.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Optional

from . import robinson as rb
from .robinson import AdjacencyRules, Parity, RenormalizationMap, TileSet

FORMAT_TILING = "rgflow-tiling-v1"


def _ord2(z: int) -> int:
    return (z & -z).bit_length() - 1


def _facing_sign(z: int) -> bool:
    """True for the positive facing (right/up): odd part is 1 mod 4."""
    return ((z >> _ord2(z)) % 4) == 1


def _varm_params(x: int, y: int) -> tuple:
    """Parameters of the vertical arm at a cell with ord2(x) > ord2(y)."""
    b = _ord2(y)
    xt, yt = x >> b, y >> b
    ahat = _ord2(xt)
    if ahat == 1:
        # next to a cross of the column's own scale (class A)
        lo, hi = yt - 1, yt + 1
        c, e = (lo, hi) if lo % 4 == 2 else (hi, lo)
        p = "U" if (c // 2) % 4 == 1 else "D"
        src = "T" if c == yt + 1 else "B"
        side = None
        if e >= 2 and _ord2(e) == 2:
            sdir = "D" if e == yt + 1 else "U"
            xc = xt + 2 if _ord2(xt + 2) == 2 else xt - 2
            side = (sdir, "R" if xc > xt else "L")
        return (p, "A", src, side)
    # between two crosses facing away or toward each other (class B)
    gap = 1 << ahat
    j = yt // gap
    o1 = j if j % 2 == 1 else j - 1
    mid = (o1 + 1) * gap
    below = yt < mid
    if o1 % 4 == 1:  # lower cross faces up: lines converge, border present
        p = "U" if below else "D"
        xc = xt + gap if _ord2(xt + gap) == ahat + 1 else xt - gap
        side = ("D" if below else "U", "R" if xc > xt else "L")
        return (p, "B", None, side)
    return ("D" if below else "U", "B", None, None)


_PARITY_AT = {
    (1, 1): Parity.RED_BLUE,
    (0, 1): Parity.RED_YELLOW,
    (1, 0): Parity.GREEN_BLUE,
    (0, 0): Parity.GREEN_YELLOW,
}


def pattern_tile(tiles: TileSet, x: int, y: int) -> int:
    """Tile id of the aligned reference pattern at quarter-plane cell (x, y)."""
    if x < 1 or y < 1:
        raise ValueError("pattern cells have coordinates >= 1")
    a, b = _ord2(x), _ord2(y)
    parity = _PARITY_AT[(x % 2, y % 2)]
    if a == b:
        h = "R" if _facing_sign(x) else "L"
        v = "U" if _facing_sign(y) else "D"
        marking = rb.CROSS_BY_FACING[(h, v)]
    elif a > b:
        marking = rb.VARM_BY_PARAMS[_varm_params(x, y)]
    else:
        marking = rb.HARM_BY_PARAMS[rb.transpose_params(_varm_params(y, x))]
    tile = tiles.get(marking.name, parity)
    assert tile is not None, (x, y, marking.name, parity)
    return tile.id


@dataclass
class Tiling:
    """A finite grid of tile ids with the provenance that produced it."""

    width: int
    height: int
    cells: list[list[int]]  # cells[y][x], row-major from the bottom
    provenance: dict = field(default_factory=dict)

    def at(self, x: int, y: int) -> int:
        return self.cells[y][x]


def aligned_pattern(tiles: TileSet, width: int, height: int,
                    origin: tuple[int, int] = (1, 1)) -> Tiling:
    """Window of the reference pattern with its lower-left cell at origin."""
    ox, oy = origin
    cells = [[pattern_tile(tiles, ox + x, oy + y) for x in range(width)]
             for y in range(height)]
    return Tiling(width, height, cells,
                  {"kind": "aligned_pattern", "origin": [ox, oy]})


@dataclass(frozen=True)
class Defect:
    x: int
    y: int
    orientation: str  # "horizontal": (x,y)-(x+1,y); "vertical": (x,y)-(x,y+1)


def verify_tiling(t: Tiling, rules: AdjacencyRules) -> list[Defect]:
    """Exhaustive list of adjacency violations; empty iff the tiling is valid."""
    defects = []
    for y in range(t.height):
        for x in range(t.width):
            if x + 1 < t.width and not rules.fits_h(t.at(x, y), t.at(x + 1, y)):
                defects.append(Defect(x, y, "horizontal"))
            if y + 1 < t.height and not rules.fits_v(t.at(x, y), t.at(x, y + 1)):
                defects.append(Defect(x, y, "vertical"))
    return defects


# ---------------------------------------------------------------------------
# Constraint solver (arc consistency + backtracking)


class Unsat:
    """Returned when the region admits no tiling under the given pins."""

    def __init__(self, conflict: list[tuple[int, int]]):
        self.conflict = conflict  # minimal-ish set of pinned cells involved

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return False


def _neighbors(x: int, y: int, w: int, h: int):
    if x > 0:
        yield (x - 1, y, "left")
    if x + 1 < w:
        yield (x + 1, y, "right")
    if y > 0:
        yield (x, y - 1, "down")
    if y + 1 < h:
        yield (x, y + 1, "up")


class _Csp:
    """AC-3 domain pruning plus fail-first backtracking over tile domains."""

    def __init__(self, rules: AdjacencyRules, width: int, height: int,
                 order: list[int]):
        self.rules = rules
        self.w = width
        self.h = height
        self.order = order
        # successor tables for fast support checks
        n = 56
        self.sup = {
            "right": [set() for _ in range(n)],
            "left": [set() for _ in range(n)],
            "up": [set() for _ in range(n)],
            "down": [set() for _ in range(n)],
        }
        for a, b in rules.horizontal:
            self.sup["right"][a].add(b)
            self.sup["left"][b].add(a)
        for a, b in rules.vertical:
            self.sup["up"][a].add(b)
            self.sup["down"][b].add(a)

    def _revise(self, dom, cell, other, direction) -> bool:
        """Drop values of `cell` without support in `other`; True if changed."""
        dother = dom[other]
        keep = {v for v in dom[cell] if self.sup[direction][v] & dother}
        if len(keep) != len(dom[cell]):
            dom[cell] = keep
            return True
        return False

    def ac3(self, dom, queue=None) -> Optional[tuple[int, int]]:
        """Propagate; returns a wiped-out cell on failure, None on success."""
        if queue is None:
            queue = [(x, y) for y in range(self.h) for x in range(self.w)]
        pending = list(queue)
        while pending:
            x, y = pending.pop()
            for nx, ny, direction in _neighbors(x, y, self.w, self.h):
                if self._revise(dom, (x, y), (nx, ny), direction):
                    if not dom[(x, y)]:
                        return (x, y)
                    pending.append((x, y))
                # revise the neighbour against us as well
                back = {"left": "right", "right": "left",
                        "up": "down", "down": "up"}[direction]
                if self._revise(dom, (nx, ny), (x, y), back):
                    if not dom[(nx, ny)]:
                        return (nx, ny)
                    pending.append((nx, ny))
        return None

    def solve(self, dom) -> Optional[dict]:
        if self.ac3(dom) is not None:
            return None
        return self._search(dom)

    def _search(self, dom) -> Optional[dict]:
        open_cells = [c for c, d in dom.items() if len(d) > 1]
        if not open_cells:
            return dom
        # fail-first: smallest domain, lexicographic tie-break
        cell = min(open_cells, key=lambda c: (len(dom[c]), c))
        values = sorted(dom[cell], key=lambda v: self.order[v])
        for v in values:
            trial = {c: set(d) for c, d in dom.items()}
            trial[cell] = {v}
            if self.ac3(trial, [cell]) is None:
                result = self._search(trial)
                if result is not None:
                    return result
        return None


def solve_region(rules: AdjacencyRules, width: int, height: int,
                 boundary: Optional[dict[tuple[int, int], int]] = None,
                 seed: int = 0):
    """Solve a width x height region; deterministic for a fixed seed.

    ``boundary`` pins cells to tile ids.  Returns a Tiling, or Unsat with
    the pinned cells involved when the pins are contradictory.
    """
    if width < 1 or height < 1:
        raise ValueError("region dimensions must be positive")
    rng = random.Random(seed)
    order = list(range(56))
    rng.shuffle(order)
    order = {v: i for i, v in enumerate(order)}
    csp = _Csp(rules, width, height, order)
    dom = {(x, y): set(range(56)) for y in range(height) for x in range(width)}
    pins = dict(boundary or {})
    for cell, v in pins.items():
        dom[cell] = {v}
    result = csp.solve(dom)
    if result is None:
        return Unsat(sorted(pins.keys()))
    cells = [[next(iter(result[(x, y)])) for x in range(width)]
             for y in range(height)]
    return Tiling(width, height, cells, {
        "kind": "solver", "seed": seed,
        "boundary": sorted([list(k), v] for k, v in pins.items()),
    })


# ---------------------------------------------------------------------------
# Square detection

_CORNER_FACING = {"TL": "cross_dr", "TR": "cross_dl",
                  "BL": "cross_ur", "BR": "cross_ul"}


@dataclass(frozen=True)
class Square:
    size: int
    top_left: tuple[int, int]


@dataclass
class SquareReport:
    squares: list[Square]

    def sizes(self) -> list[int]:
        return sorted(s.size for s in self.squares)

    def count(self, size: int) -> int:
        return sum(1 for s in self.squares if s.size == size)


def detect_squares(t: Tiling, tiles: TileSet,
                   all_generations: bool = False) -> SquareReport:
    """Complete square borders traced between inward-facing corner crosses.

    A square of side s = 2^m + 1 has its top edge between a down-right and a
    down-left cross and its bottom corners facing up-right/up-left.  The
    report keeps the sizes of the form 4^n + 1 (the red squares carrying the
    computation); ``all_generations`` keeps every 2^m + 1.
    """
    name = [[tiles[t.at(x, y)].marking.name for x in range(t.width)]
            for y in range(t.height)]
    found = []
    for y in range(t.height):
        for x in range(t.width):
            if name[y][x] != "cross_ur":
                continue  # bottom-left corner anchor
            s = 3
            while s <= min(t.width - x, t.height - y):
                d = s - 1
                if (d & (d - 1)) == 0:  # side 2^m + 1
                    if (name[y][x + d] == "cross_ul"
                            and name[y + d][x] == "cross_dr"
                            and name[y + d][x + d] == "cross_dl"
                            and _border_marked(tiles, t, x, y, s)):
                        if all_generations or _is_power_of_4(d):
                            found.append(Square(s, (x, y + d)))
                s += 2
    return SquareReport(found)


def _is_power_of_4(d: int) -> bool:
    return d > 1 and (d & (d - 1)) == 0 and (_ord2(d) % 2 == 0)


def _border_marked(tiles: TileSet, t: Tiling, x0: int, y0: int, s: int) -> bool:
    """Every non-corner border cell carries a border mark along the side."""
    d = s - 1
    for i in range(1, d):
        # bottom and top rows: a horizontal border line crosses the cell,
        # i.e. its left/right edges carry a mark in an off-center slot.
        for yy in (y0, y0 + d):
            m = tiles[t.at(x0 + i, yy)].marking
            if m.left[0] == m.left[2] == 0 or m.right[0] == m.right[2] == 0:
                return False
        for xx in (x0, x0 + d):
            m = tiles[t.at(xx, y0 + i)].marking
            if m.bottom[0] == m.bottom[2] == 0 or m.top[0] == m.top[2] == 0:
                return False
    return True


def segment_count_bracket(length: int, height: int, n: int) -> tuple[int, int]:
    """Bounds on the number of size 4^n+1 aligned top edges in an LxH window."""
    spacing = 2 ** (2 * n + 1)
    lo = (height // spacing) * (length // spacing - 1)
    hi = (height // spacing + 1) * (length // spacing)
    return max(lo, 0), hi


# ---------------------------------------------------------------------------
# Blocking


class NonAppearingBlock(ValueError):
    pass


def block_tiling(t: Tiling, tiles: TileSet, rmap_by_anchor: dict,
                 offset: tuple[int, int] = (0, 0)) -> Tiling:
    """Coarse-grain a tiling by mapping 2x2 blocks through the bijection.

    ``offset`` crops (dx, dy) cells from the lower-left corner before
    blocking; the anchor is read off the blocks' parity crosses.  Raises
    NonAppearingBlock if a block is not in the appearing set (mis-aligned
    offset or corrupted input).
    """
    dx, dy = offset
    w = (t.width - dx) // 2 * 2
    h = (t.height - dy) // 2 * 2
    if w < 2 or h < 2:
        raise ValueError("tiling too small to block at this offset")
    # read the anchor from the first block's parity layout
    first = {pos: tiles[t.at(dx + px, dy + py)].parity
             for pos, (px, py) in (("BL", (0, 0)), ("BR", (1, 0)),
                                   ("TL", (0, 1)), ("TR", (1, 1)))}
    anchor = next((pos for pos, par in first.items()
                   if par is Parity.RED_BLUE), None)
    if anchor is None:
        raise NonAppearingBlock("offset does not align with the parity lattice")
    rmap: RenormalizationMap = rmap_by_anchor[anchor]
    lookup = {s.cells(): img for s, img in rmap.mapping.items()}
    cells = []
    for by in range(h // 2):
        row = []
        for bx in range(w // 2):
            x, y = dx + 2 * bx, dy + 2 * by
            block = (t.at(x, y), t.at(x + 1, y), t.at(x, y + 1),
                     t.at(x + 1, y + 1))
            img = lookup.get(block)
            if img is None:
                raise NonAppearingBlock(
                    f"block at ({x},{y}) is outside the appearing set")
            row.append(img)
        cells.append(row)
    return Tiling(w // 2, h // 2, cells, {
        "kind": "blocked", "offset": [dx, dy], "anchor": anchor,
        "parent": t.provenance,
    })


# ---------------------------------------------------------------------------
# Rendering

_PARITY_FILL = {
    Parity.RED_BLUE: "#f6d5d5",
    Parity.GREEN_BLUE: "#d5e8f6",
    Parity.RED_YELLOW: "#f6ecd0",
    Parity.GREEN_YELLOW: "#d9f2d9",
}

_SLOT_POS = (0.25, 0.5, 0.75)


def _svg_marks(m, x0: float, y0: float, size: float) -> list[str]:
    """Draw each non-empty slot as a short line with a head where it exits."""
    out = []

    def seg(x1, y1, x2, y2, head):
        line = (f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" '
                f'y2="{y2:.2f}" stroke="#222" stroke-width="0.6"/>')
        out.append(line)
        if head:
            out.append(f'<circle cx="{x2:.2f}" cy="{y2:.2f}" r="0.9" '
                       f'fill="#222"/>')

    for i, frac in enumerate(_SLOT_POS):
        yy = y0 + size * (1 - frac)
        if m.left[i]:
            seg(x0 + size * 0.5, yy, x0, yy, m.left[i] == rb.HEAD)
        if m.right[i]:
            seg(x0 + size * 0.5, yy, x0 + size, yy, m.right[i] == rb.HEAD)
        xx = x0 + size * frac
        if m.bottom[i]:
            seg(xx, y0 + size * 0.5, xx, y0 + size, m.bottom[i] == rb.HEAD)
        if m.top[i]:
            seg(xx, y0 + size * 0.5, xx, y0, m.top[i] == rb.HEAD)
    return out


def render_svg(t: Tiling, tiles: TileSet, cell: int = 16) -> str:
    """Deterministic standalone SVG; identical input gives identical bytes."""
    w, h = t.width * cell, t.height * cell
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" '
             f'height="{h}" viewBox="0 0 {w} {h}">']
    for y in range(t.height):
        for x in range(t.width):
            tile = tiles[t.at(x, y)]
            x0 = x * cell
            y0 = (t.height - 1 - y) * cell  # draw row 0 at the bottom
            fill = _PARITY_FILL[tile.parity]
            parts.append(f'<rect x="{x0}" y="{y0}" width="{cell}" '
                         f'height="{cell}" fill="{fill}" stroke="#999" '
                         f'stroke-width="0.3"/>')
            parts.extend(_svg_marks(tile.marking, x0, y0, cell))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Serialization


def tiling_json(t: Tiling) -> dict:
    return {"format": FORMAT_TILING, "width": t.width, "height": t.height,
            "cells": t.cells, "provenance": t.provenance}


def tiling_from_json(payload: dict) -> Tiling:
    if payload.get("format") != FORMAT_TILING:
        raise ValueError("not a rgflow tiling file")
    return Tiling(payload["width"], payload["height"], payload["cells"],
                  payload.get("provenance", {}))


def write_tiling(path, t: Tiling) -> None:
    with open(path, "w") as fh:
        json.dump(tiling_json(t), fh)
        fh.write("\n")
