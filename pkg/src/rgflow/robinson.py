"""Robinson tile combinatorics: markings, parity, adjacency, supertiles.

The 56 Robinson tiles are 28 arrow markings augmented with 4 parity colors.
Each tile edge carries three mark slots (two off-center "side" slots and one
center slot); a mark is an arrow head poking out of the tile, an arrow tail
receiving a head, or empty.  Two tiles may share an edge iff heads meet tails
slot by slot and the parity colors on the shared edge agree.

The marking tables below are reconstructed from the hierarchical structure of
the tiling (crosses emit center lines absorbed by their parent's feed lines;
square borders run through off-center slots placed toward the square
interior).  The reconstruction is validated by the census invariants: 28
markings, 56 tiles, 68 supertiles per anchor of which 12 never appear, and
the adjacency-rule isomorphism under the renormalization map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

FORMAT_TILES = "rgflow-tiles-v1"

# Slot marks.
EMPTY, HEAD, TAIL = 0, 1, -1

# Slot indices.  Vertical edges (left/right) index (bottom, center, top);
# horizontal edges (top/bottom) index (left, center, right).
SLOT_B = SLOT_L = 0
SLOT_C = 1
SLOT_T = SLOT_R = 2


def marks_fit(a: int, b: int) -> bool:
    """Facing slots fit iff head meets tail or both are empty."""
    return a + b == 0


class Parity(Enum):
    """The four parity colors, named by the tile class they accompany."""

    RED_BLUE = "red_blue"          # parity crosses, (odd, odd) cells
    GREEN_BLUE = "green_blue"      # parity horizontal arms, (odd, even) cells
    RED_YELLOW = "red_yellow"      # parity vertical arms, (even, odd) cells
    GREEN_YELLOW = "green_yellow"  # free tiles, (even, even) cells


# Edge colors (left, right, bottom, top).  The parity layer must lock tiles
# to a fixed sublattice in both directions, so every edge color carries both
# the column and the row parity (Robinson's original bumpy corners do the
# same).  Writing c, r for the cell's column/row parity: vertical edges show
# red/green for the owning column's parity plus the row bit, horizontal
# edges blue/yellow plus the column bit.  The exact color placement in the
# figure is not machine-readable; any scheme with this forcing power is
# equivalent.
_PARITY_EDGES = {
    Parity.RED_BLUE: ("green1", "red1", "yellow1", "blue1"),       # (c,r)=(1,1)
    Parity.RED_YELLOW: ("red1", "green1", "yellow0", "blue0"),     # (0,1)
    Parity.GREEN_BLUE: ("green0", "red0", "blue1", "yellow1"),     # (1,0)
    Parity.GREEN_YELLOW: ("red0", "green0", "blue0", "yellow0"),   # (0,0)
}


def parity_edge_colors(parity: Parity) -> tuple[str, str, str, str]:
    return _PARITY_EDGES[parity]


@dataclass(frozen=True)
class ArrowMarking:
    """One of the 28 arrow markings.

    ``kind`` is "cross", "varm" or "harm".  Edges are 3-slot tuples of
    EMPTY/HEAD/TAIL; ``left``/``right`` are indexed bottom-center-top and
    ``bottom``/``top`` left-center-right.
    """

    name: str
    kind: str
    left: tuple[int, int, int]
    right: tuple[int, int, int]
    bottom: tuple[int, int, int]
    top: tuple[int, int, int]

    def edge(self, side: str) -> tuple[int, int, int]:
        return getattr(self, side)


def _blank() -> list[int]:
    return [EMPTY, EMPTY, EMPTY]


def _cross_marking(h: str, v: str) -> ArrowMarking:
    """Cross facing (h, v) with h in {R, L}, v in {U, D}.

    Center lines pass through the tile with heads on the two facing edges;
    the square-corner tails sit on the facing edges at the slots toward the
    square interior.
    """
    left, right, bottom, top = _blank(), _blank(), _blank(), _blank()
    if h == "R":
        left[SLOT_C], right[SLOT_C] = TAIL, HEAD
    else:
        right[SLOT_C], left[SLOT_C] = TAIL, HEAD
    if v == "U":
        bottom[SLOT_C], top[SLOT_C] = TAIL, HEAD
    else:
        top[SLOT_C], bottom[SLOT_C] = TAIL, HEAD
    hedge = right if h == "R" else left
    hedge[SLOT_T if v == "U" else SLOT_B] = TAIL
    vedge = top if v == "U" else bottom
    vedge[SLOT_R if h == "R" else SLOT_L] = TAIL
    name = f"cross_{'u' if v == 'U' else 'd'}{'r' if h == 'R' else 'l'}"
    return ArrowMarking(name, "cross", tuple(left), tuple(right),
                        tuple(bottom), tuple(top))


def _varm_marking(p: str, klass: str, src_slot: Optional[str],
                  side: Optional[tuple[str, str]]) -> ArrowMarking:
    """Vertical arm.

    ``p``: direction of the center pass line (U or D).  Class A arms sit next
    to a cross of the column's own scale: they absorb the flanking center
    lines (tails at both horizontal centers) and source the square border
    running at ``src_slot`` (T or B).  Class B arms sit between two crosses
    facing away and poke heads into both.  ``side`` is an optional vertical
    border line relayed through the tile: (direction U/D, slot L/R).
    """
    left, right, bottom, top = _blank(), _blank(), _blank(), _blank()
    if p == "U":
        bottom[SLOT_C], top[SLOT_C] = TAIL, HEAD
    else:
        top[SLOT_C], bottom[SLOT_C] = TAIL, HEAD
    if klass == "A":
        left[SLOT_C] = right[SLOT_C] = TAIL
        s = SLOT_T if src_slot == "T" else SLOT_B
        left[s] = right[s] = HEAD
    else:
        left[SLOT_C] = right[SLOT_C] = HEAD
    name = f"varm_{p.lower()}{klass.lower()}"
    if src_slot is not None:
        name += f"_s{src_slot.lower()}"
    if side is not None:
        d, slot = side
        sl = SLOT_L if slot == "L" else SLOT_R
        if d == "U":
            bottom[sl], top[sl] = TAIL, HEAD
        else:
            top[sl], bottom[sl] = TAIL, HEAD
        name += f"_r{d.lower()}{slot.lower()}"
    return ArrowMarking(name, "varm", tuple(left), tuple(right),
                        tuple(bottom), tuple(top))


def _transpose_marking(m: ArrowMarking, name: str) -> ArrowMarking:
    """Reflect a marking across the main diagonal (x and y swap)."""
    return ArrowMarking(name, "harm" if m.kind == "varm" else m.kind,
                        left=m.bottom, right=m.top, bottom=m.left, top=m.right)


_VARM_PARAMS = [
    # (pass, class, src slot, side relay)
    ("U", "A", "T", None),
    ("U", "A", "B", ("D", "R")),
    ("U", "A", "B", ("D", "L")),
    ("D", "A", "T", ("U", "R")),
    ("D", "A", "T", ("U", "L")),
    ("D", "A", "B", None),
    ("U", "B", None, None),
    ("U", "B", None, ("D", "L")),
    ("U", "B", None, ("D", "R")),
    ("D", "B", None, None),
    ("D", "B", None, ("U", "L")),
    ("D", "B", None, ("U", "R")),
]

_HARM_NAME_MAP = {"u": "r", "d": "l", "st": "sr", "sb": "sl",
                  "rul": "rrb", "rur": "rrt", "rdl": "rlb", "rdr": "rlt"}


def _build_markings() -> list[ArrowMarking]:
    markings: list[ArrowMarking] = []
    for v in ("U", "D"):
        for h in ("R", "L"):
            markings.append(_cross_marking(h, v))
    varms = [_varm_marking(*params) for params in _VARM_PARAMS]
    markings.extend(varms)
    for m in varms:
        parts = m.name.split("_")[1:]
        hparts = []
        for part in parts:
            key = part if part in _HARM_NAME_MAP else part[0]
            if part in _HARM_NAME_MAP:
                hparts.append(_HARM_NAME_MAP[part])
            else:
                # pass direction with class suffix, e.g. "ua" -> "ra"
                hparts.append(_HARM_NAME_MAP[part[0]] + part[1:])
        markings.append(_transpose_marking(m, "harm_" + "_".join(hparts)))
    return markings


MARKINGS: tuple[ArrowMarking, ...] = tuple(_build_markings())

MARKING_BY_NAME: dict[str, ArrowMarking] = {m.name: m for m in MARKINGS}

CROSS_BY_FACING: dict[tuple[str, str], ArrowMarking] = {
    (h, v): MARKING_BY_NAME[f"cross_{'u' if v == 'U' else 'd'}{'r' if h == 'R' else 'l'}"]
    for h in ("R", "L") for v in ("U", "D")
}


def _varm_name(p, klass, src, side):
    name = f"varm_{p.lower()}{klass.lower()}"
    if src is not None:
        name += f"_s{src.lower()}"
    if side is not None:
        name += f"_r{side[0].lower()}{side[1].lower()}"
    return name


VARM_BY_PARAMS: dict[tuple, ArrowMarking] = {
    params: MARKING_BY_NAME[_varm_name(*params)] for params in _VARM_PARAMS
}

# Transposing a vertical arm turns (pass, src slot, side relay) into the
# horizontal arm with U->R, D->L, slot T->R, B->L, side (U,L)->(R,B) etc.
_T_PASS = {"U": "R", "D": "L"}
_T_SRC = {"T": "R", "B": "L", None: None}
_T_SIDE = {"U": "R", "D": "L"}
_T_SLOT = {"L": "B", "R": "T"}


def transpose_params(params: tuple) -> tuple:
    p, klass, src, side = params
    tside = None if side is None else (_T_SIDE[side[0]], _T_SLOT[side[1]])
    return (_T_PASS[p], klass, _T_SRC[src], tside)


HARM_BY_PARAMS: dict[tuple, ArrowMarking] = {}
for _params in _VARM_PARAMS:
    _vm = VARM_BY_PARAMS[_params]
    _hname = "harm_" + "_".join(
        _HARM_NAME_MAP[part] if part in _HARM_NAME_MAP
        else _HARM_NAME_MAP[part[0]] + part[1:]
        for part in _vm.name.split("_")[1:])
    HARM_BY_PARAMS[transpose_params(_params)] = MARKING_BY_NAME[_hname]

_ADMISSIBLE_PARITIES = {
    "cross": (Parity.RED_BLUE, Parity.GREEN_YELLOW),
    "harm": (Parity.GREEN_BLUE, Parity.GREEN_YELLOW),
    "varm": (Parity.RED_YELLOW, Parity.GREEN_YELLOW),
}

# Spec order for tile ids: markings row-major x parity order restricted to
# the admissible pairings.
_PARITY_ORDER = (Parity.RED_BLUE, Parity.GREEN_BLUE, Parity.RED_YELLOW,
                 Parity.GREEN_YELLOW)


@dataclass(frozen=True)
class Tile:
    """A Robinson tile: arrow marking plus parity color, with a stable id."""

    id: int
    marking: ArrowMarking
    parity: Parity

    @property
    def name(self) -> str:
        return f"{self.marking.name}|{self.parity.value}"


class TileSet:
    """The full set of 56 tiles with stable, documented ids."""

    def __init__(self) -> None:
        tiles = []
        next_id = 0
        for marking in MARKINGS:
            for parity in _PARITY_ORDER:
                if parity in _ADMISSIBLE_PARITIES[marking.kind]:
                    tiles.append(Tile(next_id, marking, parity))
                    next_id += 1
        self.tiles: tuple[Tile, ...] = tuple(tiles)
        self._by_key = {(t.marking.name, t.parity): t for t in self.tiles}

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __getitem__(self, tile_id: int) -> Tile:
        return self.tiles[tile_id]

    def get(self, marking_name: str, parity: Parity) -> Optional[Tile]:
        return self._by_key.get((marking_name, parity))

    def markings(self) -> set[str]:
        return {t.marking.name for t in self.tiles}

    def parities(self) -> set[Parity]:
        return {t.parity for t in self.tiles}


def enumerate_base_tiles() -> TileSet:
    """Return all 56 tiles (28 markings, 4 parities, stable ids)."""
    return TileSet()


class IncompleteTileSet(ValueError):
    pass


def _arrows_fit_h(a: ArrowMarking, b: ArrowMarking) -> bool:
    return all(marks_fit(a.right[s], b.left[s]) for s in range(3))


def _arrows_fit_v(a: ArrowMarking, b: ArrowMarking) -> bool:
    return all(marks_fit(a.top[s], b.bottom[s]) for s in range(3))


@dataclass(frozen=True)
class AdjacencyRules:
    """Directed compatibility relations over tile ids.

    ``horizontal`` holds (left, right) pairs, ``vertical`` (bottom, top).
    """

    horizontal: frozenset[tuple[int, int]]
    vertical: frozenset[tuple[int, int]]

    def fits_h(self, a: int, b: int) -> bool:
        return (a, b) in self.horizontal

    def fits_v(self, a: int, b: int) -> bool:
        return (a, b) in self.vertical


def build_adjacency(tiles: TileSet) -> AdjacencyRules:
    """Brute-force both relations from edge signatures and parity colors."""
    if len(tiles) != 56:
        raise IncompleteTileSet(f"expected the full 56-tile set, got {len(tiles)}")
    horizontal = set()
    vertical = set()
    for a in tiles:
        ca = parity_edge_colors(a.parity)
        for b in tiles:
            cb = parity_edge_colors(b.parity)
            if ca[1] == cb[0] and _arrows_fit_h(a.marking, b.marking):
                horizontal.add((a.id, b.id))
            if ca[3] == cb[2] and _arrows_fit_v(a.marking, b.marking):
                vertical.add((a.id, b.id))
    return AdjacencyRules(frozenset(horizontal), frozenset(vertical))


# ---------------------------------------------------------------------------
# Supertiles


Corner = str  # "BL" | "BR" | "TL" | "TR"

# Which parity sits at each block position, per anchor.  Block positions are
# (column, row) in {0,1}^2 with BL=(0,0), BR=(1,0), TL=(0,1), TR=(1,1).
_ANCHOR_PARITY_LAYOUT: dict[Corner, dict[str, Parity]] = {
    "BL": {"BL": Parity.RED_BLUE, "BR": Parity.RED_YELLOW,
           "TL": Parity.GREEN_BLUE, "TR": Parity.GREEN_YELLOW},
    "BR": {"BL": Parity.RED_YELLOW, "BR": Parity.RED_BLUE,
           "TL": Parity.GREEN_YELLOW, "TR": Parity.GREEN_BLUE},
    "TL": {"BL": Parity.GREEN_BLUE, "BR": Parity.GREEN_YELLOW,
           "TL": Parity.RED_BLUE, "TR": Parity.RED_YELLOW},
    "TR": {"BL": Parity.GREEN_YELLOW, "BR": Parity.GREEN_BLUE,
           "TL": Parity.RED_YELLOW, "TR": Parity.RED_BLUE},
}

_DIAGONAL = {"BL": "TR", "BR": "TL", "TL": "BR", "TR": "BL"}


@dataclass(frozen=True)
class SuperTile:
    """A 2x2 block of tile ids with the parity cross at ``anchor``."""

    bl: int
    br: int
    tl: int
    tr: int
    anchor: Corner

    def cells(self) -> tuple[int, int, int, int]:
        return (self.bl, self.br, self.tl, self.tr)

    def at(self, corner: Corner) -> int:
        return getattr(self, corner.lower())


class SuperTileSet:
    def __init__(self, tiles: TileSet, rules: AdjacencyRules,
                 anchor: Corner, supertiles: list[SuperTile]):
        self.tiles = tiles
        self.rules = rules
        self.anchor = anchor
        self.supertiles = tuple(supertiles)

    def __len__(self) -> int:
        return len(self.supertiles)

    def __iter__(self):
        return iter(self.supertiles)


def enumerate_supertiles(tiles: TileSet, rules: AdjacencyRules,
                         anchor: Corner = "BL") -> SuperTileSet:
    """All internally consistent 2x2 blocks with the parity cross at anchor."""
    layout = _ANCHOR_PARITY_LAYOUT[anchor]
    pools = {
        pos: [t for t in tiles if t.parity is parity
              and t.marking.kind == ("cross" if parity is Parity.RED_BLUE
                                     else t.marking.kind)]
        for pos, parity in layout.items()
    }
    # the anchor position may only hold parity crosses
    pools[anchor] = [t for t in pools[anchor] if t.marking.kind == "cross"]
    found = []
    for bl in pools["BL"]:
        for br in pools["BR"]:
            if not rules.fits_h(bl.id, br.id):
                continue
            for tl in pools["TL"]:
                if not rules.fits_v(bl.id, tl.id):
                    continue
                for tr in pools["TR"]:
                    if rules.fits_h(tl.id, tr.id) and rules.fits_v(br.id, tr.id):
                        found.append(SuperTile(bl.id, br.id, tl.id, tr.id, anchor))
    found.sort(key=lambda s: s.cells())
    return SuperTileSet(tiles, rules, anchor, found)


class NotInImage(KeyError):
    pass


# Image parity of a supertile is set by the facing of its anchor cross.
# The facing <-> block-position correspondence flips with the grid offset:
# for right-column anchors (BR/TR) the anchor cross sits at x = 2I+1 rather
# than 2I-1, inverting the horizontal facing, and likewise vertically for
# top-row anchors (TL/TR).
_FACING_TO_PARITY = {
    ("R", "U"): Parity.RED_BLUE,
    ("L", "U"): Parity.RED_YELLOW,
    ("R", "D"): Parity.GREEN_BLUE,
    ("L", "D"): Parity.GREEN_YELLOW,
}

_FLIP_H = {"R": "L", "L": "R"}
_FLIP_V = {"U": "D", "D": "U"}


def _image_parity(cross_name: str, anchor: Corner) -> Parity:
    v = "U" if cross_name.startswith("cross_u") else "D"
    h = "R" if cross_name.endswith("r") else "L"
    if anchor in ("BR", "TR"):
        h = _FLIP_H[h]
    if anchor in ("TL", "TR"):
        v = _FLIP_V[v]
    return _FACING_TO_PARITY[(h, v)]


class RenormalizationMap:
    """Partial map supertile -> tile per the 2x2 -> 1x1 coarse-graining.

    The image tile's marking is the marking of the block's free-parity tile
    (diagonally opposite the anchor cross) and its parity follows from the
    anchor cross's facing.  Supertiles whose image pair is inadmissible are
    the non-appearing ones.
    """

    def __init__(self, tiles: TileSet, supertiles: SuperTileSet):
        self.tiles = tiles
        self.anchor = supertiles.anchor
        free_pos = _DIAGONAL[supertiles.anchor]
        mapping: dict[SuperTile, int] = {}
        missing: list[SuperTile] = []
        for s in supertiles:
            cross = tiles[s.at(supertiles.anchor)]
            free = tiles[s.at(free_pos)]
            parity = _image_parity(cross.marking.name, supertiles.anchor)
            image = tiles.get(free.marking.name, parity)
            if image is None:
                missing.append(s)
            else:
                mapping[s] = image.id
        self.mapping = mapping
        self.non_appearing = tuple(missing)

    @property
    def appearing(self) -> tuple[SuperTile, ...]:
        return tuple(self.mapping.keys())

    def image(self, s: SuperTile) -> int:
        if s in self.mapping:
            return self.mapping[s]
        raise NotInImage(f"supertile {s.cells()} does not appear in the tiling")

    def is_bijection(self) -> bool:
        images = set(self.mapping.values())
        return len(images) == len(self.mapping) == 56


def renormalize_supertile(s: SuperTile, rmap: RenormalizationMap) -> Tile:
    return rmap.tiles[rmap.image(s)]


def supertile_parity(tiles: TileSet, s: SuperTile) -> Parity:
    """Parity assigned to a whole supertile by its anchor cross's facing."""
    cross = tiles[s.at(s.anchor)]
    return _image_parity(cross.marking.name, s.anchor)


def induced_rules(rmap: RenormalizationMap, rules: AdjacencyRules) -> AdjacencyRules:
    """Adjacency rules of the appearing supertiles, on their own ids.

    Two supertiles fit iff the tiles on the shared edge respect the base
    rules and the supertile parities (set by the anchor cross orientation,
    which must alternate across rows and columns like the base parity
    layer) are compatible.  Vertices are labelled by the supertile's image
    tile id so the identity map exposes the isomorphism; the relation
    itself is computed edge by edge from the 2x2 blocks, not from images.
    """
    tiles = rmap.tiles
    appearing = [(s, sid, parity_edge_colors(supertile_parity(tiles, s)))
                 for s, sid in rmap.mapping.items()]
    horizontal = set()
    vertical = set()
    for s, sid, cs in appearing:
        for t, tid, ct in appearing:
            if (cs[1] == ct[0] and rules.fits_h(s.br, t.bl)
                    and rules.fits_h(s.tr, t.tl)):
                horizontal.add((sid, tid))
            if (cs[3] == ct[2] and rules.fits_v(s.tl, t.bl)
                    and rules.fits_v(s.tr, t.br)):
                vertical.add((sid, tid))
    return AdjacencyRules(frozenset(horizontal), frozenset(vertical))


class DomainMismatch(ValueError):
    pass


@dataclass(frozen=True)
class IsomorphismReport:
    holds: bool
    witness: Optional[tuple[str, str, tuple[int, int]]] = None
    # witness = (relation, side-present, edge): `side-present` names the
    # relation ("a1" or "a2") containing the edge absent from the other.


def _vertices(rules: AdjacencyRules) -> set[int]:
    verts = set()
    for rel in (rules.horizontal, rules.vertical):
        for a, b in rel:
            verts.add(a)
            verts.add(b)
    return verts


def verify_isomorphism(a1: AdjacencyRules, a2: AdjacencyRules,
                       phi: dict[int, int]) -> IsomorphismReport:
    """Check that phi (vertices of a2 -> vertices of a1) maps a2 onto a1.

    ``holds`` iff phi carries both directed relations exactly, in both
    directions; on failure the witness is an edge present on exactly one
    side (reported in a1 labels).
    """
    v1, v2 = _vertices(a1), _vertices(a2)
    if set(phi.keys()) != v2 or set(phi.values()) != v1 or len(phi) != len(set(phi.values())):
        raise DomainMismatch("phi is not a bijection between the rule vertex sets")
    for name, rel1, rel2 in (("horizontal", a1.horizontal, a2.horizontal),
                             ("vertical", a1.vertical, a2.vertical)):
        mapped = {(phi[a], phi[b]) for a, b in rel2}
        for edge in sorted(mapped - rel1):
            return IsomorphismReport(False, (name, "a2", edge))
        for edge in sorted(rel1 - mapped):
            return IsomorphismReport(False, (name, "a1", edge))
    return IsomorphismReport(True)


# ---------------------------------------------------------------------------
# Serialization

_MARK_NAMES = {EMPTY: "empty", HEAD: "head", TAIL: "tail"}


def _edge_json(marking: ArrowMarking, side: str, color: str) -> dict:
    return {"slots": [_MARK_NAMES[m] for m in marking.edge(side)], "color": color}


def tiles_json(tiles: TileSet) -> dict:
    entries = []
    for t in tiles:
        colors = parity_edge_colors(t.parity)
        entries.append({
            "id": t.id,
            "marking": t.marking.name,
            "kind": t.marking.kind,
            "parity": t.parity.value,
            "edges": {
                "left": _edge_json(t.marking, "left", colors[0]),
                "right": _edge_json(t.marking, "right", colors[1]),
                "bottom": _edge_json(t.marking, "bottom", colors[2]),
                "top": _edge_json(t.marking, "top", colors[3]),
            },
        })
    return {"format": FORMAT_TILES, "tiles": entries}


def rules_json(rules: AdjacencyRules) -> dict:
    return {
        "format": FORMAT_TILES,
        "horizontal": sorted(map(list, rules.horizontal)),
        "vertical": sorted(map(list, rules.vertical)),
    }


def supertiles_json(supertiles: SuperTileSet, rmap: RenormalizationMap) -> dict:
    entries = []
    for s in supertiles:
        entry = {"bl": s.bl, "br": s.br, "tl": s.tl, "tr": s.tr}
        try:
            entry["image"] = rmap.image(s)
        except NotInImage:
            entry["image"] = None
        entries.append(entry)
    return {"format": FORMAT_TILES, "anchor": supertiles.anchor,
            "supertiles": entries}


def bijection_json(rmap: RenormalizationMap) -> dict:
    return {
        "format": FORMAT_TILES,
        "anchor": rmap.anchor,
        "pairs": sorted([list(s.cells()), i] for s, i in rmap.mapping.items()),
    }


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
