#!/usr/bin/env python3
"""Build the hand-authored fixture fonts under fixtures/.

Requires fontTools. The generated binaries are committed; rerun only when the
fixture design changes, then regenerate the golden dumps with
tools/reference_dump.py.
"""

import array
import os
import sys

from fontTools.fontBuilder import FontBuilder
from fontTools.ttLib import newTable
from fontTools.ttLib.tables import ttProgram
from fontTools.ttLib.tables._g_l_y_f import Glyph, GlyphComponent, GlyphCoordinates
from fontTools.ttLib.tables.TupleVariation import TupleVariation

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures")


def simple_glyph(contours):
    """contours: list of lists of (x, y, on_curve)."""
    g = Glyph()
    coords = []
    flags = []
    ends = []
    for contour in contours:
        for x, y, on in contour:
            coords.append((x, y))
            flags.append(1 if on else 0)
        ends.append(len(coords) - 1)
    g.numberOfContours = len(contours)
    g.coordinates = GlyphCoordinates(coords)
    g.flags = array.array("B", flags)
    g.endPtsOfContours = ends
    g.program = ttProgram.Program()
    g.program.fromBytecode(b"")
    return g


def empty_glyph():
    g = Glyph()
    g.numberOfContours = 0
    return g


def composite_glyph(components):
    """components: list of (glyph name, dx, dy)."""
    g = Glyph()
    g.numberOfContours = -1
    g.components = []
    for name, dx, dy in components:
        c = GlyphComponent()
        c.glyphName = name
        c.x, c.y = dx, dy
        c.flags = 0x0002  # ARGS_ARE_XY_VALUES
        g.components.append(c)
    return g


def rect(x0, y0, x1, y1):
    # TrueType outer contours run clockwise with y up.
    return [(x0, y0, True), (x0, y1, True), (x1, y1, True), (x1, y0, True)]


def build(path, upem, axes, glyphs, order, cmap, metrics, variations, avar=None):
    fb = FontBuilder(upem, isTTF=True)
    fb.setupGlyphOrder(order)
    fb.setupCharacterMap(cmap)
    fb.setupGlyf(glyphs)
    fb.setupHorizontalMetrics(metrics)
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": os.path.basename(path), "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=800, usWinAscent=800, usWinDescent=200)
    fb.setupPost()
    if axes:
        fb.setupFvar([(tag, lo, default, hi, tag) for tag, lo, default, hi in axes], [])
        if avar:
            table = newTable("avar")
            table.segments = {tag: dict(avar.get(tag, {-1.0: -1.0, 0.0: 0.0, 1.0: 1.0})) for tag, *_ in axes}
            fb.font["avar"] = table
        fb.setupGvar(variations)
    fb.save(path)


def fix1():
    flat_i = rect(100, 0, 200, 700)
    glyphs = {".notdef": empty_glyph(), "I": simple_glyph([flat_i])}
    metrics = {".notdef": (500, 0), "I": (300, 100)}
    # points: 4 outline + 4 phantom (pp1 lsb, pp2 advance, pp3, pp4)
    wide = [(0, 0), (0, 0), (100, 0), (100, 0), (0, 0), (100, 0), (0, 0), (0, 0)]
    variations = {
        ".notdef": [],
        "I": [TupleVariation({"wght": (0.0, 1.0, 1.0)}, wide)],
    }
    build(
        os.path.join(OUT, "fix1.ttf"),
        1000,
        [("wght", 100, 400, 900)],
        glyphs,
        [".notdef", "I"],
        {ord("I"): "I"},
        metrics,
        variations,
    )


def ring_o():
    outer = [
        (200, 700, False),
        (400, 700, False),
        (550, 550, False),
        (550, 150, False),
        (400, 0, False),
        (200, 0, False),
        (50, 150, False),
        (50, 550, False),
    ]
    inner = [
        (300, 550, True),
        (200, 550, False),
        (150, 450, False),
        (150, 250, True),
        (150, 150, False),
        (300, 150, True),
        (450, 150, False),
        (450, 350, True),
        (450, 550, False),
    ]
    return [outer, inner]


def fix2():
    glyphs = {
        ".notdef": empty_glyph(),
        "O": simple_glyph(ring_o()),
        "l": simple_glyph([rect(60, 0, 160, 720)]),
    }
    metrics = {".notdef": (500, 0), "O": (600, 50), "l": (220, 60)}
    # O has 8 + 9 = 17 outline points, then 4 phantoms.
    n_o = 17
    # wght: outer bulges outward on even points only (IUP fills the rest),
    # inner contour tightens; advance grows.
    t_wght = [None] * (n_o + 4)
    for i, (dx, dy) in zip(
        [0, 2, 4, 6], [(-20, 30), (40, 20), (20, -30), (-40, -20)]
    ):
        t_wght[i] = (dx, dy)
    t_wght[8] = (0, -25)
    t_wght[11] = (25, 0)
    t_wght[13] = (0, 25)
    t_wght[15] = (-25, 0)
    t_wght[n_o + 1] = (80, 0)
    # wdth (negative side): condense horizontally, all points explicit.
    t_wdth = []
    for contour in ring_o():
        for x, y, _ in contour:
            t_wdth.append((int(round((300 - x) * 0.4)), 0))
    t_wdth += [(0, 0), (-240, 0), (0, 0), (0, 0)]
    # intermediate region: raise the top on a sparse subset.
    t_mid = [None] * (n_o + 4)
    t_mid[0] = (0, 60)
    t_mid[1] = (0, 60)
    t_mid[8] = (0, 30)
    variations = {
        ".notdef": [],
        "O": [
            TupleVariation({"wght": (0.0, 1.0, 1.0)}, t_wght),
            TupleVariation({"wdth": (-1.0, -1.0, 0.0)}, t_wdth),
            TupleVariation(
                {"wght": (0.0, 0.5, 1.0), "wdth": (-1.0, -0.5, 0.0)}, t_mid
            ),
        ],
        "l": [
            TupleVariation(
                {"wght": (0.0, 1.0, 1.0)},
                [(0, 0), (0, 0), (60, 0), (60, 0), (0, 0), (60, 0), (0, 0), (0, 0)],
            ),
            TupleVariation(
                {"wdth": (-1.0, -1.0, 0.0)},
                [None, None, (-20, 0), None, None, (-20, 0), None, None],
            ),
            TupleVariation(
                {"wght": (0.0, 0.5, 1.0), "wdth": (-1.0, -0.5, 0.0)},
                [(0, 0), (0, 30), (0, 30), (0, 0), (0, 0), (0, 0), (0, 0), (0, 0)],
            ),
        ],
    }
    build(
        os.path.join(OUT, "fix2.ttf"),
        1000,
        [("wght", 100, 400, 900), ("wdth", 50, 100, 200)],
        glyphs,
        [".notdef", "O", "l"],
        {ord("O"): "O", ord("l"): "l"},
        metrics,
        variations,
        avar={"wght": {-1.0: -1.0, 0.0: 0.0, 0.5: 0.4, 1.0: 1.0}},
    )


def fix3():
    i_pts = rect(100, 0, 200, 700)
    l_pts = [
        (80, 0, True),
        (80, 700, True),
        (180, 700, True),
        (180, 100, True),
        (400, 100, True),
        (400, 0, True),
    ]
    glyphs = {
        ".notdef": empty_glyph(),
        "space": empty_glyph(),
        "I": simple_glyph([i_pts]),
        "L": simple_glyph([l_pts]),
        "dblbar": composite_glyph([("I", 0, 0), ("I", 200, 0)]),
    }
    metrics = {
        ".notdef": (500, 0),
        "space": (200, 0),
        "I": (300, 100),
        "L": (460, 80),
        "dblbar": (500, 100),
    }

    def zeros(n):
        return [(0, 0)] * n

    # I: 4 outline points (BL, TL, TR, BR) + 4 phantoms.
    i_wght = [(-20, 0), (-20, 0), (80, 0), (80, 0), (0, 0), (60, 0), (0, 0), (0, 0)]
    i_tall = [(0, 0), (0, 200), (0, 200), (0, 0)] + zeros(4)
    i_short = [(0, 0), (0, -200), (0, -200), (0, 0)] + zeros(4)
    i_drop = [(0, -200)] * 4 + zeros(4)
    i_lift = [(0, 150)] * 4 + zeros(4)
    i_mid = [None, (0, 40), None, None, None, None, None, None]
    # L: 6 outline points + 4 phantoms.
    l_wght = [
        (-20, 0),
        (-20, 0),
        (60, 0),
        (60, 40),
        (60, 40),
        (60, 0),
        (0, 0),
        (80, 0),
        (0, 0),
        (0, 0),
    ]
    l_tall = [(0, 0), (0, 200), (0, 200), None, None, None, None, None, None, None]
    l_short = [(0, 0), (0, -200), (0, -200), (0, 0), (0, 0), (0, 0)] + zeros(4)
    l_drop = [(0, -200)] * 6 + zeros(4)
    l_lift = [(0, 150)] * 6 + zeros(4)
    # dblbar: 2 component offsets + 4 phantoms.
    d_wght = [(0, 0), (60, 0), (0, 0), (60, 0), (0, 0), (0, 0)]

    variations = {
        ".notdef": [],
        "space": [TupleVariation({"wght": (0.0, 1.0, 1.0)}, [(0, 0), (40, 0), (0, 0), (0, 0)])],
        "I": [
            TupleVariation({"wght": (0.0, 1.0, 1.0)}, i_wght),
            TupleVariation({"HGHT": (0.0, 1.0, 1.0)}, i_tall),
            TupleVariation({"HGHT": (-1.0, -1.0, 0.0)}, i_short),
            TupleVariation({"DROP": (0.0, 1.0, 1.0)}, i_drop),
            TupleVariation({"DROP": (-1.0, -1.0, 0.0)}, i_lift),
            TupleVariation({"wght": (0.0, 0.5, 1.0), "HGHT": (0.0, 0.5, 1.0)}, i_mid),
        ],
        "L": [
            TupleVariation({"wght": (0.0, 1.0, 1.0)}, l_wght),
            TupleVariation({"HGHT": (0.0, 1.0, 1.0)}, l_tall),
            TupleVariation({"HGHT": (-1.0, -1.0, 0.0)}, l_short),
            TupleVariation({"DROP": (0.0, 1.0, 1.0)}, l_drop),
            TupleVariation({"DROP": (-1.0, -1.0, 0.0)}, l_lift),
        ],
        "dblbar": [TupleVariation({"wght": (0.0, 1.0, 1.0)}, d_wght)],
    }
    build(
        os.path.join(OUT, "fix3.ttf"),
        1000,
        [("wght", 100, 400, 900), ("HGHT", 500, 700, 900), ("DROP", -100, 0, 100)],
        glyphs,
        [".notdef", "space", "I", "L", "dblbar"],
        {ord(" "): "space", ord("I"): "I", ord("L"): "L", 0x2016: "dblbar"},
        metrics,
        variations,
    )


def static():
    glyphs = {".notdef": empty_glyph(), "I": simple_glyph([rect(100, 0, 200, 700)])}
    build(
        os.path.join(OUT, "static.ttf"),
        1000,
        [],
        glyphs,
        [".notdef", "I"],
        {ord("I"): "I"},
        {".notdef": (500, 0), "I": (300, 100)},
        {},
    )


if __name__ == "__main__":
    os.makedirs(OUT, exist_ok=True)
    fix1()
    fix2()
    fix3()
    static()
    print("fixtures written to", os.path.normpath(OUT), file=sys.stderr)
