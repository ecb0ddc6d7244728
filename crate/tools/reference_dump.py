#!/usr/bin/env python3
"""Dump unpacked variation data and sample instances with fontTools.

The output is the golden data the Rust parser and interpolation are checked
against. Two files per font:

  <name>.ref.txt   axes, avar maps, raw default points, regions, dense deltas
  <name>.inst.txt  flattened interpolated points at a few design locations

Line formats (whitespace separated, floats in Python repr):

  upem U
  axis TAG MIN DEFAULT MAX
  avar TAG FROM TO          (one line per map entry)
  glyph GID NAME KIND COUNT (KIND is simple|composite|empty)
  P GID CONTOUR INDEX X Y ON   (raw simple points, phantoms use CONTOUR -1)
  C GID INDEX CHILD DX DY      (composite component offsets)
  R GID SET TAG START PEAK END
  D GID SET INDEX DX DY        (dense, every raw point and the 2 h-phantoms)

  L LOC TAG=VALUE ...          (design location, or normalized if L == N)
  N LOC TAG=VALUE ...          (normalized location, after avar)
  I LOC GID CONTOUR INDEX X Y ON
  W LOC GID ADVANCE
"""

import os
import sys

from fontTools.pens.recordingPen import DecomposingRecordingPointPen
from fontTools.ttLib import TTFont
from fontTools.varLib.iup import iup_delta

HERE = os.path.dirname(os.path.abspath(__file__))
FIX = os.path.join(HERE, "..", "fixtures")


def active_axes(axes):
    # Same normalization the font engine applies: axes whose triple cannot
    # contribute a non-unit scalar are dropped.
    out = []
    for tag, (lo, peak, hi) in sorted(axes.items()):
        if peak == 0.0:
            continue
        if lo > peak or peak > hi:
            continue
        if lo < 0.0 and hi > 0.0:
            continue
        out.append((tag, lo, peak, hi))
    return out


def dump_ref(font, out):
    glyf = font["glyf"]
    gvar = font["gvar"]
    hmtx = font["hmtx"].metrics
    vmtx = getattr(font.get("vmtx"), "metrics", None)
    out.append("upem %d" % font["head"].unitsPerEm)
    for axis in font["fvar"].axes:
        out.append(
            "axis %s %r %r %r"
            % (axis.axisTag, axis.minValue, axis.defaultValue, axis.maxValue)
        )
    if "avar" in font:
        for axis in font["fvar"].axes:
            seg = font["avar"].segments.get(axis.axisTag, {})
            for k in sorted(seg):
                out.append("avar %s %r %r" % (axis.axisTag, k, seg[k]))
    for gid, name in enumerate(font.getGlyphOrder()):
        glyph = glyf[name]
        coords, ctrl = glyf._getCoordinatesAndControls(name, hmtx, vmtx)
        n = len(coords) - 4
        if glyph.isComposite():
            out.append("glyph %d %s composite %d" % (gid, name, n))
            for i, comp in enumerate(glyph.components):
                child = font.getGlyphID(comp.glyphName)
                out.append("C %d %d %d %r %r" % (gid, i, child, comp.x, comp.y))
            ends = list(range(n))
        elif glyph.numberOfContours > 0:
            out.append("glyph %d %s simple %d" % (gid, name, n))
            ends = list(glyph.endPtsOfContours)
            contour = 0
            for i in range(n):
                x, y = coords[i]
                on = glyph.flags[i] & 1
                out.append("P %d %d %d %r %r %d" % (gid, contour, i, x, y, on))
                if i == ends[contour]:
                    contour += 1
        else:
            out.append("glyph %d %s empty 0" % (gid, name))
            ends = []
        for i in (n, n + 1):
            x, y = coords[i]
            out.append("P %d -1 %d %r %r 1" % (gid, i, x, y))
        for s, var in enumerate(gvar.variations.get(name, [])):
            for tag, lo, peak, hi in active_axes(var.axes):
                out.append("R %d %d %s %r %r %r" % (gid, s, tag, lo, peak, hi))
            delta = var.coordinates
            if None in delta:
                if glyph.isComposite():
                    delta = [d if d is not None else (0, 0) for d in delta]
                else:
                    delta = iup_delta(delta, coords, ends)
            for i in range(n + 2):
                dx, dy = delta[i]
                out.append("D %d %d %d %r %r" % (gid, s, i, float(dx), float(dy)))


def dump_instances(font, locations, out):
    order = font.getGlyphOrder()
    for li, loc in enumerate(locations):
        normalized = loc.pop("_normalized", False)
        if normalized:
            # already normalized coordinates; the L record repeats them
            norm = {a.axisTag: loc.get(a.axisTag, 0.0) for a in font["fvar"].axes}
        else:
            norm = font.normalizeLocation(loc)
        out.append("L %d %s" % (li, " ".join("%s=%r" % kv for kv in sorted(loc.items()))))
        out.append("N %d %s" % (li, " ".join("%s=%r" % kv for kv in sorted(norm.items()))))
        gs = font.getGlyphSet(location=norm, normalized=True)
        for gid, name in enumerate(order):
            pen = DecomposingRecordingPointPen(gs)
            glyph = gs[name]
            glyph.drawPoints(pen)
            contour = -1
            index = 0
            for op, args, _ in pen.value:
                if op == "beginPath":
                    contour += 1
                elif op == "addPoint":
                    (x, y), seg = args[0], args[1]
                    on = 0 if seg is None else 1
                    out.append(
                        "I %d %d %d %d %r %r %d"
                        % (li, gid, contour, index, float(x), float(y), on)
                    )
                    index += 1
            out.append("W %d %d %r" % (li, gid, float(glyph.width)))


LOCATIONS = {
    "fix1": [{"wght": 400}, {"wght": 900}, {"wght": 650}, {"wght": 250}],
    "fix2": [
        {"wght": 400, "wdth": 100},
        {"wght": 650, "wdth": 87.5},
        {"wght": 900, "wdth": 50},
        {"wght": 775, "wdth": 62.5},
        {"wght": 250, "wdth": 150},
        {"wght": 0.5, "wdth": -0.25, "_normalized": True},
    ],
    "fix3": [
        {"wght": 400, "HGHT": 700, "DROP": 0},
        {"wght": 650, "HGHT": 800, "DROP": 25},
        {"wght": 900, "HGHT": 550, "DROP": -50},
        {"wght": 200, "HGHT": 750, "DROP": 75},
        {"wght": 460, "HGHT": 610, "DROP": 10},
    ],
    "roboto-flex-I": [
        {"wght": 400},
        {"wght": 700, "wdth": 50, "opsz": 72},
        {"wght": 100, "GRAD": -100, "slnt": -5, "XTRA": 500},
        {"wght": 1000, "wdth": 151, "opsz": 8, "YTUC": 760, "XOPQ": 175},
    ],
}


def main():
    for name, locations in LOCATIONS.items():
        font = TTFont(os.path.join(FIX, name + ".ttf"))
        ref = ["# fontTools reference dump for %s.ttf" % name]
        dump_ref(font, ref)
        with open(os.path.join(FIX, "golden", name + ".ref.txt"), "w") as f:
            f.write("\n".join(ref) + "\n")
        inst = ["# fontTools instances for %s.ttf" % name]
        dump_instances(font, locations, inst)
        with open(os.path.join(FIX, "golden", name + ".inst.txt"), "w") as f:
            f.write("\n".join(inst) + "\n")
    print("golden dumps written", file=sys.stderr)


if __name__ == "__main__":
    main()
