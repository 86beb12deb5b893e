"""Regenerate the drawing assets shipped with the drawmpc crate.

Writes the preset inputs (cloud.csv, human.csv, hi.pbm) into crates/drawmpc/assets and
the glyph corpus used by the skeletonization tests into crates/drawmpc/tests/data/glyphs.
Output is deterministic.
"""

import math
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parent.parent
ASSETS = ROOT / "crates" / "drawmpc" / "assets"
GLYPHS = ROOT / "crates" / "drawmpc" / "tests" / "data" / "glyphs"


def write_points(path, pts, header=True):
    with open(path, "w") as f:
        if header:
            f.write("x,y\n")
        for x, y in pts:
            f.write(f"{x:.6f},{y:.6f}\n")


def cloud(n_bumps=7, rx=60.0, ry=32.0, per_bump=140):
    """Scalloped outline: outward circular arcs meeting at inward cusps."""
    cusps = [
        (rx * math.cos(2 * math.pi * k / n_bumps), ry * math.sin(2 * math.pi * k / n_bumps))
        for k in range(n_bumps)
    ]
    pts = []
    for k in range(n_bumps):
        (x0, y0), (x1, y1) = cusps[k], cusps[(k + 1) % n_bumps]
        mx, my = (x0 + x1) / 2, (y0 + y1) / 2
        half = math.hypot(x1 - x0, y1 - y0) / 2
        # Semicircle on the chord, bulging away from the cloud's center.
        ang0 = math.atan2(y0 - my, x0 - mx)
        sweep = math.pi
        mid = (mx + half * math.cos(ang0 + sweep / 2), my + half * math.sin(ang0 + sweep / 2))
        if math.hypot(*mid) < math.hypot(mx, my):
            sweep = -sweep
        for j in range(per_bump):
            a = ang0 + sweep * j / per_bump
            pts.append((mx + half * math.cos(a), my + half * math.sin(a)))
    pts.append(pts[0])
    return pts


def segment(a, b, step):
    n = max(1, round(math.dist(a, b) / step))
    return [(a[0] + (b[0] - a[0]) * i / n, a[1] + (b[1] - a[1]) * i / n) for i in range(n)]


def human(step=0.5):
    """Stick figure drawn feet first; the last stroke jumps from the right hand to the head."""
    left_foot, right_foot = (-15.0, 0.0), (15.0, 0.0)
    hip, neck = (0.0, 30.0), (0.0, 60.0)
    left_hand, right_hand = (-22.0, 48.0), (22.0, 48.0)
    head_c, head_r = (0.0, 71.0), 11.0
    pts = []
    for a, b in [
        (left_foot, hip),
        (hip, right_foot),
        (right_foot, hip),
        (hip, neck),
        (neck, left_hand),
        (left_hand, neck),
        (neck, right_hand),
    ]:
        pts += segment(a, b, step)
    pts.append(right_hand)
    n = round(2 * math.pi * head_r / step)
    for i in range(n + 1):
        a = -math.pi / 2 + 2 * math.pi * i / n
        pts.append((head_c[0] + head_r * math.cos(a), head_c[1] + head_r * math.sin(a)))
    return pts


def to_bits(img):
    w, h = img.size
    px = img.load()
    return w, h, [[1 if px[x, y] else 0 for x in range(w)] for y in range(h)]


def write_p1(path, img):
    w, h, rows = to_bits(img)
    with open(path, "w") as f:
        f.write(f"P1\n# {path.name}\n{w} {h}\n")
        for r in rows:
            f.write(" ".join(str(b) for b in r) + "\n")


def write_p4(path, img):
    w, h, rows = to_bits(img)
    data = bytearray()
    for r in rows:
        for start in range(0, w, 8):
            byte = 0
            for k, b in enumerate(r[start : start + 8]):
                byte |= b << (7 - k)
            data.append(byte)
    with open(path, "wb") as f:
        f.write(f"P4\n{w} {h}\n".encode())
        f.write(bytes(data))


def canvas(w, h):
    img = Image.new("1", (w, h), 0)
    return img, ImageDraw.Draw(img)


def stroke(d, pts, width):
    d.line(pts, fill=1, width=width, joint="curve")
    r = width / 2
    for x, y in (pts[0], pts[-1]):
        d.ellipse([x - r, y - r, x + r, y + r], fill=1)


def arc_pts(cx, cy, r, a0, a1, n=24):
    return [(cx + r * math.cos(a0 + (a1 - a0) * i / n), cy + r * math.sin(a0 + (a1 - a0) * i / n)) for i in range(n + 1)]


def hi_glyph():
    """Cursive "hi" with a dotted i, strokes about six pixels thick."""
    img, d = canvas(110, 90)
    w = 6
    # Lead-in, tall loop of the h, and its hump.
    lead = [(8, 78), (14, 60), (20, 36), (24, 18), (27, 12), (31, 16), (29, 30), (25, 55), (22, 80)]
    stroke(d, lead, w)
    hump = [(23, 72)] + arc_pts(35, 62, 11, math.pi, 2 * math.pi) + [(46, 72), (48, 78), (54, 80), (60, 74), (64, 60)]
    stroke(d, hump, w)
    # Stem of the i and its exit tail.
    stem = [(64, 60), (63, 72), (66, 80), (74, 80), (82, 72)]
    stroke(d, stem, w)
    d.ellipse([60, 38, 68, 46], fill=1)
    return img


def corpus():
    out = {}
    img, d = canvas(40, 40)
    d.ellipse([6, 6, 34, 34], outline=1, width=6)
    out["ring"] = img
    img, d = canvas(30, 40)
    stroke(d, [(15, 5), (15, 35)], 5)
    out["bar"] = img
    img, d = canvas(40, 40)
    stroke(d, [(6, 6), (34, 34)], 5)
    stroke(d, [(34, 6), (6, 34)], 5)
    out["cross"] = img
    img, d = canvas(40, 40)
    stroke(d, [(20, 5), (20, 35)], 5)
    stroke(d, [(6, 14), (34, 14)], 5)
    out["tee"] = img
    img, d = canvas(40, 40)
    stroke(d, [(6, 6), (20, 34), (34, 6)], 5)
    out["vee"] = img
    img, d = canvas(40, 40)
    d.arc([6, 6, 34, 34], 45, 315, fill=1, width=6)
    out["cee"] = img
    img, d = canvas(40, 40)
    d.rectangle([5, 12, 35, 26], fill=1)
    out["block"] = img
    img, d = canvas(50, 40)
    d.ellipse([4, 8, 22, 30], outline=1, width=5)
    d.ellipse([30, 14, 42, 26], fill=1)
    out["two_parts"] = img
    img, d = canvas(40, 44)
    stroke(d, [(8, 38), (8, 6), (26, 6)] + arc_pts(26, 14, 8, -math.pi / 2, math.pi / 2) + [(8, 22)], 5)
    out["pee"] = img
    out["hi"] = hi_glyph()
    return out


def main():
    ASSETS.mkdir(parents=True, exist_ok=True)
    GLYPHS.mkdir(parents=True, exist_ok=True)
    write_points(ASSETS / "cloud.csv", cloud())
    write_points(ASSETS / "human.csv", human(), header=False)
    write_p1(ASSETS / "hi.pbm", hi_glyph())
    for k, (name, img) in enumerate(sorted(corpus().items())):
        if k % 2 == 0:
            write_p1(GLYPHS / f"{name}.pbm", img)
        else:
            write_p4(GLYPHS / f"{name}.pbm", img)


if __name__ == "__main__":
    main()
