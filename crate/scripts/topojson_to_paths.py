#!/usr/bin/env python3
"""Convert the us-atlas states-albers-10m TopoJSON into one SVG path per state.

Output: TSV `name<TAB>d` rows, coordinates in the projected 975x610 frame,
rounded to one decimal. District of Columbia is dropped.

    python3 scripts/topojson_to_paths.py crates/core/assets/us-states-albers-10m.topo.json \
        > crates/core/assets/us-states-paths.tsv
"""
import json
import sys


def decode_arcs(topo):
    sx, sy = topo["transform"]["scale"]
    tx, ty = topo["transform"]["translate"]
    arcs = []
    for arc in topo["arcs"]:
        x = y = 0
        pts = []
        for dx, dy in arc:
            x += dx
            y += dy
            pts.append((x * sx + tx, y * sy + ty))
        arcs.append(pts)
    return arcs


def ring_points(ring, arcs):
    pts = []
    for idx in ring:
        arc = arcs[idx] if idx >= 0 else list(reversed(arcs[~idx]))
        pts.extend(arc if not pts else arc[1:])
    return pts


def ring_path(points):
    out = []
    last = None
    for x, y in points:
        p = (round(x, 1), round(y, 1))
        if p == last:
            continue
        out.append(p)
        last = p
    if len(out) < 3:
        return ""
    head = "M%g,%g" % out[0]
    rest = "".join("L%g,%g" % p for p in out[1:])
    return head + rest + "Z"


def main(path):
    topo = json.load(open(path))
    arcs = decode_arcs(topo)
    rows = []
    for geom in topo["objects"]["states"]["geometries"]:
        name = geom["properties"]["name"]
        if name == "District of Columbia":
            continue
        polys = geom["arcs"] if geom["type"] == "MultiPolygon" else [geom["arcs"]]
        d = "".join(ring_path(ring_points(r, arcs)) for poly in polys for r in poly)
        rows.append((name, d))
    rows.sort()
    for name, d in rows:
        print(f"{name}\t{d}")


if __name__ == "__main__":
    main(sys.argv[1])
