"""Writes the 84-triangle quadratic sphere mesh used by the tests.

44 points of a Fibonacci lattice on the unit sphere are triangulated by
their convex hull (2*44 - 4 = 84 faces); edge midpoints are pushed back onto
the sphere. Output is Gmsh MSH 4.1 ASCII with 6-node triangles (type 9).
"""

import sys

import numpy as np
from scipy.spatial import ConvexHull

N_POINTS = 44


def fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    theta = np.pi * (3.0 - np.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def main(path):
    pts = fibonacci_sphere(N_POINTS)
    faces = []
    for f in ConvexHull(pts).simplices:
        a, b, c = pts[f]
        if np.dot(np.cross(b - a, c - a), a + b + c) < 0:
            f = [f[0], f[2], f[1]]
        faces.append([int(v) for v in f])
    faces.sort()

    nodes = [tuple(p) for p in pts]
    mid = {}
    elements = []
    for f in faces:
        extra = []
        for i, j in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(i, j), max(i, j))
            if key not in mid:
                m = pts[i] + pts[j]
                nodes.append(tuple(m / np.linalg.norm(m)))
                mid[key] = len(nodes) - 1
            extra.append(mid[key])
        elements.append(f + extra)

    with open(path, "w") as out:
        out.write("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
        out.write(f"$Nodes\n1 {len(nodes)} 1 {len(nodes)}\n2 1 0 {len(nodes)}\n")
        for k in range(len(nodes)):
            out.write(f"{k + 1}\n")
        for p in nodes:
            out.write(" ".join(repr(float(c)) for c in p) + "\n")
        out.write("$EndNodes\n")
        out.write(f"$Elements\n1 {len(elements)} 1 {len(elements)}\n2 1 9 {len(elements)}\n")
        for k, e in enumerate(elements):
            out.write(f"{k + 1} " + " ".join(str(v + 1) for v in e) + "\n")
        out.write("$EndElements\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/cpq/tests/data/sphere84.msh")
