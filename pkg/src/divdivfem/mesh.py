"""Tetrahedral meshes: derived edge/face topology, frames, reference maps.

Entity keys are sorted global-vertex-id tuples and entity numbering is
lexicographic in those keys, so runs are reproducible and every frame is a
function of global data only (shared-entity DOFs then match across cells by
construction).

ASCII format: header "tetmesh <#V> <#T>", then #V lines "x y z", then #T
lines "v0 v1 v2 v3" (0-based).
"""

from __future__ import annotations

import itertools
import re

import numpy as np

from .fields import Simplex
from .tensor_calc import EdgeFrame, FaceFrame, make_edge_frame, make_face_frame

LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class MeshError(ValueError):
    pass


class TetMesh:
    def __init__(self, vertices, cells):
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = np.asarray(cells, dtype=int)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be (nv, 3)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 4:
            raise MeshError("cells must be (nt, 4)")
        self._validate_cells()
        self._build_topology()
        self._build_frames()
        self.cell_simplices = [Simplex(self.vertices[c]) for c in self.cells]

    # -- validation ---------------------------------------------------------
    def _validate_cells(self):
        nv = len(self.vertices)
        if self.cells.min(initial=0) < 0 or (len(self.cells) and self.cells.max() >= nv):
            raise MeshError("cell refers to a nonexistent vertex")
        bad = []
        for ci, c in enumerate(self.cells):
            v = self.vertices[c]
            det = np.linalg.det((v[1:] - v[0]).T)
            if not np.isfinite(det) or det <= 0.0:
                bad.append(ci)
        if bad:
            raise MeshError(f"inverted or degenerate cells: {bad}")
        used = np.zeros(nv, dtype=bool)
        used[self.cells.ravel()] = True
        if not used.all():
            raise MeshError(f"dangling vertices: {list(np.nonzero(~used)[0])}")

    def _build_topology(self):
        edge_keys, face_keys = set(), set()
        for c in self.cells:
            for a, b in LOCAL_EDGES:
                edge_keys.add(tuple(sorted((c[a], c[b]))))
            for f in LOCAL_FACES:
                face_keys.add(tuple(sorted(c[list(f)])))
        self.edges = np.array(sorted(edge_keys), dtype=int).reshape(-1, 2)
        self.faces = np.array(sorted(face_keys), dtype=int).reshape(-1, 3)
        eidx = {tuple(e): i for i, e in enumerate(self.edges)}
        fidx = {tuple(f): i for i, f in enumerate(self.faces)}
        self.cell_edges = np.array(
            [[eidx[tuple(sorted((c[a], c[b])))] for a, b in LOCAL_EDGES] for c in self.cells],
            dtype=int).reshape(-1, 6)
        self.cell_faces = np.array(
            [[fidx[tuple(sorted(c[list(f)]))] for f in LOCAL_FACES] for c in self.cells],
            dtype=int).reshape(-1, 4)
        self.face_cells = [[] for _ in range(len(self.faces))]
        for ci, cf in enumerate(self.cell_faces):
            for fi in cf:
                self.face_cells[fi].append(ci)
        over = [fi for fi, cs in enumerate(self.face_cells) if len(cs) > 2]
        if over:
            raise MeshError(f"non-manifold faces (more than 2 incident cells): {over}")
        self.boundary_faces = np.array(
            [fi for fi, cs in enumerate(self.face_cells) if len(cs) == 1], dtype=int)
        self.edge_cells = [[] for _ in range(len(self.edges))]
        for ci, ce in enumerate(self.cell_edges):
            for ei in set(ce):
                self.edge_cells[ei].append(ci)

    def _build_frames(self):
        self.edge_frames: list[EdgeFrame] = [
            make_edge_frame(e, self.vertices[e]) for e in self.edges]
        self.face_frames: list[FaceFrame] = [
            make_face_frame(f, self.vertices[f]) for f in self.faces]

    # -- queries --------------------------------------------------------------
    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_faces(self):
        return len(self.faces)

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - self.num_edges + self.num_faces - self.num_cells

    def barycentric(self, cell: int, point) -> np.ndarray:
        return self.cell_simplices[cell].barycentric(point)[0]

    def cell_volume(self, cell: int) -> float:
        return self.cell_simplices[cell].measure

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(f"tetmesh {self.num_vertices} {self.num_cells}\n")
            for v in self.vertices:
                fh.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
            for c in self.cells:
                fh.write(" ".join(str(int(x)) for x in c) + "\n")


# ---------------------------------------------------------------------------
# builtins and loading
# ---------------------------------------------------------------------------

def single_tet() -> TetMesh:
    return TetMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
                   [[0, 1, 2, 3]])


def two_tets() -> TetMesh:
    return TetMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]],
                   [[0, 1, 2, 3], [1, 2, 3, 4]])


def kuhn_cube(n: int) -> TetMesh:
    """Kuhn/Freudenthal split of the unit cube into 6 n^3 tetrahedra."""
    if n < 1:
        raise MeshError("kuhn_cube needs n >= 1")
    m = n + 1
    idx = lambda i, j, k: (i * m + j) * m + k
    verts = np.array([[i, j, k] for i in range(m) for j in range(m) for k in range(m)],
                     dtype=float) / n
    cells = []
    for cx, cy, cz in itertools.product(range(n), repeat=3):
        corner = np.array([cx, cy, cz])
        for perm in itertools.permutations(range(3)):
            path = [corner.copy()]
            for ax in perm:
                nxt = path[-1].copy()
                nxt[ax] += 1
                path.append(nxt)
            tet = [idx(*p) for p in path]
            v = verts[tet]
            if np.linalg.det((v[1:] - v[0]).T) < 0:
                tet[2], tet[3] = tet[3], tet[2]
            cells.append(tet)
    return TetMesh(verts, cells)


_BUILTIN_RE = re.compile(r"^kuhn_cube\((\d+)\)$")


def load(spec: str) -> TetMesh:
    """Load a builtin mesh by name or a mesh file by path."""
    if spec == "single_tet":
        return single_tet()
    if spec == "two_tets":
        return two_tets()
    m = _BUILTIN_RE.match(spec)
    if m:
        return kuhn_cube(int(m.group(1)))
    return load_file(spec)


def load_file(path) -> TetMesh:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "tetmesh":
            raise MeshError(f"{path}: expected header 'tetmesh <#V> <#T>'")
        nv, nt = int(header[1]), int(header[2])
        verts = [list(map(float, fh.readline().split())) for _ in range(nv)]
        cells = [list(map(int, fh.readline().split())) for _ in range(nt)]
    if any(len(v) != 3 for v in verts) or any(len(c) != 4 for c in cells):
        raise MeshError(f"{path}: malformed vertex or cell line")
    return TetMesh(verts, cells)
