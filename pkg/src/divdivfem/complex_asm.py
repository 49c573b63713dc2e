"""Global spaces, sparse discrete differentials, and the global exactness audit.

Shared DOFs get one global slot; because every functional is built from global
entity data, the same slot evaluates identically from all incident cells, so
signs are +1 everywhere and assembly is a plain scatter.  Discrete operators
are built by interpolating the differential of each source basis function into
the target space (legitimate since the differentials land in the target space
cellwise and conformingly).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import poly
from . import tensor_calc as tc
from .dofcommon import Element, PolyEval
from .fe3d import EntityCache, build_element, per_entity_counts
from .fields import PolyField
from .linalg import qr_rank, svd_rank
from .mesh import TetMesh

_KINDS = ("v", "e", "f", "c")


class GlobalSpace:
    def __init__(self, mesh: TetMesh, family: str, k: int,
                 cache: EntityCache | None = None):
        self.mesh = mesh
        self.family = family
        self.k = k
        self.cache = cache if cache is not None else EntityCache(mesh, k)
        self.elements: list[Element] = [
            build_element(family, k, mesh, ci, self.cache)
            for ci in range(mesh.num_cells)]
        counts = per_entity_counts(self.elements[0])
        self.entity_dofs = counts
        nums = {"v": mesh.num_vertices, "e": mesh.num_edges,
                "f": mesh.num_faces, "c": mesh.num_cells}
        offsets, base = {}, 0
        for kind in _KINDS:
            offsets[kind] = base
            base += counts[kind] * nums[kind]
        self.ndof = base
        self._offsets = offsets
        self.cell_maps = []
        for ci in range(mesh.num_cells):
            ent_ids = {"v": mesh.cells[ci], "e": mesh.cell_edges[ci],
                       "f": mesh.cell_faces[ci], "c": [ci]}
            gmap = np.empty(self.elements[ci].ndof, dtype=int)
            for li, (kind, idx, j) in enumerate(self.elements[ci].tags):
                gmap[li] = offsets[kind] + ent_ids[kind][idx] * counts[kind] + j
            self.cell_maps.append(gmap)
        self.owner = np.full(self.ndof, -1, dtype=int)
        self.owner_local = np.full(self.ndof, -1, dtype=int)
        for ci in range(mesh.num_cells):
            gmap = self.cell_maps[ci]
            fresh = self.owner[gmap] == -1
            self.owner[gmap[fresh]] = ci
            self.owner_local[gmap[fresh]] = np.nonzero(fresh)[0]
        assert (self.owner >= 0).all()
        self._mass = None

    @property
    def dim(self) -> int:
        return self.ndof

    def attachment_counts(self) -> dict[str, int]:
        nums = {"v": self.mesh.num_vertices, "e": self.mesh.num_edges,
                "f": self.mesh.num_faces, "c": self.mesh.num_cells}
        names = {"v": "vertex", "e": "edge", "f": "face", "c": "interior"}
        return {names[k]: self.entity_dofs[k] * nums[k] for k in _KINDS}

    # -- linear algebra --------------------------------------------------------
    def mass(self) -> sp.csr_matrix:
        if self._mass is None:
            gens = np.asarray(self.elements[0].comp_gens, dtype=float)
            Gc = gens.reshape(len(gens), -1) @ gens.reshape(len(gens), -1).T
            rows, cols, vals = [], [], []
            for ci, elem in enumerate(self.elements):
                Gs = elem.basis.gram()
                G = np.kron(Gs, Gc)
                Mk = elem.Vinv.T @ G @ elem.Vinv
                gmap = self.cell_maps[ci]
                rows.append(np.repeat(gmap, len(gmap)))
                cols.append(np.tile(gmap, len(gmap)))
                vals.append(Mk.ravel())
            self._mass = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.ndof, self.ndof))
        return self._mass

    def interpolate(self, field: PolyField, check_shared: bool = False) -> np.ndarray:
        """Canonical interpolation: each DOF evaluated once on its owner cell."""
        if not isinstance(field, PolyField):
            raise TypeError("interpolation needs a PolyField: the vertex DOFs "
                            "take exact point derivatives")
        out = np.zeros(self.ndof)
        per_cell = []
        for ci, elem in enumerate(self.elements):
            vals = elem.dof_values(PolyEval(field))
            per_cell.append(vals)
        for g in range(self.ndof):
            out[g] = per_cell[self.owner[g]][self.owner_local[g]]
        if check_shared:
            worst = 0.0
            for ci in range(self.mesh.num_cells):
                diff = per_cell[ci] - out[self.cell_maps[ci]]
                worst = max(worst, float(np.abs(diff).max(initial=0.0)))
            scale = max(float(np.abs(out).max(initial=0.0)), 1.0)
            if worst > 1e-8 * scale:
                raise ValueError(f"shared DOFs disagree across cells: {worst:.3e}")
        return out

    def eval_cells(self, coeffs: np.ndarray, ci: int, pts) -> np.ndarray:
        """Values of the discrete field on cell ci at physical points."""
        elem = self.elements[ci]
        f = elem.field_from_dofs(coeffs[self.cell_maps[ci]])
        return f.eval(pts)


_OP_TABLE = {
    "devgrad": ("h1_vec3", "hsymcurl_T", "T",
                lambda f: tc.field_dev(f.grad())),
    "symcurl": ("hsymcurl_T", "hdivdiv_S", "S",
                lambda f: tc.field_sym(f.curl())),
    "divdiv": ("hdivdiv_S", "dg_scalar", "scalar",
               lambda f: f.div().div()),
}


def assemble_diff(op: str, src: GlobalSpace, dst: GlobalSpace) -> sp.csr_matrix:
    """Sparse operator mapping src coefficients to dst coefficients."""
    if op not in _OP_TABLE:
        raise ValueError(f"unknown operator {op!r}")
    fam_src, fam_dst, rng_dst, fn = _OP_TABLE[op]
    if src.family != fam_src or dst.family != fam_dst:
        raise ValueError(f"{op} maps {fam_src} -> {fam_dst}, "
                         f"got {src.family} -> {dst.family}")
    rows, cols, vals = [], [], []
    written = np.zeros(dst.ndof, dtype=bool)
    for ci in range(src.mesh.num_cells):
        es, ed = src.elements[ci], dst.elements[ci]
        image = fn(es.generator_fields())
        gmat = poly.to_range_coords(image, rng_dst)        # (ngen_src, ngen_dst)
        d_k = ed.V @ gmat.T @ es.Vinv                      # (ndof_dst, ndof_src)
        gsrc = src.cell_maps[ci]
        gdst = dst.cell_maps[ci]
        own = ~written[gdst]
        for li in np.nonzero(own)[0]:
            rows.append(np.full(len(gsrc), gdst[li]))
            cols.append(gsrc)
            vals.append(d_k[li])
        written[gdst] = True
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dst.ndof, src.ndof))


def sparse_rank(A: sp.spmatrix, rtol: float = 1e-9, cross_check: bool = True) -> int:
    """Rank by dense column-pivoted QR; SVD cross-check on small matrices."""
    dense = np.asarray(A.todense()) if sp.issparse(A) else np.asarray(A)
    r = qr_rank(dense, rtol)
    if cross_check and max(dense.shape) <= 1200:
        r2 = svd_rank(dense, rtol=1e-10)
        if r2 != r:
            raise ValueError(f"rank oracle disagreement: QR {r} vs SVD {r2}")
    return r


def build_complex(mesh: TetMesh, k: int):
    """All four global spaces plus the three discrete differentials."""
    cache = EntityCache(mesh, k)
    V = GlobalSpace(mesh, "h1_vec3", k, cache)
    L = GlobalSpace(mesh, "hsymcurl_T", k, cache)
    S = GlobalSpace(mesh, "hdivdiv_S", k, cache)
    Q = GlobalSpace(mesh, "dg_scalar", k, cache)
    d1 = assemble_diff("devgrad", V, L)
    d2 = assemble_diff("symcurl", L, S)
    d3 = assemble_diff("divdiv", S, Q)
    return (V, L, S, Q), (d1, d2, d3)


def _formula_rank_symcurl(mesh: TetMesh, k: int) -> int:
    return (2 * mesh.num_vertices + (3 * k + 1) * mesh.num_edges
            + (k * k - k - 3) * mesh.num_faces
            + (5 * k**3 + 12 * k**2 - 17 * k) // 6 * mesh.num_cells + 4)


def _formula_ker_divdiv(mesh: TetMesh, k: int) -> int:
    return (6 * mesh.num_vertices + (3 * k - 3) * mesh.num_edges
            + (k * k - k + 1) * mesh.num_faces
            + (5 * k**3 + 12 * k**2 - 17 * k - 24) // 6 * mesh.num_cells)


def complex_audit(mesh: TetMesh, k: int) -> list[dict]:
    """Global exactness: inclusions, zero compositions, rank/nullity chain,
    surjectivity of divdiv, and the Euler-consistency of the dimension formulas."""
    if mesh.euler_characteristic != 1:
        raise ValueError("audit expects a simply connected mesh (chi = 1)")
    (V, L, S, Q), (d1, d2, d3) = build_complex(mesh, k)
    checks = []

    def add(name, expected, computed, source, tol=0):
        ok = abs(computed - expected) <= tol if tol else computed == expected
        checks.append({"name": name, "expected": expected, "computed": computed,
                       "source": source, "pass": bool(ok)})

    comp21 = (d2 @ d1)
    scale21 = max(abs(d1).max() * abs(d2).max(), 1e-300)
    add("symcurl o devgrad = 0", 0.0,
        float(np.abs(comp21.toarray()).max() / scale21) if comp21.nnz else 0.0,
        "trivial", tol=1e-11)
    comp32 = (d3 @ d2)
    scale32 = max(abs(d2).max() * abs(d3).max(), 1e-300)
    add("divdiv o symcurl = 0", 0.0,
        float(np.abs(comp32.toarray()).max() / scale32) if comp32.nnz else 0.0,
        "trivial", tol=1e-11)

    r1 = sparse_rank(d1)
    r2 = sparse_rank(d2)
    r3 = sparse_rank(d3)
    add("rank devgrad = dim V - 4 (kernel RT)", V.dim - 4, r1, "paper")
    add("exactness at symcurl space", r1, L.dim - r2, "derived")
    add("exactness at divdiv space", r2, S.dim - r3, "derived")
    add("divdiv onto P_{k-2}(T)", Q.dim, r3, "paper")
    add("rank symcurl matches proof formula", _formula_rank_symcurl(mesh, k), r2, "paper")
    add("ker divdiv matches proof formula", _formula_ker_divdiv(mesh, k), S.dim - r3, "paper")
    add("formulas consistent iff Euler (integer identity)",
        4 * (mesh.euler_characteristic - 1),
        _formula_ker_divdiv(mesh, k) - _formula_rank_symcurl(mesh, k), "paper")

    # RT fields interpolate into V and are killed by the discrete devgrad
    rt = poly.rt_space("tet")
    worst = 0.0
    for i in range(4):
        coeffs = V.interpolate(rt.member(i))
        worst = max(worst, float(np.abs(d1 @ coeffs).max()))
    add("devgrad of interpolated RT fields = 0", 0.0, worst, "trivial", tol=1e-10)
    return checks
