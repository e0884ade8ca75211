"""Superposition of the collagen/crosslink trusswork onto the hexahedral mesh.

Each hexahedral cell carries a pattern of truss elements on its top and
bottom surfaces plus four out-of-plane diagonals.  Cells in odd layers
(layer 1 = posterior) carry collagen along grid direction 1 on top and
direction 2 on the bottom; even-layer cells are the z-mirror.  Trusses that
coincide between neighbouring cells are merged, so each shared edge is
modelled once.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .geometry import Mesh

__all__ = ["TrussKind", "Truss", "TrussSet", "build_trusswork",
           "assign_truss_areas"]


class TrussKind(IntEnum):
    COLLAGEN = 0
    CROSSLINK_IN_PLANE_AXIAL = 1
    CROSSLINK_IN_PLANE_DIAGONAL = 2
    CROSSLINK_OUT_OF_PLANE = 3


@dataclass(frozen=True)
class Truss:
    node_a: int
    node_b: int
    kind: TrussKind
    ref_length: float
    ref_area: float = 1.0
    surface: bool = False


@dataclass
class TrussSet:
    """Deduplicated trusswork stored column-wise.

    node_a/node_b: (n_t,) node ids (node_a < node_b).
    kind: (n_t,) TrussKind values.
    ref_length: (n_t,) reference lengths, mm.
    ref_area: (n_t,) referential cross-sectional areas, mm^2.
    surface: (n_t,) True when both nodes lie on the anterior or posterior
        surface (these receive the halved thickness weight).
    lamina_orientation: per-interface collagen direction tag, one of
        "dir1"/"dir2" for node-layers 0..n_l.
    """

    node_a: np.ndarray
    node_b: np.ndarray
    kind: np.ndarray
    ref_length: np.ndarray
    ref_area: np.ndarray
    surface: np.ndarray
    lamina_orientation: list

    @property
    def n_trusses(self):
        return self.node_a.shape[0]

    def __iter__(self):
        for a, b, k, length, area, surf in zip(
                self.node_a, self.node_b, self.kind, self.ref_length,
                self.ref_area, self.surface):
            yield Truss(int(a), int(b), TrussKind(k), float(length),
                        float(area), bool(surf))


def _cell_pattern(nid, i, j, k, odd):
    """Truss node pairs + kinds for one cell; top surface at node-layer k+1."""
    b = [[nid(i, j, k), nid(i + 1, j, k)],
         [nid(i, j + 1, k), nid(i + 1, j + 1, k)]]  # b[j-offset][i-offset]
    t = [[nid(i, j, k + 1), nid(i + 1, j, k + 1)],
         [nid(i, j + 1, k + 1), nid(i + 1, j + 1, k + 1)]]

    def surface_set(n, collagen_dir1):
        # n[jj][ii]; direction-1 edges run over ii, direction-2 over jj
        dir1 = [(n[0][0], n[0][1]), (n[1][0], n[1][1])]
        dir2 = [(n[0][0], n[1][0]), (n[0][1], n[1][1])]
        diag = [(n[0][0], n[1][1]), (n[0][1], n[1][0])]
        coll, axial = (dir1, dir2) if collagen_dir1 else (dir2, dir1)
        out = [(p, TrussKind.COLLAGEN) for p in coll]
        out += [(p, TrussKind.CROSSLINK_IN_PLANE_AXIAL) for p in axial]
        out += [(p, TrussKind.CROSSLINK_IN_PLANE_DIAGONAL) for p in diag]
        return out

    # odd cell: collagen along direction 1 on top, direction 2 on bottom;
    # even cell is the z-mirror
    pairs = surface_set(t, collagen_dir1=odd)
    pairs += surface_set(b, collagen_dir1=not odd)
    # out-of-plane diagonals on the two faces perpendicular to direction 1
    # (the crossing-pair arrangement is invariant under the z-mirror)
    for ii in (0, 1):
        pairs.append(((b[0][ii], t[1][ii]), TrussKind.CROSSLINK_OUT_OF_PLANE))
        pairs.append(((b[1][ii], t[0][ii]), TrussKind.CROSSLINK_OUT_OF_PLANE))
    return pairs


def build_trusswork(mesh: Mesh, spec=None) -> TrussSet:
    """Build the deduplicated collagen/crosslink trusswork for a mesh.

    Requires an odd number of layers so that horizontally and vertically
    aligned collagen laminae occur in equal numbers.
    """
    n_l = mesh.n_l
    if n_l % 2 == 0:
        raise ValueError("trusswork requires an odd number of layers (n_l)")

    seen = {}
    order = []
    for e in range(mesh.n_hex):
        i, j, k = mesh.hex_grid[e]
        odd = (k % 2 == 0)  # layer k+1 is odd
        for (a, bnode), kind in _cell_pattern(mesh.node_index, i, j, k, odd):
            key = (a, bnode) if a < bnode else (bnode, a)
            prev = seen.get(key)
            if prev is None:
                seen[key] = kind
                order.append(key)
            elif prev != kind:
                raise ValueError(
                    f"conflicting truss kinds for node pair {key}: {prev} vs {kind}")

    node_a = np.array([p[0] for p in order], dtype=np.int64)
    node_b = np.array([p[1] for p in order], dtype=np.int64)
    kind = np.array([int(seen[p]) for p in order], dtype=np.int64)
    length = np.linalg.norm(mesh.nodes[node_b] - mesh.nodes[node_a], axis=1)
    if np.any(length <= 0.0):
        raise ValueError("zero-length truss in reference configuration")

    n1 = mesh.n_m + 1
    layer_of = lambda ids: ids // (n1 * n1)
    la, lb = layer_of(node_a), layer_of(node_b)
    surface = ((la == 0) & (lb == 0)) | ((la == n_l) & (lb == n_l))

    # interface t carries collagen along direction 1 when the layer whose
    # top it forms is odd; the posterior surface (t=0) is the odd layer's
    # bottom and therefore runs along direction 2
    lamina = []
    for t in range(n_l + 1):
        if t == 0:
            lamina.append("dir2")
        else:
            lamina.append("dir1" if t % 2 == 1 else "dir2")

    ts = TrussSet(node_a=node_a, node_b=node_b, kind=kind,
                  ref_length=length, ref_area=np.ones_like(length),
                  surface=surface, lamina_orientation=lamina)
    if spec is not None:
        assign_truss_areas(ts, spec)
    return ts


def assign_truss_areas(ts: TrussSet, spec, a_bar: float = 1.0) -> TrussSet:
    """Assign referential areas A = w_M w_L A_bar.

    w_M = 1/n_m; w_L = 1/(2 n_l) for trusses lying entirely on the anterior
    or posterior surface, 1/n_l otherwise.
    """
    if a_bar <= 0.0:
        raise ValueError("a_bar must be positive")
    w_m = 1.0 / spec.n_m
    w_l = np.where(ts.surface, 1.0 / (2.0 * spec.n_l), 1.0 / spec.n_l)
    ts.ref_area = w_m * w_l * a_bar
    return ts
