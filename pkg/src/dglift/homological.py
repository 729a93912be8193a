"""Windowed Hom complexes, Ext dimension tables, null-homotopy solving, and
the naive-lifting decision procedure.

The splitting solver works directly on the linear system "pi_N(rho(e)) = e and
d(rho(e)) = rho(d(e))" in the minimal sufficient window, then re-verifies any
solution symbolically before reporting SPLIT.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .base_ring import Infeasible, LinearSolution, LinearSystem, matrix_rank
from .dg_module import BidegreeWindow, ChainMap, SemifreeModule, base_change


class HomologicalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Hom complexes
# ---------------------------------------------------------------------------


class HomComplex:
    """Bigraded complex of B-linear maps M -> L over the coefficient field.

    The (d, w) slice is spanned by maps sending one basis element e_a of M to
    one field-basis vector of L at bidegree (|e_a|+d, wt(e_a)+w); the
    differential is D(phi) = dL 。phi - (-1)^{|phi|} phi 。dM.
    """

    def __init__(self, m: SemifreeModule, l: SemifreeModule):
        if m.tower is not l.tower and m.tower != l.tower:
            raise HomologicalError("Hom between modules over different towers")
        self.m = m
        self.l = l
        self._slices: dict[tuple[int, int], list] = {}
        self._matrices: dict[tuple[int, int], list] = {}

    def require_complete(self, d: int, w: int):
        for e in self.m.basis:
            h, wt = e.degree + d, e.weight + w
            if (h >= self.l.min_degree() and wt >= 0) and not self.l.is_complete(h, wt):
                raise HomologicalError(
                    f"window too small: Hom target slice ({h},{wt}) exceeds the "
                    "complete range of the target module"
                )

    def slice_labels(self, d: int, w: int) -> list:
        key = (d, w)
        if key not in self._slices:
            out = []
            for alpha, e in enumerate(self.m.basis):
                for lab in self.l.slice_labels(e.degree + d, e.weight + w):
                    out.append((alpha, lab))
            self._slices[key] = out
        return self._slices[key]

    def dim(self, d: int, w: int) -> int:
        return len(self.slice_labels(d, w))

    def map_image(self, alpha: int, lab, d: int) -> dict:
        """D(phi) for the basis map phi: e_alpha -> label, as {beta: L-element}."""
        m, l = self.m, self.l
        v = l.label_elem(lab)
        out: dict = {alpha: l.apply_diff(v)}
        sign = -1 if d % 2 else 1
        for (a, b), entry in m.diff.items():
            if a != alpha:
                continue
            img = l.mul_elem(v, entry.scale_int(-sign))
            if img:
                prev = out.get(b)
                out[b] = img if prev is None else l.add_elem(prev, img)
        return {b: e for b, e in out.items() if e}

    def matrix_columns(self, d: int, w: int) -> list[dict]:
        """Columns of D restricted to the (d, w) slice, rows labelled by the
        target-slice coordinates at (d-1, w)."""
        key = (d, w)
        if key in self._matrices:
            return self._matrices[key]
        cols = []
        for alpha, lab in self.slice_labels(d, w):
            img = self.map_image(alpha, lab, d)
            col = {}
            for beta, elem in img.items():
                for clab, scalar in self.l.elem_coords(elem).items():
                    col[(beta, clab)] = scalar
            cols.append(col)
        self._matrices[key] = cols
        return cols

    def _rows_from_columns(self, cols: list[dict]) -> list[dict]:
        rows: dict = {}
        for j, col in enumerate(cols):
            for rkey, scalar in col.items():
                rows.setdefault(rkey, {})[j] = scalar
        return [rows[k] for k in sorted(rows)]

    def homology_dim(self, d: int, w: int) -> int:
        """dim H_d of the Hom complex in weight w (exact)."""
        field = self.m.tower.base.field
        n = self.dim(d, w)
        if n == 0:
            return 0
        rows = self._rows_from_columns(self.matrix_columns(d, w))
        cycles = n - matrix_rank(field, rows)
        above = self.matrix_columns(d + 1, w)
        boundaries = matrix_rank(field, [dict(c) for c in above])
        return cycles - boundaries


@dataclass
class HomWindowSlices:
    """Materialized window of a Hom complex: dimensions and differential
    matrices per (degree, weight) slice."""

    complex: HomComplex
    window: BidegreeWindow
    dims: dict
    matrices: dict  # (d, w) -> list of sparse columns into the (d-1, w) slice

    def dim(self, d: int, w: int) -> int:
        return self.dims.get((d, w), 0)


def hom_complex_window(m: SemifreeModule, l: SemifreeModule,
                       window: BidegreeWindow) -> HomWindowSlices:
    """The bigraded Hom complex restricted to degrees [hmin, hmax] and map
    weights [-wmax, wmax], with its differential matrices."""
    hom = HomComplex(m, l)
    dims = {}
    matrices = {}
    for d in range(window.hmin, window.hmax + 1):
        for w in range(-window.wmax, window.wmax + 1):
            hom.require_complete(d, w)
            n = hom.dim(d, w)
            if n:
                dims[(d, w)] = n
                matrices[(d, w)] = hom.matrix_columns(d, w)
    return HomWindowSlices(complex=hom, window=window, dims=dims, matrices=matrices)


@dataclass
class ExtTable:
    """Ext^i dimensions per (i, weight); only nonzero entries stored."""

    i_range: tuple[int, int]
    weight_range: tuple[int, int]
    window: BidegreeWindow
    dims: dict = dc_field(default_factory=dict)

    def dim(self, i: int, w: int) -> int:
        return self.dims.get((i, w), 0)

    def total(self, i: int) -> int:
        return sum(v for (ii, _), v in self.dims.items() if ii == i)

    def rows(self) -> list[list[int]]:
        return [[i, w, v] for (i, w), v in sorted(self.dims.items())]

    def is_zero_for(self, i_from: int, i_to: int) -> bool:
        return all(self.total(i) == 0 for i in range(i_from, i_to + 1))


def ext_dims(m: SemifreeModule, l: SemifreeModule, i_range: tuple[int, int],
             window: BidegreeWindow) -> ExtTable:
    """Ext^i(M, L) = H_{-i}(Hom(M, L)) per internal weight, exactly.

    Refuses when the requested degrees would read truncated slices of L.
    """
    imin, imax = i_range
    if imin > imax:
        raise HomologicalError("empty i range")
    hom = HomComplex(m, l)
    if m.basis:
        w_lo = -max(e.weight for e in m.basis)
        w_hi = window.wmax - min(e.weight for e in m.basis)
    else:
        w_lo, w_hi = 0, -1
    for w in range(w_lo, w_hi + 1):
        hom.require_complete(-imin + 1, w)
    table = ExtTable(i_range=(imin, imax), weight_range=(w_lo, w_hi), window=window)
    for i in range(imin, imax + 1):
        for w in range(w_lo, w_hi + 1):
            dim = hom.homology_dim(-i, w)
            if dim:
                table.dims[(i, w)] = dim
    return table


def null_homotopy(f: ChainMap):
    """Solve f = dL h + (-1)^{deg f} h dM exactly.

    Returns the homotopy as a ChainMap, or an Infeasible witness when none
    exists.  f must be a chain map.
    """
    if not f.is_chain_map():
        raise HomologicalError("null_homotopy needs a chain map")
    m, l, d = f.source, f.target, f.degree
    hom = HomComplex(m, l)

    weights = set()
    coords_by_w: dict[int, dict] = {}
    for alpha, img in f.entries.items():
        wa = m.basis[alpha].weight
        for (i, exps, bex), scalar in l.elem_coords(img).items():
            w = l.basis[i].weight + l.tower.monomial_bidegree(exps)[1] \
                + l.tower.base.term_weight(bex) - wa
            weights.add(w)
            coords_by_w.setdefault(w, {})[(alpha, (i, exps, bex))] = scalar

    unknowns: list = []
    col_of: dict = {}
    columns: list[dict] = []
    for w in sorted(weights):
        hom.require_complete(d + 1, w)
        cols = hom.matrix_columns(d + 1, w)
        for lab, col in zip(hom.slice_labels(d + 1, w), cols):
            col_of[(w, lab)] = len(unknowns)
            unknowns.append((w, lab))
            columns.append(col)

    rows_map: dict = {}
    rhs_map: dict = {}
    for j, (w, _) in enumerate(unknowns):
        for rkey, scalar in columns[j].items():
            rows_map.setdefault((w, rkey), {})[j] = scalar
    for w, coords in coords_by_w.items():
        for rkey, scalar in coords.items():
            rows_map.setdefault((w, rkey), {})
            rhs_map[(w, rkey)] = scalar

    field = m.tower.base.field
    keys = sorted(rows_map)
    system = LinearSystem(
        field,
        [rows_map[k] for k in keys],
        [rhs_map.get(k, field.zero()) for k in keys],
        len(unknowns),
    )
    res = solve_or_witness(system)
    if isinstance(res, Infeasible):
        return res
    entries: dict = {}
    for j, (w, (alpha, lab)) in enumerate(unknowns):
        c = res.solution[j]
        if not c:
            continue
        piece = l.scale_elem(l.label_elem(lab), c)
        prev = entries.get(alpha)
        entries[alpha] = piece if prev is None else l.add_elem(prev, piece)
    return ChainMap(m, l, d + 1, entries)


def solve_or_witness(system: LinearSystem):
    from .base_ring import solve_linear

    return solve_linear(system, track_witness=True)


# ---------------------------------------------------------------------------
# Naive lifting
# ---------------------------------------------------------------------------


@dataclass
class ObstructionWitness:
    """A linear combination of the splitting equations reducing to 0 = value."""

    combo: dict          # equation index -> field scalar
    value: object        # the nonzero scalar c
    equations: list[str]  # human-readable labels of the involved equations
    locus: str


@dataclass
class SplitResult:
    status: str  # "SPLIT" | "OBSTRUCTED"
    window: BidegreeWindow
    module: SemifreeModule          # the base change N|_A (x)_A B
    pi: ChainMap
    rho: ChainMap | None = None
    transcript: list[str] = dc_field(default_factory=list)
    witness: ObstructionWitness | None = None

    @property
    def split(self) -> bool:
        return self.status == "SPLIT"


def minimal_window(n: SemifreeModule) -> BidegreeWindow:
    """Homological range spanned by the basis, weights up to the basis maximum."""
    if not n.basis:
        return BidegreeWindow(0, 0, 0)
    return BidegreeWindow(n.min_degree(), n.max_degree(), n.max_weight())


def build_split_system(n: SemifreeModule, a_prefix: int = 0,
                       window: BidegreeWindow | None = None):
    """Assemble the homogeneous splitting system for pi_N.

    Unknowns are the field coordinates of rho(e_beta) in the (|e_beta|,
    wt(e_beta)) slice of P = N|_A (x)_A B; equations impose pi(rho(e)) = e and
    d(rho(e)) = rho(d(e)).  Returns (system, unknown labels, equation labels,
    P, pi, window).
    """
    if window is None:
        window = minimal_window(n)
    p, pi = base_change(n, window, a_prefix)
    tower = n.tower
    field = tower.base.field

    unknowns: list = []
    col_of: dict = {}
    for beta, e in enumerate(n.basis):
        for lab in p.slice_labels(e.degree, e.weight):
            col_of[(beta, lab)] = len(unknowns)
            unknowns.append((beta, lab))

    rows: list[dict] = []
    rhs: list = []
    labels: list[str] = []

    from .session import render_element

    def n_label(lab):
        i, exps, bex = lab
        mono = tower.monomial(exps, tower.base.monomial(bex))
        return f"{n.basis[i].name}·({render_element(mono)})"

    def p_label(lab):
        i, exps, bex = lab
        mono = tower.monomial(exps, tower.base.monomial(bex))
        return f"{p.basis[i].name}·({render_element(mono)})"

    # pi_N(rho(e_beta)) = e_beta, coordinatewise in N at (|e|, wt(e))
    for beta, e in enumerate(n.basis):
        acc: dict = {}
        for lab in p.slice_labels(e.degree, e.weight):
            img = pi.apply(p.label_elem(lab))
            for nlab, scalar in n.elem_coords(img).items():
                acc.setdefault(nlab, {})[col_of[(beta, lab)]] = scalar
        want = n.elem_coords(n.basis_elem(beta))
        for nlab in sorted(set(acc) | set(want)):
            rows.append(acc.get(nlab, {}))
            rhs.append(want.get(nlab, field.zero()))
            labels.append(f"pi(rho({e.name})) = {e.name} at {n_label(nlab)}")

    # d(rho(e_beta)) = rho(d(e_beta)), coordinatewise in P at (|e|-1, wt(e))
    for beta, e in enumerate(n.basis):
        acc = {}
        for lab in p.slice_labels(e.degree, e.weight):
            img = p.apply_diff(p.label_elem(lab))
            for plab, scalar in p.elem_coords(img).items():
                acc.setdefault(plab, {})[col_of[(beta, lab)]] = scalar
        for (alpha, bb), entry in n.diff.items():
            if bb != beta:
                continue
            ea = n.basis[alpha]
            for lab in p.slice_labels(ea.degree, ea.weight):
                img = p.mul_elem(p.label_elem(lab), entry)
                for plab, scalar in p.elem_coords(img).items():
                    acc.setdefault(plab, {})[col_of[(alpha, lab)]] = field.neg(scalar)
        for plab in sorted(acc):
            row = acc[plab]
            row = {j: v for j, v in row.items() if v}
            if not row:
                continue
            rows.append(row)
            rhs.append(field.zero())
            labels.append(f"chain condition of rho({e.name}) at {p_label(plab)}")

    system = LinearSystem(field, rows, rhs, len(unknowns))
    return system, unknowns, labels, p, pi, window


def naive_lift_check(n: SemifreeModule, a_prefix: int = 0,
                     window: BidegreeWindow | None = None) -> SplitResult:
    """Decide whether pi_N: N|_A (x)_A B -> N splits as DG B-modules.

    A SPLIT result carries rho, re-verified symbolically (pi 。rho = id and
    d 。rho = rho 。d on every basis element).  An OBSTRUCTED result carries a
    re-checkable inconsistency certificate for the splitting system.
    """
    system, unknowns, labels, p, pi, window = build_split_system(n, a_prefix, window)
    res = solve_or_witness(system)
    if isinstance(res, Infeasible):
        involved = sorted(res.combo)
        eq_labels = [labels[i] for i in involved]
        locus = "; ".join(eq_labels[:3]) + ("; ..." if len(eq_labels) > 3 else "")
        witness = ObstructionWitness(
            combo=dict(res.combo), value=res.value, equations=eq_labels, locus=locus
        )
        return SplitResult(
            status="OBSTRUCTED", window=window, module=p, pi=pi,
            transcript=[
                f"splitting system: {len(unknowns)} unknowns, {len(labels)} equations",
                f"inconsistent combination over {len(involved)} equations "
                f"reduces to 0 = {res.value}",
            ],
            witness=witness,
        )

    assert isinstance(res, LinearSolution)
    entries: dict = {}
    for j, (beta, lab) in enumerate(unknowns):
        c = res.solution[j]
        if not c:
            continue
        piece = p.scale_elem(p.label_elem(lab), c)
        prev = entries.get(beta)
        entries[beta] = piece if prev is None else p.add_elem(prev, piece)
    rho = ChainMap(n, p, 0, entries)

    transcript = [
        f"splitting system: {len(unknowns)} unknowns, {len(labels)} equations",
    ]
    for beta, e in enumerate(n.basis):
        img = pi.apply(rho.entries.get(beta, {}))
        if not n.elem_eq(img, n.basis_elem(beta)):
            raise HomologicalError("solver returned a non-section; refusing SPLIT")
        transcript.append(f"verified pi(rho({e.name})) = {e.name}")
    for beta, e in enumerate(n.basis):
        lhs = p.apply_diff(rho.entries.get(beta, {}))
        rhs_elem = rho.apply(n.apply_diff({beta: n.tower.one()}))
        if not p.elem_eq(lhs, rhs_elem):
            raise HomologicalError("solver returned a non-chain map; refusing SPLIT")
        transcript.append(f"verified d(rho({e.name})) = rho(d({e.name}))")

    return SplitResult(
        status="SPLIT", window=window, module=p, pi=pi, rho=rho,
        transcript=transcript,
    )
