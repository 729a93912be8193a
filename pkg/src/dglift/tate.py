"""Tate's construction: adjoin variables degree by degree to kill homology,
building truncated DG algebra resolutions of R/I.

All homology statements are per weight slice and carry their weight bound;
nothing here claims anything beyond the bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .base_ring import BasePoly, PolyRing, nullspace_basis
from .dg_algebra import AlgebraElement, TowerAlgebra


class TateError(ValueError):
    pass


@dataclass
class HomologyTable:
    """dim H_hdeg per weight slice, with chosen cycle representatives."""

    hdeg: int
    weight_bound: int
    dims: dict = dc_field(default_factory=dict)       # weight -> dimension
    reps: dict = dc_field(default_factory=dict)       # weight -> [AlgebraElement]

    def dim(self, w: int) -> int:
        return self.dims.get(w, 0)

    def total(self) -> int:
        return sum(self.dims.values())

    def rows(self) -> list[list[int]]:
        return [[w, d] for w, d in sorted(self.dims.items()) if d]


class _Reducer:
    """Incremental row reduction used to pick homology representatives
    deterministically (pivot = least column; rows processed in input order)."""

    def __init__(self, field):
        self.field = field
        self.rows: list[tuple[int, dict]] = []  # (pivot col, normalized row)

    def reduce(self, vec: dict) -> dict:
        field = self.field
        vec = dict(vec)
        for p, row in self.rows:
            m = vec.get(p)
            if not m:
                continue
            m = field.neg(m)
            for c, v in row.items():
                s = field.add(vec.get(c, field.zero()), field.mul(m, v))
                if s:
                    vec[c] = s
                else:
                    vec.pop(c, None)
        return vec

    def insert(self, vec: dict) -> bool:
        """Reduce and insert; returns True when vec was independent."""
        red = self.reduce(vec)
        if not red:
            return False
        p = min(red)
        inv = self.field.inv(red[p])
        self.rows.append((p, {c: self.field.mul(v, inv) for c, v in red.items()}))
        self.rows.sort(key=lambda t: t[0])
        return True


def homology_dims(tower: TowerAlgebra, hdeg: int, weight_bound: int) -> HomologyTable:
    """Exact dim H_hdeg(tower) per weight <= weight_bound, with representatives.

    Representatives are nullspace vectors of the differential (deterministic
    reduced form) that stay independent after reduction modulo boundaries.
    """
    if hdeg < 0:
        raise TateError("homological degree must be >= 0")
    field = tower.base.field
    table = HomologyTable(hdeg=hdeg, weight_bound=weight_bound)
    for w in range(weight_bound + 1):
        basis0 = tower.slice_basis(hdeg, w)
        if not basis0:
            continue
        col = {lab: j for j, lab in enumerate(basis0)}

        def coords(elem: AlgebraElement) -> dict:
            out = {}
            for exps, poly in elem.terms.items():
                for bex, scalar in poly.terms.items():
                    out[col[(exps, bex)]] = scalar
            return out

        rows: dict = {}
        for j, (exps, bex) in enumerate(basis0):
            mono = tower.monomial(exps, tower.base.monomial(bex))
            for (dexps, dpoly) in mono.differential().terms.items():
                for dbex, scalar in dpoly.terms.items():
                    rows.setdefault((dexps, dbex), {})[j] = scalar
        cycles = nullspace_basis(field, [rows[k] for k in sorted(rows)], len(basis0))

        reducer = _Reducer(field)
        for exps, bex in tower.slice_basis(hdeg + 1, w):
            mono = tower.monomial(exps, tower.base.monomial(bex))
            reducer.insert(coords(mono.differential()))

        reps = []
        for vec in cycles:
            sparse = {j: v for j, v in enumerate(vec) if v}
            if reducer.insert(sparse):
                elem = tower.zero()
                for j, v in sorted(sparse.items()):
                    exps, bex = basis0[j]
                    elem = elem + tower.monomial(exps, tower.base.monomial(bex, v))
                reps.append(elem)
        if reps:
            table.dims[w] = len(reps)
            table.reps[w] = reps
        else:
            table.dims[w] = 0
    return table


def _fresh_name(tower: TowerAlgebra, counter: int) -> tuple[str, int]:
    used = set(tower.base.names) | {v.name for v in tower.variables}
    while True:
        counter += 1
        name = f"X{counter}"
        if name not in used:
            return name, counter


def tate_step(tower: TowerAlgebra, hdeg: int, weight_bound: int) -> TowerAlgebra:
    """Kill H_hdeg by adjoining degree-(hdeg+1) variables below the weight bound.

    Classes are killed one at a time, lowest weight first, recomputing homology
    after each adjunction: multiples of an already-killed class become
    boundaries, so this adjoins one variable per module generator of H_hdeg
    rather than one per weight-slice basis vector.

    Requires H_j = 0 for 1 <= j < hdeg within the bound (checked).
    """
    if hdeg < 1:
        raise TateError("tate_step needs hdeg >= 1")
    for j in range(1, hdeg):
        lower = homology_dims(tower, j, weight_bound)
        if lower.total():
            raise TateError(
                f"H_{j} is not yet zero below weight {weight_bound}; "
                f"kill it before degree {hdeg}"
            )
    out = tower
    counter = len(tower.variables)
    while True:
        table = homology_dims(out, hdeg, weight_bound)
        if not table.total():
            return out
        w = min(w for w, d in table.dims.items() if d)
        rep = table.reps[w][0]
        name, counter = _fresh_name(out, counter)
        out = out.adjoin(name, hdeg + 1, w, rep)


@dataclass
class TateResolution:
    tower: TowerAlgebra
    hbound: int
    weight_bound: int
    h0: HomologyTable
    stages: list = dc_field(default_factory=list)  # (hdeg, [names adjoined])


def tate_resolution(ring: PolyRing, generators: list[BasePoly], hbound: int,
                    weight_bound: int, flavor: str = "divided") -> TateResolution:
    """Iterate tate_step for hdeg = 1..hbound-1 starting from the Koszul stage
    on the ideal generators; re-verifies H_j = 0 for 1 <= j < hbound within
    the weight bound afterwards."""
    if hbound < 1:
        raise TateError("hbound must be >= 1")
    tower = TowerAlgebra(ring, flavor)
    counter = 0
    names = []
    for g in generators:
        if g.is_zero():
            raise TateError("zero ideal generator")
        w = g.weight()
        if w is None:
            raise TateError("ideal generators must be weight-homogeneous")
        name, counter = _fresh_name(tower, counter)
        tower = tower.adjoin(name, 1, w, tower.from_poly(g))
        names.append(name)
    stages = [(0, names)]

    for hdeg in range(1, hbound):
        before = {v.name for v in tower.variables}
        tower = tate_step(tower, hdeg, weight_bound)
        stages.append((hdeg, [v.name for v in tower.variables if v.name not in before]))

    for j in range(1, hbound):
        if homology_dims(tower, j, weight_bound).total():
            raise TateError(f"construction left H_{j} nonzero; this is a bug")

    h0 = homology_dims(tower, 0, weight_bound)
    return TateResolution(
        tower=tower, hbound=hbound, weight_bound=weight_bound, h0=h0, stages=stages
    )
