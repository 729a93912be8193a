"""Exact coefficient fields, weighted polynomial rings, and exact linear solving.

Everything downstream (homology ranks, Ext tables, splitting certificates)
depends on this layer being exact: scalars are `fractions.Fraction` over Q or
machine ints in [0, p) over a prime field, never floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _is_prime(p: int) -> bool:
    # deterministic Miller-Rabin, valid for word-sized p
    if p < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if p % q == 0:
            return p == q
    d, s = p - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, p)
        if x in (1, p - 1):
            continue
        for _ in range(s - 1):
            x = x * x % p
            if x == p - 1:
                break
        else:
            return False
    return True


class Field:
    """The rationals (p is None) or the prime field F_p.

    Scalars are raw values: Fraction over Q, int in [0, p) over F_p.
    """

    def __init__(self, p: int | None = None):
        if p is not None and not _is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p

    @property
    def is_rational(self) -> bool:
        return self.p is None

    def of(self, numer, denom=1):
        """Build a scalar from integers (or a Fraction)."""
        if self.p is None:
            return Fraction(numer, denom)
        if denom % self.p == 0:
            raise ZeroDivisionError(f"denominator {denom} is 0 mod {self.p}")
        return numer * pow(denom % self.p, -1, self.p) % self.p

    def zero(self):
        return Fraction(0) if self.p is None else 0

    def one(self):
        return Fraction(1) if self.p is None else 1

    def add(self, a, b):
        return a + b if self.p is None else (a + b) % self.p

    def sub(self, a, b):
        return a - b if self.p is None else (a - b) % self.p

    def mul(self, a, b):
        return a * b if self.p is None else a * b % self.p

    def neg(self, a):
        return -a if self.p is None else (-a) % self.p

    def inv(self, a):
        if not a:
            raise ZeroDivisionError("inverse of zero")
        return 1 / a if self.p is None else pow(a, -1, self.p)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def __eq__(self, other):
        return isinstance(other, Field) and self.p == other.p

    def __hash__(self):
        return hash(("Field", self.p))

    def __repr__(self):
        return "Q" if self.p is None else f"F{self.p}"


class PolyRing:
    """Descriptor of F[x_1..x_k] with a strictly positive weight per variable."""

    def __init__(self, field: Field, names: tuple[str, ...], weights: tuple[int, ...]):
        if len(names) != len(weights):
            raise ValueError("one weight per variable required")
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        for name, w in zip(names, weights):
            if not (isinstance(w, int) and w > 0):
                raise ValueError(f"weight of {name} must be a positive integer, got {w}")
        self.field = field
        self.names = tuple(names)
        self.weights = tuple(weights)

    def __eq__(self, other):
        return (
            isinstance(other, PolyRing)
            and self.field == other.field
            and self.names == other.names
            and self.weights == other.weights
        )

    def __hash__(self):
        return hash((self.field, self.names, self.weights))

    def __repr__(self):
        field = repr(self.field)
        if not self.names:
            return field
        vars_ = ",".join(f"{n}:{w}" for n, w in zip(self.names, self.weights))
        return f"{field}[{vars_}]"

    # --- element constructors ------------------------------------------

    def zero(self) -> "BasePoly":
        return BasePoly(self, {})

    def one(self) -> "BasePoly":
        return self.constant(self.field.one())

    def constant(self, scalar) -> "BasePoly":
        if not scalar:
            return self.zero()
        return BasePoly(self, {(0,) * len(self.names): scalar})

    def var(self, name: str) -> "BasePoly":
        i = self.names.index(name)
        exps = tuple(1 if j == i else 0 for j in range(len(self.names)))
        return BasePoly(self, {exps: self.field.one()})

    def monomial(self, exps: tuple[int, ...], scalar=None) -> "BasePoly":
        if scalar is None:
            scalar = self.field.one()
        if not scalar:
            return self.zero()
        return BasePoly(self, {tuple(exps): scalar})

    # --- enumeration ----------------------------------------------------

    def term_weight(self, exps: tuple[int, ...]) -> int:
        return sum(e * w for e, w in zip(exps, self.weights))

    def monomials_of_weight(self, w: int) -> list[tuple[int, ...]]:
        """All exponent vectors of weight exactly w, lexicographically sorted."""
        if w < 0:
            return []
        out: list[tuple[int, ...]] = []

        def rec(i: int, left: int, acc: list[int]):
            if i == len(self.names):
                if left == 0:
                    out.append(tuple(acc))
                return
            wi = self.weights[i]
            for e in range(left // wi + 1):
                acc.append(e)
                rec(i + 1, left - e * wi, acc)
                acc.pop()

        rec(0, w, [])
        out.sort()
        return out


class BasePoly:
    """Sparse polynomial: exponent vector -> nonzero field scalar."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: PolyRing, terms: dict):
        self.ring = ring
        self.terms = terms

    def _check(self, other: "BasePoly"):
        if self.ring is not other.ring and self.ring != other.ring:
            raise ValueError(f"mismatched rings {self.ring!r} and {other.ring!r}")

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, BasePoly) and self.ring == other.ring and self.terms == other.terms

    def __add__(self, other: "BasePoly") -> "BasePoly":
        self._check(other)
        field = self.ring.field
        out = dict(self.terms)
        for exps, c in other.terms.items():
            s = field.add(out.get(exps, field.zero()), c)
            if s:
                out[exps] = s
            else:
                out.pop(exps, None)
        return BasePoly(self.ring, out)

    def __neg__(self) -> "BasePoly":
        field = self.ring.field
        return BasePoly(self.ring, {e: field.neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "BasePoly") -> "BasePoly":
        return self + (-other)

    def __mul__(self, other: "BasePoly") -> "BasePoly":
        self._check(other)
        field = self.ring.field
        out: dict = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                exps = tuple(a + b for a, b in zip(ea, eb))
                c = field.mul(ca, cb)
                s = field.add(out.get(exps, field.zero()), c)
                if s:
                    out[exps] = s
                else:
                    out.pop(exps, None)
        return BasePoly(self.ring, out)

    def scale(self, scalar) -> "BasePoly":
        if not scalar:
            return self.ring.zero()
        field = self.ring.field
        return BasePoly(self.ring, {e: field.mul(c, scalar) for e, c in self.terms.items()})

    def scale_int(self, n: int) -> "BasePoly":
        return self.scale(self.ring.field.of(n))

    def graded_component(self, w: int) -> "BasePoly":
        """The weight-w homogeneous part; summing over all w recovers the polynomial."""
        tw = self.ring.term_weight
        return BasePoly(self.ring, {e: c for e, c in self.terms.items() if tw(e) == w})

    def weights(self) -> set[int]:
        tw = self.ring.term_weight
        return {tw(e) for e in self.terms}

    def weight(self) -> int | None:
        """Weight if homogeneous (zero counts as homogeneous of any weight)."""
        ws = self.weights()
        if not ws:
            return 0
        if len(ws) > 1:
            return None
        return ws.pop()

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                f"{n}^{e}" if e > 1 else n for n, e in zip(self.ring.names, exps) if e
            )
            bits.append(f"{c}*{mono}" if mono else f"{c}")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# Exact linear solving
# ---------------------------------------------------------------------------


@dataclass
class LinearSystem:
    """A x = b over a field; rows are sparse {col: scalar} maps."""

    field: Field
    rows: list[dict]
    rhs: list
    ncols: int

    def __post_init__(self):
        if len(self.rows) != len(self.rhs):
            raise ValueError("one right-hand side entry per row required")
        for r in self.rows:
            for c in r:
                if not (0 <= c < self.ncols):
                    raise ValueError(f"column {c} out of range")


@dataclass
class LinearSolution:
    solution: list
    nullspace: list[list]


@dataclass
class Infeasible:
    """Certificate: the given combination of input rows reduces to 0 = value."""

    combo: dict  # original row index -> multiplier
    value: object  # nonzero scalar

    def verify(self, system: LinearSystem) -> bool:
        field = system.field
        acc: dict = {}
        rhs = field.zero()
        for i, m in self.combo.items():
            for c, v in system.rows[i].items():
                s = field.add(acc.get(c, field.zero()), field.mul(m, v))
                if s:
                    acc[c] = s
                else:
                    acc.pop(c, None)
            rhs = field.add(rhs, field.mul(m, system.rhs[i]))
        return not acc and rhs == self.value and bool(self.value)


def _reduce(field: Field, rows: list[dict], rhs: list, track: bool):
    """Sparse Gauss-Jordan elimination.

    Pivot rows are chosen sparsest-first (then lowest index), pivot columns by
    fewest occurrences among remaining rows (then lowest index), so runs are
    reproducible and fill stays small.
    """
    work = [dict(r) for r in rows]
    vals = list(rhs)
    combos = [{i: field.one()} for i in range(len(rows))] if track else None
    used = [False] * len(work)
    pivots: dict[int, int] = {}  # col -> row index

    def axpy(dst: dict, src: dict, m):
        for c, v in src.items():
            s = field.add(dst.get(c, field.zero()), field.mul(m, v))
            if s:
                dst[c] = s
            else:
                dst.pop(c, None)

    while True:
        best = None
        for i, r in enumerate(work):
            if used[i] or not r:
                continue
            key = (len(r), i)
            if best is None or key < best:
                best = key
        if best is None:
            break
        i = best[1]
        counts = {}
        for j, r in enumerate(work):
            if used[j] or not r:
                continue
            for c in r:
                if c in work[i]:
                    counts[c] = counts.get(c, 0) + 1
        col = min(work[i], key=lambda c: (counts.get(c, 0), c))
        inv = field.inv(work[i][col])
        work[i] = {c: field.mul(v, inv) for c, v in work[i].items()}
        vals[i] = field.mul(vals[i], inv)
        if track:
            combos[i] = {k: field.mul(v, inv) for k, v in combos[i].items()}
        for j in range(len(work)):
            if j == i:
                continue
            m = work[j].get(col)
            if m is None:
                continue
            m = field.neg(m)
            axpy(work[j], work[i], m)
            vals[j] = field.add(vals[j], field.mul(m, vals[i]))
            if track:
                axpy(combos[j], combos[i], m)
        pivots[col] = i
        used[i] = True

    return work, vals, combos, used, pivots


def solve_linear(system: LinearSystem, track_witness: bool = True):
    """Exact solve: one solution plus a nullspace basis, or an Infeasible witness."""
    field = system.field
    work, vals, combos, used, pivots = _reduce(field, system.rows, system.rhs, track_witness)

    for i in range(len(work)):
        if not used[i] and vals[i]:
            combo = combos[i] if track_witness else {}
            return Infeasible(combo=combo, value=vals[i])

    zero = field.zero()
    solution = [zero] * system.ncols
    for col, i in pivots.items():
        solution[col] = vals[i]

    free = [c for c in range(system.ncols) if c not in pivots]
    nullspace = []
    for f in free:
        vec = [zero] * system.ncols
        vec[f] = field.one()
        for col, i in pivots.items():
            v = work[i].get(f)
            if v:
                vec[col] = field.neg(v)
        nullspace.append(vec)
    return LinearSolution(solution=solution, nullspace=nullspace)


def matrix_rank(field: Field, rows: list[dict]) -> int:
    _, _, _, _, pivots = _reduce(field, rows, [field.zero()] * len(rows), False)
    return len(pivots)


def nullspace_basis(field: Field, rows: list[dict], ncols: int) -> list[list]:
    sys = LinearSystem(field, rows, [field.zero()] * len(rows), ncols)
    res = solve_linear(sys, track_witness=False)
    assert isinstance(res, LinearSolution)
    return res.nullspace
