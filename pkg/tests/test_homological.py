import random

import pytest

from dglift import (
    BidegreeWindow,
    ChainMap,
    EnvelopeAlgebra,
    HomComplex,
    HomologicalError,
    Infeasible,
    base_change,
    build_split_system,
    ext_dims,
    free_module,
    make_semifree,
    naive_lift_check,
    null_homotopy,
    tensor_bimodule,
)

from oracle import brute_ext_dim


@pytest.fixture
def negative_control(even_tower):
    return make_semifree(even_tower, [("e", 0, 0), ("f", 3, 1)],
                         {("e", "f"): even_tower.gen("X")})


def test_hom_of_free_rank_one_is_the_module(even_tower):
    b = free_module(even_tower, "u")
    hom = HomComplex(b, b)
    for d in range(0, 5):
        for w in range(0, 4):
            assert hom.dim(d, w) == b.dimension(d, w)


def test_hom_complex_window_slices(even_tower):
    from dglift import hom_complex_window

    b = free_module(even_tower, "u")
    win = BidegreeWindow(0, 4, 3)
    slices = hom_complex_window(b, b, win)
    for (d, w), dim in slices.dims.items():
        assert dim == b.dimension(d, w)
        assert len(slices.matrices[(d, w)]) == dim
    # dX = 0 here, so every matrix column is zero
    assert all(not col for cols in slices.matrices.values() for col in cols)


def test_hom_differential_squares_to_zero(negative_control):
    n = negative_control
    hom = HomComplex(n, n)
    for d in range(-3, 4):
        for w in range(-1, 2):
            for alpha, lab in hom.slice_labels(d, w):
                img = hom.map_image(alpha, lab, d)
                # apply D once more by hand
                total = {}
                for beta, elem in img.items():
                    dd = n.apply_diff(elem)
                    if dd:
                        total[beta] = n.add_elem(total.get(beta, {}), dd)
                sign = -1 if (d - 1) % 2 else 1
                for (a, b), entry in n.diff.items():
                    if a not in img:
                        continue
                    piece = n.mul_elem(img[a], entry.scale_int(-sign))
                    if piece:
                        total[b] = n.add_elem(total.get(b, {}), piece)
                assert all(not v for v in total.values())


def test_identity_is_a_cycle(negative_control):
    f = ChainMap.identity(negative_control)
    assert f.is_chain_map()


def test_ext_of_free_module(even_tower):
    b = free_module(even_tower, "u")
    table = ext_dims(b, b, (0, 4), BidegreeWindow(0, 4, 4))
    assert table.total(0) == 1
    for i in range(1, 5):
        assert table.total(i) == 0


def test_ext_negative_control_profile(negative_control):
    win = BidegreeWindow(0, 3, 1)
    table = ext_dims(negative_control, negative_control, (0, 3), win)
    assert table.total(0) >= 1       # the identity class
    assert table.total(1) == 0
    assert table.total(2) == 0
    assert table.total(3) == 1       # the obstruction class f -> e


def test_ext_matches_brute_oracle(negative_control):
    win = BidegreeWindow(0, 3, 1)
    table = ext_dims(negative_control, negative_control, (0, 3), win)
    for i in range(0, 4):
        for w in range(table.weight_range[0], table.weight_range[1] + 1):
            assert table.dim(i, w) == brute_ext_dim(negative_control, negative_control, i, w)


def test_ext_shift_compatibility(koszul_xy):
    n = make_semifree(
        koszul_xy, [("e", 0, 0), ("g", 1, 1), ("h", 2, 1)],
        {("g", "h"): koszul_xy.one()},
    )
    win = BidegreeWindow(0, 4, 5)
    up = ext_dims(n, n.shift(1), (0, 2), win)
    flat = ext_dims(n, n, (1, 3), win)
    for i in (0, 1, 2):
        assert up.total(i) == flat.total(i + 1)


def test_ext_window_refusal(even_tower, negative_control):
    win = BidegreeWindow(0, 3, 1)
    p, _ = base_change(negative_control, win, 0)
    with pytest.raises(HomologicalError, match="window too small"):
        ext_dims(negative_control, p, (-6, -6), BidegreeWindow(0, 12, 12))


def test_null_homotopy_zero_map(negative_control):
    f = ChainMap(negative_control, negative_control, 0, {})
    h = null_homotopy(f)
    assert isinstance(h, ChainMap)
    assert not h.entries


def test_null_homotopy_of_boundary(negative_control):
    n = negative_control
    rng = random.Random(1)
    # random degree-1 graded map g, f = dg + gd is null-homotopic by construction
    entries = {}
    for alpha, e in enumerate(n.basis):
        img = {}
        for i, exps, bex in n.slice_labels(e.degree + 1, e.weight):
            if rng.random() < 0.7:
                img[i] = n.tower.monomial(exps, n.tower.base.monomial(bex))
        if img:
            entries[alpha] = img
    g = ChainMap(n, n, 1, entries)
    f_entries = {}
    for beta in range(len(n.basis)):
        v = n.apply_diff(g.entries.get(beta, {}))
        v = n.add_elem(v, g.apply(n.apply_diff(n.basis_elem(beta))))
        if v:
            f_entries[beta] = v
    f = ChainMap(n, n, 0, f_entries)
    assert f.is_chain_map()
    h = null_homotopy(f)
    assert isinstance(h, ChainMap)
    # verify f = dh + hd exactly
    for beta in range(len(n.basis)):
        lhs = f.entries.get(beta, {})
        rhs = n.apply_diff(h.entries.get(beta, {}))
        rhs = n.add_elem(rhs, h.apply(n.apply_diff(n.basis_elem(beta))))
        assert n.elem_eq(lhs, rhs)


def test_null_homotopy_of_identity_fails(negative_control):
    h = null_homotopy(ChainMap.identity(negative_control))
    assert isinstance(h, Infeasible)


def test_chain_map_rejects_inhomogeneous_entries(negative_control):
    from dglift import ModuleError

    n = negative_control
    with pytest.raises(ModuleError, match="homogeneous"):
        ChainMap(n, n, 0, {1: {0: n.tower.gen("X")}})


def test_null_homotopy_requires_chain_map(even_tower):
    # two generators in the same bidegree; swapping them is degree-0 but not a
    # chain map when only one has a differential
    n = make_semifree(
        even_tower,
        [("e", 0, 0), ("e2", 0, 0), ("f", 3, 1)],
        {("e", "f"): even_tower.gen("X")},
    )
    swap = ChainMap(n, n, 0, {0: n.basis_elem(1), 1: n.basis_elem(0), 2: n.basis_elem(2)})
    assert not swap.is_chain_map()
    with pytest.raises(HomologicalError, match="chain map"):
        null_homotopy(swap)


def test_naive_lift_free_module(even_tower):
    b = free_module(even_tower, "u")
    res = naive_lift_check(b)
    assert res.split
    img = res.rho.entries[0]
    assert res.module.elem_eq(img, res.module.basis_elem(0))
    assert res.module.basis[0].name == "u⊗1"


def test_naive_lift_negative_control(negative_control):
    res = naive_lift_check(negative_control)
    assert res.status == "OBSTRUCTED"
    w = res.witness
    system, unknowns, labels, *_ = build_split_system(negative_control)
    inf = Infeasible(combo=w.combo, value=w.value)
    assert inf.verify(system)
    assert any("chain condition" in eq for eq in w.equations)


def test_naive_lift_answer_stable_under_window_growth(negative_control, even_tower, koszul_xy):
    res_small = naive_lift_check(negative_control)
    res_big = naive_lift_check(
        negative_control, window=BidegreeWindow(0, 6, 3)
    )
    assert res_small.status == res_big.status == "OBSTRUCTED"

    n3 = make_semifree(even_tower, [("e", 0, 0)], {})
    assert naive_lift_check(n3).split
    assert naive_lift_check(n3, window=BidegreeWindow(0, 5, 4)).split

    rigid = make_semifree(
        koszul_xy, [("e", 0, 0), ("g", 1, 1), ("h", 2, 1)],
        {("g", "h"): koszul_xy.one()},
    )
    assert naive_lift_check(rigid).split
    assert naive_lift_check(rigid, window=BidegreeWindow(0, 5, 4)).split


def test_naive_lift_split_idempotent(koszul_xy):
    n = make_semifree(
        koszul_xy, [("e", 0, 0), ("g", 1, 1), ("h", 2, 1)],
        {("g", "h"): koszul_xy.one()},
    )
    res = naive_lift_check(n)
    assert res.split
    assert res.rho.is_chain_map()
    rho_pi = res.rho.compose(res.pi)
    assert rho_pi.compose(rho_pi) == rho_pi
    # pi rho = id
    assert res.pi.compose(res.rho) == ChainMap.identity(n)


def test_naive_lift_splits_nonrigid_module(mixed_tower):
    # z = X1 y - X2 x is a boundary in the mixed tower, so N = {e, f: df = ez}
    # is isomorphic to B + a shifted twist of B: it splits even though the
    # rigidity hypothesis fails (Ext^2(N,N) != 0), showing the solver works on
    # the splitting system itself rather than on the sufficient Ext condition
    z = mixed_tower.variable_diff(2)
    n = make_semifree(mixed_tower, [("e", 0, 0), ("f", 2, 2)],
                      {("e", "f"): z})
    table = ext_dims(n, n, (1, 2), BidegreeWindow(0, 4, 4))
    assert table.total(2) >= 1
    res = naive_lift_check(n)
    assert res.split
    assert res.rho.is_chain_map()
    for beta in range(len(n.basis)):
        assert n.elem_eq(res.pi.apply(res.rho.entries[beta]), n.basis_elem(beta))


def test_naive_lift_respects_a_prefix(mixed_tower):
    # over A = B the map pi_N is the identity: always split
    n = make_semifree(mixed_tower, [("e", 0, 0), ("f", 2, 2)],
                      {("e", "f"): mixed_tower.variable_diff(2)})
    res = naive_lift_check(n, a_prefix=mixed_tower.n)
    assert res.split


def test_naive_lift_mid_prefix_split(mixed_tower):
    # A = Q[x,y]<X1,X2>, B = A<Y>: df = e z with z = dY = -d(X1 X2) and
    # X1 X2 in A, so a change of basis over A trivializes the module
    z = mixed_tower.variable_diff(2)
    n = make_semifree(mixed_tower, [("e", 0, 0), ("f", 2, 2)], {("e", "f"): z})
    res = naive_lift_check(n, a_prefix=2)
    assert res.split
    assert res.rho.is_chain_map()


def test_naive_lift_mid_prefix_obstructed(mixed_tower):
    # df = e w with w = Y + X1 X2 a nontrivial homology class of B = A<Y>:
    # rho(f) = f (x) 1 is forced and the chain condition fails
    w = mixed_tower.gen("Y") + mixed_tower.gen("X1") * mixed_tower.gen("X2")
    assert w.differential().is_zero()
    n = make_semifree(mixed_tower, [("e", 0, 0), ("f", 3, 2)], {("e", "f"): w})
    res = naive_lift_check(n, a_prefix=2)
    assert res.status == "OBSTRUCTED"
    system, *_ = build_split_system(n, a_prefix=2)
    assert Infeasible(combo=res.witness.combo, value=res.witness.value).verify(system)
    # over A = base ring the same module is also obstructed
    res0 = naive_lift_check(n, a_prefix=0)
    assert res0.status == "OBSTRUCTED"


def test_weight_zero_projection_of_a_splitting_splits(even_tower):
    # homogeneous-splitting lemma: the weight-0 part of any splitting is again
    # a splitting, because pi_N and the differentials are weight-homogeneous
    n = make_semifree(even_tower, [("u", 0, 0), ("v", 2, 2)], {})
    res = naive_lift_check(n)
    assert res.split
    p, pi, rho = res.module, res.pi, res.rho
    pos = {b.name: i for i, b in enumerate(p.basis)}

    # kappa = (u (x) X) - (u (x) 1)·X is a degree-2 weight-1 cycle in ker pi
    kappa = p.sub_elem(
        p.basis_elem(pos["u⊗X"]),
        p.mul_elem(p.basis_elem(pos["u⊗1"]), even_tower.gen("X")),
    )
    assert not p.apply_diff(kappa)
    assert n.elem_eq(pi.apply(kappa), {})

    entries = dict(rho.entries)
    entries[1] = p.add_elem(entries[1], kappa)  # perturb rho(v) off weight 2
    rho_prime = ChainMap(n, p, 0, entries)
    assert rho_prime.is_chain_map()
    for beta in range(len(n.basis)):
        assert n.elem_eq(pi.apply(rho_prime.entries[beta]), n.basis_elem(beta))

    # project each image back to the generator's weight
    proj_entries = {}
    for beta, e in enumerate(n.basis):
        out = {}
        for i, c in rho_prime.entries[beta].items():
            want = e.weight - p.basis[i].weight
            keep = c.tower.zero()
            for exps, poly in c.terms.items():
                var_wt = sum(m * v.weight for m, v in zip(exps, c.tower.variables))
                part = poly.graded_component(want - var_wt)
                if not part.is_zero():
                    keep = keep + c.tower.monomial(exps, part)
            if not keep.is_zero():
                out[i] = keep
        proj_entries[beta] = out
    rho0 = ChainMap(n, p, 0, proj_entries)
    assert rho0.entries != rho_prime.entries
    assert rho0.is_chain_map()
    for beta in range(len(n.basis)):
        assert n.elem_eq(pi.apply(rho0.entries[beta]), n.basis_elem(beta))


def test_obstruction_visible_in_ext_against_ideal(negative_control, even_tower):
    env = EnvelopeAlgebra(even_tower, 0)
    j = env.diagonal_ideal_module(6)
    nj = tensor_bimodule(negative_control, j, BidegreeWindow(0, 9, 5))
    table = ext_dims(negative_control, nj, (1, 1), BidegreeWindow(0, 3, 1))
    assert table.total(1) >= 1
