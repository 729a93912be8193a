import pytest

from dglift import Field, PolyRing, TowerAlgebra


@pytest.fixture
def QQ():
    return Field()


@pytest.fixture
def F5():
    return Field(5)


@pytest.fixture
def ring_xy(QQ):
    return PolyRing(QQ, ("x", "y"), (1, 1))


@pytest.fixture
def koszul_xy(ring_xy):
    """B = Q[x,y]<X1,X2> with dX1 = x, dX2 = y."""
    t = TowerAlgebra(ring_xy, "divided")
    t = t.adjoin("X1", 1, 1, t.gen("x"))
    return t.adjoin("X2", 1, 1, t.gen("y"))


@pytest.fixture
def mixed_tower(koszul_xy):
    """Koszul on x,y plus an even variable killing the cycle X1 y - X2 x."""
    z = koszul_xy.gen("X1") * koszul_xy.gen("y") - koszul_xy.gen("X2") * koszul_xy.gen("x")
    return koszul_xy.adjoin("Y", 2, 2, z)


@pytest.fixture
def even_tower(QQ):
    """B = Q<X> with |X| = 2, dX = 0, over the empty base ring."""
    ring = PolyRing(QQ, (), ())
    return TowerAlgebra(ring, "divided").adjoin("X", 2, 1, None)
