import pytest

from zerosum.groups import GroupSpec, automorphisms, build_group


@pytest.fixture(scope="session")
def G8():
    return build_group(GroupSpec.mdic(8, 3))


@pytest.fixture(scope="session")
def G8_5():
    return build_group(GroupSpec.mdic(8, 5))


@pytest.fixture(scope="session")
def G12():
    return build_group(GroupSpec.mdic(12, 5))


@pytest.fixture(scope="session")
def auts8(G8):
    return automorphisms(G8)


def seq(G, **kw):
    """seq(G, y1=7, x0=1) -> y^[7] . x"""
    from zerosum.sequences import Sequence

    mult = [0] * G.order
    for key, m in kw.items():
        has_x = key.startswith("x")
        k = int(key[1:]) if has_x else int(key[1:])
        mult[G.y_x_element(has_x, k)] += m
    return Sequence(G, mult)
