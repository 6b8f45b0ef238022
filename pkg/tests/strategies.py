"""Hypothesis strategies and small helpers shared by the tests."""
from hypothesis import strategies as st

from dysonrg.algebra import SpinPolynomial


def site_sets(lo, hi, max_size=3):
    return st.lists(st.integers(lo, hi), max_size=max_size, unique=True).map(lambda v: tuple(sorted(v)))


coefs = st.floats(-2.0, 2.0, allow_nan=False).filter(lambda v: abs(v) > 1e-6)


@st.composite
def polys(draw, sigma=(0, 5), block=(-3, 0), max_terms=5):
    terms = draw(st.dictionaries(st.tuples(site_sets(*sigma), site_sets(*block)), coefs,
                                 min_size=1, max_size=max_terms))
    return SpinPolynomial(terms)


@st.composite
def boundary_polys(draw, max_terms=4, scale=0.3):
    """Keys in the boundary class: X >= 0 meeting {0, 1}, Y < 0."""
    def key(x_extra, anchor, y):
        return (tuple(sorted(set(x_extra) | {anchor})), y)

    items = draw(st.lists(st.tuples(site_sets(2, 5, 2), st.sampled_from([0, 1]), site_sets(-3, -1, 2),
                                    st.floats(-scale, scale, allow_nan=False)),
                          min_size=1, max_size=max_terms))
    terms = {}
    for x, a, y, v in items:
        k = key(x, a, y)
        terms[k] = terms.get(k, 0.0) + v
    return SpinPolynomial(terms)


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))

