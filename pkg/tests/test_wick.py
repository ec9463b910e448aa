from fractions import Fraction
import numpy as np
import pytest

from src.spectral.core import FieldPath, forward
from src.wick.algebra import (
    WickMonomial, wick_product_expand, wick_polynomial, gaussian_moment, isserlis_oracle, permanent,
    wick_expectation, check_product_identity, random_gram, poly_multiply,
)
from src.wick.trees import (
    LEAF, CHERRY, CHAIN, CHAIN3, BALANCED, BinaryTree, trees_of_degree, enumerate_trees, catalan,
    planar_multiplicities, tree_from_shape, tree_table, bilinear_B, tree_term,
)
from src.utils.errors import ArgumentError, StructuralError


def test_hermite_monomial_in_one_variable():
    c = Fraction(3, 4)
    assert wick_polynomial((2,), [[c]]) == {(2,): 1, (0,): -c}
    assert wick_polynomial((3,), [[c]]) == {(3,): 1, (1,): -3 * c}


def test_gaussian_moments():
    cov = [[Fraction(2)]]
    assert gaussian_moment((4,), cov) == 3 * 4
    assert gaussian_moment((3,), cov) == 0
    cross = [[Fraction(1), Fraction(1, 2)], [Fraction(1, 2), Fraction(1)]]
    assert gaussian_moment((1, 1), cross) == Fraction(1, 2)


def test_wick_polynomials_are_centered():
    rng = np.random.default_rng(0)
    cov = random_gram(2, rng)
    for exps in [(1, 0), (2, 0), (1, 1), (2, 2), (3, 1)]:
        assert isserlis_oracle(wick_polynomial(exps, cov), cov) == 0


def test_product_coefficients():
    assert wick_product_expand(2, 1) == [(2, 1, 0, 1), (1, 0, 1, 2)]
    assert [row[3] for row in wick_product_expand(2, 2)] == [1, 4, 2]
    with pytest.raises(ArgumentError):
        wick_product_expand(-1, 2)


@pytest.mark.parametrize("m,n", [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)])
def test_product_identity(m, n):
    cov = random_gram(2, np.random.default_rng(m * 10 + n))
    same, lhs, rhs = check_product_identity(m, n, cov)
    assert same
    assert lhs == rhs


def test_permanent_and_second_moment():
    assert permanent([[1, 2], [3, 4]]) == 10
    assert permanent([]) == 1
    c = Fraction(5, 7)
    gram = [[c]]
    lhs = wick_expectation([0, 0], gram)
    square = poly_multiply(wick_polynomial((2,), gram), wick_polynomial((2,), gram))
    assert lhs == 2 * c ** 2 == isserlis_oracle(square, gram)


def test_wick_monomial_sorts_arguments():
    m = WickMonomial((1, 0, 1), Fraction(1, 2))
    assert m.arguments == (0, 1, 1)
    assert m.exponents(2) == (1, 2)
    assert m.degree == 3


def test_isserlis_degree_cap():
    with pytest.raises(ArgumentError):
        isserlis_oracle({(10,): 1}, [[1]])


@pytest.mark.parametrize("tree,count", [(LEAF, 1), (CHERRY, 1), (CHAIN, 2), (CHAIN3, 4), (BALANCED, 1)])
def test_tree_counts(tree, count):
    assert tree.count == count


@pytest.mark.parametrize("n", range(0, 7))
def test_counts_sum_to_catalan(n):
    trees = trees_of_degree(n)
    assert sum(t.count for t in trees) == catalan(n)
    assert planar_multiplicities(n) == {t.shape: t.count for t in trees}


def test_tree_classes_are_unordered():
    assert BinaryTree.join(LEAF, CHERRY) == BinaryTree.join(CHERRY, LEAF)
    assert len(trees_of_degree(3)) == 2
    with pytest.raises(StructuralError):
        BinaryTree((LEAF,))


def test_shape_roundtrip():
    for tree in enumerate_trees(5):
        assert tree_from_shape(tree.shape) == tree
    for bad in ["(o)", "x", "(oo)o"]:
        with pytest.raises(ArgumentError):
            tree_from_shape(bad)


def test_tree_table_rows():
    rows = tree_table(2)
    assert rows[0] == {"shape": "o", "degree": 0, "count": 1}
    assert [r["degree"] for r in rows] == [0, 1, 2]
    with pytest.raises(ArgumentError):
        enumerate_trees(13)


def _path(grid, rng, steps=5):
    values = rng.standard_normal((steps,) + grid.shape)
    return FieldPath(0.01 * np.arange(steps), forward(values, grid))


def test_bilinear_B_is_symmetric_and_starts_at_zero(grid1d, rng):
    f, g = _path(grid1d, rng), _path(grid1d, rng)
    fg = bilinear_B(f, g)
    gf = bilinear_B(g, f)
    assert np.max(np.abs(fg.coeffs - gf.coeffs)) < 1e-13
    assert np.all(fg.coeffs[0] == 0)
    assert np.max(np.abs(fg.coeffs[-1])) > 0


def test_tree_term_recursion(grid1d, rng):
    X = _path(grid1d, rng)
    cache = {}
    chain = tree_term(CHAIN, X, cache=cache)
    assert set(cache) == {LEAF.shape, CHERRY.shape, CHAIN.shape}
    cherry = bilinear_B(X, X)
    assert np.max(np.abs(chain.coeffs - bilinear_B(cherry, X).coeffs)) < 1e-13
    assert tree_term(LEAF, X) is X
