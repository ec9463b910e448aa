# src/wick/trees.py

"""
Binary trees of the perturbative Burgers expansion u = sum c(tau) X^tau with
X^leaf = X and X^(tau1 tau2) = B(X^tau1, X^tau2), B(f, g) = J d_x(fg).

Trees are unordered: children are kept in canonical (degree, shape) order,
so each isomorphism class has exactly one representative. Shapes print as
"o" for the leaf and "(ab)" for a node.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from math import comb

from src.spectral.core import FieldPath, dealiased_product, derivative, duhamel_path, project_modes
from src.utils.errors import ArgumentError, StructuralError

logger = logging.getLogger(__name__)

MAX_TREE_DEGREE = 12


@dataclass(frozen=True)
class BinaryTree:
    children: tuple = ()

    def __post_init__(self):
        if len(self.children) not in (0, 2):
            raise StructuralError("A tree node has zero or two children")
        if self.children:
            ordered = tuple(sorted(self.children, key=lambda t: (t.degree, t.shape)))
            object.__setattr__(self, "children", ordered)

    @classmethod
    def join(cls, left, right):
        return cls((left, right))

    @property
    def is_leaf(self):
        return not self.children

    @property
    def degree(self):
        return _degree(self)

    @property
    def count(self):
        """Number of planar trees in the class, c(tau)."""
        return _count(self)

    @property
    def shape(self):
        return _shape(self)

    def __str__(self):
        return self.shape


@lru_cache(maxsize=None)
def _degree(tree):
    if tree.is_leaf:
        return 0
    a, b = tree.children
    return 1 + _degree(a) + _degree(b)


@lru_cache(maxsize=None)
def _count(tree):
    if tree.is_leaf:
        return 1
    a, b = tree.children
    if a == b:
        return _count(a) ** 2
    return 2 * _count(a) * _count(b)


@lru_cache(maxsize=None)
def _shape(tree):
    if tree.is_leaf:
        return "o"
    a, b = tree.children
    return f"({_shape(a)}{_shape(b)})"


def tree_from_shape(text):
    """Parse a shape string back into a tree."""
    def parse(i):
        if text[i] == "o":
            return BinaryTree(), i + 1
        if text[i] != "(":
            raise ArgumentError(f"Bad tree shape {text!r} at position {i}")
        left, i = parse(i + 1)
        right, i = parse(i)
        if i >= len(text) or text[i] != ")":
            raise ArgumentError(f"Bad tree shape {text!r}: missing ')'")
        return BinaryTree.join(left, right), i + 1

    tree, end = parse(0)
    if end != len(text):
        raise ArgumentError(f"Trailing characters in tree shape {text!r}")
    return tree


LEAF = BinaryTree()
CHERRY = BinaryTree.join(LEAF, LEAF)
CHAIN = BinaryTree.join(CHERRY, LEAF)
CHAIN3 = BinaryTree.join(CHAIN, LEAF)
BALANCED = BinaryTree.join(CHERRY, CHERRY)


@lru_cache(maxsize=None)
def trees_of_degree(n):
    """Isomorphism classes of degree n, in canonical order."""
    if n == 0:
        return (LEAF,)
    found = set()
    for i in range(n):
        for a in trees_of_degree(i):
            for b in trees_of_degree(n - 1 - i):
                found.add(BinaryTree.join(a, b))
    return tuple(sorted(found, key=lambda t: t.shape))


def enumerate_trees(max_degree):
    """All tree classes of degree <= max_degree with their degree and count."""
    if max_degree < 0 or max_degree > MAX_TREE_DEGREE:
        raise ArgumentError(f"max_degree must lie in 0..{MAX_TREE_DEGREE}, got {max_degree}")
    return [t for n in range(max_degree + 1) for t in trees_of_degree(n)]


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def planar_multiplicities(n):
    """Brute force: enumerate ordered trees of degree n and count them per class."""
    def planar(k):
        if k == 0:
            return [LEAF]
        out = []
        for i in range(k):
            for a in planar(i):
                for b in planar(k - 1 - i):
                    out.append(BinaryTree((a, b)))
        return out

    counts = {}
    for t in planar(n):
        counts[t.shape] = counts.get(t.shape, 0) + 1
    return counts


def tree_table(max_degree):
    """Rows {shape, degree, count} for export."""
    return [{"shape": t.shape, "degree": t.degree, "count": t.count} for t in enumerate_trees(max_degree)]


def bilinear_B(f, g, band=None):
    """
    B(f, g) = J d_x(fg) along a time grid, with the source frozen at left endpoints.
    With `band`, the product is projected onto |k| <= band before differentiation.
    """
    prod = dealiased_product(f.field, g.field)
    if band is not None:
        prod = project_modes(prod, band)
    return duhamel_path(FieldPath(f.times, derivative(prod, 0)))


def tree_term(tau, X, band=None, cache=None):
    """
    Evaluate X^tau recursively on the time grid of the path X.

    Args:
        tau (BinaryTree): Tree
        X (FieldPath): Leaf path
        band (int, optional): Galerkin band applied to every product
        cache (dict, optional): shape -> FieldPath memo shared across calls

    Returns:
        FieldPath
    """
    if cache is None:
        cache = {}
    if tau.shape in cache:
        return cache[tau.shape]
    if tau.is_leaf:
        out = X
    else:
        a, b = tau.children
        out = bilinear_B(tree_term(a, X, band, cache), tree_term(b, X, band, cache), band)
    cache[tau.shape] = out
    return out
