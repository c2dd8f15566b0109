import random

import pytest

from mqpot.algebra import algebra_build
from mqpot.bimodule import (BimoduleError, DualizingPair, TensorBimodule,
                            bimodule_iso, direct_sum, dualize,
                            extension_tensor_bimodule, is_action_closed,
                            morphism_dual, natural_bimodule, pair_tensor,
                            sub_bimodule, summand_complement)
from mqpot.scalar import RationalFunctions, Rationals, mat_mul_vec, rref, in_span

from test_algebra import build_f4_algebra, build_sec6_algebra


def kk_pair(alg):
    """The natural pair {K, K} realized through the canonical dual."""
    # K as a bimodule over itself: all blocks diagonal
    f = alg.field
    labels = list(alg.labels)
    blocks = [(alg.factor_of[s], alg.factor_of[s]) for s in range(alg.dim)]
    left, right = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for t in range(alg.dim):
            prod = alg.mul(alg.basis(s), alg.basis(t))
            lt.append([(u, c) for u, c in enumerate(prod) if c != f.zero])
            prod = alg.mul(alg.basis(t), alg.basis(s))
            rt.append([(u, c) for u, c in enumerate(prod) if c != f.zero])
        left.append(lt)
        right.append(rt)
    from mqpot.bimodule import Bimodule
    return Bimodule(alg, labels, blocks, left, right, name="K")


def test_dualize_natural_bimodule():
    A = build_f4_algebra()
    B13 = natural_bimodule(A, 0, 2, 2, name="B13")
    pair = dualize(B13)  # validation happens inside
    # the K side of the pairing realizes the trace on the rational factor
    one = pair.beta_bv(B13.basis_vec(0), pair.Bstar.basis_vec(0))
    assert one == A.unit_of_factor(0)


def test_pair_of_k_with_itself():
    A = build_f4_algebra()
    K = kk_pair(A)
    pair = dualize(K)
    # both Casimirs restrict to the sum of factor unity pairs: one term per
    # basis element with the Gram-dual partner
    f = A.field
    for (i, j, c) in pair.z1:
        assert K.blocks[i] == K.blocks[j]
    # identity reconstruction is already validated in the constructor


def test_pair_casimirs_gaussian():
    Q = Rationals()
    A = algebra_build(Q, {"factors": [
        {"name": "R1", "var": "t", "modulus": ["-1", "1"], "trace": ["1"]},
        {"name": "C3", "var": "t", "modulus": ["1", "0", "1"], "trace": ["1", "0"]}]})
    B = natural_bimodule(A, 0, 1, 1, name="B13")
    pair = dualize(B)
    # right projective basis over the complex side has one term, the left
    # one over the rationals has two
    assert len(pair.z1) == 1
    assert len(pair.z2) == 2


def test_pair_tensor_against_direct_dualization():
    """{R 1 2} (x) {C 2 3} is isomorphic as a pair to {C 1 3}."""
    A = build_f4_algebra()
    B12 = natural_bimodule(A, 0, 1, 0, name="B12")
    B23 = natural_bimodule(A, 1, 2, 2, name="B23")
    p1 = dualize(B12)
    p2 = dualize(B23)
    prod = pair_tensor(p1, p2)
    B13 = natural_bimodule(A, 0, 2, 2, name="B13")
    iso = bimodule_iso(prod.B, B13)
    assert iso is not None
    # the product's Casimirs satisfy the characterizing identities by the
    # constructor's validation; spot check the term counts
    assert len(prod.z1) >= 1 and len(prod.z2) >= 2


def test_morphism_dual_identity_and_scalar():
    A = build_f4_algebra()
    B = natural_bimodule(A, 0, 1, 0, name="B12")
    pair = dualize(B)
    f = A.field
    ident = [[f.one]]
    assert morphism_dual(ident, pair, pair) == [[f.one]]
    c = f.from_int(7)
    assert morphism_dual([[c]], pair, pair) == [[c]]


def test_casimir_transport_under_isomorphism():
    """A left-module isomorphism carries one pair Casimir to the other."""
    A = build_f4_algebra()
    B = natural_bimodule(A, 1, 2, 2, name="B23")
    pair = dualize(B)
    f = A.field
    rng = random.Random(4)
    # random bimodule automorphism of B23: right multiplication by a unit
    while True:
        a, b = rng.randint(-3, 3), rng.randint(-3, 3)
        if (a, b) != (0, 0):
            break
    # f(x) = x . (a + b i) on the complex side
    fa, fb = f.from_int(a), f.from_int(b)
    mat = [[fa, f.neg(fb)], [fb, fa]]
    from mqpot.bimodule import is_bimodule_morphism
    assert is_bimodule_morphism(B, B, mat)
    fstar = morphism_dual(mat, pair, pair)
    finv = [[f.zero] * 2 for _ in range(2)]
    det = f.add(f.mul(fa, fa), f.mul(fb, fb))
    finv[0][0] = f.div(fa, det)
    finv[1][1] = f.div(fa, det)
    finv[0][1] = f.div(fb, det)
    finv[1][0] = f.neg(f.div(fb, det))
    finv_star = morphism_dual(finv, pair, pair)
    # (l(f^{-1})* (x) f)(z[B* (x) B]) = z[B* (x) B] for an automorphism
    moved = {}
    for (j, i, c) in pair.z2:
        jv = mat_mul_vec(f, finv_star, pair.Bstar.basis_vec(j))
        iv = mat_mul_vec(f, mat, B.basis_vec(i))
        for jj, x in enumerate(jv):
            for ii, y in enumerate(iv):
                v = f.mul(c, f.mul(x, y))
                if v != f.zero:
                    moved[(jj, ii)] = f.add(moved.get((jj, ii), f.zero), v)
    expect = {}
    for (j, i, c) in pair.z2:
        expect[(j, i)] = f.add(expect.get((j, i), f.zero), c)
    assert {k: v for k, v in moved.items() if v != f.zero} == expect


def test_summand_complement_block_and_zero():
    A = build_f4_algebra()
    B12 = natural_bimodule(A, 0, 1, 0, name="B12")
    B23 = natural_bimodule(A, 1, 2, 2, name="B23")
    B = direct_sum([("B12", B12), ("B23", B23)])
    f = A.field
    block = [list(B.basis_vec(0))]
    comp = summand_complement(B, block)
    assert comp is not None and len(comp) == 2
    assert summand_complement(B, []) is not None


def test_sec6_unit_tensor_span_not_split():
    A = build_sec6_algebra()
    k = A.field
    T12 = extension_tensor_bimodule(A, 0, 1, [[k.zero, k.zero, k.one, k.zero]],
                                    name="T12")
    z = T12.identity_tensor
    labels = [T12.labels[i] for i, c in enumerate(z) if c != k.zero]
    assert labels == ["1(x)1", "t^3(x)t"]
    # U = F z F: close the span under both actions
    rows = [list(z)]
    changed = True
    while changed:
        changed = False
        red, piv = rref(k, rows)
        for v in [list(r) for r in red]:
            for s in range(A.dim):
                for w in (T12.act_basis_left(s, v), T12.act_basis_right(s, v)):
                    if in_span(k, red, piv, w) is None:
                        rows.append(w)
                        changed = True
        rows, _ = rref(k, rows)
        rows = [list(r) for r in rows]
    assert len(rows) == 4
    assert is_action_closed(T12, rows)
    assert summand_complement(T12, rows) is None


def test_dual_of_dual_isomorphic():
    A = build_f4_algebra()
    B = natural_bimodule(A, 1, 2, 2, name="B23")
    pair = dualize(B)
    pair2 = dualize(pair.Bstar)
    iso = bimodule_iso(pair2.Bstar, B)
    assert iso is not None


def test_sub_bimodule_rejects_unclosed_span():
    A = build_f4_algebra()
    B = natural_bimodule(A, 1, 2, 2, name="B23")
    f = A.field
    with pytest.raises(BimoduleError):
        sub_bimodule(B, [[f.one, f.zero]])


def test_tensor_bimodule_actions_consistent():
    A = build_sec6_algebra()
    k = A.field
    T12 = extension_tensor_bimodule(A, 0, 1, [[k.zero, k.zero, k.one, k.zero]])
    F21 = natural_bimodule(A, 1, 0, 0, name="F21")
    T = TensorBimodule(T12, F21, name="T")
    # construction validates the module axioms; the dimension is the
    # right rank of the first factor times the dimension of the second
    assert T.dim == len([b for b in T12.right_basis]) * F21.dim
