import random

import pytest

from mqpot.algebra import AlgebraError, algebra_build
from mqpot.scalar import RationalFunctions, Rationals, rref, span_equal

QI = {"name": "Qi", "var": "t", "modulus": ["1", "0", "1"], "trace": ["1", "0"]}


def build_f4_algebra():
    Q = Rationals()
    R = {"var": "t", "modulus": ["-1", "1"], "trace": ["1"]}
    C = {"var": "t", "modulus": ["1", "0", "1"], "trace": ["1", "0"]}
    return algebra_build(Q, {"factors": [dict(R, name="R1"), dict(R, name="R2"),
                                         dict(C, name="C3"), dict(C, name="C4")]})


def build_sec6_algebra():
    k = RationalFunctions(2, "u")
    F = {"var": "t", "modulus": ["u", "0", "0", "0", "1"], "trace": ["1", "0", "0", "0"]}
    return algebra_build(k, {"factors": [dict(F, name="F1"), dict(F, name="F2"),
                                         {"name": "k3", "var": "t", "modulus": ["1", "1"],
                                          "trace": ["1"]}]})


def test_gaussian_integers_gram():
    Q = Rationals()
    A = algebra_build(Q, {"factors": [QI]})
    assert A.gram == [[Q.one, Q.zero], [Q.zero, Q.from_int(-1)]]
    assert A.separable


def test_degenerate_trace_rejected():
    Q = Rationals()
    with pytest.raises(AlgebraError):
        algebra_build(Q, {"factors": [{"name": "Q", "var": "t",
                                       "modulus": ["-1", "1"], "trace": ["0"]}]})


def test_f4_algebra_casimir():
    A = build_f4_algebra()
    # Casimir element: unity pairs on the real factors, minus i (x) i twice
    for s, lab in enumerate(A.labels):
        dual = A.dual_basis[s]
        if lab.endswith(".t"):
            assert dual == A.neg(A.basis(s))
        else:
            assert dual == A.basis(s)
    assert A.separable


def test_quartic_extension_duals():
    A = build_sec6_algebra()
    k = A.field
    # dual of u^(1/4) is u^(-1/4) = t^3/u inside the first factor
    t_idx = A.labels.index("F1.t")
    t3_idx = A.labels.index("F1.t^3")
    expected = list(A.zero)
    expected[t3_idx] = k.gen(-1)
    assert list(A.dual_basis[t_idx]) == expected


def test_sec6_casimir_ideal_is_third_unity():
    A = build_sec6_algebra()
    assert not A.separable
    assert len(A.casimir_ideal) == 1
    assert A.casimir_ideal[0] == A.unit_of_factor(2)
    acc = A.zero
    for s in range(A.dim):
        acc = A.add(acc, A.mul(A.basis(s), A.dual_basis[s]))
    assert acc == A.unit_of_factor(2)


def test_sqrt_extension_inseparable():
    k = RationalFunctions(2, "u")
    A = algebra_build(k, {"factors": [{"name": "E", "var": "t",
                                       "modulus": ["u", "0", "1"],
                                       "trace": ["1", "0"]}]})
    # zeta_c(1) = 1 + u^(1/2) u^(-1/2) = 0 in characteristic two
    assert A.casimir_apply(A.one) == A.zero
    assert not A.separable


def test_casimir_identities_all_bases():
    for A in (build_f4_algebra(), build_sec6_algebra()):
        for s in range(A.dim):
            a = A.basis(s)
            lhs = A.zero
            rhs = A.zero
            for t in range(A.dim):
                lhs = A.add(lhs, A.scale(A.tr(A.mul(A.dual_basis[t], a)), A.basis(t)))
                rhs = A.add(rhs, A.scale(A.tr(A.mul(a, A.basis(t))), A.dual_basis[t]))
            assert lhs == a and rhs == a


def test_casimir_element_is_central():
    for A in (build_f4_algebra(), build_sec6_algebra()):
        for s in range(A.dim):
            a = A.basis(s)
            lhs = [(A.mul(a, e), d) for (e, d) in A.casimir_element()]
            rhs = [(e, A.mul(d, a)) for (e, d) in A.casimir_element()]
            # compare as elements of K (x) K via a dictionary of pairs
            def collect(pairs):
                out = {}
                f = A.field
                for (e, d) in pairs:
                    for i, x in enumerate(e):
                        if x == f.zero:
                            continue
                        for j, y in enumerate(d):
                            if y == f.zero:
                                continue
                            out[(i, j)] = f.add(out.get((i, j), f.zero), f.mul(x, y))
                return {k: v for k, v in out.items() if v != f.zero}
            assert collect(lhs) == collect(rhs)


def test_casimir_ideal_basis_independent():
    """Recompute the Casimir ideal after a random change of basis."""
    Q = Rationals()
    rng = random.Random(2)
    A = algebra_build(Q, {"factors": [QI]})
    # change of basis: new basis (1, a + b i) with b nonzero
    b = 0
    while b == 0:
        a, b = rng.randint(-3, 3), rng.randint(-3, 3)
    # structure constants in the new basis x = 1, y = a + b i:
    # y^2 = a^2 - b^2 + 2 a b i = (a^2 - b^2 - 2 a^2) x + (2 a / b) y ... compute directly
    f = Q
    ai, bi = f.from_int(a), f.from_int(b)
    # y^2 = (a^2 - b^2) + 2ab i; i = (y - a)/b
    c1 = f.add(f.mul(ai, ai), f.neg(f.mul(bi, bi)))
    twoab = f.mul(f.from_int(2), f.mul(ai, bi))
    coef_y = f.div(twoab, bi)
    coef_1 = f.sub(c1, f.mul(coef_y, ai))
    mul = [[["1", "0"], ["0", "1"]],
           [["0", "1"], [f.to_str(coef_1), f.to_str(coef_y)]]]
    tr_y = f.to_str(ai)  # tr(a + b i) = a
    A2 = algebra_build(Q, {"factors": [{"name": "Qi2", "basis": ["1", "y"],
                                        "mul": mul, "trace": ["1", tr_y],
                                        "unit": ["1", "0"]}]})
    # the Casimir ideal in coordinates: transport back through y = a + b i
    back = [[f.one, ai], [f.zero, bi]]
    from mqpot.scalar import mat_mul_vec
    moved = [mat_mul_vec(f, back, list(v)) for v in A2.casimir_ideal]
    assert span_equal(f, moved, [list(v) for v in A.casimir_ideal])


def test_element_serialization_round_trip():
    A = build_f4_algebra()
    elem = A.element_from_spec({"C3.t": "2", "R1.1": "-1/3"})
    assert A.element_to_str(elem) == "-1/3*R1.1 + 2*C3.t"
