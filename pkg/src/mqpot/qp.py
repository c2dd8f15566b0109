"""Potentials, trivial parts, Jacobian ideals, reduction, skew reduction.

The reduction follows the splitting construction: after a change of
arrows adapting the basis to B = U + V + R (R a bimodule complement of
the trivial part), the potential is rotated into the normal form

    z[U (x) V] + S1 + S2 + reduced part,   S1 in U Jhat, S2 ending in V,

and the unitriangular automorphism with phi|U = id - rder(S2) j and
phi|V = id - lder(j -, S1) doubles the splitting depth; iterating past
the truncation degree leaves the reduced potential on R-words only.
"""

from __future__ import annotations

from . import scalar
from .bimodule import (BimoduleError, Bimodule, DualizingPair, sub_bimodule,
                       summand_complement, is_action_closed)
from .pathalg import (PathAlgebra, PathElement, PathError, PathMorphism,
                      TruncatedIdeal, identity_morphism, format_element)


class QPError(ValueError):
    pass


class NotSplitError(QPError):
    """Trivial part admits no bimodule complement; try the skew route."""


def _rref_rows_graded(field, rows, degrees_of):
    """RREF respecting homogeneity: reduce per degree, keep degree order."""
    if degrees_of is None:
        red, _ = scalar.rref(field, rows)
        return [list(r) for r in red]
    groups = {}
    for r in rows:
        degs = {degrees_of[i] for i, c in enumerate(r) if c != field.zero}
        if not degs:
            continue
        if len(degs) > 1:
            raise QPError("inhomogeneous vector in graded context")
        groups.setdefault(degs.pop(), []).append(list(r))
    out = []
    for d in sorted(groups):
        red, _ = scalar.rref(field, groups[d])
        out.extend([list(r) for r in red])
    return out


class ModulatedQP:
    """A dualizing pair with a validated potential and truncation degree."""

    def __init__(self, pair: DualizingPair, potential: PathElement, maxdeg,
                 grade=None, name="", algebra_cache=None):
        self.pair = pair
        self.maxdeg = maxdeg
        self.name = name
        self.A = algebra_cache if algebra_cache is not None else PathAlgebra(pair, maxdeg)
        if potential.space is not self.A.P:
            potential = PathElement(self.A.P, potential.kpart, potential.comps,
                                    potential.trunc, maxdeg)
        self.m = potential
        self.grade = grade
        self._trivial = None
        self._validate()

    def _validate(self):
        if not self.A.algebra.is_zero(self.m.kpart) or self.m.comps.get(1):
            raise QPError("potential must lie in degrees two and higher")
        if not self.A.is_central(self.m):
            raise QPError("potential is not K-central")
        if self.grade is not None:
            degs = self.pair.B.degrees
            if degs is None:
                raise QPError("graded potential over an ungraded bimodule")
            for d, ws in self.m.comps.items():
                for w in ws:
                    if sum(degs[i] for i in w) != self.grade:
                        raise QPError("potential not homogeneous of the declared degree")

    def is_reduced(self):
        return not self.m.comps.get(2)

    # -- trivial / reduced decomposition ----------------------------------------

    def trivial_data(self):
        """U, V, trivial part, section j, splitness; cached."""
        if self._trivial is not None:
            return self._trivial
        A = self.A
        f = A.field
        B, Bs = self.pair.B, self.pair.Bstar
        m2 = self.m.component(2)
        U_rows, V_rows, p_cols = [], [], []
        for j in range(Bs.dim):
            xi = A.dual_letter_elt(j)
            u = A.rder(m2, xi)
            v = A.lder(xi, m2)
            uvec = [f.zero] * B.dim
            for (i,), c in u.comps.get(1, {}).items():
                uvec[i] = c
            vvec = [f.zero] * B.dim
            for (i,), c in v.comps.get(1, {}).items():
                vvec[i] = c
            U_rows.append(uvec)
            V_rows.append(vvec)
            p_cols.append([f.add(a, b) for a, b in zip(uvec, vvec)])
        degrees = B.degrees
        U_basis = _rref_rows_graded(f, U_rows, degrees)
        V_basis = _rref_rows_graded(f, V_rows, degrees)
        inter = scalar.intersect(f, U_basis, V_basis, B.dim)
        if inter:
            raise QPError("potential is not 2-loop free: U meets V in dimension %d"
                          % len(inter))
        triv_basis = U_basis + V_basis
        # p = cderiv(m2): B* -> trivB, as a matrix with columns over dual basis
        p_mat = [[p_cols[j][c] for j in range(Bs.dim)] for c in range(B.dim)]
        ker_rows = scalar.kernel_basis(f, p_mat, Bs.dim)
        comp = summand_complement(B, triv_basis) if triv_basis else \
            [list(B.basis_vec(i)) for i in range(B.dim)]
        jmat = self._solve_section(p_mat, triv_basis) if triv_basis else None
        split = comp is not None and (jmat is not None or not triv_basis)
        if triv_basis and (comp is None) != (jmat is None):
            raise QPError("inconsistent splitting detection")
        data = {
            "U": U_basis, "V": V_basis, "triv": triv_basis,
            "kernel": ker_rows, "p": p_mat, "split": split,
            "complement": comp, "j": jmat,
        }
        self._trivial = data
        return data

    def _solve_section(self, p_mat, triv_basis, ortho_rows=None):
        """Bimodule morphism j: trivB -> B* with cderiv(m2) . j = id.

        With ortho_rows (a complement of the trivial part), the image of
        j is pinned to the dual summand of the trivial part for that
        decomposition: beta vanishes between j(trivB) and the complement.
        """
        A = self.A
        f = A.field
        B, Bs = self.pair.B, self.pair.Bstar
        alg = A.algebra
        r = len(triv_basis)
        n = Bs.dim
        nun = r * n  # j(t_k) = sum_c X[k][c] xi_c

        def idx(k, c):
            return k * n + c

        rows, rhs = [], []
        if ortho_rows:
            for k in range(r):
                for comp_row in ortho_rows:
                    for cc in range(alg.dim):
                        row1 = [f.zero] * nun
                        row2 = [f.zero] * nun
                        for c in range(n):
                            row1[idx(k, c)] = self.pair.beta_bv(
                                comp_row, Bs.basis_vec(c))[cc]
                            row2[idx(k, c)] = self.pair.beta_vb(
                                Bs.basis_vec(c), comp_row)[cc]
                        rows.append(row1)
                        rhs.append(f.zero)
                        rows.append(row2)
                        rhs.append(f.zero)
        # p . j = id on the trivial basis
        for k in range(r):
            for c in range(B.dim):
                row = [f.zero] * nun
                for cc in range(n):
                    row[idx(k, cc)] = p_mat[c][cc]
                rows.append(row)
                rhs.append(triv_basis[k][c])
        # bimodule morphism: j(a t b) = a j(t) b; trivial part as sub-bimodule
        triv_cols = [[row[c] for row in triv_basis] for c in range(B.dim)]
        for s in range(alg.dim):
            es = alg.basis(s)
            for k in range(r):
                for side in ("left", "right"):
                    if side == "left":
                        acted = B.act_left(es, triv_basis[k])
                    else:
                        acted = B.act_right(es, triv_basis[k])
                    coeffs = scalar.solve(f, triv_cols, acted)
                    if coeffs is None:
                        raise QPError("trivial part not action closed")
                    for c in range(n):
                        row = [f.zero] * nun
                        for k2, lam in enumerate(coeffs):
                            if lam != f.zero:
                                row[idx(k2, c)] = f.add(row[idx(k2, c)], lam)
                        # minus a . j(t_k) (or j(t_k) . a)
                        for cc in range(n):
                            if side == "left":
                                av = Bs.act_left(es, Bs.basis_vec(cc))
                            else:
                                av = Bs.act_right(es, Bs.basis_vec(cc))
                            if av[c] != f.zero:
                                row[idx(k, cc)] = f.sub(row[idx(k, cc)], av[c])
                        rows.append(row)
                        rhs.append(f.zero)
        if self.grade is not None and B.degrees is not None:
            trivdeg = []
            for t in triv_basis:
                degs = {B.degrees[i] for i, c in enumerate(t) if c != f.zero}
                trivdeg.append(degs.pop())
            for k in range(r):
                for c in range(n):
                    if Bs.degrees[c] != trivdeg[k] - self.grade:
                        row = [f.zero] * nun
                        row[idx(k, c)] = f.one
                        rows.append(row)
                        rhs.append(f.zero)
        sol = scalar.solve(f, rows, rhs)
        if sol is None:
            return None
        return [[sol[idx(k, c)] for k in range(r)] for c in range(n)]

    # -- Jacobian ideal -----------------------------------------------------------

    def cyclic_derivatives(self):
        """cderiv(m) over the dual basis, as path elements."""
        A = self.A
        cp = A.cyclic_perm(self.m)
        out = []
        for j in range(self.pair.Bstar.dim):
            out.append(A.lder(A.dual_letter_elt(j), cp))
        return out

    def jacobian(self, maxdeg=None) -> TruncatedIdeal:
        gens = [g for g in self.cyclic_derivatives() if not g.is_zero()]
        return TruncatedIdeal(self.A, gens, maxdeg or self.maxdeg)


def casimir_of_subpair(qp: ModulatedQP, U_rows, V_rows):
    """z[U (x) V] rebuilt from the induced pairing, as a path element.

    The pairing on {U, V} is beta composed with the section j; the
    Casimir is solved from its characterizing identities and injected
    back into degree-two words.
    """
    A = qp.A
    f = A.field
    td = qp.trivial_data()
    jmat = td["j"]
    if jmat is None:
        raise NotSplitError("no bimodule section onto the dual of the trivial part")
    B, Bs = qp.pair.B, qp.pair.Bstar
    alg = A.algebra
    usub, uincl = sub_bimodule(B, U_rows, name="U")
    vsub, vincl = sub_bimodule(B, V_rows, name="V")

    def jvec(vec):
        return scalar.mat_mul_vec(f, jmat, _coeffs_in(f, td["triv"], vec))

    beta1 = [[alg.zero] * vsub.dim for _ in range(usub.dim)]
    beta2 = [[alg.zero] * usub.dim for _ in range(vsub.dim)]
    for a in range(usub.dim):
        uvec = [uincl[c][a] for c in range(B.dim)]
        for b in range(vsub.dim):
            vvec = [vincl[c][b] for c in range(B.dim)]
            beta1[a][b] = qp.pair.beta_bv(uvec, jvec(vvec))
            beta2[b][a] = qp.pair.beta_vb(jvec(vvec), uvec)
    pairUV = DualizingPair(usub, vsub, beta1, beta2)
    out = A.zero()
    for (i, j, c) in pairUV.z1:
        uvec = [uincl[cc][i] for cc in range(B.dim)]
        vvec = [vincl[cc][j] for cc in range(B.dim)]
        term = _degree_one(A, uvec)
        term = A.mul(term, _degree_one(A, vvec))
        out = A.add(out, A.scale(c, term))
    return out


def _coeffs_in(field, basis_rows, vec):
    red, piv = scalar.rref(field, [list(r) for r in basis_rows])
    # transport vec through the rref change: solve directly for robustness
    sol = scalar.solve(field, [[row[c] for row in basis_rows] for c in range(len(vec))], list(vec))
    if sol is None:
        raise QPError("vector outside the trivial part")
    return sol


def _degree_one(A: PathAlgebra, vec):
    f = A.field
    comps = {1: {(i,): c for i, c in enumerate(vec) if c != f.zero}}
    return PathElement(A.P, comps=comps, maxdeg=A.maxdeg)


def _dual_elt(A: PathAlgebra, vec):
    f = A.field
    comps = {1: {(j,): c for j, c in enumerate(vec) if c != f.zero}}
    return PathElement(A.D, comps=comps, maxdeg=A.maxdeg)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

class ReductionResult:
    def __init__(self, qp_src, qp_red, change, phi, phi_inv, kernel, kernel_gens,
                 tags, adapted):
        self.qp_src = qp_src
        self.qp_red = qp_red
        self.change = change      # change of arrows: source algebra -> adapted algebra
        self.phi = phi            # unitriangular automorphism of the adapted algebra
        self.phi_inv = phi_inv
        self.kernel = kernel      # TruncatedIdeal in the adapted algebra
        self.kernel_gens = kernel_gens
        self.tags = tags          # per adapted letter: 'U' / 'V' / 'R'
        self.adapted = adapted    # adapted ModulatedQP (same qp, new arrow basis)
        self.trunc = qp_red.m.trunc

    def kernel_to(self, upto):
        if upto <= self.kernel.maxdeg:
            return self.kernel
        return TruncatedIdeal(self.adapted.A, self.kernel_gens, upto)

    def project(self, x: PathElement) -> PathElement:
        """pi_m(x): adapted transport, automorphism, kill non-R words."""
        return self.project_adapted(self.change.apply(x))

    def project_adapted(self, y: PathElement) -> PathElement:
        """pi_m on elements already written in the adapted basis."""
        y = self.phi.apply(y)
        return _restrict_to_tagged(self.qp_red.A, self.adapted.A, self.tags, y)

    def include(self, x: PathElement) -> PathElement:
        """T(Bbar) back into the adapted algebra."""
        A = self.adapted.A
        out = A.scalar_elt(x.kpart)
        keep = [i for i, t in enumerate(self.tags) if t == "R"]
        for d, ws in x.comps.items():
            tgt = out.comps.setdefault(d, {})
            for w, c in ws.items():
                tgt[tuple(keep[i] for i in w)] = c
        out.comps = {d: ws for d, ws in out.comps.items() if ws}
        out.trunc = x.trunc
        return out


def _restrict_to_tagged(A_red: PathAlgebra, A_ad: PathAlgebra, tags, x: PathElement):
    keep = [i for i, t in enumerate(tags) if t == "R"]
    back = {i: k for k, i in enumerate(keep)}
    out = A_red.scalar_elt(x.kpart)
    out.trunc = x.trunc
    for d, ws in x.comps.items():
        tgt = {}
        for w, c in ws.items():
            if all(tags[i] == "R" for i in w):
                tgt[tuple(back[i] for i in w)] = c
        if tgt:
            out.comps[d] = tgt
    return out


def _adapt_basis(qp: ModulatedQP):
    """Change of arrows aligning the basis with U + V + complement."""
    td = qp.trivial_data()
    if not td["split"]:
        raise NotSplitError("trivial part is not a direct summand")
    A = qp.A
    f = A.field
    B, Bs = qp.pair.B, qp.pair.Bstar
    alg = A.algebra
    U, V, comp = td["U"], td["V"], td["complement"]
    # the section must land in the dual summand of the decomposition in use
    jmat_ortho = qp._solve_section(td["p"], td["triv"], ortho_rows=comp)
    if jmat_ortho is None:
        raise NotSplitError("no section orthogonal to the chosen complement")
    td = dict(td)
    td["j"] = jmat_ortho
    rows = [list(r) for r in U] + [list(r) for r in V] + [list(r) for r in comp]
    tags = ["U"] * len(U) + ["V"] * len(V) + ["R"] * len(comp)
    n = B.dim
    M = [[rows[k][c] for k in range(n)] for c in range(n)]  # columns = new basis
    Minv = scalar.invert_matrix(f, M)
    if Minv is None:
        raise QPError("adapted basis is singular")
    # transported bimodule
    labels = ["%s%d" % (t, k) for k, t in enumerate(tags)]
    blocks = []
    degrees = [] if B.degrees is not None else None
    for r in rows:
        blk = None
        deg = None
        for i, c in enumerate(r):
            if c != f.zero:
                if blk is None:
                    blk = B.blocks[i]
                    deg = B.degrees[i] if B.degrees is not None else None
                elif B.blocks[i] != blk or (B.degrees is not None and B.degrees[i] != deg):
                    raise QPError("adapted basis vector mixes blocks or degrees")
        blocks.append(blk)
        if degrees is not None:
            degrees.append(deg)
    left, right = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for k in range(n):
            lv = scalar.mat_mul_vec(f, Minv, B.act_basis_left(s, rows[k]))
            rv = scalar.mat_mul_vec(f, Minv, B.act_basis_right(s, rows[k]))
            lt.append([(j, c) for j, c in enumerate(lv) if c != f.zero])
            rt.append([(j, c) for j, c in enumerate(rv) if c != f.zero])
        left.append(lt)
        right.append(rt)
    B_ad = Bimodule(alg, labels, blocks, left, right, degrees=degrees,
                    name=(B.name or "B") + "~ad")
    # dual adapted basis: j(V), j(U), kernel of cderiv(m2)
    jmat = td["j"]
    dual_rows = []
    for r in V:
        dual_rows.append(scalar.mat_mul_vec(f, jmat, _coeffs_in(f, td["triv"], r)))
    for r in U:
        dual_rows.append(scalar.mat_mul_vec(f, jmat, _coeffs_in(f, td["triv"], r)))
    dual_rows += [list(r) for r in td["kernel"]]
    nd = Bs.dim
    Md = [[dual_rows[k][c] for k in range(nd)] for c in range(nd)]
    Mdinv = scalar.invert_matrix(f, Md)
    if Mdinv is None:
        raise QPError("adapted dual basis is singular")
    dtags = ["dU"] * len(V) + ["dV"] * len(U) + ["dR"] * (nd - len(U) - len(V))
    dlabels = ["%s%d" % (t, k) for k, t in enumerate(dtags)]
    dblocks = []
    ddegrees = [] if Bs.degrees is not None else None
    for r in dual_rows:
        blk = None
        deg = None
        for i, c in enumerate(r):
            if c != f.zero:
                if blk is None:
                    blk = Bs.blocks[i]
                    deg = Bs.degrees[i] if Bs.degrees is not None else None
        dblocks.append(blk)
        if ddegrees is not None:
            ddegrees.append(deg)
    dleft, dright = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for k in range(nd):
            lv = scalar.mat_mul_vec(f, Mdinv, Bs.act_basis_left(s, dual_rows[k]))
            rv = scalar.mat_mul_vec(f, Mdinv, Bs.act_basis_right(s, dual_rows[k]))
            lt.append([(j, c) for j, c in enumerate(lv) if c != f.zero])
            rt.append([(j, c) for j, c in enumerate(rv) if c != f.zero])
        dleft.append(lt)
        dright.append(rt)
    Bs_ad = Bimodule(alg, dlabels, dblocks, dleft, dright, degrees=ddegrees,
                     name=(Bs.name or "B*") + "~ad")
    beta1 = [[qp.pair.beta_bv(rows[i], dual_rows[j]) for j in range(nd)] for i in range(n)]
    beta2 = [[qp.pair.beta_vb(dual_rows[j], rows[i]) for i in range(n)] for j in range(nd)]
    pair_ad = DualizingPair(B_ad, Bs_ad, beta1, beta2)
    A_ad = PathAlgebra(pair_ad, qp.maxdeg)
    # change of arrows: old letter i -> sum_k Minv[k][i] new letters
    images = []
    for i in range(n):
        e = A_ad.zero()
        for k in range(n):
            if Minv[k][i] != f.zero:
                e = A_ad.add(e, A_ad.letter(k, coeff=Minv[k][i]))
        images.append(e)
    change = PathMorphism(qp.A, A_ad, images, validate=False)
    m_ad = change.apply(qp.m)
    qp_ad = ModulatedQP(pair_ad, m_ad, qp.maxdeg, grade=qp.grade,
                        name=qp.name + "~ad", algebra_cache=A_ad)
    return qp_ad, change, tags


def _normalize_form(A: PathAlgebra, tags, m: PathElement):
    """Rotate every degree >= 3 component into S1 + S2 + reduced form.

    Returns (S1, S2, mbar): S1 with words leading with a U letter, S2
    with words ending with a V letter and U-free elsewhere, mbar with
    R-letters only.  The output is cyclically equivalent to the input.
    """
    f = A.field
    S1 = A.zero()
    S2 = A.zero()
    mbar = A.zero()
    for d, ws in m.comps.items():
        if d < 3:
            continue
        groups_u = {}
        groups_v = {}
        for w, c in ws.items():
            tg = [tags[i] for i in w]
            if "U" in tg:
                s = tg.index("U")
                groups_u.setdefault(s, {})[w] = c
            elif "V" in tg:
                s = tg.index("V")
                groups_v.setdefault(s, {})[w] = c
            else:
                mbar = A.add(mbar, PathElement(A.P, comps={d: {w: c}}, maxdeg=A.maxdeg))
        for s, grp in sorted(groups_u.items()):
            res = A._left_perm_homog(grp, d, s) if s else dict(grp)
            S1 = A.add(S1, PathElement(A.P, comps={d: res}, maxdeg=A.maxdeg))
        for s, grp in sorted(groups_v.items()):
            res = A._left_perm_homog(grp, d, s + 1)
            S2 = A.add(S2, PathElement(A.P, comps={d: res}, maxdeg=A.maxdeg))
    for d, ws in S1.comps.items():
        assert all(tags[w[0]] == "U" for w in ws)
    for d, ws in S2.comps.items():
        assert all(tags[w[-1]] == "V" and all(tags[i] != "U" for i in w) for w in ws)
    return S1, S2, mbar


def make_two_loop_free(qp: ModulatedQP) -> ModulatedQP:
    """A cyclically equivalent representative with U meeting V trivially.

    The degree-two part is grouped by the block pair of its words; each
    group is a potential of its own and may be rotated by one step
    without leaving the cyclic class.  Rotation subsets are tried in a
    fixed order until the two derivative images become independent.
    """
    A = qp.A
    f = A.field
    try:
        qp.trivial_data()
        return qp
    except QPError:
        pass
    m2 = qp.m.component(2)
    rest = A.sub(qp.m, m2)
    groups = {}
    for w, c in m2.comps.get(2, {}).items():
        key = (qp.pair.B.blocks[w[0]], qp.pair.B.blocks[w[1]])
        groups.setdefault(key, {})[w] = c
    keys = sorted(groups)
    for mask in range(1, 1 << len(keys)):
        m2_new = A.zero()
        for b, key in enumerate(keys):
            part = PathElement(A.P, comps={2: dict(groups[key])}, maxdeg=A.maxdeg)
            if mask >> b & 1:
                part = A.left_perm(part, 1)
            m2_new = A.add(m2_new, part)
        cand = ModulatedQP(qp.pair, A.add(m2_new, rest), qp.maxdeg,
                           grade=qp.grade, name=qp.name, algebra_cache=A)
        try:
            cand.trivial_data()
        except QPError:
            continue
        if not A.cyclically_equivalent(qp.m, cand.m):
            raise QPError("rotation left the cyclic class; internal error")
        return cand
    raise QPError("no rotation of the degree-two part is 2-loop free")


def reduce_qp(qp: ModulatedQP, max_rounds=None, kernel_upto=None) -> ReductionResult:
    """Split reduction; raises NotSplitError when no bimodule complement exists.

    kernel_upto bounds the degree to which the kernel ideal is
    materialized (it can be rebuilt deeper from the stored generators).
    """
    td = qp.trivial_data()
    if not td["split"]:
        raise NotSplitError("trivial part of the potential does not split")
    if qp.is_reduced():
        ident = identity_morphism(qp.A)
        kernel = TruncatedIdeal(qp.A, [], min(qp.maxdeg, kernel_upto or 5))
        return ReductionResult(qp, qp, ident, ident, ident, kernel, [],
                               ["R"] * qp.pair.B.dim, qp)
    qp_ad, change, tags = _adapt_basis(qp)
    A = qp_ad.A
    f = A.field
    n = A.P.bim.dim
    m2 = qp_ad.m.component(2)
    # degree-2 part must be the Casimir of {U, V}: rebuilt and compared
    zUV = casimir_of_subpair(qp_ad, _unit_rows(A, tags, "U"), _unit_rows(A, tags, "V"))
    if zUV != m2:
        raise QPError("degree-two part differs from the Casimir of {U, V}")
    # section j in adapted coordinates: j(U_k) = V_k*, j(V_k) = U_k*
    # (adapted dual basis is ordered j(V), j(U), kernel)
    nu = sum(1 for t in tags if t == "U")
    nv = sum(1 for t in tags if t == "V")

    def j_of_letter(i):
        if tags[i] == "U":
            return nv + i  # U_k at position k: dual position nv + k
        if tags[i] == "V":
            return i - nu
        raise QPError("section applied outside the trivial part")

    phi_total = identity_morphism(A)
    S = qp_ad.m
    S1, S2, mbar = _normalize_form(A, tags, S)
    rounds = 0
    limit = max_rounds or (qp.maxdeg.bit_length() + 3)
    while not (S1.is_zero() and S2.is_zero()):
        rounds += 1
        if rounds > limit:
            raise QPError("reduction failed to converge; potential inconsistent")
        images = []
        for i in range(n):
            if tags[i] == "U":
                img = A.sub(A.letter(i), A.rder(S2, A.dual_letter_elt(j_of_letter(i))))
            elif tags[i] == "V":
                img = A.sub(A.letter(i), A.lder(A.dual_letter_elt(j_of_letter(i)), S1))
            else:
                img = A.letter(i)
            images.append(img)
        phi = PathMorphism(A, A, images, validate=(rounds == 1))
        S = phi.apply(A.add(A.add(m2, S1), A.add(S2, mbar)))
        S1, S2, mbar_new = _normalize_form(A, tags, S)
        mbar = mbar_new
        assert S.component(2) == m2
        phi_total = phi.compose(phi_total)
    # reduced pair: R-part of the adapted pair
    keep = [i for i, t in enumerate(tags) if t == "R"]
    keep_d = list(range(nu + nv, len(tags)))  # kernel part of the dual
    red_pair = _restrict_pair(qp_ad.pair, keep, keep_d)
    A_red = PathAlgebra(red_pair, qp.maxdeg)
    m_red = _restrict_to_tagged(A_red, A, tags, mbar)
    qp_red = ModulatedQP(red_pair, m_red, qp.maxdeg, grade=qp.grade,
                         name=qp.name + "~red", algebra_cache=A_red)
    # kernel: closed ideal on cderiv(m) . j over the trivial basis
    cp = A.cyclic_perm(qp_ad.m)
    gens = []
    for i in range(n):
        if tags[i] != "R":
            gens.append(A.lder(A.dual_letter_elt(j_of_letter(i)), cp))
    kernel = TruncatedIdeal(A, gens, min(qp.maxdeg, kernel_upto or 5))
    phi_inv = phi_total.invert()
    result = ReductionResult(qp, qp_red, change, phi_total, phi_inv, kernel, gens,
                             tags, qp_ad)
    _check_kernel_dims(result)
    return result


def _unit_rows(A, tags, tag):
    n = A.P.bim.dim
    f = A.field
    out = []
    for i, t in enumerate(tags):
        if t == tag:
            v = [f.zero] * n
            v[i] = f.one
            out.append(v)
    return out


def _restrict_pair(pair: DualizingPair, keep, keep_d):
    B, Bs = pair.B, pair.Bstar
    f = pair.field
    sub, _ = sub_bimodule(B, [B.basis_vec(i) for i in keep], name="Bred")
    subd, _ = sub_bimodule(Bs, [Bs.basis_vec(j) for j in keep_d], name="Bred*")
    beta1 = [[pair.beta1[i][j] for j in keep_d] for i in keep]
    beta2 = [[pair.beta2[j][i] for i in keep] for j in keep_d]
    return DualizingPair(sub, subd, beta1, beta2)


def _check_kernel_dims(res: ReductionResult):
    """Ker(pi) layer ranks must complement the reduced algebra layerwise."""
    A = res.adapted.A
    Ared = res.qp_red.A
    for l in range(1, min(4, res.kernel.maxdeg) + 1):
        want = A.P.dim_of_degree(l) - Ared.P.dim_of_degree(l)
        got = res.kernel.layer_rank(l)
        if got != want:
            raise QPError("kernel layer %d has rank %d, expected %d" % (l, got, want))
    # pivot rows are truncated at the kernel depth, so their projections
    # are only meaningful up to that degree
    for g in res.kernel.span.pivots.values():
        elem = PathElement(A.P, comps=_rows_to_comps(g), maxdeg=A.maxdeg)
        if not res.project_adapted(elem).top_truncate(res.kernel.maxdeg).is_zero():
            raise QPError("kernel generator does not die under the reduction")


def _rows_to_comps(row):
    comps = {}
    for (d, w), c in row.items():
        comps.setdefault(d, {})[w] = c
    return comps


def reduction_certificate(res: ReductionResult, upto=None):
    """m - pi(m) is cyclically equivalent to phi^{-1}(m2), inside Ker^2."""
    A = res.adapted.A
    upto = upto or A.maxdeg
    m_ad = res.adapted.m
    m2 = m_ad.component(2)
    w = res.phi_inv.apply(m2)
    # membership of w in the square of the kernel ideal
    sq_gens = []
    kernel = res.kernel_to(upto)
    gens = [PathElement(A.P, comps=_rows_to_comps(r), maxdeg=A.maxdeg)
            for r in kernel.span.pivots.values()]
    low = [g for g in gens if min(g.degrees()) <= 3]
    for g1 in low:
        for g2 in low:
            sq_gens.append(A.mul(g1, g2))
            for l in range(1, upto - 1):
                for mid in A.P.words_of_degree(l):
                    e = A.mul(A.mul(g1, PathElement(A.P, comps={l: {mid: A.field.one}},
                                                    maxdeg=A.maxdeg)), g2)
                    if not e.is_zero():
                        sq_gens.append(e)
    square = TruncatedIdeal(A, [g for g in sq_gens if not g.is_zero()], upto)
    in_square = square.contains(w.top_truncate(upto))
    diff = A.sub(m_ad, res.include(res.qp_red.m))
    equiv = A.cyclically_equivalent(diff.top_truncate(upto), w.top_truncate(upto))
    return {"in_kernel_square": in_square, "cyclic_equivalent": equiv}


# ---------------------------------------------------------------------------
# weak right-equivalence
# ---------------------------------------------------------------------------

def verify_weak_right_equivalence(phi: PathMorphism, qp_src: ModulatedQP,
                                  qp_tgt: ModulatedQP, upto=None):
    """phi(J{m}) = J{m'} per degree; also reports full right-equivalence."""
    if phi.src is not qp_src.A or phi.tgt is not qp_tgt.A:
        raise QPError("morphism does not connect the two path algebras")
    f = phi.src.field
    n = phi.src.P.bim.dim
    phi1 = [[phi.images[i].comps.get(1, {}).get((j,), f.zero) for i in range(n)]
            for j in range(phi.tgt.P.bim.dim)]
    if scalar.invert_matrix(f, phi1) is None:
        raise QPError("not an isomorphism of path algebras")
    upto = upto or min(qp_src.maxdeg, qp_tgt.maxdeg)
    gens = [phi.apply(g) for g in qp_src.cyclic_derivatives() if not g.is_zero()]
    pushed = TruncatedIdeal(qp_tgt.A, [g for g in gens if not g.is_zero()], upto)
    target = qp_tgt.jacobian(upto)
    weak = pushed.layers_equal(target, upto)
    full = weak and qp_tgt.A.cyclically_equivalent(
        phi.apply(qp_src.m).top_truncate(upto), qp_tgt.m.top_truncate(upto))
    return {"weak": weak, "right_equivalent": full}


# ---------------------------------------------------------------------------
# skew reduction
# ---------------------------------------------------------------------------

class SkewReductionResult:
    def __init__(self, qp_src, qp_red, rho, i0_gens, i0_ideal, phi_images):
        self.qp_src = qp_src
        self.qp_red = qp_red
        self.rho = rho            # PathMorphism A -> A_red (the projection)
        self.i0_gens = i0_gens    # generators of the defect ideal in A_red
        self.i0 = i0_ideal        # TruncatedIdeal in A_red (may be empty)
        self.phi_images = phi_images  # letter images in A_red (mod I0)

    def phi_apply(self, x: PathElement):
        A = self.qp_red.A
        out = A.scalar_elt(x.kpart)
        cache = {}

        def img_word(w):
            if w in cache:
                return cache[w]
            if len(w) == 1:
                r = self.phi_images[w[0]]
            else:
                r = A.mul(img_word(w[:1]), img_word(w[1:]))
            cache[w] = r
            return r

        for d, ws in x.comps.items():
            for w, c in ws.items():
                out = A.add(out, A.scale(c, img_word(w)))
        out.trunc = out.trunc or x.trunc
        return out

    def in_kernel(self, x: PathElement, upto=None):
        """Membership of phi(x) in the defect ideal, certified up to a degree.

        x is typically a truncated ideal element; its missing tail only
        affects phi(x) above the truncation, so residuals there are
        ignored.
        """
        upto = upto or self.qp_red.maxdeg
        y = self.phi_apply(x).top_truncate(upto)
        if y.is_zero():
            return True
        if self.i0 is None:
            return False
        res = self.i0.span.reduce(_elem_to_row(y))
        return all(k[0] > upto for k in res)


def skew_reduce(qp: ModulatedQP) -> SkewReductionResult:
    """Reduction along the projection when B = V + B1 with U inside B1.

    Covers the split case (where it degenerates to the projection with
    I0 = 0) and the nonsplit one-sided case: the V-letters are sent to
    minus the higher part of their defining cyclic derivative, and the
    defect ideal I0 collects the bimodule closure of those relations.
    """
    A = qp.A
    f = A.field
    B, Bs = qp.pair.B, qp.pair.Bstar
    alg = A.algebra
    td = qp.trivial_data()
    U, V, triv = td["U"], td["V"], td["triv"]
    if not V:
        raise QPError("skew reduction needs a nonzero trivial part")
    # B1: span of basis vectors outside the V-blocks, plus U; must give B = V + B1
    vred, vpiv = scalar.rref(f, [list(r) for r in V])
    vblocks = set()
    for r in vred:
        for i, c in enumerate(r):
            if c != f.zero:
                vblocks.add(B.blocks[i])
    b1_rows = [list(B.basis_vec(i)) for i in range(B.dim) if B.blocks[i] not in vblocks]
    b1_rows += [list(r) for r in U]
    b1red, b1piv = scalar.rref(f, b1_rows)
    if len(b1red) + len(vred) != B.dim or scalar.intersect(f, b1red, vred, B.dim):
        raise QPError("hypothesis fails: B does not split as V + B1")
    if not is_action_closed(B, b1red):
        raise QPError("hypothesis fails: B1 is not a sub-bimodule")
    for r in U:
        if scalar.in_span(f, b1red, b1piv, list(r)) is None:
            raise QPError("hypothesis fails: U not inside B1")
    # m - m2 supported on B1 words
    m3 = A.sub(qp.m, qp.m.component(2))
    for d, ws in m3.comps.items():
        for w in ws:
            for i in w:
                if scalar.in_span(f, b1red, b1piv, list(B.basis_vec(i))) is None:
                    raise QPError("hypothesis fails: higher part of m leaves T(B1)")
    # reduced bimodule: quotient by trivB, modeled on a complement
    tred, tpiv = scalar.rref(f, [list(r) for r in triv])
    comp = scalar.complement_basis(f, tred, B.dim)
    qbim, qproj = _quotient_bimodule(B, tred, tpiv, comp)
    ker_sub, _ = sub_bimodule(Bs, td["kernel"], name="Bred*")
    beta1 = [[alg.zero] * ker_sub.dim for _ in range(qbim.dim)]
    beta2 = [[alg.zero] * qbim.dim for _ in range(ker_sub.dim)]
    for a, cvec in enumerate(comp):
        for bidx, krow in enumerate(td["kernel"]):
            beta1[a][bidx] = qp.pair.beta_bv(cvec, krow)
            beta2[bidx][a] = qp.pair.beta_vb(krow, cvec)
    red_pair = DualizingPair(qbim, ker_sub, beta1, beta2)
    A_red = PathAlgebra(red_pair, qp.maxdeg)
    # rho: letters to their cosets
    images = []
    for i in range(B.dim):
        vec = qproj(B.basis_vec(i))
        images.append(_degree_one(A_red, vec))
    rho = PathMorphism(A, A_red, images, validate=True)
    m_red = rho.apply(qp.m)
    qp_red = ModulatedQP(red_pair, m_red, qp.maxdeg, grade=qp.grade,
                         name=qp.name + "~skewred", algebra_cache=A_red)
    # phi on V: v -> -rho(higher part of cderiv at the preimage of v)
    cp = A.cyclic_perm(qp.m)
    p_mat = td["p"]
    phi_images = list(images)
    g_elems = []
    for r in vred:
        xi = scalar.solve(f, p_mat, list(r))
        if xi is None:
            raise QPError("cannot invert the degree-two derivative onto V")
        gfull = A.lder(_dual_elt(A, xi), cp)
        h = A.sub(gfull, gfull.component(1))
        g_elems.append((list(r), gfull, h))
    # bimodule closure of the relations g_v; defect ideal generated by the
    # closure elements with vanishing degree-one part
    span = scalar.SparseSpan(f)
    queue = []
    for _, gfull, _h in g_elems:
        row = _elem_to_row(gfull)
        if span.insert(dict(row)):
            queue.append(row)
    while queue:
        row = queue.pop()
        elem = PathElement(A.P, comps=_rows_to_comps(row), maxdeg=A.maxdeg)
        for s in range(alg.dim):
            es = alg.basis(s)
            for acted in (A.k_left(es, elem), A.k_right(elem, es)):
                arow = _elem_to_row(acted)
                if arow and span.insert(dict(arow)):
                    queue.append(arow)
    i0_gens = []
    for key, row in sorted(span.pivots.items()):
        if key[0] >= 2:
            elem = PathElement(A.P, comps=_rows_to_comps(row), maxdeg=A.maxdeg)
            i0_gens.append(rho.apply(elem))
    i0_gens = [g for g in i0_gens if not g.is_zero()]
    i0 = TruncatedIdeal(A_red, i0_gens, qp.maxdeg) if i0_gens else None
    for r, _gfull, h in g_elems:
        img = A_red.neg(rho.apply(h))
        # distribute onto the V letters of this basis vector
        phi_images = _override_images(A, A_red, phi_images, r, img)
    res = SkewReductionResult(qp, qp_red, rho, i0_gens, i0, phi_images)
    _validate_skew(res, qp, vred)
    return res


def _elem_to_row(x: PathElement):
    row = {}
    for d, ws in x.comps.items():
        for w, c in ws.items():
            row[(d, w)] = c
    return row


def _override_images(A, A_red, images, vrow, img):
    f = A.field
    out = list(images)
    support = [i for i, c in enumerate(vrow) if c != f.zero]
    if len(support) != 1 or vrow[support[0]] != f.one:
        raise QPError("V basis is not letter-aligned; align the session basis with V")
    out[support[0]] = img
    return out


def _quotient_bimodule(B: Bimodule, tred, tpiv, comp):
    """Quotient of B by an action-closed span, modeled on a complement."""
    f = B.field
    alg = B.algebra
    dim = len(comp)

    def proj(vec):
        v = list(vec)
        # reduce v modulo the span
        for row, pc in zip(tred, tpiv):
            c = v[pc]
            if c != f.zero:
                v = [f.sub(x, f.mul(c, y)) for x, y in zip(v, row)]
        # coordinates over comp (unit vectors at the free columns)
        out = [f.zero] * dim
        for k, cvec in enumerate(comp):
            idx = max((i for i, c in enumerate(cvec) if c != f.zero),
                      default=None)
            out[k] = v[idx]
        return out

    labels, blocks = [], []
    degrees = [] if B.degrees is not None else None
    for cvec in comp:
        i = max(i for i, c in enumerate(cvec) if c != f.zero)
        labels.append("q:" + B.labels[i])
        blocks.append(B.blocks[i])
        if degrees is not None:
            degrees.append(B.degrees[i])
    left, right = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for cvec in comp:
            lv = proj(B.act_basis_left(s, cvec))
            rv = proj(B.act_basis_right(s, cvec))
            lt.append([(j, c) for j, c in enumerate(lv) if c != f.zero])
            rt.append([(j, c) for j, c in enumerate(rv) if c != f.zero])
        left.append(lt)
        right.append(rt)
    qbim = Bimodule(alg, labels, blocks, left, right, degrees=degrees,
                    name=(B.name or "B") + "/triv")
    return qbim, proj


def _validate_skew(res: SkewReductionResult, qp: ModulatedQP, vred):
    A = qp.A
    f = A.field
    alg = A.algebra
    # phi must be a bimodule morphism modulo I0 and kill the potential
    for s in range(alg.dim):
        es = alg.basis(s)
        for i in range(qp.pair.B.dim):
            li = qp.pair.B.act_basis_left(s, qp.pair.B.basis_vec(i))
            want = res.qp_red.A.zero()
            for jj, c in enumerate(li):
                if c != f.zero:
                    want = res.qp_red.A.add(want, res.qp_red.A.scale(c, res.phi_images[jj]))
            got = res.qp_red.A.k_left(es, res.phi_images[i])
            diff = res.qp_red.A.sub(want, got)
            if not diff.is_zero() and (res.i0 is None or not res.i0.contains(diff)):
                raise QPError("skew reduction images fail K-linearity mod I0")
            ri = qp.pair.B.act_basis_right(s, qp.pair.B.basis_vec(i))
            want = res.qp_red.A.zero()
            for jj, c in enumerate(ri):
                if c != f.zero:
                    want = res.qp_red.A.add(want, res.qp_red.A.scale(c, res.phi_images[jj]))
            got = res.qp_red.A.k_right(res.phi_images[i], es)
            diff = res.qp_red.A.sub(want, got)
            if not diff.is_zero() and (res.i0 is None or not res.i0.contains(diff)):
                raise QPError("skew reduction images fail K-linearity mod I0")


def skew_derivative_ideal(qp: ModulatedQP, upto=None) -> TruncatedIdeal:
    """The ideal of cyclic derivatives taken at the trivial directions.

    Generated by cderiv(m) at every dual letter of the components of B
    that meet the trivial part; for a potential supported away from the
    other components this is the ideal written with two generators in
    the worked examples.
    """
    A = qp.A
    f = A.field
    B, Bs = qp.pair.B, qp.pair.Bstar
    td = qp.trivial_data()
    tred, tpiv = scalar.rref(f, [list(r) for r in td["triv"]])
    touched = set()
    for r in tred:
        for i, c in enumerate(r):
            if c != f.zero:
                touched.add(B.blocks[i])
    cp = A.cyclic_perm(qp.m)
    gens = []
    for j in range(Bs.dim):
        blk = Bs.blocks[j]
        if (blk[1], blk[0]) not in touched:
            continue
        g = A.lder(A.dual_letter_elt(j), cp)
        if not g.is_zero():
            gens.append(g)
    return TruncatedIdeal(A, gens, upto or qp.maxdeg)


def skew_kernel_certificate(res: SkewReductionResult, upto=None):
    """Ker(phi) equals the trivial-direction derivative ideal, per degree.

    Two facts are checked: every generator of the ideal (and hence the
    ideal) dies under phi, and the quotient of the source by the ideal
    matches the image of phi dimensionwise in every degree, which pins
    the kernel down to the ideal exactly.
    """
    qp = res.qp_src
    A = qp.A
    upto = upto or qp.maxdeg
    j0 = skew_derivative_ideal(qp, upto)
    for row in j0.span.pivots.values():
        elem = PathElement(A.P, comps=_rows_to_comps(row), maxdeg=A.maxdeg)
        if not res.in_kernel(elem, upto=upto):
            return False, j0
    src_dims = j0.quotient_dims(upto)
    Ared = res.qp_red.A
    img_dims = [A.algebra.dim]
    for l in range(1, upto + 1):
        rank = res.i0.layer_rank(l) if res.i0 is not None else 0
        img_dims.append(Ared.P.dim_of_degree(l) - rank)
    return src_dims == img_dims, j0
