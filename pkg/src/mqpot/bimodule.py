"""K-bimodules and symmetrizable dualizing pairs.

A bimodule stores sparse left/right action tables over the algebra's
k-basis, a block label (i, j) per basis vector (the vector lies in
1_i B 1_j), and an optional integer grade per basis vector.  The dual
is always realized concretely as the k-dual with the trace-induced
actions and bilinear form; pairs built any other way are validated
against the same axioms.

Right-module bases per block (with rewrite tables expressing every
basis vector as sum b * c with c in the target factor) are computed
here; the path algebra uses them to put tensor words over K into a
canonical form.
"""

from __future__ import annotations

from . import scalar
from .scalar import rref, in_span, kernel_basis, solve, vec_add, vec_scale


class BimoduleError(ValueError):
    pass


class Bimodule:
    def __init__(self, algebra, labels, blocks, left, right, degrees=None, name=""):
        """left[s][i] / right[s][i]: list of (j, coeff) for e_s . v_i / v_i . e_s."""
        self.algebra = algebra
        self.field = algebra.field
        self.labels = list(labels)
        self.blocks = list(blocks)
        self.left = left
        self.right = right
        self.dim = len(self.labels)
        self.degrees = list(degrees) if degrees is not None else None
        self.name = name
        self._right_basis = None
        self._rewrite = None
        self._validate()

    # -- actions -------------------------------------------------------------

    def act_basis_left(self, s, vec):
        f = self.field
        out = [f.zero] * self.dim
        tab = self.left[s]
        for i, x in enumerate(vec):
            if x == f.zero:
                continue
            for j, c in tab[i]:
                out[j] = f.add(out[j], f.mul(x, c))
        return out

    def act_basis_right(self, s, vec):
        f = self.field
        out = [f.zero] * self.dim
        tab = self.right[s]
        for i, x in enumerate(vec):
            if x == f.zero:
                continue
            for j, c in tab[i]:
                out[j] = f.add(out[j], f.mul(x, c))
        return out

    def act_left(self, a, vec):
        """a . vec for a an algebra element (tuple of coords)."""
        f = self.field
        out = [f.zero] * self.dim
        for s, xs in enumerate(a):
            if xs == f.zero:
                continue
            part = self.act_basis_left(s, vec)
            for j, y in enumerate(part):
                if y != f.zero:
                    out[j] = f.add(out[j], f.mul(xs, y))
        return out

    def act_right(self, a, vec):
        f = self.field
        out = [f.zero] * self.dim
        for s, xs in enumerate(a):
            if xs == f.zero:
                continue
            part = self.act_basis_right(s, vec)
            for j, y in enumerate(part):
                if y != f.zero:
                    out[j] = f.add(out[j], f.mul(xs, y))
        return out

    def basis_vec(self, i):
        v = [self.field.zero] * self.dim
        v[i] = self.field.one
        return v

    # -- validation ----------------------------------------------------------

    def _validate(self):
        alg, f = self.algebra, self.field
        if len(self.blocks) != self.dim or len(self.left) != alg.dim or len(self.right) != alg.dim:
            raise BimoduleError("action table shape mismatch")
        for i, (bi, bj) in enumerate(self.blocks):
            v = self.basis_vec(i)
            if self.act_left(alg.unit_of_factor(bi), v) != v:
                raise BimoduleError("%s: left unit of block fails on %s" % (self.name, self.labels[i]))
            if self.act_right(alg.unit_of_factor(bj), v) != v:
                raise BimoduleError("%s: right unit of block fails on %s" % (self.name, self.labels[i]))
            if self.act_left(alg.one, v) != v or self.act_right(alg.one, v) != v:
                raise BimoduleError("%s: unity does not act as identity" % self.name)
        for s in range(alg.dim):
            es = alg.basis(s)
            for t in range(alg.dim):
                et = alg.basis(t)
                prod = alg.mul(es, et)
                for i in range(self.dim):
                    v = self.basis_vec(i)
                    if self.act_left(es, self.act_left(et, v)) != self.act_left(prod, v):
                        raise BimoduleError("%s: left action not associative" % self.name)
                    if self.act_right(et, self.act_right(es, v)) != self.act_right(prod, v):
                        raise BimoduleError("%s: right action not associative" % self.name)
                    if self.act_left(es, self.act_right(et, v)) != self.act_right(et, self.act_left(es, v)):
                        raise BimoduleError("%s: left and right actions do not commute" % self.name)
        if self.degrees is not None:
            for s in range(alg.dim):
                for i in range(self.dim):
                    for j, c in self.left[s][i]:
                        if c != f.zero and self.degrees[j] != self.degrees[i]:
                            raise BimoduleError("%s: left action not degree preserving" % self.name)
                    for j, c in self.right[s][i]:
                        if c != f.zero and self.degrees[j] != self.degrees[i]:
                            raise BimoduleError("%s: right action not degree preserving" % self.name)

    # -- right-module bases and rewriting -------------------------------------

    def _build_right_basis(self):
        """Greedy right-k_j basis per block plus rewrite coefficients."""
        alg, f = self.algebra, self.field
        chosen = []
        gen_cols = []   # generator vectors: chosen b acted by factor basis
        gen_meta = []   # (chosen basis index, algebra basis index)
        rewrite = [None] * self.dim
        for i in range(self.dim):
            v = self.basis_vec(i)
            sol = None
            if gen_cols:
                sol = solve(f, [[col[c] for col in gen_cols] for c in range(self.dim)], v)
            if sol is None:
                chosen.append(i)
                bj = self.blocks[i][1]
                off = alg.offsets[bj]
                for t in range(alg.factors[bj].dim):
                    col = self.act_basis_right(off + t, v)
                    gen_cols.append(col)
                    gen_meta.append((i, off + t))
                sol = solve(f, [[col[c] for col in gen_cols] for c in range(self.dim)], v)
                assert sol is not None
            combo = {}
            for lam, (b, s) in zip(sol, gen_meta):
                if lam != f.zero:
                    cur = list(combo.get(b, alg.zero))
                    cur[s] = f.add(cur[s], lam)
                    combo[b] = tuple(cur)
            rewrite[i] = sorted(combo.items())
        self._right_basis = chosen
        self._rewrite = rewrite

    @property
    def right_basis(self):
        if self._right_basis is None:
            self._build_right_basis()
        return self._right_basis

    @property
    def rewrite(self):
        if self._rewrite is None:
            self._build_right_basis()
        return self._rewrite

    def right_rank_of_block(self, i, j):
        return sum(1 for b in self.right_basis if self.blocks[b] == (i, j))

    def block_dim(self, i, j):
        return sum(1 for b in self.blocks if b == (i, j))


def is_bimodule_morphism(src, tgt, mat, degree_shift=None):
    """mat: tgt.dim x src.dim over k; checks both action compatibilities."""
    f = src.field
    alg = src.algebra
    for s in range(alg.dim):
        for i in range(src.dim):
            v = src.basis_vec(i)
            img = scalar.mat_mul_vec(f, mat, v)
            lhs = scalar.mat_mul_vec(f, mat, src.act_basis_left(s, v))
            if lhs != tgt.act_basis_left(s, img):
                return False
            lhs = scalar.mat_mul_vec(f, mat, src.act_basis_right(s, v))
            if lhs != tgt.act_basis_right(s, img):
                return False
    if degree_shift is not None and src.degrees is not None and tgt.degrees is not None:
        for i in range(src.dim):
            for j in range(tgt.dim):
                if mat[j][i] != f.zero and tgt.degrees[j] != src.degrees[i] + degree_shift:
                    return False
    return True


def bimodule_morphism_space(src, tgt, degree_shift=None):
    """Basis of the space of bimodule morphisms src -> tgt (as matrices)."""
    f = src.field
    alg = src.algebra
    nun = tgt.dim * src.dim
    rows = []

    def idx(j, i):
        return j * src.dim + i

    action_rows = {}
    for side in ("left", "right"):
        for s in range(alg.dim):
            for j in range(tgt.dim):
                action_rows[(side, s, j)] = _action_row(tgt, side, s, j)
    for s in range(alg.dim):
        for i in range(src.dim):
            v = src.basis_vec(i)
            for side, av in (("left", src.act_basis_left(s, v)),
                             ("right", src.act_basis_right(s, v))):
                for j in range(tgt.dim):
                    row = {}
                    for k, c in enumerate(av):
                        if c != f.zero:
                            key = idx(j, k)
                            row[key] = f.add(row.get(key, f.zero), c)
                    for (jj, c) in action_rows[(side, s, j)]:
                        key = idx(jj, i)
                        nv = f.sub(row.get(key, f.zero), c)
                        if nv == f.zero:
                            row.pop(key, None)
                        else:
                            row[key] = nv
                    if row:
                        rows.append(row)
    if degree_shift is not None and src.degrees is not None and tgt.degrees is not None:
        for i in range(src.dim):
            for j in range(tgt.dim):
                if tgt.degrees[j] != src.degrees[i] + degree_shift:
                    rows.append({idx(j, i): f.one})
    ker = scalar.sparse_kernel(f, rows, nun)
    out = []
    for k in ker:
        out.append([[k[idx(j, i)] for i in range(src.dim)] for j in range(tgt.dim)])
    return out


def _action_row(bim, side, s, j):
    """Pairs (i, c) with c the coefficient at coordinate j of e_s acting on basis i."""
    tab = bim.left[s] if side == "left" else bim.right[s]
    out = []
    for i in range(bim.dim):
        for jj, c in tab[i]:
            if jj == j:
                out.append((i, c))
    return out


def bimodule_iso(src, tgt, graded=False):
    """Some bimodule isomorphism src -> tgt, or None."""
    if src.dim != tgt.dim:
        return None
    shift = 0 if (graded and src.degrees is not None) else None
    space = bimodule_morphism_space(src, tgt, degree_shift=shift)
    f = src.field
    acc = None
    for basis_mat in space:
        if scalar.invert_matrix(f, basis_mat) is not None:
            return basis_mat
        if acc is None:
            acc = [row[:] for row in basis_mat]
        else:
            acc = [[f.add(x, y) for x, y in zip(r1, r2)] for r1, r2 in zip(acc, basis_mat)]
            if scalar.invert_matrix(f, acc) is not None:
                return acc
    return None


# ---------------------------------------------------------------------------
# dualizing pairs
# ---------------------------------------------------------------------------

class DualizingPair:
    """{B, B*; beta} with both Casimir elements, fully validated."""

    def __init__(self, B, Bstar, beta1, beta2, validate=True):
        self.B = B
        self.Bstar = Bstar
        self.algebra = B.algebra
        self.field = B.field
        self.beta1 = beta1  # beta1[i][j] = beta(v_i (x) xi_j) in K
        self.beta2 = beta2  # beta2[j][i] = beta(xi_j (x) v_i) in K
        self.z1 = None      # z[B (x) B*]  as list of (i, j, coeff)
        self.z2 = None      # z[B* (x) B]  as list of (j, i, coeff)
        if validate:
            self._validate()
        self._solve_casimirs()
        if validate:
            self._check_dualbases()

    # beta on elements -------------------------------------------------------

    def beta_bv(self, vec, dvec):
        """beta(x (x) xi) for coordinate vectors; zero on block mismatch."""
        alg, f = self.algebra, self.field
        out = alg.zero
        for i, x in enumerate(vec):
            if x == f.zero:
                continue
            for j, y in enumerate(dvec):
                if y == f.zero:
                    continue
                out = alg.add(out, alg.scale(f.mul(x, y), self.beta1[i][j]))
        return out

    def beta_vb(self, dvec, vec):
        alg, f = self.algebra, self.field
        out = alg.zero
        for j, y in enumerate(dvec):
            if y == f.zero:
                continue
            for i, x in enumerate(vec):
                if x == f.zero:
                    continue
                out = alg.add(out, alg.scale(f.mul(y, x), self.beta2[j][i]))
        return out

    # validation --------------------------------------------------------------

    def _validate(self):
        alg = self.algebra
        B, Bs = self.B, self.Bstar
        for i in range(B.dim):
            for j in range(Bs.dim):
                if alg.tr(self.beta1[i][j]) != alg.tr(self.beta2[j][i]):
                    raise BimoduleError("pairing not symmetrizable at (%d,%d)" % (i, j))
        if B.degrees is not None and Bs.degrees is not None:
            z = self.field.zero
            for i in range(B.dim):
                for j in range(Bs.dim):
                    if B.degrees[i] + Bs.degrees[j] != 0:
                        if any(c != z for c in self.beta1[i][j]) or any(c != z for c in self.beta2[j][i]):
                            raise BimoduleError("graded pairing fails degree rule")
        for s in range(alg.dim):
            es = alg.basis(s)
            for i in range(B.dim):
                vi = B.basis_vec(i)
                for j in range(Bs.dim):
                    xj = Bs.basis_vec(j)
                    # beta(a x (x) xi) = a beta(x (x) xi) and beta(x (x) xi a) = beta(...) a
                    if self.beta_bv(B.act_left(es, vi), xj) != alg.mul(es, self.beta1[i][j]):
                        raise BimoduleError("beta not left K-linear")
                    if self.beta_bv(vi, Bs.act_right(es, xj)) != alg.mul(self.beta1[i][j], es):
                        raise BimoduleError("beta not right K-linear")
                    if self.beta_bv(B.act_right(es, vi), xj) != self.beta_bv(vi, Bs.act_left(es, xj)):
                        raise BimoduleError("beta not balanced over K")
                    if self.beta_vb(Bs.act_left(es, xj), vi) != alg.mul(es, self.beta2[j][i]):
                        raise BimoduleError("beta (dual side) not left K-linear")
                    if self.beta_vb(xj, B.act_right(es, vi)) != alg.mul(self.beta2[j][i], es):
                        raise BimoduleError("beta (dual side) not right K-linear")
                    if self.beta_vb(Bs.act_right(es, xj), vi) != self.beta_vb(xj, B.act_left(es, vi)):
                        raise BimoduleError("beta (dual side) not balanced over K")

    def _solve_casimirs(self):
        """Exact solve of the characterizing identities for both Casimirs."""
        f = self.field
        B, Bs = self.B, self.Bstar
        n, m = B.dim, Bs.dim
        # z1 = sum c_ij v_i (x) xi_j with sum_ij c_ij v_i . beta(xi_j (x) x) = x
        rows = []
        rhs = []
        cols = []
        for i in range(n):
            for j in range(m):
                cols.append((i, j))
        colvecs = {}
        for t in range(n):
            vt = B.basis_vec(t)
            for (i, j) in cols:
                kappa = self.beta2[j][t]
                colvecs[(i, j, t)] = B.act_right(kappa, B.basis_vec(i))
        for t in range(n):
            for c in range(n):
                rows.append([colvecs[(i, j, t)][c] for (i, j) in cols])
                rhs.append(f.one if (t == c) else f.zero)
        sol = solve(f, rows, rhs)
        if sol is None:
            raise BimoduleError("pairing degenerate: no Casimir in B (x) B*")
        self.z1 = [(i, j, cv) for (i, j), cv in zip(cols, sol) if cv != f.zero]
        # z2 = sum d_ji xi_j (x) v_i with sum beta(x (x) xi_j) . v_i = x
        cols2 = [(j, i) for j in range(m) for i in range(n)]
        colvecs2 = {}
        for t in range(n):
            for (j, i) in cols2:
                kappa = self.beta1[t][j]
                colvecs2[(j, i, t)] = B.act_left(kappa, B.basis_vec(i))
        rows2, rhs2 = [], []
        for t in range(n):
            for c in range(n):
                rows2.append([colvecs2[(j, i, t)][c] for (j, i) in cols2])
                rhs2.append(f.one if (t == c) else f.zero)
        sol2 = solve(f, rows2, rhs2)
        if sol2 is None:
            raise BimoduleError("pairing degenerate: no Casimir in B* (x) B")
        self.z2 = [(j, i, cv) for (j, i), cv in zip(cols2, sol2) if cv != f.zero]

    def _check_dualbases(self):
        """All four characterizing identities, on every basis vector."""
        f = self.field
        alg = self.algebra
        B, Bs = self.B, self.Bstar
        for t in range(B.dim):
            x = B.basis_vec(t)
            acc = [f.zero] * B.dim
            for (i, j, cv) in self.z1:
                kappa = self.beta2[j][t]
                acc = vec_add(f, acc, vec_scale(f, cv, B.act_right(kappa, B.basis_vec(i))))
            if acc != x:
                raise BimoduleError("Casimir identity fails in B (x) B*")
            acc = [f.zero] * B.dim
            for (j, i, cv) in self.z2:
                kappa = self.beta1[t][j]
                acc = vec_add(f, acc, vec_scale(f, cv, B.act_left(kappa, B.basis_vec(i))))
            if acc != x:
                raise BimoduleError("Casimir identity fails in B* (x) B")
        for t in range(Bs.dim):
            xi = Bs.basis_vec(t)
            acc = [f.zero] * Bs.dim
            for (i, j, cv) in self.z1:
                kappa = self.beta2[t][i]
                acc = vec_add(f, acc, vec_scale(f, cv, Bs.act_left(kappa, Bs.basis_vec(j))))
            if acc != xi:
                raise BimoduleError("dual Casimir identity fails in B (x) B*")
            acc = [f.zero] * Bs.dim
            for (j, i, cv) in self.z2:
                kappa = self.beta1[i][t]
                acc = vec_add(f, acc, vec_scale(f, cv, Bs.act_right(kappa, Bs.basis_vec(j))))
            if acc != xi:
                raise BimoduleError("dual Casimir identity fails in B* (x) B")

    def casimirs(self):
        return self.z1, self.z2


def dualize(B: Bimodule) -> DualizingPair:
    """Canonical pair on the k-dual of B, with trace-induced beta."""
    alg, f = B.algebra, B.field
    labels = [lab + "*" for lab in B.labels]
    blocks = [(j, i) for (i, j) in B.blocks]
    degrees = [-d for d in B.degrees] if B.degrees is not None else None
    # (a . delta_i)(x) = delta_i(x . a)  and  (delta_i . b)(x) = delta_i(b . x)
    left = []
    right = []
    for s in range(alg.dim):
        lt = [[] for _ in range(B.dim)]
        rt = [[] for _ in range(B.dim)]
        for jvec in range(B.dim):
            rv = B.act_basis_right(s, B.basis_vec(jvec))
            lv = B.act_basis_left(s, B.basis_vec(jvec))
            for i, c in enumerate(rv):
                if c != f.zero:
                    lt[i].append((jvec, c))
            for i, c in enumerate(lv):
                if c != f.zero:
                    rt[i].append((jvec, c))
        left.append(lt)
        right.append(rt)
    Bstar = Bimodule(alg, labels, blocks, left, right, degrees=degrees,
                     name=(B.name + "*") if B.name else "dual")
    # beta(v_i (x) delta_j) = sum_s e_s delta_j(e*_s v_i)
    # beta(delta_j (x) v_i) = sum_s e_s delta_j(v_i e*_s)
    beta1 = [[alg.zero] * B.dim for _ in range(B.dim)]
    beta2 = [[alg.zero] * B.dim for _ in range(B.dim)]
    for i in range(B.dim):
        vi = B.basis_vec(i)
        for s in range(alg.dim):
            lv = B.act_left(alg.dual_basis[s], vi)
            rv = B.act_right(alg.dual_basis[s], vi)
            es = alg.basis(s)
            for j in range(B.dim):
                if lv[j] != f.zero:
                    beta1[i][j] = alg.add(beta1[i][j], alg.scale(lv[j], es))
                if rv[j] != f.zero:
                    beta2[j][i] = alg.add(beta2[j][i], alg.scale(rv[j], es))
    return DualizingPair(B, Bstar, beta1, beta2)


# ---------------------------------------------------------------------------
# tensor products of bimodules and of pairs
# ---------------------------------------------------------------------------

class TensorBimodule(Bimodule):
    """B (x)_K B' with canonical basis (right-basis of B) x (basis of B')."""

    def __init__(self, B1, B2, name=""):
        self.B1 = B1
        self.B2 = B2
        self.field = B1.field  # needed by inject_raw before Bimodule.__init__
        alg, f = B1.algebra, B1.field
        pairs = []
        for b in B1.right_basis:
            for v in range(B2.dim):
                if B1.blocks[b][1] == B2.blocks[v][0]:
                    pairs.append((b, v))
        self.pairs = pairs
        self.pair_index = {p: k for k, p in enumerate(pairs)}
        labels = ["%s|%s" % (B1.labels[b], B2.labels[v]) for b, v in pairs]
        blocks = [(B1.blocks[b][0], B2.blocks[v][1]) for b, v in pairs]
        degrees = None
        if B1.degrees is not None and B2.degrees is not None:
            degrees = [B1.degrees[b] + B2.degrees[v] for b, v in pairs]
        left = []
        right = []
        for s in range(alg.dim):
            lt = [[] for _ in pairs]
            rt = [[] for _ in pairs]
            for k, (b, v) in enumerate(pairs):
                img = self.inject_raw({(b, v): f.one}, act=("left", s))
                lt[k] = sorted(img.items())
                rv = B2.act_basis_right(s, B2.basis_vec(v))
                rt[k] = [(self.pair_index[(b, j)], c) for j, c in enumerate(rv)
                         if c != f.zero and (b, j) in self.pair_index]
            left.append(lt)
            right.append(rt)
        super().__init__(alg, labels, blocks, left, right, degrees=degrees, name=name)

    def inject_raw(self, raw, act=None):
        """Canonicalize {(i, j): coeff} over all B1 x B2 basis pairs.

        Rewrites the first slot over the right basis of B1, pushing the
        factor coefficient into the second slot.  With act=("left", s)
        the algebra basis element s is applied on the left first.
        """
        f = self.field
        B1, B2 = self.B1, self.B2
        out = {}
        work = dict(raw)
        if act is not None:
            side, s = act
            assert side == "left"
            nxt = {}
            for (i, j), c in work.items():
                lv = B1.act_basis_left(s, B1.basis_vec(i))
                for i2, x in enumerate(lv):
                    if x != f.zero:
                        key = (i2, j)
                        nxt[key] = f.add(nxt.get(key, f.zero), f.mul(c, x))
            work = nxt
        for (i, j), c in work.items():
            if c == f.zero:
                continue
            for b, kap in B1.rewrite[i]:
                jv = B2.act_left(kap, B2.basis_vec(j))
                for j2, y in enumerate(jv):
                    if y != f.zero:
                        key = self.pair_index.get((b, j2))
                        if key is None:
                            raise BimoduleError("incompatible tensor pair")
                        out[key] = f.add(out.get(key, f.zero), f.mul(c, y))
        return {k: v for k, v in out.items() if v != f.zero}

    def from_raw_pairs(self, raw):
        """Coordinate vector from a raw {(i, j): coeff} dict."""
        d = self.inject_raw(raw)
        v = [self.field.zero] * self.dim
        for k, c in d.items():
            v[k] = c
        return v


def pair_tensor(p1: DualizingPair, p2: DualizingPair, name="") -> DualizingPair:
    """Product pair {B (x) B', B'* (x) B*} with the induced form."""
    alg = p1.algebra
    B = TensorBimodule(p1.B, p2.B, name=name or "tensor")
    Bs = TensorBimodule(p2.Bstar, p1.Bstar, name=(name or "tensor") + "*")
    f = alg.field
    beta1 = [[alg.zero] * Bs.dim for _ in range(B.dim)]
    beta2 = [[alg.zero] * B.dim for _ in range(Bs.dim)]
    for bi, (x, xp) in enumerate(B.pairs):
        for dj, (up, u) in enumerate(Bs.pairs):
            # beta(x (x) x' (x) u' (x) u) = beta(x . beta'(x' (x) u') (x) u)
            kappa = p2.beta1[xp][up]
            xv = p1.B.act_right(kappa, p1.B.basis_vec(x))
            beta1[bi][dj] = p1.beta_bv(xv, p1.Bstar.basis_vec(u))
            # beta(u' (x) u (x) x (x) x') = beta'(u' . beta(u (x) x) (x) x')
            kappa2 = p1.beta2[u][x]
            uv = p2.Bstar.act_right(kappa2, p2.Bstar.basis_vec(up))
            beta2[dj][bi] = p2.beta_vb(uv, p2.B.basis_vec(xp))
    return DualizingPair(B, Bs, beta1, beta2)


def morphism_dual(fmat, pair_src: DualizingPair, pair_tgt: DualizingPair):
    """Dual of a bimodule morphism f: B -> B' between pair primal sides.

    Returns the matrix of f*: B'* -> B* with
    beta'(f(x) (x) xi') = beta(x (x) f*(xi')).
    """
    f = pair_src.field
    B, Bs = pair_src.B, pair_src.Bstar
    Bp, Bps = pair_tgt.B, pair_tgt.Bstar
    out = []
    for j in range(Bps.dim):
        rows = []
        rhs = []
        for t in range(B.dim):
            img = scalar.mat_mul_vec(f, fmat, B.basis_vec(t))
            lhs = pair_tgt.beta_bv(img, Bps.basis_vec(j))
            for c in range(pair_src.algebra.dim):
                rows.append([pair_src.beta1[t][m][c] for m in range(Bs.dim)])
                rhs.append(lhs[c])
        sol = solve(f, rows, rhs)
        if sol is None:
            raise BimoduleError("morphism has no dual (pairing degenerate?)")
        out.append(sol)
    # matrix of f*: columns indexed by B'* basis
    fstar = [[out[j][m] for j in range(Bps.dim)] for m in range(Bs.dim)]
    # cross-check the second defining identity
    for j in range(Bps.dim):
        xib = [fstar[m][j] for m in range(Bs.dim)]
        for t in range(B.dim):
            img = scalar.mat_mul_vec(f, fmat, B.basis_vec(t))
            lhs = pair_tgt.beta_vb(Bps.basis_vec(j), img)
            rhs = pair_src.beta_vb(xib, B.basis_vec(t))
            if lhs != rhs:
                raise BimoduleError("dual morphism fails the mirrored identity")
    return fstar


# ---------------------------------------------------------------------------
# sub-bimodules, complements, direct sums
# ---------------------------------------------------------------------------

def is_action_closed(B: Bimodule, span_rows):
    f = B.field
    red, piv = rref(f, [list(r) for r in span_rows])
    alg = B.algebra
    for v in red:
        for s in range(alg.dim):
            if in_span(f, red, piv, B.act_basis_left(s, v)) is None:
                return False
            if in_span(f, red, piv, B.act_basis_right(s, v)) is None:
                return False
    return True


def sub_bimodule(B: Bimodule, span_rows, name=""):
    """(sub as Bimodule, inclusion matrix B.dim x sub.dim)."""
    f = B.field
    red, piv = rref(f, [list(r) for r in span_rows])
    if not is_action_closed(B, red):
        raise BimoduleError("span is not closed under the actions")
    alg = B.algebra
    dim = len(red)
    blocks = []
    degrees = [] if B.degrees is not None else None
    for v in red:
        blk = None
        deg = None
        for i, c in enumerate(v):
            if c != f.zero:
                if blk is None:
                    blk = B.blocks[i]
                    if degrees is not None:
                        deg = B.degrees[i]
                elif B.blocks[i] != blk or (degrees is not None and B.degrees[i] != deg):
                    raise BimoduleError("sub-bimodule basis vector mixes blocks or degrees")
        blocks.append(blk)
        if degrees is not None:
            degrees.append(deg)
    left, right = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for v in red:
            lc = in_span(f, red, piv, B.act_basis_left(s, v))
            rc = in_span(f, red, piv, B.act_basis_right(s, v))
            lt.append([(j, c) for j, c in enumerate(lc) if c != f.zero])
            rt.append([(j, c) for j, c in enumerate(rc) if c != f.zero])
        left.append(lt)
        right.append(rt)
    labels = ["%s_%d" % (name or "sub", k) for k in range(dim)]
    sub = Bimodule(alg, labels, blocks, left, right, degrees=degrees, name=name or "sub")
    incl = [[red[k][c] for k in range(dim)] for c in range(B.dim)]
    return sub, incl


def summand_complement(B: Bimodule, span_rows):
    """Bimodule complement of an action-closed span, or None if non-split.

    Solves linearly for a bimodule projector onto the span; the
    complement is its kernel.  Degree constraints are imposed when the
    bimodule is graded.
    """
    f = B.field
    red, piv = rref(f, [list(r) for r in span_rows])
    if not red:
        return [list(B.basis_vec(i)) for i in range(B.dim)]
    if not is_action_closed(B, red):
        raise BimoduleError("span is not closed under the actions")
    alg = B.algebra
    r = len(red)
    n = B.dim
    nun = r * n  # pi = U^T X, unknown X is r x n

    def idx(k, i):
        return k * n + i

    rows, rhs = [], []
    # pi fixes the span: pi u_t = u_t for span basis u_t
    for t in range(r):
        u = red[t]
        for c in range(n):
            row = [f.zero] * nun
            for k in range(r):
                for i in range(n):
                    if u[i] != f.zero and red[k][c] != f.zero:
                        row[idx(k, i)] = f.add(row[idx(k, i)], f.mul(red[k][c], u[i]))
            rows.append(row)
            rhs.append(u[c])
    # pi commutes with both actions
    for s in range(alg.dim):
        for side in ("left", "right"):
            act = B.act_basis_left if side == "left" else B.act_basis_right
            acted_basis = [act(s, B.basis_vec(i)) for i in range(n)]
            acted_red = [act(s, u) for u in red]
            for i in range(n):
                for c in range(n):
                    row = [f.zero] * nun
                    # (pi . act)(e_i) coefficient at c
                    for k in range(r):
                        for j, x in enumerate(acted_basis[i]):
                            if x != f.zero and red[k][c] != f.zero:
                                row[idx(k, j)] = f.add(row[idx(k, j)], f.mul(red[k][c], x))
                    # minus (act . pi)(e_i) coefficient at c
                    for k in range(r):
                        if acted_red[k][c] != f.zero:
                            row[idx(k, i)] = f.sub(row[idx(k, i)], acted_red[k][c])
                    rows.append(row)
                    rhs.append(f.zero)
    if B.degrees is not None:
        for k in range(r):
            deg_k = None
            for i, c in enumerate(red[k]):
                if c != f.zero:
                    deg_k = B.degrees[i]
                    break
            for i in range(n):
                if B.degrees[i] != deg_k:
                    row = [f.zero] * nun
                    row[idx(k, i)] = f.one
                    rows.append(row)
                    rhs.append(f.zero)
    sol = solve(f, rows, rhs)
    if sol is None:
        return None
    proj = [[f.zero] * n for _ in range(n)]
    for k in range(r):
        for i in range(n):
            x = sol[idx(k, i)]
            if x != f.zero:
                for c in range(n):
                    proj[c][i] = f.add(proj[c][i], f.mul(x, red[k][c]))
    comp = kernel_basis(f, proj, n)
    assert len(comp) + r == n
    return comp


def direct_sum(components, name=""):
    """Direct sum with component offsets; components: list of (name, Bimodule)."""
    alg = components[0][1].algebra
    f = alg.field
    labels, blocks = [], []
    degrees = [] if all(b.degrees is not None for _, b in components) else None
    offsets = {}
    off = 0
    for cname, b in components:
        offsets[cname] = (off, b.dim)
        labels.extend(["%s:%s" % (cname, lab) for lab in b.labels])
        blocks.extend(b.blocks)
        if degrees is not None:
            degrees.extend(b.degrees)
        off += b.dim
    left, right = [], []
    for s in range(alg.dim):
        lt, rt = [], []
        for cname, b in components:
            base = offsets[cname][0]
            for i in range(b.dim):
                lt.append([(base + j, c) for j, c in b.left[s][i]])
                rt.append([(base + j, c) for j, c in b.right[s][i]])
        left.append(lt)
        right.append(rt)
    out = Bimodule(alg, labels, blocks, left, right, degrees=degrees, name=name or "sum")
    out.component_offsets = offsets
    return out


# ---------------------------------------------------------------------------
# shorthand constructors
# ---------------------------------------------------------------------------

def _local_mul(factor, field, a, b):
    """Multiply two local coefficient lists in one factor."""
    out = [field.zero] * factor.dim
    for s, x in enumerate(a):
        if x == field.zero:
            continue
        for t, y in enumerate(b):
            if y == field.zero:
                continue
            c = field.mul(x, y)
            for k, struct in enumerate(factor.mul_table[s][t]):
                if struct != field.zero:
                    out[k] = field.add(out[k], field.mul(c, struct))
    return out


def _default_embedding(alg, factor_idx, carrier_idx):
    """Embedding of factor into carrier: identity, or scalars for dim one."""
    f = alg.field
    src = alg.factors[factor_idx]
    car = alg.factors[carrier_idx]
    if factor_idx == carrier_idx or (src.dim == car.dim and src.mul_table == car.mul_table):
        return [[f.one if i == j else f.zero for j in range(car.dim)] for i in range(src.dim)]
    if src.dim == 1:
        gamma = src.unit_coords[0]
        lam = f.inv(gamma)
        return [[f.mul(lam, c) for c in car.unit_coords]]
    raise BimoduleError("no default embedding of factor %s into %s" % (src.name, car.name))


def _check_embedding(alg, factor_idx, carrier_idx, emb):
    f = alg.field
    src = alg.factors[factor_idx]
    car = alg.factors[carrier_idx]
    unit_img = [f.zero] * car.dim
    for s, c in enumerate(src.unit_coords):
        if c != f.zero:
            unit_img = [f.add(x, f.mul(c, y)) for x, y in zip(unit_img, emb[s])]
    if unit_img != list(car.unit_coords):
        raise BimoduleError("embedding is not unital")
    for s in range(src.dim):
        for t in range(src.dim):
            prod_img = [f.zero] * car.dim
            for k, c in enumerate(src.mul_table[s][t]):
                if c != f.zero:
                    prod_img = [f.add(x, f.mul(c, y)) for x, y in zip(prod_img, emb[k])]
            if prod_img != _local_mul(car, f, emb[s], emb[t]):
                raise BimoduleError("embedding is not multiplicative")


def natural_bimodule(alg, i, j, carrier, left_embed=None, right_embed=None,
                     name="", degrees=None):
    """The carrier factor as a k_i-k_j-bimodule through unital embeddings.

    A conjugate bimodule is obtained by composing right_embed with a
    field automorphism of the carrier (pass its matrix directly).
    """
    f = alg.field
    car = alg.factors[carrier]
    le = left_embed if left_embed is not None else _default_embedding(alg, i, carrier)
    re_ = right_embed if right_embed is not None else _default_embedding(alg, j, carrier)
    _check_embedding(alg, i, carrier, le)
    _check_embedding(alg, j, carrier, re_)
    m = car.dim
    labels = list(car.labels)
    blocks = [(i, j)] * m
    left, right = [], []
    for s in range(alg.dim):
        fi = alg.factor_of[s]
        lt = [[] for _ in range(m)]
        rt = [[] for _ in range(m)]
        if fi == i:
            loc = s - alg.offsets[i]
            for v in range(m):
                img = _local_mul(car, f, le[loc], [f.one if t == v else f.zero for t in range(m)])
                lt[v] = [(t, c) for t, c in enumerate(img) if c != f.zero]
        if fi == j:
            loc = s - alg.offsets[j]
            for v in range(m):
                img = _local_mul(car, f, [f.one if t == v else f.zero for t in range(m)], re_[loc])
                rt[v] = [(t, c) for t, c in enumerate(img) if c != f.zero]
        left.append(lt)
        right.append(rt)
    return Bimodule(alg, labels, blocks, left, right, degrees=degrees, name=name)


def extension_tensor_bimodule(alg, i, j, subring, name="", degrees=None):
    """F (x)_E F as a k_i-k_j-bimodule, for factors i, j with equal tables.

    subring: elements of the common factor (local coefficient lists)
    generating the intermediate subalgebra E.  Basis vectors are pairs
    x (x) t with x a factor basis element and t in a complement basis of
    the factor over E; the distinguished identity tensor is exposed as
    the ``identity_tensor`` attribute.
    """
    f = alg.field
    car = alg.factors[i]
    if alg.factors[j].mul_table != car.mul_table:
        raise BimoduleError("extension tensor needs identical factor tables")
    m = car.dim
    # close the subring span under multiplication
    span = [[f.one if t == 0 else f.zero for t in range(m)]]
    span[0] = list(car.unit_coords)
    span += [list(v) for v in subring]
    while True:
        red, piv = rref(f, span)
        grown = False
        for a in red:
            for b in red:
                prod = _local_mul(car, f, a, b)
                if in_span(f, red, piv, prod) is None:
                    span.append(prod)
                    grown = True
        if not grown:
            break
    ebasis, epiv = rref(f, span)
    # complement basis T: greedy over factor basis, t0 is the unity direction
    tbasis = []
    gen_cols, gen_meta = [], []
    texp = [None] * m
    for v in range(m):
        vv = [f.one if t == v else f.zero for t in range(m)]
        sol = solve(f, [[col[c] for col in gen_cols] for c in range(m)], vv) if gen_cols else None
        if sol is None:
            tbasis.append(v)
            for e in ebasis:
                gen_cols.append(_local_mul(car, f, e, vv))
                gen_meta.append((v, list(e)))
            sol = solve(f, [[col[c] for col in gen_cols] for c in range(m)], vv)
            assert sol is not None
        combo = {}
        for lam, (tv, e) in zip(sol, gen_meta):
            if lam != f.zero:
                cur = combo.get(tv, [f.zero] * m)
                combo[tv] = [f.add(x, f.mul(lam, y)) for x, y in zip(cur, e)]
        texp[v] = sorted(combo.items())
    nt = len(tbasis)
    dim = m * nt
    labels = []
    blocks = []
    pairs = []
    for x in range(m):
        for k, tv in enumerate(tbasis):
            labels.append("%s(x)%s" % (car.labels[x], car.labels[tv]))
            blocks.append((i, j))
            pairs.append((x, k))
    pidx = {p: c for c, p in enumerate(pairs)}
    left, right = [], []
    for s in range(alg.dim):
        fi = alg.factor_of[s]
        lt = [[] for _ in range(dim)]
        rt = [[] for _ in range(dim)]
        if fi == i:
            loc = s - alg.offsets[i]
            a = [f.one if t == loc else f.zero for t in range(m)]
            for c, (x, k) in enumerate(pairs):
                img = _local_mul(car, f, a, [f.one if t == x else f.zero for t in range(m)])
                lt[c] = [(pidx[(x2, k)], cv) for x2, cv in enumerate(img) if cv != f.zero]
        if fi == j:
            loc = s - alg.offsets[j]
            b = [f.one if t == loc else f.zero for t in range(m)]
            for c, (x, k) in enumerate(pairs):
                tb = _local_mul(car, f, [f.one if t == tbasis[k] else f.zero for t in range(m)], b)
                # expand t*b = sum_t' e_{t'} . t' with e in E, push e onto x
                out = {}
                for v, cv in enumerate(tb):
                    if cv == f.zero:
                        continue
                    for tv, e in texp[v]:
                        xe = _local_mul(car, f, [f.one if t == x else f.zero for t in range(m)], e)
                        k2 = tbasis.index(tv)
                        for x2, c2 in enumerate(xe):
                            val = f.mul(cv, c2)
                            if val != f.zero:
                                key = pidx[(x2, k2)]
                                out[key] = f.add(out.get(key, f.zero), val)
                rt[c] = sorted((kk, vv) for kk, vv in out.items() if vv != f.zero)
        left.append(lt)
        right.append(rt)
    bim = Bimodule(alg, labels, blocks, left, right, degrees=degrees, name=name)
    # identity tensor: sum over T of t_r (x) t*_r with p_E(t_r t*_s) = delta_rs,
    # where p_E is the E-coefficient along the unity direction t_0
    if list(car.unit_coords) != [f.one] + [f.zero] * (m - 1) or tbasis[0] != 0:
        raise BimoduleError("extension tensor expects the factor unity as first basis vector")

    def project_e(w):
        """E-component of w in F = (+)_r t_r E along t_0 = 1 (as F-coords)."""
        out = [f.zero] * m
        for v, cv in enumerate(w):
            if cv == f.zero:
                continue
            for tv, e in texp[v]:
                if tv == tbasis[0]:
                    out = [f.add(x, f.mul(cv, y)) for x, y in zip(out, e)]
        return out

    tindex = {tv: r for r, tv in enumerate(tbasis)}
    vec = [f.zero] * dim
    for s in range(nt):
        rows, rhs = [], []
        for r in range(nt):
            tr = [f.one if t == tbasis[r] else f.zero for t in range(m)]
            cols = [project_e(_local_mul(car, f, tr, [f.one if t == v else f.zero for t in range(m)]))
                    for v in range(m)]
            for c in range(m):
                rows.append([cols[v][c] for v in range(m)])
                rhs.append(car.unit_coords[c] if r == s else f.zero)
        tstar = solve(f, rows, rhs)
        if tstar is None:
            raise BimoduleError("extension tensor: projection pairing degenerate")
        ts_vec = [f.one if t == tbasis[s] else f.zero for t in range(m)]
        for v, cv in enumerate(tstar):
            if cv == f.zero:
                continue
            for tv, e in texp[v]:
                xe = _local_mul(car, f, ts_vec, e)
                k2 = tindex[tv]
                for x2, c2 in enumerate(xe):
                    val = f.mul(cv, c2)
                    if val != f.zero:
                        key = pidx[(x2, k2)]
                        vec[key] = f.add(vec[key], val)
    bim.identity_tensor = vec
    bim.tensor_pairs = pairs
    return bim


def identify_component(component: Bimodule, catalog, graded=False):
    """First catalog entry isomorphic to the component, with the iso."""
    for cname, cand in catalog:
        if cand.dim != component.dim:
            continue
        if sorted(cand.blocks) != sorted(component.blocks):
            continue
        iso = bimodule_iso(component, cand, graded=graded)
        if iso is not None:
            return cname, iso
    return None, None
