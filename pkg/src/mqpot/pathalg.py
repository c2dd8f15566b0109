"""Degree-truncated complete tensor path algebras and their calculus.

Elements of the tensor algebra of B over K are stored degreewise on a
canonical word basis: a length-d word is a tuple of bimodule basis
indices whose blocks chain, with every position before the last drawn
from the right-module basis of its block.  Tensor relations over K are
then resolved by a single left-to-right rewriting sweep, so products,
derivatives and skew permutations never build quotient spaces.

The degree-l Casimir elements of the arrow pair are assembled
recursively from the order-1 Casimirs via the product-pair formula and
checked against their characterizing identities.
"""

from __future__ import annotations

from . import scalar
from .scalar import sparse_kernel


class PathError(ValueError):
    pass


class WordSpace:
    """Canonical tensor-word combinatorics over one bimodule."""

    def __init__(self, bim):
        self.bim = bim
        self.field = bim.field
        self.algebra = bim.algebra
        self.rb_set = set(bim.right_basis)
        self._words = {}
        self._dims = {}
        # source/target factor index per letter
        self.src = [b[0] for b in bim.blocks]
        self.tgt = [b[1] for b in bim.blocks]

    # -- canonicalization ---------------------------------------------------

    def canon(self, word, coeff, out=None, pos=0):
        """Accumulate the canonical form of a raw word into out."""
        f = self.field
        if out is None:
            out = {}
        stack = [(tuple(word), coeff, pos)]
        while stack:
            w, c, p = stack.pop()
            if c == f.zero:
                continue
            n = len(w)
            while p < n - 1 and w[p] in self.rb_set:
                p += 1
            if p >= n - 1:
                out[w] = f.add(out.get(w, f.zero), c)
                if out[w] == f.zero:
                    del out[w]
                continue
            i = w[p]
            nxt = w[p + 1]
            for b, kap in self.bim.rewrite[i]:
                vec = self.bim.act_left(kap, self.bim.basis_vec(nxt))
                for j, x in enumerate(vec):
                    if x != f.zero:
                        stack.append((w[:p] + (b, j) + w[p + 2:], f.mul(c, x), p + 1))
        return out

    def mul_words(self, w1, w2, coeff):
        """Canonical form of the concatenation, or {} on block mismatch."""
        if self.tgt[w1[-1]] != self.src[w2[0]]:
            return {}
        return self.canon(w1 + w2, coeff, pos=len(w1) - 1)

    def act_left_word(self, a, word, coeff, out=None):
        """a . word for an algebra element a; cascades from position 0."""
        f = self.field
        if out is None:
            out = {}
        vec = self.bim.act_left(a, self.bim.basis_vec(word[0]))
        for j, x in enumerate(vec):
            if x != f.zero:
                self.canon((j,) + word[1:], f.mul(coeff, x), out=out, pos=0)
        return out

    def act_right_word(self, a, word, coeff, out=None):
        f = self.field
        if out is None:
            out = {}
        vec = self.bim.act_right(a, self.bim.basis_vec(word[-1]))
        for j, x in enumerate(vec):
            if x != f.zero:
                key = word[:-1] + (j,)
                out[key] = f.add(out.get(key, f.zero), f.mul(coeff, x))
                if out[key] == f.zero:
                    del out[key]
        return out

    # -- enumeration --------------------------------------------------------

    def words_of_degree(self, d):
        if d in self._words:
            return self._words[d]
        ws = [(i,) for i in range(self.bim.dim)] if d == 1 else self._enumerate(d)
        self._words[d] = ws
        return ws

    def _enumerate(self, d):
        rb_by_src = {}
        for b in self.bim.right_basis:
            rb_by_src.setdefault(self.src[b], []).append(b)
        full_by_src = {}
        for i in range(self.bim.dim):
            full_by_src.setdefault(self.src[i], []).append(i)
        out = []
        word = []

        def rec(pos, need_src):
            if pos == d - 1:
                for i in full_by_src.get(need_src, []) if need_src is not None else range(self.bim.dim):
                    out.append(tuple(word) + (i,))
                return
            pool = rb_by_src.get(need_src, []) if need_src is not None else self.bim.right_basis
            for b in pool:
                word.append(b)
                rec(pos + 1, self.tgt[b])
                word.pop()

        rec(0, None)
        return out

    def dim_of_degree(self, d):
        """dim_k B^(d), by dynamic programming over block chains."""
        if d in self._dims:
            return self._dims[d]
        if d == 0:
            return self.algebra.dim
        factors = range(len(self.algebra.factors))
        rr = {}
        full = {}
        for i in range(self.bim.dim):
            blk = self.bim.blocks[i]
            full[blk] = full.get(blk, 0) + 1
        for b in self.bim.right_basis:
            blk = self.bim.blocks[b]
            rr[blk] = rr.get(blk, 0) + 1
        # f(j, 1) = sum over blocks (j, t) of full dim
        f = {(j, 1): sum(v for (s, t), v in full.items() if s == j) for j in factors}
        for dd in range(2, d + 1):
            for j in factors:
                f[(j, dd)] = sum(rr.get((j, t), 0) * f.get((t, dd - 1), 0) for t in factors)
        val = sum(f.get((j, d), 0) for j in factors)
        self._dims[d] = val
        return val


class PathElement:
    """Degree-truncated element: K-part plus {word: coeff} per degree."""

    __slots__ = ("space", "kpart", "comps", "trunc", "maxdeg")

    def __init__(self, space, kpart=None, comps=None, trunc=False, maxdeg=None):
        self.space = space
        self.kpart = kpart if kpart is not None else space.algebra.zero
        self.comps = comps or {}
        self.trunc = trunc
        self.maxdeg = maxdeg

    def copy(self):
        return PathElement(self.space, self.kpart,
                           {d: dict(ws) for d, ws in self.comps.items()},
                           self.trunc, self.maxdeg)

    def is_zero(self):
        return self.space.algebra.is_zero(self.kpart) and not any(self.comps.values())

    def degrees(self):
        out = [] if self.space.algebra.is_zero(self.kpart) else [0]
        out.extend(sorted(d for d, ws in self.comps.items() if ws))
        return out

    def component(self, d):
        if d == 0:
            e = PathElement(self.space, kpart=self.kpart, maxdeg=self.maxdeg)
            return e
        return PathElement(self.space, comps={d: dict(self.comps.get(d, {}))},
                           maxdeg=self.maxdeg)

    def top_truncate(self, maxdeg):
        comps = {d: dict(ws) for d, ws in self.comps.items() if d <= maxdeg and ws}
        trunc = self.trunc or any(ws for d, ws in self.comps.items() if d > maxdeg)
        return PathElement(self.space, self.kpart, comps, trunc, maxdeg)

    def __eq__(self, other):
        if not isinstance(other, PathElement) or self.space is not other.space:
            return NotImplemented
        if self.kpart != other.kpart:
            return False
        da = {d: ws for d, ws in self.comps.items() if ws}
        db = {d: ws for d, ws in other.comps.items() if ws}
        return da == db

    def __repr__(self):
        return "<PathElement %s>" % format_element(self)


def format_element(x, max_terms=24):
    space = x.space
    f = space.field
    alg = space.algebra
    parts = []
    if not alg.is_zero(x.kpart):
        parts.append(alg.element_to_str(x.kpart))
    n = 0
    for d in sorted(x.comps):
        for w in sorted(x.comps[d]):
            c = x.comps[d][w]
            if n >= max_terms:
                parts.append("...")
                return " + ".join(parts)
            lab = "*".join(space.bim.labels[i] for i in w)
            cs = f.to_str(c)
            parts.append(lab if cs == "1" else "%s*(%s)" % (cs, lab))
            n += 1
    return " + ".join(parts) if parts else "0"


class PathAlgebra:
    """Truncated complete path algebra of a dualizing pair, plus its dual side."""

    def __init__(self, pair, maxdeg):
        if maxdeg < 2:
            raise PathError("truncation degree must be at least 2")
        self.pair = pair
        self.algebra = pair.algebra
        self.field = pair.field
        self.maxdeg = maxdeg
        self.P = WordSpace(pair.B)
        self.D = WordSpace(pair.Bstar)
        self._z = {1: [((i,), (j,), c) for (i, j, c) in pair.z1]}
        self._zp = {1: [((j,), (i,), c) for (j, i, c) in pair.z2]}
        self._central = {}
        self._skewspan = {}

    # -- element constructors -------------------------------------------------

    def zero(self, side="B"):
        return PathElement(self.P if side == "B" else self.D, maxdeg=self.maxdeg)

    def scalar_elt(self, a, side="B"):
        return PathElement(self.P if side == "B" else self.D, kpart=a, maxdeg=self.maxdeg)

    def one(self, side="B"):
        return self.scalar_elt(self.algebra.one, side)

    def letter(self, i, side="B", coeff=None):
        sp = self.P if side == "B" else self.D
        c = coeff if coeff is not None else self.field.one
        return PathElement(sp, comps={1: {(i,): c}}, maxdeg=self.maxdeg)

    def from_words(self, terms, side="B"):
        """terms: iterable of (coeff, word tuple); canonicalizes raw words."""
        sp = self.P if side == "B" else self.D
        comps = {}
        for c, w in terms:
            if not w:
                raise PathError("empty word; use scalar_elt for degree zero")
            d = len(w)
            out = comps.setdefault(d, {})
            sp.canon(tuple(w), c, out=out, pos=0)
        comps = {d: ws for d, ws in comps.items() if ws}
        return PathElement(sp, comps={d: ws for d, ws in comps.items() if d <= self.maxdeg},
                           trunc=any(d > self.maxdeg for d in comps), maxdeg=self.maxdeg)

    # -- ring operations -------------------------------------------------------

    def add(self, x, y):
        f = self.field
        assert x.space is y.space
        kp = self.algebra.add(x.kpart, y.kpart)
        comps = {d: dict(ws) for d, ws in x.comps.items()}
        for d, ws in y.comps.items():
            tgt = comps.setdefault(d, {})
            for w, c in ws.items():
                nv = f.add(tgt.get(w, f.zero), c)
                if nv == f.zero:
                    tgt.pop(w, None)
                else:
                    tgt[w] = nv
        comps = {d: ws for d, ws in comps.items() if ws}
        return PathElement(x.space, kp, comps, x.trunc or y.trunc, self.maxdeg)

    def neg(self, x):
        f = self.field
        return PathElement(x.space, self.algebra.neg(x.kpart),
                           {d: {w: f.neg(c) for w, c in ws.items()} for d, ws in x.comps.items()},
                           x.trunc, self.maxdeg)

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def scale(self, c, x):
        f = self.field
        if c == f.zero:
            return PathElement(x.space, maxdeg=self.maxdeg)
        return PathElement(x.space, self.algebra.scale(c, x.kpart),
                           {d: {w: f.mul(c, v) for w, v in ws.items()} for d, ws in x.comps.items()},
                           x.trunc, self.maxdeg)

    def k_left(self, a, x):
        """a . x for a in K."""
        sp = x.space
        comps = {}
        for d, ws in x.comps.items():
            out = comps.setdefault(d, {})
            for w, c in ws.items():
                sp.act_left_word(a, w, c, out=out)
        comps = {d: ws for d, ws in comps.items() if ws}
        return PathElement(sp, self.algebra.mul(a, x.kpart), comps, x.trunc, self.maxdeg)

    def k_right(self, x, a):
        sp = x.space
        comps = {}
        for d, ws in x.comps.items():
            out = comps.setdefault(d, {})
            for w, c in ws.items():
                sp.act_right_word(a, w, c, out=out)
        comps = {d: ws for d, ws in comps.items() if ws}
        return PathElement(sp, self.algebra.mul(x.kpart, a), comps, x.trunc, self.maxdeg)

    def mul(self, x, y):
        """Graded convolution product; degrees above the truncation drop."""
        assert x.space is y.space
        sp = x.space
        f = self.field
        out = PathElement(sp, maxdeg=self.maxdeg)
        out.trunc = x.trunc or y.trunc
        # K-part times everything
        alg = self.algebra
        if not alg.is_zero(x.kpart):
            out = self.add(out, self.k_left(x.kpart, PathElement(sp, comps=y.comps, maxdeg=self.maxdeg)))
            out.kpart = alg.mul(x.kpart, y.kpart)
        if not alg.is_zero(y.kpart):
            out = self.add(out, self.k_right(PathElement(sp, comps=x.comps, maxdeg=self.maxdeg), y.kpart))
        comps = {d: dict(ws) for d, ws in out.comps.items()}
        trunc = out.trunc
        for d1, ws1 in x.comps.items():
            for d2, ws2 in y.comps.items():
                if d1 + d2 > self.maxdeg:
                    if ws1 and ws2:
                        trunc = True
                    continue
                tgt = comps.setdefault(d1 + d2, {})
                for w1, c1 in ws1.items():
                    for w2, c2 in ws2.items():
                        prod = sp.mul_words(w1, w2, f.mul(c1, c2))
                        for w, c in prod.items():
                            nv = f.add(tgt.get(w, f.zero), c)
                            if nv == f.zero:
                                tgt.pop(w, None)
                            else:
                                tgt[w] = nv
        comps = {d: ws for d, ws in comps.items() if ws}
        return PathElement(x.space, out.kpart, comps, trunc, self.maxdeg)

    def mul_many(self, elems):
        out = self.one("B" if elems[0].space is self.P else "D")
        for e in elems:
            out = self.mul(out, e)
        return out

    # -- centrality -------------------------------------------------------------

    def is_central(self, x):
        for s in range(self.algebra.dim):
            es = self.algebra.basis(s)
            if self.k_left(es, x) != self.k_right(x, es):
                return False
        return True

    def central_basis(self, d, side="B"):
        """Basis of the K-central subspace of degree-d words (as elements)."""
        key = (d, side)
        if key in self._central:
            return self._central[key]
        sp = self.P if side == "B" else self.D
        words = sp.words_of_degree(d)
        index = {w: i for i, w in enumerate(words)}
        f = self.field
        cons = []
        for s in range(self.algebra.dim):
            es = self.algebra.basis(s)
            colmaps = []
            for w in words:
                lw = sp.act_left_word(es, w, f.one)
                rw = sp.act_right_word(es, w, f.one)
                col = dict(lw)
                for ww, c in rw.items():
                    nv = f.sub(col.get(ww, f.zero), c)
                    if nv == f.zero:
                        col.pop(ww, None)
                    else:
                        col[ww] = nv
                colmaps.append(col)
            # transpose columns into rows
            rowsmap = {}
            for j, col in enumerate(colmaps):
                for ww, c in col.items():
                    rowsmap.setdefault(index[ww], {})[j] = c
            cons.extend(rowsmap.values())
        ker = sparse_kernel(f, cons, len(words))
        out = []
        for v in ker:
            comps = {d: {words[i]: c for i, c in enumerate(v) if c != f.zero}}
            out.append(PathElement(sp, comps=comps, maxdeg=self.maxdeg))
        self._central[key] = out
        return out

    # -- Casimir elements of each order ------------------------------------------

    def z_order(self, l):
        """z[B^(l) (x) (B*)^(l)] as a list of (word, dual word, coeff)."""
        if l in self._z:
            return self._z[l]
        f = self.field
        prev = self.z_order(l - 1)
        one = self.z_order(1)
        acc = {}
        for w, dw, c in prev:
            for y, dy, c2 in one:
                cw = self.P.mul_words(w, y, f.mul(c, c2))
                for w2, c3 in cw.items():
                    dcw = self.D.mul_words(dy, dw, c3)
                    for dw2, c4 in dcw.items():
                        key = (w2, dw2)
                        nv = f.add(acc.get(key, f.zero), c4)
                        if nv == f.zero:
                            acc.pop(key, None)
                        else:
                            acc[key] = nv
        out = [(w, dw, c) for (w, dw), c in acc.items()]
        self._z[l] = out
        return out

    def zprime_order(self, l):
        """z[(B*)^(l) (x) B^(l)] as a list of (dual word, word, coeff)."""
        if l in self._zp:
            return self._zp[l]
        f = self.field
        prev = self.zprime_order(l - 1)
        one = self.zprime_order(1)
        acc = {}
        for dw, w, c in prev:
            for dy, y, c2 in one:
                dcw = self.D.mul_words(dy, dw, f.mul(c, c2))
                for dw2, c3 in dcw.items():
                    cw = self.P.mul_words(w, y, c3)
                    for w2, c4 in cw.items():
                        key = (dw2, w2)
                        nv = f.add(acc.get(key, f.zero), c4)
                        if nv == f.zero:
                            acc.pop(key, None)
                        else:
                            acc[key] = nv
        out = [(dw, w, c) for (dw, w), c in acc.items()]
        self._zp[l] = out
        return out

    # -- pairings and derivatives --------------------------------------------------

    def beta_dual_word(self, xi, w):
        """beta^l(xi (x) w) in K, for a dual word xi and a primal word w."""
        pair = self.pair
        alg = self.algebra
        if len(xi) != len(w):
            raise PathError("beta^l needs equal lengths")
        # innermost first: last dual letter against first primal letter
        kappa = None
        for t in range(len(xi) - 1, -1, -1):
            j = xi[t]
            if kappa is None:
                kappa = pair.beta2[j][w[len(xi) - 1 - t]]
            else:
                jv = pair.Bstar.act_right(kappa, pair.Bstar.basis_vec(j))
                out = alg.zero
                for j2, c in enumerate(jv):
                    if c != self.field.zero:
                        out = alg.add(out, alg.scale(c, pair.beta2[j2][w[len(xi) - 1 - t]]))
                kappa = out
        return kappa

    def beta_word_dual(self, w, xi):
        """beta^l(w (x) xi) in K."""
        pair = self.pair
        alg = self.algebra
        if len(xi) != len(w):
            raise PathError("beta^l needs equal lengths")
        kappa = None
        for t in range(len(w) - 1, -1, -1):
            i = w[t]
            if kappa is None:
                kappa = pair.beta1[i][xi[len(w) - 1 - t]]
            else:
                iv = pair.B.act_right(kappa, pair.B.basis_vec(i))
                out = alg.zero
                for i2, c in enumerate(iv):
                    if c != self.field.zero:
                        out = alg.add(out, alg.scale(c, pair.beta1[i2][xi[len(w) - 1 - t]]))
                kappa = out
        return kappa

    def lder(self, xi, x):
        """Left derivative: pairs xi against the leading part of x."""
        f = self.field
        alg = self.algebra
        out = PathElement(self.P, maxdeg=self.maxdeg, trunc=x.trunc or xi.trunc)
        if not alg.is_zero(xi.kpart):
            out = self.add(out, self.k_left(xi.kpart, x))
        for l, dws in xi.comps.items():
            for dw, dc in dws.items():
                for d, ws in x.comps.items():
                    if d < l:
                        continue
                    for w, c in ws.items():
                        kappa = self.beta_dual_word(dw, w[:l])
                        if alg.is_zero(kappa):
                            continue
                        kappa = alg.scale(f.mul(dc, c), kappa)
                        if d == l:
                            out.kpart = alg.add(out.kpart, kappa)
                        else:
                            tgt = out.comps.setdefault(d - l, {})
                            self.P.act_left_word(kappa, w[l:], f.one, out=tgt)
        out.comps = {d: ws for d, ws in out.comps.items() if ws}
        return out

    def rder(self, x, xi):
        """Right derivative: pairs xi against the trailing part of x."""
        f = self.field
        alg = self.algebra
        out = PathElement(self.P, maxdeg=self.maxdeg, trunc=x.trunc or xi.trunc)
        if not alg.is_zero(xi.kpart):
            out = self.add(out, self.k_right(x, xi.kpart))
        for l, dws in xi.comps.items():
            for dw, dc in dws.items():
                for d, ws in x.comps.items():
                    if d < l:
                        continue
                    for w, c in ws.items():
                        kappa = self.beta_word_dual(w[d - l:], dw)
                        if alg.is_zero(kappa):
                            continue
                        kappa = alg.scale(f.mul(dc, c), kappa)
                        if d == l:
                            out.kpart = alg.add(out.kpart, kappa)
                        else:
                            tgt = out.comps.setdefault(d - l, {})
                            self.P.act_right_word(kappa, w[:d - l], f.one, out=tgt)
        out.comps = {d: ws for d, ws in out.comps.items() if ws}
        return out

    def dual_letter_elt(self, j, coeff=None):
        return self.letter(j, side="D", coeff=coeff)

    # -- skew permutations ------------------------------------------------------

    def _left_perm_homog(self, ws, d, l):
        """ws: {word: coeff} of degree d; returns the order-l left permutation."""
        f = self.field
        alg = self.algebra
        sp = self.P
        out = {}
        if l == 0:
            return dict(ws)
        for dw, w2, zc in self.zprime_order(l):
            for w, c in ws.items():
                prod = sp.mul_words(w, w2, f.mul(c, zc))
                for pw, pc in prod.items():
                    kappa = self.beta_dual_word(dw, pw[:l])
                    if alg.is_zero(kappa):
                        continue
                    sp.act_left_word(alg.scale(pc, kappa), pw[l:], f.one, out=out)
        return out

    def _right_perm_homog(self, ws, d, l):
        f = self.field
        alg = self.algebra
        sp = self.P
        out = {}
        if l == 0:
            return dict(ws)
        for w2, dw, zc in self.z_order(l):
            for w, c in ws.items():
                prod = sp.mul_words(w2, w, f.mul(c, zc))
                for pw, pc in prod.items():
                    kappa = self.beta_word_dual(pw[len(pw) - l:], dw)
                    if alg.is_zero(kappa):
                        continue
                    tmp = sp.act_right_word(alg.scale(pc, kappa), pw[:len(pw) - l], f.one)
                    for ww, cc in tmp.items():
                        nv = f.add(out.get(ww, f.zero), cc)
                        if nv == f.zero:
                            out.pop(ww, None)
                        else:
                            out[ww] = nv
        return out

    def left_perm(self, m, l):
        """Order-l left permutation, componentwise over homogeneous parts."""
        comps = {}
        for d, ws in m.comps.items():
            res = self._left_perm_homog(ws, d, l)
            if res:
                comps[d] = res
        return PathElement(self.P, m.kpart, comps, m.trunc, self.maxdeg)

    def right_perm(self, m, l):
        comps = {}
        for d, ws in m.comps.items():
            res = self._right_perm_homog(ws, d, l)
            if res:
                comps[d] = res
        return PathElement(self.P, m.kpart, comps, m.trunc, self.maxdeg)

    def cyclic_perm(self, m):
        """Sum of the order-t left permutations, per homogeneous degree."""
        out = PathElement(self.P, maxdeg=self.maxdeg, trunc=m.trunc)
        f = self.field
        for d, ws in m.comps.items():
            acc = {}
            for t in range(d):
                part = self._left_perm_homog(ws, d, t)
                for w, c in part.items():
                    nv = f.add(acc.get(w, f.zero), c)
                    if nv == f.zero:
                        acc.pop(w, None)
                    else:
                        acc[w] = nv
            if acc:
                out.comps[d] = acc
        return out

    def cyclic_deriv(self, xi, m, cperm_cache=None):
        """cderiv(xi (x) m) = lder(xi (x) cperm m)."""
        cp = cperm_cache if cperm_cache is not None else self.cyclic_perm(m)
        return self.lder(xi, cp)

    # -- Casimir operator and symmetric potentials --------------------------------

    def casimir_operator(self, v):
        """zeta_c(v) = sum e_s v e*_s; lands in the K-central part."""
        alg = self.algebra
        out = PathElement(v.space, maxdeg=self.maxdeg, trunc=v.trunc)
        for s in range(alg.dim):
            out = self.add(out, self.k_right(self.k_left(alg.basis(s), v), alg.dual_basis[s]))
        return out

    def ordinary_rotations(self, v):
        """All cyclic word rotations of a representative, word by word.

        Non-closed words vanish in the quotient by [K, paths] and are
        dropped; for closed words every rotation is block-compatible.
        """
        f = self.field
        out = PathElement(self.P, maxdeg=self.maxdeg, trunc=v.trunc)
        for d, ws in v.comps.items():
            tgt = out.comps.setdefault(d, {})
            for w, c in ws.items():
                if self.P.tgt[w[-1]] != self.P.src[w[0]]:
                    continue
                for i in range(d):
                    rot = w[i:] + w[:i]
                    self.P.canon(rot, c, out=tgt, pos=max(d - i - 1, 0))
        out.comps = {d: ws for d, ws in out.comps.items() if ws}
        return out

    def sym_cyclic_deriv(self, alpha, v):
        """Ordinary cyclic derivative of a symmetric-potential representative.

        alpha: list per primal letter of (K, K) pairs - the value of the
        bimodule-dual functional in K (x) K; its action on a path is
        left/right multiplication by the two legs.
        """
        f = self.field
        alg = self.algebra
        out = PathElement(self.P, maxdeg=self.maxdeg, trunc=v.trunc)
        for d, ws in v.comps.items():
            for w, c in ws.items():
                if self.P.tgt[w[-1]] != self.P.src[w[0]]:
                    continue
                for i in range(d):
                    rest = w[i + 1:] + w[:i]
                    for a, b in alpha[w[i]]:
                        if d == 1:
                            out.kpart = alg.add(out.kpart, alg.scale(c, alg.mul(a, b)))
                            continue
                        part = {}
                        self.P.canon(rest, c, out=part, pos=max(len(rest) - i - 1, 0))
                        tgt = out.comps.setdefault(d - 1, {})
                        for rw, rc in part.items():
                            tmp = self.P.act_left_word(a, rw, rc)
                            for tw, tc in tmp.items():
                                self.P.act_right_word(b, tw, tc, out=tgt)
        out.comps = {d: ws for d, ws in out.comps.items() if ws}
        return out

    def dual_as_bimodule(self, xi):
        """htr^{-1}: realize a dual element of degree one in Hom_{K^e}(B, K^e)."""
        alg = self.algebra
        table = []
        for i in range(self.P.bim.dim):
            vals = []
            for s in range(alg.dim):
                vi = self.P.bim.act_left(alg.basis(s), self.P.bim.basis_vec(i))
                acc = alg.zero
                for l, dws in xi.comps.items():
                    if l != 1:
                        raise PathError("dual_as_bimodule expects a degree-one dual element")
                    for (j,), dc in dws.items():
                        for i2, c in enumerate(vi):
                            if c != self.field.zero:
                                acc = alg.add(acc, alg.scale(self.field.mul(dc, c),
                                                             self.pair.beta2[j][i2]))
                vals.append((acc, alg.dual_basis[s]))
            table.append([(a, b) for a, b in vals if not alg.is_zero(a)])
        return table

    def trace_dual(self, alpha):
        """htr: recover the dual element with beta(htr(alpha) (x) x) = (id (x) tr) alpha(x)."""
        alg = self.algebra
        f = self.field
        m = self.D.bim.dim
        rows, rhs = [], []
        for i in range(self.P.bim.dim):
            target = alg.zero
            for a, b in alpha[i]:
                target = alg.add(target, alg.scale(alg.tr(b), a))
            for c in range(alg.dim):
                rows.append([self.pair.beta2[j][i][c] for j in range(m)])
                rhs.append(target[c])
        sol = scalar.solve(f, rows, rhs)
        if sol is None:
            raise PathError("no trace-dual element (pairing degenerate?)")
        comps = {1: {(j,): c for j, c in enumerate(sol) if c != f.zero}}
        return PathElement(self.D, comps=comps, maxdeg=self.maxdeg)

    # -- cyclic equivalence --------------------------------------------------------

    def skew_commutator_span(self, d, orders=None):
        """Span data of {z - left_perm(z, l)} over central degree-d elements."""
        key = (d, tuple(orders) if orders else None)
        if key in self._skewspan:
            return self._skewspan[key]
        f = self.field
        words = self.P.words_of_degree(d)
        index = {w: i for i, w in enumerate(words)}
        rows = []
        ls = orders if orders is not None else range(1, d)
        for z in self.central_basis(d):
            ws = z.comps.get(d, {})
            for l in ls:
                if l % d == 0:
                    continue
                perm = self._left_perm_homog(ws, d, l)
                row = [f.zero] * len(words)
                for w, c in ws.items():
                    row[index[w]] = f.add(row[index[w]], c)
                for w, c in perm.items():
                    row[index[w]] = f.sub(row[index[w]], c)
                rows.append(row)
        red, piv = scalar.rref(f, rows)
        data = (red, piv, index)
        self._skewspan[key] = data
        return data

    def cyclically_equivalent(self, m1, m2, orders=None):
        """True iff m1 - m2 is a sum of skew commutators, degree by degree."""
        f = self.field
        diff = self.sub(m1, m2)
        if not self.algebra.is_zero(diff.kpart):
            return False
        for d, ws in diff.comps.items():
            if not ws:
                continue
            red, piv, index = self.skew_commutator_span(d, orders)
            v = [f.zero] * len(index)
            for w, c in ws.items():
                v[index[w]] = c
            if scalar.in_span(f, red, piv, v) is None:
                return False
        return True


# ---------------------------------------------------------------------------
# split tensors: elements of the completed two-sided tensor square
# ---------------------------------------------------------------------------

class SplitTensor:
    """Finite sum of (left, right) element pairs; supports the box action."""

    def __init__(self, algebra, pairs=None):
        self.algebra = algebra
        self.pairs = pairs or []

    def add_pair(self, left, right):
        if not left.is_zero() and not right.is_zero():
            self.pairs.append((left, right))

    def box(self, w):
        """(u (x) v) box w = u . w . v, summed over the pairs."""
        A = self.algebra
        out = A.zero()
        for u, v in self.pairs:
            out = A.add(out, A.mul(A.mul(u, w), v))
        return out


def grad_left(A: PathAlgebra, xi, v):
    """Left gradient of v at xi, landing in the split tensor square."""
    f = A.field
    out = SplitTensor(A)
    for d, ws in v.comps.items():
        for t in range(d):
            for dw, w2, zc in (A.zprime_order(t) if t else [((), (), f.one)]):
                # inner derivative by the dual basis word, tensor the basis word
                for w, c in ws.items():
                    if t == 0:
                        inner = {w: c}
                    else:
                        kappa = A.beta_dual_word(dw, w[:t])
                        if A.algebra.is_zero(kappa):
                            continue
                        inner = A.P.act_left_word(A.algebra.scale(c, kappa), w[t:], f.one)
                    lelem = PathElement(A.P, maxdeg=A.maxdeg)
                    for iw, ic in inner.items():
                        lelem = A.add(lelem, A.lder(xi, PathElement(A.P, comps={len(iw): {iw: ic}},
                                                                    maxdeg=A.maxdeg)))
                    relem = (A.from_words([(zc, w2)]) if t else A.scalar_elt(A.algebra.scale(zc, A.algebra.one)))
                    out.add_pair(lelem, relem)
    return out


def grad_right(A: PathAlgebra, xi, v):
    f = A.field
    out = SplitTensor(A)
    for d, ws in v.comps.items():
        for t in range(d):
            for w2, dw, zc in (A.z_order(t) if t else [((), (), f.one)]):
                for w, c in ws.items():
                    if t == 0:
                        inner = {w: c}
                    else:
                        kappa = A.beta_word_dual(w[d - t:], dw)
                        if A.algebra.is_zero(kappa):
                            continue
                        inner = A.P.act_right_word(A.algebra.scale(c, kappa), w[:d - t], f.one)
                    relem = PathElement(A.P, maxdeg=A.maxdeg)
                    for iw, ic in inner.items():
                        relem = A.add(relem, A.rder(PathElement(A.P, comps={len(iw): {iw: ic}},
                                                                maxdeg=A.maxdeg), xi))
                    lelem = (A.from_words([(zc, w2)]) if t else A.scalar_elt(A.algebra.scale(zc, A.algebra.one)))
                    out.add_pair(lelem, relem)
    return out


# ---------------------------------------------------------------------------
# continuous morphisms of truncated path algebras
# ---------------------------------------------------------------------------

class PathMorphism:
    """Morphism fixing K, defined by letter images with zero K-part."""

    def __init__(self, src: PathAlgebra, tgt: PathAlgebra, images, validate=True):
        self.src = src
        self.tgt = tgt
        self.images = list(images)  # per primal letter of src, a PathElement of tgt
        self._word_cache = {}
        if validate:
            self._validate()

    def _validate(self):
        A, B = self.src, self.tgt
        alg = A.algebra
        if B.algebra is not alg:
            raise PathError("path morphisms must fix the ground symmetric algebra")
        for img in self.images:
            if not alg.is_zero(img.kpart):
                raise PathError("letter images must lie in the closed arrow ideal")
        for s in range(alg.dim):
            es = alg.basis(s)
            for i in range(A.P.bim.dim):
                li = A.P.bim.act_basis_left(s, A.P.bim.basis_vec(i))
                ri = A.P.bim.act_basis_right(s, A.P.bim.basis_vec(i))
                want_l = B.zero()
                for j, c in enumerate(li):
                    if c != A.field.zero:
                        want_l = B.add(want_l, B.scale(c, self.images[j]))
                if want_l != B.k_left(es, self.images[i]):
                    raise PathError("morphism images are not left K-linear")
                want_r = B.zero()
                for j, c in enumerate(ri):
                    if c != A.field.zero:
                        want_r = B.add(want_r, B.scale(c, self.images[j]))
                if want_r != B.k_right(self.images[i], es):
                    raise PathError("morphism images are not right K-linear")

    def component(self, l):
        """phi_l as a list (per letter) of degree-l parts."""
        return [img.component(l) for img in self.images]

    def depth(self):
        """Largest d with phi_k = 0 for 1 < k <= d, for unitriangular phi."""
        d = 1
        while d + 1 <= self.src.maxdeg:
            if any(img.comps.get(d + 1) for img in self.images):
                break
            d += 1
        return d

    def is_unitriangular(self):
        if self.src is not self.tgt and self.src.P.bim.dim != self.tgt.P.bim.dim:
            return False
        f = self.src.field
        for i, img in enumerate(self.images):
            ws = img.comps.get(1, {})
            if ws != {(i,): f.one}:
                return False
        return True

    def apply_word(self, w):
        cached = self._word_cache.get(w)
        if cached is not None:
            return cached
        B = self.tgt
        if len(w) == 1:
            out = self.images[w[0]]
        else:
            half = len(w) // 2
            out = B.mul(self.apply_word(w[:half]), self.apply_word(w[half:]))
        self._word_cache[w] = out
        return out

    def apply(self, x):
        B = self.tgt
        out = B.scalar_elt(x.kpart)
        out.trunc = x.trunc
        for d, ws in x.comps.items():
            for w, c in ws.items():
                out = B.add(out, B.scale(c, self.apply_word(w)))
        return out

    def compose(self, other: "PathMorphism"):
        """self after other (other first)."""
        images = [self.apply(img) for img in other.images]
        return PathMorphism(other.src, self.tgt, images, validate=False)

    def invert(self):
        """Degree-by-degree triangular inverse; needs invertible phi_1."""
        A, B = self.src, self.tgt
        f = A.field
        n = A.P.bim.dim
        phi1 = [[self.images[i].comps.get(1, {}).get((j,), f.zero) for i in range(n)]
                for j in range(n)]
        inv1 = scalar.invert_matrix(f, phi1)
        if inv1 is None:
            raise PathError("degree-one component not invertible")
        images = []
        for j in range(B.P.bim.dim):
            img = A.zero()
            for i in range(n):
                if inv1[i][j] != f.zero:
                    img = A.add(img, A.letter(i, coeff=inv1[i][j]))
            images.append(img)
        psi = PathMorphism(B, A, images, validate=False)
        for d in range(2, A.maxdeg + 1):
            defect = []
            for j in range(B.P.bim.dim):
                comp = self.apply(psi.images[j]).component(d)
                defect.append(comp)
            if all(x.is_zero() for x in defect):
                continue
            # subtract (phi_1 tensor ... )^{-1} of the defect: apply inv1 letterwise
            for j in range(B.P.bim.dim):
                corr = A.zero()
                for w, c in defect[j].comps.get(d, {}).items():
                    parts = []
                    for letter in w:
                        e = A.zero()
                        for i in range(n):
                            if inv1[i][letter] != f.zero:
                                e = A.add(e, A.letter(i, coeff=inv1[i][letter]))
                        parts.append(e)
                    corr = A.add(corr, A.scale(c, A.mul_many(parts)))
                psi.images[j] = A.sub(psi.images[j], corr)
            psi._word_cache = {}
        return psi


def identity_morphism(A: PathAlgebra):
    return PathMorphism(A, A, [A.letter(i) for i in range(A.P.bim.dim)], validate=False)


# ---------------------------------------------------------------------------
# truncated closed ideals
# ---------------------------------------------------------------------------

class TruncatedIdeal:
    """Degree-major sparse model of the closed ideal spanned by generators.

    Keys are (degree, word).  The degree-l layer of the model is the
    space of degree-l leading parts of ideal elements supported in
    degrees >= l, which is exactly the graded layer of the closure.
    """

    def __init__(self, A: PathAlgebra, generators, maxdeg=None):
        self.A = A
        self.maxdeg = maxdeg or A.maxdeg
        f = A.field
        self.span = scalar.SparseSpan(f)
        self.saturated_from = None
        gens_by_low = {}
        for g in generators:
            degs = [d for d in g.degrees() if d > 0]
            if not degs:
                if not g.is_zero():
                    raise PathError("ideal generators must lie in the arrow ideal")
                continue
            row = {}
            for d, ws in g.comps.items():
                if d > self.maxdeg:
                    continue
                for w, c in ws.items():
                    row[(d, w)] = c
            if row:
                gens_by_low.setdefault(min(degs), []).append(row)
        self._build(gens_by_low)

    def _build(self, gens_by_low):
        A, f = self.A, self.A.field
        sp = A.P
        dimB = sp.bim.dim
        level_rows = {}
        for l in range(1, self.maxdeg + 1):
            if self.saturated_from is not None:
                break
            rows = list(gens_by_low.get(l, []))
            rows.extend(level_rows.get(l, []))
            for row in rows:
                self.span.insert(row)
            # snapshot pivot rows with leading degree l, multiply by letters
            if l == self.maxdeg:
                break
            nxt = level_rows.setdefault(l + 1, [])
            pivot_rows = [dict(r) for k, r in self.span.pivots.items() if k[0] == l]
            if pivot_rows and len(pivot_rows) == sp.dim_of_degree(l):
                # a full layer forces every higher layer to be full as well
                self.saturated_from = l
                break
            for r in pivot_rows:
                for i in range(dimB):
                    left = {}
                    right = {}
                    for (d, w), c in r.items():
                        if d + 1 > self.maxdeg:
                            continue
                        if sp.tgt[i] == sp.src[w[0]]:
                            sp.canon((i,) + w, c, out=left, pos=0)
                        if sp.tgt[w[-1]] == sp.src[i]:
                            sp.canon(w + (i,), c, out=right, pos=len(w) - 1)
                    if left:
                        nxt.append({(len(w), w): c for w, c in left.items()})
                    if right:
                        nxt.append({(len(w), w): c for w, c in right.items()})

    def layer_rank(self, l):
        if self.saturated_from is not None and l >= self.saturated_from:
            return self.A.P.dim_of_degree(l)
        return sum(1 for k in self.span.pivots if k[0] == l)

    def layer_basis(self, l):
        """Degree-l leading parts of the pivot rows (pure vectors)."""
        if self.saturated_from is not None and l >= self.saturated_from:
            return [{w: self.A.field.one} for w in self.A.P.words_of_degree(l)]
        out = []
        for k, row in sorted(self.span.pivots.items()):
            if k[0] == l:
                out.append({w: c for (d, w), c in row.items() if d == l})
        return out

    def quotient_dims(self, upto=None):
        upto = upto or self.maxdeg
        dims = [self.A.algebra.dim]
        for l in range(1, upto + 1):
            dims.append(self.A.P.dim_of_degree(l) - self.layer_rank(l))
        return dims

    def finiteness(self, upto=None):
        dims = self.quotient_dims(upto)
        for l in range(1, len(dims) - 1):
            if dims[l] == 0 and dims[l + 1] == 0:
                return {"finite": True, "certified_at": self.maxdeg,
                        "total_dim": sum(dims[:l])}
        return {"finite": False, "certified_at": self.maxdeg,
                "total_dim": None}

    def contains(self, x: PathElement):
        """Membership in the truncated closed-ideal model."""
        row = {}
        if not self.A.algebra.is_zero(x.kpart):
            return False
        for d, ws in x.comps.items():
            if d > self.maxdeg:
                continue
            for w, c in ws.items():
                row[(d, w)] = c
        res = self.span.reduce(row)
        if not res:
            return True
        if self.saturated_from is not None:
            return all(k[0] >= self.saturated_from for k in res)
        return False

    def layers_equal(self, other: "TruncatedIdeal", upto=None):
        upto = upto or min(self.maxdeg, other.maxdeg)
        f = self.A.field
        for l in range(1, upto + 1):
            a = self.layer_basis(l)
            b = other.layer_basis(l)
            words = sorted(set().union(*[set(r) for r in a + b])) if (a or b) else []
            index = {w: i for i, w in enumerate(words)}
            ra = [[r.get(w, f.zero) for w in words] for r in a]
            rb = [[r.get(w, f.zero) for w in words] for r in b]
            if not scalar.span_equal(f, ra, rb):
                return False
        return True
