"""Generalized complete Ginzburg dg-algebra of a modulated quiver with potential.

The hat bimodule is B (+) B* (+) K with cohomological degrees 0, 2-n,
1-n.  The differential vanishes on B, is the cyclic derivative on B*,
and on the extra K-copy is the difference of the two pair Casimirs; it
extends by the graded Leibniz rule.  Degree-zero homology is computed
per path degree as the cokernel of d out of degree minus one.
"""

from __future__ import annotations

from .bimodule import direct_sum, dualize, natural_bimodule, sub_bimodule, Bimodule
from .pathalg import PathAlgebra, PathElement, format_element
from .qp import ModulatedQP, QPError


class GinzburgError(QPError):
    pass


def _k_copy_bimodule(alg):
    """K as a bimodule over itself on the algebra basis."""
    f = alg.field
    labels = ["k:" + lab for lab in alg.labels]
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
    return Bimodule(alg, labels, blocks, left, right, name="Kcopy")


class GinzburgDGA:
    """Truncated path algebra on the hat bimodule with its differential."""

    def __init__(self, qp: ModulatedQP, n=3, maxdeg=None):
        if qp.grade is not None and qp.grade != n - 3:
            raise GinzburgError("graded potential must have degree n - 3")
        self.qp = qp
        self.n = n
        self.maxdeg = maxdeg or qp.maxdeg
        alg = qp.A.algebra
        f = alg.field
        B, Bs = qp.pair.B, qp.pair.Bstar
        kcopy = _k_copy_bimodule(alg)
        Bhat = direct_sum([("B", B), ("B*", Bs), ("K", kcopy)], name="Bhat")
        self.Bhat = Bhat
        self.pair = dualize(Bhat)
        self.A = PathAlgebra(self.pair, self.maxdeg)
        off = Bhat.component_offsets
        self.off_b = off["B"][0]
        self.off_d = off["B*"][0]
        self.off_k = off["K"][0]
        self.cohdeg = ([0] * B.dim) + ([2 - n] * Bs.dim) + ([1 - n] * alg.dim)
        self._build_differential()

    # -- elements ---------------------------------------------------------------

    def include_paths(self, x: PathElement) -> PathElement:
        """T(B) of the underlying quiver into the hat algebra."""
        out = self.A.scalar_elt(x.kpart)
        out.trunc = x.trunc
        for d, ws in x.comps.items():
            out.comps[d] = {tuple(self.off_b + i for i in w): c for w, c in ws.items()}
        return out

    def word_cohdeg(self, w):
        return sum(self.cohdeg[i] for i in w)

    def _build_differential(self):
        A = self.A
        alg = A.algebra
        f = A.field
        qp = self.qp
        self.d_letter = []
        cp = qp.A.cyclic_perm(qp.m)
        for i in range(self.Bhat.dim):
            if i < self.off_d:
                self.d_letter.append(A.zero())
            elif i < self.off_k:
                xi = qp.A.dual_letter_elt(i - self.off_d)
                val = qp.A.lder(xi, cp)
                self.d_letter.append(self.include_paths(val))
            else:
                s = i - self.off_k
                es = alg.basis(s)
                acc = A.zero()
                for (iy, jy, cy) in qp.pair.z1:
                    term = A.mul(A.letter(self.off_b + iy, coeff=cy),
                                 A.letter(self.off_d + jy))
                    acc = A.add(acc, term)
                for (jx, ix, cx) in qp.pair.z2:
                    term = A.mul(A.letter(self.off_d + jx, coeff=cx),
                                 A.letter(self.off_b + ix))
                    acc = A.sub(acc, term)
                self.d_letter.append(A.k_left(es, acc))

    def differential(self, x: PathElement) -> PathElement:
        """Graded Leibniz extension of the letter differentials."""
        A = self.A
        f = A.field
        out = A.zero()
        for d, ws in x.comps.items():
            for w, c in ws.items():
                sign = f.one
                for t, letter in enumerate(w):
                    dl = self.d_letter[letter]
                    if not dl.is_zero():
                        left = PathElement(A.P, comps={t: {w[:t]: f.one}},
                                           maxdeg=A.maxdeg) if t else A.one()
                        right = (PathElement(A.P, comps={d - t - 1: {w[t + 1:]: f.one}},
                                             maxdeg=A.maxdeg)
                                 if t + 1 < d else A.one())
                        term = A.mul(A.mul(left, dl), right)
                        out = A.add(out, A.scale(f.mul(c, sign), term))
                    sign = f.mul(sign, f.from_int(1 if self.cohdeg[letter] % 2 == 0 else -1))
        return out

    def d_squared_on_generators(self):
        """d^2 on every generator letter; all must vanish."""
        bad = []
        for i in range(self.Bhat.dim):
            val = self.differential(self.A.letter(i))
            dd = self.differential(val)
            if not dd.is_zero():
                bad.append((i, dd))
        return bad

    def d_squared_on(self, x: PathElement):
        return self.differential(self.differential(x))

    def h0_dims(self, upto=None):
        """Cohomological-degree-zero homology per path degree.

        Valid for n = 3 and the quiver concentrated in degree zero: the
        degree-zero part is spanned by B-words, and the image of d from
        degree minus one is spanned over words with one dual letter.
        """
        from . import scalar
        if self.n != 3:
            raise GinzburgError("degree-zero homology needs n = 3")
        A = self.A
        f = A.field
        upto = upto or self.maxdeg
        qpA = self.qp.A
        index = {}
        counts = {}
        for l in range(1, upto + 1):
            ws = [tuple(self.off_b + i for i in w) for w in qpA.P.words_of_degree(l)]
            counts[l] = len(ws)
            for k, w in enumerate(ws):
                index[w] = k
        rows_by_l = {l: [] for l in range(1, upto + 1)}
        for m in range(1, upto + 1):
            for w in self._minus_one_words(m):
                src = A.from_words([(f.one, w)])
                img = self.differential(src)
                for l, ws in img.comps.items():
                    if l > upto:
                        continue
                    row = {}
                    for ww, c in ws.items():
                        k = index.get(ww)
                        if k is None:
                            if all(self.off_b <= i < self.off_d for i in ww):
                                raise GinzburgError("image word outside the basis")
                            continue
                        row[k] = c
                    if row:
                        rows_by_l[l].append(row)
        dims = [A.algebra.dim]
        for l in range(1, upto + 1):
            red, piv = scalar.sparse_rref(f, rows_by_l[l], counts[l])
            dims.append(counts[l] - len(piv))
        return dims

    def _minus_one_words(self, length):
        """Hat words of the given path length in cohomological degree -1."""
        qpA = self.qp.A
        out = []
        dualdim = self.off_k - self.off_d
        for pos in range(length):
            lefts = (qpA.P.words_of_degree(pos) if pos else [()])
            rights = (qpA.P.words_of_degree(length - pos - 1)
                      if length - pos - 1 else [()])
            for j in range(dualdim):
                jsrc = self.Bhat.blocks[self.off_d + j][0]
                jtgt = self.Bhat.blocks[self.off_d + j][1]
                for lw in lefts:
                    if lw and qpA.P.tgt[lw[-1]] != jsrc:
                        continue
                    for rw in rights:
                        if rw and qpA.P.src[rw[0]] != jtgt:
                            continue
                        w = (tuple(self.off_b + i for i in lw) + (self.off_d + j,)
                             + tuple(self.off_b + i for i in rw))
                        out.append(w)
        return out
