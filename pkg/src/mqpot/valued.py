"""Skew-symmetrizable matrices, valued quivers, and their mutations.

The matrix rule uses the common-sign form b' = b + sign(b_ik, b_kj)
b_ik b_kj away from k; the valued-quiver rule reverses arrows at k and
updates every other valuation with the max expressions, never creating
superfluous 2-cycles.  Conversions to and from matrices are mutually
inverse on 2-acyclic normalized loop-free quivers.
"""

from __future__ import annotations


class ValuedError(ValueError):
    pass


def _sign(a):
    return (a > 0) - (a < 0)


def common_sign(a, b):
    return _sign(_sign(a) + _sign(b))


def is_skew_symmetrizable(b, symmetrizer):
    n = len(b)
    if any(len(row) != n for row in b) or len(symmetrizer) != n:
        return False
    if any(d <= 0 for d in symmetrizer):
        return False
    for i in range(n):
        for j in range(n):
            if b[i][j] * symmetrizer[j] != -b[j][i] * symmetrizer[i]:
                return False
    return True


def matrix_mutate(b, k, symmetrizer=None):
    """Mutation at direction k; the symmetrizer is preserved."""
    n = len(b)
    if not (0 <= k < n):
        raise ValuedError("mutation index %d out of range" % k)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == k or j == k:
                out[i][j] = -b[i][j]
            else:
                out[i][j] = b[i][j] + common_sign(b[i][k], b[k][j]) * b[i][k] * b[k][j]
    if symmetrizer is not None and not is_skew_symmetrizable(out, symmetrizer):
        raise ValuedError("mutation broke skew-symmetrizability")
    return out


def matrix_mutate_classical(b, k):
    """Half-sum form of the rule, as an independent oracle."""
    n = len(b)
    out = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == k or j == k:
                out[i][j] = -b[i][j]
            else:
                out[i][j] = b[i][j] + (abs(b[i][k]) * b[k][j] + b[i][k] * abs(b[k][j])) // 2
    return out


class ValuedQuiver:
    """Normalized valued quiver: points, valuation map, symmetrizer."""

    def __init__(self, points, arrows, symmetrizer=None):
        """arrows: {(i, j): (v, vpp)} with positive entries; i, j in points."""
        self.points = list(points)
        self.arrows = {}
        for (i, j), (v, vpp) in arrows.items():
            if i == j:
                raise ValuedError("loops are not allowed")
            if (v, vpp) == (0, 0):
                continue
            if v < 0 or vpp < 0:
                raise ValuedError("valuations must be nonnegative")
            self.arrows[(i, j)] = (v, vpp)
        self.symmetrizer = dict(symmetrizer) if symmetrizer else None
        if self.symmetrizer is not None:
            for (i, j), (v, vpp) in self.arrows.items():
                if v * self.symmetrizer[j] != vpp * self.symmetrizer[i]:
                    raise ValuedError("valuation is not right symmetrizable")

    def val(self, i, j):
        return self.arrows.get((i, j), (0, 0))

    def has_two_cycle(self):
        return any((j, i) in self.arrows for (i, j) in self.arrows)

    def __eq__(self, other):
        return (isinstance(other, ValuedQuiver) and self.points == other.points
                and self.arrows == other.arrows)

    def __repr__(self):
        parts = ["%s->%s(%d,%d)" % (i, j, v, w) for (i, j), (v, w) in sorted(self.arrows.items())]
        return "ValuedQuiver[%s]" % ", ".join(parts)


def vq_normal_form(points, multi_arrows, symmetrizer=None):
    """Sum parallel valued arrows componentwise into a single arrow."""
    acc = {}
    for (i, j), vals in multi_arrows.items():
        if not isinstance(vals, list):
            vals = [vals]
        for (v, vpp) in vals:
            a, b = acc.get((i, j), (0, 0))
            acc[(i, j)] = (a + v, b + vpp)
    return ValuedQuiver(points, acc, symmetrizer)


def vq_mutate(q: ValuedQuiver, k):
    """Mutation at a point not lying on a 2-cycle.

    Inputs with 2-cycles away from k are processed literally by the
    printed rule; the result is flagged non-matrix-representable when
    any 2-cycle remains.
    """
    if k not in q.points:
        raise ValuedError("point %r not in the quiver" % (k,))
    for (i, j) in q.arrows:
        if (j, i) in q.arrows and k in (i, j):
            raise ValuedError("point %r lies on a 2-cycle" % (k,))
    out = {}
    for (i, j), (v, vpp) in q.arrows.items():
        if k == i or k == j:
            out[(j, i)] = (v, vpp)
    for i in q.points:
        for j in q.points:
            if i == j or i == k or j == k:
                continue
            vik, _ = q.val(i, k)
            vkj, _ = q.val(k, j)
            vij, vppij = q.val(i, j)
            vji, vppji = q.val(j, i)
            _, vppjk = q.val(j, k)
            _, vppki = q.val(k, i)
            new_v = max(vik * vkj - vppji, 0) + max(vij - vppjk * vppki, 0)
            _, vppik = q.val(i, k)
            _, vppkj = q.val(k, j)
            vjk, _ = q.val(j, k)
            vki, _ = q.val(k, i)
            new_vpp = max(vppik * vppkj - vji, 0) + max(vppij - vjk * vki, 0)
            if (new_v, new_vpp) != (0, 0):
                out[(i, j)] = (new_v, new_vpp)
    result = ValuedQuiver(q.points, out, q.symmetrizer)
    result.matrix_representable = not result.has_two_cycle()
    return result


def matrix_to_vq(b, symmetrizer=None, points=None):
    n = len(b)
    pts = points or list(range(1, n + 1))
    arrows = {}
    for i in range(n):
        for j in range(n):
            if b[i][j] > 0:
                arrows[(pts[i], pts[j])] = (b[i][j], -b[j][i])
    sym = None
    if symmetrizer is not None:
        sym = {pts[i]: symmetrizer[i] for i in range(n)}
    return ValuedQuiver(pts, arrows, sym)


def vq_to_matrix(q: ValuedQuiver):
    """(b_ij, b_ji) = (v_ij - vpp_ji, v_ji - vpp_ij); needs 2-acyclicity."""
    if q.has_two_cycle():
        raise ValuedError("quiver with a 2-cycle has no matrix form")
    pts = q.points
    n = len(pts)
    idx = {p: i for i, p in enumerate(pts)}
    b = [[0] * n for _ in range(n)]
    for (i, j), (v, vpp) in q.arrows.items():
        b[idx[i]][idx[j]] = v - q.val(j, i)[1]
        b[idx[j]][idx[i]] = q.val(j, i)[0] - vpp
    return b


def underlying_valued_quiver(qp):
    """Valued quiver of a modulated quiver whose factors are all fields.

    The arrow i -> j carries (dim over k_j, dim over k_i) of the block,
    and the symmetrizer is the list of factor dimensions.
    """
    B = qp.pair.B
    alg = qp.A.algebra
    dims = {}
    for i, blk in enumerate(B.blocks):
        dims[blk] = dims.get(blk, 0) + 1
    arrows = {}
    for (i, j), d in dims.items():
        ni = alg.factors[i].dim
        nj = alg.factors[j].dim
        if d % nj or d % ni:
            raise ValuedError("block dimension not divisible by the factor "
                              "dimensions; factors must be fields")
        arrows[(i + 1, j + 1)] = (d // nj, d // ni)
    pts = list(range(1, len(alg.factors) + 1))
    sym = {p: alg.factors[p - 1].dim for p in pts}
    return ValuedQuiver(pts, arrows, sym)
