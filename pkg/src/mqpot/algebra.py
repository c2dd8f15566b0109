"""Symmetric algebras (K, tr) over an exact base field.

K is a finite product of structure-constant algebras, each declared
either by an explicit multiplication table or as a quotient k[t]/(f)
with f monic.  The trace must be symmetric and strongly non-degenerate
(invertible Gram matrix tr(ab)); the builder rejects anything else.
Elements of K are tuples of field values over the concatenated basis.
"""

from __future__ import annotations

from . import scalar
from .scalar import rref, in_span, invert_matrix, span_equal


class AlgebraError(ValueError):
    pass


class Factor:
    """One direct factor: basis labels, structure constants, trace."""

    def __init__(self, name, labels, mul_table, trace, unit_coords, declared=None):
        self.name = name
        self.labels = labels
        self.mul_table = mul_table      # mul_table[i][j] = coeff list over factor basis
        self.trace = trace              # list of field values
        self.unit_coords = unit_coords  # coefficient list of the factor unity
        self.declared = declared or {}  # original spec, for round-tripping

    @property
    def dim(self):
        return len(self.labels)


def _quotient_factor(field, name, spec):
    """Expand k[t]/(f) with monic f into structure constants."""
    modulus = [field.parse(str(c)) for c in spec["modulus"]]  # ascending, monic
    n = len(modulus) - 1
    if n < 1:
        raise AlgebraError("factor %s: modulus must have degree >= 1" % name)
    if modulus[n] != field.one:
        raise AlgebraError("factor %s: modulus must be monic" % name)
    var = spec.get("var", "t")
    labels = ["1"] + [var if k == 1 else "%s^%d" % (var, k) for k in range(1, n)]
    # reduction of t^n
    red = [field.neg(c) for c in modulus[:n]]
    powers = [[field.one if i == k else field.zero for i in range(n)] for k in range(n)]
    top = list(red)
    mul_table = []
    for i in range(n):
        row = []
        for j in range(n):
            # t^(i+j) mod f
            e = i + j
            coeffs = [field.zero] * n
            if e < n:
                coeffs[e] = field.one
            else:
                cur = list(top)
                for _ in range(e - n):
                    carry = cur[n - 1]
                    cur = [field.zero] + cur[:n - 1]
                    if carry != field.zero:
                        for k in range(n):
                            cur[k] = field.add(cur[k], field.mul(carry, red[k]))
                coeffs = cur
            row.append(coeffs)
        mul_table.append(row)
    del powers
    trace = [field.parse(str(c)) for c in spec["trace"]]
    if len(trace) != n:
        raise AlgebraError("factor %s: trace vector has wrong length" % name)
    unit = [field.one] + [field.zero] * (n - 1)
    return Factor(name, labels, mul_table, trace, unit, declared=spec)


def _table_factor(field, name, spec):
    labels = [str(x) for x in spec["basis"]]
    n = len(labels)
    mul_table = [[[field.parse(str(c)) for c in spec["mul"][i][j]] for j in range(n)]
                 for i in range(n)]
    trace = [field.parse(str(c)) for c in spec["trace"]]
    unit = [field.parse(str(c)) for c in spec["unit"]]
    return Factor(name, labels, mul_table, trace, unit, declared=spec)


class SymmetricAlgebra:
    """A product of symmetric structure-constant algebras with one trace.

    Basis indices are global over the concatenation of the factor bases;
    ``factor_of[s]`` gives the factor index of basis element s.  The
    Gram-dual basis, the Casimir element of K, the center and the
    Casimir ideal are computed at build time.
    """

    def __init__(self, field, factors):
        self.field = field
        self.factors = factors
        self.dim = sum(f.dim for f in factors)
        self.offsets = []
        off = 0
        for f in factors:
            self.offsets.append(off)
            off += f.dim
        self.factor_of = []
        self.labels = []
        for i, f in enumerate(factors):
            self.factor_of.extend([i] * f.dim)
            self.labels.extend(["%s.%s" % (f.name, lab) for lab in f.labels])
        self.zero = tuple([field.zero] * self.dim)
        self.one = self._unit_sum()
        self.trace_vec = []
        for f in factors:
            self.trace_vec.extend(f.trace)
        self._validate_tables()
        self.gram = [[self.tr(self.mul(self.basis(s), self.basis(t)))
                      for t in range(self.dim)] for s in range(self.dim)]
        gram_inv = invert_matrix(field, self.gram)
        if gram_inv is None:
            raise AlgebraError("degenerate trace: Gram matrix singular")
        self.dual_basis = [tuple(gram_inv[s]) for s in range(self.dim)]
        self._validate_casimir()
        self.center = self._center_basis()
        self.casimir_ideal = self._casimir_ideal_basis()
        self.separable = span_equal(field, [list(v) for v in self.center],
                                    [list(v) for v in self.casimir_ideal])

    # -- element helpers ---------------------------------------------------

    def basis(self, s):
        v = [self.field.zero] * self.dim
        v[s] = self.field.one
        return tuple(v)

    def unit_of_factor(self, i):
        v = [self.field.zero] * self.dim
        off = self.offsets[i]
        for k, c in enumerate(self.factors[i].unit_coords):
            v[off + k] = c
        return tuple(v)

    def _unit_sum(self):
        v = [self.field.zero] * self.dim
        for i in range(len(self.factors)):
            u = self.unit_of_factor(i)
            v = [self.field.add(x, y) for x, y in zip(v, u)]
        return tuple(v)

    def add(self, a, b):
        f = self.field
        return tuple(f.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        f = self.field
        return tuple(f.sub(x, y) for x, y in zip(a, b))

    def neg(self, a):
        f = self.field
        return tuple(f.neg(x) for x in a)

    def scale(self, c, a):
        f = self.field
        return tuple(f.mul(c, x) for x in a)

    def mul(self, a, b):
        f = self.field
        out = [f.zero] * self.dim
        for i, f_i in enumerate(self.factors):
            off = self.offsets[i]
            for s in range(f_i.dim):
                x = a[off + s]
                if x == f.zero:
                    continue
                for t in range(f_i.dim):
                    y = b[off + t]
                    if y == f.zero:
                        continue
                    c = f.mul(x, y)
                    for k, struct in enumerate(f_i.mul_table[s][t]):
                        if struct != f.zero:
                            out[off + k] = f.add(out[off + k], f.mul(c, struct))
        return tuple(out)

    def tr(self, a):
        f = self.field
        s = f.zero
        for x, t in zip(a, self.trace_vec):
            if x != f.zero and t != f.zero:
                s = f.add(s, f.mul(x, t))
        return s

    def is_zero(self, a):
        return all(x == self.field.zero for x in a)

    # -- validation --------------------------------------------------------

    def _validate_tables(self):
        f = self.field
        for i in range(self.dim):
            for j in range(self.dim):
                if self.factor_of[i] != self.factor_of[j]:
                    continue
                # trace symmetry tr(ab) = tr(ba)
                ab = self.mul(self.basis(i), self.basis(j))
                ba = self.mul(self.basis(j), self.basis(i))
                if self.tr(ab) != self.tr(ba):
                    raise AlgebraError("trace is not symmetric")
                for k in range(self.dim):
                    if self.factor_of[k] != self.factor_of[i]:
                        continue
                    lhs = self.mul(ab, self.basis(k))
                    rhs = self.mul(self.basis(i), self.mul(self.basis(j), self.basis(k)))
                    if lhs != rhs:
                        raise AlgebraError("multiplication table not associative")
        one = self.one
        for i in range(self.dim):
            b = self.basis(i)
            if self.mul(one, b) != b or self.mul(b, one) != b:
                raise AlgebraError("declared unities do not act as identity")
        # factor unities: orthogonal idempotents summing to 1, central
        units = [self.unit_of_factor(i) for i in range(len(self.factors))]
        for i, u in enumerate(units):
            if self.mul(u, u) != u:
                raise AlgebraError("factor unity %d not idempotent" % i)
            for j, v in enumerate(units):
                if i != j and not self.is_zero(self.mul(u, v)):
                    raise AlgebraError("factor unities not orthogonal")
            for s in range(self.dim):
                b = self.basis(s)
                if self.mul(u, b) != self.mul(b, u):
                    raise AlgebraError("factor unity %d not central" % i)
        assert f is self.field

    def _validate_casimir(self):
        # both identities of the Casimir characterization, on every basis a
        for s in range(self.dim):
            a = self.basis(s)
            lhs = self.zero
            rhs = self.zero
            for t in range(self.dim):
                e = self.basis(t)
                es = self.dual_basis[t]
                lhs = self.add(lhs, self.scale(self.tr(self.mul(es, a)), e))
                rhs = self.add(rhs, self.scale(self.tr(self.mul(a, e)), es))
            if lhs != a or rhs != a:
                raise AlgebraError("Casimir identities fail; trace data inconsistent")

    # -- derived structure ---------------------------------------------------

    def casimir_element(self):
        """The element sum e_s (x) e*_s of K (x)_k K, as (basis, dual) pairs."""
        return [(self.basis(s), self.dual_basis[s]) for s in range(self.dim)]

    def casimir_apply(self, a):
        """zeta_c(a) = sum e_s a e*_s; lands in the center of K."""
        out = self.zero
        for s in range(self.dim):
            out = self.add(out, self.mul(self.basis(s), self.mul(a, self.dual_basis[s])))
        return out

    def _center_basis(self):
        f = self.field
        rows = []
        for s in range(self.dim):
            b = self.basis(s)
            row_block = []
            for t in range(self.dim):
                x = self.basis(t)
                comm = self.sub(self.mul(x, b), self.mul(b, x))
                row_block.append(comm)
            rows.append(row_block)
        # unknown z = sum z_t e_t with [z, e_s] = 0 for all s
        constraints = []
        for s in range(self.dim):
            for c in range(self.dim):
                constraints.append([rows[s][t][c] for t in range(self.dim)])
        ker = scalar.kernel_basis(f, constraints, self.dim)
        return [tuple(v) for v in ker]

    def _casimir_ideal_basis(self):
        images = [list(self.casimir_apply(self.basis(s))) for s in range(self.dim)]
        red, _ = rref(self.field, images)
        return [tuple(v) for v in red]

    def in_center(self, a):
        red, piv = rref(self.field, [list(v) for v in self.center])
        return in_span(self.field, red, piv, list(a)) is not None

    # -- serialization -------------------------------------------------------

    def element_from_spec(self, spec):
        """Parse {"factor.label": "coeff", ...} or a flat coefficient list."""
        f = self.field
        if isinstance(spec, list):
            if len(spec) != self.dim:
                raise AlgebraError("element coefficient list has wrong length")
            return tuple(f.parse(str(c)) for c in spec)
        v = [f.zero] * self.dim
        for key, c in spec.items():
            try:
                s = self.labels.index(key)
            except ValueError:
                raise AlgebraError("unknown algebra basis label %r" % key)
            v[s] = f.parse(str(c))
        return tuple(v)

    def element_to_str(self, a):
        f = self.field
        terms = []
        for s, x in enumerate(a):
            if x != f.zero:
                terms.append("%s*%s" % (f.to_str(x), self.labels[s]))
        return " + ".join(terms) if terms else "0"


def algebra_build(field, spec) -> SymmetricAlgebra:
    """Build and fully validate a symmetric algebra from its session spec."""
    factors = []
    for fs in spec["factors"]:
        name = fs["name"]
        if "modulus" in fs:
            factors.append(_quotient_factor(field, name, fs))
        else:
            factors.append(_table_factor(field, name, fs))
    return SymmetricAlgebra(field, factors)
