"""Exact base fields and dense exact linear algebra.

Three kinds of coefficient fields are supported: the rationals, prime
fields GF(p), and rational function fields GF(p)(x) in one variable.
Field elements are plain hashable Python values (Fraction, int, or a
pair of coefficient tuples); a Field object supplies the arithmetic, so
the linear-algebra routines below work uniformly over any of them.

All row reductions pivot on the first nonzero column and keep rows in
their incoming order, so every computed basis is reproducible.
"""

from __future__ import annotations

from fractions import Fraction


# ---------------------------------------------------------------------------
# polynomials over GF(p): tuples of ints in [0, p), no trailing zeros
# ---------------------------------------------------------------------------

def _ptrim(c):
    n = len(c)
    while n and c[n - 1] == 0:
        n -= 1
    return tuple(c[:n])


def _padd(a, b, p):
    if len(a) < len(b):
        a, b = b, a
    c = list(a)
    for i, x in enumerate(b):
        c[i] = (c[i] + x) % p
    return _ptrim(c)


def _pneg(a, p):
    return tuple((-x) % p for x in a)


def _pmul(a, b, p):
    if not a or not b:
        return ()
    c = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                if y:
                    c[i + j] = (c[i + j] + x * y) % p
    return _ptrim(c)


def _pdivmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [0] * max(len(a) - len(b) + 1, 0)
    inv_lead = pow(b[-1], p - 2, p)
    for i in range(len(a) - len(b), -1, -1):
        coef = (a[i + len(b) - 1] * inv_lead) % p
        if coef:
            q[i] = coef
            for j, y in enumerate(b):
                a[i + j] = (a[i + j] - coef * y) % p
    return _ptrim(q), _ptrim(a)


def _pgcd(a, b, p):
    while b:
        a, b = b, _pdivmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], p - 2, p)
        a = tuple((x * inv) % p for x in a)
    return a


def _pstr(c, var):
    if not c:
        return "0"
    terms = []
    for i in range(len(c) - 1, -1, -1):
        x = c[i]
        if not x:
            continue
        if i == 0:
            terms.append(str(x))
        elif i == 1:
            terms.append(var if x == 1 else "%d*%s" % (x, var))
        else:
            terms.append("%s^%d" % (var, i) if x == 1 else "%d*%s^%d" % (x, var, i))
    return "+".join(terms)


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

class Field:
    """Common interface; elements are opaque hashable values."""

    characteristic = 0

    def add(self, a, b):
        raise NotImplementedError

    def sub(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def div(self, a, b):
        raise NotImplementedError

    def neg(self, a):
        raise NotImplementedError

    def inv(self, a):
        return self.div(self.one, a)

    def is_zero(self, a):
        return a == self.zero

    def from_int(self, n: int):
        raise NotImplementedError

    def parse(self, s: str):
        raise NotImplementedError

    def to_str(self, a) -> str:
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


class Rationals(Field):
    characteristic = 0

    def __init__(self):
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero in Q")
        return a / b

    def neg(self, a):
        return -a

    def from_int(self, n):
        return Fraction(n)

    def parse(self, s):
        return Fraction(s.strip())

    def to_str(self, a):
        return str(a)

    def spec(self):
        return {"kind": "Q"}

    def __repr__(self):
        return "Q"


class PrimeField(Field):
    def __init__(self, p: int):
        if p < 2 or any(p % d == 0 for d in range(2, int(p ** 0.5) + 1)):
            raise ValueError("characteristic must be prime, got %d" % p)
        self.p = p
        self.characteristic = p
        self.zero = 0
        self.one = 1 % p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def div(self, a, b):
        if b % self.p == 0:
            raise ZeroDivisionError("division by zero in GF(%d)" % self.p)
        return (a * pow(b, self.p - 2, self.p)) % self.p

    def neg(self, a):
        return (-a) % self.p

    def from_int(self, n):
        return n % self.p

    def parse(self, s):
        return int(s.strip()) % self.p

    def to_str(self, a):
        return str(a)

    def spec(self):
        return {"kind": "GF", "p": self.p}

    def __repr__(self):
        return "GF(%d)" % self.p


class RationalFunctions(Field):
    """GF(p)(x): reduced fractions of polynomials, monic denominator.

    An element is a pair (num, den) of coefficient tuples with
    gcd(num, den) = 1 and den monic, so equality is literal equality.
    """

    def __init__(self, p: int, var: str = "u"):
        self.base = PrimeField(p)
        self.p = p
        self.var = var
        self.characteristic = p
        self.zero = ((), (1 % p,))
        self.one = ((1 % p,), (1 % p,))

    def _make(self, num, den):
        p = self.p
        num = _ptrim(tuple(x % p for x in num))
        den = _ptrim(tuple(x % p for x in den))
        if not den:
            raise ZeroDivisionError("zero denominator in GF(%d)(%s)" % (p, self.var))
        if not num:
            return self.zero
        g = _pgcd(num, den, p)
        if len(g) > 1 or g[0] != 1:
            num = _pdivmod(num, g, p)[0]
            den = _pdivmod(den, g, p)[0]
        lead = den[-1]
        if lead != 1:
            inv = pow(lead, p - 2, p)
            num = tuple((x * inv) % p for x in num)
            den = tuple((x * inv) % p for x in den)
        return (num, den)

    def add(self, a, b):
        p = self.p
        num = _padd(_pmul(a[0], b[1], p), _pmul(b[0], a[1], p), p)
        return self._make(num, _pmul(a[1], b[1], p))

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        p = self.p
        return self._make(_pmul(a[0], b[0], p), _pmul(a[1], b[1], p))

    def div(self, a, b):
        if not b[0]:
            raise ZeroDivisionError("division by zero in GF(%d)(%s)" % (self.p, self.var))
        return self._make(_pmul(a[0], b[1], self.p), _pmul(a[1], b[0], self.p))

    def neg(self, a):
        return (_pneg(a[0], self.p), a[1])

    def from_int(self, n):
        n %= self.p
        return self.zero if n == 0 else ((n,), (1,))

    def gen(self, power: int = 1):
        """The monomial x^power; negative powers give 1/x^|power|."""
        if power >= 0:
            return ((0,) * power + (1,), (1,))
        return ((1,), (0,) * (-power) + (1,))

    def parse(self, s):
        s = s.strip().replace(" ", "")
        if "/" in s:
            depth, cut = 0, -1
            for i, ch in enumerate(s):
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                elif ch == "/" and depth == 0:
                    cut = i
                    break
            if cut >= 0:
                num = self._parse_poly(s[:cut])
                den = self._parse_poly(s[cut + 1:])
                return self._make(num, den)
        return self._make(self._parse_poly(s), (1,))

    def _parse_poly(self, s):
        s = s.strip()
        if s.startswith("(") and s.endswith(")"):
            s = s[1:-1]
        s = s.replace("-", "+-")
        coeffs = {}
        for term in s.split("+"):
            term = term.strip()
            if not term:
                continue
            neg = term.startswith("-")
            if neg:
                term = term[1:]
            c, e = 1, 0
            if self.var in term:
                head, _, tail = term.partition(self.var)
                head = head.rstrip("*")
                c = int(head) if head else 1
                e = int(tail[1:]) if tail.startswith("^") else (1 if not tail else int(tail))
            else:
                c = int(term)
            if neg:
                c = -c
            coeffs[e] = (coeffs.get(e, 0) + c) % self.p
        if not coeffs:
            return ()
        out = [0] * (max(coeffs) + 1)
        for e, c in coeffs.items():
            out[e] = c
        return _ptrim(out)

    def to_str(self, a):
        num, den = a
        if den == (1,):
            return _pstr(num, self.var)
        ns = _pstr(num, self.var)
        ds = _pstr(den, self.var)
        if "+" in ns:
            ns = "(%s)" % ns
        if "+" in ds:
            ds = "(%s)" % ds
        return "%s/%s" % (ns, ds)

    def spec(self):
        return {"kind": "rational_function", "p": self.p, "var": self.var}

    def __repr__(self):
        return "GF(%d)(%s)" % (self.p, self.var)


def field_from_spec(spec: dict) -> Field:
    kind = spec["kind"]
    if kind == "Q":
        return Rationals()
    if kind == "GF":
        return PrimeField(spec["p"])
    if kind == "rational_function":
        return RationalFunctions(spec["p"], spec.get("var", "u"))
    raise ValueError("unknown base field kind %r" % kind)


# ---------------------------------------------------------------------------
# dense exact linear algebra (rows = lists of field elements)
# ---------------------------------------------------------------------------

def zeros(field, n):
    return [field.zero] * n


def vec_add(field, a, b):
    return [field.add(x, y) for x, y in zip(a, b)]


def vec_sub(field, a, b):
    return [field.sub(x, y) for x, y in zip(a, b)]


def vec_scale(field, c, a):
    return [field.mul(c, x) for x in a]


def mat_mul_vec(field, m, v):
    out = []
    for row in m:
        s = field.zero
        for x, y in zip(row, v):
            if x != field.zero and y != field.zero:
                s = field.add(s, field.mul(x, y))
        out.append(s)
    return out


def rref(field, rows):
    """Reduced row echelon form. Returns (reduced rows, pivot columns)."""
    rows = [list(r) for r in rows if any(x != field.zero for x in r)]
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pr = None
        for i in range(r, len(rows)):
            if rows[i][c] != field.zero:
                pr = i
                break
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        inv = field.inv(rows[r][c])
        rows[r] = [field.mul(inv, x) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != field.zero:
                f = rows[i][c]
                rows[i] = [field.sub(x, field.mul(f, y)) for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    rows = rows[:r]
    return rows, pivots


def rank(field, rows):
    return len(rref(field, rows)[0])


def kernel_basis(field, rows, ncols=None):
    """Basis of {x : rows @ x = 0}, free variables set to one in turn."""
    if ncols is None:
        if not rows:
            raise ValueError("need ncols for empty matrix")
        ncols = len(rows[0])
    red, pivots = rref(field, rows)
    pivot_set = set(pivots)
    basis = []
    for c in range(ncols):
        if c in pivot_set:
            continue
        v = zeros(field, ncols)
        v[c] = field.one
        for r, pc in enumerate(pivots):
            v[pc] = field.neg(red[r][c])
        basis.append(v)
    return basis


def solve(field, rows, rhs):
    """One exact solution x of rows @ x = rhs, or None if inconsistent."""
    if not rows:
        return None if any(y != field.zero for y in rhs) else []
    ncols = len(rows[0])
    aug = [list(r) + [y] for r, y in zip(rows, rhs)]
    red, pivots = rref(field, aug)
    x = zeros(field, ncols)
    for r, pc in enumerate(pivots):
        if pc == ncols:
            return None
        x[pc] = red[r][ncols]
    return x


def in_span(field, span_rref, pivots, v):
    """Coefficients of v over an rref basis, or None if outside the span."""
    v = list(v)
    coeffs = []
    for row, pc in zip(span_rref, pivots):
        c = v[pc]
        coeffs.append(c)
        if c != field.zero:
            v = [field.sub(x, field.mul(c, y)) for x, y in zip(v, row)]
    if any(x != field.zero for x in v):
        return None
    return coeffs


def span_equal(field, rows_a, rows_b):
    ra, pa = rref(field, rows_a)
    rb, pb = rref(field, rows_b)
    return pa == pb and all(tuple(x) == tuple(y) for x, y in zip(ra, rb))


def intersect(field, rows_a, rows_b, ncols):
    """Basis of span(rows_a) ∩ span(rows_b)."""
    ra, _ = rref(field, rows_a)
    rb, _ = rref(field, rows_b)
    if not ra or not rb:
        return []
    # x in both spans: x = sum s_i a_i = sum t_j b_j; kernel of [A^T | -B^T]
    rows = []
    for c in range(ncols):
        rows.append([a[c] for a in ra] + [field.neg(b[c]) for b in rb])
    out = []
    for k in kernel_basis(field, rows, len(ra) + len(rb)):
        v = zeros(field, ncols)
        for i, s in enumerate(k[:len(ra)]):
            if s != field.zero:
                v = vec_add(field, v, vec_scale(field, s, ra[i]))
        if any(x != field.zero for x in v):
            out.append(v)
    red, _ = rref(field, out)
    return red


def complement_basis(field, span_rows, ncols):
    """Unit vectors extending span_rows to the full ambient space."""
    red, pivots = rref(field, span_rows)
    taken = set(pivots)
    out = []
    for c in range(ncols):
        if c not in taken:
            v = zeros(field, ncols)
            v[c] = field.one
            out.append(v)
    return out


def invert_matrix(field, m):
    n = len(m)
    aug = [list(r) + [field.one if i == j else field.zero for j in range(n)]
           for i, r in enumerate(m)]
    red, pivots = rref(field, aug)
    if pivots[:n] != list(range(n)):
        return None
    return [row[n:] for row in red]


def sparse_rref(field, rows, ncols):
    """RREF for rows given as {col: coeff} dicts.  Returns (rows, pivots).

    Stored rows are fully inter-reduced: no row contains the pivot
    column of another.
    """
    pivots = {}  # col -> row dict
    for row in rows:
        row = {k: v for k, v in row.items() if v != field.zero}
        while row:
            lead = min(row)
            piv = pivots.get(lead)
            if piv is None:
                inv = field.inv(row[lead])
                row = {k: field.mul(inv, v) for k, v in row.items()}
                # clear every remaining pivot column from the tail; pivot
                # rows are already reduced, so one pass suffices
                for k in sorted(row):
                    if k == lead:
                        continue
                    piv2 = pivots.get(k)
                    if piv2 is not None:
                        c = row[k]
                        for kk, v in piv2.items():
                            nv = field.sub(row.get(kk, field.zero), field.mul(c, v))
                            if nv == field.zero:
                                row.pop(kk, None)
                            else:
                                row[kk] = nv
                for pl, prow in pivots.items():
                    c = prow.get(lead)
                    if c is not None:
                        for k, v in row.items():
                            nv = field.sub(prow.get(k, field.zero), field.mul(c, v))
                            if nv == field.zero:
                                prow.pop(k, None)
                            else:
                                prow[k] = nv
                pivots[lead] = row
                break
            c = row[lead]
            for k, v in piv.items():
                nv = field.sub(row.get(k, field.zero), field.mul(c, v))
                if nv == field.zero:
                    row.pop(k, None)
                else:
                    row[k] = nv
    cols = sorted(pivots)
    return [pivots[c] for c in cols], cols


def sparse_kernel(field, rows, ncols):
    """Kernel basis (dense vectors) for sparse constraint rows."""
    red, pivots = sparse_rref(field, rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for c in range(ncols):
        if c in pivot_set:
            continue
        v = zeros(field, ncols)
        v[c] = field.one
        for row, pc in zip(red, pivots):
            x = row.get(c)
            if x is not None:
                v[pc] = field.neg(x)
        basis.append(v)
    return basis


class SparseSpan:
    """Row space over sparse vectors keyed by ordered hashable coordinates.

    Rows are dicts {key: coeff}; the leading key of each stored row is
    its pivot and rows are kept reduced against one another.  Used for
    truncated ideals, where keys are (degree, word) pairs ordered
    degree-major.
    """

    def __init__(self, field, keyorder=None):
        self.field = field
        self.keyorder = keyorder or (lambda k: k)
        self.pivots = {}  # leading key -> row dict (pivot coeff 1)

    def __len__(self):
        return len(self.pivots)

    def reduce(self, row):
        """Residual of row against the span (row is not modified)."""
        field = self.field
        row = {k: v for k, v in row.items() if v != field.zero}
        while row:
            lead = min(row, key=self.keyorder)
            piv = self.pivots.get(lead)
            if piv is None:
                return row
            c = row[lead]
            for k, v in piv.items():
                nv = field.sub(row.get(k, field.zero), field.mul(c, v))
                if nv == field.zero:
                    row.pop(k, None)
                else:
                    row[k] = nv
        return row

    def insert(self, row):
        """Add row to the span; returns True if the rank grew."""
        field = self.field
        res = self.reduce(row)
        if not res:
            return False
        lead = min(res, key=self.keyorder)
        inv = field.inv(res[lead])
        res = {k: field.mul(inv, v) for k, v in res.items()}
        # keep existing rows reduced against the new pivot
        for lk, prow in self.pivots.items():
            c = prow.get(lead)
            if c is not None and c != field.zero:
                for k, v in res.items():
                    nv = field.sub(prow.get(k, field.zero), field.mul(c, v))
                    if nv == field.zero:
                        prow.pop(k, None)
                    else:
                        prow[k] = nv
        self.pivots[lead] = res
        return True

    def contains(self, row):
        return not self.reduce(row)
