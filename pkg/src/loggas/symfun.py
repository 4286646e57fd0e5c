"""Exact symmetric-polynomial algebra and the generator eigenstructure.

Symmetric polynomials in n variables are stored in the power-sum basis:
a finite map from partitions (parts are power-sum degrees) to exact
coefficients that are rational functions of the repulsion strength beta
(plain rationals once specialized).  The convention p_0 = n is used
wherever the structure constants produce an empty part.

The generator of the interacting diffusion at reference confinement
(strength n),

    G = sum_i d_i^2  -  n sum_i x_i d_i
        + (beta/2) sum_{i != j} (d_i - d_j)/(x_i - x_j),

maps symmetric polynomials to symmetric polynomials and acts in closed
form on power sums: the Euler part is diagonal (-n * total degree) and
the Laplacian and repulsion parts lower the degree by exactly two, via

    sum_{i<j} (x_i^{k-1} - x_j^{k-1})/(x_i - x_j)
        = (1/2) ( sum_{r+s=k-2} p_r p_s - (k-1) p_{k-2} ).

Because the degree-preserving part of G is scalar on each homogeneous
layer, its polynomial eigenfunctions can be built exactly: complete each
leading term downward in degree (back-substitution divides only by
integers), then orthogonalize within each total degree using exact
moments of the gas measure.  Those moments come from stationarity --
E[G f] = 0 for every polynomial f -- which determines every E[p_lambda]
recursively, with rational-in-beta output.  Distinct total degrees are
orthogonal automatically (distinct eigenvalues of a self-adjoint
operator); equal degrees are orthogonalized Gram-Schmidt style against
the earlier labels in a fixed dominance-compatible order, processed
dominance-decreasing within each weight so that each P_label is
supported on the labels processed no later than its own.  At beta = 0
the same-weight coupling vanishes and the family reduces exactly to
symmetrized products of univariate (monic, variance-1/n) Hermite
polynomials.

Eigenfunctions are returned one per partition label (at most n parts),
normalized to unit coefficient on the label's own monomial m_label;
eigenvalues are exactly -n * |label|.  These are the classical
Hermite-Lassalle symmetric polynomials up to normalization (our leading
coefficient is 1 rather than unit norm; exact squared norms are
reported alongside).  Within a fixed weight the label-to-polynomial
assignment is this module's documented convention; no claim is made of
matching any particular historical indexing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

# ---------------------------------------------------------------------------
# Rational functions of beta
# ---------------------------------------------------------------------------


class BetaPoly:
    """Univariate polynomial in beta with Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        cs = [c if isinstance(c, Fraction) else Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c):
        return cls((Fraction(c),))

    @classmethod
    def beta(cls):
        return cls((Fraction(0), Fraction(1)))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    @property
    def is_zero(self):
        return not self.coeffs

    def __add__(self, other):
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return BetaPoly(out)

    def __neg__(self):
        return BetaPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BetaPoly):
            if self.is_zero or other.is_zero:
                return BetaPoly()
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return BetaPoly(out)
        return BetaPoly(tuple(c * Fraction(other) for c in self.coeffs))

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, BetaPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def monic(self):
        if self.is_zero:
            return self, Fraction(0)
        lead = self.coeffs[-1]
        return BetaPoly(tuple(c / lead for c in self.coeffs)), lead

    def divmod(self, other):
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        q = [Fraction(0)] * max(len(self.coeffs) - len(other.coeffs) + 1, 0)
        r = list(self.coeffs)
        dlead = other.coeffs[-1]
        dd = other.degree
        while len(r) - 1 >= dd and r:
            f = r[-1] / dlead
            k = len(r) - 1 - dd
            q[k] = f
            for i, c in enumerate(other.coeffs):
                r[k + i] -= f * c
            while r and r[-1] == 0:
                r.pop()
        return BetaPoly(q), BetaPoly(r)

    def evaluate(self, b):
        b = Fraction(b)
        out = Fraction(0)
        for c in reversed(self.coeffs):
            out = out * b + c
        return out

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            elif i == 1:
                parts.append(f"{c}*beta" if c != 1 else "beta")
            else:
                parts.append(f"{c}*beta^{i}" if c != 1 else f"beta^{i}")
        return " + ".join(parts).replace("+ -", "- ")

    __repr__ = __str__


def _poly_gcd(a, b):
    while not b.is_zero:
        _, r = a.divmod(b)
        a, b = b, r
    monic, _ = a.monic()
    return monic if not a.is_zero else BetaPoly.const(1)


class BetaRational:
    """Reduced ratio of BetaPoly's; the scalar field of the algebra."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        if not isinstance(num, BetaPoly):
            num = BetaPoly.const(num)
        if den is None:
            den = BetaPoly.const(1)
        elif not isinstance(den, BetaPoly):
            den = BetaPoly.const(den)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        if num.is_zero:
            den = BetaPoly.const(1)
        else:
            g = _poly_gcd(num, den)
            if g.degree > 0:
                num, _ = num.divmod(g)
                den, _ = den.divmod(g)
            den, lead = den.monic()
            num = num * (1 / lead)
        self.num = num
        self.den = den

    @classmethod
    def const(cls, c):
        return cls(BetaPoly.const(c))

    @classmethod
    def beta(cls):
        return cls(BetaPoly.beta())

    @property
    def is_zero(self):
        return self.num.is_zero

    @property
    def is_constant(self):
        return self.num.degree <= 0 and self.den.degree <= 0

    def constant_value(self):
        if not self.is_constant:
            raise DomainError("coefficient still depends on beta")
        if self.num.is_zero:
            return Fraction(0)
        return self.num.coeffs[0] / self.den.coeffs[0]

    def __add__(self, other):
        other = _as_scalar(other)
        return BetaRational(self.num * other.den + other.num * self.den,
                            self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return BetaRational(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_scalar(other))

    def __rsub__(self, other):
        return _as_scalar(other) + (-self)

    def __mul__(self, other):
        other = _as_scalar(other)
        return BetaRational(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_scalar(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero scalar")
        return BetaRational(self.num * other.den, self.den * other.num)

    def __eq__(self, other):
        other = _as_scalar(other)
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def evaluate(self, b):
        d = self.den.evaluate(b)
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at beta={b}")
        return self.num.evaluate(b) / d

    def __str__(self):
        if self.den == BetaPoly.const(1):
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__


def _as_scalar(x):
    if isinstance(x, BetaRational):
        return x
    if isinstance(x, BetaPoly):
        return BetaRational(x)
    return BetaRational.const(x)


_ZERO = BetaRational.const(0)
_ONE = BetaRational.const(1)


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------


def weight(partition):
    return sum(partition)


@lru_cache(maxsize=None)
def partitions_of(w, max_part=None, max_len=None):
    """All partitions of w (tuples, parts descending), lex ascending."""
    if max_part is None:
        max_part = w
    if max_len is None:
        max_len = w
    out = []

    def rec(remaining, cap, prefix):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        if len(prefix) >= max_len:
            return
        for part in range(min(cap, remaining), 0, -1):
            prefix.append(part)
            rec(remaining - part, part, prefix)
            prefix.pop()

    if w == 0:
        return ((),)
    rec(w, max_part, [])
    out.sort()
    return tuple(out)


def conjugate(partition):
    if not partition:
        return ()
    m = partition[0]
    return tuple(sum(1 for p in partition if p > i) for i in range(m))


def _merge_key(base, extra):
    return tuple(sorted(base + tuple(extra), reverse=True))


# ---------------------------------------------------------------------------
# Monomial expansions and the m <-> p transition (exact, integer entries)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _psum_monomial_expansion(n, kappa):
    """Expand p_kappa over n variables into raw monomials {exponents: int}."""
    cur = {(0,) * n: 1}
    for k in kappa:
        nxt = {}
        for expo, c in cur.items():
            for i in range(n):
                e2 = list(expo)
                e2[i] += k
                e2 = tuple(e2)
                nxt[e2] = nxt.get(e2, 0) + c
        cur = nxt
    return cur


def _monomials_to_m(n, mono):
    """Collect a symmetric raw-monomial dict into m-basis coefficients."""
    out = {}
    for expo, c in mono.items():
        srt = tuple(sorted(expo, reverse=True))
        if expo == srt:
            lam = tuple(e for e in srt if e > 0)
            out[lam] = c
    return out


@lru_cache(maxsize=None)
def _transition(n, w):
    """(keys, labels, minv) for weight w in n variables.

    keys: partitions of w with parts <= n (power-sum basis indices);
    labels: partitions of w with length <= n (monomial basis indices);
    minv[label] = {key: Fraction} expands m_label in the power-sum basis.
    """
    keys = partitions_of(w, max_part=n)
    labels = tuple(p for p in partitions_of(w) if len(p) <= n)
    if len(keys) != len(labels):  # conjugation pairs them; equality is exact
        raise AssertionError("basis size mismatch")
    dim = len(keys)
    # T[i][j]: coefficient of m_{labels[j]} in p_{keys[i]}
    t = [[Fraction(0)] * dim for _ in range(dim)]
    for i, kappa in enumerate(keys):
        mcoef = _monomials_to_m(n, _psum_monomial_expansion(n, kappa))
        for j, lam in enumerate(labels):
            t[i][j] = Fraction(mcoef.get(lam, 0))
    inv = _invert_fraction_matrix(t)
    # m_lam = sum_kappa inv-as-(M = T^-1 P) row
    minv = {}
    for j, lam in enumerate(labels):
        row = {}
        for i, kappa in enumerate(keys):
            # M = T^{-1} P with T as above acting on column vectors of m's:
            # P = T M  =>  M_j = sum_i (T^{-1})[j][i] P_i
            c = inv[j][i]
            if c != 0:
                row[kappa] = c
        minv[lam] = row
    return keys, labels, minv


def _invert_fraction_matrix(t):
    dim = len(t)
    a = [row[:] + [Fraction(1) if i == j else Fraction(0) for j in range(dim)]
         for i, row in enumerate(t)]
    for col in range(dim):
        piv = next((r for r in range(col, dim) if a[r][col] != 0), None)
        if piv is None:
            raise AssertionError("singular transition matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(dim):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[dim:] for row in a]


# ---------------------------------------------------------------------------
# SymPolynomial
# ---------------------------------------------------------------------------


class SymPolynomial:
    """Symmetric polynomial in the power-sum basis with exact coefficients.

    Canonical form stores only partitions with parts between 1 and
    n_vars (larger power sums are rewritten exactly through the
    monomial basis) and no zero coefficients.  Immutable by convention.
    """

    __slots__ = ("n_vars", "coeffs")

    def __init__(self, n_vars, coeffs=None):
        if n_vars < 1:
            raise DomainError("n_vars must be >= 1")
        self.n_vars = int(n_vars)
        canon = {}
        oversized = {}
        for key, c in (coeffs or {}).items():
            key = tuple(sorted(key, reverse=True))
            if any(p < 1 for p in key):
                raise DomainError(f"invalid partition key {key}")
            c = _as_scalar(c)
            if c.is_zero:
                continue
            target = oversized if key and key[0] > self.n_vars else canon
            if key in target:
                target[key] = target[key] + c
            else:
                target[key] = c
        if oversized:
            for key, c in oversized.items():
                for key2, c2 in _rewrite_oversized(self.n_vars, key).items():
                    prev = canon.get(key2, _ZERO)
                    canon[key2] = prev + c * c2
        self.coeffs = {k: v for k, v in canon.items() if not v.is_zero}

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, n_vars):
        return cls(n_vars, {})

    @classmethod
    def one(cls, n_vars):
        return cls(n_vars, {(): _ONE})

    @classmethod
    def power_sum(cls, n_vars, k):
        if k < 0:
            raise DomainError("power-sum degree must be >= 0")
        if k == 0:
            return cls(n_vars, {(): BetaRational.const(n_vars)})
        return cls(n_vars, {(k,): _ONE})

    @classmethod
    def monomial_sym(cls, n_vars, label):
        """m_label expressed in the power-sum basis (exact)."""
        label = tuple(sorted(label, reverse=True))
        if len(label) > n_vars:
            return cls.zero(n_vars)
        if not label:
            return cls.one(n_vars)
        _, _, minv = _transition(n_vars, sum(label))
        return cls(n_vars, dict(minv[label]))

    # -- structure ---------------------------------------------------------

    @property
    def degree(self):
        return max((weight(k) for k in self.coeffs), default=0)

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def beta_constant(self):
        return all(c.is_constant for c in self.coeffs.values())

    def homogeneous_part(self, w):
        return SymPolynomial(
            self.n_vars, {k: c for k, c in self.coeffs.items()
                          if weight(k) == w})

    def __eq__(self, other):
        return (isinstance(other, SymPolynomial)
                and self.n_vars == other.n_vars
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.n_vars, frozenset(self.coeffs.items())))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other):
        if self.n_vars != other.n_vars:
            raise DomainError("operands have different variable counts")

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, _ZERO) + c
        return SymPolynomial(self.n_vars, out)

    def __sub__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out.get(k, _ZERO) - c
        return SymPolynomial(self.n_vars, out)

    def __neg__(self):
        return SymPolynomial(self.n_vars,
                             {k: -c for k, c in self.coeffs.items()})

    def scale(self, c):
        c = _as_scalar(c)
        return SymPolynomial(self.n_vars,
                             {k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, SymPolynomial):
            return self.scale(other)
        self._check(other)
        out = {}
        for ka, ca in self.coeffs.items():
            for kb, cb in other.coeffs.items():
                key = _merge_key(ka, kb)
                prev = out.get(key, _ZERO)
                out[key] = prev + ca * cb
        return SymPolynomial(self.n_vars, out)

    __rmul__ = __mul__

    def specialize(self, beta):
        """Substitute a rational beta; coefficients become constants."""
        beta = Fraction(beta)
        return SymPolynomial(
            self.n_vars,
            {k: BetaRational.const(c.evaluate(beta))
             for k, c in self.coeffs.items()})

    # -- numeric evaluation --------------------------------------------------

    def _float_coeffs(self, beta):
        if beta is None:
            if not self.beta_constant:
                raise DomainError(
                    "polynomial has symbolic beta; pass beta or specialize()")
            return {k: float(c.constant_value())
                    for k, c in self.coeffs.items()}
        beta = Fraction(beta)
        return {k: float(c.evaluate(beta)) for k, c in self.coeffs.items()}

    def evaluate(self, x, beta=None):
        """Numeric value at a single configuration (any point order)."""
        x = np.asarray(x.points if hasattr(x, "points") else x, dtype=float)
        if x.shape != (self.n_vars,):
            raise DomainError("configuration size does not match n_vars")
        return float(self.evaluate_batch(x[None, :], beta)[0])

    def evaluate_batch(self, samples, beta=None):
        """Numeric values at each row of (reps, n_vars)."""
        samples = np.asarray(samples, dtype=float)
        coeffs = self._float_coeffs(beta)
        pw = _power_sums(samples, max((k[0] for k in coeffs if k), default=0))
        out = np.zeros(samples.shape[0])
        for key, c in coeffs.items():
            term = np.full(samples.shape[0], c)
            for part in key:
                term = term * pw[part]
            out += term
        return out

    def gradient(self, x, beta=None):
        """Exact analytic gradient at a single configuration."""
        x = np.asarray(x.points if hasattr(x, "points") else x, dtype=float)
        if x.shape != (self.n_vars,):
            raise DomainError("configuration size does not match n_vars")
        coeffs = self._float_coeffs(beta)
        maxp = max((k[0] for k in coeffs if k), default=0)
        pw = _power_sums(x[None, :], maxp)
        grad = np.zeros(self.n_vars)
        for key, c in coeffs.items():
            for a, part in enumerate(key):
                rest = 1.0
                for b, other in enumerate(key):
                    if b != a:
                        rest *= pw[other][0]
                grad += c * part * x ** (part - 1) * rest
        return grad

    def monomial_expansion(self, beta=None):
        """Raw monomial dict {exponent tuple: Fraction} (exact).

        Requires specialized coefficients unless beta is given; used by
        independent cross-checks.
        """
        out = {}
        for key, c in self.coeffs.items():
            cv = c.constant_value() if beta is None else c.evaluate(beta)
            for expo, mult in _psum_monomial_expansion(self.n_vars,
                                                       key).items():
                prev = out.get(expo, Fraction(0))
                val = prev + cv * mult
                if val == 0:
                    out.pop(expo, None)
                else:
                    out[expo] = val
        return out

    def __repr__(self):
        if self.is_zero:
            return "SymPolynomial(0)"
        terms = []
        for k in sorted(self.coeffs, key=lambda t: (weight(t), t)):
            name = "1" if not k else "p" + "".join(f"[{i}]" for i in k)
            terms.append(f"({self.coeffs[k]})*{name}")
        return " + ".join(terms)


@lru_cache(maxsize=None)
def _rewrite_oversized(n, key):
    """Rewrite p_key (some part > n) into the canonical basis, exactly."""
    mono = _psum_monomial_expansion(n, key)
    mcoef = _monomials_to_m(n, mono)
    out = {}
    for lam, c in mcoef.items():
        if c == 0:
            continue
        _, _, minv = _transition(n, sum(lam))
        for kappa, c2 in minv[lam].items():
            out[kappa] = out.get(kappa, Fraction(0)) + c * c2
    return {k: BetaRational.const(v) for k, v in out.items() if v != 0}


def _power_sums(samples, max_part):
    pw = {0: np.full(samples.shape[0], float(samples.shape[1]))}
    if max_part >= 1:
        acc = samples.copy()
        pw[1] = acc.sum(axis=1)
        for k in range(2, max_part + 1):
            acc = acc * samples
            pw[k] = acc.sum(axis=1)
    return pw


# ---------------------------------------------------------------------------
# Generator action
# ---------------------------------------------------------------------------


def apply_generator(f, beta=None):
    """Exact image of f under the generator (reference confinement).

    With ``beta=None`` the repulsion strength stays symbolic; otherwise
    it is substituted exactly (any rational or float value).
    """
    if not isinstance(f, SymPolynomial):
        raise DomainError("apply_generator expects a SymPolynomial")
    n = f.n_vars
    bscal = BetaRational.beta() if beta is None \
        else BetaRational.const(Fraction(beta))
    out = {}

    def add(key, c):
        if c.is_zero:
            return
        prev = out.get(key, _ZERO)
        out[key] = prev + c

    for lam, c in f.coeffs.items():
        w = weight(lam)
        # Euler term: each monomial is homogeneous of its weight
        add(lam, c * (-n * w))
        for a, k in enumerate(lam):
            rest = lam[:a] + lam[a + 1:]
            # Laplacian, second derivative of the same power sum
            if k >= 2:
                factor = Fraction(k * (k - 1))
                if k == 2:
                    add(rest, c * (factor * n))
                else:
                    add(_merge_key(rest, (k - 2,)), c * factor)
            # Laplacian, cross derivatives of two different power sums
            for b, l in enumerate(lam):
                if b == a:
                    continue
                rest2 = tuple(lam[i] for i in range(len(lam))
                              if i != a and i != b)
                m = k + l - 2
                factor = Fraction(k * l)
                if m == 0:
                    add(rest2, c * (factor * n))
                else:
                    add(_merge_key(rest2, (m,)), c * factor)
            # Repulsion term via the divided-difference identity
            if k >= 2:
                half_k = bscal * Fraction(k, 2)
                for r in range(0, k - 1):
                    s = k - 2 - r
                    zeros = (r == 0) + (s == 0)
                    parts = tuple(p for p in (r, s) if p > 0)
                    add(_merge_key(rest, parts),
                        c * half_k * Fraction(n) ** zeros)
                sub = c * half_k * Fraction(k - 1)
                if k == 2:
                    add(rest, -(sub * n))
                else:
                    add(_merge_key(rest, (k - 2,)), -sub)
    return SymPolynomial(n, out)


@dataclass(frozen=True)
class GeneratorMatrix:
    """The generator on the graded power-sum basis, as an exact matrix.

    ``basis`` lists every partition of weight <= degree with parts <= n,
    ordered by weight then lexicographically; ``matrix[i][j]`` is the
    coefficient of p_basis[i] in the image of p_basis[j].  The matrix is
    block-triangular with respect to total weight (the image of a
    weight-w monomial has weights w and w-2 only) and each diagonal
    weight-w block is exactly ``-n * w`` times the identity.
    """

    n: int
    degree: int
    basis: tuple
    matrix: tuple  # rows of BetaRational entries


def generator_matrix(n, degree, beta=None):
    """Assemble the exact generator matrix up to the given total degree."""
    if degree < 0:
        raise DomainError("degree must be >= 0")
    basis = tuple(lam for w in range(degree + 1)
                  for lam in partitions_of(w, max_part=n))
    index = {lam: i for i, lam in enumerate(basis)}
    cols = []
    for lam in basis:
        image = apply_generator(SymPolynomial(n, {lam: _ONE}), beta=beta)
        col = [_ZERO] * len(basis)
        for key, c in image.coeffs.items():
            col[index[key]] = c
        cols.append(col)
    rows = tuple(tuple(cols[j][i] for j in range(len(basis)))
                 for i in range(len(basis)))
    return GeneratorMatrix(n=n, degree=degree, basis=basis, matrix=rows)


# ---------------------------------------------------------------------------
# Exact moments by stationarity: E[G f] = 0 for every polynomial f
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _moment(n, lam):
    """E[p_lam] under the gas measure at reference confinement, in beta."""
    if not lam:
        return _ONE
    w = weight(lam)
    g = apply_generator(SymPolynomial(n, {lam: _ONE}), beta=None)
    total = _ZERO
    for key, c in g.coeffs.items():
        if key == lam:
            # the diagonal part must be exactly -n*w
            if c != BetaRational.const(-n * w):
                raise AssertionError("generator diagonal mismatch")
            continue
        total = total + c * _moment(n, key)
    return total / Fraction(n * w)


def expectation(f, beta=None):
    """Exact E[f] under the gas measure; BetaRational, or Fraction if beta set."""
    total = _ZERO
    for key, c in f.coeffs.items():
        total = total + c * _moment(f.n_vars, key)
    if beta is None:
        return total
    return total.evaluate(Fraction(beta))


def exact_inner_product(f, g, beta=None):
    """Exact E[f*g]; the L2 pairing under the gas measure."""
    if f.n_vars != g.n_vars:
        raise DomainError("operands have different variable counts")
    return expectation(f * g, beta)


# ---------------------------------------------------------------------------
# Eigenfunctions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Eigenfunction:
    """One generator eigenfunction: label, polynomial, exact eigenvalue."""

    partition: tuple
    eigenvalue: int
    polynomial: SymPolynomial
    squared_norm: BetaRational


def _eigen_completion(lead, n):
    """Unique eigenfunction with the given homogeneous leading part.

    The degree-lowering part N of the generator (G restricted minus its
    scalar diagonal) drops the degree by exactly 2, so the completion is
    E = sum_j E_j with E_0 = lead and E_{j+1} = -N(E_j) / (2 n (j+1)).
    """
    w = lead.degree
    total = lead
    prev = lead
    j = 0
    while not prev.is_zero and prev.degree >= 2:
        j += 1
        v = prev.degree
        npart = apply_generator(prev, beta=None) + prev.scale(n * v)
        prev = npart.scale(BetaRational.const(Fraction(-1, 2 * n * j)))
        total = total + prev
    return total, w


def hermite_lassalle(n, max_degree, beta=None):
    """Orthogonal polynomial eigenfunctions of the generator, by label.

    Returns one :class:`Eigenfunction` per partition label of weight up
    to ``max_degree`` with at most n parts, ordered by weight and, within
    a weight, dominance-decreasing (construction order).  P_label has
    unit coefficient on its own monomial m_label, eigenvalue exactly
    ``-n * weight``, and is orthogonal to every other returned
    eigenfunction under the gas measure (exactly; distinct weights
    automatically, equal weights by construction).  With ``beta=None``
    everything stays symbolic; beyond degree four the symbolic rational
    functions grow quickly, so pass a rational ``beta`` there to run the
    whole construction over plain rationals instead.
    """
    if max_degree < 0:
        raise DomainError("max_degree must be >= 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    bfrac = None if beta is None else Fraction(beta)
    out = []
    for w in range(0, max_degree + 1):
        # dominance-decreasing processing: the most dominant label keeps
        # its pure leading-term completion (e.g. the centered second
        # power sum at weight 2); later labels are orthogonalized
        # against the earlier ones
        labels = tuple(reversed(
            [p for p in partitions_of(w) if len(p) <= n]))
        built = []
        for lam in labels:
            lead = SymPolynomial.monomial_sym(n, lam)
            vec, _ = _eigen_completion(lead, n)
            if bfrac is not None:
                vec = vec.specialize(bfrac)
            for (_, prev_vec, prev_norm) in built:
                cross = exact_inner_product(vec, prev_vec, bfrac)
                if bfrac is None:
                    coef = cross / prev_norm  # BetaRational
                    if not coef.is_zero:
                        vec = vec - prev_vec.scale(coef)
                else:
                    coef = cross / prev_norm  # Fraction
                    if coef != 0:
                        vec = vec - prev_vec.scale(BetaRational.const(coef))
            norm = exact_inner_product(vec, vec, bfrac)
            built.append((lam, vec, norm))
            out.append(Eigenfunction(
                partition=lam,
                eigenvalue=-n * w,
                polynomial=vec,
                squared_norm=(norm if bfrac is None
                              else BetaRational.const(norm)),
            ))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo pairing (cross-validates the exact one)
# ---------------------------------------------------------------------------


def mc_inner_product(model, f, g, reps, seed, stream0=None):
    """Monte Carlo estimate of E[f*g] using exact spectral samples.

    Requires the model at reference confinement (rho = n) so the sampled
    measure matches the pairing the eigenfunctions are orthogonal under.
    """
    from .ensemble import iter_spectra
    from .rng import MomentAccumulator

    if model.rho != model.n:
        raise DomainError("mc_inner_product requires rho = n")
    if f.n_vars != model.n or g.n_vars != model.n:
        raise DomainError("polynomial variable count must equal model.n")
    if reps < 2:
        raise DomainError("reps must be >= 2")
    beta = Fraction(model.beta)
    acc = MomentAccumulator()
    for _, chunk in iter_spectra(model, reps, seed, stream0):
        vals = f.evaluate_batch(chunk, beta) * g.evaluate_batch(chunk, beta)
        acc.add_array(vals)
    return acc.estimate()
