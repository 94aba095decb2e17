"""Truncated multivariate Taylor expansions at the origin.

A :class:`Jet` stores the coefficients of a real polynomial in ``nvars``
variables, keyed by exponent tuple, with every term of total degree above
``degree`` discarded. Complex-valued data is carried by :class:`ComplexJet`,
a pair of real jets. Complex coordinates are always split into real pairs:
complex coordinate ``k`` is real variables ``2k`` (real part) and ``2k + 1``
(imaginary part).
"""

from __future__ import annotations

import functools
import itertools
import math
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ShapeError, SingularityError

DEFAULT_DEGREE = 4
ZERO_TOL = 1e-9

MultiIndex = tuple[int, ...]


def is_negligible(c: float, scale: float, tol: float = ZERO_TOL) -> bool:
    """Zero test for coefficients: ``|c| <= tol * (1 + scale)``."""
    return abs(c) <= tol * (1.0 + scale)


class Jet:
    """Immutable truncated polynomial in ``nvars`` real variables."""

    __slots__ = ("nvars", "degree", "_c")

    def __init__(self, nvars: int, degree: int, coeffs: Mapping[MultiIndex, float] | None = None):
        if nvars < 0 or degree < 0:
            raise ShapeError("nvars and degree must be nonnegative")
        c: dict[MultiIndex, float] = {}
        for mi, v in (coeffs or {}).items():
            mi = tuple(int(e) for e in mi)
            if len(mi) != nvars:
                raise ShapeError(f"multi-index {mi} has wrong length for {nvars} variables")
            if any(e < 0 for e in mi):
                raise ShapeError(f"negative exponent in {mi}")
            if sum(mi) > degree:
                continue
            v = float(v)
            if v != 0.0:
                c[mi] = c.get(mi, 0.0) + v
        self.nvars = nvars
        self.degree = degree
        self._c = c

    @classmethod
    def _raw(cls, nvars: int, degree: int, c: dict[MultiIndex, float]) -> "Jet":
        j = object.__new__(cls)
        j.nvars = nvars
        j.degree = degree
        j._c = {k: v for k, v in c.items() if v != 0.0}
        return j

    # constructors

    @classmethod
    def zero(cls, nvars: int, degree: int = DEFAULT_DEGREE) -> "Jet":
        return cls._raw(nvars, degree, {})

    @classmethod
    def const(cls, value: float, nvars: int, degree: int = DEFAULT_DEGREE) -> "Jet":
        return cls._raw(nvars, degree, {(0,) * nvars: float(value)})

    @classmethod
    def var(cls, i: int, nvars: int, degree: int = DEFAULT_DEGREE) -> "Jet":
        if not 0 <= i < nvars:
            raise ShapeError(f"variable index {i} out of range")
        if degree < 1:
            return cls.zero(nvars, degree)
        mi = [0] * nvars
        mi[i] = 1
        return cls._raw(nvars, degree, {tuple(mi): 1.0})

    @classmethod
    def linear(cls, coeffs: Sequence[float], degree: int = DEFAULT_DEGREE) -> "Jet":
        n = len(coeffs)
        terms = {}
        for i, a in enumerate(coeffs):
            mi = [0] * n
            mi[i] = 1
            terms[tuple(mi)] = float(a)
        return cls(n, degree, terms)

    # basic access

    @property
    def coeffs(self) -> Mapping[MultiIndex, float]:
        return MappingProxyType(self._c)

    def coeff(self, mi: Iterable[int]) -> float:
        return self._c.get(tuple(mi), 0.0)

    def terms(self):
        return self._c.items()

    def __len__(self) -> int:
        return len(self._c)

    def __repr__(self) -> str:
        body = " + ".join(f"{v:g}*{mi}" for mi, v in sorted(self._c.items(), key=_term_order))
        return f"Jet(nvars={self.nvars}, degree={self.degree}: {body or '0'})"

    def max_abs(self) -> float:
        return max((abs(v) for v in self._c.values()), default=0.0)

    def order(self) -> int:
        """Lowest total degree carrying a nonzero coefficient (``degree + 1`` for the zero jet)."""
        return min((sum(mi) for mi in self._c), default=self.degree + 1)

    def constant(self) -> float:
        return self._c.get((0,) * self.nvars, 0.0)

    def linear_part(self) -> np.ndarray:
        out = np.zeros(self.nvars)
        for mi, v in self._c.items():
            if sum(mi) == 1:
                out[mi.index(1)] = v
        return out

    def hessian(self) -> np.ndarray:
        """Second derivative matrix at the origin."""
        H = np.zeros((self.nvars, self.nvars))
        for mi, v in self._c.items():
            if sum(mi) != 2:
                continue
            idx = [i for i, e in enumerate(mi) for _ in range(e)]
            i, j = idx
            if i == j:
                H[i, i] = 2.0 * v
            else:
                H[i, j] = H[j, i] = v
        return H

    def homogeneous(self, k: int) -> "Jet":
        return Jet._raw(self.nvars, self.degree, {mi: v for mi, v in self._c.items() if sum(mi) == k})

    def truncate(self, degree: int) -> "Jet":
        if degree > self.degree:
            raise ShapeError("cannot truncate to a higher degree")
        return Jet._raw(self.nvars, degree, {mi: v for mi, v in self._c.items() if sum(mi) <= degree})

    def with_degree(self, degree: int) -> "Jet":
        """Reinterpret at another truncation degree (exact only for genuine polynomials)."""
        return Jet._raw(self.nvars, degree, {mi: v for mi, v in self._c.items() if sum(mi) <= degree})

    def poly_degree(self) -> int:
        return max((sum(mi) for mi in self._c), default=0)

    def is_zero(self, tol: float = ZERO_TOL, scale: float | None = None) -> bool:
        s = self.max_abs() if scale is None else scale
        return all(is_negligible(v, s, tol) for v in self._c.values())

    def cleaned(self, tol: float = ZERO_TOL, scale: float | None = None) -> "Jet":
        s = self.max_abs() if scale is None else scale
        return Jet._raw(self.nvars, self.degree,
                        {mi: v for mi, v in self._c.items() if not is_negligible(v, s, tol)})

    def allclose(self, other: "Jet", atol: float = 1e-12) -> bool:
        if (self.nvars, self.degree) != (other.nvars, other.degree):
            return False
        keys = set(self._c) | set(other._c)
        return all(abs(self._c.get(k, 0.0) - other._c.get(k, 0.0)) <= atol for k in keys)

    def max_diff(self, other: "Jet") -> float:
        keys = set(self._c) | set(other._c)
        return max((abs(self._c.get(k, 0.0) - other._c.get(k, 0.0)) for k in keys), default=0.0)

    # arithmetic

    def _check(self, other: "Jet") -> None:
        if not isinstance(other, Jet):
            raise TypeError(f"expected Jet, got {type(other).__name__}")
        if other.nvars != self.nvars or other.degree != self.degree:
            raise ShapeError(
                f"jet shape mismatch: ({self.nvars}, {self.degree}) vs ({other.nvars}, {other.degree})")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return self + Jet.const(other, self.nvars, self.degree)
        self._check(other)
        c = dict(self._c)
        for k, v in other._c.items():
            c[k] = c.get(k, 0.0) + v
        return Jet._raw(self.nvars, self.degree, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet._raw(self.nvars, self.degree, {k: -v for k, v in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            a = float(other)
            return Jet._raw(self.nvars, self.degree, {k: a * v for k, v in self._c.items()})
        return jet_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1.0 / float(other))

    def __pow__(self, k: int):
        if k < 0 or int(k) != k:
            raise DomainError("only nonnegative integer powers")
        out = Jet.const(1.0, self.nvars, self.degree)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def deriv(self, i: int) -> "Jet":
        """Partial derivative in variable ``i``.

        Only terms up to ``degree - 1`` of the result are determined by the jet;
        the degree label is kept so the result can be combined with its parent.
        """
        c = {}
        for mi, v in self._c.items():
            e = mi[i]
            if e == 0:
                continue
            m2 = list(mi)
            m2[i] -= 1
            c[tuple(m2)] = v * e
        return Jet._raw(self.nvars, self.degree, c)

    def evaluate(self, x) -> np.ndarray:
        """Evaluate the truncated polynomial at points ``x`` of shape ``(..., nvars)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.nvars:
            raise ShapeError(f"points have {x.shape[-1]} coordinates, jet has {self.nvars}")
        out = np.zeros(x.shape[:-1])
        if not self._c:
            return out
        maxe = max(max(mi) for mi in self._c) if self.nvars else 0
        powers = [[np.ones(x.shape[:-1])] for _ in range(self.nvars)]
        for i in range(self.nvars):
            for _ in range(maxe):
                powers[i].append(powers[i][-1] * x[..., i])
        for mi, v in sorted(self._c.items(), key=_term_order):
            term = np.full(x.shape[:-1], v)
            for i, e in enumerate(mi):
                if e:
                    term = term * powers[i][e]
            out = out + term
        return out

    # text format

    def to_text(self) -> str:
        lines = [f"# nvars={self.nvars} degree={self.degree}"]
        for mi, v in sorted(self._c.items(), key=_term_order):
            lines.append(" ".join(str(e) for e in mi) + " : " + repr(v))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, nvars: int | None = None, degree: int | None = None) -> "Jet":
        return parse_jet(text, nvars=nvars, degree=degree)


def _term_order(item):
    mi = item[0]
    return (sum(mi), tuple(-e for e in mi))


def parse_jet(text: str, nvars: int | None = None, degree: int | None = None) -> Jet:
    """Parse the ``exponent-tuple : coefficient`` line format.

    A header comment ``# nvars=N degree=D`` is honoured when present; explicit
    arguments win over the header. Without either, ``degree`` defaults to
    ``max(DEFAULT_DEGREE, polynomial degree)``.
    """
    terms: dict[MultiIndex, float] = {}
    hdr: dict[str, int] = {}
    for raw in text.replace(";", "\n").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    if k in ("nvars", "degree"):
                        hdr[k] = int(v)
            continue
        if ":" not in line:
            raise ShapeError(f"bad jet literal line: {raw!r}")
        lhs, rhs = line.split(":", 1)
        mi = tuple(int(t) for t in lhs.split())
        terms[mi] = terms.get(mi, 0.0) + float(rhs)
    nv = nvars if nvars is not None else hdr.get("nvars")
    if nv is None:
        lens = {len(mi) for mi in terms}
        if len(lens) != 1:
            raise ShapeError("cannot infer nvars from jet literal")
        nv = lens.pop()
    if any(len(mi) != nv for mi in terms):
        raise ShapeError("inconsistent multi-index lengths in jet literal")
    deg = degree if degree is not None else hdr.get("degree")
    if deg is None:
        deg = max([DEFAULT_DEGREE] + [sum(mi) for mi in terms])
    return Jet(nv, deg, terms)


def format_jet(j: Jet) -> str:
    return j.to_text()


@functools.lru_cache(maxsize=64)
def _product_table(nvars: int, degree: int):
    """Monomials of degree <= ``degree`` and the index triples of all products that survive truncation."""
    monos: list[MultiIndex] = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            mi = [0] * nvars
            for v in combo:
                mi[v] += 1
            monos.append(tuple(mi))
    index = {mi: k for k, mi in enumerate(monos)}
    I, J, K = [], [], []
    for i, a in enumerate(monos):
        room = degree - sum(a)
        for j, b in enumerate(monos):
            if sum(b) > room:
                break
            I.append(i)
            J.append(j)
            K.append(index[tuple(x + y for x, y in zip(a, b))])
    return monos, index, np.array(I), np.array(J), np.array(K)


def jet_mul(a: Jet, b: Jet) -> Jet:
    """Truncated product."""
    a._check(b)
    if not a._c or not b._c:
        return Jet.zero(a.nvars, a.degree)
    monos, index, I, J, K = _product_table(a.nvars, a.degree)
    va = np.zeros(len(monos))
    vb = np.zeros(len(monos))
    va[[index[m] for m in a._c]] = list(a._c.values())
    vb[[index[m] for m in b._c]] = list(b._c.values())
    prod = np.bincount(K, weights=va[I] * vb[J], minlength=len(monos))
    nz = np.flatnonzero(prod)
    return Jet._raw(a.nvars, a.degree, dict(zip([monos[k] for k in nz], prod[nz].tolist())))


def identity_jets(nvars: int, degree: int = DEFAULT_DEGREE) -> list[Jet]:
    return [Jet.var(i, nvars, degree) for i in range(nvars)]


def _compose_unchecked(outer: Jet, inners: Sequence[Jet], degree: int) -> Jet:
    k = inners[0].nvars
    inn = [j if j.degree == degree else j.with_degree(degree) for j in inners]
    one = Jet.const(1.0, k, degree)
    memo: dict[MultiIndex, Jet] = {(0,) * outer.nvars: one}

    def prod(mi: MultiIndex) -> Jet:
        got = memo.get(mi)
        if got is not None:
            return got
        i = next(t for t, e in enumerate(mi) if e)
        prev = list(mi)
        prev[i] -= 1
        got = prod(tuple(prev)) * inn[i]
        memo[mi] = got
        return got

    acc: dict[MultiIndex, float] = {}
    for mi, v in sorted(outer._c.items(), key=_term_order):
        for m2, w in prod(mi)._c.items():
            acc[m2] = acc.get(m2, 0.0) + v * w
    return Jet._raw(k, degree, acc)


def jet_compose(outer: Jet, inners: Sequence[Jet]) -> Jet:
    """Taylor expansion of ``outer(inners(x))`` at 0.

    Every inner must vanish at 0 so that the base point maps to the base point.
    The result is truncated at the smaller of the outer and inner degrees.
    """
    if len(inners) != outer.nvars:
        raise ShapeError(f"need {outer.nvars} inner jets, got {len(inners)}")
    if not inners:
        raise ShapeError("composition needs at least one inner jet")
    k = inners[0].nvars
    for j in inners:
        if j.nvars != k:
            raise ShapeError("inner jets must share their variable count")
        if j.constant() != 0.0:
            raise DomainError("inner jet has nonzero constant term; base point must map to base point")
    degree = min([outer.degree] + [j.degree for j in inners])
    return _compose_unchecked(outer, inners, degree)


def jet_restrict(f: Jet, param: Sequence[Jet]) -> Jet:
    """Pull ``f`` back along a parametrization (jets in the parameter variables)."""
    return jet_compose(f, param)


def jet_translate(f: Jet, p: Sequence[float]) -> Jet:
    """``x -> f(x + p)``; exact when ``f`` is a genuine polynomial of degree <= f.degree."""
    p = [float(t) for t in p]
    if len(p) != f.nvars:
        raise ShapeError("translation vector has wrong length")
    if not any(p):
        return f
    shifted = [Jet.var(i, f.nvars, f.degree) + p[i] for i in range(f.nvars)]
    return _compose_unchecked(f, shifted, f.degree)


def _as_real_matrix(T, n: int) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.shape != (n, n):
        raise ShapeError(f"matrix must be {n}x{n}, got {T.shape}")
    return T


def jet_linear_change(f: Jet, T) -> Jet:
    """``x -> f(T x)`` for an invertible real matrix ``T``."""
    T = _as_real_matrix(T, f.nvars)
    if f.nvars and (not np.all(np.isfinite(T)) or np.linalg.cond(T) > 1e12):
        raise SingularityError("linear change of variables is singular")
    inners = [Jet.linear(T[i], f.degree) for i in range(f.nvars)]
    return jet_compose(f, inners)


def jet_graph_solve(rho: Jet, solve_var: int, max_iter: int | None = None) -> Jet:
    """Solve ``rho(..., y, ...) = 0`` for the variable ``solve_var`` as a jet in the others.

    Fixed-point iteration ``y <- -(rho - a*y)/a`` with ``a = d rho / d y (0)``;
    each pass fixes one more order, so ``degree`` passes suffice.
    """
    n = rho.nvars
    if not 0 <= solve_var < n:
        raise ShapeError("solve variable out of range")
    scale = rho.max_abs()
    if not is_negligible(rho.constant(), scale):
        raise DomainError("rho does not vanish at the base point")
    a = rho.linear_part()[solve_var]
    if is_negligible(a, scale):
        raise SingularityError("degenerate linear part in the solve variable")
    D = rho.degree
    e = [0] * n
    e[solve_var] = 1
    nonlinear = rho - Jet._raw(n, D, {tuple(e): a}) - rho.constant()
    rest = [i for i in range(n) if i != solve_var]
    k = n - 1
    base = [Jet.var(rest.index(i), k, D) if i != solve_var else None for i in range(n)]
    y = Jet.zero(k, D)
    for _ in range(max_iter if max_iter is not None else D + 1):
        inners = [b if b is not None else y for b in base]
        y_new = _compose_unchecked(nonlinear, inners, D) * (-1.0 / a)
        if y_new.max_diff(y) == 0.0:
            y = y_new
            break
        y = y_new
    return y


def jet_inverse_map(F: Sequence[Jet]) -> list[Jet]:
    """Local inverse of a map ``R^N -> R^N`` given by jets vanishing at 0."""
    N = len(F)
    if any(j.nvars != N for j in F):
        raise ShapeError("inverse needs a square map")
    D = min(j.degree for j in F)
    A = np.array([j.linear_part() for j in F])
    if np.linalg.cond(A) > 1e12:
        raise SingularityError("linear part of the map is singular")
    Ainv = np.linalg.inv(A)
    nonlin = [j.with_degree(D) - Jet.linear(A[i], D) - j.constant() for i, j in enumerate(F)]
    y = identity_jets(N, D)
    G = [Jet.linear(Ainv[i], D) for i in range(N)]
    for _ in range(D + 1):
        Ng = [_compose_unchecked(nl, G, D) for nl in nonlin]
        rhs = [y[i] - Ng[i] for i in range(N)]
        G = [sum((rhs[j] * Ainv[i, j] for j in range(N)), Jet.zero(N, D)) for i in range(N)]
    return G


def compose_map(outer: Sequence[Jet], inner: Sequence[Jet]) -> list[Jet]:
    return [jet_compose(o, inner) for o in outer]


class ComplexJet:
    """Complex-valued jet as a pair of real jets sharing variables and degree."""

    __slots__ = ("re", "im")

    def __init__(self, re: Jet, im: Jet | None = None):
        if im is None:
            im = Jet.zero(re.nvars, re.degree)
        re._check(im)
        self.re = re
        self.im = im

    @property
    def nvars(self) -> int:
        return self.re.nvars

    @property
    def degree(self) -> int:
        return self.re.degree

    @classmethod
    def zero(cls, nvars: int, degree: int = DEFAULT_DEGREE) -> "ComplexJet":
        return cls(Jet.zero(nvars, degree))

    @classmethod
    def const(cls, value: complex, nvars: int, degree: int = DEFAULT_DEGREE) -> "ComplexJet":
        value = complex(value)
        return cls(Jet.const(value.real, nvars, degree), Jet.const(value.imag, nvars, degree))

    @classmethod
    def zvar(cls, k: int, nvars: int, degree: int = DEFAULT_DEGREE) -> "ComplexJet":
        """Complex coordinate ``z_k = x_k + i y_k`` on real variables ``(2k, 2k+1)``."""
        return cls(Jet.var(2 * k, nvars, degree), Jet.var(2 * k + 1, nvars, degree))

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = ComplexJet.const(other, self.nvars, self.degree)
        return ComplexJet(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexJet(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            w = complex(other)
            return ComplexJet(self.re * w.real - self.im * w.imag, self.re * w.imag + self.im * w.real)
        if isinstance(other, Jet):
            return ComplexJet(self.re * other, self.im * other)
        return ComplexJet(self.re * other.re - self.im * other.im, self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def conj(self) -> "ComplexJet":
        return ComplexJet(self.re, -self.im)

    def evaluate(self, x) -> np.ndarray:
        return self.re.evaluate(x) + 1j * self.im.evaluate(x)

    def compose(self, inners: Sequence[Jet]) -> "ComplexJet":
        return ComplexJet(jet_compose(self.re, inners), jet_compose(self.im, inners))

    def is_zero(self, tol: float = ZERO_TOL) -> bool:
        s = max(self.re.max_abs(), self.im.max_abs())
        return self.re.is_zero(tol, s) and self.im.is_zero(tol, s)

    def max_diff(self, other: "ComplexJet") -> float:
        return max(self.re.max_diff(other.re), self.im.max_diff(other.im))

    def __repr__(self) -> str:
        return f"ComplexJet(re={self.re!r}, im={self.im!r})"


def complex_coords(ncomplex: int, degree: int = DEFAULT_DEGREE) -> list[ComplexJet]:
    nv = 2 * ncomplex
    return [ComplexJet.zvar(k, nv, degree) for k in range(ncomplex)]


def split_complex(cjets: Sequence[ComplexJet]) -> list[Jet]:
    """Interleave real and imaginary parts into a real map."""
    out: list[Jet] = []
    for c in cjets:
        out.extend([c.re, c.im])
    return out


def complex_matrix_to_real(A) -> np.ndarray:
    """Real ``2N x 2N`` matrix of the complex-linear map ``w = A z`` in interleaved coordinates."""
    A = np.asarray(A, dtype=complex)
    N = A.shape[0]
    R = np.zeros((2 * N, 2 * N))
    R[0::2, 0::2] = A.real
    R[0::2, 1::2] = -A.imag
    R[1::2, 0::2] = A.imag
    R[1::2, 1::2] = A.real
    return R


def real_to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def complex_to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def exp_series(nvars: int = 1, degree: int = DEFAULT_DEGREE) -> Jet:
    """Jet of ``exp`` in the single variable 0 (other variables inert)."""
    return Jet(nvars, degree, {(k,) + (0,) * (nvars - 1): 1.0 / math.factorial(k) for k in range(degree + 1)})


def log1p_series(nvars: int = 1, degree: int = DEFAULT_DEGREE) -> Jet:
    return Jet(nvars, degree, {(k,) + (0,) * (nvars - 1): (-1.0) ** (k + 1) / k for k in range(1, degree + 1)})
