"""Arithmetic over the prime field of order 2**61 - 1.

Everything a syndrome decoder needs lives here: modular helpers, short
convolutions, shortest linear recurrences, in-range root finding, the
transposed Vandermonde solver and closed-form power sums.  Polynomials are
lists of coefficients in ascending degree order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DecodeReject, SingularSystem

P = (1 << 61) - 1
_HALF = (P + 1) // 2
_SQRT_EXP = (P + 1) // 4  # P % 4 == 3, so a square root is one exponentiation


def inv(x: int) -> int:
    """Multiplicative inverse; ``x`` must be nonzero modulo P."""
    x %= P
    if x == 0:
        raise ZeroDivisionError("zero has no inverse in the field")
    return pow(x, P - 2, P)


def half(x: int) -> int:
    return x * _HALF % P


def batch_inv(xs: list[int]) -> list[int]:
    """Inverses of several nonzero elements at the cost of one exponentiation."""
    if not xs:
        return []
    prefix = [1] * len(xs)
    acc = 1
    for i, x in enumerate(xs):
        prefix[i] = acc
        acc = acc * x % P
    acc = inv(acc)
    out = [0] * len(xs)
    for i in range(len(xs) - 1, -1, -1):
        out[i] = acc * prefix[i] % P
        acc = acc * xs[i] % P
    return out


# ---------------------------------------------------------------------------
# factorial tables and convolution


_fact: list[int] = [1]
_ifact: list[int] = [1]


def _grow_factorials(n: int) -> None:
    while len(_fact) <= n:
        _fact.append(_fact[-1] * len(_fact) % P)
    if len(_ifact) < len(_fact):
        top = len(_fact) - 1
        tail = [0] * (top + 1 - len(_ifact))
        acc = inv(_fact[top])
        for i in range(top, len(_ifact) - 1, -1):
            tail[i - len(_ifact)] = acc
            acc = acc * i % P
        _ifact.extend(tail)


def factorials(n: int) -> tuple[list[int], list[int]]:
    """Return shared tables with ``i!`` and ``1/i!`` for ``i <= n``."""
    if len(_fact) <= n:
        _grow_factorials(max(n, 2 * len(_fact)))
    return _fact, _ifact


_SLOT = 17  # bytes per packed coefficient; products of 61-bit values fit with headroom
_KRONECKER_FROM = 12


def convolve(a: list[int], b: list[int], n: int) -> list[int]:
    """First ``n`` coefficients of ``a * b`` reduced modulo P.

    Short inputs use a direct double loop. Longer ones are packed into a
    single integer so the product runs inside CPython's bignum multiply.
    """
    a = a[:n]
    b = b[:n]
    if not a or not b:
        return [0] * n
    if min(len(a), len(b)) < _KRONECKER_FROM:
        out = []
        la, lb = len(a), len(b)
        for j in range(n):
            acc = 0
            for t in range(max(0, j - lb + 1), min(j, la - 1) + 1):
                acc += a[t] * b[j - t]
            out.append(acc % P)
        return out
    packed_a = int.from_bytes(b"".join(x.to_bytes(_SLOT, "little") for x in a), "little")
    packed_b = int.from_bytes(b"".join(x.to_bytes(_SLOT, "little") for x in b), "little")
    raw = (packed_a * packed_b).to_bytes(_SLOT * (len(a) + len(b)), "little")
    fb = int.from_bytes
    return [fb(raw[i * _SLOT:(i + 1) * _SLOT], "little") % P for i in range(n)]


def powers(x: int, count: int) -> list[int]:
    """``[1, x, x**2, ...]`` with ``count`` entries."""
    out = [1] * count
    acc = 1
    x %= P
    for i in range(1, count):
        acc = acc * x % P
        out[i] = acc
    return out


def _binomial_kernel(s, t, b: list[int]) -> tuple[list[int], list[int]]:
    """Apply ``out[j] = sum_i C(j, i) * x[i] * b[j - i] * (j - i)!`` to both families.

    ``b`` holds ``w[e] / e!`` for the sequence ``w`` being mixed in.  Working in
    the factorial basis turns the binomial sum into a plain convolution.
    """
    n = len(s)
    fact, ifact = factorials(n)
    a_s = [x * ifact[i] % P for i, x in enumerate(s)]
    a_t = [x * ifact[i] % P for i, x in enumerate(t)]
    if n < _KRONECKER_FROM:
        out_s, out_t = [], []
        for j in range(n):
            acc1 = acc2 = 0
            for i in range(j + 1):
                w = b[j - i]
                acc1 += a_s[i] * w
                acc2 += a_t[i] * w
            f = fact[j]
            out_s.append(acc1 % P * f % P)
            out_t.append(acc2 % P * f % P)
        return out_s, out_t
    # one bignum product serves both families: [a_s | zeros | a_t] * b
    gap = bytes(_SLOT * n)
    packed = int.from_bytes(
        b"".join(x.to_bytes(_SLOT, "little") for x in a_s) + gap
        + b"".join(x.to_bytes(_SLOT, "little") for x in a_t), "little")
    kernel = int.from_bytes(b"".join(x.to_bytes(_SLOT, "little") for x in b), "little")
    raw = (packed * kernel).to_bytes(_SLOT * 4 * n, "little")
    fb = int.from_bytes
    out_s = [fb(raw[i * _SLOT:(i + 1) * _SLOT], "little") % P * fact[i] % P for i in range(n)]
    base = 2 * n
    out_t = [fb(raw[(base + i) * _SLOT:(base + i + 1) * _SLOT], "little") % P * fact[i] % P
             for i in range(n)]
    return out_s, out_t


def shift_moments(s, t, u: int) -> tuple[list[int], list[int]]:
    """Re-base two families of power sums after moving positions right by ``u``.

    Given ``s[j] = sum a_i * i**j`` return ``sum a_i * (i + u)**j``, and the
    same for ``t``.
    """
    u %= P
    if u == 0:
        return list(s), list(t)
    n = len(s)
    _, ifact = factorials(n)
    b = [1] * n
    acc = 1
    for e in range(1, n):
        acc = acc * u % P
        b[e] = acc * ifact[e] % P
    return _binomial_kernel(s, t, b)


def repeat_moments(s, t, u: int, m: int) -> tuple[list[int], list[int]]:
    """Power sums of ``m`` copies of a block of length ``u``, for both families.

    Copy ``r`` is shifted by ``r * u``; the binomial expansion collapses the
    sum over copies into :func:`range_power_sums`.
    """
    n = len(s)
    if m == 0:
        return [0] * n, [0] * n
    if m == 1:
        return list(s), list(t)
    _, ifact = factorials(n)
    rps = range_power_sums(n - 1, m)
    b = [1] * n
    acc = 1
    u %= P
    for e in range(n):
        b[e] = acc * rps[e] % P * ifact[e] % P
        acc = acc * u % P
    return _binomial_kernel(s, t, b)


# ---------------------------------------------------------------------------
# power sums


@lru_cache(maxsize=None)
def _bernoulli_over_factorial(count: int) -> tuple[int, ...]:
    """``B_i / i!`` for ``i < count`` with the ``B_1 = -1/2`` convention."""
    fact, ifact = factorials(count + 2)
    out = [1]
    for m in range(1, count):
        # sum_{j<=m} C(m+1, j) B_j = 0
        acc = 0
        for j in range(m):
            acc += out[j] * ifact[m + 1 - j]
        out.append((-acc) % P)
    return tuple(out)


def range_power_sums(top: int, m: int) -> list[int]:
    """``[sum_{r<m} r**s for s in 0..top]`` with ``0**0 = 1``.

    Uses Faulhaber's formula, written as one convolution of ``B_i / i!`` with
    ``m**h / h!``.
    """
    if m <= 0:
        return [0] * (top + 1)
    fact, ifact = factorials(top + 2)
    bern = _bernoulli_over_factorial(top + 1)
    mp = powers(m, top + 2)
    tail = [0] + [mp[h] * ifact[h] % P for h in range(1, top + 2)]
    conv = convolve(list(bern), tail, top + 2)
    return [conv[s + 1] * fact[s] % P for s in range(top + 1)]


def range_power_sum(s: int, m: int) -> int:
    """``sum_{r=0}^{m-1} r**s`` modulo P, with ``0**0 = 1``."""
    if s < 0:
        raise ValueError("exponent must be non-negative")
    return range_power_sums(s, m)[s]


# ---------------------------------------------------------------------------
# linear recurrences


@dataclass(frozen=True)
class RecurrenceResult:
    """Shortest recurrence ``s[j] = sum_i coefficients[i] * s[j - 1 - i]``."""

    coefficients: tuple[int, ...]
    length: int

    def characteristic(self) -> list[int]:
        """Monic characteristic polynomial, ascending order.

        Its roots are the multipliers of the geometric components, which is
        where mismatch positions show up.
        """
        L = self.length
        poly = [0] * (L + 1)
        poly[L] = 1
        for i, c in enumerate(self.coefficients):
            poly[L - 1 - i] = (-c) % P
        return poly


def berlekamp_massey(seq: list[int], max_length: int | None = None) -> RecurrenceResult:
    """Shortest linear recurrence generating ``seq``.

    Runs the inversion-free variant and normalizes once at the end.  With
    ``max_length`` set, the search stops as soon as the recurrence is known
    to be longer; the returned length then exceeds ``max_length`` and the
    coefficients are left empty.
    """
    if not seq:
        raise ValueError("sequence must be nonempty")
    s = [x % P for x in seq]
    conn = [1]
    prev = [1]
    L = 0
    shift = 1
    last_disc = 1
    for n, value in enumerate(s):
        disc = 0
        for i in range(min(L, len(conn) - 1) + 1):
            disc += conn[i] * s[n - i]
        disc %= P
        if disc == 0:
            shift += 1
            continue
        width = max(len(conn), len(prev) + shift)
        updated = [c * last_disc % P for c in conn] + [0] * (width - len(conn))
        for i, c in enumerate(prev):
            updated[i + shift] = (updated[i + shift] - disc * c) % P
        if 2 * L <= n:
            prev = conn
            L = n + 1 - L
            if max_length is not None and L > max_length:
                return RecurrenceResult((), L)
            last_disc = disc
            shift = 1
        else:
            shift += 1
        conn = updated
    conn = (conn + [0] * (L + 1))[: L + 1]
    lead = inv(conn[0])
    return RecurrenceResult(tuple((-c) * lead % P for c in conn[1:]), L)


# ---------------------------------------------------------------------------
# polynomials


def _trim(f: list[int]) -> list[int]:
    while f and f[-1] == 0:
        f.pop()
    return f


def poly_eval(f: list[int], x: int) -> int:
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % P
    return acc


def _monic(f: list[int]) -> list[int]:
    if f[-1] == 1:
        return f
    lead = inv(f[-1])
    return [c * lead % P for c in f]


def _poly_mod(a: list[int], m: list[int]) -> list[int]:
    """Remainder of ``a`` by the monic polynomial ``m``."""
    a = list(a)
    dm = len(m) - 1
    for i in range(len(a) - 1, dm - 1, -1):
        c = a[i]
        if c:
            base = i - dm
            for j in range(dm):
                a[base + j] = (a[base + j] - c * m[j]) % P
        a[i] = 0
    return _trim(a[:dm])


def _poly_mulmod(a: list[int], b: list[int], m: list[int]) -> list[int]:
    if not a or not b:
        return []
    prod = convolve(a, b, len(a) + len(b) - 1)
    return _poly_mod(prod, m)


def _poly_gcd(a: list[int], b: list[int]) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _poly_mod(a, _monic(b))
    return _monic(a) if a else a


def _poly_powmod(base: list[int], e: int, m: list[int]) -> list[int]:
    result = [1]
    base = _poly_mod(base, m)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, m)
        e >>= 1
        if e:
            base = _poly_mulmod(base, base, m)
    return result


def _poly_sub(a: list[int], b: list[int]) -> list[int]:
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % P for i in range(n)]
    return _trim(out)


def _poly_divexact(a: list[int], d: list[int]) -> list[int]:
    """Quotient of ``a`` by monic ``d`` (remainder assumed zero)."""
    a = list(a)
    dd = len(d) - 1
    q = [0] * (len(a) - dd)
    for i in range(len(a) - 1, dd - 1, -1):
        c = a[i]
        q[i - dd] = c
        if c:
            for j in range(dd + 1):
                a[i - dd + j] = (a[i - dd + j] - c * d[j]) % P
    return q


def _split_linear_factors(g: list[int], rng: random.Random, out: list[int]) -> None:
    """Append the roots of a monic squarefree polynomial that splits fully."""
    deg = len(g) - 1
    if deg == 0:
        return
    if deg == 1:
        out.append((-g[0]) % P)
        return
    if deg == 2:
        out.extend(_quadratic_roots(g))
        return
    while True:
        delta = rng.randrange(P)
        h = _poly_powmod([delta, 1], (P - 1) // 2, g)
        d = _poly_gcd(g, _poly_sub(h, [1]))
        if 0 < len(d) - 1 < deg:
            _split_linear_factors(d, rng, out)
            _split_linear_factors(_poly_divexact(g, d), rng, out)
            return


def _sqrt(a: int) -> int | None:
    a %= P
    r = pow(a, _SQRT_EXP, P)
    return r if r * r % P == a else None


def _quadratic_roots(f: list[int]) -> list[int]:
    c, b, a = f
    disc = (b * b - 4 * a * c) % P
    root = _sqrt(disc)
    if root is None:
        return []
    i2a = inv(2 * a)
    return sorted({(-b + root) * i2a % P, (-b - root) * i2a % P})


_TRIAL_WORK = 64
_VECTOR_TRIAL_MAX = 1 << 16
_VECTOR_CHUNK = 2048

_U32 = np.uint64(0xFFFFFFFF)
_U29 = np.uint64((1 << 29) - 1)
_PV = np.uint64(P)


def _vec_mulmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product modulo P on uint64 arrays with entries below P."""
    a0, a1 = a & _U32, a >> np.uint64(32)
    b0, b1 = b & _U32, b >> np.uint64(32)
    lo = a0 * b0
    mid = a1 * b0 + a0 * b1
    hi = a1 * b1
    # 2**64 = 8 and 2**61 = 1 modulo P
    s = (hi << np.uint64(3)) + (mid >> np.uint64(29)) + ((mid & _U29) << np.uint64(32))
    s = (s & _PV) + (s >> np.uint64(61))
    s = s + (lo & _PV) + (lo >> np.uint64(61))
    s = (s & _PV) + (s >> np.uint64(61))
    return np.where(s >= _PV, s - _PV, s)


def _vector_trial(f: list[int], m: int) -> list[int]:
    # cache-sized chunks; stop once every root is found
    roots: list[int] = []
    deg = len(f) - 1
    for lo in range(1, m + 1, _VECTOR_CHUNK):
        xs = np.arange(lo, min(lo + _VECTOR_CHUNK, m + 1), dtype=np.uint64)
        acc = np.full(len(xs), f[-1], dtype=np.uint64)
        for c in reversed(f[:-1]):
            acc = _vec_mulmod(acc, xs) + np.uint64(c)
            acc = np.where(acc >= _PV, acc - _PV, acc)
        roots.extend((np.flatnonzero(acc == 0) + lo).tolist())
        if len(roots) >= deg:
            break
    return roots


def roots_in_range(poly: list[int], m: int, *, rng: random.Random | None = None) -> list[int]:
    """Distinct roots of ``poly`` in ``[1..m]``, sorted ascending.

    Raises :class:`DecodeReject` unless ``poly`` splits into distinct linear
    factors whose roots all lie in range, which is what a valid error locator
    looks like.
    """
    f = _trim([c % P for c in poly])
    if not f:
        raise ValueError("zero polynomial")
    deg = len(f) - 1
    if deg == 0:
        return []
    if deg > m:
        raise DecodeReject("more roots requested than positions available")
    f = _monic(f)
    if deg == 1:
        roots = [(-f[0]) % P]
    elif deg == 2:
        roots = _quadratic_roots(f)
    elif m * deg <= _TRIAL_WORK:
        roots = [x for x in range(1, m + 1) if poly_eval(f, x) == 0]
    elif m <= _VECTOR_TRIAL_MAX:
        roots = _vector_trial(f, m)
    else:
        xp = _poly_powmod([0, 1], P, f)
        split = _poly_gcd(f, _poly_sub(xp, [0, 1]))
        if len(split) - 1 != deg:
            raise DecodeReject("locator does not split into distinct linear factors")
        roots = []
        _split_linear_factors(split, rng or random.Random(deg), roots)
    if len(roots) != deg or len(set(roots)) != deg:
        raise DecodeReject("locator does not split into distinct linear factors")
    if any(not 1 <= x <= m for x in roots):
        raise DecodeReject("locator root outside the position range")
    return sorted(roots)


def solve_transposed_vandermonde(nodes: list[int], rhs: list[int]) -> list[int]:
    """Solve ``sum_i c[i] * nodes[i]**j = rhs[j]`` for ``j < len(nodes)``.

    Only the first ``len(nodes)`` entries of ``rhs`` are used.
    """
    L = len(nodes)
    if len(rhs) < L:
        raise ValueError("not enough right-hand side entries")
    xs = [x % P for x in nodes]
    if len(set(xs)) != L:
        raise SingularSystem("nodes must be pairwise distinct")
    # master polynomial M(z) = prod (z - x_i)
    master = [1]
    for x in xs:
        nxt = [0] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i] = (nxt[i] - c * x) % P
            nxt[i + 1] = (nxt[i + 1] + c) % P
        master = nxt
    nums, dens = [], []
    for x in xs:
        # synthetic division M(z) / (z - x), evaluated against rhs
        q = [0] * L
        carry = master[L]
        for i in range(L - 1, -1, -1):
            q[i] = carry
            carry = (master[i] + carry * x) % P
        nums.append(sum(qi * r for qi, r in zip(q, rhs)) % P)
        dens.append(poly_eval(q, x))
    return [a * b % P for a, b in zip(nums, batch_inv(dens))]


def vandermonde_consistent(nodes: list[int], coeffs: list[int], rhs: list[int]) -> bool:
    """Check every entry of ``rhs`` against the forward evaluation."""
    pw = [1] * len(nodes)
    xs = [x % P for x in nodes]
    for value in rhs:
        if sum(c * p for c, p in zip(coeffs, pw)) % P != value % P:
            return False
        pw = [p * x % P for p, x in zip(pw, xs)]
    return True
