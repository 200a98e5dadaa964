"""Compiled inner loops for family-scale computations.

Everything in here is numba nopython code over int64/float64.  All modular
arithmetic assumes the modulus is an odd prime below 2**31, so products of
two reduced residues fit in int64 with room to spare.  The public modules
wrap these kernels; nothing here validates its inputs.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 6.283185307179586
# max of d(n)/sqrt(n) over all n, attained at n = 12; gives the geometric
# tail constant for the weighted series
SQRT3 = 1.7320508075688772


@njit(cache=True)
def _powmod(a, e, p):
    a = a % p
    r = 1
    while e > 0:
        if e & 1:
            r = (r * a) % p
        a = (a * a) % p
        e >>= 1
    return r


@njit(cache=True)
def _inv_mod(a, p):
    return _powmod(a, p - 2, p)


@njit(cache=True)
def _sqrt_mod(a, p):
    """Square root of a mod an odd prime p, or -1 when a is a nonresidue."""
    a = a % p
    if a == 0:
        return 0
    if _powmod(a, (p - 1) >> 1, p) != 1:
        return -1
    if p % 4 == 3:
        return _powmod(a, (p + 1) >> 2, p)
    # Tonelli-Shanks
    q = p - 1
    s = 0
    while q % 2 == 0:
        q >>= 1
        s += 1
    z = 2
    while _powmod(z, (p - 1) >> 1, p) != p - 1:
        z += 1
    m = s
    c = _powmod(z, q, p)
    t = _powmod(a, q, p)
    r = _powmod(a, (q + 1) >> 1, p)
    while t != 1:
        i = 0
        t2 = t
        while t2 != 1:
            t2 = (t2 * t2) % p
            i += 1
            if i == m:
                return -1  # unreachable for residues; guard anyway
        b = c
        for _ in range(m - i - 1):
            b = (b * b) % p
        m = i
        c = (b * b) % p
        t = (t * c) % p
        r = (r * b) % p
    return r


@njit(cache=True)
def _kron(d, n):
    """Kronecker symbol (d|n); mirrors the pure-python implementation."""
    if n == 0:
        if d == 1 or d == -1:
            return 1
        return 0
    if d % 2 == 0 and n % 2 == 0:
        return 0
    res = 1
    if n < 0:
        n = -n
        if d < 0:
            res = -1
    t = 0
    while n % 2 == 0:
        n >>= 1
        t += 1
    if t > 0:
        if d % 2 == 0:
            return 0
        dm8 = d % 8
        if t % 2 == 1 and (dm8 == 3 or dm8 == 5):
            res = -res
    a = d % n
    while n > 1:
        if a == 0:
            return 0
        t = 0
        while a % 2 == 0:
            a >>= 1
            t += 1
        if t % 2 == 1:
            nm8 = n % 8
            if nm8 == 3 or nm8 == 5:
                res = -res
        if a % 4 == 3 and n % 4 == 3:
            res = -res
        tmp = n % a
        n = a
        a = tmp
    return res


# ---------------------------------------------------------------------------
# curve group law, short Weierstrass y^2 = x^3 + Ax + B over F_p, p > 3


@njit(cache=True)
def _ec_add(x1, y1, i1, x2, y2, i2, A, p):
    if i1 == 1:
        return x2, y2, i2
    if i2 == 1:
        return x1, y1, i1
    if x1 == x2:
        if (y1 + y2) % p == 0:
            return 0, 0, 1
        num = (3 * ((x1 * x1) % p) + A) % p
        den = (2 * y1) % p
    else:
        num = (y2 - y1) % p
        den = (x2 - x1) % p
    s = (num * _inv_mod(den, p)) % p
    x3 = ((s * s) % p - x1 - x2) % p
    y3 = ((s * ((x1 - x3) % p)) % p - y1) % p
    return x3, y3, 0


@njit(cache=True)
def _ec_mul(k, x, y, inf, A, p):
    rx, ry, ri = 0, 0, 1
    ax, ay, ai = x, y, inf
    while k > 0:
        if k & 1:
            rx, ry, ri = _ec_add(rx, ry, ri, ax, ay, ai, A, p)
        ax, ay, ai = _ec_add(ax, ay, ai, ax, ay, ai, A, p)
        k >>= 1
    return rx, ry, ri


# ---------------------------------------------------------------------------
# fast arithmetic mod a fixed prime below 2**26: products stay below 2**52,
# so a float64 reciprocal gives the quotient to within 1 and two fixups make
# the reduction exact


@njit(inline="always")
def _mm(a, b, p, pinv):
    t = a * b
    q = int(t * pinv)
    r = t - q * p
    if r < 0:
        r += p
    elif r >= p:
        r -= p
    return r


@njit(inline="always")
def _addm(a, b, p):
    r = a + b
    if r >= p:
        r -= p
    return r


@njit(inline="always")
def _subm(a, b, p):
    r = a - b
    if r < 0:
        r += p
    return r


@njit(cache=True)
def _powmod_f(a, e, p, pinv):
    a = a % p
    r = 1
    while e > 0:
        if e & 1:
            r = _mm(r, a, p, pinv)
        a = _mm(a, a, p, pinv)
        e >>= 1
    return r


# Jacobian coordinates (X, Y, Z), affine x = X/Z^2, y = Y/Z^3, infinity Z = 0.
# Additions in the chains below never invert; normalization is batched.


@njit(inline="always")
def _jdbl(X1, Y1, Z1, A, p, pinv):
    if Z1 == 0 or Y1 == 0:
        return 1, 1, 0
    XX = _mm(X1, X1, p, pinv)
    YY = _mm(Y1, Y1, p, pinv)
    YYYY = _mm(YY, YY, p, pinv)
    ZZ = _mm(Z1, Z1, p, pinv)
    t = _addm(X1, YY, p)
    S = _subm(_subm(_mm(t, t, p, pinv), XX, p), YYYY, p)
    S = _addm(S, S, p)
    M = _addm(_addm(_addm(XX, XX, p), XX, p), _mm(A, _mm(ZZ, ZZ, p, pinv), p, pinv), p)
    X3 = _subm(_mm(M, M, p, pinv), _addm(S, S, p), p)
    y8 = _addm(YYYY, YYYY, p)
    y8 = _addm(y8, y8, p)
    y8 = _addm(y8, y8, p)
    Y3 = _subm(_mm(M, _subm(S, X3, p), p, pinv), y8, p)
    Z3 = _mm(_addm(Y1, Y1, p), Z1, p, pinv)
    return X3, Y3, Z3


@njit(inline="always")
def _jadd_mixed(X1, Y1, Z1, x2, y2, A, p, pinv):
    if Z1 == 0:
        return x2, y2, 1
    ZZ = _mm(Z1, Z1, p, pinv)
    U2 = _mm(x2, ZZ, p, pinv)
    S2 = _mm(y2, _mm(Z1, ZZ, p, pinv), p, pinv)
    H = _subm(U2, X1, p)
    r = _subm(S2, Y1, p)
    if H == 0:
        if r == 0:
            return _jdbl(X1, Y1, Z1, A, p, pinv)
        return 1, 1, 0
    HH = _mm(H, H, p, pinv)
    HHH = _mm(H, HH, p, pinv)
    V = _mm(X1, HH, p, pinv)
    X3 = _subm(_subm(_mm(r, r, p, pinv), HHH, p), _addm(V, V, p), p)
    Y3 = _subm(_mm(r, _subm(V, X3, p), p, pinv), _mm(Y1, HHH, p, pinv), p)
    Z3 = _mm(Z1, H, p, pinv)
    return X3, Y3, Z3


@njit(cache=True)
def _jmul(k, x2, y2, A, p, pinv):
    """k * (x2, y2) in Jacobian coordinates, left-to-right double-and-add."""
    RX, RY, RZ = 1, 1, 0
    started = False
    bit = 62
    while bit >= 0:
        if started:
            RX, RY, RZ = _jdbl(RX, RY, RZ, A, p, pinv)
        if (k >> bit) & 1:
            RX, RY, RZ = _jadd_mixed(RX, RY, RZ, x2, y2, A, p, pinv)
            started = True
        bit -= 1
    return RX, RY, RZ


@njit(cache=True)
def _batch_affine(PX, PY, PZ, count, p, pinv, ox, oy):
    """Normalize count Jacobian points to affine in ox, oy with one inversion.

    Returns 0 on success, 1 if any point is at infinity.
    """
    pre = np.empty(count, dtype=np.int64)
    acc = 1
    for i in range(count):
        if PZ[i] == 0:
            return 1
        acc = _mm(acc, PZ[i], p, pinv)
        pre[i] = acc
    t = _powmod_f(acc, p - 2, p, pinv)
    for i in range(count - 1, -1, -1):
        if i > 0:
            invz = _mm(t, pre[i - 1], p, pinv)
            t = _mm(t, PZ[i], p, pinv)
        else:
            invz = t
        i2 = _mm(invz, invz, p, pinv)
        ox[i] = _mm(PX[i], i2, p, pinv)
        oy[i] = _mm(PY[i], _mm(i2, invz, p, pinv), p, pinv)
    return 0


# ---------------------------------------------------------------------------
# point counts


@njit(cache=True)
def _ap_naive(p, a1, a2, a3, a4, a6, b2, b4, b6):
    """Trace of Frobenius by direct character sum; any prime, O(p)."""
    if p == 2:
        cnt = 1
        for x in range(2):
            for y in range(2):
                lhs = y * y + a1 * x * y + a3 * y
                rhs = x * x * x + a2 * x * x + a4 * x + a6
                if (lhs - rhs) % 2 == 0:
                    cnt += 1
        return 3 - cnt
    chi = np.empty(p, dtype=np.int8)
    for i in range(p):
        chi[i] = -1
    for r in range(p):
        chi[(r * r) % p] = 1
    chi[0] = 0
    b2m = b2 % p
    b4m = (2 * b4) % p
    b6m = b6 % p
    total = 0
    for x in range(p):
        t = (4 * x + b2m) % p
        t = (t * x + b4m) % p
        t = (t * x + b6m) % p
        total += chi[t]
    return -total


@njit(cache=True)
def _ap_order(p, A, B, jX, jY, jZ, bx, by, gX, gY, gZ, ux, uy, newc, cand):
    """Trace via group-order search in the Hasse window.

    Baby-step giant-step on random points.  A matched baby/giant pair is an
    exact point equality, so every candidate is a true annihilator of the
    sampled point; candidate sets are intersected across points until one
    window multiple survives.  A degenerate sample (infinity inside a chain,
    candidate overflow) just moves on to a fresh point.  Returns ok = 0 when
    no unambiguous order was pinned down, so the caller can fall back to the
    direct count.  Requires p < 2**26 (the fast reduction's exactness range)
    and workspace arrays of length >= 256 (16 for newc and cand).
    """
    if p >= (1 << 26):
        return 0, 0
    pinv = 1.0 / p
    s = int(math.sqrt(4.0 * p))
    while (s + 1) * (s + 1) <= 4 * p:
        s += 1
    while s * s > 4 * p:
        s -= 1
    n0 = p + 1 - s
    L = 2 * s + 1
    w = int(math.sqrt(1.0 * L)) + 1
    na = L // w + 2

    ncand = -1
    state = p * 2862933555777941757 + 3037000493

    for _attempt in range(8):
        px = -1
        py = -1
        for _trial in range(128):
            state = state * 6364136223846793005 + 1442695040888963407
            x = (state >> 17) & 0x3FFFFFFFFFF
            x = x % p
            f = (((x * x) % p) * x + (A * x) % p + B) % p
            if f == 0:
                continue  # 2-torsion point, useless order
            y = _sqrt_mod(f, p)
            if y >= 1:
                px = x
                py = y
                break
        if px < 0:
            return 0, 0

        # baby steps: n0*P, (n0+1)*P, ..., (n0+w-1)*P
        RX, RY, RZ = _jmul(n0, px, py, A, p, pinv)
        for b in range(w):
            jX[b] = RX
            jY[b] = RY
            jZ[b] = RZ
            RX, RY, RZ = _jadd_mixed(RX, RY, RZ, px, py, A, p, pinv)

        nnew = 0
        bad = False
        if _batch_affine(jX, jY, jZ, w, p, pinv, bx, by) != 0:
            # an annihilator of P sits among the babies (the group order can
            # live this close to the window edge, stalling every sample).
            # Pin down ord(P) exactly, then list all its window multiples so
            # the candidate set stays complete and intersection stays sound.
            m0 = 0
            for b in range(w):
                if jZ[b] == 0:
                    m0 = n0 + b
                    break
            o = m0
            f = m0
            q = 2
            while q * q <= f:
                if f % q == 0:
                    while f % q == 0:
                        f //= q
                    while o % q == 0:
                        t = o // q
                        VX, VY, VZ = _jmul(t, px, py, A, p, pinv)
                        if VZ == 0:
                            o = t
                        else:
                            break
                q += 1 if q == 2 else 2
            if f > 1:
                while o % f == 0:
                    t = o // f
                    VX, VY, VZ = _jmul(t, px, py, A, p, pinv)
                    if VZ == 0:
                        o = t
                    else:
                        break
            m = ((n0 + o - 1) // o) * o
            while m <= n0 + L - 1:
                if nnew < 16:
                    newc[nnew] = m
                    nnew += 1
                else:
                    bad = True
                    break
                m += o
        else:
            order = np.argsort(bx[:w])
            sx = bx[order]

            GX, GY, GZ = _jmul(w, px, py, A, p, pinv)
            if GZ == 0:
                continue
            invz = _powmod_f(GZ, p - 2, p, pinv)
            i2 = _mm(invz, invz, p, pinv)
            gx = _mm(GX, i2, p, pinv)
            gy = _mm(GY, _mm(i2, invz, p, pinv), p, pinv)
            ngy = p - gy if gy > 0 else 0

            # giant steps: a * (-G) for a = 1..na
            UX, UY, UZ = gx, ngy, 1
            for a in range(na):
                gX[a] = UX
                gY[a] = UY
                gZ[a] = UZ
                UX, UY, UZ = _jadd_mixed(UX, UY, UZ, gx, ngy, A, p, pinv)
            if _batch_affine(gX, gY, gZ, na, p, pinv, ux, uy) != 0:
                continue  # small-order giant step, resample

            for a in range(na):
                lo = 0
                hi = w
                while lo < hi:
                    mid = (lo + hi) >> 1
                    if sx[mid] < ux[a]:
                        lo = mid + 1
                    else:
                        hi = mid
                j = lo
                while j < w and sx[j] == ux[a]:
                    b = order[j]
                    if by[b] == uy[a]:
                        # (n0+b)*P = (a+1)*w*(-P) exactly, so m*P = O
                        m = n0 + b + (a + 1) * w
                        if m >= n0 and m <= n0 + L - 1:
                            if nnew < 16:
                                dup = False
                                for t in range(nnew):
                                    if newc[t] == m:
                                        dup = True
                                if not dup:
                                    newc[nnew] = m
                                    nnew += 1
                            else:
                                bad = True
                    j += 1
                if bad:
                    break
        if bad or nnew == 0:
            continue

        if ncand < 0:
            for t in range(nnew):
                cand[t] = newc[t]
            ncand = nnew
        else:
            k = 0
            for t in range(ncand):
                keep = False
                for u in range(nnew):
                    if newc[u] == cand[t]:
                        keep = True
                        break
                if keep:
                    cand[k] = cand[t]
                    k += 1
            ncand = k
        if ncand == 0:
            return 0, 0
        if ncand == 1:
            m = cand[0]
            VX, VY, VZ = _jmul(m, px, py, A, p, pinv)
            if VZ != 0:
                return 0, 0
            ap = p + 1 - m
            if ap * ap <= 4 * p:
                return ap, 1
            return 0, 0
    return 0, 0


@njit(cache=True)
def _ap_batch(ps, a1, a2, a3, a4, a6, b2, b4, b6, c4, c6, naive_max):
    """a(p) for an array of good primes; order search above naive_max."""
    out = np.empty(ps.size, dtype=np.int64)
    jX = np.empty(256, dtype=np.int64)
    jY = np.empty(256, dtype=np.int64)
    jZ = np.empty(256, dtype=np.int64)
    bx = np.empty(256, dtype=np.int64)
    by = np.empty(256, dtype=np.int64)
    gX = np.empty(256, dtype=np.int64)
    gY = np.empty(256, dtype=np.int64)
    gZ = np.empty(256, dtype=np.int64)
    ux = np.empty(256, dtype=np.int64)
    uy = np.empty(256, dtype=np.int64)
    newc = np.zeros(16, dtype=np.int64)
    cand = np.zeros(16, dtype=np.int64)
    for i in range(ps.size):
        p = ps[i]
        if p <= naive_max or p < 5:
            out[i] = _ap_naive(p, a1, a2, a3, a4, a6, b2, b4, b6)
        else:
            A = (-27 * c4) % p
            B = (-54 * c6) % p
            ap, ok = _ap_order(p, A, B, jX, jY, jZ, bx, by, gX, gY, gZ,
                               ux, uy, newc, cand)
            if ok == 1:
                out[i] = ap
            else:
                out[i] = _ap_naive(p, a1, a2, a3, a4, a6, b2, b4, b6)
    return out


# ---------------------------------------------------------------------------
# multiplicative sieves


@njit(cache=True)
def _an_fill(limit, spf, apn, badp):
    """Normalized a(n) for n <= limit from dense prime values apn[p].

    Good prime powers follow the degree-two recursion; primes listed in
    badp use plain powers.
    """
    A = np.zeros(limit + 1, dtype=np.float64)
    if limit >= 1:
        A[1] = 1.0
    for n in range(2, limit + 1):
        p = spf[n]
        m = n // p
        if m == 1:
            A[n] = apn[n]
        elif m % p != 0:
            A[n] = A[p] * A[m]
        else:
            isbad = False
            for t in range(badp.size):
                if badp[t] == p:
                    isbad = True
            if isbad:
                A[n] = A[p] * A[m]
            else:
                A[n] = A[p] * A[m] - A[m // p]
    return A


@njit(cache=True)
def _chi_fill(d, absd, spf, out):
    """chi_d(r) for r in [0, absd) into out, multiplicatively over spf."""
    if absd == 1:
        out[0] = 1
        return
    out[0] = 0
    out[1] = 1
    for r in range(2, absd):
        p = spf[r]
        if p == r:
            out[r] = _kron(d, r)
        else:
            out[r] = out[p] * out[r // p]


@njit(cache=True)
def _chi_vec(d, limit, spf):
    """chi_d(n) for all n <= limit as int8 (index 0 holds chi_d(0))."""
    out = np.empty(limit + 1, dtype=np.int8)
    if d == 1 or d == -1:
        out[0] = 1
    else:
        out[0] = 0
    if limit >= 1:
        out[1] = 1
    for n in range(2, limit + 1):
        p = spf[n]
        if p == n:
            out[n] = _kron(d, n)
        else:
            out[n] = out[p] * out[n // p]
    return out


# ---------------------------------------------------------------------------
# weighted central series over a family


@njit(cache=True)
def _series_sweep(ds, sqrtN, rel_tol, coefq, spf, limit):
    """Central series for every twist in ds (all with sign +1 forced).

    coefq[n] must hold a(n)/sqrt(n) in the analytic normalization.  Each
    twist gets its character table mod |d| filled multiplicatively, then a
    single weighted pass with the cutoff chosen so the geometric tail bound
    sqrt(3) * 2 * q^(M+1) / (1 - q) drops below rel_tol; that is stronger
    than the rel_tol * (|partial| + 1) stopping rule.
    """
    nt = ds.size
    values = np.empty(nt, dtype=np.float64)
    nmaxs = np.empty(nt, dtype=np.int64)
    tails = np.empty(nt, dtype=np.float64)
    maxabs = 1
    for i in range(nt):
        a = ds[i] if ds[i] >= 0 else -ds[i]
        if a > maxabs:
            maxabs = a
    chi = np.empty(maxabs + 1, dtype=np.int8)
    for i in range(nt):
        d = ds[i]
        absd = d if d >= 0 else -d
        _chi_fill(d, absd, spf, chi)
        Q = sqrtN * absd / TWO_PI
        one_minus = -math.expm1(-1.0 / Q)
        M = int(math.ceil(Q * math.log(2.0 * SQRT3 / (rel_tol * one_minus)))) + 1
        if M < 8:
            M = 8
        if M > limit:
            M = limit
        rho = math.exp(-1.0 / Q)
        w = rho
        S = 0.0
        idx = 0
        for n in range(1, M + 1):
            idx += 1
            if idx == absd:
                idx = 0
            if (n & 65535) == 0:
                w = math.exp(-n / Q)  # kill accumulated drift
            s8 = chi[idx]
            if s8 != 0:
                S += coefq[n] * s8 * w
            w *= rho
        values[i] = 2.0 * S
        nmaxs[i] = M
        tails[i] = 2.0 * SQRT3 * math.exp(-(M + 1.0) / Q) / one_minus
    return values, nmaxs, tails


@njit(cache=True)
def _prime_chi_sums(ds, ps, coefp, out):
    """out[i] = sum over one prime block of coefp[k] * chi_d(ps[k]).

    Callers pass coefp[k] = a(p_k)/sqrt(p_k) for the primes of a single
    walk increment and call once per block.
    """
    for i in range(ds.size):
        d = ds[i]
        acc = 0.0
        for k in range(ps.size):
            s = _kron(d, ps[k])
            if s != 0:
                acc += coefp[k] * s
        out[i] = acc
    return out
