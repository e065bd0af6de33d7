"""Minimal BLS12-381 arithmetic backend.

Affine curve arithmetic over the base field tower Fq -> Fq2 -> Fq12, the
ate pairing with a by-the-book final exponentiation, hash-to-curve for G2
(expand_message_xmd + Shallue-van de Woestijne map + cofactor clearing),
and ZCash-convention compressed point encodings.

Everything is derived from the single curve family parameter ``PARAM_X``
where that is possible; the remaining literals (field modulus, standard
generators) are cross-checked against derived values at import time.

This module is deliberately not constant-time; it exists to back a
protocol laboratory, not to hold production keys.
"""

from __future__ import annotations

import hashlib

# Curve family parameter for BLS12-381 (negative by construction).
PARAM_X = -0xD201000000010000

# Subgroup order r = x^4 - x^2 + 1.
CURVE_ORDER = PARAM_X**4 - PARAM_X**2 + 1

# Base field modulus q = ((x - 1)^2 * r) / 3 + x.
FIELD_MODULUS = ((PARAM_X - 1) ** 2 * CURVE_ORDER) // 3 + PARAM_X

assert FIELD_MODULUS == int(
    "1a0111ea397fe69a4b1ba7b6434bacd764774b84f38512bf6730d2a0f6b0f624"
    "1eabfffeb153ffffb9feffffffffaaab",
    16,
)
assert CURVE_ORDER == int(
    "73eda753299d7d483339d80809a1d80553bda402fffe5bfeffffffff00000001", 16
)

# Cofactors: h1 = (x-1)^2 / 3; h2 from the standard BLS12 family polynomial.
H1 = (PARAM_X - 1) ** 2 // 3
H2 = (
    PARAM_X**8
    - 4 * PARAM_X**7
    + 5 * PARAM_X**6
    - 4 * PARAM_X**4
    + 6 * PARAM_X**3
    - 4 * PARAM_X**2
    - 4 * PARAM_X
    + 13
) // 9

_Q = FIELD_MODULUS


# ---------------------------------------------------------------------------
# Field tower
# ---------------------------------------------------------------------------


class FQ:
    """Element of the prime field Fq."""

    __slots__ = ("n",)

    def __init__(self, n):
        self.n = n % _Q

    def __add__(self, other):
        return FQ(self.n + _asint(other))

    __radd__ = __add__

    def __sub__(self, other):
        return FQ(self.n - _asint(other))

    def __rsub__(self, other):
        return FQ(_asint(other) - self.n)

    def __mul__(self, other):
        return FQ(self.n * _asint(other))

    __rmul__ = __mul__

    def __neg__(self):
        return FQ(-self.n)

    def __truediv__(self, other):
        return self * FQ(_asint(other)).inv()

    def __rtruediv__(self, other):
        return FQ(_asint(other)) * self.inv()

    def __pow__(self, e):
        return FQ(pow(self.n, e, _Q))

    def inv(self):
        if self.n == 0:
            raise ZeroDivisionError("inversion of zero in Fq")
        return FQ(pow(self.n, _Q - 2, _Q))

    def __eq__(self, other):
        if isinstance(other, FQ):
            return self.n == other.n
        if isinstance(other, int):
            return self.n == other % _Q
        return NotImplemented

    def __hash__(self):
        return hash(("FQ", self.n))

    def __repr__(self):
        return f"FQ({hex(self.n)})"

    @classmethod
    def one(cls):
        return cls(1)

    @classmethod
    def zero(cls):
        return cls(0)


def _asint(v):
    if isinstance(v, FQ):
        return v.n
    if isinstance(v, int):
        return v
    raise TypeError(f"cannot coerce {type(v)!r} into Fq")


class FQP:
    """Element of an extension field Fq[w] / modulus(w)."""

    degree = 0
    modulus_coeffs = ()

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        if len(coeffs) != self.degree:
            raise ValueError(f"expected {self.degree} coefficients")
        self.coeffs = tuple(c % _Q for c in coeffs)

    def __add__(self, other):
        other = self._coerce(other)
        return type(self)([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return type(self)([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return type(self)([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, FQ)):
            k = _asint(other)
            return type(self)([c * k for c in self.coeffs])
        other = self._coerce(other)
        deg = self.degree
        b = [0] * (deg * 2 - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, c in enumerate(other.coeffs):
                    b[i + j] += a * c
        mods = self.modulus_coeffs
        while len(b) > deg:
            exp = len(b) - deg - 1
            top = b.pop()
            if top:
                for i, m in enumerate(mods):
                    if m:
                        b[exp + i] -= top * m
        return type(self)(b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, FQ)):
            return self * FQ(_asint(other)).inv().n
        return self * self._coerce(other).inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __pow__(self, e):
        if e < 0:
            return self.inv() ** (-e)
        result = self.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inv(self):
        # Extended Euclid over the polynomial ring.
        deg = self.degree
        lm, hm = [1] + [0] * deg, [0] * (deg + 1)
        low = list(self.coeffs) + [0]
        high = list(self.modulus_coeffs) + [1]
        while _polydeg(low):
            r = _polydiv(high, low)
            r += [0] * (deg + 1 - len(r))
            nm = list(hm)
            new = list(high)
            for i in range(deg + 1):
                for j in range(deg + 1 - i):
                    nm[i + j] -= lm[i] * r[j]
                    new[i + j] -= low[i] * r[j]
            nm = [x % _Q for x in nm]
            new = [x % _Q for x in new]
            lm, low, hm, high = nm, new, lm, low
        if all(c == 0 for c in low):
            raise ZeroDivisionError("inversion of zero in extension field")
        c0 = FQ(low[0]).inv().n
        return type(self)([c * c0 for c in lm[:deg]])

    def _coerce(self, other):
        if isinstance(other, type(self)):
            return other
        if isinstance(other, (int, FQ)):
            return type(self)([_asint(other)] + [0] * (self.degree - 1))
        raise TypeError(f"cannot coerce {type(other)!r}")

    def __eq__(self, other):
        if isinstance(other, type(self)):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, FQ)):
            return self == self._coerce(other)
        return NotImplemented

    def __hash__(self):
        return hash((type(self).__name__, self.coeffs))

    def __repr__(self):
        return f"{type(self).__name__}({[hex(c) for c in self.coeffs]})"

    @classmethod
    def one(cls):
        return cls([1] + [0] * (cls.degree - 1))

    @classmethod
    def zero(cls):
        return cls([0] * cls.degree)


def _polydeg(p):
    d = len(p) - 1
    while d and p[d] == 0:
        d -= 1
    return d


def _polydiv(a, b):
    dega, degb = _polydeg(a), _polydeg(b)
    temp = list(a)
    out = [0] * len(a)
    binv = pow(b[degb], _Q - 2, _Q)
    for i in range(dega - degb, -1, -1):
        out[i] = (out[i] + temp[degb + i] * binv) % _Q
        for c in range(degb + 1):
            temp[c + i] = (temp[c + i] - out[i] * b[c]) % _Q
    return [x % _Q for x in out[: _polydeg(out) + 1]]


class FQ2(FQP):
    """Fq2 = Fq[u] / (u^2 + 1)."""

    degree = 2
    modulus_coeffs = (1, 0)


class FQ12(FQP):
    """Fq12 = Fq[w] / (w^12 - 2 w^6 + 2); note (w^6 - 1)^2 = -1."""

    degree = 12
    modulus_coeffs = (2, 0, 0, 0, 0, 0, -2, 0, 0, 0, 0, 0)


# ---------------------------------------------------------------------------
# Curves: E(Fq): y^2 = x^3 + 4  and  E'(Fq2): y^2 = x^3 + 4(u + 1)
# ---------------------------------------------------------------------------

B1 = FQ(4)
B2 = FQ2([4, 4])

# Standard generators (checked below against the curve equation and order).
G1 = (
    FQ(int(
        "17f1d3a73197d7942695638c4fa9ac0fc3688c4f9774b905a14e3a3f171bac58"
        "6c55e83ff97a1aeffb3af00adb22c6bb", 16)),
    FQ(int(
        "08b3f481e3aaa0f1a09e30ed741d8ae4fcf5e095d5d00af600db18cb2c04b3ed"
        "d03cc744a2888ae40caa232946c5e7e1", 16)),
)
G2 = (
    FQ2([
        int("024aa2b2f08f0a91260805272dc51051c6e47ad4fa403b02b4510b647ae3d177"
            "0bac0326a805bbefd48056c8c121bdb8", 16),
        int("13e02b6052719f607dacd3a088274f65596bd0d09920b61ab5da61bbdc7f5049"
            "334cf11213945d57e5ac7d055d042b7e", 16),
    ]),
    FQ2([
        int("0ce5d527727d6e118cc9cdc6da2e351aadfd9baa8cbdd3a76d429a695160d12c"
            "923ac9cc3baca289e193548608b82801", 16),
        int("0606c4a02ea734cc32acd2b02bc28b99cb3e287e85a763af267492ab572e99ab"
            "3f370d275cec1da1aaa9075ff05f79be", 16),
    ]),
)


def is_inf(pt):
    return pt is None


def is_on_curve(pt, b):
    if pt is None:
        return True
    x, y = pt
    return y * y - x * x * x == b


def add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    x1, y1 = p1
    x2, y2 = p2
    if x1 == x2 and y1 == y2:
        return double(p1)
    if x1 == x2:
        return None
    m = (y2 - y1) / (x2 - x1)
    x3 = m * m - x1 - x2
    return (x3, m * (x1 - x3) - y1)


def double(pt):
    if pt is None:
        return None
    x, y = pt
    if y == 0 * y:
        return None
    m = (x * x * 3) / (y * 2)
    x3 = m * m - x - x
    return (x3, m * (x - x3) - y)


def neg(pt):
    if pt is None:
        return None
    x, y = pt
    return (x, -y)


def multiply(pt, n):
    if n < 0:
        return multiply(neg(pt), -n)
    result = None
    addend = pt
    while n:
        if n & 1:
            result = add(result, addend)
        addend = double(addend)
        n >>= 1
    return result


def eq(p1, p2):
    return p1 == p2


def subgroup_check_g1(pt):
    return is_on_curve(pt, B1) and multiply(pt, CURVE_ORDER) is None


def subgroup_check_g2(pt):
    return is_on_curve(pt, B2) and multiply(pt, CURVE_ORDER) is None


assert is_on_curve(G1, B1) and subgroup_check_g1(G1)
assert is_on_curve(G2, B2) and subgroup_check_g2(G2)


# ---------------------------------------------------------------------------
# Pairing (ate pairing, final exponentiation by the full exponent)
# ---------------------------------------------------------------------------

_W = FQ12([0, 1] + [0] * 10)
_W2 = _W * _W
_W3 = _W2 * _W
ATE_LOOP_COUNT = -PARAM_X
# Loop from the bit below the MSB; initializing R = Q consumes the MSB.
_LOG_ATE = ATE_LOOP_COUNT.bit_length() - 2
_FINAL_EXP = (FIELD_MODULUS**12 - 1) // CURVE_ORDER


def twist(pt):
    """Map a point of E'(Fq2) into E(Fq12)."""
    if pt is None:
        return None
    x, y = pt
    # Embed a + b*u as (a - b) + b * w^6, since u = w^6 - 1.
    xc = [x.coeffs[0] - x.coeffs[1], x.coeffs[1]]
    yc = [y.coeffs[0] - y.coeffs[1], y.coeffs[1]]
    nx = FQ12([xc[0]] + [0] * 5 + [xc[1]] + [0] * 5)
    ny = FQ12([yc[0]] + [0] * 5 + [yc[1]] + [0] * 5)
    # M-twist with w^6 = 1 + u: untwist by dividing out w^2 and w^3.
    return (nx / _W2, ny / _W3)


def cast_g1_to_fq12(pt):
    if pt is None:
        return None
    x, y = pt
    return (FQ12([x.n] + [0] * 11), FQ12([y.n] + [0] * 11))


def _linefunc(p1, p2, t):
    x1, y1 = p1
    x2, y2 = p2
    xt, yt = t
    if x1 != x2:
        m = (y2 - y1) / (x2 - x1)
        return m * (xt - x1) - (yt - y1)
    if y1 == y2:
        m = (x1 * x1 * 3) / (y1 * 2)
        return m * (xt - x1) - (yt - y1)
    return xt - x1


def miller_loop(q_tw, p_cast):
    if q_tw is None or p_cast is None:
        return FQ12.one()
    r = q_tw
    f = FQ12.one()
    for i in range(_LOG_ATE, -1, -1):
        f = f * f * _linefunc(r, r, p_cast)
        r = double(r)
        if ATE_LOOP_COUNT & (2**i):
            f = f * _linefunc(r, q_tw, p_cast)
            r = add(r, q_tw)
    return f**_FINAL_EXP


def pairing(q, p):
    """e(p, q) with p in G1 (over Fq) and q in G2 (over Fq2); value in GT."""
    if p is not None and not is_on_curve(p, B1):
        raise ValueError("G1 point not on curve")
    if q is not None and not is_on_curve(q, B2):
        raise ValueError("G2 point not on curve")
    return miller_loop(twist(q), cast_g1_to_fq12(p))


GT_ONE = FQ12.one()


# ---------------------------------------------------------------------------
# Square roots and quadratic residues
# ---------------------------------------------------------------------------


def sqrt_fq(a: FQ):
    # q = 3 mod 4
    cand = a ** ((_Q + 1) // 4)
    if cand * cand != a:
        raise ValueError("not a square in Fq")
    return cand


def is_square_fq(a: FQ):
    return a.n == 0 or pow(a.n, (_Q - 1) // 2, _Q) == 1


def is_square_fq2(a: FQ2):
    if a == FQ2.zero():
        return True
    return a ** ((_Q * _Q - 1) // 2) == FQ2.one()


def sqrt_fq2(a: FQ2):
    """Square root in Fq2 = Fq[u]/(u^2+1) via the norm trick (q = 3 mod 4)."""
    a0, a1 = FQ(a.coeffs[0]), FQ(a.coeffs[1])
    if a1 == FQ.zero():
        if is_square_fq(a0):
            return FQ2([sqrt_fq(a0).n, 0])
        return FQ2([0, sqrt_fq(-a0).n])
    alpha = sqrt_fq(a0 * a0 + a1 * a1)
    delta = (a0 + alpha) / 2
    if not is_square_fq(delta):
        delta = (a0 - alpha) / 2
    x0 = sqrt_fq(delta)
    x1 = a1 / (x0 * 2)
    cand = FQ2([x0.n, x1.n])
    if cand * cand != a:
        raise ValueError("not a square in Fq2")
    return cand


def sgn0_fq2(a: FQ2):
    a0, a1 = a.coeffs
    sign0 = a0 % 2
    if a0 != 0:
        return sign0
    return a1 % 2


# ---------------------------------------------------------------------------
# Hash to G2: expand_message_xmd + SvdW map + cofactor clearing
# ---------------------------------------------------------------------------


def expand_message_xmd(msg: bytes, dst: bytes, length: int) -> bytes:
    if len(dst) > 255:
        dst = b"H2C-OVERSIZE-DST-" + hashlib.sha256(dst).digest()
    h = hashlib.sha256
    b_in_bytes = 32
    r_in_bytes = 64
    ell = -(-length // b_in_bytes)
    if ell > 255 or length > 65535:
        raise ValueError("requested expansion too long")
    dst_prime = dst + len(dst).to_bytes(1, "big")
    z_pad = b"\x00" * r_in_bytes
    l_i_b_str = length.to_bytes(2, "big")
    b0 = h(z_pad + msg + l_i_b_str + b"\x00" + dst_prime).digest()
    bvals = [h(b0 + b"\x01" + dst_prime).digest()]
    for i in range(2, ell + 1):
        prev = bvals[-1]
        bvals.append(
            h(bytes(x ^ y for x, y in zip(b0, prev)) + i.to_bytes(1, "big") + dst_prime).digest()
        )
    return b"".join(bvals)[:length]


_H2F_L = 64  # ceil((ceil(log2(q)) + 128) / 8)


def hash_to_field_fq2(msg: bytes, dst: bytes, count: int):
    uniform = expand_message_xmd(msg, dst, count * 2 * _H2F_L)
    out = []
    for i in range(count):
        coeffs = []
        for j in range(2):
            off = _H2F_L * (j + 2 * i)
            coeffs.append(int.from_bytes(uniform[off : off + _H2F_L], "big") % _Q)
        out.append(FQ2(coeffs))
    return out


def _g2_rhs(x: FQ2):
    return x * x * x + B2


def _find_z_svdw():
    # Smallest-in-enumeration-order Z meeting the RFC criteria for SvdW.
    for b in range(8):
        for a in range(8):
            for sa in (1, -1):
                for sb in (1, -1):
                    if a == 0 and b == 0:
                        continue
                    z = FQ2([sa * a, sb * b])
                    gz = _g2_rhs(z)
                    if gz == FQ2.zero():
                        continue
                    h_val = -(z * z * 3) / (gz * 4)
                    if h_val == FQ2.zero() or not is_square_fq2(h_val):
                        continue
                    if is_square_fq2(gz) or is_square_fq2(_g2_rhs(-z / 2)):
                        return z
    raise RuntimeError("no SvdW Z found")


_SVDW_Z = _find_z_svdw()
_SVDW_C1 = _g2_rhs(_SVDW_Z)
_SVDW_C2 = -_SVDW_Z / 2
_c3 = sqrt_fq2(-_SVDW_C1 * (_SVDW_Z * _SVDW_Z * 3))
if sgn0_fq2(_c3) == 1:
    _c3 = -_c3
_SVDW_C3 = _c3
_SVDW_C4 = (-_SVDW_C1 * 4) / (_SVDW_Z * _SVDW_Z * 3)


def _inv0(a: FQ2):
    if a == FQ2.zero():
        return FQ2.zero()
    return a.inv()


def map_to_curve_g2(u: FQ2):
    """Shallue-van de Woestijne map onto E'(Fq2) (full group, not G2)."""
    tv1 = u * u * _SVDW_C1
    tv2 = FQ2.one() + tv1
    tv1 = FQ2.one() - tv1
    tv3 = _inv0(tv1 * tv2)
    tv4 = u * tv1 * tv3 * _SVDW_C3
    x1 = _SVDW_C2 - tv4
    gx1 = _g2_rhs(x1)
    e1 = is_square_fq2(gx1)
    x2 = _SVDW_C2 + tv4
    gx2 = _g2_rhs(x2)
    e2 = is_square_fq2(gx2) and not e1
    x3 = (tv2 * tv2 * tv3) ** 2 * _SVDW_C4 + _SVDW_Z
    if e1:
        x = x1
    elif e2:
        x = x2
    else:
        x = x3
    y = sqrt_fq2(_g2_rhs(x))
    if sgn0_fq2(u) != sgn0_fq2(y):
        y = -y
    return (x, y)


def clear_cofactor_g2(pt):
    return multiply(pt, H2)


def hash_to_g2(msg: bytes, dst: bytes):
    u0, u1 = hash_to_field_fq2(msg, dst, 2)
    q0 = map_to_curve_g2(u0)
    q1 = map_to_curve_g2(u1)
    return clear_cofactor_g2(add(q0, q1))


# ---------------------------------------------------------------------------
# Compressed serialization (ZCash convention)
# ---------------------------------------------------------------------------

_C_FLAG = 0x80
_B_FLAG = 0x40
_A_FLAG = 0x20
_HALF_Q = (_Q - 1) // 2


def compress_g1(pt) -> bytes:
    if pt is None:
        return bytes([_C_FLAG | _B_FLAG]) + b"\x00" * 47
    x, y = pt
    flags = _C_FLAG | (_A_FLAG if y.n > _HALF_Q else 0)
    raw = x.n.to_bytes(48, "big")
    return bytes([raw[0] | flags]) + raw[1:]


def decompress_g1(data: bytes):
    if len(data) != 48:
        raise ValueError("G1 compressed encoding must be 48 bytes")
    flags = data[0]
    if not flags & _C_FLAG:
        raise ValueError("compression flag not set")
    if flags & _B_FLAG:
        if flags & _A_FLAG or any(data[1:]) or data[0] & 0x1F:
            raise ValueError("malformed infinity encoding")
        return None
    x_int = int.from_bytes(bytes([data[0] & 0x1F]) + data[1:], "big")
    if x_int >= _Q:
        raise ValueError("x coordinate out of range")
    x = FQ(x_int)
    try:
        y = sqrt_fq(_g1_rhs(x))
    except ValueError:
        raise ValueError("point not on curve") from None
    if (y.n > _HALF_Q) != bool(flags & _A_FLAG):
        y = -y
    return (x, y)


def _g1_rhs(x: FQ):
    return x * x * x + B1


def _g2_y_is_largest(y: FQ2) -> bool:
    y0, y1 = y.coeffs
    if y1 != 0:
        return y1 > _HALF_Q
    return y0 > _HALF_Q


def compress_g2(pt) -> bytes:
    if pt is None:
        return bytes([_C_FLAG | _B_FLAG]) + b"\x00" * 95
    x, y = pt
    flags = _C_FLAG | (_A_FLAG if _g2_y_is_largest(y) else 0)
    raw = x.coeffs[1].to_bytes(48, "big") + x.coeffs[0].to_bytes(48, "big")
    return bytes([raw[0] | flags]) + raw[1:]


def decompress_g2(data: bytes):
    if len(data) != 96:
        raise ValueError("G2 compressed encoding must be 96 bytes")
    flags = data[0]
    if not flags & _C_FLAG:
        raise ValueError("compression flag not set")
    if flags & _B_FLAG:
        if flags & _A_FLAG or any(data[1:]) or data[0] & 0x1F:
            raise ValueError("malformed infinity encoding")
        return None
    x1 = int.from_bytes(bytes([data[0] & 0x1F]) + data[1:48], "big")
    x0 = int.from_bytes(data[48:], "big")
    if x0 >= _Q or x1 >= _Q:
        raise ValueError("x coordinate out of range")
    x = FQ2([x0, x1])
    try:
        y = sqrt_fq2(_g2_rhs(x))
    except ValueError:
        raise ValueError("point not on curve") from None
    if _g2_y_is_largest(y) != bool(flags & _A_FLAG):
        y = -y
    return (x, y)
