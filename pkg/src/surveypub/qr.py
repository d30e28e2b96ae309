"""QR matrix codes for print-to-web hyperlinks (byte mode, versions 1-10).

Encoding follows the standard pipeline: byte-mode segment, smallest
version that fits, Reed-Solomon error correction over GF(256) with the
0x11D primitive polynomial, block interleaving, and mask selection by the
four penalty rules. The decoder reverses it — format read, unmask, data
extraction, per-block RS error correction with unknown error positions
(Berlekamp-Massey, Chien search, Forney) — and exists so every generated
code can be verified in-process; it expects a clean axis-aligned module
grid, not a camera image.
"""

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import QrCapacityError, QrDecodeError

MIN_VERSION = 1
MAX_VERSION = 10

ECC_LEVELS = ("L", "M", "Q", "H")

# Format-info protection bits per level (the 2-bit field in the format string).
_EC_BITS = {"L": 0b01, "M": 0b00, "Q": 0b11, "H": 0b10}
_EC_BITS_INV = {v: k for k, v in _EC_BITS.items()}

# Per (version, level): (ecc codewords per block, [(block count, data codewords), ...]).
_BLOCKS = {
    1: {"L": (7, [(1, 19)]), "M": (10, [(1, 16)]), "Q": (13, [(1, 13)]), "H": (17, [(1, 9)])},
    2: {"L": (10, [(1, 34)]), "M": (16, [(1, 28)]), "Q": (22, [(1, 22)]), "H": (28, [(1, 16)])},
    3: {"L": (15, [(1, 55)]), "M": (26, [(1, 44)]), "Q": (18, [(2, 17)]), "H": (22, [(2, 13)])},
    4: {"L": (20, [(1, 80)]), "M": (18, [(2, 32)]), "Q": (26, [(2, 24)]), "H": (16, [(4, 9)])},
    5: {"L": (26, [(1, 108)]), "M": (24, [(2, 43)]), "Q": (18, [(2, 15), (2, 16)]),
        "H": (22, [(2, 11), (2, 12)])},
    6: {"L": (18, [(2, 68)]), "M": (16, [(4, 27)]), "Q": (24, [(4, 19)]), "H": (28, [(4, 15)])},
    7: {"L": (20, [(2, 78)]), "M": (18, [(4, 31)]), "Q": (18, [(2, 14), (4, 15)]),
        "H": (26, [(4, 13), (1, 14)])},
    8: {"L": (24, [(2, 97)]), "M": (22, [(2, 38), (2, 39)]), "Q": (22, [(4, 18), (2, 19)]),
        "H": (26, [(4, 14), (2, 15)])},
    9: {"L": (30, [(2, 116)]), "M": (22, [(3, 36), (2, 37)]), "Q": (20, [(4, 16), (4, 17)]),
        "H": (24, [(4, 12), (4, 13)])},
    10: {"L": (18, [(2, 68), (2, 69)]), "M": (26, [(4, 43), (1, 44)]),
         "Q": (24, [(6, 19), (2, 20)]), "H": (28, [(6, 15), (2, 16)])},
}

_TOTAL_CODEWORDS = {1: 26, 2: 44, 3: 70, 4: 100, 5: 134, 6: 172, 7: 196,
                    8: 242, 9: 292, 10: 346}

_REMAINDER_BITS = {1: 0, 2: 7, 3: 7, 4: 7, 5: 7, 6: 7, 7: 0, 8: 0, 9: 0, 10: 0}

_ALIGNMENT = {1: [], 2: [6, 18], 3: [6, 22], 4: [6, 26], 5: [6, 30], 6: [6, 34],
              7: [6, 22, 38], 8: [6, 24, 42], 9: [6, 26, 46], 10: [6, 28, 50]}

_FORMAT_XOR_MASK = 0b101010000010010


def side_length(version: int) -> int:
    return 17 + 4 * version


# --- GF(256) arithmetic (primitive polynomial 0x11D) -------------------------

_GF_EXP = [0] * 512
_GF_LOG = [0] * 256
_x = 1
for _i in range(255):
    _GF_EXP[_i] = _x
    _GF_LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= 0x11D
for _i in range(255, 512):
    _GF_EXP[_i] = _GF_EXP[_i - 255]


def _gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _GF_EXP[_GF_LOG[a] + _GF_LOG[b]]


def _gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("inverse of 0 in GF(256)")
    return _GF_EXP[255 - _GF_LOG[a]]


def _gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0
    return _GF_EXP[(_GF_LOG[a] * n) % 255]


def _poly_mul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] ^= _gf_mul(a, b)
    return out


def _poly_eval_desc(poly, x):
    """Evaluate a polynomial given with the highest-degree coefficient first."""
    y = poly[0]
    for c in poly[1:]:
        y = _gf_mul(y, x) ^ c
    return y


def _poly_eval_asc(poly, x):
    """Evaluate a polynomial given with the constant term first."""
    y = 0
    for c in reversed(poly):
        y = _gf_mul(y, x) ^ c
    return y


_GENERATORS = {}


def _rs_generator(degree: int):
    """Generator polynomial with roots alpha^0 .. alpha^(degree-1)."""
    if degree not in _GENERATORS:
        g = [1]
        for i in range(degree):
            g = _poly_mul(g, [1, _GF_EXP[i]])
        _GENERATORS[degree] = g
    return _GENERATORS[degree]


def rs_encode_block(data, ecc_len: int):
    """Reed-Solomon parity bytes for one block (systematic encoding)."""
    gen = _rs_generator(ecc_len)
    rem = list(data) + [0] * ecc_len
    for i in range(len(data)):
        factor = rem[i]
        if factor == 0:
            continue
        for j in range(1, len(gen)):
            rem[i + j] ^= _gf_mul(gen[j], factor)
    return rem[len(data):]


def rs_decode_block(codeword, ecc_len: int):
    """Correct up to floor(ecc_len / 2) byte errors; return the data part.

    Raises QrDecodeError when the error pattern exceeds that capacity.
    """
    n = len(codeword)
    received = list(codeword)
    syndromes = [_poly_eval_desc(received, _GF_EXP[i]) for i in range(ecc_len)]
    if max(syndromes) == 0:
        return received[: n - ecc_len]

    # Berlekamp-Massey, ascending coefficients, Lambda(0) = 1.
    lam = [1]
    prev = [1]
    L = 0
    m = 1
    b = 1
    for step in range(ecc_len):
        delta = syndromes[step]
        for i in range(1, L + 1):
            if i < len(lam):
                delta ^= _gf_mul(lam[i], syndromes[step - i])
        if delta == 0:
            m += 1
            continue
        shifted = [0] * m + [_gf_mul(c, _gf_mul(delta, _gf_inv(b))) for c in prev]
        if 2 * L <= step:
            prev = list(lam)
            L = step + 1 - L
            b = delta
            m = 1
        else:
            m += 1
        lam = [a ^ bb for a, bb in
               zip(lam + [0] * (len(shifted) - len(lam)),
                   shifted + [0] * (len(lam) - len(shifted)))]
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    errs = len(lam) - 1
    if errs == 0 or 2 * errs > ecc_len:
        raise QrDecodeError("error pattern exceeds Reed-Solomon capacity")

    # Chien search over the degrees present in the codeword.
    error_degrees = []
    for degree in range(n):
        if _poly_eval_asc(lam, _gf_pow(_GF_EXP[1], 255 - degree % 255)) == 0:
            error_degrees.append(degree)
    if len(error_degrees) != errs:
        raise QrDecodeError("error locator degree mismatch (too many errors)")

    # Forney: Omega = S * Lambda mod x^ecc_len, magnitudes from Omega / Lambda'.
    omega = _poly_mul(syndromes, lam)[:ecc_len]
    lam_deriv = [lam[i] for i in range(1, len(lam), 2)]
    # Lambda'(x) in GF(2^m) keeps only odd-degree terms: coefficient of x^(i-1)
    # is lam[i] for odd i, which is lam_deriv interleaved with zeros.
    lam_deriv_full = [0] * (len(lam) - 1)
    for i in range(1, len(lam), 2):
        lam_deriv_full[i - 1] = lam[i]

    for degree in error_degrees:
        x_inv = _gf_pow(_GF_EXP[1], 255 - degree % 255)
        num = _poly_eval_asc(omega, x_inv)
        den = _poly_eval_asc(lam_deriv_full, x_inv)
        if den == 0:
            raise QrDecodeError("Forney denominator vanished")
        magnitude = _gf_mul(_gf_pow(_GF_EXP[1], degree), _gf_mul(num, _gf_inv(den)))
        received[n - 1 - degree] ^= magnitude

    check = [_poly_eval_desc(received, _GF_EXP[i]) for i in range(ecc_len)]
    if max(check) != 0:
        raise QrDecodeError("correction failed to cancel syndromes")
    return received[: n - ecc_len]


# --- capacity and block layout -----------------------------------------------

def _char_count_bits(version: int) -> int:
    return 8 if version <= 9 else 16


def data_codewords(version: int, ecc_level: str) -> int:
    _, blocks = _BLOCKS[version][ecc_level]
    return sum(count * dlen for count, dlen in blocks)


def byte_mode_capacity(version: int, ecc_level: str) -> int:
    """Maximum payload bytes for a byte-mode segment."""
    bits = data_codewords(version, ecc_level) * 8 - 4 - _char_count_bits(version)
    return bits // 8


def block_structure(version: int, ecc_level: str):
    """Expanded [(data_len, ecc_len), ...] in block order."""
    ecc_len, blocks = _BLOCKS[version][ecc_level]
    out = []
    for count, dlen in blocks:
        out.extend([(dlen, ecc_len)] * count)
    return out


def _interleave(blocks_data, blocks_ecc):
    out = []
    for i in range(max(len(b) for b in blocks_data)):
        for block in blocks_data:
            if i < len(block):
                out.append(block[i])
    for i in range(max(len(b) for b in blocks_ecc)):
        for block in blocks_ecc:
            if i < len(block):
                out.append(block[i])
    return out


def _deinterleave(codewords, structure):
    blocks_data = [[None] * d for d, _ in structure]
    blocks_ecc = [[None] * e for _, e in structure]
    it = iter(codewords)
    for i in range(max(d for d, _ in structure)):
        for block in blocks_data:
            if i < len(block):
                block[i] = next(it)
    for i in range(max(e for _, e in structure)):
        for block in blocks_ecc:
            if i < len(block):
                block[i] = next(it)
    return blocks_data, blocks_ecc


# --- matrix scaffolding --------------------------------------------------------

def _base_matrix(version: int):
    """(modules, reserved) with all function patterns drawn and the format /
    version areas reserved. Data modules are left False and unreserved."""
    size = side_length(version)
    modules = [[False] * size for _ in range(size)]
    reserved = [[False] * size for _ in range(size)]

    def put(r, c, value):
        modules[r][c] = value
        reserved[r][c] = True

    def finder(r0, c0):
        for dr in range(7):
            for dc in range(7):
                dark = dr in (0, 6) or dc in (0, 6) or (2 <= dr <= 4 and 2 <= dc <= 4)
                put(r0 + dr, c0 + dc, dark)

    finder(0, 0)
    finder(0, size - 7)
    finder(size - 7, 0)
    for i in range(8):
        put(7, i, False)
        put(i, 7, False)
        put(7, size - 8 + i, False)
        put(i, size - 8, False)
        put(size - 8, i, False)
        put(size - 1 - i, 7, False)

    for i in range(8, size - 8):
        put(6, i, i % 2 == 0)
        put(i, 6, i % 2 == 0)

    centers = _ALIGNMENT[version]
    if centers:
        lo, hi = centers[0], centers[-1]
        for r in centers:
            for c in centers:
                if (r == lo and c == lo) or (r == lo and c == hi) or (r == hi and c == lo):
                    continue
                for dr in range(-2, 3):
                    for dc in range(-2, 3):
                        dark = max(abs(dr), abs(dc)) != 1
                        put(r + dr, c + dc, dark)

    put(size - 8, 8, True)                      # dark module
    for r, c in _format_positions(size, 0) + _format_positions(size, 1):
        reserved[r][c] = True
    if version >= 7:
        for r, c, _bit in _version_positions(size):
            reserved[r][c] = True
    return modules, reserved


def _format_positions(size: int, copy: int):
    """Module coordinates of format bits 0..14 (LSB first) for one copy."""
    if copy == 0:
        coords = [(i, 8) for i in range(6)] + [(7, 8), (8, 8), (8, 7)]
        coords += [(8, 5 - i) for i in range(6)]
    else:
        coords = [(8, size - 1 - i) for i in range(8)]
        coords += [(size - 7 + i, 8) for i in range(7)]
    return coords


def _version_positions(size: int):
    """(row, col, bit index) for both 18-bit version blocks."""
    out = []
    for k in range(18):
        r = size - 11 + k % 3
        c = k // 3
        out.append((r, c, k))
        out.append((c, r, k))
    return out


def _bch_format(data5: int) -> int:
    v = data5 << 10
    g = 0b10100110111
    for i in range(14, 9, -1):
        if v >> i & 1:
            v ^= g << (i - 10)
    return ((data5 << 10) | v) ^ _FORMAT_XOR_MASK


def _golay_version(version: int) -> int:
    v = version << 12
    g = 0x1F25
    for i in range(17, 11, -1):
        if v >> i & 1:
            v ^= g << (i - 12)
    return (version << 12) | v


def _placement_order(version: int, reserved):
    """Data-module coordinates in standard zigzag placement order."""
    size = side_length(version)
    order = []
    col = size - 1
    upward = True
    while col > 0:
        if col == 6:
            col -= 1
        rows = range(size - 1, -1, -1) if upward else range(size)
        for r in rows:
            for c in (col, col - 1):
                if not reserved[r][c]:
                    order.append((r, c))
        upward = not upward
        col -= 2
    return order


_MASK_FUNCS = [
    lambda r, c: (r + c) % 2 == 0,
    lambda r, c: r % 2 == 0,
    lambda r, c: c % 3 == 0,
    lambda r, c: (r + c) % 3 == 0,
    lambda r, c: (r // 2 + c // 3) % 2 == 0,
    lambda r, c: (r * c) % 2 + (r * c) % 3 == 0,
    lambda r, c: ((r * c) % 2 + (r * c) % 3) % 2 == 0,
    lambda r, c: ((r + c) % 2 + (r * c) % 3) % 2 == 0,
]


def _penalty(modules) -> int:
    size = len(modules)
    score = 0

    def runs(line):
        s = 0
        run = 1
        for i in range(1, size):
            if line[i] == line[i - 1]:
                run += 1
            else:
                if run >= 5:
                    s += 3 + run - 5
                run = 1
        if run >= 5:
            s += 3 + run - 5
        return s

    cols = [[modules[r][c] for r in range(size)] for c in range(size)]
    for r in range(size):
        score += runs(modules[r])
    for c in range(size):
        score += runs(cols[c])

    for r in range(size - 1):
        for c in range(size - 1):
            if modules[r][c] == modules[r][c + 1] == modules[r + 1][c] == modules[r + 1][c + 1]:
                score += 3

    pattern = [True, False, True, True, True, False, True]

    def finder_like(line):
        s = 0
        for i in range(size - 6):
            if line[i:i + 7] == pattern:
                before = i >= 4 and not any(line[i - 4:i])
                after = i + 11 <= size and not any(line[i + 7:i + 11])
                if before or after:
                    s += 40
        return s

    for r in range(size):
        score += finder_like(modules[r])
    for c in range(size):
        score += finder_like(cols[c])

    dark = sum(sum(row) for row in modules)
    ratio = dark * 100.0 / (size * size)
    score += 10 * int(abs(ratio - 50.0) / 5.0)
    return score


@dataclass(frozen=True)
class QrMatrix:
    """A finished symbol. `modules` is a tuple of row tuples, True = dark.
    The quiet zone is not stored; rendering adds it."""

    version: int
    ecc_level: str
    modules: tuple
    mask_id: int

    def __post_init__(self):
        size = side_length(self.version)
        if len(self.modules) != size or any(len(row) != size for row in self.modules):
            raise ValueError(f"matrix side must be {size} for version {self.version}")
        if self.ecc_level not in ECC_LEVELS:
            raise ValueError(f"unknown ecc level {self.ecc_level!r}")

    @property
    def side(self) -> int:
        return side_length(self.version)


def _build_bitstream(payload: bytes, version: int, ecc_level: str):
    capacity_bits = data_codewords(version, ecc_level) * 8
    bits = []

    def write(value, width):
        for i in range(width - 1, -1, -1):
            bits.append(value >> i & 1)

    write(0b0100, 4)
    write(len(payload), _char_count_bits(version))
    for byte in payload:
        write(byte, 8)
    bits.extend([0] * min(4, capacity_bits - len(bits)))
    while len(bits) % 8:
        bits.append(0)
    codewords = [int("".join(map(str, bits[i:i + 8])), 2) for i in range(0, len(bits), 8)]
    pad = (0xEC, 0x11)
    i = 0
    while len(codewords) < data_codewords(version, ecc_level):
        codewords.append(pad[i % 2])
        i += 1
    return codewords


def encode_qr(url: str, ecc_level: str = "M") -> QrMatrix:
    """Encode an ASCII URL as the smallest fitting version, byte mode.

    Deterministic: the mask is the lowest-id minimizer of the standard
    penalty score.
    """
    if ecc_level not in ECC_LEVELS:
        raise ValueError(f"unknown ecc level {ecc_level!r}")
    if url == "":
        raise ValueError("nothing to encode: empty input")
    try:
        payload = url.encode("ascii")
    except UnicodeEncodeError:
        raise ValueError("url must be ASCII")

    version = None
    for candidate in range(MIN_VERSION, MAX_VERSION + 1):
        if len(payload) <= byte_mode_capacity(candidate, ecc_level):
            version = candidate
            break
    if version is None:
        raise QrCapacityError(
            f"payload of {len(payload)} bytes exceeds version-{MAX_VERSION} capacity "
            f"of {byte_mode_capacity(MAX_VERSION, ecc_level)} bytes at level {ecc_level}")

    data_cws = _build_bitstream(payload, version, ecc_level)
    structure = block_structure(version, ecc_level)
    blocks_data = []
    blocks_ecc = []
    offset = 0
    for dlen, elen in structure:
        block = data_cws[offset:offset + dlen]
        offset += dlen
        blocks_data.append(block)
        blocks_ecc.append(rs_encode_block(block, elen))
    stream = _interleave(blocks_data, blocks_ecc)

    modules, reserved = _base_matrix(version)
    order = _placement_order(version, reserved)
    bit_at = {}
    for k, (r, c) in enumerate(order):
        byte_index = k // 8
        if byte_index < len(stream):
            bit_at[(r, c)] = bool(stream[byte_index] >> (7 - k % 8) & 1)
        else:
            bit_at[(r, c)] = False   # remainder bits

    size = side_length(version)
    best = None
    for mask_id, mask_fn in enumerate(_MASK_FUNCS):
        trial = [row[:] for row in modules]
        for (r, c), bit in bit_at.items():
            trial[r][c] = bit ^ mask_fn(r, c)
        format_code = _bch_format(_EC_BITS[ecc_level] << 3 | mask_id)
        for copy in (0, 1):
            for bit_index, (r, c) in enumerate(_format_positions(size, copy)):
                trial[r][c] = bool(format_code >> bit_index & 1)
        if version >= 7:
            version_code = _golay_version(version)
            for r, c, bit_index in _version_positions(size):
                trial[r][c] = bool(version_code >> bit_index & 1)
        score = _penalty(trial)
        if best is None or score < best[0]:
            best = (score, mask_id, trial)

    _, mask_id, chosen = best
    return QrMatrix(version=version, ecc_level=ecc_level,
                    modules=tuple(tuple(row) for row in chosen), mask_id=mask_id)


def _read_format(modules, size: int):
    """Try both format copies; accept the closest valid code within 3 bits."""
    best = None
    for copy in (0, 1):
        raw = 0
        for bit_index, (r, c) in enumerate(_format_positions(size, copy)):
            if modules[r][c]:
                raw |= 1 << bit_index
        for data5 in range(32):
            code = _bch_format(data5)
            distance = bin(code ^ raw).count("1")
            if best is None or distance < best[0]:
                best = (distance, data5)
    distance, data5 = best
    if distance > 3:
        raise QrDecodeError("format information unreadable")
    ec_bits = data5 >> 3 & 0b11
    mask_id = data5 & 0b111
    return _EC_BITS_INV[ec_bits], mask_id


def decode_qr(matrix: QrMatrix) -> str:
    """Recover the payload string from a symbol, correcting codeword errors
    up to the Reed-Solomon capacity of its level."""
    modules = [list(row) for row in matrix.modules]
    size = len(modules)
    if (size - 17) % 4 or not MIN_VERSION <= (size - 17) // 4 <= MAX_VERSION:
        raise QrDecodeError(f"side length {size} is not a supported version")
    version = (size - 17) // 4

    for r0, c0 in ((0, 0), (0, size - 7), (size - 7, 0)):
        for dr in range(7):
            for dc in range(7):
                expected = dr in (0, 6) or dc in (0, 6) or (2 <= dr <= 4 and 2 <= dc <= 4)
                if modules[r0 + dr][c0 + dc] != expected:
                    raise QrDecodeError("finder pattern damaged")

    ecc_level, mask_id = _read_format(modules, size)
    mask_fn = _MASK_FUNCS[mask_id]

    _, reserved = _base_matrix(version)
    order = _placement_order(version, reserved)
    bits = []
    for r, c in order:
        bits.append(modules[r][c] ^ mask_fn(r, c))
    total = _TOTAL_CODEWORDS[version]
    codewords = []
    for i in range(total):
        value = 0
        for bit in bits[i * 8:(i + 1) * 8]:
            value = value << 1 | bit
        codewords.append(value)

    structure = block_structure(version, ecc_level)
    blocks_data, blocks_ecc = _deinterleave(codewords, structure)
    data = []
    for block_data, block_ecc, (dlen, elen) in zip(blocks_data, blocks_ecc, structure):
        data.extend(rs_decode_block(block_data + block_ecc, elen))

    stream = iter_bits(data)
    mode = take_bits(stream, 4)
    if mode != 0b0100:
        raise QrDecodeError(f"unsupported mode indicator {mode:04b}")
    count = take_bits(stream, _char_count_bits(version))
    payload = bytes(take_bits(stream, 8) for _ in range(count))
    try:
        return payload.decode("ascii")
    except UnicodeDecodeError:
        raise QrDecodeError("payload is not ASCII")


def iter_bits(byte_list):
    for byte in byte_list:
        for i in range(7, -1, -1):
            yield byte >> i & 1


def take_bits(stream, width: int) -> int:
    value = 0
    for _ in range(width):
        try:
            value = value << 1 | next(stream)
        except StopIteration:
            raise QrDecodeError("bit stream exhausted mid-field")
    return value


def codeword_module_positions(version: int):
    """Module coordinates of each interleaved codeword, in stream order.
    Lets tests corrupt whole codewords precisely."""
    _, reserved = _base_matrix(version)
    order = _placement_order(version, reserved)
    total = _TOTAL_CODEWORDS[version]
    return [order[i * 8:(i + 1) * 8] for i in range(total)]


def interleaved_block_of(version: int, ecc_level: str):
    """For each interleaved codeword index, the block it belongs to."""
    structure = block_structure(version, ecc_level)
    owners = []
    for i in range(max(d for d, _ in structure)):
        for b, (dlen, _) in enumerate(structure):
            if i < dlen:
                owners.append(b)
    for i in range(max(e for _, e in structure)):
        for b, (_, elen) in enumerate(structure):
            if i < elen:
                owners.append(b)
    return owners


def render_qr_png(matrix: QrMatrix, module_px: int, quiet_modules: int = 4) -> bytes:
    """Black-on-white PNG with a quiet border, module_px pixels per module."""
    if module_px < 1:
        raise ValueError("module_px must be >= 1")
    side = matrix.side
    grid = np.full((side + 2 * quiet_modules, side + 2 * quiet_modules), 255, dtype=np.uint8)
    dark = np.array(matrix.modules, dtype=bool)
    grid[quiet_modules:quiet_modules + side, quiet_modules:quiet_modules + side] = (
        np.where(dark, 0, 255).astype(np.uint8))
    scaled = np.kron(grid, np.ones((module_px, module_px), dtype=np.uint8))
    image = Image.fromarray(scaled, mode="L")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def matrix_from_png(png_bytes: bytes) -> QrMatrix:
    """Re-read a rendered PNG by sampling module centers (test oracle for
    the render path; assumes the 4-module quiet zone)."""
    image = Image.open(io.BytesIO(png_bytes)).convert("L")
    width = image.width
    pixels = np.asarray(image)
    for version in range(MIN_VERSION, MAX_VERSION + 1):
        side = side_length(version)
        if width % (side + 8) == 0:
            module_px = width // (side + 8)
            rows = []
            for r in range(side):
                row = []
                for c in range(side):
                    y = (4 + r) * module_px + module_px // 2
                    x = (4 + c) * module_px + module_px // 2
                    row.append(pixels[y, x] < 128)
                rows.append(tuple(row))
            modules = tuple(rows)
            ecc_level, mask_id = _read_format([list(r) for r in modules], side)
            return QrMatrix(version=version, ecc_level=ecc_level,
                            modules=modules, mask_id=mask_id)
    raise QrDecodeError("image size does not match any supported version")
