"""Residue-number-system route identifiers.

A route ID is a single integer whose remainder modulo each core switch
identifier is the egress port that switch must use.  The ID is synthesised
with the Chinese remainder theorem and carried in the 48-bit source-address
field of the frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .errors import ModuliNotCoprime, NotCoprime, ResidueError, RouteIdOverflow

ROUTE_BITS = 48
ROUTE_LIMIT = 1 << ROUTE_BITS

RouteId = int


@dataclass(frozen=True, order=True)
class ResidueConstraint:
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 2:
            raise ResidueError(f"modulus must be >= 2, got {self.modulus}")
        if not 0 <= self.residue < self.modulus:
            raise ResidueError(
                f"residue {self.residue} out of range for modulus {self.modulus}")


def check_route_id(route: int) -> int:
    if not 0 <= route < ROUTE_LIMIT:
        raise RouteIdOverflow(f"route id {route} does not fit in {ROUTE_BITS} bits")
    return route


def mod_inverse(a: int, m: int) -> int:
    """Return x in [0, m) with a*x = 1 (mod m).

    Raises:
        NotCoprime: if gcd(a, m) != 1.
    """
    if m < 2:
        raise ResidueError(f"modulus must be >= 2, got {m}")
    try:
        return pow(a, -1, m)
    except ValueError:
        raise NotCoprime(f"{a} has no inverse modulo {m} (gcd={math.gcd(a, m)})") from None


def _as_constraints(constraints: Iterable) -> list[ResidueConstraint]:
    out = []
    for c in constraints:
        out.append(c if isinstance(c, ResidueConstraint) else ResidueConstraint(*c))
    return out


def crt_solve(constraints: Sequence[ResidueConstraint | tuple[int, int]]) -> RouteId:
    """Smallest non-negative R with R mod m_i == p_i for every constraint.

    Constraints may be ``ResidueConstraint`` instances or ``(modulus, residue)``
    pairs.  The moduli must be pairwise coprime and their product may not
    exceed 2**48, otherwise the route would not fit the address field.
    """
    cs = _as_constraints(constraints)
    if not cs:
        raise ResidueError("at least one constraint is required")
    for i, a in enumerate(cs):
        for b in cs[i + 1:]:
            g = math.gcd(a.modulus, b.modulus)
            if g != 1:
                raise ModuliNotCoprime(
                    f"moduli {a.modulus} and {b.modulus} share factor {g}")
    product = math.prod(c.modulus for c in cs)
    if product > ROUTE_LIMIT:
        raise RouteIdOverflow(f"modulus product {product} exceeds 2**{ROUTE_BITS}")

    # Incremental (Garner-style) combination keeps R < M at every step.
    r, m = 0, 1
    for c in cs:
        t = ((c.residue - r) * mod_inverse(m % c.modulus, c.modulus)) % c.modulus
        r += m * t
        m *= c.modulus
    return r


def modulo_forward(route: RouteId, modulus: int) -> int:
    """Egress port a core switch with identifier ``modulus`` picks for ``route``."""
    return route % modulus


def encode_route_field(route: RouteId) -> bytes:
    """Big-endian 6-octet encoding of a route ID."""
    return check_route_id(route).to_bytes(6, "big")


def decode_route_field(field: Union[bytes, bytearray, str]) -> RouteId:
    """Inverse of :func:`encode_route_field`; accepts raw octets or ``aa:bb:..`` text."""
    if isinstance(field, str):
        field = parse_mac(field)
    if len(field) != 6:
        raise ResidueError(f"address field must be 6 octets, got {len(field)}")
    return int.from_bytes(field, "big")


def format_mac(field: bytes) -> str:
    return ":".join(f"{b:02x}" for b in field)


def parse_mac(text: str) -> bytes:
    parts = text.split(":")
    if len(parts) != 6:
        raise ResidueError(f"malformed address {text!r}")
    return bytes(int(p, 16) for p in parts)
