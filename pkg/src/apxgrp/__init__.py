"""Finite computations around approximate subgroups: product-set growth,
Ruzsa coverings, x^4 towers, near-subgroup probes and point counts in SL2."""

from .groups import (
    ContextMismatch,
    CoordinateOverflow,
    Elem,
    GroupCtx,
    GroupError,
    decode,
    encode,
    format_elem,
    identity,
    inv,
    mul,
    parse_elem,
)
from .setalg import (
    FinSet,
    commutator_set,
    conj_prod_size,
    conj_set,
    doubling,
    inverse_set,
    power,
    product,
    symmetrize,
    tripling,
)

__version__ = "0.1.0"
