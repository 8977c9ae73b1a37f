"""Hot evolution/transfer kernels: compiled extension with pure-numpy fallback.

The compiled module is preferred when the extension built; ``IMPL`` reports
which one is active.  Both expose the same array-level API and agree to
roundoff, so everything above this package is implementation-agnostic.
"""

try:
    from . import _core as _impl
except ImportError:  # extension not built; numpy fallback
    from . import _fallback as _impl

IMPL = _impl.IMPL
banded_matvec = _impl.banded_matvec
evolve_state = _impl.evolve_state
evolve_sup_abs = _impl.evolve_sup_abs
evolve_weighted_series = _impl.evolve_weighted_series
transfer_product_lognorm = _impl.transfer_product_lognorm

__all__ = [
    "IMPL",
    "banded_matvec",
    "evolve_state",
    "evolve_sup_abs",
    "evolve_weighted_series",
    "transfer_product_lognorm",
]
