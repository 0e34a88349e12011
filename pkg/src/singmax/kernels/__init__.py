"""Hot-kernel dispatch: compiled core if built, numpy/scipy fallback otherwise.

``benchmarks/bench_kernels.py`` imports both implementations directly to
compare them; everything else goes through the names re-exported here.
"""

try:
    from . import _core as _impl

    HAVE_COMPILED = True
except ImportError:  # extension not built; the fallback is fully equivalent
    from . import _fallback as _impl

    HAVE_COMPILED = False

cg_shifted = _impl.cg_shifted
csr_matvec = _impl.csr_matvec

__all__ = ["HAVE_COMPILED", "cg_shifted", "csr_matvec"]
