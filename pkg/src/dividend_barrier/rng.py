"""Counter-based random streams (Philox4x64-10) addressable per path and step.

Path ``i`` under seed ``s`` uses the key (s, i). The uniforms for simulation step
``k`` come from the Philox block at counter k + 1, so any path/step can be drawn
independently of batching or execution order. The stream for one path is identical
to ``numpy.random.Philox(key=(i << 64) | s)``; the test suite checks this bit for bit.
"""
import ctypes

import numba
import numpy as np
from llvmlite import ir
from numba import types
from numba.extending import get_cython_function_address, intrinsic

_MASK64 = (1 << 64) - 1

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_S12 = np.uint64(12)

_ndtri_addr = get_cython_function_address("scipy.special.cython_special", "ndtri")
_ndtri = ctypes.CFUNCTYPE(ctypes.c_double, ctypes.c_double)(_ndtri_addr)


@intrinsic
def _mulhilo(typingctx, a, b):
    """Full 64x64 -> 128 bit product as (high, low) words, via a native i128 multiply."""
    sig = types.UniTuple(types.uint64, 2)(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        i128 = ir.IntType(128)
        prod = builder.mul(builder.zext(args[0], i128), builder.zext(args[1], i128))
        lo = builder.trunc(prod, ir.IntType(64))
        hi = builder.trunc(builder.lshr(prod, ir.Constant(i128, 64)), ir.IntType(64))
        return context.make_tuple(builder, signature.return_type, (hi, lo))

    return sig, codegen


@numba.njit
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox 4x64 block function."""
    for r in range(10):
        if r > 0:
            k0 = k0 + _W0
            k1 = k1 + _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@numba.njit(inline="always")
def to_open_unit(u):
    """Top 52 bits shifted to the midpoint of their cell.

    The result lies in [2**-53, 1 - 2**-53], both exactly representable, so it never
    rounds to 0 or 1. (With 53 bits the top cell midpoint 1 - 2**-54 rounds to 1.)
    """
    return ((u >> _S12) + 0.5) * 2.220446049250313e-16


@numba.njit
def step_uniforms(seed, path, step):
    """Four open uniforms for (seed, path, step)."""
    c0, c1, c2, c3 = philox4x64(np.uint64(step + 1), np.uint64(0), np.uint64(0), np.uint64(0),
                                np.uint64(seed), np.uint64(path))
    return to_open_unit(c0), to_open_unit(c1), to_open_unit(c2), to_open_unit(c3)


@numba.njit
def inv_norm(u):
    return _ndtri(u)


@numba.njit
def _raw_block(seed, path, n_steps, out):
    for k in range(n_steps):
        c0, c1, c2, c3 = philox4x64(np.uint64(k + 1), np.uint64(0), np.uint64(0), np.uint64(0),
                                    np.uint64(seed), np.uint64(path))
        out[k, 0] = c0
        out[k, 1] = c1
        out[k, 2] = c2
        out[k, 3] = c3


def raw_stream(seed: int, path: int, n_steps: int) -> np.ndarray:
    """Raw 64-bit words of a path's stream, shape (n_steps, 4)."""
    out = np.empty((n_steps, 4), dtype=np.uint64)
    _raw_block(np.uint64(int(seed) & _MASK64), np.uint64(int(path) & _MASK64), n_steps, out)
    return out


def path_stream(seed: int, index: int) -> np.random.Generator:
    """numpy Generator over the same stream, for use outside the simulator."""
    key = ((int(index) & _MASK64) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
