"""Pure-Python (numpy) tape evaluation: values and order-2 Wirtinger jets.

Mirrors the compiled kernels in _kernels.pyx; the compiled module is preferred
at import time when available (see backend.py).  Evaluation is vectorized over
sample points.  Errors are reported per point as the slot index of the first
failing instruction (-1 means success); the wrapper layer maps slots back to
subexpressions.
"""

import numpy as np

from . import _tables as T
from .expr import (OP_ADD, OP_CONJ, OP_CONST, OP_DIV, OP_EXP, OP_IM, OP_LOG,
                   OP_MUL, OP_NEG, OP_RE, OP_SQRT, OP_SUB, OP_VARS, OP_VARX,
                   OP_VARY)

BACKEND_NAME = "python"

_MUL = T.MUL_TABLE
_COMP2 = T.COMP2
_CONJP = np.asarray(T.CONJ_PERM)
_O1 = T.ORDER1


def _mark(err, bad, slot):
    np.copyto(err, slot, where=bad & (err < 0))


def _branch_bad(w):
    # 0 and the negative real axis (principal-branch cut) are domain errors
    return (w == 0) | ((w.imag == 0) & (w.real < 0))


def eval_values(tape, X, Y, S=None):
    """Evaluate the tape at points (X[i], Y[i][, S[i]]).

    Returns (values, err) where err[i] is -1 on success or the failing slot.
    """
    X = np.asarray(X, dtype=np.complex128)
    n = X.shape[0]
    err = np.full(n, -1, dtype=np.int32)
    slots = [None] * len(tape)
    ops, a1, a2, cs = tape.ops, tape.arg1, tape.arg2, tape.consts
    for i in range(len(tape)):
        op = ops[i]
        if op == OP_CONST:
            v = np.full(n, cs[i])
        elif op == OP_VARX:
            v = X.copy()
        elif op == OP_VARY:
            v = np.asarray(Y, dtype=np.complex128).copy()
        elif op == OP_VARS:
            v = np.asarray(S, dtype=np.complex128).copy()
        elif op == OP_ADD:
            v = slots[a1[i]] + slots[a2[i]]
        elif op == OP_SUB:
            v = slots[a1[i]] - slots[a2[i]]
        elif op == OP_MUL:
            v = slots[a1[i]] * slots[a2[i]]
        elif op == OP_NEG:
            v = -slots[a1[i]]
        elif op == OP_CONJ:
            v = np.conj(slots[a1[i]])
        elif op == OP_RE:
            v = slots[a1[i]].real.astype(np.complex128)
        elif op == OP_IM:
            v = slots[a1[i]].imag.astype(np.complex128)
        elif op == OP_DIV:
            den = slots[a2[i]]
            bad = den == 0
            _mark(err, bad, i)
            v = slots[a1[i]] / np.where(bad, 1, den)
        elif op == OP_SQRT:
            w = slots[a1[i]]
            bad = _branch_bad(w)
            _mark(err, bad, i)
            v = np.sqrt(np.where(bad, 1, w))
        elif op == OP_EXP:
            v = np.exp(slots[a1[i]])
        elif op == OP_LOG:
            w = slots[a1[i]]
            bad = _branch_bad(w)
            _mark(err, bad, i)
            v = np.log(np.where(bad, 1, w))
        else:
            raise ValueError(f"bad opcode {op}")
        _mark(err, ~np.isfinite(v.real) | ~np.isfinite(v.imag), i)
        slots[i] = v
    return slots[-1], err


def eval_value_scalar(tape, x, y, s=None):
    """Single-point value evaluation with plain complex arithmetic."""
    import cmath

    work = [0j] * len(tape)
    ops, a1, a2, cs = tape.ops, tape.arg1, tape.arg2, tape.consts
    x = complex(x)
    y = complex(y)
    s = 0j if s is None else complex(s)
    for i in range(len(tape)):
        op = ops[i]
        if op == OP_CONST:
            v = complex(cs[i])
        elif op == OP_VARX:
            v = x
        elif op == OP_VARY:
            v = y
        elif op == OP_VARS:
            v = s
        elif op == OP_ADD:
            v = work[a1[i]] + work[a2[i]]
        elif op == OP_SUB:
            v = work[a1[i]] - work[a2[i]]
        elif op == OP_MUL:
            v = work[a1[i]] * work[a2[i]]
        elif op == OP_NEG:
            v = -work[a1[i]]
        elif op == OP_CONJ:
            v = work[a1[i]].conjugate()
        elif op == OP_RE:
            v = complex(work[a1[i]].real)
        elif op == OP_IM:
            v = complex(work[a1[i]].imag)
        elif op == OP_DIV:
            w = work[a2[i]]
            if w == 0:
                return 0j, i
            v = work[a1[i]] / w
        elif op == OP_SQRT:
            w = work[a1[i]]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return 0j, i
            v = cmath.sqrt(w)
        elif op == OP_EXP:
            v = cmath.exp(work[a1[i]])
        elif op == OP_LOG:
            w = work[a1[i]]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return 0j, i
            v = cmath.log(w)
        else:
            raise ValueError(f"bad opcode {op}")
        if not (cmath.isfinite(v)):
            return 0j, i
        work[i] = v
    return work[-1], -1


def eval_jet_scalar(tape, x, y):
    """Single-point jet evaluation; returns (ndarray of 15 coeffs, err slot)."""
    jets, err = eval_jets(tape, np.array([x]), np.array([y]))
    return jets[0], int(err[0])


def _jet_mul(A, B):
    out = np.zeros_like(A)
    for t, p, q, c in _MUL:
        if c == 1.0:
            out[:, t] += A[:, p] * B[:, q]
        else:
            out[:, t] += c * (A[:, p] * B[:, q])
    return out


def _jet_compose(G, f0, f1, f2):
    # jet of f(g) from the value jet G and scalars f(g0), f'(g0), f''(g0)
    out = np.empty_like(G)
    out[:, 0] = f0
    for r in _O1:
        out[:, r] = f1 * G[:, r]
    for m, p, q in _COMP2:
        out[:, m] = f1 * G[:, m] + f2 * (G[:, p] * G[:, q])
    return out


def _jet_conj(G):
    return np.conj(G)[:, _CONJP]


def eval_jets(tape, X, Y):
    """Order-2 Wirtinger jets of the tape at points (X[i], Y[i]).

    Returns (jets, err): jets has shape (n, 15) in _tables.MULTIS order.
    """
    if tape.has_s:
        raise ValueError("jet evaluation is defined for 2-variable expressions")
    X = np.asarray(X, dtype=np.complex128)
    Y = np.asarray(Y, dtype=np.complex128)
    n = X.shape[0]
    err = np.full(n, -1, dtype=np.int32)
    slots = [None] * len(tape)
    ops, a1, a2, cs = tape.ops, tape.arg1, tape.arg2, tape.consts
    for i in range(len(tape)):
        op = ops[i]
        if op == OP_CONST:
            v = np.zeros((n, T.NJET), dtype=np.complex128)
            v[:, 0] = cs[i]
        elif op == OP_VARX:
            v = np.zeros((n, T.NJET), dtype=np.complex128)
            v[:, 0] = X
            v[:, T.D_X] = 1
        elif op == OP_VARY:
            v = np.zeros((n, T.NJET), dtype=np.complex128)
            v[:, 0] = Y
            v[:, T.D_Y] = 1
        elif op == OP_ADD:
            v = slots[a1[i]] + slots[a2[i]]
        elif op == OP_SUB:
            v = slots[a1[i]] - slots[a2[i]]
        elif op == OP_NEG:
            v = -slots[a1[i]]
        elif op == OP_MUL:
            v = _jet_mul(slots[a1[i]], slots[a2[i]])
        elif op == OP_CONJ:
            v = _jet_conj(slots[a1[i]])
        elif op == OP_RE:
            g = slots[a1[i]]
            v = (g + _jet_conj(g)) * 0.5
        elif op == OP_IM:
            g = slots[a1[i]]
            v = (g - _jet_conj(g)) * (-0.5j)
        elif op == OP_DIV:
            B = slots[a2[i]]
            w = B[:, 0]
            bad = w == 0
            _mark(err, bad, i)
            w = np.where(bad, 1, w)
            inv = _jet_compose(B, 1.0 / w, -1.0 / w**2, 2.0 / w**3)
            v = _jet_mul(slots[a1[i]], inv)
        elif op == OP_SQRT:
            G = slots[a1[i]]
            w = G[:, 0]
            bad = _branch_bad(w)
            _mark(err, bad, i)
            w = np.where(bad, 1, w)
            r = np.sqrt(w)
            v = _jet_compose(G, r, 0.5 / r, -0.25 / (r * w))
        elif op == OP_EXP:
            G = slots[a1[i]]
            ew = np.exp(G[:, 0])
            v = _jet_compose(G, ew, ew, ew)
        elif op == OP_LOG:
            G = slots[a1[i]]
            w = G[:, 0]
            bad = _branch_bad(w)
            _mark(err, bad, i)
            w = np.where(bad, 1, w)
            v = _jet_compose(G, np.log(w), 1.0 / w, -1.0 / w**2)
        else:
            raise ValueError(f"bad opcode {op} in jet evaluation")
        _mark(err, ~np.isfinite(v[:, 0].real) | ~np.isfinite(v[:, 0].imag), i)
        slots[i] = v
    out = slots[-1]
    bad = ~np.isfinite(out.real) | ~np.isfinite(out.imag)
    if bad.any():
        rows = bad.any(axis=1)
        _mark(err, rows, len(tape) - 1)
    return out, err
