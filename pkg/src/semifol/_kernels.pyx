# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled tape evaluation: values and order-2 Wirtinger jets.

Semantics match _kernels_py exactly (same tables, same error contract);
this module only removes the interpreter overhead from the hot loops.
"""

import numpy as np

from libc.math cimport isfinite
from libc.stdlib cimport free, malloc

from . import _tables as _T
from . import expr as _E

cdef extern from "complex.h" nogil:
    double complex csqrt(double complex)
    double complex cexp(double complex)
    double complex clog(double complex)

BACKEND_NAME = "compiled"

DEF NJET = 15

# ---------------------------------------------------------------------------
# opcodes and tables copied into C storage at import

cdef int OPC_CONST = _E.OP_CONST
cdef int OPC_VARX = _E.OP_VARX
cdef int OPC_VARY = _E.OP_VARY
cdef int OPC_VARS = _E.OP_VARS
cdef int OPC_ADD = _E.OP_ADD
cdef int OPC_SUB = _E.OP_SUB
cdef int OPC_MUL = _E.OP_MUL
cdef int OPC_DIV = _E.OP_DIV
cdef int OPC_NEG = _E.OP_NEG
cdef int OPC_CONJ = _E.OP_CONJ
cdef int OPC_RE = _E.OP_RE
cdef int OPC_IM = _E.OP_IM
cdef int OPC_SQRT = _E.OP_SQRT
cdef int OPC_EXP = _E.OP_EXP
cdef int OPC_LOG = _E.OP_LOG

cdef int MUL_T[64]
cdef int MUL_P[64]
cdef int MUL_Q[64]
cdef double MUL_C[64]
cdef int NMUL = 0

cdef int COMP_M[16]
cdef int COMP_P[16]
cdef int COMP_Q[16]
cdef int NCOMP = 0

cdef int CONJP[NJET]
cdef int ORD1[4]


def _init_tables():
    global NMUL, NCOMP
    for i, (t, p, q, c) in enumerate(_T.MUL_TABLE):
        MUL_T[i] = t
        MUL_P[i] = p
        MUL_Q[i] = q
        MUL_C[i] = c
    NMUL = len(_T.MUL_TABLE)
    for i, (m, p, q) in enumerate(_T.COMP2):
        COMP_M[i] = m
        COMP_P[i] = p
        COMP_Q[i] = q
    NCOMP = len(_T.COMP2)
    for i, p in enumerate(_T.CONJ_PERM):
        CONJP[i] = p
    for i, r in enumerate(_T.ORDER1):
        ORD1[i] = r


_init_tables()


# ---------------------------------------------------------------------------
# compiled tape wrapper (cached on the Tape object)

cdef class CompiledTape:
    cdef int nops
    cdef bint has_s
    cdef int[::1] ops
    cdef int[::1] a1
    cdef int[::1] a2
    cdef double complex[::1] consts

    def __init__(self, tape):
        self.ops = np.ascontiguousarray(tape.ops, dtype=np.int32)
        self.a1 = np.ascontiguousarray(tape.arg1, dtype=np.int32)
        self.a2 = np.ascontiguousarray(tape.arg2, dtype=np.int32)
        self.consts = np.ascontiguousarray(tape.consts, dtype=np.complex128)
        self.nops = len(tape.ops)
        self.has_s = tape.has_s


cdef CompiledTape _compiled(tape):
    ct = tape._cache
    if ct is None:
        ct = CompiledTape(tape)
        tape._cache = ct
    return <CompiledTape> ct


# ---------------------------------------------------------------------------
# value evaluation

cdef int _values_point(CompiledTape t, double complex x, double complex y,
                       double complex s, double complex *work) noexcept nogil:
    cdef int i, op
    cdef double complex v, w
    for i in range(t.nops):
        op = t.ops[i]
        if op == OPC_CONST:
            v = t.consts[i]
        elif op == OPC_VARX:
            v = x
        elif op == OPC_VARY:
            v = y
        elif op == OPC_VARS:
            v = s
        elif op == OPC_ADD:
            v = work[t.a1[i]] + work[t.a2[i]]
        elif op == OPC_SUB:
            v = work[t.a1[i]] - work[t.a2[i]]
        elif op == OPC_MUL:
            v = work[t.a1[i]] * work[t.a2[i]]
        elif op == OPC_NEG:
            v = -work[t.a1[i]]
        elif op == OPC_CONJ:
            v = work[t.a1[i]].conjugate()
        elif op == OPC_RE:
            v = work[t.a1[i]].real
        elif op == OPC_IM:
            v = work[t.a1[i]].imag
        elif op == OPC_DIV:
            w = work[t.a2[i]]
            if w == 0:
                return i
            v = work[t.a1[i]] / w
        elif op == OPC_SQRT:
            w = work[t.a1[i]]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return i
            v = csqrt(w)
        elif op == OPC_EXP:
            v = cexp(work[t.a1[i]])
        else:  # OPC_LOG
            w = work[t.a1[i]]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return i
            v = clog(w)
        if not (isfinite(v.real) and isfinite(v.imag)):
            return i
        work[i] = v
    return -1


def eval_values(tape, X, Y, S=None):
    cdef CompiledTape t = _compiled(tape)
    cdef double complex[::1] xv = np.ascontiguousarray(X, dtype=np.complex128)
    cdef double complex[::1] yv = np.ascontiguousarray(Y, dtype=np.complex128)
    cdef double complex[::1] sv
    cdef bint with_s = S is not None
    if with_s:
        sv = np.ascontiguousarray(S, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0]
    out_np = np.empty(n, dtype=np.complex128)
    err_np = np.full(n, -1, dtype=np.int32)
    cdef double complex[::1] out = out_np
    cdef int[::1] err = err_np
    cdef double complex *work = <double complex *> malloc(t.nops * sizeof(double complex))
    if work == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    cdef int e
    cdef double complex s = 0
    with nogil:
        for k in range(n):
            if with_s:
                s = sv[k]
            e = _values_point(t, xv[k], yv[k], s, work)
            err[k] = e
            out[k] = work[t.nops - 1] if e < 0 else 0
    free(work)
    return out_np, err_np


def eval_value_scalar(tape, x, y, s=None):
    cdef CompiledTape t = _compiled(tape)
    cdef double complex *work = <double complex *> malloc(t.nops * sizeof(double complex))
    if work == NULL:
        raise MemoryError()
    cdef double complex sv = 0 if s is None else s
    cdef int e = _values_point(t, x, y, sv, work)
    v = work[t.nops - 1] if e < 0 else 0j
    free(work)
    return v, e


# ---------------------------------------------------------------------------
# jet evaluation

cdef inline void _jzero(double complex *j) noexcept nogil:
    cdef int k
    for k in range(NJET):
        j[k] = 0


cdef inline void _jmul(double complex *a, double complex *b,
                       double complex *out) noexcept nogil:
    cdef int k
    _jzero(out)
    for k in range(NMUL):
        out[MUL_T[k]] = out[MUL_T[k]] + MUL_C[k] * a[MUL_P[k]] * b[MUL_Q[k]]


cdef inline void _jcompose(double complex *g, double complex f0,
                           double complex f1, double complex f2,
                           double complex *out) noexcept nogil:
    cdef int k
    out[0] = f0
    for k in range(4):
        out[ORD1[k]] = f1 * g[ORD1[k]]
    for k in range(NCOMP):
        out[COMP_M[k]] = f1 * g[COMP_M[k]] + f2 * g[COMP_P[k]] * g[COMP_Q[k]]


cdef inline void _jconj(double complex *g, double complex *out) noexcept nogil:
    cdef int k
    for k in range(NJET):
        out[k] = g[CONJP[k]].conjugate()


cdef int _jets_point(CompiledTape t, double complex x, double complex y,
                     double complex *work) noexcept nogil:
    cdef int i, op, k
    cdef double complex w, r
    cdef double complex tmp[NJET]
    cdef double complex tmp2[NJET]
    cdef double complex *cur
    cdef double complex *a
    cdef double complex *b
    for i in range(t.nops):
        op = t.ops[i]
        cur = work + i * NJET
        a = work + t.a1[i] * NJET
        b = work + t.a2[i] * NJET
        if op == OPC_CONST:
            _jzero(cur)
            cur[0] = t.consts[i]
        elif op == OPC_VARX:
            _jzero(cur)
            cur[0] = x
            cur[1] = 1
        elif op == OPC_VARY:
            _jzero(cur)
            cur[0] = y
            cur[3] = 1
        elif op == OPC_ADD:
            for k in range(NJET):
                cur[k] = a[k] + b[k]
        elif op == OPC_SUB:
            for k in range(NJET):
                cur[k] = a[k] - b[k]
        elif op == OPC_NEG:
            for k in range(NJET):
                cur[k] = -a[k]
        elif op == OPC_MUL:
            _jmul(a, b, cur)
        elif op == OPC_CONJ:
            _jconj(a, cur)
        elif op == OPC_RE:
            _jconj(a, tmp)
            for k in range(NJET):
                cur[k] = 0.5 * (a[k] + tmp[k])
        elif op == OPC_IM:
            _jconj(a, tmp)
            for k in range(NJET):
                cur[k] = -0.5j * (a[k] - tmp[k])
        elif op == OPC_DIV:
            w = b[0]
            if w == 0:
                return i
            _jcompose(b, 1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w), tmp)
            _jmul(a, tmp, tmp2)
            for k in range(NJET):
                cur[k] = tmp2[k]
        elif op == OPC_SQRT:
            w = a[0]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return i
            r = csqrt(w)
            _jcompose(a, r, 0.5 / r, -0.25 / (r * w), cur)
        elif op == OPC_EXP:
            r = cexp(a[0])
            _jcompose(a, r, r, r, cur)
        else:  # OPC_LOG
            w = a[0]
            if w == 0 or (w.imag == 0 and w.real < 0):
                return i
            _jcompose(a, clog(w), 1.0 / w, -1.0 / (w * w), cur)
        if not (isfinite(cur[0].real) and isfinite(cur[0].imag)):
            return i
    cur = work + (t.nops - 1) * NJET
    for k in range(NJET):
        if not (isfinite(cur[k].real) and isfinite(cur[k].imag)):
            return t.nops - 1
    return -1


def eval_jets(tape, X, Y):
    if tape.has_s:
        raise ValueError("jet evaluation is defined for 2-variable expressions")
    cdef CompiledTape t = _compiled(tape)
    cdef double complex[::1] xv = np.ascontiguousarray(X, dtype=np.complex128)
    cdef double complex[::1] yv = np.ascontiguousarray(Y, dtype=np.complex128)
    cdef Py_ssize_t n = xv.shape[0]
    out_np = np.zeros((n, NJET), dtype=np.complex128)
    err_np = np.full(n, -1, dtype=np.int32)
    cdef double complex[:, ::1] out = out_np
    cdef int[::1] err = err_np
    cdef double complex *work = <double complex *> malloc(t.nops * NJET * sizeof(double complex))
    if work == NULL:
        raise MemoryError()
    cdef Py_ssize_t k
    cdef int e, j
    with nogil:
        for k in range(n):
            e = _jets_point(t, xv[k], yv[k], work)
            err[k] = e
            if e < 0:
                for j in range(NJET):
                    out[k, j] = work[(t.nops - 1) * NJET + j]
    free(work)
    return out_np, err_np


def eval_jet_scalar(tape, x, y):
    if tape.has_s:
        raise ValueError("jet evaluation is defined for 2-variable expressions")
    cdef CompiledTape t = _compiled(tape)
    cdef double complex *work = <double complex *> malloc(t.nops * NJET * sizeof(double complex))
    if work == NULL:
        raise MemoryError()
    cdef int e = _jets_point(t, x, y, work)
    out = np.zeros(NJET, dtype=np.complex128)
    cdef double complex[::1] ov = out
    cdef int j
    if e < 0:
        for j in range(NJET):
            ov[j] = work[(t.nops - 1) * NJET + j]
    free(work)
    return out, e
