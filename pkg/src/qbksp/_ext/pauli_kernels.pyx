# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Pauli-rotation kernels.  Must stay call-compatible with ``qbksp._pauli_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline double complex _phase(unsigned long long x, unsigned long long pmask, double complex base) noexcept nogil:
    if __builtin_popcountll(x & pmask) & 1:
        return -base
    return base


cdef void _rotate(double complex* psi, Py_ssize_t dim, unsigned long long flip,
                  unsigned long long pmask, int n_y, double theta) noexcept nogil:
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double complex base
    cdef double complex mis
    cdef double complex a, b, pa, pb
    cdef unsigned long long x, y
    cdef int r = n_y & 3
    if r == 0:
        base = 1.0
    elif r == 1:
        base = 1j
    elif r == 2:
        base = -1.0
    else:
        base = -1j
    # -i * sin(theta) * i**n_y
    mis = -1j * s * base
    if flip == 0:
        for x in range(<unsigned long long>dim):
            if __builtin_popcountll(x & pmask) & 1:
                psi[x] = psi[x] * (c - mis)
            else:
                psi[x] = psi[x] * (c + mis)
        return
    for x in range(<unsigned long long>dim):
        y = x ^ flip
        if y < x:
            continue
        a = psi[x]
        b = psi[y]
        # P|x> = phase(x) |y>, P|y> = phase(y) |x>
        pa = -mis if (__builtin_popcountll(x & pmask) & 1) else mis
        pb = -mis if (__builtin_popcountll(y & pmask) & 1) else mis
        psi[x] = c * a + pb * b
        psi[y] = c * b + pa * a


def apply_pauli_rotation(cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] psi,
                         unsigned long long flip, unsigned long long pmask, int n_y, double theta):
    """In place: ``psi <- exp(-i theta P) psi`` for the Pauli string given by its masks."""
    with nogil:
        _rotate(<double complex*> psi.data, psi.shape[0], flip, pmask, n_y, theta)
    return psi


def apply_rotation_sequence(cnp.ndarray[cnp.complex128_t, ndim=1, mode="c"] psi,
                            cnp.ndarray[cnp.uint64_t, ndim=1] flips,
                            cnp.ndarray[cnp.uint64_t, ndim=1] pmasks,
                            cnp.ndarray[cnp.int64_t, ndim=1] n_ys,
                            cnp.ndarray[cnp.float64_t, ndim=1] thetas):
    """In place: apply ``exp(-i thetas[j] P_j)`` for j = 0, 1, ... in order."""
    cdef Py_ssize_t j, m = thetas.shape[0]
    cdef double complex* data = <double complex*> psi.data
    cdef Py_ssize_t dim = psi.shape[0]
    with nogil:
        for j in range(m):
            _rotate(data, dim, flips[j], pmasks[j], <int> n_ys[j], thetas[j])
    return psi
