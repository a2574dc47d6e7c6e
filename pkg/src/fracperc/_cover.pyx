# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled coverage stamping for ball soups on uniform grids.

Hot loop of rasterization: for each ball, mark every grid cell whose center
lies inside it.  Must stay bit-identical to _cover_py.cover_balls; the
distance test uses the same expression order and the module is compiled with
-ffp-contract=off so no FMA contraction can change results.
"""

import numpy as np


cdef Py_ssize_t _lower(const double[::1] a, double v) noexcept nogil:
    # first index i with a[i] >= v  (numpy searchsorted side="left")
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _upper(const double[::1] a, double v) noexcept nogil:
    # first index i with a[i] > v  (numpy searchsorted side="right")
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] <= v:
            lo = mid + 1
        else:
            hi = mid
    return lo


def cover_balls_2d(unsigned char[:, ::1] covered,
                   const double[::1] xs, const double[::1] ys,
                   const double[:, ::1] centers, const double[::1] radii):
    cdef Py_ssize_t n = centers.shape[0]
    cdef Py_ssize_t k, i, j, i0, i1, j0, j1
    cdef double cx, cy, r, rr, dx, dy, dxx
    with nogil:
        for k in range(n):
            cx = centers[k, 0]
            cy = centers[k, 1]
            r = radii[k]
            rr = r * r
            i0 = _lower(xs, cx - r)
            i1 = _upper(xs, cx + r)
            j0 = _lower(ys, cy - r)
            j1 = _upper(ys, cy + r)
            for i in range(i0, i1):
                dx = xs[i] - cx
                dxx = dx * dx
                for j in range(j0, j1):
                    dy = ys[j] - cy
                    if dxx + dy * dy <= rr:
                        covered[i, j] = 1


def cover_balls_3d(unsigned char[:, :, ::1] covered,
                   const double[::1] xs, const double[::1] ys, const double[::1] zs,
                   const double[:, ::1] centers, const double[::1] radii):
    cdef Py_ssize_t n = centers.shape[0]
    cdef Py_ssize_t k, i, j, l, i0, i1, j0, j1, l0, l1
    cdef double cx, cy, cz, r, rr, dx, dy, dz, dxx, dxy
    with nogil:
        for k in range(n):
            cx = centers[k, 0]
            cy = centers[k, 1]
            cz = centers[k, 2]
            r = radii[k]
            rr = r * r
            i0 = _lower(xs, cx - r)
            i1 = _upper(xs, cx + r)
            j0 = _lower(ys, cy - r)
            j1 = _upper(ys, cy + r)
            l0 = _lower(zs, cz - r)
            l1 = _upper(zs, cz + r)
            for i in range(i0, i1):
                dx = xs[i] - cx
                dxx = dx * dx
                for j in range(j0, j1):
                    dy = ys[j] - cy
                    dxy = dxx + dy * dy
                    for l in range(l0, l1):
                        dz = zs[l] - cz
                        if dxy + dz * dz <= rr:
                            covered[i, j, l] = 1
