# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled filter kernels.

Same functions and the same arithmetic order as ``_kernels_py``; see there
for the integration conventions.
"""
from libc.math cimport sqrt

cdef double ACCEL_EPS = 1e-6
cdef double GRAD_EPS = 1e-12


cdef inline bint _unit_accel(double* a) noexcept nogil:
    cdef double n = sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])
    if n <= ACCEL_EPS:
        a[0] = 0.0
        a[1] = 0.0
        a[2] = 0.0
        return False
    a[0] = a[0] / n
    a[1] = a[1] / n
    a[2] = a[2] / n
    return True


cdef inline void _mahony_rate(const double* s, const double* a, bint use_acc, const double* g,
                              double kp, double ki, double* out) noexcept nogil:
    cdef double w = s[0], x = s[1], y = s[2], z = s[3]
    cdef double vx, vy, vz, ex, ey, ez, ux, uy, uz
    if use_acc:
        vx = 2.0 * (x * z - w * y)
        vy = 2.0 * (y * z + w * x)
        vz = w * w - x * x - y * y + z * z
        ex = a[1] * vz - a[2] * vy
        ey = a[2] * vx - a[0] * vz
        ez = a[0] * vy - a[1] * vx
    else:
        ex = 0.0
        ey = 0.0
        ez = 0.0
    ux = g[0] + s[4] + kp * ex
    uy = g[1] + s[5] + kp * ey
    uz = g[2] + s[6] + kp * ez
    out[0] = 0.5 * (-x * ux - y * uy - z * uz)
    out[1] = 0.5 * (w * ux + y * uz - z * uy)
    out[2] = 0.5 * (w * uy - x * uz + z * ux)
    out[3] = 0.5 * (w * uz + x * uy - y * ux)
    out[4] = ki * ex
    out[5] = ki * ey
    out[6] = ki * ez


cdef inline void _mahony_step(double* s, double* a, const double* g,
                              double kp, double ki, double h) noexcept nogil:
    cdef double k1[7]
    cdef double k2[7]
    cdef double k3[7]
    cdef double k4[7]
    cdef double tmp[7]
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double n
    cdef int i
    cdef bint use_acc = _unit_accel(a)
    _mahony_rate(s, a, use_acc, g, kp, ki, k1)
    for i in range(7):
        tmp[i] = s[i] + h2 * k1[i]
    _mahony_rate(tmp, a, use_acc, g, kp, ki, k2)
    for i in range(7):
        tmp[i] = s[i] + h2 * k2[i]
    _mahony_rate(tmp, a, use_acc, g, kp, ki, k3)
    for i in range(7):
        tmp[i] = s[i] + h * k3[i]
    _mahony_rate(tmp, a, use_acc, g, kp, ki, k4)
    for i in range(7):
        s[i] = s[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    n = sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3])
    for i in range(4):
        s[i] = s[i] / n


cdef inline void _madgwick_grad(const double* q, const double* a, double* out) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double fx = 2.0 * (x * z - w * y) - a[0]
    cdef double fy = 2.0 * (y * z + w * x) - a[1]
    cdef double fz = w * w - x * x - y * y + z * z - a[2]
    out[0] = 4.0 * (-y * fx + x * fy + w * fz)
    out[1] = 4.0 * (z * fx + w * fy - x * fz)
    out[2] = 4.0 * (-w * fx + z * fy - y * fz)
    out[3] = 4.0 * (x * fx + y * fy + z * fz)


cdef inline void _madgwick_rate(const double* q, const double* a, bint use_acc, const double* g,
                                double beta, double* out) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double gr[4]
    cdef double gn, sc
    out[0] = 0.5 * (-x * g[0] - y * g[1] - z * g[2])
    out[1] = 0.5 * (w * g[0] + y * g[2] - z * g[1])
    out[2] = 0.5 * (w * g[1] - x * g[2] + z * g[0])
    out[3] = 0.5 * (w * g[2] + x * g[1] - y * g[0])
    if use_acc and beta != 0.0:
        _madgwick_grad(q, a, gr)
        gn = sqrt(gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2] + gr[3] * gr[3])
        if gn >= GRAD_EPS:
            sc = beta / gn
            out[0] -= sc * gr[0]
            out[1] -= sc * gr[1]
            out[2] -= sc * gr[2]
            out[3] -= sc * gr[3]


cdef inline bint _snap_to_optimum(double* q, const double* a, double reach) noexcept nogil:
    cdef double w = q[0], x = q[1], y = q[2], z = q[3]
    cdef double vx = 2.0 * (x * z - w * y)
    cdef double vy = 2.0 * (y * z + w * x)
    cdef double vz = w * w - x * x - y * y + z * z
    cdef double rw = 1.0 + a[0] * vx + a[1] * vy + a[2] * vz
    cdef double rx, ry, rz, n, pw, px, py, pz
    if rw <= 1e-6:
        return False
    rx = a[1] * vz - a[2] * vy
    ry = a[2] * vx - a[0] * vz
    rz = a[0] * vy - a[1] * vx
    n = sqrt(rw * rw + rx * rx + ry * ry + rz * rz)
    rw = rw / n
    rx = rx / n
    ry = ry / n
    rz = rz / n
    if sqrt((1.0 - rw) * (1.0 - rw) + rx * rx + ry * ry + rz * rz) > reach:
        return False
    pw = w * rw - x * rx - y * ry - z * rz
    px = w * rx + x * rw + y * rz - z * ry
    py = w * ry - x * rz + y * rw + z * rx
    pz = w * rz + x * ry - y * rx + z * rw
    n = sqrt(pw * pw + px * px + py * py + pz * pz)
    q[0] = pw / n
    q[1] = px / n
    q[2] = py / n
    q[3] = pz / n
    return True


cdef inline void _madgwick_rk4(double* q, const double* a, bint use_acc, const double* g,
                               double beta, double h) noexcept nogil:
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef double h2 = 0.5 * h
    cdef double h6 = h / 6.0
    cdef double n
    cdef int i
    _madgwick_rate(q, a, use_acc, g, beta, k1)
    for i in range(4):
        tmp[i] = q[i] + h2 * k1[i]
    _madgwick_rate(tmp, a, use_acc, g, beta, k2)
    for i in range(4):
        tmp[i] = q[i] + h2 * k2[i]
    _madgwick_rate(tmp, a, use_acc, g, beta, k3)
    for i in range(4):
        tmp[i] = q[i] + h * k3[i]
    _madgwick_rate(tmp, a, use_acc, g, beta, k4)
    for i in range(4):
        q[i] = q[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    n = sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    for i in range(4):
        q[i] = q[i] / n


cdef inline void _madgwick_step(double* q, double* a, const double* g, double beta, double h,
                                bint project) noexcept nogil:
    cdef double p[4]
    cdef int i
    cdef bint use_acc = _unit_accel(a)
    if project and use_acc and beta != 0.0:
        for i in range(4):
            p[i] = q[i]
        _madgwick_rk4(p, a, False, g, 0.0, h)
        if _snap_to_optimum(p, a, beta * h):
            for i in range(4):
                q[i] = p[i]
            return
    _madgwick_rk4(q, a, use_acc, g, beta, h)


def mahony_rate(double w, double x, double y, double z, double b1, double b2, double b3,
                double ax, double ay, double az, double gx, double gy, double gz,
                double kp, double ki):
    cdef double s[7]
    cdef double a[3]
    cdef double g[3]
    cdef double out[7]
    s[:] = [w, x, y, z, b1, b2, b3]
    a[:] = [ax, ay, az]
    g[:] = [gx, gy, gz]
    cdef bint use_acc = _unit_accel(a)
    _mahony_rate(s, a, use_acc, g, kp, ki, out)
    return (out[0], out[1], out[2], out[3], out[4], out[5], out[6])


def mahony_step(double w, double x, double y, double z, double b1, double b2, double b3,
                double ax, double ay, double az, double gx, double gy, double gz,
                double kp, double ki, double h):
    cdef double s[7]
    cdef double a[3]
    cdef double g[3]
    s[:] = [w, x, y, z, b1, b2, b3]
    a[:] = [ax, ay, az]
    g[:] = [gx, gy, gz]
    _mahony_step(s, a, g, kp, ki, h)
    return (s[0], s[1], s[2], s[3], s[4], s[5], s[6])


def madgwick_gradient(double w, double x, double y, double z, double ax, double ay, double az):
    cdef double q[4]
    cdef double a[3]
    cdef double out[4]
    q[:] = [w, x, y, z]
    a[:] = [ax, ay, az]
    _madgwick_grad(q, a, out)
    return (out[0], out[1], out[2], out[3])


def madgwick_rate(double w, double x, double y, double z, double ax, double ay, double az,
                  double gx, double gy, double gz, double beta):
    cdef double q[4]
    cdef double a[3]
    cdef double g[3]
    cdef double out[4]
    q[:] = [w, x, y, z]
    a[:] = [ax, ay, az]
    g[:] = [gx, gy, gz]
    cdef bint use_acc = _unit_accel(a)
    _madgwick_rate(q, a, use_acc, g, beta, out)
    return (out[0], out[1], out[2], out[3])


def madgwick_step(double w, double x, double y, double z, double ax, double ay, double az,
                  double gx, double gy, double gz, double beta, double h, bint project):
    cdef double q[4]
    cdef double a[3]
    cdef double g[3]
    q[:] = [w, x, y, z]
    a[:] = [ax, ay, az]
    g[:] = [gx, gy, gz]
    _madgwick_step(q, a, g, beta, h, project)
    return (q[0], q[1], q[2], q[3])


def mahony_series(q0, b0, const double[:, ::1] accel, const double[:, ::1] gyro,
                  const double[::1] dt, double kp, double ki,
                  double[:, ::1] q_out, double[:, ::1] b_out):
    cdef double s[7]
    cdef double a[3]
    cdef Py_ssize_t k, i
    cdef Py_ssize_t n = dt.shape[0]
    for i in range(4):
        s[i] = q0[i]
    for i in range(3):
        s[4 + i] = b0[i]
    with nogil:
        for k in range(n):
            a[0] = accel[k, 0]
            a[1] = accel[k, 1]
            a[2] = accel[k, 2]
            _mahony_step(s, a, &gyro[k, 0], kp, ki, dt[k])
            for i in range(4):
                q_out[k, i] = s[i]
            for i in range(3):
                b_out[k, i] = s[4 + i]


def madgwick_series(q0, const double[:, ::1] accel, const double[:, ::1] gyro,
                    const double[::1] dt, double beta, bint project, double[:, ::1] q_out):
    cdef double q[4]
    cdef double a[3]
    cdef Py_ssize_t k, i
    cdef Py_ssize_t n = dt.shape[0]
    for i in range(4):
        q[i] = q0[i]
    with nogil:
        for k in range(n):
            a[0] = accel[k, 0]
            a[1] = accel[k, 1]
            a[2] = accel[k, 2]
            _madgwick_step(q, a, &gyro[k, 0], beta, dt[k], project)
            for i in range(4):
                q_out[k, i] = q[i]
