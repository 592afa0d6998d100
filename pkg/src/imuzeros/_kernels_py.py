"""Pure-Python filter kernels.

Reference implementation and import-time fallback for the compiled
``_kernels`` extension; both expose the same functions with the same
arithmetic order, so results agree to rounding.

Every step holds the sample constant over ``[t - h, t]`` and advances the
state with one classical RK4 step followed by quaternion renormalization.
"""
import math

ACCEL_EPS = 1e-6
GRAD_EPS = 1e-12


def _unit_accel(ax, ay, az):
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n <= ACCEL_EPS:
        return 0.0, 0.0, 0.0, False
    return ax / n, ay / n, az / n, True


def _mahony_rate(w, x, y, z, b1, b2, b3, ax, ay, az, use_acc, gx, gy, gz, kp, ki):
    if use_acc:
        vx = 2.0 * (x * z - w * y)
        vy = 2.0 * (y * z + w * x)
        vz = w * w - x * x - y * y + z * z
        ex = ay * vz - az * vy
        ey = az * vx - ax * vz
        ez = ax * vy - ay * vx
    else:
        ex = ey = ez = 0.0
    ux = gx + b1 + kp * ex
    uy = gy + b2 + kp * ey
    uz = gz + b3 + kp * ez
    return (
        0.5 * (-x * ux - y * uy - z * uz),
        0.5 * (w * ux + y * uz - z * uy),
        0.5 * (w * uy - x * uz + z * ux),
        0.5 * (w * uz + x * uy - y * ux),
        ki * ex,
        ki * ey,
        ki * ez,
    )


def mahony_rate(w, x, y, z, b1, b2, b3, ax, ay, az, gx, gy, gz, kp, ki):
    """Right-hand side of the Mahony ODE for one sample.

    Returns the quaternion rate (4 values) followed by the bias-state rate
    (3 values).  The accelerometer correction is skipped when ``|a| <= 1e-6``.
    """
    ax, ay, az, use_acc = _unit_accel(ax, ay, az)
    return _mahony_rate(w, x, y, z, b1, b2, b3, ax, ay, az, use_acc, gx, gy, gz, kp, ki)


def mahony_step(w, x, y, z, b1, b2, b3, ax, ay, az, gx, gy, gz, kp, ki, h):
    ax, ay, az, use_acc = _unit_accel(ax, ay, az)
    h2 = 0.5 * h
    k1 = _mahony_rate(w, x, y, z, b1, b2, b3, ax, ay, az, use_acc, gx, gy, gz, kp, ki)
    k2 = _mahony_rate(
        w + h2 * k1[0], x + h2 * k1[1], y + h2 * k1[2], z + h2 * k1[3],
        b1 + h2 * k1[4], b2 + h2 * k1[5], b3 + h2 * k1[6],
        ax, ay, az, use_acc, gx, gy, gz, kp, ki,
    )
    k3 = _mahony_rate(
        w + h2 * k2[0], x + h2 * k2[1], y + h2 * k2[2], z + h2 * k2[3],
        b1 + h2 * k2[4], b2 + h2 * k2[5], b3 + h2 * k2[6],
        ax, ay, az, use_acc, gx, gy, gz, kp, ki,
    )
    k4 = _mahony_rate(
        w + h * k3[0], x + h * k3[1], y + h * k3[2], z + h * k3[3],
        b1 + h * k3[4], b2 + h * k3[5], b3 + h * k3[6],
        ax, ay, az, use_acc, gx, gy, gz, kp, ki,
    )
    h6 = h / 6.0
    w = w + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    x = x + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    y = y + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    z = z + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    b1 = b1 + h6 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4])
    b2 = b2 + h6 * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5])
    b3 = b3 + h6 * (k1[6] + 2.0 * k2[6] + 2.0 * k3[6] + k4[6])
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return w / n, x / n, y / n, z / n, b1, b2, b3


def _madgwick_grad(w, x, y, z, ax, ay, az):
    fx = 2.0 * (x * z - w * y) - ax
    fy = 2.0 * (y * z + w * x) - ay
    fz = w * w - x * x - y * y + z * z - az
    return (
        4.0 * (-y * fx + x * fy + w * fz),
        4.0 * (z * fx + w * fy - x * fz),
        4.0 * (-w * fx + z * fy - y * fz),
        4.0 * (x * fx + y * fy + z * fz),
    )


def madgwick_gradient(w, x, y, z, ax, ay, az):
    """Gradient of ``|q* ⊗ (0,0,0,1) ⊗ q - (0, a)|²`` with respect to ``(w, x, y, z)``."""
    return _madgwick_grad(w, x, y, z, ax, ay, az)


def _madgwick_rate(w, x, y, z, ax, ay, az, use_acc, gx, gy, gz, beta):
    dw = 0.5 * (-x * gx - y * gy - z * gz)
    dx = 0.5 * (w * gx + y * gz - z * gy)
    dy = 0.5 * (w * gy - x * gz + z * gx)
    dz = 0.5 * (w * gz + x * gy - y * gx)
    if use_acc and beta != 0.0:
        g0, g1, g2, g3 = _madgwick_grad(w, x, y, z, ax, ay, az)
        gn = math.sqrt(g0 * g0 + g1 * g1 + g2 * g2 + g3 * g3)
        if gn >= GRAD_EPS:
            s = beta / gn
            dw -= s * g0
            dx -= s * g1
            dy -= s * g2
            dz -= s * g3
    return dw, dx, dy, dz


def madgwick_rate(w, x, y, z, ax, ay, az, gx, gy, gz, beta):
    ax, ay, az, use_acc = _unit_accel(ax, ay, az)
    return _madgwick_rate(w, x, y, z, ax, ay, az, use_acc, gx, gy, gz, beta)


def _snap_to_optimum(w, x, y, z, ax, ay, az, reach):
    """Rotate ``q`` onto the optimum set if it lies within ``reach`` of it.

    The smallest body rotation ``r`` with ``r* ⊗ v ⊗ r = a`` (``v`` the
    predicted gravity direction) is ``(1 + a·v, a × v)`` normalized; its
    chord ``|1 - r|`` is the quaternion-space distance covered by moving
    ``q`` to ``q ⊗ r``.  Returns ``None`` when out of reach.
    """
    vx = 2.0 * (x * z - w * y)
    vy = 2.0 * (y * z + w * x)
    vz = w * w - x * x - y * y + z * z
    rw = 1.0 + ax * vx + ay * vy + az * vz
    if rw <= 1e-6:
        return None
    rx = ay * vz - az * vy
    ry = az * vx - ax * vz
    rz = ax * vy - ay * vx
    n = math.sqrt(rw * rw + rx * rx + ry * ry + rz * rz)
    rw, rx, ry, rz = rw / n, rx / n, ry / n, rz / n
    if math.sqrt((1.0 - rw) * (1.0 - rw) + rx * rx + ry * ry + rz * rz) > reach:
        return None
    pw = w * rw - x * rx - y * ry - z * rz
    px = w * rx + x * rw + y * rz - z * ry
    py = w * ry - x * rz + y * rw + z * rx
    pz = w * rz + x * ry - y * rx + z * rw
    n = math.sqrt(pw * pw + px * px + py * py + pz * pz)
    return pw / n, px / n, py / n, pz / n


def _madgwick_rk4(w, x, y, z, ax, ay, az, use_acc, gx, gy, gz, beta, h):
    h2 = 0.5 * h
    k1 = _madgwick_rate(w, x, y, z, ax, ay, az, use_acc, gx, gy, gz, beta)
    k2 = _madgwick_rate(w + h2 * k1[0], x + h2 * k1[1], y + h2 * k1[2], z + h2 * k1[3],
                        ax, ay, az, use_acc, gx, gy, gz, beta)
    k3 = _madgwick_rate(w + h2 * k2[0], x + h2 * k2[1], y + h2 * k2[2], z + h2 * k2[3],
                        ax, ay, az, use_acc, gx, gy, gz, beta)
    k4 = _madgwick_rate(w + h * k3[0], x + h * k3[1], y + h * k3[2], z + h * k3[3],
                        ax, ay, az, use_acc, gx, gy, gz, beta)
    h6 = h / 6.0
    w = w + h6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    x = x + h6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    y = y + h6 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    z = z + h6 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    n = math.sqrt(w * w + x * x + y * y + z * z)
    return w / n, x / n, y / n, z / n


def madgwick_step(w, x, y, z, ax, ay, az, gx, gy, gz, beta, h, project):
    """One RK4 step of the Madgwick ODE.

    The normalized gradient is discontinuous at the optimum.  Fixed-step
    RK4 stalls anywhere within ``beta*h/2`` of it: the four stages straddle
    the optimum and their corrections cancel.  With ``project`` set, a step
    whose gyro-only prediction lies within ``beta*h`` of the optimum set
    instead lands on it, which is where the exact (sliding) solution ends.
    """
    ax, ay, az, use_acc = _unit_accel(ax, ay, az)
    if project and use_acc and beta != 0.0:
        g = _madgwick_rk4(w, x, y, z, ax, ay, az, False, gx, gy, gz, 0.0, h)
        snapped = _snap_to_optimum(g[0], g[1], g[2], g[3], ax, ay, az, beta * h)
        if snapped is not None:
            return snapped
    return _madgwick_rk4(w, x, y, z, ax, ay, az, use_acc, gx, gy, gz, beta, h)


def mahony_series(q0, b0, accel, gyro, dt, kp, ki, q_out, b_out):
    """Run :func:`mahony_step` over a batch.

    ``q_out[k]`` and ``b_out[k]`` receive the state after stepping with sample
    ``k`` over ``dt[k]`` seconds, starting from ``q0``/``b0``.
    """
    w, x, y, z = (float(c) for c in q0)
    b1, b2, b3 = (float(c) for c in b0)
    kp = float(kp)
    ki = float(ki)
    qs = []
    bs = []
    for (ax, ay, az), (gx, gy, gz), h in zip(accel.tolist(), gyro.tolist(), dt.tolist()):
        w, x, y, z, b1, b2, b3 = mahony_step(w, x, y, z, b1, b2, b3, ax, ay, az, gx, gy, gz, kp, ki, h)
        qs.append((w, x, y, z))
        bs.append((b1, b2, b3))
    if qs:
        q_out[:] = qs
        b_out[:] = bs


def madgwick_series(q0, accel, gyro, dt, beta, project, q_out):
    w, x, y, z = (float(c) for c in q0)
    beta = float(beta)
    project = bool(project)
    qs = []
    for (ax, ay, az), (gx, gy, gz), h in zip(accel.tolist(), gyro.tolist(), dt.tolist()):
        w, x, y, z = madgwick_step(w, x, y, z, ax, ay, az, gx, gy, gz, beta, h, project)
        qs.append((w, x, y, z))
    if qs:
        q_out[:] = qs
