"""Hot numeric kernels: recurrent-net steps fused with task physics.

Everything here is compiled with numba's ``@njit`` when numba is importable.
Setting ``EVOWP_DISABLE_NUMBA=1`` (or running without numba installed) selects
the fallback path: the identical function bodies interpreted over numpy
arrays, numerically equivalent but roughly two orders of magnitude slower.
``benchmarks/bench_kernels.py`` measures the gap.

The rollout kernels take no random source; seeded initial conditions are
drawn by the caller and passed in, so compiled and fallback paths produce
the same trajectories.
"""

import math
import os

import numpy as np


def _plain(*args, **kwargs):
    """Identity decorator standing in for numba.njit."""
    if args and callable(args[0]):
        return args[0]

    def deco(func):
        return func

    return deco


def _numba_wanted() -> bool:
    flag = os.environ.get("EVOWP_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("1", "true", "yes", "on")


if _numba_wanted():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - depends on install
        njit = _plain
        NUMBA_ENABLED = False
else:
    njit = _plain
    NUMBA_ENABLED = False


# --------------------------------------------------------------------------
# recurrent network
# --------------------------------------------------------------------------


@njit(cache=True)
def rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, x, h_next, o_next):
    """One recurrent step; writes the new activations into h_next/o_next.

    Hidden units see the current input and the previous hidden state; output
    units see the new hidden state and the previous output state.  tanh at
    both levels keeps every activation inside (-1, 1).
    """
    nh = b_h.shape[0]
    no = b_o.shape[0]
    ni = x.shape[0]
    for i in range(nh):
        s = 0.0
        for j in range(ni):
            s += w_in[i, j] * x[j]
        for j in range(nh):
            s += w_hh[i, j] * h[j]
        s += b_h[i]
        h_next[i] = math.tanh(s)
    for i in range(no):
        s = 0.0
        for j in range(nh):
            s += w_out[i, j] * h_next[j]
        for j in range(no):
            s += w_oo[i, j] * o[j]
        s += b_o[i]
        o_next[i] = math.tanh(s)


@njit(cache=True)
def argmax_first(values, n):
    """Index of the maximum among the first n entries, ties to the lowest."""
    best = 0
    for i in range(1, n):
        if values[i] > values[best]:
            best = i
    return best


# --------------------------------------------------------------------------
# cart-pole (pinned reference dynamics)
# --------------------------------------------------------------------------

CART_GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
POLE_HALF_LENGTH = 0.5
CART_FORCE = 10.0
CART_DT = 0.02
CART_X_LIMIT = 2.4
CART_THETA_LIMIT = 12.0 * math.pi / 180.0


@njit(cache=True)
def cart_pole_step(x, x_dot, theta, theta_dot, action):
    """Euler step of the cart-pole; action 0 pushes left, 1 pushes right."""
    force = CART_FORCE if action == 1 else -CART_FORCE
    total_mass = CART_MASS + POLE_MASS
    pm_len = POLE_MASS * POLE_HALF_LENGTH
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    tmp = (force + pm_len * theta_dot * theta_dot * sin_t) / total_mass
    theta_acc = (CART_GRAVITY * sin_t - cos_t * tmp) / (
        POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_t * cos_t / total_mass)
    )
    x_acc = tmp - pm_len * theta_acc * cos_t / total_mass
    x = x + CART_DT * x_dot
    x_dot = x_dot + CART_DT * x_acc
    theta = theta + CART_DT * theta_dot
    theta_dot = theta_dot + CART_DT * theta_acc
    done = abs(x) > CART_X_LIMIT or abs(theta) > CART_THETA_LIMIT
    return x, x_dot, theta, theta_dot, done


# --------------------------------------------------------------------------
# pendulum swing-up
# --------------------------------------------------------------------------

PEND_GRAVITY = 10.0
PEND_MASS = 1.0
PEND_LENGTH = 1.0
PEND_DT = 0.05
PEND_MAX_TORQUE = 2.0
PEND_MAX_SPEED = 8.0


@njit(cache=True)
def wrap_angle(x):
    return ((x + math.pi) % (2.0 * math.pi)) - math.pi


@njit(cache=True)
def pendulum_step(theta, theta_dot, torque):
    """One step of the torque-limited pendulum; returns (theta, theta_dot, cost).

    theta = 0 is upright; the per-step cost is charged on the state the
    torque was applied in.
    """
    if torque > PEND_MAX_TORQUE:
        torque = PEND_MAX_TORQUE
    elif torque < -PEND_MAX_TORQUE:
        torque = -PEND_MAX_TORQUE
    a = wrap_angle(theta)
    cost = a * a + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque
    theta_dot = theta_dot + (
        3.0 * PEND_GRAVITY / (2.0 * PEND_LENGTH) * math.sin(theta)
        + 3.0 / (PEND_MASS * PEND_LENGTH * PEND_LENGTH) * torque
    ) * PEND_DT
    if theta_dot > PEND_MAX_SPEED:
        theta_dot = PEND_MAX_SPEED
    elif theta_dot < -PEND_MAX_SPEED:
        theta_dot = -PEND_MAX_SPEED
    theta = theta + theta_dot * PEND_DT
    return theta, theta_dot, cost


# --------------------------------------------------------------------------
# acrobot
# --------------------------------------------------------------------------

ACRO_DT = 0.2
ACRO_M1 = 1.0
ACRO_M2 = 1.0
ACRO_L1 = 1.0
ACRO_LC1 = 0.5
ACRO_LC2 = 0.5
ACRO_I1 = 1.0
ACRO_I2 = 1.0
ACRO_GRAVITY = 9.8
ACRO_MAX_VEL1 = 4.0 * math.pi
ACRO_MAX_VEL2 = 9.0 * math.pi


@njit(cache=True)
def _acrobot_dsdt(th1, th2, w1, w2, torque):
    d1 = (
        ACRO_M1 * ACRO_LC1 * ACRO_LC1
        + ACRO_M2
        * (ACRO_L1 * ACRO_L1 + ACRO_LC2 * ACRO_LC2 + 2.0 * ACRO_L1 * ACRO_LC2 * math.cos(th2))
        + ACRO_I1
        + ACRO_I2
    )
    d2 = ACRO_M2 * (ACRO_LC2 * ACRO_LC2 + ACRO_L1 * ACRO_LC2 * math.cos(th2)) + ACRO_I2
    phi2 = ACRO_M2 * ACRO_LC2 * ACRO_GRAVITY * math.cos(th1 + th2 - math.pi / 2.0)
    phi1 = (
        -ACRO_M2 * ACRO_L1 * ACRO_LC2 * w2 * w2 * math.sin(th2)
        - 2.0 * ACRO_M2 * ACRO_L1 * ACRO_LC2 * w2 * w1 * math.sin(th2)
        + (ACRO_M1 * ACRO_LC1 + ACRO_M2 * ACRO_L1) * ACRO_GRAVITY * math.cos(th1 - math.pi / 2.0)
        + phi2
    )
    a2 = (
        torque + d2 / d1 * phi1 - ACRO_M2 * ACRO_L1 * ACRO_LC2 * w1 * w1 * math.sin(th2) - phi2
    ) / (ACRO_M2 * ACRO_LC2 * ACRO_LC2 + ACRO_I2 - d2 * d2 / d1)
    a1 = -(d2 * a2 + phi1) / d1
    return w1, w2, a1, a2


@njit(cache=True)
def acrobot_step(th1, th2, w1, w2, action):
    """RK4 step of the two-link underactuated swing-up; action in {0,1,2}."""
    torque = float(action) - 1.0
    dt = ACRO_DT
    k1 = _acrobot_dsdt(th1, th2, w1, w2, torque)
    k2 = _acrobot_dsdt(
        th1 + 0.5 * dt * k1[0], th2 + 0.5 * dt * k1[1], w1 + 0.5 * dt * k1[2], w2 + 0.5 * dt * k1[3], torque
    )
    k3 = _acrobot_dsdt(
        th1 + 0.5 * dt * k2[0], th2 + 0.5 * dt * k2[1], w1 + 0.5 * dt * k2[2], w2 + 0.5 * dt * k2[3], torque
    )
    k4 = _acrobot_dsdt(th1 + dt * k3[0], th2 + dt * k3[1], w1 + dt * k3[2], w2 + dt * k3[3], torque)
    th1 = th1 + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    th2 = th2 + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    w1 = w1 + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    w2 = w2 + dt / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    th1 = wrap_angle(th1)
    th2 = wrap_angle(th2)
    if w1 > ACRO_MAX_VEL1:
        w1 = ACRO_MAX_VEL1
    elif w1 < -ACRO_MAX_VEL1:
        w1 = -ACRO_MAX_VEL1
    if w2 > ACRO_MAX_VEL2:
        w2 = ACRO_MAX_VEL2
    elif w2 < -ACRO_MAX_VEL2:
        w2 = -ACRO_MAX_VEL2
    done = -math.cos(th1) - math.cos(th1 + th2) > 1.0
    return th1, th2, w1, w2, done


# --------------------------------------------------------------------------
# mountain car
# --------------------------------------------------------------------------

MC_MIN_POSITION = -1.2
MC_MAX_POSITION = 0.6
MC_MAX_SPEED = 0.07
MC_GOAL_POSITION = 0.5
MC_FORCE = 0.001
MC_GRAVITY = 0.0025


@njit(cache=True)
def mountain_car_step(position, velocity, action):
    """One step of the underpowered car; action 0 reverse, 1 coast, 2 forward."""
    velocity = velocity + (action - 1) * MC_FORCE - MC_GRAVITY * math.cos(3.0 * position)
    if velocity > MC_MAX_SPEED:
        velocity = MC_MAX_SPEED
    elif velocity < -MC_MAX_SPEED:
        velocity = -MC_MAX_SPEED
    position = position + velocity
    if position > MC_MAX_POSITION:
        position = MC_MAX_POSITION
    elif position < MC_MIN_POSITION:
        position = MC_MIN_POSITION
    if position <= MC_MIN_POSITION and velocity < 0.0:
        velocity = 0.0
    done = position >= MC_GOAL_POSITION
    return position, velocity, done


# --------------------------------------------------------------------------
# falling-circle orientation arena (partially observable)
# --------------------------------------------------------------------------

ARENA_WIDTH = 400.0
ARENA_HEIGHT = 300.0
AGENT_HALF_WIDTH = 15.0
AGENT_SPEED = 4.0
CIRCLE_RADIUS = 15.0
CIRCLE_FALL_SPEED = 3.0
CIRCLE_SIDE_SPEED = 6.0
CIRCLES_PER_EPISODE = 4
SENSOR_RANGE = 500.0
SENSOR_ANGLES = np.array([-0.25, -0.125, 0.0, 0.125, 0.25]) * math.pi


@njit(cache=True)
def orientation_sensors(agent_x, cx, cy):
    """Five upward ray sensors fanned +/-45 degrees from vertical.

    Each value is the distance to the first circle intersection divided by
    SENSOR_RANGE, 1.0 when the ray misses.  A circle outside the fan is
    invisible, which is what makes the task partially observable.
    """
    out = np.ones(5)
    for k in range(5):
        dx = math.sin(SENSOR_ANGLES[k])
        dy = math.cos(SENSOR_ANGLES[k])
        ox = agent_x - cx
        oy = -cy
        b = ox * dx + oy * dy
        c = ox * ox + oy * oy - CIRCLE_RADIUS * CIRCLE_RADIUS
        disc = b * b - c
        if disc >= 0.0:
            root = math.sqrt(disc)
            t = -b - root
            if t < 0.0:
                t = -b + root
            if t >= 0.0:
                v = t / SENSOR_RANGE
                if v > 1.0:
                    v = 1.0
                out[k] = v
    return out


@njit(cache=True)
def orientation_move(agent_x, cx, cy, cdir, action):
    """Advance agent and circle one tick; returns landed=True when cy hits 0."""
    agent_x = agent_x + (action - 1) * AGENT_SPEED
    if agent_x < AGENT_HALF_WIDTH:
        agent_x = AGENT_HALF_WIDTH
    elif agent_x > ARENA_WIDTH - AGENT_HALF_WIDTH:
        agent_x = ARENA_WIDTH - AGENT_HALF_WIDTH
    cx = cx + cdir * CIRCLE_SIDE_SPEED
    if cx < CIRCLE_RADIUS:
        cx = 2.0 * CIRCLE_RADIUS - cx
        cdir = -cdir
    elif cx > ARENA_WIDTH - CIRCLE_RADIUS:
        cx = 2.0 * (ARENA_WIDTH - CIRCLE_RADIUS) - cx
        cdir = -cdir
    cy = cy - CIRCLE_FALL_SPEED
    landed = cy <= 0.0
    return agent_x, cx, cy, cdir, landed


# --------------------------------------------------------------------------
# fused policy rollouts, one per task
# --------------------------------------------------------------------------


@njit(cache=True)
def rollout_cart_pole(w_in, w_hh, b_h, w_out, w_oo, b_o, x, x_dot, theta, theta_dot, cap):
    nh = b_h.shape[0]
    no = b_o.shape[0]
    h = np.zeros(nh)
    o = np.zeros(no)
    h2 = np.zeros(nh)
    o2 = np.zeros(no)
    obs = np.zeros(6)
    ret = 0.0
    steps = 0
    done = False
    for _ in range(cap):
        obs[0] = x
        obs[1] = x_dot
        obs[2] = theta
        obs[3] = theta_dot
        rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, obs, h2, o2)
        for i in range(nh):
            h[i] = h2[i]
        for i in range(no):
            o[i] = o2[i]
        action = argmax_first(o, 2)
        x, x_dot, theta, theta_dot, done = cart_pole_step(x, x_dot, theta, theta_dot, action)
        ret += 1.0
        steps += 1
        if done:
            break
    return ret, steps, done


@njit(cache=True)
def rollout_pendulum(w_in, w_hh, b_h, w_out, w_oo, b_o, theta, theta_dot, cap):
    nh = b_h.shape[0]
    no = b_o.shape[0]
    h = np.zeros(nh)
    o = np.zeros(no)
    h2 = np.zeros(nh)
    o2 = np.zeros(no)
    obs = np.zeros(6)
    ret = 0.0
    for _ in range(cap):
        obs[0] = math.cos(theta)
        obs[1] = math.sin(theta)
        obs[2] = theta_dot
        rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, obs, h2, o2)
        for i in range(nh):
            h[i] = h2[i]
        for i in range(no):
            o[i] = o2[i]
        # same expression as interpret_box over (-2, 2)
        torque = -PEND_MAX_TORQUE + (o[0] + 1.0) * 0.5 * (PEND_MAX_TORQUE - -PEND_MAX_TORQUE)
        theta, theta_dot, cost = pendulum_step(theta, theta_dot, torque)
        ret -= cost
    return ret, cap, False


@njit(cache=True)
def rollout_acrobot(w_in, w_hh, b_h, w_out, w_oo, b_o, th1, th2, v1, v2, cap):
    nh = b_h.shape[0]
    no = b_o.shape[0]
    h = np.zeros(nh)
    o = np.zeros(no)
    h2 = np.zeros(nh)
    o2 = np.zeros(no)
    obs = np.zeros(6)
    ret = 0.0
    steps = 0
    done = False
    for _ in range(cap):
        obs[0] = math.cos(th1)
        obs[1] = math.sin(th1)
        obs[2] = math.cos(th2)
        obs[3] = math.sin(th2)
        obs[4] = v1
        obs[5] = v2
        rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, obs, h2, o2)
        for i in range(nh):
            h[i] = h2[i]
        for i in range(no):
            o[i] = o2[i]
        action = argmax_first(o, 3)
        th1, th2, v1, v2, done = acrobot_step(th1, th2, v1, v2, action)
        steps += 1
        if done:
            break
        ret -= 1.0
    return ret, steps, done


@njit(cache=True)
def rollout_mountain_car(w_in, w_hh, b_h, w_out, w_oo, b_o, position, velocity, cap):
    nh = b_h.shape[0]
    no = b_o.shape[0]
    h = np.zeros(nh)
    o = np.zeros(no)
    h2 = np.zeros(nh)
    o2 = np.zeros(no)
    obs = np.zeros(6)
    ret = 0.0
    steps = 0
    done = False
    for _ in range(cap):
        obs[0] = position
        obs[1] = velocity
        rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, obs, h2, o2)
        for i in range(nh):
            h[i] = h2[i]
        for i in range(no):
            o[i] = o2[i]
        action = argmax_first(o, 3)
        position, velocity, done = mountain_car_step(position, velocity, action)
        ret -= 1.0
        steps += 1
        if done:
            break
    return ret, steps, done


@njit(cache=True)
def rollout_orientation(w_in, w_hh, b_h, w_out, w_oo, b_o, spawn_x, spawn_dir, cap):
    nh = b_h.shape[0]
    no = b_o.shape[0]
    h = np.zeros(nh)
    o = np.zeros(no)
    h2 = np.zeros(nh)
    o2 = np.zeros(no)
    obs = np.zeros(6)
    agent_x = ARENA_WIDTH * 0.5
    idx = 0
    cx = spawn_x[0]
    cy = ARENA_HEIGHT
    cdir = spawn_dir[0]
    ret = 0.0
    steps = 0
    for _ in range(cap):
        sensors = orientation_sensors(agent_x, cx, cy)
        for i in range(5):
            obs[i] = sensors[i]
        rnn_step(w_in, w_hh, b_h, w_out, w_oo, b_o, h, o, obs, h2, o2)
        for i in range(nh):
            h[i] = h2[i]
        for i in range(no):
            o[i] = o2[i]
        action = argmax_first(o, 3)
        agent_x, cx, cy, cdir, landed = orientation_move(agent_x, cx, cy, cdir, action)
        steps += 1
        if landed:
            score = 1.0 - abs(agent_x - cx) / ARENA_WIDTH
            if score > 0.0:
                ret += score
            idx += 1
            if idx >= spawn_x.shape[0]:
                break
            cx = spawn_x[idx]
            cy = ARENA_HEIGHT
            cdir = spawn_dir[idx]
    return ret, steps, False
