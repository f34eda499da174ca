"""Hot numeric kernels with a numba path and a numpy / pure-Python fallback.

Each public kernel dispatches on :data:`swarmload._accel.USE_NUMBA`.  The
fallback implementations are kept importable regardless of the flag so the
test suite and ``benchmarks/bench_kernels.py`` can compare both.
"""

from __future__ import annotations

import heapq
from collections.abc import Callable
from typing import NamedTuple

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------- features


@njit
def _window_features_jit(t_s, v, starts, stops):
    n_win = starts.shape[0]
    out = np.empty((n_win, 4))
    for w in range(n_win):
        a = starts[w]
        b = stops[w]
        n = b - a
        if n < 2:
            out[w, :] = np.nan
            continue
        sv = 0.0
        st = 0.0
        for i in range(a, b):
            sv += v[i]
            st += t_s[i]
        mv = sv / n
        mt = st / n
        svv = 0.0
        stt = 0.0
        stv = 0.0
        for i in range(a, b):
            dv = v[i] - mv
            dt = t_s[i] - mt
            svv += dv * dv
            stt += dt * dt
            stv += dt * dv
        g = 0.0
        for i in range(a + 1, b):
            g += (v[i] - v[i - 1]) / (t_s[i] - t_s[i - 1])
        out[w, 0] = mv
        out[w, 1] = svv / n
        out[w, 2] = g / (n - 1)
        out[w, 3] = stv / stt if stt > 0.0 else 0.0
    return out


def _window_features_numpy(t_s, v, starts, stops):
    n_win = starts.shape[0]
    out = np.full((n_win, 4), np.nan)
    if n_win == 0:
        return out
    counts = stops - starts
    width = int(counts.max()) if counts.size else 0
    if width < 2:
        return out
    idx = starts[:, None] + np.arange(width)[None, :]
    mask = idx < stops[:, None]
    idx = np.where(mask, idx, 0)
    tv = np.where(mask, t_s[idx], 0.0)
    vv = np.where(mask, v[idx], 0.0)
    n = np.maximum(counts, 1).astype(float)
    mv = vv.sum(axis=1) / n
    mt = tv.sum(axis=1) / n
    dv = np.where(mask, vv - mv[:, None], 0.0)
    dt = np.where(mask, tv - mt[:, None], 0.0)
    var = (dv * dv).sum(axis=1) / n
    stt = (dt * dt).sum(axis=1)
    stv = (dt * dv).sum(axis=1)
    slope = np.divide(stv, stt, out=np.zeros_like(stv), where=stt > 0.0)
    pair = mask[:, 1:] & mask[:, :-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        step = np.where(pair, (vv[:, 1:] - vv[:, :-1]) / np.where(pair, tv[:, 1:] - tv[:, :-1], 1.0), 0.0)
    grad = step.sum(axis=1) / np.maximum(counts - 1, 1)
    ok = counts >= 2
    out[ok, 0] = mv[ok]
    out[ok, 1] = var[ok]
    out[ok, 2] = grad[ok]
    out[ok, 3] = slope[ok]
    return out


def window_features(t_s, v, starts, stops, *, use_numba: bool | None = None) -> np.ndarray:
    """Features of ``v[starts[k]:stops[k]]`` for each window ``k``.

    Returns an ``(n_windows, 4)`` array of (mean, population variance, average
    gradient, least-squares slope); rows with fewer than two samples are NaN.
    ``t_s`` is time in seconds and must be strictly increasing.
    """
    t_s = np.ascontiguousarray(t_s, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    stops = np.ascontiguousarray(stops, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _window_features_jit(t_s, v, starts, stops)
    return _window_features_numpy(t_s, v, starts, stops)


# ------------------------------------------------------------- grid search

# Priority key packs (f, h, cell) into one int64 so both implementations pop
# in exactly the same order.
_CELL_BITS = 22
_H_BITS = 20


@njit
def _heap_push(heap, size, key):
    i = size
    heap[i] = key
    while i > 0:
        p = (i - 1) >> 1
        if heap[p] <= heap[i]:
            break
        tmp = heap[p]
        heap[p] = heap[i]
        heap[i] = tmp
        i = p
    return size + 1


@njit
def _heap_pop(heap, size):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    i = 0
    while True:
        lft = 2 * i + 1
        if lft >= size:
            break
        c = lft
        if lft + 1 < size and heap[lft + 1] < heap[lft]:
            c = lft + 1
        if heap[i] <= heap[c]:
            break
        tmp = heap[c]
        heap[c] = heap[i]
        heap[i] = tmp
        i = c
    return top, size


@njit
def _astar_jit(passable, width, start, goal):
    n = passable.shape[0]
    height = n // width
    g = np.full(n, -1, np.int64)
    parent = np.full(n, -1, np.int64)
    closed = np.zeros(n, np.bool_)
    heap = np.empty(4 * n + 4, np.int64)
    gx = goal % width
    gy = goal // width
    h0 = abs(start % width - gx) + abs(start // width - gy)
    g[start] = 0
    size = _heap_push(heap, 0, (h0 << (_H_BITS + _CELL_BITS)) | (h0 << _CELL_BITS) | start)
    cmask = (1 << _CELL_BITS) - 1
    dxs = (1, -1, 0, 0)
    dys = (0, 0, 1, -1)
    found = False
    while size > 0:
        key, size = _heap_pop(heap, size)
        cur = key & cmask
        if closed[cur]:
            continue
        if cur == goal:
            found = True
            break
        closed[cur] = True
        cx = cur % width
        cy = cur // width
        for k in range(4):
            nx = cx + dxs[k]
            ny = cy + dys[k]
            if nx < 0 or ny < 0 or nx >= width or ny >= height:
                continue
            nb = ny * width + nx
            if closed[nb] or not passable[nb]:
                continue
            ng = g[cur] + 1
            if g[nb] == -1 or ng < g[nb]:
                g[nb] = ng
                parent[nb] = cur
                h = abs(nx - gx) + abs(ny - gy)
                if size >= heap.shape[0]:
                    bigger = np.empty(heap.shape[0] * 2, np.int64)
                    bigger[:size] = heap[:size]
                    heap = bigger
                size = _heap_push(heap, size, ((ng + h) << (_H_BITS + _CELL_BITS)) | (h << _CELL_BITS) | nb)
    if not found:
        return np.empty(0, np.int64)
    length = g[goal] + 1
    path = np.empty(length, np.int64)
    cur = goal
    for i in range(length - 1, -1, -1):
        path[i] = cur
        cur = parent[cur]
    return path


def _astar_python(passable, width, start, goal):
    n = passable.shape[0]
    height = n // width
    gx, gy = goal % width, goal // width
    shift_f = _H_BITS + _CELL_BITS
    cmask = (1 << _CELL_BITS) - 1
    g = {start: 0}
    parent = {start: -1}
    closed = set()
    h0 = abs(start % width - gx) + abs(start // width - gy)
    heap = [(h0 << shift_f) | (h0 << _CELL_BITS) | start]
    while heap:
        cur = heapq.heappop(heap) & cmask
        if cur in closed:
            continue
        if cur == goal:
            path = [cur]
            while parent[path[-1]] != -1:
                path.append(parent[path[-1]])
            return np.array(path[::-1], dtype=np.int64)
        closed.add(cur)
        cx, cy = cur % width, cur // width
        for nx, ny in ((cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)):
            if nx < 0 or ny < 0 or nx >= width or ny >= height:
                continue
            nb = ny * width + nx
            if nb in closed or not passable[nb]:
                continue
            ng = g[cur] + 1
            if nb not in g or ng < g[nb]:
                g[nb] = ng
                parent[nb] = cur
                h = abs(nx - gx) + abs(ny - gy)
                heapq.heappush(heap, ((ng + h) << shift_f) | (h << _CELL_BITS) | nb)
    return np.empty(0, dtype=np.int64)


def astar(passable, width: int, start: int, goal: int, *, use_numba: bool | None = None) -> np.ndarray:
    """Shortest 4-connected path on a flattened grid, start and goal inclusive.

    Returns an empty array when the goal is unreachable.  The start cell is
    allowed to be impassable (a vehicle may be standing inside an obstacle
    footprint); the goal must be passable.
    """
    passable = np.ascontiguousarray(passable, dtype=np.bool_)
    if passable.shape[0] >= (1 << _CELL_BITS):
        raise ValueError("grid too large for packed priority keys")
    if start == goal:
        return np.array([start], dtype=np.int64)
    if not passable[goal]:
        return np.empty(0, dtype=np.int64)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return _astar_jit(passable, np.int64(width), np.int64(start), np.int64(goal))
    return _astar_python(passable, width, int(start), int(goal))


# ------------------------------------------------------------ vehicle moves

MOVE_WAIT = 0
MOVE_STEP = 1
MOVE_ARRIVED = 2


def _advance_impl(order, paths, path_len, path_idx, cell, layer, occ, wait, shared):
    """Advance each vehicle in ``order`` one cell along its path.

    A vehicle enters its next cell only when no vehicle in the same reserved
    layer holds it; ``shared`` cells (launch zone) and layer 2 (enroute
    altitude) are never reserved.  Vehicles are processed in ``order`` so a
    lower-index vehicle that vacates a cell lets a follower take it this tick.
    """
    result = np.zeros(order.shape[0], np.int64)
    for k in range(order.shape[0]):
        i = order[k]
        idx = path_idx[i]
        if idx >= path_len[i] - 1:
            result[k] = MOVE_ARRIVED
            wait[i] = 0
            continue
        nxt = paths[i, idx + 1]
        lay = layer[i]
        if lay < 2 and not shared[nxt] and occ[lay, nxt] > 0:
            wait[i] += 1
            result[k] = MOVE_WAIT
            continue
        if lay < 2:
            occ[lay, cell[i]] -= 1
            occ[lay, nxt] += 1
        cell[i] = nxt
        path_idx[i] = idx + 1
        wait[i] = 0
        result[k] = MOVE_ARRIVED if idx + 1 >= path_len[i] - 1 else MOVE_STEP
    return result


_advance_jit = njit(_advance_impl)


def advance_vehicles(order, paths, path_len, path_idx, cell, layer, occ, wait, shared, *, use_numba=None):
    """Move vehicles one tick; mutates ``path_idx``, ``cell``, ``occ``, ``wait`` in place.

    Returns one of MOVE_WAIT / MOVE_STEP / MOVE_ARRIVED per entry of ``order``.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _advance_jit if use_numba else _advance_impl
    return fn(order, paths, path_len, path_idx, cell, layer, occ, wait, shared)


# -------------------------------------------------------------- artifacts


@njit
def _artifact_scan_jit(cell, width, ax, ay, live, hidden, threat, radius, detect_radius, spotter, reach, dwell):
    n = cell.shape[0]
    m = ax.shape[0]
    first_seen = np.full(m, -1, np.int64)
    inside = np.zeros((n, m), np.bool_)
    occupied = np.zeros(m, np.bool_)
    reach_r = np.full(m, -1, np.int64)
    for a in range(m):
        if live[a]:
            r = radius[a] if threat[a] else -1
            reach_r[a] = max(r, detect_radius if hidden[a] else -1)
    for i in range(n):
        if not (spotter[i] or reach[i]):
            continue
        x = cell[i] % width
        y = cell[i] // width
        for a in range(m):
            d = max(abs(x - ax[a]), abs(y - ay[a]))
            if d > reach_r[a]:
                continue
            if spotter[i] and hidden[a] and first_seen[a] < 0 and d <= detect_radius:
                first_seen[a] = i
            if reach[i] and threat[a] and d <= radius[a]:
                inside[i, a] = True
                occupied[a] = True
    for a in range(m):
        if live[a] and threat[a] and not occupied[a]:
            dwell[:, a] = 0
    return first_seen, inside, occupied


def _artifact_scan_numpy(cell, width, ax, ay, live, hidden, threat, radius, detect_radius, spotter, reach, dwell):
    d = np.maximum(np.abs((cell % width)[:, None] - ax), np.abs((cell // width)[:, None] - ay))
    seen = (d <= detect_radius) & spotter[:, None] & (live & hidden)
    first_seen = np.where(seen.any(axis=0), seen.argmax(axis=0), -1).astype(np.int64)
    inside = (d <= radius) & reach[:, None] & (live & threat)
    occupied = inside.any(axis=0)
    dwell[:, live & threat & ~occupied] = 0
    return first_seen, inside, occupied


def artifact_scan(cell, width, ax, ay, live, hidden, threat, radius, detect_radius, spotter, reach, dwell, *, use_numba=None):
    """Chebyshev proximity of every vehicle to every artifact.

    Returns ``(first_seen, inside, occupied)``: the lowest-index spotter within
    ``detect_radius`` of each live hidden artifact (-1 if none), the
    vehicle-by-artifact mask of reachable vehicles inside each live threat's
    radius, and whether each threat has anyone inside.  Dwell counters of
    live threats with nobody inside are reset in place.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _artifact_scan_jit if use_numba else _artifact_scan_numpy
    return fn(cell, np.int64(width), ax, ay, live, hidden, threat, radius, np.int64(detect_radius), spotter, reach, dwell)


# ---------------------------------------------------------- fleet upkeep


@njit
def _comm_update_jit(r, cell, connected, drop_p, restore_p, indoor):
    changed = np.empty(cell.shape[0], np.int64)
    k = 0
    for i in range(cell.shape[0]):
        c = cell[i]
        if connected[i]:
            new = r[i] >= drop_p[c]
        else:
            new = r[i] < restore_p[c]
        new = new and not indoor[c]
        if new != connected[i]:
            connected[i] = new
            changed[k] = i
            k += 1
    return changed[:k]


def _comm_update_numpy(r, cell, connected, drop_p, restore_p, indoor):
    new = np.where(connected, r >= drop_p[cell], r < restore_p[cell]) & ~indoor[cell]
    changed = np.flatnonzero(new != connected)
    connected[:] = new
    return changed


def comm_update(r, cell, connected, drop_p, restore_p, indoor, *, use_numba=None):
    """One Bernoulli drop/restore draw per vehicle; indoor cells force a disconnect.

    ``r`` holds one uniform draw per vehicle.  Updates ``connected`` in place
    and returns the indices whose state flipped, ascending.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _comm_update_jit if use_numba else _comm_update_numpy
    return fn(r, cell, connected, drop_p, restore_p, indoor)


@njit
def _drain_battery_jit(battery, drain, airborne, eligible, rtl_level):
    n = battery.shape[0]
    low = np.empty(n, np.int64)
    dead = np.empty(n, np.int64)
    nl = 0
    nd = 0
    for i in range(n):
        if airborne[i]:
            b = battery[i] - drain[i]
            battery[i] = b if b > 0.0 else 0.0
        if eligible[i] and battery[i] <= rtl_level:
            low[nl] = i
            nl += 1
        if airborne[i] and battery[i] <= 0.0:
            dead[nd] = i
            nd += 1
    return low[:nl], dead[:nd]


def _drain_battery_numpy(battery, drain, airborne, eligible, rtl_level):
    battery[airborne] -= drain[airborne]
    np.maximum(battery, 0.0, out=battery)
    return np.flatnonzero(eligible & (battery <= rtl_level)), np.flatnonzero(airborne & (battery <= 0.0))


def drain_battery(battery, drain, airborne, eligible, rtl_level, *, use_numba=None):
    """Drain airborne vehicles by one tick, clamped at zero.

    Returns ``(low, dead)``: eligible vehicles at or below ``rtl_level`` and
    airborne vehicles that are now empty.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _drain_battery_jit if use_numba else _drain_battery_numpy
    return fn(battery, drain, airborne, eligible, float(rtl_level))


# ------------------------------------------------------- per-tick stages
#
# Each stage below derives its masks from raw simulator state inside one
# compiled call and hands back only the sparse indices Python has to act on.

ART_HIDDEN = 0
ART_NEUTRALIZED = 2


@njit
def _artifact_tick_jit(
    cell, width, status, band, has_camera, alive_lut, ax, ay, present, state, threat, radius, detect_radius, reach_band, dwell
):
    n = cell.shape[0]
    m = ax.shape[0]
    live = np.empty(m, np.bool_)
    hidden = np.empty(m, np.bool_)
    any_live = False
    for a in range(m):
        live[a] = present[a] and state[a] != ART_NEUTRALIZED
        hidden[a] = state[a] == ART_HIDDEN
        any_live = any_live or live[a]
    if not any_live:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64), np.zeros((n, m), np.bool_)
    spotter = np.empty(n, np.bool_)
    reach = np.empty(n, np.bool_)
    for i in range(n):
        alive = alive_lut[status[i]]
        spotter[i] = has_camera[i] and alive
        reach[i] = alive and band[i] <= reach_band
    first_seen, inside, occupied = _artifact_scan_jit(
        cell, width, ax, ay, live, hidden, threat, radius, detect_radius, spotter, reach, dwell
    )
    seen_a = np.flatnonzero(first_seen >= 0)
    return seen_a, first_seen[seen_a], np.flatnonzero(occupied), inside


def _artifact_tick_numpy(
    cell, width, status, band, has_camera, alive_lut, ax, ay, present, state, threat, radius, detect_radius, reach_band, dwell
):
    live = present & (state != ART_NEUTRALIZED)
    if not live.any():
        e = np.empty(0, np.int64)
        return e, e, e, np.zeros((cell.shape[0], ax.shape[0]), bool)
    alive = alive_lut[status]
    first_seen, inside, occupied = _artifact_scan_numpy(
        cell, width, ax, ay, live, state == ART_HIDDEN, threat, radius, detect_radius,
        has_camera & alive, alive & (band <= reach_band), dwell,
    )
    seen_a = np.flatnonzero(first_seen >= 0)
    return seen_a, first_seen[seen_a], np.flatnonzero(occupied), inside


def artifact_tick(
    cell, width, status, band, has_camera, alive_lut, ax, ay, present, state, threat, radius, detect_radius, reach_band, dwell,
    *, use_numba=None,
):
    """:func:`artifact_scan` with its masks built from raw vehicle and artifact state.

    Spotters are alive camera vehicles; vehicles at or below ``reach_band``
    can be caught by threats.  Returns ``(seen_artifacts, spotters,
    occupied_artifacts, inside)`` where the first three are index arrays.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _artifact_tick_jit if use_numba else _artifact_tick_numpy
    return fn(
        cell, np.int64(width), status, band, has_camera, alive_lut, ax, ay, present, state, threat, radius,
        np.int64(detect_radius), np.int64(reach_band), dwell,
    )


@njit
def _move_tick_jit(
    status, moving_lut, stranded, paths, path_len, path_idx, cell, layer, occ, wait, shared, is_uav, battery, drain,
    blocked, block_ticks,
):
    n = status.shape[0]
    order = np.empty(n, np.int64)
    k = 0
    for i in range(n):
        if moving_lut[status[i]] and path_idx[i] < path_len[i] - 1 and not stranded[i]:
            order[k] = i
            k += 1
    order = order[:k]
    res = _advance_jit(order, paths, path_len, path_idx, cell, layer, occ, wait, shared)
    unblock = np.empty(k, np.int64)
    overdue = np.empty(k, np.int64)
    arrived = np.empty(k, np.int64)
    nu = no = na = 0
    for j in range(k):
        i = order[j]
        if res[j] != MOVE_WAIT:
            if not is_uav[i]:
                battery[i] -= drain[i]
            if blocked[i]:
                unblock[nu] = i
                nu += 1
            if res[j] == MOVE_ARRIVED:
                arrived[na] = i
                na += 1
        elif wait[i] > block_ticks and (not blocked[i] or wait[i] % block_ticks == 0):
            overdue[no] = i
            no += 1
    return unblock[:nu], overdue[:no], arrived[:na]


def _move_tick_numpy(
    status, moving_lut, stranded, paths, path_len, path_idx, cell, layer, occ, wait, shared, is_uav, battery, drain,
    blocked, block_ticks,
):
    order = np.flatnonzero(moving_lut[status] & (path_idx < path_len - 1) & ~stranded)
    res = _advance_impl(order, paths, path_len, path_idx, cell, layer, occ, wait, shared)
    stepped = order[res != MOVE_WAIT]
    ugv = stepped[~is_uav[stepped]]
    battery[ugv] -= drain[ugv]
    waiting = order[res == MOVE_WAIT]
    w = wait[waiting]
    overdue = waiting[(w > block_ticks) & (~blocked[waiting] | (w % block_ticks == 0))]
    return stepped[blocked[stepped]], overdue, order[res == MOVE_ARRIVED]


def move_tick(
    status, moving_lut, stranded, paths, path_len, path_idx, cell, layer, occ, wait, shared, is_uav, battery, drain,
    blocked, block_ticks, *, use_numba=None,
):
    """Advance every moving vehicle one tick (see :func:`advance_vehicles`).

    Ground vehicles that moved pay their drain.  Returns ``(unblock, overdue,
    arrived)``: blocked vehicles that moved again, waiting vehicles due a
    blocked mark or a periodic replan, and vehicles that reached their path end.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _move_tick_jit if use_numba else _move_tick_numpy
    return fn(
        status, moving_lut, stranded, paths, path_len, path_idx, cell, layer, occ, wait, shared, is_uav, battery, drain,
        blocked, np.int64(block_ticks),
    )


@njit
def _comm_tick_jit(r, cell, connected, drop_p, restore_p, indoor):
    changed = _comm_update_jit(r, cell, connected, drop_p, restore_p, indoor)
    up = connected[changed]
    return changed[~up], changed[up]


def _comm_tick_numpy(r, cell, connected, drop_p, restore_p, indoor):
    changed = _comm_update_numpy(r, cell, connected, drop_p, restore_p, indoor)
    up = connected[changed]
    return changed[~up], changed[up]


def comm_tick(r, cell, connected, drop_p, restore_p, indoor, *, use_numba=None):
    """:func:`comm_update` split into ``(lost, restored)`` index arrays."""
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _comm_tick_jit if use_numba else _comm_tick_numpy
    return fn(r, cell, connected, drop_p, restore_p, indoor)


@njit
def _battery_tick_jit(battery, drain, is_uav, band, stranded, status, working_lut, rtl_level):
    n = battery.shape[0]
    airborne = np.empty(n, np.bool_)
    eligible = np.empty(n, np.bool_)
    for i in range(n):
        airborne[i] = is_uav[i] and band[i] > 0 and not stranded[i]
        eligible[i] = working_lut[status[i]]
    return _drain_battery_jit(battery, drain, airborne, eligible, rtl_level)


def _battery_tick_numpy(battery, drain, is_uav, band, stranded, status, working_lut, rtl_level):
    airborne = is_uav & (band > 0) & ~stranded
    return _drain_battery_numpy(battery, drain, airborne, working_lut[status], rtl_level)


def battery_tick(battery, drain, is_uav, band, stranded, status, working_lut, rtl_level, *, use_numba=None):
    """:func:`drain_battery` for airborne UAVs, with working-status vehicles eligible for the low warning."""
    if use_numba is None:
        use_numba = USE_NUMBA
    fn = _battery_tick_jit if use_numba else _battery_tick_numpy
    return fn(battery, drain, is_uav, band, stranded, status, working_lut, float(rtl_level))


class TickKernels(NamedTuple):
    artifact: Callable
    move: Callable
    comm: Callable
    battery: Callable


def tick_kernels(use_numba: bool | None = None) -> TickKernels:
    """The raw per-tick stage implementations, bound once to skip wrapper dispatch in the hot loop.

    Integer arguments must already be Python or numpy ints.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        return TickKernels(_artifact_tick_jit, _move_tick_jit, _comm_tick_jit, _battery_tick_jit)
    return TickKernels(_artifact_tick_numpy, _move_tick_numpy, _comm_tick_numpy, _battery_tick_numpy)
