"""Jitted inner loops shared by the simulation engine and the module-level ops.

Conventions (fixed across the package):

* Plaquette sites live on an L x L torus, arrays indexed ``[y, x]``.
* Qubits sit on the bonds between adjacent plaquettes: ``config[0, y, x]`` is
  the bond joining (x, y) to (x+1, y); ``config[1, y, x]`` joins (x, y) to
  (x, y+1).  Flat edge index = ``d * L*L + y * L + x``.
* The autonomous field lives on an L x L x H box, arrays ``[z, y, x]``, torus
  in x/y, mirror boundary below z=0 (the fictitious cell equals the cell
  itself) and absorbing zero above z=H-1.  Sources sit at z=0.
* All randomness flows through uint64[4] xoshiro states (see rng.py); every
  kernel that draws is deterministic given its entry state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .rng import below, geometric_gap, next_u64, seed_state, uniform

_U64 = np.uint64


# ---------------------------------------------------------------------------
# lattice primitives
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def syndrome_into(config, out):
    """Plaquette parities of the 4 incident bond bits, written into ``out``."""
    L = out.shape[0]
    for y in range(L):
        ym = y - 1 if y > 0 else L - 1
        for x in range(L):
            xm = x - 1 if x > 0 else L - 1
            out[y, x] = (
                config[0, y, x] ^ config[0, y, xm] ^ config[1, y, x] ^ config[1, ym, x]
            )


@njit(cache=True, nogil=True, inline="always")
def toggle_edge(config, true_s, d, y, x):
    """Flip one bond and the true syndrome of its two plaquettes.

    Returns the change in the number of true anyons (-2, 0 or +2).
    """
    L = true_s.shape[0]
    config[d, y, x] ^= 1
    if d == 0:
        y2 = y
        x2 = x + 1 if x + 1 < L else 0
    else:
        y2 = y + 1 if y + 1 < L else 0
        x2 = x
    delta = 0
    true_s[y, x] ^= 1
    delta += 1 if true_s[y, x] else -1
    true_s[y2, x2] ^= 1
    delta += 1 if true_s[y2, x2] else -1
    return delta


@njit(cache=True, nogil=True)
def homology_bits(config):
    """Winding parities of an error configuration across the two wrap seams."""
    L = config.shape[1]
    h1 = 0
    for y in range(L):
        h1 ^= config[0, y, L - 1]
    h2 = 0
    for x in range(L):
        h2 ^= config[1, L - 1, x]
    return h1, h2


@njit(cache=True, nogil=True)
def count_ones(arr):
    n = 0
    flat = arr.ravel()
    for i in range(flat.size):
        if flat[i]:
            n += 1
    return n


# ---------------------------------------------------------------------------
# noise maps
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def flip_edges(config, true_s, p, rng):
    """Toggle every bond independently with probability p (gap-sampled)."""
    L = true_s.shape[0]
    n_edges = 2 * L * L
    n_sites = L * L
    delta = 0
    if p <= 0.0:
        return 0
    if p >= 1.0:
        for d in range(2):
            for y in range(L):
                for x in range(L):
                    delta += toggle_edge(config, true_s, d, y, x)
        return delta
    log1m = np.log(1.0 - p)
    idx = geometric_gap(rng, log1m)
    while idx < n_edges:
        d = idx // n_sites
        r = idx % n_sites
        delta += toggle_edge(config, true_s, d, r // L, r % L)
        idx += 1 + geometric_gap(rng, log1m)
    return delta


@njit(cache=True, nogil=True)
def measure_all(true_s, rec, q, rng):
    """Refresh the recorded syndrome; each site is wrong with probability q."""
    L = true_s.shape[0]
    n_sites = L * L
    for y in range(L):
        for x in range(L):
            rec[y, x] = true_s[y, x]
    if q <= 0.0:
        return
    if q >= 1.0:
        for y in range(L):
            for x in range(L):
                rec[y, x] ^= 1
        return
    log1m = np.log(1.0 - q)
    flat = rec.ravel()
    idx = geometric_gap(rng, log1m)
    while idx < n_sites:
        flat[idx] ^= 1
        idx += 1 + geometric_gap(rng, log1m)


@njit(cache=True, nogil=True, inline="always")
def local_flip(config, true_s, d, y, x, p, rng):
    """Single-bond Bernoulli(p) flip."""
    if uniform(rng) < p:
        return toggle_edge(config, true_s, d, y, x)
    return 0


@njit(cache=True, nogil=True, inline="always")
def local_measure(true_s, rec, y, x, q, rng):
    """Refresh one site's record; wrong with probability q."""
    e = 1 if uniform(rng) < q else 0
    rec[y, x] = true_s[y, x] ^ e


# ---------------------------------------------------------------------------
# attractive field
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def field_sweep(src, dst, rec, zero_plane):
    """One synchronous field update: six-neighbor average, then +1 per source.

    Double buffered: all reads come from ``src``.  ``zero_plane`` is an (L, L)
    array of zeros standing in for the absorbing layer above the box.
    """
    H = src.shape[0]
    L = src.shape[1]
    inv6 = 1.0 / 6.0
    for z in range(H):
        below_l = src[z - 1] if z > 0 else src[0]
        above_l = src[z + 1] if z + 1 < H else zero_plane
        for y in range(L):
            yu = y - 1 if y > 0 else L - 1
            yd = y + 1 if y + 1 < L else 0
            row = src[z, y]
            up = src[z, yu]
            dn = src[z, yd]
            bl = below_l[y]
            ab = above_l[y]
            out = dst[z, y]
            out[0] = (row[L - 1] + row[1 % L] + up[0] + dn[0] + bl[0] + ab[0]) * inv6
            for x in range(1, L - 1):
                out[x] = (row[x - 1] + row[x + 1] + up[x] + dn[x] + bl[x] + ab[x]) * inv6
            if L > 1:
                out[L - 1] = (
                    row[L - 2] + row[0] + up[L - 1] + dn[L - 1] + bl[L - 1] + ab[L - 1]
                ) * inv6
    for y in range(L):
        for x in range(L):
            if rec[y, x]:
                dst[0, y, x] += 1.0


@njit(cache=True, nogil=True, inline="always")
def field_local(field, rec, z, y, x):
    """Asynchronous single-cell variant of the field update (in place)."""
    H = field.shape[0]
    L = field.shape[1]
    xl = x - 1 if x > 0 else L - 1
    xr = x + 1 if x + 1 < L else 0
    yu = y - 1 if y > 0 else L - 1
    yd = y + 1 if y + 1 < L else 0
    v = field[z, y, xl] + field[z, y, xr] + field[z, yu, x] + field[z, yd, x]
    v += field[z - 1, y, x] if z > 0 else field[0, y, x]
    if z + 1 < H:
        v += field[z + 1, y, x]
    v *= 1.0 / 6.0
    if z == 0 and rec[y, x]:
        v += 1.0
    field[z, y, x] = v


@njit(cache=True, nogil=True)
def explicit_plane(plane, kern, rec):
    """Superpose one decay kernel per recorded anyon into ``plane`` (adds)."""
    L = plane.shape[0]
    for sy in range(L):
        for sx in range(L):
            if rec[sy, sx]:
                for y in range(L):
                    ky = y - sy
                    if ky < 0:
                        ky += L
                    krow = kern[ky]
                    for x in range(L):
                        kx = x - sx
                        if kx < 0:
                            kx += L
                        plane[y, x] += krow[kx]


# ---------------------------------------------------------------------------
# anyon moves
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True, inline="always")
def move_anyon(config, true_s, rec, plane, y, x, rng):
    """Move the recorded anyon at (y, x) toward the steepest field neighbor.

    The four neighbor values are compared among themselves; an all-equal
    neighborhood has no gradient and the anyon stays.  Ties among maxima are
    broken uniformly.  A move flips the connecting bond, the true syndrome of
    both plaquettes, and the recorded occupation of both sites (so a move onto
    a recorded anyon annihilates the pair in the record).

    Returns the change in the number of true anyons.
    """
    L = true_s.shape[0]
    xl = x - 1 if x > 0 else L - 1
    xr = x + 1 if x + 1 < L else 0
    yu = y - 1 if y > 0 else L - 1
    yd = y + 1 if y + 1 < L else 0
    v0 = plane[y, xr]   # +x
    v1 = plane[y, xl]   # -x
    v2 = plane[yd, x]   # +y
    v3 = plane[yu, x]   # -y
    vmax = v0
    if v1 > vmax:
        vmax = v1
    if v2 > vmax:
        vmax = v2
    if v3 > vmax:
        vmax = v3
    vmin = v0
    if v1 < vmin:
        vmin = v1
    if v2 < vmin:
        vmin = v2
    if v3 < vmin:
        vmin = v3
    if vmax == vmin:
        return 0
    n_tie = 0
    if v0 == vmax:
        n_tie += 1
    if v1 == vmax:
        n_tie += 1
    if v2 == vmax:
        n_tie += 1
    if v3 == vmax:
        n_tie += 1
    pick = 0 if n_tie == 1 else below(rng, n_tie)
    d = -1
    k = 0
    if v0 == vmax:
        if k == pick:
            d = 0
        k += 1
    if d < 0 and v1 == vmax:
        if k == pick:
            d = 1
        k += 1
    if d < 0 and v2 == vmax:
        if k == pick:
            d = 2
        k += 1
    if d < 0 and v3 == vmax:
        d = 3
    if d == 0:
        delta = toggle_edge(config, true_s, 0, y, x)
        ty, tx = y, xr
    elif d == 1:
        delta = toggle_edge(config, true_s, 0, y, xl)
        ty, tx = y, xl
    elif d == 2:
        delta = toggle_edge(config, true_s, 1, y, x)
        ty, tx = yd, x
    else:
        delta = toggle_edge(config, true_s, 1, yu, x)
        ty, tx = yu, x
    rec[y, x] ^= 1
    rec[ty, tx] ^= 1
    return delta


@njit(cache=True, nogil=True, inline="always")
def local_anyon(config, true_s, rec, plane, y, x, rng):
    """Single-site anyon update: occupancy check, 1/2 coin, gradient move."""
    if rec[y, x] == 0:
        return 0
    if uniform(rng) < 0.5:
        return 0
    return move_anyon(config, true_s, rec, plane, y, x, rng)


@njit(cache=True, nogil=True)
def anyon_pass(config, true_s, rec, plane, sites, rng):
    """Synchronous anyon update: snapshot occupied sites, visit in random order.

    Each snapshot site still occupied when visited stays with probability 1/2,
    otherwise attempts a gradient move.  Returns the true-anyon count change.
    """
    L = true_s.shape[0]
    n = 0
    for y in range(L):
        for x in range(L):
            if rec[y, x]:
                sites[n, 0] = y
                sites[n, 1] = x
                n += 1
    for i in range(n - 1, 0, -1):
        j = below(rng, i + 1)
        ty = sites[i, 0]
        tx = sites[i, 1]
        sites[i, 0] = sites[j, 0]
        sites[i, 1] = sites[j, 1]
        sites[j, 0] = ty
        sites[j, 1] = tx
    delta = 0
    for k in range(n):
        y = sites[k, 0]
        x = sites[k, 1]
        if rec[y, x] == 0:
            continue
        if uniform(rng) < 0.5:
            continue
        delta += move_anyon(config, true_s, rec, plane, y, x, rng)
    return delta


# ---------------------------------------------------------------------------
# decoding drivers
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def verify_failed(config, c, tau_ver, explicit_mode, kern,
                  vcfg, vtrue, vrec, fa, fb, plane, zero_plane, sites, rng):
    """Decode a copy of ``config`` with perfect measurement; True on failure.

    Failure means anyons survive ``tau_ver`` rounds or the anyon-free residue
    carries nontrivial winding.  The caller's state is untouched; all scratch
    buffers are owned by the caller and overwritten here.
    """
    vcfg[:, :, :] = config
    syndrome_into(vcfg, vtrue)
    vrec[:, :] = vtrue
    n_any = count_ones(vtrue)
    if n_any > 0:
        if explicit_mode:
            for _ in range(tau_ver):
                plane[:, :] = 0.0
                explicit_plane(plane, kern, vrec)
                n_any += anyon_pass(vcfg, vtrue, vrec, plane, sites, rng)
                if n_any == 0:
                    break
        else:
            fa[:, :, :] = 0.0
            fb[:, :, :] = 0.0
            cur = fa
            buf = fb
            for _ in range(tau_ver):
                for _ in range(c):
                    field_sweep(cur, buf, vrec, zero_plane)
                    cur, buf = buf, cur
                n_any += anyon_pass(vcfg, vtrue, vrec, cur[0], sites, rng)
                if n_any == 0:
                    break
    if n_any != 0:
        return True
    h1, h2 = homology_bits(vcfg)
    return (h1 | h2) != 0


@njit(cache=True, nogil=True)
def sync_trial(L, H, c, p, q, cap, stride, tau_ver, explicit_mode, kern,
               seed, vseed):
    """One synchronous survival trial; returns (failure_time, censored).

    Each sequence applies the error map, a full noisy measurement and the
    compound decoder update (c field sweeps then one anyon pass, or an
    explicit field evaluation in explicit mode).  A noiseless copy is decoded
    every ``stride`` sequences to detect logical failure.
    """
    rng = np.empty(4, dtype=np.uint64)
    seed_state(rng, _U64(seed))
    vrng = np.empty(4, dtype=np.uint64)
    seed_state(vrng, _U64(vseed))

    config = np.zeros((2, L, L), dtype=np.uint8)
    true_s = np.zeros((L, L), dtype=np.uint8)
    rec = np.zeros((L, L), dtype=np.uint8)
    fa = np.zeros((H, L, L), dtype=np.float64)
    fb = np.zeros((H, L, L), dtype=np.float64)
    plane = np.zeros((L, L), dtype=np.float64)
    zero_plane = np.zeros((L, L), dtype=np.float64)
    sites = np.empty((L * L, 2), dtype=np.int64)
    vcfg = np.empty((2, L, L), dtype=np.uint8)
    vtrue = np.empty((L, L), dtype=np.uint8)
    vrec = np.empty((L, L), dtype=np.uint8)
    vfa = np.empty((H, L, L), dtype=np.float64)
    vfb = np.empty((H, L, L), dtype=np.float64)
    vplane = np.empty((L, L), dtype=np.float64)

    cur = fa
    buf = fb
    t = 0
    while t < cap:
        flip_edges(config, true_s, p, rng)
        measure_all(true_s, rec, q, rng)
        if explicit_mode:
            plane[:, :] = 0.0
            explicit_plane(plane, kern, rec)
            anyon_pass(config, true_s, rec, plane, sites, rng)
        else:
            for _ in range(c):
                field_sweep(cur, buf, rec, zero_plane)
                cur, buf = buf, cur
            anyon_pass(config, true_s, rec, cur[0], sites, rng)
        t += 1
        if t % stride == 0:
            if verify_failed(config, c, tau_ver, explicit_mode, kern,
                             vcfg, vtrue, vrec, vfa, vfb, vplane, zero_plane,
                             sites, vrng):
                return float(t), False
    return float(cap), True


@njit(cache=True, nogil=True)
def static_run(L, H, c, p, tau_max, explicit_mode, kern, seed):
    """Single-round decoding: one error map, one perfect measurement, then
    repeated compound updates until anyon-free or ``tau_max`` is reached.

    Returns (anyon_free, h1, h2, rounds_used); the winding bits are only
    meaningful when anyon_free.
    """
    rng = np.empty(4, dtype=np.uint64)
    seed_state(rng, _U64(seed))
    config = np.zeros((2, L, L), dtype=np.uint8)
    true_s = np.zeros((L, L), dtype=np.uint8)
    rec = np.zeros((L, L), dtype=np.uint8)
    fa = np.zeros((H, L, L), dtype=np.float64)
    fb = np.zeros((H, L, L), dtype=np.float64)
    plane = np.zeros((L, L), dtype=np.float64)
    zero_plane = np.zeros((L, L), dtype=np.float64)
    sites = np.empty((L * L, 2), dtype=np.int64)

    n_any = flip_edges(config, true_s, p, rng)
    measure_all(true_s, rec, 0.0, rng)
    cur = fa
    buf = fb
    rounds = 0
    while rounds < tau_max and n_any > 0:
        if explicit_mode:
            plane[:, :] = 0.0
            explicit_plane(plane, kern, rec)
            n_any += anyon_pass(config, true_s, rec, plane, sites, rng)
        else:
            for _ in range(c):
                field_sweep(cur, buf, rec, zero_plane)
                cur, buf = buf, cur
            n_any += anyon_pass(config, true_s, rec, cur[0], sites, rng)
        rounds += 1
    if n_any == 0:
        h1, h2 = homology_bits(config)
        return True, h1, h2, rounds
    return False, 0, 0, rounds


@njit(cache=True, nogil=True)
def async_trial(L, H, c, p, q, g_x, g_m, g_a, g_f, cap, stride, tau_ver,
                exponential, seed, vseed):
    """One asynchronous survival trial; returns (failure_time, censored).

    Local operators fire at sites/bonds drawn with probability proportional
    to their rates.  The clock advances by g_a / (total weight) per event so
    that one time step passes when every plaquette was selected for an anyon
    update once in expectation; with ``exponential`` the increments are drawn
    from the matching exponential law instead.  A noiseless copy is decoded
    whenever the clock crosses a multiple of ``stride``.
    """
    rng = np.empty(4, dtype=np.uint64)
    seed_state(rng, _U64(seed))
    vrng = np.empty(4, dtype=np.uint64)
    seed_state(vrng, _U64(vseed))

    config = np.zeros((2, L, L), dtype=np.uint8)
    true_s = np.zeros((L, L), dtype=np.uint8)
    rec = np.zeros((L, L), dtype=np.uint8)
    field = np.zeros((H, L, L), dtype=np.float64)
    zero_plane = np.zeros((L, L), dtype=np.float64)
    sites = np.empty((L * L, 2), dtype=np.int64)
    vcfg = np.empty((2, L, L), dtype=np.uint8)
    vtrue = np.empty((L, L), dtype=np.uint8)
    vrec = np.empty((L, L), dtype=np.uint8)
    vfa = np.empty((H, L, L), dtype=np.float64)
    vfb = np.empty((H, L, L), dtype=np.float64)
    vplane = np.empty((L, L), dtype=np.float64)
    kern = np.empty((1, 1), dtype=np.float64)

    n_sites = L * L
    n_edges = 2 * n_sites
    n_cells = n_sites * H
    w_f = g_f * n_cells
    w_x = g_x * n_edges
    w_m = g_m * n_sites
    w_a = g_a * n_sites
    w_total = w_f + w_x + w_m + w_a
    t_fx = w_f + w_x
    t_fxm = t_fx + w_m
    dt = g_a / w_total

    clock = 0.0
    next_check = float(stride)
    while clock < cap:
        u = uniform(rng) * w_total
        if u < w_f:
            cell = below(rng, n_cells)
            z = cell // n_sites
            r = cell % n_sites
            field_local(field, rec, z, r // L, r % L)
        elif u < t_fx:
            e = below(rng, n_edges)
            d = e // n_sites
            r = e % n_sites
            local_flip(config, true_s, d, r // L, r % L, p, rng)
        elif u < t_fxm:
            s = below(rng, n_sites)
            local_measure(true_s, rec, s // L, s % L, q, rng)
        else:
            s = below(rng, n_sites)
            local_anyon(config, true_s, rec, field[0], s // L, s % L, rng)
        if exponential:
            clock += -np.log(1.0 - uniform(rng)) * dt
        else:
            clock += dt
        if clock >= next_check:
            if verify_failed(config, c, tau_ver, False, kern,
                             vcfg, vtrue, vrec, vfa, vfb, vplane, zero_plane,
                             sites, vrng):
                return clock, False
            while next_check <= clock:
                next_check += stride
    return float(cap), True


@njit(cache=True, nogil=True)
def draw_categories(g_x, g_m, g_a, g_f, L, H, n, seed):
    """Sample n event categories; returns counts (f, x, m, a) for statistics."""
    rng = np.empty(4, dtype=np.uint64)
    seed_state(rng, _U64(seed))
    n_sites = L * L
    w_f = g_f * n_sites * H
    w_x = g_x * 2 * n_sites
    w_m = g_m * n_sites
    w_a = g_a * n_sites
    w_total = w_f + w_x + w_m + w_a
    t_fx = w_f + w_x
    t_fxm = t_fx + w_m
    counts = np.zeros(4, dtype=np.int64)
    for _ in range(n):
        u = uniform(rng) * w_total
        if u < w_f:
            counts[0] += 1
        elif u < t_fx:
            counts[1] += 1
        elif u < t_fxm:
            counts[2] += 1
        else:
            counts[3] += 1
    return counts


# ---------------------------------------------------------------------------
# classical reference automaton
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def nec_into(src, dst):
    """North-East-Center majority step; returns the number of ones written."""
    L = src.shape[0]
    ones = 0
    for y in range(L):
        yn = y - 1 if y > 0 else L - 1
        for x in range(L):
            xe = x + 1 if x + 1 < L else 0
            v = 1 if src[yn, x] + src[y, xe] + src[y, x] >= 2 else 0
            dst[y, x] = v
            ones += v
    return ones


@njit(cache=True, nogil=True)
def toom_trial(L, noise_p, cap, seed):
    """Majority-memory survival: noise then majority step until the grid
    majority flips to 1.  Returns (failure_time, censored)."""
    rng = np.empty(4, dtype=np.uint64)
    seed_state(rng, _U64(seed))
    grid = np.zeros((L, L), dtype=np.uint8)
    buf = np.empty((L, L), dtype=np.uint8)
    n_sites = L * L
    log1m = np.log(1.0 - noise_p) if noise_p > 0.0 else 0.0
    t = 0
    while t < cap:
        if noise_p > 0.0:
            flat = grid.ravel()
            idx = geometric_gap(rng, log1m)
            while idx < n_sites:
                flat[idx] ^= 1
                idx += 1 + geometric_gap(rng, log1m)
        ones = nec_into(grid, buf)
        tmp = grid
        grid = buf
        buf = tmp
        t += 1
        if 2 * ones > n_sites:
            return float(t), False
    return float(cap), True
