"""Analytical tiling search for one conv layer on one accelerator config.

Layers are packed into int64 rows ``(in_h, in_w, c_in, c_out, k_h, k_w, stride,
depthwise)`` and configs into the 7 log2 parameters, so the whole search can
run inside numba. ``search_tiling_numpy`` is the vectorised fallback used when
``HWCODESIGN_DISABLE_JIT`` is set.

Dataflow: output-stationary GEMM. Output tiles are ``(spatial, out-channel)``
pairs, the reduction loop runs over input-channel tiles, outputs leave once at
8 bits. Two loop orders differ in which operand stays resident across the
outer loop:

* weight-stationary (0): ``for o: for s: for i``
* input-stationary  (1): ``for s: for o: for i``

Footprints and DRAM traffic count actual channels; compute cycles count whole
``block_in x block_out`` GEMM blocks.
"""

from __future__ import annotations

import numpy as np

from .._jit import JIT_ENABLED, njit

WEIGHT_STATIONARY = 0
INPUT_STATIONARY = 1
LOOP_ORDERS = ("weight-stationary", "input-stationary")

DRAM_BYTES_PER_CYCLE = 16.0
ACC_BYTES = 4

# layout of the stats vector returned by the kernels
FEASIBLE, T_O, T_I, T_H, T_W, ORDER, COMPUTE, CYCLES, INP, WGT, OUT, UOP, TILES = range(13)
N_STATS = 13


@njit
def _ceil_div(a, b):
    return (a + b - 1) // b


@njit
def _span(n, k, s):
    # input rows/cols needed for n outputs; strided 1-wide kernels skip rows
    if k >= s:
        return (n - 1) * s + k
    return n * k


@njit
def _next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


@njit
def evaluate_tiling(layer, cfg, t_o, t_i, t_h, t_w, order, out):
    """Fill ``out`` with the stats of one tiling; returns False if it does not fit."""
    in_h, in_w, c_in, c_out, k_h, k_w, stride, dw = (
        layer[0], layer[1], layer[2], layer[3], layer[4], layer[5], layer[6], layer[7])
    bi = 1 << cfg[0]
    bo = 1 << cfg[1]
    uop_bytes = (1 << cfg[2]) // 8
    uop_buf = 1 << (cfg[3] + 10)
    inp_buf = 1 << cfg[4]
    wgt_buf = 1 << cfg[5]
    acc_buf = 1 << cfg[6]
    if dw:
        bi = 1
        t_i = 1
    out_h = _ceil_div(in_h, stride)
    out_w = _ceil_div(in_w, stride)
    kk = k_h * k_w

    ch_o = min(t_o * bo, c_out)
    ch_i = min(t_i * bi, c_in) if not dw else ch_o
    th = min(t_h, out_h)
    tw = min(t_w, out_w)

    rows = _span(th, k_h, stride)
    cols = _span(tw, k_w, stride)
    if dw:
        inp_fp = ch_o * rows * cols
        wgt_fp = ch_o * kk
        uop_fp = _ceil_div(ch_o, bo) * kk * uop_bytes
    else:
        inp_fp = ch_i * rows * cols
        wgt_fp = ch_o * ch_i * kk
        uop_fp = _ceil_div(ch_o, bo) * _ceil_div(ch_i, bi) * kk * uop_bytes
    acc_fp = ch_o * th * tw * ACC_BYTES
    if inp_fp > inp_buf or wgt_fp > wgt_buf or acc_fp > acc_buf:
        return False

    n_o = _ceil_div(c_out, ch_o)
    n_i = 1 if dw else _ceil_div(c_in, ch_i)
    n_h = _ceil_div(out_h, th)
    n_w = _ceil_div(out_w, tw)
    n_sp = n_h * n_w
    n_tiles = n_sp * n_o * n_i

    # how many times the full weight / input tensor crosses the DRAM boundary
    if dw:
        f_in = 1
        if order == WEIGHT_STATIONARY or n_o == 1:
            f_w = 1
        else:
            f_w = n_sp
    elif order == WEIGHT_STATIONARY:
        f_w = 1 if n_i == 1 else n_sp
        f_in = 1 if (n_sp == 1 and n_i == 1) else n_o
    else:
        f_in = 1 if n_i == 1 else n_o
        f_w = 1 if (n_o == 1 and n_i == 1) else n_sp

    # per-iteration share of each stream, so per-tile bytes sum to the totals
    a_in = float(f_in) if dw else float(f_in) / n_o
    a_w = float(f_w) / n_sp
    a_out = 1.0 / n_i
    uop_streamed = uop_fp > uop_buf

    # tile classes: full tiles and one remainder per dimension
    sz_o0 = ch_o
    cnt_o0 = c_out // ch_o
    sz_o1 = c_out - cnt_o0 * ch_o
    if dw:
        sz_i0 = 1
        cnt_i0 = 1
        sz_i1 = 0
    else:
        sz_i0 = ch_i
        cnt_i0 = c_in // ch_i
        sz_i1 = c_in - cnt_i0 * ch_i
    sz_h0 = th
    cnt_h0 = out_h // th
    sz_h1 = out_h - cnt_h0 * th
    sz_w0 = tw
    cnt_w0 = out_w // tw
    sz_w1 = out_w - cnt_w0 * tw

    compute = 0.0
    cycles = 0.0
    inp_total = 0.0
    wgt_total = 0.0
    out_total = 0.0
    uop_total = 0.0
    for io in range(2):
        so = sz_o0 if io == 0 else sz_o1
        co = cnt_o0 if io == 0 else 1
        if so == 0:
            continue
        for ii in range(2):
            si = sz_i0 if ii == 0 else sz_i1
            ci = cnt_i0 if ii == 0 else 1
            if si == 0:
                continue
            for ih in range(2):
                sh = sz_h0 if ih == 0 else sz_h1
                chh = cnt_h0 if ih == 0 else 1
                if sh == 0:
                    continue
                for iw in range(2):
                    sw = sz_w0 if iw == 0 else sz_w1
                    cw = cnt_w0 if iw == 0 else 1
                    if sw == 0:
                        continue
                    count = co * ci * chh * cw
                    r = _span(sh, k_h, stride)
                    c = _span(sw, k_w, stride)
                    if dw:
                        comp = sh * sw * _ceil_div(so, bo) * kk
                        b_in = so * r * c
                        b_w = so * kk
                        u = _ceil_div(so, bo) * kk * uop_bytes
                    else:
                        comp = sh * sw * _ceil_div(so, bo) * _ceil_div(si, bi) * kk
                        b_in = si * r * c
                        b_w = so * si * kk
                        u = _ceil_div(so, bo) * _ceil_div(si, bi) * kk * uop_bytes
                    b_out = so * sh * sw
                    if not uop_streamed:
                        u = 0
                    mem = b_in * a_in + b_w * a_w + b_out * a_out + u
                    compute += count * comp
                    inp_total += count * b_in * a_in
                    wgt_total += count * b_w * a_w
                    out_total += count * b_out * a_out
                    uop_total += count * u
                    cycles += count * max(float(comp), mem / DRAM_BYTES_PER_CYCLE)
    if not uop_streamed:
        # micro-op program loaded once, its transfer is not overlapped with compute
        uop_total = float(uop_fp)
        cycles += uop_total / DRAM_BYTES_PER_CYCLE

    out[FEASIBLE] = 1.0
    out[T_O] = t_o
    out[T_I] = t_i
    out[T_H] = t_h
    out[T_W] = t_w
    out[ORDER] = order
    out[COMPUTE] = compute
    out[CYCLES] = cycles
    out[INP] = round(inp_total)
    out[WGT] = round(wgt_total)
    out[OUT] = round(out_total)
    out[UOP] = round(uop_total)
    out[TILES] = n_tiles
    return True


@njit
def search_tiling_jit(layer, cfg):
    """Exhaustive search over power-of-two tiles and both loop orders.

    Footprints grow monotonically with every tile dimension, so a loop is cut
    as soon as its smallest completion no longer fits.
    """
    best = np.zeros(N_STATS)
    cand = np.zeros(N_STATS)
    probe = np.zeros(N_STATS)
    dw = layer[7]
    bi = 1 if dw else (1 << cfg[0])
    bo = 1 << cfg[1]
    out_h = _ceil_div(layer[0], layer[6])
    out_w = _ceil_div(layer[1], layer[6])
    max_o = _next_pow2(_ceil_div(layer[3], bo))
    max_i = 1 if dw else _next_pow2(_ceil_div(layer[2], bi))
    max_h = _next_pow2(out_h)
    max_w = _next_pow2(out_w)
    best_bytes = np.inf
    best_tiles = np.inf
    t_o = 1
    while t_o <= max_o:
        if not evaluate_tiling(layer, cfg, t_o, 1, 1, 1, 0, probe):
            break
        t_i = 1
        while t_i <= max_i:
            if not evaluate_tiling(layer, cfg, t_o, t_i, 1, 1, 0, probe):
                break
            t_h = 1
            while t_h <= max_h:
                if not evaluate_tiling(layer, cfg, t_o, t_i, t_h, 1, 0, probe):
                    break
                t_w = 1
                while t_w <= max_w:
                    if not evaluate_tiling(layer, cfg, t_o, t_i, t_h, t_w, 0, probe):
                        break
                    for order in range(2):
                        evaluate_tiling(layer, cfg, t_o, t_i, t_h, t_w, order, cand)
                        total = cand[INP] + cand[WGT] + cand[OUT] + cand[UOP]
                        if total < best_bytes or (total == best_bytes and cand[TILES] < best_tiles):
                            best_bytes = total
                            best_tiles = cand[TILES]
                            best[:] = cand
                    t_w *= 2
                t_h *= 2
            t_i *= 2
        t_o *= 2
    return best


@njit
def table_kernel_jit(layers, configs):
    """``(n_configs, n_layers, N_STATS)`` tiling stats for every pair."""
    n_c = configs.shape[0]
    n_l = layers.shape[0]
    out = np.zeros((n_c, n_l, N_STATS))
    for c in range(n_c):
        for l in range(n_l):
            out[c, l] = search_tiling_jit(layers[l], configs[c])
    return out


# numpy fallback ------------------------------------------------------------

def _pow2_upto(n: int) -> np.ndarray:
    vals = [1]
    while vals[-1] < n:
        vals.append(vals[-1] * 2)
    return np.array(vals, dtype=np.int64)


def _span_np(n, k, s):
    return np.where(k >= s, (n - 1) * s + k, n * k)


def _cdiv(a, b):
    return -(-a // b)


def search_tiling_numpy(layer, cfg) -> np.ndarray:
    """Vectorised twin of :func:`search_tiling_jit` over the full candidate grid."""
    in_h, in_w, c_in, c_out, k_h, k_w, stride, dw = (int(v) for v in layer)
    cfg = [int(v) for v in cfg]
    bi = 1 if dw else 1 << cfg[0]
    bo = 1 << cfg[1]
    uop_bytes = (1 << cfg[2]) // 8
    uop_buf = 1 << (cfg[3] + 10)
    inp_buf, wgt_buf, acc_buf = 1 << cfg[4], 1 << cfg[5], 1 << cfg[6]
    out_h, out_w = _cdiv(in_h, stride), _cdiv(in_w, stride)
    kk = k_h * k_w

    t_i_vals = np.array([1]) if dw else _pow2_upto(_cdiv(c_in, bi))
    grid = np.meshgrid(
        _pow2_upto(_cdiv(c_out, bo)), t_i_vals, _pow2_upto(out_h), _pow2_upto(out_w),
        np.array([0, 1]), indexing="ij")
    t_o, t_i, t_h, t_w, order = (g.ravel() for g in grid)

    ch_o = np.minimum(t_o * bo, c_out)
    ch_i = ch_o if dw else np.minimum(t_i * bi, c_in)
    th, tw = np.minimum(t_h, out_h), np.minimum(t_w, out_w)
    blocks = _cdiv(ch_o, bo) * (1 if dw else _cdiv(ch_i, bi))
    inp_fp = ch_i * _span_np(th, k_h, stride) * _span_np(tw, k_w, stride)
    wgt_fp = ch_o * (1 if dw else ch_i) * kk
    acc_fp = ch_o * th * tw * ACC_BYTES
    uop_fp = blocks * kk * uop_bytes
    ok = (inp_fp <= inp_buf) & (wgt_fp <= wgt_buf) & (acc_fp <= acc_buf)
    if not ok.any():
        return np.zeros(N_STATS)
    t_o, t_i, t_h, t_w, order = t_o[ok], t_i[ok], t_h[ok], t_w[ok], order[ok]
    ch_o, ch_i, th, tw, uop_fp = ch_o[ok], ch_i[ok], th[ok], tw[ok], uop_fp[ok]

    n_o = _cdiv(c_out, ch_o)
    n_i = np.ones_like(n_o) if dw else _cdiv(c_in, ch_i)
    n_sp = _cdiv(out_h, th) * _cdiv(out_w, tw)
    n_tiles = n_sp * n_o * n_i
    ws = order == WEIGHT_STATIONARY
    if dw:
        f_in = np.ones_like(n_o)
        f_w = np.where(ws | (n_o == 1), 1, n_sp)
        a_in = f_in.astype(float)
    else:
        f_w = np.where(ws, np.where(n_i == 1, 1, n_sp), np.where((n_o == 1) & (n_i == 1), 1, n_sp))
        f_in = np.where(ws, np.where((n_sp == 1) & (n_i == 1), 1, n_o), np.where(n_i == 1, 1, n_o))
        a_in = f_in / n_o
    a_w = f_w / n_sp
    a_out = 1.0 / n_i
    streamed = uop_fp > uop_buf

    def classes(total, size):
        full = total // size
        rem = total - full * size
        return [(size, full), (rem, np.ones_like(size))]

    comp_sum = np.zeros(len(n_o))
    cyc = np.zeros(len(n_o))
    tot_in = np.zeros(len(n_o))
    tot_w = np.zeros(len(n_o))
    tot_out = np.zeros(len(n_o))
    tot_uop = np.zeros(len(n_o))
    i_classes = [(np.ones_like(n_o), np.ones_like(n_o)), (np.zeros_like(n_o), np.zeros_like(n_o))] if dw \
        else classes(c_in, ch_i)
    for so, co in classes(c_out, ch_o):
        for si, ci in i_classes:
            for sh, chh in classes(out_h, th):
                for sw, cw in classes(out_w, tw):
                    live = (so > 0) & (si > 0) & (sh > 0) & (sw > 0)
                    count = np.where(live, co * ci * chh * cw, 0)
                    r, c = _span_np(sh, k_h, stride), _span_np(sw, k_w, stride)
                    if dw:
                        comp = sh * sw * _cdiv(so, bo) * kk
                        b_in, b_w = so * r * c, so * kk
                        u = _cdiv(so, bo) * kk * uop_bytes
                    else:
                        comp = sh * sw * _cdiv(so, bo) * _cdiv(si, bi) * kk
                        b_in, b_w = si * r * c, so * si * kk
                        u = _cdiv(so, bo) * _cdiv(si, bi) * kk * uop_bytes
                    u = np.where(streamed, u, 0)
                    b_out = so * sh * sw
                    mem = b_in * a_in + b_w * a_w + b_out * a_out + u
                    comp_sum += count * comp
                    tot_in += count * b_in * a_in
                    tot_w += count * b_w * a_w
                    tot_out += count * b_out * a_out
                    tot_uop += count * u
                    cyc += count * np.maximum(comp.astype(float), mem / DRAM_BYTES_PER_CYCLE)
    tot_uop = np.where(streamed, tot_uop, uop_fp.astype(float))
    cyc = cyc + np.where(streamed, 0.0, uop_fp / DRAM_BYTES_PER_CYCLE)
    tot_in, tot_w, tot_out, tot_uop = (np.round(x) for x in (tot_in, tot_w, tot_out, tot_uop))

    total = tot_in + tot_w + tot_out + tot_uop
    # lexsort keys: last is primary
    best = np.lexsort((order, t_w, t_h, t_i, t_o, n_tiles, total))[0]
    stats = np.zeros(N_STATS)
    stats[FEASIBLE] = 1.0
    stats[T_O], stats[T_I], stats[T_H], stats[T_W], stats[ORDER] = (
        t_o[best], t_i[best], t_h[best], t_w[best], order[best])
    stats[COMPUTE], stats[CYCLES] = comp_sum[best], cyc[best]
    stats[INP], stats[WGT], stats[OUT], stats[UOP] = tot_in[best], tot_w[best], tot_out[best], tot_uop[best]
    stats[TILES] = n_tiles[best]
    return stats


def table_kernel_numpy(layers, configs) -> np.ndarray:
    out = np.zeros((len(configs), len(layers), N_STATS))
    for c, cfg in enumerate(configs):
        for l, layer in enumerate(layers):
            out[c, l] = search_tiling_numpy(layer, cfg)
    return out


def search_tiling(layer, cfg, use_jit: bool | None = None) -> np.ndarray:
    use_jit = JIT_ENABLED if use_jit is None else use_jit
    layer = np.asarray(layer, dtype=np.int64)
    cfg = np.asarray(cfg, dtype=np.int64)
    return search_tiling_jit(layer, cfg) if use_jit else search_tiling_numpy(layer, cfg)


def tiling_table(layers, configs, use_jit: bool | None = None) -> np.ndarray:
    use_jit = JIT_ENABLED if use_jit is None else use_jit
    layers = np.ascontiguousarray(layers, dtype=np.int64)
    configs = np.ascontiguousarray(configs, dtype=np.int64)
    if use_jit:
        return table_kernel_jit(layers, configs)
    return table_kernel_numpy(layers, configs)
