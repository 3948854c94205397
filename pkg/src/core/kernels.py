#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
数値カーネル
最終通過時間の動的計画法、定常境界付き増分再帰、ローリング掃引、Lindley 再帰の JIT 実装

配列はすべて行優先 (行 = y, 列 = x)。ビット 1 は「原点へ向かう 1 歩が x 方向」を表す。
同値のときは y 方向（ビット 0）を選ぶ。
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def forward_sweep(weights):
    """
    前向き DP（原点 = 配列の [0, 0]、原点の重みも含む）

    Args:
        weights (ndarray): (高さ, 幅) の重み

    Returns:
        tuple: (G, bits) bits は uint8 の非圧縮配列
    """
    height, width = weights.shape
    values = np.empty((height, width), dtype=np.float64)
    bits = np.zeros((height, width), dtype=np.uint8)
    for r in range(height):
        for c in range(width):
            w = weights[r, c]
            if r == 0 and c == 0:
                values[r, c] = w
            elif r == 0:
                values[r, c] = w + values[r, c - 1]
                bits[r, c] = 1
            elif c == 0:
                values[r, c] = w + values[r - 1, c]
            else:
                left = values[r, c - 1]
                down = values[r - 1, c]
                if left > down:
                    values[r, c] = w + left
                    bits[r, c] = 1
                else:
                    values[r, c] = w + down
    return values, bits


@njit(cache=True, nogil=True)
def stationary_sweep(bulk, inc_i, inc_j):
    """
    定常境界付き前向き掃引（角の重み 0、軸上は境界重みの累積和）

    増分空間の再帰 I_x = ω_x + (I_{x-e2} - J_{x-e1})^+, J_x = ω_x + (I_{x-e2} - J_{x-e1})^- を
    通過時間と同時に計算する。同じ入力からは常にビット単位で同じ増分が得られる。

    Args:
        bulk (ndarray): (len(J), len(I)) のバルク重み
        inc_i (ndarray): e1 軸の境界重み
        inc_j (ndarray): e2 軸の境界重み

    Returns:
        tuple: (G, 西から入る辺の増分, 南から入る辺の増分, bits) いずれも (len(J)+1, len(I)+1)
    """
    height = inc_j.shape[0] + 1
    width = inc_i.shape[0] + 1
    values = np.empty((height, width), dtype=np.float64)
    east = np.full((height, width), np.nan)
    north = np.full((height, width), np.nan)
    bits = np.zeros((height, width), dtype=np.uint8)

    values[0, 0] = 0.0
    for c in range(1, width):
        values[0, c] = values[0, c - 1] + inc_i[c - 1]
        east[0, c] = inc_i[c - 1]
        bits[0, c] = 1
    for r in range(1, height):
        values[r, 0] = values[r - 1, 0] + inc_j[r - 1]
        north[r, 0] = inc_j[r - 1]

    for r in range(1, height):
        for c in range(1, width):
            w = bulk[r - 1, c - 1]
            delta = east[r - 1, c] - north[r, c - 1]
            # 増分の比較だけで向きと値を決める（同値は e2）
            if delta < 0.0:
                east[r, c] = w
                north[r, c] = w - delta
                bits[r, c] = 1
                values[r, c] = w + values[r, c - 1]
            else:
                east[r, c] = w + delta
                north[r, c] = w
                values[r, c] = w + values[r - 1, c]
    return values, east, north, bits


@njit(cache=True, nogil=True)
def backtrack_path(packed, row, col, origin_row, origin_col, step):
    """
    圧縮ビット列から原点まで辿る（目標側から原点側の順）

    Args:
        packed (ndarray): np.packbits(axis=1) 済みのビット列
        row, col (int): 目標セル
        origin_row, origin_col (int): 原点セル
        step (int): 原点へ向かう方向 (-1: 前向き, +1: 逆向き)

    Returns:
        tuple: (行配列, 列配列)
    """
    length = abs(row - origin_row) + abs(col - origin_col) + 1
    rows = np.empty(length, dtype=np.int64)
    cols = np.empty(length, dtype=np.int64)
    for i in range(length):
        rows[i] = row
        cols[i] = col
        if row == origin_row and col == origin_col:
            break
        if row == origin_row:
            col += step
        elif col == origin_col:
            row += step
        elif (packed[row, col >> 3] >> (7 - (col & 7))) & 1:
            col += step
        else:
            row += step
    return rows, cols


@njit(cache=True, nogil=True)
def exit_index(packed, row, col, origin_row, origin_col, step):
    """
    測地線が原点の軸に初めて到達する位置（符号付き）

    Returns:
        int: e1 軸なら +k、e2 軸なら -k
    """
    while row != origin_row and col != origin_col:
        if (packed[row, col >> 3] >> (7 - (col & 7))) & 1:
            col += step
        else:
            row += step
    if row == origin_row:
        return abs(col - origin_col)
    return -abs(row - origin_row)


@njit(cache=True, nogil=True)
def rolling_forward_block(previous, block):
    """
    2 行ローリングの前向き DP（previous を上書き更新）

    previous は直前の行の通過時間。最初のブロックでは -inf で初期化しておく。
    """
    rows, width = block.shape
    for r in range(rows):
        left = -np.inf
        for c in range(width):
            best = left if left > previous[c] else previous[c]
            if best == -np.inf:
                best = 0.0
            left = block[r, c] + best
            previous[c] = left
    return previous


@njit(cache=True, nogil=True)
def reversed_bits_block(previous, block, bits):
    """
    逆向き（北東原点）DP を上から下へ 1 ブロック進める

    block[0] が最も上の行。各行は右から左へ処理する。previous は一つ上の行の Ĝ
    （最上段では -inf）。bits[i, x] = 1 は x+e1 への 1 歩。
    """
    rows, width = block.shape
    for r in range(rows):
        right = -np.inf
        for x in range(width - 1, -1, -1):
            up = previous[x]
            if right > up:
                bits[r, x] = 1
                best = right
            else:
                bits[r, x] = 0
                best = up
            if best == -np.inf:
                best = 0.0
            right = block[r, x] + best
            previous[x] = right
    return previous


@njit(cache=True, nogil=True)
def reversed_increment_block(above, east_boundary, block, bits):
    """
    北東境界付き逆向き定常場の増分再帰を上から下へ 1 ブロック進める

    above[x] は一つ上の行の e1 辺増分 B_{x+e2, x+e1+e2}（最上段では境界 I）。
    east_boundary[i] は block[i] 行の東端 e2 辺の境界重み J。
    bits[i, x] = 1 は増分の小さい e1 方向への 1 歩（同値は e2）。
    """
    rows, width = block.shape
    for r in range(rows):
        q = east_boundary[r]
        for x in range(width - 1, -1, -1):
            w = block[r, x]
            p = above[x]
            if p < q:
                bits[r, x] = 1
                above[x] = w
                q = w + (q - p)
            else:
                bits[r, x] = 0
                above[x] = w + (p - q)
                q = w
    return above


@njit(cache=True, nogil=True)
def lindley(a, s, w0, s0):
    """
    Lindley 再帰 w_j = (w_{j-1} + s_{j-1} - a_j)^+ と遊休時間 e_j = (...)^-

    Args:
        a (ndarray): a_1..a_n
        s (ndarray): s_1..s_n
        w0 (float): 客 0 の待ち時間
        s0 (float): 客 0 のサービス時間

    Returns:
        tuple: (w, e)
    """
    n = a.shape[0]
    w = np.empty(n, dtype=np.float64)
    e = np.empty(n, dtype=np.float64)
    prev_w = w0
    prev_s = s0
    for j in range(n):
        x = prev_w + prev_s - a[j]
        if x > 0.0:
            w[j] = x
            e[j] = 0.0
        else:
            w[j] = 0.0
            e[j] = -x
        prev_w = w[j]
        prev_s = s[j]
    return w, e


@njit(cache=True, nogil=True)
def queue_map_kernel(a, s, t0, has_t0):
    """
    有限窓上の D/S/R 作用素

    t_j = s_j + (t_{j-1} - a_j)^+, d_j = s_j + (a_j - t_{j-1})^+, š_j = a_j ∧ t_{j-1}。
    初期滞在時間が無い場合は客 1 が空のサーバに着くものとし、d_1 と š_1 は NaN。
    """
    n = a.shape[0]
    d = np.empty(n, dtype=np.float64)
    t = np.empty(n, dtype=np.float64)
    dual = np.empty(n, dtype=np.float64)
    prev_t = t0
    for j in range(n):
        if j == 0 and not has_t0:
            t[j] = s[j]
            d[j] = np.nan
            dual[j] = np.nan
        else:
            gap = a[j] - prev_t
            if gap > 0.0:
                t[j] = s[j]
                d[j] = s[j] + gap
                dual[j] = prev_t
            else:
                t[j] = s[j] - gap
                d[j] = s[j]
                dual[j] = a[j]
        prev_t = t[j]
    return d, t, dual


@njit(cache=True, nogil=True)
def _advance(packed, row, col, origin_row, origin_col, step):
    """逆ポインタに従って原点へ 1 歩進める"""
    if row == origin_row:
        return row, col + step
    if col == origin_col:
        return row + step, col
    if (packed[row, col >> 3] >> (7 - (col & 7))) & 1:
        return row, col + step
    return row + step, col


@njit(cache=True, nogil=True)
def coalesce(packed, row1, col1, row2, col2, origin_row, origin_col, step):
    """
    2 本の測地線が最初に出会うセル

    原点からの ℓ¹ 距離が大きい側を進め、同じ距離なら両方を進める。

    Returns:
        tuple: (行, 列)
    """
    while row1 != row2 or col1 != col2:
        d1 = abs(row1 - origin_row) + abs(col1 - origin_col)
        d2 = abs(row2 - origin_row) + abs(col2 - origin_col)
        if d1 >= d2:
            row1, col1 = _advance(packed, row1, col1, origin_row, origin_col, step)
        if d2 >= d1:
            row2, col2 = _advance(packed, row2, col2, origin_row, origin_col, step)
    return row1, col1
