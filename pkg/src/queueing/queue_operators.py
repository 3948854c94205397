#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
待ち行列作用素
有限窓上の D/S/R 作用素、定常初期化付き Lindley 再帰、結合測度 ν^{λ,ρ}、空き待ち行列の上界
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.optimization_config import OptimizationConfig
from core import kernels
from core.lattice import RngStream
from utils.error_handler import InvalidParameterError, NumericalConsistencyError, OutOfRangeError
from utils.utils import ParameterValidator

logger = logging.getLogger(__name__)


def _positive_array(values, field: str) -> np.ndarray:
    array = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
    if not np.all(array > 0.0) or not np.all(np.isfinite(array)):
        raise InvalidParameterError(f"{field} はすべて正の有限値である必要があります")
    return array


def _stable_rates(lam: float, rho: float) -> Tuple[float, float]:
    lam = ParameterValidator.rate(lam, "lambda")
    rho = ParameterValidator.rate(rho, "rho")
    if not lam < rho:
        raise InvalidParameterError(f"不安定な待ち行列です: lambda={lam} >= rho={rho}")
    return lam, rho


@dataclass(frozen=True, eq=False)
class QueueWindow:
    """
    有限窓 (a_1..a_n, s_1..s_n) と客 0 の状態 (w0, s0)

    a_j は客 j−1 と客 j の到着間隔、s_j は客 j のサービス時間。
    """
    a: np.ndarray
    s: np.ndarray
    w0: float = 0.0
    s0: float = 1.0

    def __post_init__(self):
        a = _positive_array(self.a, "a")
        s = _positive_array(self.s, "s")
        if a.size == 0:
            raise InvalidParameterError("窓が空です")
        if a.size != s.size:
            raise InvalidParameterError(f"a と s の長さが一致しません: {a.size} != {s.size}")
        w0 = float(self.w0)
        if not w0 >= 0.0 or math.isinf(w0):
            raise InvalidParameterError(f"w0 は非負の有限値である必要があります: {w0}")
        s0 = ParameterValidator.rate(self.s0, "s0")
        a.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "s0", s0)

    @property
    def n(self) -> int:
        return int(self.a.size)


@dataclass(frozen=True, eq=False)
class QueueOutputs:
    """待ち行列の出力列（すべて客 1..n）"""
    d: np.ndarray
    t: np.ndarray
    s_dual: np.ndarray
    w: np.ndarray
    e: np.ndarray


def lindley_evolve(win: QueueWindow) -> QueueOutputs:
    """
    Lindley 再帰で窓を進める

    w_j = (w_{j−1} + s_{j−1} − a_j)⁺、e_j = (…)⁻、d_j = e_j + s_j、t_j = w_j + s_j、
    š_j = a_j ∧ t_{j−1}。

    Args:
        win (QueueWindow): 入力窓

    Returns:
        QueueOutputs: 出力列
    """
    w, e = kernels.lindley(win.a, win.s, win.w0, win.s0)
    t = w + win.s
    previous_t = np.empty_like(t)
    previous_t[0] = win.w0 + win.s0
    previous_t[1:] = t[:-1]
    return QueueOutputs(d=e + win.s, t=t, s_dual=np.minimum(win.a, previous_t), w=w, e=e)


def sample_stationary_w0(rng: RngStream, lam: float, rho: float, size=None):
    """
    定常待ち時間 w0 を生成

    0 に質量 1−λ/ρ の原子、残りは Exp(ρ−λ)。

    Args:
        rng (RngStream): 乱数ストリーム
        lam (float): 到着率 λ
        rho (float): サービス率 ρ（λ < ρ）
        size: 生成数（None ならスカラー）

    Returns:
        float | ndarray: 非負の待ち時間
    """
    lam, rho = _stable_rates(lam, rho)
    u = rng.child(0).uniform_open(size)
    tail = rng.child(1).exponential(rho - lam, size)
    w0 = np.where(u <= 1.0 - lam / rho, 0.0, tail)
    return float(w0) if size is None else w0


def sample_stationary_window(rng: RngStream, lam: float, rho: float, n: int) -> QueueWindow:
    """到着 Exp(λ)、サービス Exp(ρ)、w0 は定常分布の窓"""
    lam, rho = _stable_rates(lam, rho)
    n = ParameterValidator.positive_int(n, "n")
    return QueueWindow(
        a=rng.child(2).exponential(lam, n),
        s=rng.child(3).exponential(rho, n),
        w0=sample_stationary_w0(rng, lam, rho),
        s0=float(rng.child(4).exponential(rho)),
    )


def sample_nu(rng: RngStream, lam: float, rho: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    ν^{λ,ρ} から (d, s) を生成

    定常な M/M/1 の出発間隔とサービス時間。d は周辺で i.i.d. Exp(λ)、d ≥ s が各成分で成り立つ。

    Args:
        rng (RngStream): 乱数ストリーム
        lam (float): 到着率
        rho (float): サービス率
        n (int): 長さ

    Returns:
        tuple: (d, s)
    """
    win = sample_stationary_window(rng, lam, rho, n)
    outputs = lindley_evolve(win)
    return outputs.d, win.s.copy()


def agreement_run(d, s) -> int:
    """先頭から d_j = s_j が続く長さ"""
    d = np.asarray(d)
    s = np.asarray(s)
    mismatch = np.flatnonzero(d != s)
    return int(mismatch[0]) if mismatch.size else int(d.size)


def cumulative_idle(win: QueueWindow, k: int, l: int, tolerance: Optional[float] = None) -> float:
    """
    累積遊休時間 Σ_{i=k}^{l} e_i

    (inf_{k≤i≤l} w_{k−1} + S^{k,i})⁻ で計算し、直接の総和と照合する
    （S は x_i = s_{i−1} − a_i の部分和）。

    Args:
        win (QueueWindow): 窓
        k (int): 開始添字（1 始まり）
        l (int): 終了添字
        tolerance (float): 照合の許容誤差

    Returns:
        float: 累積遊休時間
    """
    if not (1 <= k <= l <= win.n):
        raise OutOfRangeError(f"添字が範囲外です: k={k}, l={l}, n={win.n}")
    tolerance = tolerance or OptimizationConfig.get_queueing_config()["identity_tolerance"]
    outputs = lindley_evolve(win)

    previous_s = np.concatenate(([win.s0], win.s[:-1]))
    x = previous_s[k - 1:l] - win.a[k - 1:l]
    start_w = win.w0 if k == 1 else outputs.w[k - 2]
    lowest = float(np.min(start_w + np.cumsum(x)))
    formula = max(-lowest, 0.0)

    direct = float(outputs.e[k - 1:l].sum())
    if abs(formula - direct) > tolerance:
        raise NumericalConsistencyError(
            f"累積遊休時間の恒等式が成立しません: 公式={formula!r}, 直接和={direct!r}"
        )
    return formula


def empty_queue_bound(beta: float, alpha: float, m: int, theta: float) -> float:
    """
    ν^{β,α}(Σ_{i=1}^m e_i > 0) の上界

    1 − β/α + [αβ/((α+θ)(β−θ))]^m · (β(α−β)/α)/(α−β+θ)

    Args:
        beta (float): 到着率 β
        alpha (float): サービス率 α（β < α < 1）
        m (int): 窓長
        theta (float): 指数モーメントのパラメータ（0 < θ < β）

    Returns:
        float: 上界
    """
    if not (0.0 < beta < alpha < 1.0):
        raise InvalidParameterError(f"0 < beta < alpha < 1 が必要です: beta={beta}, alpha={alpha}")
    m = ParameterValidator.positive_int(m, "m")
    theta = ParameterValidator.rate(theta, "theta")
    if theta >= beta:
        raise InvalidParameterError(f"theta={theta} >= beta={beta} では積率母関数が発散します")
    factor = (alpha * beta) / ((alpha + theta) * (beta - theta))
    return 1.0 - beta / alpha + factor ** m * (beta * (alpha - beta) / alpha) / (alpha - beta + theta)


def heavy_traffic_bound(rho: float, r: Optional[float], N: int, m: int, theta: Optional[float] = None) -> float:
    """
    重負荷置換 β = ρ − rN^{-1/3}, α = ρ + rN^{-1/3} での上界

    第 1 項は 2rN^{-1/3}/(ρ+rN^{-1/3})、第 2 項の係数は (β/α)(1+θN^{1/3}/(2r))^{-1}。
    既定値は θ = m^{-1/2}、r = m^{-1/8}N^{1/12}。
    """
    rho = ParameterValidator.density(rho)
    N = ParameterValidator.positive_int(N, "N")
    m = ParameterValidator.positive_int(m, "m")
    if r is None:
        r = m ** (-1.0 / 8.0) * N ** (1.0 / 12.0)
    theta = m ** -0.5 if theta is None else theta
    shift = r * N ** (-1.0 / 3.0)
    beta, alpha = rho - shift, rho + shift
    if not (0.0 < beta < alpha < 1.0):
        raise InvalidParameterError(f"r={r} が大きすぎます: beta={beta}, alpha={alpha}")
    if not 0.0 < theta < beta:
        raise InvalidParameterError(f"0 < theta < beta が必要です: theta={theta}, beta={beta}")

    first = 2.0 * shift / (rho + shift)
    factor = (alpha * beta) / ((alpha + theta) * (beta - theta))
    second = factor ** m * (beta / alpha) / (1.0 + theta * N ** (1.0 / 3.0) / (2.0 * r))
    return first + second


def queue_map(a, s, t0: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    有限窓上の D/S/R 作用素

    t0 を与えない場合は客 1 が空のサーバに到着し、d_1 と š_1 は NaN になる。

    Args:
        a: 到着間隔 a_1..a_n
        s: サービス時間 s_1..s_n
        t0 (float): 客 0 の滞在時間

    Returns:
        tuple: (d, t, š)
    """
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1)
    s = _positive_array(s, "s")
    if a.size != s.size:
        raise InvalidParameterError(f"a と s の長さが一致しません: {a.size} != {s.size}")
    if a.size and not np.all(a[1:] > 0.0):
        raise InvalidParameterError("a はすべて正である必要があります")
    has_t0 = t0 is not None
    return kernels.queue_map_kernel(a, s, float(t0) if has_t0 else 0.0, has_t0)


def _first_valid(values: np.ndarray) -> int:
    invalid = np.flatnonzero(~np.isfinite(values))
    return int(invalid[-1]) + 1 if invalid.size else 0


def _compose(arrivals: np.ndarray, services: np.ndarray, output: int) -> np.ndarray:
    """先頭に NaN を含む列を揃えて作用素を適用（output: 0=D, 2=R）"""
    start = max(_first_valid(services), _first_valid(arrivals) - 1)
    result = np.full(arrivals.size, np.nan)
    if start < arrivals.size:
        result[start:] = queue_map(arrivals[start:], services[start:])[output]
    return result


def interchange_residual(b, a, s, burn_in: Optional[int] = None) -> Tuple[float, int]:
    """
    D(D(b,a),s) と D(D(b,R(a,s)),D(a,s)) の最大差

    Args:
        b, a, s: 到着率の小さい順に並んだ 3 つの列（平均は b > a > s）
        burn_in (int): 比較から除く先頭の長さ（既定は ⌈40/率差⌉）

    Returns:
        tuple: (最大絶対差, 比較した長さ)
    """
    b = _positive_array(b, "b")
    a = _positive_array(a, "a")
    s = _positive_array(s, "s")
    if not (b.size == a.size == s.size):
        raise InvalidParameterError("b, a, s の長さが一致しません")
    mean_b, mean_a, mean_s = float(b.mean()), float(a.mean()), float(s.mean())
    if not (mean_b > mean_a > mean_s):
        raise InvalidParameterError(
            f"率の順序が不安定です: mean(b)={mean_b:.4g}, mean(a)={mean_a:.4g}, mean(s)={mean_s:.4g}"
        )
    if burn_in is None:
        gap = min(1.0 / mean_a - 1.0 / mean_b, 1.0 / mean_s - 1.0 / mean_a)
        burn_in = math.ceil(OptimizationConfig.get_queueing_config()["burn_in_constant"] / gap)

    left = _compose(_compose(b, a, 0), s, 0)
    departures = _compose(a, s, 0)
    right = _compose(_compose(b, _compose(a, s, 2), 0), departures, 0)

    valid = np.isfinite(left) & np.isfinite(right)
    valid[:burn_in] = False
    count = int(valid.sum())
    if count == 0:
        raise InvalidParameterError(f"バーンイン {burn_in} の後に比較できる区間がありません（長さ {b.size}）")
    return float(np.max(np.abs(left[valid] - right[valid]))), count


def interchange_check(b, a, s, burn_in: Optional[int] = None, tolerance: Optional[float] = None) -> bool:
    """
    交換恒等式 D(D(b,a),s) = D(D(b,R(a,s)),D(a,s)) をバーンイン後の区間で検査

    Returns:
        bool: 許容誤差内で一致すれば True
    """
    tolerance = tolerance or OptimizationConfig.get_queueing_config()["identity_tolerance"]
    residual, count = interchange_residual(b, a, s, burn_in)
    if residual > tolerance:
        logger.warning(f"交換恒等式の差が許容誤差を超えました: 最大差={residual:.3e}, 区間長={count}")
        return False
    logger.debug(f"交換恒等式を確認: 最大差={residual:.3e}, 区間長={count}")
    return True


def burke_fixed_point(rng: RngStream, sigma: float, alpha1: float, alpha2: float, n: int,
                      burn_in: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    二種類の客のタンデム不動点

    (a¹, a²) = (b¹, D(b², b¹)) を共通のサービス s ∼ Exp(σ) に通し、(d¹, d²) = (D(a¹,s), D(a²,s))
    の同時分布が (a¹, a²) と一致することを検査するための列を返す。

    Args:
        rng (RngStream): 乱数ストリーム
        sigma (float): サービス率 σ
        alpha1 (float): 第 1 種の到着率 α₁
        alpha2 (float): 第 2 種の到着率 α₂（α₂ < α₁ < σ）
        n (int): 長さ
        burn_in (int): 先頭から捨てる長さ

    Returns:
        tuple: (a¹, a², d¹, d²) いずれもバーンイン後
    """
    alpha2, alpha1 = _stable_rates(alpha2, alpha1)
    alpha1, sigma = _stable_rates(alpha1, sigma)
    n = ParameterValidator.positive_int(n, "n")
    burn_in = ParameterValidator.positive_int(burn_in, "burn_in", minimum=0)
    if burn_in + 2 >= n:
        raise InvalidParameterError(f"バーンイン {burn_in} が長さ {n} に対して長すぎます")

    b1 = rng.child(0).exponential(alpha1, n)
    b2 = rng.child(1).exponential(alpha2, n)
    s = rng.child(2).exponential(sigma, n)

    a1 = b1
    a2 = _compose(b2, b1, 0)
    d1 = _compose(a1, s, 0)
    d2 = _compose(a2, s, 0)

    keep = slice(max(burn_in, 2), None)
    return a1[keep].copy(), a2[keep].copy(), d1[keep].copy(), d2[keep].copy()
