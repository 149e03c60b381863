"""Registry of coefficient families used by the CLI and experiment configs.

Every family carries the two-sided sequence ``seq`` (coefficients of
``exp(ikx)``) and the one-sided generating sequence ``base`` (``a_n`` for a
cosine series, ``b_n`` for a sine series, ``c(n)`` for one-sided complex
series), which is what the class membership tests look at.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np

from .coeff_model import (
    CoeffSeq,
    SmoothProfile,
    SmoothTail,
    Support,
    TailDecay,
    _as_index,
    _exact_log,
    one_sided,
)


class UnknownFamilyError(KeyError):
    pass


@dataclass(frozen=True)
class Family:
    name: str
    params: Tuple[float, ...]
    seq: CoeffSeq
    base: CoeffSeq
    kind: str  # cosine | sine | complex | finite
    sector: float = 0.0

    @property
    def label(self) -> str:
        return self.seq.label


def _fmt(params) -> str:
    return ",".join(format(p, "g") if isinstance(p, float) else str(p) for p in params)


def _power(beta: float, gamma: float = 0.0) -> Callable:
    def amp(k):
        k = np.asarray(k)
        out = np.zeros(k.shape)
        pos = np.asarray(k > 0, dtype=bool)
        kp = k[pos].astype(float)
        vals = kp ** (-beta)
        if gamma:
            vals = vals * np.log1p(kp) ** gamma
        out[pos] = vals
        return out

    return amp


def _log_power_decay(beta: float, gamma: float, scale: float) -> TailDecay:
    if gamma <= 0:
        return TailDecay.power(beta, scale * (math.log(2.0) ** gamma if gamma else 1.0))
    slack = min(0.25, (beta - 1) / 2) if beta > 1 else beta / 2
    # sup_{t >= 1} log(1+t)^gamma t^-slack, attained before t = e^(gamma/slack)
    top = max(10.0, 100 * math.exp(min(gamma / slack, 600)))
    t = np.geomspace(1.0, top, 200001)
    c = float(np.max(np.log1p(t) ** gamma * t ** (-slack))) * 1.001
    return TailDecay.power(beta - slack, scale * c)


def power_cosine(beta: float) -> Family:
    """``sum_{k>=1} k**-beta cos(kx)``."""
    amp = _power(beta)
    label = f"power_cosine({_fmt([beta])})"
    seq = CoeffSeq(lambda k: 0.5 * amp(k), Support.COSINE_SYMMETRIC, TailDecay.power(beta, 0.5), label,
                   tail=SmoothTail(SmoothProfile(beta), 0.5, 0.5))
    base = one_sided(amp, f"a[{label}]", TailDecay.power(beta, 1.0), SmoothTail(SmoothProfile(beta), 1.0, 0.0))
    return Family("power_cosine", (beta,), seq, base, "cosine")


def _sine(name, params, b: Callable, decay: TailDecay, profile) -> Family:
    label = f"{name}({_fmt(params)})"
    half = TailDecay(decay.kind, decay.constant / 2, decay.valid_from, decay.exponent, decay.ratio, decay.base)
    tail = SmoothTail(profile, 1 / 2j, -1 / 2j) if profile is not None else None
    seq = CoeffSeq(lambda k: b(k) / 2j, Support.SINE_ANTISYMMETRIC, half, label, tail=tail)
    btail = SmoothTail(profile, 1.0, 0.0) if profile is not None else None
    base = one_sided(b, f"b[{label}]", decay, btail)
    return Family(name, tuple(params), seq, base, "sine")


def power_sine(beta: float) -> Family:
    """``sum_{k>=1} k**-beta sin(kx)``."""
    return _sine("power_sine", (beta,), _power(beta), TailDecay.power(beta, 1.0), SmoothProfile(beta))


def log_power_sine(beta: float, gamma: float = 1.0) -> Family:
    """``sum_{k>=1} log(k+1)**gamma k**-beta sin(kx)``."""
    return _sine("log_power_sine", (beta, gamma), _power(beta, gamma),
                 _log_power_decay(beta, gamma, 1.0), SmoothProfile(beta, gamma))


def complex_sector(beta: float, theta: float) -> Family:
    """``c(n) = exp(i theta) n**-beta`` for ``n >= 1``, nothing on negative indices."""
    amp = _power(beta)
    rot = complex(math.cos(theta), math.sin(theta))
    label = f"complex_sector({_fmt([beta, theta])})"
    seq = one_sided(lambda k: rot * amp(k), label, TailDecay.power(beta, 1.0),
                    SmoothTail(SmoothProfile(beta), rot, 0.0))
    return Family("complex_sector", (beta, theta), seq, seq, "complex", sector=abs(theta))


def lacunary_sine(alpha: float) -> Family:
    """``sum_{j>=1} j**-alpha sin(2**j x)`` written as ``sum_n b_n sin(nx)``."""

    def b(k):
        k = _as_index(k)
        j = _exact_log(k, 2)
        out = np.zeros(k.shape)
        hit = j >= 1
        out[hit] = j[hit].astype(float) ** (-alpha)
        return out

    return _sine("lacunary_sine", (alpha,), b, TailDecay.lacunary(2, alpha, 1.0), None)


def finite_poly(*coeffs: float) -> Family:
    """Cosine polynomial ``coeffs[0] + sum_{k>=1} coeffs[k] cos(kx)``."""
    a = np.asarray(coeffs if coeffs else (0.0,), dtype=float)
    N = len(a) - 1
    label = f"finite_poly({_fmt(list(coeffs))})"

    def gen(k):
        k = np.abs(np.asarray(k, dtype=np.int64))
        out = np.where(k == 0, a[0], a[np.clip(k, 0, N)] / 2).astype(complex)
        out[k > N] = 0
        return out

    seq = CoeffSeq(gen, Support.FINITE, TailDecay.finite(N), label, max_degree=N)

    def base_gen(k):
        k = np.asarray(k, dtype=np.int64)
        out = np.zeros(k.shape)
        ok = (k >= 0) & (k <= N)
        out[ok] = a[k[ok]]
        return out

    base = CoeffSeq(base_gen, Support.FINITE, TailDecay.finite(N), f"a[{label}]", max_degree=N)
    return Family("finite_poly", tuple(float(c) for c in coeffs), seq, base, "finite")


REGISTRY: Dict[str, Callable[..., Family]] = {
    "power_cosine": power_cosine,
    "power_sine": power_sine,
    "log_power_sine": log_power_sine,
    "complex_sector": complex_sector,
    "lacunary_sine": lacunary_sine,
    "finite_poly": finite_poly,
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "e": math.e}


def _num(node) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_num(node.left), _num(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_num(node.operand))
    raise ValueError(f"unsupported expression in family parameters: {ast.dump(node)}")


def build(name: str, *params) -> Family:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise UnknownFamilyError(f"unknown family {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    return factory(*params)


def parse_family(text: str) -> Family:
    """Parse ``"power_cosine(2)"``, ``"complex_sector(2, pi/6)"`` or a bare name."""
    text = text.strip()
    try:
        node = ast.parse(text, mode="eval").body
    except SyntaxError as exc:
        raise ValueError(f"cannot parse family spec {text!r}") from exc
    if isinstance(node, ast.Name):
        return build(node.id)
    if not (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)) or node.keywords:
        raise ValueError(f"family spec must look like name(p1, p2, ...), got {text!r}")
    return build(node.func.id, *[_num(a) for a in node.args])


def from_config(entry) -> Family:
    """Family from a config entry: a spec string or ``{"name": ..., "params": [...]}``."""
    if isinstance(entry, str):
        return parse_family(entry)
    if isinstance(entry, dict):
        extra = set(entry) - {"name", "params"}
        if extra:
            raise ValueError(f"unknown keys in family entry: {sorted(extra)}")
        params = entry.get("params", [])
        if isinstance(params, dict):
            return build(entry["name"], **params)
        return build(entry["name"], *params)
    raise ValueError(f"bad family entry {entry!r}")
