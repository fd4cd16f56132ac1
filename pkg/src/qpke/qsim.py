"""Sparse quantum-state simulator over labeled bit-string basis states.

States are complex-amplitude maps over a small support of full-width basis
strings, partitioned into named registers. Supported operations: coherent
classical-function oracles (XOR-write), single-qubit Z powers, computational
and joint Hadamard-basis measurements, and unitaries confined to the span of
an explicit basis list. A dense 2^n reference backend exists for tests only.

Hadamard sampling never enumerates 2^n outcomes: the support's pairwise XOR
differences span a space of dimension m <= support-1; a parity pattern over
an RREF basis of that space is sampled by aggregated probability, and the
outcome is drawn uniformly from the matching affine set (pivot particular
solution plus a uniform kernel element).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .bits import BitString, RegisterLayout, concat, rref
from .rng import RandomSource

PRUNE_THRESHOLD = 1e-12
NORM_TOL = 1e-9
SUPPORT_CAP = 4096
HADAMARD_SUPPORT_CAP = 20
HADAMARD_ENUM_WIDTH = 22  # exact-distribution outcome enumeration bound


class StateError(ValueError):
    pass


class SparseState:
    """Normalized sparse state; treat as immutable (operations return new states)."""

    __slots__ = ("layout", "_terms")

    def __init__(self, layout: RegisterLayout, terms: Mapping[BitString, complex]):
        pruned: dict[BitString, complex] = {}
        width = layout.width
        for bs, amp in terms.items():
            if bs.width != width:
                raise StateError(f"term width {bs.width} != layout width {width}")
            if abs(amp) >= PRUNE_THRESHOLD:
                pruned[bs] = complex(amp)
        if len(pruned) > SUPPORT_CAP:
            raise StateError(f"support {len(pruned)} exceeds cap {SUPPORT_CAP}")
        norm_sq = sum(abs(a) ** 2 for a in pruned.values())
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise StateError(f"state norm^2 = {norm_sq!r} outside tolerance")
        self.layout = layout
        self._terms = pruned

    @property
    def terms(self) -> dict[BitString, complex]:
        return dict(self._terms)

    def support(self) -> list[BitString]:
        return list(self._terms)

    def amplitude(self, bs: BitString) -> complex:
        return self._terms.get(bs, 0j)

    def norm_sq(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return f"SparseState({len(self._terms)} terms over {self.layout.names})"


def inner_product(a: SparseState, b: SparseState) -> complex:
    """<a|b> over matching layouts."""
    if a.layout != b.layout:
        raise StateError("inner product needs identical layouts")
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    acc = 0j
    for bs, amp in small._terms.items():
        other = big._terms.get(bs)
        if other is not None:
            if small is a:
                acc += amp.conjugate() * other
            else:
                acc += other.conjugate() * amp
    return acc


def make_basis_state(layout: RegisterLayout, value: BitString) -> SparseState:
    if value.width != layout.width:
        raise StateError(f"value width {value.width} != layout width {layout.width}")
    return SparseState(layout, {value: 1.0 + 0j})


def superpose(terms: Sequence[tuple[BitString, complex]],
              layout: RegisterLayout | None = None) -> SparseState:
    """Build a state from (basis string, amplitude) pairs, renormalizing.

    Duplicate basis strings merge by amplitude addition. Without an explicit
    layout the state has a single register X of full width.
    """
    if not terms:
        raise StateError("superpose needs at least one term")
    width = terms[0][0].width
    merged: dict[BitString, complex] = {}
    for bs, amp in terms:
        if bs.width != width:
            raise StateError("superpose terms must share a width")
        merged[bs] = merged.get(bs, 0j) + complex(amp)
    norm_sq = sum(abs(a) ** 2 for a in merged.values())
    if norm_sq < PRUNE_THRESHOLD:
        raise StateError("superpose amplitudes sum to zero")
    scale = 1.0 / math.sqrt(norm_sq)
    if layout is None:
        layout = RegisterLayout.of(X=width)
    elif layout.width != width:
        raise StateError(f"layout width {layout.width} != term width {width}")
    return SparseState(layout, {bs: a * scale for bs, a in merged.items()})


def extend_with_register(state: SparseState, name: str, width: int) -> SparseState:
    """Append a fresh all-zero register (ancilla)."""
    layout = RegisterLayout(state.layout.regs + ((name, width),))
    zero = BitString.zeros(width)
    return SparseState(layout, {bs.cat(zero): a for bs, a in state._terms.items()})


def drop_register(state: SparseState, name: str) -> SparseState:
    """Remove a register whose value is identical across the support."""
    vals = {state.layout.extract(bs, name) for bs in state._terms}
    if len(vals) != 1:
        raise StateError(f"register {name} is not constant over the support")
    layout = state.layout.drop([name])
    keep = [n for n in state.layout.names if n != name]
    return SparseState(
        layout,
        {state.layout.extract_many(bs, keep): a for bs, a in state._terms.items()},
    )


def coherent_eval(state: SparseState, f: Callable[[BitString], BitString],
                  in_regs: Sequence[str], out_reg: str) -> SparseState:
    """XOR-write f(input registers) into out_reg on every branch.

    Applying twice with the same f restores the state (the oracle is its own
    inverse). Protocol code always supplies a fresh all-zero out_reg.
    """
    if out_reg not in state.layout.names:
        raise StateError(f"output register {out_reg} not present")
    out_w = state.layout.reg_width(out_reg)
    new_terms: dict[BitString, complex] = {}
    for bs, amp in state._terms.items():
        x = state.layout.extract_many(bs, in_regs)
        y = f(x)
        if not isinstance(y, BitString) or y.width != out_w:
            raise StateError(f"oracle output width != register {out_reg} width {out_w}")
        cur = state.layout.extract(bs, out_reg)
        nbs = state.layout.replace(bs, out_reg, cur ^ y)
        new_terms[nbs] = new_terms.get(nbs, 0j) + amp
    return SparseState(state.layout, new_terms)


def apply_z_power(state: SparseState, reg: str, b: int) -> SparseState:
    """Z^b on a width-1 register: branches with the bit set pick up (-1)^b."""
    if state.layout.reg_width(reg) != 1:
        raise StateError(f"register {reg} must have width 1")
    if b % 2 == 0:
        return state
    terms = {
        bs: (-amp if state.layout.extract(bs, reg).value else amp)
        for bs, amp in state._terms.items()
    }
    return SparseState(state.layout, terms)


def measure_computational(state: SparseState, reg: str,
                          rng: RandomSource) -> tuple[BitString, SparseState]:
    """Born-rule sample of one register; returns (outcome, collapsed state)."""
    buckets: dict[BitString, float] = {}
    for bs, amp in state._terms.items():
        key = state.layout.extract(bs, reg)
        buckets[key] = buckets.get(key, 0.0) + abs(amp) ** 2
    outcomes = list(buckets)
    pick = outcomes[rng.choose_weighted([buckets[o] for o in outcomes])]
    scale = 1.0 / math.sqrt(buckets[pick])
    rest = {
        bs: amp * scale
        for bs, amp in state._terms.items()
        if state.layout.extract(bs, reg) == pick
    }
    return pick, SparseState(state.layout, rest)


def _hadamard_groups(state: SparseState, regs: Sequence[str]):
    """Group support by unmeasured content; RREF the measured XOR differences.

    Yields (unmeasured key, x0, amps, combos, rows, pivots) per group, where
    combos[j] is the row mask expressing x_j ^ x0.
    """
    keep = [n for n in state.layout.names if n not in set(regs)]
    groups: dict[BitString, list[tuple[int, complex]]] = {}
    for bs, amp in state._terms.items():
        key = state.layout.extract_many(bs, keep) if keep else BitString(0, 0)
        meas = state.layout.extract_many(bs, regs)
        groups.setdefault(key, []).append((meas.value, amp))
    out = []
    for key, pairs in groups.items():
        x0 = pairs[0][0]
        diffs = [x ^ x0 for x, _ in pairs]
        rows, pivots, combos = rref(diffs)
        amps = [a for _, a in pairs]
        out.append((key, x0, amps, combos, rows, pivots))
    return keep, out


def _pattern_amplitude(amps: list[complex], combos: list[int], s: int) -> complex:
    acc = 0j
    for a, c in zip(amps, combos):
        if (c & s).bit_count() & 1:
            acc -= a
        else:
            acc += a
    return acc


def measure_hadamard_all(state: SparseState, regs: Sequence[str],
                         rng: RandomSource) -> tuple[BitString, SparseState]:
    """Jointly measure the listed registers in the Hadamard basis.

    Returns (d, state over the remaining registers); with every register
    measured the remaining state is the trivial zero-width state.
    """
    if len(state) > HADAMARD_SUPPORT_CAP:
        raise StateError(
            f"support {len(state)} exceeds Hadamard cap {HADAMARD_SUPPORT_CAP}; "
            "measure a computational register first")
    n = sum(state.layout.reg_width(r) for r in regs)
    keep, groups = _hadamard_groups(state, regs)

    weights = []
    choices = []
    for gi, (key, x0, amps, combos, rows, pivots) in enumerate(groups):
        m = len(rows)
        for s in range(1 << m):
            w = abs(_pattern_amplitude(amps, combos, s)) ** 2 / (1 << m)
            weights.append(w)
            choices.append((gi, s))
    gi, s = choices[rng.choose_weighted(weights)]
    key, x0, amps, combos, rows, pivots = groups[gi]

    # particular solution from pivot unit vectors, then a uniform kernel shift
    d = 0
    for i, p in enumerate(pivots):
        if (s >> i) & 1:
            d ^= 1 << p
    y = rng.bitstring(n).value
    for i, (row, p) in enumerate(zip(rows, pivots)):
        if (y & row).bit_count() & 1:
            y ^= 1 << p
    d ^= y
    outcome = BitString(d, n)

    if not keep:
        return outcome, SparseState(RegisterLayout(()), {BitString(0, 0): 1.0 + 0j})
    # amplitude of each group's unmeasured key after observing d
    post: dict[BitString, complex] = {}
    for bs, amp in state._terms.items():
        k = state.layout.extract_many(bs, keep)
        x = state.layout.extract_many(bs, regs)
        sign = -1.0 if (d & x.value).bit_count() & 1 else 1.0
        post[k] = post.get(k, 0j) + amp * sign
    norm_sq = sum(abs(a) ** 2 for a in post.values())
    scale = 1.0 / math.sqrt(norm_sq)
    layout = state.layout.drop(list(regs))
    return outcome, SparseState(layout, {k: a * scale for k, a in post.items()})


@dataclass(frozen=True)
class SubspaceUnitary:
    """Unitary acting inside the span of an explicit basis-state list."""

    basis: tuple[BitString, ...]
    matrix: np.ndarray

    def __post_init__(self):
        k = len(self.basis)
        if self.matrix.shape != (k, k):
            raise StateError(f"matrix must be {k}x{k}")
        if len(set(self.basis)) != k:
            raise StateError("basis states must be distinct")
        err = np.max(np.abs(self.matrix @ self.matrix.conj().T - np.eye(k)))
        if err > NORM_TOL:
            raise StateError(f"matrix not unitary (deviation {err:.2e})")


def apply_subspace_unitary(state: SparseState, u: SubspaceUnitary) -> SparseState:
    index = {bs: i for i, bs in enumerate(u.basis)}
    vec = np.zeros(len(u.basis), dtype=complex)
    for bs, amp in state._terms.items():
        if bs not in index:
            raise StateError("state support not contained in the unitary's basis")
        vec[index[bs]] = amp
    out = u.matrix @ vec
    return SparseState(state.layout,
                       {bs: out[i] for bs, i in index.items()})


def exact_distribution(state: SparseState, measurement: str,
                       regs: Sequence[str]) -> dict[BitString, float]:
    """Analytic outcome distribution; outcomes below 1e-12 are omitted."""
    if measurement == "computational":
        probs: dict[BitString, float] = {}
        for bs, amp in state._terms.items():
            key = state.layout.extract_many(bs, regs)
            probs[key] = probs.get(key, 0.0) + abs(amp) ** 2
        return {k: p for k, p in probs.items() if p > 1e-12}
    if measurement != "hadamard":
        raise StateError(f"unknown measurement {measurement!r}")
    if len(state) > HADAMARD_SUPPORT_CAP:
        raise StateError(f"support {len(state)} exceeds Hadamard cap")
    n = sum(state.layout.reg_width(r) for r in regs)
    if n > HADAMARD_ENUM_WIDTH:
        raise StateError(f"cannot enumerate 2^{n} Hadamard outcomes")
    keep = [nm for nm in state.layout.names if nm not in set(regs)]
    rows: dict[BitString, list[tuple[int, complex]]] = {}
    for bs, amp in state._terms.items():
        key = state.layout.extract_many(bs, keep) if keep else BitString(0, 0)
        rows.setdefault(key, []).append(
            (state.layout.extract_many(bs, regs).value, amp))
    dist: dict[BitString, float] = {}
    for d in range(1 << n):
        p = 0.0
        for pairs in rows.values():
            acc = 0j
            for xv, a in pairs:
                if (d & xv).bit_count() & 1:
                    acc -= a
                else:
                    acc += a
            p += abs(acc) ** 2
        p /= 1 << n
        if p > 1e-12:
            dist[BitString(d, n)] = p
    return dist


def dense_reference(state: SparseState) -> np.ndarray:
    """Full 2^n amplitude vector (test oracle only); index = basis-string value."""
    n = state.layout.width
    if n > 14:
        raise StateError(f"dense reference capped at 14 qubits, got {n}")
    vec = np.zeros(1 << n, dtype=complex)
    for bs, amp in state._terms.items():
        vec[bs.value] = amp
    return vec


def dense_hadamard_distribution(state: SparseState) -> np.ndarray:
    """Walsh-Hadamard transform of the dense vector, as outcome probabilities."""
    vec = dense_reference(state)
    n = state.layout.width
    h = vec.copy()
    for q in range(n):
        step = 1 << q
        h = h.reshape(-1, 2 * step)
        top = h[:, :step].copy()
        bot = h[:, step:].copy()
        h[:, :step] = top + bot
        h[:, step:] = top - bot
        h = h.reshape(-1)
    h /= math.sqrt(1 << n)
    return np.abs(h) ** 2


def format_state_dump(state: SparseState) -> str:
    """Debug text format: one term per line, hex float amplitudes then bits."""
    lines = []
    for bs in sorted(state._terms, key=lambda b: b.value):
        amp = state._terms[bs]
        lines.append(f"{amp.real.hex()} {amp.imag.hex()} {bs}")
    return "\n".join(lines)


def parse_state_dump(text: str, layout: RegisterLayout) -> SparseState:
    terms: dict[BitString, complex] = {}
    for line in text.strip().splitlines():
        re_s, im_s, bits = line.split()
        terms[BitString.from_str(bits)] = complex(float.fromhex(re_s),
                                                  float.fromhex(im_s))
    return SparseState(layout, terms)
