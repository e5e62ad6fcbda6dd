"""Canned simulation configs reproducing the study's figure layouts.

Each preset is a list of curve configs sharing one output CSV.  The plain
names are desk-scale (bounded trial counts, coarse grids) and finish in
minutes; ``<name>-full`` variants carry full-fidelity stopping rules and are
meant for long runs.
"""

from __future__ import annotations

import dataclasses

from .simulate import SimConfig, StoppingRule

RANDOM_PHASE_SEED = 1001

DESK = StoppingRule(min_trials=1000, min_block_errors=50, max_trials=20_000,
                    batch_size=1000, slice_size=250)
FULL = StoppingRule(min_trials=10_000, min_block_errors=100, max_trials=10_000_000,
                    batch_size=5000, slice_size=250)

_MUB64 = {"kind": "mub", "m": 6}
_GOLD127 = {"kind": "gold", "n": 7}


def _grid(start, stop, step):
    out = []
    value = start
    while value <= stop + 1e-9:
        out.append(round(value, 4))
        value += step
    return tuple(out)


def _curve(dictionary, scheme, k, constellation, algo, grid, seed, stopping,
           random_phase=False, paths=None):
    return SimConfig(
        dictionary=dict(dictionary), scheme=scheme, sparsity=k,
        constellation=constellation, algo=algo, ebn0_grid=grid,
        master_seed=seed, paths=paths,
        random_phase_seed=RANDOM_PHASE_SEED if random_phase else None,
        stopping=stopping)


def _fig1(stopping, coarse):
    # encoding-scheme impact: sc vs ssc on the N=64 complex dictionary
    step = 2.0 if coarse else 1.0
    curves = []
    for scheme, base_seed in (("sc", 110), ("ssc", 120)):
        curves.append(_curve(_MUB64, scheme, 1, "qpsk", "mad",
                             _grid(0, 10, step), base_seed + 1, stopping))
        curves.append(_curve(_MUB64, scheme, 3, "qpsk", "mad",
                             _grid(2, 12, step), base_seed + 3, stopping))
        curves.append(_curve(_MUB64, scheme, 5, "qpsk", "mad",
                             _grid(4, 14, step), base_seed + 5, stopping, random_phase=True))
    return curves


def _fig2(stopping, coarse):
    # decoding-algorithm impact: mad vs omp, sparse coding scheme
    step = 2.0 if coarse else 1.0
    return [
        _curve(_MUB64, "sc", 3, "qpsk", algo, _grid(2, 12, step), 210 + i, stopping)
        for i, algo in enumerate(("mad", "omp"))
    ]


def _fig3(stopping, coarse):
    # mad vs parallel mad on ssc, K in {1, 3, 5}
    step = 2.0 if coarse else 1.0
    curves = []
    for algo, base_seed in (("mad", 310), ("pmad", 320)):
        curves.append(_curve(_MUB64, "ssc", 1, "qpsk", algo,
                             _grid(0, 10, step), base_seed + 1, stopping))
        curves.append(_curve(_MUB64, "ssc", 3, "qpsk", algo,
                             _grid(2, 12, step), base_seed + 3, stopping))
        curves.append(_curve(_MUB64, "ssc", 5, "qpsk", algo,
                             _grid(4, 14, step), base_seed + 5, stopping, random_phase=True))
    return curves


def _fig4(stopping, coarse):
    # random-phase impact at the sparsity level where interference aligns
    step = 2.0 if coarse else 1.0
    return [
        _curve(_MUB64, "ssc", 5, "qpsk", "mad", _grid(4, 14, step), 410, stopping),
        _curve(_MUB64, "ssc", 5, "qpsk", "mad", _grid(4, 14, step), 411, stopping,
               random_phase=True),
    ]


def _fig5(stopping, coarse):
    # complex dictionaries at code rate ~ 1/2 for growing block length
    step = 2.0 if coarse else 1.0
    return [
        _curve({"kind": "mub", "m": 3}, "ssc", 1, "qpsk", "pmad",
               _grid(0, 12, step), 510, stopping),
        _curve({"kind": "mub", "m": 4}, "ssc", 2, "qpsk", "pmad",
               _grid(0, 12, step), 511, stopping),
        _curve({"kind": "mub", "m": 5}, "ssc", 3, "qpsk", "pmad",
               _grid(1, 13, step), 512, stopping),
        _curve(_MUB64, "ssc", 5, "qpsk", "pmad",
               _grid(2, 14, step), 513, stopping, random_phase=True),
    ]


def _fig6(stopping, coarse):
    # the length-127 Gold dictionary across code rates (sparsity sweep)
    step = 1.0 if coarse else 0.5
    return [
        _curve(_GOLD127, "ssc", k, "bpsk", "pmad", _grid(0, 7, step), 610 + k, stopping)
        for k in (1, 2, 3, 4, 5)
    ]


def _fig7(stopping, coarse):
    # very small block lengths, to overlay against published short codes
    step = 2.0 if coarse else 1.0
    return [
        _curve({"kind": "mub", "m": 3}, "ssc", 1, "qpsk", "pmad",
               _grid(0, 12, step), 710, stopping),
        _curve({"kind": "mub", "m": 4}, "ssc", 2, "qpsk", "pmad",
               _grid(0, 12, step), 711, stopping),
    ]


def _fig8(stopping, coarse):
    # the (127,63) Gold scheme, to overlay against published (128,64) codes
    step = 1.0 if coarse else 0.5
    return [_curve(_GOLD127, "ssc", 5, "bpsk", "pmad", _grid(2, 6, step), 810, stopping)]


_BUILDERS = {
    "fig1": (_fig1, "encoding impact: sc vs ssc, N=64 complex, K=1/3/5"),
    "fig2": (_fig2, "decoding impact: mad vs omp, sc scheme, K=3"),
    "fig3": (_fig3, "mad vs parallel mad, ssc, K=1/3/5"),
    "fig4": (_fig4, "random phase vs zero phase, K=5"),
    "fig5": (_fig5, "rate-1/2 family across block lengths"),
    "fig6": (_fig6, "Gold N=127 dictionary, K=1..5"),
    "fig7": (_fig7, "small block length overlay vs published codes"),
    "fig8": (_fig8, "(127,63) scheme overlay vs published (128,64) codes"),
}


def preset_names() -> list:
    names = []
    for name in _BUILDERS:
        names.append(name)
        names.append(f"{name}-full")
    return names


def describe(name: str) -> str:
    base = name[:-5] if name.endswith("-full") else name
    builder, text = _BUILDERS[base]
    scale = "full-fidelity" if name.endswith("-full") else "desk-scale"
    return f"{text} ({scale})"


def get_preset(name: str, output: str | None = None) -> list:
    """Instantiate a preset's curve configs, all pointed at one CSV."""
    base = name[:-5] if name.endswith("-full") else name
    if base not in _BUILDERS:
        raise KeyError(f"unknown preset {name!r}; have {', '.join(preset_names())}")
    full = name.endswith("-full")
    builder, _ = _BUILDERS[base]
    configs = builder(FULL if full else DESK, coarse=not full)
    out = output if output is not None else f"{name}.csv"
    return [dataclasses.replace(c, output=out) for c in configs]
