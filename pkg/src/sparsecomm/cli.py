"""Command-line entry point: dict / encode / decode / simulate / analyze / preset.

Exit codes: 0 on success, 1 on a domain error (bad config, failed invariant,
unreadable file), 2 on a usage error.  Results go to stdout or the requested
output file; diagnostics and errors go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import codec, decoders, presets, simulate
from . import dictionaries as dicts


class CliError(Exception):
    """Domain error surfaced to the user with exit code 1."""


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _hex_to_bits(text: str, n_bits: int) -> np.ndarray:
    value = int(text, 16)
    if value < 0 or value.bit_length() > n_bits:
        raise CliError(f"hex block {text!r} does not fit in {n_bits} bits")
    return np.array([(value >> (n_bits - 1 - i)) & 1 for i in range(n_bits)], dtype=np.uint8)


def _bits_to_hex(bits: np.ndarray) -> str:
    value = 0
    for b in bits.tolist():
        value = (value << 1) | int(b)
    width = (len(bits) + 3) // 4
    return format(value, f"0{width}x")


def _codeword_to_json(s: np.ndarray) -> list:
    if np.iscomplexobj(s):
        return [[float(v.real), float(v.imag)] for v in s]
    return [float(v) for v in s]


def _codeword_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 2:
        return arr[:, 0] + 1j * arr[:, 1]
    if arr.ndim == 1:
        return arr
    raise CliError("observation JSON must be a flat array or [re, im] pairs")


def _load_scheme(args) -> codec.SchemeSpec:
    d = dicts.load_dictionary(args.dict)
    constellation = codec.Constellation.from_name(args.constellation)
    return codec.make_scheme(d, args.scheme, args.sparsity, constellation)


def _write_or_print(payload: str, out_path):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_dict_build(args) -> int:
    if args.kind == "gold":
        d = dicts.build_gold(args.n, include_identity_column=not args.no_identity)
    else:
        d = dicts.build_mub(args.n)
    if args.random_phase_seed is not None:
        d = dicts.apply_random_phase(d, args.random_phase_seed)
    dicts.save_dictionary(d, args.out)
    print(f"wrote {args.kind} dictionary N={d.n_rows} L={d.n_cols} to {args.out}",
          file=sys.stderr)
    return 0


def _cmd_dict_inspect(args) -> int:
    d = dicts.load_dictionary(args.path)
    mu = structural_coherence(d)
    alphabet = "binary {+1,-1}/sqrt(N)" if d.kind == "gold" else "quaternary {+1,-1,+i,-i}/sqrt(N)"
    if d.kind == dicts.KIND_MUB_RANDOM_PHASE:
        alphabet += " with per-column random phase"
    print(f"kind={d.kind}")
    print(f"N={d.n_rows} L={d.n_cols} mu={mu:.6g}")
    print(f"alphabet: {alphabet}")
    if d.phase_seed is not None:
        print(f"phase_seed={d.phase_seed}")
    if d.subblock_lengths:
        print(f"subblocks: {list(d.subblock_lengths)}")
    if args.sparsity:
        plan = dicts.partition_subblocks(d.n_cols, args.sparsity)
        n_bits = codec.bits_capacity_ssc(plan, 4 if not d.is_real else 2)
        print(f"subblock plan K={args.sparsity}: {list(plan)} "
              f"(ssc bits with {'qpsk' if not d.is_real else 'bpsk'}: {n_bits})")
    return 0


def structural_coherence(d: dicts.Dictionary) -> float:
    """Coherence via family structure where exact, generic scan otherwise."""
    if d._mu is not None:
        return d._mu
    if d.kind == dicts.KIND_GOLD:
        family = dicts.gold_family_sequences(d.meta["degree"],
                                             (d.meta["poly_a"], d.meta["poly_b"]))
        table = dicts.gold_correlation_table(family)
        n_seqs = family.shape[0]
        table[np.arange(n_seqs), np.arange(n_seqs), 0] = 0
        d._mu = float(np.max(np.abs(table))) / d.n_rows
        return d._mu
    if d.kind in (dicts.KIND_MUB, dicts.KIND_MUB_RANDOM_PHASE) and d.n_rows <= 128:
        within, cross = dicts.unbiasedness_deviation(d)
        if within < 1e-10 and cross < 1e-10:
            d._mu = 1.0 / math.sqrt(d.n_rows)
            return d._mu
    return dicts.mutual_coherence(d)


def _cmd_encode(args) -> int:
    spec = _load_scheme(args)
    bits = _hex_to_bits(args.bits, spec.n_bits)
    msg = codec.encode(bits, spec)
    codeword = codec.synthesize(msg, spec.dictionary)
    _write_or_print(json.dumps(_codeword_to_json(codeword)), args.out)
    if args.verbose:
        print(f"support={list(msg.support)} n_bits={spec.n_bits}", file=sys.stderr)
    return 0


def _cmd_decode(args) -> int:
    spec = _load_scheme(args)
    if os.path.exists(args.obs):
        with open(args.obs) as fh:
            data = json.load(fh)
    else:
        data = json.loads(args.obs)
    y = _codeword_from_json(data)
    if y.size != spec.dictionary.n_rows:
        raise CliError(f"observation length {y.size} != N={spec.dictionary.n_rows}")
    cfg = decoders.DecodeConfig(
        sparsity=args.sparsity,
        constellation=spec.constellation,
        subblock_discard=(args.scheme == "ssc"),
        paths=args.paths if args.paths else (args.sparsity if args.algo == "pmad" else 1),
    )
    msg, trace = decoders.decode_with_trace(y, spec.dictionary, cfg, args.algo)
    try:
        bits = codec.decode_bits(msg, spec)
        bits_hex = _bits_to_hex(bits)
    except codec.CodecError as exc:
        bits_hex = None
        trace["bits_error"] = str(exc)
    result = {"bits_hex": bits_hex,
              "support": list(msg.support),
              "symbols": [[s.real, s.imag] for s in msg.symbols],
              "diagnostics": trace}
    _write_or_print(json.dumps(result), args.out)
    return 0


def _cmd_simulate(args) -> int:
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("SPARSECOMM_WORKERS", "1"))
    if args.preset:
        configs = presets.get_preset(args.preset, output=args.out)
    else:
        with open(args.config) as fh:
            cfg = simulate.SimConfig.from_json(fh.read())
        if args.out:
            import dataclasses
            cfg = dataclasses.replace(cfg, output=args.out)
        configs = [cfg]

    def progress(record):
        low, high = record.interval
        print(f"  {record.ebn0_db} dB: bler={record.bler:.3e} "
              f"[{low:.2e}, {high:.2e}] ({record.trials} trials)", file=sys.stderr)

    for cfg in configs:
        label = (f"{cfg.scheme} {cfg.dictionary} K={cfg.sparsity} "
                 f"{cfg.constellation} {cfg.algo}")
        print(f"running {label} -> {cfg.output}", file=sys.stderr)
        runner = simulate.run_multiuser_sim if cfg.multiuser else simulate.run_bler_sweep
        runner(cfg, workers=workers, resume=args.resume, progress=progress)
    return 0


def _cmd_preset(args) -> int:
    if args.action == "list":
        for name in presets.preset_names():
            print(f"{name:12s} {presets.describe(name)}")
        return 0
    configs = presets.get_preset(args.name)
    print(json.dumps([json.loads(c.to_json()) for c in configs], indent=2))
    return 0


def _cmd_analyze(args) -> int:
    rows = simulate.read_records(args.csv)
    if not rows:
        raise CliError(f"no records found in {args.csv}")
    curves = {}
    for row in rows:
        key = (row["scheme"], row["dict_kind"], row["N"], row["L"], row["K"],
               row["M"], row["algo"], row["T"], row.get("user", "all"))
        curves.setdefault(key, []).append(row)

    references = None
    if args.refs:
        with open(args.refs) as fh:
            references = json.load(fh).get("references", [])

    report = []
    for key, points in sorted(curves.items()):
        points.sort(key=lambda r: r["ebn0_db"])
        label = "{}/{}/N={}/K={}/{}{}".format(
            key[0], key[1], key[2], key[4], key[6],
            "" if key[8] == "all" else f"/{key[8]}")
        entry = {"curve": label, "crossings": {}}
        for target in args.target_bler:
            crossing = _crossing_db(points, target)
            entry["crossings"][repr(target)] = crossing if crossing is not None else "unbounded"
        report.append(entry)

    if references:
        for entry, ref in ((e, r) for e in report for r in references):
            for point in ref.get("points", []):
                crossing = entry["crossings"].get(repr(point["bler"]))
                if isinstance(crossing, float):
                    entry.setdefault("vs_references", []).append({
                        "reference": ref["label"],
                        "bler": point["bler"],
                        "reference_db": point["ebn0_db"],
                        "gain_db": point["ebn0_db"] - crossing,
                    })

    if args.json:
        _write_or_print(json.dumps(report, indent=2), args.out)
    else:
        lines = []
        for entry in report:
            lines.append(entry["curve"])
            for target, crossing in entry["crossings"].items():
                text = f"{crossing:.3f} dB" if isinstance(crossing, float) else crossing
                lines.append(f"  BLER {target}: {text}")
            for cmp in entry.get("vs_references", []):
                lines.append(f"  vs {cmp['reference']} @ BLER {cmp['bler']:g}: "
                             f"{cmp['gain_db']:+.2f} dB gain")
        _write_or_print("\n".join(lines), args.out)
    return 0


def _crossing_db(points, target: float):
    """First E_b/N_0 where the curve crosses the target BLER.

    Log-linear interpolation of log10(BLER) against dB between adjacent grid
    points; zero-BLER measurements cannot be placed on the log scale and are
    skipped.  Returns None when the curve never reaches the target.
    """
    log_t = math.log10(target)
    usable = [(p["ebn0_db"], math.log10(p["bler"])) for p in points if p["bler"] > 0]
    for (d1, b1), (d2, b2) in zip(usable[:-1], usable[1:]):
        if b1 >= log_t >= b2:
            if b1 == b2:
                return d1
            return d1 + (d2 - d1) * (b1 - log_t) / (b1 - b2)
    for d, b in usable:
        if b == log_t:
            return d
    return None


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsecomm",
        description="Sparse-signal error-control coding toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dict = sub.add_parser("dict", help="build or inspect dictionary caches")
    dict_sub = p_dict.add_subparsers(dest="action", required=True)
    p_build = dict_sub.add_parser("build")
    p_build.add_argument("--kind", choices=("gold", "mub"), required=True)
    p_build.add_argument("--n", type=int, required=True,
                         help="LFSR degree (gold) or log2 dimension (mub)")
    p_build.add_argument("--random-phase-seed", type=int, default=None)
    p_build.add_argument("--no-identity", action="store_true",
                         help="omit the appended standard-basis column (gold)")
    p_build.add_argument("--out", required=True)
    p_build.set_defaults(func=_cmd_dict_build)
    p_inspect = dict_sub.add_parser("inspect")
    p_inspect.add_argument("path")
    p_inspect.add_argument("-K", dest="sparsity", type=int, default=None,
                           help="also print the subblock plan for this sparsity")
    p_inspect.set_defaults(func=_cmd_dict_inspect)

    p_enc = sub.add_parser("encode", help="bits -> codeword JSON")
    p_enc.add_argument("--dict", required=True)
    p_enc.add_argument("--scheme", choices=("sc", "ssc"), required=True)
    p_enc.add_argument("-K", dest="sparsity", type=int, required=True)
    p_enc.add_argument("--constellation", default="qpsk")
    p_enc.add_argument("--bits", required=True, help="information block as hex")
    p_enc.add_argument("--out", default=None)
    p_enc.set_defaults(func=_cmd_encode)

    p_dec = sub.add_parser("decode", help="observation JSON -> bits + diagnostics")
    p_dec.add_argument("--dict", required=True)
    p_dec.add_argument("--scheme", choices=("sc", "ssc"), required=True)
    p_dec.add_argument("--algo", choices=("mad", "pmad", "omp", "ml"), default="mad")
    p_dec.add_argument("-K", dest="sparsity", type=int, required=True)
    p_dec.add_argument("-T", dest="paths", type=int, default=None)
    p_dec.add_argument("--constellation", default="qpsk")
    p_dec.add_argument("--obs", required=True, help="JSON array (inline or file path)")
    p_dec.add_argument("--out", default=None)
    p_dec.set_defaults(func=_cmd_decode)

    p_sim = sub.add_parser("simulate", help="Monte Carlo BLER sweeps")
    group = p_sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="JSON simulation config")
    group.add_argument("--preset", help="named preset (see `preset list`)")
    p_sim.add_argument("--workers", type=int, default=None,
                       help="parallel workers (default $SPARSECOMM_WORKERS or 1)")
    p_sim.add_argument("--resume", action="store_true")
    p_sim.add_argument("--out", default=None, help="override the output CSV path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_pre = sub.add_parser("preset", help="list or show canned configs")
    p_pre.add_argument("action", choices=("list", "show"))
    p_pre.add_argument("name", nargs="?")
    p_pre.set_defaults(func=_cmd_preset)

    p_an = sub.add_parser("analyze", help="dB at target BLER per curve")
    p_an.add_argument("csv")
    p_an.add_argument("--target-bler", type=float, nargs="+", default=[1e-3, 1e-4])
    p_an.add_argument("--refs", default=None, help="reference-points JSON")
    p_an.add_argument("--json", action="store_true")
    p_an.add_argument("--out", default=None)
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (CliError, codec.CodecError, decoders.DecodeError, dicts.DictionaryError,
            simulate.SimulationError, KeyError, FileNotFoundError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
