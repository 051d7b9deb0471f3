"""Command line entry point: decompose, train, monitor, contrib, evaluate.

Exit status 0 on success, 1 on a computation error, 2 on bad input or usage.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .decompose import DecompositionConfig, decompose, load_blocks, save_blocks
from .errors import BlockmonError, ComputationError, InputError
from .evaluation import (
    TEP_ONSET,
    TEP_PERIOD_MIN,
    BlockMonitor,
    evaluate_series,
    fault_id_from_name,
    load_dataset,
    read_columns,
)
from .export import (
    read_index_column,
    write_contrib_csv,
    write_contrib_svg,
    write_json,
    write_monitor_csv,
    write_summary_csv,
)
from .flowsheet import load_flowsheet, tep_flowsheet_path
from .fusion import AlarmConfig, calibrate_threshold, confirm_alarms
from .pca import load_models, save_models

log = logging.getLogger("blockmon")


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--transpose", action="store_true",
                   help="file rows are variables (layout of the public TEP d00.dat)")
    p.add_argument("--columns", metavar="FILE",
                   help="column tags in file order; default is the 52 TEP columns")
    p.add_argument("--period", type=float, default=TEP_PERIOD_MIN,
                   help="sample period in minutes (default: %(default)s)")


def _threshold_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threshold", type=float,
                   help="fixed threshold on the fused index (default: model alpha)")
    p.add_argument("--calibrate", metavar="FILE",
                   help="normal-operation data used to recalibrate the fused-index threshold")
    p.add_argument("--calibrate-index", metavar="CSV",
                   help="monitor CSV of a normal run whose bic column sets the threshold")
    p.add_argument("--target-far", type=float, default=0.05,
                   help="false-alarm fraction targeted by calibration (default: %(default)s)")
    p.add_argument("--confirm-run", type=int, default=7,
                   help="consecutive exceedances that confirm a fault (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockmon", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="split a flowsheet into monitoring blocks")
    p.add_argument("--flowsheet", default=str(tep_flowsheet_path()),
                   help="flowsheet file (default: bundled Tennessee Eastman digraph)")
    p.add_argument("--delta", type=float, default=0.15,
                   help="MAR threshold below which subgraphs merge (default: %(default)s)")
    p.add_argument("--control-aware", action="store_true",
                   help="also pull each loop's MV into its CV's block")
    p.add_argument("--exclusive-streams", action="store_true",
                   help="give each stream to one unit only (its consumer)")
    p.add_argument("--undirected-neighbors", action="store_true",
                   help="treat unit->stream edges as adjacency when merging")
    p.add_argument("--move-mv", action="store_true",
                   help="move rather than copy MVs during control-aware refinement")
    p.add_argument("--out", default="blocks.json", help="output JSON (default: %(default)s)")

    p = sub.add_parser("train", help="fit one full-PCA model per block")
    p.add_argument("--blocks", required=True, help="blocks JSON from 'decompose'")
    p.add_argument("--data", required=True, help="normal-operation training data")
    p.add_argument("--alpha", type=float, default=0.01,
                   help="significance level of the T2 limits (default: %(default)s)")
    _data_args(p)
    p.add_argument("--out", default="models.json", help="model bundle (default: %(default)s)")

    p = sub.add_parser("monitor", help="score a data file and write the monitoring CSV")
    p.add_argument("--models", required=True, help="model bundle from 'train'")
    p.add_argument("--data", required=True, help="data file to monitor")
    _data_args(p)
    _threshold_args(p)
    p.add_argument("--out", default="monitor.csv", help="output CSV (default: %(default)s)")

    p = sub.add_parser("contrib", help="export a block's clipped contribution map")
    p.add_argument("--models", required=True, help="model bundle from 'train'")
    p.add_argument("--data", required=True, help="data file")
    p.add_argument("--block", required=True, help="block name as stored in the bundle")
    p.add_argument("--start", type=int, default=0, help="first sample index (default: 0)")
    p.add_argument("--end", type=int, help="one past the last sample index (default: all)")
    _data_args(p)
    p.add_argument("--out", default="contrib.csv", help="output CSV (default: %(default)s)")
    p.add_argument("--svg", metavar="FILE", help="also write a grayscale SVG heatmap")

    p = sub.add_parser("evaluate", help="FDR/FAR reports for a list of test files")
    p.add_argument("--models", required=True, help="model bundle from 'train'")
    p.add_argument("files", nargs="*", metavar="FILE[:ONSET]",
                   help="test files; ONSET overrides --onset, 'none' marks normal data")
    p.add_argument("--onset", type=int, default=TEP_ONSET,
                   help="fault onset sample index (default: %(default)s)")
    _data_args(p)
    _threshold_args(p)
    p.add_argument("--out-dir", default="reports", help="output directory (default: %(default)s)")
    return ap


def _columns(args):
    return read_columns(_existing(args.columns)) if args.columns else None


def _load(args, path, onset=None):
    return load_dataset(_existing(path), args.transpose, _columns(args), onset, args.period)


def _monitor(args) -> BlockMonitor:
    mon = BlockMonitor(load_models(_existing(args.models)), confirm_run=args.confirm_run)
    if args.threshold is not None:
        mon.threshold = args.threshold
    if args.calibrate:
        mon.calibrate(_load(args, args.calibrate), args.target_far)
    elif args.calibrate_index:
        series = read_index_column(_existing(args.calibrate_index))
        mon.threshold = calibrate_threshold(series, args.target_far)
    return mon


def cmd_decompose(args) -> None:
    g = load_flowsheet(_existing(args.flowsheet))
    cfg = DecompositionConfig(args.delta, args.exclusive_streams, args.control_aware,
                              args.undirected_neighbors, args.move_mv)
    blocks = decompose(g, cfg)
    save_blocks(blocks, args.out)
    for b in blocks:
        print(f"{b.name}\tunits={','.join(b.units)}\tvariables={len(b.variables)}")
    print(f"wrote {len(blocks)} blocks to {args.out}")


def cmd_train(args) -> None:
    blocks = load_blocks(_existing(args.blocks))
    train = _load(args, args.data)
    mon = BlockMonitor.fit(train, blocks, args.alpha)
    save_models(mon.models, args.out)
    for m in mon.models:
        print(f"{m.block_name}\tp={m.p}\tk={m.k}\tt2_limit={m.t2_limit:.6g}")
    print(f"wrote {len(mon.models)} models to {args.out}")


def cmd_monitor(args) -> None:
    mon = _monitor(args)
    data = _load(args, args.data)
    series = mon.score(data)
    write_monitor_csv(series, args.out)
    res = confirm_alarms(series.bic, AlarmConfig(series.threshold, args.confirm_run))
    first = res.first_alarm_index
    print(f"threshold={series.threshold:.9g} exceedances={int(series.alarm.sum())}/{series.n}")
    print("first confirmed alarm: " + ("none" if first is None else
                                       f"sample {first} ({first * data.sample_period_min:g} min)"))
    print(f"wrote {args.out}")


def cmd_contrib(args) -> None:
    mon = BlockMonitor(load_models(_existing(args.models)))
    data = _load(args, args.data)
    cmap = mon.contribution_map(data, args.block, args.start, args.end)
    write_contrib_csv(cmap, args.out)
    if args.svg:
        write_contrib_svg(cmap, args.svg)
    print(f"wrote {args.out}" + (f" and {args.svg}" if args.svg else ""))


def _split_spec(spec: str, default_onset: int):
    path, sep, tail = spec.rpartition(":")
    if sep and (tail.isdigit() or tail.lower() == "none"):
        return path, None if tail.lower() == "none" else int(tail)
    return spec, default_onset


def cmd_evaluate(args) -> int:
    mon = _monitor(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for spec in args.files:
        path, onset = _split_spec(spec, args.onset)
        stem = Path(path).stem
        try:
            data = _load(args, path, onset)
            res = evaluate_series(mon.score(data), onset, args.confirm_run,
                                  fault_id_from_name(stem))
        except BlockmonError as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            rows.append({"fault_id": fault_id_from_name(stem), "error": str(exc)})
            continue
        doc = res.to_json()
        write_json(doc, out / f"{stem}.json")
        rows.append(doc)
        print(f"{doc['fault_id']}\tFDR={_pct(doc['fdr_sample'])}\tFDRc={_pct(doc['fdr_confirmed'])}"
              f"\tFAR={_pct(doc['far'])}\tfirst={doc['first_alarm_block']}")
    write_summary_csv(rows, out / "summary.csv")
    print(f"wrote {len(rows)} result(s) to {out}")
    return 0


def _pct(x):
    return "-" if x is None else f"{100 * x:.2f}%"


COMMANDS = {
    "decompose": cmd_decompose,
    "train": cmd_train,
    "monitor": cmd_monitor,
    "contrib": cmd_contrib,
    "evaluate": cmd_evaluate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except InputError as exc:
        print(f"blockmon {args.command}: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"blockmon {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
