"""Command-line interface.

Every subcommand accepts ``--config FILE`` with a JSON object whose keys are
the subcommand's flag names (``--fit-from`` may be written ``fit_from`` or
``fit-from``).  Values given on the command line win over the file, which
wins over the built-in defaults.

Exit status: 0 on success, 1 on runtime errors, 2 on argument errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from ._validation import parse_p

__all__ = ["main", "build_parser"]


class _ArgumentError(Exception):
    pass


def _p_value(text):
    try:
        return parse_p(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _p_list(text):
    return [_p_value(v) for v in str(text).split(",") if v.strip()]


def _k_range(text):
    """'4:64:geometric', '8:32' (every integer) or '8,16,32'."""
    from .experiments import geometric_k_range

    s = str(text).strip()
    try:
        if ":" in s:
            parts = s.split(":")
            lo, hi = int(parts[0]), int(parts[1])
            mode = parts[2] if len(parts) > 2 else "linear"
            if mode == "geometric":
                return geometric_k_range(lo, hi)
            if mode == "linear":
                if not 1 <= lo <= hi:
                    raise ValueError
                return list(range(lo, hi + 1))
            raise argparse.ArgumentTypeError(f"unknown k spacing {mode!r}")
        ks = _int_list(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k range {text!r}") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError(f"k values must be positive, got {text!r}")
    return ks


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _add_recon_args(p, side=256):
    p.add_argument("--phantom", default="shepp-logan",
                   help="shepp-logan, smooth:<sigma>, disk:<sigma> or a JSON phantom file")
    p.add_argument("--k", type=_positive_int, default=16, help="bandwidth multiple, L = k*pi")
    p.add_argument("--nu", type=_nonneg_int, default=5, help="order of the smooth window")
    p.add_argument("--window", default="smooth",
                   choices=("smooth", "ram-lak", "shepp-logan", "cosine", "hamming"))
    p.add_argument("--interp", choices=("linear", "cubic"), default=None,
                   help="default: linear for discontinuous phantoms, cubic otherwise")
    p.add_argument("--side", type=_positive_int, default=side)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="besovfbp", description="Filtered back projection error experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        p.add_argument("--config", type=Path, help="JSON file with default values for the flags")
        return p

    p = add("phantom", help="render a phantom to an image file")
    p.add_argument("--phantom", default="shepp-logan")
    p.add_argument("--side", type=_positive_int, default=256)
    p.add_argument("--out", type=Path, required=False, help="image file (.csv or .pgm)")
    p.add_argument("--export-json", type=Path, help="also write the phantom description as JSON")

    p = add("sinogram", help="sample the analytic Radon transform on the grid for L = k*pi")
    p.add_argument("--phantom", default="shepp-logan")
    p.add_argument("--k", type=_positive_int, default=16)
    p.add_argument("--noise", type=float, default=0.0, help="relative noise level (0.1 = 10%% of m_Rf)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", type=Path, required=False)

    p = add("reconstruct", help="filtered back projection of a phantom or a sinogram CSV")
    _add_recon_args(p)
    p.add_argument("--sinogram", type=Path, help="reconstruct this sinogram CSV instead of simulating")
    p.add_argument("--beta", type=float, default=None, help="Hamming parameter")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--no-extend", action="store_true",
                   help="cut the filtered projections off at |t| = 1 instead of extending them")
    p.add_argument("--out", type=Path, required=False)

    p = add("sweep", help="error sweep over the bandwidth with log-log slope fits")
    p.add_argument("kind", choices=("approx", "data", "total"))
    p.add_argument("--phantom", default="shepp-logan")
    p.add_argument("--nu", type=_int_list, default=[5, 7])
    p.add_argument("--p", type=_p_list, default=[1.0, 4.0 / 3.0, 2.0, 4.0])
    p.add_argument("--k", type=_k_range, default=_k_range("8:64:geometric"))
    p.add_argument("--fit-from", type=_positive_int, default=None)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--seed", type=_nonneg_int, default=42)
    p.add_argument("--side", type=_positive_int, default=512)
    p.add_argument("--interp", choices=("linear", "cubic"), default=None)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column (breaks byte-identity)")
    p.add_argument("--out", type=Path, required=False)

    p = add("kernel-constant", help="c_{alpha,K} for the smooth window, or 'divergent'")
    p.add_argument("--nu", type=_nonneg_int, required=False)
    p.add_argument("--alpha", type=float, required=False)

    p = add("filter-table", help="kernel constants for nu in {5,7} and alpha = 1/4..2 as CSV")
    p.add_argument("--nu", type=_int_list, default=[5, 7])
    p.add_argument("--out", type=Path, default=None)

    p = add("verify", help="numerical checks")
    p.add_argument("what", choices=("lemmas",))
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", type=Path, default=None, help="CSV with one row per trial")

    p = add("reproduce", help="run all experiments and write CSVs plus a summary")
    p.add_argument("--out", type=Path, required=False)
    p.add_argument("--profile", choices=("quick", "desk", "full"), default="desk")
    p.add_argument("--seed", type=_nonneg_int, default=42)
    return parser


def _required(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise _ArgumentError("missing required option(s): " + ", ".join("--" + m.replace("_", "-")
                                                                        for m in missing))


def _apply_config(parser, argv):
    """Re-parse with config-file values installed as subparser defaults."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise _ArgumentError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise _ArgumentError("config file must hold a JSON object")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise _ArgumentError(f"unknown config key {key!r} for '{args.command}'")
        action = actions[dest]
        if action.type is not None and isinstance(value, (str, int, float)) and not isinstance(value, bool):
            try:
                value = action.type(str(value) if action.type in (_p_list, _int_list, _k_range) else value)
            except argparse.ArgumentTypeError as exc:
                raise _ArgumentError(f"config key {key!r}: {exc}") from None
        elif isinstance(value, list) and action.type in (_p_list, _int_list, _k_range):
            value = action.type(",".join(map(str, value)))
        if action.choices is not None and value not in action.choices:
            raise _ArgumentError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[dest] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _interp_for(args, phantom):
    from .experiments import default_interp

    return args.interp or default_interp(phantom)


def _window(args):
    from .filters import Window

    if args.window == "smooth":
        return Window("smooth", nu=args.nu)
    if args.window == "hamming":
        return Window("hamming", beta=0.54 if args.beta is None else args.beta)
    return Window(args.window)


def _cmd_phantom(args):
    from .formats import write_image, write_manifest
    from .phantoms import load_phantom, phantom_to_records

    _required(args, "out")
    ph = load_phantom(args.phantom)
    write_image(args.out, ph.render(args.side))
    write_manifest(args.out, "phantom", {"phantom": args.phantom, "side": args.side})
    if args.export_json:
        Path(args.export_json).write_text(json.dumps(phantom_to_records(ph), indent=2) + "\n", encoding="utf-8")
    return 0


def _cmd_sinogram(args):
    from .experiments import NoiseSpec, add_noise
    from .formats import write_manifest, write_sinogram_csv
    from .phantoms import load_phantom
    from .transforms import SinogramGrid, sample_sinogram

    _required(args, "out")
    sino = sample_sinogram(load_phantom(args.phantom), SinogramGrid.from_k(args.k))
    if args.noise:
        sino, _ = add_noise(sino, NoiseSpec(args.noise, args.seed))
    write_sinogram_csv(args.out, sino)
    write_manifest(args.out, "sinogram", {"phantom": args.phantom, "k": args.k, "noise": args.noise},
                   seeds={"noise": args.seed})
    return 0


def _cmd_reconstruct(args):
    from .experiments import NoiseSpec, add_noise
    from .fbp import ReconstructionConfig, reconstruct
    from .formats import read_sinogram_csv, write_image, write_manifest
    from .phantoms import load_phantom
    from .transforms import sample_sinogram

    _required(args, "out")
    if args.sinogram is not None:
        sino = read_sinogram_csv(args.sinogram)
        k = round(sino.grid.L / math.pi)
        if not math.isclose(k * math.pi, sino.grid.L, rel_tol=1e-12):
            raise ValueError("sinogram bandwidth is not a multiple of pi")
        interp = args.interp or "linear"
    else:
        ph = load_phantom(args.phantom)
        k = args.k
        interp = _interp_for(args, ph)
        cfg = ReconstructionConfig(k)
        sino = sample_sinogram(ph, cfg.grid)
    if args.noise:
        sino, _ = add_noise(sino, NoiseSpec(args.noise, args.seed))
    cfg = ReconstructionConfig(k, _window(args), interp, args.side, extend=not args.no_extend)
    write_image(args.out, reconstruct(sino, cfg))
    resolved = {key: getattr(args, key) for key in ("phantom", "sinogram", "nu", "window", "beta", "side",
                                                    "noise", "no_extend")}
    write_manifest(args.out, "reconstruct", {**resolved, "k": k, "interp": interp}, seeds={"noise": args.seed})
    return 0


def _cmd_sweep(args):
    from .experiments import NoiseSpec, sweep_approximation, sweep_data_error, sweep_total_error
    from .formats import format_p, write_manifest, write_sweep_csv
    from .phantoms import load_phantom

    _required(args, "out")
    ph = load_phantom(args.phantom)
    common = dict(interp=args.interp, side=args.side, fit_from=args.fit_from, timing=args.timing)
    if args.kind == "approx":
        res = sweep_approximation(ph, args.p, args.nu, args.k, **common)
    else:
        fn = sweep_data_error if args.kind == "data" else sweep_total_error
        res = fn(ph, args.p, args.nu, args.k, NoiseSpec(args.noise, args.seed), trials=args.trials, **common)
    write_sweep_csv(args.out, res)
    cfg = {key: getattr(args, key) for key in ("kind", "phantom", "nu", "k", "fit_from", "noise", "trials",
                                               "side", "interp")}
    cfg["p"] = [format_p(p) for p in args.p]
    write_manifest(args.out, "sweep", cfg, seeds={"noise": args.seed})
    for (kind, nu, p), fit in res.slopes.items():
        shown = "undefined" if fit is None else f"{fit.slope:+.4f}"
        print(f"{kind} nu={nu} p={format_p(p)} slope {shown}")
    return 0


def _cmd_kernel_constant(args):
    from .filters import kernel_alpha_constant

    _required(args, "nu", "alpha")
    if args.alpha < 0:
        raise _ArgumentError("--alpha must be >= 0")
    val = kernel_alpha_constant(args.nu, args.alpha)
    print(val if not isinstance(val, float) else f"{val:.6f}")
    return 0


def _cmd_filter_table(args):
    from .filters import TABLE2_ALPHAS, table2
    from .formats import _csv_text, format_float

    rows = [["nu", "alpha", "value"]]
    rows += [[str(nu), format_float(a), format_float(v) if isinstance(v, float) else "divergent"]
             for nu, a, v in table2(tuple(args.nu), TABLE2_ALPHAS)]
    text = _csv_text(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_verify(args):
    from .besov import run_lemma_suite
    from .formats import format_float, write_rows

    rows = run_lemma_suite(args.trials, args.seed)
    if args.out:
        write_rows(args.out, ("lemma", "case", "alpha", "p", "q", "c", "lhs", "rhs", "holds"),
                   [[r[0], r[1], *(format_float(v) for v in r[2:8]), str(r[8]).lower()] for r in rows])
    failed = 0
    for lemma in ("embedding_p", "embedding_inf", "limit"):
        sel = [r for r in rows if r[0] == lemma]
        bad = sum(not r[-1] for r in sel)
        failed += bad
        print(f"{lemma}: {len(sel) - bad}/{len(sel)} pass")
    return 0 if failed == 0 else 1


def _cmd_reproduce(args):
    from .reproduce import reproduce_paper

    _required(args, "out")
    crit = reproduce_paper(args.out, profile=args.profile, seed=args.seed,
                           log=lambda msg: print(msg, file=sys.stderr))
    print((Path(args.out) / "summary.txt").read_text(encoding="utf-8"), end="")
    return 0 if all(c.passed for c in crit) else 1


_COMMANDS = {
    "phantom": _cmd_phantom,
    "sinogram": _cmd_sinogram,
    "reconstruct": _cmd_reconstruct,
    "sweep": _cmd_sweep,
    "kernel-constant": _cmd_kernel_constant,
    "filter-table": _cmd_filter_table,
    "verify": _cmd_verify,
    "reproduce": _cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _ArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"besovfbp: error: {exc}", file=sys.stderr)
        return 2
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except _ArgumentError as exc:
        print(f"besovfbp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"besovfbp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
