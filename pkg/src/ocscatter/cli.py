"""Command-line entry point: ``ocscatter <command> --config run.yaml``."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import barrier_checks, oracle_checks, oracle_table, packet_checks
from .config import ConfigError, RunConfig, emit_config, load_config, to_dict
from .decomposition import decompose, probability_current
from .potential import PotentialError
from .transfer import spectrum
from .wavepacket import PacketSynthesizer, gaussian_amplitude

SPECTRUM_HEADER = ["k", "T", "R", "J", "F", "F_defined", "mu"]
SUBPROCESS_HEADER = ["x", "Re_psi", "Im_psi", "Re_psi_tr", "Im_psi_tr", "Re_psi_ref",
                     "Im_psi_ref", "current_tr", "current_ref"]
SUMMARY_HEADER = ["t", "norm_full", "norm_tr", "norm_ref", "mean_x_tr", "mean_x_ref",
                  "t_bar", "r_bar"]
SNAPSHOT_HEADER = ["x", "density_full", "density_tr", "density_ref"]
ORACLE_HEADER = ["k", "T", "T_oracle", "dT", "dJ", "dF", "phases_compared"]


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: Path, header, columns) -> None:
    rows = zip(*columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, command: str, cfg: RunConfig, files: list[Path],
                   extra: dict | None = None) -> Path:
    """Resolved config plus checksums of every output file; no timestamps so
    identical runs give identical manifests."""
    cfg_path = out / "config.resolved.yaml"
    cfg_path.write_text(emit_config(cfg), encoding="utf-8")
    files = [cfg_path, *files]
    manifest = {
        "command": command,
        "version": __version__,
        "config": to_dict(cfg),
        "files": {str(f.relative_to(out)): sha256(f) for f in files},
    }
    if extra:
        manifest.update(extra)
    path = out / f"manifest_{command}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_spectrum(cfg: RunConfig, out: Path, threads: int | None) -> int:
    table = spectrum(cfg.barrier.spec(), cfg.grids.k.values(), cfg.units, threads)
    path = out / "spectrum.csv"
    write_csv(path, SPECTRUM_HEADER,
              [table.k, table.T, table.R, table.J, table.F, table.F_defined, table.mu])
    write_manifest(out, "spectrum", cfg, [path])
    print(f"wrote {path} ({len(table)} rows)")
    return 0


def cmd_subprocess(cfg: RunConfig, out: Path, k: float) -> int:
    spec = cfg.barrier.spec()
    pair = decompose(spec, k, units=cfg.units)
    j_tr = probability_current(pair.psi_tr, pair.dpsi_tr, cfg.units)
    j_ref = probability_current(pair.psi_ref, pair.dpsi_ref, cfg.units)
    path = out / "subprocess.csv"
    write_csv(path, SUBPROCESS_HEADER,
              [pair.x_grid, pair.psi.real, pair.psi.imag, pair.psi_tr.real, pair.psi_tr.imag,
               pair.psi_ref.real, pair.psi_ref.imag, j_tr, j_ref])
    a = pair.amplitudes
    side = {
        "k": fmt(k), "x_c": fmt(pair.x_c), "mu": int(pair.mu), "node_quality": fmt(pair.quality),
        "A_tr": [fmt(np.real(a.a_tr_l_in)), fmt(np.imag(a.a_tr_l_in))],
        "A_ref": [fmt(np.real(a.a_ref_l_in)), fmt(np.imag(a.a_ref_l_in))],
    }
    side_path = out / "subprocess.json"
    side_path.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_manifest(out, "subprocess", cfg, [path, side_path])
    print(f"wrote {path}; x_c = {pair.x_c:.12g}, mu = {pair.mu:+d}, quality = {pair.quality:.2e}")
    return 0


def _synthesizer(cfg: RunConfig, threads):
    if cfg.packet is None:
        raise ConfigError("packet: required for this command")
    p, g = cfg.packet, cfg.grids
    A = gaussian_amplitude(p.k0, p.l, p.L, n=g.packet_k.num, span=g.packet_k.span)
    t = g.t.values()
    return PacketSynthesizer(cfg.barrier.spec(), A, units=cfg.units, threads=threads,
                             t_max=float(np.max(np.abs(t))), t_min=float(np.min(t)),
                             step=g.x.step), t


def cmd_propagate(cfg: RunConfig, out: Path, threads: int | None) -> int:
    synth, t = _synthesizer(cfg, threads)
    hist = synth.history(t)
    path = out / "summary.csv"
    write_csv(path, SUMMARY_HEADER, [hist.t, hist.norm_full, hist.norm_tr, hist.norm_ref,
                                     hist.mean_x_tr, hist.mean_x_ref, hist.t_bar, hist.r_bar])
    files = [path]
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    stride = cfg.outputs.snapshot_stride
    for i in range(0, len(t), stride):
        full = synth.values("full", t[i])[0]
        ref = synth.values("ref", t[i])[0]
        snap = snap_dir / f"snapshot_{i:05d}.csv"
        write_csv(snap, SNAPSHOT_HEADER, [synth.grid.x, np.abs(full) ** 2,
                                          np.abs(full - ref) ** 2, np.abs(ref) ** 2])
        files.append(snap)
    norms = synth.spectral_norms()
    write_manifest(out, "propagate", cfg, files,
                   {"T_bar": fmt(norms.t_bar), "R_bar": fmt(norms.r_bar),
                    "snapshot_times": [fmt(t[i]) for i in range(0, len(t), stride)]})
    print(f"wrote {path} and {len(files) - 1} snapshots; T_bar = {norms.t_bar:.12g}")
    return 0


def _report(results) -> int:
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_validate(cfg: RunConfig, threads: int | None) -> int:
    spec, tol = cfg.barrier.spec(), cfg.tolerances
    results = barrier_checks(spec, cfg.grids.k.values(), cfg.units, tol.identity, tol.node,
                             threads)
    if cfg.packet is not None:
        p, g = cfg.packet, cfg.grids
        results += packet_checks(spec, p.k0, p.l, p.L, g.t.values(), cfg.units, tol.norm,
                                 tol.overlap, g.packet_k.num, g.packet_k.span, g.x.step, threads)
    return _report(results)


def cmd_oracle_compare(cfg: RunConfig, out: Path) -> int:
    rows = oracle_table(cfg.barrier.spec(), cfg.grids.k.values(), cfg.units)
    path = out / "oracle_compare.csv"
    write_csv(path, ORACLE_HEADER, list(zip(*[
        (r.k, r.T, r.T_oracle, r.dT, r.dJ, r.dF, r.phases_compared) for r in rows])))
    write_manifest(out, "oracle-compare", cfg, [path])
    return _report(oracle_checks(rows, cfg.tolerances.oracle_T, cfg.tolerances.oracle_phase))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ocscatter",
                                 description="1D scattering and subprocess decomposition")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="YAML run configuration")
    common.add_argument("--out", help="output directory (overrides outputs.directory)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $OCSCATTER_THREADS or 1)")
    common.add_argument("--strict", action="store_true", help="reject unknown config keys")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="T, R, J, F, mu over the k-grid")
    sp = sub.add_parser("subprocess", parents=[common], help="decomposition at one k")
    sp.add_argument("--k", type=float, required=True)
    sub.add_parser("propagate", parents=[common], help="packet norms and snapshots over t")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    sub.add_parser("oracle-compare", parents=[common], help="analytic vs ODE oracle")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, strict=args.strict)
        out = Path(args.out or cfg.outputs.directory)
        if args.command != "validate":
            out.mkdir(parents=True, exist_ok=True)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, out, args.threads)
        if args.command == "subprocess":
            return cmd_subprocess(cfg, out, args.k)
        if args.command == "propagate":
            return cmd_propagate(cfg, out, args.threads)
        if args.command == "validate":
            return cmd_validate(cfg, args.threads)
        return cmd_oracle_compare(cfg, out)
    except (ConfigError, PotentialError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
