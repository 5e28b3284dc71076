"""Command-line entry point: ``tpeifp <subcommand> [options]``.

Subcommands: simulate, extract, reconstruct, pipeline, sweep-noise, evaluate.
Exit codes: 0 success, 2 configuration error, 3 data/format error,
4 numerical degeneracy.
"""
import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import PipelineConfig, bundled_config, load_config
from .errors import ConfigError, DegenerateInputError, FormatError
from .io import (
    atomic_write_bytes,
    decode_matrix,
    encode_matrix,
    read_positions_csv,
    write_pgm,
    write_positions_csv,
)
from .metrics import Scenario, image_quality, noise_sweep
from .optics import (
    build_otf,
    generate_scan_grid,
    generate_speckle,
    incoherent_image,
    resolution_target,
    simulate_acquisition,
    speckle_canvas_shape,
)
from .recon import run_ifp
from .tpe import extract_positions

log = logging.getLogger("tpeifp")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DEGENERATE = 0, 2, 3, 4


def _frame_name(n, total):
    return f"frame_{n:0{max(3, len(str(total - 1)))}d}.ifpm"


def _load_object(cfg):
    if cfg.object.path:
        return decode_matrix(cfg.object.path)
    return resolution_target(cfg.object.width, cfg.object.height)


def _frames_dir(cfg, out):
    return Path(cfg.paths.frames_dir) if cfg.paths.frames_dir else out / "frames"


def _read_frames(frames_dir):
    files = sorted(Path(frames_dir).glob("frame_*.ifpm"))
    if not files:
        raise FormatError(f"no frame_*.ifpm files in {frames_dir}")
    return [decode_matrix(f) for f in files]


def _model(cfg, frames):
    h, w = frames[0].shape
    return build_otf(cfg.optical, w, h)


def do_simulate(cfg, out):
    obj = _load_object(cfg)
    h, w = obj.shape
    model = build_otf(cfg.optical, w, h)
    shifts = generate_scan_grid(cfg.scan.n_per_side, cfg.scan.step)
    ch, cw = speckle_canvas_shape(shifts, w, h)
    master = generate_speckle(cfg.speckle_seed, cw, ch, cfg.speckle.correlation_length)
    acq = simulate_acquisition(obj, master, shifts, model, cfg.variance_ratio, cfg.seed,
                               config=cfg.optical)
    frames_dir = _frames_dir(cfg, out)
    for n, f in enumerate(acq.frames):
        encode_matrix(f, frames_dir / _frame_name(n, len(acq.frames)))
    encode_matrix(obj, out / "object.ifpm")
    write_pgm(obj, out / "object.pgm")
    encode_matrix(master, out / "speckle_master.ifpm")
    dl = incoherent_image(obj, model)
    encode_matrix(dl, out / "diffraction_limited.ifpm")
    write_pgm(dl, out / "diffraction_limited.pgm")
    write_positions_csv(acq.true_shifts, out / "truth.csv")
    log.info("simulated %d frames into %s", len(acq.frames), frames_dir)
    return acq.frames


def do_extract(cfg, out, frames=None):
    frames = frames if frames is not None else _read_frames(_frames_dir(cfg, out))
    result = extract_positions(frames, cfg.tpe.reference_index, cfg.tpe.floor,
                               padded=cfg.tpe.padded)
    write_positions_csv(result, out / "positions.csv")
    log.info("extracted %d positions", len(result.shifts))
    return result.shifts


def do_reconstruct(cfg, out, frames=None, shifts=None):
    frames = frames if frames is not None else _read_frames(_frames_dir(cfg, out))
    if shifts is None:
        shifts, _ = read_positions_csv(cfg.paths.positions or out / "positions.csv")
    state = run_ifp(frames, shifts, _model(cfg, frames), cfg.recon)
    encode_matrix(state.object, out / "recon_object.ifpm")
    write_pgm(state.object, out / "recon_object.pgm")
    encode_matrix(state.pattern_master, out / "recon_pattern.ifpm")
    write_pgm(state.pattern_master, out / "recon_pattern.pgm")
    encode_matrix(state.coverage.astype(float), out / "pattern_coverage.ifpm")
    lines = ["iteration,residual"] + [
        f"{i},{r!r}" for i, r in enumerate(state.residual_history, start=1)]
    atomic_write_bytes(out / "residuals.csv", ("\n".join(lines) + "\n").encode("ascii"))
    log.info("reconstruction stopped after %d iterations (converged=%s)",
             state.iteration, state.converged)
    return state


def do_sweep(cfg, out):
    obj = _load_object(cfg)
    scenario = Scenario(obj=obj, optical=cfg.optical, n_per_side=cfg.scan.n_per_side,
                        step=cfg.scan.step, correlation_length=cfg.speckle.correlation_length,
                        reference_index=cfg.tpe.reference_index, floor=cfg.tpe.floor,
                        seed=cfg.seed)
    rows = noise_sweep(scenario, list(cfg.sweep.levels), cfg.sweep.trials)
    text = "level,mean_abs_x,mean_abs_y\n" + "".join(
        f"{lv!r},{ex!r},{ey!r}\n" for lv, ex, ey in rows)
    atomic_write_bytes(out / "noise_sweep.csv", text.encode("ascii"))
    return rows


def do_evaluate(cfg, out, recon_paths, truth_path):
    truth = decode_matrix(truth_path or out / "object.ifpm")
    h, w = truth.shape
    model = build_otf(cfg.optical, w, h)
    if not recon_paths:
        recon_paths = [out / "recon_object.ifpm"]
        if (out / "diffraction_limited.ifpm").exists():
            recon_paths.append(out / "diffraction_limited.ifpm")
    lines = ["image,rmse,psnr,beyond_cutoff_energy_ratio"]
    for p in recon_paths:
        q = image_quality(decode_matrix(p), truth, model)
        lines.append(f"{Path(p).stem},{q.rmse!r},{q.psnr!r},{q.beyond_cutoff_energy_ratio!r}")
    atomic_write_bytes(out / "quality.csv", ("\n".join(lines) + "\n").encode("ascii"))
    return lines


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration (default: built-in paper_sim.json)")
    common.add_argument("--seed", type=int, help="override the top-level seed")
    common.add_argument("--out-dir", help="output directory")
    common.add_argument("--frames-dir", help="directory of frame_*.ifpm files")
    common.add_argument("--positions", help="positions CSV for reconstruct")
    common.add_argument("--reference-index", type=int, help="TPE reference frame")
    common.add_argument("--no-clamp", action="store_true",
                        help="disable non-negativity clamping in reconstruction")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tpeifp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="object + config -> frames + truth CSV")
    sub.add_parser("extract", parents=[common], help="frames -> positions CSV")
    sub.add_parser("reconstruct", parents=[common],
                   help="frames + positions -> object/pattern matrices")
    sub.add_parser("pipeline", parents=[common], help="simulate, extract and reconstruct")
    sub.add_parser("sweep-noise", parents=[common], help="localization error vs noise level")
    ev = sub.add_parser("evaluate", parents=[common], help="quality of reconstructions")
    ev.add_argument("--recon", action="append", help="IFPM image to score (repeatable)")
    ev.add_argument("--truth", help="ground-truth IFPM (default: <out-dir>/object.ifpm)")
    return parser


def resolve_config(args):
    cfg = load_config(args.config) if args.config else load_config(bundled_config())
    paths = cfg.paths
    if args.out_dir:
        paths = replace(paths, out_dir=args.out_dir)
    if args.frames_dir:
        paths = replace(paths, frames_dir=args.frames_dir)
    if args.positions:
        paths = replace(paths, positions=args.positions)
    cfg = replace(cfg, paths=paths)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.reference_index is not None:
        cfg = replace(cfg, tpe=replace(cfg.tpe, reference_index=args.reference_index))
    if args.no_clamp:
        cfg = replace(cfg, recon=replace(cfg.recon, clamp_nonnegative=False))
    return cfg


def run(args):
    cfg: PipelineConfig = resolve_config(args)
    out = Path(cfg.paths.out_dir)
    cmd = args.command
    if cmd == "simulate":
        do_simulate(cfg, out)
    elif cmd == "extract":
        do_extract(cfg, out)
    elif cmd == "reconstruct":
        do_reconstruct(cfg, out)
    elif cmd == "pipeline":
        frames = do_simulate(cfg, out)
        shifts = do_extract(cfg, out, frames)
        do_reconstruct(cfg, out, frames, shifts)
    elif cmd == "sweep-noise":
        for lv, ex, ey in do_sweep(cfg, out):
            print(f"{lv:8.4f}  x={ex:.3f}px  y={ey:.3f}px")
    elif cmd == "evaluate":
        print("\n".join(do_evaluate(cfg, out, args.recon, args.truth)))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateInputError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (FormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
