"""Command-line entry points: gen-corpus, pretrain, combine, edit, generate, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_model, load_session, save_model, save_session
from .denoiser import TrainingDiverged, init_embeddings, init_model, pretrain
from .diffusion import DEFAULT_T, make_schedule
from .editing import (
    ConfigError,
    EditConfig,
    EditError,
    build_weights,
    combine_clip,
    combine_static_pose,
    create_session,
    generate,
    run_edit,
)
from .motion import MotionError, load_motion, save_motion
from .synth import CorpusSpec, SynthError, build_corpus, load_corpus


class CliError(Exception):
    """User-facing CLI failure; message printed to stderr, exit code 1."""


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _smoothed(values, window: int = 50) -> float:
    tail = values[-window:]
    return float(np.mean(tail)) if tail else float("nan")


def _cmd_gen_corpus(args) -> int:
    spec = CorpusSpec(
        labels=tuple(args.labels.split(",")),
        samples_per_label=args.samples,
        frames=args.frames,
        fps=args.fps,
        joints=args.joints,
        seed=args.seed,
    )
    motions = build_corpus(spec, args.out)
    _say(args, f"wrote {len(motions)} motions to {args.out}")
    return 0


def _cmd_pretrain(args) -> int:
    data_dir = Path(args.data)
    if not data_dir.exists():
        raise CliError(f"corpus directory not found: {data_dir}")
    spec, dataset = load_corpus(data_dir)
    model = init_model(
        frame_count=spec.frames,
        frame_dim=len(dataset[0].frames[0]),
        embed_dim=args.embed_dim,
        hidden=(args.hidden, args.hidden),
        seed=args.seed,
    )
    embeddings = init_embeddings(spec.labels, embed_dim=args.embed_dim, seed=args.seed)
    schedule = make_schedule(args.t_steps)
    try:
        model, embeddings, losses = pretrain(
            dataset, model, embeddings, schedule,
            steps=args.steps, lr=args.lr, batch_size=args.batch, seed=args.seed,
        )
    except TrainingDiverged as exc:
        raise CliError(f"pretraining diverged: {exc}") from exc
    save_model(args.out, model, embeddings, args.t_steps)
    final = _smoothed(losses)
    _say(args, f"final loss {final:.6g}" if losses else "no training steps run")
    _say(args, f"wrote model checkpoint to {args.out}")
    return 0


def _load_motion_arg(path, what: str):
    p = Path(path)
    if not p.exists():
        raise CliError(f"{what} motion file not found: {p}")
    return load_motion(p)


def _parse_steps(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError as exc:
        raise CliError(f"bad --pose-steps value {text!r}") from exc


def _edit_config_from_args(args, n_input: int) -> EditConfig:
    input_kind = "static_pose" if n_input == 1 else "clip"
    return EditConfig(
        scenario=args.scenario,
        input_kind=input_kind,
        insert_at=args.insert_at,
        pose_steps=_parse_steps(args.pose_steps) if args.pose_steps else None,
        main_step=args.main_step,
        pad=args.pad,
        v=args.v,
        rho=args.rho,
        base_train_prob=args.q,
        iters_stage1=args.iters1,
        iters_stage2=args.iters2,
        lr_stage1=args.lr1,
        lr_stage2=args.lr2,
        seed=args.seed,
    )


def _cmd_combine(args) -> int:
    base = _load_motion_arg(args.base, "base")
    inp = _load_motion_arg(args.input, "input")
    config = _edit_config_from_args(args, inp.n_frames)
    config.validate(base.n_frames, inp.n_frames)
    if config.input_kind == "static_pose":
        steps = config.pose_steps
        if config.scenario == "global":
            steps = tuple(range(base.n_frames))
        combined, mask = combine_static_pose(base, inp, steps)
    else:
        combined, mask = combine_clip(base, inp, config.insert_at, config.scenario)
    save_motion(combined, args.out_combined)
    if args.out_weights:
        weights = build_weights(config, base.layout, base.n_frames, inp.n_frames)
        payload = {"mask": mask.entries.tolist(), "weights": weights.entries.tolist()}
        Path(args.out_weights).write_text(
            json.dumps(payload, sort_keys=True), encoding="utf-8"
        )
    _say(args, f"wrote combined motion to {args.out_combined}")
    return 0


def _cmd_edit(args) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        raise CliError(f"model checkpoint not found: {model_path}")
    model, embeddings, t_steps = load_model(model_path)
    base = _load_motion_arg(args.base, "base")
    inp = _load_motion_arg(args.input, "input")
    config = _edit_config_from_args(args, inp.n_frames)
    session = create_session(model, embeddings, base, inp, config,
                             diffusion_steps=t_steps)
    run_edit(session)
    save_session(args.out, session)
    _say(args, f"stage1 final loss {_smoothed(session.stage1_losses):.6g}")
    _say(args, f"stage2 final loss {_smoothed(session.stage2_losses):.6g}")
    _say(args, f"wrote session to {args.out}")
    return 0


def _cmd_generate(args) -> int:
    session_path = Path(args.session)
    if not session_path.exists():
        raise CliError(f"session file not found: {session_path}")
    session = load_session(session_path)
    motion = generate(session, args.eta, args.seed)
    save_motion(motion, args.out)
    _say(args, f"wrote generated motion to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model_path = Path(args.model)
    if not model_path.exists():
        raise CliError(f"model checkpoint not found: {model_path}")
    frontend = Path(args.frontend) if args.frontend else None
    app = create_app(model_path=model_path, frontend_dir=frontend)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except OSError as exc:
        raise CliError(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    except SystemExit as exc:
        # uvicorn exits with its own startup-failure code, e.g. on a busy port
        if exc.code:
            raise CliError(
                f"server failed to start on {args.host}:{args.port}"
            ) from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mograft",
                                     description="Motion-diffusion editing toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="write the synthetic training corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--labels", default="walk,jump,kick,squat")
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--frames", type=int, default=40)
    p.add_argument("--fps", type=float, default=20.0)
    p.add_argument("--joints", type=int, default=5)
    _common(p)
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("pretrain", help="train the base denoiser on a corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--hidden", type=int, default=512)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--t-steps", type=int, default=DEFAULT_T)
    _common(p)
    p.set_defaults(func=_cmd_pretrain)

    def edit_flags(p):
        p.add_argument("--base", required=True)
        p.add_argument("--input", required=True)
        p.add_argument("--scenario", choices=("global", "local"), required=True)
        p.add_argument("--pose-steps", default=None,
                       help="comma-separated frame indices for a pose insert")
        p.add_argument("--insert-at", type=int, default=None)
        p.add_argument("--main-step", type=int, default=None)
        p.add_argument("--pad", type=int, default=2)
        p.add_argument("--v", type=float, default=5.0)
        p.add_argument("--rho", type=float, default=0.5)
        p.add_argument("--q", type=float, default=0.5)
        p.add_argument("--iters1", type=int, default=800)
        p.add_argument("--iters2", type=int, default=800)
        p.add_argument("--lr1", type=float, default=1e-3)
        p.add_argument("--lr2", type=float, default=1e-6)
        _common(p)

    p = sub.add_parser("combine", help="write the spliced motion and weights")
    edit_flags(p)
    p.add_argument("--out-combined", required=True)
    p.add_argument("--out-weights", default=None)
    p.set_defaults(func=_cmd_combine)

    p = sub.add_parser("edit", help="run stages 1-2 and save a ready session")
    p.add_argument("--model", required=True)
    edit_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_edit)

    p = sub.add_parser("generate", help="sample a motion from a ready session")
    p.add_argument("--session", required=True)
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--out", required=True)
    _common(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("serve", help="host the HTTP service and web viewer")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--frontend", default=None)
    _common(p)
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, EditError, MotionError, SynthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
