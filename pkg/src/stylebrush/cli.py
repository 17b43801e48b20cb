"""Command line interface: scripted replay, benchmarks, and the service.

Exit codes for `run`: 0 success, 1 pipeline failure (solver, empty
selection, painting without a dip), 2 script/input problems (unreadable
files, malformed JSON, bad parameters).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import diffusion, transfer, session as session_mod
from .container import load_tensor_container
from .core import Image, InteractionMask, Params, load_png, save_png
from .errors import (
    ConfigurationError,
    ContainerFormatError,
    ScriptError,
    StyleBrushError,
)
from .features import AnalyticBackend
from .neural import NeuralBackend

_PARAM_KEYS = ("v", "r", "epsilon", "alpha", "dt")


def make_backend(name: str, weights_path: str | None = None):
    if name == "analytic":
        return AnalyticBackend()
    if name == "neural":
        if not weights_path:
            raise ConfigurationError("the neural backend needs --weights")
        return NeuralBackend(load_tensor_container(weights_path))
    raise ConfigurationError(f"unknown backend {name!r}")


def _build_params(raw: dict, overrides: dict) -> Params:
    values = {}
    for key in _PARAM_KEYS:
        if key in raw:
            if not isinstance(raw[key], (int, float)) or isinstance(raw[key], bool):
                raise ScriptError(f"params.{key} must be a number")
            values[key] = float(raw[key])
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    try:
        return Params(**values)
    except ValueError as exc:
        raise ScriptError(f"invalid params: {exc}") from exc


def load_script(path: Path) -> dict:
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ScriptError(f"cannot read script {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScriptError("script root must be a JSON object")
    for field in ("content", "styles", "actions"):
        if field not in raw:
            raise ScriptError(f"script is missing the {field!r} field")
    if not isinstance(raw["content"], str):
        raise ScriptError("content must be a file path string")
    if (not isinstance(raw["styles"], list) or not raw["styles"]
            or not all(isinstance(s, str) for s in raw["styles"])):
        raise ScriptError("styles must be a non-empty list of file paths")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ScriptError("params must be an object")
    return raw


def _load_image(path: Path) -> Image:
    try:
        return load_png(path)
    except OSError as exc:
        raise ScriptError(f"cannot read image {path}: {exc}") from exc
    except ValueError as exc:
        raise ScriptError(f"bad image {path}: {exc}") from exc


def cmd_run(args) -> int:
    script_path = Path(args.script)
    out_dir = Path(args.out)
    try:
        raw = load_script(script_path)
        actions = session_mod.parse_actions(raw["actions"])
        params = _build_params(
            raw.get("params", {}),
            {k: getattr(args, k) for k in _PARAM_KEYS},
        )
        backend_name = args.backend or raw.get("backend", "analytic")
        weights = args.weights or raw.get("weights")
        if weights is not None:
            weights = str((script_path.parent / weights)
                          if not Path(weights).is_absolute() else weights)
        base = script_path.parent
        content = _load_image(base / raw["content"])
        styles = [_load_image(base / s) for s in raw["styles"]]
        backend = make_backend(backend_name, weights)
    except (ScriptError, ConfigurationError, ContainerFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir.mkdir(parents=True, exist_ok=True)
    frames_dir = out_dir / "frames"
    if args.frames:
        frames_dir.mkdir(exist_ok=True)

    def frame_hook(action_index: int, frame) -> None:
        if not args.frames:
            return
        name = f"action{action_index:02d}_step{frame.step:04d}.png"
        save_png(frame.image, frames_dir / name)

    try:
        sess = session_mod.create_session(content, styles, params=params,
                                          backend=backend)
        per_action = []
        start = time.perf_counter()
        for i, action in enumerate(actions):
            t0 = time.perf_counter()
            record = session_mod.apply_action(sess, action,
                                              frame_hook=frame_hook,
                                              action_index=i)
            record["wall_seconds"] = time.perf_counter() - t0
            per_action.append(record)
        final = sess.export()
        total = time.perf_counter() - start
    except ScriptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StyleBrushError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    save_png(final, out_dir / "final.png")
    paint_steps = sum(r.get("steps", 0) for r in per_action
                      if r["op"] == "paint")
    metrics = {
        "actions": per_action,
        "paints": sess.paint_count,
        "total_paint_steps": paint_steps,
        "total_cg_iterations": sum(r.get("cg_iterations", 0)
                                   for r in per_action),
        "wall_seconds": total,
        "output": "final.png",
    }
    (out_dir / "metrics.json").write_text(json.dumps(metrics, indent=2))
    print(f"wrote {out_dir / 'final.png'}")
    return 0


def run_benchmark(size: int, steps: int, backend=None,
                  params: Params | None = None) -> dict:
    """Measure implicit stepping throughput on a uniform-similarity grid,
    with and without the per-step render, at the default CG tolerance."""
    if size not in (128, 256, 512):
        raise ConfigurationError("bench size must be one of 128, 256, 512")
    if steps < 0:
        raise ConfigurationError("steps must be non-negative")
    params = params if params is not None else Params()
    backend = backend if backend is not None else AnalyticBackend()

    rows = np.linspace(0.0, 1.0, size)
    cols = np.linspace(0.0, 1.0, size)
    grad = (rows[:, None] * 0.6 + cols[None, :] * 0.4)
    content = Image(np.stack([grad, 0.5 * np.ones_like(grad), 1.0 - grad],
                             axis=-1))
    style = Image(np.stack([1.0 - grad, grad, 0.5 * np.ones_like(grad)],
                           axis=-1))
    g = np.ones((size, size))
    field = diffusion.diffusion_coefficients(g, params.v, params.r,
                                             params.face_interp)
    system = diffusion.assemble_system(field, params.dt)
    click = InteractionMask.click(size, size, size // 2, size // 2)

    def measure(render_each: bool) -> dict:
        p = click.to_field()
        iters = []
        sess = None
        brush_a = None
        if render_each:
            sess = session_mod.create_session(content, [style],
                                              params=params, backend=backend)
            sess.dip([(0, InteractionMask.whole(size, size))])
            brush_a = transfer.local_adain(sess._fc, sess.brush)
        t0 = time.perf_counter()
        for _ in range(steps):
            p, it = diffusion._advance(p, system, params.cg_tolerance,
                                       params.cg_max_iters)
            iters.append(it)
            if render_each:
                p_map = diffusion.normalize_penetration(p)
                p_feat = sess._penetration_at_feature_res(p_map.values)
                mixed = transfer.mix_features(sess.mixed, brush_a, p_feat)
                retention = sess.retention * (1.0 - p_map.values)
                sess._render(mixed, retention)
        elapsed = time.perf_counter() - t0
        return {
            "steps": steps,
            "wall_seconds": elapsed,
            "steps_per_second": (steps / elapsed) if steps > 0 and elapsed > 0
            else None,
            "cg_iterations_per_step": iters,
            "cg_iterations_mean": float(np.mean(iters)) if iters else None,
        }

    report = {
        "size": size,
        "cg_tolerance": params.cg_tolerance,
        "diffusion_only": measure(render_each=False),
        "diffusion_render": measure(render_each=True),
    }
    return report


def cmd_bench(args) -> int:
    try:
        report = run_benchmark(args.size, args.steps)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    backend = make_backend(args.backend, args.weights)
    app = create_app(backend=backend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stylebrush",
        description="Interactive dip-and-paint style transfer engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="replay a session script")
    p_run.add_argument("--script", required=True, help="session script JSON")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--frames", action="store_true",
                       help="write every streamed paint frame as PNG")
    p_run.add_argument("--backend", choices=["analytic", "neural"])
    p_run.add_argument("--weights", help="ISTC weight container path")
    for key in _PARAM_KEYS:
        p_run.add_argument(f"--{key}", type=float, default=None)
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="measure stepping throughput")
    p_bench.add_argument("--size", type=int, default=256,
                         choices=[128, 256, 512])
    p_bench.add_argument("--steps", type=int, default=50)
    p_bench.add_argument("--out", help="write the JSON report here")
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", help="run the HTTP streaming service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--backend", choices=["analytic", "neural"],
                         default="analytic")
    p_serve.add_argument("--weights", help="ISTC weight container path")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
