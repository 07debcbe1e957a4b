"""Command-line front end: segment, abstract, stylize, analyze, serve."""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import meshio
from .abstraction import build_abstracted_mesh
from .mesh import MeshError
from .metrics import (
    LandmarkSet,
    MeasureReport,
    aggregate_measures,
    eye_socket_measures,
)
from .segmentation import LabeledTemplate, transfer_labels, vsa
from .session import StudioSession, file_sha256
from .stylize import LAMBDA_D_MAX, StyleParams

def _configure_logging():
    level = os.environ.get("PLANEHEAD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main():
    """Sculptural abstraction for scanned meshes."""
    _configure_logging()


def _load_mesh(path):
    try:
        return meshio.load_mesh(path)
    except MeshError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["vsa", "template"]), required=True)
@click.option("--k", type=int, default=32, show_default=True, help="Region count for VSA.")
@click.option("--max-iters", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--template", "template_path", type=click.Path(exists=True, dir_okay=False),
              help="Pre-aligned, pre-segmented template mesh (template mode).")
@click.option("--template-labels", type=click.Path(exists=True, dir_okay=False),
              help="Labels JSON for the template (defaults to <template>.labels.json).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Labels JSON output (defaults to <mesh>.labels.json).")
def segment(mesh_path, mode, k, max_iters, seed, template_path, template_labels, output):
    """Label a mesh into sculptor's planes."""
    mesh = _load_mesh(mesh_path)
    if mode == "vsa":
        result = vsa(mesh, k, max_iters=max_iters, seed=seed)
        labels = result.labeling
        click.echo(f"VSA: K={labels.region_count}, final energy {result.energies[-1]:.6g} "
                   f"after {len(result.energies)} iterations")
    else:
        if not template_path:
            raise click.UsageError("--template is required with --mode template")
        tl_path = template_labels or str(Path(template_path).with_suffix("")) + ".labels.json"
        if not Path(tl_path).exists():
            raise click.UsageError(f"template labels not found: {tl_path}")
        template = LabeledTemplate(_load_mesh(template_path), meshio.load_labels(tl_path))
        labels = transfer_labels(mesh, template)
        click.echo(f"template transfer: K={labels.region_count}")
    out = output or str(Path(mesh_path).with_suffix("")) + ".labels.json"
    meshio.save_labels(labels, out)
    click.echo(f"wrote {out}")


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("labels_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Abstracted-mesh JSON output (defaults to <mesh>.abstracted.json).")
def abstract(mesh_path, labels_path, output):
    """Build the coarse abstracted mesh for a labeled input."""
    mesh = _load_mesh(mesh_path)
    labels = meshio.load_labels(labels_path)
    abstracted = build_abstracted_mesh(mesh, labels)
    out = output or str(Path(mesh_path).with_suffix("")) + ".abstracted.json"
    abstracted.save(out)
    click.echo(f"{abstracted.n_anchors} anchors, "
               f"{len(abstracted.polylines)} polylines, K={abstracted.region_count}")
    click.echo(f"wrote {out}")


def _check_lambda_d(ctx, param, value):
    if value is not None and not (0.0 <= value < LAMBDA_D_MAX):
        raise click.BadParameter(f"lambda-d must lie in [0, {LAMBDA_D_MAX})")
    return value


def _check_unit(ctx, param, value):
    if value is not None and not (0.0 <= value <= 1.0):
        raise click.BadParameter(f"{param.name} must lie in [0, 1]")
    return value


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("labels_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--lambda-d", type=float, default=None, callback=_check_lambda_d,
              help="Exaggeration weight in [0, 3).")
@click.option("--mu", type=float, default=None, callback=_check_unit,
              help="Global planarization in [0, 1].")
@click.option("--smooth-default", type=float, default=None,
              help="Default smoothing scale for all boundaries.")
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False),
              help="StyleParams JSON (overridden by explicit flags).")
@click.option("--landmarks", "landmarks_path", type=click.Path(exists=True, dir_okay=False),
              help="Landmark JSON enabling Lanteri constraints.")
@click.option("--no-lanteri", is_flag=True, help="Disable Lanteri constraints.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="Deformed mesh output (.obj or .ply; defaults to <mesh>.stylized.obj).")
@click.option("--session", "session_path", type=click.Path(dir_okay=False), default=None,
              help="Write a session JSON next to the result.")
@click.option("--max-iters", type=int, default=200, show_default=True)
def stylize(mesh_path, labels_path, lambda_d, mu, smooth_default, params_path,
            landmarks_path, no_lanteri, output, session_path, max_iters):
    """Optimize the abstracted mesh and transfer the result."""
    mesh = _load_mesh(mesh_path)
    labels = meshio.load_labels(labels_path)
    params = StyleParams.load(params_path) if params_path else StyleParams()
    # precedence: explicit flag > params file > built-in defaults
    if lambda_d is not None:
        params.lambda_d = lambda_d
    if mu is not None:
        params.mu = mu
    if smooth_default is not None:
        params.smoothing_default = smooth_default
    if no_lanteri:
        params.use_lanteri = False
    try:
        params.validate()
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc

    landmarks = LandmarkSet.load(landmarks_path) if landmarks_path else None
    sess = StudioSession(
        mesh, labels, params=params, landmarks=landmarks,
        mesh_path=str(mesh_path), mesh_sha256=file_sha256(mesh_path),
    )
    state = sess.run_until_converged(max_iters=max_iters)
    trace = state.energy_trace
    click.echo(
        f"energy {trace[0] - state.energy_offset:.6g} -> {state.energy:.6g} "
        f"in {state.iterations} iterations ({state.reason}); "
        f"{len(trace) - 1} accepted steps"
    )
    out = output or str(Path(mesh_path).with_suffix("")) + ".stylized.obj"
    sess.export_mesh(out)
    click.echo(f"wrote {out}")
    if session_path:
        sess.save(session_path)
        click.echo(f"wrote {session_path}")


def _group_measures(items) -> list[MeasureReport]:
    reports = []
    for item in items:
        mesh_part, _, lm_part = item.rpartition(":")
        if mesh_part and mesh_part.lower().endswith((".obj", ".ply")):
            mesh = _load_mesh(mesh_part)
            lms = LandmarkSet.load(lm_part)
            reports.append(eye_socket_measures(lms, mesh.vertices))
        else:
            with open(item) as fh:
                d = json.load(fh)
            if "A" in d:
                reports.append(MeasureReport.from_json_dict(d))
            else:
                raise click.UsageError(
                    f"{item}: expected measure JSON with A/B/C/D or mesh:landmarks pair"
                )
    return reports


@main.command()
@click.option("--human", "human_items", multiple=True, required=True,
              help="Measure JSON or mesh:landmarks pair (repeatable).")
@click.option("--sculpt", "sculpt_items", multiple=True, required=True,
              help="Measure JSON or mesh:landmarks pair (repeatable).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def analyze(human_items, sculpt_items, csv_path):
    """Compare eye-socket depth measures between two groups of scans."""
    table = aggregate_measures(_group_measures(human_items), _group_measures(sculpt_items))
    click.echo(table.as_text(), nl=False)
    if csv_path:
        Path(csv_path).write_text(table.as_csv())
        click.echo(f"wrote {csv_path}")


@main.command()
@click.argument("mesh_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("labels_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--landmarks", "landmarks_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--params", "params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7870, show_default=True)
def serve(mesh_path, labels_path, landmarks_path, params_path, host, port):
    """Run the interactive session server for the studio UI."""
    import uvicorn

    from .service import create_app

    mesh = _load_mesh(mesh_path)
    labels = meshio.load_labels(labels_path)
    params = StyleParams.load(params_path) if params_path else StyleParams()
    landmarks = LandmarkSet.load(landmarks_path) if landmarks_path else None
    sess = StudioSession(
        mesh, labels, params=params, landmarks=landmarks,
        mesh_path=str(mesh_path), mesh_sha256=file_sha256(mesh_path),
    )
    app = create_app(sess)
    click.echo(f"serving on ws://{host}:{port}/ws")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
