"""Command-line pipeline: ingest, network, presence, cohesion, models, reports.

Exit codes: 0 success, 1 estimation failure, 2 validation failure,
3 I/O failure. Every failure message is tagged with the stage that
raised it. All outputs land under the configured output directory; the
``pipeline`` command additionally writes a manifest with input digests so
runs can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import click
import yaml

from . import __version__
from .analytics import (
    describe,
    pairwise_correlations,
    presence_size_summary,
    write_correlations,
    write_descriptors,
)
from .cohesion import cohesion_panel, write_cohesion
from .econometrics import merge_panel, run_specification_grid, write_results
from .errors import EstimationError, IndustrySpaceError, ValidationError
from .ingest import load_crosswalk, load_flows, load_panel
from .panel import (
    PeriodSpec,
    build_presence,
    entry_counts,
    label_transitions,
    structural_change_curve,
    write_transitions,
)
from .relatedness import build_relatedness, convert_scheme, export_network
from .synth import SynthConfig, write_fixture

EXIT_ESTIMATION = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

DEFAULT_PERIODS = (
    ("2006-2009", 2006, 2009),
    ("2010-2014", 2010, 2014),
    ("2015-2019", 2015, 2019),
)

CORE_OUTPUTS = (
    "edges.csv",
    "nodes.csv",
    "transitions.csv",
    "cohesion.csv",
    "results.csv",
    "descriptors.csv",
    "correlations.csv",
)

DESCRIBE_VARIABLES = (
    "entry",
    "exit",
    "mne_present",
    "wc_excl_d",
    "wc_excl_m",
    "wc_overlap",
    "sc_excl_d",
    "sc_excl_m",
    "sc_overlap",
)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run settings: input paths, period windows, and flags."""

    flows: str
    panel: str
    crosswalk: str
    out_dir: str
    periods: tuple
    threshold: int = 5
    steps: int = 2
    cluster_by_region: bool = False
    network_year: int = None
    figures: bool = True

    def __post_init__(self):
        ordered = list(self.periods)
        for prev, nxt in zip(ordered, ordered[1:]):
            if nxt.base_year < prev.end_year:
                raise ValidationError(
                    f"periods {prev.name!r} and {nxt.name!r} overlap or are out of order"
                )
        if self.threshold < 0:
            raise ValidationError("threshold must be nonnegative")
        if self.steps < 1:
            raise ValidationError("steps must be at least 1")


def _fail(stage, exc, code):
    click.echo(f"error [{stage}]: {exc}", err=True)
    sys.exit(code)


@contextmanager
def _stage(name):
    try:
        yield
    except ValidationError as exc:
        _fail(name, exc, EXIT_VALIDATION)
    except EstimationError as exc:
        _fail(name, exc, EXIT_ESTIMATION)
    except IndustrySpaceError as exc:
        _fail(name, exc, EXIT_ESTIMATION)
    except OSError as exc:
        _fail(name, exc, EXIT_IO)


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValidationError("config file must contain a key-value mapping")
    return data


def _periods_from(config):
    raw = config.get("periods") or DEFAULT_PERIODS
    specs = []
    for item in raw:
        try:
            name, base, end = item
        except (TypeError, ValueError):
            raise ValidationError(f"period entry {item!r} must be [name, base_year, end_year]")
        specs.append(PeriodSpec(str(name), int(base), int(end)))
    return tuple(specs)


def _build_run_config(config_path, out_dir, **overrides):
    config = _load_config_file(config_path)
    merged = dict(config)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    missing = [k for k in ("flows", "panel", "crosswalk") if not merged.get(k)]
    if missing:
        raise ValidationError(
            "missing input path(s): " + ", ".join(missing) + " (set via config or flags)"
        )
    return RunConfig(
        flows=str(merged["flows"]),
        panel=str(merged["panel"]),
        crosswalk=str(merged["crosswalk"]),
        out_dir=str(out_dir if out_dir is not None else merged.get("out_dir", "out")),
        periods=_periods_from(merged),
        threshold=int(merged.get("threshold", 5)),
        steps=int(merged.get("steps", 2)),
        cluster_by_region=bool(merged.get("cluster_by_region", False)),
        network_year=(
            int(merged["network_year"]) if merged.get("network_year") is not None else None
        ),
        figures=bool(merged.get("figures", True)),
    )


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ingest_stage(run):
    flows = load_flows(run.flows)
    xwalk = load_crosswalk(run.crosswalk, flows=flows)
    panel = load_panel(run.panel)
    return flows, xwalk, panel


def _network_stage(flows, xwalk):
    return build_relatedness(convert_scheme(flows, xwalk))


def _annual_periods(cube):
    return tuple(
        PeriodSpec(f"{y}-{y + 1}", y, y + 1)
        for y in cube.years[:-1]
    )


def _write_curve(frame, path):
    frame.to_csv(path, index=False, float_format="%.12g", na_rep="NA", lineterminator="\n")


def _presence_reports(cube, out, figures):
    """Survival-curve and entry-count report CSVs, plus their figures."""
    reports = _out_dir(out / "reports")
    written = []
    forward = structural_change_curve(cube, cube.years[0], "forward")
    backward = structural_change_curve(cube, cube.years[0], "backward")
    _write_curve(forward, reports / "structural_change_forward.csv")
    _write_curve(backward, reports / "structural_change_backward.csv")
    written += [
        "reports/structural_change_forward.csv",
        "reports/structural_change_backward.csv",
    ]
    if len(cube.years) > 1:
        annual = label_transitions(cube, _annual_periods(cube))
        by_year = entry_counts(annual, cube, "into_exclusive_mne", "year")
        by_region = entry_counts(annual, cube, "into_exclusive_mne", "region")
        by_sector = entry_counts(annual, cube, "into_exclusive_mne", "sector_prefix")
        _write_curve(by_year, reports / "entry_counts_by_year.csv")
        _write_curve(by_region, reports / "entry_counts_by_region.csv")
        _write_curve(by_sector, reports / "entry_counts_by_sector.csv")
        written += [
            "reports/entry_counts_by_year.csv",
            "reports/entry_counts_by_region.csv",
            "reports/entry_counts_by_sector.csv",
        ]
        if figures:
            from .figures import render_entry_counts, render_structural_change

            render_structural_change(forward, backward, reports / "structural_change.png")
            render_entry_counts(
                by_year, by_region, by_sector, reports / "entry_counts.png"
            )
            written += ["reports/structural_change.png", "reports/entry_counts.png"]
    return written


def _describe_stage(merged, panel, threshold, out):
    if not len(merged):
        raise EstimationError(
            "analysis panel is empty after joining transitions with cohesion values"
        )
    variables = {name: merged[name].to_numpy(dtype=float) for name in DESCRIBE_VARIABLES}
    masks = {
        "entry": merged["in_entry_sample"].to_numpy(dtype=bool),
        "exit": merged["in_exit_sample"].to_numpy(dtype=bool),
    }
    rows = describe(variables, masks)
    cell_rows = presence_size_summary(panel, threshold)
    _, long = pairwise_correlations(variables, masks)
    samples = {"entry": "entry_model", "exit": "exit_model"}
    samples.update({row.variable: "cells" for row in cell_rows})
    write_descriptors(rows + cell_rows, out / "descriptors.csv", samples=samples)
    write_correlations(long, out / "correlations.csv")


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@click.group()
@click.version_option(version=__version__, prog_name="industryspace")
def main():
    """Industry-space construction and regional entry/exit analytics."""


_config_opt = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="YAML key-value config with input paths, periods, and flags.",
)
_flows_opt = click.option("--flows", type=click.Path(), default=None)
_panel_opt = click.option("--panel", type=click.Path(), default=None)
_crosswalk_opt = click.option("--crosswalk", type=click.Path(), default=None)
_out_opt = click.option("--out-dir", type=click.Path(), default=None)
_threshold_opt = click.option("--threshold", type=int, default=None,
                              help="Presence threshold (employment must exceed it).")
_steps_opt = click.option("--steps", type=int, default=None,
                          help="Random-walk steps for strategic closeness.")
_cluster_opt = click.option("--cluster-by-region", is_flag=True, default=None,
                            help="Cluster robust standard errors by region.")
_figures_opt = click.option("--figures/--no-figures", "figures", default=None,
                            help="Render report figures alongside the CSVs.")


@main.command("build-network")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_steps_opt
@click.option("--year", type=int, default=None, help="Panel year for node MNE shares.")
def cmd_build_network(config_path, flows, panel, crosswalk, out_dir, steps, year):
    """Build the relatedness network and export edge/node files."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            steps=steps, network_year=year,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        flows_m, xwalk, panel_d = _ingest_stage(run)
    with _stage("network"):
        net = _network_stage(flows_m, xwalk)
        node_year = run.network_year
        if node_year is None:
            node_year = panel_d.years()[0] if panel_d.years() else None
        if node_year is None:
            raise ValidationError("panel is empty; cannot pick a node-share year")
        export_network(net, panel_d, node_year, out / "edges.csv", out / "nodes.csv")
    click.echo(f"wrote {out / 'edges.csv'} and {out / 'nodes.csv'}")


@main.command("presence")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_threshold_opt
@_figures_opt
def cmd_presence(config_path, flows, panel, crosswalk, out_dir, threshold, figures):
    """Label presence, entries, and exits; write transition and report files."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            threshold=threshold, figures=figures,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        panel_d = load_panel(run.panel)
    with _stage("presence"):
        cube = build_presence(panel_d, run.threshold)
        table = label_transitions(cube, run.periods)
        write_transitions(table, out / "transitions.csv")
    with _stage("report"):
        _presence_reports(cube, out, run.figures)
    click.echo(f"wrote {out / 'transitions.csv'} and reports")


@main.command("cohesion")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_threshold_opt
@_steps_opt
def cmd_cohesion(config_path, flows, panel, crosswalk, out_dir, threshold, steps):
    """Compute weighted and strategic closeness per industry-region-period."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            threshold=threshold, steps=steps,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        flows_m, xwalk, panel_d = _ingest_stage(run)
    with _stage("network"):
        net = _network_stage(flows_m, xwalk)
    with _stage("cohesion"):
        cube = build_presence(panel_d, run.threshold)
        frame = cohesion_panel(net, cube, run.periods, steps=run.steps)
        write_cohesion(frame, out / "cohesion.csv")
    click.echo(f"wrote {out / 'cohesion.csv'}")


@main.command("regress")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_threshold_opt
@_steps_opt
@_cluster_opt
def cmd_regress(config_path, flows, panel, crosswalk, out_dir, threshold, steps,
                cluster_by_region):
    """Fit the entry and exit probit grids and write the results table."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            threshold=threshold, steps=steps, cluster_by_region=cluster_by_region,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        flows_m, xwalk, panel_d = _ingest_stage(run)
    with _stage("network"):
        net = _network_stage(flows_m, xwalk)
    with _stage("presence"):
        cube = build_presence(panel_d, run.threshold)
        table = label_transitions(cube, run.periods)
    with _stage("cohesion"):
        frame = cohesion_panel(net, cube, run.periods, steps=run.steps)
    with _stage("regress"):
        results = run_specification_grid(
            table, frame, cube, cluster_by_region=run.cluster_by_region
        )
        write_results(results, out / "results.csv")
    click.echo(f"wrote {out / 'results.csv'}")


@main.command("describe")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_threshold_opt
@_steps_opt
def cmd_describe(config_path, flows, panel, crosswalk, out_dir, threshold, steps):
    """Write variable descriptors and pairwise correlations."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            threshold=threshold, steps=steps,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        flows_m, xwalk, panel_d = _ingest_stage(run)
    with _stage("network"):
        net = _network_stage(flows_m, xwalk)
    with _stage("presence"):
        cube = build_presence(panel_d, run.threshold)
        table = label_transitions(cube, run.periods)
    with _stage("cohesion"):
        frame = cohesion_panel(net, cube, run.periods, steps=run.steps)
    with _stage("describe"):
        merged = merge_panel(table, frame, cube)
        _describe_stage(merged, panel_d, run.threshold, out)
    click.echo(f"wrote {out / 'descriptors.csv'} and {out / 'correlations.csv'}")


@main.command("synth")
@click.option("--seed", type=int, required=True)
@click.option("--out-dir", type=click.Path(), default="synth-out", show_default=True)
@click.option("--industries", type=int, default=40, show_default=True)
@click.option("--regions", type=int, default=8, show_default=True)
@click.option("--years", type=int, default=4, show_default=True)
@click.option("--blocks", type=int, default=4, show_default=True)
@click.option("--noise-scale", type=float, default=1.0, show_default=True)
@click.option("--threshold", type=int, default=5, show_default=True)
@click.option("--effect", "effects", multiple=True,
              help="Planted entry effect, e.g. --effect wc_overlap=1.5 (repeatable).")
def cmd_synth(seed, out_dir, industries, regions, years, blocks, noise_scale,
              threshold, effects):
    """Generate a seeded synthetic fixture (flows, panel, crosswalk, truth)."""
    with _stage("synth"):
        entry_effect = {}
        for item in effects:
            term, _, value = item.partition("=")
            if not value:
                raise ValidationError(f"--effect expects term=value, got {item!r}")
            try:
                entry_effect[term] = float(value)
            except ValueError:
                raise ValidationError(f"effect value {value!r} is not a number")
        config = SynthConfig(
            seed=seed,
            n_industries=industries,
            n_regions=regions,
            years=years,
            n_blocks=blocks,
            entry_effect=entry_effect,
            noise_scale=noise_scale,
            threshold=threshold,
        )
        paths = write_fixture(config, out_dir)
    click.echo("wrote " + ", ".join(str(p) for p in paths.values()))


@main.command("pipeline")
@_config_opt
@_flows_opt
@_panel_opt
@_crosswalk_opt
@_out_opt
@_threshold_opt
@_steps_opt
@_cluster_opt
@_figures_opt
@click.option("--network-year", type=int, default=None,
              help="Panel year for node MNE shares (default: first panel year).")
def cmd_pipeline(config_path, flows, panel, crosswalk, out_dir, threshold, steps,
                 cluster_by_region, figures, network_year):
    """Run the full pipeline and record a manifest of inputs and outputs."""
    with _stage("config"):
        run = _build_run_config(
            config_path, out_dir, flows=flows, panel=panel, crosswalk=crosswalk,
            threshold=threshold, steps=steps, cluster_by_region=cluster_by_region,
            figures=figures, network_year=network_year,
        )
        out = _out_dir(run.out_dir)
    with _stage("ingest"):
        flows_m, xwalk, panel_d = _ingest_stage(run)
    with _stage("network"):
        net = _network_stage(flows_m, xwalk)
        node_year = run.network_year
        if node_year is None:
            node_year = panel_d.years()[0]
        export_network(net, panel_d, node_year, out / "edges.csv", out / "nodes.csv")
    with _stage("presence"):
        cube = build_presence(panel_d, run.threshold)
        table = label_transitions(cube, run.periods)
        write_transitions(table, out / "transitions.csv")
    with _stage("cohesion"):
        frame = cohesion_panel(net, cube, run.periods, steps=run.steps)
        write_cohesion(frame, out / "cohesion.csv")
    with _stage("regress"):
        results = run_specification_grid(
            table, frame, cube, cluster_by_region=run.cluster_by_region
        )
        write_results(results, out / "results.csv")
    with _stage("describe"):
        merged = merge_panel(table, frame, cube)
        _describe_stage(merged, panel_d, run.threshold, out)
    with _stage("report"):
        report_files = _presence_reports(cube, out, run.figures)
    with _stage("manifest"):
        outputs = list(CORE_OUTPUTS) + report_files
        manifest = {
            "tool": "industryspace",
            "version": __version__,
            "config": {
                "threshold": run.threshold,
                "steps": run.steps,
                "cluster_by_region": run.cluster_by_region,
                "network_year": node_year,
                "figures": run.figures,
                "periods": [[p.name, p.base_year, p.end_year] for p in run.periods],
            },
            "inputs": {
                Path(run.flows).name: _digest(run.flows),
                Path(run.panel).name: _digest(run.panel),
                Path(run.crosswalk).name: _digest(run.crosswalk),
            },
            "outputs": {name: _digest(out / name) for name in outputs},
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    click.echo(f"pipeline complete; manifest at {out / 'manifest.json'}")


if __name__ == "__main__":
    main()
