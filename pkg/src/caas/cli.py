"""Command-line surface of the engine.

State persists in the data directory (``--data-dir`` or ``CAAS_DATA_DIR``),
so consecutive invocations compose into one engine session.  Exit codes:
0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import EngineConfig
from .engine import Engine
from .errors import CaasError


def _engine(ctx: click.Context) -> Engine:
    if ctx.obj.get("engine") is None:
        ctx.obj["engine"] = Engine(
            EngineConfig.from_env(
                data_directory=ctx.obj.get("data_dir"),
                clock_mode=ctx.obj.get("clock_mode"),
                listen_address=ctx.obj.get("listen"),
                taxonomy_path=ctx.obj.get("taxonomy"),
                extraction_rules_path=ctx.obj.get("extraction_rules"),
            )
        )
    return ctx.obj["engine"]


def _emit(ctx: click.Context, payload, text: str | None = None) -> None:
    if ctx.obj.get("json") or text is None:
        click.echo(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        click.echo(text)


def _load_json(path: str):
    return json.loads(Path(path).read_text(encoding="utf-8"))


class DomainErrorGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except CaasError as exc:
            click.echo(f"error: {exc.code}: {exc}", err=True)
            sys.exit(1)


@click.group(cls=DomainErrorGroup)
@click.option("--data-dir", envvar="CAAS_DATA_DIR", default=None, help="State directory (journals, keys).")
@click.option("--clock-mode", envvar="CAAS_CLOCK_MODE", type=click.Choice(["real", "virtual"]), default=None)
@click.option("--listen", envvar="CAAS_LISTEN_ADDR", default=None, help="host:port for 'serve'.")
@click.option("--taxonomy", type=click.Path(exists=True), default=None, help="Resource-type subtype table (JSON).")
@click.option(
    "--extraction-rules", type=click.Path(exists=True), default=None, help="Document extraction rules (JSON)."
)
@click.option("--json", "json_output", is_flag=True, help="Machine-readable JSON output.")
@click.pass_context
def main(ctx: click.Context, data_dir, clock_mode, listen, taxonomy, extraction_rules, json_output):
    """Continuous certification engine."""
    ctx.obj = {
        "data_dir": data_dir,
        "clock_mode": clock_mode,
        "listen": listen,
        "taxonomy": taxonomy,
        "extraction_rules": extraction_rules,
        "json": json_output,
    }


@main.group()
def ingest():
    """Load catalog or metric documents."""


@ingest.command("catalog")
@click.argument("file", type=click.Path(exists=True))
@click.pass_context
def ingest_catalog(ctx, file):
    engine = _engine(ctx)
    catalog_id = engine.ingest_catalog(_load_json(file))
    _emit(ctx, {"id": catalog_id}, f"ingested catalog {catalog_id}")


@ingest.command("metrics")
@click.argument("file", type=click.Path(exists=True))
@click.pass_context
def ingest_metrics(ctx, file):
    engine = _engine(ctx)
    doc = _load_json(file)
    docs = doc if isinstance(doc, list) else [doc]
    ids = engine.register_metrics(docs)
    _emit(ctx, {"ids": ids}, "registered metrics: " + ", ".join(ids))


@main.group()
def target():
    """Certification targets."""


@target.command("create")
@click.option("--id", "target_id", required=True)
@click.option("--name", default=None)
@click.option("--description", default="")
@click.pass_context
def target_create(ctx, target_id, name, description):
    engine = _engine(ctx)
    record = engine.create_target(target_id, name or target_id, description)
    _emit(ctx, record.__dict__, f"created target {record.id}")


@main.group()
def scope():
    """Audit scopes (certification target x catalog)."""


@scope.command("create")
@click.option("--target", "target_id", required=True)
@click.option("--catalog", "catalog_id", required=True)
@click.pass_context
def scope_create(ctx, target_id, catalog_id):
    engine = _engine(ctx)
    record = engine.create_scope(target_id, catalog_id)
    _emit(ctx, record.__dict__, f"created scope {record.id}")


@main.group()
def env():
    """Simulated environment models."""


@env.command("load")
@click.argument("file", type=click.Path(exists=True))
@click.pass_context
def env_load(ctx, file):
    engine = _engine(ctx)
    model = engine.load_environment(_load_json(file))
    _emit(
        ctx,
        {"target_id": model.target_id, "resources": len(model.resources)},
        f"loaded environment for {model.target_id} ({len(model.resources)} resources)",
    )


@main.group(name="map")
def map_group():
    """Control-to-metric mappings."""


@map_group.command("confirm")
@click.option("--control", "control_ref", required=True, help="catalog_id/control_id")
@click.option("--metric", "metric_ids", multiple=True, required=True)
@click.option("--user", default="cli")
@click.pass_context
def map_confirm(ctx, control_ref, metric_ids, user):
    engine = _engine(ctx)
    mapping = engine.confirm_mapping(control_ref, list(metric_ids), user)
    _emit(
        ctx,
        {"control_ref": mapping.control_ref, "metric_ids": list(mapping.metric_ids)},
        f"mapped {mapping.control_ref} -> {', '.join(mapping.metric_ids)}",
    )


@main.command("run-cycle")
@click.option("--advance", type=float, default=0.0, help="Advance the virtual clock by N seconds first.")
@click.option("--trigger", "triggers", multiple=True, help="On-demand metric ids to assess this cycle.")
@click.pass_context
def run_cycle(ctx, advance, triggers):
    engine = _engine(ctx)
    report = engine.run_cycle(advance_seconds=advance, trigger_metrics=list(triggers) or None)
    summary = (
        f"cycle {report.cycle} at {report.started_at}: "
        f"{report.evidence_count} evidence, {report.result_count} results, "
        f"{len(report.transitions)} transitions, {len(report.notifications)} notifications"
    )
    _emit(ctx, report.to_dict(), summary)


@main.command("recommend")
@click.option("--control", "control_ref", required=True, help="catalog_id/control_id")
@click.option("--kind", type=click.Choice(["metrics", "controls"]), default="metrics")
@click.option("--candidates", "candidate_set", multiple=True, help="Metric ids or target catalog ids.")
@click.option("--top", type=int, default=0, help="Truncate to the top N candidates.")
@click.pass_context
def recommend(ctx, control_ref, kind, candidate_set, top):
    engine = _engine(ctx)
    ranked = engine.recommend(control_ref, kind, list(candidate_set) or None)
    if top:
        ranked = ranked[:top]
    lines = [f"{c['rank']:>3}. {c['candidate_id']}  score={c['score']:.6f}" for c in ranked]
    _emit(ctx, ranked, "\n".join(lines) if lines else "no candidates")


@main.command("verify-log")
@click.pass_context
def verify_log(ctx):
    engine = _engine(ctx)
    report = engine.verify_log()
    text = f"{report['status']}, length {report['length']}"
    if report["first_bad_seq"] is not None:
        text += f", first bad seq {report['first_bad_seq']}"
    _emit(ctx, report, text)
    if report["status"] != "intact":
        sys.exit(1)


@main.command("status")
@click.argument("scope_id")
@click.pass_context
def status(ctx, scope_id):
    engine = _engine(ctx)
    payload = engine.scope_status(scope_id)
    certificate = payload["certificate"]
    lines = [f"scope {scope_id}: certificate {certificate['id']} is {certificate['state']}"]
    for target in payload["evaluation"]:
        lines.append(f"  {target['control_ref']}: {target['status']}")
    _emit(ctx, payload, "\n".join(lines))


@main.command("serve")
@click.pass_context
def serve_command(ctx):
    """Run the HTTP API server."""
    engine = _engine(ctx)
    from .gateway import serve

    serve(engine)


if __name__ == "__main__":
    main()
