"""HTTP JSON API over the engine; all endpoints versioned under /v1.

Domain errors map to their ``http_status`` with a uniform payload:
``{"error": <code>, "message": <text>}``.
"""

from __future__ import annotations

from typing import Any

from fastapi import Body, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engine import Engine
from .errors import CaasError


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="caas-engine", version="0.1.0")
    app.state.engine = engine
    # The auditor console is served as static files from another origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(CaasError)
    async def domain_error_handler(_request: Request, exc: CaasError):
        return JSONResponse(status_code=exc.http_status, content={"error": exc.code, "message": str(exc)})

    @app.get("/v1/health")
    def health():
        return engine.health()

    # --- catalogs ---------------------------------------------------------

    @app.post("/v1/catalogs", status_code=201)
    def ingest_catalog(doc: dict[str, Any] = Body(...)):
        catalog_id = engine.ingest_catalog(doc)
        return {"id": catalog_id}

    @app.get("/v1/catalogs")
    def list_catalogs():
        return [
            {"id": c.id, "name": c.name, "version": c.version}
            for c in engine.catalogs.all_catalogs()
        ]

    @app.get("/v1/catalogs/{catalog_id}")
    def get_catalog(catalog_id: str):
        return engine.catalogs.serialize_catalog(catalog_id)

    @app.get("/v1/catalogs/{catalog_id}/controls")
    def list_controls(catalog_id: str, category: str | None = Query(default=None)):
        controls = engine.catalogs.list_controls(catalog_id, category)
        out = []
        for control in controls:
            mapping = engine.catalogs.get_mapping(catalog_id, control.id)
            out.append(
                {
                    "id": control.id,
                    "catalog_id": control.catalog_id,
                    "category_id": control.category_id,
                    "title": control.title,
                    "description": control.description,
                    "criticality": control.criticality,
                    "mapped_metric_ids": list(mapping.metric_ids) if mapping else [],
                }
            )
        return out

    # --- metrics -----------------------------------------------------------

    @app.post("/v1/metrics", status_code=201)
    def register_metric(doc: dict[str, Any] = Body(...)):
        return {"id": engine.register_metric(doc)}

    @app.get("/v1/metrics")
    def list_metrics():
        from .metrics import metric_to_document

        return [metric_to_document(m) for m in engine.registry.all_metrics()]

    @app.post("/v1/metric-configurations", status_code=201)
    def set_metric_configuration(body: dict[str, Any] = Body(...)):
        cfg = engine.set_metric_configuration(
            body.get("certification_target_id"), body.get("metric_id"), body.get("target_value")
        )
        return cfg.__dict__

    # --- targets, scopes, environments ---------------------------------------

    @app.post("/v1/certification-targets", status_code=201)
    def create_target(body: dict[str, Any] = Body(...)):
        target = engine.create_target(body.get("id"), body.get("name", body.get("id")), body.get("description", ""))
        return target.__dict__

    @app.get("/v1/certification-targets")
    def list_targets():
        return [t.__dict__ for t in engine.orchestrator.targets.values()]

    @app.post("/v1/audit-scopes", status_code=201)
    def create_scope(body: dict[str, Any] = Body(...)):
        scope = engine.create_scope(body.get("certification_target_id"), body.get("catalog_id"))
        return {**scope.__dict__, "certificate_id": engine.orchestrator.certificate_for_scope(scope.id).id}

    @app.get("/v1/audit-scopes")
    def list_scopes():
        out = []
        for scope in engine.orchestrator.scopes.values():
            certificate = engine.orchestrator.certificate_for_scope(scope.id)
            out.append({**scope.__dict__, "certificate_id": certificate.id, "certificate_state": certificate.state})
        return out

    @app.get("/v1/audit-scopes/{scope_id}/evaluation")
    def scope_evaluation(scope_id: str):
        return engine.scope_status(scope_id)["evaluation"]

    @app.get("/v1/audit-scopes/{scope_id}/status")
    def scope_status(scope_id: str):
        return engine.scope_status(scope_id)

    @app.post("/v1/environments", status_code=201)
    def load_environment(body: dict[str, Any] = Body(...)):
        env = engine.load_environment(body)
        return {"target_id": env.target_id, "resources": len(env.resources), "documents": len(env.documents), "models": len(env.models)}

    # --- evidence ---------------------------------------------------------------

    @app.post("/v1/evidence", status_code=201)
    def submit_evidence(body: Any = Body(...)):
        docs = body if isinstance(body, list) else [body]
        deltas = [engine.submit_evidence(doc) for doc in docs]
        return {
            "accepted": len(deltas),
            "deltas": [
                {"resource_id": d.resource_id, "created": d.created, "changed_paths": list(d.changed_paths)}
                for d in deltas
            ],
        }

    @app.get("/v1/resources")
    def query_resources(target: str = Query(...), type: str | None = Query(default=None)):
        nodes = engine.graph.query_resources(target, type)
        return [
            {
                "resource_id": node.resource_id,
                "resource_types": list(node.resource_types),
                "properties": node.properties,
                "provenance": node.provenance,
                "relations": [{"kind": r.kind, "to": r.to} for r in node.relations],
            }
            for node in nodes
        ]

    # --- assessment results --------------------------------------------------------

    @app.get("/v1/assessment-results")
    def assessment_results(
        target: str | None = Query(default=None),
        metric: str | None = Query(default=None),
        latest: bool = Query(default=False),
    ):
        if latest and target:
            results = engine.assessor.store.latest_results(target, metric)
        else:
            results = engine.assessor.store.all_results(target, metric)
        return [r.to_dict() for r in results]

    # --- certificates -----------------------------------------------------------------

    @app.get("/v1/certificates/{certificate_id}")
    def get_certificate(certificate_id: str):
        from .errors import UnknownScope

        certificate = engine.orchestrator.certificates.get(certificate_id)
        if certificate is None:
            raise UnknownScope(f"certificate {certificate_id!r} does not exist")
        return certificate.to_dict()

    @app.get("/v1/certificates/{certificate_id}/history")
    def certificate_history(certificate_id: str):
        return get_certificate(certificate_id)["history"]

    # --- mapping ------------------------------------------------------------------------

    @app.post("/v1/mapping/recommendations")
    def mapping_recommendations(body: dict[str, Any] = Body(...)):
        return engine.recommend(
            body.get("control_ref", ""),
            body.get("candidate_kind", "metrics"),
            body.get("candidate_set"),
        )

    @app.put("/v1/mappings/{catalog_id}/{control_id}")
    def confirm_mapping(catalog_id: str, control_id: str, body: dict[str, Any] = Body(...)):
        mapping = engine.confirm_mapping(
            f"{catalog_id}/{control_id}", body.get("metric_ids", []), body.get("user", "anonymous")
        )
        return {
            "catalog_id": mapping.catalog_id,
            "control_id": mapping.control_id,
            "metric_ids": list(mapping.metric_ids),
            "confirmed_by": mapping.confirmed_by,
            "confirmed_at": mapping.confirmed_at,
        }

    @app.get("/v1/mappings/{catalog_id}/{control_id}/history")
    def mapping_history(catalog_id: str, control_id: str):
        return [
            {
                "catalog_id": m.catalog_id,
                "control_id": m.control_id,
                "metric_ids": list(m.metric_ids),
                "confirmed_by": m.confirmed_by,
                "confirmed_at": m.confirmed_at,
            }
            for m in engine.catalogs.mapping_history(catalog_id, control_id)
        ]

    # --- notifications and trust log --------------------------------------------------------

    @app.get("/v1/notifications")
    def notifications():
        return [n.to_dict() for n in engine.orchestrator.notifications]

    @app.get("/v1/trust-log/entries")
    def trust_log_entries(start: int = Query(default=0, alias="from")):
        return [entry.to_dict() for entry in engine.trust_log.entries(start)]

    @app.post("/v1/trust-log/verify")
    def trust_log_verify():
        return engine.verify_log()

    # --- cycles --------------------------------------------------------------------------------

    @app.post("/v1/cycles/run")
    def run_cycle(body: dict[str, Any] | None = Body(default=None)):
        body = body or {}
        report = engine.run_cycle(
            advance_seconds=float(body.get("advance_seconds", 0) or 0),
            trigger_metrics=body.get("trigger_metrics"),
        )
        return report.to_dict()

    return app


def serve(engine: Engine) -> None:
    """Run the API server; raises PortInUse when the address is taken."""
    import errno
    import socket

    import uvicorn

    from .errors import PortInUse

    host, port = engine.config.host, engine.config.port
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES):
            raise PortInUse(f"cannot bind {host}:{port}: {exc}")
        raise
    finally:
        probe.close()

    uvicorn.run(create_app(engine), host=host, port=port, log_level="info")
