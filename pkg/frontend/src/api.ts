/**
 * Typed client over the engine's /v1 HTTP API.
 *
 * The console holds no truth of its own: every displayed fact comes from
 * one of these calls and can be refetched. Gateway errors are surfaced
 * verbatim (code + message) so views can show them unmodified.
 */

import type {
  AuditScope,
  ControlSummary,
  CycleReport,
  MappingConfirmation,
  NotificationRecord,
  RankedCandidate,
  ScopeStatus,
  VerificationReport,
} from "./types.js";

export class GatewayError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

type FetchLike = typeof fetch;

export class GatewayClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new GatewayError(0, "Unreachable", `gateway unreachable: ${String(err)}`);
    }
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const code = payload?.error ?? `HTTP${response.status}`;
      const message = payload?.message ?? response.statusText;
      throw new GatewayError(response.status, code, message);
    }
    return payload as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/v1/health");
  }

  listScopes(): Promise<AuditScope[]> {
    return this.request("GET", "/v1/audit-scopes");
  }

  scopeStatus(scopeId: string): Promise<ScopeStatus> {
    return this.request("GET", `/v1/audit-scopes/${encodeURIComponent(scopeId)}/status`);
  }

  listControls(catalogId: string): Promise<ControlSummary[]> {
    return this.request("GET", `/v1/catalogs/${encodeURIComponent(catalogId)}/controls`);
  }

  recommendations(controlRef: string, candidateKind: "metrics" | "controls" = "metrics"): Promise<RankedCandidate[]> {
    return this.request("POST", "/v1/mapping/recommendations", {
      control_ref: controlRef,
      candidate_kind: candidateKind,
    });
  }

  confirmMapping(controlRef: string, metricIds: string[], user: string): Promise<MappingConfirmation> {
    const [catalogId, controlId] = splitControlRef(controlRef);
    return this.request(
      "PUT",
      `/v1/mappings/${encodeURIComponent(catalogId)}/${encodeURIComponent(controlId)}`,
      { metric_ids: metricIds, user },
    );
  }

  notifications(): Promise<NotificationRecord[]> {
    return this.request("GET", "/v1/notifications");
  }

  verifyTrustLog(): Promise<VerificationReport> {
    return this.request("POST", "/v1/trust-log/verify");
  }

  runCycle(advanceSeconds = 0, triggerMetrics?: string[]): Promise<CycleReport> {
    return this.request("POST", "/v1/cycles/run", {
      advance_seconds: advanceSeconds,
      trigger_metrics: triggerMetrics,
    });
  }
}

export function splitControlRef(controlRef: string): [string, string] {
  const slash = controlRef.indexOf("/");
  if (slash <= 0 || slash === controlRef.length - 1) {
    throw new Error(`control ref must be "catalog/control", got "${controlRef}"`);
  }
  return [controlRef.slice(0, slash), controlRef.slice(slash + 1)];
}
