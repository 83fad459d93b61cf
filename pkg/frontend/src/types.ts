/** Wire types mirroring the engine's /v1 JSON payloads. */

export interface RankedCandidate {
  candidate_id: string;
  score: number;
  rank: number;
}

export interface ControlSummary {
  id: string;
  catalog_id: string;
  category_id: string;
  title: string;
  description: string;
  criticality: string;
  mapped_metric_ids: string[];
}

export interface EvaluationTarget {
  audit_scope_id: string;
  control_ref: string;
  status: "compliant" | "non_compliant" | "waiting";
  contributing_result_ids: string[];
  evaluated_at: string;
}

export interface HistoryEntry {
  cycle: number;
  state: string;
  cause: string;
}

export interface Certificate {
  id: string;
  audit_scope_id: string;
  state: "valid" | "minor_deviation" | "major_deviation";
  consecutive_noncompliant_cycles: Record<string, number>;
  history: HistoryEntry[];
  issued_at: string;
}

export interface AuditScope {
  id: string;
  certification_target_id: string;
  catalog_id: string;
  created_at: string;
  certificate_id: string;
  certificate_state?: string;
}

export interface ScopeStatus {
  scope: Omit<AuditScope, "certificate_id" | "certificate_state">;
  certificate: Certificate;
  evaluation: EvaluationTarget[];
}

export interface VerificationReport {
  status: "intact" | "tampered";
  first_bad_seq: number | null;
  length: number;
}

export interface NotificationRecord {
  certificate_id: string;
  cycle: number;
  failing_controls: string[];
  severity: string;
  emitted_at: string;
}

export interface CycleReport {
  cycle: number;
  started_at: string;
  evidence_count: number;
  result_count: number;
  transitions: unknown[];
  notifications: unknown[];
}

export interface MappingConfirmation {
  catalog_id: string;
  control_id: string;
  metric_ids: string[];
  confirmed_by: string;
  confirmed_at: string;
}
