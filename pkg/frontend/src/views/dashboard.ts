/**
 * Scope dashboard: per-control evaluation statuses, certificate state with
 * its transition timeline, CAB notifications, and an on-demand trust-log
 * verification whose report renders inline.
 */

import type { NotificationRecord, ScopeStatus, VerificationReport } from "../types.js";

export interface DashboardHandlers {
  onVerifyTrustLog(): void;
  onRunCycle(): void;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderEmptyState(container: HTMLElement, scopeId: string): void {
  container.innerHTML = `
    <section class="dashboard empty" data-testid="empty-state">
      <h2>No such audit scope</h2>
      <p>Scope <code>${escapeHtml(scopeId)}</code> does not exist on this engine.</p>
    </section>`;
}

export function renderDashboard(
  container: HTMLElement,
  status: ScopeStatus,
  notifications: NotificationRecord[],
  handlers: DashboardHandlers,
): void {
  const certificate = status.certificate;
  const rows = status.evaluation
    .map(
      (target) => `
      <tr data-control="${escapeHtml(target.control_ref)}">
        <td>${escapeHtml(target.control_ref)}</td>
        <td><span class="status status-${target.status}" data-testid="status-${escapeHtml(target.control_ref)}">${target.status}</span></td>
        <td>${target.contributing_result_ids.length}</td>
        <td>${escapeHtml(target.evaluated_at)}</td>
      </tr>`,
    )
    .join("");

  const timeline = certificate.history
    .map(
      (entry) => `
      <li class="timeline-${entry.state}">
        <span class="cycle">cycle ${entry.cycle}</span>
        <span class="state">${escapeHtml(entry.state)}</span>
        <span class="cause">${escapeHtml(entry.cause)}</span>
      </li>`,
    )
    .join("");

  const scopeNotifications = notifications.filter((n) => n.certificate_id === certificate.id);
  const notificationItems = scopeNotifications
    .map(
      (n) => `
      <li>cycle ${n.cycle}: ${escapeHtml(n.severity)} deviation on ${n.failing_controls.map(escapeHtml).join(", ")}</li>`,
    )
    .join("");

  container.innerHTML = `
    <section class="dashboard" data-testid="dashboard">
      <header>
        <h2>${escapeHtml(status.scope.id)}</h2>
        <span class="badge badge-${certificate.state}" data-testid="certificate-state">${certificate.state}</span>
        <button data-action="run-cycle">Run cycle</button>
      </header>
      <h3>Controls</h3>
      <table class="evaluation">
        <thead><tr><th>Control</th><th>Status</th><th>Results</th><th>Evaluated</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <h3>Certificate timeline</h3>
      <ol class="timeline" data-testid="timeline">${timeline}</ol>
      <h3>CAB notifications</h3>
      <ul class="notifications" data-testid="notifications">${notificationItems || "<li class='none'>none</li>"}</ul>
      <h3>Trust log</h3>
      <button data-action="verify" data-testid="verify">Verify trust log</button>
      <span class="verify-result" data-testid="verify-result"></span>
    </section>`;

  container.querySelector<HTMLButtonElement>('[data-action="verify"]')!.addEventListener("click", handlers.onVerifyTrustLog);
  container.querySelector<HTMLButtonElement>('[data-action="run-cycle"]')!.addEventListener("click", handlers.onRunCycle);
}

export function renderVerificationResult(container: HTMLElement, report: VerificationReport): void {
  const slot = container.querySelector<HTMLElement>('[data-testid="verify-result"]');
  if (!slot) return;
  if (report.status === "intact") {
    slot.className = "verify-result ok";
    slot.textContent = `intact, length ${report.length}`;
  } else {
    slot.className = "verify-result bad";
    slot.textContent = `tampered at seq ${report.first_bad_seq}, length ${report.length}`;
  }
}
