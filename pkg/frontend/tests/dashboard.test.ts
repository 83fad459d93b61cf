import { beforeEach, describe, expect, it } from "vitest";

import {
  renderDashboard,
  renderEmptyState,
  renderVerificationResult,
  type DashboardHandlers,
} from "../src/views/dashboard.js";
import type { NotificationRecord, ScopeStatus } from "../src/types.js";

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  container = document.getElementById("app")!;
});

function handlers(overrides: Partial<DashboardHandlers> = {}): DashboardHandlers {
  return { onVerifyTrustLog: () => undefined, onRunCycle: () => undefined, ...overrides };
}

function scopeStatus(): ScopeStatus {
  return {
    scope: {
      id: "target-1--demo-cat",
      certification_target_id: "target-1",
      catalog_id: "demo-cat",
      created_at: "2026-01-01T00:00:00Z",
    },
    certificate: {
      id: "cert--target-1--demo-cat",
      audit_scope_id: "target-1--demo-cat",
      state: "minor_deviation",
      consecutive_noncompliant_cycles: { "demo-cat/CRY-01": 1 },
      history: [
        { cycle: 0, state: "valid", cause: "certificate issued" },
        { cycle: 2, state: "minor_deviation", cause: "non_compliant: demo-cat/CRY-01" },
        { cycle: 4, state: "major_deviation", cause: "non_compliant beyond policy: demo-cat/CRY-01" },
      ],
      issued_at: "2026-01-01T00:00:00Z",
    },
    evaluation: [
      {
        audit_scope_id: "target-1--demo-cat",
        control_ref: "demo-cat/CRY-01",
        status: "non_compliant",
        contributing_result_ids: ["r1"],
        evaluated_at: "2026-01-01T00:10:00Z",
      },
      {
        audit_scope_id: "target-1--demo-cat",
        control_ref: "demo-cat/CRY-02",
        status: "waiting",
        contributing_result_ids: [],
        evaluated_at: "2026-01-01T00:10:00Z",
      },
    ],
  };
}

const NOTIFICATIONS: NotificationRecord[] = [
  {
    certificate_id: "cert--target-1--demo-cat",
    cycle: 4,
    failing_controls: ["demo-cat/CRY-01"],
    severity: "major",
    emitted_at: "2026-01-01T00:20:00Z",
  },
  {
    certificate_id: "cert--other",
    cycle: 9,
    failing_controls: ["x/Y-1"],
    severity: "major",
    emitted_at: "2026-01-01T00:30:00Z",
  },
];

describe("dashboard view", () => {
  it("shows certificate state badge and failing controls", () => {
    renderDashboard(container, scopeStatus(), [], handlers());
    expect(container.querySelector('[data-testid="certificate-state"]')!.textContent).toBe("minor_deviation");
    expect(container.querySelector('[data-testid="status-demo-cat/CRY-01"]')!.textContent).toBe("non_compliant");
    expect(container.querySelector('[data-testid="status-demo-cat/CRY-02"]')!.textContent).toBe("waiting");
  });

  it("renders one timeline entry per state transition", () => {
    renderDashboard(container, scopeStatus(), [], handlers());
    const entries = [...container.querySelectorAll('[data-testid="timeline"] li')];
    expect(entries).toHaveLength(3);
    expect(entries.map((li) => li.querySelector(".state")!.textContent)).toEqual([
      "valid",
      "minor_deviation",
      "major_deviation",
    ]);
  });

  it("lists only this certificate's notifications", () => {
    renderDashboard(container, scopeStatus(), NOTIFICATIONS, handlers());
    const items = container.querySelectorAll('[data-testid="notifications"] li');
    expect(items).toHaveLength(1);
    expect(items[0].textContent).toContain("demo-cat/CRY-01");
  });

  it("runs the verify action and renders an intact report in place", () => {
    let verified = 0;
    renderDashboard(container, scopeStatus(), [], handlers({ onVerifyTrustLog: () => verified++ }));
    (container.querySelector('[data-testid="verify"]') as HTMLButtonElement).click();
    expect(verified).toBe(1);
    renderVerificationResult(container, { status: "intact", first_bad_seq: null, length: 12 });
    const slot = container.querySelector('[data-testid="verify-result"]')!;
    expect(slot.textContent).toBe("intact, length 12");
    expect(slot.className).toContain("ok");
  });

  it("renders a tampered report distinctly", () => {
    renderDashboard(container, scopeStatus(), [], handlers());
    renderVerificationResult(container, { status: "tampered", first_bad_seq: 4, length: 12 });
    const slot = container.querySelector('[data-testid="verify-result"]')!;
    expect(slot.textContent).toBe("tampered at seq 4, length 12");
    expect(slot.className).toContain("bad");
  });

  it("shows an empty state for unknown scopes", () => {
    renderEmptyState(container, "ghost-scope");
    expect(container.querySelector('[data-testid="empty-state"]')!.textContent).toContain("ghost-scope");
  });
});
