/**
 * Console controller: a small hash router wiring the gateway client,
 * session store and views together.
 *
 * Routes:
 *   #/scope/<scopeId>              dashboard for one audit scope
 *   #/review/<catalog>/<control>   mapping review for one control
 */

import { GatewayClient, GatewayError } from "./api.js";
import {
  ReviewSession,
  SessionStore,
  setDecision,
  startSession,
  submitMapping,
  ValidationError,
} from "./session.js";
import { renderDashboard, renderEmptyState, renderVerificationResult } from "./views/dashboard.js";
import { renderReview, renderReviewError } from "./views/review.js";

export interface AppOptions {
  user?: string;
}

export class ConsoleApp {
  private session: ReviewSession | null = null;
  readonly user: string;

  constructor(
    private readonly client: GatewayClient,
    private readonly store: SessionStore,
    private readonly root: HTMLElement,
    options: AppOptions = {},
  ) {
    this.user = options.user ?? "auditor";
  }

  async route(hash: string): Promise<void> {
    const parts = hash.replace(/^#\/?/, "").split("/").filter(Boolean);
    if (parts[0] === "review" && parts.length >= 3) {
      await this.openReview(`${parts[1]}/${parts.slice(2).join("/")}`);
    } else if (parts[0] === "scope" && parts.length >= 2) {
      await this.openDashboard(parts.slice(1).join("/"));
    } else {
      await this.openScopeIndex();
    }
  }

  async openScopeIndex(): Promise<void> {
    const scopes = await this.client.listScopes();
    const items = scopes
      .map(
        (scope) =>
          `<li><a href="#/scope/${encodeURIComponent(scope.id)}">${scope.id}</a> - ${scope.certificate_state}</li>`,
      )
      .join("");
    this.root.innerHTML = `<section data-testid="scope-index"><h2>Audit scopes</h2><ul>${items || "<li>none yet</li>"}</ul></section>`;
  }

  async openReview(controlRef: string): Promise<void> {
    try {
      const recommendations = await this.client.recommendations(controlRef);
      this.session = startSession(controlRef, recommendations, this.store);
      this.paintReview();
    } catch (err) {
      if (err instanceof GatewayError) {
        this.session = null;
        renderReviewError(this.root, err, { onRetry: () => void this.openReview(controlRef) });
        return;
      }
      throw err;
    }
  }

  private paintReview(): void {
    if (!this.session) return;
    renderReview(this.root, this.session, {
      onDecision: (candidateId, decision) => {
        if (!this.session) return;
        this.session = setDecision(this.session, candidateId, decision, this.store);
        this.paintReview();
      },
      onSubmit: () => void this.submitCurrentReview(),
      onRetry: () => void this.openReview(this.session!.control_ref),
    });
  }

  async submitCurrentReview(): Promise<void> {
    if (!this.session) return;
    try {
      const { session } = await submitMapping(this.client, this.session, this.user, this.store);
      this.session = session;
      this.paintReview();
    } catch (err) {
      if (err instanceof ValidationError) {
        // canSubmit already disables the button; belt and braces for tests
        return;
      }
      if (err instanceof GatewayError) {
        renderReviewError(this.root, err, { onRetry: () => void this.submitCurrentReview() });
        return;
      }
      throw err;
    }
  }

  async openDashboard(scopeId: string): Promise<void> {
    let status;
    try {
      status = await this.client.scopeStatus(scopeId);
    } catch (err) {
      if (err instanceof GatewayError && err.status === 404) {
        renderEmptyState(this.root, scopeId);
        return;
      }
      throw err;
    }
    const notifications = await this.client.notifications();
    renderDashboard(this.root, status, notifications, {
      onVerifyTrustLog: () => void this.verifyTrustLog(),
      onRunCycle: () => void this.runCycleAndRefresh(scopeId),
    });
  }

  async verifyTrustLog(): Promise<void> {
    const report = await this.client.verifyTrustLog();
    renderVerificationResult(this.root, report);
  }

  async runCycleAndRefresh(scopeId: string): Promise<void> {
    await this.client.runCycle(300);
    await this.openDashboard(scopeId);
  }
}

export function mountConsole(root: HTMLElement, baseUrl: string, options: AppOptions = {}): ConsoleApp {
  const app = new ConsoleApp(new GatewayClient(baseUrl), new SessionStore(window.localStorage), root, options);
  const onHashChange = () => void app.route(window.location.hash);
  window.addEventListener("hashchange", onHashChange);
  onHashChange();
  return app;
}
