/**
 * Review view: ranked recommendation list with accept/reject toggles and a
 * submit action. Gateway errors render verbatim in a banner with a retry
 * hook; ranked order always follows the payload's rank field.
 */

import type { ReviewSession, Decision } from "../session.js";
import { acceptedIds, canSubmit } from "../session.js";
import type { GatewayError } from "../api.js";

export interface ReviewHandlers {
  onDecision(candidateId: string, decision: Decision): void;
  onSubmit(): void;
  onRetry(): void;
}

function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderReviewError(container: HTMLElement, error: GatewayError, handlers: Pick<ReviewHandlers, "onRetry">): void {
  container.innerHTML = `
    <div class="error-banner" data-testid="error-banner">
      <strong>${escapeHtml(error.code)}</strong>
      <span>${escapeHtml(error.message)}</span>
      <button data-action="retry">Retry</button>
    </div>`;
  container.querySelector<HTMLButtonElement>('[data-action="retry"]')!.addEventListener("click", handlers.onRetry);
}

export function renderReview(container: HTMLElement, session: ReviewSession, handlers: ReviewHandlers): void {
  const rows = session.recommendations
    .map((candidate) => {
      const decision = session.decisions[candidate.candidate_id];
      return `
      <tr data-candidate="${escapeHtml(candidate.candidate_id)}" class="decision-${decision ?? "none"}">
        <td class="rank">${candidate.rank}</td>
        <td class="candidate">${escapeHtml(candidate.candidate_id)}</td>
        <td class="score">${candidate.score.toFixed(6)}</td>
        <td class="decision">${decision ?? "-"}</td>
        <td>
          <button data-action="accept" ${decision === "accept" ? "disabled" : ""}>Accept</button>
          <button data-action="reject" ${decision === "reject" ? "disabled" : ""}>Reject</button>
        </td>
      </tr>`;
    })
    .join("");

  container.innerHTML = `
    <section class="review" data-testid="review">
      <h2>Mapping review: ${escapeHtml(session.control_ref)}</h2>
      <table class="candidates">
        <thead><tr><th>#</th><th>Candidate</th><th>Score</th><th>Decision</th><th></th></tr></thead>
        <tbody>${rows}</tbody>
      </table>
      <footer>
        <span data-testid="accepted-count">${acceptedIds(session).length} accepted</span>
        <button data-action="submit" data-testid="submit" ${canSubmit(session) ? "" : "disabled"}>
          ${session.submitted ? "Submitted" : "Confirm mapping"}
        </button>
        ${session.submitted ? '<span class="submitted-note" data-testid="submitted-note">Mapping confirmed; next cycle applies it.</span>' : ""}
      </footer>
    </section>`;

  for (const row of container.querySelectorAll<HTMLTableRowElement>("tr[data-candidate]")) {
    const candidateId = row.dataset.candidate!;
    row.querySelector<HTMLButtonElement>('[data-action="accept"]')!.addEventListener("click", () =>
      handlers.onDecision(candidateId, "accept"),
    );
    row.querySelector<HTMLButtonElement>('[data-action="reject"]')!.addEventListener("click", () =>
      handlers.onDecision(candidateId, "reject"),
    );
  }
  container.querySelector<HTMLButtonElement>('[data-action="submit"]')!.addEventListener("click", handlers.onSubmit);
}
