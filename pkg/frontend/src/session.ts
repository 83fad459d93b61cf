/**
 * Review sessions: the auditor's accept/reject decisions over a ranked
 * recommendation list for one control.
 *
 * Unsubmitted sessions persist in localStorage so a reload restores the
 * in-progress review; submission requires at least one accepted candidate
 * and is blocked client-side otherwise.
 */

import type { GatewayClient } from "./api.js";
import type { MappingConfirmation, RankedCandidate } from "./types.js";

export type Decision = "accept" | "reject";

export interface ReviewSession {
  control_ref: string;
  recommendations: RankedCandidate[];
  decisions: Record<string, Decision>;
  submitted: boolean;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_PREFIX = "auditor-console/review/";

export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

export class SessionStore {
  constructor(private readonly storage: StorageLike) {}

  key(controlRef: string): string {
    return `${STORAGE_PREFIX}${controlRef}`;
  }

  load(controlRef: string): ReviewSession | null {
    const raw = this.storage.getItem(this.key(controlRef));
    if (!raw) return null;
    try {
      return JSON.parse(raw) as ReviewSession;
    } catch {
      return null;
    }
  }

  save(session: ReviewSession): void {
    this.storage.setItem(this.key(session.control_ref), JSON.stringify(session));
  }

  clear(controlRef: string): void {
    this.storage.removeItem(this.key(controlRef));
  }
}

/**
 * Begin (or resume) a review for a control given freshly fetched
 * recommendations. Decisions from an unsubmitted stored session carry over
 * for candidates that are still in the list; everything else starts
 * undecided.
 */
export function startSession(
  controlRef: string,
  recommendations: RankedCandidate[],
  store: SessionStore,
): ReviewSession {
  const previous = store.load(controlRef);
  const decisions: Record<string, Decision> = {};
  if (previous && !previous.submitted) {
    for (const candidate of recommendations) {
      const kept = previous.decisions[candidate.candidate_id];
      if (kept) decisions[candidate.candidate_id] = kept;
    }
  }
  const session: ReviewSession = {
    control_ref: controlRef,
    recommendations: [...recommendations].sort((a, b) => a.rank - b.rank),
    decisions,
    submitted: false,
  };
  store.save(session);
  return session;
}

export function setDecision(
  session: ReviewSession,
  candidateId: string,
  decision: Decision,
  store: SessionStore,
): ReviewSession {
  if (!session.recommendations.some((c) => c.candidate_id === candidateId)) {
    throw new ValidationError(`candidate "${candidateId}" is not part of this review`);
  }
  const next: ReviewSession = {
    ...session,
    decisions: { ...session.decisions, [candidateId]: decision },
  };
  store.save(next);
  return next;
}

export function acceptedIds(session: ReviewSession): string[] {
  return session.recommendations
    .filter((c) => session.decisions[c.candidate_id] === "accept")
    .map((c) => c.candidate_id);
}

export function canSubmit(session: ReviewSession): boolean {
  return !session.submitted && acceptedIds(session).length > 0;
}

/**
 * Confirm the accepted candidates as the control's mapping. The engine
 * applies latest-wins semantics; the returned confirmation echoes what was
 * stored and is shown to the auditor for reconciliation.
 */
export async function submitMapping(
  client: GatewayClient,
  session: ReviewSession,
  user: string,
  store: SessionStore,
): Promise<{ session: ReviewSession; confirmation: MappingConfirmation }> {
  if (!canSubmit(session)) {
    throw new ValidationError("select at least one candidate to accept before submitting");
  }
  const confirmation = await client.confirmMapping(session.control_ref, acceptedIds(session), user);
  const submitted: ReviewSession = { ...session, submitted: true };
  store.save(submitted);
  return { session: submitted, confirmation };
}
