import { describe, expect, it } from "vitest";

import type { GatewayClient } from "../src/api.js";
import {
  acceptedIds,
  canSubmit,
  SessionStore,
  setDecision,
  startSession,
  submitMapping,
  ValidationError,
} from "../src/session.js";
import { candidates, MemoryStorage } from "./helpers.js";

const REF = "demo-cat/CRY-01";

function stubClient(onConfirm?: (metricIds: string[]) => void): GatewayClient {
  return {
    confirmMapping: async (_ref: string, metricIds: string[], user: string) => {
      onConfirm?.(metricIds);
      return {
        catalog_id: "demo-cat",
        control_id: "CRY-01",
        metric_ids: metricIds,
        confirmed_by: user,
        confirmed_at: "2026-01-01T00:00:00Z",
      };
    },
  } as unknown as GatewayClient;
}

describe("review sessions", () => {
  it("orders recommendations by rank", () => {
    const store = new SessionStore(new MemoryStorage());
    const shuffled = candidates(["b", 0.5], ["a", 0.9]).reverse();
    const session = startSession(REF, shuffled, store);
    expect(session.recommendations.map((c) => c.rank)).toEqual([1, 2]);
  });

  it("requires at least one accepted candidate to submit", () => {
    const store = new SessionStore(new MemoryStorage());
    let session = startSession(REF, candidates(["m1", 0.8], ["m2", 0.2]), store);
    expect(canSubmit(session)).toBe(false);
    session = setDecision(session, "m2", "reject", store);
    expect(canSubmit(session)).toBe(false);
    session = setDecision(session, "m1", "accept", store);
    expect(canSubmit(session)).toBe(true);
    expect(acceptedIds(session)).toEqual(["m1"]);
  });

  it("rejects decisions for unknown candidates", () => {
    const store = new SessionStore(new MemoryStorage());
    const session = startSession(REF, candidates(["m1", 0.8]), store);
    expect(() => setDecision(session, "ghost", "accept", store)).toThrow(ValidationError);
  });

  it("restores unsubmitted decisions across reloads", () => {
    const storage = new MemoryStorage();
    const firstLoad = new SessionStore(storage);
    let session = startSession(REF, candidates(["m1", 0.8], ["m2", 0.2]), firstLoad);
    session = setDecision(session, "m1", "accept", firstLoad);
    setDecision(session, "m2", "reject", firstLoad);

    // a reload constructs a fresh store over the same persisted storage
    const secondLoad = new SessionStore(storage);
    const restored = startSession(REF, candidates(["m1", 0.8], ["m2", 0.2]), secondLoad);
    expect(restored.decisions).toEqual({ m1: "accept", m2: "reject" });
    expect(restored.submitted).toBe(false);
  });

  it("does not restore decisions once submitted", async () => {
    const storage = new MemoryStorage();
    const store = new SessionStore(storage);
    let session = startSession(REF, candidates(["m1", 0.8]), store);
    session = setDecision(session, "m1", "accept", store);
    await submitMapping(stubClient(), session, "alice", store);

    const afterReload = startSession(REF, candidates(["m1", 0.8]), new SessionStore(storage));
    expect(afterReload.decisions).toEqual({});
  });

  it("drops stale decisions for candidates no longer recommended", () => {
    const storage = new MemoryStorage();
    const store = new SessionStore(storage);
    let session = startSession(REF, candidates(["m1", 0.8], ["gone", 0.5]), store);
    session = setDecision(session, "gone", "accept", store);
    const refreshed = startSession(REF, candidates(["m1", 0.8], ["m3", 0.4]), store);
    expect(refreshed.decisions).toEqual({});
  });

  it("blocks submission with zero accepted client-side", async () => {
    const store = new SessionStore(new MemoryStorage());
    const session = startSession(REF, candidates(["m1", 0.8]), store);
    let reached = false;
    await expect(
      submitMapping(stubClient(() => (reached = true)), session, "alice", store),
    ).rejects.toThrow(ValidationError);
    expect(reached).toBe(false); // never hit the gateway
  });

  it("submits accepted ids and marks the session submitted", async () => {
    const store = new SessionStore(new MemoryStorage());
    let session = startSession(REF, candidates(["m1", 0.8], ["m2", 0.2]), store);
    session = setDecision(session, "m1", "accept", store);
    const sent: string[][] = [];
    const { session: submitted, confirmation } = await submitMapping(
      stubClient((ids) => sent.push(ids)),
      session,
      "alice",
      store,
    );
    expect(sent).toEqual([["m1"]]);
    expect(submitted.submitted).toBe(true);
    expect(confirmation.confirmed_by).toBe("alice");
    expect(canSubmit(submitted)).toBe(false);
  });
});
